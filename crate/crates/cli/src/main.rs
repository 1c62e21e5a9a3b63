mod manifest;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "mmgsim", version, about = "Forward simulation of the magnetic field of a muscle-fiber action potential")]
struct Cli {
    /// Log filter, e.g. warn, info, debug.
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "mmg-out")]
    out: PathBuf,
    /// Override a config key, e.g. `--set geometry.a=25um`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ApSourceArg {
    Simulated,
    AnalyticTemplate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AxisArg {
    Distance,
    Ratio,
    Offset,
}

#[derive(Debug, Clone, Subcommand)]
enum Command {
    /// Integrate the compartmental fiber and write the AP trace.
    SimulateAp {
        #[command(flatten)]
        common: Common,
        /// Peak synaptic conductance, e.g. `10uS`.
        #[arg(long)]
        g_syn_max: Option<String>,
        /// Simulated time, e.g. `30ms`.
        #[arg(long)]
        duration: Option<String>,
        /// Also write the axial currents.
        #[arg(long)]
        axial: bool,
    },
    /// Solve the four-region field problem at one radius.
    ComputeField {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        ap_source: Option<ApSourceArg>,
        /// Evaluation radius from the bundle axis, e.g. `190um`.
        #[arg(long)]
        rho: Option<String>,
        /// Write one spectrum file per component.
        #[arg(long)]
        components: bool,
    },
    /// Peak field against distance, anisotropy ratio or fiber offset.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: AxisArg,
        /// Comma-separated values, e.g. `30um,60um,120um` or `1,2,5,10`.
        #[arg(long)]
        values: String,
        #[arg(long, value_enum)]
        ap_source: Option<ApSourceArg>,
    },
    /// Field of line conductors read from CSV `x0,y0,z0,x1,y1,z1,I_A`.
    BiotSavart {
        #[command(flatten)]
        common: Common,
        conductors: PathBuf,
        /// Field point `x,y,z`, e.g. `1mm,0,0`.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        /// Use adaptive quadrature instead of the closed form.
        #[arg(long)]
        quadrature: bool,
    },
    /// Zero-phase Butterworth bandpass of a `t_s,value` trace.
    Filter {
        #[command(flatten)]
        common: Common,
        input: PathBuf,
        /// Lower band edge, e.g. `30Hz`.
        #[arg(long)]
        lo: Option<String>,
        /// Upper band edge, e.g. `300Hz`.
        #[arg(long)]
        hi: Option<String>,
        #[arg(long)]
        order: Option<usize>,
    },
    /// STFT magnitude of a `t_s,value` trace.
    Spectrogram {
        #[command(flatten)]
        common: Common,
        input: PathBuf,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        hop: Option<usize>,
    },
    /// Welch amplitude spectral density of a `t_s,value` trace.
    Asd {
        #[command(flatten)]
        common: Common,
        input: PathBuf,
        #[arg(long)]
        segment: Option<usize>,
        #[arg(long)]
        overlap: Option<f64>,
    },
    /// Re-run the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
        /// Directory for the reproduced outputs.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    env_logger::Builder::new().parse_filters(&cli.log_level).init();
    match run::execute(cli.command, args[1..].to_vec()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_class() as u8)
        }
    }
}
