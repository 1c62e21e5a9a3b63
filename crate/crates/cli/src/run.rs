use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::Parser;
use mmg_core::biot_savart::{biot_savart_quadrature, conductor_set_field, read_conductors, QUADRATURE_TOL};
use mmg_core::config::units::{parse_quantity, Dimension};
use mmg_core::config::{parse_config, parse_config_with_overrides, Config};
use mmg_core::dsp::{
    amplitude_spectral_density, bandpass, read_trace_csv, spectrogram, write_asd_csv, write_spectrogram_csv, write_trace_csv,
    SignalTrace,
};
use mmg_core::electro::ApSummary;
use mmg_core::field::{sweep, write_sweep_csv, Component, SweepAxis};
use mmg_core::pipeline::{ap_spectrum, compute_field, simulate_ap, Error};
use nalgebra::Vector3;

use crate::manifest::{InputFile, RunManifest};
use crate::{ApSourceArg, AxisArg, Cli, Command, Common};

/// Files written by one command, relative to the output directory.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, Error> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("cannot create {}", dir.display()), e))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, f: impl FnOnce(BufWriter<File>) -> csv::Result<()>) -> Result<(), Error> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| Error::io(format!("cannot create {}", path.display()), e))?;
        f(BufWriter::new(file)).map_err(|e| Error::csv(format!("cannot write {}", path.display()), e))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// Resolved configuration and the overrides that produced it.
struct Resolved {
    config: Config,
    overrides: Vec<(String, String)>,
}

fn resolve(common: &Common, flags: Vec<(&str, Option<String>)>, preset: Option<&Config>) -> Result<Resolved, Error> {
    if let Some(cfg) = preset {
        return Ok(Resolved { config: cfg.clone(), overrides: Vec::new() });
    }
    let mut overrides = Vec::new();
    for s in &common.set {
        let (k, v) = s.split_once('=').ok_or_else(|| Error::Usage(format!("--set expects KEY=VALUE, got {s:?}")))?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    for (key, value) in flags {
        if let Some(v) = value {
            overrides.push((key.to_string(), v));
        }
    }
    let text = match &common.config {
        Some(path) => {
            std::fs::read_to_string(path).map_err(|e| Error::io(format!("cannot read config {}", path.display()), e))?
        }
        None => String::new(),
    };
    let config = parse_config_with_overrides(&text, &overrides)?;
    Ok(Resolved { config, overrides })
}

fn ap_source_name(a: Option<ApSourceArg>) -> Option<String> {
    a.map(|a| match a {
        ApSourceArg::Simulated => "\"simulated\"".to_string(),
        ApSourceArg::AnalyticTemplate => "\"analytic-template\"".to_string(),
    })
}

fn quoted(v: Option<String>) -> Option<String> {
    v.map(|s| toml::Value::String(s).to_string())
}

fn parse_list(text: &str, dim: Dimension) -> Result<Vec<f64>, Error> {
    let items: Vec<&str> = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(Error::Usage("expected at least one value".into()));
    }
    items.iter().map(|s| parse_quantity(s, dim).map_err(Error::Usage)).collect()
}

fn parse_point(text: &str) -> Result<Vector3<f64>, Error> {
    let v = parse_list(text, Dimension::Length)?;
    if v.len() != 3 {
        return Err(Error::Usage(format!("--point expects x,y,z, got {text:?}")));
    }
    Ok(Vector3::new(v[0], v[1], v[2]))
}

fn read_trace(path: &Path) -> Result<(SignalTrace, f64), Error> {
    let file = File::open(path).map_err(|e| Error::io(format!("cannot read {}", path.display()), e))?;
    Ok(read_trace_csv(file)?)
}

fn common_of(cmd: &Command) -> Option<&Common> {
    match cmd {
        Command::SimulateAp { common, .. }
        | Command::ComputeField { common, .. }
        | Command::Sweep { common, .. }
        | Command::BiotSavart { common, .. }
        | Command::Filter { common, .. }
        | Command::Spectrogram { common, .. }
        | Command::Asd { common, .. } => Some(common),
        Command::Replay { .. } => None,
    }
}

fn name_of(cmd: &Command) -> &'static str {
    match cmd {
        Command::SimulateAp { .. } => "simulate-ap",
        Command::ComputeField { .. } => "compute-field",
        Command::Sweep { .. } => "sweep",
        Command::BiotSavart { .. } => "biot-savart",
        Command::Filter { .. } => "filter",
        Command::Spectrogram { .. } => "spectrogram",
        Command::Asd { .. } => "asd",
        Command::Replay { .. } => "replay",
    }
}

pub fn execute(cmd: Command, argv: Vec<String>) -> Result<(), Error> {
    match cmd {
        Command::Replay { manifest, out } => replay(&manifest, &out),
        other => {
            let out = common_of(&other).expect("not replay").out.clone();
            run(other, argv, &out, None)
        }
    }
}

fn replay(path: &Path, out: &Path) -> Result<(), Error> {
    let m = RunManifest::read(path)?;
    let mut args = vec!["mmgsim".to_string()];
    args.extend(m.argv.iter().cloned());
    let cli = Cli::try_parse_from(&args).map_err(|e| Error::Usage(format!("manifest arguments no longer parse: {e}")))?;
    if matches!(cli.command, Command::Replay { .. }) {
        return Err(Error::Usage("a replay manifest cannot be replayed".into()));
    }
    let cfg = parse_config(&m.resolved_config)?;
    if cfg.hash() != m.config_hash {
        return Err(Error::Usage(format!("manifest config hash {} does not match its resolved config", m.config_hash)));
    }
    for input in &m.inputs {
        let now = InputFile::hash(&input.path)?;
        if now.sha256 != input.sha256 {
            return Err(Error::Usage(format!("input {} changed since the recorded run", input.path.display())));
        }
    }
    run(cli.command, m.argv, out, Some(&cfg))
}

fn run(cmd: Command, argv: Vec<String>, out_dir: &Path, preset: Option<&Config>) -> Result<(), Error> {
    let subcommand = name_of(&cmd).to_string();
    let mut outputs = Outputs::new(out_dir)?;
    let mut inputs = Vec::new();
    let resolved = match cmd {
        Command::SimulateAp { common, g_syn_max, duration, axial } => {
            let r =
                resolve(&common, vec![("stimulus.g_syn_max", quoted(g_syn_max)), ("grid.duration", quoted(duration))], preset)?;
            let trace = simulate_ap(&r.config)?;
            outputs.write("ap_trace.csv", |w| trace.write_csv(w))?;
            let (t, v) = trace.probe();
            outputs.write("ap_probe.csv", |w| {
                let mut c = csv::Writer::from_writer(w);
                c.write_record(["t_s", "v_mV"])?;
                for (t, v) in t.iter().zip(v) {
                    c.write_record([format!("{t:.17e}"), format!("{v:.17e}")])?;
                }
                c.flush()?;
                Ok(())
            })?;
            if axial {
                outputs.write("ap_axial_currents.csv", |w| trace.write_axial_csv(w))?;
            }
            println!("{}", ApSummary::of(&trace).line());
            r
        }
        Command::ComputeField { common, ap_source, rho, components } => {
            let mut r = resolve(&common, vec![("solver.ap_source", ap_source_name(ap_source))], preset)?;
            if let Some(rho) = rho {
                let rho = parse_quantity(&rho, Dimension::Length).map_err(Error::Usage)?;
                r.config.solver.eval_distance = rho - r.config.params.c;
                r.overrides.push(("solver.eval_distance".into(), format!("{:e}", r.config.solver.eval_distance)));
                r.config.validate()?;
            }
            let cfg = &r.config;
            let run = compute_field(cfg, cfg.eval_radius())?;
            outputs.write("field_spectrum.csv", |w| run.spectral.write_csv(w))?;
            outputs.write("field_z.csv", |w| run.spatial.write_csv(w))?;
            outputs.write("field_t.csv", |w| run.temporal.write_csv(w))?;
            if components {
                for c in [Component::Fiber, Component::Bundle, Component::Sheath, Component::Saline, Component::Total] {
                    outputs.write(&format!("field_spectrum_{}.csv", c.label()), |w| run.spectral.write_component_csv(c, w))?;
                }
            }
            println!(
                "peak |B_total| = {:.6e} T at rho = {:.6e} m ({} AP source)",
                run.spatial.peak_abs(Component::Total),
                cfg.eval_radius(),
                cfg.solver.ap_source.name()
            );
            r
        }
        Command::Sweep { common, axis, values, ap_source } => {
            let (axis, dim) = match axis {
                AxisArg::Distance => (SweepAxis::Distance, Dimension::Length),
                AxisArg::Ratio => (SweepAxis::Ratio, Dimension::Dimensionless),
                AxisArg::Offset => (SweepAxis::Offset, Dimension::Length),
            };
            let values = parse_list(&values, dim)?;
            let r = resolve(&common, vec![("solver.ap_source", ap_source_name(ap_source))], preset)?;
            let cfg = &r.config;
            let (spectrum, _) = ap_spectrum(cfg)?;
            let rows = sweep(&cfg.params, &spectrum, axis, &values, cfg.solver.eval_distance, cfg.solver.modes)?;
            outputs.write(&format!("sweep_{}.csv", axis.name()), |w| write_sweep_csv(axis, &rows, w))?;
            for row in &rows {
                println!("{} = {:.6e}: peak |B_total| = {:.6e} T", axis.name(), row.value, row.total());
            }
            r
        }
        Command::BiotSavart { common, conductors, point, quadrature } => {
            let p = parse_point(&point)?;
            let r = resolve(&common, Vec::new(), preset)?;
            inputs.push(InputFile::hash(&conductors)?);
            let file = File::open(&conductors).map_err(|e| Error::io(format!("cannot read {}", conductors.display()), e))?;
            let set = read_conductors(file)?;
            let mu = r.config.params.mu();
            let b = if quadrature {
                biot_savart_quadrature(&set, &p, mu, QUADRATURE_TOL)?
            } else {
                conductor_set_field(&set, &p, mu)?
            };
            outputs.write("biot_savart.csv", |w| {
                let mut c = csv::Writer::from_writer(w);
                c.write_record(["x_m", "y_m", "z_m", "Bx_T", "By_T", "Bz_T", "B_abs_T"])?;
                c.write_record([p.x, p.y, p.z, b.x, b.y, b.z, b.norm()].map(|v| format!("{v:.17e}")))?;
                c.flush()?;
                Ok(())
            })?;
            println!("B = ({:.9e}, {:.9e}, {:.9e}) T, |B| = {:.9e} T", b.x, b.y, b.z, b.norm());
            r
        }
        Command::Filter { common, input, lo, hi, order } => {
            let r = resolve(
                &common,
                vec![("dsp.f_lo", quoted(lo)), ("dsp.f_hi", quoted(hi)), ("dsp.order", order.map(|o| o.to_string()))],
                preset,
            )?;
            inputs.push(InputFile::hash(&input)?);
            let (trace, t0) = read_trace(&input)?;
            let d = &r.config.dsp;
            let y = bandpass(&trace, d.f_lo, d.f_hi, d.order)?;
            outputs.write("filtered.csv", |w| write_trace_csv(&y, t0, w))?;
            r
        }
        Command::Spectrogram { common, input, window, hop } => {
            let r = resolve(
                &common,
                vec![("dsp.stft_window", window.map(|v| v.to_string())), ("dsp.stft_hop", hop.map(|v| v.to_string()))],
                preset,
            )?;
            inputs.push(InputFile::hash(&input)?);
            let (trace, t0) = read_trace(&input)?;
            let s = spectrogram(&trace, r.config.dsp.stft_window, r.config.dsp.stft_hop)?;
            outputs.write("spectrogram.csv", |w| write_spectrogram_csv(&s, t0, w))?;
            r
        }
        Command::Asd { common, input, segment, overlap } => {
            let r = resolve(
                &common,
                vec![
                    ("dsp.welch_segment", segment.map(|v| v.to_string())),
                    ("dsp.welch_overlap", overlap.map(|v| v.to_string())),
                ],
                preset,
            )?;
            inputs.push(InputFile::hash(&input)?);
            let (trace, _) = read_trace(&input)?;
            let a = amplitude_spectral_density(&trace, r.config.dsp.welch_segment, r.config.dsp.welch_overlap)?;
            outputs.write("asd.csv", |w| write_asd_csv(&a, w))?;
            r
        }
        Command::Replay { .. } => unreachable!("handled by execute"),
    };
    let manifest = RunManifest {
        tool: RunManifest::tool_id(),
        subcommand,
        argv,
        config_hash: resolved.config.hash(),
        overrides: resolved.overrides,
        resolved_config: resolved.config.to_toml_string(),
        inputs,
        outputs: outputs.files,
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    };
    manifest.write(out_dir)
}
