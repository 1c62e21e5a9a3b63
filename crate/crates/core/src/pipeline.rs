//! End-to-end runs: configuration to AP, potential spectrum and field.

use crate::biot_savart::BiotSavartError;
use crate::config::{ApSource, Config, ConfigError};
use crate::dsp::DspError;
use crate::electro::{simulate_fiber, APTrace, ApAnalysisError, ApSummary, FiberModel, IntegrationError};
use crate::field::{
    membrane_potential_spectrum, spatial_field, template_spectrum, time_series_at_point, total_field, FieldError, FieldTrace,
    PotentialSpectrum, SpectralField,
};

/// Process exit classes shared by the command-line front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitClass {
    Io = 1,
    Usage = 2,
    Validation = 3,
    Numerical = 4,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Analysis(#[from] ApAnalysisError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    BiotSavart(#[from] BiotSavartError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("{context}: {source}")]
    Csv { context: String, source: csv::Error },
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn exit_class(&self) -> ExitClass {
        match self {
            Error::Config(ConfigError::Io { .. }) | Error::Io { .. } | Error::Csv { .. } => ExitClass::Io,
            Error::Usage(_) => ExitClass::Usage,
            Error::Config(_) | Error::Dsp(_) | Error::BiotSavart(BiotSavartError::Csv { .. }) => ExitClass::Validation,
            Error::Field(FieldError::Radius { .. } | FieldError::Params(_)) => ExitClass::Validation,
            Error::BiotSavart(BiotSavartError::ZeroLength | BiotSavartError::Distance(_)) => ExitClass::Validation,
            Error::Integration(IntegrationError::Setup(_)) => ExitClass::Validation,
            Error::Field(FieldError::Sweep { source, .. })
                if matches!(**source, FieldError::Radius { .. } | FieldError::Params(_)) =>
            {
                ExitClass::Validation
            }
            Error::Integration(_) | Error::Analysis(_) | Error::Field(_) | Error::BiotSavart(_) => ExitClass::Numerical,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { context: context.into(), source }
    }

    pub fn csv(context: impl Into<String>, source: csv::Error) -> Self {
        Error::Csv { context: context.into(), source }
    }
}

/// SHA-256 of `bytes`, hex encoded.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Simulate the fiber with the configured stimulus.
pub fn simulate_ap(cfg: &Config) -> Result<APTrace, Error> {
    cfg.validate()?;
    Ok(simulate_fiber(&FiberModel::from_config(cfg), &cfg.stimulus)?)
}

/// Potential spectrum from a simulated trace's recording compartment.
pub fn spectrum_of_trace(cfg: &Config, trace: &APTrace) -> Result<PotentialSpectrum, Error> {
    let (time, v) = trace.probe();
    let spec =
        membrane_potential_spectrum(time, v, trace.meta.onset, cfg.params.u, &cfg.grid, "simulated").map_err(FieldError::from)?;
    Ok(spec)
}

/// The configured AP source's potential spectrum, with the trace when the
/// cable model was run.
pub fn ap_spectrum(cfg: &Config) -> Result<(PotentialSpectrum, Option<APTrace>), Error> {
    cfg.validate()?;
    match cfg.solver.ap_source {
        ApSource::Simulated => {
            let trace = simulate_ap(cfg)?;
            let summary = ApSummary::of(&trace);
            if summary.elicited {
                Ok((spectrum_of_trace(cfg, &trace)?, Some(trace)))
            } else {
                Err(ApAnalysisError::NoAp { peak_mv: summary.peak_mv }.into())
            }
        }
        ApSource::AnalyticTemplate => Ok((template_spectrum(cfg.params.u, &cfg.grid).map_err(FieldError::from)?, None)),
    }
}

#[derive(Debug, Clone)]
pub struct FieldRun {
    pub trace: Option<APTrace>,
    pub spectrum: PotentialSpectrum,
    pub spectral: SpectralField,
    pub spatial: FieldTrace,
    pub temporal: FieldTrace,
}

/// AP source, boundary solve and inverse transforms at radius `rho`.
pub fn compute_field(cfg: &Config, rho: f64) -> Result<FieldRun, Error> {
    let (spectrum, trace) = ap_spectrum(cfg)?;
    let spectral = total_field(&spectrum, &cfg.params, rho, cfg.solver.modes)?;
    let spatial = spatial_field(&spectral)?;
    let temporal = time_series_at_point(&spectral, cfg.params.u)?;
    Ok(FieldRun { trace, spectrum, spectral, spatial, temporal })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_classes() {
        let e: Error = ConfigError::Invalid { fields: vec!["grid.dt".into()], message: "x".into() }.into();
        assert_eq!(e.exit_class(), ExitClass::Validation);
        let e: Error = IntegrationError::Diverged { step: 1, t: 0.0, compartment: 0, v_mv: 1e3 }.into();
        assert_eq!(e.exit_class(), ExitClass::Numerical);
        assert_eq!(Error::Usage("x".into()).exit_class(), ExitClass::Usage);
        let e: Error = FieldError::Radius { rho: 0.0, c: 1.0 }.into();
        assert_eq!(e.exit_class(), ExitClass::Validation);
        let e = Error::io("x", std::io::Error::other("gone"));
        assert_eq!(e.exit_class(), ExitClass::Io);
    }

    #[test]
    fn template_field_run() {
        let mut cfg = Config::default();
        cfg.solver.ap_source = ApSource::AnalyticTemplate;
        let run = compute_field(&cfg, cfg.eval_radius()).unwrap();
        assert!(run.trace.is_none());
        assert_eq!(run.spatial.total.len(), cfg.grid.n_z);
        assert!(run.temporal.axis.windows(2).all(|w| w[1] > w[0]));
    }
}
