//! Magnetic field of a travelling AP in a fiber inside an anisotropic
//! bundle, sheath and saline bath, solved in axial-wavenumber space.

pub mod boundary;
pub mod components;
pub mod spectrum;
pub mod sweep;
pub mod trace;

pub use boundary::{assemble_boundary_system, solve_system, solve_unit, BoundaryError, BoundarySystem, Family, UnitSolution};
pub use components::{
    field_bundle, field_fiber, field_from_coefficients, field_saline, field_sheath, solve_coefficients, total_field,
    BoundaryCoefficients, BundleTerms, Component, KCoefficients, SpectralField,
};
pub use spectrum::{
    analytic_template, membrane_potential_spectrum, spectrum_from_profile, template_spectrum, PotentialSpectrum, SpectrumError,
    TravelingWave,
};
pub use sweep::{peak_field, sweep, write_sweep_csv, SweepAxis, SweepRow};
pub use trace::{spatial_field, time_series_at_point, AxisKind, FieldTrace};

/// Radial stretch of the anisotropic bundle, `ρ* = √(σ_z/σ_ρ)·ρ`.
pub fn anisotropy_transform(rho: f64, sigma_z: f64, sigma_rho: f64) -> f64 {
    (sigma_z / sigma_rho).sqrt() * rho
}

#[derive(Debug, thiserror::Error)]
pub enum FieldError {
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error("evaluation radius {rho:e} m lies inside the sheath surface c = {c:e} m")]
    Radius { rho: f64, c: f64 },
    #[error("{component} spectrum is not Hermitian (violation {violation:e} of peak)")]
    Symmetry { component: &'static str, violation: f64 },
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("sweep over {axis} failed at {value:e}: {source}")]
    Sweep { axis: &'static str, value: f64, source: Box<FieldError> },
}
