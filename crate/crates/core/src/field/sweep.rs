//! Peak field against one swept parameter.

use std::io::Write;

use super::components::{field_from_coefficients, solve_coefficients, Component};
use super::spectrum::PotentialSpectrum;
use super::trace::spatial_field;
use super::FieldError;
use crate::config::PhysicalParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Evaluation distance outside the sheath, m.
    Distance,
    /// Anisotropy ratio σ_z/σ_ρ, varied through σ_ρ.
    Ratio,
    /// Fiber offset d, m.
    Offset,
}

impl std::str::FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "distance" => Ok(SweepAxis::Distance),
            "ratio" => Ok(SweepAxis::Ratio),
            "offset" => Ok(SweepAxis::Offset),
            other => Err(format!("unknown sweep axis {other:?}; expected distance, ratio or offset")),
        }
    }
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Distance => "distance",
            SweepAxis::Ratio => "ratio",
            SweepAxis::Offset => "offset",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    /// Peak |B(z)| for total, fiber, bundle, sheath, saline.
    pub peaks: [f64; 5],
}

impl SweepRow {
    pub fn total(&self) -> f64 {
        self.peaks[0]
    }
}

const COLUMNS: [Component; 5] = [Component::Total, Component::Fiber, Component::Bundle, Component::Sheath, Component::Saline];

/// Peak |B(z)| of every component at one parameter set.
pub fn peak_field(
    spectrum: &PotentialSpectrum,
    p: &PhysicalParams,
    eval_distance: f64,
    modes: usize,
) -> Result<[f64; 5], FieldError> {
    let coeffs = solve_coefficients(spectrum, p, modes)?;
    let f = field_from_coefficients(spectrum, &coeffs, p, p.c + eval_distance)?;
    let tr = spatial_field(&f)?;
    Ok(COLUMNS.map(|c| tr.peak_abs(c)))
}

/// One row per value. Any failure aborts with the value that caused it.
pub fn sweep(
    base: &PhysicalParams,
    spectrum: &PotentialSpectrum,
    axis: SweepAxis,
    values: &[f64],
    eval_distance: f64,
    modes: usize,
) -> Result<Vec<SweepRow>, FieldError> {
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let fail = |e: FieldError| FieldError::Sweep { axis: axis.name(), value, source: Box::new(e) };
        let mut p = base.clone();
        let mut distance = eval_distance;
        match axis {
            SweepAxis::Distance => distance = value,
            SweepAxis::Ratio => p.sigma_rho = p.sigma_z / value,
            SweepAxis::Offset => p.d = value,
        }
        if !(distance >= 0.0) || !(value.is_finite()) {
            return Err(fail(FieldError::Params(format!("{} value must be finite and non-negative", axis.name()))));
        }
        p.validate().map_err(|e| fail(FieldError::Params(e.to_string())))?;
        let peaks = peak_field(spectrum, &p, distance, modes).map_err(fail)?;
        rows.push(SweepRow { value, peaks });
    }
    Ok(rows)
}

/// CSV `<axis>, peak_B_total_T, peak_B_i_T, peak_B_b_T, peak_B_s_T, peak_B_e_T`.
pub fn write_sweep_csv<W: Write>(axis: SweepAxis, rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let first = match axis {
        SweepAxis::Distance => "distance_m",
        SweepAxis::Ratio => "ratio",
        SweepAxis::Offset => "offset_m",
    };
    w.write_record([first, "peak_B_total_T", "peak_B_i_T", "peak_B_b_T", "peak_B_s_T", "peak_B_e_T"])?;
    for r in rows {
        let mut rec = vec![format!("{:.17e}", r.value)];
        rec.extend(r.peaks.iter().map(|v| format!("{v:.17e}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
