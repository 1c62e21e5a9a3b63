//! Back to real space: `B(z)` at the snapshot time, or `B(t)` at a point.

use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::components::{Component, SpectralField};
use super::spectrum::z_axis;
use super::FieldError;

/// Largest tolerated `|B̂(k) − conj(B̂(−k))|`, relative to the spectrum peak.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    /// Axial position, m.
    Z,
    /// Time at a fixed point, s.
    Time,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldTrace {
    pub kind: AxisKind,
    pub axis: Vec<f64>,
    pub total: Vec<f64>,
    pub fiber: Vec<f64>,
    pub bundle: Vec<f64>,
    pub sheath: Vec<f64>,
    pub saline: Vec<f64>,
    /// Largest imaginary part left by the inverse transform, relative to
    /// the peak real part.
    pub imag_residue: f64,
}

impl FieldTrace {
    pub fn component(&self, c: Component) -> &[f64] {
        match c {
            Component::Total => &self.total,
            Component::Fiber => &self.fiber,
            Component::Bundle => &self.bundle,
            Component::Sheath => &self.sheath,
            Component::Saline => &self.saline,
        }
    }

    pub fn peak_abs(&self, c: Component) -> f64 {
        self.component(c).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// CSV `z_m` or `t_s`, then `B_total_T, B_i_T, B_b_T, B_s_T, B_e_T`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let axis = match self.kind {
            AxisKind::Z => "z_m",
            AxisKind::Time => "t_s",
        };
        w.write_record([axis, "B_total_T", "B_i_T", "B_b_T", "B_s_T", "B_e_T"])?;
        for i in 0..self.axis.len() {
            let row = [self.axis[i], self.total[i], self.fiber[i], self.bundle[i], self.sheath[i], self.saline[i]];
            w.write_record(row.iter().map(|v| format!("{v:.17e}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Largest Hermitian-symmetry violation of a spectrum in shifted order,
/// relative to its peak magnitude.
pub fn hermitian_violation(values: &[Complex64]) -> f64 {
    let n = values.len();
    let zi = n / 2;
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    if peak == 0.0 {
        return 0.0;
    }
    let mut worst = values[zi].im.abs().max(values[0].im.abs());
    for q in 1..zi {
        worst = worst.max((values[zi + q] - values[zi - q].conj()).norm());
    }
    worst / peak
}

/// Inverse transform of one spectrum: `B(z_j) = (1/(nΔz)) Σ B̂(k) e^{ikz_j}`.
fn inverse(values: &[Complex64], dz: f64, planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
    let n = values.len();
    let half = (n / 2) as i64;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (i, v) in values.iter().enumerate() {
        let q = i as i64 - half;
        let sign = if q.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        buf[q.rem_euclid(n as i64) as usize] = v * sign;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / (n as f64 * dz);
    // z_j carries the same (−1)^q factor as on the way in, so the output
    // index j already corresponds to z_j = (j − n/2)Δz.
    buf.iter().map(|v| v * scale).collect()
}

/// `B(z)` at the snapshot time.
pub fn spatial_field(spectral: &SpectralField) -> Result<FieldTrace, FieldError> {
    for c in Component::ALL {
        let v = hermitian_violation(spectral.component(c));
        if v > HERMITIAN_TOL {
            return Err(FieldError::Symmetry { component: c.label(), violation: v });
        }
    }
    let mut planner = FftPlanner::new();
    let mut real = Vec::new();
    let mut worst_imag = 0.0f64;
    for c in [Component::Total, Component::Fiber, Component::Bundle, Component::Sheath, Component::Saline] {
        let z = inverse(spectral.component(c), spectral.dz, &mut planner);
        worst_imag = worst_imag.max(z.iter().fold(0.0, |m, v| m.max(v.im.abs())));
        real.push(z.iter().map(|v| v.re).collect::<Vec<f64>>());
    }
    let peak = real[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let imag_residue = if peak > 0.0 { worst_imag / peak } else { worst_imag };
    let mut it = real.into_iter();
    Ok(FieldTrace {
        kind: AxisKind::Z,
        axis: z_axis(spectral.n(), spectral.dz),
        total: it.next().unwrap(),
        fiber: it.next().unwrap(),
        bundle: it.next().unwrap(),
        sheath: it.next().unwrap(),
        saline: it.next().unwrap(),
        imag_residue,
    })
}

/// `B(t)` at `z = 0` as the wave passes at speed `u`: `t = t_ref − z/u`,
/// returned in ascending time.
pub fn time_series_at_point(spectral: &SpectralField, u: f64) -> Result<FieldTrace, FieldError> {
    if !(u > 0.0) {
        return Err(FieldError::Params(format!("conduction velocity must be positive, got {u}")));
    }
    let t_ref = spectral.mapping.as_ref().map(|m| m.t_ref).unwrap_or(0.0);
    let mut tr = spatial_field(spectral)?;
    tr.kind = AxisKind::Time;
    tr.axis = tr.axis.iter().map(|z| t_ref - z / u).collect();
    for v in [&mut tr.axis, &mut tr.total, &mut tr.fiber, &mut tr.bundle, &mut tr.sheath, &mut tr.saline] {
        v.reverse();
    }
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimulationGrid;
    use crate::field::spectrum::transform_periodic;

    fn as_field(values: Vec<Complex64>, k: Vec<f64>, dz: f64) -> SpectralField {
        SpectralField {
            k,
            rho: 1.0,
            dz,
            mapping: None,
            b_i: values.clone(),
            b_b1: values.clone(),
            b_b2: vec![Complex64::new(0.0, 0.0); values.len()],
            b_b3: vec![Complex64::new(0.0, 0.0); values.len()],
            b_b: values.clone(),
            b_s: values.clone(),
            b_e: values.clone(),
            b_total: values,
        }
    }

    #[test]
    fn forward_inverse_round_trip() {
        let g = SimulationGrid { n_z: 256, length_z: 0.02, compartment_length: 1.0, ..SimulationGrid::default() };
        let profile: Vec<f64> =
            z_axis(256, g.dz()).iter().map(|z| (-(z - 1e-3).powi(2) / 2e-6).exp() * (3e3 * z).sin()).collect();
        let s = transform_periodic(&profile, &g, "t").unwrap();
        let f = as_field(s.phi.clone(), s.k.clone(), s.dz);
        let back = spatial_field(&f).unwrap();
        let peak = profile.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in back.total.iter().zip(&profile) {
            assert!((a - b).abs() <= 1e-10 * peak);
        }
        assert!(back.imag_residue < 1e-10);
    }

    #[test]
    fn asymmetric_spectrum_rejected() {
        let k = vec![-2.0, -1.0, 0.0, 1.0];
        let mut v = vec![Complex64::new(0.0, 0.0); 4];
        v[3] = Complex64::new(1.0, 0.0);
        let f = as_field(v, k, 1.0);
        assert!(matches!(spatial_field(&f), Err(FieldError::Symmetry { .. })));
    }

    #[test]
    fn time_axis_ascends() {
        let g = SimulationGrid { n_z: 64, length_z: 0.01, compartment_length: 1.0, ..SimulationGrid::default() };
        let profile: Vec<f64> = z_axis(64, g.dz()).iter().map(|z| (-z * z / 1e-6).exp()).collect();
        let s = transform_periodic(&profile, &g, "t").unwrap();
        let f = as_field(s.phi.clone(), s.k.clone(), s.dz);
        let t = time_series_at_point(&f, 2.0).unwrap();
        assert!(t.axis.windows(2).all(|w| w[1] > w[0]));
        assert!(((t.axis[1] - t.axis[0]) - g.dz() / 2.0).abs() < 1e-15);
        // Reversal maps z to −z·u⁻¹, so sample j of the series is the profile at −z.
        let z = spatial_field(&f).unwrap();
        assert!((t.total[10] - z.total[63 - 10]).abs() < 1e-14);
    }
}
