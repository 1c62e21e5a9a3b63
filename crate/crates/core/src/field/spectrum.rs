//! Axial Fourier transform of the transmembrane potential.
//!
//! Grid convention: `z_j = (j − n/2)·Δz`, `k_q = 2πq/L` for
//! `q = −n/2 .. n/2−1`, stored in that ascending order, and
//! `φ̂(k) = Δz Σ_j φ(z_j) e^{−i k z_j}`.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::config::SimulationGrid;

/// Fraction of the window the waveform may occupy before the periodic
/// images start to overlap.
pub const MAX_SUPPORT_FRACTION: f64 = 0.8;

/// How a time course at one site was laid out along z.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelingWave {
    /// Conduction velocity used for `z = u·t`, m/s.
    pub u: f64,
    /// Time at which the profile is a snapshot, s. `φ(z) = f(t_ref − z/u)`.
    pub t_ref: f64,
    /// Peak time of the source waveform, s.
    pub t_peak: f64,
    /// Baseline subtracted from the source, V.
    pub baseline: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpectrum {
    /// Wavenumbers in ascending order, rad/m.
    pub k: Vec<f64>,
    /// `φ̂(k)`, V·m.
    pub phi: Vec<Complex64>,
    pub dz: f64,
    /// Where the waveform came from.
    pub source: String,
    pub mapping: Option<TravelingWave>,
}

impl PotentialSpectrum {
    pub fn n(&self) -> usize {
        self.k.len()
    }

    pub fn length(&self) -> f64 {
        self.dz * self.n() as f64
    }

    /// Index of `k = 0` in the stored order.
    pub fn zero_index(&self) -> usize {
        self.n() / 2
    }

    /// Spectrum multiplied by a real factor.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self { phi: self.phi.iter().map(|p| p * alpha).collect(), ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectrumError {
    #[error("waveform occupies {fraction:.3} of the axial window (limit {MAX_SUPPORT_FRACTION}); lengthen grid.length_z")]
    Window { fraction: f64 },
    #[error("profile has {got} samples but the grid has {expected}")]
    Length { got: usize, expected: usize },
    #[error("invalid waveform: {0}")]
    Waveform(String),
}

/// Wavenumbers `2π{−n/2..n/2−1}/L`.
pub fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    let half = (n / 2) as i64;
    (0..n as i64).map(|q| 2.0 * std::f64::consts::PI * (q - half) as f64 / length).collect()
}

/// Axial positions `(j − n/2)Δz`.
pub fn z_axis(n: usize, dz: f64) -> Vec<f64> {
    (0..n).map(|j| (j as f64 - (n / 2) as f64) * dz).collect()
}

fn support_fraction(profile: &[f64]) -> f64 {
    let peak = profile.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return 0.0;
    }
    profile.iter().filter(|v| v.abs() > 0.01 * peak).count() as f64 / profile.len() as f64
}

/// Forward transform of a profile sampled on the grid's z axis, rejecting
/// waveforms too wide for the window.
pub fn spectrum_from_profile(profile: &[f64], grid: &SimulationGrid, source: &str) -> Result<PotentialSpectrum, SpectrumError> {
    let fraction = support_fraction(profile);
    if fraction > MAX_SUPPORT_FRACTION {
        return Err(SpectrumError::Window { fraction });
    }
    transform_periodic(profile, grid, source)
}

/// Forward transform without the support check, for inputs that really are
/// periodic over the window.
pub fn transform_periodic(profile: &[f64], grid: &SimulationGrid, source: &str) -> Result<PotentialSpectrum, SpectrumError> {
    let n = grid.n_z;
    if profile.len() != n {
        return Err(SpectrumError::Length { got: profile.len(), expected: n });
    }
    if profile.iter().any(|v| !v.is_finite()) {
        return Err(SpectrumError::Waveform("non-finite sample".into()));
    }
    let dz = grid.dz();
    let mut buf: Vec<Complex64> = profile.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    // Bin q of the FFT is k_q; the z origin offset contributes (−1)^q.
    let phi = (0..n)
        .map(|i| {
            let q = i as i64 - half as i64;
            let sign = if q.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            buf[q.rem_euclid(n as i64) as usize] * (dz * sign)
        })
        .collect();
    Ok(PotentialSpectrum { k: wavenumbers(n, grid.length_z), phi, dz, source: source.to_string(), mapping: None })
}

/// Lay a time course out along z by `φ(z) = f(t_ref − z/u)`, with the peak
/// placed a quarter window ahead of the centre so the slower trailing phase
/// has room behind it.
pub fn traveling_wave_profile(f: impl Fn(f64) -> f64, t_peak: f64, u: f64, grid: &SimulationGrid) -> (Vec<f64>, f64) {
    let t_ref = t_peak + 0.25 * grid.length_z / u;
    let profile = z_axis(grid.n_z, grid.dz()).iter().map(|&z| f(t_ref - z / u)).collect();
    (profile, t_ref)
}

/// Analytic AP stand-in `0.12 V·(s/τ)³e^{3(1 − s/τ)}`, `τ = 0.5 ms`,
/// with `s` the time since onset. Peaks at 120 mV when `s = τ`.
pub fn analytic_template(s: f64) -> f64 {
    const TAU: f64 = 0.5e-3;
    if s <= 0.0 {
        0.0
    } else {
        let x = s / TAU;
        0.12 * x.powi(3) * (3.0 * (1.0 - x)).exp()
    }
}

/// Spectrum of the analytic template travelling at `u`.
pub fn template_spectrum(u: f64, grid: &SimulationGrid) -> Result<PotentialSpectrum, SpectrumError> {
    let t_peak = 0.5e-3;
    let (profile, t_ref) = traveling_wave_profile(analytic_template, t_peak, u, grid);
    let mut spec = spectrum_from_profile(&profile, grid, "analytic-template")?;
    spec.mapping = Some(TravelingWave { u, t_ref, t_peak, baseline: 0.0 });
    Ok(spec)
}

/// Spectrum of a sampled membrane-potential time course (mV) recorded at
/// one site, travelling at `u`. The mean before `onset` is removed and the
/// samples are linearly interpolated, held constant beyond either end.
pub fn membrane_potential_spectrum(
    time: &[f64],
    v_mv: &[f64],
    onset: f64,
    u: f64,
    grid: &SimulationGrid,
    source: &str,
) -> Result<PotentialSpectrum, SpectrumError> {
    if time.len() != v_mv.len() || time.len() < 2 {
        return Err(SpectrumError::Waveform("time and potential must have equal length ≥ 2".into()));
    }
    if time.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SpectrumError::Waveform("time axis must increase".into()));
    }
    if !(u > 0.0) {
        return Err(SpectrumError::Waveform("conduction velocity must be positive".into()));
    }
    let pre: Vec<f64> = time.iter().zip(v_mv).filter(|(t, _)| **t <= onset).map(|(_, v)| *v).collect();
    let baseline_mv = if pre.is_empty() { v_mv[0] } else { pre.iter().sum::<f64>() / pre.len() as f64 };
    let phi: Vec<f64> = v_mv.iter().map(|v| (v - baseline_mv) * 1e-3).collect();
    let ipeak = phi.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).map(|(i, _)| i).unwrap_or(0);
    let interp = |t: f64| -> f64 {
        if t <= time[0] {
            return phi[0];
        }
        let last = time.len() - 1;
        if t >= time[last] {
            return phi[last];
        }
        let j = time.partition_point(|&x| x <= t) - 1;
        let w = (t - time[j]) / (time[j + 1] - time[j]);
        phi[j] * (1.0 - w) + phi[j + 1] * w
    };
    let (profile, t_ref) = traveling_wave_profile(interp, time[ipeak], u, grid);
    let mut spec = spectrum_from_profile(&profile, grid, source)?;
    spec.mapping = Some(TravelingWave { u, t_ref, t_peak: time[ipeak], baseline: baseline_mv * 1e-3 });
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize, length: f64) -> SimulationGrid {
        SimulationGrid { n_z: n, length_z: length, compartment_length: length, ..SimulationGrid::default() }
    }

    #[test]
    fn zero_profile_zero_spectrum() {
        let g = grid(64, 1.0);
        let s = spectrum_from_profile(&vec![0.0; 64], &g, "zero").unwrap();
        assert!(s.phi.iter().all(|p| p.norm() == 0.0));
    }

    #[test]
    fn on_grid_cosine_has_two_bins() {
        let g = grid(128, 2.0);
        let k0 = 2.0 * PI * 5.0 / 2.0;
        let profile: Vec<f64> = z_axis(128, g.dz()).iter().map(|z| (k0 * z).cos()).collect();
        let s = transform_periodic(&profile, &g, "cos").unwrap();
        let nonzero: Vec<f64> = (0..128).filter(|&i| s.phi[i].norm() > 1e-9).map(|i| s.k[i]).collect();
        assert_eq!(nonzero.len(), 2);
        assert!((nonzero[0] + k0).abs() < 1e-9 && (nonzero[1] - k0).abs() < 1e-9);
        // Full support is too wide for an aperiodic source.
        assert!(matches!(spectrum_from_profile(&profile, &g, "cos"), Err(SpectrumError::Window { .. })));
    }

    #[test]
    fn wide_window_cosine_packet_bins() {
        // A cosine windowed to 40% of the axis still transforms exactly at the stored k.
        let g = grid(256, 1.0);
        let z = z_axis(256, g.dz());
        let profile: Vec<f64> = z.iter().map(|&z| if z.abs() < 0.2 { (20.0 * z).cos() } else { 0.0 }).collect();
        let s = spectrum_from_profile(&profile, &g, "packet").unwrap();
        for (k, phi) in s.k.iter().zip(&s.phi).step_by(17) {
            let direct: Complex64 = z.iter().zip(&profile).map(|(&zj, &p)| Complex64::from_polar(p * g.dz(), -k * zj)).sum();
            assert!((direct - phi).norm() < 1e-12);
        }
    }

    #[test]
    fn gaussian_matches_closed_form() {
        let g = grid(1024, 0.04);
        let s0 = 1e-3;
        let profile: Vec<f64> = z_axis(1024, g.dz()).iter().map(|z| (-z * z / (2.0 * s0 * s0)).exp()).collect();
        let spec = spectrum_from_profile(&profile, &g, "gauss").unwrap();
        let peak = s0 * (2.0 * PI).sqrt();
        for (k, phi) in spec.k.iter().zip(&spec.phi) {
            let exact = peak * (-k * k * s0 * s0 / 2.0).exp();
            assert!((phi - exact).norm() <= 1e-6 * peak, "k = {k}");
        }
    }

    #[test]
    fn template_shape() {
        assert_eq!(analytic_template(-1.0), 0.0);
        assert!((analytic_template(0.5e-3) - 0.12).abs() < 1e-15);
        let g = SimulationGrid::default();
        let s = template_spectrum(3.0, &g).unwrap();
        let zi = s.zero_index();
        assert!(s.phi[zi].im.abs() < 1e-15);
        for q in 1..g.n_z / 2 {
            assert!((s.phi[zi + q] - s.phi[zi - q].conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn sampled_course_matches_template_mapping() {
        let g = SimulationGrid::default();
        let dt = 5e-6;
        let onset = 1e-3;
        let time: Vec<f64> = (0..6000).map(|i| i as f64 * dt).collect();
        let v: Vec<f64> = time.iter().map(|&t| -90.0 + 1e3 * analytic_template(t - onset)).collect();
        let s = membrane_potential_spectrum(&time, &v, onset, 3.0, &g, "test").unwrap();
        let t = template_spectrum(3.0, &g).unwrap();
        let scale = t.phi.iter().fold(0.0f64, |m, p| m.max(p.norm()));
        // Same waveform up to a shift of the snapshot time by the onset.
        let m = s.mapping.clone().unwrap();
        assert!((m.baseline + 0.09).abs() < 1e-12);
        for (q, (a, b)) in s.phi.iter().zip(&t.phi).enumerate() {
            assert!((a.norm() - b.norm()).abs() < 1e-3 * scale, "bin {q}");
        }
    }

    #[test]
    fn too_wide_waveform_rejected() {
        let g = SimulationGrid::default();
        let slow = |t: f64| (-(t / 0.01).powi(2)).exp();
        let (profile, _) = traveling_wave_profile(slow, 0.0, 3.0, &g);
        assert!(matches!(spectrum_from_profile(&profile, &g, "slow"), Err(SpectrumError::Window { .. })));
    }
}
