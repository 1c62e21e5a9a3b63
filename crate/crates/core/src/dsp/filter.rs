//! Digital Butterworth bandpass and zero-phase filtering.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{DspError, SignalTrace};

/// One biquad, `b0 + b1 z⁻¹ + b2 z⁻²` over `1 + a1 z⁻¹ + a2 z⁻²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let num = self.b[0] + z_inv * (self.b[1] + z_inv * self.b[2]);
        let den = 1.0 + z_inv * (self.a[0] + z_inv * self.a[1]);
        num / den
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// Transposed direct-form-II state after settling on a unit input.
    fn step_state(&self) -> [f64; 2] {
        let y = self.dc_gain();
        [y - self.b[0], self.b[2] - self.a[1] * y]
    }
}

/// Second-order sections in cascade order.
#[derive(Debug, Clone, PartialEq)]
pub struct Sos {
    pub sections: Vec<Biquad>,
}

impl Sos {
    /// Complex gain at `f` Hz for sample rate `fs`.
    pub fn response(&self, f: f64, fs: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * f / fs);
        self.sections.iter().map(|s| s.response(z_inv)).product()
    }

    /// Samples of reflected padding used by [`filtfilt`].
    pub fn pad_len(&self) -> usize {
        3 * (2 * self.sections.len() + 1)
    }

    /// Single forward pass with initial state `zi` per section.
    fn run(&self, x: &[f64], zi: &[[f64; 2]]) -> Vec<f64> {
        let mut state = zi.to_vec();
        x.iter()
            .map(|&input| {
                let mut v = input;
                for (s, z) in self.sections.iter().zip(state.iter_mut()) {
                    let y = s.b[0] * v + z[0];
                    z[0] = s.b[1] * v - s.a[0] * y + z[1];
                    z[1] = s.b[2] * v - s.a[1] * y;
                    v = y;
                }
                v
            })
            .collect()
    }

    /// Per-section state for a cascade settled on a unit step.
    fn step_states(&self) -> Vec<[f64; 2]> {
        let mut scale = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let z = s.step_state();
                let out = [z[0] * scale, z[1] * scale];
                scale *= s.dc_gain();
                out
            })
            .collect()
    }
}

/// Butterworth bandpass of prototype order `order`, so `2·order` poles,
/// designed by prewarped bilinear transform and normalised to unit gain at
/// the geometric centre frequency.
pub fn butterworth_bandpass(f_lo: f64, f_hi: f64, order: usize, fs: f64) -> Result<Sos, DspError> {
    if !(fs > 0.0 && 0.0 < f_lo && f_lo < f_hi && f_hi < fs / 2.0) {
        return Err(DspError::Band { f_lo, f_hi, nyquist: fs / 2.0 });
    }
    if order == 0 {
        return Err(DspError::Order);
    }
    let k = 2.0 * fs;
    let w_lo = k * (PI * f_lo / fs).tan();
    let w_hi = k * (PI * f_hi / fs).tan();
    let bw = w_hi - w_lo;
    let w0 = (w_lo * w_hi).sqrt();

    let mut poles = Vec::with_capacity(2 * order);
    for j in 0..order {
        let theta = PI * (2 * j + order + 1) as f64 / (2 * order) as f64;
        let p = Complex64::from_polar(1.0, theta) * (bw / 2.0);
        let disc = (p * p - w0 * w0).sqrt();
        for s in [p + disc, p - disc] {
            poles.push((k + s) / (k - s));
        }
    }
    // Conjugate pairs form one section each; real poles are paired in order.
    let mut upper: Vec<Complex64> = poles.iter().copied().filter(|z| z.im > 1e-12).collect();
    let mut real: Vec<f64> = poles.iter().filter(|z| z.im.abs() <= 1e-12).map(|z| z.re).collect();
    upper.sort_by(|a, b| a.re.total_cmp(&b.re));
    real.sort_by(f64::total_cmp);
    let mut sections: Vec<Biquad> =
        upper.iter().map(|z| Biquad { b: [1.0, 0.0, -1.0], a: [-2.0 * z.re, z.norm_sqr()] }).collect();
    for pair in real.chunks(2) {
        let (p, q) = (pair[0], pair.get(1).copied().unwrap_or(0.0));
        sections.push(Biquad { b: [1.0, 0.0, -1.0], a: [-(p + q), p * q] });
    }
    let mut sos = Sos { sections };
    let centre = fs / PI * (w0 / k).atan();
    let g = sos.response(centre, fs).norm();
    for b in sos.sections[0].b.iter_mut() {
        *b /= g;
    }
    Ok(sos)
}

/// Forward–backward filtering with odd reflection of `pad_len` samples at
/// both ends and steady-state initial conditions.
pub fn filtfilt(sos: &Sos, x: &[f64]) -> Result<Vec<f64>, DspError> {
    let pad = sos.pad_len();
    if x.len() <= pad {
        return Err(DspError::TooShort { got: x.len(), needed: pad + 1 });
    }
    let n = x.len();
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

    let zi = sos.step_states();
    let scaled = |x0: f64| zi.iter().map(|z| [z[0] * x0, z[1] * x0]).collect::<Vec<_>>();
    let mut y = sos.run(&ext, &scaled(ext[0]));
    y.reverse();
    let mut y = sos.run(&y, &scaled(y[0]));
    y.reverse();
    Ok(y[pad..pad + n].to_vec())
}

/// Zero-phase Butterworth bandpass of a trace.
pub fn bandpass(trace: &SignalTrace, f_lo: f64, f_hi: f64, order: usize) -> Result<SignalTrace, DspError> {
    let sos = butterworth_bandpass(f_lo, f_hi, order, trace.sample_rate)?;
    let samples = filtfilt(&sos, &trace.samples)?;
    Ok(SignalTrace { samples, sample_rate: trace.sample_rate, label: trace.label.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_shape() {
        let sos = butterworth_bandpass(30.0, 300.0, 4, 2000.0).unwrap();
        assert_eq!(sos.sections.len(), 4);
        assert!(sos.response(0.0, 2000.0).norm() < 1e-12);
        assert!(sos.response(999.999, 2000.0).norm() < 1e-6);
        // Prewarping puts the -3 dB points exactly on the band edges.
        for f in [30.0, 300.0] {
            assert!((sos.response(f, 2000.0).norm() - 0.5f64.sqrt()).abs() < 1e-9);
        }
        // Stable poles.
        for s in &sos.sections {
            assert!(s.a[1].abs() < 1.0);
        }
    }

    #[test]
    fn odd_order_design() {
        let sos = butterworth_bandpass(10.0, 40.0, 3, 500.0).unwrap();
        assert_eq!(sos.sections.len(), 3);
        for f in [10.0, 40.0] {
            assert!((sos.response(f, 500.0).norm() - 0.5f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_band() {
        assert!(matches!(butterworth_bandpass(300.0, 30.0, 4, 2000.0), Err(DspError::Band { .. })));
        assert!(matches!(butterworth_bandpass(30.0, 1000.0, 4, 2000.0), Err(DspError::Band { .. })));
        assert!(matches!(butterworth_bandpass(0.0, 100.0, 4, 2000.0), Err(DspError::Band { .. })));
        assert!(matches!(butterworth_bandpass(10.0, 100.0, 0, 2000.0), Err(DspError::Order)));
    }

    #[test]
    fn zero_in_zero_out() {
        let sos = butterworth_bandpass(30.0, 300.0, 4, 2000.0).unwrap();
        assert!(filtfilt(&sos, &[0.0; 100]).unwrap().iter().all(|&v| v == 0.0));
        assert!(matches!(filtfilt(&sos, &[0.0; 27]), Err(DspError::TooShort { .. })));
    }

    #[test]
    fn steady_state_start_has_no_step_transient() {
        // A pure step is entirely out of band once the initial state is settled.
        let sos = butterworth_bandpass(30.0, 300.0, 4, 2000.0).unwrap();
        let y = filtfilt(&sos, &[3.0; 400]).unwrap();
        assert!(y.iter().all(|v| v.abs() < 1e-9), "{:?}", &y[..4]);
    }
}
