//! STFT spectrogram, Welch amplitude spectral density and band SNR.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{DspError, SignalTrace};

/// Periodic Hann window.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect()
}

fn real_fft(x: &[f64], planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Weight of one-sided bin `k` of an `n`-point DFT when summing energy.
fn one_sided_weight(k: usize, n: usize) -> f64 {
    if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
        1.0
    } else {
        2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    /// Frame centres, s.
    pub times: Vec<f64>,
    /// Bin frequencies, Hz.
    pub freqs: Vec<f64>,
    /// `magnitude[frame][bin]`, `|Σ w x e^{−2πikn/N}|`.
    pub magnitude: Vec<Vec<f64>>,
    pub window: usize,
    pub hop: usize,
}

impl Spectrogram {
    /// `Σ_frames Σ_bins |X|²/N` counting both halves of the spectrum.
    pub fn energy(&self) -> f64 {
        let n = self.window;
        self.magnitude
            .iter()
            .map(|frame| frame.iter().enumerate().map(|(k, m)| one_sided_weight(k, n) * m * m).sum::<f64>() / n as f64)
            .sum()
    }

    /// Sum over frames of the squared window at a fully covered sample.
    pub fn overlap_factor(&self) -> f64 {
        hann(self.window).iter().map(|w| w * w).sum::<f64>() / self.hop as f64
    }

    /// Bin with the largest magnitude in each frame.
    pub fn ridge(&self) -> Vec<usize> {
        self.magnitude
            .iter()
            .map(|f| f.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0))
            .collect()
    }
}

/// Hann-windowed STFT magnitude, one-sided, frames starting every `hop`
/// samples while they fit inside the trace.
pub fn spectrogram(trace: &SignalTrace, window: usize, hop: usize) -> Result<Spectrogram, DspError> {
    let n = trace.samples.len();
    if window < 2 || window > n {
        return Err(DspError::Window { window, len: n });
    }
    if hop == 0 {
        return Err(DspError::Hop);
    }
    let w = hann(window);
    let fs = trace.sample_rate;
    let mut planner = FftPlanner::new();
    let mut times = Vec::new();
    let mut magnitude = Vec::new();
    let mut start = 0;
    while start + window <= n {
        let frame: Vec<f64> = trace.samples[start..start + window].iter().zip(&w).map(|(x, w)| x * w).collect();
        let spec = real_fft(&frame, &mut planner);
        magnitude.push(spec[..window / 2 + 1].iter().map(|c| c.norm()).collect());
        times.push((start as f64 + window as f64 / 2.0) / fs);
        start += hop;
    }
    let freqs = (0..=window / 2).map(|k| k as f64 * fs / window as f64).collect();
    Ok(Spectrogram { times, freqs, magnitude, window, hop })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSpectrum {
    pub freqs: Vec<f64>,
    /// One-sided amplitude spectral density, unit/√Hz.
    pub asd: Vec<f64>,
    pub segments: usize,
}

/// Welch estimate: Hann segments of `segment` samples (shortened to the
/// trace if needed) overlapping by `overlap`, each mean-removed.
pub fn amplitude_spectral_density(trace: &SignalTrace, segment: usize, overlap: f64) -> Result<AmplitudeSpectrum, DspError> {
    const MIN_SAMPLES: usize = 256;
    let n = trace.samples.len();
    if n < MIN_SAMPLES {
        return Err(DspError::TooShort { got: n, needed: MIN_SAMPLES });
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(DspError::Overlap(overlap));
    }
    let seg = segment.min(n);
    if seg < 2 {
        return Err(DspError::Window { window: seg, len: n });
    }
    let step = ((seg as f64 * (1.0 - overlap)).round() as usize).max(1);
    let w = hann(seg);
    let fs = trace.sample_rate;
    let norm = fs * w.iter().map(|v| v * v).sum::<f64>();
    let bins = seg / 2 + 1;
    let mut psd = vec![0.0; bins];
    let mut planner = FftPlanner::new();
    let mut count = 0;
    let mut start = 0;
    while start + seg <= n {
        let chunk = &trace.samples[start..start + seg];
        let mean = chunk.iter().sum::<f64>() / seg as f64;
        let frame: Vec<f64> = chunk.iter().zip(&w).map(|(x, w)| (x - mean) * w).collect();
        let spec = real_fft(&frame, &mut planner);
        for (k, p) in psd.iter_mut().enumerate() {
            *p += one_sided_weight(k, seg) * spec[k].norm_sqr() / norm;
        }
        count += 1;
        start += step;
    }
    let asd = psd.iter().map(|p| (p / count as f64).sqrt()).collect();
    let freqs = (0..bins).map(|k| k as f64 * fs / seg as f64).collect();
    Ok(AmplitudeSpectrum { freqs, asd, segments: count })
}

/// RMS of the part of `x` whose frequencies lie in `[f_lo, f_hi]`.
pub fn band_rms(x: &[f64], fs: f64, f_lo: f64, f_hi: f64) -> f64 {
    let n = x.len();
    let spec = real_fft(x, &mut FftPlanner::new());
    let energy: f64 = (0..=n / 2)
        .filter(|&k| {
            let f = k as f64 * fs / n as f64;
            f >= f_lo && f <= f_hi
        })
        .map(|k| one_sided_weight(k, n) * spec[k].norm_sqr())
        .sum();
    (energy / (n * n) as f64).sqrt()
}

/// Ratio of in-band RMS of `signal` to that of `noise`.
pub fn snr_estimate(signal: &SignalTrace, noise: &SignalTrace, f_lo: f64, f_hi: f64) -> Result<f64, DspError> {
    if signal.sample_rate != noise.sample_rate {
        return Err(DspError::RateMismatch { a: signal.sample_rate, b: noise.sample_rate });
    }
    if !(f_lo >= 0.0 && f_lo < f_hi) {
        return Err(DspError::Band { f_lo, f_hi, nyquist: signal.sample_rate / 2.0 });
    }
    let fs = signal.sample_rate;
    let noise_rms = band_rms(&noise.samples, fs, f_lo, f_hi);
    if noise_rms == 0.0 {
        return Err(DspError::ZeroNoise);
    }
    Ok(band_rms(&signal.samples, fs, f_lo, f_hi) / noise_rms)
}
