//! Processing of recorded or simulated field traces: bandpass, spectrogram,
//! amplitude spectral density and signal-to-noise ratio.

pub mod filter;
pub mod spectral;

use std::io::{Read, Write};

pub use filter::{bandpass, butterworth_bandpass, filtfilt, Biquad, Sos};
pub use spectral::{amplitude_spectral_density, band_rms, hann, snr_estimate, spectrogram, AmplitudeSpectrum, Spectrogram};

/// Relative spread of sample spacing tolerated when reading a trace.
pub const SPACING_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DspError {
    #[error("band must satisfy 0 < f_lo < f_hi < {nyquist} Hz, got {f_lo}..{f_hi}")]
    Band { f_lo: f64, f_hi: f64, nyquist: f64 },
    #[error("filter order must be at least 1")]
    Order,
    #[error("trace has {got} samples, needs at least {needed}")]
    TooShort { got: usize, needed: usize },
    #[error("window of {window} samples does not fit a trace of {len}")]
    Window { window: usize, len: usize },
    #[error("hop must be at least one sample")]
    Hop,
    #[error("overlap must lie in [0, 1), got {0}")]
    Overlap(f64),
    #[error("sample rate must be positive and finite, got {0}")]
    SampleRate(f64),
    #[error("sample rates differ: {a} Hz vs {b} Hz")]
    RateMismatch { a: f64, b: f64 },
    #[error("noise has zero in-band RMS, SNR undefined")]
    ZeroNoise,
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("trace file row {row}: {message}")]
    Csv { row: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalTrace {
    pub samples: Vec<f64>,
    /// Hz.
    pub sample_rate: f64,
    pub label: String,
}

impl SignalTrace {
    pub fn new(samples: Vec<f64>, sample_rate: f64, label: impl Into<String>) -> Result<Self, DspError> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(DspError::SampleRate(sample_rate));
        }
        if samples.len() < 2 {
            return Err(DspError::TooShort { got: samples.len(), needed: 2 });
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(DspError::NonFinite(i));
        }
        Ok(Self { samples, sample_rate, label: label.into() })
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 / self.sample_rate
    }
}

/// Read a two-column CSV `t_s,<label>` with uniform time steps. The sample
/// rate comes from the first and last time stamps.
pub fn read_trace_csv<R: Read>(input: R) -> Result<(SignalTrace, f64), DspError> {
    let csv_err = |row: usize, message: String| DspError::Csv { row, message };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers().map_err(|e| csv_err(0, e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "t_s" {
        return Err(csv_err(0, "expected header t_s,<value column>".into()));
    }
    let mut t = Vec::new();
    let mut v = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| csv_err(row, e.to_string()))?;
        let parse = |j: usize| {
            rec[j]
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| csv_err(row, format!("column {} is not a finite number: {:?}", &headers[j], &rec[j])))
        };
        t.push(parse(0)?);
        v.push(parse(1)?);
    }
    if t.len() < 2 {
        return Err(DspError::TooShort { got: t.len(), needed: 2 });
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(csv_err(2, "time stamps must increase".into()));
    }
    for i in 1..t.len() {
        if ((t[i] - t[i - 1]) - dt).abs() > SPACING_TOL * dt.max(t[i].abs() * 1e-9) {
            return Err(csv_err(i + 1, format!("non-uniform time step {:e} s (expected {dt:e} s)", t[i] - t[i - 1])));
        }
    }
    Ok((SignalTrace::new(v, 1.0 / dt, &headers[1])?, t[0]))
}

/// Write `t_s,<label>` starting at `t0`.
pub fn write_trace_csv<W: Write>(trace: &SignalTrace, t0: f64, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let label = if trace.label.is_empty() { "value" } else { trace.label.as_str() };
    w.write_record(["t_s", label])?;
    for (i, v) in trace.samples.iter().enumerate() {
        w.write_record([format!("{:.17e}", t0 + trace.time(i)), format!("{v:.17e}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Long-form `t_s,f_hz,magnitude`, times offset by `t0`.
pub fn write_spectrogram_csv<W: Write>(s: &Spectrogram, t0: f64, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_s", "f_hz", "magnitude"])?;
    for (t, frame) in s.times.iter().zip(&s.magnitude) {
        for (f, m) in s.freqs.iter().zip(frame) {
            w.write_record([format!("{:.17e}", t0 + t), format!("{f:.17e}"), format!("{m:.17e}")])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `f_hz,asd_per_rt_hz`.
pub fn write_asd_csv<W: Write>(a: &AmplitudeSpectrum, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["f_hz", "asd_per_rt_hz"])?;
    for (f, v) in a.freqs.iter().zip(&a.asd) {
        w.write_record([format!("{f:.17e}"), format!("{v:.17e}")])?;
    }
    w.flush()?;
    Ok(())
}
