//! Simulated membrane potentials, derived axial currents and AP analysis.

use std::io::Write;

/// Grid and provenance of an [`APTrace`].
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub n_compartments: usize,
    pub compartment_length: f64,
    /// Integration step, s.
    pub dt: f64,
    pub record_every: usize,
    pub endplate: usize,
    pub recording_compartment: usize,
    pub onset: f64,
    pub axial_resistance: f64,
    pub params_hash: String,
}

/// Membrane potential of every compartment, sampled every `record_every`
/// steps, plus the recording compartment at full resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct APTrace {
    pub meta: TraceMeta,
    time: Vec<f64>,
    v_mv: Vec<f64>,
    probe_time: Vec<f64>,
    probe_mv: Vec<f64>,
}

impl APTrace {
    pub fn with_capacity(meta: TraceMeta, samples: usize, probe: usize) -> Self {
        let n = meta.n_compartments;
        Self {
            meta,
            time: Vec::with_capacity(samples),
            v_mv: Vec::with_capacity(samples * n),
            probe_time: Vec::with_capacity(probe),
            probe_mv: Vec::with_capacity(probe),
        }
    }

    /// Build directly from a row-major `time × compartment` matrix. The probe
    /// is taken from the recorded rows.
    pub fn from_rows(meta: TraceMeta, time: Vec<f64>, v_mv: Vec<f64>) -> Self {
        assert_eq!(v_mv.len(), time.len() * meta.n_compartments, "matrix shape mismatch");
        let rc = meta.recording_compartment;
        let n = meta.n_compartments;
        let probe_mv = (0..time.len()).map(|r| v_mv[r * n + rc]).collect();
        Self { probe_time: time.clone(), meta, time, v_mv, probe_mv }
    }

    pub fn push_sample(&mut self, t: f64, v: &[f64]) {
        debug_assert_eq!(v.len(), self.meta.n_compartments);
        self.time.push(t);
        self.v_mv.extend_from_slice(v);
    }

    pub fn push_probe(&mut self, t: f64, v: f64) {
        self.probe_time.push(t);
        self.probe_mv.push(v);
    }

    pub fn n_samples(&self) -> usize {
        self.time.len()
    }

    pub fn time(&self) -> &[f64] {
        &self.time
    }

    /// Row-major `time × compartment` matrix, mV.
    pub fn v_mv(&self) -> &[f64] {
        &self.v_mv
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let n = self.meta.n_compartments;
        &self.v_mv[r * n..(r + 1) * n]
    }

    pub fn compartment(&self, i: usize) -> Vec<f64> {
        let n = self.meta.n_compartments;
        (0..self.n_samples()).map(|r| self.v_mv[r * n + i]).collect()
    }

    /// Full-resolution time axis and potential of the recording compartment.
    pub fn probe(&self) -> (&[f64], &[f64]) {
        (&self.probe_time, &self.probe_mv)
    }

    /// Axial currents `I_i = (V_{i+1} − V_i)/R` of recorded row `r`, A.
    pub fn axial_currents(&self, r: usize) -> Vec<f64> {
        axial_currents_of(self.row(r), self.meta.axial_resistance)
    }

    /// CSV with header `t_s, comp_0_mV, comp_1_mV, ...`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t_s".to_string()];
        header.extend((0..self.meta.n_compartments).map(|i| format!("comp_{i}_mV")));
        w.write_record(&header)?;
        for r in 0..self.n_samples() {
            let mut rec = vec![format!("{:e}", self.time[r])];
            rec.extend(self.row(r).iter().map(|v| format!("{v:.9e}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// CSV of the axial currents, header `t_s, I_0_A, ..., I_{n-2}_A`.
    pub fn write_axial_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t_s".to_string()];
        header.extend((0..self.meta.n_compartments - 1).map(|i| format!("I_{i}_A")));
        w.write_record(&header)?;
        for r in 0..self.n_samples() {
            let mut rec = vec![format!("{:e}", self.time[r])];
            rec.extend(self.axial_currents(r).iter().map(|v| format!("{v:.9e}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Axial currents along one voltage profile (mV in, A out).
pub fn axial_currents_of(v_mv: &[f64], r: f64) -> Vec<f64> {
    v_mv.windows(2).map(|w| super::channels::axial_current(w[0], w[1], r)).collect()
}

/// Threshold above which a compartment counts as having fired, mV.
pub const ELICITED_MV: f64 = -20.0;

/// Stages of the AP at the recording compartment, as ordered event times.
#[derive(Debug, Clone, PartialEq)]
pub struct ApMorphology {
    /// Pre-stimulus baseline, mV.
    pub baseline_mv: f64,
    pub stimulation_t: f64,
    /// First crossing of half amplitude on the rising edge.
    pub depolarization_t: f64,
    pub peak_t: f64,
    pub peak_mv: f64,
    /// First crossing back below half amplitude.
    pub repolarization_t: f64,
    /// Minimum after repolarization.
    pub hyperpolarization_t: f64,
    pub undershoot_mv: f64,
    /// First time after the minimum the potential is back within 2 mV and
    /// stays there.
    pub recovery_t: f64,
}

impl ApMorphology {
    /// Events in the order stimulation → depolarization → peak →
    /// repolarization → hyperpolarization → recovery.
    pub fn is_ordered(&self) -> bool {
        let t = [
            self.stimulation_t,
            self.depolarization_t,
            self.peak_t,
            self.repolarization_t,
            self.hyperpolarization_t,
            self.recovery_t,
        ];
        t.windows(2).all(|w| w[0] < w[1])
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ApAnalysisError {
    #[error("no action potential: peak {peak_mv:.2} mV stays below {ELICITED_MV} mV")]
    NoAp { peak_mv: f64 },
    #[error("AP stage missing: {0}")]
    MissingStage(&'static str),
    #[error("no propagation detected: {0}")]
    NoPropagation(String),
}

fn baseline(time: &[f64], v: &[f64], onset: f64) -> f64 {
    let pre: Vec<f64> = time.iter().zip(v).filter(|(t, _)| **t <= onset).map(|(_, v)| *v).collect();
    if pre.is_empty() {
        v[0]
    } else {
        pre.iter().sum::<f64>() / pre.len() as f64
    }
}

/// Locate the AP stages on a single compartment time course.
pub fn ap_morphology(time: &[f64], v: &[f64], onset: f64) -> Result<ApMorphology, ApAnalysisError> {
    let base = baseline(time, v, onset);
    let (ip, &peak) =
        v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).ok_or(ApAnalysisError::MissingStage("empty trace"))?;
    if peak <= ELICITED_MV {
        return Err(ApAnalysisError::NoAp { peak_mv: peak });
    }
    let half = base + 0.5 * (peak - base);
    let idep = (0..ip).rev().find(|&i| v[i] < half).map(|i| i + 1).ok_or(ApAnalysisError::MissingStage("depolarization"))?;
    let irep = (ip..v.len()).find(|&i| v[i] < half).ok_or(ApAnalysisError::MissingStage("repolarization"))?;
    let (imin, &vmin) = v[irep..]
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, x)| (i + irep, x))
        .ok_or(ApAnalysisError::MissingStage("hyperpolarization"))?;
    if vmin >= base {
        return Err(ApAnalysisError::MissingStage("hyperpolarization"));
    }
    let last_far = (imin..v.len()).rev().find(|&i| (v[i] - base).abs() > 2.0);
    let irec = match last_far {
        None => imin + 1,
        Some(i) if i + 1 < v.len() => i + 1,
        Some(_) => return Err(ApAnalysisError::MissingStage("recovery")),
    };
    if irec >= v.len() {
        return Err(ApAnalysisError::MissingStage("recovery"));
    }
    Ok(ApMorphology {
        baseline_mv: base,
        stimulation_t: onset,
        depolarization_t: time[idep],
        peak_t: time[ip],
        peak_mv: peak,
        repolarization_t: time[irep],
        hyperpolarization_t: time[imin],
        undershoot_mv: base - vmin,
        recovery_t: time[irec],
    })
}

/// One-line description of a simulated AP at the recording compartment.
#[derive(Debug, Clone, PartialEq)]
pub struct ApSummary {
    pub rest_mv: f64,
    pub peak_mv: f64,
    pub elicited: bool,
    /// Baseline minus post-peak minimum, mV; zero when no AP.
    pub undershoot_mv: f64,
    pub velocity: Option<f64>,
}

impl ApSummary {
    pub fn of(trace: &APTrace) -> Self {
        let (time, v) = trace.probe();
        let rest = baseline(time, v, trace.meta.onset);
        let peak = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let elicited = peak > ELICITED_MV;
        let undershoot =
            if elicited { ap_morphology(time, v, trace.meta.onset).map(|m| m.undershoot_mv).unwrap_or(0.0) } else { 0.0 };
        Self {
            rest_mv: rest,
            peak_mv: peak,
            elicited,
            undershoot_mv: undershoot,
            velocity: if elicited { conduction_velocity(trace).ok() } else { None },
        }
    }

    pub fn line(&self) -> String {
        if !self.elicited {
            return format!("no AP: rest {:.3} mV, peak {:.3} mV", self.rest_mv, self.peak_mv);
        }
        let vel = self.velocity.map(|v| format!("{v:.3} m/s")).unwrap_or_else(|| "n/a".into());
        format!(
            "AP elicited: rest {:.3} mV, peak {:.3} mV, overshoot {:.3} mV, undershoot {:.4} mV, velocity {}",
            self.rest_mv,
            self.peak_mv,
            self.peak_mv.max(0.0),
            self.undershoot_mv,
            vel
        )
    }
}

/// Sub-sample peak time by a parabola through the maximum and its neighbours.
fn peak_time(time: &[f64], v: &[f64]) -> (f64, f64) {
    let (i, &vmax) = v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
    if i == 0 || i + 1 == v.len() {
        return (time[i], vmax);
    }
    let (y0, y1, y2) = (v[i - 1], v[i], v[i + 1]);
    let denom = y0 - 2.0 * y1 + y2;
    let shift = if denom < 0.0 { (0.5 * (y0 - y2) / denom).clamp(-0.5, 0.5) } else { 0.0 };
    let h = time[i + 1] - time[i];
    (time[i] + shift * h, vmax)
}

/// Conduction velocity from a least-squares fit of peak time against
/// distance from the initiation site, over the central half of the fiber.
pub fn conduction_velocity(trace: &APTrace) -> Result<f64, ApAnalysisError> {
    let n = trace.meta.n_compartments;
    if trace.n_samples() < 3 {
        return Err(ApAnalysisError::NoPropagation("fewer than three samples".into()));
    }
    let peaks: Vec<(f64, f64)> = (0..n).map(|i| peak_time(trace.time(), &trace.compartment(i))).collect();
    let fired: Vec<usize> = (0..n).filter(|&i| peaks[i].1 > ELICITED_MV).collect();
    if fired.is_empty() {
        return Err(ApAnalysisError::NoPropagation("no compartment fired".into()));
    }
    let init = *fired.iter().min_by(|&&a, &&b| peaks[a].0.total_cmp(&peaks[b].0)).expect("non-empty");
    let exclusion = n / 20;
    let (lo, hi) = (n / 4, 3 * n / 4);
    let pts: Vec<(f64, f64)> = fired
        .iter()
        .filter(|&&i| i >= lo && i < hi && i.abs_diff(init) >= exclusion.max(1))
        .map(|&i| (i.abs_diff(init) as f64 * trace.meta.compartment_length, peaks[i].0))
        .collect();
    if pts.len() < 3 {
        return Err(ApAnalysisError::NoPropagation(format!("only {} usable compartments", pts.len())));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(ApAnalysisError::NoPropagation("degenerate positions".into()));
    }
    let slope = sxy / sxx;
    if !(slope > 0.0) || !slope.is_finite() {
        return Err(ApAnalysisError::NoPropagation(format!("peak times do not increase with distance (slope {slope:e} s/m)")));
    }
    Ok(1.0 / slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(n: usize, dt: f64) -> TraceMeta {
        TraceMeta {
            n_compartments: n,
            compartment_length: 1e-5,
            dt,
            record_every: 1,
            endplate: 0,
            recording_compartment: n / 2,
            onset: 0.0,
            axial_resistance: 5e3,
            params_hash: String::new(),
        }
    }

    /// Gaussian bump whose centre moves one compartment per sample.
    fn travelling(n: usize, dt: f64) -> APTrace {
        let steps = n + 40;
        let time: Vec<f64> = (0..steps).map(|s| s as f64 * dt).collect();
        let mut v = Vec::with_capacity(steps * n);
        for s in 0..steps {
            for i in 0..n {
                let x = (s as f64 - 10.0 - i as f64) / 3.0;
                v.push(-85.0 + 110.0 * (-x * x).exp());
            }
        }
        APTrace::from_rows(meta(n, dt), time, v)
    }

    #[test]
    fn constructed_velocity() {
        let dt = 4e-6;
        let trace = travelling(200, dt);
        let u = conduction_velocity(&trace).unwrap();
        assert!((u - 1e-5 / dt).abs() / (1e-5 / dt) < 1e-9, "u = {u}");
    }

    #[test]
    fn stationary_trace_fails() {
        let n = 50;
        let time: Vec<f64> = (0..30).map(|s| s as f64 * 1e-5).collect();
        let v: Vec<f64> = (0..30).flat_map(|s| std::iter::repeat_n(if s == 10 { 10.0 } else { -85.0 }, n)).collect();
        assert!(conduction_velocity(&APTrace::from_rows(meta(n, 1e-5), time, v)).is_err());
        let flat_time: Vec<f64> = (0..30).map(|s| s as f64 * 1e-5).collect();
        let flat = APTrace::from_rows(meta(n, 1e-5), flat_time, vec![-85.0; 30 * n]);
        assert!(matches!(conduction_velocity(&flat), Err(ApAnalysisError::NoPropagation(_))));
    }

    #[test]
    fn reversed_profile_negates_axial_currents() {
        let profile = [-85.0, -60.0, 20.0, 5.0, -70.0];
        let fwd = axial_currents_of(&profile, 5e3);
        let mut rev_profile = profile;
        rev_profile.reverse();
        let rev = axial_currents_of(&rev_profile, 5e3);
        for (a, b) in fwd.iter().zip(rev.iter().rev()) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn morphology_of_synthetic_ap() {
        let dt = 1e-5;
        let time: Vec<f64> = (0..1000).map(|s| s as f64 * dt).collect();
        let v: Vec<f64> = time
            .iter()
            .map(|&t| {
                let s = t - 1e-3;
                if s < 0.0 {
                    -85.0
                } else {
                    -85.0 + 110.0 * (-(s - 1e-3).powi(2) / 1e-7).exp() - 5.0 * (-(s - 2.5e-3).powi(2) / 4e-7).exp()
                }
            })
            .collect();
        let m = ap_morphology(&time, &v, 1e-3).unwrap();
        assert!(m.is_ordered(), "{m:?}");
        assert!((m.peak_mv - 25.0).abs() < 0.1);
        assert!(m.undershoot_mv > 4.0);
        assert!(matches!(ap_morphology(&time, &vec![-85.0; 1000], 1e-3), Err(ApAnalysisError::NoAp { .. })));
    }

    #[test]
    fn csv_header_layout() {
        let trace = travelling(4, 1e-6);
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t_s,comp_0_mV,comp_1_mV,comp_2_mV,comp_3_mV\n"));
        assert_eq!(text.lines().count(), trace.n_samples() + 1);
    }
}
