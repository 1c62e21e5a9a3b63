//! Multi-compartment cable integration.
//!
//! Each step relaxes the gates exactly with rates frozen at `V^n`, then
//! solves the backward-Euler voltage update, which is linear in `V^{n+1}`
//! once the gates are fixed. Ends are sealed.

use std::f64::consts::PI;

use super::channels::{conductance_terms, step_gating, GatingParams, MembraneState, StimulusSpec};
use super::trace::{APTrace, TraceMeta};
use crate::config::SimulationGrid;

/// Limit beyond which the integration is declared unstable, mV.
pub const DIVERGENCE_MV: f64 = 500.0;

/// Everything the cable model needs besides the stimulus.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberModel {
    pub membrane: GatingParams,
    pub grid: SimulationGrid,
    pub recording_compartment: usize,
    pub record_every: usize,
    pub relax_duration: f64,
    pub relax_dt: f64,
    /// Identifies the configuration the trace came from.
    pub params_hash: String,
}

impl FiberModel {
    pub fn from_config(cfg: &crate::config::Config) -> Self {
        Self {
            membrane: cfg.membrane.clone(),
            grid: cfg.grid.clone(),
            recording_compartment: cfg.solver.recording_compartment,
            record_every: cfg.solver.record_every,
            relax_duration: cfg.solver.relax_duration,
            relax_dt: cfg.solver.relax_dt,
            params_hash: cfg.hash(),
        }
    }

    fn membrane_area(&self) -> f64 {
        2.0 * PI * self.membrane.cable_radius * self.grid.compartment_length
    }

    /// Axial resistance between neighbouring compartments, Ω.
    pub fn axial_resistance(&self) -> f64 {
        self.membrane.rho_axial * self.grid.compartment_length / (PI * self.membrane.cable_radius.powi(2))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntegrationError {
    #[error("membrane potential diverged: V = {v_mv:.3e} mV at compartment {compartment}, step {step} (t = {t:.6e} s)")]
    Diverged { step: usize, t: f64, compartment: usize, v_mv: f64 },
    #[error("invalid cable setup: {0}")]
    Setup(String),
}

struct Cable<'a> {
    model: &'a FiberModel,
    v: Vec<f64>,
    gates: Vec<MembraneState>,
    diag: Vec<f64>,
    rhs: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> Cable<'a> {
    fn new(model: &'a FiberModel, v0_mv: f64) -> Self {
        let n = model.grid.n_compartments;
        Self {
            model,
            v: vec![v0_mv; n],
            gates: vec![MembraneState::steady(v0_mv, &model.membrane); n],
            diag: vec![0.0; n],
            rhs: vec![0.0; n],
            scratch: vec![0.0; n],
        }
    }

    /// Advance one step of length `dt` ending at time `t_next`.
    fn step(&mut self, dt: f64, t_next: f64, stimulus: Option<&StimulusSpec>) {
        let m = self.model;
        let n = self.v.len();
        let area = m.membrane_area();
        let cap = m.membrane.c_m * area / dt;
        let g_ax = 1.0 / m.axial_resistance();
        for i in 0..n {
            self.gates[i] = step_gating(&self.gates[i], self.v[i], dt, &m.membrane);
            let (g, driven) = conductance_terms(&self.gates[i], &m.membrane, i == m.recording_compartment);
            let neighbours = if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
            self.diag[i] = cap + area * g + neighbours * g_ax;
            self.rhs[i] = cap * self.v[i] * 1e-3 + area * driven;
        }
        if let Some(stim) = stimulus {
            let g_syn = stim.conductance(t_next);
            self.diag[stim.endplate] += g_syn;
            self.rhs[stim.endplate] += g_syn * stim.e_syn;
        }
        solve_symmetric_tridiagonal(&self.diag, -g_ax, &mut self.rhs, &mut self.scratch);
        for (v, x) in self.v.iter_mut().zip(&self.rhs) {
            *v = x * 1e3;
        }
    }

    fn check(&self, step: usize, t: f64) -> Result<(), IntegrationError> {
        match self.v.iter().position(|v| !(v.abs() <= DIVERGENCE_MV)) {
            None => Ok(()),
            Some(i) => Err(IntegrationError::Diverged { step, t, compartment: i, v_mv: self.v[i] }),
        }
    }
}

/// Thomas algorithm for a tridiagonal matrix with constant off-diagonal
/// `off`. The solution overwrites `rhs`.
fn solve_symmetric_tridiagonal(diag: &[f64], off: f64, rhs: &mut [f64], c_prime: &mut [f64]) {
    let n = diag.len();
    c_prime[0] = off / diag[0];
    rhs[0] /= diag[0];
    for i in 1..n {
        let denom = diag[i] - off * c_prime[i - 1];
        c_prime[i] = off / denom;
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c_prime[i] * rhs[i + 1];
    }
}

/// Integrate the cable equation over `grid.duration`.
///
/// The fiber is first relaxed without stimulus for `relax_duration`, after
/// which the gates are reset to their steady state at the relaxed voltage.
pub fn simulate_fiber(model: &FiberModel, stimulus: &StimulusSpec) -> Result<APTrace, IntegrationError> {
    let grid = &model.grid;
    let n = grid.n_compartments;
    let problems: Vec<String> = grid.invalid_fields().iter().map(|s| s.to_string()).collect();
    if !problems.is_empty() {
        return Err(IntegrationError::Setup(format!("grid fields {problems:?} invalid")));
    }
    if stimulus.endplate >= n || model.recording_compartment >= n {
        return Err(IntegrationError::Setup("endplate and recording compartment must lie on the fiber".into()));
    }
    let bad_membrane = model.membrane.invalid_fields();
    if !bad_membrane.is_empty() {
        return Err(IntegrationError::Setup(format!("membrane fields {bad_membrane:?} invalid")));
    }
    if model.record_every == 0 || !(model.relax_dt > 0.0) {
        return Err(IntegrationError::Setup("record_every and relax_dt must be positive".into()));
    }

    let mut cable = Cable::new(model, model.membrane.e_leak * 1e3);
    let relax_steps = (model.relax_duration / model.relax_dt).round() as usize;
    for s in 0..relax_steps {
        cable.step(model.relax_dt, 0.0, None);
        cable.check(s, 0.0)?;
    }
    for i in 0..n {
        cable.gates[i] = MembraneState::steady(cable.v[i], &model.membrane);
    }

    let steps = grid.n_steps();
    let rec = model.record_every;
    let meta = TraceMeta {
        n_compartments: n,
        compartment_length: grid.compartment_length,
        dt: grid.dt,
        record_every: rec,
        endplate: stimulus.endplate,
        recording_compartment: model.recording_compartment,
        onset: stimulus.onset,
        axial_resistance: model.axial_resistance(),
        params_hash: model.params_hash.clone(),
    };
    let mut trace = APTrace::with_capacity(meta, steps / rec + 1, steps + 1);
    trace.push_sample(0.0, &cable.v);
    trace.push_probe(0.0, cable.v[model.recording_compartment]);
    for s in 1..=steps {
        let t = s as f64 * grid.dt;
        cable.step(grid.dt, t, Some(stimulus));
        cable.check(s, t)?;
        trace.push_probe(t, cable.v[model.recording_compartment]);
        if s % rec == 0 {
            trace.push_sample(t, &cable.v);
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_model(n: usize, duration: f64) -> FiberModel {
        FiberModel {
            membrane: GatingParams::default(),
            grid: SimulationGrid { n_compartments: n, duration, ..SimulationGrid::default() },
            recording_compartment: 3 * n / 4,
            record_every: 4,
            relax_duration: 0.2,
            relax_dt: 5e-5,
            params_hash: String::new(),
        }
    }

    #[test]
    fn thomas_matches_dense_product() {
        let diag = [4.0, 5.0, 6.0, 3.5];
        let off = -1.2;
        let x = [0.3, -1.0, 2.0, 0.7];
        let mut b: Vec<f64> = (0..4)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += off * x[i - 1];
                }
                if i < 3 {
                    s += off * x[i + 1];
                }
                s
            })
            .collect();
        let mut scratch = [0.0; 4];
        solve_symmetric_tridiagonal(&diag, off, &mut b, &mut scratch);
        for (got, want) in b.iter().zip(x) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn null_stimulus_holds_rest() {
        let model = small_model(120, 0.01);
        let stim = StimulusSpec::with_endplate(60).null();
        let trace = simulate_fiber(&model, &stim).unwrap();
        let rest = trace.row(0).to_vec();
        for r in 0..trace.n_samples() {
            for (v, v0) in trace.row(r).iter().zip(&rest) {
                assert!((v - v0).abs() < 0.5);
            }
        }
        assert!(rest.iter().all(|v| (-95.0..=-75.0).contains(v)));
    }

    #[test]
    fn bad_endplate_rejected() {
        let model = small_model(50, 0.001);
        assert!(matches!(simulate_fiber(&model, &StimulusSpec::with_endplate(50)), Err(IntegrationError::Setup(_))));
    }

    #[test]
    fn huge_stimulus_reports_divergence_or_stays_bounded() {
        // A large conductance with a far reversal drives V toward it but the
        // implicit update keeps it bounded by the reversal.
        let model = small_model(40, 0.002);
        let stim = StimulusSpec { g_syn_max: 1.0, e_syn: 0.4, ..StimulusSpec::with_endplate(20) };
        let trace = simulate_fiber(&model, &stim).unwrap();
        assert!(trace.v_mv().iter().all(|v| *v <= 400.0 + 1e-9));
        let runaway = StimulusSpec { g_syn_max: 1.0, e_syn: 2.0, ..StimulusSpec::with_endplate(20) };
        assert!(matches!(simulate_fiber(&model, &runaway), Err(IntegrationError::Diverged { .. })));
    }
}
