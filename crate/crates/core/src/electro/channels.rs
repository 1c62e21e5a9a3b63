//! Ionic channel kinetics of the soleus fiber membrane.
//!
//! Steady-state curves and time constants take the membrane potential in mV
//! and return dimensionless gates / milliseconds, which is how the fitted
//! expressions are written. Everything stored in [`GatingParams`] is SI.

use serde::{Deserialize, Serialize};

/// Gating variables of the membrane model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    /// Inward rectifier activation `m`.
    Kir,
    /// Sodium activation `m` (cubed in the current).
    NaM,
    /// Sodium inactivation `h`.
    NaH,
    /// TEA-sensitive delayed rectifier `n`.
    KTea,
    /// 4AP-sensitive delayed rectifier `n`.
    K4ap,
}

impl Channel {
    pub const ALL: [Channel; 5] = [Channel::Kir, Channel::NaM, Channel::NaH, Channel::KTea, Channel::K4ap];
}

/// Conductances, reversal potentials and passive cable constants (SI).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatingParams {
    /// Membrane capacitance, F/m².
    pub c_m: f64,
    /// Axial (cytoplasmic) resistivity, Ω·m.
    pub rho_axial: f64,
    /// Radius of the compartmental cable, m.
    pub cable_radius: f64,
    pub g_kir: f64,
    /// Kir activation time constant, s.
    pub tau_kir: f64,
    pub e_k: f64,
    pub g_leak: f64,
    pub e_leak: f64,
    pub g_na: f64,
    pub e_na: f64,
    /// Half-activation of the assumed Na `m∞` Boltzmann curve, V.
    pub na_m_half: f64,
    /// Slope of the assumed Na `m∞` curve, 1/V.
    pub na_m_slope: f64,
    pub g_k_tea: f64,
    pub g_k_4ap: f64,
    pub g_pipette: f64,
    pub e_pipette: f64,
}

impl Default for GatingParams {
    fn default() -> Self {
        Self {
            c_m: 1e-2,
            rho_axial: 1.0,
            cable_radius: 2.5e-5,
            g_kir: 6.0,
            tau_kir: 0.2e-3,
            e_k: -90e-3,
            g_leak: 2.0,
            e_leak: -90e-3,
            g_na: 280.0,
            e_na: 50e-3,
            na_m_half: -40e-3,
            na_m_slope: 100.0,
            g_k_tea: 200.0,
            g_k_4ap: 2000.0,
            g_pipette: 0.43,
            e_pipette: 0.0,
        }
    }
}

impl GatingParams {
    /// Names of fields violating `conductance >= 0`, `c_m > 0`, `rho_axial > 0`.
    pub fn invalid_fields(&self) -> Vec<&'static str> {
        let mut bad = Vec::new();
        let nonneg = [
            ("g_kir", self.g_kir),
            ("g_leak", self.g_leak),
            ("g_na", self.g_na),
            ("g_k_tea", self.g_k_tea),
            ("g_k_4ap", self.g_k_4ap),
            ("g_pipette", self.g_pipette),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                bad.push(name);
            }
        }
        for (name, v) in [
            ("c_m", self.c_m),
            ("rho_axial", self.rho_axial),
            ("cable_radius", self.cable_radius),
            ("tau_kir", self.tau_kir),
            ("na_m_slope", self.na_m_slope),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                bad.push(name);
            }
        }
        bad
    }
}

fn boltzmann(exponent: f64) -> f64 {
    1.0 / (1.0 + exponent.exp())
}

/// Steady-state value of a gate at `v_mv`.
pub fn gating_steady_state(channel: Channel, v_mv: f64, params: &GatingParams) -> f64 {
    match channel {
        Channel::Kir => boltzmann(-0.074 * (-91.6 - v_mv)),
        Channel::NaM => {
            let half_mv = params.na_m_half * 1e3;
            let slope_per_mv = params.na_m_slope * 1e-3;
            boltzmann(-slope_per_mv * (v_mv - half_mv))
        }
        Channel::NaH => boltzmann(-0.8 * (-50.0 - v_mv)),
        Channel::KTea => boltzmann(0.06 * (-30.0 - v_mv)),
        Channel::K4ap => boltzmann(0.08 * (-36.0 - v_mv)),
    }
}

/// Relaxation time constant of a gate at `v_mv`, in milliseconds.
pub fn gating_time_constant(channel: Channel, v_mv: f64, params: &GatingParams) -> f64 {
    match channel {
        Channel::Kir => params.tau_kir * 1e3,
        Channel::NaM => 0.12 * (-0.01354 * (v_mv + 55.0)).exp(),
        Channel::NaH => 0.48 * (-0.01252 * (v_mv + 22.0)).exp(),
        Channel::KTea => 1.6 * (-0.005 * (v_mv + 20.0)).exp(),
        Channel::K4ap => 1.6 * (-0.0193 * (v_mv - 79.0)).exp(),
    }
}

/// Gate values of one compartment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembraneState {
    pub m_kir: f64,
    pub m_na: f64,
    pub h_na: f64,
    pub n_tea: f64,
    pub n_4ap: f64,
}

impl MembraneState {
    /// All gates at their steady state for `v_mv`.
    pub fn steady(v_mv: f64, params: &GatingParams) -> Self {
        Self {
            m_kir: gating_steady_state(Channel::Kir, v_mv, params),
            m_na: gating_steady_state(Channel::NaM, v_mv, params),
            h_na: gating_steady_state(Channel::NaH, v_mv, params),
            n_tea: gating_steady_state(Channel::KTea, v_mv, params),
            n_4ap: gating_steady_state(Channel::K4ap, v_mv, params),
        }
    }

    pub fn gate(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Kir => self.m_kir,
            Channel::NaM => self.m_na,
            Channel::NaH => self.h_na,
            Channel::KTea => self.n_tea,
            Channel::K4ap => self.n_4ap,
        }
    }

    fn gate_mut(&mut self, channel: Channel) -> &mut f64 {
        match channel {
            Channel::Kir => &mut self.m_kir,
            Channel::NaM => &mut self.m_na,
            Channel::NaH => &mut self.h_na,
            Channel::KTea => &mut self.n_tea,
            Channel::K4ap => &mut self.n_4ap,
        }
    }

    pub fn is_valid(&self) -> bool {
        Channel::ALL.iter().all(|&c| (0.0..=1.0).contains(&self.gate(c)))
    }
}

/// Exact exponential relaxation of every gate over `dt` seconds with the
/// rates frozen at `v_mv`.
pub fn step_gating(state: &MembraneState, v_mv: f64, dt: f64, params: &GatingParams) -> MembraneState {
    let dt_ms = dt * 1e3;
    let mut next = *state;
    for channel in Channel::ALL {
        let inf = gating_steady_state(channel, v_mv, params);
        let tau = gating_time_constant(channel, v_mv, params);
        let decay = (-dt_ms / tau).exp();
        let g = next.gate_mut(channel);
        *g = (inf - (inf - *g) * decay).clamp(0.0, 1.0);
    }
    next
}

/// Outward-positive ionic current densities, A/m².
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CurrentDensities {
    pub na: f64,
    pub k_tea: f64,
    pub k_4ap: f64,
    pub kir: f64,
    pub leak: f64,
    pub pipette: f64,
}

impl CurrentDensities {
    pub fn total(&self) -> f64 {
        self.na + self.k_tea + self.k_4ap + self.kir + self.leak + self.pipette
    }
}

/// Conductance densities (S/m²) and the conductance-weighted reversal sum
/// (A/m²) for the linear implicit voltage update.
pub(crate) fn conductance_terms(state: &MembraneState, params: &GatingParams, with_pipette: bool) -> (f64, f64) {
    let g_na = params.g_na * state.m_na.powi(3) * state.h_na;
    let g_tea = params.g_k_tea * state.n_tea.powi(4);
    let g_4ap = params.g_k_4ap * state.n_4ap.powi(4);
    let g_kir = params.g_kir * state.m_kir;
    let g_pip = if with_pipette { params.g_pipette } else { 0.0 };
    let g_total = g_na + g_tea + g_4ap + g_kir + params.g_leak + g_pip;
    let driven =
        g_na * params.e_na + (g_tea + g_4ap + g_kir) * params.e_k + params.g_leak * params.e_leak + g_pip * params.e_pipette;
    (g_total, driven)
}

/// Per-channel current densities at `v_mv`. The pipette leak only exists at
/// the recording compartment.
pub fn ionic_current_density(state: &MembraneState, v_mv: f64, params: &GatingParams, with_pipette: bool) -> CurrentDensities {
    let v = v_mv * 1e-3;
    CurrentDensities {
        na: params.g_na * state.m_na.powi(3) * state.h_na * (v - params.e_na),
        k_tea: params.g_k_tea * state.n_tea.powi(4) * (v - params.e_k),
        k_4ap: params.g_k_4ap * state.n_4ap.powi(4) * (v - params.e_k),
        kir: params.g_kir * state.m_kir * (v - params.e_k),
        leak: params.g_leak * (v - params.e_leak),
        pipette: if with_pipette { params.g_pipette * (v - params.e_pipette) } else { 0.0 },
    }
}

/// Synaptic drive at the endplate: `g(t) = g_max exp(-(t - onset)/τ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusSpec {
    /// Peak synaptic conductance, S.
    pub g_syn_max: f64,
    /// Decay time constant, s.
    pub tau_syn: f64,
    /// Synaptic reversal potential, V.
    pub e_syn: f64,
    /// Onset time, s.
    pub onset: f64,
    /// Endplate compartment index.
    pub endplate: usize,
}

impl StimulusSpec {
    pub fn with_endplate(endplate: usize) -> Self {
        Self { g_syn_max: 10e-6, tau_syn: 0.58e-3, e_syn: 0.0, onset: 1e-3, endplate }
    }

    /// Same stimulus with no conductance.
    pub fn null(&self) -> Self {
        Self { g_syn_max: 0.0, ..self.clone() }
    }

    /// Conductance `t` seconds into the simulation (zero before onset), S.
    pub fn conductance(&self, t: f64) -> f64 {
        if t < self.onset {
            0.0
        } else {
            self.g_syn_max * (-(t - self.onset) / self.tau_syn).exp()
        }
    }

    /// Synaptic current (A, outward positive) at `t` for membrane potential `v_mv`.
    pub fn current(&self, t: f64, v_mv: f64) -> f64 {
        self.conductance(t) * (v_mv * 1e-3 - self.e_syn)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("axial resistance needs positive inputs, got rho = {rho}, l = {length}, A = {area}")]
pub struct AxialResistanceError {
    pub rho: f64,
    pub length: f64,
    pub area: f64,
}

/// `R = ρ l / A`.
pub fn axial_resistance(rho: f64, length: f64, area: f64) -> Result<f64, AxialResistanceError> {
    if rho > 0.0 && length > 0.0 && area > 0.0 {
        Ok(rho * length / area)
    } else {
        Err(AxialResistanceError { rho, length, area })
    }
}

/// Axial current from compartment `i` to `i + 1` expressed as
/// `(V_{i+1} - V_i) / R_i`, volts in mV, result in A.
pub fn axial_current(v_i_mv: f64, v_next_mv: f64, r_i: f64) -> f64 {
    (v_next_mv - v_i_mv) * 1e-3 / r_i
}
