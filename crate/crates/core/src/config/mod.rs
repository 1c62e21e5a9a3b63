//! Physical parameters, grids and solver settings, loaded from TOML.
//!
//! Every quantity is stored in SI. Config files may write a plain number
//! (taken as SI) or a string with a unit suffix such as `"40um"`.

pub mod units;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::electro::{GatingParams, StimulusSpec};
use units::{Dimension, QuantityInput};

pub const MU0: f64 = 4e-7 * std::f64::consts::PI;

/// Geometry, conductivities and conduction velocity of the bundle model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub delta: f64,
    pub u: f64,
    pub sigma_i: f64,
    pub sigma_s: f64,
    pub sigma_z: f64,
    pub sigma_rho: f64,
    pub sigma_e: f64,
    pub mu0: f64,
    pub mu_r: f64,
}

/// Table 1 geometry with σ_ρ = 1 S/m and σ_e = 2 S/m.
pub fn default_params() -> PhysicalParams {
    PhysicalParams {
        a: 4.0e-5,
        b: 1.5e-4,
        c: 1.6e-4,
        d: 8.0e-5,
        delta: 1.0e-5,
        u: 3.0,
        sigma_i: 0.88,
        sigma_s: 2.0,
        sigma_z: 5.0,
        sigma_rho: 1.0,
        sigma_e: 2.0,
        mu0: MU0,
        mu_r: 1.0,
    }
}

impl PhysicalParams {
    /// Names of fields taking part in a violated invariant.
    pub fn invalid_fields(&self) -> Vec<&'static str> {
        let mut bad = Vec::new();
        let mut flag = |names: &[&'static str]| {
            for n in names {
                if !bad.contains(n) {
                    bad.push(*n);
                }
            }
        };
        let all = [
            self.a,
            self.b,
            self.c,
            self.d,
            self.delta,
            self.u,
            self.sigma_i,
            self.sigma_s,
            self.sigma_z,
            self.sigma_rho,
            self.sigma_e,
            self.mu0,
            self.mu_r,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            flag(&["non-finite value"]);
        }
        if !(self.a > 0.0) {
            flag(&["a"]);
        }
        if !(self.d >= 0.0) {
            flag(&["d"]);
        }
        if !(self.a + self.d <= self.b) {
            flag(&["a", "d", "b"]);
        }
        if !(self.b < self.c) {
            flag(&["b", "c"]);
        }
        if !(self.delta > 0.0) || (self.delta - (self.c - self.b)).abs() > 1e-9 * self.c.abs().max(1e-12) {
            flag(&["delta", "b", "c"]);
        }
        for (name, v) in [
            ("sigma_i", self.sigma_i),
            ("sigma_s", self.sigma_s),
            ("sigma_z", self.sigma_z),
            ("sigma_rho", self.sigma_rho),
            ("sigma_e", self.sigma_e),
            ("u", self.u),
            ("mu0", self.mu0),
            ("mu_r", self.mu_r),
        ] {
            if !(v > 0.0) {
                flag(&[name]);
            }
        }
        bad
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = self.invalid_fields();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::invalid(
                bad,
                "physical parameters violate 0 < a, a + d <= b < c, delta = c - b, positive conductivities",
            ))
        }
    }

    /// Total permeability µ0·µr.
    pub fn mu(&self) -> f64 {
        self.mu0 * self.mu_r
    }

    /// √(σ_z/σ_ρ), the bundle's radial stretch factor.
    pub fn anisotropy(&self) -> f64 {
        (self.sigma_z / self.sigma_rho).sqrt()
    }
}

/// Named base parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Table1,
    RothWikswoProse,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Table1 => "table1",
            Preset::RothWikswoProse => "roth-wikswo-prose",
        }
    }

    pub fn params(self) -> PhysicalParams {
        match self {
            Preset::Table1 => default_params(),
            // 50 µm fiber diameter from the methods text instead of the 40 µm table radius.
            Preset::RothWikswoProse => PhysicalParams { a: 2.5e-5, ..default_params() },
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table1" => Ok(Preset::Table1),
            "roth-wikswo-prose" => Ok(Preset::RothWikswoProse),
            other => Err(format!("unknown preset {other:?}; expected \"table1\" or \"roth-wikswo-prose\"")),
        }
    }
}

/// A point outside the bundle, in bundle-centred and fiber-centred
/// cylindrical coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPoint {
    pub rho: f64,
    pub theta: f64,
    pub rho_primed: f64,
    pub theta_primed: f64,
    pub z: f64,
}

impl FieldPoint {
    /// Build from bundle-centred coordinates for a fiber centred at `(d, 0)`.
    pub fn new(rho: f64, theta: f64, z: f64, d: f64) -> Self {
        let x = rho * theta.cos() - d;
        let y = rho * theta.sin();
        Self { rho, theta, rho_primed: x.hypot(y), theta_primed: y.atan2(x), z }
    }

    /// Law-of-cosines consistency between the two frames.
    pub fn is_consistent(&self, d: f64) -> bool {
        let expected = (self.rho * self.rho + d * d - 2.0 * self.rho * d * self.theta.cos()).max(0.0).sqrt();
        (expected - self.rho_primed).abs() <= 1e-12 * self.rho.max(d).max(1e-30)
    }
}

/// Axial sampling of the field solver and time stepping of the cable model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationGrid {
    pub n_z: usize,
    pub length_z: f64,
    pub n_compartments: usize,
    pub compartment_length: f64,
    pub dt: f64,
    pub duration: f64,
}

impl Default for SimulationGrid {
    fn default() -> Self {
        Self { n_z: 4096, length_z: 0.04, n_compartments: 1200, compartment_length: 1e-5, dt: 5e-6, duration: 0.03 }
    }
}

impl SimulationGrid {
    pub fn dz(&self) -> f64 {
        self.length_z / self.n_z as f64
    }

    pub fn n_steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn invalid_fields(&self) -> Vec<&'static str> {
        let mut bad = Vec::new();
        if self.n_z < 4 || !self.n_z.is_power_of_two() {
            bad.push("n_z");
        }
        if !(self.length_z > 0.0 && self.length_z.is_finite()) {
            bad.push("length_z");
        }
        if self.n_compartments < 3 {
            bad.push("n_compartments");
        }
        if !(self.compartment_length > 0.0) {
            bad.push("compartment_length");
        }
        if self.length_z > 0.0 && self.compartment_length > 0.0 && self.dz() > self.compartment_length * (1.0 + 1e-12) {
            bad.extend(["length_z", "n_z", "compartment_length"]);
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            bad.push("dt");
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            bad.push("duration");
        }
        bad.dedup();
        bad
    }
}

/// Where the AP waveform fed to the field solver comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApSource {
    Simulated,
    AnalyticTemplate,
}

impl std::str::FromStr for ApSource {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "simulated" => Ok(ApSource::Simulated),
            "analytic-template" => Ok(ApSource::AnalyticTemplate),
            other => Err(format!("unknown AP source {other:?}; expected \"simulated\" or \"analytic-template\"")),
        }
    }
}

impl ApSource {
    pub fn name(self) -> &'static str {
        match self {
            ApSource::Simulated => "simulated",
            ApSource::AnalyticTemplate => "analytic-template",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Azimuthal mode cutoff M.
    pub modes: usize,
    /// Distance of the evaluation point outside the sheath, m.
    pub eval_distance: f64,
    /// Compartment carrying the pipette leak and used as field source.
    pub recording_compartment: usize,
    pub record_every: usize,
    pub relax_duration: f64,
    pub relax_dt: f64,
    pub ap_source: ApSource,
}

impl SolverSettings {
    fn defaults_for(n_compartments: usize) -> Self {
        Self {
            modes: 6,
            eval_distance: 3e-5,
            recording_compartment: 3 * n_compartments / 4,
            record_every: 4,
            relax_duration: 0.2,
            relax_dt: 5e-5,
            ap_source: ApSource::Simulated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DspSettings {
    pub f_lo: f64,
    pub f_hi: f64,
    pub order: usize,
    pub stft_window: usize,
    pub stft_hop: usize,
    pub welch_segment: usize,
    pub welch_overlap: f64,
}

impl Default for DspSettings {
    fn default() -> Self {
        Self { f_lo: 30.0, f_hi: 300.0, order: 4, stft_window: 256, stft_hop: 64, welch_segment: 1024, welch_overlap: 0.5 }
    }
}

/// Fully resolved and validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub preset: Preset,
    pub params: PhysicalParams,
    pub membrane: GatingParams,
    pub stimulus: StimulusSpec,
    pub grid: SimulationGrid,
    pub solver: SolverSettings,
    pub dsp: DspSettings,
}

impl Default for Config {
    fn default() -> Self {
        let grid = SimulationGrid::default();
        Self {
            preset: Preset::Table1,
            params: default_params(),
            membrane: GatingParams::default(),
            stimulus: StimulusSpec::with_endplate(grid.n_compartments / 2),
            solver: SolverSettings::defaults_for(grid.n_compartments),
            grid,
            dsp: DspSettings::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid config ({}): {message}", fields.join(", "))]
    Invalid { fields: Vec<String>, message: String },
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl ConfigError {
    fn invalid(fields: Vec<&str>, message: impl Into<String>) -> Self {
        ConfigError::Invalid { fields: fields.into_iter().map(String::from).collect(), message: message.into() }
    }
}

type Q = Option<QuantityInput>;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<String>,
    #[serde(default)]
    geometry: RawGeometry,
    #[serde(default)]
    conductivities: RawConductivities,
    #[serde(default)]
    propagation: RawPropagation,
    #[serde(default)]
    membrane: RawMembrane,
    #[serde(default)]
    stimulus: RawStimulus,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    dsp: RawDsp,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    a: Q,
    b: Q,
    c: Q,
    d: Q,
    delta: Q,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConductivities {
    sigma_i: Q,
    sigma_s: Q,
    sigma_z: Q,
    sigma_rho: Q,
    sigma_e: Q,
    mu_r: Q,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPropagation {
    u: Q,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMembrane {
    c_m: Q,
    rho_axial: Q,
    cable_radius: Q,
    g_kir: Q,
    tau_kir: Q,
    e_k: Q,
    g_leak: Q,
    e_leak: Q,
    g_na: Q,
    e_na: Q,
    na_m_half: Q,
    na_m_slope: Q,
    g_k_tea: Q,
    g_k_4ap: Q,
    g_pipette: Q,
    e_pipette: Q,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStimulus {
    g_syn_max: Q,
    tau_syn: Q,
    e_syn: Q,
    onset: Q,
    endplate: Option<i64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n_z: Option<i64>,
    length_z: Q,
    n_compartments: Option<i64>,
    compartment_length: Q,
    dt: Q,
    duration: Q,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    modes: Option<i64>,
    eval_distance: Q,
    recording_compartment: Option<i64>,
    record_every: Option<i64>,
    relax_duration: Q,
    relax_dt: Q,
    ap_source: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDsp {
    f_lo: Q,
    f_hi: Q,
    order: Option<i64>,
    stft_window: Option<i64>,
    stft_hop: Option<i64>,
    welch_segment: Option<i64>,
    welch_overlap: Q,
}

struct Resolver {
    bad: Vec<String>,
    messages: Vec<String>,
}

impl Resolver {
    fn q(&mut self, key: &str, raw: &Q, dim: Dimension, default: f64) -> f64 {
        match raw {
            None => default,
            Some(q) => match q.to_si(dim) {
                Ok(v) => v,
                Err(e) => {
                    self.bad.push(key.to_string());
                    self.messages.push(e);
                    default
                }
            },
        }
    }

    fn count(&mut self, key: &str, raw: Option<i64>, default: usize) -> usize {
        match raw {
            None => default,
            Some(v) if v >= 0 => v as usize,
            Some(v) => {
                self.bad.push(key.to_string());
                self.messages.push(format!("{key} must be non-negative, got {v}"));
                default
            }
        }
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
    (line, column)
}

/// Parse config text. Omitted keys take their defaults.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map(|s| line_column(text, s.start)).unwrap_or((0, 0));
        ConfigError::Parse { line, column, message: e.message().to_string() }
    })?;
    resolve(raw)
}

/// Read and parse a config file.
pub fn load_config(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_config(&text)
}

/// Parse config text after applying `section.key = value` overrides.
/// Values that are not valid TOML literals are taken as strings, so
/// `geometry.a=40um` works without quoting.
pub fn parse_config_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Config, ConfigError> {
    if overrides.is_empty() {
        return parse_config(text);
    }
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        let (line, column) = e.span().map(|s| line_column(text, s.start)).unwrap_or((0, 0));
        ConfigError::Parse { line, column, message: e.message().to_string() }
    })?;
    for (key, value) in overrides {
        apply_override(&mut table, key, value)?;
    }
    let rendered = toml::to_string(&table).expect("a toml table always serialises");
    parse_config(&rendered).map_err(|e| match e {
        ConfigError::Parse { message, .. } => ConfigError::Invalid {
            fields: overrides.iter().map(|(k, _)| k.clone()).collect(),
            message: format!("override rejected: {message}"),
        },
        other => other,
    })
}

fn apply_override(table: &mut toml::Table, key: &str, value: &str) -> Result<(), ConfigError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) || parts.len() > 2 {
        return Err(ConfigError::invalid(vec![key], "override keys look like section.key or preset"));
    }
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    if parts.len() == 1 {
        table.insert(parts[0].to_string(), parsed);
        return Ok(());
    }
    let section = table.entry(parts[0].to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    match section.as_table_mut() {
        Some(t) => {
            t.insert(parts[1].to_string(), parsed);
            Ok(())
        }
        None => Err(ConfigError::invalid(vec![parts[0]], "override target is not a section")),
    }
}

fn resolve(raw: RawConfig) -> Result<Config, ConfigError> {
    let mut r = Resolver { bad: Vec::new(), messages: Vec::new() };
    let preset = match raw.preset.as_deref() {
        None => Preset::Table1,
        Some(s) => s.parse().unwrap_or_else(|e| {
            r.bad.push("preset".into());
            r.messages.push(e);
            Preset::Table1
        }),
    };
    let base = preset.params();
    let g = &raw.geometry;
    let a = r.q("geometry.a", &g.a, Dimension::Length, base.a);
    let b = r.q("geometry.b", &g.b, Dimension::Length, base.b);
    let d = r.q("geometry.d", &g.d, Dimension::Length, base.d);
    // c and delta are tied by c = b + delta; either may be given.
    let (c, delta) = match (&g.c, &g.delta) {
        (Some(_), Some(_)) => {
            (r.q("geometry.c", &g.c, Dimension::Length, base.c), r.q("geometry.delta", &g.delta, Dimension::Length, base.delta))
        }
        (Some(_), None) => {
            let c = r.q("geometry.c", &g.c, Dimension::Length, base.c);
            (c, c - b)
        }
        (None, Some(_)) => {
            let delta = r.q("geometry.delta", &g.delta, Dimension::Length, base.delta);
            (b + delta, delta)
        }
        (None, None) if g.b.is_none() => (base.c, base.delta),
        (None, None) => (b + base.delta, base.delta),
    };
    let k = &raw.conductivities;
    let params = PhysicalParams {
        a,
        b,
        c,
        d,
        delta,
        u: r.q("propagation.u", &raw.propagation.u, Dimension::Velocity, base.u),
        sigma_i: r.q("conductivities.sigma_i", &k.sigma_i, Dimension::Conductivity, base.sigma_i),
        sigma_s: r.q("conductivities.sigma_s", &k.sigma_s, Dimension::Conductivity, base.sigma_s),
        sigma_z: r.q("conductivities.sigma_z", &k.sigma_z, Dimension::Conductivity, base.sigma_z),
        sigma_rho: r.q("conductivities.sigma_rho", &k.sigma_rho, Dimension::Conductivity, base.sigma_rho),
        sigma_e: r.q("conductivities.sigma_e", &k.sigma_e, Dimension::Conductivity, base.sigma_e),
        mu0: MU0,
        mu_r: r.q("conductivities.mu_r", &k.mu_r, Dimension::Dimensionless, base.mu_r),
    };

    let m = &raw.membrane;
    let dm = GatingParams::default();
    let membrane = GatingParams {
        c_m: r.q("membrane.c_m", &m.c_m, Dimension::SpecificCapacitance, dm.c_m),
        rho_axial: r.q("membrane.rho_axial", &m.rho_axial, Dimension::Resistivity, dm.rho_axial),
        cable_radius: r.q("membrane.cable_radius", &m.cable_radius, Dimension::Length, dm.cable_radius),
        g_kir: r.q("membrane.g_kir", &m.g_kir, Dimension::SpecificConductance, dm.g_kir),
        tau_kir: r.q("membrane.tau_kir", &m.tau_kir, Dimension::Time, dm.tau_kir),
        e_k: r.q("membrane.e_k", &m.e_k, Dimension::Voltage, dm.e_k),
        g_leak: r.q("membrane.g_leak", &m.g_leak, Dimension::SpecificConductance, dm.g_leak),
        e_leak: r.q("membrane.e_leak", &m.e_leak, Dimension::Voltage, dm.e_leak),
        g_na: r.q("membrane.g_na", &m.g_na, Dimension::SpecificConductance, dm.g_na),
        e_na: r.q("membrane.e_na", &m.e_na, Dimension::Voltage, dm.e_na),
        na_m_half: r.q("membrane.na_m_half", &m.na_m_half, Dimension::Voltage, dm.na_m_half),
        na_m_slope: r.q("membrane.na_m_slope", &m.na_m_slope, Dimension::InverseVoltage, dm.na_m_slope),
        g_k_tea: r.q("membrane.g_k_tea", &m.g_k_tea, Dimension::SpecificConductance, dm.g_k_tea),
        g_k_4ap: r.q("membrane.g_k_4ap", &m.g_k_4ap, Dimension::SpecificConductance, dm.g_k_4ap),
        g_pipette: r.q("membrane.g_pipette", &m.g_pipette, Dimension::SpecificConductance, dm.g_pipette),
        e_pipette: r.q("membrane.e_pipette", &m.e_pipette, Dimension::Voltage, dm.e_pipette),
    };

    let gr = &raw.grid;
    let dg = SimulationGrid::default();
    let grid = SimulationGrid {
        n_z: r.count("grid.n_z", gr.n_z, dg.n_z),
        length_z: r.q("grid.length_z", &gr.length_z, Dimension::Length, dg.length_z),
        n_compartments: r.count("grid.n_compartments", gr.n_compartments, dg.n_compartments),
        compartment_length: r.q("grid.compartment_length", &gr.compartment_length, Dimension::Length, dg.compartment_length),
        dt: r.q("grid.dt", &gr.dt, Dimension::Time, dg.dt),
        duration: r.q("grid.duration", &gr.duration, Dimension::Time, dg.duration),
    };

    let s = &raw.stimulus;
    let ds = StimulusSpec::with_endplate(grid.n_compartments / 2);
    let stimulus = StimulusSpec {
        g_syn_max: r.q("stimulus.g_syn_max", &s.g_syn_max, Dimension::Conductance, ds.g_syn_max),
        tau_syn: r.q("stimulus.tau_syn", &s.tau_syn, Dimension::Time, ds.tau_syn),
        e_syn: r.q("stimulus.e_syn", &s.e_syn, Dimension::Voltage, ds.e_syn),
        onset: r.q("stimulus.onset", &s.onset, Dimension::Time, ds.onset),
        endplate: r.count("stimulus.endplate", s.endplate, ds.endplate),
    };

    let sv = &raw.solver;
    let dsv = SolverSettings::defaults_for(grid.n_compartments);
    let solver = SolverSettings {
        modes: r.count("solver.modes", sv.modes, dsv.modes),
        eval_distance: r.q("solver.eval_distance", &sv.eval_distance, Dimension::Length, dsv.eval_distance),
        recording_compartment: r.count("solver.recording_compartment", sv.recording_compartment, dsv.recording_compartment),
        record_every: r.count("solver.record_every", sv.record_every, dsv.record_every),
        relax_duration: r.q("solver.relax_duration", &sv.relax_duration, Dimension::Time, dsv.relax_duration),
        relax_dt: r.q("solver.relax_dt", &sv.relax_dt, Dimension::Time, dsv.relax_dt),
        ap_source: match sv.ap_source.as_deref() {
            None => dsv.ap_source,
            Some(text) => text.parse().unwrap_or_else(|e| {
                r.bad.push("solver.ap_source".into());
                r.messages.push(e);
                dsv.ap_source
            }),
        },
    };

    let dp = &raw.dsp;
    let dd = DspSettings::default();
    let dsp = DspSettings {
        f_lo: r.q("dsp.f_lo", &dp.f_lo, Dimension::Frequency, dd.f_lo),
        f_hi: r.q("dsp.f_hi", &dp.f_hi, Dimension::Frequency, dd.f_hi),
        order: r.count("dsp.order", dp.order, dd.order),
        stft_window: r.count("dsp.stft_window", dp.stft_window, dd.stft_window),
        stft_hop: r.count("dsp.stft_hop", dp.stft_hop, dd.stft_hop),
        welch_segment: r.count("dsp.welch_segment", dp.welch_segment, dd.welch_segment),
        welch_overlap: r.q("dsp.welch_overlap", &dp.welch_overlap, Dimension::Dimensionless, dd.welch_overlap),
    };

    if !r.bad.is_empty() {
        return Err(ConfigError::Invalid { fields: r.bad, message: r.messages.join("; ") });
    }
    let config = Config { preset, params, membrane, stimulus, grid, solver, dsp };
    config.validate()?;
    Ok(config)
}

impl Config {
    /// Check every invariant, naming offending keys as `section.key`.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut bad: Vec<String> = Vec::new();
        let section = |s: &str, names: Vec<&str>| names.into_iter().map(|n| format!("{s}.{n}")).collect::<Vec<_>>();
        for name in self.params.invalid_fields() {
            let s = match name {
                "u" => "propagation",
                "a" | "b" | "c" | "d" | "delta" => "geometry",
                "non-finite value" => "params",
                _ => "conductivities",
            };
            bad.push(format!("{s}.{name}"));
        }
        bad.extend(section("membrane", self.membrane.invalid_fields()));
        bad.extend(section("grid", self.grid.invalid_fields()));
        let n = self.grid.n_compartments;
        if !(self.stimulus.g_syn_max >= 0.0) {
            bad.push("stimulus.g_syn_max".into());
        }
        if !(self.stimulus.tau_syn > 0.0) {
            bad.push("stimulus.tau_syn".into());
        }
        if !(self.stimulus.onset >= 0.0) {
            bad.push("stimulus.onset".into());
        }
        if self.stimulus.endplate >= n {
            bad.push("stimulus.endplate".into());
        }
        if self.solver.recording_compartment >= n {
            bad.push("solver.recording_compartment".into());
        }
        if self.solver.modes > crate::special::MAX_ORDER as usize / 2 {
            bad.push("solver.modes".into());
        }
        if !(self.solver.eval_distance >= 0.0) {
            bad.push("solver.eval_distance".into());
        }
        if self.solver.record_every == 0 {
            bad.push("solver.record_every".into());
        }
        if !(self.solver.relax_duration >= 0.0) {
            bad.push("solver.relax_duration".into());
        }
        if !(self.solver.relax_dt > 0.0) {
            bad.push("solver.relax_dt".into());
        }
        let dsp = &self.dsp;
        if !(dsp.f_lo > 0.0 && dsp.f_lo < dsp.f_hi) {
            bad.extend(["dsp.f_lo".to_string(), "dsp.f_hi".to_string()]);
        }
        if dsp.order == 0 || dsp.order > 16 {
            bad.push("dsp.order".into());
        }
        if dsp.stft_window < 2 {
            bad.push("dsp.stft_window".into());
        }
        if dsp.stft_hop == 0 {
            bad.push("dsp.stft_hop".into());
        }
        if dsp.welch_segment < 2 {
            bad.push("dsp.welch_segment".into());
        }
        if !(0.0..1.0).contains(&dsp.welch_overlap) {
            bad.push("dsp.welch_overlap".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            bad.dedup();
            Err(ConfigError::Invalid { fields: bad, message: "configuration violates parameter invariants".into() })
        }
    }

    /// Field evaluation radius from the bundle centre, `c + eval_distance`.
    pub fn eval_radius(&self) -> f64 {
        self.params.c + self.solver.eval_distance
    }

    /// Canonical TOML with every key written out in SI.
    pub fn to_toml_string(&self) -> String {
        let p = &self.params;
        let m = &self.membrane;
        let s = &self.stimulus;
        let g = &self.grid;
        let v = &self.solver;
        let d = &self.dsp;
        let mut out = String::new();
        let f = |x: f64| toml::Value::Float(x).to_string();
        let _ = writeln!(out, "preset = \"{}\"\n", self.preset.name());
        let _ = writeln!(out, "[geometry]");
        for (k, x) in [("a", p.a), ("b", p.b), ("c", p.c), ("d", p.d), ("delta", p.delta)] {
            let _ = writeln!(out, "{k} = {}", f(x));
        }
        let _ = writeln!(out, "\n[conductivities]");
        for (k, x) in [
            ("sigma_i", p.sigma_i),
            ("sigma_s", p.sigma_s),
            ("sigma_z", p.sigma_z),
            ("sigma_rho", p.sigma_rho),
            ("sigma_e", p.sigma_e),
            ("mu_r", p.mu_r),
        ] {
            let _ = writeln!(out, "{k} = {}", f(x));
        }
        let _ = writeln!(out, "\n[propagation]\nu = {}", f(p.u));
        let _ = writeln!(out, "\n[membrane]");
        for (k, x) in [
            ("c_m", m.c_m),
            ("rho_axial", m.rho_axial),
            ("cable_radius", m.cable_radius),
            ("g_kir", m.g_kir),
            ("tau_kir", m.tau_kir),
            ("e_k", m.e_k),
            ("g_leak", m.g_leak),
            ("e_leak", m.e_leak),
            ("g_na", m.g_na),
            ("e_na", m.e_na),
            ("na_m_half", m.na_m_half),
            ("na_m_slope", m.na_m_slope),
            ("g_k_tea", m.g_k_tea),
            ("g_k_4ap", m.g_k_4ap),
            ("g_pipette", m.g_pipette),
            ("e_pipette", m.e_pipette),
        ] {
            let _ = writeln!(out, "{k} = {}", f(x));
        }
        let _ = writeln!(out, "\n[stimulus]");
        for (k, x) in [("g_syn_max", s.g_syn_max), ("tau_syn", s.tau_syn), ("e_syn", s.e_syn), ("onset", s.onset)] {
            let _ = writeln!(out, "{k} = {}", f(x));
        }
        let _ = writeln!(out, "endplate = {}", s.endplate);
        let _ = writeln!(out, "\n[grid]\nn_z = {}\nlength_z = {}", g.n_z, f(g.length_z));
        let _ = writeln!(out, "n_compartments = {}\ncompartment_length = {}", g.n_compartments, f(g.compartment_length));
        let _ = writeln!(out, "dt = {}\nduration = {}", f(g.dt), f(g.duration));
        let _ = writeln!(out, "\n[solver]\nmodes = {}\neval_distance = {}", v.modes, f(v.eval_distance));
        let _ = writeln!(out, "recording_compartment = {}\nrecord_every = {}", v.recording_compartment, v.record_every);
        let _ = writeln!(out, "relax_duration = {}\nrelax_dt = {}", f(v.relax_duration), f(v.relax_dt));
        let _ = writeln!(out, "ap_source = \"{}\"", v.ap_source.name());
        let _ = writeln!(out, "\n[dsp]\nf_lo = {}\nf_hi = {}\norder = {}", f(d.f_lo), f(d.f_hi), d.order);
        let _ = writeln!(out, "stft_window = {}\nstft_hop = {}", d.stft_window, d.stft_hop);
        let _ = writeln!(out, "welch_segment = {}\nwelch_overlap = {}", d.welch_segment, f(d.welch_overlap));
        out
    }

    /// SHA-256 of the canonical TOML, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table1_defaults() {
        let p = default_params();
        assert_eq!(p.a, 4.0e-5);
        assert_eq!(p.u, 3.0);
        assert!((p.c - p.b - p.delta).abs() < 1e-18);
        assert!(p.invalid_fields().is_empty());
        assert!(Preset::RothWikswoProse.params().invalid_fields().is_empty());
    }

    #[test]
    fn empty_file_is_all_defaults() {
        assert_eq!(parse_config("").unwrap(), Config::default());
    }

    #[test]
    fn isotropic_bundle_from_file() {
        let cfg = parse_config("[conductivities]\nsigma_rho = 5.0\n").unwrap();
        assert_eq!(cfg.params.sigma_z / cfg.params.sigma_rho, 1.0);
    }

    #[test]
    fn unit_suffixes_accepted() {
        let cfg = parse_config("[geometry]\na = \"25um\"\n[grid]\nduration = \"20 ms\"\n").unwrap();
        assert!((cfg.params.a - 2.5e-5).abs() < 1e-18);
        assert!((cfg.grid.duration - 0.02).abs() < 1e-15);
    }

    #[test]
    fn b_beyond_c_names_both() {
        let err = parse_config("[geometry]\nb = 2e-4\nc = 1.6e-4\n").unwrap_err();
        match err {
            ConfigError::Invalid { fields, .. } => {
                assert!(fields.contains(&"geometry.b".to_string()));
                assert!(fields.contains(&"geometry.c".to_string()));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = parse_config("[geometry]\na = 4e-5\nradius = 3\n").unwrap_err();
        match err {
            ConfigError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn inconsistent_delta_rejected() {
        assert!(parse_config("[geometry]\nc = 1.6e-4\ndelta = 2e-5\n").is_err());
        let cfg = parse_config("[geometry]\ndelta = \"20um\"\n").unwrap();
        assert!((cfg.params.c - 1.7e-4).abs() < 1e-15);
    }

    #[test]
    fn overrides_apply() {
        let overrides = vec![
            ("stimulus.g_syn_max".to_string(), "0.1uS".to_string()),
            ("grid.n_z".to_string(), "8192".to_string()),
            ("preset".to_string(), "roth-wikswo-prose".to_string()),
        ];
        let cfg = parse_config_with_overrides("", &overrides).unwrap();
        assert!((cfg.stimulus.g_syn_max - 1e-7).abs() < 1e-20);
        assert_eq!(cfg.grid.n_z, 8192);
        assert_eq!(cfg.params.a, 2.5e-5);
        let bad = parse_config_with_overrides("", &[("grid.duration".into(), "0".into())]).unwrap_err();
        assert!(matches!(bad, ConfigError::Invalid { ref fields, .. } if fields == &["grid.duration"]));
    }

    #[test]
    fn serialised_config_round_trips() {
        let cfg = parse_config("[geometry]\na = \"33.3um\"\n[conductivities]\nsigma_rho = 0.7\n").unwrap();
        let again = parse_config(&cfg.to_toml_string()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.hash(), cfg.hash());
        assert_ne!(Config::default().hash(), cfg.hash());
    }

    #[test]
    fn field_point_frames() {
        let d = 8e-5;
        let p = FieldPoint::new(1.9e-4, 0.0, 0.0, d);
        assert!((p.rho_primed - 1.1e-4).abs() < 1e-18);
        assert!(p.is_consistent(d));
        let q = FieldPoint::new(1.9e-4, 2.0, 0.0, d);
        assert!(q.is_consistent(d));
        assert!(q.rho_primed > q.rho);
    }

    #[test]
    fn grid_invariants() {
        assert!(SimulationGrid::default().invalid_fields().is_empty());
        let g = SimulationGrid { n_z: 3000, ..SimulationGrid::default() };
        assert!(g.invalid_fields().contains(&"n_z"));
        let g = SimulationGrid { n_z: 1024, ..SimulationGrid::default() };
        assert!(g.invalid_fields().contains(&"compartment_length"));
    }
}
