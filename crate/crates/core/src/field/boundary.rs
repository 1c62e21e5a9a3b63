//! Four-region boundary-value system for one axial wavenumber.
//!
//! Potentials (per unit membrane-potential harmonic, with `κ = |k|` and
//! `κ_b = λ|k|`, `λ = √(σ_z/σ_ρ)`):
//!
//! * fiber, `ρ' < a`: `Σ A_m I_m(κρ') e^{imθ'}`
//! * bundle: `Σ C_m K_m(κ_b ρ') e^{imθ'} + Σ B_m I_m(κ_b ρ) e^{imθ}`
//! * sheath, `b < ρ < c`: `Σ (D_m I_m(κρ) + E_m K_m(κρ)) e^{imθ}`
//! * saline, `ρ > c`: `Σ F_m K_m(κρ) e^{imθ}`
//!
//! The primed frame is centred on the fiber at `(d, 0)`. Harmonics are
//! moved between frames with Graf's addition theorem truncated at `|n| ≤ M`.
//! The source is even in θ, so `X_{−m} = X_m` and only `m = 0..=M` are
//! unknown.
//!
//! Unknowns are stored scaled by their Bessel function at the reference
//! radius of each region (`Â = A·I_m(κa)`, `B̂ = B·I_m(κ_b b)`,
//! `Ĉ = C·K_m(κ_b a)`, `D̂ = D·I_m(κc)`, `Ê = E·K_m(κb)`, `F̂ = F·K_m(κc)`),
//! which keeps every matrix entry O(1) for all k. Current rows are
//! multiplied by `radius/σ_i`.

use nalgebra::{DMatrix, DVector};

use crate::config::PhysicalParams;
use crate::special::{bessel_i_scaled_seq, bessel_k_scaled_seq, BesselError, MAX_ORDER};

/// Condition number above which a warning is logged.
pub const CONDITION_WARN: f64 = 1e8;

/// Coefficient families in the order they appear in the unknown vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl Family {
    pub const ALL: [Family; 6] = [Family::A, Family::B, Family::C, Family::D, Family::E, Family::F];

    fn offset(self) -> usize {
        self as usize
    }
}

/// Index of `family_m` in the unknown vector for cutoff `modes`.
pub fn unknown_index(family: Family, m: usize, modes: usize) -> usize {
    family.offset() * (modes + 1) + m
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoundaryError {
    #[error("boundary system at k = {k:e} rad/m is singular (condition estimate {condition:e})")]
    Singular { k: f64, condition: f64 },
    #[error("k = 0 has no boundary system; the field there is defined as zero")]
    ZeroWavenumber,
    #[error("mode cutoff {modes} needs Bessel order {needed}, above the supported {MAX_ORDER}")]
    TooManyModes { modes: usize, needed: usize },
    #[error("Bessel evaluation failed at k = {k:e} rad/m: {source}")]
    Bessel { k: f64, source: BesselError },
}

/// Scaled Bessel values needed at one |k|.
pub(crate) struct BesselTable {
    pub kabs: f64,
    pub kb: f64,
    /// `e^{-x}I_n(x)`, orders `0..=M+1` unless noted.
    pub i_ka: Vec<f64>,
    pub i_kba: Vec<f64>,
    pub i_kbb: Vec<f64>,
    pub i_kb: Vec<f64>,
    pub i_kc: Vec<f64>,
    /// Orders `0..=2M`.
    pub i_kbd: Vec<f64>,
    /// `e^{x}K_n(x)`, orders `0..=M+1`.
    pub k_kba: Vec<f64>,
    pub k_kbb: Vec<f64>,
    pub k_kb: Vec<f64>,
    pub k_kc: Vec<f64>,
}

impl BesselTable {
    pub fn new(kabs: f64, p: &PhysicalParams, modes: usize) -> Result<Self, BoundaryError> {
        if !(kabs > 0.0) {
            return Err(BoundaryError::ZeroWavenumber);
        }
        let needed = (2 * modes).max(modes + 1);
        if needed > MAX_ORDER as usize {
            return Err(BoundaryError::TooManyModes { modes, needed });
        }
        let kb = kabs * p.anisotropy();
        let top = (modes + 1) as u32;
        let wrap = |source| BoundaryError::Bessel { k: kabs, source };
        let i = |x: f64| bessel_i_scaled_seq(top, x).map_err(wrap);
        let k = |x: f64| bessel_k_scaled_seq(top, x).map_err(wrap);
        Ok(Self {
            kabs,
            kb,
            i_ka: i(kabs * p.a)?,
            i_kba: i(kb * p.a)?,
            i_kbb: i(kb * p.b)?,
            i_kb: i(kabs * p.b)?,
            i_kc: i(kabs * p.c)?,
            i_kbd: bessel_i_scaled_seq((2 * modes) as u32, kb * p.d).map_err(wrap)?,
            k_kba: k(kb * p.a)?,
            k_kbb: k(kb * p.b)?,
            k_kb: k(kabs * p.b)?,
            k_kc: k(kabs * p.c)?,
        })
    }
}

/// `x I_m'(x) / I_m(x)`-type numerators from scaled sequences: `x I_m'(x)`
/// scaled by `e^{-x}`.
fn x_ip(seq: &[f64], m: usize, x: f64) -> f64 {
    x * seq[m + 1] + m as f64 * seq[m]
}

/// `x K_m'(x)` scaled by `e^{x}`.
fn x_kp(seq: &[f64], m: usize, x: f64) -> f64 {
    m as f64 * seq[m] - x * seq[m + 1]
}

/// Dense real system `M x = r` for one |k|. The right-hand side is the
/// unit membrane-potential harmonic; the complex coefficients at a given k
/// are `φ̂(k)·x`.
#[derive(Debug, Clone)]
pub struct BoundarySystem {
    pub kabs: f64,
    pub modes: usize,
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
}

/// Build the six-conditions-per-mode system. Row `6m + j` holds condition
/// `j` for harmonic `m`: potential jump and current continuity at the
/// fiber membrane, then potential and current continuity at `b` and `c`.
pub fn assemble_boundary_system(kabs: f64, p: &PhysicalParams, modes: usize) -> Result<BoundarySystem, BoundaryError> {
    let t = BesselTable::new(kabs, p, modes)?;
    Ok(assemble_from_table(&t, p, modes))
}

pub(crate) fn assemble_from_table(t: &BesselTable, p: &PhysicalParams, modes: usize) -> BoundarySystem {
    let size = 6 * (modes + 1);
    let mut mat = DMatrix::<f64>::zeros(size, size);
    let mut rhs = DVector::<f64>::zeros(size);
    let idx = |f: Family, m: usize| unknown_index(f, m, modes);
    let (k, kb) = (t.kabs, t.kb);
    let (a, b, c, d) = (p.a, p.b, p.c, p.d);
    let s_ref = p.sigma_i;
    let (si, sr, ss, se) = (p.sigma_i / s_ref, p.sigma_rho / s_ref, p.sigma_s / s_ref, p.sigma_e / s_ref);
    // Leftover exponentials after scaling; both are ≤ 1.
    let e_frame = (kb * (d + a - b)).exp();
    let e_sheath = (k * (b - c)).exp();
    let m_max = modes as i64;

    for m in 0..=modes {
        let r = 6 * m;
        // (0) φ_i − φ_b = φ_m at ρ' = a, fiber frame.
        mat[(r, idx(Family::A, m))] = 1.0;
        mat[(r, idx(Family::C, m))] = -1.0;
        rhs[r] = if m == 0 { 1.0 } else { 0.0 };
        // (1) σ_i ∂φ_i = σ_ρ ∂φ_b at ρ' = a.
        mat[(r + 1, idx(Family::A, m))] = si * x_ip(&t.i_ka, m, k * a) / t.i_ka[m];
        mat[(r + 1, idx(Family::C, m))] = -sr * x_kp(&t.k_kba, m, kb * a) / t.k_kba[m];
        for n in -m_max..=m_max {
            let na = n.unsigned_abs() as usize;
            let shift = (n - m as i64).unsigned_abs() as usize;
            // Bundle-centred I_n seen from the fiber frame.
            let f = e_frame * t.i_kbd[shift] / t.i_kbb[na];
            mat[(r, idx(Family::B, na))] -= f * t.i_kba[m];
            mat[(r + 1, idx(Family::B, na))] -= sr * f * x_ip(&t.i_kba, m, kb * a);
            // Fiber-centred K_n seen from the bundle frame.
            let g = e_frame * t.i_kbd[shift] / t.k_kba[na];
            mat[(r + 2, idx(Family::C, na))] += g * t.k_kbb[m];
            mat[(r + 3, idx(Family::C, na))] += sr * g * x_kp(&t.k_kbb, m, kb * b);
        }
        // (2) φ_b = φ_s at ρ = b.
        mat[(r + 2, idx(Family::B, m))] = 1.0;
        mat[(r + 2, idx(Family::D, m))] = -e_sheath * t.i_kb[m] / t.i_kc[m];
        mat[(r + 2, idx(Family::E, m))] = -1.0;
        // (3) σ_ρ ∂φ_b = σ_s ∂φ_s at ρ = b.
        mat[(r + 3, idx(Family::B, m))] = sr * x_ip(&t.i_kbb, m, kb * b) / t.i_kbb[m];
        mat[(r + 3, idx(Family::D, m))] = -ss * e_sheath * x_ip(&t.i_kb, m, k * b) / t.i_kc[m];
        mat[(r + 3, idx(Family::E, m))] = -ss * x_kp(&t.k_kb, m, k * b) / t.k_kb[m];
        // (4) φ_s = φ_e at ρ = c.
        mat[(r + 4, idx(Family::D, m))] = 1.0;
        mat[(r + 4, idx(Family::E, m))] = e_sheath * t.k_kc[m] / t.k_kb[m];
        mat[(r + 4, idx(Family::F, m))] = -1.0;
        // (5) σ_s ∂φ_s = σ_e ∂φ_e at ρ = c.
        mat[(r + 5, idx(Family::D, m))] = ss * x_ip(&t.i_kc, m, k * c) / t.i_kc[m];
        mat[(r + 5, idx(Family::E, m))] = ss * e_sheath * x_kp(&t.k_kc, m, k * c) / t.k_kb[m];
        mat[(r + 5, idx(Family::F, m))] = -se * x_kp(&t.k_kc, m, k * c) / t.k_kc[m];
    }
    BoundarySystem { kabs: t.kabs, modes, matrix: mat, rhs }
}

/// Scaled coefficients for a unit membrane-potential harmonic at one |k|.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitSolution {
    pub kabs: f64,
    pub modes: usize,
    pub x: Vec<f64>,
    /// `‖Mx − r‖∞ / (‖M‖∞‖x‖∞ + ‖r‖∞)`.
    pub residual: f64,
    /// 1-norm condition number `‖M‖₁‖M⁻¹‖₁`.
    pub condition: f64,
}

impl UnitSolution {
    pub fn get(&self, family: Family, m: usize) -> f64 {
        self.x[unknown_index(family, m, self.modes)]
    }
}

fn norm_inf(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn norm_1(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Relative substitute-back residual of `x` in `sys`.
pub fn residual(sys: &BoundarySystem, x: &[f64]) -> f64 {
    let xv = DVector::from_column_slice(x);
    let r = &sys.matrix * &xv - &sys.rhs;
    let rn = r.amax();
    rn / (norm_inf(&sys.matrix) * xv.amax() + sys.rhs.amax())
}

/// LU solve with partial pivoting.
pub fn solve_system(sys: &BoundarySystem) -> Result<UnitSolution, BoundaryError> {
    let lu = sys.matrix.clone().lu();
    let singular = |condition| BoundaryError::Singular { k: sys.kabs, condition };
    let inverse = lu.try_inverse().ok_or_else(|| singular(f64::INFINITY))?;
    let condition = norm_1(&sys.matrix) * norm_1(&inverse);
    let x = lu.solve(&sys.rhs).ok_or_else(|| singular(condition))?;
    if x.iter().any(|v| !v.is_finite()) || !condition.is_finite() {
        return Err(singular(condition));
    }
    if condition > CONDITION_WARN {
        log::warn!("boundary system at k = {:e} rad/m has condition number {condition:e}", sys.kabs);
    }
    let x: Vec<f64> = x.iter().copied().collect();
    let res = residual(sys, &x);
    Ok(UnitSolution { kabs: sys.kabs, modes: sys.modes, x, residual: res, condition })
}

/// Assemble and solve at one |k|.
pub fn solve_unit(kabs: f64, p: &PhysicalParams, modes: usize) -> Result<UnitSolution, BoundaryError> {
    solve_system(&assemble_boundary_system(kabs, p, modes)?)
}
