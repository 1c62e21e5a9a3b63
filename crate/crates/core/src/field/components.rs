//! Azimuthally averaged field of each region's axial current.
//!
//! With `φ ∝ e^{ikz}`, the axial current density in a region of axial
//! conductivity σ is `−ikσφ`, and Ampère's law on a circle of radius ρ
//! gives `B̂_φ = µ I_enc / (2πρ)`. Only the `m = 0` harmonics survive the
//! area integrals, so every term below carries `−iµ·sign(k)/ρ`.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use super::boundary::{solve_unit, unknown_index, BoundaryError, Family, UnitSolution};
use super::spectrum::{PotentialSpectrum, TravelingWave};
use super::FieldError;
use crate::config::PhysicalParams;
use crate::special::{bessel_i_scaled_seq, bessel_k_scaled_seq};

/// Scaled boundary coefficients at one k bin (see [`super::boundary`]).
#[derive(Debug, Clone, PartialEq)]
pub struct KCoefficients {
    pub k: f64,
    pub modes: usize,
    pub x: Vec<Complex64>,
    /// False for `k = 0` and the Nyquist bin, whose field is set to zero.
    pub solved: bool,
}

impl KCoefficients {
    pub fn zero(k: f64, modes: usize) -> Self {
        Self { k, modes, x: vec![Complex64::new(0.0, 0.0); 6 * (modes + 1)], solved: false }
    }

    pub fn from_unit(k: f64, phi: Complex64, unit: &UnitSolution) -> Self {
        Self { k, modes: unit.modes, x: unit.x.iter().map(|&v| phi * v).collect(), solved: true }
    }

    pub fn get(&self, family: Family, m: usize) -> Complex64 {
        self.x[unknown_index(family, m, self.modes)]
    }

    fn get_signed(&self, family: Family, n: i64) -> Complex64 {
        self.get(family, n.unsigned_abs() as usize)
    }
}

/// Coefficients for every bin of a spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCoefficients {
    pub modes: usize,
    pub per_k: Vec<KCoefficients>,
    /// Substitute-back residual per bin (zero where nothing was solved).
    pub residual: Vec<f64>,
    pub condition: Vec<f64>,
}

impl BoundaryCoefficients {
    pub fn max_residual(&self) -> f64 {
        self.residual.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_condition(&self) -> f64 {
        self.condition.iter().copied().fold(0.0, f64::max)
    }
}

/// Unit solutions for `|k| = 2πq/L`, `q = 1..n/2−1`, in parallel.
pub fn unit_solutions(
    spectrum: &PotentialSpectrum,
    p: &PhysicalParams,
    modes: usize,
) -> Result<Vec<UnitSolution>, BoundaryError> {
    let zi = spectrum.zero_index();
    let half = spectrum.n() / 2;
    (1..half).into_par_iter().map(|q| solve_unit(spectrum.k[zi + q], p, modes)).collect()
}

/// Solve the boundary system for every nonzero, non-Nyquist bin.
pub fn solve_coefficients(
    spectrum: &PotentialSpectrum,
    p: &PhysicalParams,
    modes: usize,
) -> Result<BoundaryCoefficients, FieldError> {
    p.validate().map_err(|e| FieldError::Params(e.to_string()))?;
    let units = unit_solutions(spectrum, p, modes)?;
    let zi = spectrum.zero_index() as i64;
    let half = (spectrum.n() / 2) as i64;
    let mut per_k = Vec::with_capacity(spectrum.n());
    let mut residual = Vec::with_capacity(spectrum.n());
    let mut condition = Vec::with_capacity(spectrum.n());
    for (i, (&k, &phi)) in spectrum.k.iter().zip(&spectrum.phi).enumerate() {
        let q = i as i64 - zi;
        if q == 0 || q == -half {
            per_k.push(KCoefficients::zero(k, modes));
            residual.push(0.0);
            condition.push(0.0);
        } else {
            let unit = &units[(q.unsigned_abs() - 1) as usize];
            per_k.push(KCoefficients::from_unit(k, phi, unit));
            residual.push(unit.residual);
            condition.push(unit.condition);
        }
    }
    Ok(BoundaryCoefficients { modes, per_k, residual, condition })
}

fn prefactor(k: f64, p: &PhysicalParams, rho: f64) -> Complex64 {
    Complex64::new(0.0, -p.mu() * k.signum() / rho)
}

fn scaled_i(n: usize, x: f64) -> Vec<f64> {
    bessel_i_scaled_seq(n as u32, x).expect("order within range and x ≥ 0")
}

fn scaled_k(n: usize, x: f64) -> Vec<f64> {
    bessel_k_scaled_seq(n as u32, x).expect("order within range and x > 0")
}

/// Fiber interior current.
pub fn field_fiber(k: f64, p: &PhysicalParams, coeffs: &KCoefficients, rho: f64) -> Complex64 {
    if k == 0.0 || !coeffs.solved {
        return Complex64::new(0.0, 0.0);
    }
    let ka = k.abs() * p.a;
    let i = scaled_i(1, ka);
    prefactor(k, p, rho) * p.sigma_i * coeffs.get(Family::A, 0) * (p.a * i[1] / i[0])
}

/// The three parts of the bundle current: `b1` from the bundle-centred
/// harmonics over the whole disk of radius b, `b2` removing their share
/// inside the fiber, `b3` from the fiber-centred harmonics over the
/// annular region.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BundleTerms {
    pub b1: Complex64,
    pub b2: Complex64,
    pub b3: Complex64,
}

impl BundleTerms {
    pub fn total(&self) -> Complex64 {
        self.b1 + self.b2 + self.b3
    }
}

/// Anisotropic bundle current.
pub fn field_bundle(k: f64, p: &PhysicalParams, coeffs: &KCoefficients, rho: f64) -> BundleTerms {
    if k == 0.0 || !coeffs.solved {
        return BundleTerms::default();
    }
    let lambda = p.anisotropy();
    let kb = k.abs() * lambda;
    let m = coeffs.modes;
    let (a, b, d) = (p.a, p.b, p.d);
    let i_a = scaled_i(1, kb * a);
    let i_b = scaled_i(m.max(1), kb * b);
    let i_d = scaled_i(m, kb * d);
    let k_a = scaled_k(m.max(1), kb * a);
    let k_b = scaled_k(1, kb * b);
    let e_frame = (kb * (a + d - b)).exp();
    let pre = prefactor(k, p, rho) * (p.sigma_z / lambda);

    let b1 = coeffs.get(Family::B, 0) * (b * i_b[1] / i_b[0]);
    let mut b2 = Complex64::new(0.0, 0.0);
    let mut c_sum = Complex64::new(0.0, 0.0);
    let mm = m as i64;
    for n in -mm..=mm {
        let na = n.unsigned_abs() as usize;
        b2 += coeffs.get_signed(Family::B, n) * (i_d[na] / i_b[na]);
        c_sum += coeffs.get_signed(Family::C, n) * (i_d[na] / k_a[na]);
    }
    let b2 = b2 * (-a * e_frame * i_a[1]);
    let b3 = coeffs.get(Family::C, 0) * (a * k_a[1] / k_a[0]) - c_sum * (b * e_frame * k_b[1]);
    BundleTerms { b1: pre * b1, b2: pre * b2, b3: pre * b3 }
}

/// Sheath current between b and c.
pub fn field_sheath(k: f64, p: &PhysicalParams, coeffs: &KCoefficients, rho: f64) -> Complex64 {
    if k == 0.0 || !coeffs.solved {
        return Complex64::new(0.0, 0.0);
    }
    let kk = k.abs();
    let (b, c) = (p.b, p.c);
    let i_b = scaled_i(1, kk * b);
    let i_c = scaled_i(1, kk * c);
    let k_b = scaled_k(1, kk * b);
    let k_c = scaled_k(1, kk * c);
    let e = (kk * (b - c)).exp();
    let d_part = (c * i_c[1] - b * e * i_b[1]) / i_c[0];
    let e_part = (b * k_b[1] - c * e * k_c[1]) / k_b[0];
    prefactor(k, p, rho) * p.sigma_s * (coeffs.get(Family::D, 0) * d_part + coeffs.get(Family::E, 0) * e_part)
}

/// Saline current between c and the evaluation radius.
pub fn field_saline(k: f64, p: &PhysicalParams, coeffs: &KCoefficients, rho: f64) -> Complex64 {
    if k == 0.0 || !coeffs.solved {
        return Complex64::new(0.0, 0.0);
    }
    let kk = k.abs();
    let c = p.c;
    let k_c = scaled_k(1, kk * c);
    let k_r = scaled_k(1, kk * rho);
    let part = (c * k_c[1] - rho * (kk * (c - rho)).exp() * k_r[1]) / k_c[0];
    prefactor(k, p, rho) * p.sigma_e * coeffs.get(Family::F, 0) * part
}

/// Field spectrum at radius `rho` with the per-region breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub k: Vec<f64>,
    pub rho: f64,
    pub dz: f64,
    pub mapping: Option<TravelingWave>,
    pub b_i: Vec<Complex64>,
    pub b_b1: Vec<Complex64>,
    pub b_b2: Vec<Complex64>,
    pub b_b3: Vec<Complex64>,
    pub b_b: Vec<Complex64>,
    pub b_s: Vec<Complex64>,
    pub b_e: Vec<Complex64>,
    pub b_total: Vec<Complex64>,
}

/// One of the stored spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Fiber,
    Bundle,
    Sheath,
    Saline,
    Total,
}

impl Component {
    pub const ALL: [Component; 5] = [Component::Total, Component::Fiber, Component::Bundle, Component::Sheath, Component::Saline];

    pub fn label(self) -> &'static str {
        match self {
            Component::Fiber => "B_i",
            Component::Bundle => "B_b",
            Component::Sheath => "B_s",
            Component::Saline => "B_e",
            Component::Total => "B_total",
        }
    }
}

impl SpectralField {
    pub fn n(&self) -> usize {
        self.k.len()
    }

    pub fn component(&self, c: Component) -> &[Complex64] {
        match c {
            Component::Fiber => &self.b_i,
            Component::Bundle => &self.b_b,
            Component::Sheath => &self.b_s,
            Component::Saline => &self.b_e,
            Component::Total => &self.b_total,
        }
    }

    /// CSV `k_rad_per_m, re_B_i, im_B_i, ..., re_B_total, im_B_total`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let order = [Component::Fiber, Component::Bundle, Component::Sheath, Component::Saline, Component::Total];
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["k_rad_per_m".to_string()];
        for c in order {
            header.push(format!("re_{}", c.label()));
            header.push(format!("im_{}", c.label()));
        }
        w.write_record(&header)?;
        for i in 0..self.n() {
            let mut rec = vec![format!("{:.17e}", self.k[i])];
            for c in order {
                let v = self.component(c)[i];
                rec.push(format!("{:.17e}", v.re));
                rec.push(format!("{:.17e}", v.im));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// CSV `k_rad_per_m, re_<label>, im_<label>` for one component.
    pub fn write_component_csv<W: Write>(&self, c: Component, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k_rad_per_m".to_string(), format!("re_{}", c.label()), format!("im_{}", c.label())])?;
        for (k, v) in self.k.iter().zip(self.component(c)) {
            w.write_record([format!("{k:.17e}"), format!("{:.17e}", v.re), format!("{:.17e}", v.im)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluate the four contributions at radius `rho` from solved coefficients.
pub fn field_from_coefficients(
    spectrum: &PotentialSpectrum,
    coeffs: &BoundaryCoefficients,
    p: &PhysicalParams,
    rho: f64,
) -> Result<SpectralField, FieldError> {
    if !(rho >= p.c) {
        return Err(FieldError::Radius { rho, c: p.c });
    }
    let rows: Vec<(Complex64, BundleTerms, Complex64, Complex64)> = coeffs
        .per_k
        .par_iter()
        .map(|ck| {
            (
                field_fiber(ck.k, p, ck, rho),
                field_bundle(ck.k, p, ck, rho),
                field_sheath(ck.k, p, ck, rho),
                field_saline(ck.k, p, ck, rho),
            )
        })
        .collect();
    let n = rows.len();
    let mut f = SpectralField {
        k: spectrum.k.clone(),
        rho,
        dz: spectrum.dz,
        mapping: spectrum.mapping.clone(),
        b_i: Vec::with_capacity(n),
        b_b1: Vec::with_capacity(n),
        b_b2: Vec::with_capacity(n),
        b_b3: Vec::with_capacity(n),
        b_b: Vec::with_capacity(n),
        b_s: Vec::with_capacity(n),
        b_e: Vec::with_capacity(n),
        b_total: Vec::with_capacity(n),
    };
    for (bi, bb, bs, be) in rows {
        let b_b = bb.total();
        f.b_i.push(bi);
        f.b_b1.push(bb.b1);
        f.b_b2.push(bb.b2);
        f.b_b3.push(bb.b3);
        f.b_b.push(b_b);
        f.b_s.push(bs);
        f.b_e.push(be);
        f.b_total.push(bi + b_b + bs + be);
    }
    Ok(f)
}

/// Solve and evaluate the field spectrum at `rho`.
pub fn total_field(
    spectrum: &PotentialSpectrum,
    p: &PhysicalParams,
    rho: f64,
    modes: usize,
) -> Result<SpectralField, FieldError> {
    if !(rho >= p.c) {
        return Err(FieldError::Radius { rho, c: p.c });
    }
    let coeffs = solve_coefficients(spectrum, p, modes)?;
    field_from_coefficients(spectrum, &coeffs, p, rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_params;

    fn unit_coeffs(k: f64, fam: Family) -> KCoefficients {
        let mut c = KCoefficients::zero(k, 6);
        c.solved = true;
        c.x[unknown_index(fam, 0, 6)] = Complex64::new(1.0, 0.0);
        c
    }

    #[test]
    fn zero_coefficients_give_zero_field() {
        let p = default_params();
        let mut c = KCoefficients::zero(1e3, 6);
        c.solved = true;
        let rho = p.c + 3e-5;
        assert_eq!(field_fiber(1e3, &p, &c, rho), Complex64::new(0.0, 0.0));
        assert_eq!(field_bundle(1e3, &p, &c, rho).total(), Complex64::new(0.0, 0.0));
        assert_eq!(field_sheath(1e3, &p, &c, rho), Complex64::new(0.0, 0.0));
        assert_eq!(field_saline(1e3, &p, &c, rho), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn saline_vanishes_at_sheath_surface() {
        let p = default_params();
        let c = unit_coeffs(5e3, Family::F);
        assert!(field_saline(5e3, &p, &c, p.c).norm() < 1e-30);
        assert!(field_saline(5e3, &p, &c, p.c + 1e-5).norm() > 0.0);
    }

    #[test]
    fn fiber_term_is_hermitian_in_k() {
        let p = default_params();
        let rho = p.c + 3e-5;
        for k in [150.0, 3e3, 2e5] {
            let plus = field_fiber(k, &p, &unit_coeffs(k, Family::A), rho);
            let minus = field_fiber(-k, &p, &unit_coeffs(-k, Family::A), rho);
            assert_eq!(plus, minus.conj());
        }
    }

    #[test]
    fn fiber_term_direct_value() {
        // Unit Â_0 at κa = 1: −iµσ_i·sign(k)/ρ · a·I_1(1)/I_0(1).
        let p = default_params();
        let k = 1.0 / p.a;
        let rho = p.c + 3e-5;
        let ratio = 0.565_159_103_992_485 / 1.266_065_877_752_008_4;
        let want = -p.mu() * p.sigma_i * p.a * ratio / rho;
        let got = field_fiber(k, &p, &unit_coeffs(k, Family::A), rho);
        assert!(got.re == 0.0 && ((got.im - want) / want).abs() < 1e-13);
    }

    #[test]
    fn isotropic_bundle_uses_plain_arguments() {
        let iso = PhysicalParams { sigma_rho: 5.0, ..default_params() };
        assert_eq!(iso.anisotropy(), 1.0);
        let k = 4e3;
        let rho = iso.c + 3e-5;
        let c = unit_coeffs(k, Family::B);
        let got = field_bundle(k, &iso, &c, rho).b1;
        let i = bessel_i_scaled_seq(1, k * iso.b).unwrap();
        let want = Complex64::new(0.0, -iso.mu() * iso.sigma_z / rho) * (iso.b * i[1] / i[0]);
        assert!((got - want).norm() <= 1e-14 * want.norm());
    }
}
