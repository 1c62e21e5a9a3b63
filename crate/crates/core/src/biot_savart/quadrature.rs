//! Adaptive 7/15-point Gauss–Kronrod quadrature for vector integrands.

use nalgebra::Vector3;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

const MAX_DEPTH: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: Vector3<f64>,
    /// Sum of the local Kronrod−Gauss differences.
    pub error: f64,
    pub evaluations: usize,
}

fn rule<F: Fn(f64) -> Vector3<f64>>(f: &F, lo: f64, hi: f64) -> (Vector3<f64>, f64) {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let mut k = f(c) * WGK[7];
    let mut g = f(c) * WG[3];
    for j in 0..7 {
        let pair = f(c - h * XGK[j]) + f(c + h * XGK[j]);
        k += pair * WGK[j];
        if j % 2 == 1 {
            g += pair * WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

/// `∫_lo^hi f`, bisecting until each piece's error estimate is below its
/// share of `rel_tol·|∫f|`.
pub fn integrate<F: Fn(f64) -> Vector3<f64>>(f: F, lo: f64, hi: f64, rel_tol: f64) -> Quadrature {
    let (whole, err) = rule(&f, lo, hi);
    let target = rel_tol * whole.norm();
    if err <= target || target == 0.0 && err == 0.0 {
        return Quadrature { value: whole, error: err, evaluations: 15 };
    }
    let mut q = Quadrature { value: Vector3::zeros(), error: 0.0, evaluations: 15 };
    let width = hi - lo;
    let tol_density = target.max(f64::MIN_POSITIVE) / width;
    recurse(&f, lo, hi, whole, err, tol_density, 0, &mut q);
    q
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> Vector3<f64>>(
    f: &F,
    lo: f64,
    hi: f64,
    est: Vector3<f64>,
    err: f64,
    tol_density: f64,
    depth: u32,
    q: &mut Quadrature,
) {
    if err <= tol_density * (hi - lo) || depth >= MAX_DEPTH {
        q.value += est;
        q.error += err;
        return;
    }
    let mid = 0.5 * (lo + hi);
    let (left, el) = rule(f, lo, mid);
    let (right, er) = rule(f, mid, hi);
    q.evaluations += 30;
    recurse(f, lo, mid, left, el, tol_density, depth + 1, q);
    recurse(f, mid, hi, right, er, tol_density, depth + 1, q);
}
