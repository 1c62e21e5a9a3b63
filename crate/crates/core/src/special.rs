//! Modified Bessel functions of integer order, `I_n(x)` and `K_n(x)`, for real
//! non-negative arguments.
//!
//! Every routine works internally with the exponentially scaled functions
//! `e^{-x} I_n(x)` and `e^{x} K_n(x)`, which stay finite for all `x`. The
//! unscaled entry points multiply the scale back in and report overflow.
//!
//! * `I_n`: power series for `x <= 15`, Miller backward recurrence normalised
//!   by `I_0 + 2 Σ I_k = e^x` for moderate `x`, Hankel asymptotic expansion for
//!   very large `x`.
//! * `K_0`, `K_1`: logarithmic series for `x <= 2`, Steed/Temme continued
//!   fraction otherwise. Higher orders by forward recurrence, which is stable
//!   for `K_n`.

use thiserror::Error;

/// Largest supported order.
pub const MAX_ORDER: u32 = 64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_MAX_X: f64 = 15.0;
const K_SERIES_MAX_X: f64 = 2.0;
const EPS: f64 = 1e-17;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BesselError {
    #[error("argument x = {x} outside the domain of the function")]
    Domain { x: f64 },
    #[error("order {n} outside supported range 0..={max}", max = MAX_ORDER)]
    OrderOutOfRange { n: u32 },
    #[error("result overflows f64 for order {n} at x = {x}")]
    Overflow { n: u32, x: f64 },
}

/// Integer Bessel order, checked against [`MAX_ORDER`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BesselOrder(u32);

impl BesselOrder {
    pub fn new(n: u32) -> Result<Self, BesselError> {
        if n > MAX_ORDER {
            return Err(BesselError::OrderOutOfRange { n });
        }
        Ok(Self(n))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

fn check_order(n: u32) -> Result<usize, BesselError> {
    BesselOrder::new(n).map(|o| o.get() as usize)
}

fn check_i_arg(x: f64) -> Result<(), BesselError> {
    if x.is_nan() || x < 0.0 {
        return Err(BesselError::Domain { x });
    }
    Ok(())
}

fn check_k_arg(x: f64) -> Result<(), BesselError> {
    if x.is_nan() || x <= 0.0 {
        return Err(BesselError::Domain { x });
    }
    Ok(())
}

/// `I_n(x)`.
pub fn bessel_i(n: u32, x: f64) -> Result<f64, BesselError> {
    let scaled = bessel_i_scaled(n, x)?;
    if scaled == 0.0 {
        return Ok(0.0);
    }
    // Combine in log space so large x with tiny scaled values stays finite.
    let value = (scaled.ln() + x).exp();
    if !value.is_finite() {
        return Err(BesselError::Overflow { n, x });
    }
    Ok(value)
}

/// `e^{-x} I_n(x)`.
pub fn bessel_i_scaled(n: u32, x: f64) -> Result<f64, BesselError> {
    let seq = bessel_i_scaled_seq(n, x)?;
    Ok(seq[n as usize])
}

/// `K_n(x)`.
pub fn bessel_k(n: u32, x: f64) -> Result<f64, BesselError> {
    let scaled = bessel_k_scaled(n, x)?;
    let value = scaled * (-x).exp();
    if !value.is_finite() {
        return Err(BesselError::Overflow { n, x });
    }
    Ok(value)
}

/// `e^{x} K_n(x)`.
pub fn bessel_k_scaled(n: u32, x: f64) -> Result<f64, BesselError> {
    let seq = bessel_k_scaled_seq(n, x)?;
    Ok(seq[n as usize])
}

/// `e^{-x} I_k(x)` for `k = 0..=nmax`.
pub fn bessel_i_scaled_seq(nmax: u32, x: f64) -> Result<Vec<f64>, BesselError> {
    let nmax = check_order(nmax)?;
    check_i_arg(x)?;
    if x == 0.0 {
        let mut out = vec![0.0; nmax + 1];
        out[0] = 1.0;
        return Ok(out);
    }
    if x.is_infinite() {
        return Err(BesselError::Overflow { n: nmax as u32, x });
    }
    if x <= SERIES_MAX_X {
        let scale = (-x).exp();
        return Ok((0..=nmax).map(|n| i_series(n, x) * scale).collect());
    }
    let n2 = (nmax * nmax) as f64;
    if x > 1000.0_f64.max(2.0 * n2) {
        return Ok((0..=nmax).map(|n| i_scaled_asymptotic(n, x)).collect());
    }
    Ok(i_scaled_miller(nmax, x))
}

/// `e^{x} K_k(x)` for `k = 0..=nmax`.
pub fn bessel_k_scaled_seq(nmax: u32, x: f64) -> Result<Vec<f64>, BesselError> {
    let nmax = check_order(nmax)?;
    check_k_arg(x)?;
    let (k0, k1) = if x <= K_SERIES_MAX_X {
        let (k0, k1) = k01_series(x);
        let s = x.exp();
        (k0 * s, k1 * s)
    } else {
        k01_scaled_continued_fraction(x)
    };
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(k0);
    if nmax >= 1 {
        out.push(k1);
    }
    for k in 1..nmax {
        let next = out[k - 1] + (2.0 * k as f64 / x) * out[k];
        if !next.is_finite() {
            return Err(BesselError::Overflow { n: (k + 1) as u32, x });
        }
        out.push(next);
    }
    Ok(out)
}

/// Power series `Σ (x/2)^{2k+n} / (k! (n+k)!)`; all terms positive.
fn i_series(n: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut lead = 1.0;
    for j in 1..=n {
        lead *= half / j as f64;
    }
    if lead == 0.0 {
        return 0.0;
    }
    let q = half * half;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0usize;
    loop {
        k += 1;
        term *= q / (k as f64 * (n + k) as f64);
        sum += term;
        if term < EPS * sum || k > 500 {
            break;
        }
    }
    lead * sum
}

/// Hankel expansion of `e^{-x} I_n(x)` for `x` much larger than `n^2`.
fn i_scaled_asymptotic(n: usize, x: f64) -> f64 {
    let mu = 4.0 * (n * n) as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..60 {
        let odd = (2 * j - 1) as f64;
        term *= -(mu - odd * odd) / (8.0 * j as f64 * x);
        sum += term;
        if term.abs() < EPS * sum.abs() {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// Miller's backward recurrence with the normalisation `Σ ε_k e^{-x} I_k(x) = 1`.
fn i_scaled_miller(nmax: usize, x: f64) -> Vec<f64> {
    // Starting-order error scales like exp((n^2 - N^2) / x).
    let start = nmax + 20 + (40.0 * x).sqrt().ceil() as usize;
    let mut out = vec![0.0; nmax + 1];
    let mut i_next = 0.0; // I_{k+1}
    let mut i_cur = 1e-280; // I_k
    let mut norm = 0.0;
    for k in (0..=start).rev() {
        if k <= nmax {
            out[k] = i_cur;
        }
        norm += if k == 0 { i_cur } else { 2.0 * i_cur };
        if k == 0 {
            break;
        }
        let i_prev = i_next + (2.0 * k as f64 / x) * i_cur;
        i_next = i_cur;
        i_cur = i_prev;
        if i_cur > 1e250 {
            let r = 1e-250;
            i_cur *= r;
            i_next *= r;
            norm *= r;
            out.iter_mut().for_each(|v| *v *= r);
        }
    }
    out.iter_mut().for_each(|v| *v /= norm);
    out
}

/// Unscaled `K_0`, `K_1` from the logarithmic series (small x).
fn k01_series(x: f64) -> (f64, f64) {
    let half = 0.5 * x;
    let q = half * half;
    let log_term = half.ln();
    let i0 = i_series(0, x);
    let i1 = i_series(1, x);

    // K_0 = -(ln(x/2) + γ) I_0 + Σ_{k≥1} H_k q^k / (k!)^2
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut sum0 = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * kf);
        harmonic += 1.0 / kf;
        let add = harmonic * term;
        sum0 += add;
        if add < EPS * sum0.abs() {
            break;
        }
    }
    let k0 = -(log_term + EULER_GAMMA) * i0 + sum0;

    // K_1 = 1/x + ln(x/2) I_1 - (x/4) Σ_{k≥0} (ψ(k+1) + ψ(k+2)) q^k / (k!(k+1)!)
    let mut term = 1.0;
    let mut h_k = 0.0;
    let mut sum1 = (-2.0 * EULER_GAMMA + 1.0) * term;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * (kf + 1.0));
        h_k += 1.0 / kf;
        let h_k1 = h_k + 1.0 / (kf + 1.0);
        let add = (-2.0 * EULER_GAMMA + h_k + h_k1) * term;
        sum1 += add;
        if add.abs() < EPS * sum1.abs() {
            break;
        }
    }
    let k1 = 1.0 / x + log_term * i1 - 0.25 * x * sum1;
    (k0, k1)
}

/// Steed's evaluation of Temme's continued fraction for `e^x K_0`, `e^x K_1`
/// (order zero, `x >= 2`).
fn k01_scaled_continued_fraction(x: f64) -> (f64, f64) {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    let h = a1 * h;
    let k0 = (std::f64::consts::PI / (2.0 * x)).sqrt() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}
