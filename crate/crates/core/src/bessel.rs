//! Bessel functions of the first kind J_ν for real order and nonnegative
//! argument, their derivative, and the positive zeros j_{ν,n}.
//!
//! Below [`SWITCHOVER`] the alternating power series is summed; above it the
//! Hankel expansion is summed up to its smallest term. Each evaluation carries
//! an error estimate taken from the first omitted term plus accumulated
//! rounding.

use crate::error::{Error, Result};
use crate::special::gamma_positive;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Argument at which evaluation switches from the power series to the
/// asymptotic expansion.
pub const SWITCHOVER: f64 = 12.0;

const MAX_SERIES_TERMS: usize = 60;
const MAX_ASYMPTOTIC_TERMS: usize = 60;
const MAX_NEWTON_ITERS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Series,
    Asymptotic,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BesselEval {
    pub order: f64,
    pub arg: f64,
    pub value: f64,
    pub method: Method,
    pub term_count: usize,
    pub est_error: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ZeroRecord {
    pub order: f64,
    pub index: usize,
    pub zero: f64,
    pub newton_iters: usize,
    pub bracket: (f64, f64),
}

/// J_ν(x) for ν ∈ [0, 1], x ≥ 0.
pub fn bessel_j(order: f64, x: f64) -> Result<BesselEval> {
    if !(0.0..=1.0).contains(&order) {
        return Err(Error::Domain(format!("order {order} outside [0, 1]")));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("argument {x} must be finite and nonnegative")));
    }
    Ok(eval(order, x))
}

/// Unchecked evaluation used internally (orders up to ~2 appear through J_{ν+1}).
pub(crate) fn eval(order: f64, x: f64) -> BesselEval {
    if x < SWITCHOVER {
        series(order, x)
    } else {
        asymptotic(order, x)
    }
}

#[inline]
pub(crate) fn j(order: f64, x: f64) -> f64 {
    eval(order, x).value
}

/// Alternating power series Σ (-1)^m (x/2)^{2m+ν} / (m! Γ(m+ν+1)).
pub fn series(order: f64, x: f64) -> BesselEval {
    if x == 0.0 {
        return BesselEval {
            order,
            arg: x,
            value: if order == 0.0 { 1.0 } else { 0.0 },
            method: Method::Series,
            term_count: 1,
            est_error: 0.0,
        };
    }
    let half = 0.5 * x;
    let q = half * half;
    let mut term = half.powf(order) / gamma_positive(order + 1.0);
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    let mut count = 0;
    let mut next = term;
    for m in 0..MAX_SERIES_TERMS {
        sum += term;
        abs_sum += term.abs();
        count = m + 1;
        let k = (m + 1) as f64;
        next = -term * q / (k * (k + order));
        // truncate only once the terms are decreasing, so |next| bounds the tail
        if next.abs() < term.abs() && next.abs() <= 1e-17 * sum.abs().max(1e-300) {
            break;
        }
        term = next;
    }
    BesselEval {
        order,
        arg: x,
        value: sum,
        method: Method::Series,
        term_count: count,
        est_error: next.abs() + 2.0 * f64::EPSILON * abs_sum,
    }
}

/// Hankel expansion J_ν(x) ≈ √(2/πx) [P cos ω − Q sin ω], ω = x − (ν/2 + 1/4)π,
/// summed until its terms stop decreasing.
pub fn asymptotic(order: f64, x: f64) -> BesselEval {
    let mu = 4.0 * order * order;
    let amp = (2.0 / (PI * x)).sqrt();
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0f64;
    let mut omitted = 0.0;
    let mut count = 1;
    for k in 1..MAX_ASYMPTOTIC_TERMS {
        let odd = (2 * k - 1) as f64;
        let next = a * (mu - odd * odd) / (k as f64 * 8.0 * x);
        if next == 0.0 {
            // terminating expansion (half-integer order): exact
            omitted = 0.0;
            break;
        }
        if next.abs() >= a.abs() {
            omitted = next.abs();
            break;
        }
        a = next;
        count += 1;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * a;
        } else {
            q += sign * a;
        }
        omitted = a.abs();
        if a.abs() < 1e-17 {
            break;
        }
    }
    let omega = x - (0.5 * order + 0.25) * PI;
    let value = amp * (p * omega.cos() - q * omega.sin());
    BesselEval {
        order,
        arg: x,
        value,
        method: Method::Asymptotic,
        term_count: count,
        est_error: amp * omitted + 4.0 * f64::EPSILON * (1.0 + x * f64::EPSILON.sqrt()) * amp,
    }
}

/// J′_ν(x) = (ν/x) J_ν(x) − J_{ν+1}(x).
pub fn bessel_j_prime(order: f64, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&order) {
        return Err(Error::Domain(format!("order {order} outside [0, 1]")));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "derivative requires a positive argument, got {x}"
        )));
    }
    Ok(j_prime(order, x))
}

#[inline]
pub(crate) fn j_prime(order: f64, x: f64) -> f64 {
    order / x * j(order, x) - j(order + 1.0, x)
}

/// Lorch–Muldoon enclosure π(n + ν/2 − 1/4) ≤ j_{ν,n} ≤ π(n + ν/4 − 1/8), ν ∈ [0, 1/2].
pub fn zero_bracket(order: f64, n: usize) -> (f64, f64) {
    let n = n as f64;
    (
        PI * (n + 0.5 * order - 0.25),
        PI * (n + 0.25 * order - 0.125),
    )
}

/// McMahon's two-term approximation to j_{ν,n}.
pub fn mcmahon_guess(order: f64, n: usize) -> f64 {
    let beta = (n as f64 + 0.5 * order - 0.25) * PI;
    beta - (4.0 * order * order - 1.0) / (8.0 * beta)
}

/// n-th positive zero of J_ν for ν ∈ [0, 1/2]: Newton from McMahon's guess,
/// kept inside the Lorch–Muldoon bracket (bisection when Newton leaves it).
pub fn bessel_zero(order: f64, n: usize) -> Result<ZeroRecord> {
    if !(0.0..=0.5).contains(&order) {
        return Err(Error::Domain(format!("zero solver needs order in [0, 1/2], got {order}")));
    }
    if n == 0 {
        return Err(Error::Domain("zero index starts at 1".into()));
    }
    let bracket = zero_bracket(order, n);
    let slack = 1e-12 * bracket.1;
    let (lo, hi) = (bracket.0 - slack, bracket.1 + slack);
    let mut x = mcmahon_guess(order, n).clamp(lo, hi);
    let mut iters = 0;
    let mut bisected = false;
    loop {
        if iters >= MAX_NEWTON_ITERS {
            return Err(Error::ZeroConvergence {
                order,
                index: n,
                iterations: iters,
                last: x,
                residual: j(order, x).abs(),
            });
        }
        iters += 1;
        let fe = eval(order, x);
        let f = fe.value;
        if f.abs() <= fe.est_error {
            // at the evaluation noise floor; further steps only wander
            break;
        }
        let fp = j_prime(order, x);
        let step = f / fp;
        let next = x - step;
        if !next.is_finite() || next < lo || next > hi {
            if bisected {
                return Err(Error::ZeroConvergence {
                    order,
                    index: n,
                    iterations: iters,
                    last: x,
                    residual: f.abs(),
                });
            }
            x = bisect(order, lo, hi);
            bisected = true;
            continue;
        }
        x = next;
        if step.abs() <= 4.0 * f64::EPSILON * x {
            break;
        }
    }
    // the enclosure is rigorous; iterates within the rounding slack are pulled back onto it
    let x = x.clamp(bracket.0, bracket.1);
    let residual = j(order, x).abs();
    if residual >= 1e-12 * j_prime(order, x).abs().max(1.0) {
        return Err(Error::ZeroConvergence {
            order,
            index: n,
            iterations: iters,
            last: x,
            residual,
        });
    }
    Ok(ZeroRecord {
        order,
        index: n,
        zero: x,
        newton_iters: iters,
        bracket,
    })
}

fn bisect(order: f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = j(order, lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 2.0 * f64::EPSILON * mid {
            return mid;
        }
        let fm = j(order, mid);
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// First `count` zeros of J_ν.
pub fn bessel_zeros(order: f64, count: usize) -> Result<Vec<ZeroRecord>> {
    (1..=count).map(|n| bessel_zero(order, n)).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LandauSample {
    pub x: f64,
    pub value: f64,
    /// ν^{-1/3} − |J_ν(x)|
    pub order_margin: f64,
    /// x^{-1/3} − |J_ν(x)|
    pub arg_margin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LandauReport {
    pub order: f64,
    pub samples: Vec<LandauSample>,
    pub all_pass: bool,
}

/// Checks |J_ν(x)| ≤ ν^{-1/3} and |J_ν(x)| ≤ x^{-1/3} at every sample.
pub fn landau_check(order: f64, xs: &[f64]) -> Result<LandauReport> {
    if !(order > 0.0) {
        return Err(Error::Domain(format!("Landau bounds need a positive order, got {order}")));
    }
    if xs.is_empty() {
        return Err(Error::Domain("no sample points".into()));
    }
    let order_bound = order.powf(-1.0 / 3.0);
    let samples: Vec<LandauSample> = xs
        .iter()
        .map(|&x| {
            let value = j(order, x);
            let order_margin = order_bound - value.abs();
            let arg_margin = x.powf(-1.0 / 3.0) - value.abs();
            LandauSample {
                x,
                value,
                order_margin,
                arg_margin,
                pass: x > 0.0 && order_margin >= 0.0 && arg_margin >= 0.0,
            }
        })
        .collect();
    let all_pass = samples.iter().all(|s| s.pass);
    Ok(LandauReport {
        order,
        samples,
        all_pass,
    })
}
