//! Double-double arithmetic (unevaluated sum `hi + lo`, ~32 significant digits).
//!
//! Used wherever a short exponential sum with very large, alternating
//! coefficients has to be evaluated pointwise: the biorthogonal functions and
//! the controls built from them. Only the handful of operations those sums need
//! are provided.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

const LN2: DoubleDouble = DoubleDouble {
    hi: 6.931_471_805_599_453e-1,
    lo: 2.319_046_813_846_299_6e-17,
};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };
    pub const ONE: DoubleDouble = DoubleDouble { hi: 1.0, lo: 0.0 };

    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        DoubleDouble { hi, lo }
    }

    pub fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    /// Exact difference `a - b`.
    pub fn diff(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, -b);
        DoubleDouble { hi, lo }
    }

    /// Exact product `a * b`.
    pub fn prod(a: f64, b: f64) -> Self {
        let (hi, lo) = two_prod(a, b);
        DoubleDouble { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }

    pub fn div_f64(self, b: f64) -> Self {
        let q1 = self.hi / b;
        let (p, e) = two_prod(q1, b);
        let rem = ((self.hi - p) - e) + self.lo;
        let q2 = rem / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleDouble { hi, lo }
    }

    fn ldexp(self, k: i32) -> Self {
        // two-step scaling keeps 2^k representable for the full exponent range
        let half = k / 2;
        let s1 = 2f64.powi(half);
        let s2 = 2f64.powi(k - half);
        DoubleDouble {
            hi: self.hi * s1 * s2,
            lo: self.lo * s1 * s2,
        }
    }

    /// `exp` to double-double accuracy; underflows to zero below -745.
    pub fn exp(self) -> Self {
        if self.hi < -745.2 {
            return DoubleDouble::ZERO;
        }
        if self.hi > 709.7 {
            return DoubleDouble::from_f64(f64::INFINITY);
        }
        if self.hi == 0.0 && self.lo == 0.0 {
            return DoubleDouble::ONE;
        }
        let k = (self.hi / LN2.hi).round();
        let r = self - LN2 * k;
        // e^r = (e^{r/512})^512, expm1 form kept through the squarings
        let r = r.ldexp(-9);
        let mut term = r;
        let mut s = r;
        for i in 2..=12 {
            term = (term * r).div_f64(i as f64);
            s = s + term;
            if term.hi.abs() < 1e-34 {
                break;
            }
        }
        for _ in 0..9 {
            s = s.mul_f64(2.0) + s * s;
        }
        (s + DoubleDouble::ONE).ldexp(k as i32)
    }

    /// `e^{rate (t - horizon)}` with the exponent formed exactly.
    pub fn damped_exp(rate: f64, t: f64, horizon: f64) -> Self {
        (DoubleDouble::diff(t, horizon) * rate).exp()
    }
}

impl Add for DoubleDouble {
    type Output = DoubleDouble;
    fn add(self, b: DoubleDouble) -> DoubleDouble {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let e = e + t;
        let (s, e) = quick_two_sum(s, e);
        let e = e + f;
        let (hi, lo) = quick_two_sum(s, e);
        DoubleDouble { hi, lo }
    }
}

impl Add<f64> for DoubleDouble {
    type Output = DoubleDouble;
    fn add(self, b: f64) -> DoubleDouble {
        let (s, e) = two_sum(self.hi, b);
        let e = e + self.lo;
        let (hi, lo) = quick_two_sum(s, e);
        DoubleDouble { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = DoubleDouble;
    fn neg(self) -> DoubleDouble {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DoubleDouble {
    type Output = DoubleDouble;
    fn sub(self, b: DoubleDouble) -> DoubleDouble {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = DoubleDouble;
    fn mul(self, b: DoubleDouble) -> DoubleDouble {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }
}

impl Mul<f64> for DoubleDouble {
    type Output = DoubleDouble;
    fn mul(self, b: f64) -> DoubleDouble {
        self.mul_f64(b)
    }
}

impl Div for DoubleDouble {
    type Output = DoubleDouble;
    fn div(self, b: DoubleDouble) -> DoubleDouble {
        let q1 = self.hi / b.hi;
        let r = self - b * q1;
        let q2 = r.hi / b.hi;
        let r = r - b * q2;
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DoubleDouble { hi, lo } + q3
    }
}

/// Dot product accumulated in double-double.
pub fn dot(a: &[f64], b: &[f64]) -> DoubleDouble {
    a.iter()
        .zip(b)
        .fold(DoubleDouble::ZERO, |acc, (&x, &y)| acc + DoubleDouble::prod(x, y))
}
