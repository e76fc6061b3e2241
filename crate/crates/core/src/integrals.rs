//! Closed-form integrals of damped exponentials on [0, T], in double-double.
//!
//! Exponential sums built from biorthogonal families carry large coefficients
//! of alternating sign, so their Gram-type quadratic forms need these entries
//! well beyond double precision.

use crate::dd::DoubleDouble;

fn dd(x: f64) -> DoubleDouble {
    DoubleDouble::from_f64(x)
}

/// e^{−λT}.
pub fn decay(lambda: f64, horizon: f64) -> DoubleDouble {
    (-DoubleDouble::prod(lambda, horizon)).exp()
}

/// ∫₀ᵀ e^{s(t−T)} dt for s = a + b.
pub fn damped(a: f64, b: f64, horizon: f64) -> DoubleDouble {
    let s = dd(a) + b;
    if s.hi == 0.0 {
        return dd(horizon);
    }
    let e = (-(s * horizon)).exp();
    (DoubleDouble::ONE - e) / s
}

/// ∫₀ᵀ t e^{λ(t−T)} dt = (λT − 1 + e^{−λT})/λ².
pub fn t_damped(lambda: f64, horizon: f64) -> DoubleDouble {
    if lambda == 0.0 {
        return DoubleDouble::prod(horizon, horizon) * 0.5;
    }
    let x = DoubleDouble::prod(lambda, horizon);
    if x.hi < 1e-3 {
        // T² Σ_j (−x)^j/(j+2)!
        let mut term = DoubleDouble::from_f64(0.5);
        let mut sum = term;
        for j in 1..20 {
            term = (term * (-x)).div_f64((j + 2) as f64);
            sum = sum + term;
        }
        return sum * DoubleDouble::prod(horizon, horizon);
    }
    let num = x - DoubleDouble::ONE + (-x).exp();
    num / DoubleDouble::prod(lambda, lambda)
}

/// ∫₀ᵗ e^{−λ(t−s)} e^{μ(s−T)} ds = (e^{μ(t−T)} − e^{−λt − μT})/(λ + μ).
///
/// The confluent case λ + μ → 0 switches to the limit t e^{μ(t−T)}.
pub fn convolution(lambda: f64, mu: f64, t: f64, horizon: f64) -> DoubleDouble {
    let s = dd(lambda) + mu;
    let lead = DoubleDouble::damped_exp(mu, t, horizon);
    if s.abs().hi < 1e-10 * lambda.abs().max(mu.abs()).max(1e-300) {
        return lead * t;
    }
    let tail = (-(DoubleDouble::prod(lambda, t) + DoubleDouble::prod(mu, horizon))).exp();
    (lead - tail) / s
}
