//! Gamma function (Lanczos approximation, g = 7, nine coefficients).

use crate::error::{Error, Result};
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(x) for x > 0.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("gamma requires a positive finite argument, got {x}")));
    }
    Ok(gamma_positive(x))
}

pub(crate) fn gamma_positive(x: f64) -> f64 {
    if x < 0.5 {
        // reflection keeps the Lanczos sum in its accurate range
        return PI / ((PI * x).sin() * gamma_positive(1.0 - x));
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    // split power so large arguments do not overflow before the exponential damps them
    let half = t.powf(0.5 * (z + 0.5));
    (2.0 * PI).sqrt() * half * (half * (-t).exp()) * acc
}
