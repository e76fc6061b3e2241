//! Boundary controls from the moment method.
//!
//! With d_m = (λ_m/r_m)(μ⁰_m − μ^T_m e^{λ_mT}) the derivative of the control is
//! g = Σ_m d_m σ_m and G(t) = ∫₀ᵗ g. Since σ_m = e^{−λ_mT} σ̃_m, everything is
//! carried through the damped weights w_m = d_m e^{−λ_mT}, which never
//! overflow; d_m itself is materialized only when it fits in a double.
//!
//! Expanding σ̃_m over the family's exponentials gives
//! g(t) = Σ_k a_k e^{λ_k(t−T)} with a = C̃ᵀw, and
//! G(t) = a_0 t + Σ_{k≥1} (a_k/λ_k)(e^{λ_k(t−T)} − e^{−λ_kT}).

use crate::dd::{self, DoubleDouble};
use crate::error::{Error, Result};
use crate::integrals;
use crate::moment::BiorthogonalFamily;
use crate::quadrature::GradedRule;
use crate::spectrum::{MomentVector, SpectralBasis};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// ln(1e300): largest magnitude a materialized e^{λT}-scale value may take.
pub const LOG_OVERFLOW: f64 = 690.775_527_898_213_7;
pub const NORM_CHECK_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ControlNorms {
    pub g_l2: f64,
    pub big_g_l2: f64,
    pub h1: f64,
    pub g_l2_quadrature: f64,
    pub big_g_l2_quadrature: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ControlSignal {
    pub alpha: f64,
    pub horizon: f64,
    /// λ_0 = 0, λ_1..λ_N
    pub exponents: Vec<f64>,
    /// d_m, m = 1..N
    pub derivative_coeffs: Vec<f64>,
    /// w_m = d_m e^{−λ_mT}
    pub damped_weights: Vec<f64>,
    /// a_k with g(t) = Σ_k a_k e^{λ_k(t−T)}
    pub g_coeffs: Vec<DoubleDouble>,
    /// G(T)
    pub endpoint: f64,
    pub norms: ControlNorms,
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn check_alignment(basis: &SpectralBasis, fam: &BiorthogonalFamily) -> Result<()> {
    let n = fam.len();
    if basis.len() < n {
        return Err(Error::Usage(format!(
            "basis has {} modes, family has {n}",
            basis.len()
        )));
    }
    if basis.eigenvalues()[..n] != *fam.lambdas() {
        return Err(Error::Usage("family was not built from this basis".into()));
    }
    Ok(())
}

pub fn synthesize(
    basis: &SpectralBasis,
    fam: &BiorthogonalFamily,
    mu0: &MomentVector,
    mu_t: &MomentVector,
) -> Result<ControlSignal> {
    check_alignment(basis, fam)?;
    let n = fam.len();
    if mu0.len() != n || mu_t.len() != n {
        return Err(Error::Usage(format!(
            "moment vectors have {} and {} entries, family has {n}",
            mu0.len(),
            mu_t.len()
        )));
    }
    let horizon = fam.horizon;
    let mut derivative_coeffs = Vec::with_capacity(n);
    let mut damped_weights = Vec::with_capacity(n);
    for (m, mode) in basis.modes[..n].iter().enumerate() {
        let (lambda, r) = (mode.eigenvalue, mode.neumann_trace);
        let (a0, at) = (mu0.coefficients[m], mu_t.coefficients[m]);
        let decay = (-lambda * horizon).exp();
        damped_weights.push(lambda / r * (a0 * decay - at));
        let d = if at == 0.0 {
            lambda / r * a0
        } else {
            let log_target = at.abs().ln() + lambda * horizon;
            if log_target > LOG_OVERFLOW {
                return Err(Error::TargetStiffness {
                    mode: m + 1,
                    log_magnitude: log_target,
                });
            }
            lambda / r * (a0 - at * (lambda * horizon).exp())
        };
        if !(d.abs() <= 1e300) {
            return Err(Error::TargetStiffness {
                mode: m + 1,
                log_magnitude: (lambda / r).ln() + (a0 - at * (lambda * horizon).exp()).abs().ln(),
            });
        }
        derivative_coeffs.push(d);
    }
    let g_coeffs: Vec<DoubleDouble> = (0..=n)
        .map(|k| {
            let col: Vec<f64> = fam.coefficients.iter().map(|row| row[k]).collect();
            dd::dot(&col, &damped_weights)
        })
        .collect();
    let mut signal = ControlSignal {
        alpha: basis.alpha,
        horizon,
        exponents: fam.exponents.clone(),
        derivative_coeffs,
        damped_weights,
        g_coeffs,
        endpoint: 0.0,
        norms: ControlNorms {
            g_l2: 0.0,
            big_g_l2: 0.0,
            h1: 0.0,
            g_l2_quadrature: 0.0,
            big_g_l2_quadrature: 0.0,
        },
    };
    signal.endpoint = signal.big_g_dd(horizon).to_f64();
    let g_sq = signal.g_norm_sq().to_f64().max(0.0);
    let big_sq = signal.big_g_norm_sq().to_f64().max(0.0);
    let (qg, qbig) = signal.quadrature_norms_sq(&GradedRule::default());
    signal.norms = ControlNorms {
        g_l2: g_sq.sqrt(),
        big_g_l2: big_sq.sqrt(),
        h1: (g_sq + big_sq).sqrt(),
        g_l2_quadrature: qg.sqrt(),
        big_g_l2_quadrature: qbig.sqrt(),
    };
    let gap = relative_gap(signal.norms.g_l2, signal.norms.g_l2_quadrature)
        .max(relative_gap(signal.norms.big_g_l2, signal.norms.big_g_l2_quadrature));
    if gap > NORM_CHECK_TOL {
        return Err(Error::Verification(format!(
            "closed-form and quadrature control norms differ by {gap:e} (relative)"
        )));
    }
    Ok(signal)
}

impl ControlSignal {
    /// G ≡ 0 over the given family exponents (λ_0 = 0 first).
    pub fn zero(alpha: f64, horizon: f64, exponents: Vec<f64>) -> Self {
        let n = exponents.len().saturating_sub(1);
        ControlSignal {
            alpha,
            horizon,
            derivative_coeffs: vec![0.0; n],
            damped_weights: vec![0.0; n],
            g_coeffs: vec![DoubleDouble::ZERO; n + 1],
            exponents,
            endpoint: 0.0,
            norms: ControlNorms {
                g_l2: 0.0,
                big_g_l2: 0.0,
                h1: 0.0,
                g_l2_quadrature: 0.0,
                big_g_l2_quadrature: 0.0,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.derivative_coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.derivative_coeffs.is_empty()
    }

    fn dexps(&self, t: f64) -> impl Iterator<Item = DoubleDouble> + '_ {
        self.exponents
            .iter()
            .map(move |&l| DoubleDouble::damped_exp(l, t, self.horizon))
    }

    pub(crate) fn g_dd(&self, t: f64) -> DoubleDouble {
        self.g_coeffs
            .iter()
            .zip(self.dexps(t))
            .fold(DoubleDouble::ZERO, |acc, (&a, e)| acc + a * e)
    }

    pub(crate) fn big_g_dd(&self, t: f64) -> DoubleDouble {
        let mut acc = self.g_coeffs[0] * t;
        for (k, e) in self.dexps(t).enumerate().skip(1) {
            let l = self.exponents[k];
            let shifted = e - integrals::decay(l, self.horizon);
            acc = acc + (self.g_coeffs[k] * shifted).div_f64(l);
        }
        acc
    }

    /// g(t) = G′(t).
    pub fn g(&self, t: f64) -> f64 {
        self.g_dd(t).to_f64()
    }

    /// G(t) = ∫₀ᵗ g.
    pub fn big_g(&self, t: f64) -> f64 {
        self.big_g_dd(t).to_f64()
    }

    /// Σ_jk a_j a_k ∫₀ᵀ e^{(λ_j+λ_k)(t−T)} dt.
    fn g_norm_sq(&self) -> DoubleDouble {
        let n = self.exponents.len();
        let mut acc = DoubleDouble::ZERO;
        for j in 0..n {
            for k in 0..n {
                let e = integrals::damped(self.exponents[j], self.exponents[k], self.horizon);
                acc = acc + self.g_coeffs[j] * self.g_coeffs[k] * e;
            }
        }
        acc
    }

    /// G = Σ_k b_k ψ_k with ψ_0 = t, ψ_k = e^{λ_k(t−T)} − e^{−λ_kT}.
    fn big_g_basis(&self) -> Vec<DoubleDouble> {
        self.g_coeffs
            .iter()
            .enumerate()
            .map(|(k, &a)| if k == 0 { a } else { a.div_f64(self.exponents[k]) })
            .collect()
    }

    fn big_g_norm_sq(&self) -> DoubleDouble {
        let t = self.horizon;
        let b = self.big_g_basis();
        let l = &self.exponents;
        let decays: Vec<DoubleDouble> = l.iter().map(|&x| integrals::decay(x, t)).collect();
        let t_sq_half = DoubleDouble::prod(t, t) * 0.5;
        let inner = |j: usize, k: usize| -> DoubleDouble {
            match (j, k) {
                (0, 0) => DoubleDouble::prod(t, t) * t / DoubleDouble::from_f64(3.0),
                (0, k) | (k, 0) => integrals::t_damped(l[k], t) - decays[k] * t_sq_half,
                (j, k) => {
                    integrals::damped(l[j], l[k], t) - decays[k] * integrals::damped(l[j], 0.0, t)
                        - decays[j] * integrals::damped(l[k], 0.0, t)
                        + decays[j] * decays[k] * t
                }
            }
        };
        let mut acc = DoubleDouble::ZERO;
        for j in 0..b.len() {
            for k in 0..b.len() {
                acc = acc + b[j] * b[k] * inner(j, k);
            }
        }
        acc
    }

    /// ∫₀ᵀ g² and ∫₀ᵀ G² by graded quadrature of the pointwise values.
    pub fn quadrature_norms_sq(&self, rule: &GradedRule) -> (f64, f64) {
        let mut g_acc = DoubleDouble::ZERO;
        let mut big_acc = DoubleDouble::ZERO;
        for (t, w) in rule.points(0.0, self.horizon) {
            let g = self.g_dd(t);
            let big = self.big_g_dd(t);
            g_acc = g_acc + g * g * w;
            big_acc = big_acc + big * big * w;
        }
        (g_acc.to_f64(), big_acc.to_f64())
    }

    /// ∫₀ᵀ G(t) e^{λ(t−T)} dt in closed form.
    pub(crate) fn damped_moment(&self, lambda: f64) -> DoubleDouble {
        let t = self.horizon;
        let b = self.big_g_basis();
        let mut acc = b[0] * integrals::t_damped(lambda, t);
        let base = integrals::damped(lambda, 0.0, t);
        for k in 1..b.len() {
            let l = self.exponents[k];
            let term = integrals::damped(l, lambda, t) - integrals::decay(l, t) * base;
            acc = acc + b[k] * term;
        }
        acc
    }

    /// ∫₀ᵗ e^{−λ(t−s)} g(s) ds in closed form.
    pub(crate) fn duhamel(&self, lambda: f64, t: f64) -> DoubleDouble {
        self.g_coeffs
            .iter()
            .zip(&self.exponents)
            .fold(DoubleDouble::ZERO, |acc, (&a, &mu)| {
                acc + a * integrals::convolution(lambda, mu, t, self.horizon)
            })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `t,g,G` rows on a uniform grid of `points` + 1 nodes.
    pub fn to_csv(&self, points: usize) -> String {
        let points = points.max(1);
        let mut out = String::from("t,g,G\n");
        for i in 0..=points {
            let t = self.horizon * i as f64 / points as f64;
            let _ = writeln!(out, "{:e},{:e},{:e}", t, self.g(t), self.big_g(t));
        }
        out
    }
}

/// e^{−λ_nT}[r_n∫₀ᵀG e^{λ_n t}dt + μ⁰_n − μ^T_n e^{λ_nT}] for n = 1..N+n_extra.
pub fn moment_residual(
    basis: &SpectralBasis,
    signal: &ControlSignal,
    mu0: &MomentVector,
    mu_t: &MomentVector,
    n_extra: usize,
) -> Result<Vec<f64>> {
    let total = signal.len() + n_extra;
    if basis.len() < total || mu0.len() < total || mu_t.len() < total {
        return Err(Error::Usage(format!(
            "{total} modes requested; basis has {}, moment vectors {} and {}",
            basis.len(),
            mu0.len(),
            mu_t.len()
        )));
    }
    Ok(basis.modes[..total]
        .iter()
        .enumerate()
        .map(|(i, mode)| {
            let free = integrals::decay(mode.eigenvalue, signal.horizon) * mu0.coefficients[i];
            (signal.damped_moment(mode.eigenvalue) * mode.neumann_trace + free + (-mu_t.coefficients[i]))
                .to_f64()
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    FinitelySupported,
    GeometricDecayPass,
    Fail,
}

impl Verdict {
    pub fn passes(self) -> bool {
        self != Verdict::Fail
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::FinitelySupported => "finitely-supported",
            Verdict::GeometricDecayPass => "geometric-decay-pass",
            Verdict::Fail => "fail",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Reachability {
    pub k: f64,
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// largest of the last (up to three) consecutive term ratios
    pub tail_ratio: Option<f64>,
    pub verdict: Verdict,
}

/// Partial sums of Σ m^{3/2}|μ^T_m| e^{Kκπm} and a ratio-test verdict on the
/// supplied terms. A trailing run of fewer than two nonzero terms counts as
/// finite support.
pub fn reachability_score(mu_t: &MomentVector, alpha: f64, k: f64) -> Result<Reachability> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Domain(format!("K must be positive, got {k}")));
    }
    let kappa = crate::spectrum::kappa_of(alpha);
    let rate = k * kappa * std::f64::consts::PI;
    // terms are formed in log space; e^{Kκπm} alone overflows for long vectors
    let terms: Vec<f64> = mu_t
        .coefficients
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            if c == 0.0 {
                0.0
            } else {
                let m = (i + 1) as f64;
                (1.5 * m.ln() + c.abs().ln() + rate * m).exp()
            }
        })
        .collect();
    let partial_sums: Vec<f64> = terms
        .iter()
        .scan(0.0, |s, &t| {
            *s += t;
            Some(*s)
        })
        .collect();
    let run = terms.iter().rev().take_while(|&&t| t != 0.0).count();
    let (tail_ratio, verdict) = if run < 2 {
        (None, Verdict::FinitelySupported)
    } else {
        let tail = &terms[terms.len() - run..];
        let ratios: Vec<f64> = tail.windows(2).map(|w| w[1] / w[0]).collect();
        let worst = ratios.iter().rev().take(3).fold(0.0f64, |a, &r| a.max(r));
        let v = if worst < 1.0 {
            Verdict::GeometricDecayPass
        } else {
            Verdict::Fail
        };
        (Some(worst), v)
    };
    Ok(Reachability {
        k,
        terms,
        partial_sums,
        tail_ratio,
        verdict,
    })
}
