//! Null-controllability cost across α.
//!
//! The upper estimate is ‖G‖_{H¹} of the moment-method null control, accepted
//! only after its moment residuals and a simulated terminal state check out.
//! The lower bound comes from the per-mode identity
//! r_n ∫₀ᵀ G e^{λ_n t} dt = −μ⁰_n and Cauchy–Schwarz, so it holds for every
//! admissible control:
//!
//! ```text
//! ‖G‖_{L²} ≥ |μ⁰_n| e^{−λ_nT} √(2λ_n) / (r_n √(1 − e^{−2λ_nT})).
//! ```

use crate::control::{moment_residual, synthesize};
use crate::error::{Error, Result};
use crate::moment::{build_biortho, DEFAULT_TOL};
use crate::profile::InitialState;
use crate::simulate::{evolve, terminal_error, DEFAULT_GRID, ORACLE_TOL};
use crate::spectrum::{make_basis, make_limit_basis, MomentVector, SpectralBasis};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

pub const MIN_MODES: usize = 4;
pub const TERMINAL_TOL: f64 = 1e-5;
pub const PROJECTION_TOL: f64 = 1e-6;
/// Above this α the lower bound only uses modes whose coefficient is close to
/// its α = 1 limit.
pub const LIMIT_SELECTION_ALPHA: f64 = 0.9;
pub const STABLE_REL: f64 = 0.1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UpperEstimate {
    pub value: f64,
    pub modes_used: usize,
    pub moment_residual_max: f64,
    pub terminal_rss: f64,
    pub oracle_deviation: f64,
    pub endpoint: f64,
    /// failures that triggered a retry with fewer modes
    pub retries: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LowerBound {
    pub value: f64,
    /// mode attaining the bound (None for u0 = 0)
    pub mode: Option<usize>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Domain(format!("cost needs 0 <= alpha < 1, got {alpha}")));
    }
    Ok(())
}

fn upper_at(alpha: f64, u0: &MomentVector, horizon: f64, n: usize) -> Result<UpperEstimate> {
    let basis = make_basis(alpha, n)?;
    let mu0 = u0.truncated(n);
    let zero = MomentVector::zeros(alpha, n);
    let fam = build_biortho(&basis.eigenvalues(), horizon, DEFAULT_TOL)?;
    let signal = synthesize(&basis, &fam, &mu0, &zero)?;
    let residual = moment_residual(&basis, &signal, &mu0, &zero, 0)?;
    let moment_residual_max = residual.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    if !(moment_residual_max < fam.tol) {
        return Err(Error::Verification(format!(
            "moment residual {moment_residual_max:e} exceeds {:e}",
            fam.tol
        )));
    }
    let traj = evolve(&basis, &mu0, &signal, DEFAULT_GRID)?;
    let te = terminal_error(&traj, &zero)?;
    if !(te.controlled_rss < TERMINAL_TOL && traj.oracle_deviation < ORACLE_TOL) {
        return Err(Error::Verification(format!(
            "terminal residual {:e}, propagation deviation {:e}",
            te.controlled_rss, traj.oracle_deviation
        )));
    }
    Ok(UpperEstimate {
        value: signal.norms.h1,
        modes_used: n,
        moment_residual_max,
        terminal_rss: te.controlled_rss,
        oracle_deviation: traj.oracle_deviation,
        endpoint: signal.endpoint,
        retries: Vec::new(),
    })
}

/// ‖G‖_{H¹} of the verified null control for `u0`, retrying with fewer modes
/// (down to 4) when the biorthogonal family cannot be built.
pub fn cost_upper(alpha: f64, u0: &MomentVector, horizon: f64, modes: usize) -> Result<UpperEstimate> {
    check_alpha(alpha)?;
    if u0.alpha != alpha {
        return Err(Error::Usage(format!(
            "initial moments belong to alpha = {}, not {alpha}",
            u0.alpha
        )));
    }
    let mut retries = Vec::new();
    let mut n = modes.max(1);
    loop {
        match upper_at(alpha, u0, horizon, n) {
            Ok(mut est) => {
                est.retries = retries;
                return Ok(est);
            }
            Err(e @ (Error::Conditioning { .. } | Error::Accuracy { .. })) if n > MIN_MODES => {
                retries.push(format!("N = {n}: {e}"));
                n -= 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Per-mode Cauchy–Schwarz bounds |μ⁰_n| e^{−λ_nT} √(2λ_n) / (r_n √(1 − e^{−2λ_nT})).
pub fn per_mode_lower(basis: &SpectralBasis, u0: &MomentVector, horizon: f64) -> Vec<f64> {
    basis
        .modes
        .iter()
        .zip(&u0.coefficients)
        .map(|(m, &c)| {
            let l = m.eigenvalue;
            c.abs() * (-l * horizon).exp() * (2.0 * l).sqrt()
                / (m.neumann_trace * (-(-2.0 * l * horizon).exp_m1()).sqrt())
        })
        .collect()
}

fn pick(bounds: &[f64], allowed: impl Fn(usize) -> bool) -> LowerBound {
    let mut best = LowerBound { value: 0.0, mode: None };
    for (i, &b) in bounds.iter().enumerate() {
        if allowed(i) && b > best.value {
            best = LowerBound {
                value: b,
                mode: Some(i + 1),
            };
        }
    }
    best
}

/// max_n of the per-mode bounds over the modes of `u0`.
pub fn cost_lower(alpha: f64, u0: &MomentVector, horizon: f64) -> Result<LowerBound> {
    check_alpha(alpha)?;
    if u0.is_empty() {
        return Ok(LowerBound { value: 0.0, mode: None });
    }
    let basis = make_basis(alpha, u0.len())?;
    Ok(pick(&per_mode_lower(&basis, u0, horizon), |_| true))
}

/// Like [`cost_lower`], but above α = 0.9 only modes whose coefficient lies
/// within 10% of its limit-basis coefficient `limit[n]` are used (all modes
/// when none qualifies).
pub fn cost_lower_stable(alpha: f64, u0: &MomentVector, horizon: f64, limit: &[f64]) -> Result<LowerBound> {
    check_alpha(alpha)?;
    if alpha <= LIMIT_SELECTION_ALPHA || u0.is_empty() {
        return cost_lower(alpha, u0, horizon);
    }
    let basis = make_basis(alpha, u0.len())?;
    let bounds = per_mode_lower(&basis, u0, horizon);
    let stable = |i: usize| {
        limit
            .get(i)
            .is_some_and(|&l| l != 0.0 && (u0.coefficients[i] - l).abs() <= STABLE_REL * l.abs())
    };
    let chosen = pick(&bounds, stable);
    if chosen.mode.is_some() {
        Ok(chosen)
    } else {
        Ok(pick(&bounds, |_| true))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CostRow {
    pub alpha: f64,
    pub upper: Option<f64>,
    pub lower: f64,
    pub product_upper: Option<f64>,
    pub product_lower: f64,
    pub modes_used: Option<usize>,
    pub lower_mode: Option<usize>,
    /// ‖μ⁰‖ before normalization
    pub u0_norm: f64,
    /// lower bound for the unnormalized state
    pub lower_raw: f64,
    pub upper_detail: Option<UpperEstimate>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CostReport {
    pub u0: String,
    pub horizon: f64,
    pub modes: usize,
    pub rows: Vec<CostRow>,
    /// max/min of product_upper over the rows where it is available
    pub product_upper_ratio: Option<f64>,
    pub product_lower_ratio: Option<f64>,
}

fn spread(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.filter(|x| *x > 0.0).collect();
    if v.is_empty() {
        return None;
    }
    let max = v.iter().fold(f64::MIN, |a, &b| a.max(b));
    let min = v.iter().fold(f64::MAX, |a, &b| a.min(b));
    Some(max / min)
}

fn sweep_row(alpha: f64, u0: &InitialState, horizon: f64, modes: usize) -> Result<CostRow> {
    let basis = make_basis(alpha, modes)?;
    let raw = u0.moments(&basis, PROJECTION_TOL)?;
    let u0_norm = raw.norm();
    let mu0 = raw.normalized();
    let limit = make_limit_basis(modes)?;
    let limit_coeffs: Vec<f64> = u0
        .limit_moments(&limit)
        .iter()
        .map(|c| if u0_norm > 0.0 { c / u0_norm } else { *c })
        .collect();
    let lower = cost_lower_stable(alpha, &mu0, horizon, &limit_coeffs)?;
    let (upper, error) = match cost_upper(alpha, &mu0, horizon, modes) {
        Ok(u) => (Some(u), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let scale = 1.0 - alpha;
    Ok(CostRow {
        alpha,
        upper: upper.as_ref().map(|u| u.value),
        lower: lower.value,
        product_upper: upper.as_ref().map(|u| scale * u.value),
        product_lower: scale * lower.value,
        modes_used: upper.as_ref().map(|u| u.modes_used),
        lower_mode: lower.mode,
        u0_norm,
        lower_raw: lower.value * u0_norm,
        upper_detail: upper,
        error,
    })
}

/// Runs the upper and lower estimates for each α (sorted ascending). Failures at
/// one α are recorded in that row and the sweep continues.
pub fn cost_sweep(alphas: &[f64], u0: &InitialState, horizon: f64, modes: usize) -> Result<CostReport> {
    if alphas.is_empty() {
        return Err(Error::Usage("empty alpha grid".into()));
    }
    for &a in alphas {
        check_alpha(a)?;
    }
    let mut sorted = alphas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rows: Vec<CostRow> = sorted
        .iter()
        .map(|&alpha| {
            sweep_row(alpha, u0, horizon, modes).unwrap_or_else(|e| CostRow {
                alpha,
                upper: None,
                lower: f64::NAN,
                product_upper: None,
                product_lower: f64::NAN,
                modes_used: None,
                lower_mode: None,
                u0_norm: f64::NAN,
                lower_raw: f64::NAN,
                upper_detail: None,
                error: Some(e.to_string()),
            })
        })
        .collect();
    Ok(CostReport {
        u0: u0.descriptor(),
        horizon,
        modes,
        product_upper_ratio: spread(rows.iter().filter_map(|r| r.product_upper)),
        product_lower_ratio: spread(rows.iter().map(|r| r.product_lower).filter(|x| x.is_finite())),
        rows,
    })
}

impl CostReport {
    /// Every row has both bounds and lower ≤ upper.
    pub fn certified(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.upper.is_some_and(|u| r.lower.is_finite() && r.lower <= u))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,upper,lower,product_upper,product_lower,N_used\n");
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:e},{},{:e},{}",
                r.alpha,
                opt(r.upper),
                r.lower,
                opt(r.product_upper),
                r.product_lower,
                r.modes_used.map_or(String::new(), |n| n.to_string())
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
