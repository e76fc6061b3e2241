//! Finite biorthogonal families to {e^{λ_n t}} on [0, T].
//!
//! σ_n is the minimum-L² element of span{e^{λ_k(t−T)} : k = 0..N} (λ_0 = 0)
//! with ∫σ_n e^{λ_m t} dt = δ_{nm} for m = 1..N and ∫σ_n dt = 0. Writing the
//! constraints against the damped exponentials gives G c = e^{−λ_nT} e_n,
//! so c[n] = e^{−λ_nT} c̃[n] with G c̃[n] = e_n. Only c̃ and the row log-scale
//! −λ_nT are stored; e^{−λ_nT} underflows long before c̃ does.
//!
//! Residuals are reported for the reflected functions σ̃_n = e^{λ_nT} σ_n:
//! R[n][m] = ∫σ̃_n e^{λ_m(t−T)} dt − δ_{nm}, computed by graded Gauss–Legendre
//! quadrature in double-double, never from the Gram identities.

use crate::dd::DoubleDouble;
use crate::error::{Error, Result};
use crate::linalg::{condition_number, solve_spd, SolveMethod};
use crate::quadrature::GradedRule;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const ZERO_MEAN_TOL: f64 = 1e-8;
pub const CONDITION_LIMIT: f64 = 1e14;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BiorthogonalFamily {
    pub horizon: f64,
    /// λ_0 = 0, λ_1..λ_N
    pub exponents: Vec<f64>,
    /// c̃[n−1][k]; the literal coefficient is c̃ · e^{row_log_scale[n−1]}
    pub coefficients: Vec<Vec<f64>>,
    /// −λ_n T
    pub row_log_scale: Vec<f64>,
    pub gram_condition: f64,
    pub solve_method: SolveMethod,
    /// R[n−1][m−1] for m = 1..N
    pub residual: Vec<Vec<f64>>,
    pub residual_max: f64,
    /// ∫₀ᵀ σ_n dt
    pub zero_mean: Vec<f64>,
    pub zero_mean_max: f64,
    /// ∫₀ᵀ σ̃_n dt
    pub zero_mean_reflected: Vec<f64>,
    /// ‖σ_n‖ e^{λ_nT}
    pub reflected_norms: Vec<f64>,
    pub tol: f64,
}

/// G[j][k] = ∫₀ᵀ e^{(λ_j+λ_k)(t−T)} dt.
pub fn gram_matrix(exponents: &[f64], horizon: f64) -> DMatrix<f64> {
    let n = exponents.len();
    DMatrix::from_fn(n, n, |j, k| damped_integral(exponents[j] + exponents[k], horizon))
}

/// ∫₀ᵀ e^{s(t−T)} dt, equal to T when s = 0.
pub fn damped_integral(s: f64, horizon: f64) -> f64 {
    if s == 0.0 {
        horizon
    } else {
        -(-s * horizon).exp_m1() / s
    }
}

fn with_zero(lambdas: &[f64]) -> Vec<f64> {
    let mut e = Vec::with_capacity(lambdas.len() + 1);
    e.push(0.0);
    e.extend_from_slice(lambdas);
    e
}

/// Largest N for which the (N+1)×(N+1) Gram matrix over λ_0, λ_1..λ_N stays below `limit`.
pub fn max_admissible_modes(lambdas: &[f64], horizon: f64, limit: f64) -> usize {
    let g = gram_matrix(&with_zero(lambdas), horizon);
    (1..=lambdas.len())
        .take_while(|&n| condition_number(&g.view((0, 0), (n + 1, n + 1)).into_owned()) <= limit)
        .last()
        .unwrap_or(0)
}

fn validate(lambdas: &[f64], horizon: f64) -> Result<()> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    if lambdas.is_empty() {
        return Err(Error::Domain("at least one exponent is required".into()));
    }
    if !lambdas.iter().all(|l| l.is_finite() && *l > 0.0) {
        return Err(Error::Domain("exponents must be positive and finite".into()));
    }
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("exponents must be strictly increasing".into()));
    }
    Ok(())
}

pub fn build_biortho(lambdas: &[f64], horizon: f64, tol: f64) -> Result<BiorthogonalFamily> {
    validate(lambdas, horizon)?;
    let n = lambdas.len();
    let exponents = with_zero(lambdas);
    let g = gram_matrix(&exponents, horizon);
    let cond = condition_number(&g);
    if !(cond <= CONDITION_LIMIT) {
        return Err(Error::Conditioning {
            condition: cond,
            limit: CONDITION_LIMIT,
            horizon,
            max_modes: max_admissible_modes(lambdas, horizon, CONDITION_LIMIT),
        });
    }
    // columns 1..N of the identity: constraint m = 0 is the zero mean
    let rhs = DMatrix::from_fn(n + 1, n, |i, j| if i == j + 1 { 1.0 } else { 0.0 });
    let sol = solve_spd(&g, &rhs);
    let coefficients: Vec<Vec<f64>> = (0..n)
        .map(|col| sol.solution.column(col).iter().copied().collect())
        .collect();

    let mut fam = BiorthogonalFamily {
        horizon,
        row_log_scale: lambdas.iter().map(|l| -l * horizon).collect(),
        exponents,
        coefficients,
        gram_condition: cond,
        solve_method: sol.method,
        residual: Vec::new(),
        residual_max: 0.0,
        zero_mean: Vec::new(),
        zero_mean_max: 0.0,
        zero_mean_reflected: Vec::new(),
        reflected_norms: Vec::new(),
        tol,
    };
    let moments = fam.reflected_moments(&GradedRule::default());
    fam.residual = moments
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row[1..]
                .iter()
                .enumerate()
                .map(|(m, v)| if m == i { v - 1.0 } else { *v })
                .collect()
        })
        .collect();
    fam.zero_mean_reflected = moments.iter().map(|row| row[0]).collect();
    fam.zero_mean = fam
        .zero_mean_reflected
        .iter()
        .zip(&fam.row_log_scale)
        .map(|(z, s)| z * s.exp())
        .collect();
    fam.residual_max = fam.residual.iter().flatten().fold(0.0f64, |a, r| a.max(r.abs()));
    fam.zero_mean_max = fam.zero_mean.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    // ‖σ̃_n‖² = c̃ᵀ G c̃ = c̃[n][n] because G c̃ = e_n
    fam.reflected_norms = (0..n).map(|i| fam.coefficients[i][i + 1].max(0.0).sqrt()).collect();

    if !(fam.residual_max <= tol) {
        return Err(Error::Accuracy {
            residual: fam.residual_max,
            tol,
        });
    }
    if !(fam.zero_mean_max <= ZERO_MEAN_TOL) {
        return Err(Error::Accuracy {
            residual: fam.zero_mean_max,
            tol: ZERO_MEAN_TOL,
        });
    }
    Ok(fam)
}

impl BiorthogonalFamily {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// λ_1..λ_N
    pub fn lambdas(&self) -> &[f64] {
        &self.exponents[1..]
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.len() {
            return Err(Error::Usage(format!("index {n} outside 1..={}", self.len())));
        }
        Ok(())
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [0, {}]", self.horizon)));
        }
        Ok(())
    }

    /// Literal coefficient c[n][k]; underflows to 0 once λ_nT exceeds ~745.
    pub fn coefficient(&self, n: usize, k: usize) -> f64 {
        self.coefficients[n - 1][k] * self.row_log_scale[n - 1].exp()
    }

    /// e^{λ_k(t−T)} for every exponent.
    pub(crate) fn damped_exps(&self, t: f64) -> Vec<DoubleDouble> {
        self.exponents
            .iter()
            .map(|&l| DoubleDouble::damped_exp(l, t, self.horizon))
            .collect()
    }

    pub(crate) fn sigma_reflected_dd(&self, n: usize, exps: &[DoubleDouble]) -> DoubleDouble {
        self.coefficients[n - 1]
            .iter()
            .zip(exps)
            .fold(DoubleDouble::ZERO, |acc, (&c, &e)| acc + e * c)
    }

    /// σ̃_n(t) = e^{λ_nT} σ_n(t).
    pub fn eval_sigma_reflected(&self, n: usize, t: f64) -> Result<f64> {
        self.check_index(n)?;
        self.check_time(t)?;
        Ok(self.sigma_reflected_dd(n, &self.damped_exps(t)).to_f64())
    }

    /// σ_n(t) = Σ_k c[n][k] e^{λ_k(t−T)}.
    pub fn eval_sigma(&self, n: usize, t: f64) -> Result<f64> {
        self.check_index(n)?;
        self.check_time(t)?;
        let s = self.sigma_reflected_dd(n, &self.damped_exps(t));
        Ok((s * DoubleDouble::from_f64(self.row_log_scale[n - 1]).exp()).to_f64())
    }

    /// ‖σ_n‖_{L²(0,T)}.
    pub fn norm(&self, n: usize) -> f64 {
        self.reflected_norms[n - 1] * self.row_log_scale[n - 1].exp()
    }

    /// ∫₀ᵀ σ̃_n e^{λ_m(t−T)} dt for n = 1..N and m = 0..N, by quadrature.
    pub fn reflected_moments(&self, rule: &GradedRule) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut acc = vec![vec![DoubleDouble::ZERO; n + 1]; n];
        for (t, w) in rule.points(0.0, self.horizon) {
            let exps = self.damped_exps(t);
            for (i, row) in acc.iter_mut().enumerate() {
                let s = self.sigma_reflected_dd(i + 1, &exps) * w;
                for (slot, &e) in row.iter_mut().zip(&exps) {
                    *slot = *slot + s * e;
                }
            }
        }
        acc.into_iter()
            .map(|row| row.into_iter().map(|v| v.to_f64()).collect())
            .collect()
    }

    /// Literal residual ∫σ_n e^{λ_m t} dt − δ_{nm} = e^{(λ_m−λ_n)T}(R[n][m] + δ_{nm}) − δ_{nm}.
    ///
    /// Above the diagonal the factor e^{(λ_m−λ_n)T} multiplies whatever error the
    /// stored coefficients carry; entries may be huge or infinite.
    pub fn literal_residual(&self) -> Vec<Vec<f64>> {
        let l = self.lambdas();
        self.residual
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(m, &r)| {
                        if m == i {
                            r
                        } else {
                            ((l[m] - l[i]) * self.horizon).exp() * r
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// ⟨σ̃_m, σ̃_n⟩ = c̃[m][n] (symmetric up to rounding).
    pub fn reflected_gram(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| 0.5 * (self.coefficients[i][j + 1] + self.coefficients[j][i + 1]))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundProfile {
    /// fitted slope K
    pub k: f64,
    /// fitted intercept log B_T
    pub log_bt: f64,
    pub bt: f64,
    /// log(‖σ_n‖e^{λ_nT}) − (log B_T + K√λ_n)
    pub margins: Vec<f64>,
    pub max_margin: f64,
    /// rms(margins) / rms(log(‖σ_n‖e^{λ_nT}))
    pub relative_residual: f64,
}

/// Least-squares fit of log(‖σ_n‖e^{λ_nT}) against √λ_n.
pub fn bound_profile(fam: &BiorthogonalFamily) -> Result<BoundProfile> {
    if fam.len() < 3 {
        return Err(Error::Usage(format!(
            "bound profile needs at least 3 modes, got {}",
            fam.len()
        )));
    }
    let xs: Vec<f64> = fam.lambdas().iter().map(|l| l.sqrt()).collect();
    let ys: Vec<f64> = fam.reflected_norms.iter().map(|v| v.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let k = sxy / sxx;
    let log_bt = my - k * mx;
    let margins: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - (log_bt + k * x)).collect();
    let rms = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
    let scale = rms(&ys);
    Ok(BoundProfile {
        k,
        log_bt,
        bt: log_bt.exp(),
        max_margin: margins.iter().fold(0.0f64, |a, r| a.max(r.abs())),
        relative_residual: if scale > 0.0 { rms(&margins) / scale } else { 0.0 },
        margins,
    })
}
