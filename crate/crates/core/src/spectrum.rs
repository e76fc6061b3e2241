//! Spectral data of y ↦ −(x^α y′)′ on (0, 1) with Dirichlet conditions.
//!
//! For 0 ≤ α < 1 the eigenpairs are
//!
//! ```text
//! λ_n = κ² j_{ν,n}²,   Φ_n(x) = C_n x^{(1−α)/2} J_ν(j_{ν,n} x^κ),
//! ν = (1−α)/(2−α),  κ = (2−α)/2,  C_n = √(2κ) / |J′_ν(j_{ν,n})|,
//! ```
//!
//! and the weighted flux x^α Φ_n′ has the finite limit r_n at the degenerate
//! end. Integrals against Φ_n are computed after the substitution y = x^κ,
//! which turns Φ_n dx into y^{ν + 1/κ − 1} J_ν(j y) dy and removes the
//! algebraic endpoint behaviour.

use crate::bessel::{self, ZeroRecord};
use crate::error::{Error, Result};
use crate::quadrature::{CompositeRule, QuadratureSettings};
use crate::special::gamma_positive;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub fn nu_of(alpha: f64) -> f64 {
    (1.0 - alpha) / (2.0 - alpha)
}

pub fn kappa_of(alpha: f64) -> f64 {
    (2.0 - alpha) / 2.0
}

/// Lower bound on √λ_1 shared by every α ∈ [0, 1).
pub const SQRT_LAMBDA1_FLOOR: f64 = 3.0 * PI / 8.0;
/// Lower bound on consecutive gaps of √λ_n shared by every α ∈ [0, 1).
pub const SQRT_GAP_FLOOR: f64 = 7.0 * PI / 16.0;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Mode {
    pub index: usize,
    pub zero: f64,
    pub eigenvalue: f64,
    pub norm_const: f64,
    pub neumann_trace: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub newton_iters: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapCertificate {
    pub sqrt_lambda1: f64,
    pub min_gap: f64,
    pub first_ok: bool,
    pub gaps_ok: bool,
}

impl GapCertificate {
    pub fn holds(&self) -> bool {
        self.first_ok && self.gaps_ok
    }

    fn from_eigenvalues(lambdas: &[f64]) -> Self {
        let roots: Vec<f64> = lambdas.iter().map(|l| l.sqrt()).collect();
        let min_gap = roots
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        GapCertificate {
            sqrt_lambda1: roots[0],
            min_gap,
            first_ok: roots[0] >= SQRT_LAMBDA1_FLOOR,
            gaps_ok: min_gap >= SQRT_GAP_FLOOR,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralBasis {
    pub alpha: f64,
    pub nu: f64,
    pub kappa: f64,
    /// p(0) = 1/(1−α)
    pub p0: f64,
    pub modes: Vec<Mode>,
    pub gaps: GapCertificate,
}

/// Fourier–Bessel coefficients of a state against a [`SpectralBasis`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    pub alpha: f64,
    pub coefficients: Vec<f64>,
    pub basis_id: String,
    /// largest quadrature error estimate over the coefficients (0 when exact)
    #[serde(default)]
    pub quad_error: f64,
}

pub fn basis_id(alpha: f64, modes: usize) -> String {
    format!("alpha={alpha:?};N={modes}")
}

impl MomentVector {
    pub fn new(alpha: f64, coefficients: Vec<f64>) -> Result<Self> {
        if let Some(i) = coefficients.iter().position(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("moment {} is not finite", i + 1)));
        }
        let id = basis_id(alpha, coefficients.len());
        Ok(MomentVector {
            alpha,
            coefficients,
            basis_id: id,
            quad_error: 0.0,
        })
    }

    pub fn zeros(alpha: f64, len: usize) -> Self {
        MomentVector::new(alpha, vec![0.0; len]).expect("zeros are finite")
    }

    /// Basis vector e_n (1-based).
    pub fn unit(alpha: f64, len: usize, n: usize) -> Result<Self> {
        if n == 0 || n > len {
            return Err(Error::Usage(format!("mode index {n} outside 1..={len}")));
        }
        let mut c = vec![0.0; len];
        c[n - 1] = 1.0;
        MomentVector::new(alpha, c)
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn get(&self, n: usize) -> f64 {
        self.coefficients[n - 1]
    }

    pub fn norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        MomentVector {
            coefficients: self.coefficients.iter().map(|c| c * factor).collect(),
            ..self.clone()
        }
    }

    /// Unit ℓ² vector in the same direction; zero vectors are returned unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            self.clone()
        } else {
            self.scaled(1.0 / n)
        }
    }

    /// First `len` coefficients (zero-padded).
    pub fn truncated(&self, len: usize) -> Self {
        let mut c = self.coefficients.clone();
        c.resize(len, 0.0);
        MomentVector {
            coefficients: c,
            basis_id: basis_id(self.alpha, len),
            ..self.clone()
        }
    }
}

impl SpectralBasis {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn id(&self) -> String {
        basis_id(self.alpha, self.len())
    }

    pub fn mode(&self, n: usize) -> Result<&Mode> {
        if n == 0 || n > self.modes.len() {
            return Err(Error::Usage(format!(
                "mode index {n} outside 1..={}",
                self.modes.len()
            )));
        }
        Ok(&self.modes[n - 1])
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.eigenvalue).collect()
    }

    pub fn traces(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.neumann_trace).collect()
    }

    /// Φ_n(x).
    pub fn eval_eigenfunction(&self, n: usize, x: f64) -> Result<f64> {
        let mode = self.mode(n)?;
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("x = {x} outside [0, 1]")));
        }
        Ok(self.phi(mode, x))
    }

    fn phi(&self, mode: &Mode, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        mode.norm_const * x.powf(0.5 * (1.0 - self.alpha)) * bessel::j(self.nu, mode.zero * x.powf(self.kappa))
    }

    /// Weighted flux x^α Φ_n′(x) by the chain rule on the Bessel form (x > 0).
    pub fn flux(&self, n: usize, x: f64) -> Result<f64> {
        let mode = self.mode(n)?;
        if !(x > 0.0 && x <= 1.0) {
            return Err(Error::Domain(format!("flux needs x in (0, 1], got {x}")));
        }
        let a = 0.5 * (1.0 - self.alpha);
        let z = mode.zero * x.powf(self.kappa);
        let jv = bessel::j(self.nu, z);
        let jp = bessel::j_prime(self.nu, z);
        // x^α [a x^{a−1} J + x^a J′ j κ x^{κ−1}] = x^{α+a−1}[a J + κ z J′]
        Ok(mode.norm_const * x.powf(self.alpha + a - 1.0) * (a * jv + self.kappa * z * jp))
    }

    /// Centered-difference estimate of x^α Φ_n′ at `x_small`, with step x_small².
    pub fn neumann_trace_numeric(&self, n: usize, x_small: f64) -> Result<f64> {
        let mode = self.mode(n)?;
        if !(x_small > 0.0 && x_small <= 1e-3) {
            return Err(Error::Domain(format!(
                "x_small must lie in (0, 1e-3], got {x_small}"
            )));
        }
        let h = x_small * x_small;
        let d = (self.phi(mode, x_small + h) - self.phi(mode, x_small - h)) / (2.0 * h);
        Ok(x_small.powf(self.alpha) * d)
    }

    /// ρ_α j^{ν+1/2}, the large-n equivalent of r_n.
    pub fn neumann_trace_asymptotic(&self, n: usize) -> Result<f64> {
        let mode = self.mode(n)?;
        let rho = (1.0 - self.alpha) * (2.0 * self.kappa).sqrt()
            / (2f64.powf(self.nu) * gamma_positive(self.nu + 1.0))
            * (PI / 2.0).sqrt();
        Ok(rho * mode.zero.powf(self.nu + 0.5))
    }

    /// ∫₀¹ (p(x)/p(0)) Φ_n dx in closed form, r_n/λ_n.
    pub fn source_coefficient(&self, n: usize) -> Result<f64> {
        let mode = self.mode(n)?;
        Ok(mode.neumann_trace / mode.eigenvalue)
    }

    /// Same integral by substituted quadrature; p(x)/p(0) = 1 − x^{1−α} = 1 − y^{2ν}.
    pub fn source_coefficient_quadrature(&self, n: usize, rule: &CompositeRule) -> Result<f64> {
        let two_nu = 2.0 * self.nu;
        self.integrate_against(n, rule, |y, _x| 1.0 - y.powf(two_nu))
    }

    /// ∫₀¹ w Φ_n dx with w given as a function of (y, x = y^{1/κ}).
    fn integrate_against<F: Fn(f64, f64) -> f64>(&self, n: usize, rule: &CompositeRule, w: F) -> Result<f64> {
        Ok(self.integrate_against_with_estimate(n, rule, w)?.0)
    }

    fn integrate_against_with_estimate<F: Fn(f64, f64) -> f64>(
        &self,
        n: usize,
        rule: &CompositeRule,
        w: F,
    ) -> Result<(f64, f64)> {
        let mode = self.mode(n)?;
        let inv_kappa = 1.0 / self.kappa;
        let power = self.nu + inv_kappa - 1.0;
        let scale = mode.norm_const * inv_kappa;
        Ok(rule.integrate_with_estimate(0.0, 1.0, |y| {
            if y == 0.0 {
                return 0.0;
            }
            let x = y.powf(inv_kappa);
            w(y, x) * scale * y.powf(power) * bessel::j(self.nu, mode.zero * y)
        }))
    }

    /// μ_n = ∫₀¹ f Φ_n dx for n = 1..N; errors when any estimate exceeds `tol`.
    pub fn project_with<F: Fn(f64) -> f64>(&self, f: F, rule: &CompositeRule, tol: f64) -> Result<MomentVector> {
        let mut coeffs = Vec::with_capacity(self.len());
        let mut worst: f64 = 0.0;
        for n in 1..=self.len() {
            let (v, est) = self.integrate_against_with_estimate(n, rule, |_, x| f(x))?;
            if !(est <= tol) {
                return Err(Error::Quadrature {
                    estimate: est,
                    tol,
                    context: format!("projection onto mode {n} (alpha = {})", self.alpha),
                });
            }
            worst = worst.max(est);
            coeffs.push(v);
        }
        let mut mv = MomentVector::new(self.alpha, coeffs)?;
        mv.quad_error = worst;
        Ok(mv)
    }

    /// Projection with the default 8×64 substituted rule and tolerance 1e-8.
    pub fn project<F: Fn(f64) -> f64>(&self, f: F) -> Result<MomentVector> {
        self.project_with(f, &CompositeRule::new(QuadratureSettings::default()), 1e-8)
    }

    /// Quadrature Gram matrix ∫Φ_nΦ_m dx = (C_nC_m/κ) ∫ y J_ν(j_n y) J_ν(j_m y) dy.
    pub fn gram(&self, rule: &CompositeRule) -> DMatrix<f64> {
        let n = self.len();
        let pts = rule.points(0.0, 1.0);
        let vals: Vec<Vec<f64>> = self
            .modes
            .iter()
            .map(|m| pts.iter().map(|&(y, _)| bessel::j(self.nu, m.zero * y)).collect())
            .collect();
        DMatrix::from_fn(n, n, |i, k| {
            let s: f64 = pts
                .iter()
                .enumerate()
                .map(|(p, &(y, w))| w * y * vals[i][p] * vals[k][p])
                .sum();
            s * self.modes[i].norm_const * self.modes[k].norm_const / self.kappa
        })
    }

    /// Σ μ_n Φ_n(x).
    pub fn synthesize_state(&self, moments: &[f64], x: f64) -> f64 {
        self.modes
            .iter()
            .zip(moments)
            .map(|(m, &c)| if c == 0.0 { 0.0 } else { c * self.phi(m, x) })
            .sum()
    }
}

/// Eigenvalues, normalizations and Neumann traces for the first `modes` eigenpairs.
pub fn make_basis(alpha: f64, modes: usize) -> Result<SpectralBasis> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Domain(format!(
            "spectral basis needs 0 <= alpha < 1, got {alpha} (use the limit basis at alpha = 1)"
        )));
    }
    if modes == 0 {
        return Err(Error::Domain("at least one mode is required".into()));
    }
    let nu = nu_of(alpha);
    let kappa = kappa_of(alpha);
    let zeros = bessel::bessel_zeros(nu, modes)?;
    let trace_factor = (1.0 - alpha) * (2.0 * kappa).sqrt() / (2f64.powf(nu) * gamma_positive(nu + 1.0));
    let modes: Vec<Mode> = zeros
        .iter()
        .map(|z: &ZeroRecord| {
            let jp = bessel::j_prime(nu, z.zero).abs();
            Mode {
                index: z.index,
                zero: z.zero,
                eigenvalue: kappa * kappa * z.zero * z.zero,
                norm_const: (2.0 * kappa).sqrt() / jp,
                neumann_trace: trace_factor * z.zero.powf(nu) / jp,
                newton_iters: Some(z.newton_iters),
            }
        })
        .collect();
    let gaps = GapCertificate::from_eigenvalues(&modes.iter().map(|m| m.eigenvalue).collect::<Vec<_>>());
    Ok(SpectralBasis {
        alpha,
        nu,
        kappa,
        p0: 1.0 / (1.0 - alpha),
        modes,
        gaps,
    })
}

/// Φ_{1,n}(x) = J_0(j_{0,n}√x)/|J_0′(j_{0,n})|, the α → 1 limit of the basis.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LimitBasis {
    pub zeros: Vec<f64>,
    pub norm_consts: Vec<f64>,
}

pub fn make_limit_basis(modes: usize) -> Result<LimitBasis> {
    if modes == 0 {
        return Err(Error::Domain("at least one mode is required".into()));
    }
    let zeros: Vec<f64> = bessel::bessel_zeros(0.0, modes)?.into_iter().map(|z| z.zero).collect();
    let norm_consts = zeros.iter().map(|&z| 1.0 / bessel::j_prime(0.0, z).abs()).collect();
    Ok(LimitBasis { zeros, norm_consts })
}

impl LimitBasis {
    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    pub fn eval(&self, n: usize, x: f64) -> f64 {
        self.norm_consts[n - 1] * bessel::j(0.0, self.zeros[n - 1] * x.sqrt())
    }

    /// ⟨f, Φ_{1,n}⟩ with y = √x: ∫ f(y²) 2y J_0(j y) dy / |J_0′(j)|.
    pub fn project_with<F: Fn(f64) -> f64>(&self, f: F, rule: &CompositeRule) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let (z, c) = (self.zeros[i], self.norm_consts[i]);
                c * rule.integrate(0.0, 1.0, |y| f(y * y) * 2.0 * y * bessel::j(0.0, z * y))
            })
            .collect()
    }

    pub fn project<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.project_with(f, &CompositeRule::new(QuadratureSettings::default()))
    }

    pub fn gram(&self, rule: &CompositeRule) -> DMatrix<f64> {
        let n = self.len();
        let pts = rule.points(0.0, 1.0);
        let vals: Vec<Vec<f64>> = self
            .zeros
            .iter()
            .map(|&z| pts.iter().map(|&(y, _)| bessel::j(0.0, z * y)).collect())
            .collect();
        DMatrix::from_fn(n, n, |i, k| {
            let s: f64 = pts
                .iter()
                .enumerate()
                .map(|(p, &(y, w))| w * 2.0 * y * vals[i][p] * vals[k][p])
                .sum();
            s * self.norm_consts[i] * self.norm_consts[k]
        })
    }
}

/// ‖f‖²_{L²(0,1)} by composite Gauss–Legendre.
pub fn l2_norm_sq<F: Fn(f64) -> f64>(f: F, rule: &CompositeRule) -> f64 {
    rule.integrate(0.0, 1.0, |x| {
        let v = f(x);
        v * v
    })
}
