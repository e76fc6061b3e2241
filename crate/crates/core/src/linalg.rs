//! Dense symmetric positive-definite solves for small, badly conditioned Gram
//! systems: Cholesky with one step of iterative refinement (residual in
//! double-double), truncated-SVD fallback when the factorization breaks down.

use crate::dd::DoubleDouble;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Cholesky,
    Svd,
}

#[derive(Clone, Debug)]
pub struct SpdSolution {
    pub solution: DMatrix<f64>,
    pub method: SolveMethod,
    /// max |B − G X| after refinement
    pub residual: f64,
}

/// 2-norm condition number σ_max/σ_min (infinite when singular).
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Relative truncation threshold used by the SVD fallback.
pub const SVD_CUTOFF: f64 = 1e-14;

/// Solves G X = B for symmetric positive-definite G.
pub fn solve_spd(g: &DMatrix<f64>, b: &DMatrix<f64>) -> SpdSolution {
    let (mut x, method, apply): (DMatrix<f64>, SolveMethod, Box<dyn Fn(&DMatrix<f64>) -> DMatrix<f64>>) =
        match g.clone().cholesky() {
            Some(chol) => {
                let x = chol.solve(b);
                (x, SolveMethod::Cholesky, Box::new(move |r| chol.solve(r)))
            }
            None => {
                let svd = g.clone().svd(true, true);
                let cutoff = svd.singular_values.max() * SVD_CUTOFF;
                let x = svd
                    .solve(b, cutoff)
                    .expect("SVD was computed with both singular vector sets");
                (
                    x,
                    SolveMethod::Svd,
                    Box::new(move |r| svd.solve(r, cutoff).expect("singular vectors present")),
                )
            }
        };
    let r = residual(g, &x, b);
    x += apply(&r);
    let r = residual(g, &x, b);
    SpdSolution {
        residual: r.amax(),
        solution: x,
        method,
    }
}

/// B − G X with each entry accumulated in double-double.
fn residual(g: &DMatrix<f64>, x: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    DMatrix::from_fn(n, b.ncols(), |i, j| {
        let mut acc = DoubleDouble::from_f64(b[(i, j)]);
        for k in 0..n {
            acc = acc - DoubleDouble::prod(g[(i, k)], x[(k, j)]);
        }
        acc.to_f64()
    })
}
