//! Initial-state descriptors: `mode:<n>`, `poly:x(1-x)` and `csv:<path>`.
//!
//! A mode descriptor means the n-th basis vector of whichever basis it is
//! projected on; the other two are functions on [0, 1] and are projected.

use crate::error::{Error, Result};
use crate::quadrature::{CompositeRule, QuadratureSettings};
use crate::spectrum::{LimitBasis, MomentVector, SpectralBasis};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitialState {
    Mode { n: usize },
    Parabola,
    Samples { path: PathBuf, xs: Vec<f64>, ys: Vec<f64> },
}

impl InitialState {
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, arg) = text
            .split_once(':')
            .ok_or_else(|| Error::Usage(format!("initial state '{text}' must look like kind:value")))?;
        match kind {
            "mode" => {
                let n: usize = arg
                    .parse()
                    .map_err(|_| Error::Usage(format!("bad mode index '{arg}'")))?;
                if n == 0 {
                    return Err(Error::Usage("mode indices start at 1".into()));
                }
                Ok(InitialState::Mode { n })
            }
            "poly" => match arg.replace(' ', "").as_str() {
                "x(1-x)" => Ok(InitialState::Parabola),
                other => Err(Error::Usage(format!("unknown profile 'poly:{other}'"))),
            },
            "csv" => InitialState::from_csv(Path::new(arg)),
            other => Err(Error::Usage(format!("unknown initial-state kind '{other}'"))),
        }
    }

    /// Reads `x,y` rows (an optional non-numeric header is skipped).
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))?;
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for (line, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::Usage(format!("{}: {e}", path.display())))?;
            let parsed = (rec.get(0).map(str::parse::<f64>), rec.get(1).map(str::parse::<f64>));
            match parsed {
                (Some(Ok(x)), Some(Ok(y))) => pts.push((x, y)),
                _ if line == 0 => continue,
                _ => {
                    return Err(Error::Usage(format!(
                        "{}: row {} is not a pair of numbers",
                        path.display(),
                        line + 1
                    )))
                }
            }
        }
        if pts.len() < 2 {
            return Err(Error::Usage(format!("{}: need at least two samples", path.display())));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.iter().any(|p| !(0.0..=1.0).contains(&p.0) || !p.1.is_finite()) {
            return Err(Error::Usage(format!(
                "{}: samples must have x in [0, 1] and finite values",
                path.display()
            )));
        }
        Ok(InitialState::Samples {
            path: path.to_path_buf(),
            xs: pts.iter().map(|p| p.0).collect(),
            ys: pts.iter().map(|p| p.1).collect(),
        })
    }

    pub fn descriptor(&self) -> String {
        match self {
            InitialState::Mode { n } => format!("mode:{n}"),
            InitialState::Parabola => "poly:x(1-x)".into(),
            InitialState::Samples { path, .. } => format!("csv:{}", path.display()),
        }
    }

    /// Pointwise value for function-valued states (linear interpolation for samples,
    /// constant beyond the first and last sample).
    pub fn eval(&self, x: f64) -> Option<f64> {
        match self {
            InitialState::Mode { .. } => None,
            InitialState::Parabola => Some(x * (1.0 - x)),
            InitialState::Samples { xs, ys, .. } => {
                let i = xs.partition_point(|&p| p <= x);
                Some(if i == 0 {
                    ys[0]
                } else if i == xs.len() {
                    ys[xs.len() - 1]
                } else {
                    let (x0, x1) = (xs[i - 1], xs[i]);
                    let w = (x - x0) / (x1 - x0);
                    ys[i - 1] + w * (ys[i] - ys[i - 1])
                })
            }
        }
    }

    /// Moments against `basis`; projection quadrature must meet `tol`.
    pub fn moments(&self, basis: &SpectralBasis, tol: f64) -> Result<MomentVector> {
        self.moments_with(basis, &CompositeRule::new(QuadratureSettings::default()), tol)
    }

    pub fn moments_with(&self, basis: &SpectralBasis, rule: &CompositeRule, tol: f64) -> Result<MomentVector> {
        match self {
            InitialState::Mode { n } => MomentVector::unit(basis.alpha, basis.len(), *n),
            _ => basis.project_with(|x| self.eval(x).expect("function-valued state"), rule, tol),
        }
    }

    /// Coefficients against the α = 1 limit basis (e_n for a mode descriptor).
    pub fn limit_moments(&self, limit: &LimitBasis) -> Vec<f64> {
        match self {
            InitialState::Mode { n } => (1..=limit.len()).map(|k| if k == *n { 1.0 } else { 0.0 }).collect(),
            _ => limit.project(|x| self.eval(x).expect("function-valued state")),
        }
    }
}
