//! Gauss–Legendre rules: composite uniform panels for smooth integrands and
//! geometrically graded panels for integrands concentrated at one endpoint
//! (damped exponentials e^{λ(t−T)} with large λ).

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// n-point rule on [-1, 1]; nodes by Newton iteration on P_n.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Mapped nodes and weights on [a, b].
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let dp = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Composite rule: `panels` equal panels, `order` nodes each.
#[derive(Clone, Debug)]
pub struct CompositeRule {
    rule: GaussLegendre,
    panels: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct QuadratureSettings {
    pub order: usize,
    pub panels: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            order: 64,
            panels: 8,
        }
    }
}

impl CompositeRule {
    pub fn new(settings: QuadratureSettings) -> Self {
        CompositeRule {
            rule: GaussLegendre::new(settings.order),
            panels: settings.panels.max(1),
        }
    }

    pub fn settings(&self) -> QuadratureSettings {
        QuadratureSettings {
            order: self.rule.order(),
            panels: self.panels,
        }
    }

    /// All mapped (node, weight) pairs on [a, b].
    pub fn points(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let h = (b - a) / self.panels as f64;
        (0..self.panels)
            .flat_map(|p| {
                let lo = a + h * p as f64;
                let hi = if p + 1 == self.panels { b } else { lo + h };
                self.rule.on(lo, hi).collect::<Vec<_>>()
            })
            .collect()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.points(a, b).into_iter().map(|(x, w)| w * f(x)).sum()
    }

    /// Integral together with |I − I_half| where I_half uses half as many panels
    /// (or a half-order rule when there is a single panel).
    pub fn integrate_with_estimate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> (f64, f64) {
        let fine = self.integrate(a, b, &mut f);
        let coarse = if self.panels > 1 {
            CompositeRule {
                rule: self.rule.clone(),
                panels: self.panels / 2,
            }
            .integrate(a, b, &mut f)
        } else {
            GaussLegendre::new((self.rule.order() / 2).max(1)).integrate(a, b, &mut f)
        };
        (fine, (fine - coarse).abs())
    }
}

/// Panels [b − h_k, b − h_{k+1}] with h_k = (b − a)·2^{−k}, refined toward `b`.
#[derive(Clone, Debug)]
pub struct GradedRule {
    rule: GaussLegendre,
    levels: usize,
}

impl GradedRule {
    pub fn new(order: usize, levels: usize) -> Self {
        GradedRule {
            rule: GaussLegendre::new(order),
            levels: levels.max(1),
        }
    }

    pub fn points(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let len = b - a;
        let mut out = Vec::with_capacity(self.rule.order() * (self.levels + 1));
        let mut left = a;
        for k in 1..=self.levels {
            let right = b - len * 0.5f64.powi(k as i32);
            out.extend(self.rule.on(left, right));
            left = right;
        }
        out.extend(self.rule.on(left, b));
        out
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.points(a, b).into_iter().map(|(x, w)| w * f(x)).sum()
    }
}

impl Default for GradedRule {
    fn default() -> Self {
        GradedRule::new(24, 48)
    }
}
