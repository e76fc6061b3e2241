
use degctl::bessel::{bessel_j, bessel_zeros};
use degctl::control::synthesize;
use degctl::cost::cost_sweep;
use degctl::moment::{build_biortho, BiorthogonalFamily};
use degctl::profile::InitialState;
use degctl::quadrature::{CompositeRule, GaussLegendre, QuadratureSettings};
use degctl::simulate::{evolve, terminal_error};
use degctl::spectrum::{make_basis, make_limit_basis, MomentVector, SQRT_GAP_FLOOR, SQRT_LAMBDA1_FLOOR};
use degctl::Result;
use nalgebra::DMatrix;
use std::f64::consts::PI;
use std::io::Write;
use std::process::Command;

const ALPHAS: [f64; 5] = [0.0, 0.3, 0.5, 0.7, 0.9];

type Outcome = Result<(bool, String)>;

fn rule() -> CompositeRule {
    CompositeRule::new(QuadratureSettings::default())
}

fn identity_deviation(g: DMatrix<f64>) -> f64 {
    let n = g.nrows();
    (g - DMatrix::identity(n, n)).amax()
}

fn c01_sine_recovery() -> Outcome {
    let b = make_basis(0.0, 8)?;
    let mut eig = 0.0f64;
    let mut fun = 0.0f64;
    for n in 1..=8 {
        let exact = (n as f64 * PI).powi(2);
        eig = eig.max((b.mode(n)?.eigenvalue - exact).abs() / exact);
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            let s = 2f64.sqrt() * (n as f64 * PI * x).sin();
            fun = fun.max((b.eval_eigenfunction(n, x)? - s).abs());
        }
    }
    Ok((
        eig < 1e-10 && fun < 1e-10,
        format!("max rel eigenvalue error {eig:.2e}, max eigenfunction error {fun:.2e}"),
    ))
}

fn c02_orthonormality() -> Outcome {
    let mut worst = 0.0f64;
    for a in ALPHAS {
        worst = worst.max(identity_deviation(make_basis(a, 8)?.gram(&rule())));
    }
    Ok((worst < 1e-8, format!("max |Gram - I| {worst:.2e}")))
}

fn c03_zero_brackets() -> Outcome {
    let mut inside = true;
    let mut worst = 0.0f64;
    for a in ALPHAS {
        let nu = degctl::spectrum::nu_of(a);
        for r in bessel_zeros(nu, 12)? {
            inside &= r.bracket.0 <= r.zero && r.zero <= r.bracket.1;
            worst = worst.max(bessel_j(nu, r.zero)?.value.abs());
        }
    }
    Ok((
        inside && worst < 1e-12,
        format!("all zeros bracketed: {inside}, max |J(j)| {worst:.2e}"),
    ))
}

fn c04_neumann_trace() -> Outcome {
    // observed decay order of |x^a Phi' - r| between successive x; must be at least 1 - alpha
    let xs = [1e-3, 3e-4, 1e-4];
    let mut order_ok = true;
    let mut min_margin = f64::INFINITY;
    let mut ratio_ok = true;
    let mut ratio_range = (f64::INFINITY, 0.0f64);
    for a in ALPHAS {
        let b = make_basis(a, 12)?;
        for n in 1..=4 {
            let r = b.mode(n)?.neumann_trace;
            let errs: Vec<f64> = xs
                .iter()
                .map(|&x| b.neumann_trace_numeric(n, x).map(|d| (d - r).abs()))
                .collect::<Result<_>>()?;
            for k in 0..xs.len() - 1 {
                let p = (errs[k] / errs[k + 1]).ln() / (xs[k] / xs[k + 1]).ln();
                min_margin = min_margin.min(p - (1.0 - a));
                order_ok &= p >= 1.0 - a;
            }
        }
        let q = b.mode(12)?.neumann_trace / b.neumann_trace_asymptotic(12)?;
        ratio_range = (ratio_range.0.min(q), ratio_range.1.max(q));
        ratio_ok &= (0.9..=1.1).contains(&q);
    }
    Ok((
        order_ok && ratio_ok,
        format!(
            "min (observed order - (1-alpha)) {min_margin:.3}, r_12/asymptotic in [{:.5}, {:.5}]",
            ratio_range.0, ratio_range.1
        ),
    ))
}

fn c05_source_coefficient() -> Outcome {
    let mut worst = 0.0f64;
    for a in ALPHAS {
        let b = make_basis(a, 8)?;
        for n in 1..=8 {
            worst = worst.max((b.source_coefficient_quadrature(n, &rule())? - b.source_coefficient(n)?).abs());
        }
    }
    Ok((worst < 1e-8, format!("max deviation {worst:.2e}")))
}

/// ∫₀ᵀ f on panels refined geometrically towards t = T (ratio 1/3), 32 nodes each.
fn graded_t(horizon: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let gl = GaussLegendre::new(32);
    let mut total = 0.0;
    let mut s_hi = horizon;
    for _ in 0..40 {
        let s_lo = s_hi / 3.0;
        total += gl.integrate(horizon - s_hi, horizon - s_lo, &mut f);
        s_hi = s_lo;
    }
    total + gl.integrate(horizon - s_hi, horizon, &mut f)
}

struct BiorthoCheck {
    literal_lower: f64,
    literal_upper: f64,
    reflected: f64,
    zero_mean: f64,
}

fn check_family(fam: &BiorthogonalFamily) -> Result<BiorthoCheck> {
    let t = fam.horizon;
    let l = fam.lambdas();
    let mut c = BiorthoCheck { literal_lower: 0.0, literal_upper: 0.0, reflected: 0.0, zero_mean: 0.0 };
    for n in 1..=fam.len() {
        let mut err = None;
        let mean = graded_t(t, |s| fam.eval_sigma_reflected(n, s).unwrap_or_else(|e| {
            err = Some(e);
            f64::NAN
        }));
        if let Some(e) = err {
            return Err(e);
        }
        c.zero_mean = c.zero_mean.max(((-l[n - 1] * t).exp() * mean).abs());
        for m in 1..=fam.len() {
            // ∫σ̃_n e^{λ_m(t−T)}; the literal moment is this times e^{(λ_m−λ_n)T}
            let refl = graded_t(t, |s| {
                fam.eval_sigma_reflected(n, s).unwrap_or(f64::NAN) * (l[m - 1] * (s - t)).exp()
            });
            let delta = if m == n { 1.0 } else { 0.0 };
            c.reflected = c.reflected.max((refl - delta).abs());
            let literal = ((l[m - 1] - l[n - 1]) * t).exp() * refl - delta;
            if m > n {
                c.literal_upper = c.literal_upper.max(literal.abs());
            } else {
                c.literal_lower = c.literal_lower.max(literal.abs());
            }
        }
    }
    Ok(c)
}

fn c06_biorthogonality() -> Outcome {
    let mut agg = BiorthoCheck { literal_lower: 0.0, literal_upper: 0.0, reflected: 0.0, zero_mean: 0.0 };
    for a in ALPHAS {
        let lambdas = make_basis(a, 10)?.eigenvalues();
        for n in 1..=10 {
            let c = check_family(&build_biortho(&lambdas[..n], 1.0, 1e-6)?)?;
            agg.literal_lower = agg.literal_lower.max(c.literal_lower);
            agg.literal_upper = agg.literal_upper.max(c.literal_upper);
            agg.reflected = agg.reflected.max(c.reflected);
            agg.zero_mean = agg.zero_mean.max(c.zero_mean);
        }
    }
    let pass = agg.literal_lower < 1e-6 && agg.literal_upper < 1e-6 && agg.zero_mean < 1e-8;
    Ok((
        pass,
        format!(
            "literal residual m<=n {:.2e}, m>n {:.2e}; time-reflected residual {:.2e}; max |mean| {:.2e}",
            agg.literal_lower, agg.literal_upper, agg.reflected, agg.zero_mean
        ),
    ))
}

fn c07_gaps() -> Outcome {
    let mut ok = true;
    let (mut first, mut gap) = (f64::INFINITY, f64::INFINITY);
    for a in ALPHAS {
        let l = make_basis(a, 12)?.eigenvalues();
        let s: Vec<f64> = l.iter().map(|x| x.sqrt()).collect();
        first = first.min(s[0]);
        for w in s.windows(2) {
            gap = gap.min(w[1] - w[0]);
        }
        ok &= make_basis(a, 12)?.gaps.holds();
    }
    ok &= first >= SQRT_LAMBDA1_FLOOR && gap >= SQRT_GAP_FLOOR;
    Ok((
        ok,
        format!(
            "min sqrt(lambda_1) {first:.4} (floor {SQRT_LAMBDA1_FLOOR:.4}), min gap {gap:.4} (floor {SQRT_GAP_FLOOR:.4})"
        ),
    ))
}

fn c08_null_control() -> Outcome {
    let (mut endpoint, mut rss, mut dev) = (0.0f64, 0.0f64, 0.0f64);
    for a in [0.0, 0.5, 0.8] {
        let b = make_basis(a, 8)?;
        let fam = build_biortho(&b.eigenvalues(), 1.0, 1e-6)?;
        let zero = MomentVector::zeros(a, 8);
        for u0 in [MomentVector::unit(a, 8, 1)?, InitialState::Parabola.moments(&b, 1e-8)?.normalized()] {
            let sig = synthesize(&b, &fam, &u0, &zero)?;
            let traj = evolve(&b, &u0, &sig, 512)?;
            endpoint = endpoint.max(sig.endpoint.abs());
            rss = rss.max(terminal_error(&traj, &zero)?.controlled_rss);
            dev = dev.max(traj.oracle_deviation);
        }
    }
    Ok((
        endpoint < 1e-8 && rss < 1e-5 && dev < 1e-6,
        format!("max |G(T)| {endpoint:.2e}, max terminal residual {rss:.2e}, max propagation deviation {dev:.2e}"),
    ))
}

fn c09_truncation() -> Outcome {
    let a = 0.5;
    let mut tails = Vec::new();
    for n in 4..=10 {
        let b = make_basis(a, n + 5)?;
        let u0 = InitialState::Parabola.moments(&b, 1e-8)?.normalized();
        let ctrl = make_basis(a, n)?;
        let fam = build_biortho(&ctrl.eigenvalues(), 1.0, 1e-6)?;
        let sig = synthesize(&ctrl, &fam, &u0.truncated(n), &MomentVector::zeros(a, n))?;
        let traj = evolve(&b, &u0, &sig, 512)?;
        tails.push(terminal_error(&traj, &MomentVector::zeros(a, n + 5))?.tail_max);
    }
    let ok = tails.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = tails.iter().map(|t| format!("{t:.2e}")).collect();
    Ok((ok, format!("tail max for N=4..10: [{}]", shown.join(", "))))
}

fn c10_cost_law() -> Outcome {
    let grid = [0.0, 0.3, 0.5, 0.7, 0.8, 0.9];
    let main = cost_sweep(&grid, &InitialState::Parabola, 1.0, 8)?;
    let near = cost_sweep(&[0.9, 0.95, 0.99], &InitialState::Parabola, 1.0, 8)?;
    let upper_ratio = main.product_upper_ratio.unwrap_or(f64::INFINITY);
    let lower_ratio = near.product_lower_ratio.unwrap_or(f64::INFINITY);
    let certified = main.certified();
    Ok((
        certified && upper_ratio <= 10.0 && lower_ratio <= 2.0,
        format!(
            "lower <= upper on grid: {certified}; (1-alpha)*upper max/min {upper_ratio:.1}; (1-alpha)*lower spread near 1: {lower_ratio:.3}"
        ),
    ))
}

fn c11_limit_basis() -> Outcome {
    let lb = make_limit_basis(8)?;
    let gram = identity_deviation(lb.gram(&rule()));
    let limit = InitialState::Parabola.limit_moments(&lb);
    let mut diffs = Vec::new();
    for a in [0.9, 0.99, 0.999] {
        let mu = InitialState::Parabola.moments(&make_basis(a, 8)?, 1e-8)?;
        let d: f64 = mu.coefficients.iter().zip(&limit).map(|(x, y)| (x - y).powi(2)).sum();
        diffs.push(d.sqrt());
    }
    let shrinking = diffs.windows(2).all(|w| w[1] < w[0]);
    Ok((
        gram < 1e-8 && shrinking,
        format!(
            "max |Gram - I| {gram:.2e}; projection distance at 0.9/0.99/0.999: {:.2e}, {:.2e}, {:.2e}",
            diffs[0], diffs[1], diffs[2]
        ),
    ))
}

fn c12_determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("degctl-acceptance-{}", std::process::id()));
    let run = || -> std::io::Result<Vec<u8>> {
        let status = Command::new(env!("CARGO_BIN_EXE_degctl"))
            .args(["verify", "--alpha", "0.5", "--seed", "7", "--out-dir"])
            .arg(&dir)
            .output()?;
        if !status.status.success() {
            return Err(std::io::Error::other(String::from_utf8_lossy(&status.stderr).into_owned()));
        }
        std::fs::read(dir.join("verify.json"))
    };
    let first = run()?;
    let second = run()?;
    let _ = std::fs::remove_dir_all(&dir);
    Ok((
        !first.is_empty() && first == second,
        format!("verify.json {} bytes, identical: {}", first.len(), first == second),
    ))
}

/// Writes the verdict line past the test harness's output capture, then asserts.
fn report(index: usize, name: &str, outcome: Outcome) {
    let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    let line = format!(
        "criterion {index:>2} {} {name}: {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(pass, "criterion {index} ({name}) failed: {detail}");
}

#[test]
fn criterion_01_sine_recovery() {
    report(1, "alpha = 0 sine recovery", c01_sine_recovery());
}

#[test]
fn criterion_02_orthonormality() {
    report(2, "orthonormality", c02_orthonormality());
}

#[test]
fn criterion_03_zero_brackets() {
    report(3, "zero brackets", c03_zero_brackets());
}

#[test]
fn criterion_04_neumann_trace() {
    report(4, "Neumann trace", c04_neumann_trace());
}

#[test]
fn criterion_05_source_coefficient() {
    report(5, "source coefficient", c05_source_coefficient());
}

#[test]
fn criterion_06_biorthogonality() {
    report(6, "biorthogonality", c06_biorthogonality());
}

#[test]
fn criterion_07_gaps() {
    report(7, "gap certification", c07_gaps());
}

#[test]
fn criterion_08_null_control() {
    report(8, "null-controllability oracle", c08_null_control());
}

#[test]
fn criterion_09_truncation() {
    report(9, "truncation tail", c09_truncation());
}

#[test]
fn criterion_10_cost_law() {
    report(10, "cost law", c10_cost_law());
}

#[test]
fn criterion_11_limit_basis() {
    report(11, "limit basis", c11_limit_basis());
}

#[test]
fn criterion_12_determinism() {
    report(12, "determinism", c12_determinism());
}
