//! Command-line driver.
//!
//! Every command writes one artifact (`<command>.json` or `<command>.csv`) into
//! the output directory, headed by the resolved configuration, and prints a
//! one-line summary. Exit status: 0 when every internal check passed, 1 on a
//! failed check or numerical error, 2 on a usage error.

use crate::bessel;
use crate::control::{moment_residual, reachability_score, synthesize};
use crate::cost::{cost_lower, cost_sweep, cost_upper};
use crate::error::{Error, Result};
use crate::moment::{bound_profile, build_biortho, ZERO_MEAN_TOL};
use crate::profile::InitialState;
use crate::quadrature::{CompositeRule, QuadratureSettings};
use crate::simulate::{evolve, terminal_error, ORACLE_TOL};
use crate::spectrum::{make_basis, make_limit_basis, MomentVector, SpectralBasis};
use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Eigenvalues, normalizations and Neumann traces (alpha = 1 shows the limit basis)
    Spectrum,
    /// Biorthogonal family for the first N eigenvalues
    Biortho,
    /// Boundary control steering --u0 to --target
    Synthesize,
    /// Synthesize, then evolve and report terminal residuals
    Simulate,
    /// Upper and lower cost estimates over --alphas
    CostSweep,
    /// Run the invariant suite for one (alpha, N, T)
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Biortho => "biortho",
            Command::Synthesize => "synthesize",
            Command::Simulate => "simulate",
            Command::CostSweep => "cost-sweep",
            Command::Verify => "verify",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "degctl", version, about = "Boundary control of a degenerate heat equation by the moment method")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Clone, Debug, Default, clap::Args)]
pub struct Flags {
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// comma-separated alpha grid for cost-sweep
    #[arg(long, global = true, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub modes: Option<usize>,
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// mode:<n> | poly:x(1-x) | csv:<path>
    #[arg(long, global = true)]
    pub u0: Option<String>,
    /// zero | mode:<n> | poly:x(1-x) | csv:<path>
    #[arg(long, global = true)]
    pub target: Option<String>,
    #[arg(long = "reach-K", global = true)]
    pub reach_k: Option<f64>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Gauss-Legendre nodes per panel for projections
    #[arg(long, global = true)]
    pub order: Option<usize>,
    #[arg(long, global = true)]
    pub panels: Option<usize>,
    /// time steps for simulation and sampled output
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// key=value file; flags given on the command line take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub alpha: f64,
    pub alphas: Vec<f64>,
    pub modes: usize,
    pub horizon: f64,
    pub tol: f64,
    pub u0: String,
    pub target: String,
    pub reach_k: Option<f64>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub format: Format,
    pub quadrature: QuadratureSettings,
    pub grid: usize,
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Usage(format!("config: bad value '{v}' for {key}")))
}

/// Reads `key=value` lines; blank lines and `#` comments are ignored.
pub fn read_config_file(path: &Path) -> Result<Flags> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut f = Flags::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("config line {}: expected key=value", i + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "alpha" => f.alpha = Some(parse_value(key, value)?),
            "alphas" => {
                f.alphas = Some(
                    value
                        .split(',')
                        .map(|v| parse_value(key, v))
                        .collect::<Result<Vec<f64>>>()?,
                )
            }
            "modes" => f.modes = Some(parse_value(key, value)?),
            "horizon" => f.horizon = Some(parse_value(key, value)?),
            "tol" => f.tol = Some(parse_value(key, value)?),
            "u0" => f.u0 = Some(value.to_string()),
            "target" => f.target = Some(value.to_string()),
            "reach-K" => f.reach_k = Some(parse_value(key, value)?),
            "out-dir" => f.out_dir = Some(PathBuf::from(value)),
            "seed" => f.seed = Some(parse_value(key, value)?),
            "format" => {
                f.format = Some(
                    Format::from_str(value, true).map_err(|_| Error::Usage(format!("config: bad format '{value}'")))?,
                )
            }
            "order" => f.order = Some(parse_value(key, value)?),
            "panels" => f.panels = Some(parse_value(key, value)?),
            "grid" => f.grid = Some(parse_value(key, value)?),
            other => return Err(Error::Usage(format!("config: unknown key '{other}'"))),
        }
    }
    Ok(f)
}

pub const DEFAULT_ALPHAS: [f64; 6] = [0.0, 0.3, 0.5, 0.7, 0.8, 0.9];

impl RunConfig {
    /// Merges command-line flags over the config file over defaults, then validates.
    pub fn resolve(command: Command, flags: &Flags) -> Result<Self> {
        let file = match &flags.config {
            Some(p) => read_config_file(p)?,
            None => Flags::default(),
        };
        macro_rules! pick {
            ($field:ident, $default:expr) => {
                flags.$field.clone().or(file.$field.clone()).unwrap_or($default)
            };
        }
        let defaults = QuadratureSettings::default();
        let cfg = RunConfig {
            command,
            alpha: pick!(alpha, 0.0),
            alphas: pick!(alphas, DEFAULT_ALPHAS.to_vec()),
            modes: pick!(modes, 8),
            horizon: pick!(horizon, 1.0),
            tol: pick!(tol, crate::moment::DEFAULT_TOL),
            u0: pick!(u0, "poly:x(1-x)".to_string()),
            target: pick!(target, "zero".to_string()),
            reach_k: flags.reach_k.or(file.reach_k),
            out_dir: pick!(out_dir, PathBuf::from(".")),
            seed: pick!(seed, 0),
            format: pick!(format, Format::Json),
            quadrature: QuadratureSettings {
                order: pick!(order, defaults.order),
                panels: pick!(panels, defaults.panels),
            },
            grid: pick!(grid, crate::simulate::DEFAULT_GRID),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let alpha_ok = if self.command == Command::Spectrum {
            (0.0..=1.0).contains(&self.alpha)
        } else {
            (0.0..1.0).contains(&self.alpha)
        };
        if !alpha_ok {
            return Err(Error::Usage(format!(
                "alpha = {} out of range (0 <= alpha < 1; alpha = 1 only for spectrum)",
                self.alpha
            )));
        }
        if self.command == Command::CostSweep
            && (self.alphas.is_empty() || self.alphas.iter().any(|a| !(0.0..1.0).contains(a)))
        {
            return Err(Error::Usage("alphas must be a nonempty list in [0, 1)".into()));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Usage(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.modes == 0 {
            return Err(Error::Usage("modes must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Usage(format!("tol must be positive, got {}", self.tol)));
        }
        if self.reach_k.is_some_and(|k| !(k > 0.0)) {
            return Err(Error::Usage("reach-K must be positive".into()));
        }
        if self.quadrature.order == 0 || self.quadrature.panels == 0 || self.grid == 0 {
            return Err(Error::Usage("order, panels and grid must be positive".into()));
        }
        Ok(())
    }

    fn rule(&self) -> CompositeRule {
        CompositeRule::new(self.quadrature)
    }

    fn initial(&self) -> Result<InitialState> {
        InitialState::parse(&self.u0)
    }

    fn target_state(&self) -> Result<Option<InitialState>> {
        if self.target == "zero" {
            Ok(None)
        } else {
            InitialState::parse(&self.target).map(Some)
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold,
            pass: value < threshold,
        }
    }

    fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }

    fn flag(name: impl Into<String>, ok: bool) -> Self {
        Check {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            threshold: 1.0,
            pass: ok,
        }
    }
}

/// Artifact body and summary of one command.
pub struct Outcome {
    pub json: serde_json::Value,
    pub csv: String,
    pub summary: String,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

fn gram_deviation(g: DMatrix<f64>) -> f64 {
    let n = g.nrows();
    (g - DMatrix::identity(n, n)).amax()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.10}")).collect::<Vec<_>>().join(", ")
}

fn run_spectrum(cfg: &RunConfig) -> Result<Outcome> {
    if cfg.alpha == 1.0 {
        let lb = make_limit_basis(cfg.modes)?;
        let lambdas: Vec<f64> = lb.zeros.iter().map(|j| 0.25 * j * j).collect();
        let checks = vec![Check::below(
            "limit-gram-identity",
            gram_deviation(lb.gram(&cfg.rule())),
            1e-8,
        )];
        let mut csv = String::from("n,zero,lambda,norm_const\n");
        for i in 0..lb.len() {
            let _ = writeln!(csv, "{},{:e},{:e},{:e}", i + 1, lb.zeros[i], lambdas[i], lb.norm_consts[i]);
        }
        return Ok(Outcome {
            json: json!({ "limit_basis": lb, "eigenvalues": lambdas }),
            csv,
            summary: format!("lambda = [{}]", fmt_list(&lambdas)),
            checks,
        });
    }
    let basis = make_basis(cfg.alpha, cfg.modes)?;
    let records = bessel::bessel_zeros(basis.nu, cfg.modes)?;
    let bracket_ok = records.iter().all(|r| {
        r.bracket.0 <= r.zero && r.zero <= r.bracket.1 && bessel::bessel_j(basis.nu, r.zero).map_or(false, |e| e.value.abs() < 1e-12)
    });
    let checks = vec![
        Check::flag("zeros-in-bracket", bracket_ok),
        Check::flag("gap-first", basis.gaps.first_ok),
        Check::flag("gap-consecutive", basis.gaps.gaps_ok || basis.len() < 2),
        Check::below("gram-identity", gram_deviation(basis.gram(&cfg.rule())), 1e-8),
    ];
    let mut csv = String::from("n,zero,lambda,norm_const,neumann_trace\n");
    for m in &basis.modes {
        let _ = writeln!(
            csv,
            "{},{:e},{:e},{:e},{:e}",
            m.index, m.zero, m.eigenvalue, m.norm_const, m.neumann_trace
        );
    }
    Ok(Outcome {
        json: json!({ "basis": basis }),
        csv,
        summary: format!("lambda = [{}]", fmt_list(&basis.eigenvalues())),
        checks,
    })
}

fn run_biortho(cfg: &RunConfig) -> Result<Outcome> {
    let basis = make_basis(cfg.alpha, cfg.modes)?;
    let fam = build_biortho(&basis.eigenvalues(), cfg.horizon, cfg.tol)?;
    let profile = if fam.len() >= 3 { Some(bound_profile(&fam)?) } else { None };
    let checks = vec![
        Check::at_most("biorthogonality", fam.residual_max, cfg.tol),
        Check::below("zero-mean", fam.zero_mean_max, ZERO_MEAN_TOL),
    ];
    let mut csv = String::from("n,lambda,reflected_norm,residual_row_max,zero_mean\n");
    for i in 0..fam.len() {
        let _ = writeln!(
            csv,
            "{},{:e},{:e},{:e},{:e}",
            i + 1,
            fam.lambdas()[i],
            fam.reflected_norms[i],
            max_abs(fam.residual[i].iter().copied()),
            fam.zero_mean[i]
        );
    }
    Ok(Outcome {
        summary: format!(
            "condition = {:.3e}, residual = {:.3e}, K = {}",
            fam.gram_condition,
            fam.residual_max,
            profile.as_ref().map_or("n/a".into(), |p| format!("{:.4}", p.k))
        ),
        json: json!({ "family": fam, "bound_profile": profile }),
        csv,
        checks,
    })
}

struct Synthesis {
    basis: SpectralBasis,
    mu0: MomentVector,
    mu_t: MomentVector,
    signal: crate::control::ControlSignal,
    residual: Vec<f64>,
    reach: crate::control::Reachability,
    checks: Vec<Check>,
}

/// Basis over `cfg.modes + extra` modes; the control acts on the first `cfg.modes`.
fn synthesis(cfg: &RunConfig, extra: usize) -> Result<Synthesis> {
    let total = cfg.modes + extra;
    let basis = make_basis(cfg.alpha, total)?;
    let rule = cfg.rule();
    let mu0 = cfg.initial()?.moments_with(&basis, &rule, cfg.tol)?;
    let mu_t = match cfg.target_state()? {
        Some(s) => s.moments_with(&basis, &rule, cfg.tol)?,
        None => MomentVector::zeros(cfg.alpha, total),
    };
    let ctrl_basis = make_basis(cfg.alpha, cfg.modes)?;
    let fam = build_biortho(&ctrl_basis.eigenvalues(), cfg.horizon, cfg.tol)?;
    let k = match cfg.reach_k {
        Some(k) => k,
        None if fam.len() >= 3 => bound_profile(&fam)?.k,
        None => {
            return Err(Error::Usage(
                "reach-K is required when fewer than 3 modes are used".into(),
            ))
        }
    };
    let reach = reachability_score(&mu_t.truncated(cfg.modes), cfg.alpha, k.max(f64::MIN_POSITIVE))?;
    let signal = synthesize(&ctrl_basis, &fam, &mu0.truncated(cfg.modes), &mu_t.truncated(cfg.modes))?;
    let residual = moment_residual(&basis, &signal, &mu0, &mu_t, extra)?;
    let checks = vec![
        Check::flag("reachability", reach.verdict.passes()),
        Check::at_most("moment-residual", max_abs(residual[..cfg.modes].iter().copied()), cfg.tol),
        Check::below("endpoint", signal.endpoint.abs(), 1e-8),
    ];
    Ok(Synthesis {
        basis,
        mu0,
        mu_t,
        signal,
        residual,
        reach,
        checks,
    })
}

fn run_synthesize(cfg: &RunConfig) -> Result<Outcome> {
    let s = synthesis(cfg, 0)?;
    Ok(Outcome {
        summary: format!(
            "H1 norm = {:.6e}, G(T) = {:.2e}, reachability = {}",
            s.signal.norms.h1,
            s.signal.endpoint,
            s.reach.verdict.as_str()
        ),
        json: json!({
            "signal": s.signal,
            "moment_residual": s.residual,
            "reachability": s.reach,
        }),
        csv: s.signal.to_csv(cfg.grid),
        checks: s.checks,
    })
}

const TAIL_MODES: usize = 5;

fn run_simulate(cfg: &RunConfig) -> Result<Outcome> {
    let s = synthesis(cfg, TAIL_MODES)?;
    let traj = evolve(&s.basis, &s.mu0, &s.signal, cfg.grid)?;
    let te = terminal_error(&traj, &s.mu_t)?;
    let mut checks = s.checks;
    checks.push(Check::below("terminal-residual", te.controlled_rss, 1e-5));
    checks.push(Check::below("propagation-agreement", traj.oracle_deviation, ORACLE_TOL));
    Ok(Outcome {
        summary: format!(
            "terminal rss = {:.3e}, tail max = {:.3e}, deviation = {:.2e}",
            te.controlled_rss, te.tail_max, traj.oracle_deviation
        ),
        json: json!({
            "terminal": te,
            "oracle_deviation": traj.oracle_deviation,
            "warnings": traj.warnings,
            "endpoint": s.signal.endpoint,
            "norms": s.signal.norms,
        }),
        csv: traj.to_csv(),
        checks,
    })
}

fn run_cost_sweep(cfg: &RunConfig) -> Result<Outcome> {
    let report = cost_sweep(&cfg.alphas, &cfg.initial()?, cfg.horizon, cfg.modes)?;
    let checks: Vec<Check> = report
        .rows
        .iter()
        .map(|r| {
            let ok = r.error.is_none() && r.upper.is_some_and(|u| r.lower <= u);
            Check::flag(format!("certified alpha={}", r.alpha), ok)
        })
        .collect();
    Ok(Outcome {
        summary: format!(
            "{} rows, (1-alpha)*upper spread = {}",
            report.rows.len(),
            report.product_upper_ratio.map_or("n/a".into(), |r| format!("{r:.3}"))
        ),
        csv: report.to_csv(),
        json: json!({ "report": report }),
        checks,
    })
}

/// Invariant suite at one (alpha, N, T); randomized parts draw from `seed`.
pub fn verify_checks(cfg: &RunConfig) -> Result<Vec<Check>> {
    let (alpha, n, t) = (cfg.alpha, cfg.modes, cfg.horizon);
    let rule = cfg.rule();
    let basis = make_basis(alpha, n)?;
    let mut checks = Vec::new();

    let records = bessel::bessel_zeros(basis.nu, n)?;
    let worst_j = max_abs(records.iter().map(|r| bessel::j(basis.nu, r.zero)));
    checks.push(Check::flag(
        "zeros-in-bracket",
        records.iter().all(|r| r.bracket.0 <= r.zero && r.zero <= r.bracket.1),
    ));
    checks.push(Check::below("zero-residual", worst_j, 1e-12));
    checks.push(Check::flag("gap-certificate", basis.gaps.first_ok && (n < 2 || basis.gaps.gaps_ok)));
    checks.push(Check::below("orthonormality", gram_deviation(basis.gram(&rule)), 1e-8));

    let trace_dev = max_abs(basis.modes.iter().map(|m| {
        let f = basis.flux(m.index, 1e-9).unwrap_or(f64::NAN);
        (f - m.neumann_trace) / m.neumann_trace
    }));
    checks.push(Check::below("neumann-trace-limit", trace_dev, 1e-6));
    let source_dev = max_abs((1..=n).map(|k| {
        let q = basis.source_coefficient_quadrature(k, &rule).unwrap_or(f64::NAN);
        q - basis.source_coefficient(k).unwrap_or(f64::NAN)
    }));
    checks.push(Check::below("source-coefficient", source_dev, 1e-8));

    let fam = build_biortho(&basis.eigenvalues(), t, cfg.tol)?;
    checks.push(Check::at_most("biorthogonality", fam.residual_max, cfg.tol));
    checks.push(Check::below("zero-mean", fam.zero_mean_max, ZERO_MEAN_TOL));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mu0 = MomentVector::new(alpha, raw)?.normalized();
    let zero = MomentVector::zeros(alpha, n);
    let signal = synthesize(&basis, &fam, &mu0, &zero)?;
    let res = moment_residual(&basis, &signal, &mu0, &zero, 0)?;
    checks.push(Check::at_most("moment-residual", max_abs(res), cfg.tol));
    checks.push(Check::below("endpoint", signal.endpoint.abs(), 1e-8));
    let nm = &signal.norms;
    let norm_gap = ((nm.g_l2 - nm.g_l2_quadrature).abs() / nm.g_l2.max(f64::MIN_POSITIVE))
        .max((nm.big_g_l2 - nm.big_g_l2_quadrature).abs() / nm.big_g_l2.max(f64::MIN_POSITIVE));
    checks.push(Check::below("norm-consistency", norm_gap, 1e-6));

    let doubled = synthesize(&basis, &fam, &mu0.scaled(2.0), &zero)?;
    let linear = doubled
        .derivative_coeffs
        .iter()
        .zip(&signal.derivative_coeffs)
        .all(|(a, b)| *a == 2.0 * b);
    checks.push(Check::flag("linearity", linear));

    let traj = evolve(&basis, &mu0, &signal, cfg.grid)?;
    let te = terminal_error(&traj, &zero)?;
    checks.push(Check::below("terminal-residual", te.controlled_rss, 1e-5));
    checks.push(Check::below("propagation-agreement", traj.oracle_deviation, ORACLE_TOL));

    let free = evolve(
        &basis,
        &mu0,
        &crate::control::ControlSignal::zero(alpha, t, fam.exponents.clone()),
        cfg.grid,
    )?;
    let decay_dev = max_abs(free.terminal().iter().zip(&basis.modes).zip(&mu0.coefficients).map(
        |((v, m), c)| {
            let exact = (-m.eigenvalue * t).exp() * c;
            if exact == 0.0 {
                *v
            } else {
                (v - exact) / exact
            }
        },
    ));
    checks.push(Check::below("free-decay", decay_dev, 1e-12));
    let energy: Vec<f64> = free.v.iter().map(|r| r.iter().map(|x| x * x).sum()).collect();
    checks.push(Check::flag("energy-decay", energy.windows(2).all(|w| w[1] <= w[0])));

    let upper = cost_upper(alpha, &mu0, t, n)?;
    let lower = cost_lower(alpha, &mu0, t)?;
    checks.push(Check::flag("cost-certification", lower.value <= upper.value));
    Ok(checks)
}

fn run_verify(cfg: &RunConfig) -> Result<Outcome> {
    let checks = verify_checks(cfg)?;
    let mut csv = String::from("check,value,threshold,pass\n");
    for c in &checks {
        let _ = writeln!(csv, "{},{:e},{:e},{}", c.name, c.value, c.threshold, c.pass);
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    Ok(Outcome {
        summary: if failed.is_empty() {
            format!("{} invariants hold", checks.len())
        } else {
            format!("failed: {}", failed.join(", "))
        },
        json: json!({}),
        csv,
        checks,
    })
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.command {
        Command::Spectrum => run_spectrum(cfg),
        Command::Biortho => run_biortho(cfg),
        Command::Synthesize => run_synthesize(cfg),
        Command::Simulate => run_simulate(cfg),
        Command::CostSweep => run_cost_sweep(cfg),
        Command::Verify => run_verify(cfg),
    }
}

/// Artifact text for `outcome` in the configured format.
pub fn render(cfg: &RunConfig, outcome: &Outcome) -> Result<String> {
    match cfg.format {
        Format::Json => {
            let mut doc = BTreeMap::new();
            doc.insert("config", serde_json::to_value(cfg)?);
            doc.insert("checks", serde_json::to_value(&outcome.checks)?);
            doc.insert("result", outcome.json.clone());
            Ok(serde_json::to_string_pretty(&doc)? + "\n")
        }
        Format::Csv => Ok(format!("# {}\n{}", serde_json::to_string(cfg)?, outcome.csv)),
    }
}

pub fn artifact_path(cfg: &RunConfig) -> PathBuf {
    let ext = match cfg.format {
        Format::Json => "json",
        Format::Csv => "csv",
    };
    cfg.out_dir.join(format!("{}.{ext}", cfg.command.name()))
}

/// Runs one resolved configuration: writes the artifact and returns whether all checks passed.
pub fn run(cfg: &RunConfig) -> Result<(bool, String, PathBuf)> {
    let outcome = execute(cfg)?;
    let text = render(cfg, &outcome)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let path = artifact_path(cfg);
    std::fs::write(&path, text)?;
    let passed = outcome.passed();
    let line = format!(
        "{}: {} [{}]",
        cfg.command.name(),
        outcome.summary,
        if passed { "pass" } else { "FAIL" }
    );
    Ok((passed, line, path))
}

pub fn main_with(cli: Cli) -> ExitCode {
    let cfg = match RunConfig::resolve(cli.command, &cli.flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok((passed, line, _)) => {
            println!("{line}");
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Usage(_)) { 2 } else { 1 })
        }
    }
}
