use approx::assert_relative_eq;
use degctl::bessel::bessel_zero;
use degctl::control::{moment_residual, synthesize, ControlSignal};
use degctl::cost::{cost_lower, cost_upper};
use degctl::moment::{build_biortho, gram_matrix};
use degctl::profile::InitialState;
use degctl::quadrature::{CompositeRule, QuadratureSettings};
use degctl::simulate::evolve;
use degctl::spectrum::{l2_norm_sq, make_basis, nu_of, MomentVector};
use nalgebra::DVector;
use proptest::prelude::*;

fn unit_vector(raw: &[f64]) -> Option<Vec<f64>> {
    let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    (norm > 1e-3).then(|| raw.iter().map(|x| x / norm).collect())
}

fn null_setup(alpha: f64, n: usize) -> (Vec<f64>, degctl::moment::BiorthogonalFamily) {
    let lambdas = make_basis(alpha, n + 2).unwrap().eigenvalues();
    let fam = build_biortho(&lambdas[..n], 1.0, 1e-6).unwrap();
    (lambdas, fam)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn null_space_perturbations_increase_sigma_norm(
        alpha in 0.0f64..0.95,
        n in 2usize..=5,
        row in 0usize..5,
        tail in prop::collection::vec(-1.0f64..1.0, 2),
    ) {
        prop_assume!(tail.iter().any(|x| x.abs() > 1e-2));
        let row = row % n + 1;
        let (lambdas, fam) = null_setup(alpha, n);
        // span {1, e^{λ_k(t−T)}, k ≤ n+2}; the perturbation is orthogonal to the first n+1
        let mut exps = vec![0.0];
        exps.extend_from_slice(&lambdas);
        let g = gram_matrix(&exps, 1.0);
        let k = n + 1;
        let g11 = g.view((0, 0), (k, k)).into_owned();
        let g12 = g.view((0, k), (k, 2)).into_owned();
        let hi = DVector::from_column_slice(&tail);
        let lo = g11.lu().solve(&(-(&g12 * &hi))).unwrap();
        let pert = DVector::from_iterator(k + 2, lo.iter().chain(hi.iter()).copied());
        let mut sigma = DVector::zeros(k + 2);
        for (i, c) in fam.coefficients[row - 1].iter().enumerate() {
            sigma[i] = *c;
        }
        let quad = |v: &DVector<f64>| (v.transpose() * &g * v)[(0, 0)];
        let base = quad(&sigma);
        let h = quad(&pert);
        let perturbed = quad(&(&sigma + &pert));
        prop_assert!(h > 0.0);
        prop_assert!(perturbed > base);
        let cross = (perturbed - base - h) / (base.sqrt() * h.sqrt());
        prop_assert!(cross.abs() < 1e-6, "cross term {}", cross);
    }

    #[test]
    fn synthesis_scales_exactly_by_powers_of_two(
        alpha in 0.0f64..0.9,
        raw in prop::collection::vec(-1.0f64..1.0, 6),
        target in prop::collection::vec(-1e-3f64..1e-3, 6),
        k in -8i32..8,
    ) {
        let b = make_basis(alpha, 6).unwrap();
        let fam = build_biortho(&b.eigenvalues(), 1.0, 1e-6).unwrap();
        let mu0 = MomentVector::new(alpha, raw).unwrap();
        let mu_t = MomentVector::new(alpha, target).unwrap();
        let a = 2f64.powi(k);
        let one = synthesize(&b, &fam, &mu0, &mu_t).unwrap();
        let scaled = synthesize(&b, &fam, &mu0.scaled(a), &mu_t.scaled(a)).unwrap();
        for (x, y) in scaled.derivative_coeffs.iter().zip(&one.derivative_coeffs) {
            prop_assert_eq!(*x, a * y);
        }
        for (x, y) in scaled.g_coeffs.iter().zip(&one.g_coeffs) {
            prop_assert_eq!(x.to_f64(), a * y.to_f64());
        }
    }

    #[test]
    fn synthesis_superposes(
        alpha in 0.0f64..0.9,
        p in prop::collection::vec(-1.0f64..1.0, 5),
        q in prop::collection::vec(-1.0f64..1.0, 5),
    ) {
        let b = make_basis(alpha, 5).unwrap();
        let fam = build_biortho(&b.eigenvalues(), 1.0, 1e-6).unwrap();
        let zero = MomentVector::zeros(alpha, 5);
        let sum: Vec<f64> = p.iter().zip(&q).map(|(x, y)| x + y).collect();
        let sp = synthesize(&b, &fam, &MomentVector::new(alpha, p).unwrap(), &zero).unwrap();
        let sq = synthesize(&b, &fam, &MomentVector::new(alpha, q).unwrap(), &zero).unwrap();
        let ss = synthesize(&b, &fam, &MomentVector::new(alpha, sum).unwrap(), &zero).unwrap();
        let scale = sp.derivative_coeffs.iter().chain(&sq.derivative_coeffs).fold(0.0f64, |m, x| m.max(x.abs()));
        for i in 0..5 {
            let lhs = ss.derivative_coeffs[i];
            let rhs = sp.derivative_coeffs[i] + sq.derivative_coeffs[i];
            prop_assert!((lhs - rhs).abs() <= 1e-13 * scale.max(1.0));
        }
    }

    #[test]
    fn random_unit_data_is_steered_exactly(
        alpha in prop::sample::select(vec![0.0, 0.5, 0.8]),
        n in 1usize..=10,
        raw in prop::collection::vec(-1.0f64..1.0, 10),
    ) {
        let Some(unit) = unit_vector(&raw[..n]) else { return Ok(()) };
        let b = make_basis(alpha, n).unwrap();
        let fam = build_biortho(&b.eigenvalues(), 1.0, 1e-6).unwrap();
        let mu0 = MomentVector::new(alpha, unit).unwrap();
        let zero = MomentVector::zeros(alpha, n);
        let sig = synthesize(&b, &fam, &mu0, &zero).unwrap();
        let res = moment_residual(&b, &sig, &mu0, &zero, 0).unwrap();
        prop_assert!(res.iter().all(|r| r.abs() < 1e-6), "{:?}", res);
        prop_assert_eq!(sig.big_g(0.0), 0.0);
        prop_assert!(sig.endpoint.abs() < 1e-8);
        let traj = evolve(&b, &mu0, &sig, 512).unwrap();
        prop_assert!(traj.oracle_deviation < 1e-6, "deviation {}", traj.oracle_deviation);
    }

    #[test]
    fn parseval_partial_sums_never_exceed_the_norm(
        alpha in 0.0f64..0.95,
        c in prop::collection::vec(-2.0f64..2.0, 4),
    ) {
        let f = |x: f64| x * (1.0 - x) * (c[0] + c[1] * x + c[2] * x * x) + c[3] * x.powi(4) * (1.0 - x);
        let b = make_basis(alpha, 10).unwrap();
        let mu = b.project(f).unwrap();
        let rule = CompositeRule::new(QuadratureSettings::default());
        let norm_sq = l2_norm_sq(f, &rule);
        prop_assert!(mu.norm().powi(2) <= norm_sq * (1.0 + 1e-6));
    }

    #[test]
    fn energy_decays_without_control(
        alpha in 0.0f64..0.95,
        raw in prop::collection::vec(-1.0f64..1.0, 6),
    ) {
        let b = make_basis(alpha, 6).unwrap();
        let mut exps = vec![0.0];
        exps.extend(b.eigenvalues());
        let traj = evolve(&b, &MomentVector::new(alpha, raw).unwrap(), &ControlSignal::zero(alpha, 1.0, exps), 128).unwrap();
        let energy: Vec<f64> = traj.v.iter().map(|v| v.iter().map(|x| x * x).sum()).collect();
        prop_assert!(energy.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn lower_bound_never_exceeds_upper(
        alpha in 0.0f64..0.9,
        raw in prop::collection::vec(-1.0f64..1.0, 6),
    ) {
        let Some(unit) = unit_vector(&raw) else { return Ok(()) };
        let mu0 = MomentVector::new(alpha, unit).unwrap();
        let upper = cost_upper(alpha, &mu0, 1.0, 6).unwrap();
        let lower = cost_lower(alpha, &mu0, 1.0).unwrap();
        prop_assert!(lower.value <= upper.value, "{} > {}", lower.value, upper.value);
    }
}

#[test]
fn gram_condition_is_insensitive_to_alpha() {
    let conds: Vec<f64> = [0.0, 0.5, 0.9]
        .iter()
        .map(|&a| {
            let l = make_basis(a, 8).unwrap().eigenvalues();
            build_biortho(&l, 1.0, 1e-6).unwrap().gram_condition
        })
        .collect();
    let max = conds.iter().cloned().fold(f64::MIN, f64::max);
    let min = conds.iter().cloned().fold(f64::MAX, f64::min);
    assert!(max / min <= 10.0, "conditions {conds:?}");
}

#[test]
fn upper_cost_grows_towards_alpha_one() {
    for u0 in [InitialState::Mode { n: 1 }, InitialState::Parabola] {
        let costs: Vec<f64> = [0.5, 0.7, 0.8, 0.9]
            .iter()
            .map(|&a| {
                let b = make_basis(a, 8).unwrap();
                let mu0 = u0.moments(&b, 1e-8).unwrap().normalized();
                cost_upper(a, &mu0, 1.0, 8).unwrap().value
            })
            .collect();
        assert!(costs.windows(2).all(|w| w[1] >= w[0]), "{} {costs:?}", u0.descriptor());
    }
}

#[test]
fn zeros_approach_order_zero_as_alpha_nears_one() {
    for n in 1..=8 {
        let limit = bessel_zero(0.0, n).unwrap().zero;
        let gaps: Vec<f64> = [0.9, 0.99, 0.999]
            .iter()
            .map(|&a| (bessel_zero(nu_of(a), n).unwrap().zero - limit).abs())
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "n = {n}: {gaps:?}");
        assert_relative_eq!(gaps[2], 0.0, epsilon = 1e-2);
    }
}
