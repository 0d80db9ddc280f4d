use super::*;
use crate::instances::{random_cmat, random_cvec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

fn psd(n: usize, rng: &mut ChaCha8Rng) -> CMat<f64> {
    let a = random_cmat::<f64, _>(n, n, rng);
    a.adjoint() * a
}

#[test]
fn embedding_matches_complex_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 1..5 {
        let f = QuadraticForm::new(random_cmat::<f64, _>(n, n, &mut rng), random_cvec::<f64, _>(n, &mut rng), 0.7);
        let q = f.embed(2 * n);
        for _ in 0..20 {
            let phi = random_cvec::<f64, _>(n, &mut rng);
            let z = embed_phi(&phi, 2 * n);
            let direct: f64 = f.eval(&phi);
            assert!((direct - q.value(&z)).abs() < 1e-10 * (1.0 + direct.abs()));
        }
    }
}

#[test]
fn minimize_norm_with_disks_only() {
    let prob = QcqpProblem::minimize(QuadraticForm::new(CMat::identity(3, 3), CVec::zeros(3), 0.0f64));
    let sol = solve(&prob, &QcqpOptions::default(), None).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!(f64::abs(sol.objective) < 1e-7);
    assert!(sol.phi.as_vector().norm() < 1e-3);
}

#[test]
fn linear_maximum_on_the_unit_disk() {
    let form = QuadraticForm::new(CMat::zeros(1, 1), CVec::from_element(1, c(1.0, 0.0)), 0.0);
    let sol = solve(&QcqpProblem::maximize(form), &QcqpOptions::default(), None).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.objective - 2.0).abs() < 1e-6);
    let phi = sol.phi.as_vector()[0];
    assert!((phi - c(1.0, 0.0)).norm() < 1e-3);
}

#[test]
fn zero_elements() {
    let prob = QcqpProblem::<f64>::epigraph(0)
        .subject_to(QuadraticForm::new(CMat::zeros(0, 0), CVec::zeros(0), 0.25), Bound::Epigraph)
        .subject_to(QuadraticForm::new(CMat::zeros(0, 0), CVec::zeros(0), 0.5), Bound::Epigraph);
    let sol = solve(&prob, &QcqpOptions::default(), None).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.objective - 0.5).abs() < 1e-12);
    assert!(sol.phi.is_empty());
}

#[test]
fn identity_certified_and_negative_identity_rejected() {
    let id = QuadraticForm::new(CMat::<f64>::identity(2, 2), CVec::zeros(2), 0.0);
    let report = check_convexity(&QcqpProblem::minimize(id.clone()), 1e-8);
    assert!(report.is_convex());
    let report = check_convexity(&QcqpProblem::maximize(id.clone()), 1e-8);
    assert!(!report.is_convex());
    let neg = id.scaled(-1.0);
    let err = solve(&QcqpProblem::minimize(neg), &QcqpOptions::default(), None).unwrap_err();
    assert!(matches!(err, Error::NonConvex(_)));
}

#[test]
fn non_convex_constraint_rejected() {
    let n = 2;
    let prob = QcqpProblem::minimize(QuadraticForm::zeros(n))
        .subject_to(QuadraticForm::new(CMat::identity(n, n), CVec::zeros(n), 0.0), Bound::AtMost(0.5));
    assert!(solve(&prob, &QcqpOptions::default(), None).is_ok());
    let prob = QcqpProblem::minimize(QuadraticForm::zeros(n))
        .subject_to(QuadraticForm::new(CMat::identity(n, n), CVec::zeros(n), 0.0), Bound::AtLeast(0.5));
    assert!(matches!(
        solve(&prob, &QcqpOptions::default(), None),
        Err(Error::NonConvex(_))
    ));
}

#[test]
fn dimension_mismatch() {
    let prob = QcqpProblem::minimize(QuadraticForm::<f64>::zeros(2))
        .subject_to(QuadraticForm::zeros(3), Bound::AtMost(1.0));
    assert!(matches!(
        solve(&prob, &QcqpOptions::default(), None),
        Err(Error::Dimension(_))
    ));
}

#[test]
fn constraint_active_at_the_optimum() {
    // Maximize Re φ subject to |φ|² ≤ 1/4: optimum 2·(1/2) = 1 at φ = 1/2.
    let obj = QuadraticForm::new(CMat::zeros(1, 1), CVec::from_element(1, c(1.0, 0.0)), 0.0);
    let con = QuadraticForm::new(CMat::identity(1, 1), CVec::zeros(1), 0.0);
    let prob = QcqpProblem::maximize(obj).subject_to(con, Bound::AtMost(0.25));
    let sol = solve(&prob, &QcqpOptions::default(), None).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.objective - 1.0).abs() < 1e-6);
    assert!(sol.max_violation() <= 1e-8);
}

#[test]
fn infeasible_detected() {
    // |φ - 3|² ≤ 1 does not meet the unit disk.
    let con = QuadraticForm::new(CMat::identity(1, 1), CVec::from_element(1, c(-3.0, 0.0)), 9.0);
    let prob = QcqpProblem::minimize(QuadraticForm::zeros(1)).subject_to(con, Bound::AtMost(1.0));
    let sol = solve(&prob, &QcqpOptions::default(), None).unwrap();
    assert_eq!(sol.status, Status::InfeasibleDetected);
}

#[test]
fn touching_feasible_set_has_no_interior() {
    // |φ - 2|² ≤ 1 touches the unit disk only at φ = 1.
    let con = QuadraticForm::new(CMat::identity(1, 1), CVec::from_element(1, c(-2.0, 0.0)), 4.0);
    let prob = QcqpProblem::minimize(QuadraticForm::zeros(1)).subject_to(con, Bound::AtMost(1.0));
    let sol = solve(&prob, &QcqpOptions::default(), None).unwrap();
    assert_ne!(sol.status, Status::Optimal);
}

#[test]
fn epigraph_of_two_disks() {
    // min max(|φ-1|², |φ+1|²) over the unit disk: 1 at φ = 0.
    let f = |a: f64| QuadraticForm::new(CMat::identity(1, 1), CVec::from_element(1, c(-a, 0.0)), a * a);
    let prob = QcqpProblem::epigraph(1)
        .subject_to(f(1.0), Bound::Epigraph)
        .subject_to(f(-1.0), Bound::Epigraph);
    let sol = solve(&prob, &QcqpOptions::default(), None).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.objective - 1.0).abs() < 1e-6);
    let d = sol.dual_bound.unwrap();
    assert!(d <= sol.objective + 1e-9 && sol.objective - d < 1e-6);
}

fn random_problem(n: usize, seed: u64, epigraph: bool) -> QcqpProblem<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if epigraph {
        let mut prob = QcqpProblem::epigraph(n);
        for _ in 0..3 {
            let f = QuadraticForm::new(psd(n, &mut rng), random_cvec::<f64, _>(n, &mut rng), 0.3);
            prob = prob.subject_to(f, Bound::Epigraph);
        }
        prob
    } else {
        let obj = QuadraticForm::new(psd(n, &mut rng), random_cvec::<f64, _>(n, &mut rng), 0.0);
        let con = QuadraticForm::new(psd(n, &mut rng), CVec::zeros(n), 0.0);
        QcqpProblem::minimize(obj).subject_to(con, Bound::AtMost(0.5 * n as f64))
    }
}

#[test]
fn weak_duality_on_random_instances() {
    let opts = QcqpOptions::default();
    for seed in 0..20 {
        for epi in [false, true] {
            let prob = random_problem(1 + (seed as usize % 4), seed, epi);
            let sol = solve(&prob, &opts, None).unwrap();
            assert_eq!(sol.status, Status::Optimal, "seed {seed}");
            assert!(sol.kkt_residual < opts.kkt_tol);
            assert!(sol.max_violation() <= opts.feas_tol);
            let d = sol.dual_bound.unwrap();
            let tol = 10.0 * opts.kkt_tol * (1.0 + sol.objective.abs());
            assert!(d <= sol.objective + tol, "seed {seed}: {d} > {}", sol.objective);
            assert!(sol.objective - d < tol, "seed {seed}: gap {}", sol.objective - d);
        }
    }
}

#[test]
fn deterministic() {
    let prob = random_problem(3, 11, true);
    let a = solve(&prob, &QcqpOptions::default(), None).unwrap();
    let b = solve(&prob, &QcqpOptions::default(), None).unwrap();
    assert_eq!(a, b);
}

#[test]
fn feasible_start_is_kept_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 3;
    let obj = QuadraticForm::new(CMat::zeros(n, n), random_cvec::<f64, _>(n, &mut rng), 0.0);
    let con = QuadraticForm::new(psd(n, &mut rng), random_cvec::<f64, _>(n, &mut rng), 0.0);
    let start = PhaseVector::zeros(n);
    let bound = con.eval(start.as_vector()) + 0.2;
    let prob = QcqpProblem::maximize(obj).subject_to(con, Bound::AtMost(bound));
    let sol = solve(&prob, &QcqpOptions::default(), Some(&start)).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!(sol.max_path_violation <= 1e-8);
    assert!(sol.max_violation() <= 1e-8);
}

#[test]
fn f32_solve() {
    let form = QuadraticForm::new(CMat::<f32>::zeros(1, 1), CVec::from_element(1, Complex::new(1.0f32, 0.0)), 0.0);
    let opts = QcqpOptions {
        kkt_tol: 1e-4,
        feas_tol: 1e-5,
        ..QcqpOptions::default()
    };
    let sol = solve(&QcqpProblem::maximize(form), &opts, None).unwrap();
    assert!((sol.objective - 2.0).abs() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn embedding_is_exact(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = QuadraticForm::new(random_cmat::<f64, _>(n, n, &mut rng), random_cvec::<f64, _>(n, &mut rng), -1.5);
        let phi = random_cvec::<f64, _>(n, &mut rng);
        let v: f64 = f.eval(&phi);
        prop_assert!((v - f.embed(2 * n).value(&embed_phi(&phi, 2 * n))).abs() < 1e-9 * (1.0 + v.abs()));
    }

    #[test]
    fn scaling_leaves_argmin_unchanged(seed in 0u64..1000, scale in 0.1f64..10.0) {
        let prob = random_problem(2, seed, false);
        let opts = QcqpOptions::default();
        let a = solve(&prob, &opts, None).unwrap();
        let mut scaled = prob.clone();
        if let Objective::Quadratic { form, .. } = &mut scaled.objective {
            *form = form.scaled(scale);
        }
        let b = solve(&scaled, &opts, None).unwrap();
        prop_assert!((b.objective / scale - a.objective).abs() < 10.0 * opts.kkt_tol * (1.0 + a.objective.abs()));
        let pa = a.phi.as_vector();
        let pb = b.phi.as_vector();
        // Argmin distance, measured through the objective's strong convexity.
        let form = match &prob.objective { Objective::Quadratic { form, .. } => form, _ => unreachable!() };
        prop_assert!((form.eval(pb) - form.eval(pa)).abs() < 10.0 * opts.kkt_tol * (1.0 + a.objective.abs()));
    }
}
