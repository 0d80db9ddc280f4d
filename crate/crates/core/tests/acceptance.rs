//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p irsmec --test acceptance`. A single criterion can
//! be selected by passing its number, e.g. `-- 4`. Failing criteria are
//! listed at the end; the process exits non-zero on failure only when
//! `ACCEPTANCE_STRICT` is set.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use irsmec::chanmodel::{generate_channels, ChannelSet, SystemGeometry};
use irsmec::econ::{derive_economy, edge_utility, local_utility, offload_decision, Choice, OffloadEconomy, TaskProfile};
use irsmec::feasibility::{build_p8, feasibility_check_from, feasibility_probability, FeasibilityMode, FeasibilityOptions};
use irsmec::instances::{random_channels, random_cmat, random_cvec, random_phase};
use irsmec::qcqp::{self, Bound, QcqpOptions, QcqpProblem, QuadraticForm, Status};
use irsmec::signal::{max_sinr, min_mse, mse, rate, rates, PhaseVector, ReceiverBank};
use irsmec::sumratio::{optimize, optimize_from, rate_surrogate, surrogate_form, update_receivers, update_weights, OptimizationStatus, SumRatioOptions};
use irsmec::{CMat, CVec};
use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const IDENTITY_TOL: f64 = 1e-9;
const TIGHTNESS_TOL: f64 = 1e-8;
const FORM_TOL: f64 = 1e-9;
const GRID_TOL: f64 = 1e-4;
const RATE_TOL: f64 = 1e-6;
const BOUNDARY_BAND: (f64, f64) = (2.0, 2.8);
const MAX_FEAS_ITERATIONS: usize = 25;
const MIN_PROBABILITY_GAP: f64 = 0.20;
const KKT_TOL: f64 = 1e-4;
const MAX_OUTER: usize = 30;
const GAP_TOL: f64 = 0.05;
const GAP_SEEDS_REQUIRED: usize = 8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, budget_s: u64) -> bool {
    elapsed <= Duration::from_secs(budget_s)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn random_instance(r: &mut ChaCha8Rng) -> (ChannelSet<f64>, PhaseVector<f64>) {
    let m = r.random_range(1..=8);
    let k = r.random_range(1..=6);
    let n = r.random_range(0..=32);
    let ch = random_channels::<f64, _>(m, k, n, r);
    let phi = random_phase(n, r);
    (ch, phi)
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let mut r = rng(101);
    let mut worst = 0f64;
    for _ in 0..1000 {
        let (ch, phi) = random_instance(&mut r);
        for k in 0..ch.users() {
            let eps = min_mse(&ch, &phi, k).unwrap();
            let gamma = max_sinr(&ch, &phi, k).unwrap();
            worst = worst.max((eps - 1.0 / (1.0 + gamma)).abs());
        }
    }
    let el = t0.elapsed();
    outcome(
        worst < IDENTITY_TOL && within(el, 10),
        format!("max |eps - 1/(1+gamma)| = {worst:.2e} over 1000 instances, {:.2}s", el.as_secs_f64()),
    )
}

fn criterion_2() -> Outcome {
    let t0 = Instant::now();
    let mut r = rng(102);
    let mut worst = 0f64;
    for _ in 0..1000 {
        let (ch, phi) = random_instance(&mut r);
        let w = update_weights(&ch, &phi).unwrap();
        let v = update_receivers(&ch, &phi).unwrap();
        for (k, &weight) in w.iter().enumerate() {
            let exact = rate(&ch, &phi, k).unwrap();
            let tight = rate_surrogate(&ch, &phi, v.get(k), weight, k).unwrap();
            worst = worst.max((exact - tight).abs());
        }
    }
    let el = t0.elapsed();
    outcome(
        worst < TIGHTNESS_TOL && within(el, 10),
        format!("max |R - R~| = {worst:.2e} over 1000 instances, {:.2}s", el.as_secs_f64()),
    )
}

fn criterion_3() -> Outcome {
    let t0 = Instant::now();
    let mut r = rng(103);
    let mut worst_p8 = 0f64;
    let mut worst_p12 = 0f64;
    for _ in 0..30 {
        let (ch, _) = random_instance(&mut r);
        let (m, k_users, n) = (ch.antennas(), ch.users(), ch.elements());
        let bank = ReceiverBank((0..k_users).map(|_| random_cvec::<f64, _>(m, &mut r)).collect());
        let floors: Vec<f64> = (0..k_users).map(|_| r.random_range(0.0..3.0)).collect();
        let weights: Vec<f64> = (0..k_users).map(|_| r.random_range(0.2..4.0)).collect();
        let p8 = build_p8(&ch, &bank, &floors).unwrap();
        let forms: Vec<QuadraticForm<f64>> = (0..k_users).map(|k| surrogate_form(&ch, &bank, &weights, k).unwrap()).collect();
        for _ in 0..100 {
            let phi = random_phase::<f64, _>(n, &mut r);
            for k in 0..k_users {
                let want = floors[k].exp() * mse(&ch, &phi, k, bank.get(k)).unwrap();
                let got = p8.constraints[k].form.eval(phi.as_vector());
                worst_p8 = worst_p8.max((got - want).abs() / (1.0 + want.abs()));
                let want = rate_surrogate(&ch, &phi, bank.get(k), weights[k], k).unwrap();
                let got = forms[k].eval(phi.as_vector());
                worst_p12 = worst_p12.max((got - want).abs() / (1.0 + want.abs()));
            }
        }
    }
    let el = t0.elapsed();
    outcome(
        worst_p8 < FORM_TOL && worst_p12 < FORM_TOL && within(el, 30),
        format!(
            "max rel. error P8 {worst_p8:.2e}, P12 {worst_p12:.2e} (30 instances x 100 phases), {:.2}s",
            el.as_secs_f64()
        ),
    )
}

/// Random convex instance: a convex minimization or concave maximization
/// with an optional convex constraint that is strictly feasible somewhere.
fn convex_instance(r: &mut ChaCha8Rng) -> QcqpProblem<f64> {
    let n = r.random_range(1..=3);
    let psd = |r: &mut ChaCha8Rng| {
        let b: CMat<f64> = random_cmat(n, n, r);
        b.adjoint() * b
    };
    let q = psd(r);
    let l: CVec<f64> = random_cvec(n, r) * Complex::new(r.random_range(0.3..2.0), 0.0);
    let c = r.random_range(-1.0..1.0);
    let mut prob = if r.random_bool(0.5) {
        QcqpProblem::minimize(QuadraticForm::new(q, l, c))
    } else {
        QcqpProblem::maximize(QuadraticForm::new(-q, l, c))
    };
    if r.random_bool(0.6) {
        let g = QuadraticForm::new(psd(r), random_cvec(n, r), 0.0);
        let anchor = random_phase::<f64, _>(n, r);
        let level = g.eval(anchor.as_vector()) + r.random_range(0.05..0.5);
        prob = prob.subject_to(g, Bound::AtMost(level));
    }
    prob
}

fn sign(prob: &QcqpProblem<f64>) -> f64 {
    match prob.objective {
        qcqp::Objective::Quadratic { sense: qcqp::Sense::Maximize, .. } => -1.0,
        _ => 1.0,
    }
}

/// `sign · objective`, or `None` outside the feasible set.
fn penalized(prob: &QcqpProblem<f64>, z: &[f64]) -> Option<f64> {
    let n = prob.elements;
    if (0..n).any(|i| z[i] * z[i] + z[n + i] * z[n + i] > 1.0) {
        return None;
    }
    let phi = CVec::from_iterator(n, (0..n).map(|i| Complex::new(z[i], z[n + i])));
    for c in &prob.constraints {
        if let Bound::AtMost(b) = c.bound {
            if c.form.eval(&phi) > b {
                return None;
            }
        }
    }
    match &prob.objective {
        qcqp::Objective::Quadratic { form, .. } => Some(sign(prob) * form.eval(&phi)),
        _ => unreachable!(),
    }
}

/// Polar grid over the product of disks, then a shrinking Cartesian
/// pattern search around the incumbent. Returns the best feasible value in
/// the minimization sense.
fn disk_grid_search(prob: &QcqpProblem<f64>) -> f64 {
    let n = prob.elements;
    let (radii, angles) = match n {
        1 => (60, 240),
        2 => (16, 48),
        _ => (7, 20),
    };
    let mut points = Vec::with_capacity(1 + radii * angles);
    points.push((0.0, 0.0));
    for a in 1..=radii {
        let rho = a as f64 / radii as f64;
        for b in 0..angles {
            let th = 2.0 * PI * b as f64 / angles as f64;
            points.push((rho * th.cos(), rho * th.sin()));
        }
    }
    let mut best = (f64::INFINITY, vec![0.0; 2 * n]);
    let mut idx = vec![0usize; n];
    let mut z = vec![0.0; 2 * n];
    loop {
        for i in 0..n {
            z[i] = points[idx[i]].0;
            z[n + i] = points[idx[i]].1;
        }
        if let Some(v) = penalized(prob, &z) {
            if v < best.0 {
                best = (v, z.clone());
            }
        }
        let mut i = 0;
        while i < n {
            idx[i] += 1;
            if idx[i] < points.len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    assert!(best.0.is_finite(), "grid found no feasible point");
    // Refine in polar coordinates (radius clamped to the disk) along
    // random directions with a shrinking step.
    let to_polar = |z: &[f64]| -> Vec<f64> {
        let mut p = vec![0.0; 2 * n];
        for i in 0..n {
            p[i] = z[i].hypot(z[n + i]);
            p[n + i] = z[n + i].atan2(z[i]);
        }
        p
    };
    let to_cart = |p: &[f64]| -> Vec<f64> {
        let mut z = vec![0.0; 2 * n];
        for i in 0..n {
            let rho = p[i].clamp(0.0, 1.0);
            z[i] = rho * p[n + i].cos();
            z[n + i] = rho * p[n + i].sin();
        }
        z
    };
    let mut r = rng(7);
    let mut p = to_polar(&best.1);
    let mut step = 2.0 / radii as f64;
    while step > 1e-10 {
        let mut improved = false;
        for _ in 0..4000 {
            let mut cand = p.clone();
            for x in cand.iter_mut() {
                *x += step * r.random_range(-1.0..1.0);
            }
            for x in cand.iter_mut().take(n) {
                *x = x.clamp(0.0, 1.0);
            }
            if let Some(v) = penalized(prob, &to_cart(&cand)) {
                if v < best.0 {
                    best.0 = v;
                    p = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.7;
        }
    }
    best.0
}

fn criterion_4() -> Outcome {
    let t0 = Instant::now();
    let mut r = rng(104);
    let opts = QcqpOptions::default();
    let mut worst = 0f64;
    let mut failures = 0;
    for _ in 0..50 {
        let prob = convex_instance(&mut r);
        let sol = qcqp::solve(&prob, &opts, None).unwrap();
        let grid = disk_grid_search(&prob);
        let solver = sign(&prob) * sol.objective;
        let gap = (solver - grid).abs();
        worst = worst.max(gap);
        if sol.status != Status::Optimal || sol.max_violation() > 1e-7 || gap > GRID_TOL {
            failures += 1;
        }
    }
    let el = t0.elapsed();
    outcome(
        failures == 0 && within(el, 300),
        format!(
            "50 instances (N <= 3): max |solver - grid| = {worst:.2e}, {failures} failures, {:.1}s",
            el.as_secs_f64()
        ),
    )
}

fn sweep() -> Vec<f64> {
    (0..=8).map(|i| 2.1 + 0.1 * i as f64).collect()
}

fn criterion_5() -> Outcome {
    let t0 = Instant::now();
    let opts = FeasibilityOptions::<f64>::default();
    let mut monotone = true;
    let mut sound = true;

    // Monotonicity and soundness on random small instances.
    let mut r = rng(105);
    for _ in 0..20 {
        let ch = random_channels::<f64, _>(3, 3, 8, &mut r);
        let floors: Vec<f64> = (0..3).map(|_| r.random_range(0.2..1.5)).collect();
        let start = random_phase(8, &mut r);
        let run = feasibility_check_from(&ch, &floors, &start, &opts).unwrap();
        monotone &= run.alpha_trace.windows(2).all(|w| w[1] <= w[0]);
        if let Some(phi) = &run.phi {
            let got = rates(&ch, phi).unwrap();
            sound &= got.iter().zip(&floors).all(|(g, f)| *g >= f - RATE_TOL);
        }
    }

    // Reference setup: one realization, one common start, a sweep of floors.
    let geom = SystemGeometry::calibrated(4, 4, 30);
    let ch = generate_channels::<f64>(&geom, 0).unwrap();
    let start = PhaseVector::random(30, &mut stream_rng(0, 2));
    let mut boundary = None;
    let mut max_iter = 0;
    let mut iters = Vec::new();
    let mut consistent = true;
    let mut seen_infeasible = false;
    for floor in sweep() {
        let floors = vec![floor; 4];
        let run = feasibility_check_from(&ch, &floors, &start, &opts).unwrap();
        monotone &= run.alpha_trace.windows(2).all(|w| w[1] <= w[0]);
        max_iter = max_iter.max(run.iterations);
        iters.push(format!("{floor:.1}:{}{}", run.iterations, if run.feasible { "f" } else { "i" }));
        if let Some(phi) = &run.phi {
            let got = rates(&ch, phi).unwrap();
            sound &= got.iter().all(|g| *g >= floor - RATE_TOL);
            consistent &= !seen_infeasible;
            boundary = Some(floor);
        } else {
            seen_infeasible = true;
        }
    }
    let in_band = boundary.is_some_and(|b| b >= BOUNDARY_BAND.0 - 1e-9 && b <= BOUNDARY_BAND.1 + 1e-9);
    let el = t0.elapsed();
    let pass = monotone && sound && consistent && in_band && max_iter <= MAX_FEAS_ITERATIONS && within(el, 120);
    outcome(
        pass,
        format!(
            "alpha non-increasing {monotone}, certificates sound {sound}, boundary {} (band [{}, {}]), \
             max iterations {max_iter} (limit {MAX_FEAS_ITERATIONS}; per floor, f feasible / i infeasible: {}), {:.1}s",
            boundary.map_or("none".into(), |b| format!("{b:.1}")),
            BOUNDARY_BAND.0,
            BOUNDARY_BAND.1,
            iters.join(" "),
            el.as_secs_f64()
        ),
    )
}

fn criterion_6() -> Outcome {
    let t0 = Instant::now();
    let geom = SystemGeometry::calibrated(4, 4, 30);
    let opts = FeasibilityOptions::<f64>::default();
    let floors = [1.6, 1.8, 2.0, 2.2, 2.4];
    let mut ordered = true;
    let mut best_gap = f64::NEG_INFINITY;
    let mut table = Vec::new();
    for &floor in &floors {
        let p = |mode| feasibility_probability(&geom, floor, 50, 0, mode, &opts).unwrap();
        let (none, random, optimized) = (p(FeasibilityMode::None), p(FeasibilityMode::Random), p(FeasibilityMode::Optimized));
        ordered &= optimized >= random && random >= none;
        best_gap = best_gap.max(optimized - none);
        table.push(format!("{floor:.1}: {optimized:.2}/{random:.2}/{none:.2}"));
    }
    let el = t0.elapsed();
    outcome(
        ordered && best_gap >= MIN_PROBABILITY_GAP && within(el, 1200),
        format!(
            "ordered {ordered}, max optimized - none {:.0} pts [{}], {:.1}s",
            100.0 * best_gap,
            table.join(", "),
            el.as_secs_f64()
        ),
    )
}

fn criterion_7() -> Outcome {
    let geom = SystemGeometry::calibrated(4, 4, 30);
    let econ = OffloadEconomy::flat(4, 10.0, 1.0, 1.5).unwrap();
    let opts = SumRatioOptions::<f64> {
        max_outer: MAX_OUTER,
        ..SumRatioOptions::default()
    };
    let mut pass = true;
    let mut lines = Vec::new();
    for seed in 0..4u64 {
        let t0 = Instant::now();
        let ch = generate_channels::<f64>(&geom, seed).unwrap();
        let res = optimize(&ch, &econ, &opts, &mut stream_rng(seed, 3)).unwrap();
        let decrease = res.records.iter().filter(|rec| rec.t > 0).all(|rec| {
            let f = 1.0 - opts.xi.powi(rec.backtracks as i32) * opts.epsilon;
            rec.delta <= f * f * rec.previous_delta
        });
        let kkt = res.kkt_lambda < KKT_TOL && res.kkt_mu < KKT_TOL;
        let improved = res.objective <= res.start_objective;
        let outer = res.records.len() - 1;
        let terminated = res.status != OptimizationStatus::MaxIter && outer <= MAX_OUTER;
        let el = t0.elapsed();
        let ok = decrease && kkt && improved && terminated && within(el, 300);
        pass &= ok;
        lines.push(format!(
            "seed {seed}: {} (decrease {decrease}, kkt {:.1e}/{:.1e}, objective {:.4} -> {:.4}, {outer} outer, {:?}, {:.0}s)",
            if ok { "ok" } else { "fail" },
            res.kkt_lambda,
            res.kkt_mu,
            res.start_objective,
            res.objective,
            res.status,
            el.as_secs_f64()
        ));
    }
    outcome(pass, lines.join("; "))
}

fn criterion_8() -> Outcome {
    let t0 = Instant::now();
    let econ = OffloadEconomy::new(vec![10.0; 2], vec![1.0, 2.0], vec![0.0; 2]).unwrap();
    let opts = SumRatioOptions::<f64>::default();
    let steps = 200;
    let mut good = 0;
    let mut gaps = Vec::new();
    for seed in 0..10u64 {
        let mut r = rng(1000 + seed);
        let ch = random_channels::<f64, _>(2, 2, 2, &mut r);
        let mut grid_best = f64::INFINITY;
        for a in 0..steps {
            for b in 0..steps {
                let th = [PI * a as f64 / 100.0, PI * b as f64 / 100.0];
                let phi = PhaseVector::from_angles(&th);
                let rr = rates(&ch, &phi).unwrap();
                grid_best = grid_best.min(rr.iter().zip(&econ.transmit_weight).map(|(r, a)| a / r).sum());
            }
        }
        let res = optimize_from(&ch, &econ, &PhaseVector::random(2, &mut r), &opts).unwrap();
        let gap = (res.objective - grid_best) / grid_best;
        if gap <= GAP_TOL {
            good += 1;
        }
        gaps.push(format!("{:.1}%", 100.0 * gap));
    }
    let el = t0.elapsed();
    outcome(
        good >= GAP_SEEDS_REQUIRED && within(el, 600),
        format!("gap to grid best [{}], {good}/10 within 5%, {:.1}s", gaps.join(", "), el.as_secs_f64()),
    )
}

fn random_profile(r: &mut ChaCha8Rng) -> TaskProfile<f64> {
    TaskProfile {
        data_bits: r.random_range(0.1..10.0),
        cycles: r.random_range(0.1..10.0),
        local_speed: r.random_range(0.5..5.0),
        edge_speed: r.random_range(5.0..50.0),
        energy_per_cycle: r.random_range(0.0..2.0),
        transmit_power: r.random_range(0.0..2.0),
        tail_energy: r.random_range(0.0..1.0),
        time_weight: r.random_range(0.0..1.0),
        energy_weight: r.random_range(0.0..1.0),
        benefit: r.random_range(0.0..20.0),
    }
}

fn criterion_9() -> Outcome {
    let t0 = Instant::now();
    let mut r = rng(109);
    let mut mismatches = 0;
    let mut boundary_cases = 0;
    for i in 0..10_000 {
        let p = random_profile(&mut r);
        let econ = derive_economy(std::slice::from_ref(&p), &[0.0]).unwrap();
        let rate = r.random_range(0.1..5.0);
        // Every fourth profile sits exactly on the indifference payment.
        let payment = if i % 4 == 0 {
            boundary_cases += 1;
            econ.max_payment(0, rate)
        } else {
            r.random_range(-5.0..15.0)
        };
        let diff = edge_utility(&p, rate, payment).unwrap() - local_utility(&p);
        let decision = offload_decision(&econ, 0, rate, payment).unwrap();
        // On the boundary the utilities tie and the device offloads.
        let expected = if i % 4 == 0 || diff >= 0.0 { Choice::Edge } else { Choice::Local };
        if decision != expected {
            mismatches += 1;
        }
    }
    let el = t0.elapsed();
    outcome(
        mismatches == 0 && within(el, 5),
        format!(
            "{mismatches} mismatches on 10000 profiles ({boundary_cases} on the boundary), {:.2}s",
            el.as_secs_f64()
        ),
    )
}

type Criterion = (usize, &'static str, fn() -> Outcome);

fn main() {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [Criterion; 9] = [
        (1, "MSE-SINR identity", criterion_1),
        (2, "surrogate tightness", criterion_2),
        (3, "subproblem construction", criterion_3),
        (4, "QCQP vs grid", criterion_4),
        (5, "feasibility check", criterion_5),
        (6, "feasibility probability ordering", criterion_6),
        (7, "sum-of-ratios contracts", criterion_7),
        (8, "small-instance global gap", criterion_8),
        (9, "economics equivalences", criterion_9),
    ];
    let mut failed = Vec::new();
    for (id, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let o = run();
        println!("criterion {id} [{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("all selected criteria pass");
    } else {
        println!("failed criteria: {failed:?}");
        if std::env::var_os("ACCEPTANCE_STRICT").is_some() {
            std::process::exit(1);
        }
    }
}
