//! Sum-of-ratios minimization of `Σ_k A_k / R_k(φ)` under rate floors.
//!
//! Each rate is replaced by its WMMSE surrogate
//! `R̃_k = −ϖ_k [q_k |1 − v_k^H h_k|² + v_k^H W_k v_k] + ln ϖ_k + 1 + ln q_k`,
//! which is quadratic and concave in `φ` and tight at the closed-form
//! `(ϖ_k, v_k)`. The ratios are handled through multipliers `(λ, μ)`: for
//! fixed multipliers a block-coordinate loop maximizes `Σ λ_k μ_k R̃_k`, and
//! a damped Newton step then drives `λ_k R̃_k − 1` and `μ_k R̃_k − A_k` to zero.

use nalgebra::Complex;

use crate::chanmodel::ChannelSet;
use crate::econ::{server_earning_p2, transmit_cost, OffloadEconomy};
use crate::error::{Error, Result};
use crate::feasibility::{feasibility_check, FeasibilityOptions};
use crate::qcqp::{self, Bound, QcqpOptions, QcqpProblem, QuadraticForm, Status};
use crate::scalar::{abs, infinity, inner, lit, maxr, norm_sqr, CMat, CVec, Real};
use crate::signal::{factor, LinkState, PhaseVector, ReceiverBank};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumRatioOptions<T: Real> {
    /// Backtracking base `ξ ∈ (0, 1)` of the Newton step.
    pub xi: T,
    /// Precision `ε > 0` of the residual decrease test.
    pub epsilon: T,
    /// Outer termination threshold on the summed squared residuals.
    pub rho: T,
    /// Relative change of the inner objective that ends the inner loop.
    pub inner_tol: T,
    pub max_inner: usize,
    pub max_outer: usize,
    pub max_backtrack: usize,
    /// Slack allowed when re-verifying the floors with the true rates.
    pub rate_tol: T,
    pub qcqp: QcqpOptions<T>,
    pub feasibility: FeasibilityOptions<T>,
}

impl<T: Real> Default for SumRatioOptions<T> {
    fn default() -> Self {
        SumRatioOptions {
            xi: lit(0.5),
            epsilon: lit(0.01),
            rho: lit(1e-8),
            inner_tol: lit(1e-6),
            max_inner: 1000,
            max_outer: 50,
            max_backtrack: 60,
            rate_tol: lit(1e-6),
            qcqp: QcqpOptions::default(),
            feasibility: FeasibilityOptions::default(),
        }
    }
}

/// Variables carried across the outer iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState<T: Real> {
    pub phi: PhaseVector<T>,
    /// Surrogate receivers `v_k`.
    pub receivers: ReceiverBank<T>,
    /// Surrogate weights `ϖ_k`.
    pub weights: Vec<T>,
    pub lambda: Vec<T>,
    pub mu: Vec<T>,
    /// Outer-iteration counter.
    pub t: usize,
}

/// `ϖ_k = 1/q_k + h_k^H W_k^{-1} h_k` for every user.
pub fn update_weights<T: Real>(ch: &ChannelSet<T>, phi: &PhaseVector<T>) -> Result<Vec<T>> {
    let link = LinkState::new(ch, phi)?;
    (0..ch.users())
        .map(|k| Ok(T::one() / ch.tx_power[k] + link.whitened_gain(k)?))
        .collect()
}

/// `v_k = q_k W̃^{-1} h_k`, the maximizer of the surrogate over `v_k`.
///
/// Equals `q_k W_k^{-1} h_k / (1 + γ_k^*)`.
pub fn update_receivers<T: Real>(ch: &ChannelSet<T>, phi: &PhaseVector<T>) -> Result<ReceiverBank<T>> {
    let link = LinkState::new(ch, phi)?;
    let chol = factor(link.total_covariance(), "total covariance")?;
    Ok(ReceiverBank(
        (0..ch.users())
            .map(|k| chol.solve(link.effective_channel(k).expect("index in range")) * Complex::from(ch.tx_power[k]))
            .collect(),
    ))
}

/// The surrogate `R̃_k(φ, v, ϖ)`.
pub fn rate_surrogate<T: Real>(ch: &ChannelSet<T>, phi: &PhaseVector<T>, v: &CVec<T>, weight: T, k: usize) -> Result<T> {
    if !(weight > T::zero()) {
        return Err(Error::Domain(format!("surrogate weight {weight} must be positive")));
    }
    let link = LinkState::new(ch, phi)?;
    let h = link.effective_channel(k)?;
    if v.len() != h.len() {
        return Err(Error::Dimension(format!("receiver of length {} for {} antennas", v.len(), h.len())));
    }
    let q = ch.tx_power[k];
    let w = link.interference_covariance(k)?;
    let err = (Complex::from(T::one()) - inner(v, h)).norm_sqr();
    let quad = inner(v, &(w * v)).re;
    Ok(-weight * (q * err + quad) + weight.ln() + T::one() + q.ln())
}

/// `R̃_k` as a quadratic form `φ^H T_k φ + 2 Re{t_k^H φ} + c_k`.
pub fn surrogate_form<T: Real>(ch: &ChannelSet<T>, receivers: &ReceiverBank<T>, weights: &[T], k: usize) -> Result<QuadraticForm<T>> {
    ch.check_user(k)?;
    let cascades: Vec<CMat<T>> = (0..ch.users()).map(|j| ch.cascade(j)).collect();
    Ok(surrogate_form_with(ch, &cascades, receivers, weights, k))
}

fn surrogate_form_with<T: Real>(
    ch: &ChannelSet<T>,
    cascades: &[CMat<T>],
    receivers: &ReceiverBank<T>,
    weights: &[T],
    k: usize,
) -> QuadraticForm<T> {
    let n = ch.elements();
    let v = receivers.get(k);
    let varpi = weights[k];
    let qk = ch.tx_power[k];
    let mut t_mat = CMat::zeros(n, n);
    let mut t_vec = CVec::zeros(n);
    let mut c = varpi.ln() - varpi * qk + T::one() + qk.ln() - ch.noise_power * varpi * norm_sqr(v);
    for j in 0..ch.users() {
        let qj = ch.tx_power[j];
        let fv = cascades[j].adjoint() * v;
        t_mat += &fv * fv.adjoint() * Complex::from(qj);
        let vd = inner(v, &ch.user_to_ap[j]);
        let coeff = if j == k { (vd - Complex::from(T::one())) * qk } else { vd * qj };
        t_vec += &fv * coeff;
        c -= varpi * qj * vd.norm_sqr();
    }
    c += lit::<T>(2.0) * varpi * qk * inner(&ch.user_to_ap[k], v).re;
    let s = Complex::from(-varpi);
    QuadraticForm::new(t_mat * s, t_vec * s, c)
}

/// Phase subproblem: maximize `Σ λ_k μ_k R̃_k(φ)` subject to
/// `R̃_k(φ) ≥ r_k` and the unit disks.
pub fn build_p12<T: Real>(
    ch: &ChannelSet<T>,
    receivers: &ReceiverBank<T>,
    weights: &[T],
    lambda: &[T],
    mu: &[T],
    floors: &[T],
) -> Result<QcqpProblem<T>> {
    ch.validate()?;
    let (m, k_users, n) = (ch.antennas(), ch.users(), ch.elements());
    for (name, len) in [("weights", weights.len()), ("λ", lambda.len()), ("μ", mu.len()), ("floors", floors.len())] {
        if len != k_users {
            return Err(Error::Dimension(format!("{len} {name} for {k_users} users")));
        }
    }
    if receivers.len() != k_users || receivers.0.iter().any(|v| v.len() != m) {
        return Err(Error::Dimension(format!(
            "receiver bank does not match {k_users} users with {m} antennas"
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > T::zero())) {
        return Err(Error::Domain(format!("surrogate weight {w} must be positive")));
    }
    let cascades: Vec<CMat<T>> = (0..k_users).map(|j| ch.cascade(j)).collect();
    let forms: Vec<QuadraticForm<T>> = (0..k_users)
        .map(|k| surrogate_form_with(ch, &cascades, receivers, weights, k))
        .collect();
    let mut total = QuadraticForm::zeros(n);
    for (k, f) in forms.iter().enumerate() {
        let s = lambda[k] * mu[k];
        total.matrix += &f.matrix * Complex::from(s);
        total.linear += &f.linear * Complex::from(s);
        total.constant += f.constant * s;
    }
    let mut prob = QcqpProblem::maximize(total);
    for (f, r) in forms.into_iter().zip(floors) {
        prob = prob.subject_to(f, Bound::AtLeast(*r));
    }
    Ok(prob)
}

/// Residuals `Λ_k = λ_k R̃_k − 1` and `Γ_k = μ_k R̃_k − A_k`.
pub fn newton_residuals<T: Real>(lambda: &[T], mu: &[T], surrogate: &[T], a: &[T]) -> (Vec<T>, Vec<T>) {
    let big_lambda = lambda.iter().zip(surrogate).map(|(l, r)| *l * *r - T::one()).collect();
    let big_gamma = mu.iter().zip(surrogate).zip(a).map(|((m, r), a)| *m * *r - *a).collect();
    (big_lambda, big_gamma)
}

fn squared_sum<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().chain(b).fold(T::zero(), |acc, v| acc + *v * *v)
}

/// Outcome of one damped Newton update of the multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonUpdate<T: Real> {
    pub lambda: Vec<T>,
    pub mu: Vec<T>,
    /// Accepted backtracking exponent `i`.
    pub backtracks: usize,
    /// Summed squared residuals at the old multipliers.
    pub delta_before: T,
    /// Summed squared residuals at the accepted multipliers.
    pub delta_after: T,
}

/// Multipliers `λ − s Λ / R̃` and `μ − s Γ / R̃`.
pub fn newton_candidate<T: Real>(lambda: &[T], mu: &[T], surrogate: &[T], a: &[T], step: T) -> (Vec<T>, Vec<T>) {
    let (l0, g0) = newton_residuals(lambda, mu, surrogate, a);
    let lam = lambda.iter().zip(&l0).zip(surrogate).map(|((l, r), s)| *l - step * *r / *s).collect();
    let mu = mu.iter().zip(&g0).zip(surrogate).map(|((m, r), s)| *m - step * *r / *s).collect();
    (lam, mu)
}

/// Damped Newton step on `(λ, μ)` for fixed surrogate rates, taking the
/// smallest `i` with
/// `Σ Λ(λ_i)² + Σ Γ(μ_i)² ≤ (1 − ξ^i ε)² (Σ Λ(λ)² + Σ Γ(μ)²)`.
pub fn newton_step<T: Real>(
    lambda: &[T],
    mu: &[T],
    surrogate: &[T],
    a: &[T],
    xi: T,
    epsilon: T,
    max_backtrack: usize,
) -> Result<NewtonUpdate<T>> {
    if !(xi > T::zero() && xi < T::one()) {
        return Err(Error::Domain(format!("ξ = {xi} must lie in (0, 1)")));
    }
    if !(epsilon > T::zero()) {
        return Err(Error::Domain(format!("ε = {epsilon} must be positive")));
    }
    if let Some(r) = surrogate.iter().find(|r| !(**r > T::zero())) {
        return Err(Error::Domain(format!("surrogate rate {r} must be positive")));
    }
    let (l0, g0) = newton_residuals(lambda, mu, surrogate, a);
    let before = squared_sum(&l0, &g0);
    let mut step = T::one();
    for i in 0..=max_backtrack {
        let (lam, mu_i) = newton_candidate(lambda, mu, surrogate, a, step);
        let (li, gi) = newton_residuals(&lam, &mu_i, surrogate, a);
        let after = squared_sum(&li, &gi);
        let factor = T::one() - step * epsilon;
        if after <= factor * factor * before {
            return Ok(NewtonUpdate {
                lambda: lam,
                mu: mu_i,
                backtracks: i,
                delta_before: before,
                delta_after: after,
            });
        }
        step *= xi;
    }
    Err(Error::Backtrack { max_backtrack })
}

/// Summary of one inner block-coordinate loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerReport<T: Real> {
    /// Phase subproblems solved.
    pub iterations: usize,
    /// `Σ λ_k μ_k R̃_k` after each cycle is non-decreasing; its last value.
    pub objective: T,
    pub converged: bool,
}

fn weighted_surrogate<T: Real>(state: &SolverState<T>, surrogate: &[T]) -> T {
    state
        .lambda
        .iter()
        .zip(&state.mu)
        .zip(surrogate)
        .fold(T::zero(), |acc, ((l, m), r)| acc + *l * *m * *r)
}

fn refresh<T: Real>(ch: &ChannelSet<T>, state: &mut SolverState<T>) -> Result<Vec<T>> {
    state.weights = update_weights(ch, &state.phi)?;
    state.receivers = update_receivers(ch, &state.phi)?;
    (0..ch.users())
        .map(|k| rate_surrogate(ch, &state.phi, state.receivers.get(k), state.weights[k], k))
        .collect()
}

/// Inner loop for fixed `(λ, μ)`: refresh `ϖ` and `V` at the current `φ`,
/// then re-solve the phase subproblem from it, until `Σ λ_k μ_k R̃_k`
/// changes by less than `opts.inner_tol` relatively. Ends with a refresh,
/// so the surrogate is tight at the returned `φ`.
pub fn inner_bcd<T: Real>(
    ch: &ChannelSet<T>,
    state: &mut SolverState<T>,
    floors: &[T],
    opts: &SumRatioOptions<T>,
) -> Result<InnerReport<T>> {
    let mut surrogate = refresh(ch, state)?;
    let mut value = weighted_surrogate(state, &surrogate);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_inner {
        let prob = build_p12(ch, &state.receivers, &state.weights, &state.lambda, &state.mu, floors)?;
        let sol = qcqp::solve(&prob, &opts.qcqp, Some(&state.phi))?;
        iterations += 1;
        match sol.status {
            Status::InfeasibleDetected => {
                return Err(Error::Infeasible("phase subproblem lost its feasible warm start".into()));
            }
            Status::MaxIter if sol.max_violation() > opts.qcqp.feas_tol || sol.objective < value => {
                converged = true;
                break;
            }
            _ => {}
        }
        if sol.objective < value {
            // The warm start attains `value`; a lower optimum is solver noise.
            converged = true;
            break;
        }
        state.phi = sol.phi;
        surrogate = refresh(ch, state)?;
        let next = weighted_surrogate(state, &surrogate);
        let settled = abs(next - value) <= opts.inner_tol * abs(value);
        value = next;
        if settled {
            converged = true;
            break;
        }
    }
    Ok(InnerReport {
        iterations,
        objective: value,
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizationStatus {
    /// Residuals fell below `ρ`.
    Converged,
    /// `max_outer` reached first.
    MaxIter,
    /// No backtracking step passed the residual decrease test.
    LineSearchFailed,
}

/// Per-outer-iteration diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterRecord<T: Real> {
    pub t: usize,
    /// `Σ A_k / R_k` at the iterate, with true rates.
    pub objective: T,
    /// Summed squared residuals of the accepted multipliers at their rates.
    pub delta: T,
    /// The same quantity one iteration earlier.
    pub previous_delta: T,
    /// Accepted backtracking exponent `i`.
    pub backtracks: usize,
    /// `min_k (R_k − r_k)`.
    pub min_rate_slack: T,
    /// Phase subproblems solved over all trial steps of this iteration.
    pub inner_iterations: usize,
    pub rates: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult<T: Real> {
    /// Best floor-satisfying iterate, never worse than the start.
    pub phi: PhaseVector<T>,
    /// True rates at `phi`.
    pub rates: Vec<T>,
    /// `Σ A_k / R_k` at `phi`.
    pub objective: T,
    /// Server earning `Σ (C_k − A_k / R_k)` at `phi`.
    pub earning: T,
    pub start_phi: PhaseVector<T>,
    pub start_objective: T,
    /// `Σ A_k / R_k` at the start and after each outer iteration.
    pub objective_trace: Vec<T>,
    /// Summed squared residuals after the first inner loop and after each
    /// accepted step.
    pub delta_trace: Vec<T>,
    pub records: Vec<OuterRecord<T>>,
    /// `max_k |λ_k R̃_k − 1|` and `max_k |μ_k R̃_k − A_k| / (1 + A_k)` at
    /// termination.
    pub kkt_lambda: T,
    pub kkt_mu: T,
    pub status: OptimizationStatus,
    pub state: SolverState<T>,
}

fn check_economy<T: Real>(ch: &ChannelSet<T>, econ: &OffloadEconomy<T>) -> Result<()> {
    ch.validate()?;
    if econ.users() != ch.users() {
        return Err(Error::Dimension(format!(
            "economy for {} users, channels for {}",
            econ.users(),
            ch.users()
        )));
    }
    Ok(())
}

/// Runs the multiplier iteration from a configuration that meets the floors.
pub fn optimize_from<T: Real>(
    ch: &ChannelSet<T>,
    econ: &OffloadEconomy<T>,
    start: &PhaseVector<T>,
    opts: &SumRatioOptions<T>,
) -> Result<OptimizationResult<T>> {
    check_economy(ch, econ)?;
    let floors = &econ.floors;
    let a = &econ.transmit_weight;
    let start_rates = LinkState::new(ch, start)?.rates()?;
    if let Some(k) = (0..ch.users()).find(|&k| !(start_rates[k] >= floors[k] - opts.rate_tol)) {
        return Err(Error::Infeasible(format!(
            "start gives user {k} rate {} below floor {}",
            start_rates[k], floors[k]
        )));
    }
    if let Some(k) = (0..ch.users()).find(|&k| !(start_rates[k] > T::zero())) {
        return Err(Error::Domain(format!("start gives user {k} zero rate")));
    }
    let start_objective = transmit_cost(econ, &start_rates)?;

    let mut state = SolverState {
        phi: start.clone(),
        receivers: update_receivers(ch, start)?,
        weights: update_weights(ch, start)?,
        lambda: start_rates.iter().map(|r| T::one() / *r).collect(),
        mu: start_rates.iter().zip(a).map(|(r, a)| *a / *r).collect(),
        t: 0,
    };
    let inner = inner_bcd(ch, &mut state, floors, opts).map_err(|e| e.at(0))?;
    let mut rates = LinkState::new(ch, &state.phi)?.rates()?;
    let (l0, g0) = newton_residuals(&state.lambda, &state.mu, &rates, a);
    let mut delta = squared_sum(&l0, &g0);

    let mut best = (start.clone(), start_rates.clone(), start_objective);
    let mut objective_trace = vec![start_objective];
    let mut delta_trace = vec![delta];
    let mut records = Vec::new();
    let mut status = OptimizationStatus::MaxIter;
    let consider = |phi: &PhaseVector<T>, rates: &[T], best: &mut (PhaseVector<T>, Vec<T>, T)| -> Result<(T, T)> {
        let objective = transmit_cost(econ, rates)?;
        let slack = rates
            .iter()
            .zip(floors)
            .fold(infinity::<T>(), |m, (r, f)| if *r - *f < m { *r - *f } else { m });
        if slack >= -opts.rate_tol && objective < best.2 {
            *best = (phi.clone(), rates.to_vec(), objective);
        }
        Ok((objective, slack))
    };
    let (objective, min_rate_slack) = consider(&state.phi, &rates, &mut best)?;
    objective_trace.push(objective);
    records.push(OuterRecord {
        t: 0,
        objective,
        delta,
        previous_delta: delta,
        backtracks: 0,
        min_rate_slack,
        inner_iterations: inner.iterations,
        rates: rates.clone(),
    });

    while delta >= opts.rho {
        if state.t >= opts.max_outer {
            break;
        }
        state.t += 1;
        let t = state.t;
        // Each trial step re-solves the inner problem for its multipliers
        // and is judged by the residuals at the re-optimized rates.
        let mut step = T::one();
        let mut accepted = None;
        let mut inner_iterations = 0;
        for i in 0..=opts.max_backtrack {
            let (lambda, mu) = newton_candidate(&state.lambda, &state.mu, &rates, a, step);
            let mut trial = SolverState {
                lambda,
                mu,
                ..state.clone()
            };
            let rep = inner_bcd(ch, &mut trial, floors, opts).map_err(|e| e.at(t))?;
            inner_iterations += rep.iterations;
            let trial_rates = LinkState::new(ch, &trial.phi)?.rates()?;
            let (li, gi) = newton_residuals(&trial.lambda, &trial.mu, &trial_rates, a);
            let trial_delta = squared_sum(&li, &gi);
            let factor = T::one() - step * opts.epsilon;
            if trial_delta <= factor * factor * delta {
                accepted = Some((trial, trial_rates, trial_delta, i));
                break;
            }
            step *= opts.xi;
        }
        let Some((trial, trial_rates, trial_delta, backtracks)) = accepted else {
            status = OptimizationStatus::LineSearchFailed;
            break;
        };
        state = trial;
        rates = trial_rates;
        let previous_delta = delta;
        delta = trial_delta;
        let (objective, min_rate_slack) = consider(&state.phi, &rates, &mut best)?;
        objective_trace.push(objective);
        delta_trace.push(delta);
        records.push(OuterRecord {
            t,
            objective,
            delta,
            previous_delta,
            backtracks,
            min_rate_slack,
            inner_iterations,
            rates: rates.clone(),
        });
    }
    if delta < opts.rho {
        status = OptimizationStatus::Converged;
    }
    let (lr, gr) = newton_residuals(&state.lambda, &state.mu, &rates, a);
    let kkt = (
        lr.iter().fold(T::zero(), |m, v| maxr(m, abs(*v))),
        gr.iter().zip(a).fold(T::zero(), |m, (v, a)| maxr(m, abs(*v) / (T::one() + *a))),
    );

    let (phi, rates, objective) = best;
    let earning = server_earning_p2(econ, &rates)?;
    Ok(OptimizationResult {
        phi,
        rates,
        objective,
        earning,
        start_phi: start.clone(),
        start_objective,
        objective_trace,
        delta_trace,
        records,
        kkt_lambda: kkt.0,
        kkt_mu: kkt.1,
        status,
        state,
    })
}

/// Finds a floor-satisfying start with the multi-start feasibility check,
/// then runs [`optimize_from`].
pub fn optimize<T: Real, R: rand::Rng + ?Sized>(
    ch: &ChannelSet<T>,
    econ: &OffloadEconomy<T>,
    opts: &SumRatioOptions<T>,
    rng: &mut R,
) -> Result<OptimizationResult<T>> {
    check_economy(ch, econ)?;
    let feas = feasibility_check(ch, &econ.floors, &opts.feasibility, rng)?;
    let start = feas.phi.ok_or(Error::NoFeasibleStart { restarts: feas.starts })?;
    optimize_from(ch, econ, &start, opts)
}
