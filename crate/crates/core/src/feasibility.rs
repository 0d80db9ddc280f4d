//! Block-coordinate feasibility check for per-user rate floors.
//!
//! Alternates MMSE receivers with the phase subproblem
//! `min α  s.t.  e^{r_k} ε_k(φ, w_k) ≤ α,  |φ_n| ≤ 1`
//! until `α ≤ 1`, which certifies every floor, or until `α` stalls.

use nalgebra::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chanmodel::{generate_channels, ChannelSet, SystemGeometry};
use crate::error::{Error, Result};
use crate::qcqp::{self, Bound, QcqpOptions, QcqpProblem, QuadraticForm};
use crate::scalar::{inner, lit, maxr, norm_sqr, CMat, CVec, Real};
use crate::signal::{rates, LinkState, PhaseVector, ReceiverBank};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityOptions<T: Real> {
    /// Relative decrease of `α` below which the iteration has converged.
    pub conv_tol: T,
    pub max_iter: usize,
    /// Independent random starts tried before declaring infeasibility.
    pub restarts: usize,
    /// Slack allowed when re-verifying the floors with the true rates.
    pub rate_tol: T,
    pub qcqp: QcqpOptions<T>,
}

impl<T: Real> Default for FeasibilityOptions<T> {
    fn default() -> Self {
        FeasibilityOptions {
            conv_tol: lit(1e-5),
            max_iter: 200,
            restarts: 5,
            rate_tol: lit(1e-6),
            qcqp: QcqpOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityResult<T: Real> {
    pub feasible: bool,
    /// The certified configuration; present iff `feasible`.
    pub phi: Option<PhaseVector<T>>,
    /// `α` before the first subproblem, then after each one.
    pub alpha_trace: Vec<T>,
    /// True per-user rates at each iterate of `alpha_trace`.
    pub rate_trace: Vec<Vec<T>>,
    /// Subproblems solved in the reported run.
    pub iterations: usize,
    /// MMSE receivers at the last iterate.
    pub receivers: ReceiverBank<T>,
    /// Last iterate of the reported run, feasible or not.
    pub last_phi: PhaseVector<T>,
    /// Random starts consumed, including the reported one.
    pub starts: usize,
}

impl<T: Real> FeasibilityResult<T> {
    pub fn final_alpha(&self) -> T {
        *self.alpha_trace.last().expect("trace holds the initial value")
    }
}

fn check_floors<T: Real>(ch: &ChannelSet<T>, floors: &[T]) -> Result<()> {
    ch.validate()?;
    if floors.len() != ch.users() {
        return Err(Error::Dimension(format!(
            "{} rate floors for {} users",
            floors.len(),
            ch.users()
        )));
    }
    if let Some(r) = floors.iter().find(|r| !(**r >= T::zero()) || !r.is_finite()) {
        return Err(Error::Domain(format!("rate floor {r} must be finite and non-negative")));
    }
    Ok(())
}

/// Builds the epigraph phase subproblem for fixed receivers.
///
/// Constraint `k` evaluates to `e^{r_k} · mse(φ, k, w_k)`.
pub fn build_p8<T: Real>(ch: &ChannelSet<T>, receivers: &ReceiverBank<T>, floors: &[T]) -> Result<QcqpProblem<T>> {
    check_floors(ch, floors)?;
    let (m, k_users, n) = (ch.antennas(), ch.users(), ch.elements());
    if receivers.len() != k_users || receivers.0.iter().any(|w| w.len() != m) {
        return Err(Error::Dimension(format!(
            "receiver bank does not match {k_users} users with {m} antennas"
        )));
    }
    if !receivers.is_finite() {
        return Err(Error::Domain("receivers must be finite".into()));
    }
    let cascades: Vec<CMat<T>> = (0..k_users).map(|j| ch.cascade(j)).collect();
    let mut prob = QcqpProblem::epigraph(n);
    for k in 0..k_users {
        let w = receivers.get(k);
        let scale = floors[k].exp();
        let sq = ch.tx_power[k].sqrt();
        let mut q_mat = CMat::zeros(n, n);
        let mut q_vec = CVec::zeros(n);
        let mut d = ch.noise_power * norm_sqr(w) + T::one();
        for j in 0..k_users {
            let qj = ch.tx_power[j];
            let fw = cascades[j].adjoint() * w;
            q_mat += &fw * fw.adjoint() * Complex::from(qj);
            let wd = inner(w, &ch.user_to_ap[j]);
            q_vec += &fw * (wd * qj);
            d += qj * wd.norm_sqr();
        }
        q_vec -= cascades[k].adjoint() * w * Complex::from(sq);
        d -= lit::<T>(2.0) * sq * inner(w, &ch.user_to_ap[k]).re;
        let s = Complex::from(scale);
        prob = prob.subject_to(QuadraticForm::new(q_mat * s, q_vec * s, d * scale), Bound::Epigraph);
    }
    Ok(prob)
}

/// `max_k e^{r_k} ε_k^*(φ)` with the MMSE receivers.
fn scaled_mse<T: Real>(link: &LinkState<'_, T>, floors: &[T]) -> Result<T> {
    let mut alpha = T::zero();
    for (k, r) in floors.iter().enumerate() {
        alpha = maxr(alpha, r.exp() * link.min_mse(k)?);
    }
    Ok(alpha)
}

fn meets_floors<T: Real>(rates: &[T], floors: &[T], tol: T) -> bool {
    rates.iter().zip(floors).all(|(r, f)| *r >= *f - tol)
}

/// Runs the check from a given starting configuration.
pub fn feasibility_check_from<T: Real>(
    ch: &ChannelSet<T>,
    floors: &[T],
    start: &PhaseVector<T>,
    opts: &FeasibilityOptions<T>,
) -> Result<FeasibilityResult<T>> {
    check_floors(ch, floors)?;
    let mut phi = start.clone();
    let link = LinkState::new(ch, &phi)?;
    let mut receivers = link.mmse_receivers()?;
    let mut alpha = scaled_mse(&link, floors)?;
    let mut current_rates = link.rates()?;
    let mut alpha_trace = vec![alpha];
    let mut rate_trace = vec![current_rates.clone()];
    let mut feasible = alpha <= T::one() && meets_floors(&current_rates, floors, opts.rate_tol);
    let mut iterations = 0;

    while !feasible && iterations < opts.max_iter {
        let prob = build_p8(ch, &receivers, floors).map_err(|e| e.at(iterations))?;
        let sol = qcqp::solve(&prob, &opts.qcqp, Some(&phi)).map_err(|e| e.at(iterations))?;
        iterations += 1;
        let next = sol.objective;
        // The previous iterate is feasible for the subproblem with value
        // `alpha`; an increase can only come from solver inaccuracy.
        if !(next <= alpha) {
            break;
        }
        phi = sol.phi;
        let link = LinkState::new(ch, &phi)?;
        receivers = link.mmse_receivers()?;
        current_rates = link.rates()?;
        let decrease = (alpha - next) / alpha;
        alpha = next;
        alpha_trace.push(alpha);
        rate_trace.push(current_rates.clone());
        if alpha <= T::one() && meets_floors(&current_rates, floors, opts.rate_tol) {
            feasible = true;
        } else if decrease < opts.conv_tol {
            break;
        }
    }

    Ok(FeasibilityResult {
        feasible,
        phi: feasible.then(|| phi.clone()),
        alpha_trace,
        rate_trace,
        iterations,
        receivers,
        last_phi: phi,
        starts: 1,
    })
}

/// Multi-start check: random starts drawn from `rng` until one certifies
/// the floors or `opts.restarts` have failed. An infeasible verdict reports
/// the run with the smallest final `α`.
pub fn feasibility_check<T: Real, R: rand::Rng + ?Sized>(
    ch: &ChannelSet<T>,
    floors: &[T],
    opts: &FeasibilityOptions<T>,
    rng: &mut R,
) -> Result<FeasibilityResult<T>> {
    let restarts = opts.restarts.max(1);
    let mut best: Option<FeasibilityResult<T>> = None;
    for start in 0..restarts {
        let phi0 = PhaseVector::random(ch.elements(), rng);
        let mut run = feasibility_check_from(ch, floors, &phi0, opts)?;
        run.starts = start + 1;
        if run.feasible {
            return Ok(run);
        }
        if best.as_ref().is_none_or(|b| run.final_alpha() < b.final_alpha()) {
            best = Some(run);
        }
    }
    let mut best = best.expect("at least one start");
    best.starts = restarts;
    Ok(best)
}

/// How the surface is used in a feasibility trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeasibilityMode {
    /// Direct links only.
    None,
    /// Best of the random starting draws, not optimized.
    Random,
    /// The BCD check from the same random draws.
    Optimized,
}

impl FeasibilityMode {
    pub const ALL: [FeasibilityMode; 3] = [FeasibilityMode::None, FeasibilityMode::Random, FeasibilityMode::Optimized];

    pub fn name(self) -> &'static str {
        match self {
            FeasibilityMode::None => "none",
            FeasibilityMode::Random => "random",
            FeasibilityMode::Optimized => "optimized",
        }
    }
}

impl std::str::FromStr for FeasibilityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(FeasibilityMode::None),
            "random" => Ok(FeasibilityMode::Random),
            "optimized" => Ok(FeasibilityMode::Optimized),
            other => Err(Error::Domain(format!("unknown feasibility mode `{other}`"))),
        }
    }
}

/// Seed of the channel realization for `trial` of a run seeded with `seed`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_add(trial as u64)
}

fn start_rng(channel_seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(channel_seed);
    rng.set_stream(1);
    rng
}

/// Whether the floors hold on one channel realization in the given mode.
///
/// Random and optimized modes draw their starting configurations from the
/// same stream, so an optimized trial succeeds whenever the random one does.
pub fn feasibility_trial<T: Real>(
    ch: &ChannelSet<T>,
    floors: &[T],
    channel_seed: u64,
    mode: FeasibilityMode,
    opts: &FeasibilityOptions<T>,
) -> Result<bool> {
    check_floors(ch, floors)?;
    match mode {
        FeasibilityMode::None => Ok(meets_floors(&rates(&ch.without_irs(), &PhaseVector::zeros(0))?, floors, T::zero())),
        FeasibilityMode::Random => {
            let mut rng = start_rng(channel_seed);
            for _ in 0..opts.restarts.max(1) {
                let phi = PhaseVector::random(ch.elements(), &mut rng);
                if meets_floors(&rates(ch, &phi)?, floors, T::zero()) {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        FeasibilityMode::Optimized => {
            let mut rng = start_rng(channel_seed);
            Ok(feasibility_check(ch, floors, opts, &mut rng)?.feasible)
        }
    }
}

/// Monte-Carlo probability that a common floor `r` is met, over `trials`
/// realizations of `geometry` seeded from `seed`.
pub fn feasibility_probability<T: Real>(
    geometry: &SystemGeometry,
    floor: T,
    trials: usize,
    seed: u64,
    mode: FeasibilityMode,
    opts: &FeasibilityOptions<T>,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    let floors = vec![floor; geometry.users()];
    let mut hits = 0usize;
    for trial in 0..trials {
        let s = trial_seed(seed, trial);
        let ch = generate_channels::<T>(geometry, s)?;
        if feasibility_trial(&ch, &floors, s, mode, opts)? {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}
