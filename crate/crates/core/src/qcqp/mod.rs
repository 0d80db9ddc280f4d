//! Convex complex QCQPs over per-coordinate disks.
//!
//! A problem is stated over `φ ∈ ℂ^N` with Hermitian quadratic forms
//! `φ^H Q φ + 2 Re{l^H φ} + c`, optional epigraph objective (`min α` with
//! `form_k ≤ α`), and `|φ_n| ≤ R`. It is solved with a log-barrier
//! interior-point method on the exact real embedding
//! `z = [Re φ; Im φ]`, `Q = A + iB ↦ [[A, −B], [B, A]]`, `l ↦ [Re l; Im l]`.
//! A phase-I barrier with one slack variable supplies a strictly feasible
//! start when the given one is not.

mod barrier;

use nalgebra::{Cholesky, Complex, DVector};

use crate::error::{Error, Result};
use crate::scalar::{abs, cabs, infinity, inner, lit, maxr, minr, CMat, CVec, Real};
use crate::signal::PhaseVector;
use barrier::{BarrierProblem, BarrierSettings, Quad};

/// `φ^H Q φ + 2 Re{l^H φ} + c`; only the Hermitian part of `Q` matters.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm<T: Real> {
    pub matrix: CMat<T>,
    pub linear: CVec<T>,
    pub constant: T,
}

impl<T: Real> QuadraticForm<T> {
    pub fn new(matrix: CMat<T>, linear: CVec<T>, constant: T) -> Self {
        QuadraticForm {
            matrix,
            linear,
            constant,
        }
    }

    pub fn zeros(n: usize) -> Self {
        QuadraticForm::new(CMat::zeros(n, n), CVec::zeros(n), T::zero())
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn eval(&self, phi: &CVec<T>) -> T {
        let quad = inner(phi, &(&self.matrix * phi)).re;
        quad + lit::<T>(2.0) * inner(&self.linear, phi).re + self.constant
    }

    pub fn scaled(&self, s: T) -> Self {
        let z = Complex::from(s);
        QuadraticForm::new(&self.matrix * z, &self.linear * z, self.constant * s)
    }

    fn negated(&self) -> Self {
        self.scaled(-T::one())
    }

    /// Real embedding `(P, g, c)` with `eval(φ) = z^T P z + 2 g^T z + c`.
    fn embed(&self, dim: usize) -> Quad<T> {
        let n = self.dim();
        let mut q = Quad::zeros(dim);
        let half = lit::<T>(0.5);
        for i in 0..n {
            for j in 0..n {
                // Hermitian part (Q + Q^H) / 2.
                let h = (self.matrix[(i, j)] + self.matrix[(j, i)].conj()) * half;
                q.p[(i, j)] = h.re;
                q.p[(n + i, n + j)] = h.re;
                q.p[(i, n + j)] = -h.im;
                q.p[(n + i, j)] = h.im;
            }
            q.g[i] = self.linear[i].re;
            q.g[n + i] = self.linear[i].im;
        }
        q.c = self.constant;
        q
    }
}

/// Direction of a quadratic objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Objective<T: Real> {
    Quadratic { form: QuadraticForm<T>, sense: Sense },
    /// Minimize `α` subject to every [`Bound::Epigraph`] constraint.
    Epigraph,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound<T: Real> {
    AtMost(T),
    AtLeast(T),
    /// `form ≤ α`, with `α` the epigraph objective.
    Epigraph,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<T: Real> {
    pub form: QuadraticForm<T>,
    pub bound: Bound<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QcqpProblem<T: Real> {
    pub elements: usize,
    pub objective: Objective<T>,
    pub constraints: Vec<Constraint<T>>,
    /// Bound `R` on every `|φ_n|`.
    pub disk_radius: T,
}

impl<T: Real> QcqpProblem<T> {
    pub fn minimize(form: QuadraticForm<T>) -> Self {
        QcqpProblem {
            elements: form.dim(),
            objective: Objective::Quadratic {
                form,
                sense: Sense::Minimize,
            },
            constraints: Vec::new(),
            disk_radius: T::one(),
        }
    }

    pub fn maximize(form: QuadraticForm<T>) -> Self {
        QcqpProblem {
            elements: form.dim(),
            objective: Objective::Quadratic {
                form,
                sense: Sense::Maximize,
            },
            constraints: Vec::new(),
            disk_radius: T::one(),
        }
    }

    pub fn epigraph(elements: usize) -> Self {
        QcqpProblem {
            elements,
            objective: Objective::Epigraph,
            constraints: Vec::new(),
            disk_radius: T::one(),
        }
    }

    pub fn subject_to(mut self, form: QuadraticForm<T>, bound: Bound<T>) -> Self {
        self.constraints.push(Constraint { form, bound });
        self
    }

    pub fn is_epigraph(&self) -> bool {
        matches!(self.objective, Objective::Epigraph)
    }

    fn validate(&self) -> Result<()> {
        let n = self.elements;
        if !(self.disk_radius > T::zero()) {
            return Err(Error::Domain("disk radius must be positive".into()));
        }
        let check = |f: &QuadraticForm<T>, what: &str| -> Result<()> {
            if f.matrix.shape() != (n, n) || f.linear.len() != n {
                return Err(Error::Dimension(format!(
                    "{what}: form of size {}×{} / {} for {n} elements",
                    f.matrix.nrows(),
                    f.matrix.ncols(),
                    f.linear.len()
                )));
            }
            Ok(())
        };
        if let Objective::Quadratic { form, .. } = &self.objective {
            check(form, "objective")?;
        }
        for (i, c) in self.constraints.iter().enumerate() {
            check(&c.form, &format!("constraint {i}"))?;
            if matches!(c.bound, Bound::Epigraph) && !self.is_epigraph() {
                return Err(Error::Domain(format!(
                    "constraint {i} bounds α but the objective is not an epigraph"
                )));
            }
        }
        if self.is_epigraph() && !self.constraints.iter().any(|c| matches!(c.bound, Bound::Epigraph)) {
            return Err(Error::Domain("epigraph objective without epigraph constraints".into()));
        }
        Ok(())
    }

    /// The form as it must appear in `g(φ) ≤ 0` convex form: objective in
    /// minimize sense, constraints with the bound moved to the left.
    fn standard_forms(&self) -> (Option<QuadraticForm<T>>, Vec<QuadraticForm<T>>) {
        let obj = match &self.objective {
            Objective::Quadratic { form, sense } => Some(match sense {
                Sense::Minimize => form.clone(),
                Sense::Maximize => form.negated(),
            }),
            Objective::Epigraph => None,
        };
        let cons = self
            .constraints
            .iter()
            .map(|c| match c.bound {
                Bound::AtMost(b) => {
                    let mut f = c.form.clone();
                    f.constant -= b;
                    f
                }
                Bound::AtLeast(b) => {
                    let mut f = c.form.negated();
                    f.constant += b;
                    f
                }
                Bound::Epigraph => c.form.clone(),
            })
            .collect();
        (obj, cons)
    }
}

/// Eigenvalue range of a form's Hermitian matrix in its convex orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curvature<T: Real> {
    pub min_eigenvalue: T,
    pub max_eigenvalue: T,
    pub convex: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport<T: Real> {
    /// `None` for epigraph objectives.
    pub objective: Option<Curvature<T>>,
    pub constraints: Vec<Curvature<T>>,
}

impl<T: Real> ConvexityReport<T> {
    pub fn is_convex(&self) -> bool {
        self.objective.is_none_or(|c| c.convex) && self.constraints.iter().all(|c| c.convex)
    }

    fn first_failure(&self) -> Option<String> {
        if let Some(c) = self.objective.filter(|c| !c.convex) {
            return Some(format!("objective has eigenvalue {}", c.min_eigenvalue));
        }
        self.constraints
            .iter()
            .position(|c| !c.convex)
            .map(|i| format!("constraint {i} has eigenvalue {}", self.constraints[i].min_eigenvalue))
    }
}

fn curvature<T: Real>(form: &QuadraticForm<T>, tol: T) -> Curvature<T> {
    let n = form.dim();
    if n == 0 {
        return Curvature {
            min_eigenvalue: T::zero(),
            max_eigenvalue: T::zero(),
            convex: true,
        };
    }
    // Eigenvalues of the embedding are those of the Hermitian part, doubled.
    let eig = form.embed(2 * n).p.symmetric_eigenvalues();
    let lo = eig.iter().fold(eig[0], |a, b| minr(a, *b));
    let hi = eig.iter().fold(eig[0], |a, b| maxr(a, *b));
    let scale = maxr(abs(lo), abs(hi));
    Curvature {
        min_eigenvalue: lo,
        max_eigenvalue: hi,
        convex: lo >= -tol * scale,
    }
}

/// Eigenvalue certificate for the objective and every constraint.
pub fn check_convexity<T: Real>(prob: &QcqpProblem<T>, tol: T) -> ConvexityReport<T> {
    let (obj, cons) = prob.standard_forms();
    ConvexityReport {
        objective: obj.as_ref().map(|f| curvature(f, tol)),
        constraints: cons.iter().map(|f| curvature(f, tol)).collect(),
    }
}

/// Cheap PSD test: `P + tol‖P‖_F I` admits a Cholesky factor.
fn psd_by_cholesky<T: Real>(q: &Quad<T>, tol: T) -> bool {
    let dim = q.p.nrows();
    if dim == 0 {
        return true;
    }
    let norm = q.p.norm();
    if norm == T::zero() {
        return true;
    }
    let mut p = q.p.clone();
    let shift = tol * norm;
    for i in 0..dim {
        p[(i, i)] += shift;
    }
    Cholesky::new(p).is_some()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QcqpOptions<T: Real> {
    /// Target for the duality gap and stationarity residual.
    pub kkt_tol: T,
    /// Allowed constraint violation of a returned point.
    pub feas_tol: T,
    pub initial_t: T,
    pub t_factor: T,
    pub max_iter: usize,
    pub armijo: T,
    pub backtrack: T,
    /// Relative eigenvalue tolerance of the convexity guard.
    pub convexity_tol: T,
}

impl<T: Real> Default for QcqpOptions<T> {
    fn default() -> Self {
        QcqpOptions {
            kkt_tol: lit(1e-7),
            feas_tol: lit(1e-8),
            initial_t: T::one(),
            t_factor: lit(3.0),
            max_iter: 500,
            armijo: lit(0.01),
            backtrack: lit(0.5),
            convexity_tol: lit(1e-8),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    InfeasibleDetected,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QcqpSolution<T: Real> {
    pub phi: PhaseVector<T>,
    /// Objective in the problem's own sense; for epigraph problems the tight
    /// value `max_k form_k(φ)`.
    pub objective: T,
    /// Weak-duality bound: below the optimum for minimization, above for
    /// maximization. `None` when it could not be evaluated.
    pub dual_bound: Option<T>,
    /// Per constraint: distance to the bound, positive when satisfied.
    pub slacks: Vec<T>,
    /// `R − |φ_n|`.
    pub disk_slacks: Vec<T>,
    pub kkt_residual: T,
    /// Interior-point iterations over both phases.
    pub iterations: usize,
    pub status: Status,
    /// Largest constraint violation seen along the phase-II path.
    pub max_path_violation: T,
}

impl<T: Real> QcqpSolution<T> {
    pub fn max_violation(&self) -> T {
        self.slacks
            .iter()
            .chain(&self.disk_slacks)
            .fold(T::zero(), |a, s| maxr(a, -*s))
    }
}

fn embed_phi<T: Real>(phi: &CVec<T>, dim: usize) -> DVector<T> {
    let n = phi.len();
    let mut z = DVector::zeros(dim);
    for i in 0..n {
        z[i] = phi[i].re;
        z[n + i] = phi[i].im;
    }
    z
}

fn unembed<T: Real>(z: &DVector<T>, n: usize) -> CVec<T> {
    CVec::from_iterator(n, (0..n).map(|i| Complex::new(z[i], z[n + i])))
}

/// Solves `prob`, warm-starting from `start` when given.
///
/// Non-convex input is rejected before any iteration.
pub fn solve<T: Real>(
    prob: &QcqpProblem<T>,
    opts: &QcqpOptions<T>,
    start: Option<&PhaseVector<T>>,
) -> Result<QcqpSolution<T>> {
    prob.validate()?;
    let n = prob.elements;
    if let Some(s) = start {
        if s.len() != n {
            return Err(Error::Dimension(format!("start has {} entries for {n} elements", s.len())));
        }
    }
    let (obj_form, con_forms) = prob.standard_forms();
    let epi = prob.is_epigraph();
    let base = 2 * n;
    let dim = base + usize::from(epi);
    let aux = epi.then_some(base);

    let objective = match &obj_form {
        Some(f) => f.embed(dim),
        None => {
            let mut q = Quad::zeros(dim);
            q.g[base] = lit(0.5);
            q
        }
    };
    let aux_constraints: Vec<bool> = prob
        .constraints
        .iter()
        .map(|c| matches!(c.bound, Bound::Epigraph))
        .collect();
    let constraints: Vec<Quad<T>> = con_forms
        .iter()
        .zip(&aux_constraints)
        .map(|(f, &is_aux)| {
            let mut q = f.embed(dim);
            if is_aux {
                q.g[base] = lit(-0.5);
            }
            q
        })
        .collect();

    for (i, q) in std::iter::once(&objective).chain(&constraints).enumerate() {
        if !psd_by_cholesky(q, opts.convexity_tol) {
            let report = check_convexity(prob, opts.convexity_tol);
            let why = report
                .first_failure()
                .unwrap_or_else(|| format!("form {i} failed the PSD factorization test"));
            return Err(Error::NonConvex(why));
        }
    }

    let phase2 = BarrierProblem {
        objective,
        constraints,
        disks: n,
        radius: prob.disk_radius,
        aux,
        aux_constraints: aux_constraints.clone(),
    };

    let settings = BarrierSettings {
        gap_tol: opts.kkt_tol,
        initial_t: opts.initial_t,
        t_factor: opts.t_factor,
        max_iter: opts.max_iter,
        armijo: opts.armijo,
        backtrack: opts.backtrack,
        centrality: lit(1e-3),
        stop_below: None,
    };

    // Start strictly inside every disk.
    let mut z = DVector::zeros(dim);
    if let Some(s) = start {
        let limit = prob.disk_radius * (T::one() - lit(1e-7));
        let mut phi = s.as_vector().clone();
        for p in phi.iter_mut() {
            let r = cabs(*p);
            if r > limit {
                *p *= limit / r;
            }
        }
        z.rows_mut(0, base).copy_from(&embed_phi(&phi, base));
    }

    let epi_level = |z: &DVector<T>| -> T {
        phase2
            .constraints
            .iter()
            .zip(&aux_constraints)
            .filter(|(_, a)| **a)
            .map(|(q, _)| q.value(z))
            .fold(-infinity::<T>(), maxr)
    };

    let mut iterations = 0usize;
    let plain: Vec<usize> = (0..aux_constraints.len()).filter(|&i| !aux_constraints[i]).collect();

    // Phase I on the non-epigraph constraints, if the start is not interior.
    let worst = plain
        .iter()
        .map(|&i| phase2.constraints[i].value(&z))
        .fold(-infinity::<T>(), maxr);
    if !plain.is_empty() && !(worst < T::zero()) {
        let slack_idx = dim;
        let mut obj = Quad::zeros(dim + 1);
        obj.g[slack_idx] = lit(0.5);
        let cons: Vec<Quad<T>> = plain
            .iter()
            .map(|&i| {
                let src = &phase2.constraints[i];
                let mut q = Quad::zeros(dim + 1);
                q.p.view_mut((0, 0), (dim, dim)).copy_from(&src.p);
                q.g.rows_mut(0, dim).copy_from(&src.g);
                q.g[slack_idx] = lit(-0.5);
                q.c = src.c;
                q
            })
            .collect();
        let phase1 = BarrierProblem {
            objective: obj,
            constraints: cons,
            disks: n,
            radius: prob.disk_radius,
            aux: Some(slack_idx),
            aux_constraints: vec![true; plain.len()],
        };
        let mut z1 = DVector::zeros(dim + 1);
        z1.rows_mut(0, dim).copy_from(&z);
        z1[slack_idx] = worst + maxr(T::one(), abs(worst));
        let out = phase1.minimize(
            z1,
            &BarrierSettings {
                stop_below: Some(lit(-1e-6)),
                ..settings
            },
        );
        iterations += out.iterations;
        let s_star = out.z[slack_idx];
        z = out.z.rows(0, dim).into_owned();
        if !(s_star < T::zero()) {
            let certified = phase1
                .dual_bound(&out.duals, &out.disk_duals)
                .is_some_and(|d| d > T::zero());
            let status = if certified || (out.converged && s_star > opts.feas_tol) {
                Status::InfeasibleDetected
            } else {
                Status::MaxIter
            };
            if epi {
                z[base] = epi_level(&z);
            }
            return Ok(finish(prob, z, None, opts, iterations, status, T::zero()));
        }
    }

    if epi {
        let level = epi_level(&z);
        z[base] = level + lit::<T>(0.1) * (T::one() + abs(level));
    }
    debug_assert!(phase2.strictly_feasible(&z));

    let out = phase2.minimize(z, &settings);
    iterations += out.iterations;
    let kkt = maxr(out.stationarity, out.gap);
    let status = if out.converged && kkt <= opts.kkt_tol {
        Status::Optimal
    } else {
        Status::MaxIter
    };
    let dual = phase2.dual_bound(&out.duals, &out.disk_duals);
    Ok(finish(prob, out.z, dual.map(|d| (d, kkt)), opts, iterations, status, T::zero()))
}

#[allow(clippy::too_many_arguments)]
fn finish<T: Real>(
    prob: &QcqpProblem<T>,
    z: DVector<T>,
    dual_and_kkt: Option<(T, T)>,
    opts: &QcqpOptions<T>,
    iterations: usize,
    mut status: Status,
    max_path_violation: T,
) -> QcqpSolution<T> {
    let n = prob.elements;
    let phi = unembed(&z, n);
    let values: Vec<T> = prob.constraints.iter().map(|c| c.form.eval(&phi)).collect();
    let alpha = values
        .iter()
        .zip(&prob.constraints)
        .filter(|(_, c)| matches!(c.bound, Bound::Epigraph))
        .map(|(v, _)| *v)
        .fold(-infinity::<T>(), maxr);
    let slacks: Vec<T> = values
        .iter()
        .zip(&prob.constraints)
        .map(|(v, c)| match c.bound {
            Bound::AtMost(b) => b - *v,
            Bound::AtLeast(b) => *v - b,
            Bound::Epigraph => alpha - *v,
        })
        .collect();
    let disk_slacks: Vec<T> = phi.iter().map(|p| prob.disk_radius - cabs(*p)).collect();
    let (objective, dual_bound) = match &prob.objective {
        Objective::Quadratic { form, sense } => {
            let v = form.eval(&phi);
            let d = dual_and_kkt.map(|(d, _)| match sense {
                Sense::Minimize => d,
                Sense::Maximize => -d,
            });
            (v, d)
        }
        Objective::Epigraph => (alpha, dual_and_kkt.map(|(d, _)| d)),
    };
    let kkt_residual = dual_and_kkt.map_or(infinity::<T>(), |(_, k)| k);
    let sol = QcqpSolution {
        phi: PhaseVector::new_unchecked(phi),
        objective,
        dual_bound,
        slacks,
        disk_slacks,
        kkt_residual,
        iterations,
        status,
        max_path_violation,
    };
    if status == Status::Optimal && sol.max_violation() > opts.feas_tol {
        status = Status::MaxIter;
        return QcqpSolution { status, ..sol };
    }
    sol
}

#[cfg(test)]
mod tests;
