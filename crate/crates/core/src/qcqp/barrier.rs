//! Primal-dual log-barrier interior-point engine on real variables.
//!
//! Minimizes `f0(z)` subject to `f_i(z) ≤ 0` (convex quadratics) and the
//! disk constraints `z_n² + z_{N+n}² ≤ R²` on the first `2N` coordinates.
//! Each iteration takes one Newton step on the centrality conditions
//! `−λ_i f_i = 1/t` with `t = μ m / η`, `η = −Σ λ_i f_i` the surrogate gap.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::scalar::{abs, infinity, lit, maxr, minr, Real};

/// `z^T P z + 2 g^T z + c`.
#[derive(Debug, Clone)]
pub(crate) struct Quad<T: Real> {
    pub p: DMatrix<T>,
    pub g: DVector<T>,
    pub c: T,
}

impl<T: Real> Quad<T> {
    pub fn zeros(dim: usize) -> Self {
        Quad {
            p: DMatrix::zeros(dim, dim),
            g: DVector::zeros(dim),
            c: T::zero(),
        }
    }

    pub fn value(&self, z: &DVector<T>) -> T {
        let pz = &self.p * z;
        z.dot(&pz) + lit::<T>(2.0) * self.g.dot(z) + self.c
    }

    pub fn gradient(&self, z: &DVector<T>) -> DVector<T> {
        (&self.p * z + &self.g) * lit::<T>(2.0)
    }

    pub fn is_linear(&self) -> bool {
        self.p.iter().all(|v| *v == T::zero())
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BarrierProblem<T: Real> {
    pub objective: Quad<T>,
    pub constraints: Vec<Quad<T>>,
    /// Number of disk pairs `(n, N + n)`; zero when there is no surface.
    pub disks: usize,
    pub radius: T,
    /// Index of an epigraph variable entering the objective with a positive
    /// coefficient and each flagged constraint with a negative one.
    pub aux: Option<usize>,
    pub aux_constraints: Vec<bool>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BarrierSettings<T: Real> {
    /// Target for the surrogate gap and the dual residual.
    pub gap_tol: T,
    pub initial_t: T,
    pub t_factor: T,
    pub max_iter: usize,
    pub armijo: T,
    pub backtrack: T,
    /// Lower bound on each complementarity product relative to the mean.
    pub centrality: T,
    /// Return as soon as the objective drops below this value.
    pub stop_below: Option<T>,
}

#[derive(Debug, Clone)]
pub(crate) struct BarrierOutcome<T: Real> {
    pub z: DVector<T>,
    pub iterations: usize,
    pub converged: bool,
    /// Multipliers of the quadratic constraints.
    pub duals: Vec<T>,
    pub disk_duals: Vec<T>,
    /// `‖∇f0 + Σ λ_i ∇f_i‖_∞` at the returned point.
    pub stationarity: T,
    /// Surrogate duality gap `−Σ λ_i f_i`.
    pub gap: T,
}

impl<T: Real> BarrierProblem<T> {
    pub fn dim(&self) -> usize {
        self.objective.g.len()
    }

    fn count(&self) -> usize {
        self.constraints.len() + self.disks
    }

    /// Constraint values `f_i(z)`, quadratic constraints first, then disks.
    fn values(&self, z: &DVector<T>) -> Vec<T> {
        let n = self.disks;
        let r2 = self.radius * self.radius;
        self.constraints
            .iter()
            .map(|c| c.value(z))
            .chain((0..n).map(|i| z[i] * z[i] + z[n + i] * z[n + i] - r2))
            .collect()
    }

    pub fn strictly_feasible(&self, z: &DVector<T>) -> bool {
        self.values(z).iter().all(|v| *v < T::zero())
    }

    /// Adds `w ∇f_i(z)` to `out`.
    fn add_gradient(&self, i: usize, z: &DVector<T>, w: T, out: &mut DVector<T>) {
        let two = lit::<T>(2.0);
        match self.constraints.get(i) {
            Some(c) => out.axpy(w, &c.gradient(z), T::one()),
            None => {
                let j = i - self.constraints.len();
                let n = self.disks;
                out[j] += w * two * z[j];
                out[n + j] += w * two * z[n + j];
            }
        }
    }

    fn gradient_of(&self, i: usize, z: &DVector<T>) -> DVector<T> {
        let mut g = DVector::zeros(self.dim());
        self.add_gradient(i, z, T::one(), &mut g);
        g
    }

    /// `∇f0 + Σ λ_i ∇f_i`.
    fn dual_residual(&self, z: &DVector<T>, lam: &[T]) -> DVector<T> {
        let mut r = self.objective.gradient(z);
        for (i, l) in lam.iter().enumerate() {
            self.add_gradient(i, z, *l, &mut r);
        }
        r
    }

    fn residual_norm(&self, z: &DVector<T>, lam: &[T], f: &[T], t: T) -> T {
        let rd = self.dual_residual(z, lam);
        let inv_t = T::one() / t;
        let cent = lam
            .iter()
            .zip(f)
            .fold(T::zero(), |a, (l, v)| {
                let r = -*l * *v - inv_t;
                a + r * r
            });
        (rd.norm_squared() + cent).sqrt()
    }

    pub fn minimize(&self, z0: DVector<T>, cfg: &BarrierSettings<T>) -> BarrierOutcome<T> {
        let m = self.count();
        let mf = lit::<T>(m as f64);
        let dim = self.dim();
        let two = lit::<T>(2.0);
        let mut z = z0;
        let mut f = self.values(&z);
        debug_assert!(f.iter().all(|v| *v < T::zero()));
        let mut lam: Vec<T> = f.iter().map(|v| -T::one() / (cfg.initial_t * *v)).collect();
        let mut iterations = 0usize;
        let mut converged = false;

        loop {
            let gap = lam.iter().zip(&f).fold(T::zero(), |a, (l, v)| a - *l * *v);
            let rd = self.dual_residual(&z, &lam);
            let stat = rd.iter().fold(T::zero(), |a, v| maxr(a, abs(*v)));
            if (m == 0 || gap <= cfg.gap_tol) && stat <= cfg.gap_tol {
                converged = true;
                break;
            }
            if let Some(limit) = cfg.stop_below {
                if self.objective.value(&z) < limit {
                    break;
                }
            }
            if iterations >= cfg.max_iter {
                break;
            }
            iterations += 1;

            let t = if m == 0 { T::one() } else { cfg.t_factor * mf / gap };
            let inv_t = T::one() / t;
            let grads: Vec<DVector<T>> = (0..m).map(|i| self.gradient_of(i, &z)).collect();

            // Reduced Newton system in Δz.
            let mut h = &self.objective.p * two;
            let mut rhs = -self.objective.gradient(&z);
            for (i, c) in self.constraints.iter().enumerate() {
                if !c.is_linear() {
                    h += &c.p * (two * lam[i]);
                }
            }
            let nq = self.constraints.len();
            for j in 0..self.disks {
                let l = lam[nq + j];
                h[(j, j)] += two * l;
                h[(self.disks + j, self.disks + j)] += two * l;
            }
            for i in 0..m {
                let w = -lam[i] / f[i];
                h.ger(w, &grads[i], &grads[i], T::one());
                rhs.axpy(inv_t / f[i], &grads[i], T::one());
            }
            debug_assert_eq!(h.nrows(), dim);
            let dz = match solve_spd(h, &rhs) {
                Some(dz) => dz,
                None => break,
            };
            let dlam: Vec<T> = (0..m)
                .map(|i| -lam[i] - inv_t / f[i] - lam[i] * grads[i].dot(&dz) / f[i])
                .collect();

            // Step: keep λ positive, stay strictly feasible, reduce the residual.
            let mut s = T::one();
            for (l, d) in lam.iter().zip(&dlam) {
                if *d < T::zero() {
                    s = minr(s, -*l / *d);
                }
            }
            for i in 0..m {
                s = minr(s, self.step_to_boundary(i, f[i], &grads[i], &dz));
            }
            s *= lit(0.99);
            let r0 = self.residual_norm(&z, &lam, &f, t);
            let mut accepted = None;
            for _ in 0..200 {
                let zc = &z + &dz * s;
                let fc = self.values(&zc);
                if fc.iter().all(|v| *v < T::zero()) {
                    let lc: Vec<T> = lam.iter().zip(&dlam).map(|(l, d)| *l + s * *d).collect();
                    if self.centered(&lc, &fc, cfg.centrality)
                        && self.residual_norm(&zc, &lc, &fc, t) <= (T::one() - cfg.armijo * s) * r0
                    {
                        accepted = Some((zc, lc, fc));
                        break;
                    }
                }
                s *= cfg.backtrack;
            }
            match accepted {
                Some((zc, lc, fc)) => {
                    z = zc;
                    lam = lc;
                    f = fc;
                }
                None => break,
            }
        }

        let gap = lam.iter().zip(&f).fold(T::zero(), |a, (l, v)| a - *l * *v);
        let rd = self.dual_residual(&z, &lam);
        let stationarity = rd.iter().fold(T::zero(), |a, v| maxr(a, abs(*v)));
        let disk_duals = lam.split_off(self.constraints.len());
        BarrierOutcome {
            z,
            iterations,
            converged,
            duals: lam,
            disk_duals,
            stationarity,
            gap,
        }
    }

    /// Wide-neighborhood test: every complementarity product stays above
    /// `gamma` times the average.
    fn centered(&self, lam: &[T], f: &[T], gamma: T) -> bool {
        let m = lam.len();
        if m == 0 {
            return true;
        }
        let prods: Vec<T> = lam.iter().zip(f).map(|(l, v)| -*l * *v).collect();
        let mean = prods.iter().fold(T::zero(), |a, p| a + *p) / lit(m as f64);
        prods.iter().all(|p| *p >= gamma * mean)
    }

    /// Largest `s` keeping constraint `i` feasible along `z + s dz`, where
    /// `value` and `grad` are taken at `z`.
    fn step_to_boundary(&self, i: usize, value: T, grad: &DVector<T>, dz: &DVector<T>) -> T {
        let nq = self.constraints.len();
        let a = if i < nq {
            let c = &self.constraints[i];
            if c.is_linear() {
                T::zero()
            } else {
                dz.dot(&(&c.p * dz))
            }
        } else {
            let j = i - nq;
            dz[j] * dz[j] + dz[self.disks + j] * dz[self.disks + j]
        };
        let b = grad.dot(dz);
        let c = value;
        if a > T::zero() {
            let disc = b * b - lit::<T>(4.0) * a * c;
            (-(c + c)) / (b + disc.sqrt())
        } else if b > T::zero() {
            -c / b
        } else {
            infinity()
        }
    }

    /// Lagrangian dual value at `(duals, disk_duals)`, a lower bound on the
    /// optimum. Multipliers of epigraph constraints are normalized to sum to
    /// one so the dual stays finite in the epigraph direction.
    pub fn dual_bound(&self, duals: &[T], disk_duals: &[T]) -> Option<T> {
        let mut lam = duals.to_vec();
        if self.aux.is_some() {
            let total = lam
                .iter()
                .zip(&self.aux_constraints)
                .filter(|(_, a)| **a)
                .fold(T::zero(), |acc, (l, _)| acc + *l);
            if total > T::zero() {
                for (l, a) in lam.iter_mut().zip(&self.aux_constraints) {
                    if *a {
                        *l /= total;
                    }
                }
            }
        }
        let dim = self.dim();
        let mut p = self.objective.p.clone();
        let mut g = self.objective.g.clone();
        let mut c = self.objective.c;
        for (q, l) in self.constraints.iter().zip(&lam) {
            p += &q.p * *l;
            g += &q.g * *l;
            c += q.c * *l;
        }
        let n = self.disks;
        for (i, nu) in disk_duals.iter().enumerate() {
            p[(i, i)] += *nu;
            p[(n + i, n + i)] += *nu;
            c -= *nu * self.radius * self.radius;
        }
        // Restrict to the non-epigraph coordinates.
        let keep: Vec<usize> = (0..dim).filter(|i| Some(*i) != self.aux).collect();
        if keep.is_empty() {
            return Some(c);
        }
        let pr = DMatrix::from_fn(keep.len(), keep.len(), |i, j| p[(keep[i], keep[j])]);
        let gr = DVector::from_fn(keep.len(), |i, _| g[keep[i]]);
        let chol = Cholesky::new(pr)?;
        let x = chol.solve(&gr);
        Some(c - gr.dot(&x))
    }
}

/// Solves `H x = b` for symmetric positive (semi)definite `H`, adding
/// escalating diagonal regularization if the plain factorization fails.
fn solve_spd<T: Real>(h: DMatrix<T>, b: &DVector<T>) -> Option<DVector<T>> {
    let dim = h.nrows();
    if dim == 0 {
        return Some(DVector::zeros(0));
    }
    if let Some(ch) = Cholesky::<T, Dyn>::new(h.clone()) {
        return Some(ch.solve(b));
    }
    let scale = (0..dim).fold(T::zero(), |a, i| maxr(a, abs(h[(i, i)])));
    let mut reg = maxr(scale, T::one()) * lit(1e-14);
    for _ in 0..12 {
        let mut hr = h.clone();
        for i in 0..dim {
            hr[(i, i)] += reg;
        }
        if let Some(ch) = Cholesky::<T, Dyn>::new(hr) {
            return Some(ch.solve(b));
        }
        reg *= lit(100.0);
    }
    None
}
