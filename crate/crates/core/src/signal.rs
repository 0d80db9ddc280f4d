//! Uplink signal model: effective channels, covariances, linear receivers,
//! SINR, rate, and MSE.
//!
//! Every inverse is applied through a Cholesky factorization; `W_k` and `W̃`
//! are Hermitian positive definite because `σ² > 0`.

use nalgebra::{Cholesky, Complex, Dyn};
use rand::Rng;

use crate::chanmodel::ChannelSet;
use crate::error::{Error, Result};
use crate::scalar::{cabs, inner, lit, norm_sqr, polar, to_f64, CMat, CVec, Real};

/// IRS reflection coefficients `φ_n = κ_n e^{jθ_n}` with `|φ_n| ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector<T: Real>(CVec<T>);

/// Slack allowed on `|φ_n| ≤ 1` when validating externally supplied vectors.
pub const MODULUS_SLACK: f64 = 1e-9;

impl<T: Real> PhaseVector<T> {
    pub fn new(coefficients: CVec<T>) -> Result<Self> {
        let limit = lit::<T>(1.0 + MODULUS_SLACK);
        for (index, z) in coefficients.iter().enumerate() {
            let modulus = cabs(*z);
            if !(modulus <= limit) {
                return Err(Error::PhaseModulus {
                    index,
                    modulus: to_f64(modulus),
                });
            }
        }
        Ok(PhaseVector(coefficients))
    }

    /// Accepts the vector without the modulus check; used by solvers whose
    /// output already lies in the disks.
    pub(crate) fn new_unchecked(coefficients: CVec<T>) -> Self {
        PhaseVector(coefficients)
    }

    pub fn zeros(n: usize) -> Self {
        PhaseVector(CVec::zeros(n))
    }

    /// Unit-modulus vector `e^{jθ_n}`.
    pub fn from_angles(angles: &[T]) -> Self {
        PhaseVector(CVec::from_iterator(
            angles.len(),
            angles.iter().map(|&t| polar(T::one(), t)),
        ))
    }

    /// Random draw with `κ_n²` uniform on `[0, 1]` and `θ_n` uniform on `[0, 2π)`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let two_pi = 2.0 * std::f64::consts::PI;
        PhaseVector(CVec::from_iterator(
            n,
            (0..n).map(|_| {
                let kappa = rng.random::<f64>().sqrt();
                let theta = rng.random::<f64>() * two_pi;
                polar(lit(kappa), lit(theta))
            }),
        ))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &CVec<T> {
        &self.0
    }

    pub fn into_vector(self) -> CVec<T> {
        self.0
    }

    pub fn max_modulus(&self) -> T {
        self.0
            .iter()
            .map(|z| cabs(*z))
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }
}

/// One linear receive filter per user.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverBank<T: Real>(pub Vec<CVec<T>>);

impl<T: Real> ReceiverBank<T> {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, k: usize) -> &CVec<T> {
        &self.0[k]
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .all(|w| w.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

/// Effective channels of every user for one `(ChannelSet, φ)` pair.
///
/// Building this once and querying it is cheaper than calling the free
/// functions repeatedly, which each rebuild the effective channels.
#[derive(Debug, Clone)]
pub struct LinkState<'a, T: Real> {
    ch: &'a ChannelSet<T>,
    channels: Vec<CVec<T>>,
}

impl<'a, T: Real> LinkState<'a, T> {
    pub fn new(ch: &'a ChannelSet<T>, phi: &PhaseVector<T>) -> Result<Self> {
        if phi.len() != ch.elements() {
            return Err(Error::Dimension(format!(
                "phase vector has {} entries, surface has {}",
                phi.len(),
                ch.elements()
            )));
        }
        let reflected = if ch.elements() > 0 {
            Some(&ch.irs_to_ap * CMat::from_diagonal(phi.as_vector()))
        } else {
            None
        };
        let channels = (0..ch.users())
            .map(|k| match &reflected {
                Some(gp) => gp * &ch.user_to_irs[k] + &ch.user_to_ap[k],
                None => ch.user_to_ap[k].clone(),
            })
            .collect();
        Ok(LinkState { ch, channels })
    }

    pub fn channels(&self) -> &ChannelSet<T> {
        self.ch
    }

    pub fn users(&self) -> usize {
        self.channels.len()
    }

    /// `h_k(φ) = G diag(φ) h_r,k + h_d,k`.
    pub fn effective_channel(&self, k: usize) -> Result<&CVec<T>> {
        self.ch.check_user(k)?;
        Ok(&self.channels[k])
    }

    fn covariance(&self, skip: Option<usize>) -> CMat<T> {
        let m = self.ch.antennas();
        let mut w = CMat::identity(m, m) * Complex::from(self.ch.noise_power);
        for (i, h) in self.channels.iter().enumerate() {
            if Some(i) == skip {
                continue;
            }
            let q = Complex::from(self.ch.tx_power[i]);
            w += h * h.adjoint() * q;
        }
        w
    }

    /// `W_k = σ²I + Σ_{i≠k} q_i h_i h_i^H`.
    pub fn interference_covariance(&self, k: usize) -> Result<CMat<T>> {
        self.ch.check_user(k)?;
        Ok(self.covariance(Some(k)))
    }

    /// `W̃ = σ²I + Σ_j q_j h_j h_j^H`.
    pub fn total_covariance(&self) -> CMat<T> {
        self.covariance(None)
    }

    fn solve_interference(&self, k: usize) -> Result<CVec<T>> {
        let chol = factor(self.interference_covariance(k)?, "interference covariance")?;
        Ok(chol.solve(&self.channels[k]))
    }

    /// `h_k^H W_k^{-1} h_k`.
    pub fn whitened_gain(&self, k: usize) -> Result<T> {
        let x = self.solve_interference(k)?;
        Ok(inner(&self.channels[k], &x).re)
    }

    /// SINR-optimal receiver `W_k^{-1} h_k / ‖W_k^{-1} h_k‖`.
    pub fn optimal_receiver(&self, k: usize) -> Result<CVec<T>> {
        let x = self.solve_interference(k)?;
        let n = x.norm();
        if n > T::zero() {
            Ok(x.unscale(n))
        } else {
            Ok(x)
        }
    }

    /// `γ_k* = q_k h_k^H W_k^{-1} h_k`.
    pub fn max_sinr(&self, k: usize) -> Result<T> {
        let g = self.whitened_gain(k)?;
        Ok(clamp_nonneg(self.ch.tx_power[k] * g))
    }

    /// SINR of user `k` behind an arbitrary receiver `u`.
    pub fn sinr(&self, k: usize, u: &CVec<T>) -> Result<T> {
        let w = self.interference_covariance(k)?;
        let signal = self.ch.tx_power[k] * inner(u, &self.channels[k]).norm_sqr();
        let denom = inner(u, &(&w * u)).re;
        Ok(signal / denom)
    }

    /// `R_k = ln(1 + γ_k*)`, in nats per channel use.
    pub fn rate(&self, k: usize) -> Result<T> {
        Ok(self.max_sinr(k)?.ln_1p())
    }

    pub fn rates(&self) -> Result<Vec<T>> {
        (0..self.users()).map(|k| self.rate(k)).collect()
    }

    /// Closed-form MSE of receiver `w` for user `k`, assuming unit-power
    /// independent symbols:
    /// `|1 − √q_k w^H h_k|² + Σ_{j≠k} q_j |w^H h_j|² + σ² ‖w‖²`.
    pub fn mse(&self, k: usize, w: &CVec<T>) -> Result<T> {
        self.ch.check_user(k)?;
        if w.len() != self.ch.antennas() {
            return Err(Error::Dimension(format!(
                "receiver has {} taps, AP has {} antennas",
                w.len(),
                self.ch.antennas()
            )));
        }
        let mut e = T::zero();
        for (j, h) in self.channels.iter().enumerate() {
            let q = self.ch.tx_power[j];
            let y = inner(w, h);
            if j == k {
                e += (Complex::from(T::one()) - y * q.sqrt()).norm_sqr();
            } else {
                e += q * y.norm_sqr();
            }
        }
        Ok(e + self.ch.noise_power * norm_sqr(w))
    }

    /// MMSE receiver `W̃^{-1} √q_k h_k`.
    pub fn mmse_receiver(&self, k: usize) -> Result<CVec<T>> {
        self.ch.check_user(k)?;
        let chol = factor(self.total_covariance(), "total covariance")?;
        Ok(chol.solve(&self.channels[k]) * Complex::from(self.ch.tx_power[k].sqrt()))
    }

    /// Receivers for every user from a single factorization of `W̃`.
    pub fn mmse_receivers(&self) -> Result<ReceiverBank<T>> {
        let chol = factor(self.total_covariance(), "total covariance")?;
        Ok(ReceiverBank(
            self.channels
                .iter()
                .zip(&self.ch.tx_power)
                .map(|(h, q)| chol.solve(h) * Complex::from(q.sqrt()))
                .collect(),
        ))
    }

    /// Minimum MSE `1 − q_k h_k^H W̃^{-1} h_k`.
    pub fn min_mse(&self, k: usize) -> Result<T> {
        self.ch.check_user(k)?;
        let chol = factor(self.total_covariance(), "total covariance")?;
        let h = &self.channels[k];
        let v = T::one() - self.ch.tx_power[k] * inner(h, &chol.solve(h)).re;
        Ok(v)
    }
}

pub(crate) fn factor<T: Real>(m: CMat<T>, what: &'static str) -> Result<Cholesky<Complex<T>, Dyn>> {
    Cholesky::new(m).ok_or(Error::NotPositiveDefinite(what))
}

fn clamp_nonneg<T: Real>(x: T) -> T {
    if x < T::zero() {
        T::zero()
    } else {
        x
    }
}

pub fn effective_channel<T: Real>(ch: &ChannelSet<T>, phi: &PhaseVector<T>, k: usize) -> Result<CVec<T>> {
    ch.check_user(k)?;
    Ok(LinkState::new(ch, phi)?.channels.swap_remove(k))
}

pub fn interference_covariance<T: Real>(
    ch: &ChannelSet<T>,
    phi: &PhaseVector<T>,
    k: usize,
) -> Result<CMat<T>> {
    LinkState::new(ch, phi)?.interference_covariance(k)
}

pub fn optimal_receiver<T: Real>(ch: &ChannelSet<T>, phi: &PhaseVector<T>, k: usize) -> Result<CVec<T>> {
    LinkState::new(ch, phi)?.optimal_receiver(k)
}

pub fn max_sinr<T: Real>(ch: &ChannelSet<T>, phi: &PhaseVector<T>, k: usize) -> Result<T> {
    LinkState::new(ch, phi)?.max_sinr(k)
}

pub fn rate<T: Real>(ch: &ChannelSet<T>, phi: &PhaseVector<T>, k: usize) -> Result<T> {
    LinkState::new(ch, phi)?.rate(k)
}

pub fn rates<T: Real>(ch: &ChannelSet<T>, phi: &PhaseVector<T>) -> Result<Vec<T>> {
    LinkState::new(ch, phi)?.rates()
}

pub fn mse<T: Real>(ch: &ChannelSet<T>, phi: &PhaseVector<T>, k: usize, w: &CVec<T>) -> Result<T> {
    LinkState::new(ch, phi)?.mse(k, w)
}

pub fn mmse_receiver<T: Real>(ch: &ChannelSet<T>, phi: &PhaseVector<T>, k: usize) -> Result<CVec<T>> {
    LinkState::new(ch, phi)?.mmse_receiver(k)
}

pub fn min_mse<T: Real>(ch: &ChannelSet<T>, phi: &PhaseVector<T>, k: usize) -> Result<T> {
    LinkState::new(ch, phi)?.min_mse(k)
}
