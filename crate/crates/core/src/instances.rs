//! Unit-scale random problem instances for tests, examples and benchmarks.
//!
//! Unlike [`crate::chanmodel`], entries here are standard complex Gaussians
//! with moderate noise, which keeps hand-checked identities well conditioned.

use nalgebra::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::chanmodel::ChannelSet;
use crate::scalar::{lit, CMat, CVec, Real};
use crate::signal::PhaseVector;

fn cn<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex::new(lit(re * s), lit(im * s))
}

pub fn random_cvec<T: Real, R: Rng + ?Sized>(len: usize, rng: &mut R) -> CVec<T> {
    CVec::from_iterator(len, (0..len).map(|_| cn(rng)))
}

pub fn random_cmat<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat<T> {
    CMat::from_iterator(rows, cols, (0..rows * cols).map(|_| cn(rng)))
}

/// `CN(0, 1)` channels, powers in `[0.5, 2]`, noise in `[0.1, 1]`.
pub fn random_channels<T: Real, R: Rng + ?Sized>(
    antennas: usize,
    users: usize,
    elements: usize,
    rng: &mut R,
) -> ChannelSet<T> {
    let scale = Complex::from(lit::<T>(1.0 / (elements.max(1) as f64).sqrt()));
    ChannelSet {
        irs_to_ap: random_cmat(antennas, elements, rng) * scale,
        user_to_irs: (0..users).map(|_| random_cvec(elements, rng)).collect(),
        user_to_ap: (0..users).map(|_| random_cvec(antennas, rng)).collect(),
        tx_power: (0..users).map(|_| lit(rng.random_range(0.5..2.0))).collect(),
        noise_power: lit(rng.random_range(0.1..1.0)),
    }
}

pub fn random_phase<T: Real, R: Rng + ?Sized>(elements: usize, rng: &mut R) -> PhaseVector<T> {
    PhaseVector::random(elements, rng)
}

/// `M = K = 1`, no surface: `h_d = h`.
pub fn scalar_channels<T: Real>(h: Complex<T>, power: T, noise: T) -> ChannelSet<T> {
    ChannelSet {
        irs_to_ap: CMat::zeros(1, 0),
        user_to_irs: vec![CVec::zeros(0)],
        user_to_ap: vec![CVec::from_element(1, h)],
        tx_power: vec![power],
        noise_power: noise,
    }
}
