//! Random channel realizations for the AP / IRS / user deployment.
//!
//! The IRS→AP link is a deterministic rank-one line-of-sight channel built
//! from half-wavelength ULA steering vectors. User links are Rayleigh: i.i.d.
//! circularly-symmetric Gaussian entries whose variance follows the distance
//! pathloss, penetration loss and antenna gains of [`SystemGeometry`].

mod file;
mod geometry;

pub use file::{load_channels, read_channels, save_channels, write_channels, ParseError};
pub use geometry::{SystemGeometry, UserRow, CALIBRATED_NOISE_MW, NOMINAL_NOISE_MW};

use nalgebra::{Complex, DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::{lit, CMat, CVec, Real};

/// One realization of every wireless channel in the system.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet<T: Real> {
    /// IRS→AP channel `G`, `M × N`.
    pub irs_to_ap: CMat<T>,
    /// User→IRS channels `h_r,k`, each of length `N`.
    pub user_to_irs: Vec<CVec<T>>,
    /// User→AP channels `h_d,k`, each of length `M`.
    pub user_to_ap: Vec<CVec<T>>,
    /// Transmit power `q_k` per user.
    pub tx_power: Vec<T>,
    /// Noise power `σ²`.
    pub noise_power: T,
}

impl<T: Real> ChannelSet<T> {
    pub fn antennas(&self) -> usize {
        self.irs_to_ap.nrows()
    }

    pub fn elements(&self) -> usize {
        self.irs_to_ap.ncols()
    }

    pub fn users(&self) -> usize {
        self.user_to_ap.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n, k) = (self.antennas(), self.elements(), self.users());
        if m == 0 || k == 0 {
            return Err(Error::Dimension(format!("M = {m}, K = {k}; both must be positive")));
        }
        if self.user_to_irs.len() != k || self.tx_power.len() != k {
            return Err(Error::Dimension(format!(
                "{} user→IRS channels and {} powers for {k} users",
                self.user_to_irs.len(),
                self.tx_power.len()
            )));
        }
        for (i, (hr, hd)) in self.user_to_irs.iter().zip(&self.user_to_ap).enumerate() {
            if hr.len() != n || hd.len() != m {
                return Err(Error::Dimension(format!(
                    "user {i}: |h_r| = {}, |h_d| = {} (expected {n}, {m})",
                    hr.len(),
                    hd.len()
                )));
            }
        }
        if self.tx_power.iter().any(|q| !(*q > T::zero())) {
            return Err(Error::Domain("transmit powers must be positive".into()));
        }
        if !(self.noise_power > T::zero()) {
            return Err(Error::Domain("noise power must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn check_user(&self, k: usize) -> Result<()> {
        if k >= self.users() {
            return Err(Error::UserIndex {
                index: k,
                users: self.users(),
            });
        }
        Ok(())
    }

    /// Cascaded channel `F_k = G · Diag(h_r,k)`, so that `G diag(φ) h_r,k = F_k φ`.
    pub fn cascade(&self, k: usize) -> CMat<T> {
        let mut f = self.irs_to_ap.clone();
        for (mut col, h) in f.column_iter_mut().zip(self.user_to_irs[k].iter()) {
            col *= *h;
        }
        f
    }

    /// Copy of the set with the surface removed (`N = 0`).
    pub fn without_irs(&self) -> Self {
        ChannelSet {
            irs_to_ap: CMat::zeros(self.antennas(), 0),
            user_to_irs: vec![CVec::zeros(0); self.users()],
            user_to_ap: self.user_to_ap.clone(),
            tx_power: self.tx_power.clone(),
            noise_power: self.noise_power,
        }
    }
}

/// ULA response with half-wavelength spacing; `cos_angle` is the cosine between
/// the array axis and the direction of the far end.
fn steering(len: usize, cos_angle: f64) -> DVector<Complex<f64>> {
    DVector::from_iterator(
        len,
        (0..len).map(|i| Complex::from_polar(1.0, std::f64::consts::PI * i as f64 * cos_angle)),
    )
}

fn axis_cosine(axis_deg: f64, from: [f64; 2], to: [f64; 2]) -> f64 {
    let (dx, dy) = (to[0] - from[0], to[1] - from[1]);
    let d = (dx * dx + dy * dy).sqrt();
    let a = axis_deg.to_radians();
    (a.cos() * dx + a.sin() * dy) / d
}

/// Rank-one IRS→AP line-of-sight channel of the geometry.
pub fn los_channel(geometry: &SystemGeometry) -> DMatrix<Complex<f64>> {
    let (m, n) = (geometry.antennas, geometry.elements);
    if n == 0 {
        return DMatrix::zeros(m, 0);
    }
    let arrival = steering(
        m,
        axis_cosine(geometry.ap_array_axis_deg, geometry.ap_position, geometry.irs_position),
    );
    let departure = steering(
        n,
        axis_cosine(geometry.irs_array_axis_deg, geometry.irs_position, geometry.ap_position),
    );
    let amplitude = geometry.los_link_gain().sqrt();
    (arrival * departure.adjoint()).map(|z| z * amplitude)
}

/// Draws one channel realization.
///
/// Entries are generated in `f64` from a ChaCha8 stream seeded with `seed`
/// and converted to `T`, so identical inputs reproduce identical output.
pub fn generate_channels<T: Real>(geometry: &SystemGeometry, seed: u64) -> Result<ChannelSet<T>> {
    geometry.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, n) = (geometry.antennas, geometry.elements);

    let mut draw = |len: usize, gain: f64| -> CVec<T> {
        let scale = (gain / 2.0).sqrt();
        CVec::from_iterator(
            len,
            (0..len).map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex::new(lit(re * scale), lit(im * scale))
            }),
        )
    };

    let mut user_to_ap = Vec::with_capacity(geometry.users());
    let mut user_to_irs = Vec::with_capacity(geometry.users());
    for k in 0..geometry.users() {
        user_to_ap.push(draw(m, geometry.direct_link_gain(k)));
        let hr = if n > 0 {
            draw(n, geometry.reflect_link_gain(k))
        } else {
            CVec::zeros(0)
        };
        user_to_irs.push(hr);
    }

    Ok(ChannelSet {
        irs_to_ap: los_channel(geometry).map(|z| Complex::new(lit(z.re), lit(z.im))),
        user_to_irs,
        user_to_ap,
        tx_power: vec![lit(geometry.tx_power_mw); geometry.users()],
        noise_power: lit(geometry.noise_power_mw),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nominal_dimensions() {
        let g = SystemGeometry::nominal(4, 4, 30);
        let ch: ChannelSet<f64> = generate_channels(&g, 1).unwrap();
        assert_eq!(ch.irs_to_ap.shape(), (4, 30));
        assert_eq!(ch.user_to_irs.len(), 4);
        assert!(ch.user_to_irs.iter().all(|h| h.len() == 30));
        assert!(ch.user_to_ap.iter().all(|h| h.len() == 4));
        ch.validate().unwrap();
    }

    #[test]
    fn no_irs_has_empty_reflect_fields() {
        let g = SystemGeometry::nominal(4, 4, 0);
        let ch: ChannelSet<f64> = generate_channels(&g, 9).unwrap();
        assert_eq!(ch.irs_to_ap.shape(), (4, 0));
        assert!(ch.user_to_irs.iter().all(|h| h.is_empty()));
        assert!(ch.user_to_ap.iter().all(|h| h.iter().any(|z| z.norm() > 0.0)));
    }

    #[test]
    fn deterministic_under_seed() {
        let g = SystemGeometry::nominal(4, 4, 30);
        let a: ChannelSet<f64> = generate_channels(&g, 42).unwrap();
        let b: ChannelSet<f64> = generate_channels(&g, 42).unwrap();
        let c: ChannelSet<f64> = generate_channels(&g, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn los_is_rank_one() {
        let g = SystemGeometry::nominal(4, 4, 30);
        let sv = los_channel(&g).singular_values();
        let mut s: Vec<f64> = sv.iter().copied().collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!(s[0] > 0.0);
        assert!(s[1] < 1e-10 * s[0], "{s:?}");
    }

    #[test]
    fn rejects_degenerate_geometry() {
        let mut g = SystemGeometry::nominal(4, 2, 8);
        g.user_positions[1] = g.irs_position;
        assert!(matches!(generate_channels::<f64>(&g, 0), Err(Error::Geometry(_))));
        let g = SystemGeometry::nominal(0, 2, 8);
        assert!(generate_channels::<f64>(&g, 0).is_err());
        let g = SystemGeometry::nominal(2, 0, 8);
        assert!(generate_channels::<f64>(&g, 0).is_err());
    }

    #[test]
    fn rayleigh_variance_matches_budget() {
        // 16 antennas × 1000 seeds = 16000 samples of one user's direct link.
        let g = SystemGeometry::nominal(16, 1, 0);
        let expected = g.direct_link_gain(0);
        let mut acc = 0.0;
        let mut count = 0usize;
        for seed in 0..1000 {
            let ch: ChannelSet<f64> = generate_channels(&g, seed).unwrap();
            for z in ch.user_to_ap[0].iter() {
                acc += z.norm_sqr();
                count += 1;
            }
        }
        let ratio = acc / count as f64 / expected;
        assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn doubling_distance_scales_power() {
        let near = SystemGeometry {
            user_positions: vec![[0.0, 10.0]],
            ..SystemGeometry::nominal(16, 1, 0)
        };
        let far = SystemGeometry {
            user_positions: vec![[0.0, 20.0]],
            ..near.clone()
        };
        let mean_power = |g: &SystemGeometry| {
            let mut acc = 0.0;
            for seed in 0..1000 {
                let ch: ChannelSet<f64> = generate_channels(g, seed).unwrap();
                acc += ch.user_to_ap[0].iter().map(|z| z.norm_sqr()).sum::<f64>();
            }
            acc / (1000.0 * 16.0)
        };
        let ratio = mean_power(&far) / mean_power(&near);
        let expected = 2f64.powf(-3.0);
        assert!((ratio / expected - 1.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn cascade_matches_diagonal_product() {
        let g = SystemGeometry::nominal(3, 2, 5);
        let ch: ChannelSet<f64> = generate_channels(&g, 3).unwrap();
        let f = ch.cascade(1);
        let diag = CMat::from_diagonal(&ch.user_to_irs[1]);
        assert!((f - &ch.irs_to_ap * diag).norm() < 1e-18);
    }

    #[test]
    fn single_precision_generation() {
        let g = SystemGeometry::nominal(4, 4, 30);
        let a: ChannelSet<f32> = generate_channels(&g, 5).unwrap();
        let b: ChannelSet<f64> = generate_channels(&g, 5).unwrap();
        let d = (a.user_to_ap[0][0].re as f64 - b.user_to_ap[0][0].re).abs();
        assert!(d <= 1e-6 * b.user_to_ap[0][0].re.abs());
    }
}
