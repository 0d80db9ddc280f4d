//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use irsmec::chanmodel::{SystemGeometry, UserRow, CALIBRATED_NOISE_MW};
use irsmec::econ::OffloadEconomy;
use irsmec::feasibility::FeasibilityOptions;
use irsmec::qcqp::QcqpOptions;
use irsmec::sumratio::SumRatioOptions;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Base seed; trial `t` uses channel seed `seed + t`.
    pub seed: u64,
    pub trials: usize,
    /// Surface sizes to run.
    pub n_elements: Vec<usize>,
    pub output_dir: PathBuf,
    pub geometry: GeometryConfig,
    pub sweep: SweepConfig,
    pub economy: EconomyConfig,
    pub solver: SolverConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            trials: 50,
            n_elements: vec![30],
            output_dir: PathBuf::from("out"),
            geometry: GeometryConfig::default(),
            sweep: SweepConfig::default(),
            economy: EconomyConfig::default(),
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub antennas: usize,
    pub users: usize,
    /// x-coordinate of the first user, metres.
    pub row_start: f64,
    pub row_spacing: f64,
    pub row_offset: f64,
    pub ap_irs_distance: f64,
    pub pathloss_exponent_user: f64,
    pub pathloss_exponent_los: f64,
    pub penetration_loss_db: f64,
    pub ref_pathloss_db: f64,
    pub antenna_gain_ap_db: f64,
    pub antenna_gain_user_db: f64,
    pub antenna_gain_irs_element_db: f64,
    pub tx_power_mw: f64,
    pub noise_power_mw: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        let g = SystemGeometry::calibrated(4, 4, 0);
        let row = UserRow::default();
        GeometryConfig {
            antennas: g.antennas,
            users: g.users(),
            row_start: row.start,
            row_spacing: row.spacing,
            row_offset: row.offset,
            ap_irs_distance: g.ap_irs_distance(),
            pathloss_exponent_user: g.pathloss_exponent_user,
            pathloss_exponent_los: g.pathloss_exponent_los,
            penetration_loss_db: g.penetration_loss_db,
            ref_pathloss_db: g.ref_pathloss_db,
            antenna_gain_ap_db: g.antenna_gain_ap_db,
            antenna_gain_user_db: g.antenna_gain_user_db,
            antenna_gain_irs_element_db: g.antenna_gain_irs_element_db,
            tx_power_mw: g.tx_power_mw,
            noise_power_mw: CALIBRATED_NOISE_MW,
        }
    }
}

impl GeometryConfig {
    pub fn build(&self, elements: usize) -> Result<SystemGeometry> {
        let row = UserRow {
            start: self.row_start,
            spacing: self.row_spacing,
            offset: self.row_offset,
        };
        let g = SystemGeometry {
            irs_position: [self.ap_irs_distance, 0.0],
            pathloss_exponent_user: self.pathloss_exponent_user,
            pathloss_exponent_los: self.pathloss_exponent_los,
            penetration_loss_db: self.penetration_loss_db,
            ref_pathloss_db: self.ref_pathloss_db,
            antenna_gain_ap_db: self.antenna_gain_ap_db,
            antenna_gain_user_db: self.antenna_gain_user_db,
            antenna_gain_irs_element_db: self.antenna_gain_irs_element_db,
            tx_power_mw: self.tx_power_mw,
            noise_power_mw: self.noise_power_mw,
            ..SystemGeometry::with_user_row(self.antennas, self.users, elements, row)
        };
        g.validate()?;
        Ok(g)
    }
}

/// Common rate floors `min, min + step, …, max` in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            min: 2.1,
            max: 2.9,
            step: 0.1,
        }
    }
}

impl SweepConfig {
    pub fn floors(&self) -> Vec<f64> {
        let count = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        (0..=count).map(|i| self.min + self.step * i as f64).collect()
    }
}

/// Flat offloading economy: every user has the same `C`, `A` and floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EconomyConfig {
    pub cost_advantage: f64,
    pub transmit_weight: f64,
    /// Rate floor of the earning optimization, nats.
    pub floor: f64,
}

impl Default for EconomyConfig {
    fn default() -> Self {
        EconomyConfig {
            cost_advantage: 10.0,
            transmit_weight: 1.0,
            floor: 1.5,
        }
    }
}

impl EconomyConfig {
    pub fn build(&self, users: usize) -> Result<OffloadEconomy<f64>> {
        Ok(OffloadEconomy::flat(users, self.cost_advantage, self.transmit_weight, self.floor)?)
    }
}

/// Overrides of the library's solver defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub restarts: usize,
    pub conv_tol: f64,
    pub feas_max_iter: usize,
    pub rate_tol: f64,
    pub xi: f64,
    pub epsilon: f64,
    pub rho: f64,
    pub inner_tol: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    pub max_backtrack: usize,
    pub kkt_tol: f64,
    pub feas_tol: f64,
    pub qcqp_max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let f = FeasibilityOptions::<f64>::default();
        let s = SumRatioOptions::<f64>::default();
        let q = QcqpOptions::<f64>::default();
        SolverConfig {
            restarts: f.restarts,
            conv_tol: f.conv_tol,
            feas_max_iter: f.max_iter,
            rate_tol: f.rate_tol,
            xi: s.xi,
            epsilon: s.epsilon,
            rho: s.rho,
            inner_tol: s.inner_tol,
            max_inner: s.max_inner,
            max_outer: s.max_outer,
            max_backtrack: s.max_backtrack,
            kkt_tol: q.kkt_tol,
            feas_tol: q.feas_tol,
            qcqp_max_iter: q.max_iter,
        }
    }
}

impl SolverConfig {
    pub fn qcqp(&self) -> QcqpOptions<f64> {
        QcqpOptions {
            kkt_tol: self.kkt_tol,
            feas_tol: self.feas_tol,
            max_iter: self.qcqp_max_iter,
            ..QcqpOptions::default()
        }
    }

    pub fn feasibility(&self) -> FeasibilityOptions<f64> {
        FeasibilityOptions {
            conv_tol: self.conv_tol,
            max_iter: self.feas_max_iter,
            restarts: self.restarts,
            rate_tol: self.rate_tol,
            qcqp: self.qcqp(),
        }
    }

    pub fn sumratio(&self) -> SumRatioOptions<f64> {
        SumRatioOptions {
            xi: self.xi,
            epsilon: self.epsilon,
            rho: self.rho,
            inner_tol: self.inner_tol,
            max_inner: self.max_inner,
            max_outer: self.max_outer,
            max_backtrack: self.max_backtrack,
            rate_tol: self.rate_tol,
            qcqp: self.qcqp(),
            feasibility: self.feasibility(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.n_elements.is_empty() {
            return bad("n_elements must list at least one surface size".into());
        }
        let s = &self.sweep;
        if !(s.min.is_finite() && s.max.is_finite() && s.min <= s.max) {
            return bad(format!("sweep min {} must not exceed max {}", s.min, s.max));
        }
        if !(s.step > 0.0) {
            return bad(format!("sweep step {} must be positive", s.step));
        }
        if s.min < 0.0 {
            return bad(format!("rate floors must be nonnegative, got {}", s.min));
        }
        if !(self.economy.floor >= 0.0) {
            return bad(format!("economy floor {} must be nonnegative", self.economy.floor));
        }
        for &n in &self.n_elements {
            self.geometry.build(n)?;
        }
        Ok(())
    }
}
