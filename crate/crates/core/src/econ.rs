//! Offloading economics: device utilities under local and edge computing,
//! the per-device constants `C_k`/`A_k`, offloading decisions and the edge
//! server's earning.

use crate::error::{Error, Result};
use crate::scalar::{maxr, Real};

/// Task and cost parameters of one mobile device.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskProfile<T: Real> {
    /// Input data size `b_k`.
    pub data_bits: T,
    /// Required CPU cycles `d_k`.
    pub cycles: T,
    /// Local CPU speed `c_k^(m)` (cycles/s).
    pub local_speed: T,
    /// Edge CPU speed `c^(e)` (cycles/s).
    pub edge_speed: T,
    /// Local energy per cycle `μ_k`.
    pub energy_per_cycle: T,
    /// Transmit energy per unit time `ν_k`.
    pub transmit_power: T,
    /// Tail energy `L_k` after transmission.
    pub tail_energy: T,
    /// Cost weight on time `w_k^(t)`.
    pub time_weight: T,
    /// Cost weight on energy `w_k^(e)`.
    pub energy_weight: T,
    /// Benefit `f_k` of completing the task.
    pub benefit: T,
}

impl<T: Real> TaskProfile<T> {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("data_bits", self.data_bits),
            ("cycles", self.cycles),
            ("local_speed", self.local_speed),
            ("edge_speed", self.edge_speed),
            ("energy_per_cycle", self.energy_per_cycle),
            ("transmit_power", self.transmit_power),
            ("tail_energy", self.tail_energy),
            ("time_weight", self.time_weight),
            ("energy_weight", self.energy_weight),
            ("benefit", self.benefit),
        ];
        for (name, v) in fields {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::Profile(format!("{name} must be finite and nonnegative")));
            }
        }
        if !(self.local_speed > T::zero() && self.edge_speed > T::zero()) {
            return Err(Error::Profile("CPU speeds must be positive".into()));
        }
        Ok(())
    }

    /// `C_k`: cost saved by computing at the edge, transmission excluded.
    pub fn cost_advantage(&self) -> T {
        self.time_weight * self.cycles / self.local_speed
            + self.energy_weight * self.energy_per_cycle * self.cycles
            - self.time_weight * self.cycles / self.edge_speed
            - self.energy_weight * self.tail_energy
    }

    /// `A_k`: coefficient of `1/R_k` in the transmission cost.
    pub fn transmit_weight(&self) -> T {
        (self.time_weight + self.energy_weight * self.transmit_power) * self.data_bits
    }
}

/// `U^(m) = f − w_t d / c_m − w_e μ d`.
pub fn local_utility<T: Real>(p: &TaskProfile<T>) -> T {
    p.benefit
        - p.time_weight * p.cycles / p.local_speed
        - p.energy_weight * p.energy_per_cycle * p.cycles
}

/// Utility under edge computing at uplink rate `rate` and payment `payment`.
pub fn edge_utility<T: Real>(p: &TaskProfile<T>, rate: T, payment: T) -> Result<T> {
    if !(rate > T::zero()) {
        return Err(Error::Domain(format!(
            "rate {rate} gives an unbounded transmission time"
        )));
    }
    let send_time = p.data_bits / rate;
    let exec_time = p.cycles / p.edge_speed;
    let energy = p.transmit_power * send_time + p.tail_energy;
    Ok(p.benefit - p.time_weight * (send_time + exec_time) - p.energy_weight * energy - payment)
}

/// Per-device constants of the offloading game plus the rate floors.
#[derive(Debug, Clone, PartialEq)]
pub struct OffloadEconomy<T: Real> {
    /// `C_k`.
    pub cost_advantage: Vec<T>,
    /// `A_k`.
    pub transmit_weight: Vec<T>,
    /// Rate floors `r_k` in nats.
    pub floors: Vec<T>,
}

/// Whether a device computes locally or offloads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    Local,
    Edge,
}

impl Choice {
    /// `a_k`.
    pub fn indicator(self) -> u8 {
        match self {
            Choice::Local => 0,
            Choice::Edge => 1,
        }
    }
}

impl<T: Real> OffloadEconomy<T> {
    pub fn new(cost_advantage: Vec<T>, transmit_weight: Vec<T>, floors: Vec<T>) -> Result<Self> {
        let k = cost_advantage.len();
        if transmit_weight.len() != k || floors.len() != k {
            return Err(Error::Dimension(format!(
                "{k} C values, {} A values, {} floors",
                transmit_weight.len(),
                floors.len()
            )));
        }
        if transmit_weight.iter().any(|a| !(*a >= T::zero())) {
            return Err(Error::Profile("A_k must be nonnegative".into()));
        }
        if floors.iter().any(|r| !(*r >= T::zero())) {
            return Err(Error::Profile("rate floors must be nonnegative".into()));
        }
        Ok(OffloadEconomy {
            cost_advantage,
            transmit_weight,
            floors,
        })
    }

    /// Identical users: every `A_k = a`, `C_k = c`.
    pub fn flat(users: usize, c: T, a: T, floor: T) -> Result<Self> {
        Self::new(vec![c; users], vec![a; users], vec![floor; users])
    }

    pub fn users(&self) -> usize {
        self.cost_advantage.len()
    }

    fn check_rates(&self, rates: &[T]) -> Result<()> {
        if rates.len() != self.users() {
            return Err(Error::Dimension(format!(
                "{} rates for {} users",
                rates.len(),
                self.users()
            )));
        }
        if let Some((k, r)) = rates.iter().enumerate().find(|(_, r)| !(**r > T::zero())) {
            return Err(Error::Domain(format!("rate of user {k} is {r}")));
        }
        Ok(())
    }

    /// `C_k − A_k / R_k`: the largest payment device `k` accepts.
    pub fn max_payment(&self, k: usize, rate: T) -> T {
        self.cost_advantage[k] - self.transmit_weight[k] / rate
    }
}

pub fn derive_economy<T: Real>(profiles: &[TaskProfile<T>], floors: &[T]) -> Result<OffloadEconomy<T>> {
    for p in profiles {
        p.validate()?;
    }
    OffloadEconomy::new(
        profiles.iter().map(TaskProfile::cost_advantage).collect(),
        profiles.iter().map(TaskProfile::transmit_weight).collect(),
        floors.to_vec(),
    )
}

/// Edge iff `P_k ≤ C_k − A_k / R_k`; the boundary counts as offloading.
pub fn offload_decision<T: Real>(econ: &OffloadEconomy<T>, k: usize, rate: T, payment: T) -> Result<Choice> {
    if k >= econ.users() {
        return Err(Error::UserIndex {
            index: k,
            users: econ.users(),
        });
    }
    if !(rate > T::zero()) {
        return Err(Error::Domain(format!("rate {rate} must be positive")));
    }
    Ok(if payment <= econ.max_payment(k, rate) {
        Choice::Edge
    } else {
        Choice::Local
    })
}

/// `Σ_k (C_k − A_k / R_k)`, negative terms included.
pub fn server_earning_p2<T: Real>(econ: &OffloadEconomy<T>, rates: &[T]) -> Result<T> {
    econ.check_rates(rates)?;
    Ok(rates
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (k, &r)| acc + econ.max_payment(k, r)))
}

/// `Σ_k A_k / R_k`; minimizing it maximizes [`server_earning_p2`].
pub fn transmit_cost<T: Real>(econ: &OffloadEconomy<T>, rates: &[T]) -> Result<T> {
    econ.check_rates(rates)?;
    Ok(rates
        .iter()
        .zip(&econ.transmit_weight)
        .fold(T::zero(), |acc, (&r, &a)| acc + a / r))
}

/// `Σ_k max{C_k − A_k / R_k, 0}`; evaluation only.
pub fn server_earning_p1<T: Real>(econ: &OffloadEconomy<T>, rates: &[T]) -> Result<T> {
    econ.check_rates(rates)?;
    Ok(rates
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (k, &r)| acc + maxr(econ.max_payment(k, r), T::zero())))
}
