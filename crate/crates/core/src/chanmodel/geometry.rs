use crate::error::{Error, Result};

/// Planar deployment of the access point, the reflecting surface and the users,
/// together with the link-budget constants used to scale random channels.
///
/// Powers are linear milliwatts; losses and gains are in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemGeometry {
    /// Receive antennas at the access point (`M`).
    pub antennas: usize,
    /// Reflecting elements on the surface (`N`); zero disables the surface.
    pub elements: usize,
    pub ap_position: [f64; 2],
    pub irs_position: [f64; 2],
    /// One position per single-antenna user (`K = user_positions.len()`).
    pub user_positions: Vec<[f64; 2]>,
    /// Pathloss exponent of every user link (user→AP and user→IRS).
    pub pathloss_exponent_user: f64,
    /// Pathloss exponent of the line-of-sight IRS→AP link.
    pub pathloss_exponent_los: f64,
    /// Extra loss applied to user links.
    pub penetration_loss_db: f64,
    /// Pathloss at the 1 m reference distance.
    pub ref_pathloss_db: f64,
    pub antenna_gain_ap_db: f64,
    pub antenna_gain_user_db: f64,
    /// Per-element gain, applied once on the user→IRS hop.
    pub antenna_gain_irs_element_db: f64,
    /// Orientation of the AP's linear array axis, degrees from the x-axis.
    pub ap_array_axis_deg: f64,
    /// Orientation of the IRS's linear array axis, degrees from the x-axis.
    pub irs_array_axis_deg: f64,
    /// Per-user transmit power in mW.
    pub tx_power_mw: f64,
    /// Receiver noise power in mW.
    pub noise_power_mw: f64,
}

/// Layout knobs for [`SystemGeometry::with_user_row`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserRow {
    /// x-coordinate of the first user.
    pub start: f64,
    /// Distance between neighbouring users along the row.
    pub spacing: f64,
    /// Perpendicular offset of the row from the AP–IRS line.
    pub offset: f64,
}

impl Default for UserRow {
    fn default() -> Self {
        UserRow {
            start: DEFAULT_ROW_START,
            spacing: 5.0,
            offset: 2.0,
        }
    }
}

const DEFAULT_ROW_START: f64 = 40.0;

/// Nominal receiver noise of the reference deployment, in mW.
pub const NOMINAL_NOISE_MW: f64 = 1e-12;

/// Receiver noise used by the experiments, in mW (`1e-12` W).
pub const CALIBRATED_NOISE_MW: f64 = 1e-9;

impl SystemGeometry {
    /// Reference deployment: AP at the origin, surface 50 m away on the x-axis,
    /// users on a row parallel to the AP–IRS line.
    pub fn nominal(antennas: usize, users: usize, elements: usize) -> Self {
        Self::with_user_row(antennas, users, elements, UserRow::default())
    }

    /// [`SystemGeometry::nominal`] with the receiver noise raised to
    /// [`CALIBRATED_NOISE_MW`], which puts the common-floor feasibility
    /// boundary of `M = 4, K = 4, N = 30` near 2.5 nats.
    pub fn calibrated(antennas: usize, users: usize, elements: usize) -> Self {
        SystemGeometry {
            noise_power_mw: CALIBRATED_NOISE_MW,
            ..Self::nominal(antennas, users, elements)
        }
    }

    pub fn with_user_row(antennas: usize, users: usize, elements: usize, row: UserRow) -> Self {
        let user_positions = (0..users)
            .map(|k| [row.start + row.spacing * k as f64, row.offset])
            .collect();
        SystemGeometry {
            antennas,
            elements,
            ap_position: [0.0, 0.0],
            irs_position: [50.0, 0.0],
            user_positions,
            pathloss_exponent_user: 3.0,
            pathloss_exponent_los: 2.0,
            penetration_loss_db: 10.0,
            ref_pathloss_db: 30.0,
            antenna_gain_ap_db: 0.0,
            antenna_gain_user_db: 0.0,
            antenna_gain_irs_element_db: 5.0,
            ap_array_axis_deg: 90.0,
            irs_array_axis_deg: 0.0,
            tx_power_mw: 10.0,
            noise_power_mw: NOMINAL_NOISE_MW,
        }
    }

    pub fn users(&self) -> usize {
        self.user_positions.len()
    }

    pub fn ap_irs_distance(&self) -> f64 {
        dist(self.ap_position, self.irs_position)
    }

    pub fn user_ap_distance(&self, k: usize) -> f64 {
        dist(self.user_positions[k], self.ap_position)
    }

    pub fn user_irs_distance(&self, k: usize) -> f64 {
        dist(self.user_positions[k], self.irs_position)
    }

    pub fn validate(&self) -> Result<()> {
        if self.antennas == 0 {
            return Err(Error::Geometry("at least one AP antenna required".into()));
        }
        if self.user_positions.is_empty() {
            return Err(Error::Geometry("at least one user required".into()));
        }
        let finite = [
            self.pathloss_exponent_user,
            self.pathloss_exponent_los,
            self.penetration_loss_db,
            self.ref_pathloss_db,
            self.antenna_gain_ap_db,
            self.antenna_gain_user_db,
            self.antenna_gain_irs_element_db,
            self.ap_array_axis_deg,
            self.irs_array_axis_deg,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Geometry("non-finite link-budget parameter".into()));
        }
        if !(self.tx_power_mw > 0.0 && self.tx_power_mw.is_finite()) {
            return Err(Error::Geometry("transmit power must be positive".into()));
        }
        if !(self.noise_power_mw > 0.0 && self.noise_power_mw.is_finite()) {
            return Err(Error::Geometry("noise power must be positive".into()));
        }
        if self.elements > 0 && !(self.ap_irs_distance() > 0.0) {
            return Err(Error::Geometry("AP and IRS coincide".into()));
        }
        for k in 0..self.users() {
            if !(self.user_ap_distance(k) > 0.0) {
                return Err(Error::Geometry(format!("user {k} coincides with the AP")));
            }
            if self.elements > 0 && !(self.user_irs_distance(k) > 0.0) {
                return Err(Error::Geometry(format!("user {k} coincides with the IRS")));
            }
        }
        Ok(())
    }

    /// Mean power gain `E|h|²` of one user→AP channel entry.
    pub fn direct_link_gain(&self, k: usize) -> f64 {
        self.user_link_gain(self.user_ap_distance(k)) * db_to_lin(self.antenna_gain_ap_db)
    }

    /// Mean power gain of one user→IRS channel entry.
    pub fn reflect_link_gain(&self, k: usize) -> f64 {
        self.user_link_gain(self.user_irs_distance(k))
            * db_to_lin(self.antenna_gain_irs_element_db)
    }

    /// Power gain of every entry of the line-of-sight IRS→AP channel.
    pub fn los_link_gain(&self) -> f64 {
        db_to_lin(-self.ref_pathloss_db)
            * self.ap_irs_distance().powf(-self.pathloss_exponent_los)
            * db_to_lin(self.antenna_gain_ap_db)
    }

    fn user_link_gain(&self, d: f64) -> f64 {
        db_to_lin(-self.ref_pathloss_db)
            * d.powf(-self.pathloss_exponent_user)
            * db_to_lin(-self.penetration_loss_db)
            * db_to_lin(self.antenna_gain_user_db)
    }
}

pub(crate) fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}
