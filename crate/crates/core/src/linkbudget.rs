//! Link budget along the vehicle trajectory.
//!
//! All powers are linear milliwatts internally; dBm and dB only appear at the
//! boundary ([`LinkBudget::derive`] and I/O).

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::ScenarioParams;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Thermal noise floor (dBm/Hz).
pub const NOISE_FLOOR_DBM_HZ: f64 = -174.0;

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Constants derived once per scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Path gain constant in mW * m^n (EIRP, shadow margin and free-space term).
    pub a_lin: f64,
    /// Noise power (mW).
    pub noise_mw: f64,
    /// Elevation beamwidth needed to cover both lanes (rad).
    pub theta_el: f64,
    /// Slant offset between RSU and trajectory at closest approach (m).
    pub d_el: f64,
    /// Carrier wavelength (m).
    pub lambda: f64,
}

impl LinkBudget {
    pub fn derive(params: &ScenarioParams) -> Result<Self> {
        params.validate()?;
        let dh = params.h_rsu - params.h_vehicle;
        let d_el = (params.d_0 * params.d_0 + dh * dh).sqrt();
        let lambda = SPEED_OF_LIGHT / params.carrier_freq;
        let a_db = params.eirp_dbm - params.shadow_margin_db
            + 10.0 * params.pathloss_exp * (lambda / (4.0 * PI)).log10();
        let theta_el = ((params.d_0 + 2.0 * params.lane_width) / params.h_rsu).atan()
            - (params.d_0 / params.h_rsu).atan();
        let noise_dbm =
            NOISE_FLOOR_DBM_HZ + 10.0 * params.bandwidth.log10() + params.noise_figure_db;
        Ok(Self {
            a_lin: db_to_linear(a_db),
            noise_mw: db_to_linear(noise_dbm),
            theta_el,
            d_el,
            lambda,
        })
    }

    /// Receive gain of a beam with azimuth width `theta_b`, sidelobes neglected.
    pub fn rx_gain(&self, theta_b: f64) -> Result<f64> {
        if !(theta_b.is_finite() && theta_b > 0.0) {
            return Err(Error::Domain {
                what: "beamwidth",
                value: theta_b,
                expected: "theta_b > 0",
            });
        }
        Ok(self.gain(theta_b))
    }

    #[inline]
    fn gain(&self, theta_b: f64) -> f64 {
        PI * PI / (self.theta_el * theta_b)
    }

    /// Received power (mW) at time `t` after entry, using a beam of width `theta_b`.
    pub fn rx_power(&self, t: f64, theta_b: f64, params: &ScenarioParams) -> Result<f64> {
        let gain = self.rx_gain(theta_b)?;
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::Domain {
                what: "time",
                value: t,
                expected: "t >= 0",
            });
        }
        Ok(self.a_lin * gain * self.path_factor(params.v * t, params))
    }

    /// Shannon capacity (bit/s) at time `t` with a beam of width `theta_b`.
    pub fn capacity(&self, t: f64, theta_b: f64, params: &ScenarioParams) -> Result<f64> {
        let p = self.rx_power(t, theta_b, params)?;
        Ok(params.bandwidth * (1.0 + p / self.noise_mw).log2())
    }

    /// `[(x - d_l/2)^2 + d_el^2]^(-n/2)`
    #[inline]
    fn path_factor(&self, x: f64, params: &ScenarioParams) -> f64 {
        let u = x - 0.5 * params.d_l;
        let r2 = u * u + self.d_el * self.d_el;
        if params.pathloss_exp == 2.0 {
            1.0 / r2
        } else {
            r2.powf(-0.5 * params.pathloss_exp)
        }
    }

    /// Capacity profile of one beam as a function of road position, with the
    /// beam-dependent constants folded in. Used by the hot integration loops.
    pub fn beam_channel(&self, theta_b: f64, params: &ScenarioParams) -> Result<BeamChannel> {
        let gain = self.rx_gain(theta_b)?;
        Ok(BeamChannel {
            snr_scale: self.a_lin * gain / self.noise_mw,
            half_len: 0.5 * params.d_l,
            d_el_sq: self.d_el * self.d_el,
            pathloss_exp: params.pathloss_exp,
            bandwidth: params.bandwidth,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BeamChannel {
    snr_scale: f64,
    half_len: f64,
    d_el_sq: f64,
    pathloss_exp: f64,
    bandwidth: f64,
}

impl BeamChannel {
    #[inline]
    pub fn snr_at(&self, x: f64) -> f64 {
        let u = x - self.half_len;
        let r2 = u * u + self.d_el_sq;
        if self.pathloss_exp == 2.0 {
            self.snr_scale / r2
        } else {
            self.snr_scale * r2.powf(-0.5 * self.pathloss_exp)
        }
    }

    /// Capacity (bit/s) with the vehicle at road position `x`.
    #[inline]
    pub fn capacity_at(&self, x: f64) -> f64 {
        self.bandwidth * self.snr_at(x).ln_1p() * std::f64::consts::LOG2_E
    }
}
