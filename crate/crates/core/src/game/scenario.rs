use crate::channel::ChannelParams;
use crate::error::{Error, Result};

/// Physical and game parameters shared by every drone small cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Number of co-channel cells N.
    pub n_dsc: usize,
    /// Own transmit power (W).
    pub p_tx: f64,
    /// Common test transmit power of the interferers (W).
    pub p_test: f64,
    /// Thermal noise power (W).
    pub n0: f64,
    /// Altitude diffusion (m/√s).
    pub sigma: f64,
    /// Speed limit (m/s).
    pub v_max: f64,
    /// Weight of the SINR reward.
    pub omega1: f64,
    /// Weight of the quadratic motion cost.
    pub omega2: f64,
    /// Horizontal distance to the served user (m).
    pub r_serve: f64,
    /// Mean horizontal distance from the served user to the other cells (m).
    /// `None` until measured or estimated.
    pub r_mean: Option<f64>,
    pub channel: ChannelParams,
}

impl ScenarioConfig {
    /// Urban low-altitude-platform scenario.
    ///
    /// Channel constants, speed limit and the 10 dBm transmit power follow
    /// the published urban setting. N, the weights, the serving and mean
    /// distances and the noise floor are calibration values. `sigma` is 0
    /// because `dt = 0.1 s`, `dh = 1 m` and `v_max = 10 m/s` already sit on
    /// the CFL limit.
    pub fn paper_urban() -> Self {
        ScenarioConfig {
            n_dsc: 100,
            p_tx: 0.01,
            p_test: 0.01,
            n0: 1e-13,
            sigma: 0.0,
            v_max: 10.0,
            omega1: 5.0e4,
            omega2: 1.0,
            r_serve: 100.0,
            r_mean: Some(1000.0),
            channel: ChannelParams::urban(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if self.n_dsc < 2 {
            return Err(Error::config("scenario.n_dsc", "must be >= 2"));
        }
        for (key, value) in [
            ("scenario.p_tx", self.p_tx),
            ("scenario.p_test", self.p_test),
            ("scenario.n0", self.n0),
            ("scenario.omega1", self.omega1),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::config(key, "must be finite and >= 0"));
            }
        }
        if !(self.omega2 > 0.0 && self.omega2.is_finite()) {
            return Err(Error::config("scenario.omega2", "must be finite and > 0"));
        }
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return Err(Error::config("scenario.v_max", "must be finite and > 0"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::config("scenario.sigma", "must be finite and >= 0"));
        }
        if !(self.r_serve >= 0.0 && self.r_serve.is_finite()) {
            return Err(Error::config("scenario.r_serve", "must be finite and >= 0"));
        }
        if let Some(r) = self.r_mean {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::config("scenario.r_mean", "must be finite and >= 0"));
            }
        }
        Ok(())
    }

    pub(crate) fn require_r_mean(&self) -> Result<f64> {
        self.r_mean.ok_or_else(|| {
            Error::config(
                "scenario.r_mean",
                "mean inter-cell distance is unset and no measurement was given to estimate it",
            )
        })
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::paper_urban()
    }
}
