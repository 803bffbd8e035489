//! Air-to-ground propagation.
//!
//! A link between a drone small cell at altitude `h` and a ground user at
//! horizontal distance `r` is line-of-sight with a probability that grows
//! with the elevation angle θ (in degrees):
//!
//! ```text
//! P_LoS(θ) = 1 / (1 + C·exp(−B·(θ − C)))
//! ```
//!
//! The mean gain mixes the LoS branch `|X|^−α` with the attenuated NLoS
//! branch `η·|X|^−α`, where `|X|² = h² + r²`.

use crate::error::{Error, Result};

/// Propagation constants of the environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Path-loss exponent.
    pub alpha: f64,
    /// Extra NLoS attenuation, `0 < eta <= 1`.
    pub eta: f64,
    /// Environment constant B (per degree).
    pub b_env: f64,
    /// Environment constant C.
    pub c_env: f64,
    /// Carrier frequency in Hz. Not used by the gain model.
    pub carrier_freq_hz: f64,
}

impl ChannelParams {
    /// Urban constants: α = 2, η = 0.05, B = 0.03, C = 10 at 2 GHz.
    pub const fn urban() -> Self {
        ChannelParams {
            alpha: 2.0,
            eta: 0.05,
            b_env: 0.03,
            c_env: 10.0,
            carrier_freq_hz: 2.0e9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::config("channel.alpha", "must be finite and >= 0"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::config("channel.eta", "must lie in (0, 1]"));
        }
        if !(self.b_env >= 0.0 && self.b_env.is_finite()) {
            return Err(Error::config("channel.b_env", "must be finite and >= 0"));
        }
        if !(self.c_env > 0.0 && self.c_env.is_finite()) {
            return Err(Error::config("channel.c_env", "must be finite and > 0"));
        }
        Ok(())
    }
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self::urban()
    }
}

/// Elevation angle in degrees of a transmitter at altitude `h` seen from a
/// ground point at horizontal distance `r`. Exactly 90 when `r == 0`.
pub fn elevation_angle_deg(h: f64, r: f64) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::domain(format!("altitude must be positive, got {h}")));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::domain(format!(
            "horizontal distance must be >= 0, got {r}"
        )));
    }
    if r == 0.0 {
        return Ok(90.0);
    }
    Ok((h / r).atan().to_degrees())
}

/// Probability that the link is line-of-sight.
pub fn los_probability(h: f64, r: f64, params: &ChannelParams) -> Result<f64> {
    let theta = elevation_angle_deg(h, r)?;
    Ok(los_from_angle(theta, params))
}

#[inline]
pub(crate) fn los_from_angle(theta_deg: f64, params: &ChannelParams) -> f64 {
    1.0 / (1.0 + params.c_env * (-params.b_env * (theta_deg - params.c_env)).exp())
}

/// Probability-weighted mean path gain `f(h, r)`.
pub fn mean_path_gain(h: f64, r: f64, params: &ChannelParams) -> Result<f64> {
    let d2 = h * h + r * r;
    if !(d2 > 0.0) {
        return Err(Error::domain("degenerate geometry: h² + r² = 0"));
    }
    let p_los = los_probability(h, r, params)?;
    let spread = d2.powf(-0.5 * params.alpha);
    Ok(p_los * spread + (1.0 - p_los) * params.eta * spread)
}

/// Mean received power at the user for transmit power `p_tx` (watts).
pub fn received_power(p_tx: f64, h: f64, r: f64, params: &ChannelParams) -> Result<f64> {
    if !(p_tx >= 0.0) {
        return Err(Error::domain(format!(
            "transmit power must be >= 0, got {p_tx}"
        )));
    }
    Ok(p_tx * mean_path_gain(h, r, params)?)
}
