//! Game-level quantities: the lattice, the scenario, the mean field and the
//! running cost a generic cell pays for its altitude and velocity.

mod grid;
mod scenario;

pub use grid::Grid;
pub use scenario::ScenarioConfig;

use ndarray::{Array2, ArrayView1};

use crate::channel::{mean_path_gain, received_power};
use crate::error::{Error, Result};

/// Mass tolerance of a density row: `|Σ m·dh − 1| <= MASS_TOL`.
pub const MASS_TOL: f64 = 1e-8;

/// Altitude density of the population over time, `(t_steps + 1) × n_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanField {
    values: Array2<f64>,
}

impl MeanField {
    pub fn new(values: Array2<f64>, grid: &Grid) -> Result<Self> {
        if values.dim() != (grid.t_steps() + 1, grid.n_h()) {
            return Err(Error::domain(format!(
                "mean field has shape {:?}, grid needs {:?}",
                values.dim(),
                (grid.t_steps() + 1, grid.n_h())
            )));
        }
        for row in values.rows() {
            check_density_row(row.as_slice().expect("standard layout"), grid)?;
        }
        Ok(MeanField { values })
    }

    /// Every time row equal to `row`.
    pub fn constant(row: &[f64], grid: &Grid) -> Result<Self> {
        check_density_row(row, grid)?;
        let mut values = Array2::zeros((grid.t_steps() + 1, grid.n_h()));
        for mut r in values.rows_mut() {
            r.assign(&ArrayView1::from(row));
        }
        Ok(MeanField { values })
    }

    pub(crate) fn from_raw(values: Array2<f64>) -> Self {
        MeanField { values }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn row(&self, t: usize) -> &[f64] {
        self.values.row(t).to_slice().expect("standard layout")
    }

    /// `E[h]` at time row `t`.
    pub fn mean_altitude(&self, t: usize, grid: &Grid) -> f64 {
        self.row(t)
            .iter()
            .enumerate()
            .map(|(i, m)| m * grid.altitude(i) * grid.dh())
            .sum()
    }
}

/// Checks nonnegativity and unit mass of a density row.
pub fn check_density_row(row: &[f64], grid: &Grid) -> Result<()> {
    if row.len() != grid.n_h() {
        return Err(Error::domain(format!(
            "density row has {} cells, grid has {}",
            row.len(),
            grid.n_h()
        )));
    }
    if let Some(i) = row.iter().position(|m| !(*m >= 0.0) || !m.is_finite()) {
        return Err(Error::domain(format!(
            "density row has invalid entry {} at cell {i}",
            row[i]
        )));
    }
    let mass: f64 = row.iter().sum::<f64>() * grid.dh();
    if (mass - 1.0).abs() > MASS_TOL {
        return Err(Error::domain(format!(
            "density row has mass {mass}, expected 1"
        )));
    }
    Ok(())
}

/// Equal mass in every altitude cell.
pub fn uniform_density(grid: &Grid) -> Vec<f64> {
    vec![1.0 / (grid.n_h() as f64 * grid.dh()); grid.n_h()]
}

/// Normalised nearest-cell histogram of a set of altitudes.
pub fn empirical_mean_field(altitudes: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    if altitudes.is_empty() {
        return Err(Error::domain("cannot build a mean field from zero agents"));
    }
    let mut counts = vec![0usize; grid.n_h()];
    for &h in altitudes {
        counts[grid.nearest_cell(h)?] += 1;
    }
    let scale = 1.0 / (altitudes.len() as f64 * grid.dh());
    Ok(counts.into_iter().map(|c| c as f64 * scale).collect())
}

/// SINR at the served user.
pub fn sinr(p_signal: f64, p_interference: f64, n0: f64) -> Result<f64> {
    if !(n0 > 0.0) {
        return Err(Error::domain(format!("noise power must be > 0, got {n0}")));
    }
    if !(p_signal >= 0.0 && p_interference >= 0.0) {
        return Err(Error::domain("powers must be >= 0"));
    }
    Ok(p_signal / (p_interference + n0))
}

/// Mean-field interference `(N−1)·P̄·Σ_h m(h)·f(h, r̄)·dh` seen by a generic user.
pub fn mfa_interference(m_row: &[f64], scenario: &ScenarioConfig, grid: &Grid) -> Result<f64> {
    check_density_row(m_row, grid)?;
    CostModel::new(scenario, grid)?.interference(m_row)
}

/// Running cost rate `−ω₁·SINR(h) + ω₂·v²` against the density row `m_row`.
pub fn running_cost(
    v: f64,
    h: f64,
    m_row: &[f64],
    scenario: &ScenarioConfig,
    grid: &Grid,
) -> Result<f64> {
    if !(v.abs() <= scenario.v_max) {
        return Err(Error::domain(format!(
            "|v| = {} exceeds v_max = {}",
            v.abs(),
            scenario.v_max
        )));
    }
    if !(h >= grid.h_min() && h <= grid.h_max()) {
        return Err(Error::Range {
            altitude: h,
            h_min: grid.h_min(),
            h_max: grid.h_max(),
        });
    }
    let interference = mfa_interference(m_row, scenario, grid)?;
    let signal = received_power(scenario.p_tx, h, scenario.r_serve, &scenario.channel)?;
    Ok(-scenario.omega1 * sinr(signal, interference, scenario.n0)? + scenario.omega2 * v * v)
}

/// Per-cell gains of a scenario on a grid, so that sweeps evaluate the
/// channel model once per cell instead of once per cell and time row.
#[derive(Debug, Clone)]
pub struct CostModel {
    signal: Vec<f64>,
    interferer_gain: Vec<f64>,
    interferers: f64,
    p_test: f64,
    n0: f64,
    omega1: f64,
    omega2: f64,
    dh: f64,
}

impl CostModel {
    pub fn new(scenario: &ScenarioConfig, grid: &Grid) -> Result<Self> {
        scenario.validate()?;
        if !(scenario.n0 > 0.0) {
            return Err(Error::config("scenario.n0", "noise power must be > 0"));
        }
        let r_mean = scenario.require_r_mean()?;
        let altitudes = grid.altitudes();
        let signal = altitudes
            .iter()
            .map(|&h| received_power(scenario.p_tx, h, scenario.r_serve, &scenario.channel))
            .collect::<Result<Vec<_>>>()?;
        let interferer_gain = altitudes
            .iter()
            .map(|&h| mean_path_gain(h, r_mean, &scenario.channel))
            .collect::<Result<Vec<_>>>()?;
        Ok(CostModel {
            signal,
            interferer_gain,
            interferers: (scenario.n_dsc - 1) as f64,
            p_test: scenario.p_test,
            n0: scenario.n0,
            omega1: scenario.omega1,
            omega2: scenario.omega2,
            dh: grid.dh(),
        })
    }

    /// Interference power against a density row (not re-validated).
    pub fn interference(&self, m_row: &[f64]) -> Result<f64> {
        let integral: f64 = m_row
            .iter()
            .zip(&self.interferer_gain)
            .map(|(m, f)| m * f)
            .sum::<f64>()
            * self.dh;
        Ok(self.interferers * self.p_test * integral)
    }

    /// SINR of a cell centred on altitude index `i`.
    pub fn sinr_at(&self, i: usize, interference: f64) -> f64 {
        self.signal[i] / (interference + self.n0)
    }

    /// Cost rate at cell `i` with velocity `v`.
    pub fn cost(&self, i: usize, v: f64, interference: f64) -> f64 {
        -self.omega1 * self.sinr_at(i, interference) + self.omega2 * v * v
    }

    pub fn omega2(&self) -> f64 {
        self.omega2
    }
}

/// Recovers the mean inter-cell distance `r̄` from a total received power
/// measurement.
///
/// The own-link power `P·f(own_altitude, r_serve)` is removed from the
/// measurement and the remainder is matched against
/// `Σ_j P̄·f(h_j, r̄)` by bisection; the sum is strictly decreasing in `r̄`.
pub fn estimate_mean_distance(
    p_total_received: f64,
    own_altitude: f64,
    scenario: &ScenarioConfig,
    interferer_altitudes: &[f64],
) -> Result<f64> {
    const REL_TOL: f64 = 1e-10;
    if interferer_altitudes.is_empty() {
        return Err(Error::domain("no interferer altitudes given"));
    }
    let own = received_power(
        scenario.p_tx,
        own_altitude,
        scenario.r_serve,
        &scenario.channel,
    )?;
    let residual = p_total_received - own;
    if !(residual > 0.0) {
        return Err(Error::NoInterference { residual });
    }
    let forward = |r: f64| -> Result<f64> {
        let mut total = 0.0;
        for &h in interferer_altitudes {
            total += scenario.p_test * mean_path_gain(h, r, &scenario.channel)?;
        }
        Ok(total)
    };

    let supremum = forward(0.0)?;
    if residual > supremum {
        return Err(Error::InfeasibleMeasurement { residual, supremum });
    }
    if residual == supremum {
        return Ok(0.0);
    }

    let mut lo = 0.0;
    let mut hi = interferer_altitudes.iter().cloned().fold(1.0, f64::max);
    let mut expansions = 0;
    while forward(hi)? > residual {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 1100 || !hi.is_finite() {
            return Err(Error::InfeasibleMeasurement { residual, supremum });
        }
    }
    for _ in 0..400 {
        if hi - lo <= REL_TOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if forward(mid)? > residual {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
