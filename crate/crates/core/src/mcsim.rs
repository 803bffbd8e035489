//! Monte-Carlo population of drone small cells.
//!
//! Every agent integrates `dh = v·dt + σ·dW` by Euler–Maruyama and is
//! reflected back into `[h_min, h_max]`. Each agent owns a ChaCha stream
//! selected by `(seed, agent id)`, so results do not depend on how agents are
//! scheduled across threads, and adding agents never perturbs existing paths.
//!
//! Interference at a user is the exact sum over all other agents, each placed
//! at the mean horizontal distance `r̄` from the victim user.

use ndarray::{Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::mean_path_gain;
use crate::error::{Error, Result};
use crate::game::{check_density_row, empirical_mean_field, Grid, ScenarioConfig};
use crate::pde::PolicyField;

/// Velocity rule followed by every simulated agent.
#[derive(Debug, Clone, PartialEq)]
pub enum SimPolicy {
    /// Nearest-cell lookup in a solved policy field.
    Mfg(PolicyField),
    /// Constant descent rate in `[−v_max, 0]` (m/s).
    UniformDescent(f64),
    Static,
}

impl SimPolicy {
    pub fn kind(&self) -> &'static str {
        match self {
            SimPolicy::Mfg(_) => "mfg",
            SimPolicy::UniformDescent(_) => "uniform",
            SimPolicy::Static => "static",
        }
    }

    fn validate(&self, scenario: &ScenarioConfig, grid: &Grid) -> Result<()> {
        match self {
            SimPolicy::Mfg(p) => {
                if p.values().dim() != (grid.t_steps() + 1, grid.n_h()) {
                    return Err(Error::domain("policy field does not match the grid"));
                }
            }
            SimPolicy::UniformDescent(rate) => {
                if !(*rate <= 0.0 && *rate >= -scenario.v_max) {
                    return Err(Error::config(
                        "sim.uniform_rate",
                        format!("descent rate {rate} outside [-{}, 0]", scenario.v_max),
                    ));
                }
            }
            SimPolicy::Static => {}
        }
        Ok(())
    }

    fn velocity(&self, t: usize, h: f64, grid: &Grid) -> f64 {
        match self {
            SimPolicy::Mfg(p) => p.lookup(t, h, grid),
            SimPolicy::UniformDescent(rate) => {
                if grid.nearest_cell_clamped(h) == 0 {
                    rate.max(0.0)
                } else {
                    *rate
                }
            }
            SimPolicy::Static => 0.0,
        }
    }
}

/// One simulated cell.
#[derive(Debug, Clone)]
pub struct AgentState {
    pub id: usize,
    pub altitude: f64,
    rng: ChaCha8Rng,
}

impl AgentState {
    fn spawn(id: usize, seed: u64, cdf: &[f64], grid: &Grid) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id as u64);
        let u: f64 = rng.random();
        let cell = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        let centre = grid.altitude(cell);
        let lo = (centre - 0.5 * grid.dh()).max(grid.h_min());
        let hi = (centre + 0.5 * grid.dh()).min(grid.h_max());
        let altitude = lo + (hi - lo) * rng.random::<f64>();
        AgentState { id, altitude, rng }
    }
}

/// Per-step series of one simulation run, each of length `t_steps + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Empirical density rows.
    pub density: Array2<f64>,
    pub avg_sinr: Vec<f64>,
    /// Mean of `ω₂·v²` over agents for the velocity read at each step.
    pub avg_energy_rate: Vec<f64>,
    pub final_altitudes: Vec<f64>,
}

impl SimResult {
    pub fn time_averaged_sinr(&self) -> f64 {
        self.avg_sinr.iter().sum::<f64>() / self.avg_sinr.len() as f64
    }

    pub fn final_mean_altitude(&self) -> f64 {
        self.final_altitudes.iter().sum::<f64>() / self.final_altitudes.len() as f64
    }

    /// `Σ ω₂·v²·dt` over the steps that move agents.
    pub fn motion_energy(&self, dt: f64) -> f64 {
        let moving = self.avg_energy_rate.len() - 1;
        self.avg_energy_rate[..moving].iter().sum::<f64>() * dt
    }

    pub fn density_row(&self, t: usize) -> &[f64] {
        self.density.row(t).to_slice().expect("standard layout")
    }
}

/// Moves `h` back inside `[lo, hi]` by mirror reflection.
pub fn reflect(mut h: f64, lo: f64, hi: f64) -> f64 {
    while h < lo || h > hi {
        if h < lo {
            h = 2.0 * lo - h;
        } else {
            h = 2.0 * hi - h;
        }
    }
    h
}

/// Average SINR over agents with exact pairwise interference.
pub fn average_sinr(altitudes: &[f64], scenario: &ScenarioConfig) -> Result<f64> {
    if altitudes.len() < 2 {
        return Err(Error::domain(
            "at least two agents are needed for interference",
        ));
    }
    let r_mean = scenario.require_r_mean()?;
    let channel = &scenario.channel;
    let received = altitudes
        .iter()
        .map(|&h| mean_path_gain(h, r_mean, channel).map(|f| scenario.p_test * f))
        .collect::<Result<Vec<_>>>()?;
    // interference of agent k = prefix[k] + suffix[k + 1], both summed by id
    let n = altitudes.len();
    let mut suffix = vec![0.0; n + 1];
    for k in (0..n).rev() {
        suffix[k] = suffix[k + 1] + received[k];
    }
    let mut prefix = 0.0;
    let mut total = 0.0;
    for k in 0..n {
        let signal = scenario.p_tx * mean_path_gain(altitudes[k], scenario.r_serve, channel)?;
        let interference = prefix + suffix[k + 1];
        total += signal / (interference + scenario.n0);
        prefix += received[k];
    }
    Ok(total / n as f64)
}

/// Runs `n_agents` cells from `initial_density` under `policy`.
pub fn simulate(
    n_agents: usize,
    policy: &SimPolicy,
    initial_density: &[f64],
    scenario: &ScenarioConfig,
    grid: &Grid,
    seed: u64,
) -> Result<SimResult> {
    if n_agents < 2 {
        return Err(Error::domain(
            "at least two agents are needed for interference",
        ));
    }
    scenario.validate()?;
    if !(scenario.n0 > 0.0) {
        return Err(Error::config("scenario.n0", "noise power must be > 0"));
    }
    scenario.require_r_mean()?;
    policy.validate(scenario, grid)?;
    check_density_row(initial_density, grid)?;

    let mut cdf = Vec::with_capacity(grid.n_h());
    let mut acc = 0.0;
    for m in initial_density {
        acc += m * grid.dh();
        cdf.push(acc);
    }
    let last = cdf.len() - 1;
    cdf[last] = f64::INFINITY;

    let mut agents: Vec<AgentState> = (0..n_agents)
        .into_par_iter()
        .map(|id| AgentState::spawn(id, seed, &cdf, grid))
        .collect();

    let steps = grid.t_steps();
    let mut density = Array2::zeros((steps + 1, grid.n_h()));
    let mut avg_sinr = Vec::with_capacity(steps + 1);
    let mut avg_energy_rate = Vec::with_capacity(steps + 1);
    let sqrt_dt = grid.dt().sqrt();
    let (lo, hi) = (grid.h_min(), grid.h_max());

    for t in 0..=steps {
        let altitudes: Vec<f64> = agents.iter().map(|a| a.altitude).collect();
        let row = empirical_mean_field(&altitudes, grid)?;
        density.row_mut(t).assign(&ArrayView1::from(&row[..]));
        avg_sinr.push(average_sinr(&altitudes, scenario)?);

        let velocities: Vec<f64> = altitudes
            .iter()
            .map(|&h| policy.velocity(t, h, grid))
            .collect();
        let energy = velocities
            .iter()
            .map(|v| scenario.omega2 * v * v)
            .sum::<f64>()
            / n_agents as f64;
        avg_energy_rate.push(energy);

        if t < steps {
            agents
                .par_iter_mut()
                .zip(velocities.par_iter())
                .for_each(|(agent, &v)| {
                    let xi: f64 = agent.rng.sample(StandardNormal);
                    let next = agent.altitude + v * grid.dt() + scenario.sigma * sqrt_dt * xi;
                    agent.altitude = reflect(next, lo, hi);
                });
        }
    }

    Ok(SimResult {
        density,
        avg_sinr,
        avg_energy_rate,
        final_altitudes: agents.iter().map(|a| a.altitude).collect(),
    })
}

/// Named result of one policy in a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRun {
    pub name: String,
    pub result: SimResult,
}

/// Summary line of one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySummary {
    pub name: String,
    pub mean_sinr: f64,
    pub final_mean_altitude: f64,
    pub motion_energy: f64,
}

/// Simulates every policy under common random numbers (same seed, same
/// initial altitudes, same noise streams).
pub fn compare_policies(
    policies: &[(String, SimPolicy)],
    n_agents: usize,
    initial_density: &[f64],
    scenario: &ScenarioConfig,
    grid: &Grid,
    seed: u64,
) -> Result<Vec<PolicyRun>> {
    if policies.len() < 2 {
        return Err(Error::domain("a comparison needs at least two policies"));
    }
    policies
        .iter()
        .map(|(name, policy)| {
            Ok(PolicyRun {
                name: name.clone(),
                result: simulate(n_agents, policy, initial_density, scenario, grid, seed)?,
            })
        })
        .collect()
}

/// Summary rows ordered by time-averaged SINR, best first (stable on ties).
pub fn summarize(runs: &[PolicyRun], dt: f64) -> Vec<PolicySummary> {
    let mut rows: Vec<PolicySummary> = runs
        .iter()
        .map(|run| PolicySummary {
            name: run.name.clone(),
            mean_sinr: run.result.time_averaged_sinr(),
            final_mean_altitude: run.result.final_mean_altitude(),
            motion_energy: run.result.motion_energy(dt),
        })
        .collect();
    rows.sort_by(|a, b| b.mean_sinr.total_cmp(&a.mean_sinr));
    rows
}
