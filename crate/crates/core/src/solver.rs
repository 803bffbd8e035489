//! Forward-backward fixed-point iteration.
//!
//! Each pass propagates the initial density forward under the current
//! policy, sweeps the cost-to-go backward against that mean field, and moves
//! the policy towards the new optimal control:
//!
//! ```text
//! V ← a·V + b·V*,   a + b = 1
//! ```
//!
//! The loop stops after `max_iterations` passes or once the sup-norm policy
//! change falls to `tol_policy`. Setting `tol_policy = 0` runs every pass.

use crate::error::{Error, Result};
use crate::game::{check_density_row, Grid, MeanField, ScenarioConfig};
use crate::pde::{hjb_backward_sweep, propagate, PolicyField, ValueField};

#[derive(Debug, Clone, PartialEq)]
pub enum InitialPolicy {
    /// Same velocity everywhere (boundary rule applied).
    Constant(f64),
    Field(PolicyField),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub relax_a: f64,
    pub relax_b: f64,
    /// Early-stop threshold on `sup |V_new − V_old|` (m/s).
    pub tol_policy: f64,
    pub initial_policy: InitialPolicy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 50,
            relax_a: 0.5,
            relax_b: 0.5,
            tol_policy: 1e-4,
            initial_policy: InitialPolicy::Constant(0.0),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::config("solver.max_iterations", "must be >= 1"));
        }
        for (key, w) in [
            ("solver.relax_a", self.relax_a),
            ("solver.relax_b", self.relax_b),
        ] {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::config(key, "must lie in [0, 1]"));
            }
        }
        if (self.relax_a + self.relax_b - 1.0).abs() > 1e-12 {
            return Err(Error::config(
                "solver.relax_b",
                "relax_a + relax_b must equal 1",
            ));
        }
        if !(self.tol_policy >= 0.0) {
            return Err(Error::config("solver.tol_policy", "must be >= 0"));
        }
        Ok(())
    }
}

/// Converged (or last) iterate with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Density propagated under `policy`.
    pub meanfield: MeanField,
    /// Cost-to-go against `meanfield`.
    pub value: ValueField,
    pub policy: PolicyField,
    pub iterations_run: usize,
    /// `sup |V_new − V_old|` after each pass.
    pub policy_residual_history: Vec<f64>,
    pub converged: bool,
}

impl Solution {
    /// Whether the residuals over the second half of the run never increase.
    ///
    /// No contraction is guaranteed, so callers should treat `false` as a
    /// warning rather than a failure.
    pub fn residual_tail_monotone(&self) -> bool {
        let h = &self.policy_residual_history;
        let start = h.len() / 2;
        h[start..].windows(2).all(|w| w[1] <= w[0])
    }
}

/// Solves the coupled forward-backward system by relaxed fixed-point
/// iteration.
pub fn solve_mfg(
    initial_density: &[f64],
    scenario: &ScenarioConfig,
    grid: &Grid,
    cfg: &SolverConfig,
) -> Result<Solution> {
    scenario.validate()?;
    cfg.validate()?;
    grid.check_cfl(scenario.v_max, scenario.sigma)?;
    check_density_row(initial_density, grid)?;

    let mut policy = match &cfg.initial_policy {
        InitialPolicy::Constant(v) => PolicyField::constant(*v, grid, scenario.v_max)?,
        InitialPolicy::Field(p) => PolicyField::new(p.values().clone(), grid, scenario.v_max)?,
    };

    let wrap = |iteration: usize| {
        move |e: Error| Error::Iteration {
            iteration,
            source: Box::new(e),
        }
    };

    let mut history = Vec::with_capacity(cfg.max_iterations);
    let mut converged = false;
    for iteration in 1..=cfg.max_iterations {
        let meanfield =
            propagate(initial_density, &policy, scenario.sigma, grid).map_err(wrap(iteration))?;
        let (_, target) =
            hjb_backward_sweep(&meanfield, scenario, grid).map_err(wrap(iteration))?;

        let mut next = policy.values().clone();
        next.zip_mut_with(target.values(), |v, &star| {
            *v = cfg.relax_a * *v + cfg.relax_b * star;
        });
        let residual = next
            .iter()
            .zip(policy.values().iter())
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        policy = PolicyField::from_raw(next);
        history.push(residual);
        if residual <= cfg.tol_policy {
            converged = true;
            break;
        }
    }

    let iterations_run = history.len();
    let meanfield =
        propagate(initial_density, &policy, scenario.sigma, grid).map_err(wrap(iterations_run))?;
    let (value, _) =
        hjb_backward_sweep(&meanfield, scenario, grid).map_err(wrap(iterations_run))?;
    Ok(Solution {
        meanfield,
        value,
        policy,
        iterations_run,
        policy_residual_history: history,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::uniform_density;
    use crate::pde::fpk_step;

    fn grid() -> Grid {
        Grid::new(1000.0, 1100.0, 1.0, 0.1, 100).unwrap()
    }

    #[test]
    fn relaxation_weights_must_sum_to_one() {
        let bad = SolverConfig {
            relax_a: 0.3,
            relax_b: 0.6,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config { .. })));
        let bad = SolverConfig {
            max_iterations: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(SolverConfig::default().validate().is_ok());
    }

    #[test]
    fn no_reward_leaves_pure_diffusion() {
        let g = Grid::new(1000.0, 1100.0, 2.0, 0.05, 20).unwrap();
        let s = ScenarioConfig {
            omega1: 0.0,
            sigma: 1.0,
            ..ScenarioConfig::paper_urban()
        };
        let mut m0 = vec![0.0; g.n_h()];
        m0[10] = 0.5 / g.dh();
        m0[40] = 0.5 / g.dh();
        let sol = solve_mfg(&m0, &s, &g, &SolverConfig::default()).unwrap();
        assert!(sol.converged);
        assert!(sol.policy.values().iter().all(|&v| v == 0.0));
        let mut expected = m0.clone();
        for t in 1..=g.t_steps() {
            expected = fpk_step(&expected, &vec![0.0; g.n_h()], 1.0, &g).unwrap();
            assert_eq!(sol.meanfield.row(t), &expected[..]);
        }
    }

    #[test]
    fn frozen_point_mass_without_noise() {
        let g = grid();
        let s = ScenarioConfig {
            omega1: 0.0,
            sigma: 0.0,
            ..ScenarioConfig::paper_urban()
        };
        let mut m0 = vec![0.0; g.n_h()];
        m0[33] = 1.0;
        let sol = solve_mfg(&m0, &s, &g, &SolverConfig::default()).unwrap();
        for t in 0..=g.t_steps() {
            assert_eq!(sol.meanfield.row(t), &m0[..]);
        }
        assert!(sol.value.values().iter().all(|&u| u == 0.0));
    }

    #[test]
    fn history_matches_iterations() {
        let g = grid();
        let s = ScenarioConfig::paper_urban();
        let cfg = SolverConfig {
            max_iterations: 3,
            tol_policy: 0.0,
            ..Default::default()
        };
        let sol = solve_mfg(&uniform_density(&g), &s, &g, &cfg).unwrap();
        assert_eq!(sol.iterations_run, 3);
        assert_eq!(sol.policy_residual_history.len(), 3);
        assert!(!sol.converged);
    }

    #[test]
    fn converged_residual_below_tolerance() {
        let g = grid();
        let s = ScenarioConfig::paper_urban();
        let cfg = SolverConfig::default();
        let sol = solve_mfg(&uniform_density(&g), &s, &g, &cfg).unwrap();
        assert!(sol.converged, "history {:?}", sol.policy_residual_history);
        assert!(*sol.policy_residual_history.last().unwrap() <= cfg.tol_policy);
        assert!(sol.residual_tail_monotone());
    }

    #[test]
    fn every_iterate_is_a_density() {
        let g = grid();
        let s = ScenarioConfig::paper_urban();
        let sol = solve_mfg(&uniform_density(&g), &s, &g, &SolverConfig::default()).unwrap();
        for t in 0..=g.t_steps() {
            check_density_row(sol.meanfield.row(t), &g).unwrap();
        }
        let v_max = s.v_max;
        assert!(sol.policy.values().iter().all(|v| v.abs() <= v_max));
    }

    #[test]
    fn deterministic() {
        let g = grid();
        let s = ScenarioConfig::paper_urban();
        let a = solve_mfg(&uniform_density(&g), &s, &g, &SolverConfig::default()).unwrap();
        let b = solve_mfg(&uniform_density(&g), &s, &g, &SolverConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_unnormalised_initial_density() {
        let g = grid();
        let s = ScenarioConfig::paper_urban();
        let m0 = vec![1.0; g.n_h()];
        assert!(matches!(
            solve_mfg(&m0, &s, &g, &SolverConfig::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rejects_cfl_violating_grid() {
        let g = grid();
        let s = ScenarioConfig {
            sigma: 1.0,
            ..ScenarioConfig::paper_urban()
        };
        assert!(matches!(
            solve_mfg(&uniform_density(&g), &s, &g, &SolverConfig::default()),
            Err(Error::Stability { .. })
        ));
    }

    #[test]
    fn urban_scenario_descends() {
        let g = grid();
        let s = ScenarioConfig::paper_urban();
        let sol = solve_mfg(&uniform_density(&g), &s, &g, &SolverConfig::default()).unwrap();
        assert!(sol.policy.values().iter().all(|&v| v <= 0.0));
        for t in 0..g.t_steps() {
            assert!(sol.meanfield.mean_altitude(t + 1, &g) <= sol.meanfield.mean_altitude(t, &g));
        }
    }
}
