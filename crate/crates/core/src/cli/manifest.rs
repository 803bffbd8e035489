//! Run manifests.
//!
//! A manifest is a config file whose keys are merged on top of an optional
//! scenario file named by `run.scenario` (resolved relative to the manifest).
//! Every value is checked before anything is computed.
//!
//! | key | unit | default |
//! |---|---|---|
//! | `run.scenario` | path | none |
//! | `run.output` | directory | `out` |
//! | `grid.h_min`, `grid.h_max`, `grid.dh` | m | required |
//! | `grid.dt` | s | required |
//! | `grid.t_steps` | steps | required |
//! | `scenario.n_dsc` | cells | required |
//! | `scenario.p_tx`, `scenario.p_test`, `scenario.n0` | W | required |
//! | `scenario.sigma` | m/√s | required |
//! | `scenario.v_max` | m/s | required |
//! | `scenario.omega1`, `scenario.omega2` | 1, s²/m² | required |
//! | `scenario.r_serve`, `scenario.r_mean` | m | `r_mean` optional |
//! | `estimate.p_received` | W | none |
//! | `estimate.own_altitude` | m | none |
//! | `estimate.interferers` | m, comma list | none |
//! | `channel.alpha`, `channel.eta` | 1 | required |
//! | `channel.b_env`, `channel.c_env` | 1/deg, 1 | required |
//! | `channel.carrier_freq_hz` | Hz | 2e9 |
//! | `solver.max_iterations` | passes | 50 |
//! | `solver.relax_a`, `solver.relax_b` | 1 | 0.5, 0.5 |
//! | `solver.tol_policy` | m/s | 1e-4 |
//! | `solver.initial_velocity` | m/s | 0 |
//! | `sim.agents` | agents | `scenario.n_dsc` |
//! | `sim.seed` | integer | 0 |
//! | `sim.policies` | comma list of `mfg`, `uniform`, `static` | all three |
//! | `sim.uniform_rate` | m/s | `-v_max / 5` |
//!
//! When `scenario.r_mean` is absent, the three `estimate.*` keys must be
//! given and the distance is recovered from the measured power.

use std::fs;
use std::path::{Path, PathBuf};

use super::config::ConfigMap;
use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::game::{estimate_mean_distance, Grid, ScenarioConfig};
use crate::solver::{InitialPolicy, SolverConfig};

const KNOWN_KEYS: &[&str] = &[
    "run.scenario",
    "run.output",
    "grid.h_min",
    "grid.h_max",
    "grid.dh",
    "grid.dt",
    "grid.t_steps",
    "scenario.n_dsc",
    "scenario.p_tx",
    "scenario.p_test",
    "scenario.n0",
    "scenario.sigma",
    "scenario.v_max",
    "scenario.omega1",
    "scenario.omega2",
    "scenario.r_serve",
    "scenario.r_mean",
    "estimate.p_received",
    "estimate.own_altitude",
    "estimate.interferers",
    "channel.alpha",
    "channel.eta",
    "channel.b_env",
    "channel.c_env",
    "channel.carrier_freq_hz",
    "solver.max_iterations",
    "solver.relax_a",
    "solver.relax_b",
    "solver.tol_policy",
    "solver.initial_velocity",
    "sim.agents",
    "sim.seed",
    "sim.policies",
    "sim.uniform_rate",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Mfg,
    Uniform,
    Static,
}

impl PolicyKind {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "mfg" => Some(PolicyKind::Mfg),
            "uniform" => Some(PolicyKind::Uniform),
            "static" => Some(PolicyKind::Static),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PolicyKind::Mfg => "mfg",
            PolicyKind::Uniform => "uniform",
            PolicyKind::Static => "static",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub agents: usize,
    pub seed: u64,
    /// Column names paired with policy kinds; repeated kinds get `_2`, `_3`…
    pub policies: Vec<(String, PolicyKind)>,
    pub uniform_rate: f64,
}

/// Command-line overrides applied on top of the manifest file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub path: PathBuf,
    pub scenario_path: Option<PathBuf>,
    pub scenario: ScenarioConfig,
    pub grid: Grid,
    pub solver: SolverConfig,
    pub sim: SimSpec,
    pub output: PathBuf,
}

impl RunManifest {
    /// Reads, merges and validates a manifest. The output directory is
    /// created and probed for writability.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let own = ConfigMap::load(path)?;
        let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();

        let scenario_path = own.get::<String>("run.scenario")?.map(|p| base_dir.join(p));
        let cfg = match &scenario_path {
            Some(p) => {
                if !p.is_file() {
                    return Err(Error::config(
                        "run.scenario",
                        format!("{} does not exist", p.display()),
                    ));
                }
                ConfigMap::load(p)?.overlay(own)
            }
            None => own,
        };
        if let Some(key) = cfg.keys().find(|k| !KNOWN_KEYS.contains(k)) {
            return Err(Error::config(key, "unknown key"));
        }

        let grid = parse_grid(&cfg)?;
        let scenario = parse_scenario(&cfg)?;
        grid.check_cfl(scenario.v_max, scenario.sigma)?;
        let solver = parse_solver(&cfg, scenario.v_max)?;
        let sim = parse_sim(&cfg, &scenario, overrides.seed)?;

        let output = match &overrides.out {
            Some(dir) => dir.clone(),
            None => base_dir.join(cfg.get_or("run.output", "out".to_string())?),
        };
        ensure_writable(&output)?;

        Ok(RunManifest {
            path: path.to_path_buf(),
            scenario_path,
            scenario,
            grid,
            solver,
            sim,
            output,
        })
    }
}

fn parse_grid(cfg: &ConfigMap) -> Result<Grid> {
    let h_min = cfg.require("grid.h_min")?;
    let h_max = cfg.require("grid.h_max")?;
    let dh = cfg.require("grid.dh")?;
    let dt = cfg.require("grid.dt")?;
    let t_steps = cfg.require("grid.t_steps")?;
    Grid::new(h_min, h_max, dh, dt, t_steps)
}

fn parse_scenario(cfg: &ConfigMap) -> Result<ScenarioConfig> {
    let channel = ChannelParams {
        alpha: cfg.require("channel.alpha")?,
        eta: cfg.require("channel.eta")?,
        b_env: cfg.require("channel.b_env")?,
        c_env: cfg.require("channel.c_env")?,
        carrier_freq_hz: cfg.get_or("channel.carrier_freq_hz", 2.0e9)?,
    };
    let mut scenario = ScenarioConfig {
        n_dsc: cfg.require("scenario.n_dsc")?,
        p_tx: cfg.require("scenario.p_tx")?,
        p_test: cfg.require("scenario.p_test")?,
        n0: cfg.require("scenario.n0")?,
        sigma: cfg.require("scenario.sigma")?,
        v_max: cfg.require("scenario.v_max")?,
        omega1: cfg.require("scenario.omega1")?,
        omega2: cfg.require("scenario.omega2")?,
        r_serve: cfg.require("scenario.r_serve")?,
        r_mean: cfg.get("scenario.r_mean")?,
        channel,
    };
    scenario.validate()?;

    if scenario.r_mean.is_none() {
        let measured: Option<f64> = cfg.get("estimate.p_received")?;
        let Some(measured) = measured else {
            return Err(Error::config(
                "scenario.r_mean",
                "missing, and no estimate.p_received to recover it from",
            ));
        };
        let own = cfg.require("estimate.own_altitude")?;
        let interferers: Vec<f64> = cfg
            .list("estimate.interferers")?
            .ok_or_else(|| Error::config("estimate.interferers", "missing required key"))?;
        let r = estimate_mean_distance(measured, own, &scenario, &interferers)
            .map_err(|e| Error::config("estimate.p_received", e.to_string()))?;
        scenario.r_mean = Some(r);
    }
    Ok(scenario)
}

fn parse_solver(cfg: &ConfigMap, v_max: f64) -> Result<SolverConfig> {
    let d = SolverConfig::default();
    let v0: f64 = cfg.get_or("solver.initial_velocity", 0.0)?;
    if !(v0.abs() <= v_max) {
        return Err(Error::config(
            "solver.initial_velocity",
            format!("must lie in [-{v_max}, {v_max}]"),
        ));
    }
    let solver = SolverConfig {
        max_iterations: cfg.get_or("solver.max_iterations", d.max_iterations)?,
        relax_a: cfg.get_or("solver.relax_a", d.relax_a)?,
        relax_b: cfg.get_or("solver.relax_b", d.relax_b)?,
        tol_policy: cfg.get_or("solver.tol_policy", d.tol_policy)?,
        initial_policy: InitialPolicy::Constant(v0),
    };
    solver.validate()?;
    Ok(solver)
}

fn parse_sim(cfg: &ConfigMap, scenario: &ScenarioConfig, seed: Option<u64>) -> Result<SimSpec> {
    let agents = cfg.get_or("sim.agents", scenario.n_dsc)?;
    if agents < 2 {
        return Err(Error::config("sim.agents", "must be >= 2"));
    }
    let seed = match seed {
        Some(s) => s,
        None => cfg.get_or("sim.seed", 0u64)?,
    };
    let names: Vec<String> = cfg
        .list("sim.policies")?
        .unwrap_or_else(|| vec!["mfg".into(), "uniform".into(), "static".into()]);
    if names.is_empty() {
        return Err(Error::config(
            "sim.policies",
            "at least one policy is required",
        ));
    }
    let mut policies: Vec<(String, PolicyKind)> = Vec::with_capacity(names.len());
    for name in &names {
        let kind = PolicyKind::parse(name)
            .ok_or_else(|| Error::config("sim.policies", format!("unknown policy `{name}`")))?;
        let seen = policies.iter().filter(|(_, k)| *k == kind).count();
        let column = if seen == 0 {
            kind.label().to_string()
        } else {
            format!("{}_{}", kind.label(), seen + 1)
        };
        policies.push((column, kind));
    }
    let uniform_rate = cfg.get_or("sim.uniform_rate", -scenario.v_max / 5.0)?;
    if !(uniform_rate <= 0.0 && uniform_rate >= -scenario.v_max) {
        return Err(Error::config(
            "sim.uniform_rate",
            format!("must lie in [-{}, 0]", scenario.v_max),
        ));
    }
    Ok(SimSpec {
        agents,
        seed,
        policies,
        uniform_rate,
    })
}

fn ensure_writable(dir: &Path) -> Result<()> {
    let fail = |e: std::io::Error| Error::config("run.output", format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(fail)?;
    let probe = dir.join(format!(".mfgdsc-probe{}", std::process::id()));
    fs::write(&probe, b"").map_err(fail)?;
    fs::remove_file(&probe).map_err(fail)
}
