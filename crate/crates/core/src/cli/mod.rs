//! Experiment runner behind the `mfgdsc` binary.
//!
//! `solve` writes the converged fields, `simulate` replays the configured
//! policies with seeded agents, and `compare` condenses the simulation
//! output into a ranked summary. Every file lands in the output directory.

pub mod config;
pub mod manifest;
pub mod table;

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::game::{uniform_density, Grid};
use crate::mcsim::{simulate, SimPolicy};
use crate::pde::PolicyField;
use crate::solver::solve_mfg;

pub use manifest::{Overrides, PolicyKind, RunManifest, SimSpec};
use table::{fmt_num, fmt_time, parse_num, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;

pub const THREADS_ENV: &str = "MFGDSC_THREADS";

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_divergence() {
        EXIT_DIVERGENCE
    } else {
        EXIT_INPUT
    }
}

/// Sizes the global worker pool from `MFGDSC_THREADS` when it is set.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n >= 1).ok_or_else(|| {
        Error::config(
            THREADS_ENV,
            format!("expected a positive integer, got `{raw}`"),
        )
    })?;
    // A second initialisation in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn altitude_header(first: &[&str], grid: &Grid) -> Vec<String> {
    first
        .iter()
        .map(|s| s.to_string())
        .chain(grid.altitudes().into_iter().map(fmt_num))
        .collect()
}

fn field_table(values: &Array2<f64>, grid: &Grid) -> Table {
    let mut t = Table::new(altitude_header(&["time_s"], grid));
    for (step, row) in values.rows().into_iter().enumerate() {
        t.push(
            std::iter::once(fmt_time(step, grid.dt()))
                .chain(row.iter().map(|&x| fmt_num(x)))
                .collect(),
        );
    }
    t
}

/// Solves the game and writes `meanfield.csv`, `value.csv`, `policy.csv`
/// and `diagnostics.csv`.
pub fn cmd_solve(m: &RunManifest, quiet: bool) -> Result<()> {
    let initial = uniform_density(&m.grid);
    let sol = solve_mfg(&initial, &m.scenario, &m.grid, &m.solver)?;

    field_table(sol.meanfield.values(), &m.grid).write_atomic(&m.output.join("meanfield.csv"))?;
    field_table(sol.value.values(), &m.grid).write_atomic(&m.output.join("value.csv"))?;
    field_table(sol.policy.values(), &m.grid).write_atomic(&m.output.join("policy.csv"))?;
    let mut diag = Table::new(vec!["iteration".into(), "policy_residual".into()]);
    for (k, r) in sol.policy_residual_history.iter().enumerate() {
        diag.push(vec![(k + 1).to_string(), fmt_num(*r)]);
    }
    diag.write_atomic(&m.output.join("diagnostics.csv"))?;

    if !quiet {
        let last = sol.policy_residual_history.last().copied().unwrap_or(0.0);
        let state = if sol.converged {
            "converged"
        } else {
            "stopped"
        };
        eprintln!(
            "solve: {state} after {} iterations (residual {last:e}); wrote {}",
            sol.iterations_run,
            m.output.display()
        );
        if !sol.residual_tail_monotone() {
            eprintln!("solve: warning: residuals increased during the second half of the run");
        }
    }
    Ok(())
}

/// Reads a policy table written by [`cmd_solve`], checking it against the grid.
pub fn read_policy(path: &Path, grid: &Grid, v_max: f64) -> Result<PolicyField> {
    let table = Table::read(path)?;
    let bad = |reason: String| Error::Io {
        path: path.display().to_string(),
        reason,
    };
    if table.header.len() != grid.n_h() + 1 || table.rows.len() != grid.t_steps() + 1 {
        return Err(bad(format!(
            "expected {} rows of {} columns for this grid",
            grid.t_steps() + 1,
            grid.n_h() + 1
        )));
    }
    for (i, cell) in table.header[1..].iter().enumerate() {
        if (parse_num(cell, path)? - grid.altitude(i)).abs() > 1e-9 {
            return Err(bad(format!(
                "altitude column {cell} does not match the grid"
            )));
        }
    }
    let mut values = Array2::zeros((grid.t_steps() + 1, grid.n_h()));
    for (t, row) in table.rows.iter().enumerate() {
        for (i, cell) in row[1..].iter().enumerate() {
            values[(t, i)] = parse_num(cell, path)?;
        }
    }
    PolicyField::new(values, grid, v_max)
}

/// Simulates every configured policy and writes `sim_density.csv`,
/// `sim_sinr.csv` and `sim_energy.csv`.
pub fn cmd_simulate(m: &RunManifest, quiet: bool) -> Result<()> {
    let grid = &m.grid;
    let policy_path = m.output.join("policy.csv");
    let mut mfg = None;
    let mut policies = Vec::with_capacity(m.sim.policies.len());
    for (name, kind) in &m.sim.policies {
        let policy = match kind {
            PolicyKind::Static => SimPolicy::Static,
            PolicyKind::Uniform => SimPolicy::UniformDescent(m.sim.uniform_rate),
            PolicyKind::Mfg => {
                if mfg.is_none() {
                    if !policy_path.is_file() {
                        return Err(Error::Io {
                            path: policy_path.display().to_string(),
                            reason: "policy file missing; run `solve` first".into(),
                        });
                    }
                    mfg = Some(read_policy(&policy_path, grid, m.scenario.v_max)?);
                }
                SimPolicy::Mfg(mfg.clone().expect("loaded above"))
            }
        };
        policies.push((name.clone(), policy));
    }

    let initial = uniform_density(grid);
    let mut density = Table::new(altitude_header(&["policy", "time_s"], grid));
    let names: Vec<String> = policies.iter().map(|(n, _)| n.clone()).collect();
    let series_header: Vec<String> = std::iter::once("time_s".to_string())
        .chain(names.iter().cloned())
        .collect();
    let mut sinr_cols = Vec::with_capacity(policies.len());
    let mut energy_cols = Vec::with_capacity(policies.len());
    for (name, policy) in &policies {
        let run = simulate(
            m.sim.agents,
            policy,
            &initial,
            &m.scenario,
            grid,
            m.sim.seed,
        )?;
        for t in 0..=grid.t_steps() {
            density.push(
                [name.clone(), fmt_time(t, grid.dt())]
                    .into_iter()
                    .chain(run.density_row(t).iter().map(|&x| fmt_num(x)))
                    .collect(),
            );
        }
        if !quiet {
            eprintln!(
                "simulate: {name}: time-averaged SINR {:e}",
                run.time_averaged_sinr()
            );
        }
        sinr_cols.push(run.avg_sinr);
        energy_cols.push(run.avg_energy_rate);
    }

    let series = |cols: &[Vec<f64>]| {
        let mut t = Table::new(series_header.clone());
        for step in 0..=grid.t_steps() {
            t.push(
                std::iter::once(fmt_time(step, grid.dt()))
                    .chain(cols.iter().map(|c| fmt_num(c[step])))
                    .collect(),
            );
        }
        t
    };
    density.write_atomic(&m.output.join("sim_density.csv"))?;
    series(&sinr_cols).write_atomic(&m.output.join("sim_sinr.csv"))?;
    series(&energy_cols).write_atomic(&m.output.join("sim_energy.csv"))?;
    if !quiet {
        eprintln!(
            "simulate: {} agents, seed {}; wrote {}",
            m.sim.agents,
            m.sim.seed,
            m.output.display()
        );
    }
    Ok(())
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub policy: String,
    pub mean_sinr: f64,
    /// Mean altitude of the final binned density (m).
    pub final_mean_altitude: f64,
    /// `Σ ω₂·v²·dt` averaged over agents.
    pub motion_energy: f64,
}

fn read_series(path: &Path, steps: usize) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let table = Table::read(path)?;
    if table.header.first().map(String::as_str) != Some("time_s") || table.rows.len() != steps + 1 {
        return Err(Error::Io {
            path: path.display().to_string(),
            reason: format!("expected a time_s column and {} rows", steps + 1),
        });
    }
    let names = table.header[1..].to_vec();
    let mut cols = vec![Vec::with_capacity(steps + 1); names.len()];
    for row in &table.rows {
        for (c, cell) in row[1..].iter().enumerate() {
            cols[c].push(parse_num(cell, path)?);
        }
    }
    Ok((names, cols))
}

/// Builds the summary rows from the simulation output, best SINR first.
pub fn summarize_outputs(m: &RunManifest) -> Result<Vec<SummaryRow>> {
    let grid = &m.grid;
    let steps = grid.t_steps();
    let (names, sinr) = read_series(&m.output.join("sim_sinr.csv"), steps)?;
    let (energy_names, energy) = read_series(&m.output.join("sim_energy.csv"), steps)?;
    if energy_names != names {
        return Err(Error::Io {
            path: m.output.join("sim_energy.csv").display().to_string(),
            reason: "policy columns differ from sim_sinr.csv".into(),
        });
    }

    let density_path = m.output.join("sim_density.csv");
    let density = Table::read(&density_path)?;
    let final_time = fmt_time(steps, grid.dt());
    let altitudes = grid.altitudes();

    let mut rows = Vec::with_capacity(names.len());
    for (k, name) in names.iter().enumerate() {
        let last = density
            .rows
            .iter()
            .find(|r| r.first() == Some(name) && r.get(1) == Some(&final_time))
            .ok_or_else(|| Error::Io {
                path: density_path.display().to_string(),
                reason: format!("no final row for policy `{name}`"),
            })?;
        if last.len() != altitudes.len() + 2 {
            return Err(Error::Io {
                path: density_path.display().to_string(),
                reason: "row width does not match the grid".into(),
            });
        }
        let mut mean = 0.0;
        for (cell, h) in last[2..].iter().zip(&altitudes) {
            mean += parse_num(cell, &density_path)? * h * grid.dh();
        }
        rows.push(SummaryRow {
            policy: name.clone(),
            mean_sinr: sinr[k].iter().sum::<f64>() / sinr[k].len() as f64,
            final_mean_altitude: mean,
            motion_energy: energy[k][..steps].iter().sum::<f64>() * grid.dt(),
        });
    }
    rows.sort_by(|a, b| b.mean_sinr.total_cmp(&a.mean_sinr));
    Ok(rows)
}

/// Fixed-width rendering of the summary.
pub fn format_summary(rows: &[SummaryRow]) -> String {
    let mut s = format!(
        "{:<12} {:>14} {:>14} {:>14}\n",
        "policy", "mean_sinr", "final_h_m", "motion_energy"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<12} {:>14.6e} {:>14.3} {:>14.6e}\n",
            r.policy, r.mean_sinr, r.final_mean_altitude, r.motion_energy
        ));
    }
    s
}

/// Writes `summary.csv` and prints the table to stdout.
pub fn cmd_compare(m: &RunManifest, quiet: bool) -> Result<()> {
    let rows = summarize_outputs(m)?;
    let mut t = Table::new(vec![
        "policy".into(),
        "mean_sinr".into(),
        "final_mean_altitude_m".into(),
        "motion_energy".into(),
    ]);
    for r in &rows {
        t.push(vec![
            r.policy.clone(),
            fmt_num(r.mean_sinr),
            fmt_num(r.final_mean_altitude),
            fmt_num(r.motion_energy),
        ]);
    }
    t.write_atomic(&m.output.join("summary.csv"))?;
    print!("{}", format_summary(&rows));
    if !quiet {
        eprintln!("compare: wrote {}", m.output.join("summary.csv").display());
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Simulate,
    Compare,
}

/// Loads the manifest and runs one command, returning the exit code.
/// Errors are reported on stderr.
pub fn run(command: Command, manifest: &Path, overrides: &Overrides, quiet: bool) -> i32 {
    let result = configure_threads()
        .and_then(|()| RunManifest::load(manifest, overrides))
        .and_then(|m| match command {
            Command::Solve => cmd_solve(&m, quiet),
            Command::Simulate => cmd_simulate(&m, quiet),
            Command::Compare => cmd_compare(&m, quiet),
        });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
