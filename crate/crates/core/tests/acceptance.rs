//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use mfgdsc::channel::{received_power, ChannelParams};
use mfgdsc::game::{
    estimate_mean_distance, mfa_interference, uniform_density, Grid, MeanField, ScenarioConfig,
};
use mfgdsc::mcsim::{simulate, SimPolicy};
use mfgdsc::pde::{fpk_step, hjb_backward_sweep, optimal_velocity};
use mfgdsc::solver::{solve_mfg, Solution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{bundled_manifest, gain_oracle, l1, median, sample_altitudes};

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn bundled_solution() -> (Grid, ScenarioConfig, Solution, Vec<f64>) {
    let dir = tempfile::tempdir().unwrap();
    let m = bundled_manifest(dir.path().to_path_buf());
    let initial = uniform_density(&m.grid);
    let sol = solve_mfg(&initial, &m.scenario, &m.grid, &m.solver).unwrap();
    (m.grid, m.scenario, sol, initial)
}

fn mass_conservation() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut negatives = 0usize;
    for _ in 0..10_000 {
        let n_h = rng.random_range(3..80);
        let dh = [0.25, 0.5, 1.0, 2.0, 5.0][rng.random_range(0..5)];
        let h_min = rng.random_range(1..2000) as f64;
        let sigma = rng.random_range(0.0..=2.0);
        let v_max = rng.random_range(0.1..20.0);
        let rate = v_max / dh + sigma * sigma / (dh * dh);
        let dt = rng.random_range(0.05..=1.0) / rate;
        let grid = Grid::new(h_min, h_min + (n_h - 1) as f64 * dh, dh, dt, 1).unwrap();

        let mut m: Vec<f64> = (0..n_h)
            .map(|_| {
                if rng.random_bool(0.2) {
                    0.0
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        m[rng.random_range(0..n_h)] += 0.1;
        let mass: f64 = m.iter().sum::<f64>() * dh;
        m.iter_mut().for_each(|x| *x /= mass);
        let v: Vec<f64> = (0..n_h).map(|_| rng.random_range(-v_max..=v_max)).collect();

        let before: f64 = m.iter().sum::<f64>() * dh;
        let next = fpk_step(&m, &v, sigma, &grid).unwrap();
        let after: f64 = next.iter().sum::<f64>() * dh;
        worst = worst.max((after - before).abs());
        negatives += next.iter().filter(|&&x| x < 0.0).count();
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-12 && negatives == 0 && elapsed < Duration::from_secs(10),
        format!(
            "10000 steps, max |Δmass| = {worst:.2e}, negative cells = {negatives}, {elapsed:.2?}"
        ),
    )
}

fn dp_oracle() -> Outcome {
    let start = Instant::now();
    let grid = Grid::new(1000.0, 1100.0, 25.0, 2.5, 4).unwrap();
    let s = ScenarioConfig {
        omega1: 1.0e6,
        sigma: 0.0,
        ..ScenarioConfig::paper_urban()
    };
    let row = uniform_density(&grid);
    let mf = MeanField::constant(&row, &grid).unwrap();
    let (value, _) = hjb_backward_sweep(&mf, &s, &grid).unwrap();

    let ch = &s.channel;
    let r_mean = s.r_mean.unwrap();
    let n = grid.n_h();
    let interference: f64 = (s.n_dsc - 1) as f64
        * s.p_test
        * (0..n)
            .map(|j| row[j] * gain_oracle(grid.altitude(j), r_mean, ch))
            .sum::<f64>()
        * grid.dh();
    let cost = |i: usize, v: f64| {
        let sig = s.p_tx * gain_oracle(grid.altitude(i), s.r_serve, ch);
        -s.omega1 * sig / (interference + s.n0) + s.omega2 * v * v
    };

    // Exhaustive enumeration of every move sequence in {−1, 0, +1} cells.
    fn best(
        t: usize,
        i: usize,
        steps: usize,
        n: usize,
        dt: f64,
        speed: f64,
        cost: &dyn Fn(usize, f64) -> f64,
    ) -> f64 {
        if t == steps {
            return 0.0;
        }
        let mut out = f64::INFINITY;
        for mv in [-1i64, 0, 1] {
            let j = i as i64 + mv;
            if j < 0 || j >= n as i64 {
                continue;
            }
            let here = dt * cost(i, mv as f64 * speed);
            out = out.min(here + best(t + 1, j as usize, steps, n, dt, speed, cost));
        }
        out
    }
    let speed = grid.dh() / grid.dt();
    let mut worst = 0.0f64;
    for i in 0..n {
        let dp = best(0, i, grid.t_steps(), n, grid.dt(), speed, &cost);
        let rel = (value.row(0)[i] - dp).abs() / dp.abs();
        worst = worst.max(rel);
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 0.05 && elapsed < Duration::from_secs(1),
        format!("5 cells x 4 steps, max relative gap {worst:.3e}, {elapsed:.2?}"),
    )
}

fn control_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grid = Grid::new(1000.0, 1020.0, 1.0, 0.05, 1).unwrap();
    let (omega2, v_max) = (1.0, 10.0);
    let k = 10_000;
    let spacing = 2.0 * v_max / (k - 1) as f64;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let scale = 10f64.powf(rng.random_range(-1.0..2.0));
        let u: Vec<f64> = (0..grid.n_h())
            .map(|_| scale * rng.random_range(-1.0..1.0))
            .collect();
        let got = optimal_velocity(&u, omega2, v_max, &grid);
        for i in 0..grid.n_h() {
            let last = grid.n_h() - 1;
            let back = if i == 0 {
                0.0
            } else {
                (u[i] - u[i - 1]) / grid.dh()
            };
            let fwd = if i == last {
                0.0
            } else {
                (u[i + 1] - u[i]) / grid.dh()
            };
            let (lo, hi) = match i {
                0 => (0.0, v_max),
                _ if i == last => (-v_max, 0.0),
                _ => (-v_max, v_max),
            };
            let mut arg = f64::NAN;
            let mut min = f64::INFINITY;
            for j in 0..k {
                let v = -v_max + j as f64 * spacing;
                if v < lo - 1e-12 || v > hi + 1e-12 {
                    continue;
                }
                let h = omega2 * v * v + v * if v < 0.0 { back } else { fwd };
                if h < min {
                    min = h;
                    arg = v;
                }
            }
            worst = worst.max((got[i] - arg).abs() / spacing);
        }
    }
    outcome(
        worst <= 1.0,
        format!("100 rows, worst deviation {worst:.3} grid spacings"),
    )
}

fn mfa_fidelity() -> Outcome {
    let (grid, base, sol, _) = bundled_solution();
    let s = ScenarioConfig {
        n_dsc: 10_000,
        ..base
    };
    let r_mean = s.r_mean.unwrap();
    let mut parts = Vec::new();
    for (label, t) in [("t=0", 0), ("t=T/2", grid.t_steps() / 2)] {
        let row = sol.meanfield.row(t);
        let mfa = mfa_interference(row, &s, &grid).unwrap();
        let gaps: Vec<f64> = (0..5)
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let hs = sample_altitudes(row, &grid, s.n_dsc - 1, &mut rng);
                let direct: f64 = hs
                    .iter()
                    .map(|&h| s.p_test * gain_oracle(h, r_mean, &s.channel))
                    .sum();
                (mfa - direct).abs() / direct
            })
            .collect();
        parts.push((label, median(gaps)));
    }
    let pass = parts.iter().all(|&(_, g)| g <= 0.02);
    let detail = parts
        .iter()
        .map(|(l, g)| format!("{l}: median gap {g:.2e}"))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, format!("N = 10000, {detail}"))
}

fn particles_vs_pde() -> Outcome {
    let start = Instant::now();
    let (grid, s, sol, initial) = bundled_solution();
    let run = simulate(
        10_000,
        &SimPolicy::Mfg(sol.policy.clone()),
        &initial,
        &s,
        &grid,
        0,
    )
    .unwrap();
    let (mut worst, mut at) = (0.0f64, 0);
    for t in 0..=grid.t_steps() {
        let d = l1(run.density_row(t), sol.meanfield.row(t), grid.dh());
        if d > worst {
            worst = d;
            at = t;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 0.1 && elapsed < Duration::from_secs(120),
        format!("10000 agents, worst L1 {worst:.4} at step {at}, {elapsed:.2?}"),
    )
}

fn density_shape() -> Outcome {
    let (grid, _, sol, _) = bundled_solution();
    let mf = &sol.meanfield;
    let top = grid.n_h() - 1;
    let steps = grid.t_steps();
    let top_nonincreasing = (0..steps).all(|t| mf.row(t + 1)[top] <= mf.row(t)[top]);
    let ratio = mf.row(steps)[top] / mf.row(0)[top];
    let bottom_nondecreasing = (0..steps).all(|t| mf.row(t + 1)[0] >= mf.row(t)[0]);
    let mean_decreasing =
        (0..steps).all(|t| mf.mean_altitude(t + 1, &grid) < mf.mean_altitude(t, &grid));
    outcome(
        top_nonincreasing && ratio < 0.1 && bottom_nondecreasing && mean_decreasing,
        format!(
            "top cell final/initial {ratio:.2e} (nonincreasing: {top_nonincreasing}), bottom nondecreasing: {bottom_nondecreasing}, E[h] {:.2} -> {:.2} strictly decreasing: {mean_decreasing}",
            mf.mean_altitude(0, &grid),
            mf.mean_altitude(steps, &grid)
        ),
    )
}

fn policy_shape() -> Outcome {
    let (grid, _, sol, _) = bundled_solution();
    let p = &sol.policy;
    let all_descend = p.values().iter().all(|&v| v <= 0.0);
    let speed = |t: usize| p.row(t).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let steps = grid.t_steps();
    let pairs: Vec<bool> = (steps / 2..steps)
        .map(|t| speed(t + 1) <= speed(t))
        .collect();
    let share = pairs.iter().filter(|&&ok| ok).count() as f64 / pairs.len() as f64;
    outcome(
        all_descend && share >= 0.8,
        format!(
            "policy <= 0 everywhere: {all_descend}, max|v| nonincreasing on {:.0}% of {} pairs in the second half",
            100.0 * share,
            pairs.len()
        ),
    )
}

fn sinr_ordering() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let m = bundled_manifest(dir.path().to_path_buf());
    let initial = uniform_density(&m.grid);
    let sol = solve_mfg(&initial, &m.scenario, &m.grid, &m.solver).unwrap();
    let policies = [
        SimPolicy::Mfg(sol.policy),
        SimPolicy::UniformDescent(m.sim.uniform_rate),
        SimPolicy::Static,
    ];
    let mut ok = 0;
    let mut lines = Vec::new();
    for seed in 0..5 {
        let avg: Vec<f64> = policies
            .iter()
            .map(|p| {
                simulate(m.sim.agents, p, &initial, &m.scenario, &m.grid, seed)
                    .unwrap()
                    .time_averaged_sinr()
            })
            .collect();
        if avg[0] >= avg[1] && avg[1] >= avg[2] {
            ok += 1;
        }
        lines.push(format!("{:.4}/{:.4}/{:.4}", avg[0], avg[1], avg[2]));
    }
    outcome(
        ok == 5,
        format!(
            "{ok}/5 seeds ordered mfg >= uniform >= static [{}]",
            lines.join(" ")
        ),
    )
}

fn run_cli(args: &[&str], out: &Path, threads: &str) -> bool {
    Command::new(env!("CARGO_BIN_EXE_mfgdsc"))
        .args(args)
        .arg("--manifest")
        .arg(common::bundled_manifest_path())
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .env("MFGDSC_THREADS", threads)
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, threads) in [(a.path(), "1"), (b.path(), "4")] {
        for cmd in ["solve", "simulate"] {
            if !run_cli(&[cmd], dir, threads) {
                return outcome(false, format!("`{cmd}` failed"));
            }
        }
    }
    let files = [
        "meanfield.csv",
        "value.csv",
        "policy.csv",
        "diagnostics.csv",
        "sim_density.csv",
        "sim_sinr.csv",
        "sim_energy.csv",
    ];
    let differing: Vec<&str> = files
        .iter()
        .copied()
        .filter(|f| fs::read(a.path().join(f)).ok() != fs::read(b.path().join(f)).ok())
        .collect();
    outcome(
        differing.is_empty(),
        format!(
            "{} CSVs compared across reruns with 1 and 4 workers, differing: {differing:?}",
            files.len()
        ),
    )
}

fn distance_round_trip() -> Outcome {
    let s = ScenarioConfig::paper_urban();
    let ch: ChannelParams = s.channel;
    let own_altitude = 1050.0;
    let interferers: Vec<f64> = (0..99).map(|k| 1000.0 + 100.0 * k as f64 / 98.0).collect();
    let own = received_power(s.p_tx, own_altitude, s.r_serve, &ch).unwrap();
    let mut worst = 0.0f64;
    for r in [200.0, 800.0, 3000.0] {
        let rest: f64 = interferers
            .iter()
            .map(|&h| s.p_test * gain_oracle(h, r, &ch))
            .sum();
        let est = estimate_mean_distance(own + rest, own_altitude, &s, &interferers).unwrap();
        worst = worst.max((est - r).abs());
    }
    outcome(
        worst <= 1e-6,
        format!("r in {{200, 800, 3000}} m, worst error {worst:.2e} m"),
    )
}

fn main() {
    let criteria: [(u32, &str, Check); 10] = [
        (1, "mass conservation", mass_conservation),
        (2, "dynamic-programming oracle", dp_oracle),
        (3, "control consistency", control_consistency),
        (4, "mean-field interference fidelity", mfa_fidelity),
        (5, "particles vs density", particles_vs_pde),
        (6, "density evolution shape", density_shape),
        (7, "policy shape", policy_shape),
        (8, "SINR ordering of policies", sinr_ordering),
        (9, "CLI determinism", determinism),
        (10, "distance estimation round trip", distance_round_trip),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, name, check) in criteria {
        let o = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {n:>2} ({name}): {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
