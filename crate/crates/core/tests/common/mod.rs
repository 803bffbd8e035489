//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use mfgdsc::channel::ChannelParams;
use mfgdsc::cli::{Overrides, RunManifest};
use mfgdsc::game::Grid;
use rand::Rng;

pub fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

pub fn bundled_manifest_path() -> PathBuf {
    configs_dir().join("paper_manifest.cfg")
}

/// Loads the bundled manifest with output redirected to `out`.
pub fn bundled_manifest(out: PathBuf) -> RunManifest {
    RunManifest::load(
        &bundled_manifest_path(),
        &Overrides {
            out: Some(out),
            seed: None,
        },
    )
    .expect("bundled manifest is valid")
}

/// Mean gain written from the arcsine form of the elevation angle.
pub fn gain_oracle(h: f64, r: f64, ch: &ChannelParams) -> f64 {
    let d = (h * h + r * r).sqrt();
    let theta = (h / d).asin().to_degrees();
    let p = 1.0 / (1.0 + ch.c_env * (-ch.b_env * (theta - ch.c_env)).exp());
    (p + (1.0 - p) * ch.eta) * d.powf(-ch.alpha)
}

/// Draws `n` altitudes from a density row: a cell by its mass, then a
/// uniform position inside the cell.
pub fn sample_altitudes<R: Rng>(row: &[f64], grid: &Grid, n: usize, rng: &mut R) -> Vec<f64> {
    let total: f64 = row.iter().sum();
    (0..n)
        .map(|_| {
            let mut u = rng.random::<f64>() * total;
            let mut cell = row.len() - 1;
            for (i, &m) in row.iter().enumerate() {
                if u < m {
                    cell = i;
                    break;
                }
                u -= m;
            }
            let c = grid.altitude(cell);
            let lo = (c - 0.5 * grid.dh()).max(grid.h_min());
            let hi = (c + 0.5 * grid.dh()).min(grid.h_max());
            lo + rng.random::<f64>() * (hi - lo)
        })
        .collect()
}

pub fn l1(a: &[f64], b: &[f64], dh: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * dh
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}
