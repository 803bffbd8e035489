//! Mean-field game altitude control for dense drone small cells.
//!
//! Each cell picks a vertical velocity that trades its downlink SINR
//! against motion cost, while interference from every other cell enters
//! only through the altitude density. The crate solves the resulting
//! backward cost-to-go / forward density system on a finite-difference grid
//! and checks the policy against a seeded agent simulation.
//!
//! ```
//! use mfgdsc::game::{uniform_density, Grid, ScenarioConfig};
//! use mfgdsc::solver::{solve_mfg, SolverConfig};
//!
//! let grid = Grid::new(1000.0, 1100.0, 1.0, 0.1, 100)?;
//! let scenario = ScenarioConfig::paper_urban();
//! let sol = solve_mfg(&uniform_density(&grid), &scenario, &grid, &SolverConfig::default())?;
//! assert!(sol.converged);
//! assert!(sol.policy.values().iter().all(|&v| v <= 0.0));
//! # Ok::<(), mfgdsc::Error>(())
//! ```
//!
//! Modules, bottom up: [`channel`] (air-to-ground gain), [`game`] (grid,
//! scenario, interference and cost), [`pde`] (density and cost-to-go
//! kernels), [`solver`] (fixed-point loop), [`mcsim`] (agent simulation)
//! and [`cli`] (manifests, CSV output, commands).

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod error;
pub mod game;
pub mod mcsim;
pub mod pde;
pub mod solver;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/game.md")]
    mod game {}
    #[doc = include_str!("../../../book/src/pde.md")]
    mod pde {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
