//! Solver library for the two-period, budget-constrained principal-agent
//! model with uniformly distributed per-period costs.
//!
//! An agent faces costs `A` and `B` in two periods, both uniform on `[0, 1]`
//! but possibly dependent. A reward rule `(x, y, z)` pays `x` for performing
//! in period 1, `y` for performing only in period 2 and `z` on top of `x` for
//! a second performance, subject to `x + z <= w`. The crate computes the
//! agent's sequential best response, the expected number of performances,
//! closed-form optima, joint optimisation over rules and FGM dependence,
//! and a seeded Monte Carlo oracle for all of the above.
//!
//! Modules:
//! - [`model`]: domain types, agent decisions and scheme evaluation.
//! - [`copulas`]: cost kernels (IID, FGM, the two constructed extremal
//!   kernels, and grid densities) and dependence diagnostics.
//! - [`analytic`]: closed-form optimal rules and FGM threshold formulas.
//! - [`optimizer`]: grid + golden-section search and parameter sweeps.
//! - [`montecarlo`]: seeded simulation of the game.
//! - [`cli`]: the `scheme-lab` command-line front end.

pub mod analytic;
pub mod cli;
pub mod copulas;
mod error;
pub mod model;
pub mod montecarlo;
pub mod optimizer;
pub mod output;
pub mod quadrature;
pub mod rng;
pub mod verify;

pub use copulas::{CostKernel, FgmParameter, GridDensity};
pub use error::{Error, Result};
pub use model::{Budget, Interval, RewardRule, SchemeEvaluation};
pub use montecarlo::SimulationReport;
pub use optimizer::{OptimizationResult, SearchConfig};
