//! Day-ahead line de-energization planning under wildfire risk, with optional
//! fairness terms that spread load shedding across buses over a season.
//!
//! The pieces, bottom up:
//!
//! - [`network`]: grid model, JSON case parsing and validation.
//! - [`ingest`]: line risk from rasters or tables, demand profiles, forecast
//!   noise and the daily shed-versus-risk weight.
//! - [`model`] and [`solver`]: a solver-neutral MILP representation with LP
//!   export, solved by HiGHS or a built-in branch-and-bound.
//! - [`psps`]: the daily switching model and an independent residual check.
//! - [`fairness`]: the shed tally and the three fairness formulations.
//! - [`sim`]: the rolling day-by-day simulation and its outputs.
//! - [`metrics`]: evaluation metrics and beta sweeps.
//! - [`synthetic`]: deterministic fixtures and synthetic seasons.

pub mod error;
pub mod fairness;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod network;
pub mod psps;
pub mod sim;
pub mod solver;
pub mod synthetic;

pub use error::{Error, Result};
pub use fairness::{build_opt_psps_fair, FairContext, FairModel, FairnessMethod, ShedTally};
pub use ingest::{AlphaSchedule, DayInputs, DemandProfile, RiskRaster};
pub use network::{parse_case, validate, Network};
pub use psps::{build_opt_psps, verify_solution, DispatchSolution, ObjectiveContext, PspsModel};
pub use sim::{run_baseline, run_fair, RealtimePolicy, ScenarioConfig, SimulationResult};
pub use solver::{Backend, SolveStatus, SolverConfig};
