//! MILP solving behind a backend-neutral contract.
//!
//! Two backends satisfy the same contract: HiGHS (default) and a built-in
//! best-first branch-and-bound over LP relaxations. Every MIP solution is
//! polished by fixing the binaries at their rounded values and re-solving the
//! continuous restriction, so returned points satisfy the rows to LP accuracy
//! rather than to the looser integrality tolerance.

mod bnb;
mod highs_backend;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LinearModel, VarKind};

/// Environment variable selecting the default backend (`highs` or `bnb`).
pub const BACKEND_ENV: &str = "PSPS_SOLVER";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Highs,
    BranchAndBound,
}

impl Default for Backend {
    /// `PSPS_SOLVER` when set to a known backend, HiGHS otherwise.
    fn default() -> Self {
        std::env::var(BACKEND_ENV)
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(Backend::Highs)
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "highs" => Ok(Backend::Highs),
            "bnb" | "branch-and-bound" | "branch_and_bound" => Ok(Backend::BranchAndBound),
            other => Err(Error::InvalidParameter(format!("unknown solver backend {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub relative_mip_gap: f64,
    /// Wall-clock limit in seconds.
    pub time_limit: f64,
    pub seed: u64,
    pub backend: Backend,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            relative_mip_gap: 0.01,
            time_limit: 300.0,
            seed: 0,
            backend: Backend::default(),
        }
    }
}

impl SolverConfig {
    pub fn with_gap(mut self, gap: f64) -> Self {
        self.relative_mip_gap = gap;
        self
    }

    pub fn check(&self) -> Result<()> {
        if !(self.relative_mip_gap > 0.0 && self.relative_mip_gap < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "relative MIP gap must lie in (0, 1), got {}",
                self.relative_mip_gap
            )));
        }
        if !(self.time_limit > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time limit must be positive, got {}",
                self.time_limit
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    OptimalWithinGap,
    TimeLimit,
}

/// Primal point for a [`LinearModel`], in variable order.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub best_bound: f64,
    pub status: SolveStatus,
}

impl Solution {
    /// `(objective - bound) / max(|objective|, 1e-9)`.
    pub fn relative_gap(&self) -> f64 {
        (self.objective - self.best_bound).max(0.0) / self.objective.abs().max(1e-9)
    }
}

/// What a backend hands back before polishing. `bound` excludes the
/// objective constant.
#[derive(Debug, Clone)]
pub(crate) struct RawSolution {
    pub values: Vec<f64>,
    pub bound: f64,
    pub timed_out: bool,
}

/// Solves `model` to the configured relative gap.
///
/// Infeasible models return [`Error::Infeasible`]; a time limit without an
/// incumbent is a [`Error::Solver`] error; a time limit with an incumbent is a
/// solution with [`SolveStatus::TimeLimit`].
pub fn solve(model: &LinearModel, cfg: &SolverConfig) -> Result<Solution> {
    cfg.check()?;
    if !model.is_well_formed() {
        return Err(Error::Solver("model references unknown variables or has non-finite data".into()));
    }
    if model.vars.is_empty() {
        if model.rows.iter().any(|r| r.violation(&[]) > 0.0) {
            return Err(Error::Infeasible);
        }
        let c = model.objective.constant;
        return Ok(Solution {
            values: Vec::new(),
            objective: c,
            best_bound: c,
            status: SolveStatus::OptimalWithinGap,
        });
    }
    let raw = solve_raw(model, cfg)?;
    let has_binaries = model.vars.iter().any(|v| v.kind == VarKind::Binary);
    let values = if has_binaries {
        polish(model, cfg, raw.values)?
    } else {
        raw.values
    };
    let objective = model.objective_value(&values);
    let best_bound = (raw.bound + model.objective.constant).min(objective);
    Ok(Solution {
        values,
        objective,
        best_bound,
        status: if raw.timed_out {
            SolveStatus::TimeLimit
        } else {
            SolveStatus::OptimalWithinGap
        },
    })
}

fn solve_raw(model: &LinearModel, cfg: &SolverConfig) -> Result<RawSolution> {
    match cfg.backend {
        Backend::Highs => highs_backend::solve(model, cfg),
        Backend::BranchAndBound => bnb::solve(model, cfg),
    }
}

/// Solves the continuous restriction of `model` (binaries treated as
/// continuous within their bounds).
pub(crate) fn solve_lp(model: &LinearModel, cfg: &SolverConfig) -> Result<RawSolution> {
    match cfg.backend {
        Backend::Highs => highs_backend::solve_lp(model, cfg),
        Backend::BranchAndBound => bnb::solve_lp(model, cfg),
    }
}

fn polish(model: &LinearModel, cfg: &SolverConfig, mut values: Vec<f64>) -> Result<Vec<f64>> {
    let mut fixed = model.clone();
    for (i, v) in model.vars.iter().enumerate() {
        if v.kind == VarKind::Binary {
            let r = values[i].round().clamp(v.lower.ceil(), v.upper.floor());
            values[i] = r;
            fixed.vars[i].lower = r;
            fixed.vars[i].upper = r;
            fixed.vars[i].kind = VarKind::Continuous;
        }
    }
    match solve_lp(&fixed, cfg) {
        Ok(lp) if !lp.timed_out => Ok(lp.values),
        // Rounding already gave an integral point; keep it if the re-solve
        // cannot improve on it.
        _ => Ok(values),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{RowTag, Sense};

    fn backends() -> [SolverConfig; 2] {
        let base = SolverConfig::default().with_gap(1e-6);
        [
            SolverConfig {
                backend: Backend::Highs,
                ..base
            },
            SolverConfig {
                backend: Backend::BranchAndBound,
                ..base
            },
        ]
    }

    /// max x + 2(y1 + y2) s.t. x + y1 + y2 <= 3.5, x - y1 - y2 >= 1.
    fn small_mip() -> LinearModel {
        let mut m = LinearModel::new();
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        let y1 = m.add_binary("y1");
        let y2 = m.add_binary("y2");
        m.objective.add(x, -1.0).add(y1, -2.0).add(y2, -2.0);
        m.add_row(RowTag::Balance, "c1", vec![(x, 1.0), (y1, 1.0), (y2, 1.0)], Sense::Le, 3.5);
        m.add_row(RowTag::Balance, "c2", vec![(x, 1.0), (y1, -1.0), (y2, -1.0)], Sense::Ge, 1.0);
        m
    }

    #[test]
    fn small_mip_matches_hand_solution() {
        // y1 + y2 = 1 gives x = 2.5, objective -4.5; both on needs x >= 3
        // but x <= 1.5.
        for cfg in backends() {
            let s = solve(&small_mip(), &cfg).unwrap();
            assert!((s.objective + 4.5).abs() < 1e-7, "{:?}: {}", cfg.backend, s.objective);
            assert!(s.best_bound <= s.objective + 1e-12);
            assert_eq!(s.values[1] + s.values[2], 1.0);
        }
    }

    #[test]
    fn empty_model_is_trivially_optimal() {
        for cfg in backends() {
            let s = solve(&LinearModel::new(), &cfg).unwrap();
            assert_eq!(s.objective, 0.0);
            assert_eq!(s.status, SolveStatus::OptimalWithinGap);
        }
    }

    #[test]
    fn infeasible_model_is_an_error() {
        for cfg in backends() {
            let mut m = LinearModel::new();
            let x = m.add_continuous("x", 0.0, 1.0);
            let z = m.add_binary("z");
            m.add_row(RowTag::Balance, "c", vec![(x, 1.0), (z, 1.0)], Sense::Ge, 3.0);
            assert!(matches!(solve(&m, &cfg), Err(Error::Infeasible)), "{:?}", cfg.backend);
        }
    }

    #[test]
    fn config_is_checked() {
        let bad = SolverConfig::default().with_gap(0.0);
        assert!(solve(&small_mip(), &bad).is_err());
    }

    #[test]
    fn backend_names_parse() {
        assert_eq!("HiGHS".parse::<Backend>().unwrap(), Backend::Highs);
        assert_eq!("bnb".parse::<Backend>().unwrap(), Backend::BranchAndBound);
        assert!("cplex".parse::<Backend>().is_err());
    }
}
