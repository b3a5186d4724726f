use std::num::NonZeroU32;

use highs::{HighsModelStatus, RowProblem, Sense as HighsSense};

use super::{RawSolution, SolverConfig};
use crate::error::{Error, Result};
use crate::model::{LinearModel, Sense, VarKind};

pub(super) fn solve(model: &LinearModel, cfg: &SolverConfig) -> Result<RawSolution> {
    run(model, cfg, true)
}

pub(super) fn solve_lp(model: &LinearModel, cfg: &SolverConfig) -> Result<RawSolution> {
    run(model, cfg, false)
}

fn run(model: &LinearModel, cfg: &SolverConfig, integral: bool) -> Result<RawSolution> {
    let mut pb = RowProblem::default();
    let costs = model.dense_objective();
    let cols: Vec<_> = model
        .vars
        .iter()
        .zip(costs)
        .map(|(v, cost)| {
            let is_int = integral && v.kind == VarKind::Binary;
            pb.add_column_with_integrality(cost, v.lower..=v.upper, is_int)
        })
        .collect();
    for row in &model.rows {
        let terms: Vec<_> = row.terms.iter().map(|&(v, c)| (cols[v.0], c)).collect();
        match row.sense {
            Sense::Le => pb.add_row(..=row.rhs, terms),
            Sense::Ge => pb.add_row(row.rhs.., terms),
            Sense::Eq => pb.add_row(row.rhs..=row.rhs, terms),
        }
    }
    let is_mip = integral && model.vars.iter().any(|v| v.kind == VarKind::Binary);

    let mut m = pb
        .try_optimise(HighsSense::Minimise)
        .map_err(|s| Error::Solver(format!("HiGHS rejected the model: {s:?}")))?;
    m.make_quiet();
    m.set_threads(NonZeroU32::MIN);
    let seed = (cfg.seed % i32::MAX as u64) as i32;
    let opts: [(&str, f64); 4] = [
        ("mip_rel_gap", cfg.relative_mip_gap),
        ("time_limit", cfg.time_limit),
        ("primal_feasibility_tolerance", 1e-9),
        ("mip_feasibility_tolerance", 1e-9),
    ];
    for (name, value) in opts {
        m.try_set_option(name, value)
            .map_err(|e| Error::Solver(format!("option {name}: {e:?}")))?;
    }
    m.try_set_option("random_seed", seed)
        .map_err(|e| Error::Solver(format!("option random_seed: {e:?}")))?;

    let solved = m
        .try_solve()
        .map_err(|s| Error::Solver(format!("HiGHS run failed: {s:?}")))?;
    let status = solved.status();
    let has_point = || {
        solved
            .int_info_value(c"primal_solution_status")
            .map(|s| s == 2)
            .unwrap_or(false)
    };
    let timed_out = match status {
        HighsModelStatus::Optimal | HighsModelStatus::ModelEmpty => false,
        HighsModelStatus::Infeasible => return Err(Error::Infeasible),
        HighsModelStatus::ReachedTimeLimit
        | HighsModelStatus::ReachedIterationLimit
        | HighsModelStatus::ReachedSolutionLimit
            if has_point() =>
        {
            true
        }
        HighsModelStatus::ReachedTimeLimit => {
            return Err(Error::Solver("time limit reached without an incumbent".into()))
        }
        other => return Err(Error::Solver(format!("HiGHS finished with status {other:?}"))),
    };
    let values = solved.get_solution().columns().to_vec();
    let objective = model.objective.eval(&values) - model.objective.constant;
    let bound = if is_mip {
        solved
            .double_info_value(c"mip_dual_bound")
            .ok()
            .filter(|b| b.is_finite())
            .unwrap_or(f64::NEG_INFINITY)
    } else {
        objective
    };
    Ok(RawSolution {
        values,
        bound,
        timed_out,
    })
}
