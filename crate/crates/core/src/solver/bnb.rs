//! Best-first branch-and-bound over the binary variables, with every node's
//! LP relaxation solved from scratch by `microlp`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use super::{RawSolution, SolverConfig};
use crate::error::{Error, Result};
use crate::model::{LinearModel, Sense, VarKind};

const INT_TOL: f64 = 1e-6;
const ABS_GAP: f64 = 1e-9;

struct Node {
    bound: f64,
    seq: u64,
    /// `(variable, value)` pins accumulated along the branch.
    fixes: Vec<(usize, f64)>,
    values: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap: smallest bound first, then oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Objective value (without constant) and primal point of an LP relaxation,
/// or `None` when infeasible.
fn relaxation(model: &LinearModel, costs: &[f64], fixes: &[(usize, f64)], deadline: Instant) -> Result<Option<(f64, Vec<f64>)>> {
    let mut pb = Problem::new(OptimizationDirection::Minimize);
    let remaining = deadline.saturating_duration_since(Instant::now());
    if remaining.is_zero() {
        return Err(Error::Solver("time limit reached".into()));
    }
    pb.set_time_limit(remaining);
    let mut lower: Vec<f64> = model.vars.iter().map(|v| v.lower).collect();
    let mut upper: Vec<f64> = model.vars.iter().map(|v| v.upper).collect();
    for &(i, val) in fixes {
        lower[i] = val;
        upper[i] = val;
    }
    let vars: Vec<_> = (0..model.vars.len())
        .map(|i| pb.add_var(costs[i], (lower[i], upper[i])))
        .collect();
    for row in &model.rows {
        let expr: Vec<_> = row.terms.iter().map(|&(v, c)| (vars[v.0], c)).collect();
        let op = match row.sense {
            Sense::Le => ComparisonOp::Le,
            Sense::Ge => ComparisonOp::Ge,
            Sense::Eq => ComparisonOp::Eq,
        };
        pb.add_constraint(expr.as_slice(), op, row.rhs);
    }
    match pb.solve() {
        Ok(outcome) => match outcome.into_solution() {
            Ok(sol) => {
                let values: Vec<f64> = vars.iter().map(|&v| sol.var_value_raw(v)).collect();
                Ok(Some((sol.objective(), values)))
            }
            Err(_) => Err(Error::Solver("time limit reached".into())),
        },
        Err(microlp::Error::Infeasible) => Ok(None),
        Err(e) => Err(Error::Solver(format!("LP relaxation failed: {e}"))),
    }
}

fn deadline(cfg: &SolverConfig) -> Instant {
    Instant::now() + Duration::from_secs_f64(cfg.time_limit.min(1e7))
}

pub(super) fn solve_lp(model: &LinearModel, cfg: &SolverConfig) -> Result<RawSolution> {
    let costs = model.dense_objective();
    match relaxation(model, &costs, &[], deadline(cfg))? {
        Some((obj, values)) => Ok(RawSolution {
            values,
            bound: obj,
            timed_out: false,
        }),
        None => Err(Error::Infeasible),
    }
}

pub(super) fn solve(model: &LinearModel, cfg: &SolverConfig) -> Result<RawSolution> {
    let deadline = deadline(cfg);
    let costs = model.dense_objective();
    let binaries: Vec<usize> = model
        .vars
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(i, _)| i)
        .collect();

    let Some((root_obj, root_values)) = relaxation(model, &costs, &[], deadline)? else {
        return Err(Error::Infeasible);
    };
    let mut seq = 0;
    let mut open = BinaryHeap::new();
    open.push(Node {
        bound: root_obj,
        seq,
        fixes: Vec::new(),
        values: root_values,
    });
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let closed = |inc: f64, bound: f64| {
        inc - bound <= ABS_GAP || (inc - bound) / inc.abs().max(1e-9) <= cfg.relative_mip_gap
    };

    while let Some(node) = open.pop() {
        if let Some((inc, _)) = &incumbent {
            if closed(*inc, node.bound) {
                let bound = node.bound;
                let (_, values) = incumbent.unwrap();
                return Ok(RawSolution {
                    values,
                    bound,
                    timed_out: false,
                });
            }
        }
        // Most fractional binary.
        let branch = binaries
            .iter()
            .map(|&i| (i, (node.values[i] - node.values[i].round()).abs()))
            .filter(|&(_, frac)| frac > INT_TOL)
            .max_by(|a, b| a.1.total_cmp(&b.1).then_with(|| b.0.cmp(&a.0)));
        let Some((var, _)) = branch else {
            if incumbent.as_ref().is_none_or(|(inc, _)| node.bound < *inc) {
                incumbent = Some((node.bound, node.values));
            }
            continue;
        };
        for val in [0.0, 1.0] {
            let mut fixes = node.fixes.clone();
            fixes.push((var, val));
            let child = match relaxation(model, &costs, &fixes, deadline) {
                Ok(c) => c,
                Err(_) if Instant::now() >= deadline => {
                    return match incumbent {
                        Some((_, values)) => Ok(RawSolution {
                            values,
                            bound: node.bound,
                            timed_out: true,
                        }),
                        None => Err(Error::Solver("time limit reached without an incumbent".into())),
                    };
                }
                Err(e) => return Err(e),
            };
            if let Some((obj, values)) = child {
                if incumbent.as_ref().is_none_or(|(inc, _)| !closed(*inc, obj)) {
                    seq += 1;
                    open.push(Node {
                        bound: obj,
                        seq,
                        fixes,
                        values,
                    });
                }
            }
        }
    }
    match incumbent {
        Some((obj, values)) => Ok(RawSolution {
            values,
            bound: obj,
            timed_out: false,
        }),
        None => Err(Error::Infeasible),
    }
}
