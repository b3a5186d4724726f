//! The daily line-switching model: DC power flow with on/off lines, load
//! shedding, and an objective trading normalized shed against normalized
//! energized risk.
//!
//! Variables per hour `t`: generator output `g`, bus angle `θ`, line flow `f`,
//! bus shed `s`; per day: line state `z` (1 = energized). Generator and shed
//! limits are variable bounds; switched flow limits, switched angle limits,
//! switched DC flow and nodal balance are tagged rows. The angle and flow rows
//! are relaxed by big-M constants from [`compute_big_m`] when `z = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::DemandProfile;
use crate::model::{LinearExpr, LinearModel, RowTag, Sense, VarId, VarKind};
use crate::network::{compute_big_m, incidence, Network};
use crate::solver::{self, Solution, SolveStatus, SolverConfig};

/// Weights and normalizers of the daily objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveContext {
    /// Priority on shed versus risk, in `[0, 1]`.
    pub alpha: f64,
    /// Total predicted demand over all buses and hours.
    pub total_demand: f64,
    /// Total risk with every line energized.
    pub total_risk: f64,
}

impl ObjectiveContext {
    pub fn new(alpha: f64, demand: &DemandProfile, risk: &[f64]) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        if risk.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidParameter("line risk must be finite and non-negative".into()));
        }
        Ok(Self {
            alpha,
            total_demand: demand.total(),
            total_risk: risk.iter().sum(),
        })
    }

    /// Coefficient on every shed variable; zero when there is no demand.
    pub fn shed_weight(&self) -> f64 {
        if self.total_demand > 0.0 {
            self.alpha / self.total_demand
        } else {
            0.0
        }
    }

    /// Multiplier on `r_l z_l`; zero on risk-free days.
    pub fn risk_weight(&self) -> f64 {
        if self.total_risk > 0.0 {
            (1.0 - self.alpha) / self.total_risk
        } else {
            0.0
        }
    }
}

/// Variable handles of a switching model, `[entity][hour]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PspsVars {
    pub gen: Vec<Vec<VarId>>,
    pub theta: Vec<Vec<VarId>>,
    pub flow: Vec<Vec<VarId>>,
    pub shed: Vec<Vec<VarId>>,
    pub z: Vec<VarId>,
}

impl PspsVars {
    pub fn extract(&self, sol: &Solution) -> DispatchSolution {
        let grab = |grid: &Vec<Vec<VarId>>| -> Vec<Vec<f64>> {
            grid.iter()
                .map(|row| row.iter().map(|v| sol.values[v.0]).collect())
                .collect()
        };
        DispatchSolution {
            gen: grab(&self.gen),
            theta: grab(&self.theta),
            flow: grab(&self.flow),
            shed: grab(&self.shed).into_iter().map(|r| r.into_iter().map(|s| s.max(0.0)).collect()).collect(),
            z: self.z.iter().map(|v| sol.values[v.0] > 0.5).collect(),
            objective: sol.objective,
            best_bound: sol.best_bound,
            status: sol.status,
        }
    }

    /// `Σ_n Σ_t s[n][t]`.
    pub fn total_shed_expr(&self) -> LinearExpr {
        let mut e = LinearExpr::new();
        for v in self.shed.iter().flatten() {
            e.add(*v, 1.0);
        }
        e
    }

    /// `Σ_l r_l z_l`.
    pub fn energized_risk_expr(&self, risk: &[f64]) -> LinearExpr {
        let mut e = LinearExpr::new();
        for (v, r) in self.z.iter().zip(risk) {
            e.add(*v, *r);
        }
        e
    }
}

#[derive(Debug, Clone)]
pub struct PspsModel {
    pub model: LinearModel,
    pub vars: PspsVars,
}

impl PspsModel {
    /// Pins every line state, turning the model into an LP.
    pub fn fix_switching(&mut self, z: &[bool]) {
        for (v, &on) in self.vars.z.iter().zip(z) {
            self.model.fix(*v, if on { 1.0 } else { 0.0 });
            self.model.vars[v.0].kind = VarKind::Continuous;
        }
    }

    /// `Σ r z ≤ cap`.
    pub fn add_risk_cap(&mut self, risk: &[f64], cap: f64) {
        let terms = self.vars.energized_risk_expr(risk).terms;
        self.model.add_row(RowTag::RiskCap, "total", terms, Sense::Le, cap);
    }

    pub fn solve(&self, cfg: &SolverConfig) -> Result<DispatchSolution> {
        let sol = solver::solve(&self.model, cfg)?;
        Ok(self.vars.extract(&sol))
    }
}

/// Builds the daily switching model for `demand` (horizon taken from the
/// profile) and per-line `risk`.
pub fn build_opt_psps(
    net: &Network,
    demand: &DemandProfile,
    risk: &[f64],
    ctx: &ObjectiveContext,
) -> Result<PspsModel> {
    let horizon = demand.horizon();
    if horizon == 0 {
        return Err(Error::HorizonMismatch {
            expected: 1,
            found: 0,
        });
    }
    demand.check(net.n_buses(), horizon)?;
    if risk.len() != net.n_lines() {
        return Err(Error::RiskMismatch {
            expected: net.n_lines(),
            found: risk.len(),
        });
    }
    let big_m = compute_big_m(net);
    let inc = incidence(net);
    let mut m = LinearModel::new();

    let gen: Vec<Vec<VarId>> = net
        .generators
        .iter()
        .map(|g| {
            (1..=horizon)
                .map(|t| m.add_continuous(format!("g_{}_{t}", g.id), g.g_min, g.g_max))
                .collect()
        })
        .collect();
    let theta: Vec<Vec<VarId>> = net
        .buses
        .iter()
        .map(|b| {
            (1..=horizon)
                .map(|t| m.add_continuous(format!("theta_{}_{t}", b.id), f64::NEG_INFINITY, f64::INFINITY))
                .collect()
        })
        .collect();
    let flow: Vec<Vec<VarId>> = net
        .lines
        .iter()
        .map(|l| {
            (1..=horizon)
                .map(|t| m.add_continuous(format!("f_{}_{t}", l.id), f64::NEG_INFINITY, f64::INFINITY))
                .collect()
        })
        .collect();
    let shed: Vec<Vec<VarId>> = net
        .buses
        .iter()
        .enumerate()
        .map(|(n, b)| {
            (1..=horizon)
                .map(|t| m.add_continuous(format!("s_{}_{t}", b.id), 0.0, demand.get(n, t - 1)))
                .collect()
        })
        .collect();
    let z: Vec<VarId> = net.lines.iter().map(|l| m.add_binary(format!("z_{}", l.id))).collect();

    for (l, line) in net.lines.iter().enumerate() {
        let (fr, to) = net.line_ends(l);
        let b = line.susceptance();
        let ab = b.abs();
        for t in 0..horizon {
            let (f, zl) = (flow[l][t], z[l]);
            let (th_fr, th_to) = (theta[fr][t], theta[to][t]);
            let tag = |s: &str| format!("{}_{}_{s}", line.id, t + 1);

            m.add_row(RowTag::FlowLimits, tag("ub"), vec![(f, 1.0), (zl, -line.f_max)], Sense::Le, 0.0);
            m.add_row(RowTag::FlowLimits, tag("lb"), vec![(f, 1.0), (zl, line.f_max)], Sense::Ge, 0.0);

            // δ_lo z + M_lo (1 - z) ≤ θ_fr - θ_to ≤ δ_hi z + M_hi (1 - z)
            m.add_row(
                RowTag::Angle,
                tag("lb"),
                vec![(th_fr, 1.0), (th_to, -1.0), (zl, big_m.lo - line.angle_min)],
                Sense::Ge,
                big_m.lo,
            );
            m.add_row(
                RowTag::Angle,
                tag("ub"),
                vec![(th_fr, 1.0), (th_to, -1.0), (zl, big_m.hi - line.angle_max)],
                Sense::Le,
                big_m.hi,
            );

            // -b Δθ + |b| M_lo (1 - z) ≤ f ≤ -b Δθ + |b| M_hi (1 - z)
            m.add_row(
                RowTag::DcFlow,
                tag("lb"),
                vec![(f, 1.0), (th_fr, b), (th_to, -b), (zl, ab * big_m.lo)],
                Sense::Ge,
                ab * big_m.lo,
            );
            m.add_row(
                RowTag::DcFlow,
                tag("ub"),
                vec![(f, 1.0), (th_fr, b), (th_to, -b), (zl, ab * big_m.hi)],
                Sense::Le,
                ab * big_m.hi,
            );
        }
    }

    // Σ_fr f - Σ_to f = s - d + Σ g
    for (n, bus) in net.buses.iter().enumerate() {
        for t in 0..horizon {
            let mut terms = Vec::new();
            terms.extend(inc[n].lines_from.iter().map(|&l| (flow[l][t], 1.0)));
            terms.extend(inc[n].lines_to.iter().map(|&l| (flow[l][t], -1.0)));
            terms.extend(inc[n].generators.iter().map(|&g| (gen[g][t], -1.0)));
            terms.push((shed[n][t], -1.0));
            m.add_row(
                RowTag::Balance,
                format!("{}_{}", bus.id, t + 1),
                terms,
                Sense::Eq,
                -demand.get(n, t),
            );
        }
    }

    let vars = PspsVars {
        gen,
        theta,
        flow,
        shed,
        z,
    };
    let mut objective = LinearExpr::new();
    objective.add_scaled(&vars.total_shed_expr(), ctx.shed_weight());
    objective.add_scaled(&vars.energized_risk_expr(risk), ctx.risk_weight());
    m.objective = objective;
    Ok(PspsModel { model: m, vars })
}

/// Builds and solves the daily switching model.
///
/// Risk-free lines that come back switched off are re-energized one at a
/// time, in line order, whenever that does not worsen the objective: a line
/// that carries no risk should only be out when keeping it in costs shed.
pub fn solve_opt_psps(
    net: &Network,
    demand: &DemandProfile,
    risk: &[f64],
    ctx: &ObjectiveContext,
    cfg: &SolverConfig,
) -> Result<DispatchSolution> {
    let pm = build_opt_psps(net, demand, risk, ctx)?;
    let mut best = pm.solve(cfg)?;
    for l in 0..net.n_lines() {
        if best.z[l] || risk[l] != 0.0 {
            continue;
        }
        let mut z = best.z.clone();
        z[l] = true;
        let mut fixed = pm.clone();
        fixed.fix_switching(&z);
        match fixed.solve(cfg) {
            Ok(cand) if cand.objective <= best.objective + 1e-9 => {
                best = DispatchSolution {
                    best_bound: best.best_bound.min(cand.objective),
                    status: best.status,
                    ..cand
                };
            }
            Ok(_) | Err(Error::Infeasible) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(best)
}

/// Values of a solved switching model, `[entity][hour]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchSolution {
    pub gen: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub flow: Vec<Vec<f64>>,
    pub shed: Vec<Vec<f64>>,
    pub z: Vec<bool>,
    pub objective: f64,
    pub best_bound: f64,
    pub status: SolveStatus,
}

impl DispatchSolution {
    pub fn total_shed(&self) -> f64 {
        self.shed.iter().flatten().sum()
    }

    pub fn bus_shed(&self) -> Vec<f64> {
        self.shed.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn energized_risk(&self, risk: &[f64]) -> f64 {
        energized_risk(&self.z, risk)
    }
}

pub fn energized_risk(z: &[bool], risk: &[f64]) -> f64 {
    z.iter().zip(risk).filter(|(on, _)| **on).map(|(_, r)| r).sum()
}

/// `(α/D) Σ s + ((1-α)/R) Σ r z`, with either term dropped when its
/// normalizer is zero.
pub fn evaluate_objective(shed: &[Vec<f64>], z: &[bool], ctx: &ObjectiveContext, risk: &[f64]) -> f64 {
    let total: f64 = shed.iter().flatten().sum();
    ctx.shed_weight() * total + ctx.risk_weight() * energized_risk(z, risk)
}

/// Largest violation of each constraint family, in p.u. (radians for angles).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub gen_limits: f64,
    pub shed_limits: f64,
    pub flow_limits: f64,
    pub angle: f64,
    pub dcflow: f64,
    pub balance: f64,
    pub tolerance: f64,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        [self.gen_limits, self.shed_limits, self.flow_limits, self.angle, self.dcflow, self.balance]
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max() <= self.tolerance
    }
}

fn excess(x: f64, lo: f64, hi: f64) -> f64 {
    (lo - x).max(x - hi).max(0.0)
}

/// Re-checks a dispatch against the network equations directly, without going
/// through the model rows.
pub fn verify_solution(net: &Network, demand: &DemandProfile, sol: &DispatchSolution, tol: f64) -> ResidualReport {
    let horizon = demand.horizon();
    let big_m = compute_big_m(net);
    let mut rep = ResidualReport {
        tolerance: tol,
        ..Default::default()
    };
    for (i, g) in net.generators.iter().enumerate() {
        for t in 0..horizon {
            rep.gen_limits = rep.gen_limits.max(excess(sol.gen[i][t], g.g_min, g.g_max));
        }
    }
    for n in 0..net.n_buses() {
        for t in 0..horizon {
            rep.shed_limits = rep.shed_limits.max(excess(sol.shed[n][t], 0.0, demand.get(n, t)));
        }
    }
    let mut injection = vec![vec![0.0; horizon]; net.n_buses()];
    for (l, line) in net.lines.iter().enumerate() {
        let (fr, to) = net.line_ends(l);
        let on = if sol.z[l] { 1.0 } else { 0.0 };
        let b = line.susceptance();
        for t in 0..horizon {
            let f = sol.flow[l][t];
            let dtheta = sol.theta[fr][t] - sol.theta[to][t];
            rep.flow_limits = rep.flow_limits.max(excess(f, -line.f_max * on, line.f_max * on));
            let lo = line.angle_min * on + big_m.lo * (1.0 - on);
            let hi = line.angle_max * on + big_m.hi * (1.0 - on);
            rep.angle = rep.angle.max(excess(dtheta, lo, hi));
            let ideal = -b * dtheta;
            let flo = ideal + b.abs() * big_m.lo * (1.0 - on);
            let fhi = ideal + b.abs() * big_m.hi * (1.0 - on);
            rep.dcflow = rep.dcflow.max(excess(f, flo, fhi));
            injection[fr][t] += f;
            injection[to][t] -= f;
        }
    }
    for (i, _) in net.generators.iter().enumerate() {
        let n = net.generator_bus(i);
        for t in 0..horizon {
            injection[n][t] -= sol.gen[i][t];
        }
    }
    for n in 0..net.n_buses() {
        for t in 0..horizon {
            let rhs = sol.shed[n][t] - demand.get(n, t);
            rep.balance = rep.balance.max((injection[n][t] - rhs).abs());
        }
    }
    rep
}
