//! Season-level fairness: a discounted tally of realized shed per bus, and
//! three ways of turning it into a linear penalty `F ∈ [0, 1]` on the next
//! day's plan.
//!
//! The fair model is the daily switching model plus a cap on energized risk
//! relative to the risk-only plan `ẑ`, and the objective
//! `(β/D) Σ s + (1 - β) F`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::DemandProfile;
use crate::model::{LinearExpr, RowTag, Sense, VarId};
use crate::network::Network;
use crate::psps::{build_opt_psps, energized_risk, ObjectiveContext, PspsModel};

pub const DEFAULT_ZETA: f64 = 0.05;
pub const DEFAULT_ETA: f64 = 0.9;

/// Negative shed above this magnitude is an error; smaller values are solver
/// noise and are clamped to zero.
const SHED_NOISE: f64 = 1e-9;

/// Discounted cumulative realized shed per bus, as seen when planning
/// `day`. Day 1 starts at zero; after each day the tally becomes
/// `η (S + shed)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShedTally {
    pub day: usize,
    pub values: Vec<f64>,
    pub eta: f64,
}

impl ShedTally {
    pub fn new(n_buses: usize, eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidParameter(format!("eta must lie in [0, 1], got {eta}")));
        }
        Ok(Self {
            day: 1,
            values: vec![0.0; n_buses],
            eta,
        })
    }

    /// Folds in the realized per-bus shed of the current day.
    pub fn update(&self, shed: &[f64]) -> Result<ShedTally> {
        if shed.len() != self.values.len() {
            return Err(Error::DemandMismatch {
                expected: self.values.len(),
                found: shed.len(),
            });
        }
        let mut values = Vec::with_capacity(shed.len());
        for (bus, (&s, &prev)) in shed.iter().zip(&self.values).enumerate() {
            if s < -SHED_NOISE || s.is_nan() {
                return Err(Error::NegativeShed { bus, value: s });
            }
            values.push(self.eta * (prev + s.max(0.0)));
        }
        Ok(ShedTally {
            day: self.day + 1,
            values,
            eta: self.eta,
        })
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessMethod {
    /// Minimize the largest discounted shed at any bus.
    MinMaxShed,
    /// Weight each bus's shed by its past discounted shed.
    WeightedPenalty,
    /// Minimize the spread between the most and least burdened buses.
    ShedRange,
}

impl FairnessMethod {
    pub const ALL: [FairnessMethod; 3] = [
        FairnessMethod::MinMaxShed,
        FairnessMethod::WeightedPenalty,
        FairnessMethod::ShedRange,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FairnessMethod::MinMaxShed => "minmax",
            FairnessMethod::WeightedPenalty => "weighted",
            FairnessMethod::ShedRange => "range",
        }
    }
}

impl fmt::Display for FairnessMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FairnessMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "minmax" | "min-max" | "min_max_shed" => Ok(FairnessMethod::MinMaxShed),
            "weighted" | "weighted_penalty" => Ok(FairnessMethod::WeightedPenalty),
            "range" | "shed_range" => Ok(FairnessMethod::ShedRange),
            other => Err(Error::InvalidParameter(format!("unknown fairness method {other:?}"))),
        }
    }
}

/// Everything the fair model needs besides the day's demand and risk.
#[derive(Debug, Clone, PartialEq)]
pub struct FairContext {
    pub beta: f64,
    pub zeta: f64,
    /// Plan of the risk-only model for the same day.
    pub baseline_z: Vec<bool>,
    pub tally: ShedTally,
}

impl FairContext {
    pub fn check(&self, net: &Network) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidParameter(format!("beta must lie in [0, 1], got {}", self.beta)));
        }
        if !(self.zeta >= 0.0 && self.zeta.is_finite()) {
            return Err(Error::InvalidParameter(format!("zeta must be non-negative, got {}", self.zeta)));
        }
        if self.baseline_z.len() != net.n_lines() {
            return Err(Error::InvalidParameter(format!(
                "baseline plan has {} lines, network has {}",
                self.baseline_z.len(),
                net.n_lines()
            )));
        }
        if self.tally.values.len() != net.n_buses() {
            return Err(Error::DemandMismatch {
                expected: net.n_buses(),
                found: self.tally.values.len(),
            });
        }
        Ok(())
    }
}

/// `F = (S_max - offset) / scale` for the min-max method; `None` when the
/// denominator vanishes, in which case `F ≡ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinMaxScale {
    pub offset: f64,
    pub upper: f64,
}

impl MinMaxScale {
    pub fn new(tally: &ShedTally, demand: &DemandProfile) -> Self {
        let upper = tally
            .values
            .iter()
            .enumerate()
            .map(|(n, s)| s + demand.bus_total(n))
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            offset: tally.max(),
            upper,
        }
    }

    pub fn denominator(&self) -> Option<f64> {
        let d = self.upper - self.offset;
        (d > 0.0).then_some(d)
    }

    /// `F` at the tightest `S_max` for the given per-bus shed totals.
    pub fn eval(&self, tally: &ShedTally, bus_shed: &[f64]) -> f64 {
        let Some(den) = self.denominator() else {
            return 0.0;
        };
        let s_max = tally
            .values
            .iter()
            .zip(bus_shed)
            .map(|(s, x)| s + x)
            .fold(f64::NEG_INFINITY, f64::max);
        (s_max - self.offset) / den
    }
}

/// Normalizers for the range method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeBounds {
    pub w_max: f64,
    pub w_min: f64,
    /// Buses with positive demand in every hour.
    pub demand_buses: Vec<usize>,
}

impl RangeBounds {
    pub fn new(tally: &ShedTally, demand: &DemandProfile) -> Result<Self> {
        let demand_buses = demand.demand_buses();
        if demand_buses.is_empty() {
            return Err(Error::InvalidParameter(
                "range fairness needs at least one bus with demand in every hour".into(),
            ));
        }
        let s = &tally.values;
        let top = (0..s.len())
            .map(|n| s[n] + demand.bus_total(n))
            .fold(f64::NEG_INFINITY, f64::max);
        let low = demand_buses.iter().map(|&n| s[n]).fold(f64::INFINITY, f64::min);
        let low_full = demand_buses
            .iter()
            .map(|&n| s[n] + demand.bus_total(n))
            .fold(f64::INFINITY, f64::min);
        Ok(Self {
            w_max: top - low,
            w_min: (tally.max() - low_full).max(0.0),
            demand_buses,
        })
    }

    pub fn denominator(&self) -> Option<f64> {
        let d = self.w_max - self.w_min;
        (d > 0.0).then_some(d)
    }

    /// `F` at the tightest `S_max`, `S_min` for the given per-bus totals.
    pub fn eval(&self, tally: &ShedTally, bus_shed: &[f64]) -> f64 {
        let Some(den) = self.denominator() else {
            return 0.0;
        };
        let after: Vec<f64> = tally.values.iter().zip(bus_shed).map(|(s, x)| s + x).collect();
        let s_max = after.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s_min = self.demand_buses.iter().map(|&n| after[n]).fold(f64::INFINITY, f64::min);
        ((s_max - s_min) - self.w_min) / den
    }
}

/// Per-bus weights of the weighted method, `S_n / Σ_n S_n Σ_t d`, or `None`
/// when `F ≡ 0` (first day, empty tally, or no weighted demand).
pub fn weighted_coefficients(tally: &ShedTally, demand: &DemandProfile) -> Option<Vec<f64>> {
    if tally.day <= 1 || tally.is_zero() {
        return None;
    }
    let den: f64 = tally
        .values
        .iter()
        .enumerate()
        .map(|(n, s)| s * demand.bus_total(n))
        .sum();
    (den > 0.0).then(|| tally.values.iter().map(|s| s / den).collect())
}

/// `F` of the weighted method for a shed plan `[bus][hour]`.
pub fn weighted_eval(tally: &ShedTally, demand: &DemandProfile, shed: &[Vec<f64>]) -> f64 {
    match weighted_coefficients(tally, demand) {
        Some(w) => shed.iter().zip(&w).map(|(row, w)| w * row.iter().sum::<f64>()).sum(),
        None => 0.0,
    }
}

/// Extra variables and normalizers a fair model carries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FairAuxiliary {
    pub s_max: Option<VarId>,
    pub s_min: Option<VarId>,
    pub w_max: Option<f64>,
    pub w_min: Option<f64>,
    pub demand_buses: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct FairModel {
    pub inner: PspsModel,
    pub method: FairnessMethod,
    pub aux: FairAuxiliary,
    /// The fairness term `F` as an affine expression over model variables.
    pub fairness: LinearExpr,
    /// Right-hand side of the energized-risk cap.
    pub risk_cap: f64,
}

/// Builds the fair daily model: switching model, risk cap
/// `Σ r z ≤ (1 + ζ) Σ r ẑ`, the method's auxiliaries, and objective
/// `(β/D) Σ s + (1 - β) F`.
pub fn build_opt_psps_fair(
    net: &Network,
    demand: &DemandProfile,
    risk: &[f64],
    ctx: &FairContext,
    method: FairnessMethod,
) -> Result<FairModel> {
    ctx.check(net)?;
    let base_ctx = ObjectiveContext::new(ctx.beta, demand, risk)?;
    let mut pm = build_opt_psps(net, demand, risk, &base_ctx)?;
    let risk_cap = (1.0 + ctx.zeta) * energized_risk(&ctx.baseline_z, risk);
    pm.add_risk_cap(risk, risk_cap);

    let tally = &ctx.tally;
    let n_buses = net.n_buses();
    let shed_vars = pm.vars.shed.clone();
    // -Σ_t s[n][t]
    let bus_shed = |n: usize| -> Vec<(VarId, f64)> { shed_vars[n].iter().map(|&v| (v, -1.0)).collect() };
    let mut aux = FairAuxiliary {
        s_max: None,
        s_min: None,
        w_max: None,
        w_min: None,
        demand_buses: demand.demand_buses(),
    };
    let mut fairness = LinearExpr::new();

    match method {
        FairnessMethod::MinMaxShed => {
            let scale = MinMaxScale::new(tally, demand);
            let s_max = pm.model.add_continuous("s_max", scale.offset, scale.upper.max(scale.offset));
            for n in 0..n_buses {
                let mut terms = bus_shed(n);
                terms.push((s_max, 1.0));
                let name = net.buses[n].id.to_string();
                pm.model.add_row(RowTag::MinMax, name, terms, Sense::Ge, tally.values[n]);
            }
            if let Some(den) = scale.denominator() {
                fairness.add(s_max, 1.0 / den).add_constant(-scale.offset / den);
            }
            aux.s_max = Some(s_max);
        }
        FairnessMethod::WeightedPenalty => {
            if let Some(w) = weighted_coefficients(tally, demand) {
                for (n, wn) in w.iter().enumerate() {
                    for &v in &shed_vars[n] {
                        fairness.add(v, *wn);
                    }
                }
            }
        }
        FairnessMethod::ShedRange => {
            let bounds = RangeBounds::new(tally, demand)?;
            let s = &tally.values;
            let top = (0..n_buses).map(|n| s[n] + demand.bus_total(n)).fold(f64::NEG_INFINITY, f64::max);
            let s_max = pm.model.add_continuous("s_max", tally.max(), top.max(tally.max()));
            let low = bounds.demand_buses.iter().map(|&n| s[n]).fold(f64::INFINITY, f64::min);
            let low_full = bounds
                .demand_buses
                .iter()
                .map(|&n| s[n] + demand.bus_total(n))
                .fold(f64::INFINITY, f64::min);
            let s_min = pm.model.add_continuous("s_min", low, low_full.max(low));
            for n in 0..n_buses {
                let mut terms = bus_shed(n);
                terms.push((s_max, 1.0));
                pm.model.add_row(RowTag::MinMax, net.buses[n].id.to_string(), terms, Sense::Ge, s[n]);
            }
            for &n in &bounds.demand_buses {
                let mut terms = bus_shed(n);
                terms.push((s_min, 1.0));
                pm.model.add_row(RowTag::Range, net.buses[n].id.to_string(), terms, Sense::Le, s[n]);
            }
            if let Some(den) = bounds.denominator() {
                fairness
                    .add(s_max, 1.0 / den)
                    .add(s_min, -1.0 / den)
                    .add_constant(-bounds.w_min / den);
            }
            aux.s_max = Some(s_max);
            aux.s_min = Some(s_min);
            aux.w_max = Some(bounds.w_max);
            aux.w_min = Some(bounds.w_min);
        }
    }

    let mut objective = LinearExpr::new();
    objective.add_scaled(&pm.vars.total_shed_expr(), base_ctx.shed_weight());
    objective.add_scaled(&fairness, 1.0 - ctx.beta);
    pm.model.objective = objective;
    Ok(FairModel {
        inner: pm,
        method,
        aux,
        fairness,
        risk_cap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    fn tally(day: usize, values: Vec<f64>) -> ShedTally {
        ShedTally { day, values, eta: 0.9 }
    }

    fn one_hour(d: &[f64]) -> DemandProfile {
        DemandProfile::new(d.iter().map(|&v| vec![v]).collect())
    }

    #[test]
    fn tally_examples() {
        let t1 = ShedTally::new(1, 0.9).unwrap();
        assert_eq!(t1.values, vec![0.0]);
        let t2 = t1.update(&[1.0]).unwrap();
        assert!((t2.values[0] - 0.9).abs() < 1e-15);
        let t3 = t2.update(&[0.5]).unwrap();
        assert!((t3.values[0] - 1.26).abs() < 1e-12);
        assert_eq!(t3.day, 3);
    }

    #[test]
    fn tally_rejects_negative_shed() {
        let t = ShedTally::new(2, 0.5).unwrap();
        assert!(matches!(t.update(&[0.0, -0.1]), Err(Error::NegativeShed { bus: 1, .. })));
        assert_eq!(t.update(&[0.0, -1e-12]).unwrap().values, vec![0.0, 0.0]);
        assert!(ShedTally::new(1, 1.5).is_err());
    }

    #[test]
    fn minmax_scale_example() {
        let t = tally(2, vec![2.0, 0.0]);
        let scale = MinMaxScale::new(&t, &one_hour(&[1.0, 1.0]));
        assert_eq!(scale.eval(&t, &[0.0, 0.0]), 0.0);
        // The worst-off bus losing its entire demand is the least fair end.
        assert_eq!(scale.eval(&t, &[1.0, 0.0]), 1.0);
    }

    #[test]
    fn weighted_examples() {
        let d = one_hour(&[1.0, 1.0]);
        assert_eq!(weighted_eval(&tally(1, vec![0.0, 0.0]), &d, &d.values), 0.0);
        let t = tally(3, vec![2.0, 0.0]);
        assert_eq!(weighted_eval(&t, &d, &d.values), 1.0);
        assert_eq!(weighted_eval(&t, &d, &[vec![0.5], vec![1.0]]), 0.5);
        assert_eq!(weighted_eval(&tally(3, vec![0.0, 0.0]), &d, &d.values), 0.0);
    }

    #[test]
    fn range_examples() {
        let d = one_hour(&[1.0, 1.0]);
        let b = RangeBounds::new(&tally(1, vec![0.0, 0.0]), &d).unwrap();
        assert_eq!((b.w_max, b.w_min), (1.0, 0.0));
        let t = tally(2, vec![5.0, 0.0]);
        let b = RangeBounds::new(&t, &d).unwrap();
        assert_eq!((b.w_max, b.w_min), (6.0, 4.0));
        let eq = tally(2, vec![1.0, 1.0]);
        let b = RangeBounds::new(&eq, &d).unwrap();
        assert_eq!(b.eval(&eq, &[0.0, 0.0]), 0.0);
        assert!(RangeBounds::new(&t, &one_hour(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in FairnessMethod::ALL {
            assert_eq!(m.as_str().parse::<FairnessMethod>().unwrap(), m);
        }
        assert!("gini".parse::<FairnessMethod>().is_err());
    }

    fn fair(method: FairnessMethod, t: ShedTally) -> FairModel {
        let (net, demand) = synthetic::triangle();
        let ctx = FairContext {
            beta: 0.5,
            zeta: DEFAULT_ZETA,
            baseline_z: vec![true, false, true],
            tally: t,
        };
        build_opt_psps_fair(&net, &demand, &[1.0, 2.0, 3.0], &ctx, method).unwrap()
    }

    #[test]
    fn weighted_first_day_is_pure_shed() {
        let fm = fair(FairnessMethod::WeightedPenalty, tally(1, vec![0.0; 3]));
        assert!(fm.fairness.terms.is_empty() && fm.fairness.constant == 0.0);
        assert!(fm.inner.vars.z.iter().all(|z| fm.inner.model.objective.coeff(*z) == 0.0));
        let cap: Vec<_> = fm.inner.model.rows_tagged(RowTag::RiskCap).collect();
        assert_eq!(cap.len(), 1);
        assert!((cap[0].rhs - 1.05 * 4.0).abs() < 1e-12);
    }

    #[test]
    fn auxiliary_counts() {
        let base = fair(FairnessMethod::WeightedPenalty, tally(1, vec![0.0; 3]));
        let mm = fair(FairnessMethod::MinMaxShed, tally(1, vec![0.0; 3]));
        assert_eq!(mm.inner.model.vars.len(), base.inner.model.vars.len() + 1);
        assert_eq!(mm.inner.model.rows.len(), base.inner.model.rows.len() + 3);
        let rg = fair(FairnessMethod::ShedRange, tally(1, vec![0.0; 3]));
        assert_eq!(rg.inner.model.vars.len(), base.inner.model.vars.len() + 2);
        // Upper rows on every bus, lower rows on the two buses with demand.
        assert_eq!(rg.inner.model.rows_tagged(RowTag::MinMax).count(), 3);
        assert_eq!(rg.inner.model.rows_tagged(RowTag::Range).count(), 2);
    }

    #[test]
    fn context_is_checked() {
        let (net, demand) = synthetic::triangle();
        let ctx = FairContext {
            beta: 0.5,
            zeta: 0.05,
            baseline_z: vec![true; 2],
            tally: tally(1, vec![0.0; 3]),
        };
        assert!(build_opt_psps_fair(&net, &demand, &[1.0; 3], &ctx, FairnessMethod::MinMaxShed).is_err());
    }
}
