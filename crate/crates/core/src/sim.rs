//! Rolling day-by-day simulation.
//!
//! Each day: plan on the forecast with the risk-only model (`ẑ`); optionally
//! re-plan with a fairness model capped at `(1 + ζ)` times the energized risk
//! of `ẑ`; operate the chosen switching plan against actual demand; fold the
//! realized shed into the tally used by the next day's fairness term.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::fairness::{build_opt_psps_fair, FairContext, FairnessMethod, ShedTally, DEFAULT_ETA, DEFAULT_ZETA};
use crate::ingest::{DayInputs, DemandProfile};
use crate::model::{RowTag, Sense};
use crate::network::Network;
use crate::psps::{build_opt_psps, energized_risk, solve_opt_psps, DispatchSolution, ObjectiveContext, PspsModel};
use crate::solver::{SolveStatus, SolverConfig};

/// How real-time operation picks a dispatch once the switching plan is
/// fixed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RealtimePolicy {
    /// Minimize total shed, then break ties toward buses with little past
    /// shed.
    #[default]
    MinShed,
    /// Re-optimize the fair objective on actual demand. Falls back to
    /// `MinShed` when no fairness method is active.
    FairObjective,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub beta: f64,
    pub zeta: f64,
    pub eta: f64,
    pub method: Option<FairnessMethod>,
    pub solver: SolverConfig,
    pub realtime: RealtimePolicy,
    /// Also solve the per-day minimum-shed bound.
    pub compute_bounds: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            zeta: DEFAULT_ZETA,
            eta: DEFAULT_ETA,
            method: None,
            solver: SolverConfig::default(),
            realtime: RealtimePolicy::MinShed,
            compute_bounds: true,
        }
    }
}

/// Least total shed achievable on a day under the risk cap, for the
/// forecast and for the actual demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinShedBound {
    pub predicted: f64,
    pub actual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayRecord {
    pub day: usize,
    pub alpha: f64,
    pub total_risk: f64,
    /// Risk-only plan.
    pub z_base: Vec<bool>,
    /// Implemented plan.
    pub z: Vec<bool>,
    pub risk_energized_base: f64,
    pub risk_energized: f64,
    pub objective_base: f64,
    pub objective_fair: Option<f64>,
    pub status_base: SolveStatus,
    pub status_fair: Option<SolveStatus>,
    /// Planned shed `[bus][hour]` of the implemented plan.
    pub predicted_shed: Vec<Vec<f64>>,
    /// Realized shed `[bus][hour]`.
    pub actual_shed: Vec<Vec<f64>>,
    /// Actual demand per bus, summed over the day.
    pub actual_demand: Vec<f64>,
    pub min_shed: Option<MinShedBound>,
}

impl DayRecord {
    pub fn shed_total_pred(&self) -> f64 {
        self.predicted_shed.iter().flatten().sum()
    }

    pub fn shed_total_actual(&self) -> f64 {
        self.actual_shed.iter().flatten().sum()
    }

    pub fn bus_shed_actual(&self) -> Vec<f64> {
        self.actual_shed.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn hamming(&self) -> usize {
        self.z_base.iter().zip(&self.z).filter(|(a, b)| a != b).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub method: Option<FairnessMethod>,
    pub beta: Option<f64>,
    pub bus_ids: Vec<u32>,
    pub line_ids: Vec<u32>,
    pub days: Vec<DayRecord>,
    pub final_tally: ShedTally,
    /// Undiscounted realized shed per bus over the whole run.
    pub cumulative_shed: Vec<f64>,
}

impl SimulationResult {
    pub fn total_actual_demand(&self) -> f64 {
        self.days.iter().flat_map(|d| &d.actual_demand).sum()
    }

    pub fn total_actual_shed(&self) -> f64 {
        self.cumulative_shed.iter().sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("simulation results serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Writes `result.json`, `days.csv`, `bus_shed.csv`, `switching.csv` and,
    /// when the network is given, `bus_shed.geojson` into `dir`.
    pub fn write_outputs(&self, dir: &Path, net: Option<&Network>) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("result.json"), self.to_json())?;
        fs::write(dir.join("days.csv"), self.days_csv()?)?;
        fs::write(dir.join("bus_shed.csv"), self.bus_shed_csv()?)?;
        fs::write(dir.join("switching.csv"), self.switching_csv()?)?;
        if let Some(net) = net {
            let geo = serde_json::to_string_pretty(&bus_shed_geojson(net, self))?;
            fs::write(dir.join("bus_shed.geojson"), geo)?;
        }
        Ok(())
    }

    pub fn days_csv(&self) -> Result<String> {
        csv_string(
            &["day", "alpha", "risk_energized", "shed_total_pred", "shed_total_actual", "hamming"],
            self.days.iter().map(|d| {
                vec![
                    d.day.to_string(),
                    d.alpha.to_string(),
                    d.risk_energized.to_string(),
                    d.shed_total_pred().to_string(),
                    d.shed_total_actual().to_string(),
                    d.hamming().to_string(),
                ]
            }),
        )
    }

    pub fn bus_shed_csv(&self) -> Result<String> {
        csv_string(
            &["day", "bus", "shed_actual"],
            self.days.iter().flat_map(|d| {
                d.bus_shed_actual()
                    .into_iter()
                    .zip(&self.bus_ids)
                    .map(|(s, id)| vec![d.day.to_string(), id.to_string(), s.to_string()])
                    .collect::<Vec<_>>()
            }),
        )
    }

    pub fn switching_csv(&self) -> Result<String> {
        let bit = |b: bool| if b { "1" } else { "0" }.to_string();
        csv_string(
            &["day", "line", "z_base", "z_fair"],
            self.days.iter().flat_map(|d| {
                self.line_ids
                    .iter()
                    .enumerate()
                    .map(|(l, id)| vec![d.day.to_string(), id.to_string(), bit(d.z_base[l]), bit(d.z[l])])
                    .collect::<Vec<_>>()
            }),
        )
    }
}

pub(crate) fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| Error::Csv {
        context: "writing csv".into(),
        source: e,
    };
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(&row).map_err(wrap)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Point features per bus carrying cumulative realized shed.
pub fn bus_shed_geojson(net: &Network, result: &SimulationResult) -> serde_json::Value {
    let features: Vec<_> = net
        .buses
        .iter()
        .zip(&result.cumulative_shed)
        .map(|(b, shed)| {
            json!({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [b.lon, b.lat]},
                "properties": {"bus": b.id, "name": b.name, "shed_actual": shed},
            })
        })
        .collect();
    json!({"type": "FeatureCollection", "features": features})
}

/// Turns the model objective into raw total shed `Σ s`.
fn minimize_total_shed(pm: &mut PspsModel) {
    pm.model.objective = pm.vars.total_shed_expr();
}

/// Serves `actual` demand with the switching plan `z` fixed, minimizing total
/// shed. With `tie_weights`, a second pass keeps total shed at its minimum
/// and minimizes `Σ_n w_n Σ_t s[n][t]`, so ties go to buses with low weight.
pub fn realtime_operate(
    net: &Network,
    z: &[bool],
    actual: &DemandProfile,
    tie_weights: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<DispatchSolution> {
    if z.len() != net.n_lines() {
        return Err(Error::InvalidParameter(format!(
            "switching plan has {} lines, network has {}",
            z.len(),
            net.n_lines()
        )));
    }
    let zero_risk = vec![0.0; net.n_lines()];
    let ctx = ObjectiveContext::new(1.0, actual, &zero_risk)?;
    let mut pm = build_opt_psps(net, actual, &zero_risk, &ctx)?;
    pm.fix_switching(z);
    minimize_total_shed(&mut pm);
    let first = pm.solve(cfg)?;
    let Some(w) = tie_weights.filter(|w| w.iter().any(|&x| x > 0.0)) else {
        return Ok(first);
    };
    let total = first.objective;
    let terms = pm.vars.total_shed_expr().terms;
    pm.model
        .add_row(RowTag::ShedTotal, "min", terms, Sense::Le, total + 1e-9 * total.max(1.0));
    let mut objective = crate::model::LinearExpr::new();
    for (n, wn) in w.iter().enumerate() {
        for &v in &pm.vars.shed[n] {
            objective.add(v, *wn);
        }
    }
    pm.model.objective = objective;
    match pm.solve(cfg) {
        Ok(mut second) => {
            second.objective = second.total_shed();
            second.best_bound = second.objective.min(first.best_bound);
            Ok(second)
        }
        // The restriction is feasible by construction; numerical trouble in
        // the tie-break pass is not worth failing a day over.
        Err(Error::Infeasible) => Ok(first),
        Err(e) => Err(e),
    }
}

/// Minimum total shed for one demand profile subject to the energized-risk
/// cap `Σ r z ≤ (1 + ζ) Σ r ẑ`.
pub fn min_shed_value(
    net: &Network,
    demand: &DemandProfile,
    risk: &[f64],
    z_hat: &[bool],
    zeta: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    let ctx = ObjectiveContext::new(1.0, demand, risk)?;
    let mut pm = build_opt_psps(net, demand, risk, &ctx)?;
    minimize_total_shed(&mut pm);
    pm.add_risk_cap(risk, (1.0 + zeta) * energized_risk(z_hat, risk));
    Ok(pm.solve(cfg)?.objective)
}

/// The best any fairness method could do on `day`: least total shed under the
/// risk cap, for the forecast and for the actual demand.
pub fn min_shed_bound(
    net: &Network,
    day: &DayInputs,
    z_hat: &[bool],
    zeta: f64,
    cfg: &SolverConfig,
) -> Result<MinShedBound> {
    Ok(MinShedBound {
        predicted: min_shed_value(net, &day.forecast, &day.risk, z_hat, zeta, cfg)?,
        actual: min_shed_value(net, &day.actual, &day.risk, z_hat, zeta, cfg)?,
    })
}

/// Runs the risk-only loop; `cfg.method` is ignored.
pub fn run_baseline(net: &Network, inputs: &[DayInputs], cfg: &ScenarioConfig) -> Result<SimulationResult> {
    run(net, inputs, &ScenarioConfig { method: None, ..*cfg })
}

/// Runs the fairness loop; `cfg.method` must be set.
pub fn run_fair(net: &Network, inputs: &[DayInputs], cfg: &ScenarioConfig) -> Result<SimulationResult> {
    if cfg.method.is_none() {
        return Err(Error::InvalidParameter("fair run needs a fairness method".into()));
    }
    run(net, inputs, cfg)
}

/// Runs the loop selected by `cfg.method`.
pub fn run(net: &Network, inputs: &[DayInputs], cfg: &ScenarioConfig) -> Result<SimulationResult> {
    if inputs.is_empty() {
        return Err(Error::InvalidParameter("simulation needs at least one day".into()));
    }
    cfg.solver.check()?;
    let mut tally = ShedTally::new(net.n_buses(), cfg.eta)?;
    let mut days = Vec::with_capacity(inputs.len());
    let mut cumulative = vec![0.0; net.n_buses()];
    for day in inputs {
        let record = step(net, day, &tally, cfg).map_err(|e| e.on_day(day.day))?;
        let shed = record.bus_shed_actual();
        tally = tally.update(&shed).map_err(|e| e.on_day(day.day))?;
        for (c, s) in cumulative.iter_mut().zip(&shed) {
            *c += s;
        }
        days.push(record);
    }
    Ok(SimulationResult {
        method: cfg.method,
        beta: cfg.method.map(|_| cfg.beta),
        bus_ids: net.buses.iter().map(|b| b.id).collect(),
        line_ids: net.lines.iter().map(|l| l.id).collect(),
        days,
        final_tally: tally,
        cumulative_shed: cumulative,
    })
}

fn step(net: &Network, day: &DayInputs, tally: &ShedTally, cfg: &ScenarioConfig) -> Result<DayRecord> {
    let ctx = ObjectiveContext::new(day.alpha, &day.forecast, &day.risk)?;
    let base = solve_opt_psps(net, &day.forecast, &day.risk, &ctx, &cfg.solver)?;

    let (plan, fair_ctx) = match cfg.method {
        None => (None, None),
        Some(method) => {
            let fctx = FairContext {
                beta: cfg.beta,
                zeta: cfg.zeta,
                baseline_z: base.z.clone(),
                tally: tally.clone(),
            };
            let fm = build_opt_psps_fair(net, &day.forecast, &day.risk, &fctx, method)?;
            (Some(fm.inner.solve(&cfg.solver)?), Some((fctx, method)))
        }
    };
    let chosen = plan.as_ref().unwrap_or(&base);

    let realized = match (cfg.realtime, &fair_ctx) {
        (RealtimePolicy::FairObjective, Some((fctx, method))) => {
            let mut fm = build_opt_psps_fair(net, &day.actual, &day.risk, fctx, *method)?;
            fm.inner.fix_switching(&chosen.z);
            fm.inner.solve(&cfg.solver)?
        }
        _ => realtime_operate(net, &chosen.z, &day.actual, Some(&tally.values), &cfg.solver)?,
    };

    let min_shed = if cfg.compute_bounds {
        Some(min_shed_bound(net, day, &base.z, cfg.zeta, &cfg.solver)?)
    } else {
        None
    };

    Ok(DayRecord {
        day: day.day,
        alpha: day.alpha,
        total_risk: day.total_risk(),
        risk_energized_base: base.energized_risk(&day.risk),
        risk_energized: chosen.energized_risk(&day.risk),
        objective_base: base.objective,
        objective_fair: plan.as_ref().map(|p| p.objective),
        status_base: base.status,
        status_fair: plan.as_ref().map(|p| p.status),
        predicted_shed: chosen.shed.clone(),
        actual_shed: realized.shed,
        actual_demand: day.actual.bus_totals(),
        min_shed,
        z_base: base.z.clone(),
        z: chosen.z.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    fn day(demand: DemandProfile, risk: Vec<f64>, alpha: f64) -> DayInputs {
        DayInputs {
            day: 1,
            risk,
            forecast: demand.clone(),
            actual: demand,
            alpha,
        }
    }

    fn exact() -> ScenarioConfig {
        ScenarioConfig {
            solver: SolverConfig::default().with_gap(1e-6),
            ..Default::default()
        }
    }

    #[test]
    fn risk_free_triangle_keeps_everything_on() {
        let (net, demand) = synthetic::triangle();
        let res = run_baseline(&net, &[day(demand, vec![0.0; 3], 1.0)], &exact()).unwrap();
        assert_eq!(res.days[0].z, vec![true; 3]);
        assert!(res.days[0].shed_total_actual() < 1e-9);
    }

    #[test]
    fn alpha_zero_sheds_everything() {
        let (net, demand) = synthetic::triangle();
        let res = run_baseline(&net, &[day(demand, vec![1.0; 3], 0.0)], &exact()).unwrap();
        assert_eq!(res.days[0].z, vec![false; 3]);
        assert!((res.days[0].shed_total_actual() - 1.5).abs() < 1e-9);
    }

    #[test]
    fn realtime_all_off_sheds_all_demand() {
        let (net, demand) = synthetic::triangle();
        let cfg = SolverConfig::default();
        let s = realtime_operate(&net, &[false; 3], &demand, None, &cfg).unwrap();
        assert_eq!(s.shed, demand.values);
        let s = realtime_operate(&net, &[true; 3], &demand, None, &cfg).unwrap();
        assert!(s.total_shed() < 1e-9);
    }

    #[test]
    fn min_shed_bound_cases() {
        let (net, demand) = synthetic::triangle();
        let cfg = SolverConfig::default().with_gap(1e-6);
        let d = day(demand, vec![1.0; 3], 0.5);
        let b = min_shed_bound(&net, &d, &[true; 3], 0.05, &cfg).unwrap();
        assert!(b.predicted.abs() < 1e-9 && b.actual.abs() < 1e-9);
        let b = min_shed_bound(&net, &d, &[false; 3], 0.0, &cfg).unwrap();
        assert!((b.actual - 1.5).abs() < 1e-9);
        let huge = min_shed_bound(&net, &d, &[false, false, true], 1e6, &cfg).unwrap();
        assert!(huge.actual.abs() < 1e-9);
    }

    #[test]
    fn fair_run_needs_method() {
        let (net, demand) = synthetic::triangle();
        assert!(run_fair(&net, &[day(demand, vec![1.0; 3], 0.5)], &exact()).is_err());
    }

    #[test]
    fn outputs_have_expected_headers() {
        let (net, demand) = synthetic::triangle();
        let res = run_baseline(&net, &[day(demand, vec![1.0, 2.0, 3.0], 0.5)], &exact()).unwrap();
        assert!(res.days_csv().unwrap().starts_with("day,alpha,risk_energized,shed_total_pred,shed_total_actual,hamming\n"));
        assert_eq!(res.bus_shed_csv().unwrap().lines().count(), 4);
        assert_eq!(res.switching_csv().unwrap().lines().count(), 4);
        let back = SimulationResult::from_json(&res.to_json()).unwrap();
        assert_eq!(back, res);
        let geo = bus_shed_geojson(&net, &res);
        assert_eq!(geo["features"].as_array().unwrap().len(), 3);
    }
}
