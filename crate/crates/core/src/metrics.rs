//! Evaluation metrics over finished simulations, and beta sweeps.

use std::thread;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::DayInputs;
use crate::network::Network;
use crate::sim::{csv_string, run, run_baseline, ScenarioConfig, SimulationResult};

/// Cumulative shed above this percentage marks a sweep row as an outlier.
pub const OUTLIER_SHED_PCT: f64 = 40.0;

/// Realized shed as a percentage of realized demand over the whole run.
pub fn cumulative_shed_percent(result: &SimulationResult) -> Result<f64> {
    let demand = result.total_actual_demand();
    if !(demand > 0.0) {
        return Err(Error::InvalidParameter("total actual demand is zero".into()));
    }
    Ok(100.0 * result.total_actual_shed() / demand)
}

/// Mean absolute deviation of per-bus cumulative shed, divided by its mean.
/// Zero when nothing was shed.
pub fn mad_normalized(cumulative: &[f64]) -> f64 {
    if cumulative.is_empty() {
        return 0.0;
    }
    let n = cumulative.len() as f64;
    let mean = cumulative.iter().sum::<f64>() / n;
    if !(mean > 0.0) {
        return 0.0;
    }
    cumulative.iter().map(|c| (c - mean).abs()).sum::<f64>() / n / mean
}

pub fn mad_fairness(result: &SimulationResult) -> f64 {
    mad_normalized(&result.cumulative_shed)
}

/// Largest per-bus cumulative shed as a percentage of total realized demand.
pub fn max_shed_metric(result: &SimulationResult) -> Result<f64> {
    let demand = result.total_actual_demand();
    if !(demand > 0.0) {
        return Err(Error::InvalidParameter("total actual demand is zero".into()));
    }
    let worst = result.cumulative_shed.iter().cloned().fold(0.0, f64::max);
    Ok(100.0 * worst / demand)
}

/// Number of positions where two switching plans differ.
pub fn hamming(a: &[bool], b: &[bool]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::InvalidParameter(format!(
            "cannot compare plans of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count())
}

/// Hamming distance between risk-only and implemented plans, averaged over
/// every day.
pub fn mean_hamming(result: &SimulationResult) -> f64 {
    if result.days.is_empty() {
        return 0.0;
    }
    result.days.iter().map(|d| d.hamming() as f64).sum::<f64>() / result.days.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    /// One fairness run at a given β.
    Beta,
    /// Risk-only run.
    Star,
    /// Per-day least shed under the risk cap, summed over the run.
    Triangle,
}

impl RowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RowKind::Beta => "beta",
            RowKind::Star => "star",
            RowKind::Triangle => "triangle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub kind: RowKind,
    pub beta: Option<f64>,
    pub cumulative_shed_pct: f64,
    pub mad_normalized: Option<f64>,
    pub max_shed_pct: Option<f64>,
    pub mean_hamming: Option<f64>,
    pub outlier: bool,
}

impl MetricsRow {
    pub fn from_result(kind: RowKind, result: &SimulationResult) -> Result<Self> {
        let pct = cumulative_shed_percent(result)?;
        Ok(Self {
            kind,
            beta: result.beta,
            cumulative_shed_pct: pct,
            mad_normalized: Some(mad_fairness(result)),
            max_shed_pct: Some(max_shed_metric(result)?),
            mean_hamming: Some(mean_hamming(result)),
            outlier: pct > OUTLIER_SHED_PCT,
        })
    }

    /// Sum of the per-day actual-demand bounds attached to `result`, or
    /// `None` when the run did not compute bounds.
    pub fn triangle(result: &SimulationResult) -> Result<Option<Self>> {
        let mut total = 0.0;
        for d in &result.days {
            match d.min_shed {
                Some(b) => total += b.actual,
                None => return Ok(None),
            }
        }
        let demand = result.total_actual_demand();
        if !(demand > 0.0) {
            return Err(Error::InvalidParameter("total actual demand is zero".into()));
        }
        let pct = 100.0 * total / demand;
        Ok(Some(Self {
            kind: RowKind::Triangle,
            beta: None,
            cumulative_shed_pct: pct,
            mad_normalized: None,
            max_shed_pct: None,
            mean_hamming: None,
            outlier: pct > OUTLIER_SHED_PCT,
        }))
    }
}

/// Metrics of a sweep: β rows in input order, then star and triangle rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
}

impl MetricsReport {
    pub fn to_csv(&self) -> Result<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        csv_string(
            &["kind", "beta", "cumulative_shed_pct", "mad_normalized", "max_shed_pct", "mean_hamming", "outlier"],
            self.rows.iter().map(|r| {
                vec![
                    r.kind.as_str().to_string(),
                    opt(r.beta),
                    r.cumulative_shed_pct.to_string(),
                    opt(r.mad_normalized),
                    opt(r.max_shed_pct),
                    opt(r.mean_hamming),
                    r.outlier.to_string(),
                ]
            }),
        )
    }

    pub fn star(&self) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.kind == RowKind::Star)
    }

    pub fn triangle(&self) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.kind == RowKind::Triangle)
    }

    pub fn beta_rows(&self) -> impl Iterator<Item = &MetricsRow> {
        self.rows.iter().filter(|r| r.kind == RowKind::Beta)
    }
}

/// Longest β list a range may expand to.
pub const MAX_BETAS: usize = 10_000;

/// Parses `start:stop:step` (inclusive) or a comma-separated list. Values are
/// rounded to 1e-9 so that `0.05:0.95:0.05` yields exactly 19 clean values.
pub fn parse_betas(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidParameter(format!("cannot parse beta list {spec:?}"));
    let round = |x: f64| (x * 1e9).round() / 1e9;
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let values: Vec<f64> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [a, b, h] = parts.as_slice() else {
            return Err(bad());
        };
        let (a, b, h) = (num(a)?, num(b)?, num(h)?);
        if !(h > 0.0) || b < a {
            return Err(bad());
        }
        let n = ((b - a) / h + 1e-9).floor();
        if !(n < MAX_BETAS as f64) {
            return Err(Error::InvalidParameter(format!("beta range {spec:?} has too many points")));
        }
        let n = n as usize;
        (0..=n).map(|k| round(a + k as f64 * h)).collect()
    } else {
        spec.split(',').map(num).collect::<Result<_>>()?
    };
    if values.is_empty() || values.iter().any(|b| !(0.0..=1.0).contains(b)) {
        return Err(Error::InvalidParameter(format!("beta values must lie in [0, 1]: {spec:?}")));
    }
    Ok(values)
}

/// Finished runs of a sweep, kept alongside the metrics.
#[derive(Debug, Clone)]
pub struct SweepRuns {
    pub star: SimulationResult,
    pub fair: Vec<SimulationResult>,
    pub report: MetricsReport,
}

/// One fair run per β plus the risk-only reference (with per-day bounds).
/// Runs are independent and spread over up to `workers` threads; the report
/// does not depend on the thread count.
pub fn beta_sweep(
    net: &Network,
    inputs: &[DayInputs],
    template: &ScenarioConfig,
    betas: &[f64],
    workers: usize,
) -> Result<SweepRuns> {
    if template.method.is_none() {
        return Err(Error::InvalidParameter("sweep needs a fairness method".into()));
    }
    if let Some(b) = betas.iter().find(|b| !(0.0..=1.0).contains(*b)) {
        return Err(Error::InvalidParameter(format!("beta {b} outside [0, 1]")));
    }
    let star = run_baseline(
        net,
        inputs,
        &ScenarioConfig {
            compute_bounds: true,
            ..*template
        },
    )?;
    let fair_cfg = |beta: f64| ScenarioConfig {
        beta,
        compute_bounds: false,
        ..*template
    };

    let workers = workers.clamp(1, betas.len().max(1));
    let mut slots: Vec<Option<Result<SimulationResult>>> = (0..betas.len()).map(|_| None).collect();
    thread::scope(|scope| {
        for (w, chunk) in slots.chunks_mut(betas.len().div_ceil(workers).max(1)).enumerate() {
            let offset = w * betas.len().div_ceil(workers).max(1);
            let fair_cfg = &fair_cfg;
            scope.spawn(move || {
                for (k, slot) in chunk.iter_mut().enumerate() {
                    let beta = betas[offset + k];
                    *slot = Some(run(net, inputs, &fair_cfg(beta)).map_err(|e| Error::Sweep {
                        beta,
                        source: Box::new(e),
                    }));
                }
            });
        }
    });
    let fair: Vec<SimulationResult> = slots
        .into_iter()
        .map(|s| s.expect("every sweep slot is filled"))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(fair.len() + 2);
    for r in &fair {
        rows.push(MetricsRow::from_result(RowKind::Beta, r)?);
    }
    rows.push(MetricsRow::from_result(RowKind::Star, &star)?);
    if let Some(t) = MetricsRow::triangle(&star)? {
        rows.push(t);
    }
    Ok(SweepRuns {
        star,
        fair,
        report: MetricsReport { rows },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mad_examples() {
        assert_eq!(mad_normalized(&[3.0, 3.0, 3.0]), 0.0);
        assert_eq!(mad_normalized(&[1.0, 0.0]), 1.0);
        assert_eq!(mad_normalized(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming(&[true, false, true], &[true, false, true]).unwrap(), 0);
        assert_eq!(hamming(&[true, false, true], &[true, true, true]).unwrap(), 1);
        assert_eq!(hamming(&[true, false], &[false, true]).unwrap(), 2);
        assert!(hamming(&[true], &[true, false]).is_err());
    }

    #[test]
    fn beta_lists() {
        let b = parse_betas("0.05:0.95:0.05").unwrap();
        assert_eq!(b.len(), 19);
        assert_eq!(b[0], 0.05);
        assert_eq!(b[18], 0.95);
        assert_eq!(b[2], 0.15);
        assert_eq!(parse_betas("0.5").unwrap(), vec![0.5]);
        assert_eq!(parse_betas("0.1, 0.9").unwrap(), vec![0.1, 0.9]);
        assert!(parse_betas("0.1:0.2").is_err());
        assert!(parse_betas("1.5").is_err());
        assert!(parse_betas("a,b").is_err());
        assert!(parse_betas("0:1:1e-12").is_err());
    }
}
