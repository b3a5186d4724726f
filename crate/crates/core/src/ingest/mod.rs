//! Per-day inputs: line risk, hourly demand (actual and forecast) and the
//! scheduled load-versus-risk weight.

mod raster;
mod tables;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use raster::{integrate_line_risk, line_risks, RiskRaster, MAX_INDEX};
pub use tables::{read_demand_csv, read_profile_csv, read_risk_csv, RiskTable};

/// One leap year of hours; longer horizons are rejected at ingestion.
pub const MAX_HORIZON: usize = 24 * 366;

pub const DEFAULT_HORIZON: usize = 24;

/// Largest relative forecast error applied by [`perturb_demand`].
pub const FORECAST_ERROR: f64 = 0.02;

/// Hourly demand per bus in p.u., indexed `[bus][hour]` in network bus order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandProfile {
    pub values: Vec<Vec<f64>>,
}

impl DemandProfile {
    pub fn new(values: Vec<Vec<f64>>) -> Self {
        Self { values }
    }

    pub fn zeros(n_buses: usize, horizon: usize) -> Self {
        Self::new(vec![vec![0.0; horizon]; n_buses])
    }

    pub fn horizon(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn n_buses(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, bus: usize, hour: usize) -> f64 {
        self.values[bus][hour]
    }

    /// Demand of one bus summed over the horizon.
    pub fn bus_total(&self, bus: usize) -> f64 {
        self.values[bus].iter().sum()
    }

    pub fn bus_totals(&self) -> Vec<f64> {
        (0..self.n_buses()).map(|n| self.bus_total(n)).collect()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().flatten().sum()
    }

    /// Buses with strictly positive demand in every hour.
    pub fn demand_buses(&self) -> Vec<usize> {
        (0..self.n_buses())
            .filter(|&n| self.values[n].iter().all(|&d| d > 0.0))
            .collect()
    }

    pub fn check(&self, n_buses: usize, horizon: usize) -> Result<()> {
        if self.n_buses() != n_buses {
            return Err(Error::DemandMismatch {
                expected: n_buses,
                found: self.n_buses(),
            });
        }
        if let Some(row) = self.values.iter().find(|r| r.len() != horizon) {
            return Err(Error::HorizonMismatch {
                expected: horizon,
                found: row.len(),
            });
        }
        if self.values.iter().flatten().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidParameter("demand must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// `d[n][t] = nominal[n] * profile[t]`, where `profile` holds hourly fractions of
/// the peak load.
pub fn scale_demand(nominal: &[f64], profile: &[f64], horizon: usize) -> Result<DemandProfile> {
    if profile.len() != horizon {
        return Err(Error::HorizonMismatch {
            expected: horizon,
            found: profile.len(),
        });
    }
    if let Some(p) = profile.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
        return Err(Error::InvalidParameter(format!(
            "profile fractions must lie in (0, 1], got {p}"
        )));
    }
    if let Some(d) = nominal.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
        return Err(Error::InvalidParameter(format!("nominal demand must be non-negative, got {d}")));
    }
    Ok(DemandProfile::new(
        nominal
            .iter()
            .map(|&d| profile.iter().map(|&p| d * p).collect())
            .collect(),
    ))
}

/// Multiplies every bus-hour by an independent uniform factor in
/// `[1 - 0.02, 1 + 0.02]`. Deterministic in `seed`.
pub fn perturb_demand(profile: &DemandProfile, seed: u64) -> DemandProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = profile
        .values
        .iter()
        .map(|row| {
            row.iter()
                .map(|&d| d * rng.random_range(1.0 - FORECAST_ERROR..=1.0 + FORECAST_ERROR))
                .collect()
        })
        .collect();
    DemandProfile::new(values)
}

/// Maps a day's total risk onto the load-versus-risk weight α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaSchedule {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub hist_risk_min: f64,
    pub hist_risk_max: f64,
}

impl AlphaSchedule {
    pub const DEFAULT_ALPHA_LO: f64 = 0.3;
    pub const DEFAULT_ALPHA_HI: f64 = 0.6;

    pub fn new(alpha_lo: f64, alpha_hi: f64, hist_risk_min: f64, hist_risk_max: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha_lo) || !(0.0..=1.0).contains(&alpha_hi) || alpha_lo >= alpha_hi {
            return Err(Error::InvalidParameter(format!(
                "alpha bounds must satisfy 0 <= lo < hi <= 1, got [{alpha_lo}, {alpha_hi}]"
            )));
        }
        if !(hist_risk_min.is_finite() && hist_risk_max.is_finite()) || hist_risk_min >= hist_risk_max {
            return Err(Error::InvalidParameter(format!(
                "historical risk range must satisfy min < max, got [{hist_risk_min}, {hist_risk_max}]"
            )));
        }
        Ok(Self {
            alpha_lo,
            alpha_hi,
            hist_risk_min,
            hist_risk_max,
        })
    }

    /// Default α bounds with the historical range taken from the given daily
    /// totals. A degenerate range is widened down to zero risk.
    pub fn from_history(day_totals: &[f64]) -> Result<Self> {
        let lo = day_totals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = day_totals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = if lo < hi { lo } else { 0.0f64.min(hi - 1.0) };
        Self::new(Self::DEFAULT_ALPHA_LO, Self::DEFAULT_ALPHA_HI, lo, hi)
    }
}

/// High-risk days get `alpha_lo` (favour de-energizing), low-risk days get
/// `alpha_hi`; linear in between.
pub fn schedule_alpha(day_total_risk: f64, sched: &AlphaSchedule) -> f64 {
    if day_total_risk >= sched.hist_risk_max {
        sched.alpha_lo
    } else if day_total_risk <= sched.hist_risk_min {
        sched.alpha_hi
    } else {
        let frac = (day_total_risk - sched.hist_risk_min) / (sched.hist_risk_max - sched.hist_risk_min);
        sched.alpha_hi - (sched.alpha_hi - sched.alpha_lo) * frac
    }
}

/// Everything the operator knows, or will observe, about one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayInputs {
    pub day: usize,
    /// Risk incurred by each line if it stays energized, in line order.
    pub risk: Vec<f64>,
    /// Demand the optimizer plans against.
    pub forecast: DemandProfile,
    /// Demand realized during real-time operation.
    pub actual: DemandProfile,
    pub alpha: f64,
}

impl DayInputs {
    pub fn total_risk(&self) -> f64 {
        self.risk.iter().sum()
    }
}

/// Seed for one day's forecast noise.
pub fn day_seed(seed: u64, day: usize) -> u64 {
    seed ^ (day as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Pairs realized demand with risk, derives each day's forecast by
/// perturbation, and schedules α from the day's total risk. Days are numbered
/// from 1 in the given order.
pub fn assemble_season(
    actual: Vec<DemandProfile>,
    risk: Vec<Vec<f64>>,
    schedule: &AlphaSchedule,
    seed: u64,
) -> Result<Vec<DayInputs>> {
    if actual.len() != risk.len() {
        return Err(Error::InvalidParameter(format!(
            "{} demand days but {} risk days",
            actual.len(),
            risk.len()
        )));
    }
    Ok(actual
        .into_iter()
        .zip(risk)
        .enumerate()
        .map(|(k, (actual, risk))| {
            let day = k + 1;
            let forecast = perturb_demand(&actual, day_seed(seed, day));
            let alpha = schedule_alpha(risk.iter().sum(), schedule);
            DayInputs {
                day,
                risk,
                forecast,
                actual,
                alpha,
            }
        })
        .collect())
}
