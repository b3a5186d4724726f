//! Deterministic fixtures and synthetic seasons.
//!
//! Real wildfire rasters and utility load data are not bundled, so examples,
//! tests and demos run on networks built here.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ingest::{assemble_season, line_risks, AlphaSchedule, DayInputs, DemandProfile, RiskRaster, MAX_INDEX};
use crate::network::{Bus, Generator, Line, Network, DEFAULT_ANGLE_LIMIT, DEFAULT_BASE_MVA};

fn bus(id: u32, lon: f64, lat: f64) -> Bus {
    Bus {
        id,
        name: format!("bus{id}"),
        lon,
        lat,
    }
}

fn gen(id: u32, bus: u32, g_max: f64) -> Generator {
    Generator {
        id,
        bus,
        g_min: 0.0,
        g_max,
    }
}

fn line(id: u32, from_bus: u32, to_bus: u32, x: f64, f_max: f64) -> Line {
    Line {
        id,
        from_bus,
        to_bus,
        x,
        f_max,
        angle_min: -DEFAULT_ANGLE_LIMIT,
        angle_max: DEFAULT_ANGLE_LIMIT,
        path: Vec::new(),
    }
}

fn build(buses: Vec<Bus>, gens: Vec<Generator>, lines: Vec<Line>) -> Network {
    Network::new(DEFAULT_BASE_MVA, buses, gens, lines).expect("synthetic networks are consistent")
}

/// Three buses, one generator at bus 1 (2.0 p.u.), lines 1→2, 1→3, 2→3 with
/// x = 0.1, f_max = 1.0, angles ±0.6. One hour of demand (0, 1.0, 0.5).
pub fn triangle() -> (Network, DemandProfile) {
    let net = build(
        vec![bus(1, 0.0, 0.0), bus(2, 1.0, 0.0), bus(3, 0.5, 1.0)],
        vec![gen(1, 1, 2.0)],
        vec![line(1, 1, 2, 0.1, 1.0), line(2, 1, 3, 0.1, 1.0), line(3, 2, 3, 0.1, 1.0)],
    );
    (net, DemandProfile::new(vec![vec![0.0], vec![1.0], vec![0.5]]))
}

/// Generator bus 1 (2.0 p.u.) feeding load bus 2 over one line. One hour,
/// demand (0, 1.0).
pub fn two_bus() -> (Network, DemandProfile) {
    let net = build(
        vec![bus(1, 0.0, 0.0), bus(2, 1.0, 0.0)],
        vec![gen(1, 1, 2.0)],
        vec![line(1, 1, 2, 0.1, 1.0)],
    );
    (net, DemandProfile::new(vec![vec![0.0], vec![1.0]]))
}

/// Generator hub A (bus 1) radially feeding B (bus 2, line 1) and C (bus 3,
/// line 2). One hour with demands `demand_b`, `demand_c`; line risks are up to
/// the caller.
pub fn star(demand_b: f64, demand_c: f64) -> (Network, DemandProfile) {
    let cap = 2.0 * (demand_b + demand_c) + 1.0;
    let net = build(
        vec![bus(1, 0.0, 0.0), bus(2, 1.0, 0.0), bus(3, -1.0, 0.0)],
        vec![gen(1, 1, cap)],
        vec![line(1, 1, 2, 0.1, cap), line(2, 1, 3, 0.1, cap)],
    );
    (net, DemandProfile::new(vec![vec![0.0], vec![demand_b], vec![demand_c]]))
}

/// Small random instance for oracle comparisons.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub network: Network,
    pub demand: DemandProfile,
    pub risk: Vec<f64>,
    pub alpha: f64,
}

/// Connected network with `3..=max_buses` buses and at most `max_lines`
/// lines, 1-2 generators, random risk and `1..=max_hours` hours of demand.
pub fn random_instance(seed: u64, max_buses: usize, max_lines: usize, max_hours: usize) -> RandomInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..=max_buses.max(3));
    let buses: Vec<Bus> = (1..=n as u32)
        .map(|id| bus(id, rng.random_range(0.0..5.0), rng.random_range(0.0..5.0)))
        .collect();

    let mut pairs: Vec<(u32, u32)> = Vec::new();
    for i in 2..=n as u32 {
        pairs.push((rng.random_range(1..i), i));
    }
    let target = rng.random_range(n - 1..=max_lines.max(n - 1));
    let mut attempts = 0;
    while pairs.len() < target && attempts < 100 {
        attempts += 1;
        let a = rng.random_range(1..=n as u32);
        let b = rng.random_range(1..=n as u32);
        if a != b && !pairs.iter().any(|&(p, q)| (p, q) == (a, b) || (p, q) == (b, a)) {
            pairs.push((a, b));
        }
    }
    let lines: Vec<Line> = pairs
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            let mut l = line(k as u32 + 1, a, b, rng.random_range(0.05..0.3), rng.random_range(0.3..1.5));
            let lim = rng.random_range(0.05..0.6);
            l.angle_min = -lim;
            l.angle_max = lim;
            l
        })
        .collect();

    let n_gens = rng.random_range(1..=2);
    let gens: Vec<Generator> = (1..=n_gens)
        .map(|id| gen(id, rng.random_range(1..=n as u32), rng.random_range(0.5..2.5)))
        .collect();

    let hours = rng.random_range(1..=max_hours.max(1));
    let demand = (0..n)
        .map(|_| {
            let zero = rng.random_bool(0.25);
            (0..hours)
                .map(|_| if zero { 0.0 } else { rng.random_range(0.0..1.0) })
                .collect()
        })
        .collect();
    let risk = (0..lines.len()).map(|_| rng.random_range(0.0..10.0)).collect();
    RandomInstance {
        network: build(buses, gens, lines),
        demand: DemandProfile::new(demand),
        risk,
        alpha: rng.random_range(0.0..=1.0),
    }
}

/// Three interconnected 24-bus areas plus one extra bus: 73 buses, 99
/// generators and 120 lines, shaped after the common reliability test
/// system. Parameters are drawn from `seed`.
pub fn rts_style(seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buses = Vec::new();
    let mut lines = Vec::new();
    let mut gens = Vec::new();
    let mut next_line = 1;
    let mut add_line = |lines: &mut Vec<Line>, rng: &mut ChaCha8Rng, a: u32, b: u32| {
        lines.push(line(next_line, a, b, rng.random_range(0.02..0.2), rng.random_range(1.5..5.0)));
        next_line += 1;
    };
    for area in 0..3u32 {
        let base = area * 100;
        let (lon0, lat0) = (-122.0 + 1.5 * area as f64, 38.0);
        for k in 1..=24u32 {
            let (row, col) = ((k - 1) / 6, (k - 1) % 6);
            buses.push(bus(base + 100 + k, lon0 + 0.2 * col as f64, lat0 - 0.2 * row as f64));
        }
        // 4x6 grid: 20 horizontal and 18 vertical neighbours.
        for k in 1..=24u32 {
            let (row, col) = ((k - 1) / 6, (k - 1) % 6);
            if col < 5 {
                add_line(&mut lines, &mut rng, base + 100 + k, base + 101 + k);
            }
            if row < 3 {
                add_line(&mut lines, &mut rng, base + 100 + k, base + 106 + k);
            }
        }
        for g in 0..33u32 {
            let at = base + 101 + (g * 7) % 24;
            gens.push(gen(area * 100 + g + 1, at, rng.random_range(0.2..1.5)));
        }
    }
    buses.push(bus(325, -119.0, 37.0));
    for (a, b) in [(106, 201), (118, 213), (206, 301), (218, 313), (124, 319)] {
        add_line(&mut lines, &mut rng, a, b);
    }
    add_line(&mut lines, &mut rng, 324, 325);
    build(buses, gens, lines)
}

/// Normalized daily load shape with its peak at 1, sampled at `hours`
/// evenly spaced points of the day.
pub fn daily_shape(hours: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..hours)
        .map(|h| {
            let t = (h as f64 + 0.5) / hours as f64;
            0.75 + 0.25 * (TAU * (t - 0.4)).sin()
        })
        .collect();
    let peak = raw.iter().cloned().fold(f64::MIN, f64::max);
    raw.iter().map(|v| v / peak).collect()
}

/// Shape of a meshed-core, radial-pocket season.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PocketSpec {
    pub core_buses: usize,
    pub pockets: usize,
    pub days: usize,
    pub hours: usize,
    /// Relative risk step between consecutive feeders; persistent, so the
    /// riskiest feeders are the same every day.
    pub risk_step: f64,
    /// Fraction of system demand located in the pockets.
    pub pocket_share: f64,
    /// Risk of the supply tie before weather scaling. Feeders start at 10.
    pub tie_risk: f64,
    /// Daily weather multiplies all risk by a factor in `1 ± weather_spread`.
    pub weather_spread: f64,
    pub seed: u64,
}

impl Default for PocketSpec {
    fn default() -> Self {
        Self {
            core_buses: 6,
            pockets: 14,
            days: 10,
            hours: 4,
            risk_step: 0.04,
            pocket_share: 0.5,
            tie_risk: 118.0,
            weather_spread: 0.2,
            seed: 7,
        }
    }
}

/// Actual demand and line risk for a season on one network.
#[derive(Debug, Clone)]
pub struct SyntheticSeason {
    pub network: Network,
    pub demand: Vec<DemandProfile>,
    pub risk: Vec<Vec<f64>>,
}

impl SyntheticSeason {
    /// Forecasts, α schedule and day numbering, ready for simulation.
    pub fn inputs(&self, schedule: &AlphaSchedule, seed: u64) -> Result<Vec<DayInputs>> {
        assemble_season(self.demand.clone(), self.risk.clone(), schedule, seed)
    }

    /// α schedule calibrated on this season's own daily risk totals.
    pub fn schedule(&self) -> Result<AlphaSchedule> {
        let totals: Vec<f64> = self.risk.iter().map(|r| r.iter().sum()).collect();
        AlphaSchedule::from_history(&totals)
    }
}

/// A ring core fed from one supply bus over a single risky tie, plus radial
/// pockets of load each hanging off one risky feeder. Feeders differ slightly in
/// risk, so a risk-driven planner keeps cutting the same pockets; daily
/// weather scales all risk together.
pub fn pocket_season(spec: &PocketSpec) -> SyntheticSeason {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let nc = spec.core_buses.max(3) as u32;
    let np = spec.pockets as u32;
    let supply = nc + np + 1;
    let mut buses = Vec::new();
    let mut lines = Vec::new();
    for k in 0..nc {
        let a = TAU * k as f64 / nc as f64;
        buses.push(bus(k + 1, a.cos(), a.sin()));
    }
    let mut id = 1;
    for k in 0..nc {
        lines.push(line(id, k + 1, (k + 1) % nc + 1, 0.05, 10.0));
        id += 1;
    }
    for k in 0..np {
        let host = k % nc + 1;
        let a = TAU * (k as f64 + 0.5) / np as f64;
        buses.push(bus(nc + k + 1, 2.5 * a.cos(), 2.5 * a.sin()));
        lines.push(line(id, host, nc + k + 1, 0.1, 5.0));
        id += 1;
    }
    buses.push(bus(supply, 0.0, 0.0));
    lines.push(line(id, supply, 1, 0.05, 12.0));
    let gens = vec![gen(1, supply, 15.0)];
    let network = build(buses, gens, lines);

    let shape = daily_shape(spec.hours);
    let pocket_load = spec.pocket_share / np.max(1) as f64;
    let core_load = (1.0 - spec.pocket_share) / nc as f64;
    // System peak is 10 p.u.
    let nominal: Vec<f64> = (0..nc)
        .map(|_| core_load)
        .chain((0..np).map(|_| pocket_load * rng.random_range(0.95..1.05)))
        .chain(std::iter::once(0.0))
        .map(|v| v * 10.0)
        .collect();

    let spread = spec.weather_spread.clamp(0.0, 0.99);
    let mut demand = Vec::with_capacity(spec.days);
    let mut risk = Vec::with_capacity(spec.days);
    for _ in 0..spec.days {
        let weather = if spread > 0.0 {
            rng.random_range(1.0 - spread..1.0 + spread)
        } else {
            1.0
        };
        let values = nominal
            .iter()
            .map(|&nom| shape.iter().map(|s| nom * s * rng.random_range(0.97..1.03)).collect())
            .collect();
        demand.push(DemandProfile::new(values));
        let day_risk = (0..nc)
            .map(|_| weather * rng.random_range(0.0..0.5))
            .chain((0..np).map(|k| weather * 10.0 * (1.0 + spec.risk_step * k as f64)))
            .chain(std::iter::once(weather * spec.tie_risk))
            .collect();
        risk.push(day_risk);
    }
    SyntheticSeason {
        network,
        demand,
        risk,
    }
}

/// Fire-potential raster covering the network's buses, peaking along a
/// randomly oriented ridge through the middle of the area.
pub fn ridge_raster(net: &Network, seed: u64) -> RiskRaster {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lons = net.buses.iter().map(|b| b.lon);
    let lats = net.buses.iter().map(|b| b.lat);
    let (lon0, lon1) = lons.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (lat0, lat1) = lats.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let cells = 40;
    let span = (lon1 - lon0).max(lat1 - lat0).max(1e-3) * 1.2;
    let cell = span / cells as f64;
    let origin = [(lon0 + lon1 - span) / 2.0, (lat0 + lat1 + span) / 2.0];
    let angle = rng.random_range(0.0..std::f64::consts::PI);
    let (dx, dy) = (angle.cos(), angle.sin());
    let width = rng.random_range(0.1..0.3) * span;
    let values = (0..cells)
        .map(|r| {
            (0..cells)
                .map(|c| {
                    let x = (c as f64 + 0.5) * cell - span / 2.0;
                    let y = span / 2.0 - (r as f64 + 0.5) * cell;
                    let off = x * dy - y * dx;
                    (MAX_INDEX * (-(off / width).powi(2)).exp()).round()
                })
                .collect()
        })
        .collect();
    RiskRaster::new(origin, cell, values).expect("ridge raster values are in range")
}

/// Season on the 73-bus system: random nominal loads on most buses, a daily
/// load shape, and line risk from a ridge raster scaled by daily weather.
pub fn rts_season(seed: u64, days: usize, hours: usize) -> SyntheticSeason {
    let network = rts_style(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let base_risk = line_risks(&network, &ridge_raster(&network, seed), 0.1).expect("paths are non-empty");
    let shape = daily_shape(hours);
    let nominal: Vec<f64> = (0..network.n_buses())
        .map(|_| if rng.random_bool(0.7) { rng.random_range(0.2..1.2) } else { 0.0 })
        .collect();
    let mut demand = Vec::with_capacity(days);
    let mut risk = Vec::with_capacity(days);
    for _ in 0..days {
        let weather = rng.random_range(0.5..1.5);
        demand.push(DemandProfile::new(
            nominal
                .iter()
                .map(|&nom| shape.iter().map(|s| nom * s * rng.random_range(0.97..1.03)).collect())
                .collect(),
        ));
        risk.push(base_risk.iter().map(|r| r * weather).collect());
    }
    SyntheticSeason {
        network,
        demand,
        risk,
    }
}
