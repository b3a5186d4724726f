//! Grid data model: buses, generators and lines with their geometry, plus the
//! derived incidence maps and big-M constants used by the switching model.
//!
//! All powers are per-unit on `base_mva` (100 MVA unless a case says otherwise).
//! Angles are radians.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Angle-difference limit applied when a case omits `delta_min`/`delta_max`.
pub const DEFAULT_ANGLE_LIMIT: f64 = 0.6;

pub const DEFAULT_BASE_MVA: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: u32,
    #[serde(default)]
    pub name: String,
    pub lon: f64,
    pub lat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: u32,
    pub bus: u32,
    pub g_min: f64,
    pub g_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: u32,
    #[serde(rename = "from")]
    pub from_bus: u32,
    #[serde(rename = "to")]
    pub to_bus: u32,
    /// Series reactance, p.u.
    pub x: f64,
    pub f_max: f64,
    #[serde(rename = "delta_min", default = "default_delta_min")]
    pub angle_min: f64,
    #[serde(rename = "delta_max", default = "default_delta_max")]
    pub angle_max: f64,
    /// Route as `(lon, lat)` vertices. Filled with the terminal-bus segment
    /// when a case leaves it out.
    #[serde(default)]
    pub path: Vec<[f64; 2]>,
}

fn default_delta_min() -> f64 {
    -DEFAULT_ANGLE_LIMIT
}

fn default_delta_max() -> f64 {
    DEFAULT_ANGLE_LIMIT
}

fn default_base_mva() -> f64 {
    DEFAULT_BASE_MVA
}

impl Line {
    /// Susceptance `b = -1/x`. The DC flow `-b (θ_fr - θ_to)` is then
    /// `(θ_fr - θ_to) / x`.
    pub fn susceptance(&self) -> f64 {
        -1.0 / self.x
    }

    /// Planar path length in degrees.
    pub fn path_length(&self) -> f64 {
        self.path
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .sum()
    }
}

/// On-disk case layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CaseFile {
    #[serde(default = "default_base_mva")]
    base_mva: f64,
    buses: Vec<Bus>,
    #[serde(default)]
    generators: Vec<Generator>,
    #[serde(default)]
    lines: Vec<Line>,
}

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    /// Force every generator lower limit to zero so that the all-off switching
    /// plan is always feasible.
    pub zero_gen_min: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self { zero_gen_min: true }
    }
}

/// Immutable grid. Entities keep their input order; everything downstream
/// addresses them by position.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub generators: Vec<Generator>,
    pub lines: Vec<Line>,
    bus_index: HashMap<u32, usize>,
    line_index: HashMap<u32, usize>,
}

impl Network {
    /// Cross-links the entity lists. Fails on duplicate ids or references to
    /// unknown buses; invariant checks are left to [`validate`].
    pub fn new(
        base_mva: f64,
        buses: Vec<Bus>,
        generators: Vec<Generator>,
        mut lines: Vec<Line>,
    ) -> Result<Self> {
        let mut bus_index = HashMap::with_capacity(buses.len());
        for (i, bus) in buses.iter().enumerate() {
            if bus_index.insert(bus.id, i).is_some() {
                return Err(Error::DuplicateId {
                    kind: "bus",
                    id: bus.id,
                });
            }
        }
        let mut seen = HashMap::with_capacity(generators.len());
        for gen in &generators {
            if seen.insert(gen.id, ()).is_some() {
                return Err(Error::DuplicateId {
                    kind: "generator",
                    id: gen.id,
                });
            }
            if !bus_index.contains_key(&gen.bus) {
                return Err(Error::DanglingReference {
                    kind: "generator",
                    id: gen.id,
                    bus: gen.bus,
                });
            }
        }
        let mut line_index = HashMap::with_capacity(lines.len());
        for (i, line) in lines.iter_mut().enumerate() {
            if line_index.insert(line.id, i).is_some() {
                return Err(Error::DuplicateId {
                    kind: "line",
                    id: line.id,
                });
            }
            for bus in [line.from_bus, line.to_bus] {
                if !bus_index.contains_key(&bus) {
                    return Err(Error::DanglingReference {
                        kind: "line",
                        id: line.id,
                        bus,
                    });
                }
            }
            if line.path.is_empty() {
                let a = &buses[bus_index[&line.from_bus]];
                let b = &buses[bus_index[&line.to_bus]];
                line.path = vec![[a.lon, a.lat], [b.lon, b.lat]];
            }
        }
        Ok(Self {
            base_mva,
            buses,
            generators,
            lines,
            bus_index,
            line_index,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_json_with(text, LoadOptions::default())
    }

    pub fn from_json_with(text: &str, opts: LoadOptions) -> Result<Self> {
        let mut case: CaseFile = serde_json::from_str(text)?;
        if opts.zero_gen_min {
            for gen in &mut case.generators {
                gen.g_min = 0.0;
            }
        }
        Self::new(case.base_mva, case.buses, case.generators, case.lines)
    }

    pub fn from_path(path: impl AsRef<Path>, opts: LoadOptions) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_with(&text, opts)
    }

    pub fn to_json(&self) -> String {
        let case = CaseFile {
            base_mva: self.base_mva,
            buses: self.buses.clone(),
            generators: self.generators.clone(),
            lines: self.lines.clone(),
        };
        serde_json::to_string_pretty(&case).expect("case serialization is infallible")
    }

    pub fn bus_position(&self, id: u32) -> Option<usize> {
        self.bus_index.get(&id).copied()
    }

    pub fn line_position(&self, id: u32) -> Option<usize> {
        self.line_index.get(&id).copied()
    }

    pub fn line_ends(&self, line: usize) -> (usize, usize) {
        let l = &self.lines[line];
        (self.bus_index[&l.from_bus], self.bus_index[&l.to_bus])
    }

    pub fn generator_bus(&self, gen: usize) -> usize {
        self.bus_index[&self.generators[gen].bus]
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn n_generators(&self) -> usize {
        self.generators.len()
    }
}

/// Parses a JSON case with default [`LoadOptions`].
pub fn parse_case(text: &str) -> Result<Network> {
    Network::from_json(text)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: &'static str,
    pub id: u32,
    pub rule: &'static str,
    pub detail: String,
}

/// Checks every entity invariant. An empty list means the network is usable.
pub fn validate(net: &Network) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |kind, id, rule, detail: String| {
        out.push(Violation {
            kind,
            id,
            rule,
            detail,
        })
    };
    if !(net.base_mva.is_finite() && net.base_mva > 0.0) {
        push("case", 0, "base_mva_positive", format!("{}", net.base_mva));
    }
    for bus in &net.buses {
        if !(bus.lon.is_finite() && bus.lat.is_finite()) {
            push(
                "bus",
                bus.id,
                "finite_coordinates",
                format!("({}, {})", bus.lon, bus.lat),
            );
        }
    }
    for gen in &net.generators {
        if !(gen.g_min.is_finite() && gen.g_max.is_finite()) {
            push("generator", gen.id, "finite_limits", String::new());
        } else if gen.g_min < 0.0 {
            push(
                "generator",
                gen.id,
                "g_min_nonnegative",
                format!("g_min = {}", gen.g_min),
            );
        } else if gen.g_min > gen.g_max {
            push(
                "generator",
                gen.id,
                "g_min_le_g_max",
                format!("g_min = {} > g_max = {}", gen.g_min, gen.g_max),
            );
        }
    }
    for line in &net.lines {
        if line.from_bus == line.to_bus {
            push(
                "line",
                line.id,
                "distinct_terminals",
                format!("both ends at bus {}", line.from_bus),
            );
        }
        if !(line.f_max.is_finite() && line.f_max > 0.0) {
            push(
                "line",
                line.id,
                "f_max_positive",
                format!("f_max = {}", line.f_max),
            );
        }
        if !(line.angle_min < 0.0 && line.angle_max > 0.0)
            || !line.angle_min.is_finite()
            || !line.angle_max.is_finite()
        {
            push(
                "line",
                line.id,
                "angle_limits_straddle_zero",
                format!("[{}, {}]", line.angle_min, line.angle_max),
            );
        }
        if line.x == 0.0 || !line.x.is_finite() {
            push("line", line.id, "reactance_nonzero", format!("x = {}", line.x));
        }
        if line.path.iter().flatten().any(|c| !c.is_finite()) {
            push("line", line.id, "finite_path", String::new());
        }
    }
    out
}

/// Big-M constants for the switched angle and flow constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BigM {
    pub lo: f64,
    pub hi: f64,
}

/// Sums the angle-difference limits over all lines.
pub fn compute_big_m(net: &Network) -> BigM {
    let (lo, hi) = net
        .lines
        .iter()
        .fold((0.0, 0.0), |(lo, hi), l| (lo + l.angle_min, hi + l.angle_max));
    BigM { lo, hi }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BusIncidence {
    pub lines_from: Vec<usize>,
    pub lines_to: Vec<usize>,
    pub generators: Vec<usize>,
}

/// Per-bus incidence, indexed by bus position. Every bus gets an entry.
pub fn incidence(net: &Network) -> Vec<BusIncidence> {
    let mut out = vec![BusIncidence::default(); net.n_buses()];
    for l in 0..net.n_lines() {
        let (fr, to) = net.line_ends(l);
        out[fr].lines_from.push(l);
        out[to].lines_to.push(l);
    }
    for g in 0..net.n_generators() {
        out[net.generator_bus(g)].generators.push(g);
    }
    out
}
