//! CSV readers for demand, system load profiles and per-line risk.

use std::collections::{BTreeMap, HashSet};
use std::io::Read;

use serde::Deserialize;

use super::{DemandProfile, MAX_HORIZON};
use crate::error::{Error, Result};
use crate::network::Network;

#[derive(Deserialize)]
struct DemandRow {
    bus_id: u32,
    hour: usize,
    value_pu: f64,
}

#[derive(Deserialize)]
struct ProfileRow {
    hour: usize,
    fraction: f64,
}

#[derive(Deserialize)]
struct RiskRow {
    day: u32,
    line_id: u32,
    risk: f64,
}

/// Deserializes every record, pairing it with its 1-based file line.
fn records<T, R>(reader: R, context: &str) -> Result<Vec<(usize, T)>>
where
    T: for<'de> Deserialize<'de>,
    R: Read,
{
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize::<T>()
        .enumerate()
        .map(|(i, rec)| {
            rec.map(|row| (i + 2, row)).map_err(|source| Error::Csv {
                context: context.to_string(),
                source,
            })
        })
        .collect()
}

fn table_err(context: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Table {
        context: context.to_string(),
        line: line as u64,
        message: message.into(),
    }
}

/// Reads one day of `bus_id,hour,value_pu` rows. Hours are 1-based. Missing
/// bus-hours are zero. When `horizon` is `None` it is the largest hour seen.
pub fn read_demand_csv<R: Read>(net: &Network, reader: R, horizon: Option<usize>) -> Result<DemandProfile> {
    const CTX: &str = "demand csv";
    let mut entries = Vec::new();
    for (line, row) in records::<DemandRow, _>(reader, CTX)? {
        let bus = net
            .bus_position(row.bus_id)
            .ok_or_else(|| table_err(CTX, line, format!("unknown bus {}", row.bus_id)))?;
        if row.hour == 0 || row.hour > MAX_HORIZON {
            return Err(table_err(CTX, line, format!("hour {} outside 1..={MAX_HORIZON}", row.hour)));
        }
        if !(row.value_pu.is_finite() && row.value_pu >= 0.0) {
            return Err(table_err(CTX, line, format!("demand must be non-negative, got {}", row.value_pu)));
        }
        entries.push((line, bus, row.hour, row.value_pu));
    }
    let t_max = entries.iter().map(|e| e.2).max().unwrap_or(0);
    let horizon = match horizon {
        Some(h) if t_max > h => {
            return Err(Error::HorizonMismatch {
                expected: h,
                found: t_max,
            })
        }
        Some(h) => h,
        None => t_max,
    };
    if horizon == 0 {
        return Err(table_err(CTX, 1, "no demand rows"));
    }
    let mut values = vec![vec![0.0; horizon]; net.n_buses()];
    let mut seen = HashSet::new();
    for (line, bus, hour, v) in entries {
        if !seen.insert((bus, hour)) {
            return Err(table_err(CTX, line, format!("duplicate entry for bus {} hour {hour}", net.buses[bus].id)));
        }
        values[bus][hour - 1] = v;
    }
    Ok(DemandProfile::new(values))
}

/// Reads `hour,fraction` rows; hours must cover 1..=T exactly once.
pub fn read_profile_csv<R: Read>(reader: R) -> Result<Vec<f64>> {
    const CTX: &str = "profile csv";
    let mut by_hour = BTreeMap::new();
    for (line, row) in records::<ProfileRow, _>(reader, CTX)? {
        if row.hour > MAX_HORIZON {
            return Err(table_err(CTX, line, format!("hour {} beyond {MAX_HORIZON}", row.hour)));
        }
        if !row.fraction.is_finite() {
            return Err(table_err(CTX, line, "fraction must be finite"));
        }
        if by_hour.insert(row.hour, row.fraction).is_some() {
            return Err(table_err(CTX, line, format!("duplicate hour {}", row.hour)));
        }
    }
    for (expect, hour) in (1..).zip(by_hour.keys()) {
        if *hour != expect {
            return Err(table_err(CTX, 1, format!("hours must run 1..=T without gaps, missing {expect}")));
        }
    }
    Ok(by_hour.into_values().collect())
}

/// Per-line risk for a sequence of days, as read from `day,line_id,risk`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskTable {
    /// Day labels in ascending order.
    pub days: Vec<u32>,
    /// `values[k][l]`: risk of line position `l` on `days[k]`.
    pub values: Vec<Vec<f64>>,
}

pub fn read_risk_csv<R: Read>(net: &Network, reader: R) -> Result<RiskTable> {
    const CTX: &str = "risk csv";
    let mut by_day: BTreeMap<u32, Vec<Option<f64>>> = BTreeMap::new();
    for (line, row) in records::<RiskRow, _>(reader, CTX)? {
        let l = net
            .line_position(row.line_id)
            .ok_or_else(|| table_err(CTX, line, format!("unknown line {}", row.line_id)))?;
        if !(row.risk.is_finite() && row.risk >= 0.0) {
            return Err(table_err(CTX, line, format!("risk must be non-negative, got {}", row.risk)));
        }
        let day = by_day.entry(row.day).or_insert_with(|| vec![None; net.n_lines()]);
        if day[l].replace(row.risk).is_some() {
            return Err(table_err(CTX, line, format!("duplicate risk for day {} line {}", row.day, row.line_id)));
        }
    }
    let mut table = RiskTable {
        days: Vec::with_capacity(by_day.len()),
        values: Vec::with_capacity(by_day.len()),
    };
    for (day, vals) in by_day {
        let mut out = Vec::with_capacity(vals.len());
        for (l, v) in vals.into_iter().enumerate() {
            match v {
                Some(v) => out.push(v),
                None => {
                    return Err(Error::UnknownId {
                        kind: "day",
                        id: day,
                        target: "risk for line",
                        missing: net.lines[l].id,
                    })
                }
            }
        }
        table.days.push(day);
        table.values.push(out);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    #[test]
    fn demand_rows_fill_profile() {
        let (net, _) = synthetic::triangle();
        let csv = "bus_id,hour,value_pu\n2,1,1.0\n3,2,0.5\n";
        let d = read_demand_csv(&net, csv.as_bytes(), None).unwrap();
        assert_eq!(d.horizon(), 2);
        assert_eq!(d.values[1], vec![1.0, 0.0]);
        assert_eq!(d.values[2], vec![0.0, 0.5]);
        assert_eq!(d.values[0], vec![0.0, 0.0]);
    }

    #[test]
    fn demand_errors() {
        let (net, _) = synthetic::triangle();
        for bad in [
            "bus_id,hour,value_pu\n9,1,1.0\n",
            "bus_id,hour,value_pu\n2,0,1.0\n",
            "bus_id,hour,value_pu\n2,1,-1.0\n",
            "bus_id,hour,value_pu\n2,1,1.0\n2,1,2.0\n",
            "bus_id,hour,value_pu\n2,x,1.0\n",
            "bus_id,hour,value_pu\n",
        ] {
            assert!(read_demand_csv(&net, bad.as_bytes(), None).is_err(), "{bad}");
        }
        let long = "bus_id,hour,value_pu\n2,5,1.0\n";
        assert!(matches!(
            read_demand_csv(&net, long.as_bytes(), Some(4)),
            Err(Error::HorizonMismatch { expected: 4, found: 5 })
        ));
    }

    #[test]
    fn profile_must_be_contiguous() {
        let p = read_profile_csv("hour,fraction\n2,1.0\n1,0.6\n".as_bytes()).unwrap();
        assert_eq!(p, vec![0.6, 1.0]);
        assert!(read_profile_csv("hour,fraction\n1,0.6\n3,1.0\n".as_bytes()).is_err());
    }

    #[test]
    fn risk_table_requires_every_line() {
        let (net, _) = synthetic::triangle();
        let ok = "day,line_id,risk\n1,1,3\n1,2,0\n1,3,1.5\n2,1,1\n2,2,1\n2,3,1\n";
        let t = read_risk_csv(&net, ok.as_bytes()).unwrap();
        assert_eq!(t.days, vec![1, 2]);
        assert_eq!(t.values[0], vec![3.0, 0.0, 1.5]);
        let missing = "day,line_id,risk\n1,1,3\n1,2,0\n";
        assert!(read_risk_csv(&net, missing.as_bytes()).is_err());
        let negative = "day,line_id,risk\n1,1,-3\n";
        assert!(read_risk_csv(&net, negative.as_bytes()).is_err());
    }
}
