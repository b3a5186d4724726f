//! Independent reference computations shared by the integration tests.
//!
//! The oracle never touches the big-M model: it enumerates every switching
//! plan and solves the physical DC dispatch of the energized lines directly.
#![allow(dead_code)]

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use psps_core::{DemandProfile, Network};

/// Least total shed with the plan `z` fixed, or `None` if no dispatch exists.
/// Energized lines carry `(θ_from - θ_to) / x` within their flow and angle
/// limits; de-energized lines are simply absent.
pub fn dispatch_min_shed(net: &Network, demand: &DemandProfile, z: &[bool]) -> Option<f64> {
    let mut pb = Problem::new(OptimizationDirection::Minimize);
    let bus_pos = |id: u32| net.buses.iter().position(|b| b.id == id).unwrap();
    let hours = demand.horizon();
    let mut injection: Vec<Vec<Vec<(microlp::Variable, f64)>>> = vec![vec![Vec::new(); hours]; net.buses.len()];
    for t in 0..hours {
        let theta: Vec<_> = net
            .buses
            .iter()
            .map(|_| pb.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
            .collect();
        for g in &net.generators {
            let v = pb.add_var(0.0, (g.g_min, g.g_max));
            injection[bus_pos(g.bus)][t].push((v, 1.0));
        }
        for n in 0..net.buses.len() {
            let d = demand.get(n, t);
            let s = pb.add_var(1.0, (0.0, d));
            injection[n][t].push((s, 1.0));
        }
        for (l, line) in net.lines.iter().enumerate() {
            if !z[l] {
                continue;
            }
            let (a, b) = (bus_pos(line.from_bus), bus_pos(line.to_bus));
            let diff = [(theta[a], 1.0), (theta[b], -1.0)];
            pb.add_constraint(&diff[..], ComparisonOp::Ge, line.angle_min.max(-line.f_max * line.x));
            pb.add_constraint(&diff[..], ComparisonOp::Le, line.angle_max.min(line.f_max * line.x));
            // Flow leaves `a` and enters `b`.
            injection[a][t].push((theta[a], -1.0 / line.x));
            injection[a][t].push((theta[b], 1.0 / line.x));
            injection[b][t].push((theta[a], 1.0 / line.x));
            injection[b][t].push((theta[b], -1.0 / line.x));
        }
    }
    for (n, per_hour) in injection.iter().enumerate() {
        for (t, terms) in per_hour.iter().enumerate() {
            // A bus on several lines sees the same angle more than once.
            let mut merged: Vec<(microlp::Variable, f64)> = Vec::new();
            for &(v, c) in terms {
                match merged.iter_mut().find(|(w, _)| w.idx() == v.idx()) {
                    Some(entry) => entry.1 += c,
                    None => merged.push((v, c)),
                }
            }
            pb.add_constraint(merged.as_slice(), ComparisonOp::Eq, demand.get(n, t));
        }
    }
    match pb.solve() {
        Ok(sol) => Some(sol.into_solution().ok()?.objective()),
        Err(microlp::Error::Infeasible) => None,
        Err(e) => panic!("oracle LP failed: {e}"),
    }
}

/// `(α/D) Σ s + ((1-α)/R) Σ r z`, dropping a term whose normalizer is zero.
pub fn weighted_objective(alpha: f64, demand_total: f64, risk: &[f64], shed: f64, z: &[bool]) -> f64 {
    let risk_total: f64 = risk.iter().sum();
    let energized: f64 = risk.iter().zip(z).filter(|(_, &on)| on).map(|(r, _)| r).sum();
    let mut obj = 0.0;
    if demand_total > 0.0 {
        obj += alpha / demand_total * shed;
    }
    if risk_total > 0.0 {
        obj += (1.0 - alpha) / risk_total * energized;
    }
    obj
}

/// Best objective over all `2^|L|` plans, with the minimizing plan.
pub fn brute_force(net: &Network, demand: &DemandProfile, risk: &[f64], alpha: f64) -> (f64, Vec<bool>) {
    let n = net.lines.len();
    assert!(n <= 16, "enumeration over {n} lines is too large");
    let mut best = (f64::INFINITY, Vec::new());
    for mask in 0u32..(1 << n) {
        let z: Vec<bool> = (0..n).map(|l| mask & (1 << l) != 0).collect();
        let Some(shed) = dispatch_min_shed(net, demand, &z) else {
            continue;
        };
        let obj = weighted_objective(alpha, demand.total(), risk, shed, &z);
        if obj < best.0 {
            best = (obj, z);
        }
    }
    best
}

/// Tally seen on day `j` (1-based) from its closed form
/// `S_j = Σ_{k<j} η^{j-k} shed_k`.
pub fn direct_tally(eta: f64, sheds: &[Vec<f64>], j: usize) -> Vec<f64> {
    let n = sheds.first().map_or(0, |s| s.len());
    (0..n)
        .map(|bus| (1..j).map(|k| eta.powi((j - k) as i32) * sheds[k - 1][bus]).sum())
        .collect()
}
