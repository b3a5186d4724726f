//! Solver-neutral mixed-integer linear model with tagged rows and LP-format
//! export.

use std::fmt::{self, Write as _};

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// Constraint families. The tag doubles as the row-name prefix in LP exports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowTag {
    GenLimits,
    ShedLimits,
    FlowLimits,
    Angle,
    DcFlow,
    Balance,
    RiskCap,
    MinMax,
    Range,
    ShedTotal,
}

impl RowTag {
    pub fn as_str(self) -> &'static str {
        match self {
            RowTag::GenLimits => "gen_limits",
            RowTag::ShedLimits => "shed_limits",
            RowTag::FlowLimits => "flow_limits",
            RowTag::Angle => "angle",
            RowTag::DcFlow => "dcflow",
            RowTag::Balance => "balance",
            RowTag::RiskCap => "risk_cap",
            RowTag::MinMax => "minmax",
            RowTag::Range => "range",
            RowTag::ShedTotal => "shed_total",
        }
    }
}

impl fmt::Display for RowTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `Σ coeff·var + constant`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LinearExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinearExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn add(&mut self, var: VarId, coeff: f64) -> &mut Self {
        if coeff != 0.0 {
            self.terms.push((var, coeff));
        }
        self
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    /// Appends `scale · other`.
    pub fn add_scaled(&mut self, other: &LinearExpr, scale: f64) -> &mut Self {
        if scale != 0.0 {
            for &(v, c) in &other.terms {
                self.add(v, c * scale);
            }
            self.constant += other.constant * scale;
        }
        self
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * values[v.0]).sum::<f64>()
    }

    /// Coefficient of `var`, summing duplicates.
    pub fn coeff(&self, var: VarId) -> f64 {
        self.terms.iter().filter(|(v, _)| *v == var).map(|(_, c)| c).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraint {
    pub name: String,
    pub tag: RowTag,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    /// Amount by which `values` violate this row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let a = self.activity(values);
        match self.sense {
            Sense::Le => (a - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - a).max(0.0),
            Sense::Eq => (a - self.rhs).abs(),
        }
    }
}

/// Minimization model. Only linear terms can be expressed, so anything built
/// here is an LP or MILP by construction.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LinearModel {
    pub vars: Vec<Variable>,
    pub rows: Vec<Constraint>,
    pub objective: LinearExpr,
}

impl LinearModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, kind: VarKind) -> VarId {
        let id = VarId(self.vars.len());
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
            kind,
        });
        id
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.add_var(name, lower, upper, VarKind::Continuous)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, 0.0, 1.0, VarKind::Binary)
    }

    pub fn add_row(
        &mut self,
        tag: RowTag,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) {
        let terms = terms.into_iter().filter(|(_, c)| *c != 0.0).collect();
        self.rows.push(Constraint {
            name: name.into(),
            tag,
            terms,
            sense,
            rhs,
        });
    }

    pub fn n_continuous(&self) -> usize {
        self.vars.iter().filter(|v| v.kind == VarKind::Continuous).count()
    }

    pub fn n_binary(&self) -> usize {
        self.vars.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn rows_tagged(&self, tag: RowTag) -> impl Iterator<Item = &Constraint> {
        self.rows.iter().filter(move |r| r.tag == tag)
    }

    /// Pins a variable to a value by collapsing its bounds.
    pub fn fix(&mut self, var: VarId, value: f64) {
        let v = &mut self.vars[var.0];
        v.lower = value;
        v.upper = value;
    }

    /// Objective coefficients by variable position.
    pub fn dense_objective(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.vars.len()];
        for &(v, k) in &self.objective.terms {
            c[v.0] += k;
        }
        c
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.eval(values)
    }

    /// Largest bound or row violation at `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let bounds = self
            .vars
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0));
        let rows = self.rows.iter().map(|r| r.violation(values));
        bounds.chain(rows).fold(0.0, f64::max)
    }

    /// True when every referenced variable exists and every coefficient is
    /// finite.
    pub fn is_well_formed(&self) -> bool {
        let n = self.vars.len();
        let ok_terms = |terms: &[(VarId, f64)]| terms.iter().all(|&(v, c)| v.0 < n && c.is_finite());
        ok_terms(&self.objective.terms)
            && self.objective.constant.is_finite()
            && self.rows.iter().all(|r| ok_terms(&r.terms) && r.rhs.is_finite())
            && self.vars.iter().all(|v| !v.lower.is_nan() && !v.upper.is_nan() && v.lower <= v.upper)
    }

    /// Renders the model in CPLEX LP text format. Row names are
    /// `<tag>_<name>`.
    pub fn to_lp_string(&self) -> String {
        let mut out = String::new();
        out.push_str("\\ fairness-aware power shutoff model\nMinimize\n obj:");
        write_terms(&mut out, &self.objective.terms, &self.vars);
        if self.objective.constant != 0.0 {
            let _ = write!(out, " {} {}", sign(self.objective.constant), num(self.objective.constant.abs()));
        }
        if self.objective.terms.is_empty() && self.objective.constant == 0.0 {
            out.push_str(" 0");
        }
        out.push_str("\nSubject To\n");
        for r in &self.rows {
            let _ = write!(out, " {}_{}:", r.tag, r.name);
            if r.terms.is_empty() {
                // LP syntax needs at least one variable on the left.
                if let Some(v) = self.vars.first() {
                    let _ = write!(out, " 0 {}", v.name);
                }
            }
            write_terms(&mut out, &r.terms, &self.vars);
            let op = match r.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(out, " {op} {}", num(r.rhs));
        }
        out.push_str("Bounds\n");
        for v in &self.vars {
            match (v.lower.is_finite(), v.upper.is_finite()) {
                (false, false) => {
                    let _ = writeln!(out, " {} free", v.name);
                }
                (true, true) if v.lower == v.upper => {
                    let _ = writeln!(out, " {} = {}", v.name, num(v.lower));
                }
                (true, true) => {
                    let _ = writeln!(out, " {} <= {} <= {}", num(v.lower), v.name, num(v.upper));
                }
                (true, false) => {
                    let _ = writeln!(out, " {} >= {}", v.name, num(v.lower));
                }
                (false, true) => {
                    let _ = writeln!(out, " -inf <= {} <= {}", v.name, num(v.upper));
                }
            }
        }
        let binaries: Vec<_> = self.vars.iter().filter(|v| v.kind == VarKind::Binary).collect();
        if !binaries.is_empty() {
            out.push_str("Binaries\n");
            for v in binaries {
                let _ = writeln!(out, " {}", v.name);
            }
        }
        out.push_str("End\n");
        out
    }
}

fn sign(c: f64) -> char {
    if c < 0.0 {
        '-'
    } else {
        '+'
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn write_terms(out: &mut String, terms: &[(VarId, f64)], vars: &[Variable]) {
    for &(v, c) in terms {
        let _ = write!(out, " {} {} {}", sign(c), num(c.abs()), vars[v.0].name);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn violation_by_sense() {
        let mut m = LinearModel::new();
        let x = m.add_continuous("x", 0.0, 10.0);
        m.add_row(RowTag::Balance, "le", vec![(x, 1.0)], Sense::Le, 2.0);
        m.add_row(RowTag::Balance, "ge", vec![(x, 1.0)], Sense::Ge, 5.0);
        m.add_row(RowTag::Balance, "eq", vec![(x, 2.0)], Sense::Eq, 6.0);
        let v = [3.0];
        let got: Vec<f64> = m.rows.iter().map(|r| r.violation(&v)).collect();
        assert_eq!(got, vec![1.0, 2.0, 0.0]);
        assert_eq!(m.max_violation(&[11.0]), 16.0);
    }

    #[test]
    fn lp_export_lists_sections() {
        let mut m = LinearModel::new();
        let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY);
        let z = m.add_binary("z");
        m.objective.add(x, 1.0).add(z, -0.5).add_constant(2.0);
        m.add_row(RowTag::FlowLimits, "l1", vec![(x, 1.0), (z, -3.0)], Sense::Le, 0.0);
        let lp = m.to_lp_string();
        assert!(lp.contains("obj: + 1e0 x - 5e-1 z + 2e0"), "{lp}");
        assert!(lp.contains("flow_limits_l1: + 1e0 x - 3e0 z <= 0e0"), "{lp}");
        assert!(lp.contains(" x free"));
        assert!(lp.contains("Binaries\n z\n"));
        assert!(lp.ends_with("End\n"));
    }
}
