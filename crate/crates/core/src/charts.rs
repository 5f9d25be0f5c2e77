//! The six canonical coordinate systems `r0..r5` and the holomorphy checks.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::exactalg::{
    divide_by_monomial_power, expr, split_var_power, substitute_poly, AlgebraError, Monomial,
    RationalExpr, Var,
};
use crate::model::{HamiltonianSystem, ParameterSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChartName {
    R0,
    R1,
    R2,
    R3,
    R4,
    R5,
    Identity,
}

impl ChartName {
    pub const ALL: [ChartName; 6] =
        [ChartName::R0, ChartName::R1, ChartName::R2, ChartName::R3, ChartName::R4, ChartName::R5];

    pub fn index(self) -> Option<usize> {
        match self {
            ChartName::Identity => None,
            c => Some(c as usize),
        }
    }

    pub fn as_str(self) -> &'static str {
        ["r0", "r1", "r2", "r3", "r4", "r5", "id"][self as usize]
    }
}

impl fmt::Display for ChartName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown chart `{0}` (expected r0..r5)")]
pub struct UnknownChart(pub String);

impl FromStr for ChartName {
    type Err = UnknownChart;
    fn from_str(s: &str) -> Result<Self, UnknownChart> {
        match s {
            "r0" => Ok(ChartName::R0),
            "r1" => Ok(ChartName::R1),
            "r2" => Ok(ChartName::R2),
            "r3" => Ok(ChartName::R3),
            "r4" => Ok(ChartName::R4),
            "r5" => Ok(ChartName::R5),
            "id" | "identity" => Ok(ChartName::Identity),
            _ => Err(UnknownChart(s.to_string())),
        }
    }
}

/// A canonical coordinate system with both directions of its change of variables.
#[derive(Debug, Clone)]
pub struct ChartMap {
    pub name: ChartName,
    /// Chart coordinates `(x, y, z, w)`; `(x, y)` and `(z, w)` are canonical pairs.
    pub vars: [Var; 4],
    /// Chart coordinates as functions of `(q1, p1, q2, p2, t, s)`.
    pub forward: Vec<(Var, RationalExpr)>,
    /// `(q1, p1, q2, p2)` as functions of the chart coordinates.
    pub inverse: Vec<(Var, RationalExpr)>,
    /// The chart coordinate whose reciprocal appears in `inverse`.
    pub laurent_var: Option<Var>,
    /// Subtracted from `(H1, H2)` before pushing forward.
    pub correction: [RationalExpr; 2],
}

/// Chart coordinates of the shifted family `r0, r1, r3, r4`.
fn shifted(name: ChartName, j: usize, c1: &str, c2: &str, a: &str) -> ChartMap {
    let vars = Var::chart_vars(j);
    let [x, y, z, w] = vars.map(Var::name);
    let forward = [
        format!("-p1*((q1 - {c1})*p1 + (q2 - {c2})*p2 - {a})"),
        "1/p1".to_string(),
        format!("(q2 - {c2})*p1"),
        "p2/p1".to_string(),
    ];
    let inverse = [
        format!("{c1} + {y}*({a} - {z}*{w} - {x}*{y})"),
        format!("1/{y}"),
        format!("{c2} + {z}*{y}"),
        format!("{w}/{y}"),
    ];
    let correction = if name == ChartName::R0 {
        [expr("p1"), expr("p2")]
    } else {
        [RationalExpr::zero(), RationalExpr::zero()]
    };
    ChartMap {
        name,
        vars,
        forward: vars.iter().zip(&forward).map(|(v, e)| (*v, expr(e))).collect(),
        inverse: Var::STATE.iter().zip(&inverse).map(|(v, e)| (*v, expr(e))).collect(),
        laurent_var: Some(vars[1]),
        correction,
    }
}

fn from_text(name: ChartName, j: usize, forward: [&str; 4], inverse: [&str; 4], laurent: usize) -> ChartMap {
    let vars = Var::chart_vars(j);
    ChartMap {
        name,
        vars,
        forward: vars.iter().zip(forward).map(|(v, e)| (*v, expr(e))).collect(),
        inverse: Var::STATE.iter().zip(inverse).map(|(v, e)| (*v, expr(e))).collect(),
        laurent_var: Some(vars[laurent]),
        correction: [RationalExpr::zero(), RationalExpr::zero()],
    }
}

/// The chart `name` with its closed-form inverse.
pub fn chart_inverse(name: ChartName) -> ChartMap {
    match name {
        ChartName::R0 => shifted(name, 0, "t", "s", "a0"),
        ChartName::R1 => shifted(name, 1, "eta", "eta", "a1"),
        ChartName::R3 => shifted(name, 3, "1", "1", "a3"),
        ChartName::R4 => shifted(name, 4, "0", "0", "a4"),
        ChartName::R2 => from_text(
            name,
            2,
            ["1/q1", "-q1*(q1*p1 + a2)", "q2", "p2"],
            ["1/x2", "x2*(-x2*y2 - a2)", "z2", "w2"],
            0,
        ),
        ChartName::R5 => from_text(
            name,
            5,
            ["q1", "p1", "1/q2", "-(q2*p2 + a5)*q2"],
            ["x5", "y5", "1/z5", "z5*(-z5*w5 - a5)"],
            2,
        ),
        ChartName::Identity => ChartMap {
            name,
            vars: Var::STATE,
            forward: Var::STATE.iter().map(|v| (*v, RationalExpr::var(*v))).collect(),
            inverse: Var::STATE.iter().map(|v| (*v, RationalExpr::var(*v))).collect(),
            laurent_var: None,
            correction: [RationalExpr::zero(), RationalExpr::zero()],
        },
    }
}

impl ChartMap {
    /// The same chart with parameters specialized (e.g. the relation imposed).
    pub fn specialize(&self, params: &ParameterSet) -> ChartMap {
        let sub = |b: &Vec<(Var, RationalExpr)>| b.iter().map(|(v, e)| (*v, params.apply(e))).collect();
        ChartMap {
            forward: sub(&self.forward),
            inverse: sub(&self.inverse),
            correction: self.correction.clone().map(|c| params.apply(&c)),
            ..self.clone()
        }
    }

    pub fn without_correction(&self) -> ChartMap {
        ChartMap { correction: [RationalExpr::zero(), RationalExpr::zero()], ..self.clone() }
    }

    pub fn forward_of(&self, v: Var) -> Option<&RationalExpr> {
        self.forward.iter().find(|(w, _)| *w == v).map(|(_, e)| e)
    }

    pub fn inverse_of(&self, v: Var) -> Option<&RationalExpr> {
        self.inverse.iter().find(|(w, _)| *w == v).map(|(_, e)| e)
    }

    /// Checks both compositions are the identity; returns the first failing
    /// variable otherwise.
    pub fn check_round_trip(&self) -> Result<(), Var> {
        for (v, f) in &self.forward {
            let back = f.substitute(&self.inverse).map_err(|_| *v)?;
            if !back.equals(&RationalExpr::var(*v)) {
                return Err(*v);
            }
        }
        for (v, g) in &self.inverse {
            let back = g.substitute(&self.forward).map_err(|_| *v)?;
            if !back.equals(&RationalExpr::var(*v)) {
                return Err(*v);
            }
        }
        Ok(())
    }

    /// True if each inverse binding is a polynomial divided by a power of the
    /// Laurent variable.
    pub fn inverse_is_laurent(&self) -> bool {
        self.inverse.iter().all(|(_, e)| match self.laurent_var {
            None => e.is_polynomial(),
            Some(l) => {
                let (_, rest) = split_var_power(e.den(), l);
                rest.as_constant().is_some()
            }
        })
    }
}

/// `(H1 - c1, H2 - c2)` rewritten in chart coordinates.
pub fn pushforward_hamiltonians(
    sys: &HamiltonianSystem,
    chart: &ChartMap,
) -> Result<(RationalExpr, RationalExpr), AlgebraError> {
    let chart = chart.specialize(&sys.params);
    let push = |h: &RationalExpr, c: &RationalExpr| (h - c).substitute(&chart.inverse);
    Ok((push(&sys.h1, &chart.correction[0])?, push(&sys.h2, &chart.correction[1])?))
}

/// Outcome of the divisibility test for one chart Hamiltonian.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Polynomiality {
    Polynomial,
    /// A monomial of the numerator that blocks division by the pole power.
    NotDivisible(Monomial),
    /// A pole in chart coordinates other than the Laurent variable.
    ForeignPole(String),
}

impl Polynomiality {
    pub fn holds(&self) -> bool {
        *self == Polynomiality::Polynomial
    }
}

#[derive(Debug, Clone)]
pub struct HolomorphyReport {
    pub chart: ChartName,
    pub inverse_ok: bool,
    pub h1: Polynomiality,
    pub h2: Polynomiality,
    /// Power of the Laurent variable produced by substitution, per Hamiltonian.
    pub pole_order: [u8; 2],
    /// Chart Hamiltonians, when polynomial.
    pub chart_hamiltonians: [Option<RationalExpr>; 2],
    /// `None` when an earlier stage failed.
    pub symplectic: Option<bool>,
}

impl HolomorphyReport {
    pub fn passed(&self) -> bool {
        self.inverse_ok && self.h1.holds() && self.h2.holds() && self.symplectic == Some(true)
    }

    pub fn witness(&self) -> Option<String> {
        if !self.inverse_ok {
            return Some("chart inverse does not compose to the identity".to_string());
        }
        for (i, p) in [&self.h1, &self.h2].into_iter().enumerate() {
            match p {
                Polynomiality::Polynomial => {}
                Polynomiality::NotDivisible(m) => return Some(format!("H{}: not divisible, monomial {m}", i + 1)),
                Polynomiality::ForeignPole(d) => return Some(format!("H{}: pole along {d}", i + 1)),
            }
        }
        if self.symplectic == Some(false) {
            return Some("pushed vector field differs from the chart Hamiltonian field".to_string());
        }
        None
    }
}

/// Pushes `h` through `chart` keeping the homogenized numerator, divides by
/// the exact pole power and returns the quotient as the chart Hamiltonian.
fn polynomial_pushforward(
    h: &RationalExpr,
    chart: &ChartMap,
    relation: &ParameterSet,
) -> (Polynomiality, u8, Option<RationalExpr>) {
    let (n, d) = substitute_poly(h.num(), &chart.inverse);
    let n = relation.apply(&RationalExpr::from_poly(n)).into_parts().0;
    let outer = relation.apply(&RationalExpr::from_poly(h.den().clone()));
    let chart_vars = chart.vars;
    if outer.den().contains_any(&chart_vars) || outer.num().contains_any(&chart_vars) {
        return (Polynomiality::ForeignPole(outer.to_string()), 0, None);
    }
    let (k, rest) = match chart.laurent_var {
        Some(l) => split_var_power(&d, l),
        None => (0, d.clone()),
    };
    if rest.contains_any(&chart_vars) {
        return (Polynomiality::ForeignPole(rest.to_string()), k, None);
    }
    let q = match chart.laurent_var {
        Some(l) => divide_by_monomial_power(&n, l, k),
        None => Ok(n),
    };
    match q {
        Ok(q) => {
            let e = RationalExpr::from_poly(q) / RationalExpr::from_poly(rest) / outer;
            (Polynomiality::Polynomial, k, Some(e))
        }
        Err(AlgebraError::NotDivisible(m)) => (Polynomiality::NotDivisible(m), k, None),
        Err(e) => panic!("unexpected algebra error {e}"),
    }
}

/// Runs inverse check, pushforward, divisibility and the symplectic check in
/// that order, stopping at the first failure.
///
/// The parameters of `sys` decide whether the relation is imposed: build the
/// system from [`ParameterSet::with_relation`] for the standard check.
pub fn verify_holomorphy(sys: &HamiltonianSystem, chart: &ChartMap) -> HolomorphyReport {
    let mut rep = HolomorphyReport {
        chart: chart.name,
        inverse_ok: chart.check_round_trip().is_ok(),
        h1: Polynomiality::Polynomial,
        h2: Polynomiality::Polynomial,
        pole_order: [0, 0],
        chart_hamiltonians: [None, None],
        symplectic: None,
    };
    if !rep.inverse_ok {
        return rep;
    }
    let chart_p = chart.specialize(&sys.params);
    let hs = [&sys.h1 - &chart_p.correction[0], &sys.h2 - &chart_p.correction[1]];
    for (i, h) in hs.iter().enumerate() {
        let (verdict, k, e) = polynomial_pushforward(h, &chart_p, &sys.params);
        rep.pole_order[i] = k;
        rep.chart_hamiltonians[i] = e;
        if i == 0 {
            rep.h1 = verdict;
        } else {
            rep.h2 = verdict;
        }
    }
    if rep.h1.holds() && rep.h2.holds() {
        rep.symplectic = Some(verify_symplectic_identity(sys, chart));
    }
    rep
}

/// Vector-field form of the symplectic identity: the flow of the system,
/// pushed through the chart, is the canonical field of the chart Hamiltonians.
pub fn verify_symplectic_identity(sys: &HamiltonianSystem, chart: &ChartMap) -> bool {
    let chart_p = chart.specialize(&sys.params);
    let Ok((k1, k2)) = pushforward_hamiltonians(sys, chart) else {
        return false;
    };
    let field = crate::model::vector_field(sys);
    let target = crate::model::VectorField::hamiltonian(chart_p.vars, &k1, &k2);
    for time in Var::TIMES {
        for (i, (_, phi)) in chart_p.forward.iter().enumerate() {
            let pushed = field.lie_derivative(phi, time);
            let Ok(pushed) = pushed.substitute(&chart_p.inverse) else {
                return false;
            };
            let pushed = sys.params.apply(&pushed);
            if !pushed.equals(&target.along(time)[i]) {
                return false;
            }
        }
    }
    true
}
