//! Bäcklund transformations and invariant divisors.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::exactalg::{expr, MultiPoly, RationalExpr, Scalar, Var};
use crate::model::{
    build_system, relation_expr, relation_solution, vector_field, HamiltonianSystem, ParameterSet,
    VectorField,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MapName {
    S1,
    S2,
    Pi1,
    Pi2,
    Pi3,
    Pi4,
    Pi5,
}

impl MapName {
    pub const ALL: [MapName; 7] =
        [MapName::S1, MapName::S2, MapName::Pi1, MapName::Pi2, MapName::Pi3, MapName::Pi4, MapName::Pi5];

    pub fn as_str(self) -> &'static str {
        ["s1", "s2", "pi1", "pi2", "pi3", "pi4", "pi5"][self as usize]
    }
}

impl fmt::Display for MapName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown map `{0}` (expected s1, s2, pi1..pi5)")]
pub struct UnknownMap(pub String);

impl FromStr for MapName {
    type Err = UnknownMap;
    fn from_str(s: &str) -> Result<Self, UnknownMap> {
        MapName::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| UnknownMap(s.to_string()))
    }
}

/// A transformation of `(q1, p1, q2, p2, eta, t, s; a0..a5)`.
#[derive(Debug, Clone)]
pub struct BirationalMap {
    pub name: String,
    pub state: [RationalExpr; 4],
    pub eta: RationalExpr,
    pub times: [RationalExpr; 2],
    /// Images of `a0..a5`; linear in the `a_i`.
    pub params: [RationalExpr; 6],
}

impl BirationalMap {
    pub fn identity() -> Self {
        BirationalMap {
            name: "id".to_string(),
            state: Var::STATE.map(RationalExpr::var),
            eta: RationalExpr::var(Var::ETA),
            times: Var::TIMES.map(RationalExpr::var),
            params: Var::alphas().map(RationalExpr::var),
        }
    }

    fn from_text(name: MapName, state: [&str; 4], eta: &str, times: [&str; 2], params: [usize; 6]) -> Self {
        Self::from_text_affine(name, state, eta, times, params.map(|i| Var::alpha(i).name()))
    }

    fn from_text_affine(
        name: MapName,
        state: [&str; 4],
        eta: &str,
        times: [&str; 2],
        params: [&str; 6],
    ) -> Self {
        BirationalMap {
            name: name.as_str().to_string(),
            state: state.map(expr),
            eta: expr(eta),
            times: times.map(expr),
            params: params.map(expr),
        }
    }

    /// Substitution `var -> image` for every variable the map moves.
    pub fn bindings(&self) -> Vec<(Var, RationalExpr)> {
        let mut b: Vec<(Var, RationalExpr)> =
            Var::STATE.iter().zip(&self.state).map(|(v, e)| (*v, e.clone())).collect();
        b.push((Var::ETA, self.eta.clone()));
        b.extend(Var::TIMES.iter().zip(&self.times).map(|(v, e)| (*v, e.clone())));
        b.extend(Var::alphas().iter().zip(&self.params).map(|(v, e)| (*v, e.clone())));
        b.retain(|(v, e)| *e != RationalExpr::var(*v));
        b
    }

    /// Numerators and denominators of the bindings with monomial content
    /// removed. Substituting the map produces powers of these as common
    /// factors of numerator and denominator.
    pub fn factor_hints(&self) -> Vec<MultiPoly> {
        let mut out: Vec<MultiPoly> = Vec::new();
        for (_, e) in self.bindings() {
            for p in [e.num(), e.den()] {
                let q = p.div_monomial(&p.monomial_content()).unwrap();
                if q.as_constant().is_none() && !out.contains(&q) {
                    out.push(q);
                }
            }
        }
        out
    }

    /// Pulls an expression back along the map.
    pub fn pull(&self, e: &RationalExpr) -> RationalExpr {
        let b = self.bindings();
        if b.is_empty() {
            return e.clone();
        }
        e.substitute(&b).expect("map images have nonzero denominators")
    }

    /// `self` followed by `next`: the images of `next` pulled back through `self`.
    pub fn then(&self, next: &BirationalMap) -> BirationalMap {
        BirationalMap {
            name: format!("{}.{}", self.name, next.name),
            state: next.state.clone().map(|e| self.pull(&e)),
            eta: self.pull(&next.eta),
            times: next.times.clone().map(|e| self.pull(&e)),
            params: next.params.clone().map(|e| self.pull(&e)),
        }
    }

    /// Components that differ from the identity, by variable.
    pub fn non_identity_components(&self) -> Vec<Var> {
        let mut bad = Vec::new();
        let alphas = Var::alphas();
        let pairs = Var::STATE
            .iter()
            .zip(&self.state)
            .chain([(&Var::ETA, &self.eta)])
            .chain(Var::TIMES.iter().zip(&self.times))
            .chain(alphas.iter().zip(&self.params));
        for (v, e) in pairs {
            if !e.equals(&RationalExpr::var(*v)) {
                bad.push(*v);
            }
        }
        bad
    }

    pub fn is_identity(&self) -> bool {
        self.non_identity_components().is_empty()
    }

    /// The parameter action as a 6x6 matrix, row `i` giving the image of `a_i`.
    pub fn param_matrix(&self) -> [[Scalar; 6]; 6] {
        core::array::from_fn(|i| {
            let p = self.params[i].num();
            core::array::from_fn(|j| p.coeff(&crate::exactalg::Monomial::var(Var::alpha(j))))
        })
    }

    /// True if the images satisfy the relation whenever the arguments do.
    pub fn preserves_relation(&self) -> bool {
        let rel = relation_expr();
        let image = rel
            .substitute(&Var::alphas().iter().zip(&self.params).map(|(v, e)| (*v, e.clone())).collect::<Vec<_>>())
            .unwrap();
        image.equals(&rel)
    }
}

/// The transformation `name` with its printed formulas.
pub fn backlund_map(name: MapName) -> BirationalMap {
    match name {
        MapName::S1 => BirationalMap::from_text_affine(
            name,
            ["q1 + a2/p1", "p1", "q2", "p2"],
            "eta",
            ["t", "s"],
            ["a0 + a2", "a1 + a2", "-a2", "a3 + a2", "a4 + a2", "a5"],
        ),
        MapName::S2 => BirationalMap::from_text_affine(
            name,
            ["q1", "p1", "q2 + a5/p2", "p2"],
            "eta",
            ["t", "s"],
            ["a0 + a5", "a1 + a5", "a2", "a3 + a5", "a4 + a5", "-a5"],
        ),
        MapName::Pi1 => BirationalMap::from_text(
            name,
            ["(eta - q1)/(eta - 1)", "-(eta - 1)*p1", "(eta - q2)/(eta - 1)", "-(eta - 1)*p2"],
            "eta/(eta - 1)",
            ["(eta - t)/(eta - 1)", "(eta - s)/(eta - 1)"],
            [0, 4, 2, 3, 1, 5],
        ),
        MapName::Pi2 => BirationalMap::from_text(
            name,
            [
                "q1*(t - eta)/(t - q1 + t*q1 - eta*t)",
                "-(t - q1 + t*q1 - eta*t)*((t - q1 + t*q1 - eta*t)*p1 + a2*(t - 1))/(t*(t - eta)*(eta - 1))",
                "q2*(s - eta)/(s - q2 + s*q2 - eta*s)",
                "-(s - q2 + s*q2 - eta*s)*((s - q2 + s*q2 - eta*s)*p2 + a5*(s - 1))/(s*(s - eta)*(eta - 1))",
            ],
            "eta",
            ["(eta - t)/(1 - 2*t + eta*t)", "(eta - s)/(1 - 2*s + eta*s)"],
            [3, 1, 2, 0, 4, 5],
        ),
        MapName::Pi3 => BirationalMap::from_text(
            name,
            [
                "(t - 1)*q1/(t - q1 - eta*t + eta*t*q1)",
                "(t - q1 + eta*t*(q1 - 1))*((q1 - t)*p1 + a2 - eta*t*((q1 - 1)*p1 + a2))/(t*(t - 1)*(eta - 1))",
                "(s - 1)*q2/(s - q2 - eta*s + eta*s*q2)",
                "(s - q2 + eta*s*(q2 - 1))*((q2 - s)*p2 + a5 - eta*s*((q2 - 1)*p2 + a5))/(s*(s - 1)*(eta - 1))",
            ],
            "1/eta",
            ["eta*(t - 1)/(t - eta - eta*t + eta^2*t)", "eta*(s - 1)/(s - eta - eta*s + eta^2*s)"],
            [1, 0, 2, 3, 4, 5],
        ),
        MapName::Pi4 => BirationalMap::from_text(
            name,
            ["1 - q1", "-p1", "1 - q2", "-p2"],
            "1 - eta",
            ["1 - t", "1 - s"],
            [0, 1, 2, 4, 3, 5],
        ),
        MapName::Pi5 => BirationalMap::from_text(
            name,
            ["q2", "p2", "q1", "p1"],
            "eta",
            ["s", "t"],
            [0, 1, 5, 3, 4, 2],
        ),
    }
}

/// The system with transformed parameters and `eta`, i.e. the target of `map`.
pub fn apply_backlund(map: &BirationalMap, sys: &HamiltonianSystem) -> HamiltonianSystem {
    let params = ParameterSet {
        alpha: map.params.clone().map(|a| sys.params.apply(&a)),
        eta: sys.params.apply(&map.eta),
    };
    let target = build_system(&ParameterSet::symbolic()).unwrap();
    HamiltonianSystem::from_parts(params.apply(&target.h1), params.apply(&target.h2), params)
}

/// Component-level outcome of [`verify_backlund`].
#[derive(Debug, Clone)]
pub struct BacklundReport {
    pub map: String,
    pub relation_preserved: bool,
    /// `(time, state variable)` pairs where the chain rule fails.
    pub failures: Vec<(Var, Var)>,
}

impl BacklundReport {
    pub fn passed(&self) -> bool {
        self.relation_preserved && self.failures.is_empty()
    }
}

/// Checks that `map` sends solutions of `sys` to solutions of the target
/// system. `sys` should carry symbolic parameters with the relation imposed.
pub fn verify_backlund(map: &BirationalMap, sys: &HamiltonianSystem) -> BacklundReport {
    let source = vector_field(sys);
    let target_sys = build_system(&ParameterSet::symbolic()).unwrap();
    let target = vector_field(&target_sys);
    let bindings = map.bindings();
    let hints = map.factor_hints();
    let dtime: [[RationalExpr; 2]; 2] =
        core::array::from_fn(|k| core::array::from_fn(|j| map.times[k].derivative(Var::TIMES[j])));
    let mut failures = Vec::new();
    for (j, &tau) in Var::TIMES.iter().enumerate() {
        for (i, &v) in Var::STATE.iter().enumerate() {
            let lhs = sys.params.apply(&source.lie_derivative(&sys.params.apply(&map.state[i]), tau));
            let mut rhs = RationalExpr::zero();
            for k in 0..2 {
                if dtime[k][j].is_zero() {
                    continue;
                }
                let g = target.along(Var::TIMES[k])[i]
                    .substitute(&bindings)
                    .expect("pole in map image")
                    .cancel_hints(&hints);
                rhs = rhs + g * &dtime[k][j];
            }
            let rhs = sys.params.apply(&rhs);
            if !lhs.equals(&rhs) {
                failures.push((tau, v));
            }
        }
    }
    BacklundReport { map: map.name.clone(), relation_preserved: map.preserves_relation(), failures }
}

/// One line of the group-relation report.
#[derive(Debug, Clone)]
pub struct RelationCheck {
    pub relation: String,
    /// `Some(true)` for relations asserted to hold; `None` when only reported.
    pub expected: Option<bool>,
    pub holds: bool,
}

impl RelationCheck {
    pub fn consistent(&self) -> bool {
        self.expected.is_none_or(|e| e == self.holds)
    }
}

fn chain(names: &[MapName]) -> BirationalMap {
    names.iter().fold(BirationalMap::identity(), |acc, n| acc.then(&backlund_map(*n)))
}

fn same_map(a: &BirationalMap, b: &BirationalMap) -> bool {
    a.state.iter().zip(&b.state).all(|(x, y)| x.equals(y))
        && a.eta.equals(&b.eta)
        && a.times.iter().zip(&b.times).all(|(x, y)| x.equals(y))
        && a.params.iter().zip(&b.params).all(|(x, y)| x.equals(y))
}

/// Word relations among the generators.
pub fn group_relations() -> Vec<RelationCheck> {
    use MapName::*;
    let mut out = Vec::new();
    let mut involution = |n: MapName, expected: Option<bool>| {
        out.push(RelationCheck {
            relation: format!("{n}^2 = id"),
            expected,
            holds: chain(&[n, n]).is_identity(),
        });
    };
    for n in [S1, S2, Pi1, Pi4, Pi5] {
        involution(n, Some(true));
    }
    for n in [Pi2, Pi3] {
        involution(n, None);
    }
    let mut pair = |lhs: &[MapName], rhs: &[MapName], expected: Option<bool>| {
        let word = |w: &[MapName]| w.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(".");
        out.push(RelationCheck {
            relation: format!("{} = {}", word(lhs), word(rhs)),
            expected,
            holds: same_map(&chain(lhs), &chain(rhs)),
        });
    };
    pair(&[S1, S2], &[S2, S1], Some(true));
    pair(&[Pi5, S1, Pi5], &[S2], Some(true));
    pair(&[Pi1, Pi4], &[Pi4, Pi1], None);
    pair(&[Pi1, S1], &[S1, Pi1], None);
    pair(&[Pi4, S1], &[S1, Pi4], None);
    pair(&[Pi5, Pi1], &[Pi1, Pi5], None);
    out
}

/// Which parameter's vanishing makes a divisor invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DivisorName {
    F0,
    F1,
    F2,
    F3,
    F4,
    F5,
}

impl DivisorName {
    pub const ALL: [DivisorName; 6] =
        [DivisorName::F0, DivisorName::F1, DivisorName::F2, DivisorName::F3, DivisorName::F4, DivisorName::F5];

    /// Index `i` of the triggering relation `a_i = 0`.
    pub fn trigger(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        ["f0", "f1", "f2", "f3", "f4", "f5"][self as usize]
    }
}

/// A flow-invariant locus, given both by its equations and by the
/// substitution that restricts to it.
#[derive(Debug, Clone)]
pub struct InvariantDivisor {
    pub name: DivisorName,
    pub polys: Vec<RationalExpr>,
    pub restriction: Vec<(Var, RationalExpr)>,
}

impl InvariantDivisor {
    pub fn codimension(&self) -> usize {
        self.polys.len()
    }

    pub fn trigger(&self) -> usize {
        self.name.trigger()
    }
}

pub fn invariant_divisor(name: DivisorName) -> InvariantDivisor {
    let pair = |c: &str| InvariantDivisor {
        name,
        polys: alloc::vec![expr(&format!("q1 - {c}")), expr(&format!("q2 - {c}"))],
        restriction: alloc::vec![(Var::Q1, expr(c)), (Var::Q2, expr(c))],
    };
    match name {
        DivisorName::F0 => InvariantDivisor {
            name,
            polys: alloc::vec![expr("q1 - t"), expr("q2 - s")],
            restriction: alloc::vec![(Var::Q1, expr("t")), (Var::Q2, expr("s"))],
        },
        DivisorName::F1 => pair("eta"),
        DivisorName::F3 => pair("1"),
        DivisorName::F4 => pair("0"),
        DivisorName::F2 => InvariantDivisor {
            name,
            polys: alloc::vec![expr("p1")],
            restriction: alloc::vec![(Var::P1, RationalExpr::zero())],
        },
        DivisorName::F5 => InvariantDivisor {
            name,
            polys: alloc::vec![expr("p2")],
            restriction: alloc::vec![(Var::P2, RationalExpr::zero())],
        },
    }
}

/// Symbolic parameters with the relation imposed and `a_i = 0`.
///
/// The relation is solved for `a0`, or for `a1` when `a0` itself is the
/// parameter being set to zero.
pub fn triggered_parameters(i: usize) -> ParameterSet {
    let k = if i == 0 { 1 } else { 0 };
    let mut p = ParameterSet::symbolic();
    let zero = [(Var::alpha(i), RationalExpr::zero())];
    p.alpha[i] = RationalExpr::zero();
    p.alpha[k] = relation_solution(k).substitute(&zero).unwrap();
    p
}

/// Relation imposed, `a_i` left free: the setting in which a divisor's
/// obstruction is measured.
pub fn lifted_parameters(i: usize) -> ParameterSet {
    ParameterSet::with_relation(if i == 0 { 1 } else { 0 })
}

#[derive(Debug, Clone)]
pub struct DivisorReport {
    pub divisor: DivisorName,
    /// Derivatives of the defining polynomials along `t` and `s`, restricted
    /// to the locus: `[f][time]`.
    pub residuals: Vec<[RationalExpr; 2]>,
}

impl DivisorReport {
    pub fn invariant(&self) -> bool {
        self.residuals.iter().all(|r| r.iter().all(RationalExpr::is_zero))
    }

    /// True if every residual numerator is divisible by `a_i`.
    pub fn proportional_to(&self, i: usize) -> bool {
        self.residuals
            .iter()
            .flat_map(|r| r.iter())
            .all(|e| e.num().divide_by_var_power(Var::alpha(i), 1).is_ok())
    }

    /// The residuals divided by `a_i`, where divisible.
    pub fn cofactors(&self, i: usize) -> Vec<Option<MultiPoly>> {
        self.residuals
            .iter()
            .flat_map(|r| r.iter())
            .map(|e| e.num().divide_by_var_power(Var::alpha(i), 1).ok())
            .collect()
    }
}

/// Restricts the flow derivatives of the defining polynomials to the locus.
pub fn divisor_residuals(div: &InvariantDivisor, field: &VectorField) -> DivisorReport {
    let residuals = div
        .polys
        .iter()
        .map(|f| {
            Var::TIMES.map(|tau| {
                field.lie_derivative(f, tau).substitute(&div.restriction).expect("locus meets a pole")
            })
        })
        .collect();
    DivisorReport { divisor: div.name, residuals }
}

/// Invariance under the triggering relation.
pub fn verify_divisor(div: &InvariantDivisor) -> DivisorReport {
    let sys = build_system(&triggered_parameters(div.trigger())).unwrap();
    divisor_residuals(div, &vector_field(&sys))
}

/// The same check with `a_i` left free.
pub fn verify_divisor_lifted(div: &InvariantDivisor) -> DivisorReport {
    let sys = build_system(&lifted_parameters(div.trigger())).unwrap();
    divisor_residuals(div, &vector_field(&sys))
}

/// Non-listed hyperplanes `v = c` that some single `a_i = 0` makes invariant.
/// An empty result is the expected outcome.
pub fn hyperplane_sweep(constants: &[Scalar]) -> Vec<(usize, Var, Scalar)> {
    let mut found = Vec::new();
    for i in 0..6 {
        let field = vector_field(&build_system(&triggered_parameters(i)).unwrap());
        for c in constants {
            for v in Var::STATE {
                let hyper = InvariantDivisor {
                    name: DivisorName::F0,
                    polys: alloc::vec![RationalExpr::var(v) - RationalExpr::constant(c.clone())],
                    restriction: alloc::vec![(v, RationalExpr::constant(c.clone()))],
                };
                if divisor_residuals(&hyper, &field).invariant() {
                    found.push((i, v, c.clone()));
                }
            }
        }
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_parse() {
        for m in MapName::ALL {
            assert_eq!(m.as_str().parse::<MapName>().unwrap(), m);
        }
        assert!("pi6".parse::<MapName>().is_err());
    }

    #[test]
    fn s1_parameter_matrix() {
        let m = backlund_map(MapName::S1).param_matrix();
        let one = Scalar::one();
        assert_eq!(m[2][2], -one.clone());
        assert_eq!(m[0][0], one);
        assert_eq!(m[0][2], Scalar::one());
        assert!(m[5][2].is_zero());
    }
}
