//! The coupled Hamiltonian pair, its parameters and its vector field.

use alloc::vec::Vec;

use crate::exactalg::{expr, RationalExpr, Scalar, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("parameters violate a0 + a1 + 2*a2 + a3 + a4 + 2*a5 = 1 (left side is {0})")]
    ParameterRelationViolated(Scalar),
    #[error("eta must avoid 0 and 1")]
    DegenerateEta,
}

/// Weights of the parameters in the linear relation `sum w_i a_i = 1`.
pub const RELATION_WEIGHTS: [i64; 6] = [1, 1, 2, 1, 1, 2];

/// Values (or symbols) for `a0..a5` and `eta`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterSet {
    pub alpha: [RationalExpr; 6],
    pub eta: RationalExpr,
}

impl ParameterSet {
    /// Free symbols, relation not imposed.
    pub fn symbolic() -> Self {
        ParameterSet { alpha: Var::alphas().map(RationalExpr::var), eta: RationalExpr::var(Var::ETA) }
    }

    /// Free symbols with the relation imposed by solving for `a_k`.
    pub fn with_relation(k: usize) -> Self {
        let mut p = Self::symbolic();
        p.alpha[k] = relation_solution(k);
        p
    }

    /// Exact numeric parameters, validated.
    pub fn numeric(alpha: [Scalar; 6], eta: Scalar) -> Result<Self, ModelError> {
        let lhs = relation_lhs(&alpha);
        if !lhs.is_one() {
            return Err(ModelError::ParameterRelationViolated(lhs));
        }
        if eta.is_zero() || eta.is_one() {
            return Err(ModelError::DegenerateEta);
        }
        Ok(ParameterSet { alpha: alpha.map(RationalExpr::constant), eta: RationalExpr::constant(eta) })
    }

    /// Numeric parameters without checking the relation; for control experiments.
    pub fn numeric_unchecked(alpha: [Scalar; 6], eta: Scalar) -> Self {
        ParameterSet { alpha: alpha.map(RationalExpr::constant), eta: RationalExpr::constant(eta) }
    }

    pub fn is_numeric(&self) -> bool {
        self.eta.as_constant().is_some() && self.alpha.iter().all(|a| a.as_constant().is_some())
    }

    /// Bindings `a_i -> alpha[i]`, `eta -> eta`, omitting identities.
    pub fn bindings(&self) -> Vec<(Var, RationalExpr)> {
        let mut b = Vec::new();
        for (i, a) in self.alpha.iter().enumerate() {
            let v = Var::alpha(i);
            if *a != RationalExpr::var(v) {
                b.push((v, a.clone()));
            }
        }
        if self.eta != RationalExpr::var(Var::ETA) {
            b.push((Var::ETA, self.eta.clone()));
        }
        b
    }

    /// Applies these parameters to an expression written in `a_i`, `eta`.
    pub fn apply(&self, e: &RationalExpr) -> RationalExpr {
        let b = self.bindings();
        if b.is_empty() {
            return e.clone();
        }
        e.substitute(&b).expect("parameter bindings are polynomial")
    }
}

/// `a0 + a1 + 2 a2 + a3 + a4 + 2 a5` at numeric values.
pub fn relation_lhs(alpha: &[Scalar; 6]) -> Scalar {
    let mut s = Scalar::zero();
    for (a, w) in alpha.iter().zip(RELATION_WEIGHTS) {
        s += &(a * &Scalar::from_int(w));
    }
    s
}

/// The relation's left side as a symbolic expression.
pub fn relation_expr() -> RationalExpr {
    expr("a0 + a1 + 2*a2 + a3 + a4 + 2*a5")
}

/// `a_k` solved from the relation in terms of the other five.
pub fn relation_solution(k: usize) -> RationalExpr {
    let mut rest = RationalExpr::one();
    for (i, w) in RELATION_WEIGHTS.iter().enumerate() {
        if i != k {
            rest = &rest - &RationalExpr::var(Var::alpha(i)).scale(&Scalar::from_int(*w));
        }
    }
    rest.scale(&Scalar::ratio(1, RELATION_WEIGHTS[k]))
}

/// Numerator of `H_VI`, i.e. `t(t-1)(t-eta) H_VI(q, p, t; b1..b4)`.
pub fn hvi_numerator(q: Var, p: Var, time: Var, betas: &[RationalExpr; 4]) -> RationalExpr {
    let q = RationalExpr::var(q);
    let p = RationalExpr::var(p);
    let t = RationalExpr::var(time);
    let eta = RationalExpr::var(Var::ETA);
    let one = RationalExpr::one();
    let [b1, b2, b3, b4] = betas;
    let qm1 = &q - &one;
    let qme = &q - &eta;
    let tm1 = &t - &one;
    let tme = &t - &eta;

    let quad = &q * &qm1 * &qme * (&q - &t) * &p * &p;
    let lin = (b1 * &tme * &q * &qm1
        + b2.scale(&Scalar::from_int(2)) * &q * &qm1 * &qme
        + b3 * &tm1 * &q * &qme
        + b4 * &t * &qm1 * &qme)
        * &p;
    let cst = b2 * ((b1 + b2) * &tme + b2 * &qm1 + b3 * &tm1 + &t * b4) * &q;
    quad + lin + cst
}

/// `t(t-1)(t-eta)` in the given time variable.
pub fn hvi_denominator(time: Var) -> RationalExpr {
    let t = RationalExpr::var(time);
    &t * (&t - &RationalExpr::one()) * (&t - &RationalExpr::var(Var::ETA))
}

/// The Painlevé VI Hamiltonian in canonical pair `(q, p)` with time `time`.
pub fn build_hvi(q: Var, p: Var, time: Var, betas: &[RationalExpr; 4]) -> RationalExpr {
    hvi_numerator(q, p, time, betas) / hvi_denominator(time)
}

/// The involution exchanging the two blocks.
pub const PI_SWAP: [(Var, Var); 8] = [
    (Var::Q1, Var::Q2),
    (Var::Q2, Var::Q1),
    (Var::P1, Var::P2),
    (Var::P2, Var::P1),
    (Var::T, Var::S),
    (Var::S, Var::T),
    (Var::A2, Var::A5),
    (Var::A5, Var::A2),
];

pub fn pi_swap(e: &RationalExpr) -> RationalExpr {
    e.rename(&PI_SWAP)
}

/// `H1` in free symbols over the common denominator `t(t-1)(t-s)(t-eta)`.
pub fn symbolic_h1() -> RationalExpr {
    let betas = [1, 2, 3, 4].map(|i| RationalExpr::var(Var::alpha(i)));
    let hvi = hvi_numerator(Var::Q1, Var::P1, Var::T, &betas);
    // Blocks over t(t-1)(t-s).
    let over_d1 = expr(
        "a2*p2*(-(t-1)*s*q1 + t*(s-1)*q2 + (t-s)*q1*q2) \
         + a5*p1*((t-s)*q1*(q1-1) + t*(t-1)*(q1-q2)) \
         - p1*p2*((t-1)*(s*q1^2 + t*q2^2) - (t-s)*q2*(q1^2 + t) - 2*t*(s-1)*q1*q2)",
    );
    // Blocks over t(t-1)(t-eta).
    let over_d2 = expr(
        "a2*p2*(q1-t)*q2*(q2-1) \
         + a5*p1*(q1-t)*((t-1)*q1 + (q1-t)*q2) \
         + p1*p2*(q1-t)^2*q2*(q2-1) \
         + a2*a5*(2*t*q1 - q1 - t*q2 + q1*q2 - eta*q1)",
    );
    let tms = expr("t - s");
    let tme = expr("t - eta");
    let num = (hvi + over_d2) * &tms + over_d1 * &tme;
    num / expr("t*(t-1)*(t-s)*(t-eta)")
}

/// The pair `(H1, H2)` with its parameters.
#[derive(Debug, Clone)]
pub struct HamiltonianSystem {
    pub h1: RationalExpr,
    pub h2: RationalExpr,
    pub params: ParameterSet,
}

pub const POSITIONS: [Var; 2] = [Var::Q1, Var::Q2];
pub const MOMENTA: [Var; 2] = [Var::P1, Var::P2];
pub const TIMES: [Var; 2] = [Var::T, Var::S];

impl HamiltonianSystem {
    /// Wraps an arbitrary pair, e.g. a deliberately mutated one.
    pub fn from_parts(h1: RationalExpr, h2: RationalExpr, params: ParameterSet) -> Self {
        HamiltonianSystem { h1, h2, params }
    }

    pub fn hamiltonian(&self, time: Var) -> &RationalExpr {
        if time == Var::S {
            &self.h2
        } else {
            &self.h1
        }
    }

    /// Total degree of `h_i` in the state variables.
    pub fn state_degree(&self) -> (u32, u32) {
        (self.h1.num().degree_in(&Var::STATE), self.h2.num().degree_in(&Var::STATE))
    }
}

/// Builds `(H1, H2 = pi(H1))` at the given parameters.
pub fn build_system(params: &ParameterSet) -> Result<HamiltonianSystem, ModelError> {
    if params.is_numeric() {
        let alpha = params.alpha.clone().map(|a| a.as_constant().unwrap());
        let eta = params.eta.as_constant().unwrap();
        ParameterSet::numeric(alpha, eta)?;
    }
    let h1 = symbolic_h1();
    let h2 = pi_swap(&h1);
    Ok(HamiltonianSystem { h1: params.apply(&h1), h2: params.apply(&h2), params: params.clone() })
}

/// Two uncoupled copies of Painlevé VI: `H1 = H_VI(q1, p1, t; a1, a2, a3, a4)`
/// and its block swap. A contrast system for the singularity analysis.
pub fn decoupled_twin(params: &ParameterSet) -> HamiltonianSystem {
    let betas = [1, 2, 3, 4].map(|i| RationalExpr::var(Var::alpha(i)));
    let h1 = build_hvi(Var::Q1, Var::P1, Var::T, &betas);
    let h2 = pi_swap(&h1);
    HamiltonianSystem { h1: params.apply(&h1), h2: params.apply(&h2), params: params.clone() }
}

/// Hamiltonian vector field of a pair, in any canonical coordinates.
///
/// `vars` are `(x, y, z, w)` with `(x, y)` and `(z, w)` canonical pairs; the
/// `dt` and `ds` arrays give the derivative of each variable along each time.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub vars: [Var; 4],
    pub dt: [RationalExpr; 4],
    pub ds: [RationalExpr; 4],
}

impl VectorField {
    /// `(d/dt, d/ds)` of variable `v`.
    pub fn component(&self, v: Var) -> Option<(&RationalExpr, &RationalExpr)> {
        let i = self.vars.iter().position(|w| *w == v)?;
        Some((&self.dt[i], &self.ds[i]))
    }

    pub fn along(&self, time: Var) -> &[RationalExpr; 4] {
        if time == Var::S {
            &self.ds
        } else {
            &self.dt
        }
    }

    /// Canonical field of `(h1, h2)` in pairs `(vars[0], vars[1])`, `(vars[2], vars[3])`.
    pub fn hamiltonian(vars: [Var; 4], h1: &RationalExpr, h2: &RationalExpr) -> Self {
        let half = |h: &RationalExpr| {
            [
                h.derivative(vars[1]),
                -h.derivative(vars[0]),
                h.derivative(vars[3]),
                -h.derivative(vars[2]),
            ]
        };
        VectorField { vars, dt: half(h1), ds: half(h2) }
    }

    /// Derivative of an arbitrary expression along the `time` flow,
    /// including its explicit dependence on `time`.
    pub fn lie_derivative(&self, f: &RationalExpr, time: Var) -> RationalExpr {
        let mut acc = f.derivative(time);
        for (v, c) in self.vars.iter().zip(self.along(time)) {
            let d = f.derivative(*v);
            if !d.is_zero() {
                acc = acc + d * c;
            }
        }
        acc
    }
}

pub fn vector_field(sys: &HamiltonianSystem) -> VectorField {
    VectorField::hamiltonian(Var::STATE, &sys.h1, &sys.h2)
}

/// `{f, g} = sum_i (df/dq_i dg/dp_i - df/dp_i dg/dq_i)`.
pub fn poisson_bracket(f: &RationalExpr, g: &RationalExpr) -> RationalExpr {
    let mut acc = RationalExpr::zero();
    for (q, p) in POSITIONS.into_iter().zip(MOMENTA) {
        acc = acc + f.derivative(q) * g.derivative(p) - f.derivative(p) * g.derivative(q);
    }
    acc
}

/// `dH1/ds - dH2/dt + {H1, H2}`.
pub fn frobenius_residual(sys: &HamiltonianSystem) -> RationalExpr {
    frobenius_report(sys).plus
}

/// Compatibility residuals under both signs of the bracket term.
#[derive(Debug, Clone)]
pub struct FrobeniusReport {
    /// `dH1/ds - dH2/dt + {H1, H2}`
    pub plus: RationalExpr,
    /// `dH1/ds - dH2/dt - {H1, H2}`
    pub minus: RationalExpr,
    pub bracket: RationalExpr,
    pub time_part: RationalExpr,
}

impl FrobeniusReport {
    /// The sign conventions (`+1`, `-1`) whose residual vanishes identically.
    pub fn zero_conventions(&self) -> Vec<i8> {
        let mut v = Vec::new();
        if self.plus.is_zero() {
            v.push(1);
        }
        if self.minus.is_zero() {
            v.push(-1);
        }
        v
    }

    /// True if the residuals do not involve the state variables.
    pub fn state_independent(&self) -> bool {
        !self.plus.vars().iter().any(|v| v.is_state()) && !self.minus.vars().iter().any(|v| v.is_state())
    }
}

pub fn frobenius_report(sys: &HamiltonianSystem) -> FrobeniusReport {
    let time_part = sys.h1.derivative(Var::S) - sys.h2.derivative(Var::T);
    let bracket = poisson_bracket(&sys.h1, &sys.h2);
    FrobeniusReport { plus: &time_part + &bracket, minus: &time_part - &bracket, bracket, time_part }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relation_solution_satisfies_relation() {
        for k in 0..6 {
            let sub = relation_expr().substitute(&[(Var::alpha(k), relation_solution(k))]).unwrap();
            assert!(sub.equals(&RationalExpr::one()), "k = {k}");
        }
    }

    #[test]
    fn numeric_validation() {
        let eighth = || core::array::from_fn(|_| Scalar::ratio(1, 8));
        assert!(ParameterSet::numeric(eighth(), Scalar::from_int(2)).is_ok());
        let mut bad = eighth();
        bad[5] = Scalar::ratio(1, 12);
        assert!(matches!(
            ParameterSet::numeric(bad, Scalar::from_int(2)),
            Err(ModelError::ParameterRelationViolated(_))
        ));
        assert_eq!(ParameterSet::numeric(eighth(), Scalar::one()), Err(ModelError::DegenerateEta));
    }

    #[test]
    fn hvi_quadratic_block() {
        let betas = [1, 2, 3, 4].map(|i| RationalExpr::var(Var::beta(i)));
        let num = hvi_numerator(Var::Q1, Var::P1, Var::T, &betas);
        let c2 = num.num().coefficients_in(Var::P1)[2].clone();
        assert!(RationalExpr::from(c2).equals(&expr("q1*(q1-1)*(q1-eta)*(q1-t)")));
        let no_b2 = num.substitute(&[(Var::beta(2), RationalExpr::zero())]).unwrap();
        assert!(no_b2.num().coefficients_in(Var::P1)[0].is_zero());
    }
}
