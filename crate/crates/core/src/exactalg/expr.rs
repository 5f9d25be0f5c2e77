use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use super::poly::{Monomial, MultiPoly};
use super::scalar::Scalar;
use super::var::Var;
use super::AlgebraError;

/// Quotient of two polynomials with a nonzero denominator.
///
/// Equality is decided by cross-multiplication (see [`RationalExpr::equals`]);
/// the stored form is only lightly normalized: the monomial content shared by
/// numerator and denominator is cancelled and the denominator is monic.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalExpr {
    num: MultiPoly,
    den: MultiPoly,
}

/// A simultaneous substitution `var -> expression`.
pub type Bindings = [(Var, RationalExpr)];

impl RationalExpr {
    pub fn new(num: MultiPoly, den: MultiPoly) -> Result<Self, AlgebraError> {
        if den.is_zero() {
            return Err(AlgebraError::ZeroDenominator);
        }
        Ok(Self::normalized(num, den))
    }

    pub fn from_poly(p: MultiPoly) -> Self {
        RationalExpr { num: p, den: MultiPoly::one() }
    }

    pub fn zero() -> Self {
        Self::from_poly(MultiPoly::zero())
    }

    pub fn one() -> Self {
        Self::from_poly(MultiPoly::one())
    }

    pub fn int(n: i64) -> Self {
        Self::from_poly(MultiPoly::int(n))
    }

    pub fn constant(c: Scalar) -> Self {
        Self::from_poly(MultiPoly::constant(c))
    }

    pub fn var(v: Var) -> Self {
        Self::from_poly(MultiPoly::var(v))
    }

    pub fn num(&self) -> &MultiPoly {
        &self.num
    }

    pub fn den(&self) -> &MultiPoly {
        &self.den
    }

    pub fn into_parts(self) -> (MultiPoly, MultiPoly) {
        (self.num, self.den)
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    /// Value if the expression is a constant.
    pub fn as_constant(&self) -> Option<Scalar> {
        let n = self.num.as_constant()?;
        let d = self.den.as_constant()?;
        Some(&n / &d)
    }

    /// True if no variable of `vars` occurs in the denominator.
    pub fn is_polynomial_in(&self, vars: &[Var]) -> bool {
        !self.den.contains_any(vars)
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.num.contains_var(v) || self.den.contains_var(v)
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut vs = self.num.vars();
        for v in self.den.vars() {
            if !vs.contains(&v) {
                vs.push(v);
            }
        }
        vs.sort();
        vs
    }

    fn normalized(num: MultiPoly, den: MultiPoly) -> Self {
        debug_assert!(!den.is_zero());
        if num.is_zero() {
            return Self::zero();
        }
        if let Some(c) = den.as_constant() {
            return RationalExpr { num: num.scale(&c.recip().unwrap()), den: MultiPoly::one() };
        }
        let g = num.monomial_content().gcd(&den.monomial_content());
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (num.div_monomial(&g).unwrap(), den.div_monomial(&g).unwrap())
        };
        let (den, lc) = den.make_monic();
        let num = if lc.is_one() { num } else { num.scale(&lc.recip().unwrap()) };
        RationalExpr { num, den }
    }

    pub fn recip(&self) -> Result<Self, AlgebraError> {
        if self.num.is_zero() {
            return Err(AlgebraError::ZeroDenominator);
        }
        Ok(Self::normalized(self.den.clone(), self.num.clone()))
    }

    pub fn checked_div(&self, rhs: &RationalExpr) -> Result<Self, AlgebraError> {
        if rhs.num.is_zero() {
            return Err(AlgebraError::ZeroDenominator);
        }
        if self.den == rhs.den {
            return Ok(Self::normalized(self.num.clone(), rhs.num.clone()));
        }
        Ok(Self::normalized(&self.num * &rhs.den, &self.den * &rhs.num))
    }

    pub fn pow(&self, e: i32) -> Result<Self, AlgebraError> {
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let k = e.unsigned_abs();
        Ok(RationalExpr { num: base.num.pow(k), den: base.den.pow(k) })
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        Self::normalized(self.num.scale(c), self.den.clone())
    }

    /// Exact partial derivative (quotient rule).
    pub fn derivative(&self, v: Var) -> Self {
        let dn = self.num.derivative(v);
        if !self.den.contains_var(v) {
            return Self::normalized(dn, self.den.clone());
        }
        let dd = self.den.derivative(v);
        let num = &(&dn * &self.den) - &(&self.num * &dd);
        Self::normalized(num, self.den.pow(2))
    }

    /// Replaces variables by constants.
    pub fn substitute_scalars(&self, vals: &[(Var, Scalar)]) -> Result<Self, AlgebraError> {
        let den = self.den.substitute_scalars(vals);
        if den.is_zero() {
            return Err(AlgebraError::SubstitutionDenominatorZero);
        }
        Ok(Self::normalized(self.num.substitute_scalars(vals), den))
    }

    pub fn rename(&self, map: &[(Var, Var)]) -> Self {
        Self::normalized(self.num.rename(map), self.den.rename(map))
    }

    /// Simultaneous substitution of variables by rational expressions.
    /// Unbound variables pass through unchanged.
    pub fn substitute(&self, bindings: &Bindings) -> Result<Self, AlgebraError> {
        for (_, b) in bindings {
            if b.den.is_zero() {
                return Err(AlgebraError::SubstitutionDenominatorZero);
            }
        }
        let (nn, nd) = substitute_poly_parts(&self.num, bindings);
        let (dn, dd) = substitute_poly_parts(&self.den, bindings);
        if dn.is_zero() {
            return Err(AlgebraError::SubstitutionDenominatorZero);
        }
        // (nn/nd) / (dn/dd), cancelling shared powers of the binding denominators.
        let mut num = nn;
        let mut den = dn;
        for (d, k) in &nd {
            let j = dd.iter().find(|(e, _)| e == d).map_or(0, |(_, j)| *j);
            if *k > j {
                den = &den * &d.pow(k - j);
            }
        }
        for (d, j) in &dd {
            let k = nd.iter().find(|(e, _)| e == d).map_or(0, |(_, k)| *k);
            if *j > k {
                num = &num * &d.pow(j - k);
            }
        }
        Ok(Self::normalized(num, den))
    }

    /// Divides numerator and denominator by each hint as often as both are
    /// divisible by it. No factorization is attempted, so only common factors
    /// supplied as hints are removed.
    pub fn cancel_hints(&self, hints: &[MultiPoly]) -> Self {
        let mut num = self.num.clone();
        let mut den = self.den.clone();
        for h in hints {
            if h.as_constant().is_some() {
                continue;
            }
            // The denominator is usually the smaller side, so test it first.
            while let Some(d) = den.div_exact(h) {
                let Some(n) = num.div_exact(h) else { break };
                num = n;
                den = d;
            }
        }
        Self::normalized(num, den)
    }

    /// Exact evaluation at a rational point.
    pub fn eval(&self, point: &dyn Fn(Var) -> Option<Scalar>) -> Result<Scalar, AlgebraError> {
        let d = self.den.eval(point).map_err(AlgebraError::UnboundVariable)?;
        if d.is_zero() {
            return Err(AlgebraError::PoleAtPoint);
        }
        let n = self.num.eval(point).map_err(AlgebraError::UnboundVariable)?;
        Ok(&n / &d)
    }

    pub fn eval_at(&self, point: &[(Var, Scalar)]) -> Result<Scalar, AlgebraError> {
        self.eval(&|v| point.iter().find(|(w, _)| *w == v).map(|(_, x)| x.clone()))
    }

    /// Floating-point complex evaluation.
    pub fn eval_complex(
        &self,
        point: &dyn Fn(Var) -> Option<Complex64>,
    ) -> Result<Complex64, AlgebraError> {
        let d = self.den.eval_complex(point).map_err(AlgebraError::UnboundVariable)?;
        if d.norm() == 0.0 {
            return Err(AlgebraError::PoleAtPoint);
        }
        let n = self.num.eval_complex(point).map_err(AlgebraError::UnboundVariable)?;
        Ok(n / d)
    }

    /// Identity test: true iff `num_a * den_b - num_b * den_a` is the zero
    /// polynomial. A random-point evaluation may short-circuit a `false`
    /// answer; a `true` answer always comes from the exact check.
    pub fn equals(&self, other: &RationalExpr) -> bool {
        if self.den == other.den {
            return self.num == other.num;
        }
        if let Some(false) = super::check::probably_equal(self, other, 1) {
            return false;
        }
        self.equals_exact(other)
    }

    /// Cross-multiplication without the probabilistic pre-check.
    pub fn equals_exact(&self, other: &RationalExpr) -> bool {
        &self.num * &other.den == &other.num * &self.den
    }
}

/// Homogenized substitution of one polynomial: returns `(N, D)` with
/// `p(bindings) = N / D`.
///
/// Bindings sharing a denominator `d` are homogenized together, so `D` is the
/// product of `d^k` with `k` the largest combined degree of `p` in the
/// variables bound over `d`. Nothing is cancelled, so the power of a
/// reciprocal chart variable in `D` is exactly the one the substitution
/// produced.
pub fn substitute_poly(p: &MultiPoly, bindings: &Bindings) -> (MultiPoly, MultiPoly) {
    let (num, dens) = substitute_poly_parts(p, bindings);
    let mut den = MultiPoly::one();
    for (d, k) in &dens {
        den = &den * &d.pow(*k);
    }
    (num, den)
}

/// Numerator and the factored denominator `[(d, k)]` of a substitution.
fn substitute_poly_parts(p: &MultiPoly, bindings: &Bindings) -> (MultiPoly, Vec<(MultiPoly, u32)>) {
    let bound: Vec<(Var, &RationalExpr, u8)> = bindings
        .iter()
        .filter_map(|(v, b)| {
            let e = p.max_exp(*v);
            (e > 0).then_some((*v, b, e))
        })
        .collect();
    if bound.is_empty() {
        return (p.clone(), Vec::new());
    }

    // Distinct non-trivial denominators, and the group each binding falls in.
    let mut dens: Vec<&MultiPoly> = Vec::new();
    let group: Vec<Option<usize>> = bound
        .iter()
        .map(|(_, b, _)| {
            if b.den.is_one() {
                return None;
            }
            Some(dens.iter().position(|d| **d == b.den).unwrap_or_else(|| {
                dens.push(&b.den);
                dens.len() - 1
            }))
        })
        .collect();

    // Group terms by their exponents in the bound variables.
    let mut groups: BTreeMap<Vec<u8>, MultiPoly> = BTreeMap::new();
    for (m, c) in p.terms() {
        let key: Vec<u8> = bound.iter().map(|(v, _, _)| m.exp(*v)).collect();
        let mut rest = m.clone();
        for (v, _, _) in &bound {
            rest = rest.with_exp(*v, 0);
        }
        groups.entry(key).or_default().add_term(rest, c);
    }

    let mut kmax = alloc::vec![0u32; dens.len()];
    for key in groups.keys() {
        let mut k = alloc::vec![0u32; dens.len()];
        for (i, &e) in key.iter().enumerate() {
            if let Some(g) = group[i] {
                k[g] += e as u32;
            }
        }
        for (a, b) in kmax.iter_mut().zip(k) {
            *a = (*a).max(b);
        }
    }

    let num_pows: Vec<Vec<MultiPoly>> = bound
        .iter()
        .map(|(_, b, e)| {
            let mut np = alloc::vec![MultiPoly::one()];
            for k in 1..=*e as usize {
                np.push(&np[k - 1] * &b.num);
            }
            np
        })
        .collect();
    let den_pows: Vec<Vec<MultiPoly>> = dens
        .iter()
        .zip(&kmax)
        .map(|(d, &k)| {
            let mut dp = alloc::vec![MultiPoly::one()];
            for j in 1..=k as usize {
                dp.push(&dp[j - 1] * *d);
            }
            dp
        })
        .collect();

    let mut num = MultiPoly::zero();
    for (key, coeff) in &groups {
        let mut term = coeff.clone();
        let mut k = alloc::vec![0u32; dens.len()];
        for (i, &e) in key.iter().enumerate() {
            if e > 0 {
                term = &term * &num_pows[i][e as usize];
                if let Some(g) = group[i] {
                    k[g] += e as u32;
                }
            }
        }
        for (g, &kg) in k.iter().enumerate() {
            if kmax[g] > kg {
                term = &term * &den_pows[g][(kmax[g] - kg) as usize];
            }
        }
        num = &num + &term;
    }
    let dens = dens.into_iter().cloned().zip(kmax).filter(|(_, k)| *k > 0).collect();
    (num, dens)
}

fn add_exprs(a: &RationalExpr, b: &RationalExpr, negate_b: bool) -> RationalExpr {
    let bn = if negate_b { -&b.num } else { b.num.clone() };
    if a.is_zero() {
        return RationalExpr::normalized(bn, b.den.clone());
    }
    if b.is_zero() {
        return a.clone();
    }
    if a.den == b.den {
        return RationalExpr::normalized(&a.num + &bn, a.den.clone());
    }
    if a.den.is_one() {
        return RationalExpr::normalized(&(&a.num * &b.den) + &bn, b.den.clone());
    }
    if b.den.is_one() {
        return RationalExpr::normalized(&a.num + &(&bn * &a.den), a.den.clone());
    }
    // One denominator dividing the other keeps the common denominator small.
    if b.den.len() >= a.den.len() {
        if let Some(k) = b.den.div_exact(&a.den) {
            return RationalExpr::normalized(&(&a.num * &k) + &bn, b.den.clone());
        }
    } else if let Some(k) = a.den.div_exact(&b.den) {
        return RationalExpr::normalized(&a.num + &(&bn * &k), a.den.clone());
    }
    RationalExpr::normalized(&(&a.num * &b.den) + &(&bn * &a.den), &a.den * &b.den)
}

impl Add<&RationalExpr> for &RationalExpr {
    type Output = RationalExpr;
    fn add(self, rhs: &RationalExpr) -> RationalExpr {
        add_exprs(self, rhs, false)
    }
}

impl Sub<&RationalExpr> for &RationalExpr {
    type Output = RationalExpr;
    fn sub(self, rhs: &RationalExpr) -> RationalExpr {
        add_exprs(self, rhs, true)
    }
}

impl Mul<&RationalExpr> for &RationalExpr {
    type Output = RationalExpr;
    fn mul(self, rhs: &RationalExpr) -> RationalExpr {
        if self.is_zero() || rhs.is_zero() {
            return RationalExpr::zero();
        }
        // Cancel a denominator that matches the other numerator exactly.
        if self.den == rhs.num {
            return RationalExpr::normalized(self.num.clone(), rhs.den.clone());
        }
        if rhs.den == self.num {
            return RationalExpr::normalized(rhs.num.clone(), self.den.clone());
        }
        RationalExpr::normalized(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

impl Div<&RationalExpr> for &RationalExpr {
    type Output = RationalExpr;
    /// Panics on an identically-zero divisor; use [`RationalExpr::checked_div`]
    /// for the fallible form.
    fn div(self, rhs: &RationalExpr) -> RationalExpr {
        self.checked_div(rhs).expect("division by the zero expression")
    }
}

impl Neg for &RationalExpr {
    type Output = RationalExpr;
    fn neg(self) -> RationalExpr {
        RationalExpr { num: -&self.num, den: self.den.clone() }
    }
}

impl Neg for RationalExpr {
    type Output = RationalExpr;
    fn neg(self) -> RationalExpr {
        RationalExpr { num: -self.num, den: self.den }
    }
}

macro_rules! owned_ops {
    ($tr:ident, $m:ident) => {
        impl $tr for RationalExpr {
            type Output = RationalExpr;
            fn $m(self, rhs: RationalExpr) -> RationalExpr {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&RationalExpr> for RationalExpr {
            type Output = RationalExpr;
            fn $m(self, rhs: &RationalExpr) -> RationalExpr {
                (&self).$m(rhs)
            }
        }
        impl $tr<RationalExpr> for &RationalExpr {
            type Output = RationalExpr;
            fn $m(self, rhs: RationalExpr) -> RationalExpr {
                self.$m(&rhs)
            }
        }
    };
}

owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);
owned_ops!(Div, div);

impl From<MultiPoly> for RationalExpr {
    fn from(p: MultiPoly) -> Self {
        RationalExpr::from_poly(p)
    }
}

impl From<Var> for RationalExpr {
    fn from(v: Var) -> Self {
        RationalExpr::var(v)
    }
}

impl From<i64> for RationalExpr {
    fn from(n: i64) -> Self {
        RationalExpr::int(n)
    }
}

impl From<Scalar> for RationalExpr {
    fn from(c: Scalar) -> Self {
        RationalExpr::constant(c)
    }
}

impl fmt::Display for RationalExpr {
    /// Canonical text: `num` alone for polynomials, else `(num)/(den)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

impl fmt::Debug for RationalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// The largest power of `v` that divides `p`, and the cofactor.
pub fn split_var_power(p: &MultiPoly, v: Var) -> (u8, MultiPoly) {
    let k = p.min_exp(v);
    let mono = Monomial::var_pow(v, k);
    (k, p.div_monomial(&mono).unwrap_or_else(|| p.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::parse::parse;

    fn e(s: &str) -> RationalExpr {
        parse(s).unwrap()
    }

    #[test]
    fn cancels_by_cross_multiplication() {
        assert!(e("(q1^2 - t^2)/(q1 - t)").equals(&e("q1 + t")));
        assert!(!e("q1/p1").equals(&e("q1*p1")));
    }

    #[test]
    fn substitute_monomial() {
        let r = e("q1*p1").substitute(&[(Var::Q1, e("1/x2"))]).unwrap();
        assert!(r.equals(&e("p1/x2")));
    }

    #[test]
    fn substitute_chart_two_back() {
        let r = e("x2*y2")
            .substitute(&[(Var::chart(2, 0), e("1/q1")), (Var::chart(2, 1), e("-q1*(q1*p1 + a2)"))])
            .unwrap();
        assert!(r.equals(&e("-(q1*p1 + a2)")));
    }

    #[test]
    fn substitution_into_zero_denominator() {
        let r = e("1/(t - s)").substitute(&[(Var::T, e("s"))]);
        assert_eq!(r, Err(AlgebraError::SubstitutionDenominatorZero));
    }

    #[test]
    fn quotient_rule() {
        assert!(e("q1^2*p1").derivative(Var::Q1).equals(&e("2*q1*p1")));
        assert!(e("1/p1").derivative(Var::P1).equals(&e("-1/p1^2")));
        assert!(e("t").derivative(Var::T).equals(&RationalExpr::one()));
        assert!(e("5").derivative(Var::T).is_zero());
    }

    #[test]
    fn evaluation() {
        let pt = [(Var::Q1, Scalar::from_int(2)), (Var::T, Scalar::from_int(3))];
        assert_eq!(e("q1 + t").eval_at(&pt).unwrap(), Scalar::from_int(5));
        assert_eq!(
            e("1/p1").eval_at(&[(Var::P1, Scalar::zero())]),
            Err(AlgebraError::PoleAtPoint)
        );
        assert_eq!(e("q1").eval_at(&[]), Err(AlgebraError::UnboundVariable(Var::Q1)));
    }

    #[test]
    fn parameter_relation_value() {
        let rel = e("a0 + a1 + 2*a2 + a3 + a4 + 2*a5");
        let sixth = Scalar::ratio(1, 6);
        let mut pt: Vec<(Var, Scalar)> = (0..5).map(|i| (Var::alpha(i), sixth.clone())).collect();
        pt.push((Var::alpha(5), Scalar::ratio(1, 12)));
        // 5 * 1/6 + 1/6 (the doubled a2) + 2/12 = 7/6
        assert_eq!(rel.eval_at(&pt).unwrap(), Scalar::ratio(7, 6));
        let eighth: Vec<(Var, Scalar)> = (0..6).map(|i| (Var::alpha(i), Scalar::ratio(1, 8))).collect();
        assert_eq!(rel.eval_at(&eighth).unwrap(), Scalar::one());
    }

    #[test]
    fn normalized_denominator_is_monic() {
        let r = e("q1/(2*t)");
        assert!(r.den().leading().unwrap().1.is_one());
        assert!(r.equals(&e("q1/(2*t)")));
    }
}
