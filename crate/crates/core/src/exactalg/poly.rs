use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::scalar::Scalar;
use super::var::{Var, NVARS};

/// Exponent vector over the variable universe.
///
/// Ordering is graded lexicographic: total degree first, then the exponent
/// of the lowest-index variable.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    deg: u16,
    exps: [u8; NVARS],
}

impl Monomial {
    pub fn one() -> Self {
        Monomial { deg: 0, exps: [0; NVARS] }
    }

    pub fn var(v: Var) -> Self {
        Self::var_pow(v, 1)
    }

    pub fn var_pow(v: Var, e: u8) -> Self {
        let mut m = Self::one();
        m.exps[v.index()] = e;
        m.deg = e as u16;
        m
    }

    pub fn from_pairs(pairs: &[(Var, u8)]) -> Self {
        let mut m = Self::one();
        for &(v, e) in pairs {
            m.exps[v.index()] += e;
            m.deg += e as u16;
        }
        m
    }

    pub fn degree(&self) -> u32 {
        self.deg as u32
    }

    pub fn exp(&self, v: Var) -> u8 {
        self.exps[v.index()]
    }

    pub fn is_one(&self) -> bool {
        self.deg == 0
    }

    /// Degree restricted to a subset of variables.
    pub fn degree_in(&self, vars: &[Var]) -> u32 {
        vars.iter().map(|v| self.exps[v.index()] as u32).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut exps = self.exps;
        for (e, o) in exps.iter_mut().zip(other.exps.iter()) {
            *e = e.checked_add(*o).expect("exponent overflow");
        }
        Monomial { deg: self.deg + other.deg, exps }
    }

    /// `self / other` if `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut exps = self.exps;
        for (e, o) in exps.iter_mut().zip(other.exps.iter()) {
            *e = e.checked_sub(*o)?;
        }
        Some(Monomial { deg: self.deg - other.deg, exps })
    }

    pub fn gcd(&self, other: &Monomial) -> Monomial {
        let mut exps = self.exps;
        let mut deg = 0u16;
        for (e, o) in exps.iter_mut().zip(other.exps.iter()) {
            *e = (*e).min(*o);
            deg += *e as u16;
        }
        Monomial { deg, exps }
    }

    /// Copy with the exponent of `v` set to `e`.
    pub fn with_exp(&self, v: Var, e: u8) -> Monomial {
        let mut m = self.clone();
        let old = m.exps[v.index()];
        m.exps[v.index()] = e;
        m.deg = m.deg - old as u16 + e as u16;
        m
    }

    /// Variables with nonzero exponent, in universe order.
    pub fn support(&self) -> impl Iterator<Item = (Var, u8)> + '_ {
        self.exps
            .iter()
            .enumerate()
            .filter(|(_, e)| **e > 0)
            .map(|(i, e)| (Var::from_index(i).unwrap(), *e))
    }

    pub fn contains_any(&self, mask: &[bool; NVARS]) -> bool {
        self.exps.iter().zip(mask.iter()).any(|(e, m)| *m && *e > 0)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return f.write_str("1");
        }
        let mut first = true;
        for (v, e) in self.support() {
            if !first {
                f.write_str("*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}^{e}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Sparse multivariate polynomial with exact rational coefficients.
///
/// No zero coefficient is ever stored.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct MultiPoly {
    terms: BTreeMap<Monomial, Scalar>,
}

/// Division by a variable power failed; carries the first offending monomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotDivisible(pub Monomial);

fn var_mask(vars: &[Var]) -> [bool; NVARS] {
    let mut mask = [false; NVARS];
    for v in vars {
        mask[v.index()] = true;
    }
    mask
}

impl MultiPoly {
    pub fn zero() -> Self {
        MultiPoly { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(Scalar::one())
    }

    pub fn constant(c: Scalar) -> Self {
        Self::term(c, Monomial::one())
    }

    pub fn int(n: i64) -> Self {
        Self::constant(Scalar::from_int(n))
    }

    pub fn var(v: Var) -> Self {
        Self::term(Scalar::one(), Monomial::var(v))
    }

    pub fn term(c: Scalar, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        MultiPoly { terms }
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, Scalar)>>(it: I) -> Self {
        let mut p = Self::zero();
        for (m, c) in it {
            p.add_term(m, &c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self.terms.iter().next().is_some_and(|(m, c)| m.is_one() && c.is_one())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending monomial order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Scalar {
        self.terms.get(m).cloned().unwrap_or_else(Scalar::zero)
    }

    /// The constant term's value if the polynomial is constant.
    pub fn as_constant(&self) -> Option<Scalar> {
        match self.terms.len() {
            0 => Some(Scalar::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    /// Leading term under the graded lexicographic order.
    pub fn leading(&self) -> Option<(&Monomial, &Scalar)> {
        self.terms.iter().next_back()
    }

    pub fn add_term(&mut self, m: Monomial, c: &Scalar) {
        if c.is_zero() {
            return;
        }
        use alloc::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c.clone());
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Scalar) -> MultiPoly {
        if c.is_zero() {
            return Self::zero();
        }
        MultiPoly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn mul_monomial(&self, mono: &Monomial, c: &Scalar) -> MultiPoly {
        if c.is_zero() {
            return Self::zero();
        }
        MultiPoly {
            terms: self.terms.iter().map(|(m, k)| (m.mul(mono), k * c)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> MultiPoly {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    /// Maximum over terms of the summed exponents of `vars`.
    pub fn degree_in(&self, vars: &[Var]) -> u32 {
        self.terms.keys().map(|m| m.degree_in(vars)).max().unwrap_or(0)
    }

    pub fn max_exp(&self, v: Var) -> u8 {
        self.terms.keys().map(|m| m.exp(v)).max().unwrap_or(0)
    }

    pub fn min_exp(&self, v: Var) -> u8 {
        self.terms.keys().map(|m| m.exp(v)).min().unwrap_or(0)
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.terms.keys().any(|m| m.exp(v) > 0)
    }

    pub fn contains_any(&self, vars: &[Var]) -> bool {
        let mask = var_mask(vars);
        self.terms.keys().any(|m| m.contains_any(&mask))
    }

    /// Variables occurring in the polynomial, in universe order.
    pub fn vars(&self) -> Vec<Var> {
        let mut seen = [false; NVARS];
        for m in self.terms.keys() {
            for (v, _) in m.support() {
                seen[v.index()] = true;
            }
        }
        seen.iter()
            .enumerate()
            .filter(|(_, s)| **s)
            .map(|(i, _)| Var::from_index(i).unwrap())
            .collect()
    }

    pub fn derivative(&self, v: Var) -> MultiPoly {
        let mut out = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m.exp(v);
            if e == 0 {
                continue;
            }
            out.insert(m.with_exp(v, e - 1), c * &Scalar::from_int(e as i64));
        }
        MultiPoly { terms: out }
    }

    /// Coefficients with respect to `v`: entry `k` is the coefficient of `v^k`.
    pub fn coefficients_in(&self, v: Var) -> Vec<MultiPoly> {
        let n = self.max_exp(v) as usize;
        let mut out = vec![MultiPoly::zero(); n + 1];
        for (m, c) in &self.terms {
            let e = m.exp(v);
            out[e as usize].terms.insert(m.with_exp(v, 0), c.clone());
        }
        out
    }

    /// Exact division by `v^k`.
    pub fn divide_by_var_power(&self, v: Var, k: u8) -> Result<MultiPoly, NotDivisible> {
        if k == 0 {
            return Ok(self.clone());
        }
        let mut out = BTreeMap::new();
        // Walk from the lowest term so the witness is the smallest offender.
        for (m, c) in &self.terms {
            let e = m.exp(v);
            if e < k {
                return Err(NotDivisible(m.clone()));
            }
            out.insert(m.with_exp(v, e - k), c.clone());
        }
        Ok(MultiPoly { terms: out })
    }

    /// Largest monomial dividing every term (the monomial content).
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        let Some(first) = it.next() else {
            return Monomial::one();
        };
        it.fold(first.clone(), |g, m| g.gcd(m))
    }

    pub fn div_monomial(&self, mono: &Monomial) -> Option<MultiPoly> {
        let mut out = BTreeMap::new();
        for (m, c) in &self.terms {
            out.insert(m.div(mono)?, c.clone());
        }
        Some(MultiPoly { terms: out })
    }

    /// Exact quotient `self / d`, or `None` if `d` does not divide `self`.
    pub fn div_exact(&self, d: &MultiPoly) -> Option<MultiPoly> {
        let (dlm, dlc) = d.leading()?;
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&c.recip()?));
        }
        let dlm = dlm.clone();
        let dinv = dlc.recip()?;
        let mut rem = self.clone();
        let mut quot = MultiPoly::zero();
        while let Some((rlm, rlc)) = rem.leading() {
            let qm = rlm.div(&dlm)?;
            let qc = rlc * &dinv;
            for (m, c) in &d.terms {
                rem.add_term(m.mul(&qm), &-(c * &qc));
            }
            quot.add_term(qm, &qc);
        }
        Some(quot)
    }

    /// Partial evaluation: replaces each listed variable by a constant.
    pub fn substitute_scalars(&self, vals: &[(Var, Scalar)]) -> MultiPoly {
        let mut powers: Vec<(Var, Vec<Scalar>)> = Vec::new();
        for (v, x) in vals {
            let n = self.max_exp(*v) as usize;
            let mut pw = Vec::with_capacity(n + 1);
            pw.push(Scalar::one());
            for i in 1..=n {
                let next = &pw[i - 1] * x;
                pw.push(next);
            }
            powers.push((*v, pw));
        }
        let mut out = MultiPoly::zero();
        for (m, c) in &self.terms {
            let mut c = c.clone();
            let mut m = m.clone();
            for (v, pw) in &powers {
                let e = m.exp(*v);
                if e > 0 {
                    c *= &pw[e as usize];
                    m = m.with_exp(*v, 0);
                }
            }
            out.add_term(m, &c);
        }
        out
    }

    /// Variable renaming; `map` is applied simultaneously.
    pub fn rename(&self, map: &[(Var, Var)]) -> MultiPoly {
        let mut out = MultiPoly::zero();
        for (m, c) in &self.terms {
            let mut nm = m.clone();
            for &(from, _) in map {
                nm = nm.with_exp(from, 0);
            }
            for &(from, to) in map {
                let e = m.exp(from);
                if e > 0 {
                    let cur = nm.exp(to);
                    nm = nm.with_exp(to, cur + e);
                }
            }
            out.add_term(nm, c);
        }
        out
    }

    /// Exact evaluation; unbound variables are an error reported as `Err(var)`.
    pub fn eval(&self, point: &dyn Fn(Var) -> Option<Scalar>) -> Result<Scalar, Var> {
        let mut cache: [Option<Vec<Scalar>>; NVARS] = core::array::from_fn(|_| None);
        let mut acc = Scalar::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in m.support() {
                let slot = &mut cache[v.index()];
                if slot.is_none() {
                    *slot = Some(vec![Scalar::one(), point(v).ok_or(v)?]);
                }
                let pw = slot.as_mut().unwrap();
                while pw.len() <= e as usize {
                    let next = &pw[pw.len() - 1] * &pw[1];
                    pw.push(next);
                }
                t *= &pw[e as usize];
            }
            acc += &t;
        }
        Ok(acc)
    }

    /// Evaluation modulo the prime `p`; `point` gives residues.
    ///
    /// `Err(None)` if a coefficient denominator is divisible by `p`.
    pub fn eval_mod(&self, point: &dyn Fn(Var) -> Option<u64>, p: u64) -> Result<u64, Option<Var>> {
        use super::modp;
        let mut cache: [Option<u64>; NVARS] = [None; NVARS];
        let mut acc = 0u64;
        for (m, c) in &self.terms {
            let mut t = c.mod_prime(p).ok_or(None)?;
            for (v, e) in m.support() {
                let x = match cache[v.index()] {
                    Some(x) => x,
                    None => {
                        let x = point(v).ok_or(Some(v))? % p;
                        cache[v.index()] = Some(x);
                        x
                    }
                };
                t = modp::mul(t, modp::pow(x, e as u64, p), p);
            }
            acc = modp::add(acc, t, p);
        }
        Ok(acc)
    }

    pub fn eval_complex(&self, point: &dyn Fn(Var) -> Option<Complex64>) -> Result<Complex64, Var> {
        let mut cache: [Option<Complex64>; NVARS] = [None; NVARS];
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut t = c.to_complex();
            for (v, e) in m.support() {
                let x = match cache[v.index()] {
                    Some(x) => x,
                    None => {
                        let x = point(v).ok_or(v)?;
                        cache[v.index()] = Some(x);
                        x
                    }
                };
                t *= x.powu(e as u32);
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Divides by the leading coefficient; returns the factor removed.
    pub fn make_monic(&self) -> (MultiPoly, Scalar) {
        match self.leading() {
            None => (Self::zero(), Scalar::one()),
            Some((_, lc)) => {
                let lc = lc.clone();
                (self.scale(&lc.recip().unwrap()), lc)
            }
        }
    }
}

impl fmt::Display for MultiPoly {
    /// Canonical text: terms in descending monomial order, `coeff*var^e*...`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if m.is_one() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{a}*{m}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Add<&MultiPoly> for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        let (big, small) = if self.len() >= rhs.len() { (self, rhs) } else { (rhs, self) };
        let mut out = big.clone();
        for (m, c) in &small.terms {
            out.add_term(m.clone(), c);
        }
        out
    }
}

impl Sub<&MultiPoly> for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), &-c);
        }
        out
    }
}

impl Mul<&MultiPoly> for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        if self.is_zero() || rhs.is_zero() {
            return MultiPoly::zero();
        }
        if rhs.len() == 1 {
            let (m, c) = rhs.terms.iter().next().unwrap();
            return self.mul_monomial(m, c);
        }
        if self.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            return rhs.mul_monomial(m, c);
        }
        let (outer, inner) = if self.len() <= rhs.len() { (self, rhs) } else { (rhs, self) };
        // Multiplying by a monomial preserves the order, so each row is
        // already sorted and the rows can be merged pairwise.
        let mut rows: Vec<Vec<(Monomial, Scalar)>> = outer
            .terms
            .iter()
            .map(|(m1, c1)| inner.terms.iter().map(|(m2, c2)| (m1.mul(m2), c1 * c2)).collect())
            .collect();
        while rows.len() > 1 {
            let mut next = Vec::with_capacity(rows.len().div_ceil(2));
            let mut it = rows.into_iter();
            while let Some(a) = it.next() {
                next.push(match it.next() {
                    Some(b) => merge_sorted(a, b),
                    None => a,
                });
            }
            rows = next;
        }
        let row = rows.pop().unwrap_or_default();
        MultiPoly { terms: row.into_iter().filter(|(_, c)| !c.is_zero()).collect() }
    }
}

/// Merges two ascending term lists, combining equal monomials.
fn merge_sorted(a: Vec<(Monomial, Scalar)>, b: Vec<(Monomial, Scalar)>) -> Vec<(Monomial, Scalar)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut a = a.into_iter().peekable();
    let mut b = b.into_iter().peekable();
    loop {
        let ord = match (a.peek(), b.peek()) {
            (Some(x), Some(y)) => x.0.cmp(&y.0),
            (Some(_), None) => core::cmp::Ordering::Less,
            (None, Some(_)) => core::cmp::Ordering::Greater,
            (None, None) => break,
        };
        match ord {
            core::cmp::Ordering::Less => out.push(a.next().unwrap()),
            core::cmp::Ordering::Greater => out.push(b.next().unwrap()),
            core::cmp::Ordering::Equal => {
                let (m, mut c) = a.next().unwrap();
                c += &b.next().unwrap().1;
                if !c.is_zero() {
                    out.push((m, c));
                }
            }
        }
    }
    out
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        MultiPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

macro_rules! owned_ops {
    ($tr:ident, $m:ident) => {
        impl $tr for MultiPoly {
            type Output = MultiPoly;
            fn $m(self, rhs: MultiPoly) -> MultiPoly {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&MultiPoly> for MultiPoly {
            type Output = MultiPoly;
            fn $m(self, rhs: &MultiPoly) -> MultiPoly {
                (&self).$m(rhs)
            }
        }
    };
}

owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

impl Neg for MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn v(x: Var) -> MultiPoly {
        MultiPoly::var(x)
    }

    #[test]
    fn difference_of_squares() {
        let a = &v(Var::Q1) + &v(Var::T);
        let b = &v(Var::Q1) - &v(Var::T);
        let expect = &v(Var::Q1).pow(2) - &v(Var::T).pow(2);
        assert_eq!(&a * &b, expect);
    }

    #[test]
    fn additive_identity_and_rational_coefficients() {
        let p = &v(Var::Q1) * &v(Var::P2) + MultiPoly::int(3);
        assert_eq!(&p + &MultiPoly::zero(), p);
        let a = v(Var::Q1).scale(&Scalar::ratio(2, 3));
        let b = v(Var::P1).scale(&Scalar::from_int(3));
        assert_eq!((&a * &b).to_string(), "2*q1*p1");
    }

    #[test]
    fn no_zero_terms_after_cancellation() {
        let p = &v(Var::Q1) - &v(Var::Q1);
        assert!(p.is_zero());
        assert_eq!(p.len(), 0);
    }

    #[test]
    fn divide_by_power() {
        let y = Var::chart(0, 1);
        let x = Var::chart(0, 0);
        let p = &(&v(y).pow(2) * &v(x)) + &v(y).pow(3);
        assert_eq!(p.divide_by_var_power(y, 2).unwrap(), &v(x) + &v(y));
        let bad = &(&v(y) * &v(x)) + &MultiPoly::one();
        assert_eq!(bad.divide_by_var_power(y, 1), Err(NotDivisible(Monomial::one())));
    }

    #[test]
    fn exact_division() {
        let a = &v(Var::Q1) + &v(Var::T);
        let b = &v(Var::Q1) - &v(Var::ETA);
        let prod = &a * &b;
        assert_eq!(prod.div_exact(&a), Some(b.clone()));
        assert_eq!((&prod + &MultiPoly::one()).div_exact(&a), None);
    }

    #[test]
    fn canonical_text_is_descending_grlex() {
        let p = &(&v(Var::T) + &v(Var::Q1).pow(2)) - &MultiPoly::int(1);
        assert_eq!(p.to_string(), "q1^2 + t - 1");
    }

    #[test]
    fn degree_in_subset() {
        let p = &v(Var::Q1).pow(4) * &v(Var::P1).pow(2) * v(Var::T).pow(3);
        assert_eq!(p.degree_in(&Var::STATE), 6);
        assert_eq!(p.total_degree(), 9);
    }

    #[test]
    fn rename_swaps() {
        let p = &v(Var::Q1).pow(2) * &v(Var::Q2);
        let r = p.rename(&[(Var::Q1, Var::Q2), (Var::Q2, Var::Q1)]);
        assert_eq!(r, &v(Var::Q2).pow(2) * &v(Var::Q1));
    }
}
