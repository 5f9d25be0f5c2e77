//! Random rational points for probabilistic identity screening.
//!
//! A polynomial identity that fails is detected at a random point with
//! overwhelming probability; one that holds evaluates equal everywhere. The
//! screen therefore only ever short-circuits a negative answer.

use alloc::vec::Vec;

use num_bigint::BigInt;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::expr::RationalExpr;
use super::modp;
use super::scalar::Scalar;
use super::var::Var;

/// Upper bound for numerators and denominators of random coordinates.
pub const COORD_BOUND: u64 = 1_000_000;

const SEED: u64 = 0x5eed_6a72_6e69_6572;

/// Deterministic source of random rational points.
pub struct PointSampler {
    rng: ChaCha8Rng,
}

impl PointSampler {
    pub fn new(seed: u64) -> Self {
        PointSampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn draw(&mut self) -> u64 {
        1 + self.rng.next_u64() % COORD_BOUND
    }

    /// Rational with numerator and denominator uniform in `[1, COORD_BOUND]`.
    pub fn scalar(&mut self) -> Scalar {
        let n = self.draw();
        let d = self.draw();
        Scalar::from_big(BigInt::from(n), BigInt::from(d))
    }

    pub fn point(&mut self, vars: &[Var]) -> Vec<(Var, Scalar)> {
        vars.iter().map(|v| (*v, self.scalar())).collect()
    }
}

impl Default for PointSampler {
    fn default() -> Self {
        Self::new(SEED)
    }
}

/// Screens `a == b` at `trials` random rational points.
///
/// Both sides are evaluated modulo the prime [`modp::P61`] after
/// cross-multiplication. Equal rational functions agree at every point where
/// both are defined, so a mismatch of residues proves `a != b`. `Some(false)`
/// is therefore a proof of inequality; `None` means the screen was
/// inconclusive (all sampled points agreed, or every draw hit a pole).
pub fn probably_equal(a: &RationalExpr, b: &RationalExpr, trials: usize) -> Option<bool> {
    let p = modp::P61;
    let mut vars = a.vars();
    for v in b.vars() {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    let mut sampler = PointSampler::default();
    let mut done = 0;
    let mut attempts = 0;
    while done < trials && attempts < 4 * trials + 4 {
        attempts += 1;
        let Some(pt) = sampler
            .point(&vars)
            .into_iter()
            .map(|(v, x)| x.mod_prime(p).map(|r| (v, r)))
            .collect::<Option<Vec<(Var, u64)>>>()
        else {
            continue;
        };
        let at = |v: Var| pt.iter().find(|(w, _)| *w == v).map(|(_, x)| *x);
        let ev = |q: &super::poly::MultiPoly| q.eval_mod(&at, p).ok();
        let (Some(an), Some(ad), Some(bn), Some(bd)) = (ev(a.num()), ev(a.den()), ev(b.num()), ev(b.den()))
        else {
            continue;
        };
        if ad == 0 || bd == 0 {
            continue;
        }
        if modp::mul(an, bd, p) != modp::mul(bn, ad, p) {
            return Some(false);
        }
        done += 1;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::parse::parse;

    #[test]
    fn sampler_is_deterministic_and_bounded() {
        let mut a = PointSampler::new(7);
        let mut b = PointSampler::new(7);
        for _ in 0..50 {
            let x = a.scalar();
            assert_eq!(x, b.scalar());
            assert!(!x.is_negative() && !x.is_zero());
        }
    }

    #[test]
    fn screen_never_refutes_true_identity() {
        let a = parse("(q1^2 - t^2)/(q1 - t)").unwrap();
        let b = parse("q1 + t").unwrap();
        assert_eq!(probably_equal(&a, &b, 5), None);
        let c = parse("q1 - t").unwrap();
        assert_eq!(probably_equal(&a, &c, 5), Some(false));
    }
}
