//! Exact rational arithmetic and sparse multivariate polynomial and
//! rational-expression algebra.

pub mod check;
mod expr;
pub mod modp;
mod parse;
mod poly;
mod scalar;
mod var;

pub use expr::{split_var_power, substitute_poly, Bindings, RationalExpr};
pub use parse::{parse, ParseError};
pub use poly::{Monomial, MultiPoly, NotDivisible};
pub use scalar::{ParseScalarError, Scalar};
pub use var::{Var, NVARS};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlgebraError {
    #[error("denominator is the zero polynomial")]
    ZeroDenominator,
    #[error("substitution produced an identically zero denominator")]
    SubstitutionDenominatorZero,
    #[error("denominator vanishes at the evaluation point")]
    PoleAtPoint,
    #[error("variable `{0}` is not bound at the evaluation point")]
    UnboundVariable(Var),
    #[error("not divisible: offending monomial {0}")]
    NotDivisible(Monomial),
}

/// `p / v^k`, failing with the offending monomial.
pub fn divide_by_monomial_power(p: &MultiPoly, v: Var, k: u8) -> Result<MultiPoly, AlgebraError> {
    p.divide_by_var_power(v, k).map_err(|NotDivisible(m)| AlgebraError::NotDivisible(m))
}

/// Shorthand used throughout: parse a literal that is known to be valid.
pub fn expr(text: &str) -> RationalExpr {
    parse(text).unwrap_or_else(|e| panic!("bad expression literal `{text}`: {e}"))
}
