//! Reader for the infix text form of rational expressions.
//!
//! Grammar: sums and differences of products and quotients of powers;
//! atoms are variable names, non-negative rationals written as integers,
//! and parenthesized sub-expressions. `^` takes an integer exponent,
//! possibly negative.

use alloc::string::{String, ToString};

use num_bigint::BigInt;

use super::expr::RationalExpr;
use super::scalar::Scalar;
use super::var::Var;
use super::AlgebraError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("unexpected character `{0}` at offset {1}")]
    Unexpected(char, usize),
    #[error("unexpected end of input")]
    Eof,
    #[error("unknown variable `{0}`")]
    UnknownVar(String),
    #[error("{0}")]
    Algebra(#[from] AlgebraError),
}

pub fn parse(text: &str) -> Result<RationalExpr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let e = p.sum()?;
    p.skip_ws();
    match p.peek() {
        None => Ok(e),
        Some(c) => Err(ParseError::Unexpected(c as char, p.pos)),
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn sum(&mut self) -> Result<RationalExpr, ParseError> {
        let mut acc = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                -self.product()?
            }
            Some(b'+') => {
                self.pos += 1;
                self.product()?
            }
            _ => self.product()?,
        };
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = &acc + &self.product()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = &acc - &self.product()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn product(&mut self) -> Result<RationalExpr, ParseError> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = &acc * &self.power()?;
                }
                Some(b'/') => {
                    self.pos += 1;
                    let d = self.power()?;
                    acc = acc.checked_div(&d)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<RationalExpr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let neg = if self.peek() == Some(b'-') {
                self.pos += 1;
                true
            } else {
                false
            };
            let e = self.integer()?;
            let e: i32 = e.to_string().parse().map_err(|_| ParseError::Eof)?;
            return Ok(base.pow(if neg { -e } else { e })?);
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<BigInt, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return match self.src.get(self.pos) {
                Some(c) => Err(ParseError::Unexpected(*c as char, self.pos)),
                None => Err(ParseError::Eof),
            };
        }
        let s = core::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok(s.parse().unwrap())
    }

    fn atom(&mut self) -> Result<RationalExpr, ParseError> {
        match self.peek() {
            None => Err(ParseError::Eof),
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                match self.peek() {
                    Some(b')') => {
                        self.pos += 1;
                        Ok(e)
                    }
                    Some(c) => Err(ParseError::Unexpected(c as char, self.pos)),
                    None => Err(ParseError::Eof),
                }
            }
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.power()?)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                Ok(RationalExpr::constant(Scalar::from_big(n, BigInt::from(1))))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = core::str::from_utf8(&self.src[start..self.pos]).unwrap();
                Var::from_name(name)
                    .map(RationalExpr::var)
                    .ok_or_else(|| ParseError::UnknownVar(name.to_string()))
            }
            Some(c) => Err(ParseError::Unexpected(c as char, self.pos)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn reads_back_canonical_text() {
        let e = parse("(q1 + t)*(q1 - t) + 2/3*p1").unwrap();
        let again = parse(&e.to_string()).unwrap();
        assert!(e.equals(&again));
        assert_eq!(e.to_string(), "q1^2 - t^2 + 2/3*p1");
    }

    #[test]
    fn negative_powers() {
        let e = parse("p1^-2").unwrap();
        assert!(e.equals(&parse("1/(p1*p1)").unwrap()));
    }

    #[test]
    fn errors() {
        assert_eq!(parse("q9"), Err(ParseError::UnknownVar("q9".into())));
        assert!(matches!(parse("q1 +"), Err(ParseError::Eof)));
        assert!(matches!(parse("1/0"), Err(ParseError::Algebra(_))));
        assert!(matches!(parse("q1)"), Err(ParseError::Unexpected(')', _))));
    }
}
