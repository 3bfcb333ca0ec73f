//! Ordinals below epsilon-zero in Cantor normal form.
//!
//! An [`Ordinal`] is a finite sum `w^e1*c1 + w^e2*c2 + ...` with strictly
//! decreasing exponents (themselves ordinals) and positive coefficients. The
//! empty sum is zero. Values are immutable and cheap to compare; they are used
//! throughout the crate as rank annotations on Borel codes.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrdinalError {
    #[error("ordinal syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("{0} is not a limit ordinal")]
    NotALimit(Ordinal),
    #[error("malformed Cantor normal form: {0}")]
    Malformed(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Term {
    exponent: Ordinal,
    coefficient: BigUint,
}

/// An ordinal `< epsilon_0` in Cantor normal form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Ordinal {
    terms: Vec<Term>,
}

/// Result of [`Ordinal::classify`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrdinalClass {
    Zero,
    Successor(Ordinal),
    Limit,
}

impl Ordinal {
    pub fn zero() -> Self {
        Ordinal { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Self::natural(1u32)
    }

    pub fn natural(n: impl Into<BigUint>) -> Self {
        let n = n.into();
        if n.is_zero() {
            return Self::zero();
        }
        Ordinal {
            terms: vec![Term {
                exponent: Ordinal::zero(),
                coefficient: n,
            }],
        }
    }

    pub fn omega() -> Self {
        Self::omega_pow(Ordinal::one())
    }

    /// `w^e`.
    pub fn omega_pow(exponent: Ordinal) -> Self {
        Ordinal {
            terms: vec![Term {
                exponent,
                coefficient: BigUint::one(),
            }],
        }
    }

    /// Builds an ordinal from `(exponent, coefficient)` pairs, rejecting
    /// anything not already in Cantor normal form.
    pub fn from_terms(
        terms: impl IntoIterator<Item = (Ordinal, BigUint)>,
    ) -> Result<Self, OrdinalError> {
        let terms: Vec<Term> = terms
            .into_iter()
            .map(|(exponent, coefficient)| Term {
                exponent,
                coefficient,
            })
            .collect();
        if terms.iter().any(|t| t.coefficient.is_zero()) {
            return Err(OrdinalError::Malformed("zero coefficient"));
        }
        if terms.windows(2).any(|w| w[0].exponent <= w[1].exponent) {
            return Err(OrdinalError::Malformed("exponents not strictly decreasing"));
        }
        Ok(Ordinal { terms })
    }

    /// The `(exponent, coefficient)` pairs, highest exponent first.
    pub fn terms(&self) -> impl Iterator<Item = (&Ordinal, &BigUint)> {
        self.terms.iter().map(|t| (&t.exponent, &t.coefficient))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.terms.iter().all(|t| t.exponent.is_zero())
    }

    /// The value as a natural number, if finite.
    pub fn as_natural(&self) -> Option<BigUint> {
        match self.terms.as_slice() {
            [] => Some(BigUint::zero()),
            [t] if t.exponent.is_zero() => Some(t.coefficient.clone()),
            _ => None,
        }
    }

    pub fn as_u64(&self) -> Option<u64> {
        self.as_natural().and_then(|n| n.to_u64())
    }

    /// Nesting depth of exponents; zero for naturals.
    pub fn height(&self) -> usize {
        self.terms
            .iter()
            .map(|t| {
                if t.exponent.is_zero() {
                    0
                } else {
                    1 + t.exponent.height()
                }
            })
            .max()
            .unwrap_or(0)
    }

    pub fn compare(&self, other: &Ordinal) -> Ordering {
        for (a, b) in self.terms.iter().zip(&other.terms) {
            let ord = a
                .exponent
                .compare(&b.exponent)
                .then_with(|| a.coefficient.cmp(&b.coefficient));
            if ord != Ordering::Equal {
                return ord;
            }
        }
        self.terms.len().cmp(&other.terms.len())
    }

    /// Ordinal sum `self + rhs`; terms of `self` below the leading exponent of
    /// `rhs` are absorbed.
    pub fn add(&self, rhs: &Ordinal) -> Ordinal {
        let Some(lead) = rhs.terms.first() else {
            return self.clone();
        };
        let mut terms: Vec<Term> = Vec::with_capacity(self.terms.len() + rhs.terms.len());
        let mut merged = None;
        for t in &self.terms {
            match t.exponent.compare(&lead.exponent) {
                Ordering::Greater => terms.push(t.clone()),
                Ordering::Equal => merged = Some(t.coefficient.clone()),
                Ordering::Less => break,
            }
        }
        let mut rest = rhs.terms.iter();
        let first = rest.next().expect("nonempty");
        terms.push(Term {
            exponent: first.exponent.clone(),
            coefficient: merged.unwrap_or_default() + &first.coefficient,
        });
        terms.extend(rest.cloned());
        Ordinal { terms }
    }

    pub fn successor(&self) -> Ordinal {
        self.add(&Ordinal::one())
    }

    /// `w * self`.
    pub fn mul_omega(&self) -> Ordinal {
        Ordinal {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    exponent: Ordinal::one().add(&t.exponent),
                    coefficient: t.coefficient.clone(),
                })
                .collect(),
        }
    }

    /// `self * n` for a natural `n`.
    pub fn mul_natural(&self, n: &BigUint) -> Ordinal {
        if n.is_zero() || self.is_zero() {
            return Ordinal::zero();
        }
        let mut terms = self.terms.clone();
        terms[0].coefficient *= n;
        Ordinal { terms }
    }

    pub fn classify(&self) -> OrdinalClass {
        match self.terms.last() {
            None => OrdinalClass::Zero,
            Some(t) if t.exponent.is_zero() => {
                let mut terms = self.terms.clone();
                let last = terms.last_mut().expect("nonempty");
                last.coefficient -= 1u32;
                if last.coefficient.is_zero() {
                    terms.pop();
                }
                OrdinalClass::Successor(Ordinal { terms })
            }
            Some(_) => OrdinalClass::Limit,
        }
    }

    pub fn is_limit(&self) -> bool {
        matches!(self.classify(), OrdinalClass::Limit)
    }

    /// The `n`-th element of the standard fundamental sequence of a limit.
    ///
    /// Writing `self = b + w^e`: if `e = d + 1` the sequence is `b + w^d * n`,
    /// and if `e` is a limit it is `b + w^(e[n])`.
    pub fn fundamental_sequence(&self, n: u64) -> Result<Ordinal, OrdinalError> {
        if !self.is_limit() {
            return Err(OrdinalError::NotALimit(self.clone()));
        }
        let mut base = self.terms.clone();
        let last = base.pop().expect("limit is nonzero");
        if last.coefficient > BigUint::one() {
            base.push(Term {
                exponent: last.exponent.clone(),
                coefficient: &last.coefficient - 1u32,
            });
        }
        let base = Ordinal { terms: base };
        let step = match last.exponent.classify() {
            OrdinalClass::Successor(pred) => {
                Ordinal::omega_pow(pred).mul_natural(&BigUint::from(n))
            }
            OrdinalClass::Limit => Ordinal::omega_pow(last.exponent.fundamental_sequence(n)?),
            OrdinalClass::Zero => unreachable!("limit has a nonzero last exponent"),
        };
        Ok(base.add(&step))
    }

    /// Parses an ordinal from the front of `input`, returning it together with
    /// the number of bytes consumed. Parsing stops at the first character that
    /// cannot continue the expression, so the syntax can be embedded in other
    /// grammars.
    pub fn parse_prefix(input: &str) -> Result<(Ordinal, usize), OrdinalError> {
        let mut p = Parser {
            src: input.as_bytes(),
            pos: 0,
        };
        let value = p.sum()?;
        Ok((value, p.pos))
    }
}

impl PartialOrd for Ordinal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ordinal {
    fn cmp(&self, other: &Self) -> Ordering {
        self.compare(other)
    }
}

impl From<u64> for Ordinal {
    fn from(n: u64) -> Self {
        Ordinal::natural(n)
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if t.exponent.is_zero() {
                write!(f, "{}", t.coefficient)?;
                continue;
            }
            f.write_str("w")?;
            if t.exponent != Ordinal::one() {
                if t.exponent.is_finite() || t.exponent == Ordinal::omega() {
                    write!(f, "^{}", t.exponent)?;
                } else {
                    write!(f, "^({})", t.exponent)?;
                }
            }
            if !t.coefficient.is_one() {
                write!(f, "*{}", t.coefficient)?;
            }
        }
        Ok(())
    }
}

impl FromStr for Ordinal {
    type Err = OrdinalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (value, used) = Ordinal::parse_prefix(s)?;
        if !s[used..].trim().is_empty() {
            return Err(OrdinalError::Syntax {
                pos: used + (s[used..].len() - s[used..].trim_start().len()),
                msg: "trailing input".into(),
            });
        }
        Ok(value)
    }
}

// sum     := product ('+' product)*
// product := atom ('*' nat)*
// atom    := nat | 'w' ('^' exp)? | '(' sum ')'
// exp     := nat | 'w' | '(' sum ')'
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

    fn err<T>(&self, msg: &str) -> Result<T, OrdinalError> {
        Err(OrdinalError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        })
    }

    fn sum(&mut self) -> Result<Ordinal, OrdinalError> {
        let mut acc = self.product()?;
        loop {
            let save = self.pos;
            if self.peek() == Some(b'+') {
                self.pos += 1;
                let next = self.product()?;
                acc = acc.add(&next);
            } else {
                self.pos = save;
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<Ordinal, OrdinalError> {
        let mut acc = self.atom()?;
        loop {
            let save = self.pos;
            if self.peek() == Some(b'*') {
                self.pos += 1;
                self.skip_ws();
                let n = self.nat()?;
                acc = acc.mul_natural(&n);
            } else {
                self.pos = save;
                return Ok(acc);
            }
        }
    }

    fn atom(&mut self) -> Result<Ordinal, OrdinalError> {
        match self.peek() {
            Some(b'0'..=b'9') => Ok(Ordinal::natural(self.nat()?)),
            Some(b'w') => {
                self.pos += 1;
                let save = self.pos;
                if self.peek() == Some(b'^') {
                    self.pos += 1;
                    let e = self.exponent()?;
                    Ok(Ordinal::omega_pow(e))
                } else {
                    self.pos = save;
                    Ok(Ordinal::omega())
                }
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.sum()?;
                if self.peek() != Some(b')') {
                    return self.err("expected ')'");
                }
                self.pos += 1;
                Ok(inner)
            }
            _ => self.err("expected a natural, 'w', or '('"),
        }
    }

    fn exponent(&mut self) -> Result<Ordinal, OrdinalError> {
        match self.peek() {
            Some(b'0'..=b'9') => Ok(Ordinal::natural(self.nat()?)),
            Some(b'w') => {
                self.pos += 1;
                Ok(Ordinal::omega())
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.sum()?;
                if self.peek() != Some(b')') {
                    return self.err("expected ')'");
                }
                self.pos += 1;
                Ok(inner)
            }
            _ => self.err("expected an exponent"),
        }
    }

    fn nat(&mut self) -> Result<BigUint, OrdinalError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected digits");
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        Ok(digits.parse().expect("nonempty digit run"))
    }
}
