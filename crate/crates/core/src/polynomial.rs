//! Noncommutative *-polynomials in `z_1, ..., z_k` and their adjoints:
//! text syntax, evaluation at matrix tuples and algebraic operations.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::haar::complex_gaussian;
use crate::matrix::{c64, real, CMatrix, C64};
use crate::star_algebra::MatTuple;

/// A letter `z_{var+1}` or its adjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub var: usize,
    pub adjoint: bool,
}

impl Letter {
    pub fn new(var: usize, adjoint: bool) -> Self {
        Self { var, adjoint }
    }

    fn star(self) -> Self {
        Self { var: self.var, adjoint: !self.adjoint }
    }
}

/// Finite linear combination of words. An empty word is a constant term,
/// which makes the polynomial unital.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StarPolynomial {
    pub terms: Vec<(C64, Vec<Letter>)>,
}

impl StarPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: C64) -> Self {
        Self { terms: alloc::vec![(c, Vec::new())] }
    }

    /// The coordinate polynomial `z_{var+1}`.
    pub fn var(var: usize) -> Self {
        Self { terms: alloc::vec![(real(1.0), alloc::vec![Letter::new(var, false)])] }
    }

    pub fn new(terms: Vec<(C64, Vec<Letter>)>) -> Result<Self> {
        for (c, _) in &terms {
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::InvalidInput("polynomial coefficient is not finite".into()));
            }
        }
        Ok(Self { terms })
    }

    /// Whether some term is a constant.
    pub fn is_unital(&self) -> bool {
        self.terms.iter().any(|(_, w)| w.is_empty())
    }

    /// Sum of the constant terms.
    pub fn constant_term(&self) -> C64 {
        self.terms.iter().filter(|(_, w)| w.is_empty()).map(|(c, _)| *c).sum()
    }

    /// Number of variables referenced (largest index plus one).
    pub fn arity(&self) -> usize {
        self.terms.iter().flat_map(|(_, w)| w.iter()).map(|l| l.var + 1).max().unwrap_or(0)
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(_, w)| w.len()).max().unwrap_or(0)
    }

    pub fn adjoint(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(c, w)| (c.conj(), w.iter().rev().map(|l| l.star()).collect()))
            .collect();
        Self { terms }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { terms }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { terms: self.terms.iter().map(|(c, w)| (c * s, w.clone())).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, u) in &self.terms {
            for (b, v) in &other.terms {
                let mut w = u.clone();
                w.extend(v.iter().copied());
                terms.push((a * b, w));
            }
        }
        Self { terms }
    }

    /// Same polynomial with the constant terms removed.
    pub fn without_constant(&self) -> Self {
        Self { terms: self.terms.iter().filter(|(_, w)| !w.is_empty()).cloned().collect() }
    }

    /// Parses the text syntax, e.g. `2.5*z1*z2'*z1 - (1+2i)*z2 + 3`.
    pub fn parse(text: &str) -> Result<Self> {
        Parser::new(text).polynomial()
    }
}

/// Evaluates `p` at the tuple: constants become multiples of `I_d`.
pub fn eval_star_polynomial(p: &StarPolynomial, t: &MatTuple) -> Result<CMatrix> {
    let arity = p.arity();
    if arity > t.k() {
        return Err(Error::ArityMismatch { index: arity, arity: t.k() });
    }
    let adjoints: Vec<CMatrix> = t.gens.iter().map(|g| g.adjoint()).collect();
    let letter = |l: &Letter| if l.adjoint { &adjoints[l.var] } else { &t.gens[l.var] };
    let mut acc = CMatrix::zeros(t.d, t.d);
    for (c, w) in &p.terms {
        let value = match w.split_first() {
            None => CMatrix::identity(t.d, t.d),
            Some((first, rest)) => rest.iter().fold(letter(first).clone(), |m, l| m * letter(l)),
        };
        acc += value * *c;
    }
    Ok(acc)
}

/// Random polynomial without constant term: `terms` words of length
/// `1..=max_len` over `k` variables, complex Gaussian coefficients.
pub fn random_polynomial<R: Rng + ?Sized>(rng: &mut R, k: usize, terms: usize, max_len: usize) -> StarPolynomial {
    let terms = (0..terms)
        .map(|_| {
            let len = rng.random_range(1..=max_len);
            let word = (0..len).map(|_| Letter::new(rng.random_range(0..k), rng.random_bool(0.5))).collect();
            (complex_gaussian(rng), word)
        })
        .collect();
    StarPolynomial { terms }
}

impl fmt::Display for StarPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (c, w)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({}{:+}i)", c.re, c.im)?;
            for l in w {
                write!(f, "*z{}{}", l.var + 1, if l.adjoint { "'" } else { "" })?;
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self { src: text.as_bytes(), pos: 0 }
    }

    fn err(&self, what: &str) -> Error {
        Error::InvalidInput(format!("polynomial syntax error at offset {}: {what}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sign(&mut self) -> Option<f64> {
        if self.eat(b'+') {
            Some(1.0)
        } else if self.eat(b'-') {
            Some(-1.0)
        } else {
            None
        }
    }

    fn polynomial(&mut self) -> Result<StarPolynomial> {
        let mut terms = Vec::new();
        let mut s = self.sign().unwrap_or(1.0);
        loop {
            let (c, w) = self.term()?;
            terms.push((c * s, w));
            match self.sign() {
                Some(next) => s = next,
                None => break,
            }
        }
        if self.peek().is_some() {
            return Err(self.err("unexpected character"));
        }
        StarPolynomial::new(terms)
    }

    fn term(&mut self) -> Result<(C64, Vec<Letter>)> {
        let mut coeff = real(1.0);
        let mut word = Vec::new();
        loop {
            match self.peek() {
                Some(b'z') => {
                    self.pos += 1;
                    let idx = self.integer()?;
                    if idx == 0 {
                        return Err(self.err("variables are numbered from z1"));
                    }
                    let adjoint = self.eat(b'\'');
                    word.push(Letter::new(idx - 1, adjoint));
                }
                Some(b'(') => {
                    self.pos += 1;
                    coeff *= self.complex()?;
                    if !self.eat(b')') {
                        return Err(self.err("expected ')'"));
                    }
                }
                Some(c) if c.is_ascii_digit() || c == b'.' || c == b'i' => coeff *= self.number()?,
                _ => return Err(self.err("expected a number, a variable or '('")),
            }
            if !self.eat(b'*') {
                return Ok((coeff, word));
            }
        }
    }

    fn complex(&mut self) -> Result<C64> {
        let mut total = real(0.0);
        let mut s = self.sign().unwrap_or(1.0);
        loop {
            total += self.number()? * s;
            match self.sign() {
                Some(next) => s = next,
                None => return Ok(total),
            }
        }
    }

    /// A real literal optionally followed by `i`, or a bare `i`.
    fn number(&mut self) -> Result<C64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let exp_sign = (c == b'+' || c == b'-') && self.pos > start && matches!(self.src[self.pos - 1], b'e' | b'E');
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = core::str::from_utf8(&self.src[start..self.pos]).map_err(|_| self.err("invalid utf-8"))?;
        let value = if text.is_empty() {
            1.0
        } else {
            text.parse::<f64>().map_err(|_| self.err("malformed number"))?
        };
        if self.src.get(self.pos) == Some(&b'i') {
            self.pos += 1;
            return Ok(c64(0.0, value));
        }
        if text.is_empty() {
            return Err(self.err("expected a number"));
        }
        Ok(real(value))
    }

    fn integer(&mut self) -> Result<usize> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let text = core::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        text.parse::<usize>().map_err(|_| self.err("expected a variable index"))
    }
}
