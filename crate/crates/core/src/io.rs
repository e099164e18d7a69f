//! JSON configuration for torus specs and potentials, with complex numbers
//! written as expressions such as `"1/2 - 3/2i"`, `"2pi"` or
//! `"exp(i pi/3)"`.

use crate::algebra::C;
use crate::construct::{ConstructError, TorusSpec};
use crate::finitetype::{FiniteTypeError, GenusZeroFixture, KillingField, KillingRecord};
use crate::lattice::{Lattice, LatticeError};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid complex expression {input:?} at offset {offset}: {reason}")]
    Expression { input: String, offset: usize, reason: String },
    #[error("config parse error at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("missing field {0}")]
    Missing(&'static str),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Construct(#[from] ConstructError),
    #[error(transparent)]
    FiniteType(#[from] FiniteTypeError),
}

/// Parses a complex expression: numbers, `i`, `pi`, `+ − * / ^`, parentheses,
/// `sqrt(·)`, `exp(·)`, and juxtaposition as multiplication.
pub fn parse_complex(input: &str) -> Result<C, ConfigError> {
    let mut p = ExprParser { src: input, pos: 0 };
    let v = p.expr()?;
    p.skip_ws();
    if p.pos != input.len() {
        return Err(p.error("unexpected trailing input"));
    }
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(p.error("value is not finite"));
    }
    Ok(v)
}

struct ExprParser<'a> {
    src: &'a str,
    pos: usize,
}

impl ExprParser<'_> {
    fn error(&self, reason: &str) -> ConfigError {
        ConfigError::Expression { input: self.src.to_string(), offset: self.pos, reason: reason.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<C, ConfigError> {
        let mut v = self.term()?;
        loop {
            if self.eat('+') {
                v += self.term()?;
            } else if self.eat('-') {
                v -= self.term()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn starts_atom(&mut self) -> bool {
        self.skip_ws();
        self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '.' || c == '(')
    }

    fn term(&mut self) -> Result<C, ConfigError> {
        let mut v = self.unary()?;
        loop {
            if self.eat('*') {
                v *= self.unary()?;
            } else if self.eat('/') {
                let d = self.unary()?;
                if d.norm() == 0.0 {
                    return Err(self.error("division by zero"));
                }
                v /= d;
            } else if self.starts_atom() {
                v *= self.power()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> Result<C, ConfigError> {
        if self.eat('-') {
            Ok(-self.unary()?)
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<C, ConfigError> {
        let base = self.atom()?;
        if self.eat('^') {
            let e = self.unary()?;
            return Ok(if e.im == 0.0 && e.re.fract() == 0.0 { base.powi(e.re as i32) } else { base.powc(e) });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<C, ConfigError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let v = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
                    self.pos += 1;
                }
                // Exponent part, only when followed by a digit or sign and digit.
                let rest = &self.src[self.pos..];
                let mut chars = rest.chars();
                if matches!(chars.next(), Some('e' | 'E')) {
                    let next: Vec<char> = chars.take(2).collect();
                    let ok = match next.as_slice() {
                        [d, ..] if d.is_ascii_digit() => true,
                        ['+' | '-', d] if d.is_ascii_digit() => true,
                        _ => false,
                    };
                    if ok {
                        self.pos += 2;
                        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                            self.pos += 1;
                        }
                    }
                }
                self.src[start..self.pos]
                    .parse::<f64>()
                    .map(|x| C::new(x, 0.0))
                    .map_err(|_| ConfigError::Expression {
                        input: self.src.to_string(),
                        offset: start,
                        reason: "malformed number".into(),
                    })
            }
            Some(c) if c.is_ascii_alphabetic() => {
                while self.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
                    self.pos += 1;
                }
                let word = &self.src[start..self.pos];
                match word {
                    "i" => Ok(C::new(0.0, 1.0)),
                    "pi" => Ok(C::new(PI, 0.0)),
                    "sqrt" | "exp" => {
                        if !self.eat('(') {
                            return Err(self.error("expected '('"));
                        }
                        let v = self.expr()?;
                        if !self.eat(')') {
                            return Err(self.error("expected ')'"));
                        }
                        Ok(if word == "sqrt" { v.sqrt() } else { v.exp() })
                    }
                    _ => {
                        // Juxtaposed constants such as "ipi" or "pii".
                        self.pos = start;
                        for (name, value) in [("pi", C::new(PI, 0.0)), ("i", C::new(0.0, 1.0))] {
                            if self.src[self.pos..].starts_with(name) {
                                self.pos += name.len();
                                return Ok(value);
                            }
                        }
                        Err(self.error(&format!("unknown identifier {word:?}")))
                    }
                }
            }
            _ => Err(self.error("expected a number, constant or '('")),
        }
    }
}

/// A complex value in a config file: an expression string, a real number or
/// a `[re, im]` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexInput {
    Real(f64),
    Pair([f64; 2]),
    Expr(String),
}

impl ComplexInput {
    pub fn value(&self) -> Result<C, ConfigError> {
        match self {
            ComplexInput::Real(x) => Ok(C::new(*x, 0.0)),
            ComplexInput::Pair([re, im]) => Ok(C::new(*re, *im)),
            ComplexInput::Expr(s) => parse_complex(s),
        }
    }
}

impl From<C> for ComplexInput {
    fn from(z: C) -> Self {
        ComplexInput::Pair([z.re, z.im])
    }
}

/// The lattice `Γ`, given directly, through its dual, or as `ω₁Z ⊕ iω₂Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeConfig {
    Generators([ComplexInput; 2]),
    Dual([ComplexInput; 2]),
    Rectangular([ComplexInput; 2]),
}

impl LatticeConfig {
    pub fn build(&self) -> Result<Lattice, ConfigError> {
        Ok(match self {
            LatticeConfig::Generators([a, b]) => Lattice::new(a.value()?, b.value()?)?,
            LatticeConfig::Dual([a, b]) => Lattice::new(a.value()?, b.value()?)?.dual(),
            LatticeConfig::Rectangular([a, b]) => Lattice::rectangular(a.value()?.re, b.value()?.re)?,
        })
    }
}

/// `â_γ` for one frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffConfig {
    pub gamma: ComplexInput,
    pub a: ComplexInput,
}

/// One torus spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub lattice: LatticeConfig,
    pub beta0: ComplexInput,
    #[serde(default)]
    pub coeffs: Vec<CoeffConfig>,
}

impl SpecConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(json_error)
    }

    pub fn lattice(&self) -> Result<Lattice, ConfigError> {
        self.lattice.build()
    }

    pub fn beta0(&self) -> Result<C, ConfigError> {
        self.beta0.value()
    }

    pub fn build(&self) -> Result<TorusSpec, ConfigError> {
        let coeffs =
            self.coeffs.iter().map(|c| Ok((c.gamma.value()?, c.a.value()?))).collect::<Result<Vec<_>, ConfigError>>()?;
        Ok(TorusSpec::new(self.lattice()?, self.beta0()?, coeffs)?)
    }

    /// Numeric config reproducing `spec`.
    pub fn from_spec(spec: &TorusSpec, name: Option<String>) -> Self {
        let (g1, g2) = spec.lattice().generators();
        SpecConfig {
            name,
            lattice: LatticeConfig::Generators([g1.into(), g2.into()]),
            beta0: spec.beta0().into(),
            coeffs: spec.coeffs().iter().map(|&(g, a)| CoeffConfig { gamma: g.into(), a: a.into() }).collect(),
        }
    }
}

/// Initial data for a Lax flow: the lattice fixing the sampling domain, the
/// base point and the Killing field there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub lattice: LatticeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<ComplexInput>,
    pub field: Vec<KillingRecord>,
}

impl SeedConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(json_error)
    }

    pub fn lattice(&self) -> Result<Lattice, ConfigError> {
        self.lattice.build()
    }

    pub fn base(&self) -> Result<C, ConfigError> {
        self.base.as_ref().map_or(Ok(C::new(0.0, 0.0)), ComplexInput::value)
    }

    pub fn field(&self) -> Result<KillingField, ConfigError> {
        Ok(KillingField::from_records(&self.field)?)
    }

    pub fn from_fixture(fx: &GenusZeroFixture, name: Option<String>) -> Self {
        let (g1, g2) = fx.spec.lattice().generators();
        SeedConfig {
            name,
            lattice: LatticeConfig::Generators([g1.into(), g2.into()]),
            base: None,
            field: fx.seed.to_records(),
        }
    }
}

pub(crate) fn json_error(e: serde_json::Error) -> ConfigError {
    ConfigError::Json { line: e.line(), column: e.column(), message: e.to_string() }
}
