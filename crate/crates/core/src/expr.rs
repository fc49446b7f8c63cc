//! Text formats: polynomial and form expressions, point maps and triple
//! documents.
//!
//! Grammar (whitespace insensitive):
//!
//! ```text
//! poly   := ['+'|'-'] term (('+'|'-') term)*
//! term   := rational ('*' factor)* | factor ('*' factor)*
//! factor := var ('^' nat)?
//! form   := ['+'|'-'] fterm (('+'|'-') fterm)*  |  '0'
//! fterm  := ['(' poly ')' | term] dvar ('^' dvar)*
//! ```
//!
//! Variables are `x, y, p1..pn, q1..qn`; `dvar` is `d` followed by a variable.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::forms::Form;
use crate::jets::{Mono, PointMap, Series};
use crate::rational::Rational;
use crate::reduce::S1NormalForm;
use crate::symplectic::{Layout, Triple};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("invalid document: {0}")]
    Document(String),
}

pub type Result<T> = std::result::Result<T, ExprError>;

/// Variable names for a space of `nvars` coordinates: `x, y, p1.., q1..`
/// when `nvars` is even.
pub fn var_names(nvars: usize) -> Vec<String> {
    if nvars.is_multiple_of(2) && nvars >= 2 {
        let layout = Layout::new(nvars / 2 - 1);
        (0..nvars).map(|i| layout.var_name(i)).collect()
    } else {
        (0..nvars).map(|i| format!("u{i}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Num(String),
    Ident(String),
    Sym(char),
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            out.push((Tok::Num(text[start..i].to_string()), start));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else if "+-*/^()".contains(c) {
            out.push((Tok::Sym(c), i));
            i += 1;
        } else {
            return Err(ExprError::Syntax {
                pos: i,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    names: &'a [String],
    order: u32,
}

impl<'a> Parser<'a> {
    fn new(text: &str, names: &'a [String], order: u32) -> Result<Parser<'a>> {
        Ok(Parser {
            toks: tokenize(text)?,
            pos: 0,
            end: text.len(),
            names,
            order,
        })
    }

    fn nvars(&self) -> usize {
        self.names.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, p)| *p)
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(ExprError::Syntax {
            pos: self.offset(),
            msg: msg.into(),
        })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.error(format!("expected `{c}`"))
        }
    }

    fn at_end(&self) -> bool {
        self.pos == self.toks.len()
    }

    fn var_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| ExprError::UnknownVariable(name.to_string()))
    }

    fn is_dvar(name: &str) -> bool {
        name.len() > 1 && name.starts_with('d')
    }

    fn nat(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Num(n)) => {
                let n = n.clone();
                self.pos += 1;
                Ok(n)
            }
            _ => self.error("expected a number"),
        }
    }

    fn rational(&mut self) -> Result<Rational> {
        let num = self.nat()?;
        let text = if self.eat('/') {
            format!("{num}/{}", self.nat()?)
        } else {
            num
        };
        Rational::from_str(&text).or_else(|_| self.error("invalid rational"))
    }

    fn factor(&mut self) -> Result<Mono> {
        let name = match self.peek() {
            Some(Tok::Ident(n)) if !Self::is_dvar(n) => n.clone(),
            _ => return self.error("expected a variable"),
        };
        let idx = self.var_index(&name)?;
        self.pos += 1;
        let mut e = 1u32;
        if self.eat('^') {
            e = self
                .nat()?
                .parse()
                .or_else(|_| self.error("exponent too large"))?;
        }
        Ok(Mono::var(idx).pow(e))
    }

    fn term(&mut self) -> Result<(Rational, Mono)> {
        let mut coeff = Rational::one();
        let mut mono = Mono::ONE;
        match self.peek() {
            Some(Tok::Num(_)) => coeff = self.rational()?,
            Some(Tok::Ident(n)) if !Self::is_dvar(n) => mono = self.factor()?,
            _ => return self.error("expected a term"),
        }
        while self.eat('*') {
            mono = mono.mul(self.factor()?);
        }
        Ok((coeff, mono))
    }

    fn sign(&mut self) -> Rational {
        if self.eat('-') {
            -Rational::one()
        } else {
            self.eat('+');
            Rational::one()
        }
    }

    fn poly(&mut self) -> Result<Series> {
        let mut acc = Series::zero(self.nvars(), self.order);
        let mut sign = self.sign();
        loop {
            let (c, m) = self.term()?;
            if m.degree() <= self.order {
                acc.add_term(m, &(&sign * &c));
            }
            match self.peek() {
                Some(Tok::Sym('+')) | Some(Tok::Sym('-')) => sign = self.sign(),
                _ => return Ok(acc),
            }
        }
    }

    fn dvars(&mut self) -> Result<Vec<usize>> {
        let mut idx = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Ident(n)) if Self::is_dvar(n) => {
                    let i = self.var_index(&n[1..])?;
                    idx.push(i);
                    self.pos += 1;
                }
                _ => return self.error("expected a differential such as `dx`"),
            }
            if !self.eat('^') {
                return Ok(idx);
            }
        }
    }

    fn form(&mut self) -> Result<Form> {
        if self.toks.len() == 1 && self.peek() == Some(&Tok::Num("0".into())) {
            self.pos += 1;
            return Ok(Form::zero(2, self.nvars(), self.order));
        }
        let mut acc: Option<Form> = None;
        let mut sign = self.sign();
        loop {
            let coeff = match self.peek() {
                Some(Tok::Sym('(')) => {
                    self.pos += 1;
                    let p = self.poly()?;
                    self.expect(')')?;
                    p
                }
                Some(Tok::Ident(n)) if Self::is_dvar(n) => Series::one(self.nvars(), self.order),
                _ => {
                    let (c, m) = self.term()?;
                    Series::monomial(self.nvars(), self.order, m, c)
                }
            };
            let idx = self.dvars()?;
            let term = Form::term(&idx, &coeff.scale(&sign));
            acc = Some(match acc {
                None => term,
                Some(a) if a.degree() != term.degree() => {
                    return Err(ExprError::DegreeMismatch {
                        expected: a.degree(),
                        got: term.degree(),
                    })
                }
                Some(a) => &a + &term,
            });
            match self.peek() {
                Some(Tok::Sym('+')) | Some(Tok::Sym('-')) => sign = self.sign(),
                _ => return Ok(acc.unwrap()),
            }
        }
    }

    fn finish<T>(&self, v: T) -> Result<T> {
        if self.at_end() {
            Ok(v)
        } else {
            self.error("unexpected trailing input")
        }
    }
}

/// Parses a polynomial in the standard variables of an `nvars`-dimensional
/// space; terms above `order` are dropped.
pub fn parse_series(text: &str, nvars: usize, order: u32) -> Result<Series> {
    parse_series_in(text, &var_names(nvars), order)
}

pub fn parse_series_in(text: &str, names: &[String], order: u32) -> Result<Series> {
    let mut p = Parser::new(text, names, order)?;
    let s = p.poly()?;
    p.finish(s)
}

pub fn parse_form(text: &str, nvars: usize, order: u32) -> Result<Form> {
    parse_form_in(text, &var_names(nvars), order)
}

pub fn parse_form_in(text: &str, names: &[String], order: u32) -> Result<Form> {
    let mut p = Parser::new(text, names, order)?;
    let f = p.form()?;
    p.finish(f)
}

/// Parses `[c1; c2; ...]`.
pub fn parse_point_map(text: &str, nvars: usize, order: u32) -> Result<PointMap> {
    let inner = text
        .trim()
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| ExprError::Syntax {
            pos: 0,
            msg: "expected `[...]`".into(),
        })?;
    let comps = inner
        .split(';')
        .map(|c| parse_series(c, nvars, order))
        .collect::<Result<Vec<_>>>()?;
    PointMap::new(nvars, comps).map_err(|e| ExprError::Document(e.to_string()))
}

fn format_mono(m: Mono, names: &[String]) -> String {
    let mut parts = Vec::new();
    for (i, name) in names.iter().enumerate() {
        match m.exponent(i) {
            0 => {}
            1 => parts.push(name.clone()),
            e => parts.push(format!("{name}^{e}")),
        }
    }
    parts.join("*")
}

/// A term body without its sign.
fn format_term(c: &Rational, m: Mono, names: &[String]) -> String {
    let a = c.abs();
    if m == Mono::ONE {
        a.to_string()
    } else if a.is_one() {
        format_mono(m, names)
    } else {
        format!("{a}*{}", format_mono(m, names))
    }
}

/// Leading negative terms are written with an explicit `-1*` factor when
/// the coefficient is `-1`, so the text is a valid `term` of the grammar.
fn join_signed(items: Vec<(bool, String)>) -> String {
    let mut out = String::new();
    for (k, (negative, body)) in items.into_iter().enumerate() {
        match (k, negative) {
            (0, false) => out.push_str(&body),
            (0, true) => {
                let starts_with_number = body.starts_with(|c: char| c.is_ascii_digit());
                if starts_with_number {
                    out.push('-');
                    out.push_str(&body);
                } else {
                    out.push_str("-1*");
                    out.push_str(&body);
                }
            }
            (_, false) => {
                out.push_str(" + ");
                out.push_str(&body);
            }
            (_, true) => {
                out.push_str(" - ");
                out.push_str(&body);
            }
        }
    }
    out
}

pub fn format_series(s: &Series) -> String {
    format_series_in(s, &var_names(s.nvars()))
}

/// Canonical text: graded-lexicographic order, reduced fractions.
pub fn format_series_in(s: &Series, names: &[String]) -> String {
    if s.is_zero() {
        return "0".into();
    }
    let items = s
        .terms()
        .map(|(m, c)| (c.is_negative(), format_term(c, m, names)))
        .collect();
    join_signed(items)
}

pub fn format_form(f: &Form) -> String {
    format_form_in(f, &var_names(f.nvars()))
}

pub fn format_form_in(f: &Form, names: &[String]) -> String {
    if f.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (k, (idx, c)) in f.terms().enumerate() {
        let wedge = idx
            .iter()
            .map(|&i| format!("d{}", names[i]))
            .collect::<Vec<_>>()
            .join("^");
        let single = c.num_terms() == 1;
        let (negative, body) = if single {
            let (m, r) = c.terms().next().unwrap();
            let coeff = if m == Mono::ONE && r.abs().is_one() {
                String::new()
            } else {
                format!("{} ", format_term(r, m, names))
            };
            (r.is_negative(), format!("{coeff}{wedge}"))
        } else {
            (false, format!("({}) {wedge}", format_series_in(c, names)))
        };
        match (k, negative) {
            (0, false) => {}
            (0, true) => out.push('-'),
            (_, false) => out.push_str(" + "),
            (_, true) => out.push_str(" - "),
        }
        out.push_str(&body);
    }
    out
}

pub fn format_point_map(m: &PointMap) -> String {
    let names = var_names(m.domain());
    let comps: Vec<String> = m
        .components()
        .iter()
        .map(|c| format_series_in(c, &names))
        .collect();
    format!("[{}]", comps.join("; "))
}

/// Serialized triple. Coefficients are exact rationals inside the
/// expression strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleDocument {
    pub dim: usize,
    pub order: u32,
    pub omega: String,
    pub h: String,
    pub f: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl TripleDocument {
    pub fn from_triple(t: &Triple, order: u32) -> TripleDocument {
        TripleDocument {
            dim: t.dim(),
            order,
            omega: format_form(&t.omega.truncate(order)),
            h: format_series(&t.h.truncate(order)),
            f: format_series(&t.f.truncate(order)),
            label: None,
            seed: None,
        }
    }

    /// Parses and validates. The polynomials are taken as exact jets of
    /// order `order`.
    pub fn to_triple(&self) -> Result<Triple> {
        if self.dim < 2 || !self.dim.is_multiple_of(2) || self.dim > 8 {
            return Err(ExprError::Document(format!("unsupported dimension {}", self.dim)));
        }
        let omega = parse_form(&self.omega, self.dim, self.order)?;
        if omega.degree() != 2 {
            return Err(ExprError::DegreeMismatch {
                expected: 2,
                got: omega.degree(),
            });
        }
        let h = parse_series(&self.h, self.dim, self.order)?;
        let f = parse_series(&self.f, self.dim, self.order)?;
        Triple::new(self.dim / 2 - 1, omega, h, f).map_err(|e| ExprError::Document(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<TripleDocument> {
        serde_json::from_str(text).map_err(|e| ExprError::Document(e.to_string()))
    }
}

/// Serialized S1 invariants, written in the variables of the full space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantsDocument {
    pub n: usize,
    pub g: String,
    pub g_order: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_order: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_order: Option<u32>,
}

impl InvariantsDocument {
    pub fn from_normal_form(nf: &S1NormalForm) -> InvariantsDocument {
        let dim = 2 * nf.n + 2;
        InvariantsDocument {
            n: nf.n,
            g: format_series(&nf.g.relabel(dim, &[1])),
            g_order: nf.g.order(),
            mu: nf.mu.as_ref().map(|m| format_form(&m.insert_var(0).insert_var(0))),
            mu_order: nf.mu.as_ref().map(Form::order),
            phi: nf.phi.as_ref().map(|p| format_series(&p.insert_var(0))),
            phi_order: nf.phi.as_ref().map(Series::order),
        }
    }

    pub fn to_normal_form(&self) -> Result<S1NormalForm> {
        let dim = 2 * self.n + 2;
        let bad = |e: crate::jets::JetError| ExprError::Document(e.to_string());
        let g = parse_series(&self.g, dim, self.g_order)?;
        let g = g.remove_var(0).map_err(bad)?;
        let mut rest = g;
        for _ in 2..dim {
            rest = rest.remove_var(1).map_err(bad)?;
        }
        let mu = match (&self.mu, self.mu_order) {
            (Some(text), Some(o)) => Some(
                parse_form(text, dim, o)?
                    .remove_var(0)
                    .and_then(|f| f.remove_var(0))
                    .map_err(|e| ExprError::Document(e.to_string()))?,
            ),
            (None, None) => None,
            _ => return Err(ExprError::Document("mu without its order".into())),
        };
        let phi = match (&self.phi, self.phi_order) {
            (Some(text), Some(o)) => Some(parse_series(text, dim, o)?.remove_var(0).map_err(bad)?),
            (None, None) => None,
            _ => return Err(ExprError::Document("phi without its order".into())),
        };
        Ok(S1NormalForm {
            n: self.n,
            g: rest,
            mu,
            phi,
        })
    }
}
