//! Truncated multivariate power series over the rationals.
//!
//! A [`Series`] stores the jet of a germ at the origin: every coefficient of
//! total degree `<= order` is trusted, nothing above it is stored. Each
//! operation derives the order of its result from the orders of its inputs.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::{BuildHasherDefault, Hasher};
use std::ops::{Add, Mul, Neg, Sub};

use crate::linalg::Matrix;
use crate::rational::Rational;

/// Maximum number of variables a [`Mono`] can index.
pub const MAX_VARS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum JetError {
    #[error("variable count mismatch: {0} vs {1}")]
    VarCountMismatch(usize, usize),
    #[error("variable index {index} out of range for {nvars} variables")]
    IndexOutOfRange { index: usize, nvars: usize },
    #[error("at most {MAX_VARS} variables are supported, got {0}")]
    TooManyVariables(usize),
    #[error("linear part of the map is singular")]
    SingularJacobian,
    #[error("map component {0} does not vanish at the origin")]
    NotOriginPreserving(usize),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("series is not divisible: {0}")]
    NotDivisible(String),
    #[error("series is not a unit (zero constant term)")]
    NotUnit,
}

pub type Result<T> = std::result::Result<T, JetError>;

/// Exponent vector packed one byte per variable, variable 0 in the most
/// significant byte.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Mono(u64);

impl Mono {
    pub const ONE: Mono = Mono(0);

    fn shift(i: usize) -> u32 {
        (8 * (MAX_VARS - 1 - i)) as u32
    }

    pub fn var(i: usize) -> Mono {
        Mono(1u64 << Self::shift(i))
    }

    pub fn from_exponents(exps: &[u32]) -> Mono {
        assert!(exps.len() <= MAX_VARS);
        let mut m = 0u64;
        for (i, &e) in exps.iter().enumerate() {
            assert!(e < 256, "exponent too large");
            m |= (e as u64) << Self::shift(i);
        }
        Mono(m)
    }

    pub fn exponent(self, i: usize) -> u32 {
        ((self.0 >> Self::shift(i)) & 0xff) as u32
    }

    pub fn exponents(self, nvars: usize) -> Vec<u32> {
        (0..nvars).map(|i| self.exponent(i)).collect()
    }

    pub fn degree(self) -> u32 {
        // Sum of the eight bytes; total degrees stay below 256.
        (self.0.wrapping_mul(0x0101_0101_0101_0101) >> 56) as u32
    }

    pub fn mul(self, other: Mono) -> Mono {
        Mono(self.0 + other.0)
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(self, other: Mono) -> Option<Mono> {
        (0..MAX_VARS)
            .all(|i| self.exponent(i) >= other.exponent(i))
            .then(|| Mono(self.0 - other.0))
    }

    pub fn with_exponent(self, i: usize, e: u32) -> Mono {
        let s = Self::shift(i);
        Mono((self.0 & !(0xffu64 << s)) | ((e as u64) << s))
    }

    /// Smallest variable index with nonzero exponent.
    pub fn first_var(self) -> Option<usize> {
        (self.0 != 0).then(|| (self.0.leading_zeros() / 8) as usize)
    }

    pub fn pow(self, k: u32) -> Mono {
        Mono(self.0 * k as u64)
    }
}

impl Ord for Mono {
    /// Graded lexicographic: lower total degree first, then larger exponent
    /// of the earlier variable first (`x^2 < x*y < y^2`).
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Mono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.exponents(MAX_VARS))
    }
}

#[derive(Default)]
struct MonoHasher(u64);

impl Hasher for MonoHasher {
    fn finish(&self) -> u64 {
        self.0
    }
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0.rotate_left(5) ^ b as u64).wrapping_mul(0x517c_c1b7_2722_0a95);
        }
    }
    fn write_u64(&mut self, n: u64) {
        self.0 = (n ^ (n >> 29)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    }
}

type Accum = HashMap<Mono, Rational, BuildHasherDefault<MonoHasher>>;

/// A truncated power series in `nvars` variables, exact to total degree `order`.
#[derive(Clone, PartialEq, Eq)]
pub struct Series {
    nvars: usize,
    order: u32,
    terms: BTreeMap<Mono, Rational>,
}

fn check_nvars(nvars: usize) {
    assert!(nvars <= MAX_VARS, "at most {MAX_VARS} variables supported");
}

impl Series {
    pub fn zero(nvars: usize, order: u32) -> Series {
        check_nvars(nvars);
        Series {
            nvars,
            order,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, order: u32, c: Rational) -> Series {
        Self::monomial(nvars, order, Mono::ONE, c)
    }

    pub fn one(nvars: usize, order: u32) -> Series {
        Self::constant(nvars, order, Rational::one())
    }

    pub fn var(nvars: usize, order: u32, i: usize) -> Series {
        assert!(i < nvars, "variable index out of range");
        Self::monomial(nvars, order, Mono::var(i), Rational::one())
    }

    pub fn monomial(nvars: usize, order: u32, m: Mono, c: Rational) -> Series {
        let mut s = Self::zero(nvars, order);
        if m.degree() <= order && !c.is_zero() {
            s.terms.insert(m, c);
        }
        s
    }

    /// Builds a series from terms, summing duplicates and dropping anything
    /// above `order`.
    pub fn from_terms<I>(nvars: usize, order: u32, terms: I) -> Series
    where
        I: IntoIterator<Item = (Mono, Rational)>,
    {
        let mut s = Self::zero(nvars, order);
        for (m, c) in terms {
            s.add_term(m, &c);
        }
        s
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Nonzero terms in graded lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (Mono, &Rational)> + '_ {
        self.terms.iter().map(|(m, c)| (*m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: Mono) -> Rational {
        self.terms.get(&m).cloned().unwrap_or_default()
    }

    pub fn constant_term(&self) -> Rational {
        self.coeff(Mono::ONE)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Lowest total degree carrying a nonzero coefficient.
    pub fn valuation(&self) -> Option<u32> {
        self.terms.keys().next().map(|m| m.degree())
    }

    pub fn add_term(&mut self, m: Mono, c: &Rational) {
        if c.is_zero() || m.degree() > self.order {
            return;
        }
        let e = self.terms.entry(m).or_default();
        *e += c;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    /// Drops everything above `order` (never raises the order).
    pub fn truncate(&self, order: u32) -> Series {
        let order = order.min(self.order);
        Series {
            nvars: self.nvars,
            order,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() <= order)
                .map(|(m, c)| (*m, c.clone()))
                .collect(),
        }
    }

    /// Declares a different trusted order. Raising it asserts that the stored
    /// polynomial is exact to the new order.
    pub fn with_order(&self, order: u32) -> Series {
        let mut s = self.truncate(order);
        s.order = order;
        s
    }

    /// Keeps only the terms satisfying `keep`.
    pub fn filter(&self, keep: impl Fn(Mono) -> bool) -> Series {
        Series {
            nvars: self.nvars,
            order: self.order,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(**m))
                .map(|(m, c)| (*m, c.clone()))
                .collect(),
        }
    }

    /// Homogeneous component of total degree `d`.
    pub fn homogeneous(&self, d: u32) -> Series {
        self.filter(|m| m.degree() == d)
    }

    pub fn scale(&self, c: &Rational) -> Series {
        if c.is_zero() {
            return Series::zero(self.nvars, self.order);
        }
        Series {
            nvars: self.nvars,
            order: self.order,
            terms: self.terms.iter().map(|(m, x)| (*m, x * c)).collect(),
        }
    }

    fn same_vars(&self, other: &Series) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(JetError::VarCountMismatch(self.nvars, other.nvars));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Series) -> Result<Series> {
        self.same_vars(other)?;
        let order = self.order.min(other.order);
        let mut out = self.truncate(order);
        for (m, c) in other.terms.iter() {
            out.add_term(*m, c);
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Series) -> Result<Series> {
        self.try_add(&-other)
    }

    pub fn try_mul(&self, other: &Series) -> Result<Series> {
        self.same_vars(other)?;
        Ok(self.mul_trunc(other, self.order.min(other.order)))
    }

    /// Product truncated at `order` (capped by the operand orders).
    pub fn mul_trunc(&self, other: &Series, order: u32) -> Series {
        debug_assert_eq!(self.nvars, other.nvars);
        let order = order.min(self.order).min(other.order);
        let mut acc = Accum::default();
        let rhs: Vec<(Mono, u32, &Rational)> = other
            .terms
            .iter()
            .map(|(m, c)| (*m, m.degree(), c))
            .collect();
        for (ma, ca) in self.terms.iter() {
            let da = ma.degree();
            if da > order {
                break;
            }
            for (mb, db, cb) in rhs.iter() {
                if da + db > order {
                    break;
                }
                let e = acc.entry(ma.mul(*mb)).or_default();
                *e += &(ca * *cb);
            }
        }
        Series {
            nvars: self.nvars,
            order,
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Series {
        let mut acc = Series::one(self.nvars, self.order);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Multiplies by the exact monomial `m`; the trusted order rises by its degree.
    pub fn mul_monomial(&self, m: Mono) -> Series {
        Series {
            nvars: self.nvars,
            order: self.order + m.degree(),
            terms: self.terms.iter().map(|(k, c)| (k.mul(m), c.clone())).collect(),
        }
    }

    /// Exact division by the monomial `m`; the trusted order drops by its degree.
    pub fn div_monomial(&self, m: Mono) -> Result<Series> {
        let mut terms = BTreeMap::new();
        for (k, c) in self.terms.iter() {
            let q = k
                .div(m)
                .ok_or_else(|| JetError::NotDivisible(format!("term {k:?} by {m:?}")))?;
            terms.insert(q, c.clone());
        }
        Ok(Series {
            nvars: self.nvars,
            order: self.order.saturating_sub(m.degree()),
            terms,
        })
    }

    /// Formal partial derivative in variable `i`; order drops by one.
    pub fn partial(&self, i: usize) -> Result<Series> {
        if i >= self.nvars {
            return Err(JetError::IndexOutOfRange {
                index: i,
                nvars: self.nvars,
            });
        }
        let mut out = Series::zero(self.nvars, self.order.saturating_sub(1));
        for (m, c) in self.terms.iter() {
            let e = m.exponent(i);
            if e > 0 {
                out.add_term(m.with_exponent(i, e - 1), &(c * &Rational::from_int(e as i64)));
            }
        }
        Ok(out)
    }

    /// Antiderivative in variable `i` vanishing on `{x_i = 0}`; order rises by one.
    pub fn integrate(&self, i: usize) -> Series {
        assert!(i < self.nvars);
        Series {
            nvars: self.nvars,
            order: self.order + 1,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    let e = m.exponent(i) + 1;
                    (m.with_exponent(i, e), c / &Rational::from_int(e as i64))
                })
                .collect(),
        }
    }

    /// Restriction to `{x_i = 0}` (same variable set).
    pub fn set_zero(&self, i: usize) -> Series {
        self.filter(|m| m.exponent(i) == 0)
    }

    /// `Σ_k c_k · x_i^k` with every `c_k` free of `x_i`. Entry `k` has order
    /// `order - k`.
    pub fn coefficients_in(&self, i: usize) -> Vec<Series> {
        let mut out: Vec<Series> = (0..=self.order)
            .map(|k| Series::zero(self.nvars, self.order - k))
            .collect();
        for (m, c) in self.terms.iter() {
            let k = m.exponent(i);
            out[k as usize].add_term(m.with_exponent(i, 0), c);
        }
        out
    }

    /// Drops variable `i`, which must not occur.
    pub fn remove_var(&self, i: usize) -> Result<Series> {
        let mut out = Series::zero(self.nvars - 1, self.order);
        for (m, c) in self.terms.iter() {
            if m.exponent(i) != 0 {
                return Err(JetError::PreconditionViolated(format!(
                    "series depends on variable {i}"
                )));
            }
            let mut e = m.exponents(self.nvars);
            e.remove(i);
            out.terms.insert(Mono::from_exponents(&e), c.clone());
        }
        Ok(out)
    }

    /// Inserts a new variable at position `i` that does not occur.
    pub fn insert_var(&self, i: usize) -> Series {
        check_nvars(self.nvars + 1);
        let mut out = Series::zero(self.nvars + 1, self.order);
        for (m, c) in self.terms.iter() {
            let mut e = m.exponents(self.nvars);
            e.insert(i, 0);
            out.terms.insert(Mono::from_exponents(&e), c.clone());
        }
        out
    }

    /// Re-indexes variables: variable `j` of `self` becomes `target[j]` in a
    /// series of `nvars` variables.
    pub fn relabel(&self, nvars: usize, target: &[usize]) -> Series {
        assert_eq!(target.len(), self.nvars);
        check_nvars(nvars);
        let mut out = Series::zero(nvars, self.order);
        for (m, c) in self.terms.iter() {
            let mut e = vec![0u32; nvars];
            for (j, &t) in target.iter().enumerate() {
                e[t] += m.exponent(j);
            }
            out.add_term(Mono::from_exponents(&e), c);
        }
        out
    }

    /// Multiplicative inverse of a unit.
    pub fn inverse(&self) -> Result<Series> {
        let c0 = self.constant_term();
        let inv0 = c0.recip().ok_or(JetError::NotUnit)?;
        // 1/(c0 (1 + w)) = c0⁻¹ Σ (-w)^k
        let mut w = self.scale(&inv0);
        w.terms.remove(&Mono::ONE);
        let neg_w = -&w;
        let mut acc = Series::one(self.nvars, self.order);
        let mut power = Series::one(self.nvars, self.order);
        for _ in 0..self.order {
            power = &power * &neg_w;
            if power.is_zero() {
                break;
            }
            acc = &acc + &power;
        }
        Ok(acc.scale(&inv0))
    }

    /// Composition `self ∘ map`.
    ///
    /// The map must be origin-preserving; the result is exact to
    /// `min(self.order, map.order)`.
    pub fn compose(&self, map: &PointMap) -> Result<Series> {
        if map.codomain() != self.nvars {
            return Err(JetError::VarCountMismatch(self.nvars, map.codomain()));
        }
        let order = self.order.min(map.order());
        Ok(self.compose_trunc(map, order))
    }

    pub(crate) fn compose_trunc(&self, map: &PointMap, order: u32) -> Series {
        let terms: Vec<(Mono, Rational)> = self
            .terms
            .iter()
            .filter(|(m, _)| m.degree() <= order)
            .map(|(m, c)| (*m, c.clone()))
            .collect();
        let comps = map.components();
        let m = map.domain();
        horner(&terms, comps, m, order)
    }

    /// Value at the origin.
    pub fn at_zero(&self) -> Rational {
        self.constant_term()
    }

    /// The constant part as a series of the same shape.
    pub fn at_zero_series(&self) -> Series {
        Series::constant(self.nvars, self.order, self.at_zero())
    }
}

/// Evaluates `Σ c·u^m` at `u = comps` by recursive splitting on the
/// smallest variable: `f = c₀ + Σ_j u_j f_j` with `f_j` in variables `>= j`.
fn horner(terms: &[(Mono, Rational)], comps: &[Series], nvars: usize, order: u32) -> Series {
    let mut out = Series::zero(nvars, order);
    let mut groups: BTreeMap<usize, Vec<(Mono, Rational)>> = BTreeMap::new();
    for (m, c) in terms {
        match m.first_var() {
            None => out.add_term(Mono::ONE, c),
            Some(j) => groups
                .entry(j)
                .or_default()
                .push((m.div(Mono::var(j)).unwrap(), c.clone())),
        }
    }
    for (j, sub) in groups {
        let comp = &comps[j];
        let Some(v) = comp.valuation() else { continue };
        if v > order {
            continue;
        }
        let inner = horner(&sub, comps, nvars, order - v);
        if inner.is_zero() {
            continue;
        }
        let prod = comp.mul_trunc(&inner.with_order(order), order);
        for (m, c) in prod.terms.iter() {
            out.add_term(*m, c);
        }
    }
    out
}

impl fmt::Debug for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Series[{}; O({})](", self.nvars, self.order + 1)?;
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*{m:?}")?;
        }
        write!(f, ")")
    }
}

impl Add for &Series {
    type Output = Series;
    fn add(self, rhs: &Series) -> Series {
        self.try_add(rhs).expect("series variable count mismatch")
    }
}

impl Sub for &Series {
    type Output = Series;
    fn sub(self, rhs: &Series) -> Series {
        self.try_sub(rhs).expect("series variable count mismatch")
    }
}

impl Mul for &Series {
    type Output = Series;
    fn mul(self, rhs: &Series) -> Series {
        self.try_mul(rhs).expect("series variable count mismatch")
    }
}

impl Neg for &Series {
    type Output = Series;
    fn neg(self) -> Series {
        self.scale(&-Rational::one())
    }
}

macro_rules! owned_series_op {
    ($tr:ident, $m:ident) => {
        impl $tr<Series> for Series {
            type Output = Series;
            fn $m(self, rhs: Series) -> Series {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a Series> for Series {
            type Output = Series;
            fn $m(self, rhs: &Series) -> Series {
                (&self).$m(rhs)
            }
        }
    };
}
owned_series_op!(Add, add);
owned_series_op!(Sub, sub);
owned_series_op!(Mul, mul);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithKind {
    Add,
    Sub,
    Mul,
}

pub fn arith(a: &Series, b: &Series, kind: ArithKind) -> Result<Series> {
    match kind {
        ArithKind::Add => a.try_add(b),
        ArithKind::Sub => a.try_sub(b),
        ArithKind::Mul => a.try_mul(b),
    }
}

/// An origin-preserving map germ `R^domain -> R^codomain`, one series per
/// output coordinate.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PointMap {
    domain: usize,
    components: Vec<Series>,
}

impl PointMap {
    pub fn new(domain: usize, components: Vec<Series>) -> Result<PointMap> {
        for (i, c) in components.iter().enumerate() {
            if c.nvars() != domain {
                return Err(JetError::VarCountMismatch(domain, c.nvars()));
            }
            if !c.constant_term().is_zero() {
                return Err(JetError::NotOriginPreserving(i));
            }
        }
        Ok(PointMap { domain, components })
    }

    pub fn identity(n: usize, order: u32) -> PointMap {
        PointMap {
            domain: n,
            components: (0..n).map(|i| Series::var(n, order, i)).collect(),
        }
    }

    /// The linear map `u ↦ m·u`.
    pub fn linear(m: &Matrix, order: u32) -> PointMap {
        let n = m.cols();
        let components = (0..m.rows())
            .map(|i| {
                Series::from_terms(
                    n,
                    order,
                    (0..n).map(|j| (Mono::var(j), m[(i, j)].clone())),
                )
            })
            .collect();
        PointMap {
            domain: n,
            components,
        }
    }

    pub fn domain(&self) -> usize {
        self.domain
    }

    pub fn codomain(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Series] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Series {
        &self.components[i]
    }

    pub fn into_components(self) -> Vec<Series> {
        self.components
    }

    pub fn order(&self) -> u32 {
        self.components.iter().map(Series::order).min().unwrap_or(u32::MAX)
    }

    pub fn truncate(&self, order: u32) -> PointMap {
        PointMap {
            domain: self.domain,
            components: self.components.iter().map(|c| c.truncate(order)).collect(),
        }
    }

    pub fn with_order(&self, order: u32) -> PointMap {
        PointMap {
            domain: self.domain,
            components: self.components.iter().map(|c| c.with_order(order)).collect(),
        }
    }

    /// Jacobian matrix at the origin (`codomain × domain`).
    pub fn linear_part(&self) -> Matrix {
        let mut m = Matrix::zeros(self.codomain(), self.domain);
        for (i, c) in self.components.iter().enumerate() {
            for j in 0..self.domain {
                m[(i, j)] = c.coeff(Mono::var(j));
            }
        }
        m
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &PointMap) -> Result<PointMap> {
        let components = self
            .components
            .iter()
            .map(|c| c.compose(inner))
            .collect::<Result<Vec<_>>>()?;
        Ok(PointMap {
            domain: inner.domain,
            components,
        })
    }

    /// Formal inverse, computed degree by degree from
    /// `ψ = A⁻¹(v - N(ψ(v)))` where `φ = A·u + N(u)`.
    pub fn invert(&self) -> Result<PointMap> {
        let n = self.domain;
        if self.codomain() != n {
            return Err(JetError::VarCountMismatch(n, self.codomain()));
        }
        let order = self.order();
        let a = self.linear_part();
        let a_inv = a.inverse().ok_or(JetError::SingularJacobian)?;
        let nonlinear: Vec<Series> = self
            .components
            .iter()
            .map(|c| c.filter(|m| m.degree() >= 2))
            .collect();
        let mut psi = PointMap::linear(&a_inv, order);
        if nonlinear.iter().all(Series::is_zero) {
            return Ok(psi);
        }
        // After pass k, psi is exact through degree k + 1.
        for k in 1..order {
            let target = k + 1;
            let rhs: Vec<Series> = (0..n)
                .map(|i| {
                    Series::var(n, target, i) - nonlinear[i].compose_trunc(&psi, target)
                })
                .collect();
            let comps = (0..n)
                .map(|i| {
                    let mut s = Series::zero(n, order);
                    for (j, r) in rhs.iter().enumerate() {
                        let c = &a_inv[(i, j)];
                        if !c.is_zero() {
                            for (m, x) in r.terms() {
                                s.add_term(m, &(x * c));
                            }
                        }
                    }
                    s
                })
                .collect();
            psi = PointMap {
                domain: n,
                components: comps,
            };
        }
        Ok(psi)
    }

    /// True when every component equals the corresponding coordinate
    /// function to the map's order.
    pub fn is_identity(&self) -> bool {
        self.domain == self.codomain()
            && self
                .components
                .iter()
                .enumerate()
                .all(|(i, c)| *c == Series::var(self.domain, c.order(), i))
    }
}

/// Degree-2 Weierstrass preparation in variable `x`:
/// `h = unit · (x² + a·x + b)` with `a`, `b` free of `x` and vanishing at 0.
///
/// The jet of `h` is taken as an exact polynomial. Reaching the `x`-free
/// coefficients through order `M` needs every term of weight up to `2M + 1`
/// when `x` has weight 1 and the other variables weight 2, so the division
/// runs under that weighted truncation rather than total degree. `a` and `b`
/// come back with order `M`, the unit with order `M − 2`.
pub fn weierstrass_prepare(h: &Series, x: usize) -> Result<(Series, Series, Series)> {
    let n = h.nvars();
    let order = h.order();
    let x2 = Mono::var(x).pow(2);
    if !h.constant_term().is_zero() {
        return Err(JetError::PreconditionViolated("h(0) != 0".into()));
    }
    if !h.coeff(Mono::var(x)).is_zero() {
        return Err(JetError::PreconditionViolated("∂h/∂x(0) != 0".into()));
    }
    if h.coeff(x2).is_zero() {
        return Err(JetError::PreconditionViolated("∂²h/∂x²(0) = 0".into()));
    }
    let cap = 2 * order + 1;
    let weight = |m: Mono| 2 * m.degree() - m.exponent(x);
    let wide = |s: &Series| s.with_order(cap).filter(|m| weight(m) <= cap);
    let mul = |a: &Series, b: &Series| -> Series {
        let mut acc = Accum::default();
        for (ma, ca) in a.terms.iter() {
            for (mb, cb) in b.terms.iter() {
                let m = ma.mul(*mb);
                if weight(m) <= cap {
                    *acc.entry(m).or_default() += &(ca * cb);
                }
            }
        }
        Series {
            nvars: n,
            order: cap,
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    };
    let inverse = |u: &Series| -> Series {
        // u = c0 (1 + w) with w of positive weight.
        let inv0 = u.constant_term().recip().expect("checked unit");
        let mut w = u.scale(&inv0);
        w.terms.remove(&Mono::ONE);
        let neg_w = -&w;
        let mut acc = Series::one(n, cap);
        let mut power = Series::one(n, cap);
        loop {
            power = mul(&power, &neg_w);
            if power.is_zero() {
                break;
            }
            acc = &acc + &power;
        }
        acc.scale(&inv0)
    };
    // Split h = x²·U + R with R of degree < 2 in x, then replace h by
    // x² + U⁻¹R; the weight of the non-monic part grows with every pass.
    let mut unit = Series::one(n, cap);
    let mut cur = wide(h);
    let monic = Series::monomial(n, cap, x2, Rational::one());
    for _ in 0..=cap {
        let low = cur.filter(|m| m.exponent(x) < 2);
        let high = cur.filter(|m| m.exponent(x) >= 2);
        let u = high.div_monomial(x2)?.with_order(cap);
        if u == Series::one(n, cap) {
            break;
        }
        unit = mul(&unit, &u);
        cur = &monic + &mul(&inverse(&u), &low);
    }
    let coeffs = cur.coefficients_in(x);
    let a = coeffs.get(1).cloned().unwrap_or_else(|| Series::zero(n, cap));
    let b = coeffs[0].clone();
    Ok((
        unit.truncate(order.saturating_sub(2)),
        a.truncate(order),
        b.truncate(order),
    ))
}

/// Exact division of `r` by `y + x²`.
pub fn divide_by_parabola(r: &Series, x: usize, y: usize) -> Result<Series> {
    let n = r.nvars();
    let order = r.order();
    let xsq = Series::monomial(n, order, Mono::var(x).pow(2), Rational::one());
    let shift = |sign: i64| -> PointMap {
        let comps = (0..n)
            .map(|i| {
                if i == y {
                    Series::var(n, order, y) + xsq.scale(&Rational::from_int(sign))
                } else {
                    Series::var(n, order, i)
                }
            })
            .collect();
        PointMap {
            domain: n,
            components: comps,
        }
    };
    let moved = r.compose(&shift(-1))?;
    if let Some((m, _)) = moved.terms().find(|(m, _)| m.exponent(y) == 0) {
        return Err(JetError::NotDivisible(format!(
            "restriction to y = -x² has term {:?}",
            m.exponents(n)
        )));
    }
    let q = moved.div_monomial(Mono::var(y))?;
    let back = shift(1).with_order(q.order());
    q.compose(&back)
}
