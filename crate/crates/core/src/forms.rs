//! Exterior calculus on jets: differential forms and vector fields with
//! [`Series`] coefficients.
//!
//! Sign conventions: `dx_I` is indexed by strictly increasing tuples, and the
//! interior product satisfies `∂x ⌟ (dx ∧ dy) = dy`.

use std::collections::BTreeMap;
use std::fmt;

use crate::jets::{JetError, Mono, PointMap, Series};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("form is not closed")]
    NotClosed,
    #[error("vector field vanishes at the origin")]
    ZeroAtOrigin,
    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("homotopy operator needs degree >= 1")]
    DegreeZero,
}

pub type Result<T> = std::result::Result<T, FormError>;

/// Sign of the shuffle merging two disjoint increasing index lists, or
/// `None` when they overlap.
fn merge_sign(a: &[usize], b: &[usize]) -> Option<(i64, Vec<usize>)> {
    let mut inversions = 0usize;
    for &i in a {
        for &j in b {
            if i == j {
                return None;
            }
            if i > j {
                inversions += 1;
            }
        }
    }
    let mut merged: Vec<usize> = a.iter().chain(b).copied().collect();
    merged.sort_unstable();
    Some((if inversions.is_multiple_of(2) { 1 } else { -1 }, merged))
}

/// A differential `k`-form on `nvars` variables.
#[derive(Clone, PartialEq, Eq)]
pub struct Form {
    degree: usize,
    nvars: usize,
    order: u32,
    coeffs: BTreeMap<Vec<usize>, Series>,
}

impl Form {
    pub fn zero(degree: usize, nvars: usize, order: u32) -> Form {
        Form {
            degree,
            nvars,
            order,
            coeffs: BTreeMap::new(),
        }
    }

    /// A 0-form.
    pub fn function(f: &Series) -> Form {
        let mut out = Form::zero(0, f.nvars(), f.order());
        out.add_term(vec![], f);
        out
    }

    /// `coeff · dx_{i_1} ∧ … ∧ dx_{i_k}` for an arbitrary index list (sorted
    /// with sign; repeated indices give zero).
    pub fn term(indices: &[usize], coeff: &Series) -> Form {
        let n = coeff.nvars();
        assert!(indices.iter().all(|&i| i < n), "form index out of range");
        let mut out = Form::zero(indices.len(), n, coeff.order());
        let mut sorted = indices.to_vec();
        let mut sign = 1i64;
        // bubble sort to track parity
        for i in 0..sorted.len() {
            for j in 0..sorted.len() - 1 - i {
                if sorted[j] > sorted[j + 1] {
                    sorted.swap(j, j + 1);
                    sign = -sign;
                }
            }
        }
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return out;
        }
        out.add_term(sorted, &coeff.scale(&Rational::from_int(sign)));
        out
    }

    /// The constant basis form `dx_I`.
    pub fn basis(indices: &[usize], nvars: usize, order: u32) -> Form {
        Form::term(indices, &Series::one(nvars, order))
    }

    /// `Σ_i dp_i ∧ dq_i` for pairs `(p_i, q_i)` of variable indices.
    pub fn darboux(pairs: &[(usize, usize)], nvars: usize, order: u32) -> Form {
        pairs
            .iter()
            .fold(Form::zero(2, nvars, order), |acc, &(p, q)| {
                &acc + &Form::basis(&[p, q], nvars, order)
            })
    }

    fn add_term(&mut self, idx: Vec<usize>, c: &Series) {
        debug_assert_eq!(idx.len(), self.degree);
        let c = c.truncate(self.order);
        match self.coeffs.remove(&idx) {
            Some(prev) => {
                let s = (&prev + &c).with_order(self.order);
                if !s.is_zero() {
                    self.coeffs.insert(idx, s);
                }
            }
            None => {
                if !c.is_zero() {
                    self.coeffs.insert(idx, c.with_order(self.order));
                }
            }
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of `dx_I` (`I` strictly increasing).
    pub fn coeff(&self, idx: &[usize]) -> Series {
        self.coeffs
            .get(idx)
            .cloned()
            .unwrap_or_else(|| Series::zero(self.nvars, self.order))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[usize], &Series)> + '_ {
        self.coeffs.iter().map(|(k, v)| (k.as_slice(), v))
    }

    pub fn truncate(&self, order: u32) -> Form {
        let order = order.min(self.order);
        let mut out = Form::zero(self.degree, self.nvars, order);
        for (k, v) in &self.coeffs {
            out.add_term(k.clone(), v);
        }
        out
    }

    pub fn with_order(&self, order: u32) -> Form {
        let mut out = self.truncate(order);
        out.order = order;
        for v in out.coeffs.values_mut() {
            *v = v.with_order(order);
        }
        out
    }

    /// The constant part (coefficients evaluated at the origin).
    pub fn at_zero(&self) -> Form {
        let mut out = Form::zero(self.degree, self.nvars, self.order);
        for (k, v) in &self.coeffs {
            out.add_term(k.clone(), &Series::constant(self.nvars, self.order, v.at_zero()));
        }
        out
    }

    pub fn vanishes_at_zero(&self) -> bool {
        self.coeffs.values().all(|c| c.at_zero().is_zero())
    }

    /// For a top-degree form, its single coefficient.
    pub fn top_coefficient(&self) -> Series {
        assert_eq!(self.degree, self.nvars, "not a top-degree form");
        self.coeff(&(0..self.nvars).collect::<Vec<_>>())
    }

    pub fn scale(&self, c: &Rational) -> Form {
        self.mul_function(&Series::constant(self.nvars, self.order, c.clone()))
    }

    pub fn mul_function(&self, f: &Series) -> Form {
        let mut out = Form::zero(self.degree, self.nvars, self.order.min(f.order()));
        for (k, v) in &self.coeffs {
            out.add_term(k.clone(), &(v * f));
        }
        out
    }

    fn check_compatible(&self, other: &Form) {
        assert_eq!(self.nvars, other.nvars, "form variable count mismatch");
    }

    pub fn wedge(&self, other: &Form) -> Form {
        self.check_compatible(other);
        let order = self.order.min(other.order);
        let mut out = Form::zero(self.degree + other.degree, self.nvars, order);
        if self.degree + other.degree > self.nvars {
            return out;
        }
        for (a, ca) in &self.coeffs {
            for (b, cb) in &other.coeffs {
                if let Some((sign, idx)) = merge_sign(a, b) {
                    let prod = ca.mul_trunc(cb, order);
                    out.add_term(idx, &prod.scale(&Rational::from_int(sign)));
                }
            }
        }
        out
    }

    pub fn wedge_power(&self, k: usize) -> Form {
        let mut acc = Form::function(&Series::one(self.nvars, self.order));
        for _ in 0..k {
            acc = acc.wedge(self);
        }
        acc
    }

    /// Exterior derivative; the order drops by one.
    pub fn d(&self) -> Form {
        let order = self.order.saturating_sub(1);
        let mut out = Form::zero(self.degree + 1, self.nvars, order);
        for (idx, c) in &self.coeffs {
            for j in 0..self.nvars {
                if idx.contains(&j) {
                    continue;
                }
                let dc = c.partial(j).expect("index in range");
                if dc.is_zero() {
                    continue;
                }
                let (sign, merged) = merge_sign(&[j], idx).unwrap();
                out.add_term(merged, &dc.scale(&Rational::from_int(sign)));
            }
        }
        out
    }

    /// Interior product `Z ⌟ self`.
    pub fn contract(&self, z: &VectorField) -> Form {
        assert_eq!(z.nvars(), self.nvars);
        let order = self.order.min(z.order());
        if self.degree == 0 {
            return Form::zero(0, self.nvars, order);
        }
        let mut out = Form::zero(self.degree - 1, self.nvars, order);
        for (idx, c) in &self.coeffs {
            for (pos, &i) in idx.iter().enumerate() {
                let zi = z.component(i);
                if zi.is_zero() {
                    continue;
                }
                let mut rest = idx.clone();
                rest.remove(pos);
                let sign = if pos % 2 == 0 { 1 } else { -1 };
                out.add_term(rest, &c.mul_trunc(zi, order).scale(&Rational::from_int(sign)));
            }
        }
        out
    }

    /// Pullback along `map`, whose codomain is this form's space.
    pub fn pullback(&self, map: &PointMap) -> Result<Form> {
        if map.codomain() != self.nvars {
            return Err(JetError::VarCountMismatch(self.nvars, map.codomain()).into());
        }
        let m = map.domain();
        let order = self.order.min(map.order().saturating_sub(1));
        let differentials: Vec<Form> = map
            .components()
            .iter()
            .map(|c| Form::function(c).d())
            .collect();
        let mut out = Form::zero(self.degree, m, order);
        let mut cache: BTreeMap<Vec<usize>, Form> = BTreeMap::new();
        for (idx, c) in &self.coeffs {
            let pulled = c.compose(map)?;
            let mut wedge = Form::function(&Series::one(m, order));
            for (k, &i) in idx.iter().enumerate() {
                let prefix = &idx[..=k];
                wedge = match cache.get(prefix) {
                    Some(w) => w.clone(),
                    None => {
                        let w = wedge.wedge(&differentials[i]);
                        cache.insert(prefix.to_vec(), w.clone());
                        w
                    }
                };
            }
            let term = wedge.mul_function(&pulled);
            out = (&out + &term).truncate(order);
        }
        Ok(out.with_order(order))
    }

    /// Radial homotopy operator `K` with `d K α = α` for closed `α` of degree >= 1.
    ///
    /// On `u^m dx_I` it gives `1/(|m|+k) Σ_j (-1)^j u_{i_j} u^m dx_{I∖i_j}`
    /// (positions `j` counted from zero). The order rises by one.
    pub fn poincare_homotopy(&self) -> Result<Form> {
        if self.degree == 0 {
            return Err(FormError::DegreeZero);
        }
        if !self.d().is_zero() {
            return Err(FormError::NotClosed);
        }
        Ok(self.homotopy_unchecked())
    }

    pub(crate) fn homotopy_unchecked(&self) -> Form {
        let k = self.degree;
        let order = self.order + 1;
        let mut out = Form::zero(k - 1, self.nvars, order);
        for (idx, c) in &self.coeffs {
            for (pos, &i) in idx.iter().enumerate() {
                let mut rest = idx.clone();
                rest.remove(pos);
                let sign = if pos % 2 == 0 { 1 } else { -1 };
                let mut s = Series::zero(self.nvars, order);
                for (m, x) in c.terms() {
                    let w = Rational::new(sign, (m.degree() as usize + k) as i64);
                    s.add_term(m.mul(Mono::var(i)), &(x * &w));
                }
                out.add_term(rest, &s);
            }
        }
        out
    }

    /// Drops variable `i`; the form must neither contain `dx_i` nor depend on `x_i`.
    pub fn remove_var(&self, i: usize) -> Result<Form> {
        let mut out = Form::zero(self.degree, self.nvars - 1, self.order);
        for (idx, c) in &self.coeffs {
            if idx.contains(&i) {
                return Err(JetError::PreconditionViolated(format!(
                    "form has a d{i} component"
                ))
                .into());
            }
            let new_idx = idx.iter().map(|&j| if j > i { j - 1 } else { j }).collect();
            out.add_term(new_idx, &c.remove_var(i)?);
        }
        Ok(out)
    }

    /// Inserts a new unused variable at position `i`.
    pub fn insert_var(&self, i: usize) -> Form {
        let mut out = Form::zero(self.degree, self.nvars + 1, self.order);
        for (idx, c) in &self.coeffs {
            let new_idx = idx.iter().map(|&j| if j >= i { j + 1 } else { j }).collect();
            out.add_term(new_idx, &c.insert_var(i));
        }
        out
    }

    /// Antisymmetric coefficient matrix of a 2-form:
    /// `m[i][j] = ω(∂_i, ∂_j)`.
    pub fn matrix(&self) -> Vec<Vec<Series>> {
        assert_eq!(self.degree, 2, "matrix of a non-2-form");
        let n = self.nvars;
        let mut m = vec![vec![Series::zero(n, self.order); n]; n];
        for (idx, c) in &self.coeffs {
            m[idx[0]][idx[1]] = c.clone();
            m[idx[1]][idx[0]] = -c;
        }
        m
    }
}

impl std::ops::Add for &Form {
    type Output = Form;
    fn add(self, other: &Form) -> Form {
        self.check_compatible(other);
        assert_eq!(self.degree, other.degree, "adding forms of different degree");
        let mut out = self.truncate(other.order);
        for (k, v) in &other.coeffs {
            out.add_term(k.clone(), v);
        }
        out
    }
}

impl std::ops::Sub for &Form {
    type Output = Form;
    fn sub(self, other: &Form) -> Form {
        self + &(-other)
    }
}

impl std::ops::Neg for &Form {
    type Output = Form;
    fn neg(self) -> Form {
        self.scale(&-Rational::one())
    }
}

impl fmt::Debug for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Form[deg {}; {} vars; O({})]{{", self.degree, self.nvars, self.order + 1)?;
        for (k, v) in &self.coeffs {
            write!(f, " {k:?}: {v:?};")?;
        }
        write!(f, " }}")
    }
}

/// A vector field `Σ Z_i ∂_i`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VectorField {
    components: Vec<Series>,
}

impl VectorField {
    pub fn new(components: Vec<Series>) -> VectorField {
        let n = components.len();
        assert!(components.iter().all(|c| c.nvars() == n), "vector field arity");
        VectorField { components }
    }

    /// The constant field `∂_i`.
    pub fn coordinate(nvars: usize, order: u32, i: usize) -> VectorField {
        VectorField::new(
            (0..nvars)
                .map(|j| {
                    if i == j {
                        Series::one(nvars, order)
                    } else {
                        Series::zero(nvars, order)
                    }
                })
                .collect(),
        )
    }

    pub fn nvars(&self) -> usize {
        self.components.len()
    }

    pub fn order(&self) -> u32 {
        self.components.iter().map(Series::order).min().unwrap_or(0)
    }

    pub fn component(&self, i: usize) -> &Series {
        &self.components[i]
    }

    pub fn components(&self) -> &[Series] {
        &self.components
    }

    pub fn at_zero(&self) -> Vec<Rational> {
        self.components.iter().map(Series::at_zero).collect()
    }

    /// Directional derivative `Z(f) = Σ Z_i ∂_i f`.
    pub fn apply(&self, f: &Series) -> Series {
        let order = self.order().min(f.order().saturating_sub(1));
        let mut acc = Series::zero(f.nvars(), order);
        for (i, z) in self.components.iter().enumerate() {
            if z.is_zero() {
                continue;
            }
            let df = f.partial(i).expect("index in range");
            acc = &acc + &z.mul_trunc(&df, order);
        }
        acc.with_order(order)
    }

    /// Pushforward by a diffeomorphism given through both directions:
    /// `forward` maps old to new coordinates, `backward` new to old.
    pub fn pushforward(&self, forward: &PointMap, backward: &PointMap) -> Result<VectorField> {
        let comps = forward
            .components()
            .iter()
            .map(|c| Ok(self.apply(c).compose(backward)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(VectorField::new(comps))
    }
}

/// Flow of `z` started on the slice `{u_slice = 0}`, with the flow time placed
/// in the slot of `slice`: `Φ(t, s)` where `Φ(0, s) = s`.
///
/// Computed from the Taylor coefficients in `t`,
/// `Φ_i = Σ_k t^k/k! · (Z^k u_i)|_{u_slice = 0}`; the result is exact to
/// one order beyond the field's.
pub fn formal_flow(z: &VectorField, slice: usize) -> Result<PointMap> {
    let n = z.nvars();
    if z.at_zero().iter().all(Rational::is_zero) {
        return Err(FormError::ZeroAtOrigin);
    }
    let order = z.order() + 1;
    let t = Mono::var(slice);
    let mut comps = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = if i == slice {
            Series::zero(n, order)
        } else {
            Series::var(n, order, i)
        };
        let mut deriv = Series::var(n, order, i);
        let mut factorial = Rational::one();
        for k in 1..=order {
            deriv = z.apply(&deriv);
            factorial = &factorial * &Rational::from_int(k as i64);
            let piece = deriv
                .set_zero(slice)
                .scale(&factorial.recip().unwrap())
                .mul_monomial(t.pow(k));
            acc = (&acc + &piece.with_order(order)).with_order(order);
            if deriv.is_zero() {
                break;
            }
        }
        comps.push(acc);
    }
    Ok(PointMap::new(n, comps)?)
}
