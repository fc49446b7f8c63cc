//! Hamiltonian vector fields, Poisson brackets and nondegeneracy on jets.
//!
//! Bracket convention: `Z_f ⌟ ω = df` and `{f, h} = dh(Z_f)`.

use crate::forms::{Form, FormError, VectorField};
use crate::jets::{JetError, Series};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SymplecticError {
    #[error("form is degenerate at the origin")]
    Degenerate,
    #[error("invalid triple: {0}")]
    InvalidTriple(String),
    #[error(transparent)]
    Form(#[from] FormError),
}

impl From<JetError> for SymplecticError {
    fn from(e: JetError) -> Self {
        SymplecticError::Form(e.into())
    }
}

pub type Result<T> = std::result::Result<T, SymplecticError>;

/// Coordinate layout `(x, y, p_1..p_n, q_1..q_n)` on `R^{2n+2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n: usize,
}

impl Layout {
    pub const X: usize = 0;
    pub const Y: usize = 1;

    pub fn new(n: usize) -> Layout {
        Layout { n }
    }

    pub fn dim(self) -> usize {
        2 * self.n + 2
    }

    /// Index of `p_i` (1-based `i`).
    pub fn p(self, i: usize) -> usize {
        1 + i
    }

    /// Index of `q_i` (1-based `i`).
    pub fn q(self, i: usize) -> usize {
        1 + self.n + i
    }

    pub fn var_name(self, idx: usize) -> String {
        match idx {
            0 => "x".into(),
            1 => "y".into(),
            i if i < 2 + self.n => format!("p{}", i - 1),
            i => format!("q{}", i - 1 - self.n),
        }
    }

    /// `(p_i, q_i)` index pairs.
    pub fn pq_pairs(self) -> Vec<(usize, usize)> {
        (1..=self.n).map(|i| (self.p(i), self.q(i))).collect()
    }

    /// `dx ∧ dy + Σ dp_i ∧ dq_i`.
    pub fn standard_form(self, order: u32) -> Form {
        let mut pairs = vec![(Self::X, Self::Y)];
        pairs.extend(self.pq_pairs());
        Form::darboux(&pairs, self.dim(), order)
    }
}

/// Solves `m·z = rhs` for a square matrix of series whose constant part is
/// invertible: `z = m₀⁻¹(rhs − m₁ z)`, one degree per pass.
pub fn solve_series_system(m: &[Vec<Series>], rhs: &[Series]) -> Option<Vec<Series>> {
    let n = rhs.len();
    if n == 0 {
        return Some(vec![]);
    }
    let nvars = rhs[0].nvars();
    let m0 = Matrix::from_rows(
        m.iter()
            .map(|row| row.iter().map(Series::at_zero).collect())
            .collect(),
    );
    let m0_inv = m0.inverse()?;
    let order = m
        .iter()
        .flatten()
        .map(Series::order)
        .chain(rhs.iter().map(Series::order))
        .min()
        .unwrap();
    let m1: Vec<Vec<Series>> = m
        .iter()
        .map(|row| row.iter().map(|s| s.filter(|mono| mono.degree() > 0)).collect())
        .collect();
    let apply_inv = |v: &[Series]| -> Vec<Series> {
        (0..n)
            .map(|i| {
                let mut acc = Series::zero(nvars, order);
                for (j, s) in v.iter().enumerate() {
                    let c = &m0_inv[(i, j)];
                    if !c.is_zero() {
                        acc = &acc + &s.scale(c);
                    }
                }
                acc
            })
            .collect()
    };
    let mut z = apply_inv(&rhs.iter().map(|s| s.at_zero_series()).collect::<Vec<_>>());
    for _ in 0..=order {
        let mut resid: Vec<Series> = rhs.iter().map(|s| s.truncate(order)).collect();
        for (i, row) in m1.iter().enumerate() {
            for (j, s) in row.iter().enumerate() {
                if !s.is_zero() && !z[j].is_zero() {
                    resid[i] = &resid[i] - &s.mul_trunc(&z[j], order);
                }
            }
        }
        let next = apply_inv(&resid);
        if next == z {
            break;
        }
        z = next;
    }
    Some(z)
}

/// `Z_f` with `Z_f ⌟ ω = df`.
pub fn hamiltonian_field(f: &Series, omega: &Form) -> Result<VectorField> {
    let n = omega.nvars();
    let w = omega.matrix();
    // Z ⌟ ω = Σ_j (Σ_i Z_i W_ij) dx_j, so W·Z = -∇f.
    let rhs: Vec<Series> = (0..n)
        .map(|j| -&f.partial(j).expect("index in range"))
        .collect();
    let z = solve_series_system(&w, &rhs).ok_or(SymplecticError::Degenerate)?;
    Ok(VectorField::new(z))
}

/// `{f, h} = dh(Z_f)`.
pub fn poisson(f: &Series, h: &Series, omega: &Form) -> Result<Series> {
    Ok(hamiltonian_field(f, omega)?.apply(h))
}

/// True when `ω^k` is nonzero at the origin.
pub fn nondegenerate(omega: &Form, k: usize) -> bool {
    !omega.at_zero().wedge_power(k).is_zero()
}

/// A germ triple `(ω, H = {h = 0}, f)` on `R^{2n+2}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub n: usize,
    pub omega: Form,
    pub h: Series,
    pub f: Series,
}

impl Triple {
    /// Builds a triple after checking closedness, nondegeneracy and the
    /// conditions on `h` and `f` at the origin.
    pub fn new(n: usize, omega: Form, h: Series, f: Series) -> Result<Triple> {
        let t = Triple { n, omega, h, f };
        t.validate()?;
        Ok(t)
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self.n)
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 2
    }

    pub fn order(&self) -> u32 {
        self.omega.order().min(self.h.order()).min(self.f.order())
    }

    /// Reads the jets as exact polynomials and raises the trusted order to
    /// `order`. This is how a document's polynomials are meant: the germ is
    /// the polynomial itself, not a truncation of something larger.
    pub fn as_exact(&self, order: u32) -> Triple {
        Triple {
            n: self.n,
            omega: self.omega.with_order(order),
            h: self.h.with_order(order),
            f: self.f.with_order(order),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        let bad = |m: &str| Err(SymplecticError::InvalidTriple(m.to_string()));
        if self.omega.nvars() != dim || self.h.nvars() != dim || self.f.nvars() != dim {
            return bad("variable count does not match the dimension");
        }
        if self.omega.degree() != 2 {
            return bad("omega is not a 2-form");
        }
        if !self.omega.d().is_zero() {
            return bad("omega is not closed");
        }
        if !nondegenerate(&self.omega, self.n + 1) {
            return bad("omega is degenerate at the origin");
        }
        if !self.h.at_zero().is_zero() {
            return bad("h(0) != 0");
        }
        if (0..dim).all(|i| self.h.coeff(crate::jets::Mono::var(i)).is_zero()) {
            return bad("dh(0) = 0");
        }
        if !self.f.at_zero().is_zero() {
            return bad("f(0) != 0");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::Rational;

    fn v(n: usize, o: u32, i: usize) -> Series {
        Series::var(n, o, i)
    }

    fn k(n: usize, o: u32, c: i64) -> Series {
        Series::constant(n, o, Rational::from_int(c))
    }

    #[test]
    fn hamiltonian_examples() {
        let o = 6;
        let w = Layout::new(0).standard_form(o);
        let (x, y) = (v(2, o, 0), v(2, o, 1));
        let z = hamiltonian_field(&y, &w).unwrap();
        assert_eq!(z, VectorField::coordinate(2, o - 1, 0));
        let h = &y + &(&x * &x);
        let z = hamiltonian_field(&h, &w).unwrap();
        assert_eq!(z.component(0), &k(2, o - 1, 1));
        assert_eq!(z.component(1), &x.scale(&Rational::from_int(-2)).with_order(o - 1));

        let l = Layout::new(1);
        let w4 = l.standard_form(o);
        let x4 = v(4, o, 0);
        let h4 = &(&v(4, o, 1) + &(&x4 * &x4)) + &v(4, o, 2);
        let z = hamiltonian_field(&h4, &w4).unwrap();
        assert_eq!(z.component(0), &k(4, o - 1, 1));
        assert_eq!(z.component(1), &x4.scale(&Rational::from_int(-2)).with_order(o - 1));
        assert!(z.component(2).is_zero());
        assert_eq!(z.component(3), &k(4, o - 1, -1));
        // Defining property.
        assert_eq!(w4.contract(&z), Form::function(&h4).d());
    }

    #[test]
    fn poisson_examples() {
        let o = 6;
        let w = Layout::new(0).standard_form(o);
        let (x, y) = (v(2, o, 0), v(2, o, 1));
        let h = &y + &(&x * &x);
        assert_eq!(poisson(&y, &h, &w).unwrap(), x.scale(&Rational::from_int(2)).with_order(o - 1));
        assert!(poisson(&h, &h, &w).unwrap().is_zero());
        let l = Layout::new(1);
        let w4 = l.standard_form(o);
        let s = Rational::from_int(3);
        let f = v(4, o, 1).scale(&s);
        let x4 = v(4, o, 0);
        let h4 = &(&v(4, o, 1) + &(&x4 * &x4)) + &v(4, o, 2);
        assert_eq!(
            poisson(&f, &h4, &w4).unwrap(),
            x4.scale(&Rational::from_int(6)).with_order(o - 1)
        );
    }

    #[test]
    fn nondegenerate_examples() {
        let l = Layout::new(1);
        assert!(nondegenerate(&l.standard_form(4), 2));
        assert!(!nondegenerate(&Form::basis(&[0, 1], 4, 4), 2));
        assert!(nondegenerate(&Form::basis(&[1, 2], 3, 4), 1));
    }

    #[test]
    fn degenerate_form_rejected() {
        let w = Form::basis(&[0, 1], 4, 4);
        assert_eq!(
            hamiltonian_field(&v(4, 4, 1), &w),
            Err(SymplecticError::Degenerate)
        );
    }

    #[test]
    fn field_on_variable_form() {
        let o = 7;
        let (x, y) = (v(2, o, 0), v(2, o, 1));
        let unit = &(&k(2, o, 1) + &x) + &(&y * &y);
        let w = Form::term(&[0, 1], &unit);
        let f = &(&x * &y) + &y;
        let z = hamiltonian_field(&f, &w).unwrap();
        assert_eq!(w.contract(&z), Form::function(&f).d().truncate(z.order()));
    }
}
