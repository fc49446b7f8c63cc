//! Singularity class of a triple and the scalar invariant κ.

use std::fmt;

use crate::forms::Form;
use crate::linalg::Matrix;
use crate::rational::Rational;
use crate::reduce::{self, ReduceError};
use crate::symplectic::{hamiltonian_field, SymplecticError, Triple};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClassifyError {
    #[error("invalid triple: {0}")]
    InvalidTriple(String),
    #[error("triple is not in S1 (class {0})")]
    NotS1(ClassKind),
    #[error("in_U is only defined for n >= 1")]
    PlanarCase,
    #[error(transparent)]
    Reduce(#[from] Box<ReduceError>),
}

impl From<SymplecticError> for ClassifyError {
    fn from(e: SymplecticError) -> Self {
        ClassifyError::InvalidTriple(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum ClassKind {
    NonSingular,
    S1,
    Outside,
}

impl fmt::Display for ClassKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ClassKind::NonSingular => "NonSingular",
            ClassKind::S1 => "S1",
            ClassKind::Outside => "Outside",
        };
        f.write_str(s)
    }
}

/// Class of a triple together with the values that decided it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingularityClass {
    pub kind: ClassKind,
    /// `{f,h}(0)`
    pub fh: Rational,
    /// `{f,{f,h}}(0)`
    pub ffh: Rational,
    /// `{h,{f,h}}(0)`
    pub hfh: Rational,
    /// Whether `(df ∧ dh)(0) ≠ 0`.
    pub df_dh_nonzero: bool,
}

/// Evaluates the iterated brackets at the origin and decides the class.
pub fn classify(t: &Triple) -> Result<SingularityClass, ClassifyError> {
    t.validate()?;
    // Every quantity below is a value at the origin of at most second
    // derivatives, so a 3-jet decides the class.
    let t = &Triple {
        n: t.n,
        omega: t.omega.truncate(3),
        h: t.h.truncate(3),
        f: t.f.truncate(3),
    };
    let zf = hamiltonian_field(&t.f, &t.omega)?;
    let zh = hamiltonian_field(&t.h, &t.omega)?;
    let fh = zf.apply(&t.h);
    let ffh = zf.apply(&fh).at_zero();
    let hfh = zh.apply(&fh).at_zero();
    let fh = fh.at_zero();
    let df_dh = Form::function(&t.f).d().wedge(&Form::function(&t.h).d());
    let df_dh_nonzero = !df_dh.at_zero().is_zero();

    let kind = if !fh.is_zero() {
        ClassKind::NonSingular
    } else if ffh.is_zero() {
        ClassKind::Outside
    } else if t.n == 0 || (!hfh.is_zero() && df_dh_nonzero) {
        ClassKind::S1
    } else {
        ClassKind::Outside
    };
    Ok(SingularityClass {
        kind,
        fh,
        ffh,
        hfh,
        df_dh_nonzero,
    })
}

/// `κ = {h,{f,h}}(0) / {f,{f,h}}(0)²` for a triple in S1.
pub fn kappa(t: &Triple) -> Result<Rational, ClassifyError> {
    let class = classify(t)?;
    if class.kind != ClassKind::S1 {
        return Err(ClassifyError::NotS1(class.kind));
    }
    Ok(&class.hfh / &(&class.ffh * &class.ffh))
}

/// Whether an S1 triple with `n >= 1` lies in the open set where the
/// coefficients `F_0, …, F_{2n-1}` of the pre-final normal form have
/// independent differentials at the origin.
pub fn in_u(t: &Triple) -> Result<bool, ClassifyError> {
    let class = classify(t)?;
    if class.kind != ClassKind::S1 {
        return Err(ClassifyError::NotS1(class.kind));
    }
    if t.n == 0 {
        return Err(ClassifyError::PlanarCase);
    }
    let pre = reduce::prefinal(t).map_err(Box::new)?;
    Ok(coefficient_rank(&pre.big_f, t.n) == 2 * t.n)
}

/// Rank at the origin of the differentials of `F_0..F_{2n-1}` in `(p, q)`,
/// where `F = Σ F_i(p,q) y^i` is a series in `(y, p, q)`.
pub fn coefficient_rank(big_f: &crate::jets::Series, n: usize) -> usize {
    let coeffs = big_f.coefficients_in(0);
    let rows: Vec<Vec<Rational>> = (0..2 * n)
        .map(|i| {
            let c = coeffs
                .get(i)
                .cloned()
                .unwrap_or_else(|| crate::jets::Series::zero(big_f.nvars(), 0));
            (1..=2 * n)
                .map(|j| c.coeff(crate::jets::Mono::var(j)))
                .collect()
        })
        .collect();
    Matrix::from_rows(rows).rank()
}
