//! Seeded random test instances: normal-form data, optionally disguised by a
//! random diffeomorphism and a random unit multiplier on the boundary
//! function.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::forms::Form;
use crate::jets::{Mono, PointMap, Series};
use crate::linalg::{standard_symplectic, Matrix};
use crate::rational::Rational;
use crate::reduce::S1NormalForm;
use crate::symplectic::{Layout, Triple};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceClass {
    S1,
    NonSingular,
    Outside,
}

impl std::str::FromStr for InstanceClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "s1" => Ok(InstanceClass::S1),
            "nonsingular" | "non-singular" => Ok(InstanceClass::NonSingular),
            "outside" => Ok(InstanceClass::Outside),
            _ => Err(format!("unknown class `{s}` (expected s1, nonsingular or outside)")),
        }
    }
}

/// A generated triple and, for S1 instances, the invariants it was built from.
#[derive(Debug, Clone)]
pub struct Instance {
    pub triple: Triple,
    pub source: Option<S1NormalForm>,
}

/// Small rational with numerator in `[-3, 3]` and denominator in `{1, 2}`.
pub fn small_rational(rng: &mut impl Rng) -> Rational {
    Rational::new(rng.gen_range(-3..=3), *[1, 2].choose(rng).unwrap())
}

fn nonzero_rational(rng: &mut impl Rng) -> Rational {
    loop {
        let r = small_rational(rng);
        if !r.is_zero() {
            return r;
        }
    }
}

fn random_mono(rng: &mut impl Rng, vars: &[usize], degree: u32) -> Mono {
    (0..degree).fold(Mono::ONE, |m, _| m.mul(Mono::var(*vars.choose(rng).unwrap())))
}

/// Sparse random polynomial: `count` monomials in `vars` with degrees in `degrees`.
fn sparse_poly(
    rng: &mut impl Rng,
    nvars: usize,
    order: u32,
    vars: &[usize],
    degrees: std::ops::RangeInclusive<u32>,
    count: usize,
) -> Series {
    let mut s = Series::zero(nvars, order);
    if degrees.is_empty() {
        return s;
    }
    for _ in 0..count {
        let d = rng.gen_range(degrees.clone());
        s.add_term(random_mono(rng, vars, d), &small_rational(rng));
    }
    s
}

fn invertible_matrix(rng: &mut impl Rng, n: usize) -> Matrix {
    loop {
        let rows = (0..n)
            .map(|_| (0..n).map(|_| small_rational(rng)).collect())
            .collect();
        let m = Matrix::from_rows(rows);
        if m.inverse().is_some() {
            return m;
        }
    }
}

/// Random origin-preserving diffeomorphism germ of the given dimension.
pub fn random_diffeomorphism(rng: &mut impl Rng, dim: usize, order: u32) -> PointMap {
    let linear = PointMap::linear(&invertible_matrix(rng, dim), order);
    let vars: Vec<usize> = (0..dim).collect();
    let top = order.clamp(2, 3);
    let comps = linear
        .components()
        .iter()
        .map(|c| c + &sparse_poly(rng, dim, order, &vars, 2..=top, 2))
        .collect();
    PointMap::new(dim, comps).expect("origin-preserving")
}

/// Random invertible matrix with about `2n` nonzero entries: a scaled
/// permutation times a unipotent factor with `n` random off-diagonal terms.
fn sparse_invertible_matrix(rng: &mut impl Rng, n: usize) -> Matrix {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut rows = vec![vec![Rational::zero(); n]; n];
    for (i, &j) in perm.iter().enumerate() {
        rows[i][j] = nonzero_rational(rng);
    }
    let mut unipotent = vec![vec![Rational::zero(); n]; n];
    for (i, row) in unipotent.iter_mut().enumerate() {
        row[i] = Rational::one();
    }
    for _ in 0..n {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i > j {
            unipotent[i][j] = nonzero_rational(rng);
        }
    }
    Matrix::from_rows(rows).mul(&Matrix::from_rows(unipotent))
}

/// Random polynomial diffeomorphism: a sparse linear map `L` followed by the shear
/// `(x, z) ↦ (x + s(z), z)`, with `L` linear, `s` a sparse quadratic and `z`
/// the coordinates other than `x`.
///
/// The shear moves along the fold direction of a normal form, so pulling a
/// normal form back by it raises degrees only through `h` and `dx`.
pub fn shear_diffeomorphism(rng: &mut impl Rng, dim: usize, order: u32) -> PointMap {
    let linear = PointMap::linear(&sparse_invertible_matrix(rng, dim), order);
    let zvars: Vec<usize> = (1..dim).collect();
    let mut comps: Vec<Series> = (0..dim).map(|i| Series::var(dim, order, i)).collect();
    if order >= 2 && dim > 1 {
        comps[0] = &comps[0] + &sparse_poly(rng, dim, order, &zvars, 2..=2, 2);
    }
    let shear = PointMap::new(dim, comps).expect("origin-preserving");
    shear.compose(&linear).expect("arity")
}

/// Random unit: nonzero constant plus a few terms of degree 1 and 2.
pub fn random_unit(rng: &mut impl Rng, dim: usize, order: u32) -> Series {
    let vars: Vec<usize> = (0..dim).collect();
    &Series::constant(dim, order, nonzero_rational(rng))
        + &sparse_poly(rng, dim, order, &vars, 1..=2, 3)
}

/// Random S1 invariants whose normal-form triple has degree at most `order`.
pub fn random_invariants(rng: &mut impl Rng, n: usize, order: u32) -> S1NormalForm {
    let mut g = Series::zero(1, order);
    g.add_term(Mono::var(0), &nonzero_rational(rng));
    for d in 2..=order {
        if rng.gen_bool(0.5) {
            g.add_term(Mono::var(0).pow(d), &small_rational(rng));
        }
    }
    if n == 0 {
        return S1NormalForm {
            n,
            g,
            mu: None,
            phi: None,
        };
    }
    let m = 2 * n;
    // μ = Aᵀ J A + dα with α a sparse 1-form.
    let a = sparse_invertible_matrix(rng, m);
    let m0 = a.transpose().mul(&standard_symplectic(n)).mul(&a);
    let mut mu = Form::zero(2, m, order);
    for i in 0..m {
        for j in i + 1..m {
            mu = &mu + &Form::term(&[i, j], &Series::constant(m, order, m0[(i, j)].clone()));
        }
    }
    let vars: Vec<usize> = (0..m).collect();
    let top = (order + 1).min(4);
    for i in 0..m {
        let coeff = sparse_poly(rng, m, order + 1, &vars, 2..=top, 2);
        mu = &mu + &Form::term(&[i], &coeff).d().with_order(order);
    }
    // φ(y, p, q) with φ(y, 0, 0) = 0.
    let phi_order = order.saturating_sub(m as u32);
    let mut phi = Series::zero(m + 1, phi_order);
    let all: Vec<usize> = (0..=m).collect();
    for _ in 0..3 {
        if phi_order == 0 {
            break;
        }
        let d = rng.gen_range(1..=phi_order);
        let pq = rng.gen_range(1..=m);
        let mono = random_mono(rng, &all, d - 1).mul(Mono::var(pq));
        phi.add_term(mono, &small_rational(rng));
    }
    S1NormalForm {
        n,
        g,
        mu: Some(mu.with_order(order)),
        phi: Some(phi),
    }
}

fn nonsingular_normal(n: usize, order: u32) -> Triple {
    let dim = 2 * n + 2;
    Triple {
        n,
        omega: Layout::new(n).standard_form(order),
        h: Series::var(dim, order, 0),
        f: Series::var(dim, order, 1),
    }
}

fn outside_normal(n: usize, order: u32) -> Triple {
    let dim = 2 * n + 2;
    let mut f = Series::var(dim, order, 0).pow(3);
    if n > 0 {
        f = &f + &Series::var(dim, order, 2);
    }
    Triple {
        n,
        omega: Layout::new(n).standard_form(order),
        h: Series::var(dim, order, 1),
        f,
    }
}

/// Pulls a triple back by `chi` and multiplies `h` by `unit`.
pub fn transform(t: &Triple, chi: &PointMap, unit: &Series) -> Triple {
    Triple {
        n: t.n,
        omega: t.omega.pullback(chi).expect("arity"),
        h: unit * &t.h.compose(chi).expect("arity"),
        f: t.f.compose(chi).expect("arity"),
    }
}

fn lift(t: &Triple, order: u32) -> Triple {
    Triple {
        n: t.n,
        omega: t.omega.with_order(order),
        h: t.h.with_order(order),
        f: t.f.with_order(order),
    }
}

/// Deterministic instance for `(dim, order, seed, class)`.
///
/// Every generated triple is an exact polynomial of degree at most `order`:
/// the normal-form data is degree bounded, the scramble is a
/// [`shear_diffeomorphism`] and the unit on `h` depends only on the normal
/// coordinates other than `x`, with degree at most `order − 4`. The jet
/// therefore is the germ, and the source invariants are its invariants.
pub fn generate(dim: usize, order: u32, seed: u64, class: InstanceClass, scramble: bool) -> Instance {
    assert!(dim >= 2 && dim.is_multiple_of(2), "dimension must be even and positive");
    let n = dim / 2 - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (normal, source) = match class {
        InstanceClass::S1 => {
            let nf = random_invariants(&mut rng, n, order);
            (nf.triple(), Some(nf))
        }
        InstanceClass::NonSingular => (nonsingular_normal(n, order), None),
        InstanceClass::Outside => (outside_normal(n, order), None),
    };
    // Headroom shows that nothing is cut off; pullbacks spend one order.
    let wide = order + 2;
    let normal = lift(&normal, wide);
    let triple = if scramble {
        let chi = shear_diffeomorphism(&mut rng, dim, wide);
        let zvars: Vec<usize> = (1..dim).collect();
        let unit_degree = order.saturating_sub(4).min(2);
        let unit = &Series::constant(dim, wide, nonzero_rational(&mut rng))
            + &sparse_poly(&mut rng, dim, wide, &zvars, 1..=unit_degree, 3);
        transform(&normal, &chi, &unit.compose(&chi).expect("arity"))
    } else {
        normal
    };
    let exact = Triple {
        n,
        omega: triple.omega.truncate(order),
        h: triple.h.truncate(order),
        f: triple.f.truncate(order),
    };
    debug_assert_eq!(
        exact.as_exact(triple.order()),
        triple.as_exact(triple.order()),
        "generated triple exceeds its order"
    );
    // The source data are exact polynomials too.
    let source = source.map(|nf| S1NormalForm {
        n: nf.n,
        g: nf.g.with_order(order),
        mu: nf.mu.map(|m| m.with_order(order)),
        phi: nf.phi.map(|p| p.with_order(order)),
    });
    Instance {
        triple: exact,
        source,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{classify, ClassKind};

    #[test]
    fn generated_classes() {
        for seed in 0..4 {
            let t = generate(2, 6, seed, InstanceClass::S1, true).triple;
            assert_eq!(classify(&t).unwrap().kind, ClassKind::S1);
            let t = generate(4, 6, seed, InstanceClass::NonSingular, true).triple;
            assert_eq!(classify(&t).unwrap().kind, ClassKind::NonSingular);
            let t = generate(4, 6, seed, InstanceClass::Outside, true).triple;
            assert_eq!(classify(&t).unwrap().kind, ClassKind::Outside);
        }
    }

    #[test]
    fn deterministic() {
        let a = generate(4, 6, 11, InstanceClass::S1, true);
        let b = generate(4, 6, 11, InstanceClass::S1, true);
        assert_eq!(a.triple, b.triple);
    }
}
