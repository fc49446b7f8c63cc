//! Helpers shared by the integration tests: seeded random data and an
//! independent Poisson bracket written straight from coordinates.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semispace::generate::small_rational;
use semispace::symplectic::Layout;
use semispace::{Form, Mono, Rational, Series};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sparse random polynomial with terms of degree `min_deg..=order`.
pub fn random_series(rng: &mut impl Rng, nvars: usize, order: u32, min_deg: u32, terms: usize) -> Series {
    let mut s = Series::zero(nvars, order);
    for _ in 0..terms {
        let deg = rng.gen_range(min_deg..=order);
        let mut exps = vec![0u32; nvars];
        for _ in 0..deg {
            exps[rng.gen_range(0..nvars)] += 1;
        }
        s.add_term(Mono::from_exponents(&exps), &small_rational(rng));
    }
    s
}

pub fn random_one_form(rng: &mut impl Rng, nvars: usize, order: u32) -> Form {
    let mut form = Form::zero(1, nvars, order);
    for i in 0..nvars {
        form = &form + &Form::term(&[i], &random_series(rng, nvars, order, 0, 3));
    }
    form
}

/// `{f, h}` for `ω = w · (dx∧dy + Σ dp_i∧dq_i)` with `Z_f ⌟ ω = df` and
/// `{f, h} = dh(Z_f)`. For `n ≥ 1` the factor `w` must be constant.
pub fn oracle_bracket(f: &Series, h: &Series, n: usize, w: &Series) -> Series {
    let layout = Layout::new(n);
    let mut pairs = vec![(0, 1)];
    pairs.extend(layout.pq_pairs());
    let d = |s: &Series, i: usize| s.partial(i).unwrap();
    let mut sum = Series::zero(f.nvars(), f.order().min(h.order()));
    for (a, b) in pairs {
        sum = &sum + &(&(&d(f, b) * &d(h, a)) - &(&d(f, a) * &d(h, b)));
    }
    &sum * &w.inverse().unwrap()
}

/// `{h,{f,h}}(0) / {f,{f,h}}(0)²` from [`oracle_bracket`].
pub fn oracle_kappa(f: &Series, h: &Series, n: usize, w: &Series) -> Rational {
    let fh = oracle_bracket(f, h, n, w);
    let ffh = oracle_bracket(f, &fh, n, w).at_zero();
    let hfh = oracle_bracket(h, &fh, n, w).at_zero();
    &hfh / &(&ffh * &ffh)
}

/// Melrose's example: `ω = dx∧dy + dp1∧dq1`, `h = y + x² + p1`, `f = s·y`.
pub fn melrose_document(s: &str) -> String {
    format!(
        r#"{{"dim":4,"order":8,"omega":"dx^dy + dp1^dq1","h":"y + x^2 + p1","f":"{s}*y"}}"#
    )
}
