//! Property tests for the algebraic identities and pipeline invariants.
//! Random objects are drawn from seeded generators so every failure can be
//! replayed from its seed.

mod common;

use common::{oracle_bracket, random_one_form, random_series, rng};
use proptest::prelude::*;
use semispace::classify::{classify, kappa, ClassKind};
use semispace::expr::{format_form, format_series, parse_form, parse_series, TripleDocument};
use semispace::generate::{generate, random_diffeomorphism, random_unit, InstanceClass};
use semispace::jets::{divide_by_parabola, weierstrass_prepare};
use semispace::reduce::{reduce_s1, verify_certificate};
use semispace::symplectic::{poisson, Layout, Triple};
use semispace::{Form, Mono, Rational, Series};

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig::with_cases(n)
}

proptest! {
    #![proptest_config(cases(100))]

    #[test]
    fn d_squared_vanishes(seed in any::<u64>(), nvars in 2usize..=5) {
        let mut r = rng(seed);
        let a = random_one_form(&mut r, nvars, 6);
        prop_assert!(a.d().d().is_zero());
        let f = random_series(&mut r, nvars, 6, 0, 6);
        prop_assert!(Form::function(&f).d().d().is_zero());
    }

    #[test]
    fn pullback_commutes_with_d_and_wedge(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_one_form(&mut r, 4, 5);
        let b = random_one_form(&mut r, 4, 5);
        let phi = random_diffeomorphism(&mut r, 4, 5);
        let lhs = a.pullback(&phi).unwrap().d();
        let rhs = a.d().pullback(&phi).unwrap();
        let o = lhs.order().min(rhs.order());
        prop_assert_eq!(lhs.truncate(o), rhs.truncate(o));
        let lhs = a.wedge(&b).pullback(&phi).unwrap();
        let rhs = a.pullback(&phi).unwrap().wedge(&b.pullback(&phi).unwrap());
        let o = lhs.order().min(rhs.order());
        prop_assert_eq!(lhs.truncate(o), rhs.truncate(o));
    }

    #[test]
    fn poisson_antisymmetry_and_jacobi(seed in any::<u64>(), n in 0usize..=2) {
        let mut r = rng(seed);
        let dim = 2 * n + 2;
        let w = Layout::new(n).standard_form(6);
        let f = random_series(&mut r, dim, 6, 1, 4);
        let g = random_series(&mut r, dim, 6, 1, 4);
        let h = random_series(&mut r, dim, 6, 1, 4);
        let br = |a: &Series, b: &Series| poisson(a, b, &w).unwrap();
        prop_assert!((&br(&f, &g) + &br(&g, &f)).is_zero());
        let jacobi = &(&br(&f, &br(&g, &h)) + &br(&g, &br(&h, &f))) + &br(&h, &br(&f, &g));
        prop_assert!(jacobi.is_zero());
    }

    #[test]
    fn bracket_matches_coordinate_formula(seed in any::<u64>(), n in 0usize..=2) {
        let mut r = rng(seed);
        let dim = 2 * n + 2;
        let f = random_series(&mut r, dim, 6, 1, 4);
        let h = random_series(&mut r, dim, 6, 1, 4);
        let c = Rational::from_int(1 + (seed % 3) as i64);
        let scale = Series::constant(dim, 6, c.clone());
        let w = Layout::new(n).standard_form(6).scale(&c);
        let lib = poisson(&f, &h, &w).unwrap();
        let oracle = oracle_bracket(&f, &h, n, &scale);
        let o = lib.order().min(oracle.order());
        prop_assert_eq!(lib.truncate(o), oracle.truncate(o));
    }

    #[test]
    fn planar_bracket_with_variable_density(seed in any::<u64>()) {
        let mut r = rng(seed);
        let density = &Series::constant(2, 6, Rational::from_int(1 + (seed % 4) as i64))
            + &random_series(&mut r, 2, 6, 1, 3);
        let f = random_series(&mut r, 2, 6, 1, 4);
        let h = random_series(&mut r, 2, 6, 1, 4);
        let lib = poisson(&f, &h, &Form::term(&[0, 1], &density)).unwrap();
        let oracle = oracle_bracket(&f, &h, 0, &density);
        let o = lib.order().min(oracle.order());
        prop_assert_eq!(lib.truncate(o), oracle.truncate(o));
    }

    #[test]
    fn inverse_round_trips(seed in any::<u64>(), half in 1usize..=3) {
        let mut r = rng(seed);
        let m = random_diffeomorphism(&mut r, 2 * half, 5);
        let inv = m.invert().unwrap();
        prop_assert!(m.compose(&inv).unwrap().is_identity());
        prop_assert!(inv.compose(&m).unwrap().is_identity());
    }

    #[test]
    fn weierstrass_multiplies_back(seed in any::<u64>(), nvars in 2usize..=4) {
        let mut r = rng(seed);
        let x = Series::var(nvars, 8, 0);
        let mut h = random_series(&mut r, nvars, 8, 2, 6).filter(|m| m != Mono::var(0).pow(2));
        h.add_term(Mono::var(0).pow(2), &Rational::from_int(1 + (seed % 3) as i64));
        h.add_term(Mono::var(1), &Rational::one());
        let (unit, a, b) = weierstrass_prepare(&h, 0).unwrap();
        prop_assert!(a.terms().chain(b.terms()).all(|(m, _)| m.exponent(0) == 0));
        prop_assert!(a.at_zero().is_zero() && b.at_zero().is_zero());
        let back = &unit * &(&(&(&x * &x) + &(&a * &x)) + &b);
        prop_assert_eq!(back.clone(), h.truncate(back.order()));
    }

    #[test]
    fn homotopy_inverts_d_on_closed_forms(seed in any::<u64>(), nvars in 2usize..=4) {
        let mut r = rng(seed);
        let beta = random_one_form(&mut r, nvars, 5).d();
        let k = beta.poincare_homotopy().unwrap();
        prop_assert_eq!(k.d().truncate(beta.order()), beta.clone());
        let f = random_series(&mut r, nvars, 5, 1, 4);
        let exact = Form::function(&f).d();
        let primitive = exact.poincare_homotopy().unwrap();
        prop_assert_eq!(primitive.d().truncate(exact.order()), exact);
    }

    #[test]
    fn parabola_division_is_exact(seed in any::<u64>(), nvars in 2usize..=4) {
        let mut r = rng(seed);
        let q = random_series(&mut r, nvars, 6, 0, 5);
        let x = Series::var(nvars, 8, 0);
        let y = Series::var(nvars, 8, 1);
        let r_ = &q.with_order(8) * &(&y + &(&x * &x));
        let back = divide_by_parabola(&r_, 0, 1).unwrap();
        let o = back.order().min(6);
        prop_assert_eq!(back.truncate(o), q.truncate(o));
    }

    #[test]
    fn expressions_round_trip(seed in any::<u64>(), nvars in 1usize..=6) {
        let mut r = rng(seed);
        let s = random_series(&mut r, nvars, 6, 0, 6);
        prop_assert_eq!(parse_series(&format_series(&s), nvars, 6).unwrap(), s);
        if nvars >= 2 {
            let a = random_one_form(&mut r, nvars, 5);
            let w = a.d();
            prop_assert_eq!(parse_form(&format_form(&w), nvars, w.order()).unwrap(), w);
        }
    }

    #[test]
    fn planar_s1_instances_satisfy_the_implications(seed in any::<u64>()) {
        let t = generate(2, 8, seed, InstanceClass::S1, true).triple;
        let class = classify(&t).unwrap();
        prop_assert_eq!(class.kind, ClassKind::S1);
        prop_assert!(!class.hfh.is_zero());
        prop_assert!(!class.df_dh_nonzero);
    }

    #[test]
    fn kappa_ignores_the_boundary_unit(seed in any::<u64>(), dim in prop::sample::select(vec![2usize, 4])) {
        let t = generate(dim, 8, seed, InstanceClass::S1, true).triple;
        let q = random_unit(&mut rng(seed ^ 0x5eed), dim, 8);
        let scaled = Triple::new(t.n, t.omega.clone(), &q * &t.h, t.f.clone()).unwrap();
        prop_assert_eq!(kappa(&t).unwrap(), kappa(&scaled).unwrap());
    }
}

proptest! {
    #![proptest_config(cases(30))]

    #[test]
    fn documents_round_trip(seed in any::<u64>(), dim in prop::sample::select(vec![2usize, 4, 6])) {
        let t = generate(dim, 6, seed, InstanceClass::S1, true).triple;
        let doc = TripleDocument::from_triple(&t, 6);
        let back = TripleDocument::from_json(&doc.to_json()).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(back.to_triple().unwrap(), t.as_exact(6));
    }

    /// A passing certificate means the stated relations hold when checked
    /// directly: `f∘ψ⁻¹ = F`, `h∘ψ⁻¹ = unit·(y + x²)` and `ψ∘ψ⁻¹ = id`.
    #[test]
    fn passing_certificates_are_sound(seed in any::<u64>(), dim in prop::sample::select(vec![2usize, 4])) {
        let t = generate(dim, 8, seed, InstanceClass::S1, true).triple.as_exact(8 + dim as u32 - 2);
        let (_, cert) = reduce_s1(&t).unwrap();
        prop_assert!(verify_certificate(&t, &cert).passed());
        let o = cert.trusted_order;
        let f = t.f.compose(&cert.psi_inv).unwrap().truncate(o);
        prop_assert_eq!(f, cert.normal.f.truncate(o));
        let h = t.h.compose(&cert.psi_inv).unwrap().truncate(o);
        prop_assert_eq!(h, (&cert.unit * &cert.normal.h).truncate(o));
        prop_assert!(cert.psi.compose(&cert.psi_inv).unwrap().truncate(o).is_identity());
    }
}
