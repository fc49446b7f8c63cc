//! Acceptance run: one PASS/FAIL line per criterion.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::{melrose_document, oracle_bracket, oracle_kappa, random_one_form, random_series, rng};
use semispace::classify::{classify, in_u, kappa, ClassKind};
use semispace::cli::{self, round_trip, EXIT_PRECONDITION};
use semispace::expr::TripleDocument;
use semispace::generate::{generate, random_diffeomorphism, random_unit, InstanceClass};
use semispace::jets::weierstrass_prepare;
use semispace::reduce::{reduce_nonsingular, reduce_s1, straighten, verify_certificate};
use semispace::symplectic::{poisson, Layout, Triple};
use semispace::{Form, Mono, PointMap, Rational, Series};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn exact(t: &Triple, order: u32) -> Triple {
    t.as_exact(order + 2 * t.n as u32)
}

fn criterion_1_and_3() -> (Outcome, Outcome) {
    let mut recovered = Vec::new();
    let mut kappa_fail = None;
    let mut inv_fail = None;
    for (dim, order, count) in [(2usize, 8u32, 100u64), (4, 8, 50), (6, 6, 10)] {
        let mut ok = 0;
        for seed in 0..count {
            let rt = round_trip(dim, order, seed);
            if rt.error.is_none() && rt.certificate && rt.invariants {
                ok += 1;
            } else if inv_fail.is_none() {
                inv_fail = Some(format!(
                    "dim {dim} seed {seed}: certificate {} invariants {} error {:?}",
                    rt.certificate, rt.invariants, rt.error
                ));
            }
            if !rt.kappa && kappa_fail.is_none() {
                kappa_fail = Some(format!("dim {dim} seed {seed}"));
            }
        }
        recovered.push(format!("dim {dim}: {ok}/{count}"));
    }
    let summary = recovered.join(", ");
    let one = match inv_fail {
        None => Ok(summary.clone()),
        Some(f) => Err(format!("{summary}; first failure {f}")),
    };
    let three = match kappa_fail {
        None => Ok("κ = 1/(2g'(0)) on all 160 instances".into()),
        Some(f) => Err(format!("κ mismatch at {f}")),
    };
    (one, three)
}

fn criterion_2() -> Outcome {
    for dim in [2usize, 4] {
        for seed in 0..100 {
            let inst = generate(dim, 8, seed, InstanceClass::NonSingular, true);
            let t = exact(&inst.triple, 8);
            let cert = reduce_nonsingular(&t).map_err(|e| format!("dim {dim} seed {seed}: {e}"))?;
            let report = verify_certificate(&t, &cert);
            ensure(report.passed(), || format!("dim {dim} seed {seed}: {:?}", report.failure))?;
        }
    }
    Ok("200/200 verified".into())
}

fn criterion_4() -> Outcome {
    let mut r = rng(4);
    for i in 0..100u64 {
        let dim = if i % 2 == 0 { 2 } else { 4 };
        let t = generate(dim, 8, i, InstanceClass::S1, true).triple;
        let q = random_unit(&mut r, dim, 8);
        let scaled = Triple::new(t.n, t.omega.clone(), &q * &t.h, t.f.clone()).map_err(|e| e.to_string())?;
        let (a, b) = (kappa(&t).map_err(|e| e.to_string())?, kappa(&scaled).map_err(|e| e.to_string())?);
        ensure(a == b, || format!("instance {i}: {a} vs {b}"))?;
    }
    Ok("100 units".into())
}

fn criterion_5() -> Outcome {
    let mut seen: Vec<Rational> = Vec::new();
    for s in ["1", "2", "1/2", "-1"] {
        let t = TripleDocument::from_json(&melrose_document(s))
            .and_then(|d| d.to_triple())
            .map_err(|e| e.to_string())?;
        let class = classify(&t).map_err(|e| e.to_string())?;
        ensure(class.kind == ClassKind::S1, || format!("s = {s}: class {}", class.kind))?;
        ensure(!in_u(&t).map_err(|e| e.to_string())?, || format!("s = {s}: in U"))?;
        let k = kappa(&t).map_err(|e| e.to_string())?;
        let oracle = oracle_kappa(&t.f, &t.h, 1, &Series::one(4, 8));
        ensure(k == oracle, || format!("s = {s}: κ {k} vs oracle {oracle}"))?;
        ensure(!seen.contains(&k), || format!("s = {s}: κ {k} repeats"))?;
        seen.push(k);
    }
    let shown: Vec<String> = seen.iter().map(|k| k.to_string()).collect();
    Ok(format!("κ = {}", shown.join(", ")))
}

fn criterion_6() -> Outcome {
    for seed in 0..50 {
        let t = generate(4, 8, seed, InstanceClass::S1, true).triple;
        let class = classify(&t).map_err(|e| e.to_string())?;
        let by_bracket = !class.hfh.is_zero();
        let s = straighten(&t).map_err(|e| format!("seed {seed}: {e}"))?;
        let hat = &s.split.omega_hat;
        let dy = Form::basis(&[0], hat.nvars(), hat.order());
        let by_form = !hat.wedge_power(t.n).wedge(&dy).at_zero().is_zero();
        ensure(by_bracket == by_form, || format!("seed {seed}: bracket {by_bracket}, form {by_form}"))?;
    }
    Ok("50/50 agree".into())
}

fn criterion_7() -> Outcome {
    for seed in 0..100 {
        let t = generate(2, 8, seed, InstanceClass::S1, true).triple;
        let w = t.omega.coeff(&[0, 1]);
        let fh = oracle_bracket(&t.f, &t.h, 0, &w);
        let hfh = oracle_bracket(&t.h, &fh, 0, &w).at_zero();
        ensure(!hfh.is_zero(), || format!("seed {seed}: {{h,{{f,h}}}}(0) = 0"))?;
        let df_dh = Form::function(&t.f).d().wedge(&Form::function(&t.h).d());
        ensure(df_dh.at_zero().is_zero(), || format!("seed {seed}: (df∧dh)(0) != 0"))?;
    }
    Ok("100/100".into())
}

/// `ω = φ(y + x²) dx∧dy`, `h = y`, `f = y + x²`.
fn parabola_triple(phi: &Series, order: u32) -> Triple {
    let x = Series::var(2, order, 0);
    let y = Series::var(2, order, 1);
    let u = &y + &(&x * &x);
    let w = phi.compose(&PointMap::new(2, vec![u.clone()]).unwrap()).unwrap();
    Triple::new(0, Form::term(&[0, 1], &w), y, u).unwrap()
}

fn criterion_8() -> Outcome {
    let order = 8;
    let one = parabola_triple(&Series::one(1, order), order);
    let (nf, cert) = reduce_s1(&one).map_err(|e| e.to_string())?;
    ensure(verify_certificate(&one, &cert).passed(), || "φ = 1: certificate".into())?;
    let o = nf.g.order();
    let minus_y = -&Series::var(1, o, 0);
    ensure(nf.g == minus_y, || format!("φ = 1: g = {:?}", nf.g))?;
    let k = kappa(&one).map_err(|e| e.to_string())?;
    ensure(k == Rational::new(-1, 2), || format!("φ = 1: κ = {k}"))?;

    let mut r = rng(8);
    for i in 0..10 {
        let phi = &Series::constant(1, order, Rational::from_int(1 + i % 3)) + &random_series(&mut r, 1, 4, 1, 3);
        let t = parabola_triple(&phi.with_order(order), order);
        let (nf, cert) = reduce_s1(&t).map_err(|e| format!("unit {i}: {e}"))?;
        ensure(verify_certificate(&t, &cert).passed(), || format!("unit {i}: certificate"))?;
        let k = kappa(&t).map_err(|e| e.to_string())?;
        let oracle = oracle_kappa(&t.f, &t.h, 0, &t.omega.coeff(&[0, 1]));
        let from_g = (&Rational::from_int(2) * &nf.g.coeff(Mono::var(0))).recip().unwrap();
        ensure(k == oracle && k == from_g, || format!("unit {i}: κ {k}, oracle {oracle}, from g {from_g}"))?;
    }
    Ok("g = -y, κ = -1/2; 10 units agree with the oracle".into())
}

fn criterion_9() -> Outcome {
    let mut r = rng(9);
    let cases = 100;
    for i in 0..cases {
        // d² = 0
        let a = random_one_form(&mut r, 4, 6);
        ensure(a.d().d().is_zero(), || format!("d² case {i}"))?;
        let f = random_series(&mut r, 4, 6, 0, 5);
        ensure(Form::function(&f).d().d().is_zero(), || format!("d² on functions, case {i}"))?;

        // pullback commutes with d
        let phi = random_diffeomorphism(&mut r, 4, 6);
        let lhs = a.pullback(&phi).unwrap().d();
        let rhs = a.d().pullback(&phi).unwrap();
        let o = lhs.order().min(rhs.order());
        ensure(lhs.truncate(o) == rhs.truncate(o), || format!("naturality case {i}"))?;

        // Poisson antisymmetry and Jacobi
        let w = Layout::new(1).standard_form(6);
        let (f, g, h) = (
            random_series(&mut r, 4, 6, 1, 4),
            random_series(&mut r, 4, 6, 1, 4),
            random_series(&mut r, 4, 6, 1, 4),
        );
        let br = |a: &Series, b: &Series| poisson(a, b, &w).unwrap();
        ensure((&br(&f, &g) + &br(&g, &f)).is_zero(), || format!("antisymmetry case {i}"))?;
        let jacobi = &(&br(&f, &br(&g, &h)) + &br(&g, &br(&h, &f))) + &br(&h, &br(&f, &g));
        ensure(jacobi.is_zero(), || format!("Jacobi case {i}"))?;

        // inverse round trips
        let dim = [2, 4, 6][i % 3];
        let m = random_diffeomorphism(&mut r, dim, 5);
        let inv = m.invert().unwrap();
        ensure(m.compose(&inv).unwrap().is_identity(), || format!("inverse case {i}"))?;
        ensure(inv.compose(&m).unwrap().is_identity(), || format!("inverse case {i}"))?;

        // Weierstrass back-multiplication
        let x = Series::var(3, 8, 0);
        let c = Rational::from_int(1 + (i % 3) as i64);
        let mut h = random_series(&mut r, 3, 8, 2, 6);
        h = h.filter(|m| m != Mono::var(0).pow(2));
        h.add_term(Mono::var(0).pow(2), &c);
        h.add_term(Mono::var(1), &Rational::one());
        let (unit, a1, b1) = weierstrass_prepare(&h, 0).unwrap();
        let back = &unit * &(&(&(&x * &x) + &(&a1 * &x)) + &b1);
        ensure(back == h.truncate(back.order()), || format!("Weierstrass case {i}"))?;

        // d K = id on closed forms
        let beta = random_one_form(&mut r, 3, 5).d();
        let k = beta.poincare_homotopy().unwrap();
        ensure(k.d().truncate(beta.order()) == beta, || format!("homotopy case {i}"))?;
    }
    Ok(format!("{cases} cases for each identity"))
}

fn write_temp(name: &str, body: &str) -> String {
    let path = std::env::temp_dir().join(format!("semispace-acceptance-{}-{name}", std::process::id()));
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn criterion_10() -> Outcome {
    let mut tampered = 0;
    for seed in 0..10 {
        let t = exact(&generate(2 + 2 * (seed as usize % 2), 8, seed, InstanceClass::S1, true).triple, 8);
        let (_, cert) = reduce_s1(&t).map_err(|e| e.to_string())?;
        ensure(verify_certificate(&t, &cert).passed(), || format!("seed {seed}: untampered certificate fails"))?;

        let mut bad = cert.clone();
        bad.unit = &bad.unit + &Series::monomial(bad.unit.nvars(), bad.unit.order(), Mono::var(1), Rational::one());
        ensure(!verify_certificate(&t, &bad).passed(), || format!("seed {seed}: tampered unit passes"))?;

        let mut comps = cert.psi_inv.components().to_vec();
        let c = &comps[1];
        comps[1] = c + &Series::monomial(c.nvars(), c.order(), Mono::var(0).pow(2), Rational::one());
        let mut bad = cert.clone();
        bad.psi_inv = PointMap::new(cert.psi_inv.domain(), comps).unwrap();
        ensure(!verify_certificate(&t, &bad).passed(), || format!("seed {seed}: tampered map passes"))?;
        tampered += 2;
    }

    let mut exits = Vec::new();
    for seed in 0..3 {
        let doc = cli::run(["semispace", "gen", "--dim", "4", "--class", "outside", "--seed", &seed.to_string()]);
        let path = write_temp(&format!("outside-{seed}.json"), &doc.stdout);
        exits.push(("outside", cli::run(["semispace", "reduce", &path]).code));
        exits.push(("outside compare", cli::run(["semispace", "compare", &path, &path]).code));
        let _ = std::fs::remove_file(path);
    }
    for s in ["1", "2", "1/2", "-1"] {
        let path = write_temp("melrose.json", &melrose_document(s));
        exits.push(("melrose", cli::run(["semispace", "reduce", &path]).code));
        let _ = std::fs::remove_file(path);
    }
    for (what, code) in &exits {
        ensure(*code == EXIT_PRECONDITION, || format!("{what}: exit {code}"))?;
    }
    Ok(format!("{tampered} tampered certificates rejected, {} exits with code 3", exits.len()))
}

fn guarded<T>(f: impl FnOnce() -> Result<T, String>) -> Result<T, String> {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    })
}

fn main() {
    let started = Instant::now();
    let (one, three) = guarded(|| Ok(criterion_1_and_3())).unwrap_or_else(|e| (Err(e.clone()), Err(e)));
    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "round-trip invariant recovery", one),
        (2, "non-singular reduction", guarded(criterion_2)),
        (3, "κ = 1/(2g'(0))", three),
        (4, "κ independent of the boundary unit", guarded(criterion_4)),
        (5, "Melrose example", guarded(criterion_5)),
        (6, "bracket and form tests agree", guarded(criterion_6)),
        (7, "dimension-2 implications", guarded(criterion_7)),
        (8, "parabola normal form", guarded(criterion_8)),
        (9, "kernel identities", guarded(criterion_9)),
        (10, "negative controls", guarded(criterion_10)),
    ];
    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed in {:.1} s",
        results.len() - failed,
        results.len(),
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
