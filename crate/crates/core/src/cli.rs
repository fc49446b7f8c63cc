//! Command-line front end.
//!
//! Every command returns an [`Outcome`] instead of printing, so the binary
//! and the tests share one code path. Stdout is byte-deterministic for fixed
//! inputs; timing goes to stderr.

use std::ffi::OsString;
use std::io::Read;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::classify::{classify, kappa, ClassKind, ClassifyError};
use crate::expr::{format_form, format_point_map, format_series, InvariantsDocument, TripleDocument};
use crate::generate::{generate, InstanceClass};
use crate::jets::Mono;
use crate::rational::Rational;
use crate::reduce::{
    invariants_equal, reduce_nonsingular, reduce_s1, verify_certificate, ReduceError,
    ReductionCertificate, S1NormalForm,
};
use crate::symplectic::Triple;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_OUTSIDE: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "semispace", version, about = "Normal forms of functions on a symplectic space with boundary")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value = "text")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify a triple as NonSingular, S1 or Outside.
    Classify {
        /// Triple document, or `-` for stdin.
        file: String,
    },
    /// Reduce a triple to its normal form and verify the result.
    Reduce {
        file: String,
        /// Working order. Defaults to the document order plus 2n.
        #[arg(long)]
        order: Option<u32>,
        /// Also print the coordinate change and the unit.
        #[arg(long)]
        emit_certificate: bool,
    },
    /// Print the invariant κ of an S1 triple.
    Kappa { file: String },
    /// Decide whether two S1 triples have the same invariants.
    Compare {
        first: String,
        second: String,
        #[arg(long)]
        order: Option<u32>,
    },
    /// Generate a test instance.
    Gen {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 8)]
        order: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "s1")]
        class: InstanceClass,
        /// Compose with a random coordinate change and boundary unit.
        #[arg(long)]
        scramble: bool,
        /// Write the document here, and the source invariants next to it
        /// as `<PATH>.source.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Round-trip generated instances through reduction and check them.
    Verify {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 8)]
        order: u32,
        #[arg(long, default_value_t = 10)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Exit code and captured output of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn input_error(msg: impl std::fmt::Display) -> Outcome {
        Outcome {
            code: EXIT_INPUT,
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
        }
    }
}

/// Ordered key/value payload, rendered as `key: value` lines or as JSON.
struct Report {
    format: Format,
    fields: Vec<(String, Value)>,
}

impl Report {
    fn new(format: Format, command: &str, digest: Option<&str>) -> Report {
        let mut r = Report {
            format,
            fields: Vec::new(),
        };
        r.put("command", command);
        if let Some(d) = digest {
            r.put("input_sha256", d);
        }
        r
    }

    fn put(&mut self, key: &str, value: impl Into<Value>) {
        self.fields.push((key.to_string(), value.into()));
    }

    fn render(&self) -> String {
        match self.format {
            Format::Json => {
                let map: Map<String, Value> = self.fields.iter().cloned().collect();
                let mut s = serde_json::to_string_pretty(&Value::Object(map)).expect("serializable");
                s.push('\n');
                s
            }
            Format::Text => {
                let mut out = String::new();
                for (k, v) in &self.fields {
                    render_text(&mut out, k, v);
                }
                out
            }
        }
    }

    fn finish(&self, code: i32, started: Instant) -> Outcome {
        Outcome {
            code,
            stdout: self.render(),
            stderr: format!("time: {:.3} ms\n", started.elapsed().as_secs_f64() * 1e3),
        }
    }
}

fn render_text(out: &mut String, key: &str, v: &Value) {
    match v {
        Value::String(s) => out.push_str(&format!("{key}: {s}\n")),
        Value::Object(m) => {
            for (k, v) in m {
                render_text(out, &format!("{key}.{k}"), v);
            }
        }
        Value::Null => {}
        other => out.push_str(&format!("{key}: {other}\n")),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code: EXIT_INPUT,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    code: EXIT_OK,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    let echo = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join(" ");
    let fmt = cli.format;
    match cli.command {
        Command::Classify { file } => cmd_classify(&echo, fmt, &file),
        Command::Reduce {
            file,
            order,
            emit_certificate,
        } => cmd_reduce(&echo, fmt, &file, order, emit_certificate),
        Command::Kappa { file } => cmd_kappa(&echo, fmt, &file),
        Command::Compare { first, second, order } => cmd_compare(&echo, fmt, &first, &second, order),
        Command::Gen {
            dim,
            order,
            seed,
            class,
            scramble,
            out,
        } => cmd_gen(&echo, fmt, dim, order, seed, class, scramble, out),
        Command::Verify {
            dim,
            order,
            count,
            seed,
        } => cmd_verify(&echo, fmt, dim, order, count, seed),
    }
}

fn read_input(file: &str) -> Result<String, String> {
    if file == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| format!("stdin: {e}"))?;
        Ok(s)
    } else {
        std::fs::read_to_string(file).map_err(|e| format!("{file}: {e}"))
    }
}

fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Reads and validates a document. Returns the triple, the document order
/// and the input digest.
fn load(file: &str) -> Result<(Triple, u32, String), String> {
    let text = read_input(file)?;
    let doc = TripleDocument::from_json(&text).map_err(|e| format!("{file}: {e}"))?;
    let t = doc.to_triple().map_err(|e| format!("{file}: {e}"))?;
    Ok((t, doc.order, digest(&text)))
}

/// Largest accepted `--order` for a dimension.
fn max_order(dim: usize) -> Option<u32> {
    match dim {
        2 => Some(24),
        4 => Some(16),
        6 => Some(12),
        8 => Some(8),
        _ => None,
    }
}

fn check_dim_order(dim: usize, order: u32) -> Result<(), String> {
    let max = max_order(dim).ok_or_else(|| format!("unsupported dimension {dim} (expected 2, 4, 6 or 8)"))?;
    let min = 4.max(dim as u32);
    if order < min || order > max {
        return Err(format!("order {order} out of range for dimension {dim} ({min}..={max})"));
    }
    Ok(())
}

fn working_order(t: &Triple, doc_order: u32, flag: Option<u32>) -> Result<u32, String> {
    match flag {
        None => Ok(doc_order + 2 * t.n as u32),
        Some(o) => {
            let max = max_order(t.dim()).unwrap_or(8) + 2 * t.n as u32;
            if o == 0 || o > max {
                Err(format!("working order {o} out of range (1..={max})"))
            } else {
                Ok(o)
            }
        }
    }
}

fn classify_error(e: ClassifyError) -> Outcome {
    match e {
        ClassifyError::InvalidTriple(m) => Outcome::input_error(m),
        ClassifyError::NotS1(kind) => Outcome {
            code: EXIT_PRECONDITION,
            stdout: String::new(),
            stderr: format!("error: triple is not in S1 (class {kind})\n"),
        },
        other => Outcome {
            code: EXIT_FAILURE,
            stdout: String::new(),
            stderr: format!("error: {other}\n"),
        },
    }
}

fn reduce_error_code(e: &ReduceError) -> i32 {
    match e {
        ReduceError::InvalidTriple(_) => EXIT_INPUT,
        ReduceError::NotS1(_) | ReduceError::NotNonSingular(_) | ReduceError::OutsideU => EXIT_PRECONDITION,
        _ => EXIT_FAILURE,
    }
}

fn cmd_classify(echo: &str, fmt: Format, file: &str) -> Outcome {
    let started = Instant::now();
    let (t, _, dig) = match load(file) {
        Ok(x) => x,
        Err(e) => return Outcome::input_error(e),
    };
    let class = match classify(&t) {
        Ok(c) => c,
        Err(e) => return classify_error(e),
    };
    let mut r = Report::new(fmt, echo, Some(&dig));
    r.put("class", class.kind.to_string());
    r.put(
        "witnesses",
        json!({
            "fh": class.fh.to_string(),
            "ffh": class.ffh.to_string(),
            "hfh": class.hfh.to_string(),
            "df_dh_nonzero": class.df_dh_nonzero,
        }),
    );
    let code = if class.kind == ClassKind::Outside {
        EXIT_OUTSIDE
    } else {
        EXIT_OK
    };
    r.finish(code, started)
}

fn certificate_value(cert: &ReductionCertificate) -> Value {
    json!({
        "psi": format_point_map(&cert.psi),
        "psi_inv": format_point_map(&cert.psi_inv),
        "unit": format_series(&cert.unit),
        "normal_omega": format_form(&cert.normal.omega),
        "normal_h": format_series(&cert.normal.h),
        "normal_f": format_series(&cert.normal.f),
    })
}

fn put_invariants(r: &mut Report, nf: &S1NormalForm) {
    let doc = InvariantsDocument::from_normal_form(nf);
    r.put("g", doc.g);
    r.put("g_order", doc.g_order);
    if let (Some(mu), Some(o)) = (doc.mu, doc.mu_order) {
        r.put("mu", mu);
        r.put("mu_order", o);
    }
    if let (Some(phi), Some(o)) = (doc.phi, doc.phi_order) {
        r.put("phi", phi);
        r.put("phi_order", o);
    }
}

/// `1/(2 g'(0))`.
fn kappa_from_g(nf: &S1NormalForm) -> Option<Rational> {
    let slope = nf.g.coeff(Mono::var(0));
    (&Rational::from_int(2) * &slope).recip()
}

fn cmd_reduce(echo: &str, fmt: Format, file: &str, order: Option<u32>, emit: bool) -> Outcome {
    let started = Instant::now();
    let (t, doc_order, dig) = match load(file) {
        Ok(x) => x,
        Err(e) => return Outcome::input_error(e),
    };
    let w = match working_order(&t, doc_order, order) {
        Ok(w) => w,
        Err(e) => return Outcome::input_error(e),
    };
    let class = match classify(&t) {
        Ok(c) => c.kind,
        Err(e) => return classify_error(e),
    };
    let t = t.as_exact(w);
    let mut r = Report::new(fmt, echo, Some(&dig));
    r.put("class", class.to_string());
    r.put("working_order", w);
    let fail = |r: &mut Report, e: ReduceError| {
        r.put("error", e.to_string());
        r.finish(reduce_error_code(&e), started)
    };
    let (nf, cert) = match class {
        ClassKind::Outside => return fail(&mut r, ReduceError::NotS1(ClassKind::Outside)),
        ClassKind::NonSingular => match reduce_nonsingular(&t) {
            Ok(c) => (None, c),
            Err(e) => return fail(&mut r, e),
        },
        ClassKind::S1 => match reduce_s1(&t) {
            Ok((nf, c)) => (Some(nf), c),
            Err(e) => return fail(&mut r, e),
        },
    };
    let report = verify_certificate(&t, &cert);
    if let Some(failure) = &report.failure {
        r.put("certificate", format!("FAILED: {failure}"));
        return r.finish(EXIT_FAILURE, started);
    }
    r.put("certificate", "verified");
    r.put("trusted_order", cert.trusted_order);
    match &nf {
        None => {
            r.put("normal_omega", format_form(&cert.normal.omega));
            r.put("normal_h", format_series(&cert.normal.h));
            r.put("normal_f", format_series(&cert.normal.f));
        }
        Some(nf) => {
            put_invariants(&mut r, nf);
            if let Some(k) = kappa_from_g(nf) {
                r.put("kappa", k.to_string());
            }
        }
    }
    if emit {
        r.put("certificate_maps", certificate_value(&cert));
    }
    r.finish(EXIT_OK, started)
}

fn cmd_kappa(echo: &str, fmt: Format, file: &str) -> Outcome {
    let started = Instant::now();
    let (t, _, dig) = match load(file) {
        Ok(x) => x,
        Err(e) => return Outcome::input_error(e),
    };
    match kappa(&t) {
        Ok(k) => {
            let mut r = Report::new(fmt, echo, Some(&dig));
            r.put("kappa", k.to_string());
            r.finish(EXIT_OK, started)
        }
        Err(e) => classify_error(e),
    }
}

fn reduce_for_compare(file: &str, order: Option<u32>) -> Result<(S1NormalForm, String), Outcome> {
    let (t, doc_order, dig) = load(file).map_err(Outcome::input_error)?;
    let w = working_order(&t, doc_order, order).map_err(Outcome::input_error)?;
    let t = t.as_exact(w);
    let stop = |e: ReduceError| Outcome {
        code: reduce_error_code(&e),
        stdout: String::new(),
        stderr: format!("error: {file}: {e}\n"),
    };
    let (nf, cert) = reduce_s1(&t).map_err(stop)?;
    if let Some(f) = verify_certificate(&t, &cert).failure {
        return Err(Outcome {
            code: EXIT_FAILURE,
            stdout: String::new(),
            stderr: format!("error: {file}: certificate failed: {f}\n"),
        });
    }
    Ok((nf, dig))
}

fn cmd_compare(echo: &str, fmt: Format, first: &str, second: &str, order: Option<u32>) -> Outcome {
    let started = Instant::now();
    // Dimension mismatch is an input error, so check it before reducing.
    let dims = [first, second].map(|f| load(f).map(|(t, _, _)| t.dim()));
    match &dims {
        [Err(e), _] | [_, Err(e)] => return Outcome::input_error(e),
        [Ok(a), Ok(b)] if a != b => {
            return Outcome::input_error(format!("dimension mismatch: {a} vs {b}"));
        }
        _ => {}
    }
    let (a, da) = match reduce_for_compare(first, order) {
        Ok(x) => x,
        Err(o) => return o,
    };
    let (b, db) = match reduce_for_compare(second, order) {
        Ok(x) => x,
        Err(o) => return o,
    };
    let cap = a.trusted_order().min(b.trusted_order());
    let equal = invariants_equal(&a, &b, cap);
    let mut r = Report::new(fmt, echo, None);
    r.put("input_sha256", json!([da, db]));
    r.put("compared_to_order", cap);
    r.put("verdict", if equal { "equal" } else { "not equal" });
    r.finish(if equal { EXIT_OK } else { EXIT_FAILURE }, started)
}

fn class_name(c: InstanceClass) -> &'static str {
    match c {
        InstanceClass::S1 => "s1",
        InstanceClass::NonSingular => "nonsingular",
        InstanceClass::Outside => "outside",
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    echo: &str,
    fmt: Format,
    dim: usize,
    order: u32,
    seed: u64,
    class: InstanceClass,
    scramble: bool,
    out: Option<PathBuf>,
) -> Outcome {
    let started = Instant::now();
    if let Err(e) = check_dim_order(dim, order) {
        return Outcome::input_error(e);
    }
    let inst = generate(dim, order, seed, class, scramble);
    let mut doc = TripleDocument::from_triple(&inst.triple, order);
    doc.label = Some(format!(
        "{} dim {dim} order {order}{}",
        class_name(class),
        if scramble { " scrambled" } else { "" }
    ));
    doc.seed = Some(seed);
    let text = doc.to_json() + "\n";
    let Some(path) = out else {
        return Outcome {
            code: EXIT_OK,
            stdout: text,
            stderr: format!("time: {:.3} ms\n", started.elapsed().as_secs_f64() * 1e3),
        };
    };
    let mut r = Report::new(fmt, echo, None);
    if let Err(e) = std::fs::write(&path, &text) {
        return Outcome::input_error(format!("{}: {e}", path.display()));
    }
    r.put("document", path.display().to_string());
    r.put("document_sha256", digest(&text));
    if let Some(src) = &inst.source {
        let mut side = path.clone().into_os_string();
        side.push(".source.json");
        let side = PathBuf::from(side);
        let body = serde_json::to_string_pretty(&InvariantsDocument::from_normal_form(src)).expect("serializable") + "\n";
        if let Err(e) = std::fs::write(&side, body) {
            return Outcome::input_error(format!("{}: {e}", side.display()));
        }
        r.put("source", side.display().to_string());
    }
    r.finish(EXIT_OK, started)
}

/// Result of one round trip in `verify`.
#[derive(Debug, Clone)]
pub struct RoundTrip {
    pub seed: u64,
    pub certificate: bool,
    pub invariants: bool,
    pub kappa: bool,
    pub trusted_order: Option<u32>,
    pub error: Option<String>,
    pub document: String,
}

impl RoundTrip {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.certificate && self.invariants && self.kappa
    }
}

/// Generates a scrambled S1 instance, sends it through its JSON document,
/// reduces it at order `N + 2n` and checks the certificate, the recovered
/// invariants at `N - 2` and κ against `1/(2 g'(0))`.
pub fn round_trip(dim: usize, order: u32, seed: u64) -> RoundTrip {
    let inst = generate(dim, order, seed, InstanceClass::S1, true);
    let source = inst.source.expect("S1 instances carry their invariants");
    let mut doc = TripleDocument::from_triple(&inst.triple, order);
    doc.seed = Some(seed);
    let document = doc.to_json();
    let mut rt = RoundTrip {
        seed,
        certificate: false,
        invariants: false,
        kappa: false,
        trusted_order: None,
        error: None,
        document: document.clone(),
    };
    let parsed = TripleDocument::from_json(&document).and_then(|d| d.to_triple());
    let t = match parsed {
        Ok(t) => t.as_exact(order + dim as u32 - 2),
        Err(e) => {
            rt.error = Some(e.to_string());
            return rt;
        }
    };
    let (nf, cert) = match reduce_s1(&t) {
        Ok(x) => x,
        Err(e) => {
            rt.error = Some(e.to_string());
            return rt;
        }
    };
    rt.trusted_order = Some(cert.trusted_order.min(nf.trusted_order()));
    rt.certificate = verify_certificate(&t, &cert).passed();
    let cap = order - 2;
    rt.invariants = nf.trusted_order() >= cap && invariants_equal(&nf, &source, cap);
    rt.kappa = match (kappa(&t), kappa_from_g(&nf)) {
        (Ok(a), Some(b)) => a == b,
        _ => false,
    };
    rt
}

fn cmd_verify(echo: &str, fmt: Format, dim: usize, order: u32, count: u64, seed: u64) -> Outcome {
    let started = Instant::now();
    if let Err(e) = check_dim_order(dim, order) {
        return Outcome::input_error(e);
    }
    let mark = |b: bool| if b { "ok" } else { "FAIL" };
    let mut rows = Vec::new();
    let mut table = String::from("seed  certificate  invariants  kappa  trusted\n");
    let mut first_failure: Option<RoundTrip> = None;
    let mut passed = 0;
    for s in seed..seed + count {
        let rt = round_trip(dim, order, s);
        let trusted = rt.trusted_order.map_or("-".to_string(), |o| o.to_string());
        table.push_str(&format!(
            "{:<5} {:<12} {:<11} {:<6} {}\n",
            s,
            mark(rt.certificate),
            mark(rt.invariants),
            mark(rt.kappa),
            trusted
        ));
        rows.push(json!({
            "seed": s,
            "certificate": rt.certificate,
            "invariants": rt.invariants,
            "kappa": rt.kappa,
            "trusted_order": rt.trusted_order,
            "error": rt.error,
        }));
        if rt.passed() {
            passed += 1;
        } else if first_failure.is_none() {
            first_failure = Some(rt);
        }
    }
    let mut r = Report::new(fmt, echo, None);
    r.put("dim", dim);
    r.put("order", order);
    r.put("passed", format!("{passed}/{count}"));
    match fmt {
        Format::Json => r.put("runs", Value::Array(rows)),
        Format::Text => r.put("table", format!("\n{}", table.trim_end())),
    }
    if let Some(f) = &first_failure {
        if let Some(e) = &f.error {
            r.put("first_failure_error", e.clone());
        }
        r.put("first_counterexample", f.document.clone());
    }
    r.finish(if first_failure.is_some() { EXIT_FAILURE } else { EXIT_OK }, started)
}
