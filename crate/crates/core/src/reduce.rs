//! Reductions of triples to normal form, each returned with a coordinate
//! change that can be checked independently.
//!
//! Every stage works on a [`Chart`]: the triple written in the current
//! coordinates plus the map from those coordinates back to the original ones.

use crate::classify::{classify, ClassKind};
use crate::forms::{formal_flow, Form, FormError, VectorField};
use crate::jets::{divide_by_parabola, weierstrass_prepare, Mono, PointMap, Series};
use crate::linalg::{symplectic_basis, Matrix};
use crate::rational::Rational;
use crate::symplectic::{hamiltonian_field, nondegenerate, solve_series_system, Layout, Triple};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReduceError {
    #[error("invalid triple: {0}")]
    InvalidTriple(String),
    #[error("triple is not in S1 (class {0})")]
    NotS1(ClassKind),
    #[error("triple is not nonsingular (class {0})")]
    NotNonSingular(ClassKind),
    #[error("triple lies outside the open set U")]
    OutsideU,
    #[error("{stage}: precondition violated: {msg}")]
    PreconditionViolated { stage: &'static str, msg: String },
    #[error("{stage}: structure check failed: {msg}")]
    StructureViolation { stage: &'static str, msg: String },
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        source: FormError,
    },
}

pub type Result<T> = std::result::Result<T, ReduceError>;

trait AtStage<T> {
    fn at(self, stage: &'static str) -> Result<T>;
}

impl<T, E: Into<FormError>> AtStage<T> for std::result::Result<T, E> {
    fn at(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| ReduceError::Stage {
            stage,
            source: e.into(),
        })
    }
}

fn precondition(stage: &'static str, msg: impl Into<String>) -> ReduceError {
    ReduceError::PreconditionViolated {
        stage,
        msg: msg.into(),
    }
}

fn structure(stage: &'static str, msg: impl Into<String>) -> ReduceError {
    ReduceError::StructureViolation {
        stage,
        msg: msg.into(),
    }
}

/// A diffeomorphism germ given in both directions. `forward` maps old
/// coordinates to new ones, `backward` new to old.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinateChange {
    pub forward: PointMap,
    pub backward: PointMap,
}

impl CoordinateChange {
    fn from_backward(backward: PointMap, stage: &'static str) -> Result<CoordinateChange> {
        let forward = backward.invert().at(stage)?;
        Ok(CoordinateChange { forward, backward })
    }

    fn from_forward(forward: PointMap, stage: &'static str) -> Result<CoordinateChange> {
        let backward = forward.invert().at(stage)?;
        Ok(CoordinateChange { forward, backward })
    }
}

/// Adds an untouched leading coordinate `x` to a map.
fn extend_with_x(map: &PointMap) -> PointMap {
    let dim = map.domain() + 1;
    let mut comps = vec![Series::var(dim, map.order(), 0)];
    comps.extend(map.components().iter().map(|c| c.insert_var(0)));
    PointMap::new(dim, comps).expect("origin-preserving")
}

/// Straightens a nonvanishing field: in the new coordinates it is `∂/∂x`.
///
/// A constant linear change first sends `Z(0)` to `e_0`; the flow of the
/// transformed field from the slice `{x = 0}` then gives the chart.
pub fn flow_box(z: &VectorField) -> Result<CoordinateChange> {
    CoordinateChange::from_backward(flow_box_backward(z)?, "flow_box")
}

/// The new-to-old half of [`flow_box`].
fn flow_box_backward(z: &VectorField) -> Result<PointMap> {
    const STAGE: &str = "flow_box";
    let n = z.nvars();
    let z0 = z.at_zero();
    let k = z0
        .iter()
        .position(|c| !c.is_zero())
        .ok_or_else(|| precondition(STAGE, "field vanishes at the origin"))?;
    let mut to_old = Matrix::identity(n);
    for (i, c) in z0.iter().enumerate() {
        to_old[(i, 0)] = c.clone();
    }
    if k != 0 {
        to_old[(k, k)] = Rational::zero();
        to_old[(0, k)] = Rational::one();
    }
    let to_new = to_old.inverse().expect("columns are independent");
    let order = z.order();
    let lin_back = PointMap::linear(&to_old, order + 1);
    let pulled = z
        .components()
        .iter()
        .map(|c| c.compose(&lin_back))
        .collect::<std::result::Result<Vec<_>, _>>()
        .at(STAGE)?;
    let transformed = (0..n)
        .map(|i| {
            (0..n).fold(Series::zero(n, order), |acc, j| {
                &acc + &pulled[j].scale(&to_new[(i, j)])
            })
        })
        .collect();
    let flow = formal_flow(&VectorField::new(transformed), 0).at(STAGE)?;
    lin_back.compose(&flow).at(STAGE)
}

/// Brings a boundary function with a fold along `∂/∂x` to `Q·(y + x²)`.
///
/// From `h = u·(x² + a x + b)` the new coordinates are `X = x + a/2` and
/// `Y = b − a²/4`. When `Y` has no linear `y` term, the old `y` moves to the
/// slot of the first variable `Y` does depend on. Returns the change and `Q`
/// in the new coordinates.
pub fn straighten_tangency(h: &Series) -> Result<(CoordinateChange, Series)> {
    const STAGE: &str = "straighten_tangency";
    let n = h.nvars();
    let order = h.order();
    let (_, a, b) = weierstrass_prepare(h, 0).at(STAGE)?;
    let c = &b - &(&a * &a).scale(&Rational::new(1, 4));
    let k = (1..n)
        .find(|&j| !c.coeff(Mono::var(j)).is_zero())
        .ok_or_else(|| precondition(STAGE, "the reduced boundary function has zero differential"))?;
    let comps = (0..n)
        .map(|i| match i {
            0 => &Series::var(n, order, 0) + &a.scale(&Rational::new(1, 2)),
            1 => c.clone(),
            i if i == k => Series::var(n, order, 1),
            i => Series::var(n, order, i),
        })
        .collect();
    let change = CoordinateChange::from_forward(PointMap::new(n, comps).at(STAGE)?, STAGE)?;
    let h_new = h.compose(&change.backward).at(STAGE)?;
    let unit = divide_by_parabola(&h_new, 0, 1).at(STAGE)?;
    if unit.at_zero().is_zero() {
        return Err(structure(STAGE, "quotient by y + x^2 is not a unit"));
    }
    Ok((change, unit))
}

/// `ω = dx ∧ dF + ω̂` with `F` and `ω̂` living on `(y, p, q)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitForm {
    pub big_f: Series,
    pub omega_hat: Form,
}

/// Splits `ω` once `f` is the Hamiltonian of `∂/∂x`.
pub fn split(omega: &Form, f: &Series, n: usize) -> Result<SplitForm> {
    const STAGE: &str = "split";
    let dim = omega.nvars();
    if !f.partial(0).at(STAGE)?.is_zero() {
        return Err(precondition(STAGE, "f depends on x"));
    }
    let big_f = f.remove_var(0).at(STAGE)?;
    let dx = Form::basis(&[0], dim, omega.order());
    let rest = omega - &dx.wedge(&Form::function(f).d());
    let omega_hat = rest
        .remove_var(0)
        .map_err(|_| structure(STAGE, "residual form involves x or dx"))?;
    if !omega_hat.d().is_zero() {
        return Err(structure(STAGE, "residual form is not closed"));
    }
    if n > 0 && !nondegenerate(&omega_hat, n) {
        return Err(structure(STAGE, "residual form is degenerate"));
    }
    Ok(SplitForm { big_f, omega_hat })
}

/// Darboux chart for a closed 2-form `ω̂` of rank `2n` on `(y, p, q)` that is
/// transverse to `y`: afterwards `ω̂ = Σ dp_i ∧ dq_i` and `y` is unchanged.
pub fn odd_darboux(omega_hat: &Form, n: usize) -> Result<CoordinateChange> {
    CoordinateChange::from_backward(odd_darboux_backward(omega_hat, n)?, "odd_darboux")
}

/// The new-to-old half of [`odd_darboux`].
fn odd_darboux_backward(omega_hat: &Form, n: usize) -> Result<PointMap> {
    const STAGE: &str = "odd_darboux";
    let m = 2 * n + 1;
    let order = omega_hat.order();
    if n == 0 {
        return Ok(PointMap::identity(m, order + 1));
    }
    if !omega_hat.d().is_zero() {
        return Err(precondition(STAGE, "form is not closed"));
    }
    let dy = Form::basis(&[0], m, order);
    if omega_hat.at_zero().wedge_power(n).wedge(&dy).is_zero() {
        return Err(precondition(STAGE, "form is not transverse to y"));
    }
    // Kernel field V = ∂y + Σ v_i ∂_i: solve B v = W[0][1..] on the (p, q) block.
    let w = omega_hat.matrix();
    let block: Vec<Vec<Series>> = (1..m).map(|j| w[j][1..].to_vec()).collect();
    let rhs: Vec<Series> = (1..m).map(|j| w[0][j].clone()).collect();
    let v = solve_series_system(&block, &rhs)
        .ok_or_else(|| structure(STAGE, "(p, q) block is singular"))?;
    let mut comps = vec![Series::one(m, v.iter().map(Series::order).min().unwrap())];
    comps.extend(v);
    let kernel = flow_box_backward(&VectorField::new(comps))?;
    let straightened = omega_hat.pullback(&kernel).at(STAGE)?;
    let mu = straightened
        .remove_var(0)
        .map_err(|_| structure(STAGE, "form still involves y after flow-boxing its kernel"))?;

    let m0 = Matrix::from_rows(
        mu.matrix()
            .iter()
            .map(|row| row.iter().map(Series::at_zero).collect())
            .collect(),
    );
    let basis = symplectic_basis(&m0).ok_or_else(|| structure(STAGE, "degenerate (p, q) form"))?;
    let linear = PointMap::linear(&basis, mu.order() + 1);
    let mu_std = mu.pullback(&linear).at(STAGE)?;
    let rho = moser(&mu_std)?;
    let sub = linear.compose(&rho).at(STAGE)?;
    let backward = kernel.compose(&extend_with_x(&sub)).at(STAGE)?;
    if *backward.component(0) != Series::var(m, backward.order(), 0) {
        return Err(structure(STAGE, "y is not preserved"));
    }
    Ok(backward)
}

/// Brings `μ` with `μ(0) = J` to `J`: returns `ρ` (new to old) with
/// `ρ*μ = J`.
///
/// This is Moser's argument taken one degree at a time. If the lowest part
/// of `μ − J` is `E` with coefficients of degree `d`, then `E = dβ` with
/// `β = K(E)`, and the field `X` with `X ⌟ J = −β` gives `(id + X)*μ`
/// agreeing with `J` through degree `d`.
fn moser(mu: &Form) -> Result<PointMap> {
    const STAGE: &str = "moser";
    let m = mu.nvars();
    let k = m / 2;
    let order = mu.order();
    let pairs: Vec<(usize, usize)> = (0..k).map(|i| (i, k + i)).collect();
    let j_form = Form::darboux(&pairs, m, order);
    let mut current = mu.clone();
    let mut rho = PointMap::identity(m, order + 1);
    for d in 1..=order {
        let lowest = (&current - &j_form)
            .terms()
            .fold(Form::zero(2, m, order), |acc, (idx, c)| {
                &acc + &Form::term(idx, &c.homogeneous(d))
            });
        if lowest.is_zero() {
            continue;
        }
        let beta = lowest.poincare_homotopy().at(STAGE)?;
        // X ⌟ J = Σ (X_p dq − X_q dp), so X = (−β_q, β_p).
        let comps = (0..m)
            .map(|i| {
                let shift = if i < k {
                    -&beta.coeff(&[k + i])
                } else {
                    beta.coeff(&[i - k])
                };
                &Series::var(m, order + 1, i) + &shift.with_order(order + 1)
            })
            .collect();
        let step = PointMap::new(m, comps).at(STAGE)?;
        current = current.pullback(&step).at(STAGE)?;
        rho = rho.compose(&step).at(STAGE)?;
    }
    if current != j_form.truncate(current.order()) {
        return Err(structure(STAGE, "pulled-back form is not standard"));
    }
    Ok(rho)
}

/// The functions of a triple in the current coordinates and the way back to
/// the original ones. The form is pulled back only on demand, in one step
/// from the original coordinates.
#[derive(Debug, Clone)]
struct Chart {
    h: Series,
    f: Series,
    to_original: PointMap,
}

impl Chart {
    fn start(t: &Triple) -> Chart {
        Chart {
            h: t.h.clone(),
            f: t.f.clone(),
            to_original: PointMap::identity(t.dim(), t.order() + 1),
        }
    }

    /// Rewrites the functions in new coordinates given by `backward` (new to
    /// current).
    fn change(&self, backward: &PointMap, stage: &'static str) -> Result<Chart> {
        Ok(Chart {
            h: self.h.compose(backward).at(stage)?,
            f: self.f.compose(backward).at(stage)?,
            to_original: self.to_original.compose(backward).at(stage)?,
        })
    }

    fn omega(&self, t: &Triple, stage: &'static str) -> Result<Form> {
        t.omega.pullback(&self.to_original).at(stage)
    }
}

fn check_class(t: &Triple, want: ClassKind) -> Result<()> {
    let class = classify(t).map_err(|e| ReduceError::InvalidTriple(e.to_string()))?;
    if class.kind == want {
        return Ok(());
    }
    Err(match want {
        ClassKind::S1 => ReduceError::NotS1(class.kind),
        _ => ReduceError::NotNonSingular(class.kind),
    })
}

fn hamiltonian(t: &Triple, stage: &'static str) -> Result<VectorField> {
    hamiltonian_field(&t.f, &t.omega).map_err(|e| precondition(stage, e.to_string()))
}

/// An S1 triple after the flow box and the tangency have been straightened:
/// the field of `f` is `∂/∂x`, `h = Q·(y + x²)` and `ω = dx ∧ dF + ω̂`.
#[derive(Debug, Clone)]
pub struct Straightened {
    pub omega: Form,
    pub h: Series,
    pub f: Series,
    pub unit: Series,
    pub split: SplitForm,
    /// Map from the straightened coordinates to the original ones.
    pub to_original: PointMap,
}

pub fn straighten(t: &Triple) -> Result<Straightened> {
    check_class(t, ClassKind::S1)?;
    let chart = Chart::start(t);
    let boxed = flow_box_backward(&hamiltonian(t, "flow_box")?)?;
    let chart = chart.change(&boxed, "flow_box")?;
    let (tangency, unit) = straighten_tangency(&chart.h)?;
    let chart = chart.change(&tangency.backward, "straighten_tangency")?;
    let omega = chart.omega(t, "split")?;
    let split = split(&omega, &chart.f, t.n)?;
    Ok(Straightened {
        omega,
        h: chart.h,
        f: chart.f,
        unit,
        split,
        to_original: chart.to_original,
    })
}

/// An S1 triple in the chart where `ω = dx ∧ dF + Σ dp_i ∧ dq_i`,
/// `h = Q·(y + x²)` and `f = F(y, p, q)`.
#[derive(Debug, Clone)]
pub struct Prefinal {
    pub n: usize,
    pub big_f: Series,
    chart: Chart,
}

pub fn prefinal(t: &Triple) -> Result<Prefinal> {
    let s = straighten(t)?;
    let mut chart = Chart {
        h: s.h,
        f: s.f,
        to_original: s.to_original,
    };
    let mut big_f = s.split.big_f;
    if t.n > 0 {
        // The Darboux chart leaves x alone, so F is carried along by
        // composition; the certificate re-checks the whole form.
        let darboux = odd_darboux_backward(&s.split.omega_hat, t.n)?;
        chart = chart.change(&extend_with_x(&darboux), "odd_darboux")?;
        big_f = big_f.compose(&darboux).at("odd_darboux")?;
    }
    Ok(Prefinal {
        n: t.n,
        big_f,
        chart,
    })
}

/// The invariants of an S1 triple: `g(y)` with `g(0) = 0`, and for `n ≥ 1`
/// a symplectic form `μ` on `(p, q)` and a remainder `φ(y, p, q)` with
/// `φ(y, 0, 0) = 0`.
///
/// The normal form is `ω = dx ∧ dF + μ`, `h = y + x²`, `f = F` where
/// `F = g(y) + Σ_i (p_i y^{2i-2} + q_i y^{2i-1}) + y^{2n} φ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct S1NormalForm {
    pub n: usize,
    pub g: Series,
    pub mu: Option<Form>,
    pub phi: Option<Series>,
}

impl S1NormalForm {
    /// Smallest trusted order among the invariants.
    pub fn trusted_order(&self) -> u32 {
        let mut o = self.g.order();
        if let Some(mu) = &self.mu {
            o = o.min(mu.order());
        }
        if let Some(phi) = &self.phi {
            o = o.min(phi.order());
        }
        o
    }

    /// `F` on the full space `(x, y, p, q)`.
    pub fn big_f(&self) -> Series {
        let n = self.n;
        let dim = 2 * n + 2;
        let order = self.g.order();
        let mut big_f = self.g.relabel(dim, &[1]);
        if let Some(phi) = &self.phi {
            let layout = Layout::new(n);
            let y = Mono::var(1);
            for i in 1..=n {
                let p = Mono::var(layout.p(i)).mul(y.pow(2 * i as u32 - 2));
                let q = Mono::var(layout.q(i)).mul(y.pow(2 * i as u32 - 1));
                big_f = &big_f + &Series::monomial(dim, order, p, Rational::one());
                big_f = &big_f + &Series::monomial(dim, order, q, Rational::one());
            }
            big_f = &big_f + &phi.insert_var(0).mul_monomial(y.pow(2 * n as u32));
        }
        big_f
    }

    /// The normal-form triple `(dx ∧ dF + μ, y + x², F)`.
    pub fn triple(&self) -> Triple {
        let n = self.n;
        let dim = 2 * n + 2;
        let big_f = self.big_f();
        let order = big_f.order();
        let mut omega = Form::basis(&[0], dim, order).wedge(&Form::function(&big_f).d());
        if let Some(mu) = &self.mu {
            omega = &omega + &mu.insert_var(0).insert_var(0);
        }
        let x = Series::var(dim, order, 0);
        let h = &Series::var(dim, order, 1) + &(&x * &x);
        Triple {
            n,
            omega,
            h,
            f: big_f,
        }
    }
}

/// Coordinate change to a normal form together with the unit relating the
/// boundary functions. `psi` maps original to normal coordinates and
/// `psi_inv` back; in normal coordinates `h ∘ psi_inv = unit · h_normal`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionCertificate {
    pub psi: PointMap,
    pub psi_inv: PointMap,
    pub unit: Series,
    pub normal: Triple,
    pub trusted_order: u32,
}

fn certificate(t: &Triple, chart: &Chart, unit: Series, normal: Triple) -> Result<ReductionCertificate> {
    const STAGE: &str = "certificate";
    let psi_inv = chart.to_original.clone();
    let psi = psi_inv.invert().at(STAGE)?;
    let pulled = t.omega.pullback(&psi_inv).at(STAGE)?;
    if pulled != normal.omega.truncate(pulled.order()).with_order(pulled.order()) {
        return Err(structure(STAGE, "form does not reach its normal form"));
    }
    let trusted_order = [
        pulled.order(),
        normal.omega.order(),
        chart.f.order(),
        normal.f.order(),
        chart.h.order(),
        unit.order().min(normal.h.order()),
    ]
    .into_iter()
    .min()
    .unwrap();
    Ok(ReductionCertificate {
        psi,
        psi_inv,
        unit,
        normal,
        trusted_order,
    })
}

/// Reduces an S1 triple to its normal form.
pub fn reduce_s1(t: &Triple) -> Result<(S1NormalForm, ReductionCertificate)> {
    const STAGE: &str = "final_substitution";
    let pre = prefinal(t)?;
    let n = t.n;
    let big_f = &pre.big_f;
    let mut chart = pre.chart;
    if n == 0 {
        let nf = S1NormalForm {
            n,
            g: big_f.clone(),
            mu: None,
            phi: None,
        };
        let unit = divide_by_parabola(&chart.h, 0, 1).at(STAGE)?;
        let cert = certificate(t, &chart, unit, nf.triple())?;
        return Ok((nf, cert));
    }
    let nf_order = big_f.order();
    if (nf_order as usize) < 2 * n {
        return Err(precondition(STAGE, "order too low to separate the coefficients of F"));
    }
    let coeffs = big_f.coefficients_in(0);
    let m = 2 * n;
    let y = Mono::var(0);
    let mut g = Series::zero(1, nf_order);
    let mut pieces = Vec::with_capacity(coeffs.len());
    for (i, c) in coeffs.iter().enumerate() {
        let c0 = c.at_zero();
        g.add_term(Mono::var(0).pow(i as u32), &c0);
        let rest = (c - &c.at_zero_series()).remove_var(0).at(STAGE)?;
        pieces.push(rest);
    }
    // Coordinates (P_i, Q_i) = (F_{2i-2}, F_{2i-1}).
    let theta_comps: Vec<Series> = (0..m)
        .map(|j| if j < n { pieces[2 * j].clone() } else { pieces[2 * (j - n) + 1].clone() })
        .collect();
    let theta = PointMap::new(m, theta_comps).at(STAGE)?;
    if theta.linear_part().inverse().is_none() {
        return Err(ReduceError::OutsideU);
    }
    let theta_inv = theta.invert().at(STAGE)?;
    let pairs: Vec<(usize, usize)> = (0..n).map(|i| (i, n + i)).collect();
    let mu = Form::darboux(&pairs, m, theta_inv.order())
        .pullback(&theta_inv)
        .at(STAGE)?;
    let mut phi: Option<Series> = None;
    for (i, piece) in pieces.iter().enumerate() {
        let moved = piece.compose(&theta_inv).at(STAGE)?;
        if i < m {
            let target = if i % 2 == 0 { i / 2 } else { n + i / 2 };
            if moved != Series::var(m, moved.order(), target) {
                return Err(structure(STAGE, "coefficient of F is not a coordinate"));
            }
            continue;
        }
        let term = moved.insert_var(0).mul_monomial(y.pow((i - m) as u32));
        phi = Some(match phi {
            Some(acc) => &acc + &term,
            None => term,
        });
    }
    let phi = phi.unwrap_or_else(|| Series::zero(m + 1, 0));
    let nf = S1NormalForm {
        n,
        g,
        mu: Some(mu),
        phi: Some(phi),
    };
    let mut comps = vec![Series::var(m + 1, theta_inv.order(), 0)];
    comps.extend(theta_inv.components().iter().map(|c| c.insert_var(0)));
    let last = PointMap::new(m + 1, comps).at(STAGE)?;
    chart = chart.change(&extend_with_x(&last), STAGE)?;
    let unit = divide_by_parabola(&chart.h, 0, 1).at(STAGE)?;
    let cert = certificate(t, &chart, unit, nf.triple())?;
    Ok((nf, cert))
}

/// Reduces a nonsingular triple to `(dx ∧ dy + Σ dp_i ∧ dq_i, x, y)`.
pub fn reduce_nonsingular(t: &Triple) -> Result<ReductionCertificate> {
    check_class(t, ClassKind::NonSingular)?;
    let n = t.n;
    let dim = t.dim();
    let chart = Chart::start(t);
    let boxed = flow_box_backward(&hamiltonian(t, "flow_box")?)?;
    let chart = chart.change(&boxed, "flow_box")?;

    // Boundary {h = 0} becomes {x = 0}: solve h(a(z), z) = 0.
    const BOUNDARY: &str = "solve_boundary";
    let order = chart.h.order();
    let mut comps = vec![chart.h.clone()];
    comps.extend((1..dim).map(|i| Series::var(dim, order, i)));
    let graph = PointMap::new(dim, comps).at(BOUNDARY)?.invert().at(BOUNDARY)?;
    let root = graph.component(0).set_zero(0);
    let mut comps = vec![&Series::var(dim, root.order(), 0) + &root];
    comps.extend((1..dim).map(|i| Series::var(dim, root.order(), i)));
    let chart = chart.change(&PointMap::new(dim, comps).at(BOUNDARY)?, BOUNDARY)?;

    // Promote F to the y slot.
    const PROMOTE: &str = "promote";
    let s = split(&chart.omega(t, PROMOTE)?, &chart.f, n)?;
    let m = 2 * n + 1;
    let k = (0..m)
        .find(|&j| !s.big_f.coeff(Mono::var(j)).is_zero())
        .ok_or_else(|| structure(PROMOTE, "dF(0) = 0"))?;
    let order = s.big_f.order();
    let comps = (0..m)
        .map(|i| match i {
            0 => s.big_f.clone(),
            i if i == k => Series::var(m, order, 0),
            i => Series::var(m, order, i),
        })
        .collect();
    let promote = CoordinateChange::from_forward(PointMap::new(m, comps).at(PROMOTE)?, PROMOTE)?;
    let mut chart = chart.change(&extend_with_x(&promote.backward), PROMOTE)?;
    if n > 0 {
        let omega_hat = s.omega_hat.pullback(&promote.backward).at(PROMOTE)?;
        let darboux = odd_darboux_backward(&omega_hat, n)?;
        chart = chart.change(&extend_with_x(&darboux), "odd_darboux")?;
    }
    if chart.f != Series::var(dim, chart.f.order(), 1) {
        return Err(structure(PROMOTE, "f is not the coordinate y"));
    }
    let unit = chart.h.div_monomial(Mono::var(0)).at(BOUNDARY)?;
    let order = chart.h.order();
    let normal = Triple {
        n,
        omega: Layout::new(n).standard_form(order),
        h: Series::var(dim, order, 0),
        f: Series::var(dim, order, 1),
    };
    certificate(t, &chart, unit, normal)
}

/// Outcome of checking a certificate against the original triple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub order: u32,
    /// First failing check, if any.
    pub failure: Option<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

fn first_difference(a: &Series, b: &Series, order: u32) -> Option<String> {
    let diff = &a.truncate(order) - &b.truncate(order);
    diff.truncate(order)
        .terms()
        .next()
        .map(|(m, c)| format!("monomial {:?} differs by {c}", m.exponents(a.nvars())))
}

/// Checks, to the certificate's trusted order, that `psi_inv` carries the
/// triple to the stated normal form and that `psi` inverts it.
pub fn verify_certificate(t: &Triple, cert: &ReductionCertificate) -> VerifyReport {
    let order = cert.trusted_order;
    let report = |failure: Option<String>| VerifyReport { order, failure };
    let fail = |what: &str, detail: String| report(Some(format!("{what}: {detail}")));
    let psi_inv = &cert.psi_inv;
    if psi_inv.order() < order || cert.psi.order() < order {
        return fail("maps", "trusted order exceeds the maps' order".into());
    }
    if cert.unit.at_zero().is_zero() {
        return fail("unit", "Q(0) = 0".into());
    }
    let pulled = match t.omega.pullback(psi_inv) {
        Ok(p) => p,
        Err(e) => return fail("omega", e.to_string()),
    };
    if pulled.order() < order || cert.normal.omega.order() < order {
        return fail("omega", "insufficient order".into());
    }
    let lhs = pulled.truncate(order);
    let rhs = cert.normal.omega.truncate(order);
    if lhs != rhs {
        let diff = &lhs - &rhs;
        let (idx, c) = diff.terms().next().map(|(i, c)| (i.to_vec(), c.clone())).unwrap();
        return fail("omega", format!("component {idx:?} differs by {c:?}"));
    }
    let pairs = [
        ("f", t.f.compose(psi_inv), cert.normal.f.clone()),
        ("h", t.h.compose(psi_inv), &cert.unit * &cert.normal.h),
    ];
    for (what, lhs, rhs) in pairs {
        let lhs = match lhs {
            Ok(s) => s,
            Err(e) => return fail(what, e.to_string()),
        };
        if lhs.order() < order || rhs.order() < order {
            return fail(what, "insufficient order".into());
        }
        if let Some(d) = first_difference(&lhs, &rhs, order) {
            return fail(what, d);
        }
    }
    match cert.psi.compose(psi_inv) {
        Ok(id) if id.truncate(order).is_identity() => report(None),
        Ok(_) => fail("inverse", "psi ∘ psi_inv is not the identity".into()),
        Err(e) => fail("inverse", e.to_string()),
    }
}

/// Compares two sets of S1 invariants to the smaller of `cap` and the
/// orders both sides actually know.
pub fn invariants_equal(a: &S1NormalForm, b: &S1NormalForm, cap: u32) -> bool {
    if a.n != b.n {
        return false;
    }
    let series_eq = |x: &Series, y: &Series| {
        let o = cap.min(x.order()).min(y.order());
        x.truncate(o) == y.truncate(o)
    };
    let g_eq = series_eq(&a.g, &b.g);
    let mu_eq = match (&a.mu, &b.mu) {
        (Some(x), Some(y)) => {
            let o = cap.min(x.order()).min(y.order());
            x.truncate(o) == y.truncate(o)
        }
        (None, None) => true,
        _ => false,
    };
    let phi_eq = match (&a.phi, &b.phi) {
        (Some(x), Some(y)) => series_eq(x, y),
        (None, None) => true,
        _ => false,
    };
    g_eq && mu_eq && phi_eq
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::kappa;

    fn v(n: usize, o: u32, i: usize) -> Series {
        Series::var(n, o, i)
    }

    fn r(a: i64, b: i64) -> Rational {
        Rational::new(a, b)
    }

    #[test]
    fn flow_box_straightens_field() {
        let o = 6;
        let x = v(2, o, 0);
        let z = VectorField::new(vec![Series::one(2, o), x.scale(&r(-2, 1))]);
        let ch = flow_box(&z).unwrap();
        let pushed = z.pushforward(&ch.forward, &ch.backward).unwrap();
        assert_eq!(pushed, VectorField::coordinate(2, pushed.order(), 0));

        // Field with vanishing x component at the origin.
        let y = v(3, o, 1);
        let z = VectorField::new(vec![
            &y * &y,
            Series::zero(3, o),
            &Series::one(3, o) + &y,
        ]);
        let ch = flow_box(&z).unwrap();
        let pushed = z.pushforward(&ch.forward, &ch.backward).unwrap();
        assert_eq!(pushed, VectorField::coordinate(3, pushed.order(), 0));
    }

    #[test]
    fn tangency_is_straightened() {
        let o = 7;
        let (x, y) = (v(2, o, 0), v(2, o, 1));
        let h = &(&(&y + &(&x * &x)) + &(&x * &y)) + &(&x * &(&x * &x));
        let (ch, unit) = straighten_tangency(&h).unwrap();
        let h_new = h.compose(&ch.backward).unwrap();
        let parabola = &v(2, o, 1) + &(&v(2, o, 0) * &v(2, o, 0));
        let rhs = &unit * &parabola;
        let k = rhs.order().min(h_new.order());
        assert_eq!(h_new.truncate(k), rhs.truncate(k));
    }

    fn planar(h: Series, f: Series) -> Triple {
        Triple::new(0, Layout::new(0).standard_form(8), h, f).unwrap()
    }

    #[test]
    fn planar_normal_forms() {
        let (x, y) = (v(2, 8, 0), v(2, 8, 1));
        let t = planar(&y + &(&x * &x), y.clone());
        let (nf, cert) = reduce_s1(&t).unwrap();
        let report = verify_certificate(&t, &cert);
        assert!(report.passed(), "{report:?}");
        assert_eq!(nf.g.coeff(Mono::var(0)), r(1, 1));

        let t = planar(y.clone(), &y + &(&x * &x));
        let (nf, cert) = reduce_s1(&t).unwrap();
        assert!(verify_certificate(&t, &cert).passed());
        let g1 = nf.g.coeff(Mono::var(0));
        assert_eq!(kappa(&t).unwrap(), (&g1 * &r(2, 1)).recip().unwrap());
    }

    fn melrose(s: i64) -> Triple {
        let o = 6;
        let x = v(4, o, 0);
        let h = &(&v(4, o, 1) + &(&x * &x)) + &v(4, o, 2);
        let f = v(4, o, 1).scale(&r(s, 1));
        Triple::new(1, Layout::new(1).standard_form(o), h, f).unwrap()
    }

    #[test]
    fn melrose_lies_outside_u() {
        let t = melrose(2);
        assert_eq!(reduce_s1(&t).unwrap_err(), ReduceError::OutsideU);
        assert!(!crate::classify::in_u(&t).unwrap());
        let pre = prefinal(&t).unwrap();
        // F = s³y − s·p1 with F₁ ≡ 0.
        assert_eq!(pre.big_f.coeff(Mono::var(0)), r(8, 1));
        let g1 = pre.big_f.coeff(Mono::var(0));
        assert_eq!(kappa(&t).unwrap(), (&g1 * &r(2, 1)).recip().unwrap());
    }

    #[test]
    fn s1_reduction_in_u() {
        let o = 7;
        let l = Layout::new(1);
        let (x, y, p, q) = (v(4, o, 0), v(4, o, 1), v(4, o, 2), v(4, o, 3));
        let h = &(&y + &(&x * &x)) + &p;
        let f = &(&y + &(&q * &y)) + &(&p * &p);
        let t = Triple::new(1, l.standard_form(o), h, f).unwrap();
        assert_eq!(classify(&t).unwrap().kind, ClassKind::S1);
        assert!(crate::classify::in_u(&t).unwrap());
        let (nf, cert) = reduce_s1(&t).unwrap();
        let report = verify_certificate(&t, &cert);
        assert!(report.passed(), "{report:?}");
        let g1 = nf.g.coeff(Mono::var(0));
        assert_eq!(kappa(&t).unwrap(), (&g1 * &r(2, 1)).recip().unwrap());
        assert!(nf.phi.unwrap().set_zero(1).set_zero(2).is_zero());
    }

    #[test]
    fn nonsingular_reduction() {
        let o = 6;
        let l = Layout::new(1);
        let (x, y, p, q) = (v(4, o, 0), v(4, o, 1), v(4, o, 2), v(4, o, 3));
        let h = &(&x + &(&y * &y)) + &(&p * &q);
        let f = &(&y + &(&p * &p)) + &(&x * &q);
        let t = Triple::new(1, l.standard_form(o), h, f).unwrap();
        let cert = reduce_nonsingular(&t).unwrap();
        let report = verify_certificate(&t, &cert);
        assert!(report.passed(), "{report:?}");
        assert!(cert.trusted_order >= 3);
    }

    #[test]
    fn wrong_class_rejected() {
        let (x, y) = (v(2, 8, 0), v(2, 8, 1));
        let t = planar(x.clone(), y.clone());
        assert_eq!(
            reduce_s1(&t).unwrap_err(),
            ReduceError::NotS1(ClassKind::NonSingular)
        );
        let t = planar(y.clone(), x.pow(3));
        assert_eq!(
            reduce_nonsingular(&t).unwrap_err(),
            ReduceError::NotNonSingular(ClassKind::Outside)
        );
    }
}
