//! Signalling classification of bipartite channels and the comb
//! decomposition of one-way processes through a first-order mediator.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cp::{
    choi_of_kraus, dilation_isometry, identity_map, pinv, stinespring, ChoiMap, CpError, Dilation, Structural,
};
use crate::herm::{herm_basis, CMat, HermElem, C64};
use crate::tol::Tolerances;
use crate::types::{self, CausObject, TypeError};

/// Acceptance threshold for the typing residual of the mediated continuation.
pub const DECOMPOSE_TOL: f64 = 1e-6;
/// Round-trip and composite-equality threshold.
pub const ROUND_TRIP_TOL: f64 = 1e-8;
/// Per-step threshold for certificate slides.
pub const SLIDE_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("map is not a channel (CP residual {min_eigenvalue:.3e}, trace residual {trace_residual:.3e})")]
    NotCptp { min_eigenvalue: f64, trace_residual: f64 },
    #[error("process is not one-way: the mediated continuation leaves its type (residual {residual:.3e})")]
    NotOneWay { residual: f64 },
    #[error("decomposition is numerically inconsistent (residual {residual:.3e})")]
    Inconsistent { residual: f64 },
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("certificate unavailable: {0}")]
    CertificateUnavailable(String),
    #[error(transparent)]
    Cp(#[from] CpError),
    #[error(transparent)]
    Type(#[from] TypeError),
}

/// Which directions a bipartite channel signals in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Signalling {
    /// No signalling either way.
    #[serde(rename = "both")]
    Both,
    #[serde(rename = "A_to_B_only")]
    AToBOnly,
    #[serde(rename = "B_to_A_only")]
    BToAOnly,
    #[serde(rename = "two_way")]
    TwoWay,
}

impl Signalling {
    pub fn as_str(self) -> &'static str {
        match self {
            Signalling::Both => "both",
            Signalling::AToBOnly => "A_to_B_only",
            Signalling::BToAOnly => "B_to_A_only",
            Signalling::TwoWay => "two_way",
        }
    }

    /// Allowed by the sequencing product with `A` first.
    pub fn is_one_way(self) -> bool {
        matches!(self, Signalling::Both | Signalling::AToBOnly)
    }
}

/// A bipartition of a channel's factors: indices into its input and output
/// factor lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cut {
    pub a_in: Vec<usize>,
    pub b_in: Vec<usize>,
    pub a_out: Vec<usize>,
    pub b_out: Vec<usize>,
}

impl Cut {
    /// The first `na_in` inputs and `na_out` outputs belong to `A`.
    pub fn leading(j: &ChoiMap, na_in: usize, na_out: usize) -> Cut {
        Cut {
            a_in: (0..na_in).collect(),
            b_in: (na_in..j.in_dims().len()).collect(),
            a_out: (0..na_out).collect(),
            b_out: (na_out..j.out_dims().len()).collect(),
        }
    }
}

/// Residuals of the two marginal tests; a direction signals when its residual
/// exceeds the tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SignallingReport {
    pub class: Signalling,
    pub a_to_b_residual: f64,
    pub b_to_a_residual: f64,
}

fn dims_of(list: &[usize], idx: &[usize]) -> usize {
    idx.iter().map(|&i| list[i]).product()
}

fn traceless_basis(n: usize) -> Vec<HermElem> {
    let mut out: Vec<HermElem> = herm_basis(n).expect("positive dim")[n..].to_vec();
    for i in 0..n - 1 {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v[i + 1] = -1.0;
        out.push(HermElem::diagonal(&v));
    }
    out
}

/// Largest effect of a traceless perturbation on the second input on the
/// marginal of the first output. `m` maps `[d1, d2] → [d1']`.
fn dependence(m: &ChoiMap, d1: usize, d2: usize) -> Result<f64, CpError> {
    let mut worst: f64 = 0.0;
    let xs = herm_basis(d1).expect("positive dim");
    for y in traceless_basis(d2) {
        for x in &xs {
            let img = m.apply(&x.kron(&y))?;
            worst = worst.max(img.norm());
        }
    }
    Ok(worst)
}

/// Reorders a channel to inputs `[A, B]`, outputs `[A', B']` with one factor each.
fn normalize_cut(j: &ChoiMap, cut: &Cut) -> Result<(ChoiMap, [usize; 4]), SignalError> {
    let (ni, no) = (j.in_dims().len(), j.out_dims().len());
    let mut all_in: Vec<usize> = cut.a_in.iter().chain(&cut.b_in).copied().collect();
    let mut all_out: Vec<usize> = cut.a_out.iter().chain(&cut.b_out).copied().collect();
    let in_perm = all_in.clone();
    let out_perm = all_out.clone();
    all_in.sort_unstable();
    all_out.sort_unstable();
    if all_in != (0..ni).collect::<Vec<_>>() || all_out != (0..no).collect::<Vec<_>>() {
        return Err(SignalError::TypeMismatch(format!("{cut:?} is not a bipartition of the factors")));
    }
    let p = j.permute(&in_perm, &out_perm)?;
    let d = [
        dims_of(j.in_dims(), &cut.a_in),
        dims_of(j.in_dims(), &cut.b_in),
        dims_of(j.out_dims(), &cut.a_out),
        dims_of(j.out_dims(), &cut.b_out),
    ];
    Ok((p.regroup(vec![d[0], d[1]], vec![d[2], d[3]])?, d))
}

/// The hom state of a two-party channel with factors reordered to
/// `[A, A', B, B']`, i.e. as a state of a product of the two channel types.
pub fn bipartite_hom_state(j: &ChoiMap, cut: &Cut) -> Result<HermElem, SignalError> {
    let (m, [a, b, a2, b2]) = normalize_cut(j, cut)?;
    let state = m.hom_state().permute_factors(&[a, b, a2, b2], &[0, 2, 1, 3]).map_err(CpError::from)?;
    Ok(state)
}

pub fn nonsignalling_test(j: &ChoiMap, cut: &Cut) -> Result<SignallingReport, SignalError> {
    nonsignalling_test_with(j, cut, &Tolerances::default())
}

pub fn nonsignalling_test_with(j: &ChoiMap, cut: &Cut, tol: &Tolerances) -> Result<SignallingReport, SignalError> {
    let min_eigenvalue = j.min_eigenvalue();
    let trace_residual = j.trace_preservation_residual();
    if min_eigenvalue < -tol.psd || trace_residual > tol.member {
        return Err(SignalError::NotCptp {
            min_eigenvalue,
            trace_residual,
        });
    }
    let (m, [da, db, _, _]) = normalize_cut(j, cut)?;
    // B → A: the A' marginal must not depend on B's input
    let b_to_a_residual = dependence(&m.trace_outputs(&[0])?, da, db)?;
    let swapped = m.permute(&[1, 0], &[1, 0])?;
    let a_to_b_residual = dependence(&swapped.trace_outputs(&[0])?, db, da)?;
    let class = match (a_to_b_residual > tol.member, b_to_a_residual > tol.member) {
        (false, false) => Signalling::Both,
        (true, false) => Signalling::AToBOnly,
        (false, true) => Signalling::BToAOnly,
        (true, true) => Signalling::TwoWay,
    };
    Ok(SignallingReport {
        class,
        a_to_b_residual,
        b_to_a_residual,
    })
}

/// An element of the coend `F(A) ◁ F(B)` at boundary `(X, X')`:
/// `rho : X → A ⊗ Z` and `sigma : Z → B ⊗ X'` through a first-order `Z`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompPair {
    pub rho: ChoiMap,
    pub sigma: ChoiMap,
    pub z_dim: usize,
}

impl DecompPair {
    pub fn new(rho: ChoiMap, sigma: ChoiMap) -> Result<Self, SignalError> {
        let z_dim = *rho.out_dims().last().expect("non-empty factor list");
        if sigma.in_dim() != z_dim || rho.out_dims().len() < 2 {
            return Err(SignalError::TypeMismatch(format!(
                "rho ends in a mediator of dimension {z_dim} but sigma takes {}",
                sigma.in_dim()
            )));
        }
        let sigma = sigma.regroup(vec![z_dim], sigma.out_dims().to_vec())?;
        Ok(DecompPair { rho, sigma, z_dim })
    }

    /// Output factors of `rho` before the mediator.
    pub fn a_dims(&self) -> &[usize] {
        let o = self.rho.out_dims();
        &o[..o.len() - 1]
    }

    /// Largest affine residual of the two components against their types
    /// `[X, A ⅋ Z]` and `[Z, B ⅋ X']`.
    pub fn typing_residual(&self, split: &SeqSplit) -> Result<f64, SignalError> {
        let z = types::mk_first_order(self.z_dim)?;
        let rho_t = types::hom_obj(&split.x_obj()?, &types::par_obj(&split.a, &z));
        let sigma_t = types::hom_obj(&z, &types::par_obj(&split.b, &split.x_out_obj()?));
        let r1 = rho_t.aff_states().distance(&self.rho.hom_state());
        let r2 = sigma_t.aff_states().distance(&self.sigma.hom_state());
        Ok(r1.max(r2))
    }
}

/// Boundary and object data for `F(A ◁ B)(X, X')`.
#[derive(Clone, Debug)]
pub struct SeqSplit {
    pub x: Vec<usize>,
    pub a: CausObject,
    pub b: CausObject,
    pub x_out: Vec<usize>,
}

impl SeqSplit {
    pub fn new(x: Vec<usize>, a: CausObject, b: CausObject, x_out: Vec<usize>) -> Self {
        SeqSplit { x, a, b, x_out }
    }

    pub fn x_obj(&self) -> Result<CausObject, TypeError> {
        first_order_product(&self.x)
    }

    pub fn x_out_obj(&self) -> Result<CausObject, TypeError> {
        first_order_product(&self.x_out)
    }

    pub fn out_dims(&self) -> Vec<usize> {
        self.a
            .factor_dims()
            .into_iter()
            .chain(self.b.factor_dims())
            .chain(self.x_out.iter().copied())
            .collect()
    }

    /// The carrier `[X, (A ◁ B) ⅋ X']`.
    pub fn carrier(&self) -> Result<CausObject, TypeError> {
        Ok(types::hom_obj(
            &self.x_obj()?,
            &types::par_obj(&types::seq_obj(&self.a, &self.b), &self.x_out_obj()?),
        ))
    }
}

/// First-order object on a product of factors.
pub fn first_order_product(dims: &[usize]) -> Result<CausObject, TypeError> {
    let mut acc = types::mk_first_order(dims[0])?;
    for &d in &dims[1..] {
        acc = types::tensor_obj(&acc, &types::mk_first_order(d)?);
    }
    Ok(acc)
}

/// Scalar `μ` with `μ·I` the base effect of `b`, if the base is proportional
/// to the identity.
fn discard_scale(b: &CausObject) -> Result<f64, SignalError> {
    let e = b.aff_effects().base();
    let n = e.dim();
    let mu = e.trace() / n as f64;
    let dev = (e.matrix() - HermElem::identity(n).scale(mu).matrix()).norm();
    if mu <= 0.0 || dev > 1e-9 * mu.max(1.0) {
        return Err(SignalError::Unsupported(
            "objects whose base effect is not a multiple of the identity".into(),
        ));
    }
    Ok(mu)
}

/// `θ⁻¹`: factors a one-way process `τ : X → A ⊗ B ⊗ X'` as `σ ∘_Z ρ` with `Z`
/// the minimal Stinespring environment of the marginal `X → A`.
pub fn comb_decompose(tau: &ChoiMap, split: &SeqSplit) -> Result<DecompPair, SignalError> {
    let dx: usize = split.x.iter().product();
    let (da, db) = (split.a.dim(), split.b.dim());
    let dxo: usize = split.x_out.iter().product();
    if tau.in_dim() != dx || tau.out_dim() != da * db * dxo {
        return Err(SignalError::TypeMismatch(format!(
            "process has shape {}→{}, expected {dx}→{}",
            tau.in_dim(),
            tau.out_dim(),
            da * db * dxo
        )));
    }
    let tau = tau.regroup(split.x.clone(), vec![da, db * dxo])?;
    let mu = discard_scale(&split.b)?;

    // marginal M = μ · Tr_{B X'} τ, dilated minimally
    let marginal = tau.trace_outputs(&[0])?.scale(mu);
    let v = stinespring(&marginal)?;
    let w = stinespring(&tau)?;
    let dz = v.env_dim();
    let df = w.env_dim();

    // √μ W as a dilation of M with environment (B X' F)
    let w_as = Dilation::new(w.matrix().clone(), split.x.clone(), vec![da], db * dxo * df)?;
    let w_rows = w_as.env_rows() * C64::new(mu.sqrt(), 0.0);
    let v_rows = v_regroup(&v, &split.x, da)?.env_rows();
    let iso = &w_rows * pinv(&v_rows);
    let fit = (&iso * &v_rows - &w_rows).norm();

    // σ has Kraus operators (I ⊗ ⟨f|) iso / √μ
    let kraus: Vec<CMat> = (0..df)
        .map(|f| {
            CMat::from_fn(db * dxo, dz, |r, c| iso[(r * df + f, c)] / C64::new(mu.sqrt(), 0.0))
        })
        .collect();
    let sigma_out: Vec<usize> = split.b.factor_dims().into_iter().chain(split.x_out.iter().copied()).collect();
    let sigma = choi_of_kraus(&kraus, vec![dz], sigma_out)?;
    let mut rho_out = split.a.factor_dims();
    rho_out.push(dz);
    let rho = choi_of_kraus(std::slice::from_ref(v.matrix()), split.x.clone(), rho_out)?;
    let pair = DecompPair { rho, sigma, z_dim: dz };

    let residual = pair.typing_residual(split)?;
    if residual > DECOMPOSE_TOL {
        return Err(SignalError::NotOneWay { residual });
    }
    let recomposed = recompose(&pair)?;
    let round_trip = recomposed.distance(&tau.regroup(split.x.clone(), split.out_dims())?);
    if fit > DECOMPOSE_TOL || round_trip > DECOMPOSE_TOL {
        return Err(SignalError::Inconsistent {
            residual: fit.max(round_trip),
        });
    }
    Ok(pair)
}

fn v_regroup(v: &Dilation, x: &[usize], da: usize) -> Result<Dilation, CpError> {
    Dilation::new(v.matrix().clone(), x.to_vec(), vec![da], v.env_dim())
}

/// `θ`: the sequential composite `σ ∘_Z ρ`, with inputs `X` and outputs
/// `[A..., sigma outputs...]`.
pub fn recompose(pair: &DecompPair) -> Result<ChoiMap, SignalError> {
    let ni = pair.rho.in_dims().len();
    let na = pair.rho.out_dims().len() - 1;
    let ns = pair.sigma.out_dims().len();
    let x: Vec<usize> = (0..ni).collect();
    let a: Vec<usize> = (100..100 + na).collect();
    let z = 500;
    let s: Vec<usize> = (1000..1000 + ns).collect();
    let mut rho_outs = a.clone();
    rho_outs.push(z);
    let w = pair
        .rho
        .wired(&rho_outs, &x)
        .link(&pair.sigma.wired(&s, &[z]));
    let outs: Vec<usize> = a.iter().chain(&s).copied().collect();
    Ok(ChoiMap::from_wired(&w, &x, &outs))
}

fn check_same_type(p1: &DecompPair, p2: &DecompPair) -> Result<(), SignalError> {
    if p1.rho.in_dims() != p2.rho.in_dims() || p1.a_dims() != p2.a_dims() || p1.sigma.out_dims() != p2.sigma.out_dims() {
        return Err(SignalError::TypeMismatch(
            "decompositions have different boundary or object factors".into(),
        ));
    }
    Ok(())
}

/// Coend equivalence, decided by equality of composites.
pub fn coend_equiv(p1: &DecompPair, p2: &DecompPair) -> Result<bool, SignalError> {
    check_same_type(p1, p2)?;
    Ok(recompose(p1)?.distance(&recompose(p2)?) <= ROUND_TRIP_TOL)
}

/// One elementary slide through the mediator: with `f : Z → Z'`,
/// `left = ((id ⊗ f)∘ρ, σ')` and `right = (ρ, σ'∘f)`. The certificate walks
/// from `before` to `after`, which are `left`/`right` in either order.
#[derive(Clone, Debug, Serialize)]
pub struct SlideStep {
    pub f: ChoiMap,
    /// True when `before` is the left-hand side.
    pub forward: bool,
    pub before: DecompPair,
    pub after: DecompPair,
    pub residual: f64,
    pub kind: SlideKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SlideKind {
    Isometry,
    Discard,
}

impl SlideStep {
    fn sides(&self) -> (&DecompPair, &DecompPair) {
        if self.forward {
            (&self.before, &self.after)
        } else {
            (&self.after, &self.before)
        }
    }

    /// Recomputes the slide residual from the stored data.
    pub fn check(&self) -> Result<f64, SignalError> {
        let (left, right) = self.sides();
        let rho_img = lift_mediator(&right.rho, &self.f)?;
        let r1 = rho_img.distance(&left.rho);
        let r2 = left.sigma.compose(&self.f)?.distance(&right.sigma);
        Ok(r1.max(r2))
    }
}

/// `(id_A ⊗ f) ∘ ρ` for `ρ : X → A ⊗ Z`, `f : Z → Z'`.
fn lift_mediator(rho: &ChoiMap, f: &ChoiMap) -> Result<ChoiMap, SignalError> {
    let na = rho.out_dims().len() - 1;
    let a_dims = &rho.out_dims()[..na];
    let lifted = identity_map(a_dims).tensor(&f.regroup(vec![f.in_dim()], vec![f.out_dim()])?);
    let mut out = a_dims.to_vec();
    out.push(f.out_dim());
    Ok(lifted.compose(rho)?.regroup(rho.in_dims().to_vec(), out)?)
}

/// Purified form of a pair: `ρ`'s minimal dilation with the environment folded
/// into the mediator, and `σ ⊗ discard`.
struct Purified {
    pair: DecompPair,
    /// Slide `Z·F → Z` tracing the purifying environment, if non-trivial.
    discard: Option<ChoiMap>,
    dilation: Dilation,
}

fn purify(p: &DecompPair) -> Result<Purified, SignalError> {
    let d = stinespring(&p.rho)?;
    let zf = p.z_dim * d.env_dim();
    let mut out = p.a_dims().to_vec();
    out.push(zf);
    let rho = choi_of_kraus(std::slice::from_ref(d.matrix()), p.rho.in_dims().to_vec(), out)?;
    let da: usize = p.a_dims().iter().product();
    let dilation = Dilation::new(d.matrix().clone(), p.rho.in_dims().to_vec(), vec![da], zf)?;
    if d.env_dim() == 1 {
        return Ok(Purified {
            pair: DecompPair {
                rho,
                sigma: p.sigma.clone(),
                z_dim: p.z_dim,
            },
            discard: None,
            dilation,
        });
    }
    let tr = identity_map(&[p.z_dim])
        .tensor(&crate::cp::structural(Structural::Discard(d.env_dim()))?)
        .regroup(vec![zf], vec![p.z_dim])?;
    let sigma = p.sigma.compose(&tr)?;
    Ok(Purified {
        pair: DecompPair { rho, sigma, z_dim: zf },
        discard: Some(tr),
        dilation,
    })
}

fn pairs_close(p: &DecompPair, q: &DecompPair, tol: f64) -> bool {
    p.z_dim == q.z_dim && p.rho.distance(&q.rho) <= tol && p.sigma.distance(&q.sigma) <= tol
}

fn step(f: ChoiMap, kind: SlideKind, left: DecompPair, right: DecompPair, forward: bool) -> Result<SlideStep, SignalError> {
    let (before, after) = if forward { (left, right) } else { (right, left) };
    let mut s = SlideStep {
        f,
        forward,
        before,
        after,
        residual: 0.0,
        kind,
    };
    s.residual = s.check()?;
    Ok(s)
}

/// Isometric slide from the hub pair `(V, τ̃)` to a purified pair.
fn isometry_leg(hub: &Dilation, hub_pair: &DecompPair, target: &Purified) -> Result<Option<SlideStep>, SignalError> {
    let v = dilation_isometry(hub, &target.dilation)?;
    let f = v.channel();
    if hub_pair.z_dim == target.pair.z_dim && f.distance(&identity_map(&[hub_pair.z_dim])) <= 1e-10 {
        return Ok(None);
    }
    // left = ((id⊗v)V, σ_t) = target pair, right = (V, σ_t ∘ v) = hub pair
    let right = DecompPair {
        rho: hub_pair.rho.clone(),
        sigma: target.pair.sigma.compose(&f)?,
        z_dim: hub_pair.z_dim,
    };
    Ok(Some(step(f, SlideKind::Isometry, target.pair.clone(), right, false)?))
}

/// A chain of elementary slides, each by a CPTP map on the mediator, taking
/// `p1` to `p2`. Purifies both sides (discard slides), then joins the
/// purifications by environment isometries through a minimal dilation.
pub fn equiv_certificate(p1: &DecompPair, p2: &DecompPair) -> Result<Vec<SlideStep>, SignalError> {
    check_same_type(p1, p2)?;
    if !coend_equiv(p1, p2)? {
        return Err(SignalError::CertificateUnavailable("composites differ".into()));
    }
    if pairs_close(p1, p2, 1e-10) {
        return Ok(Vec::new());
    }
    let q1 = purify(p1)?;
    let q2 = purify(p2)?;
    let mut chain = Vec::new();
    if let Some(tr) = &q1.discard {
        // left = ((id⊗tr)P1, σ1) = p1, right = (P1, σ1∘tr) = q1
        chain.push(step(tr.clone(), SlideKind::Discard, p1.clone(), q1.pair.clone(), true)?);
    }
    let minimal = |q: &Purified| -> Result<bool, SignalError> {
        let m = stinespring(&q.dilation.channel())?;
        Ok(m.env_dim() == q.pair.z_dim)
    };
    // hub: the first purification if minimal, else a fresh minimal dilation
    let (hub, hub_pair, from_hub_first) = if minimal(&q1)? {
        (q1.dilation.clone(), q1.pair.clone(), false)
    } else if minimal(&q2)? {
        (q2.dilation.clone(), q2.pair.clone(), true)
    } else {
        let v0 = stinespring(&q1.dilation.channel())?;
        let mut out = p1.a_dims().to_vec();
        out.push(v0.env_dim());
        let rho0 = choi_of_kraus(std::slice::from_ref(v0.matrix()), p1.rho.in_dims().to_vec(), out)?;
        let iso = dilation_isometry(&v0, &q1.dilation)?;
        let sigma0 = q1.pair.sigma.compose(&iso.channel())?;
        let pair0 = DecompPair {
            rho: rho0,
            sigma: sigma0,
            z_dim: v0.env_dim(),
        };
        (v0, pair0, false)
    };
    if from_hub_first {
        // hub is q2: q1 → q2 through v : Z2 → Z1
        if let Some(mut s) = isometry_leg(&hub, &hub_pair, &q1)? {
            s = step(s.f, s.kind, q1.pair.clone(), hub_pair.clone(), true)?;
            chain.push(s);
        }
    } else {
        if let Some(s) = isometry_leg(&hub, &hub_pair, &q1)? {
            chain.push(step(s.f, s.kind, q1.pair.clone(), hub_pair.clone(), true)?);
        }
        if let Some(s) = isometry_leg(&hub, &hub_pair, &q2)? {
            chain.push(s);
        }
    }
    if let Some(tr) = &q2.discard {
        chain.push(step(tr.clone(), SlideKind::Discard, p2.clone(), q2.pair.clone(), false)?);
    }
    // stitch: each step's `after` is the next step's `before`
    for k in 1..chain.len() {
        let prev = chain[k - 1].after.clone();
        if !pairs_close(&prev, &chain[k].before, SLIDE_TOL) {
            return Err(SignalError::CertificateUnavailable(
                "adjacent slides do not meet".into(),
            ));
        }
    }
    for s in &chain {
        if s.residual > SLIDE_TOL {
            return Err(SignalError::CertificateUnavailable(format!(
                "slide residual {:.3e} exceeds bound",
                s.residual
            )));
        }
    }
    Ok(chain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cp::{conjugation, structural, swap_unitary};
    use crate::types::{hom_obj, mk_first_order};

    fn fo(d: usize) -> CausObject {
        mk_first_order(d).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn bipartite_state_of_a_product() {
        let mut r = crate::random::rng(5);
        let e = crate::random::random_channel(&mut r, &[2], &[3], 2);
        let f = crate::random::random_channel(&mut r, &[3], &[2], 2);
        let got = bipartite_hom_state(&e.tensor(&f), &Cut::leading(&e.tensor(&f), 1, 1)).unwrap();
        let want = e.hom_state().kron(&f.hom_state());
        assert!((got.matrix() - want.matrix()).norm() < 1e-12);
    }

    fn chan() -> CausObject {
        hom_obj(&fo(2), &fo(2))
    }

    /// Measure A in Z, send the outcome to A' and B', discard B's input.
    fn measure_and_copy() -> ChoiMap {
        let mut kraus = Vec::new();
        for k in 0..2 {
            for b in 0..2 {
                // |k>_{A'} |k>_{B'} <k|_A <b|_B
                kraus.push(CMat::from_fn(4, 4, |r, col| {
                    if r == k * 2 + k && col == k * 2 + b {
                        c(1., 0.)
                    } else {
                        c(0., 0.)
                    }
                }));
            }
        }
        choi_of_kraus(&kraus, vec![2, 2], vec![2, 2]).unwrap()
    }

    #[test]
    fn classification_examples() {
        let idid = identity_map(&[2, 2]);
        let cut = Cut::leading(&idid, 1, 1);
        assert_eq!(nonsignalling_test(&idid, &cut).unwrap().class, Signalling::Both);
        let swap = conjugation(&swap_unitary(2, 2), vec![2, 2], vec![2, 2]).unwrap();
        assert_eq!(nonsignalling_test(&swap, &cut).unwrap().class, Signalling::TwoWay);
        let mc = measure_and_copy();
        assert_eq!(nonsignalling_test(&mc, &cut).unwrap().class, Signalling::AToBOnly);
        assert!(nonsignalling_test(&idid.scale(0.5), &cut).is_err());
    }

    #[test]
    fn product_state_decomposes_trivially() {
        let ra = HermElem::diagonal(&[0.25, 0.75]);
        let rb = HermElem::diagonal(&[0.6, 0.4]);
        let tau = ChoiMap::from_state(&ra.kron(&rb), vec![2, 2]).unwrap();
        let split = SeqSplit::new(vec![1], fo(2), fo(2), vec![1]);
        let pair = comb_decompose(&tau, &split).unwrap();
        assert_eq!(pair.z_dim, 2);
        let back = recompose(&pair).unwrap();
        assert!(back.distance(&tau.regroup(vec![1], vec![2, 2, 1]).unwrap()) < 1e-10);
    }

    #[test]
    fn identity_comb_round_trip() {
        // A_in wired to B_out through the mediator; A_out maximally mixed, B_in
        // discarded. Factors [A_in, A_out, B_in, B_out].
        let id = identity_map(&[2]);
        let rest = HermElem::identity(2).scale(0.5).kron(&HermElem::identity(2));
        let tau_state = id
            .choi()
            .kron(&rest)
            .permute_factors(&[2, 2, 2, 2], &[1, 2, 3, 0])
            .unwrap();
        let tau = ChoiMap::from_state(&tau_state, vec![2, 2, 2, 2]).unwrap();
        let split = SeqSplit::new(vec![1], chan(), chan(), vec![1]);
        assert!(types::member(&types::seq_obj(&chan(), &chan()), &tau_state));
        let pair = comb_decompose(&tau, &split).unwrap();
        assert!(pair.z_dim <= 4);
        let back = recompose(&pair).unwrap();
        assert!(back.distance(&tau.regroup(vec![1], vec![2, 2, 2, 2, 1]).unwrap()) <= 1e-8);
    }

    #[test]
    fn swap_is_not_one_way() {
        let swap = conjugation(&swap_unitary(2, 2), vec![2, 2], vec![2, 2]).unwrap();
        // as a state of [FO2,FO2] ◁ [FO2,FO2]: factors [A_in, A_out, B_in, B_out]
        let s = swap.hom_state().permute_factors(&[2, 2, 2, 2], &[0, 2, 1, 3]).unwrap();
        let tau = ChoiMap::from_state(&s, vec![2, 2, 2, 2]).unwrap();
        let split = SeqSplit::new(vec![1], chan(), chan(), vec![1]);
        assert!(matches!(comb_decompose(&tau, &split), Err(SignalError::NotOneWay { .. })));
    }

    #[test]
    fn recompose_cup_cap_is_identity() {
        let rho = identity_map(&[2]).regroup(vec![2], vec![1, 2]).unwrap();
        let pair = DecompPair::new(rho, identity_map(&[2])).unwrap();
        let comp = recompose(&pair).unwrap();
        assert!(comp.distance(&identity_map(&[2]).regroup(vec![2], vec![1, 2]).unwrap()) < 1e-14);
    }

    fn sample_pair() -> (DecompPair, SeqSplit) {
        let split = SeqSplit::new(vec![2], fo(2), fo(2), vec![1]);
        // X → A ⊗ Z: |x> ↦ |x>|x>
        let k = CMat::from_fn(4, 2, |r, col| if r == 3 * col { c(1., 0.) } else { c(0., 0.) });
        let rho = choi_of_kraus(&[k], vec![2], vec![2, 2]).unwrap();
        let sigma = choi_of_kraus(
            &[CMat::from_row_slice(2, 2, &[c(0.8, 0.), c(0., 0.6), c(0., 0.6), c(0.8, 0.)])],
            vec![2],
            vec![2, 1],
        )
        .unwrap();
        (DecompPair::new(rho, sigma).unwrap(), split)
    }

    #[test]
    fn coend_equiv_examples() {
        let (p1, _) = sample_pair();
        let u = CMat::from_row_slice(2, 2, &[c(0.6, 0.), c(0., 0.8), c(0., 0.8), c(0.6, 0.)]);
        let uf = conjugation(&u, vec![2], vec![2]).unwrap();
        let udag = conjugation(&u.adjoint(), vec![2], vec![2]).unwrap();
        let p2 = DecompPair::new(lift_mediator(&p1.rho, &uf).unwrap(), p1.sigma.compose(&udag).unwrap()).unwrap();
        assert!(coend_equiv(&p1, &p2).unwrap());
        let chain = equiv_certificate(&p1, &p2).unwrap();
        assert_eq!(chain.len(), 1);
        assert!((chain[0].f.distance(&uf)) < 1e-8 || chain[0].f.distance(&udag) < 1e-8);

        let other = DecompPair::new(p1.rho.clone(), identity_map(&[2]).regroup(vec![2], vec![2, 1]).unwrap()).unwrap();
        assert!(!coend_equiv(&p1, &other).unwrap());
        assert!(equiv_certificate(&p1, &p1).unwrap().is_empty());
    }

    #[test]
    fn padded_mediator_is_equivalent() {
        let (p1, _) = sample_pair();
        let pad = CMat::from_fn(4, 2, |r, col| if r == 2 * col { c(1., 0.) } else { c(0., 0.) });
        let padf = conjugation(&pad, vec![2], vec![4]).unwrap();
        let unpad = identity_map(&[2])
            .tensor(&structural(Structural::Discard(2)).unwrap())
            .regroup(vec![4], vec![2])
            .unwrap();
        let p2 = DecompPair::new(lift_mediator(&p1.rho, &padf).unwrap(), p1.sigma.compose(&unpad).unwrap()).unwrap();
        assert!(coend_equiv(&p1, &p2).unwrap());
        let chain = equiv_certificate(&p1, &p2).unwrap();
        assert!(!chain.is_empty());
        for s in &chain {
            assert!(s.f.is_cptp(&Tolerances::default()));
            assert!(s.residual <= SLIDE_TOL);
        }
    }
}
