//! The embedding `F(A)(X, X') = Caus(X, A ⅋ X')` of causal objects into
//! profunctors over first-order boundaries, its structure maps, and probes
//! for faithfulness, fullness and strong closure.
//!
//! An element of `F(A)(X, X')` is a [`ChoiMap`] with inputs `X` and outputs
//! `[A..., X'...]`, always with the factors of `A` in front.

pub mod families;
pub mod laws;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cp::{ChoiMap, CpError, Wire};
use crate::herm::{permute_factors, HermElem, HermError};
use crate::random::{random_member, rng};
use crate::signalling::{comb_decompose, recompose, DecompPair, SeqSplit, SignalError};
use crate::tol::Tolerances;
use crate::types::{self, CausMorphism, CausObject, Membership, TypeError};

/// Choi distance below which two morphisms count as equal.
pub const FAITHFUL_TOL: f64 = 1e-9;
/// Agreement threshold between a black box and the reconstructed morphism.
pub const FULLNESS_TOL: f64 = 1e-8;
/// Round-trip threshold of the closure rebending.
pub const CLOSURE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("boundary object is not first-order")]
    NotFirstOrder,
    #[error("element does not fit the boundary: {0}")]
    Shape(String),
    #[error(transparent)]
    Herm(#[from] HermError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Cp(#[from] CpError),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// `F(A)` evaluated at a boundary `(X, X')`.
#[derive(Clone, Debug)]
pub struct FImage {
    pub object: CausObject,
    pub x: CausObject,
    pub x_out: CausObject,
    /// `[X, A ⅋ X']`.
    pub carrier: CausObject,
}

pub fn f_eval(a: &CausObject, x: &CausObject, x_out: &CausObject) -> Result<FImage, HarnessError> {
    if !x.is_first_order() || !x_out.is_first_order() {
        return Err(HarnessError::NotFirstOrder);
    }
    let carrier = types::hom_obj(x, &types::par_obj(a, x_out));
    Ok(FImage {
        object: a.clone(),
        x: x.clone(),
        x_out: x_out.clone(),
        carrier,
    })
}

impl FImage {
    pub fn in_dims(&self) -> Vec<usize> {
        self.x.factor_dims()
    }

    pub fn out_dims(&self) -> Vec<usize> {
        let mut d = self.object.factor_dims();
        d.extend(self.x_out.factor_dims());
        d
    }

    fn check_shape(&self, tau: &ChoiMap) -> Result<(), HarnessError> {
        if tau.in_dim() != self.x.dim() || tau.out_dim() != self.object.dim() * self.x_out.dim() {
            return Err(HarnessError::Shape(format!(
                "element has shape {}→{}, boundary needs {}→{}",
                tau.in_dim(),
                tau.out_dim(),
                self.x.dim(),
                self.object.dim() * self.x_out.dim()
            )));
        }
        Ok(())
    }

    pub fn membership(&self, tau: &ChoiMap) -> Result<Membership, HarnessError> {
        self.check_shape(tau)?;
        Ok(types::membership(&self.carrier, &tau.hom_state(), &Tolerances::default())?)
    }

    pub fn member(&self, tau: &ChoiMap) -> bool {
        self.membership(tau).is_ok_and(|m| m.member)
    }

    /// Reads an element from a state of the carrier.
    pub fn element(&self, state: &HermElem) -> Result<ChoiMap, HarnessError> {
        Ok(ChoiMap::from_hom_state(state, self.in_dims(), self.out_dims())?)
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> ChoiMap {
        self.element(&random_member(rng, &self.carrier))
            .expect("carrier states have the element shape")
    }
}

/// `(f ⊗ id) ∘ τ` for an arbitrary map `f` acting on the leading output
/// factors of `τ`.
pub fn push_forward(f: &ChoiMap, tau: &ChoiMap) -> Result<ChoiMap, HarnessError> {
    let k = f.in_dims().len();
    let outs = tau.out_dims();
    if outs.len() < k || outs[..k] != *f.in_dims() {
        return Err(HarnessError::Shape(format!(
            "map acts on {:?} but the element's outputs are {:?}",
            f.in_dims(),
            outs
        )));
    }
    Ok(act_on_outputs(f, tau, 0))
}

/// `τ` with `f` applied to its outputs `start..start + |f.in|`, the other
/// outputs left in place.
fn act_on_outputs(f: &ChoiMap, tau: &ChoiMap, start: usize) -> ChoiMap {
    let n = tau.out_dims().len();
    let k = f.in_dims().len();
    let x: Vec<Wire> = (0..tau.in_dims().len()).collect();
    let t: Vec<Wire> = (1000..1000 + n).collect();
    let fo: Vec<Wire> = (3000..3000 + f.out_dims().len()).collect();
    let w = tau.wired(&t, &x).link(&f.wired(&fo, &t[start..start + k]));
    let outs: Vec<Wire> = t[..start].iter().chain(&fo).chain(&t[start + k..]).copied().collect();
    ChoiMap::from_wired(&w, &x, &outs)
}

/// `F(f)`: post-composition with `f ⅋ id_{X'}`.
pub fn f_mor(f: &CausMorphism, tau: &ChoiMap) -> Result<ChoiMap, HarnessError> {
    push_forward(f.map(), tau)
}

/// `(id_A ⊗ h) ∘ τ ∘ g`: contravariant in `g : X₂ → X`, covariant in
/// `h : X' → X₂'`.
pub fn profunctor_action(tau: &ChoiMap, g: &CausMorphism, h: &CausMorphism) -> Result<ChoiMap, HarnessError> {
    let pre = tau.compose(g.map())?;
    let outs = pre.out_dims();
    let hd = h.map().in_dims();
    if outs.len() < hd.len() || outs[outs.len() - hd.len()..] != *hd {
        return Err(HarnessError::Shape(format!(
            "post-processing acts on {hd:?} but the element's outputs are {outs:?}"
        )));
    }
    Ok(act_on_outputs(h.map(), &pre, outs.len() - hd.len()))
}

/// `τ ⊗ k`: an element of `F(A)(X ⊗ Y, X' ⊗ Y')` for `k : Y → Y'`.
pub fn strength(tau: &ChoiMap, k: &CausMorphism) -> ChoiMap {
    tau.tensor(k.map())
}

/// The `⊗`-laxator: `τ₁ ⊗ τ₂` with outputs reordered to `[A, B, X₁', X₂']`.
pub fn lax_tensor(
    i1: &FImage,
    t1: &ChoiMap,
    i2: &FImage,
    t2: &ChoiMap,
) -> Result<(FImage, ChoiMap), HarnessError> {
    i1.check_shape(t1)?;
    i2.check_shape(t2)?;
    let t1 = t1.regroup(i1.in_dims(), i1.out_dims())?;
    let t2 = t2.regroup(i2.in_dims(), i2.out_dims())?;
    let na = i1.object.factors().len();
    let nx1 = i1.x_out.factors().len();
    let nb = i2.object.factors().len();
    let nx2 = i2.x_out.factors().len();
    let prod = t1.tensor(&t2);
    let ins: Vec<usize> = (0..prod.in_dims().len()).collect();
    let a = 0..na;
    let x1 = na..na + nx1;
    let b = na + nx1..na + nx1 + nb;
    let x2 = na + nx1 + nb..na + nx1 + nb + nx2;
    let outs: Vec<usize> = a.chain(b).chain(x1).chain(x2).collect();
    let tau = prod.permute(&ins, &outs)?;
    let img = f_eval(
        &types::tensor_obj(&i1.object, &i2.object),
        &types::tensor_obj(&i1.x, &i2.x),
        &types::tensor_obj(&i1.x_out, &i2.x_out),
    )?;
    Ok((img, tau))
}

/// `θ`: a coend element of `F(A) ◁ F(B)` to an element of `F(A ◁ B)`.
pub fn lax_seq(pair: &DecompPair) -> Result<ChoiMap, HarnessError> {
    Ok(recompose(pair)?)
}

/// `θ⁻¹`.
pub fn inverse_seq(tau: &ChoiMap, split: &SeqSplit) -> Result<DecompPair, HarnessError> {
    Ok(comb_decompose(tau, split)?)
}

/// `α_A · cup` as an element of `F(A)(I, |A|)`.
pub fn probe_element(a: &CausObject) -> Result<ChoiMap, HarnessError> {
    let cup = types::alpha_cup(a)?;
    let dims: Vec<usize> = a.factor_dims().into_iter().chain(a.factor_dims()).collect();
    Ok(ChoiMap::from_state(&cup, dims)?)
}

/// Distance between `F(f)` and `F(g)` on the cup probe.
pub fn probe_distance(f: &CausMorphism, g: &CausMorphism) -> Result<f64, HarnessError> {
    if f.source().dim() != g.source().dim() || f.target().dim() != g.target().dim() {
        return Err(HarnessError::Shape("morphisms have different types".into()));
    }
    let p = probe_element(f.source())?;
    Ok(f_mor(f, &p)?.distance(&f_mor(g, &p)?))
}

/// Whether the single cup probe tells `f` and `g` apart.
pub fn faithfulness_probe(f: &CausMorphism, g: &CausMorphism) -> Result<bool, HarnessError> {
    Ok(probe_distance(f, g)? > FAITHFUL_TOL)
}

pub type BoxFn = Box<dyn Fn(&CausObject, &CausObject, &ChoiMap) -> Result<ChoiMap, String> + Send + Sync>;

/// A claimed transformation `F(A) ⇒ F(B)`, given only by its components.
pub struct BlackBoxTransform {
    pub source: CausObject,
    pub target: CausObject,
    func: BoxFn,
}

impl BlackBoxTransform {
    pub fn new(source: CausObject, target: CausObject, func: BoxFn) -> Self {
        BlackBoxTransform { source, target, func }
    }

    /// The component at `(X, X')` applied to `τ`.
    pub fn apply(&self, x: &CausObject, x_out: &CausObject, tau: &ChoiMap) -> Result<ChoiMap, String> {
        (self.func)(x, x_out, tau)
    }

    /// `F(h)` as a black box.
    pub fn of_morphism(h: &CausMorphism) -> Self {
        let map = h.map().clone();
        Self::of_map(h.source().clone(), h.target().clone(), map)
    }

    /// Post-composition with an arbitrary, possibly untyped, map.
    pub fn of_map(source: CausObject, target: CausObject, map: ChoiMap) -> Self {
        Self::new(
            source,
            target,
            Box::new(move |_, _, tau| push_forward(&map, tau).map_err(|e| e.to_string())),
        )
    }
}

/// Why a black box is not `F` of any morphism.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum NotInImage {
    /// The cup evaluation is not completely positive.
    NotCp { min_eigenvalue: f64 },
    /// The cup evaluation is CP but does not send states of `A` to states of `B`.
    NotTyped { residual: f64 },
    /// The candidate disagrees with the black box at some probe.
    Disagreement { x: Vec<usize>, x_out: Vec<usize>, residual: f64 },
    /// The black box failed or returned a wrongly shaped element.
    Malformed { message: String },
}

#[derive(Clone, Debug)]
pub enum Reconstruction {
    Recovered {
        morphism: Box<CausMorphism>,
        max_disagreement: f64,
        probes: usize,
    },
    NotInImage {
        candidate: Option<ChoiMap>,
        reason: NotInImage,
    },
}

impl Reconstruction {
    pub fn morphism(&self) -> Option<&CausMorphism> {
        match self {
            Reconstruction::Recovered { morphism, .. } => Some(morphism.as_ref()),
            Reconstruction::NotInImage { .. } => None,
        }
    }

    pub fn is_recovered(&self) -> bool {
        matches!(self, Reconstruction::Recovered { .. })
    }
}

/// First-order boundary objects on at most two factors of dimension ≤ 3.
pub fn boundary_pool() -> Vec<CausObject> {
    let mut out = vec![types::unit()];
    for d in 2..=3 {
        out.push(types::mk_first_order(d).expect("positive"));
    }
    let two = types::mk_first_order(2).expect("positive");
    out.push(types::tensor_obj(&two, &two));
    out
}

/// Boundaries `(X, X')` used to audit a transformation on `A`, keeping the
/// carrier dimension at or below `max_dim`.
pub fn probe_boundaries(a: &CausObject, max_dim: usize) -> Vec<(CausObject, CausObject)> {
    let pool = boundary_pool();
    let mut out = Vec::new();
    for x in &pool {
        for xo in &pool {
            if x.dim() * a.dim() * xo.dim() <= max_dim {
                out.push((x.clone(), xo.clone()));
            }
        }
    }
    out
}

/// Reconstructs `f : A → B` from the cup component of `s` and audits the
/// candidate against `s` on `samples` random elements per probe boundary.
pub fn fullness_reconstruct(s: &BlackBoxTransform, seed: u64, samples: usize) -> Result<Reconstruction, HarnessError> {
    let (a, b) = (&s.source, &s.target);
    let unit = types::unit();
    let abs_a = types::mk_all_states(a);
    let probe = probe_element(a)?;
    let alpha = types::alpha_scalar(a)?;
    let image = match s.apply(&unit, &abs_a, &probe) {
        Ok(t) => t,
        Err(message) => {
            return Ok(Reconstruction::NotInImage {
                candidate: None,
                reason: NotInImage::Malformed { message },
            })
        }
    };
    if image.in_dim() != 1 || image.out_dim() != b.dim() * a.dim() {
        return Ok(Reconstruction::NotInImage {
            candidate: None,
            reason: NotInImage::Malformed {
                message: format!("cup component has shape {}→{}", image.in_dim(), image.out_dim()),
            },
        });
    }
    let j = image.choi().scale(1.0 / alpha);
    let candidate = ChoiMap::from_choi_unchecked(a.factor_dims(), b.factor_dims(), j)?;
    let tol = Tolerances::default();
    let min_eigenvalue = candidate.min_eigenvalue();
    if min_eigenvalue < -tol.psd {
        return Ok(Reconstruction::NotInImage {
            candidate: Some(candidate),
            reason: NotInImage::NotCp { min_eigenvalue },
        });
    }
    let morphism = match types::check_morphism(&candidate, a, b) {
        Ok(m) => m,
        Err(TypeError::AffineFailure { residual }) => {
            return Ok(Reconstruction::NotInImage {
                candidate: Some(candidate),
                reason: NotInImage::NotTyped { residual },
            })
        }
        Err(e) => return Err(e.into()),
    };

    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    let mut probes = 0;
    for (x, xo) in probe_boundaries(a, 64) {
        let img = f_eval(a, &x, &xo)?;
        for _ in 0..samples {
            let tau = img.random_element(&mut r);
            let expected = f_mor(&morphism, &tau)?;
            let got = match s.apply(&x, &xo, &tau) {
                Ok(t) => t,
                Err(message) => {
                    return Ok(Reconstruction::NotInImage {
                        candidate: Some(candidate),
                        reason: NotInImage::Malformed { message },
                    })
                }
            };
            let residual = expected.distance(&got);
            probes += 1;
            if residual > FULLNESS_TOL || !residual.is_finite() {
                return Ok(Reconstruction::NotInImage {
                    candidate: Some(candidate),
                    reason: NotInImage::Disagreement {
                        x: x.factor_dims(),
                        x_out: xo.factor_dims(),
                        residual,
                    },
                });
            }
            worst = worst.max(residual);
        }
    }
    Ok(Reconstruction::Recovered {
        morphism: Box::new(morphism),
        max_disagreement: worst,
        probes,
    })
}

/// A scripted black box: `F` of a given map, or one of the standard
/// non-natural transformations.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeScript {
    /// Post-composition with the map of Choi matrix `choi` (factors `[B, A]`).
    Morphism { choi: HermElem },
    /// Post-composition with `factor · choi`.
    Scaled { factor: f64, choi: HermElem },
    /// Transpose of the `A` output; requires `A = B`.
    PartialTranspose,
    /// `at_unit` when `X` is trivial, `elsewhere` otherwise.
    BoundaryDependent { at_unit: HermElem, elsewhere: HermElem },
    /// Mixes `F(choi)(τ)` with `τ` by the purity of `τ`; requires `A = B`.
    Nonlinear { choi: HermElem },
}

impl ProbeScript {
    pub fn into_transform(self, a: &CausObject, b: &CausObject) -> Result<BlackBoxTransform, HarnessError> {
        let map = |j: HermElem| ChoiMap::from_choi_unchecked(a.factor_dims(), b.factor_dims(), j);
        let same = || {
            if a.factor_dims() == b.factor_dims() {
                Ok(())
            } else {
                Err(HarnessError::Shape("this script needs equal source and target".into()))
            }
        };
        Ok(match self {
            ProbeScript::Morphism { choi } => BlackBoxTransform::of_map(a.clone(), b.clone(), map(choi)?),
            ProbeScript::Scaled { factor, choi } => {
                BlackBoxTransform::of_map(a.clone(), b.clone(), map(choi)?.scale(factor))
            }
            ProbeScript::PartialTranspose => {
                same()?;
                BlackBoxTransform::of_map(a.clone(), b.clone(), transpose_map(&a.factor_dims())?)
            }
            ProbeScript::BoundaryDependent { at_unit, elsewhere } => {
                let (m1, m2) = (map(at_unit)?, map(elsewhere)?);
                BlackBoxTransform::new(
                    a.clone(),
                    b.clone(),
                    Box::new(move |x, _, tau| {
                        let m = if x.dim() == 1 { &m1 } else { &m2 };
                        push_forward(m, tau).map_err(|e| e.to_string())
                    }),
                )
            }
            ProbeScript::Nonlinear { choi } => {
                same()?;
                let m = map(choi)?;
                BlackBoxTransform::new(
                    a.clone(),
                    b.clone(),
                    Box::new(move |_, _, tau| {
                        let moved = push_forward(&m, tau).map_err(|e| e.to_string())?;
                        let j = tau.choi();
                        let p = j.norm().powi(2) / j.trace().powi(2);
                        let mixed = &moved.choi().scale(p) + &j.scale(1.0 - p);
                        ChoiMap::from_choi_unchecked(tau.in_dims().to_vec(), tau.out_dims().to_vec(), mixed)
                            .map_err(|e| e.to_string())
                    }),
                )
            }
        })
    }
}

/// The transpose map on a system, as a (non-CP) Choi matrix: the swap.
pub fn transpose_map(dims: &[usize]) -> Result<ChoiMap, HarnessError> {
    let d: usize = dims.iter().product();
    let swap = crate::cp::swap_unitary(d, d);
    Ok(ChoiMap::from_choi_unchecked(
        dims.to_vec(),
        dims.to_vec(),
        HermElem::hermitized(&swap),
    )?)
}

/// Outcome of the strong-closure comparison between `F([A,B])(X,X')` and
/// `Caus(A, [X, B ⅋ X'])`.
#[derive(Clone, Debug, Serialize)]
pub struct ClosureReport {
    pub lhs_rank: usize,
    pub rhs_rank: usize,
    pub hull_distance: f64,
    pub samples: usize,
    pub lhs_to_rhs_members: usize,
    pub rhs_to_lhs_members: usize,
    pub max_round_trip: f64,
    pub pass: bool,
}

/// Factor permutations `[X, A, B, X'] ↔ [A, X, B, X']` on hom states.
fn rebend_perms(nx: usize, na: usize, nrest: usize) -> (Vec<usize>, Vec<usize>) {
    let forward: Vec<usize> = (nx..nx + na).chain(0..nx).chain(nx + na..nx + na + nrest).collect();
    let mut back = vec![0; forward.len()];
    for (i, &p) in forward.iter().enumerate() {
        back[p] = i;
    }
    (forward, back)
}

pub fn strong_closure_check(
    a: &CausObject,
    b: &CausObject,
    x: &CausObject,
    x_out: &CausObject,
    samples: usize,
    seed: u64,
) -> Result<ClosureReport, HarnessError> {
    let lhs = f_eval(&types::hom_obj(a, b), x, x_out)?.carrier;
    let rhs = types::hom_obj(a, &types::hom_obj(x, &types::par_obj(b, x_out)));
    let (nx, na) = (x.factors().len(), a.factors().len());
    let nrest = b.factors().len() + x_out.factors().len();
    let (fwd, back) = rebend_perms(nx, na, nrest);
    let lhs_dims = lhs.factor_dims();
    let rhs_dims = rhs.factor_dims();
    let moved = lhs.aff_states().permute_factors(&lhs_dims, &fwd)?;
    let hull_distance = moved.distance_to(rhs.aff_states());

    let tol = Tolerances::default();
    let mut r = rng(seed);
    let (mut l2r, mut r2l) = (0, 0);
    let mut max_round_trip: f64 = 0.0;
    for _ in 0..samples {
        let s = random_member(&mut r, &lhs);
        let t = HermElem::hermitized(&permute_factors(s.matrix(), &lhs_dims, &fwd)?);
        if types::membership(&rhs, &t, &tol)?.member {
            l2r += 1;
        }
        let s2 = HermElem::hermitized(&permute_factors(t.matrix(), &rhs_dims, &back)?);
        max_round_trip = max_round_trip.max((s2.matrix() - s.matrix()).norm());

        let u = random_member(&mut r, &rhs);
        let v = HermElem::hermitized(&permute_factors(u.matrix(), &rhs_dims, &back)?);
        if types::membership(&lhs, &v, &tol)?.member {
            r2l += 1;
        }
        let u2 = HermElem::hermitized(&permute_factors(v.matrix(), &lhs_dims, &fwd)?);
        max_round_trip = max_round_trip.max((u2.matrix() - u.matrix()).norm());
    }
    let (lhs_rank, rhs_rank) = (lhs.state_rank(), rhs.state_rank());
    let pass = lhs_rank == rhs_rank
        && hull_distance <= tol.sub.max(CLOSURE_TOL) * 10.0
        && l2r == samples
        && r2l == samples
        && max_round_trip <= CLOSURE_TOL;
    Ok(ClosureReport {
        lhs_rank,
        rhs_rank,
        hull_distance,
        samples,
        lhs_to_rhs_members: l2r,
        rhs_to_lhs_members: r2l,
        max_round_trip,
        pass,
    })
}
