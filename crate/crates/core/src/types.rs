//! Causal types over CP as pairs of affine sets (states, effects) that are
//! each other's affine dual, together with the products ⊗, ⅋, ◁ and the
//! internal hom.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::cp::{ChoiMap, CpError};
use crate::herm::subspace::seq_states;
use crate::herm::{AffineSubspace, CMat, HermElem, HermError};
use crate::tol::Tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TypeError {
    #[error("object is not flat: no positive multiple of the identity is a state (residual {residual:.3e})")]
    NotFlat { residual: f64 },
    #[error("no scalar α normalizes the cup (residual {residual:.3e})")]
    NoConsistentAlpha { residual: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("map is not completely positive (min eigenvalue {min_eigenvalue:.3e})")]
    NotCp { min_eigenvalue: f64 },
    #[error("map does not send states to states (residual {residual:.3e})")]
    AffineFailure { residual: f64 },
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error(transparent)]
    Herm(#[from] HermError),
    #[error(transparent)]
    Cp(#[from] CpError),
}

/// One tensor factor of an object: its dimension and whether it is a dual
/// copy (same Hilbert space, dual role).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Factor {
    pub dim: usize,
    pub dual: bool,
}

/// A causal type: an underlying system (factor list) with the affine hulls of
/// its states and effects.
#[derive(Clone, Debug)]
pub struct CausObject {
    factors: Vec<Factor>,
    states: AffineSubspace,
    effects: AffineSubspace,
    flat_lambda: f64,
}

fn identity_coords_lambda(states: &AffineSubspace, tol: &Tolerances) -> Result<f64, TypeError> {
    let n = states.matrix_dim();
    let b = states.base();
    let tr = b.trace();
    let nb2 = states.base_coords().norm_squared();
    if tr <= 0.0 {
        return Err(TypeError::NotFlat {
            residual: f64::INFINITY,
        });
    }
    let lambda = nb2 / tr;
    let residual = states.distance(&HermElem::identity(n).scale(lambda));
    if residual > tol.member * (1.0 + lambda * n as f64) {
        return Err(TypeError::NotFlat { residual });
    }
    Ok(lambda)
}

impl CausObject {
    /// Builds an object from its state hull; effects are the affine dual.
    pub fn from_states(factors: Vec<Factor>, states: AffineSubspace) -> Result<Self, TypeError> {
        let effects = states.dual()?;
        Self::from_pair(factors, states, effects)
    }

    /// Builds an object from its effect hull; states are the affine dual.
    pub fn from_effects(factors: Vec<Factor>, effects: AffineSubspace) -> Result<Self, TypeError> {
        let states = effects.dual()?;
        Self::from_pair(factors, states, effects)
    }

    fn from_pair(factors: Vec<Factor>, states: AffineSubspace, effects: AffineSubspace) -> Result<Self, TypeError> {
        let dim: usize = factors.iter().map(|f| f.dim).product();
        if states.matrix_dim() != dim {
            return Err(TypeError::DimensionMismatch {
                expected: dim,
                found: states.matrix_dim(),
            });
        }
        let flat_lambda = identity_coords_lambda(&states, &Tolerances::default())?;
        Ok(CausObject {
            factors,
            states,
            effects,
            flat_lambda,
        })
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factor_dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.dim).collect()
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim).product()
    }

    pub fn aff_states(&self) -> &AffineSubspace {
        &self.states
    }

    pub fn aff_effects(&self) -> &AffineSubspace {
        &self.effects
    }

    pub fn flat_lambda(&self) -> f64 {
        self.flat_lambda
    }

    /// The effect hull is a single point (the discard).
    pub fn is_first_order(&self) -> bool {
        self.effects.direction_rank() == 0
    }

    pub fn state_rank(&self) -> usize {
        self.states.direction_rank()
    }

    pub fn effect_rank(&self) -> usize {
        self.effects.direction_rank()
    }

    /// Distance between two objects: the larger of the subspace distances of
    /// their state and effect hulls; infinite if the dimensions differ.
    /// Factor lists are not compared, so `A ⊗ I` and `A` are equal.
    pub fn distance_to(&self, other: &CausObject) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        self.states
            .distance_to(&other.states)
            .max(self.effects.distance_to(&other.effects))
    }

    pub fn approx_eq(&self, other: &CausObject, tol: f64) -> bool {
        self.distance_to(other) <= tol
    }

    /// Reorders the factors: factor `j` of the result is factor `perm[j]`.
    pub fn permute(&self, perm: &[usize]) -> Result<CausObject, TypeError> {
        let dims = self.factor_dims();
        let factors = perm.iter().map(|&p| self.factors[p]).collect();
        Ok(CausObject {
            factors,
            states: self.states.permute_factors(&dims, perm)?,
            effects: self.effects.permute_factors(&dims, perm)?,
            flat_lambda: self.flat_lambda,
        })
    }
}

impl fmt::Display for CausObject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims: Vec<String> = self
            .factors
            .iter()
            .map(|x| if x.dual { format!("{}*", x.dim) } else { x.dim.to_string() })
            .collect();
        write!(
            f,
            "object on [{}]: state rank {}, effect rank {}",
            dims.join(","),
            self.state_rank(),
            self.effect_rank()
        )
    }
}

#[derive(Serialize)]
struct ObjectRepr<'a> {
    factor_dims: Vec<usize>,
    dual_factors: Vec<bool>,
    aff_states: &'a AffineSubspace,
    aff_effects: &'a AffineSubspace,
    first_order: bool,
    flat_lambda: f64,
}

impl Serialize for CausObject {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ObjectRepr {
            factor_dims: self.factor_dims(),
            dual_factors: self.factors.iter().map(|f| f.dual).collect(),
            aff_states: &self.states,
            aff_effects: &self.effects,
            first_order: self.is_first_order(),
            flat_lambda: self.flat_lambda,
        }
        .serialize(serializer)
    }
}

fn plain(dims: &[usize]) -> Vec<Factor> {
    dims.iter().map(|&dim| Factor { dim, dual: false }).collect()
}

/// The first-order object on `d`: normalized states, discard as sole effect.
pub fn mk_first_order(d: usize) -> Result<CausObject, TypeError> {
    first_order_on(&plain(&[d]))
}

/// The monoidal unit.
pub fn unit() -> CausObject {
    mk_first_order(1).expect("unit is well formed")
}

fn first_order_on(factors: &[Factor]) -> Result<CausObject, TypeError> {
    if factors.iter().any(|f| f.dim == 0) {
        return Err(TypeError::ZeroDimension);
    }
    let d: usize = factors.iter().map(|f| f.dim).product();
    let effects = AffineSubspace::point(&HermElem::identity(d));
    CausObject::from_effects(factors.to_vec(), effects)
}

/// `|A|`: same system as `A`, with every normalized state.
pub fn mk_all_states(a: &CausObject) -> CausObject {
    first_order_on(&a.factors).expect("existing object has positive dims")
}

/// Classical object with `n` outcomes: diagonal normalized states.
pub fn mk_classical(n: usize) -> Result<CausObject, TypeError> {
    if n == 0 {
        return Err(TypeError::ZeroDimension);
    }
    let base = HermElem::identity(n).scale(1.0 / n as f64);
    let dirs: Vec<HermElem> = (0..n.saturating_sub(1))
        .map(|i| {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            v[i + 1] = -1.0;
            HermElem::diagonal(&v)
        })
        .collect();
    let span = crate::herm::subspace::span_in(n, &dirs, Tolerances::default().sub)?;
    CausObject::from_states(plain(&[n]), AffineSubspace::new(&base, &span)?)
}

pub fn dual_obj(a: &CausObject) -> CausObject {
    let factors = a
        .factors
        .iter()
        .map(|f| Factor {
            dim: f.dim,
            dual: !f.dual,
        })
        .collect();
    let flat_lambda = identity_coords_lambda(&a.effects, &Tolerances::default())
        .expect("effects of a flat closed object contain a multiple of the identity");
    CausObject {
        factors,
        states: a.effects.clone(),
        effects: a.states.clone(),
        flat_lambda,
    }
}

fn concat(a: &CausObject, b: &CausObject) -> Vec<Factor> {
    a.factors.iter().chain(&b.factors).copied().collect()
}

pub fn tensor_obj(a: &CausObject, b: &CausObject) -> CausObject {
    let states = a.states.tensor(&b.states);
    CausObject::from_states(concat(a, b), states).expect("tensor of flat objects is flat")
}

pub fn par_obj(a: &CausObject, b: &CausObject) -> CausObject {
    let effects = a.effects.tensor(&b.effects);
    CausObject::from_effects(concat(a, b), effects).expect("par of flat objects is flat")
}

pub fn hom_obj(a: &CausObject, b: &CausObject) -> CausObject {
    par_obj(&dual_obj(a), b)
}

/// `A ◁ B`: the states `ρ` of `A ⅋ B` such that `(id_A ⊗ m)(ρ) = 0` for every
/// direction `m` of the effect hull of `B`, i.e. no effect on `B` can steer
/// the reduced state on `A`.
pub fn seq_obj(a: &CausObject, b: &CausObject) -> CausObject {
    let states = seq_states(&a.effects, &b.effects).expect("effect hulls of flat objects are non-zero");
    CausObject::from_states(concat(a, b), states).expect("sequencing of flat objects is flat")
}

/// Verdict and residuals of a membership query.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Membership {
    pub member: bool,
    pub min_eigenvalue: f64,
    pub affine_residual: f64,
}

pub fn membership(a: &CausObject, rho: &HermElem, tol: &Tolerances) -> Result<Membership, TypeError> {
    if rho.dim() != a.dim() {
        return Err(TypeError::DimensionMismatch {
            expected: a.dim(),
            found: rho.dim(),
        });
    }
    let min_eigenvalue = rho.min_eigenvalue();
    let affine_residual = a.states.distance(rho);
    Ok(Membership {
        member: min_eigenvalue >= -tol.psd && affine_residual <= tol.member,
        min_eigenvalue,
        affine_residual,
    })
}

/// `ρ` is PSD and lies on the state hull of `a`.
pub fn member(a: &CausObject, rho: &HermElem) -> bool {
    membership(a, rho, &Tolerances::default()).is_ok_and(|m| m.member)
}

/// A CP map typed as a morphism between causal objects.
#[derive(Clone, Debug)]
pub struct CausMorphism {
    map: ChoiMap,
    source: CausObject,
    target: CausObject,
}

impl CausMorphism {
    pub fn map(&self) -> &ChoiMap {
        &self.map
    }

    pub fn source(&self) -> &CausObject {
        &self.source
    }

    pub fn target(&self) -> &CausObject {
        &self.target
    }

    /// `self ∘ first`.
    pub fn after(&self, first: &CausMorphism) -> Result<CausMorphism, TypeError> {
        let map = self.map.compose(&first.map)?;
        Ok(CausMorphism {
            map,
            source: first.source.clone(),
            target: self.target.clone(),
        })
    }

    pub fn identity(a: &CausObject) -> CausMorphism {
        let dims = a.factor_dims();
        CausMorphism {
            map: crate::cp::identity_map(&dims),
            source: a.clone(),
            target: a.clone(),
        }
    }

    pub fn into_map(self) -> ChoiMap {
        self.map
    }
}

/// Largest residual of `f` mapping the state hull of `a` into that of `b`,
/// tested on the base point and an orthonormal direction basis.
pub fn morphism_affine_residual(f: &ChoiMap, a: &CausObject, b: &CausObject) -> Result<f64, TypeError> {
    if f.in_dim() != a.dim() {
        return Err(TypeError::DimensionMismatch {
            expected: a.dim(),
            found: f.in_dim(),
        });
    }
    if f.out_dim() != b.dim() {
        return Err(TypeError::DimensionMismatch {
            expected: b.dim(),
            found: f.out_dim(),
        });
    }
    let base_img = f.apply(&a.states.base())?;
    let mut residual = b.states.distance(&base_img);
    for d in a.states.directions().elems() {
        let img = f.apply(&d)?.coords();
        let off = &img - b.states.project_directions(&img);
        residual = residual.max(off.norm());
    }
    Ok(residual)
}

/// Types `f` as a morphism `a → b`, reporting CP and affine failures apart.
pub fn check_morphism(f: &ChoiMap, a: &CausObject, b: &CausObject) -> Result<CausMorphism, TypeError> {
    check_morphism_with(f, a, b, &Tolerances::default())
}

pub fn check_morphism_with(
    f: &ChoiMap,
    a: &CausObject,
    b: &CausObject,
    tol: &Tolerances,
) -> Result<CausMorphism, TypeError> {
    let residual = morphism_affine_residual(f, a, b)?;
    let min_eigenvalue = f.min_eigenvalue();
    if min_eigenvalue < -tol.psd {
        return Err(TypeError::NotCp { min_eigenvalue });
    }
    if residual > tol.member {
        return Err(TypeError::AffineFailure { residual });
    }
    let map = f.regroup(a.factor_dims(), b.factor_dims())?;
    Ok(CausMorphism {
        map,
        source: a.clone(),
        target: b.clone(),
    })
}

/// `α_A` with `α·cup` a state of `A ⅋ |A|`.
///
/// The effects of `A ⅋ |A|` are spanned by `π ⊗ I` with `π` an effect of `A`,
/// and `<π ⊗ I, cup> = Tr π`, so `α = 1 / Tr π` must be constant on the effect
/// hull; the check below verifies exactly that.
pub fn alpha_scalar(a: &CausObject) -> Result<f64, TypeError> {
    let base = a.effects.base();
    let tr = base.trace();
    if tr <= 0.0 {
        return Err(TypeError::NoConsistentAlpha {
            residual: f64::INFINITY,
        });
    }
    let alpha = 1.0 / tr;
    let mut residual: f64 = 0.0;
    for d in a.effects.directions().elems() {
        residual = residual.max(d.trace().abs());
    }
    if residual > Tolerances::default().member {
        return Err(TypeError::NoConsistentAlpha { residual });
    }
    Ok(alpha)
}

/// `α_A · cup` on `A ⅋ |A|` (factors `[A, A]`).
pub fn alpha_cup(a: &CausObject) -> Result<HermElem, TypeError> {
    let alpha = alpha_scalar(a)?;
    let d = a.dim();
    Ok(HermElem::hermitized(&crate::cp::omega(d)).scale(alpha))
}

/// Permutation `(A, B, C, D) → (A, C, B, D)` on grouped factor lists.
fn interchange_perm(na: usize, nb: usize, nc: usize, nd: usize) -> Vec<usize> {
    let a = 0..na;
    let b = na..na + nb;
    let c = na + nb..na + nb + nc;
    let d = na + nb + nc..na + nb + nc + nd;
    a.chain(c).chain(b).chain(d).collect()
}

/// The duoidal interchange on elements: `a ⊗ c` reordered to `(A, C, B, D)`
/// must be a state of `(A ⊗ C) ◁ (B ⊗ D)`.
pub fn interchange_check(
    a_state: &HermElem,
    c_state: &HermElem,
    objs: [&CausObject; 4],
) -> Result<bool, TypeError> {
    interchange_residual(a_state, c_state, objs).map(|m| m.member)
}

pub fn interchange_residual(
    a_state: &HermElem,
    c_state: &HermElem,
    objs: [&CausObject; 4],
) -> Result<Membership, TypeError> {
    let [a, b, c, d] = objs;
    let product = a_state.kron(c_state);
    let dims: Vec<usize> = [a, b, c, d].iter().flat_map(|o| o.factor_dims()).collect();
    let perm = interchange_perm(a.factors.len(), b.factors.len(), c.factors.len(), d.factors.len());
    let reordered = product.permute_factors(&dims, &perm)?;
    let target = seq_obj(&tensor_obj(a, c), &tensor_obj(b, d));
    membership(&target, &reordered, &Tolerances::default())
}

/// Conjugation by `u` as a morphism of first-order objects.
pub fn unitary_morphism(u: &CMat, a: &CausObject, b: &CausObject) -> Result<CausMorphism, TypeError> {
    let f = crate::cp::conjugation(u, a.factor_dims(), b.factor_dims())?;
    check_morphism(&f, a, b)
}
