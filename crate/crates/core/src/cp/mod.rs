//! Completely positive maps in Choi form, with the Kraus and Stinespring
//! pictures, structural maps, dilation isometries, shadows and controlled
//! preparations.
//!
//! Choi convention: `J = (Φ ⊗ id)(|Ω⟩⟨Ω|)` with `|Ω⟩ = Σ_i |ii⟩`, so `J` lives
//! on the factors `[outputs..., inputs...]` and `Φ(ρ) = Tr_in[(I ⊗ ρᵀ) J]`.

pub mod wired;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::herm::{self, partial_trace_mat, permute_factors, CMat, HermElem, HermError, C64};
use crate::tol::Tolerances;

pub use crate::herm::partial_trace;
pub use wired::{Wire, Wired};

pub const CHOI_CONVENTION: &str = "(Φ⊗id)(cup)";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CpError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("Choi matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("map is not trace preserving (residual {residual:.3e})")]
    NotTracePreserving { residual: f64 },
    #[error("the dilations do not dilate the same map (residual {residual:.3e})")]
    NoIsometry { residual: f64 },
    #[error("first dilation is not minimal")]
    NotMinimal,
    #[error("shadow construction failed (residual {residual:.3e})")]
    ShadowNotFound { residual: f64 },
    #[error("ctrl needs at least one state")]
    EmptyStates,
    #[error(transparent)]
    Herm(#[from] HermError),
}

fn check_dims(dims: &[usize]) -> Result<(), CpError> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(CpError::ShapeMismatch(format!(
            "factor list {dims:?} must be non-empty with positive entries"
        )));
    }
    Ok(())
}

/// A Hermiticity-preserving linear map in Choi form. Complete positivity is
/// checked by the constructors that promise it; [`ChoiMap::from_choi_unchecked`]
/// admits any Hermitian `J` so that non-CP maps can be represented and
/// rejected downstream.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMap {
    in_dims: Vec<usize>,
    out_dims: Vec<usize>,
    j: HermElem,
}

impl ChoiMap {
    /// Builds a map and checks complete positivity.
    pub fn new(in_dims: Vec<usize>, out_dims: Vec<usize>, j: HermElem) -> Result<Self, CpError> {
        let map = Self::from_choi_unchecked(in_dims, out_dims, j)?;
        let tol = Tolerances::default().psd;
        let min = map.j.min_eigenvalue();
        if min < -tol * map.j.operator_norm().max(1.0) {
            return Err(CpError::NotPsd { min_eigenvalue: min });
        }
        Ok(map)
    }

    pub fn from_choi_unchecked(in_dims: Vec<usize>, out_dims: Vec<usize>, j: HermElem) -> Result<Self, CpError> {
        check_dims(&in_dims)?;
        check_dims(&out_dims)?;
        let expected = in_dims.iter().product::<usize>() * out_dims.iter().product::<usize>();
        if j.dim() != expected {
            return Err(CpError::DimensionMismatch {
                expected,
                found: j.dim(),
            });
        }
        Ok(ChoiMap { in_dims, out_dims, j })
    }

    /// A state viewed as a map from the trivial system.
    pub fn from_state(rho: &HermElem, dims: Vec<usize>) -> Result<Self, CpError> {
        Self::from_choi_unchecked(vec![1], dims, rho.clone())
    }

    /// An effect `ρ ↦ Tr(Eρ)` viewed as a map to the trivial system.
    pub fn from_effect(e: &HermElem, dims: Vec<usize>) -> Result<Self, CpError> {
        Self::from_choi_unchecked(dims, vec![1], e.transpose())
    }

    /// Reads a map back from its bent form on `[inputs..., outputs...]`, the
    /// layout used for states of hom types.
    pub fn from_hom_state(state: &HermElem, in_dims: Vec<usize>, out_dims: Vec<usize>) -> Result<Self, CpError> {
        check_dims(&in_dims)?;
        check_dims(&out_dims)?;
        let dims: Vec<usize> = in_dims.iter().chain(&out_dims).copied().collect();
        let ni = in_dims.len();
        let perm: Vec<usize> = (ni..dims.len()).chain(0..ni).collect();
        let j = permute_factors(state.matrix(), &dims, &perm)?;
        Self::from_choi_unchecked(in_dims, out_dims, HermElem::hermitized(&j))
    }

    pub fn in_dims(&self) -> &[usize] {
        &self.in_dims
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    pub fn in_dim(&self) -> usize {
        self.in_dims.iter().product()
    }

    pub fn out_dim(&self) -> usize {
        self.out_dims.iter().product()
    }

    pub fn choi(&self) -> &HermElem {
        &self.j
    }

    /// Factor list `[outputs..., inputs...]` of the Choi matrix.
    pub fn choi_factors(&self) -> Vec<usize> {
        self.out_dims.iter().chain(&self.in_dims).copied().collect()
    }

    /// The Choi matrix permuted to `[inputs..., outputs...]`.
    pub fn hom_state(&self) -> HermElem {
        let no = self.out_dims.len();
        let dims = self.choi_factors();
        let perm: Vec<usize> = (no..dims.len()).chain(0..no).collect();
        HermElem::hermitized(&permute_factors(self.j.matrix(), &dims, &perm).expect("valid factors"))
    }

    /// Smallest eigenvalue of the Choi matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        self.j.min_eigenvalue()
    }

    pub fn is_cp(&self, tol: f64) -> bool {
        herm::psd_check(&self.j, tol)
    }

    /// Operator norm of `Tr_out J - I_in`.
    pub fn trace_preservation_residual(&self) -> f64 {
        let dims = self.choi_factors();
        let keep: Vec<usize> = (self.out_dims.len()..dims.len()).collect();
        let t = partial_trace_mat(self.j.matrix(), &dims, &keep).expect("valid factors");
        let d = t - CMat::identity(self.in_dim(), self.in_dim());
        HermElem::hermitized(&d).operator_norm()
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.trace_preservation_residual() <= tol
    }

    pub fn is_cptp(&self, tol: &Tolerances) -> bool {
        self.is_cp(tol.psd) && self.is_trace_preserving(tol.member)
    }

    pub(crate) fn wired(&self, outs: &[Wire], ins: &[Wire]) -> Wired {
        assert_eq!(outs.len(), self.out_dims.len());
        assert_eq!(ins.len(), self.in_dims.len());
        let legs = outs
            .iter()
            .copied()
            .zip(self.out_dims.iter().copied())
            .chain(ins.iter().copied().zip(self.in_dims.iter().copied()))
            .collect();
        Wired::new(self.j.matrix().clone(), legs)
    }

    pub(crate) fn from_wired(w: &Wired, ins: &[Wire], outs: &[Wire]) -> ChoiMap {
        let order: Vec<Wire> = outs.iter().chain(ins).copied().collect();
        let r = w.reorder(&order);
        let dim_list = |ws: &[Wire]| -> Vec<usize> {
            if ws.is_empty() {
                vec![1]
            } else {
                ws.iter().map(|&x| r.dim_of(x).unwrap()).collect()
            }
        };
        ChoiMap {
            in_dims: dim_list(ins),
            out_dims: dim_list(outs),
            j: HermElem::hermitized(&r.mat),
        }
    }

    /// Applies the map to an arbitrary (not necessarily Hermitian) matrix.
    pub fn apply_matrix(&self, x: &CMat) -> Result<CMat, CpError> {
        let di = self.in_dim();
        if x.nrows() != di || x.ncols() != di {
            return Err(CpError::DimensionMismatch {
                expected: di,
                found: x.nrows(),
            });
        }
        let d_o = self.out_dim();
        let j = self.j.matrix();
        let mut out = CMat::zeros(d_o, d_o);
        for o in 0..d_o {
            for o2 in 0..d_o {
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..di {
                    for i2 in 0..di {
                        acc += j[(o * di + i, o2 * di + i2)] * x[(i, i2)];
                    }
                }
                out[(o, o2)] = acc;
            }
        }
        Ok(out)
    }

    /// `Tr_in[(I ⊗ ρᵀ) J]`.
    pub fn apply(&self, rho: &HermElem) -> Result<HermElem, CpError> {
        Ok(HermElem::hermitized(&self.apply_matrix(rho.matrix())?))
    }

    /// `self ∘ first`.
    pub fn compose(&self, first: &ChoiMap) -> Result<ChoiMap, CpError> {
        if first.out_dim() != self.in_dim() {
            return Err(CpError::DimensionMismatch {
                expected: self.in_dim(),
                found: first.out_dim(),
            });
        }
        // treat the middle system as a single wire so factor lists need not agree
        let a = ChoiMap::from_choi_unchecked(first.in_dims.clone(), vec![first.out_dim()], first.j.clone())?;
        let b = ChoiMap::from_choi_unchecked(vec![self.in_dim()], self.out_dims.clone(), self.j.clone())?;
        let fi: Vec<Wire> = (0..a.in_dims.len()).collect();
        let mid = 1000;
        let go: Vec<Wire> = (2000..2000 + b.out_dims.len()).collect();
        let w = a.wired(&[mid], &fi).link(&b.wired(&go, &[mid]));
        Ok(ChoiMap::from_wired(&w, &fi, &go))
    }

    /// Parallel composition; inputs `[in_self, in_other]`, outputs likewise.
    pub fn tensor(&self, other: &ChoiMap) -> ChoiMap {
        let (no1, ni1) = (self.out_dims.len(), self.in_dims.len());
        let (no2, ni2) = (other.out_dims.len(), other.in_dims.len());
        let o1: Vec<Wire> = (0..no1).collect();
        let i1: Vec<Wire> = (no1..no1 + ni1).collect();
        let o2: Vec<Wire> = (100..100 + no2).collect();
        let i2: Vec<Wire> = (200..200 + ni2).collect();
        let w = self.wired(&o1, &i1).link(&other.wired(&o2, &i2));
        let ins: Vec<Wire> = i1.iter().chain(&i2).copied().collect();
        let outs: Vec<Wire> = o1.iter().chain(&o2).copied().collect();
        ChoiMap::from_wired(&w, &ins, &outs)
    }

    /// Keeps only the listed output factors, tracing out the rest.
    pub fn trace_outputs(&self, keep: &[usize]) -> Result<ChoiMap, CpError> {
        let dims = self.choi_factors();
        let no = self.out_dims.len();
        let mut keep_all: Vec<usize> = keep.to_vec();
        keep_all.extend(no..dims.len());
        let mut sorted = keep.to_vec();
        sorted.sort_unstable();
        if sorted != keep || keep.iter().any(|&k| k >= no) {
            return Err(CpError::ShapeMismatch(format!("bad output keep set {keep:?}")));
        }
        let j = partial_trace_mat(self.j.matrix(), &dims, &keep_all)?;
        let out_dims: Vec<usize> = if keep.is_empty() {
            vec![1]
        } else {
            keep.iter().map(|&k| self.out_dims[k]).collect()
        };
        ChoiMap::from_choi_unchecked(self.in_dims.clone(), out_dims, HermElem::hermitized(&j))
    }

    /// Reorders factors: `in_perm[j]` names the old input factor placed at
    /// position `j`, likewise for outputs.
    pub fn permute(&self, in_perm: &[usize], out_perm: &[usize]) -> Result<ChoiMap, CpError> {
        let no = self.out_dims.len();
        let perm: Vec<usize> = out_perm
            .iter()
            .copied()
            .chain(in_perm.iter().map(|&p| p + no))
            .collect();
        let j = permute_factors(self.j.matrix(), &self.choi_factors(), &perm)?;
        Ok(ChoiMap {
            in_dims: in_perm.iter().map(|&p| self.in_dims[p]).collect(),
            out_dims: out_perm.iter().map(|&p| self.out_dims[p]).collect(),
            j: HermElem::hermitized(&j),
        })
    }

    /// Same matrix with new factor lists of equal products.
    pub fn regroup(&self, in_dims: Vec<usize>, out_dims: Vec<usize>) -> Result<ChoiMap, CpError> {
        if in_dims.iter().product::<usize>() != self.in_dim() || out_dims.iter().product::<usize>() != self.out_dim() {
            return Err(CpError::ShapeMismatch("regroup must preserve total dimensions".into()));
        }
        ChoiMap::from_choi_unchecked(in_dims, out_dims, self.j.clone())
    }

    pub fn scale(&self, s: f64) -> ChoiMap {
        ChoiMap {
            in_dims: self.in_dims.clone(),
            out_dims: self.out_dims.clone(),
            j: self.j.scale(s),
        }
    }

    /// Frobenius distance between Choi matrices.
    pub fn distance(&self, other: &ChoiMap) -> f64 {
        if self.j.dim() != other.j.dim() {
            return f64::INFINITY;
        }
        (self.j.matrix() - other.j.matrix()).norm()
    }

    /// A Kraus decomposition from the spectral decomposition of `J`.
    pub fn kraus(&self) -> Result<Vec<CMat>, CpError> {
        let (values, vectors) = self.j.eigh();
        let tol = Tolerances::default();
        let lmax = values.last().copied().unwrap_or(0.0);
        if values[0] < -tol.psd * lmax.max(1.0) {
            return Err(CpError::NotPsd {
                min_eigenvalue: values[0],
            });
        }
        let thr = tol.rank_threshold(lmax);
        let (di, d_o) = (self.in_dim(), self.out_dim());
        Ok(values
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, &l)| l > thr)
            .map(|(k, &l)| {
                let s = l.sqrt();
                CMat::from_fn(d_o, di, |o, i| vectors[(o * di + i, k)] * s)
            })
            .collect())
    }
}

#[derive(Serialize, Deserialize)]
struct ChoiRepr {
    in_dims: Vec<usize>,
    out_dims: Vec<usize>,
    #[serde(rename = "J")]
    j: HermElem,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    convention: Option<String>,
}

impl Serialize for ChoiMap {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ChoiRepr {
            in_dims: self.in_dims.clone(),
            out_dims: self.out_dims.clone(),
            j: self.j.clone(),
            convention: Some(CHOI_CONVENTION.to_string()),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ChoiMap {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let r = ChoiRepr::deserialize(deserializer)?;
        if let Some(c) = &r.convention {
            if c != CHOI_CONVENTION {
                return Err(serde::de::Error::custom(format!("unsupported Choi convention `{c}`")));
            }
        }
        ChoiMap::from_choi_unchecked(r.in_dims, r.out_dims, r.j).map_err(serde::de::Error::custom)
    }
}

/// `J = Σ_k vec(K_k) vec(K_k)†` with `vec` row-major over `(out, in)`.
pub fn choi_of_kraus(kraus: &[CMat], in_dims: Vec<usize>, out_dims: Vec<usize>) -> Result<ChoiMap, CpError> {
    check_dims(&in_dims)?;
    check_dims(&out_dims)?;
    let di: usize = in_dims.iter().product();
    let d_o: usize = out_dims.iter().product();
    let mut j = CMat::zeros(di * d_o, di * d_o);
    for k in kraus {
        if k.shape() != (d_o, di) {
            return Err(CpError::ShapeMismatch(format!(
                "Kraus operator is {}x{}, expected {d_o}x{di}",
                k.nrows(),
                k.ncols()
            )));
        }
        let v = DVector::from_fn(di * d_o, |r, _| k[(r / di, r % di)]);
        j += &v * v.adjoint();
    }
    ChoiMap::from_choi_unchecked(in_dims, out_dims, HermElem::hermitized(&j))
}

pub(crate) fn omega(d: usize) -> CMat {
    let mut m = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for k in 0..d {
            m[(i * d + i, k * d + k)] = C64::new(1.0, 0.0);
        }
    }
    m
}

pub fn swap_unitary(d1: usize, d2: usize) -> CMat {
    let n = d1 * d2;
    let mut s = CMat::zeros(n, n);
    for a in 0..d1 {
        for b in 0..d2 {
            s[(b * d1 + a, a * d2 + b)] = C64::new(1.0, 0.0);
        }
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Structural {
    /// `|Ω⟩⟨Ω|` as a state on `[d, d]`.
    Cup(usize),
    /// `⟨Ω|·|Ω⟩` as an effect on `[d, d]`.
    Cap(usize),
    /// The trace.
    Discard(usize),
    /// Prepare `I/d`.
    Mix(usize),
    Identity(usize),
    /// `[d1, d2] → [d2, d1]`.
    Swap(usize, usize),
}

pub fn structural(kind: Structural) -> Result<ChoiMap, CpError> {
    let h = HermElem::hermitized;
    match kind {
        Structural::Cup(d) => ChoiMap::from_choi_unchecked(vec![1], vec![d, d], h(&omega(d))),
        Structural::Cap(d) => ChoiMap::from_choi_unchecked(vec![d, d], vec![1], h(&omega(d))),
        Structural::Discard(d) => ChoiMap::from_choi_unchecked(vec![d], vec![1], HermElem::identity(d)),
        Structural::Mix(d) => {
            check_dims(&[d])?;
            ChoiMap::from_choi_unchecked(vec![1], vec![d], HermElem::identity(d).scale(1.0 / d as f64))
        }
        Structural::Identity(d) => ChoiMap::from_choi_unchecked(vec![d], vec![d], h(&omega(d))),
        Structural::Swap(d1, d2) => {
            check_dims(&[d1, d2])?;
            choi_of_kraus(&[swap_unitary(d1, d2)], vec![d1, d2], vec![d2, d1])
        }
    }
}

/// Identity channel on a factor list.
pub fn identity_map(dims: &[usize]) -> ChoiMap {
    let d: usize = dims.iter().product();
    ChoiMap::from_choi_unchecked(dims.to_vec(), dims.to_vec(), HermElem::hermitized(&omega(d)))
        .expect("positive dims")
}

/// Conjugation by a unitary (or any operator) `u`.
pub fn conjugation(u: &CMat, in_dims: Vec<usize>, out_dims: Vec<usize>) -> Result<ChoiMap, CpError> {
    choi_of_kraus(std::slice::from_ref(u), in_dims, out_dims)
}

/// A Stinespring dilation `V : in → out ⊗ env`, stored as the matrix with rows
/// indexed by `(o, e)` (environment fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct Dilation {
    v: CMat,
    in_dims: Vec<usize>,
    out_dims: Vec<usize>,
    env_dim: usize,
}

impl Dilation {
    pub fn new(v: CMat, in_dims: Vec<usize>, out_dims: Vec<usize>, env_dim: usize) -> Result<Self, CpError> {
        check_dims(&in_dims)?;
        check_dims(&out_dims)?;
        let di: usize = in_dims.iter().product();
        let d_o: usize = out_dims.iter().product();
        if v.shape() != (d_o * env_dim, di) || env_dim == 0 {
            return Err(CpError::ShapeMismatch(format!(
                "dilation matrix is {}x{}, expected {}x{di}",
                v.nrows(),
                v.ncols(),
                d_o * env_dim
            )));
        }
        Ok(Dilation {
            v,
            in_dims,
            out_dims,
            env_dim,
        })
    }

    pub fn matrix(&self) -> &CMat {
        &self.v
    }

    pub fn env_dim(&self) -> usize {
        self.env_dim
    }

    pub fn in_dims(&self) -> &[usize] {
        &self.in_dims
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    fn in_dim(&self) -> usize {
        self.in_dims.iter().product()
    }

    fn out_dim(&self) -> usize {
        self.out_dims.iter().product()
    }

    /// `‖V†V − I‖` in operator norm.
    pub fn isometry_residual(&self) -> f64 {
        let g = self.v.adjoint() * &self.v - CMat::identity(self.in_dim(), self.in_dim());
        HermElem::hermitized(&g).operator_norm()
    }

    /// Kraus operators `K_e = (I ⊗ ⟨e|) V`.
    pub fn kraus(&self) -> Vec<CMat> {
        let (d_o, di, de) = (self.out_dim(), self.in_dim(), self.env_dim);
        (0..de)
            .map(|e| CMat::from_fn(d_o, di, |o, i| self.v[(o * de + e, i)]))
            .collect()
    }

    /// The dilated channel `ρ ↦ Tr_env[VρV†]`.
    pub fn channel(&self) -> ChoiMap {
        choi_of_kraus(&self.kraus(), self.in_dims.clone(), self.out_dims.clone()).expect("consistent shapes")
    }

    /// The pure map `ρ ↦ VρV†` with outputs `[out..., env]`.
    pub fn pure_map(&self) -> ChoiMap {
        let mut outs = self.out_dims.clone();
        outs.push(self.env_dim);
        choi_of_kraus(std::slice::from_ref(&self.v), self.in_dims.clone(), outs).expect("consistent shapes")
    }

    /// The complementary channel `ρ ↦ Tr_out[VρV†]`.
    pub fn complementary(&self) -> ChoiMap {
        let (d_o, di, de) = (self.out_dim(), self.in_dim(), self.env_dim);
        let ks: Vec<CMat> = (0..d_o)
            .map(|o| CMat::from_fn(de, di, |e, i| self.v[(o * de + e, i)]))
            .collect();
        choi_of_kraus(&ks, self.in_dims.clone(), vec![de]).expect("consistent shapes")
    }

    /// `V̂[e, (o, i)] = V[(o, e), i]`, the matrix whose rows are the Kraus
    /// operators flattened.
    pub(crate) fn env_rows(&self) -> CMat {
        let (d_o, di, de) = (self.out_dim(), self.in_dim(), self.env_dim);
        CMat::from_fn(de, d_o * di, |e, c| self.v[((c / di) * de + e, c % di)])
    }

    pub(crate) fn from_env_rows(rows: &CMat, in_dims: Vec<usize>, out_dims: Vec<usize>) -> Result<Self, CpError> {
        let di: usize = in_dims.iter().product();
        let d_o: usize = out_dims.iter().product();
        let de = rows.nrows();
        let v = CMat::from_fn(d_o * de, di, |r, i| rows[(r % de, (r / de) * di + i)]);
        Dilation::new(v, in_dims, out_dims, de)
    }

    /// Appends the environment isometry `w : env → env'`.
    pub fn then_env(&self, w: &CMat) -> Result<Dilation, CpError> {
        if w.ncols() != self.env_dim {
            return Err(CpError::DimensionMismatch {
                expected: self.env_dim,
                found: w.ncols(),
            });
        }
        Dilation::from_env_rows(&(w * self.env_rows()), self.in_dims.clone(), self.out_dims.clone())
    }
}

/// Minimal Stinespring dilation: one environment level per nonzero eigenvalue
/// of the Choi matrix.
pub fn stinespring(j: &ChoiMap) -> Result<Dilation, CpError> {
    let ks = j.kraus()?;
    let (d_o, di) = (j.out_dim(), j.in_dim());
    let de = ks.len().max(1);
    let mut v = CMat::zeros(d_o * de, di);
    for (e, k) in ks.iter().enumerate() {
        for o in 0..d_o {
            for i in 0..di {
                v[(o * de + e, i)] = k[(o, i)];
            }
        }
    }
    Dilation::new(v, j.in_dims.clone(), j.out_dims.clone(), de)
}

/// An isometry `v` with `v†v = I`.
#[derive(Clone, Debug, PartialEq)]
pub struct Isometry {
    v: CMat,
}

impl Isometry {
    pub fn new(v: CMat, tol: f64) -> Result<Self, CpError> {
        let g = v.adjoint() * &v - CMat::identity(v.ncols(), v.ncols());
        let residual = HermElem::hermitized(&g).operator_norm();
        if residual > tol {
            return Err(CpError::NoIsometry { residual });
        }
        Ok(Isometry { v })
    }

    pub fn matrix(&self) -> &CMat {
        &self.v
    }

    pub fn d_in(&self) -> usize {
        self.v.ncols()
    }

    pub fn d_out(&self) -> usize {
        self.v.nrows()
    }

    pub fn channel(&self) -> ChoiMap {
        conjugation(&self.v, vec![self.d_in()], vec![self.d_out()]).expect("consistent shapes")
    }
}

/// Moore-Penrose pseudo-inverse with the crate's rank rule.
pub(crate) fn pinv(m: &CMat) -> CMat {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let thr = Tolerances::default().rank_threshold(smax);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut out = CMat::zeros(m.ncols(), m.nrows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > thr {
            out += vt.row(k).adjoint() * u.column(k).adjoint() * C64::new(1.0 / s, 0.0);
        }
    }
    out
}

fn matrix_rank(m: &CMat) -> usize {
    let sv = m.singular_values();
    let thr = Tolerances::default().rank_threshold(sv.max());
    sv.iter().filter(|&&s| s > thr).count()
}

/// The environment isometry `v` with `(I ⊗ v) P1 = P2`, for `P1` minimal.
pub fn dilation_isometry(p1: &Dilation, p2: &Dilation) -> Result<Isometry, CpError> {
    if p1.in_dim() != p2.in_dim() || p1.out_dim() != p2.out_dim() {
        return Err(CpError::ShapeMismatch("dilations of maps with different shapes".into()));
    }
    let residual = p1.channel().distance(&p2.channel());
    if residual > 1e-8 {
        return Err(CpError::NoIsometry { residual });
    }
    let r1 = p1.env_rows();
    if matrix_rank(&r1) < p1.env_dim || p1.env_dim > p2.env_dim {
        return Err(CpError::NotMinimal);
    }
    let r2 = p2.env_rows();
    let v = &r2 * pinv(&r1);
    let residual = (&v * &r1 - &r2).norm();
    if residual > 1e-8 {
        return Err(CpError::NoIsometry { residual });
    }
    Isometry::new(v, 1e-9)
}

/// Result of [`shadow`]: the map and the residuals of its defining equations.
#[derive(Clone, Debug)]
pub struct ShadowReport {
    pub map: ChoiMap,
    /// `‖π∘π − π‖` on Choi matrices.
    pub idempotence: f64,
    /// Trace-preservation residual of `π`.
    pub trace_preservation: f64,
    /// `‖(id ⊗ π)∘P − P‖` on Choi matrices.
    pub absorb_dilation: f64,
    /// `‖Σ∘π∘P − Σ∘P‖` on Choi matrices, with `Σ` acting on the environment.
    pub absorb_continuation: f64,
}

impl ShadowReport {
    pub fn max_residual(&self) -> f64 {
        self.idempotence
            .max(self.trace_preservation)
            .max(self.absorb_dilation)
            .max(self.absorb_continuation)
    }
}

/// Conditional expectation onto the support of the environment marginal of
/// `p`: `π(x) = PxP + Tr((I − P)x) ω` with `ω = P / rank P`.
///
/// `sigma` is the continuation that consumes the environment of `p`.
pub fn shadow(sigma: &ChoiMap, p: &Dilation) -> Result<ShadowReport, CpError> {
    let de = p.env_dim();
    if sigma.in_dim() != de {
        return Err(CpError::DimensionMismatch {
            expected: de,
            found: sigma.in_dim(),
        });
    }
    // environment marginal on the maximally mixed input spans the reachable support
    let di = p.in_dim();
    let marginal = p
        .complementary()
        .apply(&HermElem::identity(di).scale(1.0 / di as f64))?;
    let (values, vectors) = marginal.eigh();
    let lmax = values.last().copied().unwrap_or(0.0);
    let thr = Tolerances::default().rank_threshold(lmax);
    let support: Vec<usize> = (0..de).filter(|&k| values[k] > thr).collect();
    let mut proj = CMat::zeros(de, de);
    for &k in &support {
        let c = vectors.column(k);
        proj += c * c.adjoint();
    }
    let rank = support.len().max(1);
    let complement = CMat::identity(de, de) - &proj;

    let mut kraus: Vec<CMat> = vec![proj.clone()];
    // Tr((I−P)x) ω = Σ_{k,l} √ω_k |k⟩⟨f_l| x |f_l⟩⟨k| √ω_k over an eigenbasis
    let (cv, cvecs) = HermElem::hermitized(&complement).eigh();
    for &k in &support {
        let ok = vectors.column(k) * C64::new((1.0 / rank as f64).sqrt(), 0.0);
        for (l, &lam) in cv.iter().enumerate() {
            if lam > 0.5 {
                kraus.push(&ok * cvecs.column(l).adjoint());
            }
        }
    }
    let pi = choi_of_kraus(&kraus, vec![de], vec![de])?;

    let idempotence = pi.compose(&pi)?.distance(&pi);
    let trace_preservation = pi.trace_preservation_residual();
    let pure = p.pure_map();
    let n_out = p.out_dims().len();
    let lifted = identity_map(p.out_dims()).tensor(&pi);
    let lifted = lifted.regroup(pure.out_dims().to_vec(), pure.out_dims().to_vec())?;
    let absorb_dilation = lifted.compose(&pure)?.distance(&pure);
    let env_only = pure.trace_outputs(&[n_out])?;
    let absorb_continuation = sigma
        .compose(&pi.compose(&env_only)?)?
        .distance(&sigma.compose(&env_only)?);
    Ok(ShadowReport {
        map: pi,
        idempotence,
        trace_preservation,
        absorb_dilation,
        absorb_continuation,
    })
}

/// The classical system with `n` outcomes, realised as diagonal matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassicalObject {
    n: usize,
}

impl ClassicalObject {
    pub fn new(n: usize) -> Result<Self, CpError> {
        check_dims(&[n])?;
        Ok(ClassicalObject { n })
    }

    pub fn outcomes(&self) -> usize {
        self.n
    }

    pub fn point(&self, i: usize) -> HermElem {
        let mut p = vec![0.0; self.n];
        p[i] = 1.0;
        HermElem::diagonal(&p)
    }

    pub fn distribution(&self, p: &[f64]) -> Result<HermElem, CpError> {
        if p.len() != self.n {
            return Err(CpError::DimensionMismatch {
                expected: self.n,
                found: p.len(),
            });
        }
        Ok(HermElem::diagonal(p))
    }
}

/// `ctrl{ρ_i}`: dephase the classical input and prepare `ρ_i` on outcome `i`.
/// Choi matrix `Σ_i ρ_i ⊗ |i⟩⟨i|`.
pub fn ctrl(states: &[HermElem]) -> Result<ChoiMap, CpError> {
    let Some(first) = states.first() else {
        return Err(CpError::EmptyStates);
    };
    let d = first.dim();
    let n = states.len();
    let mut j = CMat::zeros(d * n, d * n);
    for (i, rho) in states.iter().enumerate() {
        if rho.dim() != d {
            return Err(CpError::DimensionMismatch {
                expected: d,
                found: rho.dim(),
            });
        }
        for a in 0..d {
            for b in 0..d {
                j[(a * n + i, b * n + i)] = rho.matrix()[(a, b)];
            }
        }
    }
    ChoiMap::new(vec![n], vec![d], HermElem::hermitized(&j))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pauli_x() -> CMat {
        CMat::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
    }

    fn ket0() -> HermElem {
        HermElem::diagonal(&[1.0, 0.0])
    }

    fn sample_state() -> HermElem {
        HermElem::new(CMat::from_row_slice(2, 2, &[c(0.7, 0.), c(0.1, -0.2), c(0.1, 0.2), c(0.3, 0.)])).unwrap()
    }

    #[test]
    fn identity_choi_is_omega() {
        let id = choi_of_kraus(&[CMat::identity(2, 2)], vec![2], vec![2]).unwrap();
        assert!((id.choi().matrix() - omega(2)).norm() < 1e-15);
        assert!((id.choi().trace() - 2.0).abs() < 1e-15);
        let ev = id.choi().eigenvalues();
        assert_eq!(ev.iter().filter(|&&x| x > 1e-12).count(), 1);
    }

    #[test]
    fn reset_channel_choi() {
        // Kraus {|0><0|, |0><1|}: J = |0><0| ⊗ I on [out, in]
        let k0 = CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]);
        let k1 = CMat::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
        let j = choi_of_kraus(&[k0, k1], vec![2], vec![2]).unwrap();
        let expect = ket0().kron(&HermElem::identity(2));
        assert!((j.choi().matrix() - expect.matrix()).norm() < 1e-15);
        assert!((j.choi().trace() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn empty_kraus_is_zero_map() {
        let z = choi_of_kraus(&[], vec![2], vec![3]).unwrap();
        assert_eq!(z.choi().norm(), 0.0);
        assert!(choi_of_kraus(&[CMat::identity(3, 3)], vec![2], vec![2]).is_err());
    }

    #[test]
    fn apply_examples() {
        let id = identity_map(&[2]);
        let rho = sample_state();
        assert!((id.apply(&rho).unwrap().matrix() - rho.matrix()).norm() < 1e-15);
        let disc = structural(Structural::Discard(2)).unwrap();
        assert!((disc.apply(&rho).unwrap().trace() - rho.trace()).abs() < 1e-15);
        let flip = conjugation(&pauli_x(), vec![2], vec![2]).unwrap();
        let out = flip.apply(&ket0()).unwrap();
        assert!((out.matrix() - HermElem::diagonal(&[0.0, 1.0]).matrix()).norm() < 1e-15);
        assert!(id.apply(&HermElem::identity(3)).is_err());
    }

    #[test]
    fn apply_matches_kraus_action_with_complex_entries() {
        let k = CMat::from_row_slice(2, 2, &[c(0.3, 0.4), c(-0.2, 0.1), c(0.5, -0.6), c(0.0, 0.7)]);
        let j = choi_of_kraus(std::slice::from_ref(&k), vec![2], vec![2]).unwrap();
        let rho = sample_state();
        let direct = &k * rho.matrix() * k.adjoint();
        assert!((j.apply(&rho).unwrap().matrix() - direct).norm() < 1e-14);
    }

    #[test]
    fn structural_traces_and_snake() {
        for d in [2, 3, 4] {
            let cup = structural(Structural::Cup(d)).unwrap();
            assert!((cup.choi().trace() - d as f64).abs() < 1e-14);
            // (cap ⊗ id) ∘ (id ⊗ cup) = id, wired explicitly: cup on wires (1,2),
            // cap on (0,1), input on 0, output on 2
            let cap = structural(Structural::Cap(d)).unwrap();
            let w = cup.wired(&[1, 2], &[99]).link(&cap.wired(&[98], &[0, 1]));
            let snake = ChoiMap::from_wired(&w, &[0, 99], &[2, 98]);
            let snake = snake.regroup(vec![d], vec![d]).unwrap();
            assert!(snake.distance(&identity_map(&[d])) < 1e-12);
        }
        let disc = structural(Structural::Discard(2)).unwrap();
        assert!((disc.apply(&sample_state()).unwrap().trace() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn partial_trace_of_cup() {
        let cup = structural(Structural::Cup(2)).unwrap();
        let t = partial_trace(cup.choi(), &[2, 2], &[]).unwrap();
        assert!((t.matrix()[(0, 0)].re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn swap_exchanges_product_states() {
        let s = structural(Structural::Swap(2, 3)).unwrap();
        let a = sample_state();
        let b = HermElem::diagonal(&[0.2, 0.3, 0.5]);
        let out = s.apply(&a.kron(&b)).unwrap();
        assert!((out.matrix() - b.kron(&a).matrix()).norm() < 1e-14);
    }

    #[test]
    fn composition_and_tensor() {
        let flip = conjugation(&pauli_x(), vec![2], vec![2]).unwrap();
        let twice = flip.compose(&flip).unwrap();
        assert!(twice.distance(&identity_map(&[2])) < 1e-14);
        let t = flip.tensor(&identity_map(&[3]));
        let rho = sample_state();
        let b = HermElem::diagonal(&[0.2, 0.3, 0.5]);
        let out = t.apply(&rho.kron(&b)).unwrap();
        let expect = flip.apply(&rho).unwrap().kron(&b);
        assert!((out.matrix() - expect.matrix()).norm() < 1e-14);
    }

    #[test]
    fn stinespring_examples() {
        let id = identity_map(&[2]);
        let v = stinespring(&id).unwrap();
        assert_eq!(v.env_dim(), 1);
        assert!(v.isometry_residual() < 1e-12);
        // replace with I/2: Choi I/2 ⊗ I, rank 4
        let dep = ChoiMap::new(vec![2], vec![2], HermElem::identity(4).scale(0.5)).unwrap();
        assert_eq!(stinespring(&dep).unwrap().env_dim(), 4);
        // measure and prepare in Z: Kraus |k><k|
        let p0 = CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]);
        let p1 = CMat::from_row_slice(2, 2, &[c(0., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]);
        let mp = choi_of_kraus(&[p0, p1], vec![2], vec![2]).unwrap();
        let d = stinespring(&mp).unwrap();
        assert_eq!(d.env_dim(), 2);
        assert!(d.channel().distance(&mp) < 1e-12);
    }

    #[test]
    fn dilation_isometry_examples() {
        let p0 = CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]);
        let p1 = CMat::from_row_slice(2, 2, &[c(0., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]);
        let mp = choi_of_kraus(&[p0, p1], vec![2], vec![2]).unwrap();
        let d1 = stinespring(&mp).unwrap();
        let v = dilation_isometry(&d1, &d1).unwrap();
        assert!((v.matrix() - CMat::identity(2, 2)).norm() < 1e-10);

        let u = CMat::from_row_slice(2, 2, &[c(0.6, 0.), c(0., 0.8), c(0., 0.8), c(0.6, 0.)]);
        let d2 = d1.then_env(&u).unwrap();
        let v = dilation_isometry(&d1, &d2).unwrap();
        assert!((v.matrix() - &u).norm() < 1e-8);

        // pad the environment with |0>
        let pad = CMat::from_fn(4, 2, |r, col| if r == 2 * col { c(1., 0.) } else { c(0., 0.) });
        let d3 = d1.then_env(&pad).unwrap();
        let v = dilation_isometry(&d1, &d3).unwrap();
        assert!((v.matrix() - &pad).norm() < 1e-8);

        let other = stinespring(&identity_map(&[2])).unwrap();
        assert!(matches!(dilation_isometry(&d1, &other), Err(CpError::NoIsometry { .. })));
    }

    #[test]
    fn shadow_on_padded_environment() {
        let p0 = CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]);
        let p1 = CMat::from_row_slice(2, 2, &[c(0., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]);
        let mp = choi_of_kraus(&[p0, p1], vec![2], vec![2]).unwrap();
        let d1 = stinespring(&mp).unwrap();
        let pad = CMat::from_fn(4, 2, |r, col| if r == 2 * col { c(1., 0.) } else { c(0., 0.) });
        let d3 = d1.then_env(&pad).unwrap();
        let sigma = structural(Structural::Discard(4)).unwrap();
        let report = shadow(&sigma, &d3).unwrap();
        assert!(report.max_residual() < 1e-8);
        // identical decomposition: the support is everything, π = id
        let same = shadow(&structural(Structural::Discard(2)).unwrap(), &d1).unwrap();
        assert!(same.map.distance(&identity_map(&[2])) < 1e-10);
    }

    #[test]
    fn ctrl_examples() {
        let rho = sample_state();
        let single = ctrl(std::slice::from_ref(&rho)).unwrap();
        let out = single.apply(&HermElem::identity(1)).unwrap();
        assert!((out.matrix() - rho.matrix()).norm() < 1e-15);

        let k0 = ket0();
        let k1 = HermElem::diagonal(&[0.0, 1.0]);
        let c2 = ctrl(&[k0.clone(), k1.clone()]).unwrap();
        let cl = ClassicalObject::new(2).unwrap();
        let mid = c2.apply(&cl.distribution(&[0.5, 0.5]).unwrap()).unwrap();
        assert!((mid.matrix() - HermElem::identity(2).scale(0.5).matrix()).norm() < 1e-15);
        let mix = c2.apply(&cl.distribution(&[0.3, 0.7]).unwrap()).unwrap();
        let expect = &k0.scale(0.3) + &k1.scale(0.7);
        assert!((mix.matrix() - expect.matrix()).norm() < 1e-12);
        assert!(matches!(ctrl(&[]), Err(CpError::EmptyStates)));
    }

    #[test]
    fn hom_state_roundtrip() {
        let k = CMat::from_fn(3, 2, |r, col| c(r as f64 + 0.5, col as f64 - 0.3));
        let f = choi_of_kraus(&[k], vec![2], vec![3]).unwrap();
        let back = ChoiMap::from_hom_state(&f.hom_state(), vec![2], vec![3]).unwrap();
        assert!(back.distance(&f) < 1e-15);
    }
}
