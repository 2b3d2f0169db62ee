//! Real-coordinate view of Hermitian matrices.
//!
//! Every Hermitian `n x n` matrix is a point of a real inner-product space of
//! dimension `n²` under `<X, Y> = Tr(XY)`. [`herm_basis`] fixes an orthonormal
//! basis of that space, and [`HermElem::coords`] / [`HermElem::from_coords`]
//! move between matrices and coordinate vectors. Because the basis is
//! orthonormal, the Hilbert-Schmidt pairing becomes the Euclidean dot product
//! of coordinates, which is what the subspace machinery in [`subspace`] uses.

pub mod subspace;

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::tol::Tolerances;

pub use subspace::{affine_dual, span, subspace_contains, AffineSubspace, LinearSubspace};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HermError {
    #[error("invalid dimension {0}")]
    InvalidDimension(usize),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("affine dual is empty: the set contains the origin, so it is not flat")]
    EmptyDual,
    #[error("bad factor specification: {0}")]
    BadFactors(String),
}

/// An `n x n` complex Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermElem {
    mat: CMat,
}

impl HermElem {
    /// Wraps `mat`, checking squareness and Hermiticity against the default
    /// tolerance.
    pub fn new(mat: CMat) -> Result<Self, HermError> {
        Self::with_tolerance(mat, Tolerances::default().herm)
    }

    pub fn with_tolerance(mat: CMat, tol: f64) -> Result<Self, HermError> {
        let (rows, cols) = mat.shape();
        if rows != cols {
            return Err(HermError::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(HermError::InvalidDimension(0));
        }
        let deviation = hermitian_deviation(&mat);
        if deviation > tol * max_abs(&mat).max(1.0) {
            return Err(HermError::NotHermitian { deviation });
        }
        Ok(HermElem { mat: hermitize(&mat) })
    }

    /// Symmetrizes `(M + M†)/2` without checking; for results of numerical
    /// pipelines that are Hermitian up to rounding.
    pub fn hermitized(mat: &CMat) -> Self {
        assert_eq!(mat.nrows(), mat.ncols(), "hermitized needs a square matrix");
        HermElem { mat: hermitize(mat) }
    }

    pub fn from_real(mat: &DMatrix<f64>) -> Result<Self, HermError> {
        Self::new(mat.map(|x| C64::new(x, 0.0)))
    }

    pub fn identity(n: usize) -> Self {
        HermElem {
            mat: CMat::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        HermElem {
            mat: CMat::zeros(n, n),
        }
    }

    /// `|v><v|`.
    pub fn projector(v: &DVector<C64>) -> Self {
        HermElem::hermitized(&(v * v.adjoint()))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut mat = CMat::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            mat[(i, i)] = C64::new(v, 0.0);
        }
        HermElem { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    /// Hilbert-Schmidt pairing `Tr(self * other)`, real for Hermitian inputs.
    pub fn inner(&self, other: &HermElem) -> f64 {
        assert_eq!(self.dim(), other.dim(), "inner product of mismatched dims");
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let a = self.mat[(i, j)];
                let b = other.mat[(j, i)];
                acc += a.re * b.re - a.im * b.im;
            }
        }
        acc
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.mat.norm()
    }

    pub fn kron(&self, other: &HermElem) -> HermElem {
        HermElem {
            mat: self.mat.kronecker(&other.mat),
        }
    }

    pub fn transpose(&self) -> HermElem {
        HermElem {
            mat: self.mat.transpose(),
        }
    }

    pub fn scale(&self, s: f64) -> HermElem {
        HermElem {
            mat: self.mat.map(|z| z * s),
        }
    }

    /// Coordinates in the [`herm_basis`] ordering.
    pub fn coords(&self) -> DVector<f64> {
        coords_of(&self.mat)
    }

    pub fn from_coords(n: usize, coords: &[f64]) -> Result<Self, HermError> {
        if n == 0 {
            return Err(HermError::InvalidDimension(0));
        }
        if coords.len() != n * n {
            return Err(HermError::DimensionMismatch {
                expected: n * n,
                found: coords.len(),
            });
        }
        Ok(HermElem {
            mat: matrix_of(n, coords),
        })
    }

    /// Eigenvalues in ascending order with matching eigenvector columns.
    pub fn eigh(&self) -> (Vec<f64>, CMat) {
        let eig = SymmetricEigen::new(self.mat.clone());
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMat::from_columns(
            &order
                .iter()
                .map(|&i| eig.eigenvectors.column(i).clone_owned())
                .collect::<Vec<_>>(),
        );
        (values, vectors)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut values: Vec<f64> = self.mat.symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Largest absolute eigenvalue.
    pub fn operator_norm(&self) -> f64 {
        let ev = self.eigenvalues();
        ev[0].abs().max(ev[ev.len() - 1].abs())
    }

    /// Reorders tensor factors: factor `j` of the result is factor `perm[j]`
    /// of `self`.
    pub fn permute_factors(&self, dims: &[usize], perm: &[usize]) -> Result<HermElem, HermError> {
        check_factors(self.dim(), dims)?;
        Ok(HermElem {
            mat: permute_factors(&self.mat, dims, perm)?,
        })
    }

    pub fn partial_trace(&self, dims: &[usize], keep: &[usize]) -> Result<HermElem, HermError> {
        partial_trace(self, dims, keep)
    }
}

impl Add for &HermElem {
    type Output = HermElem;
    fn add(self, rhs: &HermElem) -> HermElem {
        HermElem {
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl Sub for &HermElem {
    type Output = HermElem;
    fn sub(self, rhs: &HermElem) -> HermElem {
        HermElem {
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl Mul<f64> for &HermElem {
    type Output = HermElem;
    fn mul(self, rhs: f64) -> HermElem {
        self.scale(rhs)
    }
}

impl fmt::Display for HermElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.mat)
    }
}

impl Serialize for HermElem {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        matrix_to_pairs(&self.mat).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HermElem {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        let mat = matrix_from_pairs(&rows).map_err(serde::de::Error::custom)?;
        HermElem::new(mat).map_err(serde::de::Error::custom)
    }
}

/// Nested `[re, im]` rows, the on-disk matrix format.
pub fn matrix_to_pairs(mat: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..mat.nrows())
        .map(|i| {
            (0..mat.ncols())
                .map(|j| [mat[(i, j)].re, mat[(i, j)].im])
                .collect()
        })
        .collect()
}

pub fn matrix_from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<CMat, String> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err("ragged matrix rows".into());
    }
    Ok(CMat::from_fn(nrows, ncols, |i, j| {
        C64::new(rows[i][j][0], rows[i][j][1])
    }))
}

/// Orthonormal basis of the real space of `n x n` Hermitian matrices.
///
/// Order: diagonal units `E_ii`, then `(E_ij + E_ji)/√2` for `i < j`, then
/// `i(E_ij - E_ji)/√2` for `i < j` (pairs in row-major order).
pub fn herm_basis(n: usize) -> Result<Vec<HermElem>, HermError> {
    if n == 0 {
        return Err(HermError::InvalidDimension(0));
    }
    let mut out = Vec::with_capacity(n * n);
    let mut e = vec![0.0; n * n];
    for k in 0..n * n {
        e[k] = 1.0;
        out.push(HermElem {
            mat: matrix_of(n, &e),
        });
        e[k] = 0.0;
    }
    Ok(out)
}

fn pair_count(n: usize) -> usize {
    n * (n - 1) / 2
}

pub(crate) fn coords_of(mat: &CMat) -> DVector<f64> {
    let n = mat.nrows();
    let pairs = pair_count(n);
    let mut v = DVector::zeros(n * n);
    for i in 0..n {
        v[i] = mat[(i, i)].re;
    }
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            let z = mat[(i, j)];
            v[n + k] = SQRT_2 * z.re;
            v[n + pairs + k] = SQRT_2 * z.im;
            k += 1;
        }
    }
    v
}

pub(crate) fn matrix_of(n: usize, coords: &[f64]) -> CMat {
    let pairs = pair_count(n);
    let mut mat = CMat::zeros(n, n);
    for i in 0..n {
        mat[(i, i)] = C64::new(coords[i], 0.0);
    }
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            let z = C64::new(coords[n + k], coords[n + pairs + k]) / SQRT_2;
            mat[(i, j)] = z;
            mat[(j, i)] = z.conj();
            k += 1;
        }
    }
    mat
}

fn hermitian_deviation(mat: &CMat) -> f64 {
    let n = mat.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
        }
    }
    dev
}

fn max_abs(mat: &CMat) -> f64 {
    mat.iter().fold(0.0, |m, z| m.max(z.norm()))
}

fn hermitize(mat: &CMat) -> CMat {
    (mat + mat.adjoint()) * C64::new(0.5, 0.0)
}

/// True iff the smallest eigenvalue of `m` is at least `-tol`.
pub fn psd_check(m: &HermElem, tol: f64) -> bool {
    m.min_eigenvalue() >= -tol
}

pub(crate) fn check_factors(total: usize, dims: &[usize]) -> Result<(), HermError> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(HermError::BadFactors(format!("{dims:?}")));
    }
    let prod: usize = dims.iter().product();
    if prod != total {
        return Err(HermError::BadFactors(format!(
            "factors {dims:?} multiply to {prod}, matrix has dimension {total}"
        )));
    }
    Ok(())
}

/// Index map for a factor permutation: `map[new_flat] = old_flat`.
pub(crate) fn permutation_map(dims: &[usize], perm: &[usize]) -> Result<Vec<usize>, HermError> {
    let k = dims.len();
    let mut seen = vec![false; k];
    if perm.len() != k {
        return Err(HermError::BadFactors(format!(
            "permutation {perm:?} does not match {k} factors"
        )));
    }
    for &p in perm {
        if p >= k || seen[p] {
            return Err(HermError::BadFactors(format!("not a permutation: {perm:?}")));
        }
        seen[p] = true;
    }
    // strides of the old layout
    let mut old_stride = vec![1usize; k];
    for i in (0..k.saturating_sub(1)).rev() {
        old_stride[i] = old_stride[i + 1] * dims[i + 1];
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let total: usize = dims.iter().product();
    let mut map = Vec::with_capacity(total);
    let mut digits = vec![0usize; k];
    for _ in 0..total {
        let mut old = 0;
        for j in 0..k {
            old += digits[j] * old_stride[perm[j]];
        }
        map.push(old);
        for j in (0..k).rev() {
            digits[j] += 1;
            if digits[j] < new_dims[j] {
                break;
            }
            digits[j] = 0;
        }
    }
    Ok(map)
}

/// Reorders the tensor factors of a square matrix: factor `j` of the result is
/// factor `perm[j]` of the input.
pub fn permute_factors(mat: &CMat, dims: &[usize], perm: &[usize]) -> Result<CMat, HermError> {
    check_factors(mat.nrows(), dims)?;
    if perm.iter().enumerate().all(|(i, &p)| i == p) && perm.len() == dims.len() {
        return Ok(mat.clone());
    }
    let map = permutation_map(dims, perm)?;
    let n = map.len();
    Ok(CMat::from_fn(n, n, |i, j| mat[(map[i], map[j])]))
}

/// Traces out every factor not listed in `keep`; kept factors retain their
/// relative order.
pub fn partial_trace(m: &HermElem, dims: &[usize], keep: &[usize]) -> Result<HermElem, HermError> {
    Ok(HermElem {
        mat: partial_trace_mat(m.matrix(), dims, keep)?,
    })
}

pub(crate) fn partial_trace_mat(mat: &CMat, dims: &[usize], keep: &[usize]) -> Result<CMat, HermError> {
    check_factors(mat.nrows(), dims)?;
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() || keep_sorted.iter().any(|&k| k >= dims.len()) {
        return Err(HermError::BadFactors(format!("bad keep set {keep:?}")));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep_sorted.contains(i)).collect();
    let perm: Vec<usize> = keep_sorted.iter().chain(traced.iter()).copied().collect();
    let permuted = permute_factors(mat, dims, &perm)?;
    let dk: usize = keep_sorted.iter().map(|&i| dims[i]).product();
    let dt: usize = traced.iter().map(|&i| dims[i]).product();
    let mut out = CMat::zeros(dk, dk);
    for a in 0..dk {
        for b in 0..dk {
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..dt {
                acc += permuted[(a * dt + t, b * dt + t)];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}
