//! Linear and affine subspaces of the real Hermitian space.
//!
//! An [`AffineSubspace`] stores its minimum-norm base point `b` together with
//! its direction space in one of two forms: an explicit orthonormal basis, or
//! the orthonormal complement of the direction space inside `b^⊥`. The second
//! form makes affine duality a relabelling: the dual of
//! `b + span(D)` is `b/|b|² + (D ∪ {b})^⊥`, so both forms occur naturally and
//! the cheaper one is kept for large ambient dimensions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{coords_of, matrix_of, permutation_map, HermElem, HermError};
use crate::tol::Tolerances;

/// Orthonormal basis (as coordinate columns) of a subspace of `ℝ^{n²}`.
#[derive(Clone, Debug)]
pub struct LinearSubspace {
    n: usize,
    basis: DMatrix<f64>,
}

impl LinearSubspace {
    pub fn zero(n: usize) -> Self {
        LinearSubspace {
            n,
            basis: DMatrix::zeros(n * n, 0),
        }
    }

    pub fn full(n: usize) -> Self {
        LinearSubspace {
            n,
            basis: DMatrix::identity(n * n, n * n),
        }
    }

    /// Side length of the matrices.
    pub fn matrix_dim(&self) -> usize {
        self.n
    }

    /// Real dimension `n²` of the ambient space.
    pub fn ambient(&self) -> usize {
        self.n * self.n
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn coords(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn elems(&self) -> Vec<HermElem> {
        self.basis
            .column_iter()
            .map(|c| HermElem {
                mat: matrix_of(self.n, c.as_slice()),
            })
            .collect()
    }

    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.basis.transpose() * v)
    }

    /// Norm of the component of `v` orthogonal to the subspace.
    pub fn residual(&self, v: &DVector<f64>) -> f64 {
        (v - self.project(v)).norm()
    }

    pub fn contains(&self, m: &HermElem, tol: f64) -> bool {
        m.dim() == self.n && self.residual(&m.coords()) <= tol
    }

    /// Largest entrywise deviation of the Gram matrix from the identity.
    pub fn gram_deviation(&self) -> f64 {
        let k = self.rank();
        let g = self.basis.transpose() * &self.basis;
        (g - DMatrix::identity(k, k)).amax()
    }

    pub fn orthogonal_complement(&self) -> LinearSubspace {
        LinearSubspace {
            n: self.n,
            basis: orth_complement(&self.basis),
        }
    }

    /// Largest residual of a basis vector of `other` against `self`.
    pub fn containment_residual(&self, other: &LinearSubspace) -> f64 {
        column_residual(&self.basis, &other.basis)
    }
}

impl PartialEq for LinearSubspace {
    fn eq(&self, other: &Self) -> bool {
        let tol = Tolerances::default().sub;
        self.n == other.n
            && self.rank() == other.rank()
            && self.containment_residual(other) <= tol
            && other.containment_residual(self) <= tol
    }
}

/// Orthonormal basis of the real span of `vectors`. Directions whose singular
/// value is at most `tol * max(sigma_max, 1)` are dropped.
pub fn span(vectors: &[HermElem], tol: f64) -> Result<LinearSubspace, HermError> {
    let Some(first) = vectors.first() else {
        return Err(HermError::BadFactors(
            "span of an empty list needs an explicit dimension; use LinearSubspace::zero".into(),
        ));
    };
    let n = first.dim();
    for v in vectors {
        if v.dim() != n {
            return Err(HermError::DimensionMismatch {
                expected: n,
                found: v.dim(),
            });
        }
    }
    let cols: Vec<DVector<f64>> = vectors.iter().map(HermElem::coords).collect();
    let m = DMatrix::from_columns(&cols);
    Ok(LinearSubspace {
        n,
        basis: orthonormal_columns(&m, tol),
    })
}

/// Span for a possibly empty list with an explicit matrix dimension.
pub fn span_in(n: usize, vectors: &[HermElem], tol: f64) -> Result<LinearSubspace, HermError> {
    if vectors.is_empty() {
        Ok(LinearSubspace::zero(n))
    } else {
        let s = span(vectors, tol)?;
        if s.n != n {
            return Err(HermError::DimensionMismatch {
                expected: n,
                found: s.n,
            });
        }
        Ok(s)
    }
}

/// Orthonormal basis of the column space, with the scale-aware cut-off.
pub(crate) fn orthonormal_columns(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let rows = m.nrows();
    if m.ncols() == 0 || rows == 0 {
        return DMatrix::zeros(rows, 0);
    }
    // column-pivoted Householder QR; rank from the diagonal of R
    let qr = m.clone().col_piv_qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..r.nrows().min(r.ncols())).map(|i| r[(i, i)].abs()).collect();
    let rmax = diag.iter().copied().fold(0.0_f64, f64::max);
    let thr = tol * rmax.max(1.0);
    let rank = diag.iter().take_while(|&&d| d > thr).count();
    let q = qr.q();
    q.columns(0, rank).into_owned()
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns `q`, via Householder reflections.
pub(crate) fn orth_complement(q: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = q.shape();
    if k == 0 {
        return DMatrix::identity(n, n);
    }
    let mut a = q.clone();
    let mut reflectors: Vec<DVector<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        let x = a.view((j, j), (n - j, 1)).column(0).clone_owned();
        let norm = x.norm();
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let vn = v.norm();
        if vn > 0.0 {
            v /= vn;
        }
        let mut block = a.view_mut((j, j), (n - j, k - j));
        let w = block.tr_mul(&v);
        block.ger(-2.0, &v, &w, 1.0);
        reflectors.push(v);
    }
    // Q = H_0 H_1 ... H_{k-1}; the complement is Q applied to e_k..e_{n-1}.
    let mut out = DMatrix::zeros(n, n - k);
    for c in 0..n - k {
        out[(k + c, c)] = 1.0;
    }
    for j in (0..k).rev() {
        let v = &reflectors[j];
        let mut block = out.view_mut((j, 0), (n - j, n - k));
        let w = block.tr_mul(v);
        block.ger(-2.0, v, &w, 1.0);
    }
    out
}

/// Largest norm of a column of `cols` after removing its projection onto the
/// orthonormal columns of `basis`.
fn column_residual(basis: &DMatrix<f64>, cols: &DMatrix<f64>) -> f64 {
    if cols.ncols() == 0 {
        return 0.0;
    }
    let r = cols - basis * (basis.tr_mul(cols));
    r.column_iter().fold(0.0_f64, |m, c| m.max(c.norm()))
}

fn hcat(parts: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = parts.iter().map(|p| p.nrows()).max().unwrap_or(0);
    let cols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        if p.ncols() > 0 {
            out.view_mut((0, at), (rows, p.ncols())).copy_from(*p);
        }
        at += p.ncols();
    }
    out
}

fn unit_column(b: &DVector<f64>) -> DMatrix<f64> {
    let nb = b.norm();
    if nb == 0.0 {
        DMatrix::zeros(b.len(), 0)
    } else {
        DMatrix::from_column_slice(b.len(), 1, (b / nb).as_slice())
    }
}

#[derive(Clone, Debug)]
enum Dirs {
    /// Explicit orthonormal direction basis, orthogonal to the base.
    Span(DMatrix<f64>),
    /// Directions are `(C ∪ {b})^⊥` for orthonormal `C ⟂ b`; requires `b ≠ 0`.
    Perp(DMatrix<f64>),
}

/// An affine subspace `base + directions` of the real Hermitian space, with
/// `base` the minimum-norm point.
#[derive(Clone, Debug)]
pub struct AffineSubspace {
    n: usize,
    base: DVector<f64>,
    dirs: Dirs,
}

impl AffineSubspace {
    pub fn point(p: &HermElem) -> Self {
        AffineSubspace {
            n: p.dim(),
            base: p.coords(),
            dirs: Dirs::Span(DMatrix::zeros(p.dim() * p.dim(), 0)),
        }
    }

    /// The affine set through `base` spanned by `directions`, canonicalized.
    pub fn new(base: &HermElem, directions: &LinearSubspace) -> Result<Self, HermError> {
        if directions.n != base.dim() {
            return Err(HermError::DimensionMismatch {
                expected: base.dim(),
                found: directions.n,
            });
        }
        Ok(Self::from_span(base.dim(), base.coords(), directions.basis.clone()))
    }

    /// Affine hull of a non-empty list of points.
    pub fn hull_of(points: &[HermElem], tol: f64) -> Result<Self, HermError> {
        let Some(p0) = points.first() else {
            return Err(HermError::BadFactors("affine hull of no points".into()));
        };
        let diffs: Vec<HermElem> = points[1..].iter().map(|p| p - p0).collect();
        let dirs = span_in(p0.dim(), &diffs, tol)?;
        Self::new(p0, &dirs)
    }

    pub(crate) fn from_span(n: usize, base: DVector<f64>, d: DMatrix<f64>) -> Self {
        let base = &base - &d * d.tr_mul(&base);
        AffineSubspace {
            n,
            base,
            dirs: Dirs::Span(d),
        }
    }

    pub(crate) fn from_perp(n: usize, base: DVector<f64>, c: DMatrix<f64>) -> Self {
        debug_assert!(base.norm() > 0.0);
        AffineSubspace {
            n,
            base,
            dirs: Dirs::Perp(c),
        }
    }

    pub fn matrix_dim(&self) -> usize {
        self.n
    }

    pub fn ambient(&self) -> usize {
        self.n * self.n
    }

    pub fn base(&self) -> HermElem {
        HermElem {
            mat: matrix_of(self.n, self.base.as_slice()),
        }
    }

    pub fn base_coords(&self) -> &DVector<f64> {
        &self.base
    }

    pub fn direction_rank(&self) -> usize {
        match &self.dirs {
            Dirs::Span(d) => d.ncols(),
            Dirs::Perp(c) => self.ambient() - 1 - c.ncols(),
        }
    }

    /// Dimension of the linear hull `span(base) ⊕ directions`.
    pub fn hull_rank(&self) -> usize {
        self.direction_rank() + usize::from(self.base.norm() > 0.0)
    }

    /// Explicit orthonormal basis of the direction space.
    pub fn direction_basis(&self) -> DMatrix<f64> {
        match &self.dirs {
            Dirs::Span(d) => d.clone(),
            Dirs::Perp(c) => orth_complement(&hcat(&[c, &unit_column(&self.base)])),
        }
    }

    pub fn directions(&self) -> LinearSubspace {
        LinearSubspace {
            n: self.n,
            basis: self.direction_basis(),
        }
    }

    /// Orthonormal basis of the linear hull.
    pub fn hull_basis(&self) -> DMatrix<f64> {
        match &self.dirs {
            Dirs::Span(d) => hcat(&[d, &unit_column(&self.base)]),
            Dirs::Perp(c) => orth_complement(c),
        }
    }

    /// Orthonormal basis of the complement of the linear hull.
    pub fn hull_complement(&self) -> DMatrix<f64> {
        match &self.dirs {
            Dirs::Span(d) => orth_complement(&hcat(&[d, &unit_column(&self.base)])),
            Dirs::Perp(c) => c.clone(),
        }
    }

    /// True when the explicit basis is the cheaper representation.
    pub(crate) fn is_span_form(&self) -> bool {
        matches!(self.dirs, Dirs::Span(_))
    }

    /// Projection of a coordinate vector onto the direction space.
    pub fn project_directions(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.dirs {
            Dirs::Span(d) => d * d.tr_mul(v),
            Dirs::Perp(c) => {
                let mut out = v - c * c.tr_mul(v);
                let nb2 = self.base.norm_squared();
                if nb2 > 0.0 {
                    out -= &self.base * (self.base.dot(v) / nb2);
                }
                out
            }
        }
    }

    /// Component of `x - base` orthogonal to the direction space.
    pub fn residual_coords(&self, x: &DVector<f64>) -> DVector<f64> {
        let y = x - &self.base;
        let p = self.project_directions(&y);
        y - p
    }

    /// Euclidean distance from `m` to the affine set.
    pub fn distance(&self, m: &HermElem) -> f64 {
        assert_eq!(m.dim(), self.n, "distance to a subspace of another dimension");
        self.residual_coords(&m.coords()).norm()
    }

    pub fn contains(&self, m: &HermElem, tol: f64) -> bool {
        m.dim() == self.n && self.distance(m) <= tol
    }

    /// Nearest point of the affine set.
    pub fn project(&self, m: &HermElem) -> HermElem {
        let x = m.coords();
        let y = &x - &self.base;
        let p = &self.base + self.project_directions(&y);
        HermElem {
            mat: matrix_of(self.n, p.as_slice()),
        }
    }

    /// `{ρ : <b,ρ> = 1, <d,ρ> = 0 for every direction d}`.
    pub fn dual(&self) -> Result<AffineSubspace, HermError> {
        let nb2 = self.base.norm_squared();
        if nb2 <= f64::EPSILON * f64::EPSILON {
            return Err(HermError::EmptyDual);
        }
        let base = &self.base / nb2;
        Ok(match &self.dirs {
            Dirs::Span(d) => AffineSubspace::from_perp(self.n, base, d.clone()),
            Dirs::Perp(c) => AffineSubspace {
                n: self.n,
                base,
                dirs: Dirs::Span(c.clone()),
            },
        })
    }

    /// The affine hull of `{a ⊗ b}` for `a`, `b` in the two sets.
    pub fn tensor(&self, other: &AffineSubspace) -> AffineSubspace {
        let (na, nb) = (self.n, other.n);
        let n = na * nb;
        let big_n = n * n;
        let ha = self.hull_rank();
        let hb = other.hull_rank();
        let h = ha * hb;
        let base = kron_coords(na, &self.base, nb, &other.base);
        if h == 0 {
            return AffineSubspace::from_span(n, base, DMatrix::zeros(big_n, 0));
        }
        if h - 1 <= big_n - h || base.norm() == 0.0 {
            let da = self.direction_basis();
            let db = other.direction_basis();
            let ua = unit_column(&self.base);
            let ub = unit_column(&other.base);
            let d = hcat(&[
                &kron_columns(na, &da, nb, &db),
                &kron_columns(na, &da, nb, &ub),
                &kron_columns(na, &ua, nb, &db),
            ]);
            AffineSubspace::from_span(n, base, d)
        } else {
            // hull complement of A⊗B is P_A⊗H_B ⊕ S_A⊗P_B
            let use_left = match (self.is_span_form(), other.is_span_form()) {
                (true, _) => true,
                (false, true) => false,
                (false, false) => na <= nb,
            };
            let c = if use_left {
                let pa = self.hull_complement();
                let sa = self.hull_basis();
                let pb = other.hull_complement();
                hcat(&[
                    &kron_columns(na, &pa, nb, &DMatrix::identity(nb * nb, nb * nb)),
                    &kron_columns(na, &sa, nb, &pb),
                ])
            } else {
                let pa = self.hull_complement();
                let pb = other.hull_complement();
                let sb = other.hull_basis();
                hcat(&[
                    &kron_columns(na, &DMatrix::identity(na * na, na * na), nb, &pb),
                    &kron_columns(na, &pa, nb, &sb),
                ])
            };
            AffineSubspace::from_perp(n, base, c)
        }
    }

    /// Intersects with `{x : Kᵀx = Kᵀb}`, i.e. removes the directions not
    /// annihilated by the columns of `k`. The base must already satisfy the
    /// constraints (`Kᵀb = 0`), which holds for every use in this crate.
    pub fn restrict_directions(&self, k: &DMatrix<f64>, tol: f64) -> AffineSubspace {
        if k.ncols() == 0 {
            return self.clone();
        }
        match &self.dirs {
            Dirs::Span(d) => {
                if d.ncols() == 0 {
                    return self.clone();
                }
                let m = k.tr_mul(d);
                let rows = orthonormal_columns(&m.transpose(), tol);
                let null = orth_complement(&rows);
                AffineSubspace::from_span(self.n, self.base.clone(), d * null)
            }
            Dirs::Perp(c) => {
                let ub = unit_column(&self.base);
                let mut kk = k - c * c.tr_mul(k);
                kk -= &ub * ub.tr_mul(&kk);
                let extra = orthonormal_columns(&kk, tol);
                AffineSubspace::from_perp(self.n, self.base.clone(), hcat(&[c, &extra]))
            }
        }
    }

    /// Reorders tensor factors of every point; see [`super::permute_factors`].
    pub fn permute_factors(&self, dims: &[usize], perm: &[usize]) -> Result<AffineSubspace, HermError> {
        super::check_factors(self.n, dims)?;
        let map = permutation_map(dims, perm)?;
        let n = self.n;
        let permute = |v: &[f64]| -> DVector<f64> {
            let m = matrix_of(n, v);
            let p = nalgebra::DMatrix::from_fn(n, n, |i, j| m[(map[i], map[j])]);
            coords_of(&p)
        };
        let perm_cols = |m: &DMatrix<f64>| -> DMatrix<f64> {
            let cols: Vec<DVector<f64>> = m.column_iter().map(|c| permute(c.as_slice())).collect();
            if cols.is_empty() {
                DMatrix::zeros(m.nrows(), 0)
            } else {
                DMatrix::from_columns(&cols)
            }
        };
        let base = permute(self.base.as_slice());
        Ok(match &self.dirs {
            Dirs::Span(d) => AffineSubspace {
                n,
                base,
                dirs: Dirs::Span(perm_cols(d)),
            },
            Dirs::Perp(c) => AffineSubspace {
                n,
                base,
                dirs: Dirs::Perp(perm_cols(c)),
            },
        })
    }

    /// How far `self` is from being contained in `other`: the larger of the
    /// base-point distance and the worst direction residual.
    pub fn containment_residual(&self, other: &AffineSubspace) -> f64 {
        if self.n != other.n {
            return f64::INFINITY;
        }
        let base_res = other.residual_coords(&self.base).norm();
        let dir_res = match (&self.dirs, &other.dirs) {
            (_, Dirs::Span(d2)) => column_residual(d2, &self.direction_basis()),
            (Dirs::Perp(c1), Dirs::Perp(c2)) => {
                // (C1∪b1)^⊥ ⊆ (C2∪b2)^⊥  ⟺  span(C2∪b2) ⊆ span(C1∪b1)
                let s1 = hcat(&[c1, &unit_column(&self.base)]);
                let s2 = hcat(&[c2, &unit_column(&other.base)]);
                column_residual(&s1, &s2)
            }
            (Dirs::Span(d1), Dirs::Perp(c2)) => {
                let s2 = hcat(&[c2, &unit_column(&other.base)]);
                if d1.ncols() == 0 {
                    0.0
                } else {
                    s2.tr_mul(d1).column_iter().fold(0.0_f64, |m, c| m.max(c.norm()))
                }
            }
        };
        base_res.max(dir_res)
    }

    pub fn is_subset_of(&self, other: &AffineSubspace, tol: f64) -> bool {
        self.containment_residual(other) <= tol
    }

    /// Symmetric subspace distance: infinite on rank mismatch, otherwise the
    /// larger of the two containment residuals.
    pub fn distance_to(&self, other: &AffineSubspace) -> f64 {
        if self.n != other.n || self.direction_rank() != other.direction_rank() {
            return f64::INFINITY;
        }
        self.containment_residual(other)
            .max(other.containment_residual(self))
    }

    pub fn approx_eq(&self, other: &AffineSubspace, tol: f64) -> bool {
        self.distance_to(other) <= tol
    }
}

/// Free-function form of [`AffineSubspace::dual`].
pub fn affine_dual(w: &AffineSubspace) -> Result<AffineSubspace, HermError> {
    w.dual()
}

/// True iff `m` lies within `tol` of `w`.
pub fn subspace_contains(w: &AffineSubspace, m: &HermElem, tol: f64) -> bool {
    w.contains(m, tol)
}

/// Coordinates of `matrix_of(a) ⊗ matrix_of(b)`.
/// States of `A ◁ B` from the effect hulls of `A` and `B`: the dual of
/// `E_A ⊗ E_B` cut down to `Herm(A) ⊗ dir(E_B)^⟂`. With `Herm = e ⊕ D ⊕ P`
/// (base, directions, hull complement) the constraints are `Herm(A) ⊗ D_B`
/// and `D_A ⊗ e_B`, the directions `Herm(A) ⊗ P_B` and `P_A ⊗ e_B`; both
/// are already orthonormal, so the smaller one is kept.
pub(crate) fn seq_states(ea: &AffineSubspace, eb: &AffineSubspace) -> Result<AffineSubspace, HermError> {
    let (na, nb) = (ea.n, eb.n);
    let base = kron_coords(na, &ea.base, nb, &eb.base);
    let nb2 = base.norm_squared();
    if nb2 <= f64::EPSILON * f64::EPSILON {
        return Err(HermError::EmptyDual);
    }
    let base = base / nb2;
    let full_a = DMatrix::identity(na * na, na * na);
    let ub = unit_column(&eb.base);
    let (da, db) = (ea.direction_rank(), eb.direction_rank());
    let (pa, pb) = (ea.ambient() - da - 1, eb.ambient() - db - 1);
    if na * na * db + da <= na * na * pb + pa {
        let c = hcat(&[
            &kron_columns(na, &full_a, nb, &eb.direction_basis()),
            &kron_columns(na, &ea.direction_basis(), nb, &ub),
        ]);
        Ok(AffineSubspace::from_perp(na * nb, base, c))
    } else {
        let d = hcat(&[
            &kron_columns(na, &full_a, nb, &eb.hull_complement()),
            &kron_columns(na, &ea.hull_complement(), nb, &ub),
        ]);
        Ok(AffineSubspace::from_span(na * nb, base, d))
    }
}

pub(crate) fn kron_coords(na: usize, a: &DVector<f64>, nb: usize, b: &DVector<f64>) -> DVector<f64> {
    let ma = matrix_of(na, a.as_slice());
    let mb = matrix_of(nb, b.as_slice());
    coords_of(&ma.kronecker(&mb))
}

/// All pairwise Kronecker products of coordinate columns, `a`-major.
pub(crate) fn kron_columns(na: usize, a: &DMatrix<f64>, nb: usize, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = na * nb;
    let ka = a.ncols();
    let kb = b.ncols();
    let mut out = DMatrix::zeros(n * n, ka * kb);
    if ka == 0 || kb == 0 {
        return out;
    }
    let mats_b: Vec<_> = b.column_iter().map(|c| matrix_of(nb, c.as_slice())).collect();
    let mut col = 0;
    for ca in a.column_iter() {
        let ma = matrix_of(na, ca.as_slice());
        for mb in &mats_b {
            out.set_column(col, &coords_of(&ma.kronecker(mb)));
            col += 1;
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct AffineRepr {
    base: HermElem,
    directions: Vec<HermElem>,
}

impl Serialize for AffineSubspace {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        AffineRepr {
            base: self.base(),
            directions: self.directions().elems(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AffineSubspace {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let r = AffineRepr::deserialize(deserializer)?;
        let tol = Tolerances::default().sub;
        let dirs = span_in(r.base.dim(), &r.directions, tol).map_err(serde::de::Error::custom)?;
        AffineSubspace::new(&r.base, &dirs).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::herm::{herm_basis, C64, CMat};

    const TOL: f64 = 1e-9;

    fn pauli_z() -> HermElem {
        HermElem::diagonal(&[1.0, -1.0])
    }

    fn pauli_x() -> HermElem {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        HermElem::new(CMat::from_row_slice(2, 2, &[o, l, l, o])).unwrap()
    }

    fn trace_one_plane(n: usize) -> AffineSubspace {
        AffineSubspace::point(&HermElem::identity(n)).dual().unwrap()
    }

    #[test]
    fn span_examples() {
        let i2 = HermElem::identity(2);
        assert_eq!(span(&[i2.clone(), i2.scale(2.0)], TOL).unwrap().rank(), 1);
        assert_eq!(span_in(2, &[], TOL).unwrap().rank(), 0);
        let z = pauli_z();
        let s = span(&[i2.clone(), z.clone(), &i2 + &z], TOL).unwrap();
        assert_eq!(s.rank(), 2);
        assert!(s.gram_deviation() < 1e-10);
        assert!(span(&[i2, HermElem::identity(3)], TOL).is_err());
    }

    #[test]
    fn dual_of_identity_point_is_trace_one_plane() {
        let w = trace_one_plane(2);
        assert_eq!(w.direction_rank(), 3);
        assert!(w.contains(&HermElem::identity(2).scale(0.5), TOL));
        assert!(!w.contains(&HermElem::identity(2), TOL));
        assert!(w.contains(&HermElem::diagonal(&[1.0, 0.0]), TOL));
        assert_eq!(trace_one_plane(3).direction_rank(), 8);
    }

    #[test]
    fn dual_of_trace_one_plane_is_identity_point() {
        // explicit basis form of the trace-1 plane, not the Perp form
        let basis = herm_basis(2).unwrap();
        let dirs: Vec<HermElem> = basis[1..].to_vec();
        let mut traceless = vec![&basis[0] - &basis[1]];
        traceless.extend(dirs[1..].iter().cloned());
        let plane = AffineSubspace::new(
            &HermElem::diagonal(&[1.0, 0.0]),
            &span(&traceless, TOL).unwrap(),
        )
        .unwrap();
        assert_eq!(plane.direction_rank(), 3);
        let d = plane.dual().unwrap();
        assert_eq!(d.direction_rank(), 0);
        assert!((d.base().matrix() - HermElem::identity(2).matrix()).norm() < 1e-12);
        assert!(plane.approx_eq(&trace_one_plane(2), 1e-12));
    }

    #[test]
    fn scalar_self_duality() {
        let w = AffineSubspace::point(&HermElem::identity(1));
        let d = w.dual().unwrap();
        assert!(d.approx_eq(&w, 1e-15));
    }

    #[test]
    fn dual_of_origin_is_empty() {
        let w = AffineSubspace::point(&HermElem::zeros(2));
        assert_eq!(w.dual().unwrap_err(), HermError::EmptyDual);
    }

    #[test]
    fn containment_examples() {
        let w = trace_one_plane(2);
        assert!(subspace_contains(&w, &HermElem::identity(2).scale(0.5), TOL));
        assert!(!subspace_contains(&w, &HermElem::identity(2), TOL));
        let p = AffineSubspace::point(&HermElem::identity(2));
        let near = &HermElem::identity(2) + &pauli_x().scale(1e-12);
        assert!(subspace_contains(&p, &near, TOL));
    }

    #[test]
    fn orth_complement_is_orthonormal_and_orthogonal() {
        let s = span(&[HermElem::identity(2), pauli_x()], TOL).unwrap();
        let c = s.orthogonal_complement();
        assert_eq!(c.rank(), 2);
        assert!(c.gram_deviation() < 1e-12);
        assert!((s.coords().tr_mul(c.coords())).amax() < 1e-12);
    }

    #[test]
    fn tensor_of_trace_one_planes() {
        let w = trace_one_plane(2);
        let t = w.tensor(&w);
        // product states span the trace-1 plane of dim 4
        assert!(t.approx_eq(&trace_one_plane(4), 1e-10));
        let e = AffineSubspace::point(&HermElem::identity(2));
        let te = e.tensor(&e);
        assert!(te.approx_eq(&AffineSubspace::point(&HermElem::identity(4)), 1e-12));
    }

    #[test]
    fn both_representations_agree_on_membership() {
        let w = trace_one_plane(3);
        let explicit = AffineSubspace::new(&w.base(), &w.directions()).unwrap();
        assert!(w.approx_eq(&explicit, 1e-12));
        let m = HermElem::diagonal(&[0.2, 0.3, 0.5]);
        assert!((w.distance(&m) - explicit.distance(&m)).abs() < 1e-12);
        let off = HermElem::diagonal(&[1.0, 1.0, 1.0]);
        assert!((w.distance(&off) - explicit.distance(&off)).abs() < 1e-12);
    }

    #[test]
    fn restrict_directions_in_both_forms() {
        let w = trace_one_plane(2);
        let z = DMatrix::from_column_slice(4, 1, pauli_z().coords().as_slice());
        let a = w.restrict_directions(&z, TOL);
        let b = AffineSubspace::new(&w.base(), &w.directions())
            .unwrap()
            .restrict_directions(&z, TOL);
        assert_eq!(a.direction_rank(), 2);
        assert!(a.approx_eq(&b, 1e-12));
    }
}
