//! Seeded generators for matrices, channels and members of causal types.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cp::{choi_of_kraus, identity_map, ChoiMap};
use crate::herm::{CMat, HermElem, C64};
use crate::types::CausObject;

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex Gaussian matrix with i.i.d. standard normal real and imaginary parts.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}

pub fn random_herm<R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermElem {
    let g = ginibre(rng, n, n);
    HermElem::hermitized(&((&g + g.adjoint()) * C64::new(0.5, 0.0)))
}

/// `G G†` with `G` of shape `n × rank`.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> HermElem {
    let g = ginibre(rng, n, rank.max(1));
    HermElem::hermitized(&(&g * g.adjoint()))
}

pub fn random_density<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> HermElem {
    let p = random_psd(rng, n, rank);
    let t = p.trace();
    p.scale(1.0 / t)
}

/// Haar unitary via QR with the phases of `R`'s diagonal divided out.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    random_isometry(rng, n, n)
}

/// Haar isometry `C^d_in → C^d_out`.
pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R, d_in: usize, d_out: usize) -> CMat {
    assert!(d_out >= d_in, "isometry needs d_out ≥ d_in");
    let qr = ginibre(rng, d_out, d_in).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d_in {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / C64::new(d.norm(), 0.0) } else { C64::new(1.0, 0.0) };
        for i in 0..d_out {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Kraus operators of a random channel with the given Kraus rank, cut from a
/// Haar isometry into `out ⊗ env`.
pub fn random_kraus<R: Rng + ?Sized>(rng: &mut R, d_in: usize, d_out: usize, kraus_rank: usize) -> Vec<CMat> {
    let k = kraus_rank.max(1).max(d_in.div_ceil(d_out));
    let v = random_isometry(rng, d_in, d_out * k);
    (0..k)
        .map(|e| CMat::from_fn(d_out, d_in, |r, c| v[(r * k + e, c)]))
        .collect()
}

pub fn random_channel<R: Rng + ?Sized>(rng: &mut R, in_dims: &[usize], out_dims: &[usize], kraus_rank: usize) -> ChoiMap {
    let di: usize = in_dims.iter().product();
    let d_o: usize = out_dims.iter().product();
    let kraus = random_kraus(rng, di, d_o, kraus_rank);
    choi_of_kraus(&kraus, in_dims.to_vec(), out_dims.to_vec()).expect("shapes agree")
}

/// Random probability vector (flat Dirichlet).
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Shape of a two-party channel: `(a_in, a_out, b_in, b_out)`, inputs
/// `[a_in, b_in]`, outputs `[a_out, b_out]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TwoParty {
    pub a_in: usize,
    pub a_out: usize,
    pub b_in: usize,
    pub b_out: usize,
}

impl TwoParty {
    pub const QUBITS: TwoParty = TwoParty {
        a_in: 2,
        a_out: 2,
        b_in: 2,
        b_out: 2,
    };

    pub fn in_dims(&self) -> Vec<usize> {
        vec![self.a_in, self.b_in]
    }

    pub fn out_dims(&self) -> Vec<usize> {
        vec![self.a_out, self.b_out]
    }
}

/// `(id_{A'} ⊗ σ) ∘ (ρ ⊗ id_B)` with `ρ : A → A' ⊗ Z` and `σ : Z ⊗ B → B'`.
pub fn random_one_way<R: Rng + ?Sized>(rng: &mut R, s: TwoParty, z: usize) -> ChoiMap {
    let rho = random_channel(rng, &[s.a_in], &[s.a_out, z], 2);
    let sigma = random_channel(rng, &[z, s.b_in], &[s.b_out], 2);
    let first = rho.tensor(&identity_map(&[s.b_in]));
    let second = identity_map(&[s.a_out]).tensor(&sigma);
    second
        .compose(&first)
        .and_then(|m| m.regroup(s.in_dims(), s.out_dims()))
        .expect("shapes agree")
}

/// The mirror image of [`random_one_way`]: only `B` signals to `A`.
pub fn random_one_way_reversed<R: Rng + ?Sized>(rng: &mut R, s: TwoParty, z: usize) -> ChoiMap {
    let mirrored = TwoParty {
        a_in: s.b_in,
        a_out: s.b_out,
        b_in: s.a_in,
        b_out: s.a_out,
    };
    random_one_way(rng, mirrored, z)
        .permute(&[1, 0], &[1, 0])
        .expect("two factors each")
}

/// A mixture of product channels `Σ p_k E_k ⊗ F_k`.
pub fn random_nonsignalling<R: Rng + ?Sized>(rng: &mut R, s: TwoParty, terms: usize) -> ChoiMap {
    let p = random_simplex(rng, terms.max(1));
    let mut acc: Option<ChoiMap> = None;
    for pk in p {
        let e = random_channel(rng, &[s.a_in], &[s.a_out], 2);
        let f = random_channel(rng, &[s.b_in], &[s.b_out], 2);
        let term = e.tensor(&f).scale(pk);
        acc = Some(match acc {
            None => term,
            Some(a) => add_maps(&a, &term),
        });
    }
    acc.expect("at least one term")
}

/// A generic joint channel; signals both ways with probability one.
pub fn random_two_way<R: Rng + ?Sized>(rng: &mut R, s: TwoParty) -> ChoiMap {
    random_channel(rng, &s.in_dims(), &s.out_dims(), 2)
}

/// Sum of two maps with identical shapes.
pub fn add_maps(a: &ChoiMap, b: &ChoiMap) -> ChoiMap {
    assert_eq!(a.in_dims(), b.in_dims());
    assert_eq!(a.out_dims(), b.out_dims());
    ChoiMap::from_choi_unchecked(a.in_dims().to_vec(), a.out_dims().to_vec(), a.choi() + b.choi())
        .expect("shapes agree")
}

/// A random element of the state hull direction space, normalized.
fn random_direction<R: Rng + ?Sized>(rng: &mut R, obj: &CausObject) -> Option<DVector<f64>> {
    let n = obj.dim();
    let p = random_psd(rng, n, n);
    let p = p.scale(1.0 / p.trace());
    let projected = obj.aff_states().project(&p.scale(obj.flat_lambda() * n as f64));
    let d = projected.coords() - HermElem::identity(n).scale(obj.flat_lambda()).coords();
    let norm = d.norm();
    (norm > 1e-12).then(|| d / norm)
}

/// A random state of `obj`: `λI + t·d` with `d` the projection of a random
/// positive matrix onto the state hull and `t` drawn below the positivity
/// boundary.
pub fn random_member<R: Rng + ?Sized>(rng: &mut R, obj: &CausObject) -> HermElem {
    let n = obj.dim();
    let lambda = obj.flat_lambda();
    let centre = HermElem::identity(n).scale(lambda);
    for _ in 0..50 {
        let Some(d) = random_direction(rng, obj) else {
            return centre;
        };
        let dm = HermElem::from_coords(n, d.as_slice()).expect("coordinates of the right length");
        let neg = -dm.min_eigenvalue();
        if neg <= 0.0 {
            continue;
        }
        let t_max = lambda / neg;
        let t = t_max * rng.random_range(0.05..0.95);
        return &centre + &(dm.scale(t));
    }
    centre
}

/// A random element of `obj` as a map from the trivial system.
pub fn random_member_map<R: Rng + ?Sized>(rng: &mut R, obj: &CausObject) -> ChoiMap {
    ChoiMap::from_state(&random_member(rng, obj), obj.factor_dims()).expect("dims agree")
}

/// Random real vector with standard normal entries.
pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Random real matrix with standard normal entries.
pub fn random_real<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}
