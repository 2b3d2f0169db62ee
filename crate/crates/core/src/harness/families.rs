//! Random morphisms between causal objects of a few fixed shapes.

use rand::Rng;
use serde::Serialize;

use crate::cp::{choi_of_kraus, ChoiMap};
use crate::herm::{CMat, HermElem, C64};
use crate::random::{add_maps, random_channel, random_density, random_kraus, random_simplex};
use crate::types::{self, CausMorphism, CausObject};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// Channels between first-order systems.
    FoFo,
    /// Superchannels `[A, A'] → [B, B']`.
    HomHom,
    /// Channel evaluations `[A, A'] → B ⊗ B'`.
    HomTensor,
    /// Local maps `A ◁ [B, B'] → A ⅋ [B, B']`.
    SeqPar,
}

impl Shape {
    pub const ALL: [Shape; 4] = [Shape::FoFo, Shape::HomHom, Shape::HomTensor, Shape::SeqPar];
}

fn fo(d: usize) -> CausObject {
    types::mk_first_order(d).expect("positive dimension")
}

fn chan(a: usize, b: usize) -> CausObject {
    types::hom_obj(&fo(a), &fo(b))
}

/// `ρ ↦ (1-p) ρ + p Tr(ρ) I/d`.
pub fn depolarizing(d: usize, p: f64) -> ChoiMap {
    let id = crate::cp::identity_map(&[d]);
    let j = &id.choi().scale(1.0 - p) + &HermElem::identity(d * d).scale(p / d as f64);
    ChoiMap::new(vec![d], vec![d], j).expect("depolarizing channels are CP")
}

/// `τ ↦ post ∘ τ ∘ pre`, mixed over `terms` random pairs. The map acts on
/// hom states `[a_in, a_out] → [b_in, b_out]`; pre-processing enters through
/// the transpose of its Kraus operators.
pub fn random_superchannel<R: Rng + ?Sized>(
    rng: &mut R,
    a: (usize, usize),
    b: (usize, usize),
    terms: usize,
) -> ChoiMap {
    let p = random_simplex(rng, terms.max(1));
    let mut acc: Option<ChoiMap> = None;
    for pk in p {
        let pre = random_kraus(rng, b.0, a.0, 2);
        let post = random_kraus(rng, a.1, b.1, 2);
        let kraus: Vec<CMat> = pre
            .iter()
            .flat_map(|k| post.iter().map(move |l| k.transpose().kronecker(l)))
            .collect();
        let term = choi_of_kraus(&kraus, vec![a.0, a.1], vec![b.0, b.1])
            .expect("shapes agree")
            .scale(pk);
        acc = Some(match acc {
            None => term,
            Some(x) => add_maps(&x, &term),
        });
    }
    acc.expect("at least one term")
}

/// `τ ↦ Tr_in[(ρᵀ ⊗ I) τ]` on hom states `[d_in, d_out] → [d_out]`.
pub fn evaluation(rho: &HermElem, d_out: usize) -> ChoiMap {
    let d_in = rho.dim();
    let (values, vectors) = rho.transpose().eigh();
    let kraus: Vec<CMat> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 1e-15)
        .map(|(k, &v)| {
            let s = C64::new(v.sqrt(), 0.0);
            CMat::from_fn(d_out, d_in * d_out, |o, c| {
                let (i, o2) = (c / d_out, c % d_out);
                if o == o2 {
                    vectors[(i, k)].conj() * s
                } else {
                    C64::new(0.0, 0.0)
                }
            })
        })
        .collect();
    choi_of_kraus(&kraus, vec![d_in, d_out], vec![d_out]).expect("shapes agree")
}

/// A random morphism of the given shape, typed and checked.
pub fn random_morphism<R: Rng + ?Sized>(rng: &mut R, shape: Shape) -> CausMorphism {
    let (map, a, b) = match shape {
        Shape::FoFo => {
            let (da, db) = (rng.random_range(2..=3), rng.random_range(2..=3));
            let k = rng.random_range(1..=3);
            (random_channel(rng, &[da], &[db], k), fo(da), fo(db))
        }
        Shape::HomHom => {
            let terms = rng.random_range(1..=3);
            (random_superchannel(rng, (2, 2), (2, 2), terms), chan(2, 2), chan(2, 2))
        }
        Shape::HomTensor => {
            let rho = random_density(rng, 2, 2);
            let post = random_channel(rng, &[2], &[2, 2], 2);
            let m = post.compose(&evaluation(&rho, 2)).expect("shapes agree");
            (m, chan(2, 2), types::tensor_obj(&fo(2), &fo(2)))
        }
        Shape::SeqPar => {
            let local = random_channel(rng, &[2], &[2], 2);
            let sup = random_superchannel(rng, (2, 2), (2, 2), 2);
            let (a, c) = (fo(2), chan(2, 2));
            (local.tensor(&sup), types::seq_obj(&a, &c), types::par_obj(&a, &c))
        }
    };
    types::check_morphism(&map, &a, &b).expect("generated maps are typed morphisms")
}
