//! Matrices with labelled tensor legs and the link product that contracts
//! shared legs. Every composite in the crate (composition, feeding states,
//! bending, recomposition of combs) is one or more link products.

use nalgebra::DMatrix;

use crate::herm::{permute_factors, CMat, C64};

pub type Wire = usize;

/// A square matrix whose tensor factors carry wire labels.
#[derive(Clone, Debug)]
pub struct Wired {
    pub mat: CMat,
    pub legs: Vec<(Wire, usize)>,
}

impl Wired {
    pub fn new(mat: CMat, legs: Vec<(Wire, usize)>) -> Self {
        let total: usize = legs.iter().map(|l| l.1).product();
        assert_eq!(mat.nrows(), total, "leg dimensions do not match the matrix");
        assert_eq!(mat.ncols(), total, "wired matrices are square");
        Wired { mat, legs }
    }

    fn position(&self, w: Wire) -> Option<usize> {
        self.legs.iter().position(|l| l.0 == w)
    }

    pub fn dim_of(&self, w: Wire) -> Option<usize> {
        self.position(w).map(|p| self.legs[p].1)
    }

    /// Matrix with legs in the given order; `order` must list every leg.
    pub fn ordered(&self, order: &[Wire]) -> CMat {
        assert_eq!(order.len(), self.legs.len(), "reorder must list every leg");
        if self.legs.len() <= 1 {
            return self.mat.clone();
        }
        let perm: Vec<usize> = order
            .iter()
            .map(|&w| self.position(w).expect("unknown wire in reorder"))
            .collect();
        let dims: Vec<usize> = self.legs.iter().map(|l| l.1).collect();
        permute_factors(&self.mat, &dims, &perm).expect("valid permutation")
    }

    pub fn reorder(&self, order: &[Wire]) -> Wired {
        let legs = order
            .iter()
            .map(|&w| (w, self.dim_of(w).expect("unknown wire in reorder")))
            .collect();
        Wired {
            mat: self.ordered(order),
            legs,
        }
    }

    /// Link product: contracts every wire the two share and tensors the rest.
    /// Result legs are the unshared legs of `self`, then those of `other`.
    pub fn link(&self, other: &Wired) -> Wired {
        let shared: Vec<Wire> = self
            .legs
            .iter()
            .map(|l| l.0)
            .filter(|&w| other.position(w).is_some())
            .collect();
        for &w in &shared {
            assert_eq!(
                self.dim_of(w),
                other.dim_of(w),
                "wire {w} has different dimensions on the two sides"
            );
        }
        let a_only: Vec<(Wire, usize)> = self
            .legs
            .iter()
            .copied()
            .filter(|l| !shared.contains(&l.0))
            .collect();
        let b_only: Vec<(Wire, usize)> = other
            .legs
            .iter()
            .copied()
            .filter(|l| !shared.contains(&l.0))
            .collect();
        let p: usize = a_only.iter().map(|l| l.1).product();
        let q: usize = b_only.iter().map(|l| l.1).product();
        let s: usize = shared.iter().map(|&w| self.dim_of(w).unwrap()).product();

        let a_order: Vec<Wire> = a_only.iter().map(|l| l.0).chain(shared.iter().copied()).collect();
        let b_order: Vec<Wire> = shared.iter().copied().chain(b_only.iter().map(|l| l.0)).collect();
        let a = self.ordered(&a_order);
        let b = other.ordered(&b_order);

        // result[(p,q),(p',q')] = Σ a[(p,s''),(p',s)] b[(s'',q),(s,q')]
        let ar = DMatrix::from_fn(p * p, s * s, |r, c| {
            let (pi, pj) = (r / p, r % p);
            let (s2, s1) = (c / s, c % s);
            a[(pi * s + s2, pj * s + s1)]
        });
        let br = DMatrix::from_fn(s * s, q * q, |r, c| {
            let (s2, s1) = (r / s, r % s);
            let (qi, qj) = (c / q, c % q);
            b[(s2 * q + qi, s1 * q + qj)]
        });
        let rr = ar * br;
        let mat = CMat::from_fn(p * q, p * q, |r, c| {
            let (pi, qi) = (r / q, r % q);
            let (pj, qj) = (c / q, c % q);
            rr[(pi * p + pj, qi * q + qj)]
        });
        let legs = a_only.into_iter().chain(b_only).collect();
        Wired { mat, legs }
    }

    /// The scalar value of a network with no open legs.
    pub fn scalar(&self) -> C64 {
        assert!(
            self.legs.iter().all(|l| l.1 == 1),
            "scalar() on a network with open legs"
        );
        self.mat[(0, 0)]
    }
}
