//! Haar-random states, unitaries and orthonormal frames.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::linalg::{self, C64};
use crate::tensor_core::{PureState, SpaceLayout};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-distributed pure state on `layout`.
pub fn random_state<R: Rng + ?Sized>(layout: SpaceLayout, rng: &mut R) -> Result<PureState> {
    let amps: Vec<C64> = (0..layout.total_dim()).map(|_| gaussian(rng)).collect();
    PureState::normalized(layout, amps)
}

/// `count` orthonormal vectors in `C^dim`, uniformly distributed.
pub fn random_orthonormal<R: Rng + ?Sized>(count: usize, dim: usize, rng: &mut R) -> Vec<DVector<C64>> {
    assert!(count <= dim, "cannot fit {count} orthonormal vectors in dimension {dim}");
    let mut out: Vec<DVector<C64>> = Vec::with_capacity(count);
    while out.len() < count {
        let mut w = DVector::from_fn(dim, |_, _| gaussian(rng));
        for _ in 0..2 {
            for b in &out {
                let c = b.dotc(&w);
                w -= b * c;
            }
        }
        let n = w.norm();
        if n > 1e-8 {
            out.push(w / C64::new(n, 0.0));
        }
    }
    out
}

/// Haar-distributed unitary on `C^dim`.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    let cols = random_orthonormal(dim, dim, rng);
    let u = DMatrix::from_columns(&cols);
    debug_assert!(linalg::unitarity_deviation(&u) < 1e-12);
    u
}
