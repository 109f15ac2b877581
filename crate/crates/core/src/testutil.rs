use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{c, CMat};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(g: &mut impl Rng, d: usize) -> CMat {
    CMat::from_fn(d, d, |_, _| c(g.gen_range(-1.0..1.0), g.gen_range(-1.0..1.0)))
}

pub fn random_hermitian(g: &mut impl Rng, d: usize) -> CMat {
    let a = random_matrix(g, d);
    (&a + a.adjoint()) * c(0.5, 0.0)
}

/// Random full-rank density matrix.
pub fn random_density(g: &mut impl Rng, d: usize) -> CMat {
    let a = random_matrix(g, d);
    let m = &a * a.adjoint();
    let tr = m.trace();
    m / tr
}
