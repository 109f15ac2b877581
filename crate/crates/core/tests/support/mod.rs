#![allow(dead_code)]

pub mod quadrature;

use catqutrit::linalg::c;
use catqutrit::liouville::EffectiveParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_params(g: &mut impl Rng) -> EffectiveParams {
    EffectiveParams {
        kappa1: g.gen_range(0.1..5.0),
        kappa2: g.gen_range(0.1..5.0),
        xi: g.gen_range(-3.0..3.0),
        delta: g.gen_range(-3.0..3.0),
        delta1: g.gen_range(-3.0..3.0),
        alpha0: c(g.gen_range(-3.0..3.0), g.gen_range(-3.0..3.0)),
    }
}

/// Parameters admitted by the closed-form `ρ₀₀`: `δ₁ = 0`, purely imaginary `α₀`, `ξ ≠ 4δ`.
pub fn random_rho00_params(g: &mut impl Rng) -> EffectiveParams {
    loop {
        let mut p = random_params(g);
        p.delta1 = 0.0;
        p.alpha0 = c(0.0, g.gen_range(0.3..3.0) * if g.gen_bool(0.5) { 1.0 } else { -1.0 });
        if (p.xi - 4.0 * p.delta).abs() > 0.1 {
            return p;
        }
    }
}
