//! Seeded random streams.
//!
//! Each replication draws from its own ChaCha8 stream, selected by
//! `(seed, stream index)`, so results do not depend on how work is scheduled.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

pub type StreamRng = ChaCha8Rng;

/// The independent stream `index` of the generator seeded with `seed`.
pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Standard exponential draw, strictly positive.
pub fn std_exp<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let e: f64 = rng.sample(Exp1);
        if e > 0.0 {
            return e;
        }
    }
}

/// Gamma(shape, 1) for integer shape, as a sum of exponentials.
pub fn gamma_int<R: Rng + ?Sized>(rng: &mut R, shape: u32) -> f64 {
    (0..shape).map(|_| std_exp(rng)).sum()
}

/// Beta(a, b) for integer shapes by the ratio-of-Gammas construction.
pub fn beta_int<R: Rng + ?Sized>(rng: &mut R, a: u32, b: u32) -> f64 {
    let x = gamma_int(rng, a);
    let y = gamma_int(rng, b);
    x / (x + y)
}
