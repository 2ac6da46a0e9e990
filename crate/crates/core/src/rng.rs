//! Seeded random sources. Everything stochastic in the crate goes through
//! [`seeded`], so a `(seed, shots)` pair fully determines a sampled result.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::grid::{GridSpec, StateVector};

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Normalized state with i.i.d. Gaussian real and imaginary parts.
pub fn random_state(grid: &GridSpec, seed: u64) -> StateVector {
    let mut rng = seeded(seed);
    let amps = (0..grid.len()).map(|_| Complex64::new(gauss(&mut rng), gauss(&mut rng))).collect();
    let mut s = StateVector { grid: grid.clone(), amps };
    s.normalize().expect("a Gaussian vector is nonzero with probability one");
    s
}

pub fn gauss<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}
