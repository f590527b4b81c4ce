//! Hierarchical seeding. A master seed is expanded into independent
//! ChaCha streams keyed by a path of integers (scenario, drop, trial chunk,
//! ...), so results do not depend on scheduling or thread count.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

pub type SimRng = ChaCha12Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `parent` and a path of stream labels.
pub fn derive_seed(parent: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(parent), |acc, &p| splitmix64(acc ^ splitmix64(p.wrapping_add(0x5851_F42D_4C95_7F2D))))
}

pub fn rng_for(parent: u64, path: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(parent, path))
}

/// Circularly-symmetric complex Gaussian with the given total variance.
#[inline]
pub fn cn<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

#[inline]
pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}
