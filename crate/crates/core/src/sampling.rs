//! Seeded sample points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SAMPLES: usize = 20;
pub const DEFAULT_SEED: u64 = 20_170_301;

/// Points of `[-1, 1]^dim`.
pub fn base_samples(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect()
}

/// Points `(x, t, s)` of the induced chart: `x, t ∈ [-1, 1]`, `s ∈ [-0.5, 0.5]`.
pub fn induced_samples(base_dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut p: Vec<f64> = (0..=base_dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
            p.push(rng.random_range(-0.5..=0.5));
            p
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_in_range() {
        let a = induced_samples(4, 20, 7);
        assert_eq!(a, induced_samples(4, 20, 7));
        assert_ne!(a, induced_samples(4, 20, 8));
        for p in &a {
            assert_eq!(p.len(), 6);
            assert!(p[..5].iter().all(|v| v.abs() <= 1.0));
            assert!(p[5].abs() <= 0.5);
        }
        assert!(base_samples(4, 3, 1).iter().flatten().all(|v| v.abs() <= 1.0));
    }
}
