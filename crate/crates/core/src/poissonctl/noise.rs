//! Planar Poisson noise on the strip `[0, T] × [0, Λ]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};

/// Independent stream for trajectory `index` under `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Atoms `(time, height)` of a unit-intensity Poisson process on the strip,
/// sorted by time.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanarNoise {
    pub horizon: f64,
    pub cap: f64,
    pub atoms: Vec<(f64, f64)>,
    pub seed: u64,
    pub index: u64,
}

impl PlanarNoise {
    /// Draws the noise for trajectory `index` of the run seeded by `seed`.
    pub fn sample(horizon: f64, cap: f64, seed: u64, index: u64) -> Result<Self> {
        let mut rng = trajectory_rng(seed, index);
        Self::sample_with(&mut rng, horizon, cap, seed, index)
    }

    pub fn sample_with<R: Rng + ?Sized>(
        rng: &mut R,
        horizon: f64,
        cap: f64,
        seed: u64,
        index: u64,
    ) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() || !(cap >= 0.0) || !cap.is_finite() {
            return Err(Error::InvalidInput(format!(
                "noise strip [0, {horizon}] x [0, {cap}] is invalid"
            )));
        }
        let mean = horizon * cap;
        let count = if mean > 0.0 {
            let dist = Poisson::new(mean)
                .map_err(|e| Error::InvalidInput(format!("poisson({mean}): {e}")))?;
            dist.sample(rng) as usize
        } else {
            0
        };
        let mut atoms: Vec<(f64, f64)> = (0..count)
            .map(|_| (rng.random::<f64>() * horizon, rng.random::<f64>() * cap))
            .collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self {
            horizon,
            cap,
            atoms,
            seed,
            index,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_sorted() {
        let a = PlanarNoise::sample(2.0, 3.0, 11, 5).unwrap();
        let b = PlanarNoise::sample(2.0, 3.0, 11, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.atoms.windows(2).all(|w| w[0].0 < w[1].0));
        assert!(a
            .atoms
            .iter()
            .all(|&(t, u)| (0.0..2.0).contains(&t) && (0.0..3.0).contains(&u)));
        let c = PlanarNoise::sample(2.0, 3.0, 11, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empty_strip() {
        assert!(PlanarNoise::sample(1.0, 0.0, 1, 0)
            .unwrap()
            .atoms
            .is_empty());
        assert!(PlanarNoise::sample(0.0, 1.0, 1, 0).is_err());
    }

    #[test]
    fn atom_count_mean() {
        let n = 4000;
        let total: usize = (0..n)
            .map(|i| PlanarNoise::sample(1.5, 2.0, 99, i).unwrap().atoms.len())
            .sum();
        let mean = total as f64 / n as f64;
        // Poisson(3): SE = sqrt(3 / n)
        assert!((mean - 3.0).abs() < 4.0 * (3.0 / n as f64).sqrt(), "{mean}");
    }
}
