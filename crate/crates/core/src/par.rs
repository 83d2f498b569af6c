//! Data-parallel maps with a sequential fallback.
//!
//! With the `parallel` feature (default) [`Exec::Parallel`] fans work out on
//! the rayon pool; without it every map runs sequentially. Results are
//! always returned in index order so reductions do not depend on scheduling.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Exec {
    Parallel,
    Sequential,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

/// `(0..n).map(f)` collected in index order.
pub fn map_indexed<T, F>(exec: Exec, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Fallible [`map_indexed`]; returns the first error by index.
pub fn try_map_indexed<T, F>(exec: Exec, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    map_indexed(exec, n, f).into_iter().collect()
}

/// Sets the global worker count. A no-op without the `parallel` feature.
pub fn configure_threads(threads: usize) -> Result<()> {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    {
        if threads == 0 {
            return Err(Error::InvalidInput("thread count must be positive".into()));
        }
    }
    Ok(())
}

/// Pairwise summation in fixed order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let (l, r) = xs.split_at(xs.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

/// Sample mean and its standard error.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree() {
        let f = |i: usize| (i as f64).sqrt();
        let a = map_indexed(Exec::Parallel, 1000, f);
        let b = map_indexed(Exec::Sequential, 1000, f);
        assert_eq!(a, b);
        assert_eq!(pairwise_sum(&a).to_bits(), pairwise_sum(&b).to_bits());
    }

    #[test]
    fn mean_and_se_of_constant() {
        let (m, se) = mean_and_se(&[2.0; 10]);
        assert_eq!(m, 2.0);
        assert_eq!(se, 0.0);
    }
}
