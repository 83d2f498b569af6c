//! Picard iteration `λ^{k+1}_t = G(t, X^{λ^k}_{t-})` on common noise, with
//! the weighted distance between successive iterates as diagnostic.

use serde::{Deserialize, Serialize};

use super::noise::PlanarNoise;
use super::simulate::CountingPath;
use crate::error::{Error, Result};
use crate::par::{map_indexed, pairwise_sum, Exec};
use crate::quad;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    /// `d(λ^{k+1}, λ^k)` for `k = 1..=n_iter + 1`.
    pub distances: Vec<f64>,
    /// `d_{k+1} / d_k`; 0 when both vanish.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// Weight exponent `C` in `e^{-2 C t}`.
    pub weight: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Thinning with intensity `G(t, X^{prev}_{t-})`.
fn iterate_path<G>(
    g: &G,
    bound: f64,
    prev: &CountingPath,
    noise: &PlanarNoise,
) -> Result<CountingPath>
where
    G: Fn(f64, u64) -> f64,
{
    let mut jumps = Vec::new();
    for &(t, u) in &noise.atoms {
        let r = g(t, prev.count_before(t));
        if !(r >= 0.0) || r > bound * (1.0 + 1e-12) {
            return Err(Error::ContractViolation {
                t,
                rate: r,
                cap: bound,
            });
        }
        if u <= r {
            jumps.push(t);
        }
    }
    Ok(CountingPath {
        horizon: noise.horizon,
        jumps,
    })
}

/// `∫_0^T e^{-2Ct} |G(t, X^a_{t-}) - G(t, X^b_{t-})| dt`.
fn path_distance<G>(g: &G, c: f64, a: &CountingPath, b: &CountingPath) -> f64
where
    G: Fn(f64, u64) -> f64,
{
    let mut cuts: Vec<f64> = a.jumps.iter().chain(&b.jumps).copied().collect();
    cuts.push(0.0);
    cuts.push(a.horizon);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid = 0.5 * (lo + hi);
        let (xa, xb) = (a.count_at(mid), b.count_at(mid));
        if xa == xb {
            continue;
        }
        total += quad::integrate(lo, hi, |t| {
            (-2.0 * c * t).exp() * (g(t, xa) - g(t, xb)).abs()
        });
    }
    total
}

/// Runs `n_iter + 2` Picard steps from `X^0 ≡ 0` on `n_noise` common noises
/// and reports the decay of successive distances.
#[allow(clippy::too_many_arguments)]
pub fn fixed_point_solve<G>(
    exec: Exec,
    g: &G,
    bound: f64,
    horizon: f64,
    n_iter: usize,
    n_noise: usize,
    seed: u64,
    threshold: f64,
) -> Result<FixedPointReport>
where
    G: Fn(f64, u64) -> f64 + Sync + Send,
{
    if !(bound > 0.0) {
        return Err(Error::InvalidInput(format!(
            "bound {bound} must be positive"
        )));
    }
    let steps = n_iter + 1;
    let per_noise = map_indexed(exec, n_noise, |i| -> Result<Vec<f64>> {
        let noise = PlanarNoise::sample(horizon, bound, seed, i as u64)?;
        let mut prev = CountingPath {
            horizon,
            jumps: Vec::new(),
        };
        let mut cur = iterate_path(g, bound, &prev, &noise)?;
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            // λ^{k+1} reads X^k = cur, λ^k reads X^{k-1} = prev
            out.push(path_distance(g, bound, &cur, &prev));
            let next = iterate_path(g, bound, &cur, &noise)?;
            prev = std::mem::replace(&mut cur, next);
        }
        Ok(out)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let distances: Vec<f64> = (0..steps)
        .map(|k| {
            let col: Vec<f64> = per_noise.iter().map(|d| d[k]).collect();
            pairwise_sum(&col) / n_noise as f64
        })
        .collect();
    let ratios: Vec<f64> = distances
        .windows(2)
        .map(|w| match (w[0] == 0.0, w[1] == 0.0) {
            (_, true) => 0.0,
            (true, false) => f64::INFINITY,
            _ => w[1] / w[0],
        })
        .collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(FixedPointReport {
        distances,
        ratios,
        max_ratio,
        weight: bound,
        threshold,
        pass: max_ratio <= threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_map_converges_immediately() {
        let r =
            fixed_point_solve(Exec::Sequential, &|_t, _x| 1.5, 2.0, 1.0, 3, 200, 3, 0.6).unwrap();
        assert!(r.distances.iter().all(|d| *d == 0.0));
        assert!(r.pass);
    }

    #[test]
    fn capped_linear_map_contracts() {
        let g = |_t: f64, x: u64| (1.0 + x as f64).min(4.0);
        let r = fixed_point_solve(Exec::Parallel, &g, 4.0, 0.5, 4, 2000, 9, 0.6).unwrap();
        assert!(r.distances[0] > 0.0);
        assert!(r.pass, "{r:?}");
    }
}
