//! Thinning simulation of counting processes and Monte Carlo estimators.

use serde::{Deserialize, Serialize};

use super::noise::PlanarNoise;
use super::policy::IntensityPolicy;
use super::semigroup::{log_poisson_integral, Payoff};
use crate::error::{Error, Result};
use crate::par::{mean_and_se, try_map_indexed, Exec};
use crate::quad;

/// Slack on the cap when checking evaluated rates.
const CAP_SLACK: f64 = 1e-12;

/// `φ(λ) = λ log λ - λ + 1`, with `φ(0) = 1`.
pub fn phi(lambda: f64) -> f64 {
    if lambda == 0.0 {
        1.0
    } else {
        lambda * lambda.ln() - lambda + 1.0
    }
}

/// `e^x + y log y - y - x y`, non-negative with equality iff `y = e^x`.
pub fn legendre_gap(x: f64, y: f64) -> f64 {
    let ylogy = if y == 0.0 { 0.0 } else { y * y.ln() };
    x.exp() + ylogy - y - x * y
}

/// Accepted jumps of one simulated path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingPath {
    pub horizon: f64,
    /// Jump times in increasing order; the count after jump `i` is `i + 1`.
    pub jumps: Vec<f64>,
}

impl CountingPath {
    pub fn terminal(&self) -> u64 {
        self.jumps.len() as u64
    }

    /// `X_{t-}`: jumps strictly before `t`.
    pub fn count_before(&self, t: f64) -> u64 {
        self.jumps.partition_point(|&s| s < t) as u64
    }

    /// `X_t`: jumps at or before `t`.
    pub fn count_at(&self, t: f64) -> u64 {
        self.jumps.partition_point(|&s| s <= t) as u64
    }

    /// Intervals `[τ_i, τ_{i+1})` of constant state with that state.
    pub fn segments(&self) -> Vec<(f64, f64, u64)> {
        let mut out = Vec::with_capacity(self.jumps.len() + 1);
        let mut start = 0.0;
        for (i, &tau) in self.jumps.iter().enumerate() {
            out.push((start, tau, i as u64));
            start = tau;
        }
        out.push((start, self.horizon, self.jumps.len() as u64));
        out
    }
}

fn checked_rate<P: IntensityPolicy + ?Sized>(
    policy: &P,
    cap: f64,
    t: f64,
    count: u64,
    jumps: &[f64],
) -> Result<f64> {
    let r = policy.rate(t, count, jumps);
    if !(r >= 0.0) || r > cap * (1.0 + CAP_SLACK) {
        return Err(Error::ContractViolation { t, rate: r, cap });
    }
    Ok(r)
}

/// Thinning: atom `(t, u)` is a jump iff `u <= λ(t, X_{t-}, history)`.
pub fn simulate_counting<P: IntensityPolicy + ?Sized>(
    policy: &P,
    noise: &PlanarNoise,
) -> Result<CountingPath> {
    if policy.bound() > noise.cap * (1.0 + CAP_SLACK) {
        return Err(Error::ContractViolation {
            t: 0.0,
            rate: policy.bound(),
            cap: noise.cap,
        });
    }
    let mut jumps = Vec::new();
    for &(t, u) in &noise.atoms {
        let r = checked_rate(policy, noise.cap, t, jumps.len() as u64, &jumps)?;
        if u <= r {
            jumps.push(t);
        }
    }
    Ok(CountingPath {
        horizon: noise.horizon,
        jumps,
    })
}

/// `∫_0^T g(t, X_{t-}, λ_t) dt` along a path, Gauss-Legendre on each
/// inter-jump interval.
pub fn path_integral<P: IntensityPolicy + ?Sized>(
    policy: &P,
    path: &CountingPath,
    cap: f64,
    g: impl Fn(f64, u64, f64) -> f64,
) -> Result<f64> {
    let mut total = 0.0;
    for (a, b, x) in path.segments() {
        if b <= a {
            continue;
        }
        let history = &path.jumps[..x as usize];
        let mut err = None;
        total += quad::integrate(a, b, |t| match checked_rate(policy, cap, t, x, history) {
            Ok(r) => g(t, x, r),
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
    }
    Ok(total)
}

/// Sample mean and standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub se: f64,
    pub trajectories: usize,
}

impl McEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let (estimate, se) = mean_and_se(xs);
        Self {
            estimate,
            se,
            trajectories: xs.len(),
        }
    }
}

/// `E[f(X_T) - ∫_0^T φ(λ_t) dt]` over `n_traj` independent noises.
pub fn mc_functional<P: IntensityPolicy + ?Sized>(
    exec: Exec,
    policy: &P,
    f: &Payoff,
    horizon: f64,
    n_traj: usize,
    seed: u64,
) -> Result<McEstimate> {
    let cap = policy.bound();
    let samples = try_map_indexed(exec, n_traj, |i| {
        let noise = PlanarNoise::sample(horizon, cap, seed, i as u64)?;
        let path = simulate_counting(policy, &noise)?;
        let cost = path_integral(policy, &path, cap, |_, _, r| phi(r))?;
        Ok(f.at(path.terminal()) - cost)
    })?;
    Ok(McEstimate::from_samples(&samples))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// `E Σ_{jumps} H`.
    pub jump_sum: McEstimate,
    /// `E ∫ H_t λ_t dt`.
    pub compensator: McEstimate,
    pub difference: f64,
    /// `sqrt(se_1^2 + se_2^2)`.
    pub combined_se: f64,
    pub pass: bool,
}

/// Compares `E[Σ_{jumps} H(τ, X_{τ-})]` with `E[∫ H(t, X_{t-}) λ_t dt]`.
pub fn intensity_identity_check<P: IntensityPolicy + ?Sized>(
    exec: Exec,
    policy: &P,
    h: impl Fn(f64, u64) -> f64 + Sync + Send,
    horizon: f64,
    n_traj: usize,
    seed: u64,
) -> Result<IdentityReport> {
    let cap = policy.bound();
    let pairs = try_map_indexed(exec, n_traj, |i| {
        let noise = PlanarNoise::sample(horizon, cap, seed, i as u64)?;
        let path = simulate_counting(policy, &noise)?;
        let jumps: f64 = path
            .jumps
            .iter()
            .enumerate()
            .map(|(k, &t)| h(t, k as u64))
            .sum();
        let comp = path_integral(policy, &path, cap, |t, x, r| h(t, x) * r)?;
        Ok((jumps, comp))
    })?;
    let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let jump_sum = McEstimate::from_samples(&a);
    let compensator = McEstimate::from_samples(&b);
    let difference = jump_sum.estimate - compensator.estimate;
    let combined_se = jump_sum.se.hypot(compensator.se);
    Ok(IdentityReport {
        jump_sum,
        compensator,
        difference,
        combined_se,
        pass: difference.abs() <= 3.0 * combined_se,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupermartingaleReport {
    /// `log ∫ e^f dπ_T`.
    pub lhs: f64,
    pub estimate: f64,
    pub se: f64,
    /// `estimate <= lhs + 3 SE`.
    pub upper_ok: bool,
    /// `|estimate - lhs| <= 3 SE` when equality is expected.
    pub equality_ok: Option<bool>,
    pub pass: bool,
}

/// Checks the variational inequality for `policy`; with `expect_equality`
/// also the two-sided agreement expected of the optimal control.
pub fn supermartingale_check<P: IntensityPolicy + ?Sized>(
    exec: Exec,
    policy: &P,
    f: &Payoff,
    horizon: f64,
    n_traj: usize,
    seed: u64,
    expect_equality: bool,
) -> Result<SupermartingaleReport> {
    let lhs = log_poisson_integral(f, horizon)?;
    let mc = mc_functional(exec, policy, f, horizon, n_traj, seed)?;
    let upper_ok = mc.estimate <= lhs + 3.0 * mc.se;
    let equality_ok = expect_equality.then(|| (mc.estimate - lhs).abs() <= 3.0 * mc.se);
    Ok(SupermartingaleReport {
        lhs,
        estimate: mc.estimate,
        se: mc.se,
        upper_ok,
        equality_ok,
        pass: upper_ok && equality_ok.unwrap_or(true),
    })
}
