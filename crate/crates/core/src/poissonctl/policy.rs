//! Predictable intensity rules.

use std::sync::Arc;

use super::semigroup::{Payoff, ValueFunction};
use crate::error::Result;

/// A bounded, predictable intensity. `rate` sees the time, the count strictly
/// before that time and the accepted jump times strictly before it; it never
/// sees the raw noise.
pub trait IntensityPolicy: Sync + Send {
    fn bound(&self) -> f64;

    fn rate(&self, t: f64, count: u64, jumps: &[f64]) -> f64;

    /// Markov rules depend on `(t, count)` only.
    fn is_markov(&self) -> bool {
        true
    }
}

impl<P: IntensityPolicy + ?Sized> IntensityPolicy for &P {
    fn bound(&self) -> f64 {
        (**self).bound()
    }
    fn rate(&self, t: f64, count: u64, jumps: &[f64]) -> f64 {
        (**self).rate(t, count, jumps)
    }
    fn is_markov(&self) -> bool {
        (**self).is_markov()
    }
}

impl<P: IntensityPolicy + ?Sized> IntensityPolicy for Arc<P> {
    fn bound(&self) -> f64 {
        (**self).bound()
    }
    fn rate(&self, t: f64, count: u64, jumps: &[f64]) -> f64 {
        (**self).rate(t, count, jumps)
    }
    fn is_markov(&self) -> bool {
        (**self).is_markov()
    }
}

impl<P: IntensityPolicy + ?Sized> IntensityPolicy for Box<P> {
    fn bound(&self) -> f64 {
        (**self).bound()
    }
    fn rate(&self, t: f64, count: u64, jumps: &[f64]) -> f64 {
        (**self).rate(t, count, jumps)
    }
    fn is_markov(&self) -> bool {
        (**self).is_markov()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantPolicy(pub f64);

impl IntensityPolicy for ConstantPolicy {
    fn bound(&self) -> f64 {
        self.0
    }
    fn rate(&self, _t: f64, _count: u64, _jumps: &[f64]) -> f64 {
        self.0
    }
}

/// Markov rule from a closure `(t, x) -> rate` with a declared bound.
#[derive(Clone)]
pub struct MarkovPolicy<F> {
    pub bound: f64,
    pub rule: F,
}

impl<F: Fn(f64, u64) -> f64 + Sync + Send> MarkovPolicy<F> {
    pub fn new(bound: f64, rule: F) -> Self {
        Self { bound, rule }
    }
}

impl<F: Fn(f64, u64) -> f64 + Sync + Send> IntensityPolicy for MarkovPolicy<F> {
    fn bound(&self) -> f64 {
        self.bound
    }
    fn rate(&self, t: f64, count: u64, _jumps: &[f64]) -> f64 {
        (self.rule)(t, count)
    }
}

/// Path-dependent rule from a closure over `(t, accepted jump times)`.
#[derive(Clone)]
pub struct HistoryPolicy<F> {
    pub bound: f64,
    pub rule: F,
}

impl<F: Fn(f64, &[f64]) -> f64 + Sync + Send> IntensityPolicy for HistoryPolicy<F> {
    fn bound(&self) -> f64 {
        self.bound
    }
    fn rate(&self, t: f64, _count: u64, jumps: &[f64]) -> f64 {
        (self.rule)(t, jumps)
    }
    fn is_markov(&self) -> bool {
        false
    }
}

/// `A_x (1 + ½ sin(ω_x t + φ_x))`, the last entry reused for larger counts.
#[derive(Clone, Debug, PartialEq)]
pub struct SinusoidalPolicy {
    pub amp: Vec<f64>,
    pub omega: Vec<f64>,
    pub phase: Vec<f64>,
}

impl IntensityPolicy for SinusoidalPolicy {
    fn bound(&self) -> f64 {
        1.5 * self.amp.iter().copied().fold(0.0, f64::max)
    }
    fn rate(&self, t: f64, count: u64, _jumps: &[f64]) -> f64 {
        let i = (count as usize).min(self.amp.len() - 1);
        self.amp[i] * (1.0 + 0.5 * (self.omega[i] * t + self.phase[i]).sin())
    }
}

/// `λ(t, x) = exp(∂_x F(t, x))`.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimalPolicy {
    vf: ValueFunction,
    bound: f64,
}

impl OptimalPolicy {
    pub fn value_function(&self) -> &ValueFunction {
        &self.vf
    }
}

impl IntensityPolicy for OptimalPolicy {
    fn bound(&self) -> f64 {
        self.bound
    }
    fn rate(&self, t: f64, count: u64, _jumps: &[f64]) -> f64 {
        self.vf.gradient(t, count).exp()
    }
}

/// The maximizing intensity for payoff `f` on `[0, T]`; its values lie in
/// `[e^{-osc f}, e^{osc f}]`.
pub fn optimal_policy(f: &Payoff, horizon: f64) -> Result<OptimalPolicy> {
    let vf = ValueFunction::new(f.clone(), horizon)?;
    Ok(OptimalPolicy {
        vf,
        bound: f.oscillation().exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn optimal_policy_examples() {
        let c = optimal_policy(&Payoff::constant(3.0), 1.0).unwrap();
        for (t, x) in [(0.0, 0), (0.5, 3), (0.99, 10)] {
            assert_relative_eq!(c.rate(t, x, &[]), 1.0, max_relative = 1e-14);
        }
        let ind = optimal_policy(&Payoff::indicator_zero(2f64.ln()), 1.0).unwrap();
        for t in [0.0, 0.3, 0.8] {
            let want = 1.0 / (1.0 + (t - 1.0f64).exp());
            assert_relative_eq!(ind.rate(t, 0, &[]), want, max_relative = 1e-13);
            assert!(ind.rate(t, 0, &[]) < 1.0);
        }
        let f = Payoff::new(vec![0.0, 2.0, -1.0, 0.5], 0.0).unwrap();
        let p = optimal_policy(&f, 2.0).unwrap();
        let osc = f.oscillation();
        for x in 0..8 {
            for t in [0.0, 1.0, 1.9] {
                let r = p.rate(t, x, &[]);
                assert!(r >= (-osc).exp() * (1.0 - 1e-12) && r <= osc.exp() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn sinusoidal_stays_in_band() {
        let p = SinusoidalPolicy {
            amp: vec![1.0, 2.0],
            omega: vec![3.0, 5.0],
            phase: vec![0.1, 0.2],
        };
        assert_eq!(p.bound(), 3.0);
        for i in 0..100 {
            let r = p.rate(i as f64 / 50.0, i % 4, &[]);
            assert!((0.0..=3.0).contains(&r));
        }
    }
}
