//! Seeded random instances for property suites, acceptance runs and benches.

use rand::Rng;

use crate::poissonctl::{Payoff, SinusoidalPolicy};
use crate::seqcore::LogConcaveSeq;

/// `exp` of a concave sequence of length `1..=max_len`, optionally padded
/// with zeros on both sides.
pub fn log_concave_seq<R: Rng + ?Sized>(rng: &mut R, max_len: usize) -> LogConcaveSeq {
    let len = rng.random_range(1..=max_len.max(1));
    let mut steps: Vec<f64> = (0..len.saturating_sub(1))
        .map(|_| rng.random_range(-2.0..2.0))
        .collect();
    steps.sort_by(|a, b| b.total_cmp(a));
    let start: f64 = rng.random_range(-1.0..1.0);
    let mut values = Vec::with_capacity(len + 4);
    values.extend(std::iter::repeat_n(0.0, rng.random_range(0..=2)));
    let mut l = start;
    values.push(l.exp());
    for s in steps {
        l += s;
        values.push(l.exp());
    }
    values.extend(std::iter::repeat_n(0.0, rng.random_range(0..=2)));
    LogConcaveSeq::new(values).expect("finite non-negative by construction")
}

/// Payoff on `{0..=max_x}` with values in `[-amp, amp]` and a random tail value.
pub fn payoff<R: Rng + ?Sized>(rng: &mut R, max_x: usize, amp: f64) -> Payoff {
    let values = (0..=max_x).map(|_| rng.random_range(-amp..=amp)).collect();
    let beyond = rng.random_range(-amp..=amp);
    Payoff::new(values, beyond).expect("finite by construction")
}

/// Sinusoidal Markov policy over `levels` count levels with amplitudes in
/// `[0.2, max_amp]`.
pub fn sinusoidal_policy<R: Rng + ?Sized>(
    rng: &mut R,
    levels: usize,
    max_amp: f64,
) -> SinusoidalPolicy {
    let levels = levels.max(1);
    SinusoidalPolicy {
        amp: (0..levels)
            .map(|_| rng.random_range(0.2..=max_amp.max(0.2)))
            .collect(),
        omega: (0..levels).map(|_| rng.random_range(0.0..10.0)).collect(),
        phase: (0..levels)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poissonctl::trajectory_rng;
    use crate::seqcore::is_log_concave;

    #[test]
    fn generated_sequences_are_log_concave() {
        let mut rng = trajectory_rng(1, 0);
        for _ in 0..500 {
            let s = log_concave_seq(&mut rng, 12);
            assert!(is_log_concave(&s, 1e-12).pass, "{s:?}");
        }
    }
}
