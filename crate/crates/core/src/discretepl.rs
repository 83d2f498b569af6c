//! Four-function inequality on the integers with floor/ceil midpoints: the
//! hypothesis checker, counting and Poisson conclusions, the pathwise
//! floor/ceil coupling of counting processes and the shifted-Poisson limit.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{map_indexed, try_map_indexed, Exec};
use crate::poissonctl::{phi, trajectory_rng, IntensityPolicy, PlanarNoise};
use crate::quad;
use crate::special::ln_poisson_pmf;

/// Relative slack on conclusion inequalities.
pub const CONCLUSION_REL: f64 = 1e-12;

/// A real number or minus infinity; `e^{-∞} = 0` and `-∞` absorbs sums.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
}

impl ExtReal {
    pub fn from_f64(v: f64) -> Result<Self> {
        if v == f64::NEG_INFINITY {
            Ok(Self::NegInf)
        } else if v.is_finite() {
            Ok(Self::Finite(v))
        } else {
            Err(Error::InvalidInput(format!("{v} is not an extended real")))
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Self::NegInf => f64::NEG_INFINITY,
            Self::Finite(v) => v,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExtRepr {
    Num(f64),
    Text(String),
}

impl Serialize for ExtReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::NegInf => ExtRepr::Text("-inf".into()),
            Self::Finite(v) => ExtRepr::Num(*v),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        match ExtRepr::deserialize(d)? {
            ExtRepr::Num(v) => Self::from_f64(v).map_err(D::Error::custom),
            ExtRepr::Text(t) if t.trim() == "-inf" => Ok(Self::NegInf),
            ExtRepr::Text(t) => Err(D::Error::custom(format!(
                "expected a number or \"-inf\", got {t:?}"
            ))),
        }
    }
}

/// A function on the window `[lo, lo + len)`, minus infinity elsewhere.
/// Serialized as a map from integer to value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<i64, ExtReal>", into = "BTreeMap<i64, ExtReal>")]
pub struct WindowFn {
    pub lo: i64,
    /// Values as `f64` with `-∞` allowed.
    pub values: Vec<f64>,
}

impl WindowFn {
    pub fn new(lo: i64, values: Vec<f64>) -> Result<Self> {
        for &v in &values {
            ExtReal::from_f64(v)?;
        }
        Ok(Self { lo, values })
    }

    /// The same value on every point of `[lo, hi]`.
    pub fn constant(lo: i64, hi: i64, c: f64) -> Result<Self> {
        Self::new(lo, vec![c; (hi - lo + 1).max(0) as usize])
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    pub fn get(&self, x: i64) -> f64 {
        let i = x - self.lo;
        if i < 0 || i >= self.values.len() as i64 {
            f64::NEG_INFINITY
        } else {
            self.values[i as usize]
        }
    }

    /// Points of the window carrying a finite value.
    pub fn finite_points(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(i, &v)| (self.lo + i as i64, v))
    }

    /// `log Σ_x e^{f(x)}`.
    pub fn ln_sum_exp(&self) -> f64 {
        ln_sum_exp(self.finite_points().map(|(_, v)| v))
    }
}

impl TryFrom<BTreeMap<i64, ExtReal>> for WindowFn {
    type Error = Error;

    fn try_from(map: BTreeMap<i64, ExtReal>) -> Result<Self> {
        let (Some(&lo), Some(&hi)) = (map.keys().next(), map.keys().next_back()) else {
            return Ok(Self {
                lo: 0,
                values: Vec::new(),
            });
        };
        let values = (lo..=hi)
            .map(|x| map.get(&x).copied().unwrap_or(ExtReal::NegInf).to_f64())
            .collect();
        Ok(Self { lo, values })
    }
}

impl From<WindowFn> for BTreeMap<i64, ExtReal> {
    fn from(w: WindowFn) -> Self {
        w.values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                (
                    w.lo + i as i64,
                    ExtReal::from_f64(v).unwrap_or(ExtReal::NegInf),
                )
            })
            .collect()
    }
}

fn ln_sum_exp(xs: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadrupleOfFunctions {
    pub f: WindowFn,
    pub g: WindowFn,
    pub h: WindowFn,
    pub k: WindowFn,
}

impl QuadrupleOfFunctions {
    /// `f` and `g` with the tight `h = k` from [`tight_hk`].
    pub fn tight(f: WindowFn, g: WindowFn) -> Self {
        let (h, k) = tight_hk(&f, &g);
        Self { f, g, h, k }
    }

    /// Restriction of all four functions to the non-negative integers.
    pub fn restrict_to_naturals(&self) -> Self {
        let cut = |w: &WindowFn| {
            let lo = w.lo.max(0);
            let values = (lo..=w.hi()).map(|x| w.get(x)).collect();
            WindowFn { lo, values }
        };
        Self {
            f: cut(&self.f),
            g: cut(&self.g),
            h: cut(&self.h),
            k: cut(&self.k),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub x: i64,
    pub y: i64,
    /// `f(x) + g(y)`.
    pub lhs: f64,
    /// `h(⌊(x+y)/2⌋) + k(⌈(x+y)/2⌉)`.
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub pass: bool,
    pub pairs_checked: usize,
    pub violation: Option<Violation>,
}

/// Exhaustive check of `f(x) + g(y) <= h(⌊(x+y)/2⌋) + k(⌈(x+y)/2⌉)`.
pub fn check_hypothesis(q: &QuadrupleOfFunctions) -> HypothesisReport {
    let mut pairs_checked = 0;
    for (x, fx) in q.f.finite_points() {
        for (y, gy) in q.g.finite_points() {
            pairs_checked += 1;
            let s = x + y;
            let lhs = fx + gy;
            let rhs = q.h.get(s.div_euclid(2)) + q.k.get(s.div_euclid(2) + s.rem_euclid(2));
            if !(lhs <= rhs) {
                return HypothesisReport {
                    pass: false,
                    pairs_checked,
                    violation: Some(Violation { x, y, lhs, rhs }),
                };
            }
        }
    }
    HypothesisReport {
        pass: true,
        pairs_checked,
        violation: None,
    }
}

/// With `m(s) = max_{x+y=s} f(x) + g(y)`, returns
/// `h(z) = k(z) = ½ max(m(2z-1), m(2z), m(2z+1))`.
pub fn tight_hk(f: &WindowFn, g: &WindowFn) -> (WindowFn, WindowFn) {
    if f.values.is_empty() || g.values.is_empty() {
        let empty = WindowFn {
            lo: 0,
            values: Vec::new(),
        };
        return (empty.clone(), empty);
    }
    let s_lo = f.lo + g.lo;
    let s_hi = f.hi() + g.hi();
    let mut m = vec![f64::NEG_INFINITY; (s_hi - s_lo + 1) as usize];
    for (x, fx) in f.finite_points() {
        for (y, gy) in g.finite_points() {
            let slot = &mut m[(x + y - s_lo) as usize];
            *slot = slot.max(fx + gy);
        }
    }
    let m_at = |s: i64| {
        if s < s_lo || s > s_hi {
            f64::NEG_INFINITY
        } else {
            m[(s - s_lo) as usize]
        }
    };
    let z_lo = s_lo.div_euclid(2);
    let z_hi = (s_hi + 1).div_euclid(2);
    let values: Vec<f64> = (z_lo..=z_hi)
        .map(|z| 0.5 * m_at(2 * z - 1).max(m_at(2 * z)).max(m_at(2 * z + 1)))
        .collect();
    let h = WindowFn { lo: z_lo, values };
    (h.clone(), h)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConclusionReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ln_lhs: f64,
    pub ln_rhs: f64,
    pub pass: bool,
}

impl ConclusionReport {
    fn from_ln(ln_lhs: f64, ln_rhs: f64) -> Self {
        Self {
            lhs: ln_lhs.exp(),
            rhs: ln_rhs.exp(),
            ln_lhs,
            ln_rhs,
            pass: ln_lhs == f64::NEG_INFINITY || ln_lhs <= ln_rhs + CONCLUSION_REL.ln_1p(),
        }
    }
}

/// `(Σ e^f)(Σ e^g) <= (Σ e^h)(Σ e^k)`; the hypothesis must hold.
pub fn check_conclusion_counting(q: &QuadrupleOfFunctions) -> Result<ConclusionReport> {
    let hyp = check_hypothesis(q);
    if let Some(v) = hyp.violation {
        return Err(Error::Precondition(format!(
            "hypothesis fails at (x, y) = ({}, {}): {} > {}",
            v.x, v.y, v.lhs, v.rhs
        )));
    }
    Ok(ConclusionReport::from_ln(
        q.f.ln_sum_exp() + q.g.ln_sum_exp(),
        q.h.ln_sum_exp() + q.k.ln_sum_exp(),
    ))
}

/// `log ∫ e^w dπ_T` over the non-negative part of the window.
pub fn ln_poisson_expectation(w: &WindowFn, horizon: f64) -> f64 {
    ln_sum_exp(
        w.finite_points()
            .filter(|&(x, _)| x >= 0)
            .map(move |(x, v)| v + ln_poisson_pmf(x as u64, horizon)),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonConclusionReport {
    /// Whether the hypothesis holds on the non-negative integers.
    pub hypothesis: bool,
    pub horizon: f64,
    pub conclusion: ConclusionReport,
}

/// `∫e^f dπ_T · ∫e^g dπ_T <= ∫e^h dπ_T · ∫e^k dπ_T`.
pub fn check_conclusion_poisson(
    q: &QuadrupleOfFunctions,
    horizon: f64,
) -> Result<PoissonConclusionReport> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidInput(format!(
            "horizon {horizon} must be positive"
        )));
    }
    let nat = q.restrict_to_naturals();
    let e = |w: &WindowFn| ln_poisson_expectation(w, horizon);
    Ok(PoissonConclusionReport {
        hypothesis: check_hypothesis(&nat).pass,
        horizon,
        conclusion: ConclusionReport::from_ln(e(&nat.f) + e(&nat.g), e(&nat.h) + e(&nat.k)),
    })
}

/// `log E e^{w(Y_n - n)}` with `Y_n ~ Poisson(n)`.
pub fn ln_shifted_poisson_expectation(w: &WindowFn, n: u64) -> f64 {
    let n_i = n as i64;
    ln_sum_exp(
        w.finite_points()
            .filter(move |&(x, _)| x >= -n_i)
            .map(move |(x, v)| v + ln_poisson_pmf((x + n_i) as u64, n as f64)),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StirlingRow {
    pub n: u64,
    /// `√(2πn) E e^{f(X_n)}` for `f, g, h, k`.
    pub scaled: [f64; 4],
    /// `Σ e^f` for `f, g, h, k`.
    pub sums: [f64; 4],
    /// `|scaled - sum| / sum`, 0 when the sum vanishes.
    pub rel_err: [f64; 4],
    /// The shifted inequality `E e^f E e^g <= E e^h E e^k`.
    pub shifted: ConclusionReport,
}

/// Shifted-Poisson approximation of the counting measure at each `n`.
pub fn stirling_limit_experiment(
    q: &QuadrupleOfFunctions,
    n_list: &[u64],
) -> Result<Vec<StirlingRow>> {
    if n_list.contains(&0) {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    let fns = [&q.f, &q.g, &q.h, &q.k];
    let sums = fns.map(|w| w.ln_sum_exp().exp());
    Ok(n_list
        .iter()
        .map(|&n| {
            let ln_e = fns.map(|w| ln_shifted_poisson_expectation(w, n));
            let ln_norm = 0.5 * (2.0 * std::f64::consts::PI * n as f64).ln();
            let scaled = ln_e.map(|l| (l + ln_norm).exp());
            let mut rel_err = [0.0; 4];
            for i in 0..4 {
                if sums[i] > 0.0 {
                    rel_err[i] = (scaled[i] - sums[i]).abs() / sums[i];
                }
            }
            StirlingRow {
                n,
                scaled,
                sums,
                rel_err,
                shifted: ConclusionReport::from_ln(ln_e[0] + ln_e[1], ln_e[2] + ln_e[3]),
            }
        })
        .collect())
}

/// `λ = (α∧β)χ + (α∨β)(1-χ)`, `μ = (α∨β)χ + (α∧β)(1-χ)` for parity `χ`.
pub fn swap_rates(alpha: f64, beta: f64, even: bool) -> (f64, f64) {
    let (lo, hi) = (alpha.min(beta), alpha.max(beta));
    if even {
        (lo, hi)
    } else {
        (hi, lo)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub atoms: usize,
    pub mismatches: usize,
    /// Time of the first atom where a floor/ceil identity fails.
    pub first_mismatch: Option<f64>,
    /// Largest `|ψ(α)+ψ(β) - ψ(λ)-ψ(μ)|` over quadrature nodes for
    /// `ψ = φ` and `ψ(x) = x²`.
    pub max_swap_defect: f64,
    /// `(X^α_T, X^β_T, X^λ_T, X^μ_T)`.
    pub terminal: [u64; 4],
    pub pass: bool,
}

fn checked<P: IntensityPolicy + ?Sized>(
    p: &P,
    cap: f64,
    t: f64,
    count: u64,
    jumps: &[f64],
) -> Result<f64> {
    let r = p.rate(t, count, jumps);
    if !(r >= 0.0) || r > cap * (1.0 + 1e-12) {
        return Err(Error::ContractViolation { t, rate: r, cap });
    }
    Ok(r)
}

/// Simulates `X^α, X^β, X^λ, X^μ` on one noise and checks
/// `X^λ = ⌊(X^α+X^β)/2⌋`, `X^μ = ⌈(X^α+X^β)/2⌉` after every atom.
pub fn coupling_check<A, B>(alpha: &A, beta: &B, noise: &PlanarNoise) -> Result<CouplingReport>
where
    A: IntensityPolicy + ?Sized,
    B: IntensityPolicy + ?Sized,
{
    let cap = noise.cap;
    let mut ja: Vec<f64> = Vec::new();
    let mut jb: Vec<f64> = Vec::new();
    let (mut xl, mut xm) = (0u64, 0u64);
    let mut mismatches = 0;
    let mut first_mismatch = None;
    let mut max_swap_defect: f64 = 0.0;
    let mut last = 0.0;
    let mut swap_defects = |lo: f64, hi: f64, ja: &[f64], jb: &[f64]| -> Result<()> {
        let (xa, xb) = (ja.len() as u64, jb.len() as u64);
        let mut err = None;
        quad::for_each_node(lo, hi, |t, _| {
            let (a, b) = match (
                checked(alpha, cap, t, xa, ja),
                checked(beta, cap, t, xb, jb),
            ) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => {
                    err.get_or_insert(e);
                    return;
                }
            };
            let (l, m) = swap_rates(a, b, (xa + xb) % 2 == 0);
            let d1 = ((phi(a) + phi(b)) - (phi(l) + phi(m))).abs();
            let d2 = ((a * a + b * b) - (l * l + m * m)).abs();
            max_swap_defect = max_swap_defect.max(d1).max(d2);
        });
        err.map_or(Ok(()), Err)
    };
    for &(t, u) in &noise.atoms {
        swap_defects(last, t, &ja, &jb)?;
        last = t;
        let a = checked(alpha, cap, t, ja.len() as u64, &ja)?;
        let b = checked(beta, cap, t, jb.len() as u64, &jb)?;
        let (l, m) = swap_rates(a, b, (ja.len() + jb.len()).is_multiple_of(2));
        if u <= a {
            ja.push(t);
        }
        if u <= b {
            jb.push(t);
        }
        xl += (u <= l) as u64;
        xm += (u <= m) as u64;
        let s = (ja.len() + jb.len()) as u64;
        if xl != s / 2 || xm != s.div_ceil(2) {
            mismatches += 1;
            first_mismatch.get_or_insert(t);
        }
    }
    swap_defects(last, noise.horizon, &ja, &jb)?;
    Ok(CouplingReport {
        atoms: noise.atoms.len(),
        mismatches,
        first_mismatch,
        max_swap_defect,
        terminal: [ja.len() as u64, jb.len() as u64, xl, xm],
        pass: mismatches == 0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingBatchReport {
    pub noises: usize,
    pub atoms: usize,
    pub mismatches: usize,
    /// `(noise index, time)` of the first failure in index order.
    pub first_mismatch: Option<(usize, f64)>,
    pub max_swap_defect: f64,
    pub pass: bool,
}

/// [`coupling_check`] on `n_noise` noises with cap `max(bound α, bound β)`.
pub fn coupling_batch<A, B>(
    exec: Exec,
    alpha: &A,
    beta: &B,
    horizon: f64,
    n_noise: usize,
    seed: u64,
) -> Result<CouplingBatchReport>
where
    A: IntensityPolicy + ?Sized,
    B: IntensityPolicy + ?Sized,
{
    let cap = alpha.bound().max(beta.bound());
    let reports = try_map_indexed(exec, n_noise, |i| {
        let noise = PlanarNoise::sample(horizon, cap, seed, i as u64)?;
        coupling_check(alpha, beta, &noise)
    })?;
    let first_mismatch = reports
        .iter()
        .enumerate()
        .find_map(|(i, r)| r.first_mismatch.map(|t| (i, t)));
    let mismatches = reports.iter().map(|r| r.mismatches).sum();
    Ok(CouplingBatchReport {
        noises: n_noise,
        atoms: reports.iter().map(|r| r.atoms).sum(),
        mismatches,
        first_mismatch,
        max_swap_defect: reports
            .iter()
            .map(|r| r.max_swap_defect)
            .fold(0.0, f64::max),
        pass: mismatches == 0,
    })
}

/// Random `f, g` with at most `max_width` points each, values in `[-3, 3]`
/// or `-∞` with probability 0.2, and the tight `h, k`.
pub fn random_tight_instance<R: Rng + ?Sized>(
    rng: &mut R,
    max_width: usize,
) -> QuadrupleOfFunctions {
    random_tight_instance_from(rng, max_width, |rng, _| rng.random_range(-3..=5))
}

/// As [`random_tight_instance`] with windows centred at 0, the regime of
/// the shifted-Poisson approximation.
pub fn random_centred_tight_instance<R: Rng + ?Sized>(
    rng: &mut R,
    max_width: usize,
) -> QuadrupleOfFunctions {
    random_tight_instance_from(rng, max_width, |_, width| -((width as i64 - 1) / 2))
}

fn random_tight_instance_from<R: Rng + ?Sized>(
    rng: &mut R,
    max_width: usize,
    place: impl Fn(&mut R, usize) -> i64,
) -> QuadrupleOfFunctions {
    let side = |rng: &mut R| {
        let width = rng.random_range(1..=max_width.max(1));
        let lo = place(rng, width);
        let values = (0..width)
            .map(|_| {
                if rng.random_bool(0.2) {
                    f64::NEG_INFINITY
                } else {
                    rng.random_range(-3.0..=3.0)
                }
            })
            .collect();
        WindowFn { lo, values }
    };
    let f = side(rng);
    let g = side(rng);
    QuadrupleOfFunctions::tight(f, g)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnessReport {
    pub instances: usize,
    pub hypothesis_failures: usize,
    pub counting_violations: usize,
    pub poisson_violations: usize,
    pub horizons: Vec<f64>,
    pub first_failure: Option<usize>,
    pub pass: bool,
}

/// Hypothesis, counting and Poisson conclusions on `n` random tight
/// instances; instance `i` draws from stream `i` of `seed`.
pub fn pl_harness(
    exec: Exec,
    n: usize,
    max_width: usize,
    horizons: &[f64],
    seed: u64,
) -> Result<HarnessReport> {
    let outcomes = map_indexed(exec, n, |i| -> Result<(bool, bool, bool)> {
        let q = random_tight_instance(&mut trajectory_rng(seed, i as u64), max_width);
        let hyp = check_hypothesis(&q).pass;
        let counting = hyp && check_conclusion_counting(&q)?.pass;
        let mut poisson = true;
        for &t in horizons {
            let r = check_conclusion_poisson(&q, t)?;
            poisson &= r.hypothesis && r.conclusion.pass;
        }
        Ok((hyp, counting, poisson))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let count = |f: fn(&(bool, bool, bool)) -> bool| outcomes.iter().filter(|o| !f(o)).count();
    let hypothesis_failures = count(|o| o.0);
    let counting_violations = count(|o| o.1);
    let poisson_violations = count(|o| o.2);
    Ok(HarnessReport {
        instances: n,
        hypothesis_failures,
        counting_violations,
        poisson_violations,
        horizons: horizons.to_vec(),
        first_failure: outcomes.iter().position(|o| !(o.0 && o.1 && o.2)),
        pass: hypothesis_failures + counting_violations + poisson_violations == 0,
    })
}
