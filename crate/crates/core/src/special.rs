//! Log-domain special functions: regularized incomplete gamma for integer
//! shape, truncated gamma windows and signed log-sum-exp accumulation.

use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};

const MAX_ITER: usize = 200_000;
const FPMIN: f64 = 1e-300;

/// `ln(1 - e^l)` for `l <= 0`.
pub fn log1mexp(l: f64) -> f64 {
    if l == f64::NEG_INFINITY {
        0.0
    } else if l > -std::f64::consts::LN_2 {
        (-l.exp_m1()).ln()
    } else {
        (-l.exp()).ln_1p()
    }
}

/// `ln(e^a + e^b)`.
pub fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Natural log of the Poisson probability `P(N_mean = n)`.
pub fn ln_poisson_pmf(n: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    n as f64 * mean.ln() - mean - ln_factorial(n)
}

/// `ln P(a, x)` for the regularized lower incomplete gamma with integer shape `a >= 1`.
pub fn ln_gamma_p(a: u64, x: f64) -> f64 {
    debug_assert!(a >= 1);
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if x.is_infinite() {
        return 0.0;
    }
    let af = a as f64;
    if x < af + 1.0 {
        ln_series(a, x)
    } else {
        log1mexp(ln_continued_fraction(a, x))
    }
}

/// `ln Q(a, x)` for the regularized upper incomplete gamma with integer shape `a >= 1`.
pub fn ln_gamma_q(a: u64, x: f64) -> f64 {
    debug_assert!(a >= 1);
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return f64::NEG_INFINITY;
    }
    let af = a as f64;
    if x < af + 1.0 {
        log1mexp(ln_series(a, x))
    } else {
        ln_continued_fraction(a, x)
    }
}

fn ln_prefactor(a: u64, x: f64) -> f64 {
    // x^a e^{-x} / Gamma(a)
    a as f64 * x.ln() - x - ln_factorial(a - 1)
}

fn ln_series(a: u64, x: f64) -> f64 {
    let mut ap = a as f64;
    let mut del = 1.0 / ap;
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del < sum * 1e-17 {
            break;
        }
    }
    sum.ln() + ln_prefactor(a, x)
}

fn ln_continued_fraction(a: u64, x: f64) -> f64 {
    let af = a as f64;
    let mut b = x + 1.0 - af;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - af);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h.ln() + ln_prefactor(a, x)
}

/// `ln( P(a, hi) - P(a, lo) )` for `0 <= lo <= hi <= inf`, split at `a + 1` so
/// each half is a difference inside one numerically stable regime.
fn ln_gamma_p_diff(a: u64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return f64::NEG_INFINITY;
    }
    let pivot = a as f64 + 1.0;
    if hi <= pivot {
        let lh = ln_gamma_p(a, hi);
        let ll = ln_gamma_p(a, lo);
        return lh + log1mexp(ll - lh);
    }
    if lo >= pivot {
        let ql = ln_gamma_q(a, lo);
        let qh = ln_gamma_q(a, hi);
        return ql + log1mexp(qh - ql);
    }
    let lower = ln_gamma_p_diff(a, lo, pivot);
    let upper = ln_gamma_p_diff(a, pivot, hi);
    logaddexp(lower, upper)
}

/// Natural log of `∫_lo^hi x^p e^{-s x} dx / p!`.
///
/// Requires `0 <= lo <= hi`; `hi` may be infinite only when `s > 0`.
pub fn ln_gamma_window(p: u64, s: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(lo >= 0.0) || hi < lo || s.is_nan() {
        return Err(Error::InvalidInput(format!(
            "bad window [{lo}, {hi}) with rate {s}"
        )));
    }
    if hi == lo {
        return Ok(f64::NEG_INFINITY);
    }
    if s > 0.0 {
        let a = p + 1;
        let ld = ln_gamma_p_diff(a, s * lo, s * hi);
        return Ok(ld - a as f64 * s.ln());
    }
    if hi.is_infinite() {
        return Err(Error::Divergence(format!(
            "x^{p} e^(-{s} x) is not integrable on [{lo}, inf)"
        )));
    }
    let beta = -s;
    // ∑_k β^k/k! (hi^{p+k+1} - lo^{p+k+1}) / ((p+k+1) p!), all terms positive.
    let ratio = lo / hi;
    let mut acc = f64::NEG_INFINITY;
    let ln_p_fact = ln_factorial(p);
    for k in 0..MAX_ITER as u64 {
        let e = (p + k + 1) as f64;
        let gap = log1mexp(e * ratio.ln());
        let mut term = e * hi.ln() + gap - e.ln() - ln_p_fact;
        if k > 0 {
            term += k as f64 * beta.ln() - ln_factorial(k);
        }
        acc = logaddexp(acc, term);
        if beta == 0.0 || (k as f64 > beta * hi && term < acc - 40.0) {
            break;
        }
    }
    Ok(acc)
}

/// Accumulates signed terms given as `(sign, ln|term|)` without overflow.
#[derive(Clone, Debug, Default)]
pub struct SignedLogSum {
    terms: Vec<(f64, f64)>,
}

impl SignedLogSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, sign: f64, ln_abs: f64) {
        if sign != 0.0 && ln_abs > f64::NEG_INFINITY {
            self.terms.push((sign.signum(), ln_abs));
        }
    }

    /// Adds `coef * e^{ln_abs}`.
    pub fn push_scaled(&mut self, coef: f64, ln_abs: f64) {
        if coef != 0.0 {
            self.push(coef.signum(), coef.abs().ln() + ln_abs);
        }
    }

    /// Largest log-magnitude among the terms.
    pub fn ln_max(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.1)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The sum as `(sign, ln|sum|)`; sign is 0 for an exact zero.
    pub fn value_ln(&self) -> (f64, f64) {
        let m = self.ln_max();
        if m == f64::NEG_INFINITY {
            return (0.0, f64::NEG_INFINITY);
        }
        let s: f64 = self.terms.iter().map(|(sg, l)| sg * (l - m).exp()).sum();
        if s == 0.0 {
            (0.0, f64::NEG_INFINITY)
        } else {
            (s.signum(), m + s.abs().ln())
        }
    }

    pub fn value(&self) -> f64 {
        let (s, l) = self.value_ln();
        if s == 0.0 {
            0.0
        } else {
            s * l.exp()
        }
    }
}
