//! Log-concave sequence primitives and the binomial sequence transforms.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::binom::binom_f64;
use crate::error::{Error, Result};

/// Default relative tolerance for log-concavity comparisons.
pub const DEFAULT_REL_TOL: f64 = 1e-12;
/// Products below this magnitude are compared absolutely.
pub const ABS_FLOOR: f64 = 1e-300;

/// A finite non-negative sequence indexed from 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LogConcaveSeq {
    values: Vec<f64>,
}

impl LogConcaveSeq {
    /// Rejects negative or non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidInput(format!(
                "sequence entry {i} = {v} is not a finite non-negative number"
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Entry `i`, reading missing indices as 0.
    pub fn get(&self, i: usize) -> f64 {
        self.values.get(i).copied().unwrap_or(0.0)
    }

    /// Index of the first strictly positive entry.
    pub fn support_lo(&self) -> Option<usize> {
        self.values.iter().position(|&v| v > 0.0)
    }

    /// Index of the last strictly positive entry.
    pub fn support_hi(&self) -> Option<usize> {
        self.values.iter().rposition(|&v| v > 0.0)
    }

    /// Every entry multiplied by `scale^i`.
    pub fn geometric_scale(&self, scale: f64) -> Result<Self> {
        let mut w = 1.0;
        let v = self
            .values
            .iter()
            .map(|x| {
                let y = x * w;
                w *= scale;
                y
            })
            .collect();
        Self::new(v)
    }
}

impl TryFrom<Vec<f64>> for LogConcaveSeq {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LogConcaveSeq> for Vec<f64> {
    fn from(s: LogConcaveSeq) -> Self {
        s.values
    }
}

/// Balanced index quadruple `k <= l <= m <= n`, `k + n = l + m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[i64; 4]", into = "[i64; 4]")]
pub struct Quadruple {
    k: u32,
    l: u32,
    m: u32,
    n: u32,
}

impl Quadruple {
    pub fn new(k: i64, l: i64, m: i64, n: i64) -> Result<Self> {
        let ok = k >= 0 && k <= l && l <= m && m <= n && k + n == l + m && n <= u32::MAX as i64;
        if !ok {
            return Err(Error::InvalidQuadruple { k, l, m, n });
        }
        Ok(Self {
            k: k as u32,
            l: l as u32,
            m: m as u32,
            n: n as u32,
        })
    }

    pub fn k(&self) -> usize {
        self.k as usize
    }
    pub fn l(&self) -> usize {
        self.l as usize
    }
    pub fn m(&self) -> usize {
        self.m as usize
    }
    pub fn n(&self) -> usize {
        self.n as usize
    }

    /// `k == l` (hence `m == n`): the measurement vanishes identically.
    pub fn is_degenerate(&self) -> bool {
        self.k == self.l
    }

    /// All quadruples with `n <= n_max`, ordered by `(n - k, l - k, k)`.
    pub fn enumerate(n_max: usize) -> Vec<Quadruple> {
        let mut out = Vec::new();
        for span in 0..=n_max {
            for inner in 0..=span / 2 {
                for k in 0..=(n_max - span) {
                    let l = k + inner;
                    let n = k + span;
                    let m = n + k - l;
                    out.push(Quadruple {
                        k: k as u32,
                        l: l as u32,
                        m: m as u32,
                        n: n as u32,
                    });
                }
            }
        }
        out
    }
}

impl TryFrom<[i64; 4]> for Quadruple {
    type Error = Error;

    fn try_from(q: [i64; 4]) -> Result<Self> {
        Self::new(q[0], q[1], q[2], q[3])
    }
}

impl From<Quadruple> for [i64; 4] {
    fn from(q: Quadruple) -> Self {
        [q.k as i64, q.l as i64, q.m as i64, q.n as i64]
    }
}

impl fmt::Display for Quadruple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.k, self.l, self.m, self.n)
    }
}

impl std::str::FromStr for Quadruple {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<i64> = s
            .trim_matches(|c| c == '(' || c == ')')
            .split(',')
            .map(|p| p.trim().parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("quadruple {s:?}: {e}")))?;
        if parts.len() != 4 {
            return Err(Error::Parse(format!("quadruple {s:?} needs 4 integers")));
        }
        Self::new(parts[0], parts[1], parts[2], parts[3])
    }
}

/// Outcome of a log-concavity certification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub pass: bool,
    /// First failing index (gap in the support or failing interior index).
    pub violation_index: Option<usize>,
    /// Smallest relative margin `(v_i^2 - v_{i-1} v_{i+1}) / max(v_i^2, v_{i-1} v_{i+1})`;
    /// `-1` for a support gap.
    pub margin: f64,
}

/// Checks contiguous support and `v_i^2 >= (1 - rel_tol) v_{i-1} v_{i+1}`.
pub fn is_log_concave(seq: &LogConcaveSeq, rel_tol: f64) -> CertReport {
    let v = seq.values();
    let mut report = CertReport {
        pass: true,
        violation_index: None,
        margin: 0.0,
    };
    let mut margin = f64::INFINITY;
    if let (Some(lo), Some(hi)) = (seq.support_lo(), seq.support_hi()) {
        if let Some(gap) = (lo..=hi).find(|&i| v[i] <= 0.0) {
            return CertReport {
                pass: false,
                violation_index: Some(gap),
                margin: -1.0,
            };
        }
    }
    for i in 1..v.len().saturating_sub(1) {
        let sq = v[i] * v[i];
        let prod = v[i - 1] * v[i + 1];
        let scale = sq.max(prod);
        if scale > 0.0 {
            margin = margin.min((sq - prod) / scale);
        }
        if sq < (1.0 - rel_tol) * prod - ABS_FLOOR && report.pass {
            report.pass = false;
            report.violation_index = Some(i);
        }
    }
    report.margin = if margin.is_finite() { margin } else { 0.0 };
    report
}

/// Log-domain variant for sequences whose values under- or overflow:
/// `ln_values` uses `-inf` for zeros, and the check is
/// `2 L_i >= L_{i-1} + L_{i+1} - abs_tol (1 + |L_i|)`. The margin reported is
/// the smallest second difference `2 L_i - L_{i-1} - L_{i+1}`.
pub fn is_log_concave_ln(ln_values: &[f64], abs_tol: f64) -> CertReport {
    let finite: Vec<usize> = (0..ln_values.len())
        .filter(|&i| ln_values[i].is_finite())
        .collect();
    if let (Some(&lo), Some(&hi)) = (finite.first(), finite.last()) {
        if hi - lo + 1 != finite.len() {
            let gap = (lo..=hi).find(|&i| !ln_values[i].is_finite()).unwrap_or(lo);
            return CertReport {
                pass: false,
                violation_index: Some(gap),
                margin: -1.0,
            };
        }
    }
    let mut report = CertReport {
        pass: true,
        violation_index: None,
        margin: 0.0,
    };
    let mut margin = f64::INFINITY;
    for w in finite.windows(3) {
        let (a, b, c) = (ln_values[w[0]], ln_values[w[1]], ln_values[w[2]]);
        let d = 2.0 * b - a - c;
        margin = margin.min(d);
        if d < -abs_tol * (1.0 + b.abs()) && report.pass {
            report.pass = false;
            report.violation_index = Some(w[1]);
        }
    }
    report.margin = if margin.is_finite() { margin } else { 0.0 };
    report
}

/// `seq[l] seq[m] - seq[k] seq[n]`, missing entries read as 0.
pub fn measurement_defect(seq: &LogConcaveSeq, q: Quadruple) -> f64 {
    seq.get(q.l()) * seq.get(q.m()) - seq.get(q.k()) * seq.get(q.n())
}

fn require_log_concave(seq: &LogConcaveSeq, what: &str) -> Result<()> {
    let r = is_log_concave(seq, DEFAULT_REL_TOL);
    if r.pass {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "{what} is not log-concave (violation at index {:?})",
            r.violation_index
        )))
    }
}

/// Binomial convolution `c_n = Σ_k C(n,k) a_k b_{n-k}`.
pub fn walkup_convolve(a: &LogConcaveSeq, b: &LogConcaveSeq) -> Result<LogConcaveSeq> {
    require_log_concave(a, "left operand")?;
    require_log_concave(b, "right operand")?;
    if a.is_empty() || b.is_empty() {
        return LogConcaveSeq::new(Vec::new());
    }
    let len = a.len() + b.len() - 1;
    let mut c = vec![0.0; len];
    for (n, cn) in c.iter_mut().enumerate() {
        let lo = n.saturating_sub(b.len() - 1);
        let hi = n.min(a.len() - 1);
        for k in lo..=hi {
            *cn += binom_f64(n as i64, k as i64)? * a.get(k) * b.get(n - k);
        }
    }
    LogConcaveSeq::new(c)
}

/// Upper binomial tail `c_k = Σ_{n >= k} C(n,k) a_n`.
pub fn binomial_tail_transform(a: &LogConcaveSeq) -> Result<LogConcaveSeq> {
    let len = a.len();
    let mut c = vec![0.0; len];
    for (k, ck) in c.iter_mut().enumerate() {
        // smallest terms first
        for n in (k..len).rev() {
            *ck += binom_f64(n as i64, k as i64)? * a.get(n);
        }
    }
    LogConcaveSeq::new(c)
}

/// Two sides of `Σ C(n,k)C(l-n,k) a_n a_{l-n} >= Σ C(n,k-1)C(l-n,k+1) a_n a_{l-n}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

pub fn combinatorial_inequality_check(
    a: &LogConcaveSeq,
    k: usize,
    l: usize,
) -> Result<InequalityCheck> {
    let (k, l) = (k as i64, l as i64);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for n in 0..=l {
        let prod = a.get(n as usize) * a.get((l - n) as usize);
        if prod == 0.0 {
            continue;
        }
        lhs += binom_f64(n, k)? * binom_f64(l - n, k)? * prod;
        rhs += binom_f64(n, k - 1)? * binom_f64(l - n, k + 1)? * prod;
    }
    let pass = lhs >= rhs - DEFAULT_REL_TOL * lhs.max(rhs) - ABS_FLOOR;
    Ok(InequalityCheck { lhs, rhs, pass })
}
