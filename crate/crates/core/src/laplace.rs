//! Laplace-transform views of a measure: alternating Taylor coefficients,
//! log-concavity measurements and their derivatives, Post inversion and the
//! smoothed density `g_t`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::halfmeasure::HalfLineMeasure;
use crate::seqcore::{is_log_concave_ln, CertReport, LogConcaveSeq, Quadruple};
use crate::special::SignedLogSum;

/// Points per default geometric grid.
pub const DEFAULT_GRID_POINTS: usize = 33;
/// Relative tolerance on second differences in the root-convexity check.
pub const ROOT_CONVEXITY_TOL: f64 = 1e-9;

/// Anything with computable `a_t(n) = ∫ x^n/n! e^{-t x} dμ(x)`.
pub trait MomentSource: Sync {
    /// `(sign, ln|a_t(n)|)`; sign 0 for an exact zero.
    fn moment_ln(&self, t: f64, n: u64) -> Result<(f64, f64)>;

    fn moment(&self, t: f64, n: u64) -> Result<f64> {
        let (s, l) = self.moment_ln(t, n)?;
        Ok(if s == 0.0 { 0.0 } else { s * l.exp() })
    }
}

impl MomentSource for HalfLineMeasure {
    fn moment_ln(&self, t: f64, n: u64) -> Result<(f64, f64)> {
        HalfLineMeasure::moment_ln(self, t, n)
    }
}

/// Closed-form moments of `c x^{p-1} e^{-β x}` for real `p > 0`:
/// `a_t(n) = c Γ(n+p) / (n! (t+β)^{n+p})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaMoments {
    pub c: f64,
    pub shape: f64,
    pub rate: f64,
}

impl GammaMoments {
    /// The Gamma(shape, rate) probability law.
    pub fn probability(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0) || !(rate > 0.0) {
            return Err(Error::InvalidInput(format!(
                "gamma({shape}, {rate}) needs positive parameters"
            )));
        }
        Ok(Self {
            c: (shape * rate.ln() - ln_gamma(shape)).exp(),
            shape,
            rate,
        })
    }
}

impl MomentSource for GammaMoments {
    fn moment_ln(&self, t: f64, n: u64) -> Result<(f64, f64)> {
        let s = t + self.rate;
        if !(s > 0.0) {
            return Err(Error::Divergence(format!(
                "gamma moments need t > {}",
                -self.rate
            )));
        }
        if self.c == 0.0 {
            return Ok((0.0, f64::NEG_INFINITY));
        }
        let np = n as f64 + self.shape;
        let l = self.c.abs().ln() + ln_gamma(np) - ln_factorial(n) - np * s.ln();
        Ok((self.c.signum(), l))
    }
}

/// `a_t(0..=n_max)` in log form.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable {
    pub t: f64,
    ln: Vec<(f64, f64)>,
}

impl MomentTable {
    pub fn new<S: MomentSource + ?Sized>(src: &S, t: f64, n_max: usize) -> Result<Self> {
        let ln = (0..=n_max as u64)
            .map(|n| src.moment_ln(t, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { t, ln })
    }

    pub fn len(&self) -> usize {
        self.ln.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln.is_empty()
    }

    pub fn ln_value(&self, n: usize) -> (f64, f64) {
        self.ln[n]
    }

    pub fn value(&self, n: usize) -> f64 {
        let (s, l) = self.ln[n];
        if s == 0.0 {
            0.0
        } else {
            s * l.exp()
        }
    }

    /// `(value, scale)` of `a(l)a(m) - a(k)a(n)`, with `scale = |a(l)a(m)|`.
    pub fn measurement(&self, q: Quadruple) -> Measured {
        let (sl, ll) = self.ln[q.l()];
        let (sm, lm) = self.ln[q.m()];
        let (sk, lk) = self.ln[q.k()];
        let (sn, ln_) = self.ln[q.n()];
        let (s1, a) = (sl * sm, ll + lm);
        let (s2, b) = (sk * sn, lk + ln_);
        let scale = if s1 == 0.0 { 0.0 } else { a.exp() };
        let value = if s1 == 0.0 && s2 == 0.0 {
            0.0
        } else if s1 == 0.0 {
            -s2 * b.exp()
        } else if s2 == 0.0 {
            s1 * a.exp()
        } else if s1 == s2 {
            // s (e^a - e^b) without cancelling the large parts
            if a >= b {
                -s1 * a.exp() * (b - a).exp_m1()
            } else {
                s1 * b.exp() * (a - b).exp_m1()
            }
        } else {
            s1 * (a.exp() + b.exp())
        };
        Measured { value, scale }
    }
}

/// A computed quantity with its natural magnitude for relative tolerances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub scale: f64,
}

impl Measured {
    /// `value >= -rel_tol * scale`.
    pub fn is_nonnegative(&self, rel_tol: f64) -> bool {
        self.value >= -rel_tol * self.scale
    }
}

fn require_positive_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "t = {t} must be positive and finite"
        )))
    }
}

/// `(a_t(n))_{n=0..=n_max}`; not certified.
pub fn taylor_coeffs<S: MomentSource + ?Sized>(
    src: &S,
    t: f64,
    n_max: usize,
) -> Result<LogConcaveSeq> {
    require_positive_t(t)?;
    let table = MomentTable::new(src, t, n_max)?;
    LogConcaveSeq::new((0..table.len()).map(|n| table.value(n)).collect())
}

/// Log-concavity of `(a_t(n))_{n<=n_max}` checked in log form, so deep tails
/// that underflow are still examined.
pub fn taylor_log_concavity<S: MomentSource + ?Sized>(
    src: &S,
    t: f64,
    n_max: usize,
    rel_tol: f64,
) -> Result<CertReport> {
    require_positive_t(t)?;
    let table = MomentTable::new(src, t, n_max)?;
    let mut ln = Vec::with_capacity(table.len());
    for n in 0..table.len() {
        let (s, l) = table.ln_value(n);
        if s < 0.0 {
            return Err(Error::Precondition(format!("a_t({n}) is negative")));
        }
        ln.push(if s == 0.0 { f64::NEG_INFINITY } else { l });
    }
    // ln(1 - rel_tol) ~ -rel_tol, applied per unit of |L|
    Ok(is_log_concave_ln(&ln, rel_tol))
}

/// `c_q(t) = a_t(l)a_t(m) - a_t(k)a_t(n)` with its scale `a_t(l)a_t(m)`.
pub fn measurement<S: MomentSource + ?Sized>(src: &S, q: Quadruple, t: f64) -> Result<Measured> {
    require_positive_t(t)?;
    let table = MomentTable::new(src, t, q.n())?;
    Ok(table.measurement(q))
}

/// `t ↦ c_q(t)` with a cache of evaluated points.
pub struct MeasurementFn<'a, S: MomentSource + ?Sized> {
    pub q: Quadruple,
    source: &'a S,
    cache: Vec<(f64, Measured)>,
}

impl<'a, S: MomentSource + ?Sized> MeasurementFn<'a, S> {
    pub fn new(source: &'a S, q: Quadruple) -> Self {
        Self {
            q,
            source,
            cache: Vec::new(),
        }
    }

    pub fn eval(&mut self, t: f64) -> Result<Measured> {
        if let Some((_, m)) = self.cache.iter().find(|(s, _)| *s == t) {
            return Ok(*m);
        }
        let m = measurement(self.source, self.q, t)?;
        self.cache.push((t, m));
        Ok(m)
    }

    /// Evaluates on a grid, returning `(t, c_q(t))`.
    pub fn curve(&mut self, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
        grid.iter().map(|&t| Ok((t, self.eval(t)?.value))).collect()
    }
}

/// Decomposition of `-c_q'` as a non-negative integer combination of
/// measurements (empty for degenerate quadruples).
pub fn derivative_decomposition(q: Quadruple) -> Vec<(u64, Quadruple)> {
    let (k, l, m, n) = (q.k() as i64, q.l() as i64, q.m() as i64, q.n() as i64);
    if q.is_degenerate() {
        return Vec::new();
    }
    let quad = |a, b, c, d| Quadruple::new(a, b, c, d).expect("decomposition preserves balance");
    let terms = if l < m {
        vec![
            ((k + 1) as u64, quad(k + 1, l + 1, m, n)),
            ((l - k) as u64, quad(k, l + 1, m, n + 1)),
            ((m + 1) as u64, quad(k, l, m + 1, n + 1)),
        ]
    } else {
        vec![
            ((k + 1) as u64, quad(k + 1, l, m + 1, n)),
            ((n + 1) as u64, quad(k, l, m + 1, n + 1)),
        ]
    };
    terms.into_iter().filter(|(c, _)| *c > 0).collect()
}

/// `(-1)^j c_q^{(j)}` as a multiset of measurements with integer weights.
pub fn expand_derivative(q: Quadruple, j: u32) -> BTreeMap<Quadruple, u128> {
    let mut current = BTreeMap::from([(q, 1u128)]);
    for _ in 0..j {
        let mut next = BTreeMap::new();
        for (quad, w) in current {
            for (c, sub) in derivative_decomposition(quad) {
                *next.entry(sub).or_insert(0) += w * c as u128;
            }
        }
        current = next;
    }
    current
}

/// `(-1)^j c_q^{(j)}(t)` via the exact decomposition recursion.
pub fn signed_derivative<S: MomentSource + ?Sized>(
    src: &S,
    q: Quadruple,
    t: f64,
    j: u32,
) -> Result<Measured> {
    require_positive_t(t)?;
    let table = MomentTable::new(src, t, q.n() + j as usize)?;
    Ok(signed_derivative_from_table(&table, q, j))
}

pub fn signed_derivative_from_table(table: &MomentTable, q: Quadruple, j: u32) -> Measured {
    let mut value = 0.0;
    let mut scale = 0.0;
    for (quad, w) in expand_derivative(q, j) {
        let m = table.measurement(quad);
        value += w as f64 * m.value;
        scale += w as f64 * m.scale;
    }
    Measured { value, scale }
}

/// `Σ_{n <= ⌊R t⌋} t^n a_t(n)`, accumulated in log form.
pub fn post_inversion_sum<S: MomentSource + ?Sized>(src: &S, t: f64, r: f64) -> Result<f64> {
    require_positive_t(t)?;
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("R = {r} must be positive")));
    }
    let n_max = (r * t).floor() as u64;
    let lt = t.ln();
    let mut acc = SignedLogSum::new();
    for n in 0..=n_max {
        let (s, l) = src.moment_ln(t, n)?;
        acc.push(s, n as f64 * lt + l);
    }
    Ok(acc.value())
}

/// `g_t` with `g_t(n/t) = t^{n+1} a_t(n)` and log-linear interpolation in between.
#[derive(Clone, Debug, PartialEq)]
pub struct GtDensity {
    pub t: f64,
    ln_g: Vec<f64>,
}

impl GtDensity {
    /// Tabulates the grid values needed on `[0, x_max]`.
    pub fn new<S: MomentSource + ?Sized>(src: &S, t: f64, x_max: f64) -> Result<Self> {
        require_positive_t(t)?;
        if !(x_max >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "x_max = {x_max} must be non-negative"
            )));
        }
        let n_max = (x_max * t).ceil() as u64 + 1;
        let lt = t.ln();
        let mut ln_g = Vec::with_capacity(n_max as usize + 1);
        for n in 0..=n_max {
            let (s, l) = src.moment_ln(t, n)?;
            if s < 0.0 {
                return Err(Error::Precondition(format!("a_t({n}) is negative")));
            }
            ln_g.push(if s == 0.0 {
                f64::NEG_INFINITY
            } else {
                (n + 1) as f64 * lt + l
            });
        }
        if ln_g[0] == f64::NEG_INFINITY && ln_g.iter().all(|l| *l == f64::NEG_INFINITY) {
            return Err(Error::VanishingCoefficient(
                "g_t of the zero measure".into(),
            ));
        }
        Ok(Self { t, ln_g })
    }

    /// Right end of the tabulated range.
    pub fn x_max(&self) -> f64 {
        (self.ln_g.len() - 1) as f64 / self.t
    }

    fn cell(&self, x: f64) -> (usize, f64) {
        let y = x * self.t;
        let n = (y.floor() as usize).min(self.ln_g.len() - 2);
        (n, y - n as f64)
    }

    pub fn ln_eval(&self, x: f64) -> f64 {
        assert!(
            x >= 0.0 && x <= self.x_max(),
            "x = {x} outside the tabulated range"
        );
        let (n, lam) = self.cell(x);
        let (a, b) = (self.ln_g[n], self.ln_g[n + 1]);
        if lam == 0.0 {
            return a;
        }
        if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        (1.0 - lam) * a + lam * b
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.ln_eval(x).exp()
    }

    /// Grid values `ln g_t(n/t)`.
    pub fn ln_grid(&self) -> &[f64] {
        &self.ln_g
    }

    /// `sup g_t` over the tabulated range (attained at a grid point).
    pub fn sup(&self) -> f64 {
        self.ln_g
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
            .exp()
    }

    /// `∫_0^R g_t` in closed form cell by cell.
    pub fn integral(&self, r: f64) -> f64 {
        assert!(
            r >= 0.0 && r <= self.x_max(),
            "R = {r} outside the tabulated range"
        );
        let y = r * self.t;
        let full = y.floor() as usize;
        let mut terms = Vec::with_capacity(full + 1);
        let cell = |n: usize, upto: f64| -> f64 {
            let (a, b) = (self.ln_g[n], self.ln_g[n + 1]);
            if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
                return 0.0;
            }
            let d = b - a;
            // ∫_0^upto e^{a + λ d} dλ / t
            let factor = if d == 0.0 {
                upto
            } else {
                (upto * d).exp_m1() / d
            };
            a.exp() * factor / self.t
        };
        for n in 0..full.min(self.ln_g.len() - 1) {
            terms.push(cell(n, 1.0));
        }
        let frac = y - full as f64;
        if frac > 0.0 && full < self.ln_g.len() - 1 {
            terms.push(cell(full, frac));
        }
        crate::par::pairwise_sum(&terms)
    }

    /// Samples `g_t` at `per_cell` points per grid cell and checks concavity
    /// of the logarithm.
    pub fn certify_log_concave(&self, per_cell: usize) -> CertReport {
        let cells = self.ln_g.len() - 1;
        let mut ln = Vec::with_capacity(cells * per_cell + 1);
        for i in 0..=cells * per_cell {
            let x = i as f64 / (per_cell as f64 * self.t);
            ln.push(self.ln_eval(x.min(self.x_max())));
        }
        is_log_concave_ln(&ln, 1e-9)
    }

    /// `(x, g_t(x))` samples on `[0, x_max]`.
    pub fn samples(&self, points: usize) -> Vec<(f64, f64)> {
        let hi = self.x_max();
        (0..points)
            .map(|i| {
                let x = hi * i as f64 / (points.max(2) - 1) as f64;
                (x, self.eval(x))
            })
            .collect()
    }
}

/// `∫_0^R g_t`.
pub fn gt_interval_mass<S: MomentSource + ?Sized>(src: &S, t: f64, r: f64) -> Result<f64> {
    Ok(GtDensity::new(src, t, r)?.integral(r))
}

/// `sup_n t^n a_t(n)`, scanning until the terms have fallen 70 e-folds below
/// the running maximum (or a hard cap of `64 t + 4096` terms).
pub fn sup_scaled_moment<S: MomentSource + ?Sized>(src: &S, t: f64) -> Result<f64> {
    require_positive_t(t)?;
    let lt = t.ln();
    let cap = (64.0 * t) as u64 + 4096;
    let mut best = f64::NEG_INFINITY;
    let mut seen_positive = false;
    for n in 0..=cap {
        let (s, l) = src.moment_ln(t, n)?;
        let v = if s > 0.0 {
            n as f64 * lt + l
        } else {
            f64::NEG_INFINITY
        };
        seen_positive |= s > 0.0;
        best = best.max(v);
        if seen_positive && v < best - 70.0 {
            break;
        }
    }
    Ok(best.exp())
}

/// Result of comparing the Post sum with `∫_0^R g_t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerMaclaurinReport {
    pub t: f64,
    pub r: f64,
    pub post_sum: f64,
    pub gt_mass: f64,
    /// `3 max_n t^n a_t(n)`.
    pub bound: f64,
    pub pass: bool,
}

pub fn euler_maclaurin_check<S: MomentSource + ?Sized>(
    src: &S,
    t: f64,
    r: f64,
) -> Result<EulerMaclaurinReport> {
    let post_sum = post_inversion_sum(src, t, r)?;
    let gt_mass = gt_interval_mass(src, t, r)?;
    let bound = 3.0 * sup_scaled_moment(src, t)?;
    Ok(EulerMaclaurinReport {
        t,
        r,
        post_sum,
        gt_mass,
        bound,
        pass: (gt_mass - post_sum).abs() <= bound,
    })
}

/// Convexity of `h(t) = ((n-1)! a_t(n-1))^{-1/n}` on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootConvexityReport {
    pub n: u32,
    pub grid: Vec<f64>,
    pub h: Vec<f64>,
    /// Smallest chord-minus-value defect `w h_{i+1} + (1-w) h_{i-1} - h_i`.
    pub min_defect: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn root_convexity_check<S: MomentSource + ?Sized>(
    src: &S,
    n: u32,
    grid: &[f64],
) -> Result<RootConvexityReport> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.len() < 3 {
        return Err(Error::InvalidInput(
            "grid must be strictly increasing with >= 3 points".into(),
        ));
    }
    let mut h = Vec::with_capacity(grid.len());
    for &t in grid {
        require_positive_t(t)?;
        let (s, l) = src.moment_ln(t, (n - 1) as u64)?;
        if s <= 0.0 {
            return Err(Error::VanishingCoefficient(format!(
                "a_t({}) = 0 at t = {t}",
                n - 1
            )));
        }
        h.push((-(ln_factorial((n - 1) as u64) + l) / n as f64).exp());
    }
    let hmax = h.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let tolerance = ROOT_CONVEXITY_TOL * hmax;
    let mut min_defect = f64::INFINITY;
    for i in 1..grid.len() - 1 {
        let w = (grid[i] - grid[i - 1]) / (grid[i + 1] - grid[i - 1]);
        let d = w * h[i + 1] + (1.0 - w) * h[i - 1] - h[i];
        min_defect = min_defect.min(d);
    }
    Ok(RootConvexityReport {
        n,
        grid: grid.to_vec(),
        h,
        min_defect,
        tolerance,
        pass: min_defect >= -tolerance,
    })
}

/// `points` geometrically spaced values from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && points >= 2);
    let ratio = (hi / lo).ln() / (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i + 1 == points {
                hi
            } else {
                lo * (ratio * i as f64).exp()
            }
        })
        .collect()
}

/// Two-column CSV with a header row.
pub fn xy_csv(header: [&str; 2], rows: &[(f64, f64)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidInput(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for (x, y) in rows {
        w.write_record([x.to_string(), y.to_string()]).map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidInput(format!("csv: {e}")))
}
