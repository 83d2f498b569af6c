//! Finite measures on `[0, ∞)`: finitely many atoms plus a piecewise density
//! of the form `p(x) e^{-r x}` with polynomial `p`.
//!
//! The exponential factor keeps exponential tilting closed and lets the
//! exponential and integer-shape Gamma laws be represented exactly on the
//! whole half-line. Moments are evaluated in closed form through regularized
//! incomplete gamma functions, so they stay accurate for large orders.

mod exact;
mod named;

pub use exact::ExactMeasure;
pub use named::{library, load_measure, parse_named, MeasureFile};

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::poly::{convolve_pieces, Poly};
use crate::special::{ln_gamma_window, SignedLogSum};

/// Relative threshold below which a difference of coefficients is treated as
/// exact cancellation.
const CANCEL_REL: f64 = 256.0 * f64::EPSILON;
/// Breakpoints closer than this (relative) are identified.
const SNAP_REL: f64 = 1e-12;
/// Grid size per piece for log-concavity certification.
pub const LOG_CONCAVE_GRID: usize = 512;
/// Absolute tolerance on one-sided log-derivative monotonicity.
pub const LOG_DERIV_TOL: f64 = 1e-9;
/// Chebyshev samples per piece for non-negativity certification.
pub const NONNEG_NODES: usize = 64;
/// Multiple of `(degree + 1) ε Σ|c_j||x|^j` allowed as evaluation error.
const EVAL_SLACK: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub x: f64,
    pub w: f64,
}

/// Density `Σ coeffs[j] x^j · e^{-rate x}` on `[a, b)`; `b` may be `+∞` when `rate > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub a: f64,
    pub b: f64,
    pub coeffs: Vec<f64>,
    pub rate: f64,
}

impl Piece {
    pub fn new(a: f64, b: f64, coeffs: Vec<f64>, rate: f64) -> Self {
        Self { a, b, coeffs, rate }
    }

    fn poly(&self) -> Poly<f64> {
        Poly::new(self.coeffs.clone())
    }

    pub fn is_bounded(&self) -> bool {
        self.b.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x < self.b
    }

    /// Density value (ignoring the interval).
    pub fn eval(&self, x: f64) -> f64 {
        let p = self.poly().eval(&x);
        if self.rate == 0.0 {
            p
        } else {
            p * (-self.rate * x).exp()
        }
    }

    /// `Σ |c_j| |x|^j e^{-rate x}`, the scale of rounding error in `eval`.
    fn abs_eval(&self, x: f64) -> f64 {
        let p = self
            .coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x.abs() + c.abs());
        if self.rate == 0.0 {
            p
        } else {
            p * (-self.rate * x).exp()
        }
    }

    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    /// Finite stand-in for the right end used by sampling routines.
    fn sample_end(&self) -> f64 {
        if self.b.is_finite() {
            return self.b;
        }
        let deg = self.coeffs.len().max(1) as f64;
        let root_bound = cauchy_root_bound(&self.coeffs);
        self.a.max(root_bound) + 40.0 * deg / self.rate.max(1e-12)
    }

    /// Pushes the signed log-terms of `∫_lo^hi x^n/n! e^{-t x} dμ_piece(x)`.
    fn push_moment_terms(
        &self,
        t: f64,
        n: u64,
        lo: f64,
        hi: f64,
        acc: &mut SignedLogSum,
    ) -> Result<()> {
        let lo = lo.max(self.a);
        let hi = hi.min(self.b);
        if hi <= lo {
            return Ok(());
        }
        let s = t + self.rate;
        for (j, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let p = n + j as u64;
            let lw = ln_gamma_window(p, s, lo, hi)?;
            acc.push_scaled(c, lw + ln_factorial(p) - ln_factorial(n));
        }
        Ok(())
    }
}

fn cauchy_root_bound(coeffs: &[f64]) -> f64 {
    match coeffs.iter().rposition(|c| *c != 0.0) {
        None | Some(0) => 0.0,
        Some(d) => {
            let lead = coeffs[d].abs();
            1.0 + coeffs[..d]
                .iter()
                .map(|c| c.abs() / lead)
                .fold(0.0, f64::max)
        }
    }
}

fn snap_eq(x: f64, y: f64) -> bool {
    if !x.is_finite() || !y.is_finite() {
        return x == y;
    }
    x == y || (x - y).abs() <= SNAP_REL * x.abs().max(y.abs()).max(1.0)
}

/// Finite measure on `[0, ∞)` with atoms and an extended piecewise-polynomial density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureFile", into = "MeasureFile")]
pub struct HalfLineMeasure {
    atoms: Vec<Atom>,
    pieces: Vec<Piece>,
    signed: bool,
}

/// Report of a log-concavity certification of a measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureCert {
    pub pass: bool,
    pub reason: Option<String>,
}

impl MeasureCert {
    fn ok() -> Self {
        Self {
            pass: true,
            reason: None,
        }
    }

    fn fail(reason: impl Into<String>) -> Self {
        Self {
            pass: false,
            reason: Some(reason.into()),
        }
    }
}

impl HalfLineMeasure {
    /// Validates and normalizes (sorted atoms, merged locations, sorted
    /// non-overlapping pieces). Unsigned measures must be non-negative.
    pub fn new(atoms: Vec<Atom>, pieces: Vec<Piece>, signed: bool) -> Result<Self> {
        for at in &atoms {
            if !(at.x >= 0.0) || !at.x.is_finite() || !at.w.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "bad atom ({}, {})",
                    at.x, at.w
                )));
            }
        }
        for p in &pieces {
            let bad_interval = !(p.a >= 0.0) || !p.a.is_finite() || !(p.b > p.a);
            let bad_coeffs = p.coeffs.iter().any(|c| !c.is_finite()) || !p.rate.is_finite();
            if bad_interval || bad_coeffs {
                return Err(Error::InvalidInput(format!(
                    "bad piece [{}, {}) rate {} coeffs {:?}",
                    p.a, p.b, p.rate, p.coeffs
                )));
            }
            if p.b.is_infinite() && p.rate <= 0.0 && !p.is_zero() {
                return Err(Error::Divergence(format!(
                    "piece on [{}, inf) with rate {} has infinite mass",
                    p.a, p.rate
                )));
            }
        }
        let measure = Self {
            atoms: merge_atoms(atoms, false),
            pieces: normalize_pieces(&[(&pieces, 1.0)], false)?,
            signed,
        };
        if !signed {
            measure.certify_nonnegative(1e-12)?;
        }
        Ok(measure)
    }

    pub fn empty() -> Self {
        Self {
            atoms: Vec::new(),
            pieces: Vec::new(),
            signed: false,
        }
    }

    /// `w δ_x`.
    pub fn dirac(x: f64, w: f64) -> Result<Self> {
        Self::new(vec![Atom { x, w }], Vec::new(), w < 0.0)
    }

    /// Lebesgue measure on `[a, b)` (density 1).
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Self::new(Vec::new(), vec![Piece::new(a, b, vec![1.0], 0.0)], false)
    }

    /// Density `α e^{-α x}` on `[0, ∞)`.
    pub fn exponential(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidInput(format!(
                "exponential rate {alpha} must be positive"
            )));
        }
        Self::new(
            Vec::new(),
            vec![Piece::new(0.0, f64::INFINITY, vec![alpha], alpha)],
            false,
        )
    }

    /// Density `β^p x^{p-1} e^{-β x} / Γ(p)` on `[0, ∞)` for integer shape `p >= 1`.
    pub fn gamma(shape: u32, beta: f64) -> Result<Self> {
        if shape == 0 || !(beta > 0.0) {
            return Err(Error::InvalidInput(format!(
                "gamma({shape}, {beta}) needs integer shape >= 1 and positive rate"
            )));
        }
        let p = shape as u64;
        let lead = (p as f64 * beta.ln() - ln_factorial(p - 1)).exp();
        let mut coeffs = vec![0.0; shape as usize];
        coeffs[shape as usize - 1] = lead;
        Self::new(
            Vec::new(),
            vec![Piece::new(0.0, f64::INFINITY, coeffs, beta)],
            false,
        )
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty() && self.pieces.is_empty()
    }

    /// Density at `x` (atoms excluded).
    pub fn density(&self, x: f64) -> f64 {
        self.pieces
            .iter()
            .filter(|p| p.contains(x))
            .map(|p| p.eval(x))
            .sum()
    }

    /// `∫ x^n/n! e^{-t x} dμ` as `(sign, ln|value|)`.
    pub fn moment_ln(&self, t: f64, n: u64) -> Result<(f64, f64)> {
        let mut acc = SignedLogSum::new();
        for at in &self.atoms {
            if at.w == 0.0 {
                continue;
            }
            if at.x == 0.0 {
                if n == 0 {
                    acc.push_scaled(at.w, 0.0);
                }
                continue;
            }
            let l = n as f64 * at.x.ln() - t * at.x - ln_factorial(n);
            acc.push_scaled(at.w, l);
        }
        for p in &self.pieces {
            p.push_moment_terms(t, n, p.a, p.b, &mut acc)?;
        }
        Ok(acc.value_ln())
    }

    /// `a_t(n) = ∫ x^n/n! e^{-t x} dμ(x)`.
    pub fn moment(&self, t: f64, n: u64) -> Result<f64> {
        let (s, l) = self.moment_ln(t, n)?;
        Ok(if s == 0.0 { 0.0 } else { s * l.exp() })
    }

    /// Total mass `μ([0, ∞))`.
    pub fn total_mass(&self) -> Result<f64> {
        self.moment(0.0, 0)
    }

    /// `μ([lo, hi))`, plus half the atom weight at `hi` when requested.
    pub fn interval_mass(&self, lo: f64, hi: f64, half_weight_at_hi: bool) -> Result<f64> {
        if !(lo >= 0.0) || !(hi > lo) {
            return Err(Error::InvalidInput(format!("bad interval [{lo}, {hi})")));
        }
        let mut total = 0.0;
        for at in &self.atoms {
            if at.x >= lo && at.x < hi {
                total += at.w;
            } else if half_weight_at_hi && at.x == hi {
                total += 0.5 * at.w;
            }
        }
        let mut acc = SignedLogSum::new();
        for p in &self.pieces {
            p.push_moment_terms(0.0, 0, lo, hi, &mut acc)?;
        }
        Ok(total + acc.value())
    }

    /// The operator `P_j`: reweight by `x^j / j!`.
    pub fn monomial_reweight(&self, j: u32) -> Self {
        if j == 0 {
            return self.clone();
        }
        let lf = ln_factorial(j as u64);
        let atoms = self
            .atoms
            .iter()
            .map(|at| Atom {
                x: at.x,
                w: if at.x == 0.0 {
                    0.0
                } else {
                    at.w * (j as f64 * at.x.ln() - lf).exp()
                },
            })
            .filter(|at| at.w != 0.0)
            .collect();
        let inv = (-lf).exp();
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let mut coeffs = vec![0.0; j as usize];
                coeffs.extend(p.coeffs.iter().map(|c| c * inv));
                Piece::new(p.a, p.b, coeffs, p.rate)
            })
            .collect();
        Self {
            atoms,
            pieces,
            signed: self.signed,
        }
    }

    /// The operator `E_t`: reweight by `e^{-t x}`.
    pub fn exponential_tilt(&self, t: f64) -> Result<Self> {
        if t == 0.0 {
            return Ok(self.clone());
        }
        let atoms = self
            .atoms
            .iter()
            .map(|at| Atom {
                x: at.x,
                w: at.w * (-t * at.x).exp(),
            })
            .collect();
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for p in &self.pieces {
            let rate = p.rate + t;
            if !p.is_bounded() && rate <= 0.0 {
                return Err(Error::Divergence(format!(
                    "tilt by {t} leaves infinite mass on [{}, inf)",
                    p.a
                )));
            }
            pieces.push(Piece::new(p.a, p.b, p.coeffs.clone(), rate));
        }
        Ok(Self {
            atoms,
            pieces,
            signed: self.signed,
        })
    }

    /// `c μ`.
    pub fn scale(&self, c: f64) -> Self {
        Self {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom { x: a.x, w: a.w * c })
                .collect(),
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece::new(p.a, p.b, p.coeffs.iter().map(|x| x * c).collect(), p.rate))
                .collect(),
            signed: self.signed || c < 0.0,
        }
    }

    /// `μ + ν`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, 1.0, false)
    }

    /// Signed difference `μ - ν`; coefficients that cancel to round-off are
    /// set to exactly zero.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -1.0, true)
    }

    fn combine(&self, other: &Self, sign: f64, cancel: bool) -> Result<Self> {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().map(|a| Atom {
            x: a.x,
            w: sign * a.w,
        }));
        Ok(Self {
            atoms: merge_atoms(atoms, cancel),
            pieces: normalize_pieces(&[(&self.pieces, 1.0), (&other.pieces, sign)], cancel)?,
            signed: self.signed || other.signed || sign < 0.0,
        })
    }

    /// Exact convolution `μ * ν`.
    ///
    /// Pieces that meet must share the same exponential rate; the factor
    /// `e^{-r x}` then passes through the sliding integral unchanged.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        let mut atoms = Vec::new();
        let mut pieces: Vec<Piece> = Vec::new();
        for a in &self.atoms {
            for b in &other.atoms {
                atoms.push(Atom {
                    x: a.x + b.x,
                    w: a.w * b.w,
                });
            }
        }
        for (atoms_side, pieces_side) in
            [(&self.atoms, &other.pieces), (&other.atoms, &self.pieces)]
        {
            for at in atoms_side.iter() {
                for p in pieces_side.iter() {
                    // w δ_x0 * q(y) e^{-r y} = w e^{r x0} q(s - x0) e^{-r s}
                    let shifted = p.poly().compose(&Poly::linear(-at.x, 1.0));
                    let factor = at.w * (p.rate * at.x).exp();
                    pieces.push(Piece::new(
                        p.a + at.x,
                        p.b + at.x,
                        shifted.scale(&factor).coeffs,
                        p.rate,
                    ));
                }
            }
        }
        for p in &self.pieces {
            for q in &other.pieces {
                if p.rate != q.rate {
                    return Err(Error::MixedRates(p.rate, q.rate));
                }
                let pb = p.b.is_finite().then_some(p.b);
                let qb = q.b.is_finite().then_some(q.b);
                for cp in convolve_pieces(&p.poly(), &p.a, &pb, &q.poly(), &q.a, &qb) {
                    pieces.push(Piece::new(
                        cp.lo,
                        cp.hi.unwrap_or(f64::INFINITY),
                        cp.poly.coeffs,
                        p.rate,
                    ));
                }
            }
        }
        Ok(Self {
            atoms: merge_atoms(atoms, false),
            pieces: normalize_pieces(&[(&pieces, 1.0)], false)?,
            signed: self.signed || other.signed,
        })
    }

    /// Total variation `Σ|w| + ∫|density|`.
    pub fn total_variation(&self) -> Result<f64> {
        let mut tv: f64 = self.atoms.iter().map(|a| a.w.abs()).sum();
        for p in &self.pieces {
            let poly = p.poly();
            let end = p.sample_end();
            let grid = 256;
            let mut cuts = vec![p.a];
            let mut prev_x = p.a;
            let mut prev_v = poly.eval(&p.a);
            for i in 1..=grid {
                let x = p.a + (end - p.a) * i as f64 / grid as f64;
                let v = poly.eval(&x);
                if v == 0.0 {
                    continue;
                }
                if prev_v * v < 0.0 {
                    cuts.push(bisect_root(&poly, prev_x, x));
                }
                prev_x = x;
                prev_v = v;
            }
            cuts.push(p.b);
            for w in cuts.windows(2) {
                let mut acc = SignedLogSum::new();
                p.push_moment_terms(0.0, 0, w[0], w[1], &mut acc)?;
                tv += acc.value().abs();
            }
        }
        Ok(tv)
    }

    /// Sign analysis of each piece at Chebyshev nodes plus endpoints. A
    /// sample passes above `-(rel_tol · sup + e(x))`, where `sup` is the
    /// piece's sampled supremum and `e(x)` bounds the rounding error of
    /// evaluating the monomial form at `x`.
    pub fn certify_nonnegative(&self, rel_tol: f64) -> Result<()> {
        let wmax = self.atoms.iter().map(|a| a.w.abs()).fold(0.0, f64::max);
        for at in &self.atoms {
            if at.w < -rel_tol * wmax {
                return Err(Error::NotNonNegative {
                    value: at.w,
                    at: at.x,
                });
            }
        }
        for p in &self.pieces {
            let end = p.sample_end();
            let mut xs = vec![p.a, end];
            xs.extend(chebyshev_nodes(p.a, end, NONNEG_NODES));
            let vals: Vec<(f64, f64)> = xs.iter().map(|&x| (x, p.eval(x))).collect();
            let sup = vals.iter().map(|v| v.1.abs()).fold(0.0, f64::max);
            let slack = EVAL_SLACK * (p.coeffs.len() + 1) as f64 * f64::EPSILON;
            if let Some(&(at, value)) = vals
                .iter()
                .find(|&&(x, v)| v < -(rel_tol * sup + slack * p.abs_eval(x)))
            {
                return Err(Error::NotNonNegative { value, at });
            }
        }
        Ok(())
    }

    /// Log-concavity: a single atom, or no atoms and a density on an interval
    /// whose logarithm is concave (grid check plus breakpoint conditions).
    pub fn certify_log_concave(&self) -> MeasureCert {
        if self.is_empty() {
            return MeasureCert::ok();
        }
        if let Err(e) = self.certify_nonnegative(1e-12) {
            return MeasureCert::fail(format!("measure is not non-negative: {e}"));
        }
        if !self.atoms.is_empty() {
            if !self.pieces.is_empty() {
                return MeasureCert::fail("mixed atoms and density");
            }
            if self.atoms.len() > 1 {
                return MeasureCert::fail("more than one atom");
            }
            return MeasureCert::ok();
        }
        for w in self.pieces.windows(2) {
            if !snap_eq(w[0].b, w[1].a) {
                return MeasureCert::fail(format!(
                    "support is not an interval: gap [{}, {})",
                    w[0].b, w[1].a
                ));
            }
        }
        let last = self.pieces.len() - 1;
        let mut prev_end: Option<(f64, f64)> = None; // (value, log-derivative) at the previous right end
        for (i, p) in self.pieces.iter().enumerate() {
            let poly = p.poly();
            let dpoly = poly.derivative();
            let end = p.sample_end();
            let grid = LOG_CONCAVE_GRID;
            let mut last_d: Option<f64> = None;
            let mut first: Option<(f64, f64)> = None;
            let mut tail: Option<(f64, f64)> = None;
            for g in 0..=grid {
                let x = if p.is_bounded() {
                    p.a + (p.b - p.a) * g as f64 / grid as f64
                } else {
                    let u = g as f64 / grid as f64 * 0.999;
                    p.a + (end - p.a) * u / (1.0 - u) / 999.0
                };
                let v = poly.eval(&x);
                let at_support_end = (i == 0 && g == 0) || (i == last && g == grid);
                if v <= 0.0 {
                    if at_support_end
                        && v > -1e-12 * (1.0 + poly.coeffs.iter().map(|c| c.abs()).sum::<f64>())
                    {
                        continue;
                    }
                    return MeasureCert::fail(format!(
                        "density vanishes inside the support at x = {x}"
                    ));
                }
                let d = dpoly.eval(&x) / v - p.rate;
                if let Some(prev) = last_d {
                    if d > prev + LOG_DERIV_TOL * prev.abs().max(1.0) {
                        return MeasureCert::fail(format!(
                            "log-density is not concave near x = {x}"
                        ));
                    }
                }
                last_d = Some(d);
                let f = v * (-p.rate * x).exp();
                if g == 0 {
                    first = Some((f, d));
                }
                tail = Some((f, d));
            }
            if let (Some((fl, dl)), Some((fr, dr))) = (prev_end, first) {
                let scale = fl.abs().max(fr.abs());
                if (fl - fr).abs() > 1e-9 * scale {
                    return MeasureCert::fail(format!("density jumps at x = {}", p.a));
                }
                if dr > dl + LOG_DERIV_TOL * dl.abs().max(1.0) {
                    return MeasureCert::fail(format!("log-derivative increases at x = {}", p.a));
                }
            }
            prev_end = tail;
        }
        MeasureCert::ok()
    }

    /// `(lo, hi)` of the closed support hull, `None` for the zero measure.
    pub fn support(&self) -> Option<(f64, f64)> {
        let lo = self
            .atoms
            .iter()
            .map(|a| a.x)
            .chain(self.pieces.iter().map(|p| p.a))
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .atoms
            .iter()
            .map(|a| a.x)
            .chain(self.pieces.iter().map(|p| p.b))
            .fold(f64::NEG_INFINITY, f64::max);
        lo.is_finite().then_some((lo, hi))
    }
}

fn bisect_root(p: &Poly<f64>, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = p.eval(&lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = p.eval(&mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Chebyshev points of the first kind on `[a, b]`.
pub fn chebyshev_nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let theta = std::f64::consts::PI * (2 * i + 1) as f64 / (2 * n) as f64;
            0.5 * (a + b) + 0.5 * (b - a) * theta.cos()
        })
        .collect()
}

fn merge_atoms(mut atoms: Vec<Atom>, cancel: bool) -> Vec<Atom> {
    atoms.sort_by(|a, b| a.x.total_cmp(&b.x));
    let mut out: Vec<(Atom, f64)> = Vec::new();
    for at in atoms {
        match out.last_mut() {
            Some((last, mag)) if last.x == at.x => {
                last.w += at.w;
                *mag = mag.max(at.w.abs());
            }
            _ => out.push((at, at.w.abs())),
        }
    }
    out.into_iter()
        .filter_map(|(mut at, mag)| {
            if cancel && at.w.abs() <= CANCEL_REL * mag {
                at.w = 0.0;
            }
            (at.w != 0.0).then_some(at)
        })
        .collect()
}

/// Sums signed groups of pieces into sorted, non-overlapping pieces.
fn normalize_pieces(groups: &[(&[Piece], f64)], cancel: bool) -> Result<Vec<Piece>> {
    let mut cuts: Vec<f64> = groups
        .iter()
        .flat_map(|(ps, _)| ps.iter().flat_map(|p| [p.a, p.b]))
        .collect();
    cuts.sort_by(f64::total_cmp);
    let mut uniq: Vec<f64> = Vec::new();
    for c in cuts {
        if uniq.last().is_none_or(|&u| !snap_eq(u, c)) {
            uniq.push(c);
        }
    }
    let mut out = Vec::new();
    for w in uniq.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid = if hi.is_finite() {
            0.5 * (lo + hi)
        } else {
            lo + 1.0
        };
        let mut rate: Option<f64> = None;
        let mut sum: Vec<f64> = Vec::new();
        let mut mag: Vec<f64> = Vec::new();
        for (ps, sign) in groups {
            for p in ps
                .iter()
                .filter(|p| p.a <= mid && mid < p.b && !p.is_zero())
            {
                match rate {
                    None => rate = Some(p.rate),
                    Some(r) if r != p.rate => return Err(Error::MixedRates(r, p.rate)),
                    _ => {}
                }
                if sum.len() < p.coeffs.len() {
                    sum.resize(p.coeffs.len(), 0.0);
                    mag.resize(p.coeffs.len(), 0.0);
                }
                for (j, c) in p.coeffs.iter().enumerate() {
                    sum[j] += sign * c;
                    mag[j] = mag[j].max(c.abs());
                }
            }
        }
        if cancel {
            for (s, m) in sum.iter_mut().zip(&mag) {
                if s.abs() <= CANCEL_REL * m {
                    *s = 0.0;
                }
            }
        }
        while sum.last() == Some(&0.0) {
            sum.pop();
        }
        if let Some(r) = rate {
            if !sum.is_empty() {
                out.push(Piece::new(lo, hi, sum, r));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn moment_examples() {
        let d = HalfLineMeasure::dirac(2.0, 1.0).unwrap();
        assert_relative_eq!(
            d.moment(1.0, 3).unwrap(),
            4.0 / 3.0 * (-2.0f64).exp(),
            max_relative = 1e-14
        );
        let e = HalfLineMeasure::exponential(1.0).unwrap();
        assert_relative_eq!(e.moment(1.0, 2).unwrap(), 0.125, max_relative = 1e-14);
        let u = HalfLineMeasure::uniform(1.0, 2.0).unwrap();
        assert_relative_eq!(
            u.moment(1.0, 0).unwrap(),
            (-1.0f64).exp() - (-2.0f64).exp(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn moment_at_zero_and_divergence() {
        let u = HalfLineMeasure::uniform(1.0, 2.0).unwrap();
        assert_relative_eq!(u.moment(0.0, 1).unwrap(), 1.5, max_relative = 1e-14);
        let e = HalfLineMeasure::exponential(1.0).unwrap();
        assert!(matches!(e.moment(-1.0, 0), Err(Error::Divergence(_))));
        assert_relative_eq!(e.moment(-0.5, 0).unwrap(), 2.0, max_relative = 1e-13);
    }

    #[test]
    fn reweight_examples() {
        let u = HalfLineMeasure::uniform(1.0, 2.0).unwrap();
        assert_eq!(u.monomial_reweight(0), u);
        let p1 = u.monomial_reweight(1);
        assert_eq!(p1.pieces()[0].coeffs, vec![0.0, 1.0]);
        let d = HalfLineMeasure::dirac(3.0, 1.0)
            .unwrap()
            .monomial_reweight(2);
        assert_relative_eq!(d.atoms()[0].w, 4.5, max_relative = 1e-15);
    }

    #[test]
    fn tilt_examples() {
        let u = HalfLineMeasure::uniform(1.0, 2.0).unwrap();
        assert_eq!(u.exponential_tilt(0.0).unwrap(), u);
        let d = HalfLineMeasure::dirac(1.0, 1.0)
            .unwrap()
            .exponential_tilt(2.0)
            .unwrap();
        assert_relative_eq!(d.atoms()[0].w, (-2.0f64).exp(), max_relative = 1e-15);
        let two = u
            .exponential_tilt(1.0)
            .unwrap()
            .exponential_tilt(1.0)
            .unwrap();
        let once = u.exponential_tilt(2.0).unwrap();
        assert_relative_eq!(
            two.total_mass().unwrap(),
            once.total_mass().unwrap(),
            max_relative = 1e-12
        );
        let e = HalfLineMeasure::exponential(1.0).unwrap();
        assert!(matches!(
            e.exponential_tilt(-1.0),
            Err(Error::Divergence(_))
        ));
    }

    #[test]
    fn convolution_examples() {
        let a = HalfLineMeasure::dirac(0.5, 1.0).unwrap();
        let b = HalfLineMeasure::dirac(1.25, 2.0).unwrap();
        let ab = a.convolve(&b).unwrap();
        assert_eq!(ab.atoms(), &[Atom { x: 1.75, w: 2.0 }]);

        let u = HalfLineMeasure::uniform(0.0, 1.0).unwrap();
        let tri = u.convolve(&u).unwrap();
        assert_relative_eq!(tri.density(0.3), 0.3, max_relative = 1e-14);
        assert_relative_eq!(tri.density(1.5), 0.5, max_relative = 1e-14);
        assert_eq!(tri.density(2.5), 0.0);

        let x = HalfLineMeasure::uniform(1.0, 2.0)
            .unwrap()
            .monomial_reweight(1);
        let xx = x.convolve(&x).unwrap();
        assert_relative_eq!(xx.density(3.0), 13.0 / 6.0, max_relative = 1e-13);
    }

    #[test]
    fn atom_piece_convolution_translates() {
        let d = HalfLineMeasure::dirac(1.0, 2.0).unwrap();
        let e = HalfLineMeasure::exponential(1.0).unwrap();
        let c = d.convolve(&e).unwrap();
        assert_eq!(c.density(0.5), 0.0);
        assert_relative_eq!(c.density(3.0), 2.0 * (-2.0f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn interval_mass_examples() {
        let d = HalfLineMeasure::dirac(2.0, 1.0).unwrap();
        assert_eq!(d.interval_mass(0.0, 2.0, true).unwrap(), 0.5);
        assert_eq!(d.interval_mass(0.0, 2.0, false).unwrap(), 0.0);
        let u = HalfLineMeasure::uniform(1.0, 2.0).unwrap();
        assert_relative_eq!(
            u.interval_mass(0.0, 1.5, false).unwrap(),
            0.5,
            max_relative = 1e-14
        );
        assert_eq!(
            HalfLineMeasure::empty()
                .interval_mass(0.0, 3.0, true)
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn log_concave_certification_examples() {
        assert!(
            HalfLineMeasure::dirac(5.0, 1.0)
                .unwrap()
                .certify_log_concave()
                .pass
        );
        assert!(
            HalfLineMeasure::uniform(1.0, 2.0)
                .unwrap()
                .certify_log_concave()
                .pass
        );
        let lin = HalfLineMeasure::new(
            vec![],
            vec![Piece::new(0.0, 1.0, vec![0.0, 1.0], 0.0)],
            false,
        )
        .unwrap();
        assert!(lin.certify_log_concave().pass);
        let mixed = HalfLineMeasure::new(
            vec![Atom { x: 0.0, w: 1.0 }],
            vec![Piece::new(0.0, 1.0, vec![0.0, 0.0, 1.0], 0.0)],
            false,
        )
        .unwrap();
        let r = mixed.certify_log_concave();
        assert!(!r.pass);
        assert!(r.reason.unwrap().contains("mixed"));
        let gap = HalfLineMeasure::uniform(0.0, 1.0)
            .unwrap()
            .add(&HalfLineMeasure::uniform(2.0, 3.0).unwrap())
            .unwrap();
        assert!(!gap.certify_log_concave().pass);
        let step = HalfLineMeasure::uniform(0.0, 1.0)
            .unwrap()
            .add(&HalfLineMeasure::uniform(0.5, 1.0).unwrap())
            .unwrap();
        assert!(!step.certify_log_concave().pass);
        // bimodal x^2 - 2x + 1.1 on [0, 2)
        let bimodal = HalfLineMeasure::new(
            vec![],
            vec![Piece::new(0.0, 2.0, vec![1.1, -2.0, 1.0], 0.0)],
            false,
        )
        .unwrap();
        assert!(!bimodal.certify_log_concave().pass);
        assert!(
            HalfLineMeasure::exponential(2.0)
                .unwrap()
                .certify_log_concave()
                .pass
        );
        assert!(
            HalfLineMeasure::gamma(3, 1.0)
                .unwrap()
                .certify_log_concave()
                .pass
        );
        assert!(HalfLineMeasure::empty().certify_log_concave().pass);
    }

    #[test]
    fn negative_density_rejected_when_unsigned() {
        let r = HalfLineMeasure::new(
            vec![],
            vec![Piece::new(0.0, 2.0, vec![1.0, -1.0], 0.0)],
            false,
        );
        assert!(matches!(r, Err(Error::NotNonNegative { .. })));
        assert!(HalfLineMeasure::new(
            vec![],
            vec![Piece::new(0.0, 2.0, vec![1.0, -1.0], 0.0)],
            true
        )
        .is_ok());
    }

    #[test]
    fn total_variation_of_signed_line() {
        // 1 - x on [0, 2): |.| integrates to 1
        let m = HalfLineMeasure::new(
            vec![Atom { x: 1.0, w: -0.25 }],
            vec![Piece::new(0.0, 2.0, vec![1.0, -1.0], 0.0)],
            true,
        )
        .unwrap();
        assert_relative_eq!(m.total_variation().unwrap(), 1.25, max_relative = 1e-12);
    }

    #[test]
    fn gamma_is_normalized() {
        for (p, b) in [(1, 1.0), (2, 1.0), (3, 2.0), (5, 0.5)] {
            let g = HalfLineMeasure::gamma(p, b).unwrap();
            assert_relative_eq!(g.total_mass().unwrap(), 1.0, max_relative = 1e-13);
        }
    }
}
