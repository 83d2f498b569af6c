//! Dense univariate polynomials over a field, plus the exact sliding-integral
//! kernel used to convolve piecewise-polynomial densities.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Field operations needed by the polynomial kernels.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
{
    fn from_i64(v: i64) -> Self;
}

impl Scalar for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }
}

impl Scalar for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
}

/// Coefficients `c[0] + c[1] x + ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<T> {
    pub coeffs: Vec<T>,
}

impl<T: Scalar> Poly<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: T) -> Self {
        Self { coeffs: vec![c] }
    }

    /// `alpha + beta x`.
    pub fn linear(alpha: T, beta: T) -> Self {
        Self {
            coeffs: vec![alpha, beta],
        }
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !c.is_zero())
    }

    pub fn is_zero(&self) -> bool {
        self.degree().is_none()
    }

    pub fn eval(&self, x: &T) -> T {
        let mut acc = T::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x.clone() + c.clone();
        }
        acc
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len)
            .map(|i| {
                let a = self.coeffs.get(i).cloned().unwrap_or_else(T::zero);
                let b = other.coeffs.get(i).cloned().unwrap_or_else(T::zero);
                a + b
            })
            .collect();
        Self { coeffs }
    }

    pub fn scale(&self, s: &T) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c.clone() * s.clone()).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Self::zero();
        }
        let mut out = vec![T::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self { coeffs: out }
    }

    /// Multiplies by `x^j`.
    pub fn shift_up(&self, j: usize) -> Self {
        let mut coeffs = vec![T::zero(); j];
        coeffs.extend(self.coeffs.iter().cloned());
        Self { coeffs }
    }

    pub fn derivative(&self) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c.clone() * T::from_i64(i as i64))
                .collect(),
        }
    }

    /// `p(inner(x))`.
    pub fn compose(&self, inner: &Self) -> Self {
        let mut acc = Self::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(inner).add(&Self::constant(c.clone()));
        }
        acc
    }
}

/// Bivariate polynomial `Σ K[v][w] x^v s^w`.
#[derive(Clone, Debug)]
struct Bivariate<T> {
    k: Vec<Vec<T>>,
}

impl<T: Scalar> Bivariate<T> {
    /// `p(x) q(s - x)` expanded in monomials.
    fn product_with_reflection(p: &Poly<T>, q: &Poly<T>) -> Self {
        let dp = p.coeffs.len();
        let dq = q.coeffs.len();
        let mut k = vec![vec![T::zero(); dq.max(1)]; (dp + dq).max(1)];
        // q(s - x) = Σ_i q_i Σ_u C(i,u) s^{i-u} (-x)^u
        for (i, qi) in q.coeffs.iter().enumerate() {
            if qi.is_zero() {
                continue;
            }
            let mut binom = T::one();
            for u in 0..=i {
                if u > 0 {
                    binom = binom * T::from_i64((i - u + 1) as i64) / T::from_i64(u as i64);
                }
                let sign = if u % 2 == 0 { T::one() } else { -T::one() };
                let qterm = qi.clone() * binom.clone() * sign;
                for (v, pv) in p.coeffs.iter().enumerate() {
                    if pv.is_zero() {
                        continue;
                    }
                    let cell = &mut k[v + u][i - u];
                    *cell = cell.clone() + pv.clone() * qterm.clone();
                }
            }
        }
        Self { k }
    }

    /// Antiderivative in `x` (constant 0).
    fn integrate_x(&self) -> Self {
        let mut k = vec![vec![T::zero(); self.k[0].len()]; self.k.len() + 1];
        for (v, row) in self.k.iter().enumerate() {
            let d = T::from_i64(v as i64 + 1);
            for (w, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    k[v + 1][w] = c.clone() / d.clone();
                }
            }
        }
        Self { k }
    }

    /// Substitutes `x = alpha + beta s`, giving a polynomial in `s`.
    fn substitute(&self, alpha: &T, beta: &T) -> Poly<T> {
        let lin = Poly::linear(alpha.clone(), beta.clone());
        let mut power = Poly::constant(T::one());
        let mut out = Poly::zero();
        for row in &self.k {
            let srow = Poly::new(row.clone());
            out = out.add(&power.mul(&srow));
            power = power.mul(&lin);
        }
        out
    }
}

/// Endpoint of a piece; `None` is `+∞`.
pub type Endpoint<T> = Option<T>;

/// One output piece of a sliding integral: density `poly(s)` on `[lo, hi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvPiece<T> {
    pub lo: T,
    pub hi: Endpoint<T>,
    pub poly: Poly<T>,
}

fn ep_add<T: Scalar>(a: &Endpoint<T>, b: &T) -> Endpoint<T> {
    a.as_ref().map(|x| x.clone() + b.clone())
}

/// `h(s) = ∫ p(x) q(s - x) dx` over `x ∈ [a, b)`, `s - x ∈ [c, d)`, exactly.
///
/// Breakpoints of `h` are the pairwise endpoint sums; each output piece has
/// degree at most `deg p + deg q + 1`.
pub fn convolve_pieces<T: Scalar>(
    p: &Poly<T>,
    a: &T,
    b: &Endpoint<T>,
    q: &Poly<T>,
    c: &T,
    d: &Endpoint<T>,
) -> Vec<ConvPiece<T>> {
    if p.is_zero() || q.is_zero() {
        return Vec::new();
    }
    let anti = Bivariate::product_with_reflection(p, q).integrate_x();

    // Lower limit: x = a while s <= a + d, then x = s - d.
    // Upper limit: x = s - c while s <= b + c, then x = b.
    let start = a.clone() + c.clone();
    let lower_switch = ep_add(d, a);
    let upper_switch = ep_add(b, c);
    let end = match (b, d) {
        (Some(b), Some(d)) => Some(b.clone() + d.clone()),
        _ => None,
    };
    let mut cuts: Vec<T> = Vec::new();
    for e in [&lower_switch, &upper_switch].into_iter().flatten() {
        if *e > start && end.as_ref().is_none_or(|z| e < z) && !cuts.contains(e) {
            cuts.push(e.clone());
        }
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));

    let mut bounds: Vec<Endpoint<T>> = vec![Some(start)];
    bounds.extend(cuts.into_iter().map(Some));
    bounds.push(end);

    let mut out = Vec::new();
    for w in bounds.windows(2) {
        let lo = w[0].clone().expect("finite lower bound");
        let hi = w[1].clone();
        // Any interior point decides which limits are active.
        let probe = match &hi {
            Some(h) => (lo.clone() + h.clone()) / T::from_i64(2),
            None => lo.clone() + T::one(),
        };
        let lower_is_const = lower_switch.as_ref().is_none_or(|sw| probe <= *sw);
        let upper_is_moving = upper_switch.as_ref().is_none_or(|sw| probe <= *sw);
        let (la, lb) = if lower_is_const {
            (a.clone(), T::zero())
        } else {
            (-d.clone().expect("finite d"), T::one())
        };
        let (ua, ub) = if upper_is_moving {
            (-c.clone(), T::one())
        } else {
            (b.clone().expect("finite b"), T::zero())
        };
        let poly = anti
            .substitute(&ua, &ub)
            .add(&anti.substitute(&la, &lb).neg());
        out.push(ConvPiece { lo, hi, poly });
    }
    out
}
