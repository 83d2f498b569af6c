//! Rational-arithmetic mirror of the polynomial part of the measure calculus.
//! Every float is a rational, so float inputs convert without loss; a common
//! exponential factor `e^{-rate x}` is carried symbolically since it factors
//! out of equal-rate convolutions.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use super::{Atom, HalfLineMeasure, Piece};
use crate::error::{Error, Result};
use crate::poly::{convolve_pieces, Poly};

#[derive(Clone, Debug, PartialEq)]
struct ExactPiece {
    a: BigRational,
    /// `None` is `+∞`.
    b: Option<BigRational>,
    poly: Poly<BigRational>,
}

impl ExactPiece {
    fn contains(&self, x: &BigRational) -> bool {
        self.a <= *x && self.b.as_ref().is_none_or(|b| x < b)
    }
}

/// Atoms and pieces `p(x) e^{-rate x}` with rational data and one common rate.
/// Atoms only coexist with rate-free pieces.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactMeasure {
    atoms: Vec<(BigRational, BigRational)>,
    pieces: Vec<ExactPiece>,
    rate: f64,
}

fn to_rat(x: f64) -> Result<BigRational> {
    BigRational::from_f64(x)
        .ok_or_else(|| Error::InvalidInput(format!("{x} has no rational value")))
}

fn factorial(j: u32) -> BigRational {
    let mut f = BigInt::one();
    for i in 2..=j {
        f *= i;
    }
    BigRational::from_integer(f)
}

impl ExactMeasure {
    /// Converts the float data exactly. Pieces must share one rate, and
    /// atoms are only allowed next to rate-free pieces.
    pub fn from_measure(m: &HalfLineMeasure) -> Result<Self> {
        let rate = m.pieces().first().map_or(0.0, |p| p.rate);
        if let Some(p) = m.pieces().iter().find(|p| p.rate != rate) {
            return Err(Error::MixedRates(rate, p.rate));
        }
        if rate != 0.0 && !m.atoms().is_empty() {
            return Err(Error::InvalidInput(
                "exact arithmetic cannot mix atoms with exponential pieces".into(),
            ));
        }
        let atoms = m
            .atoms()
            .iter()
            .map(|a| Ok((to_rat(a.x)?, to_rat(a.w)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut pieces = Vec::new();
        for p in m.pieces() {
            pieces.push(ExactPiece {
                a: to_rat(p.a)?,
                b: if p.b.is_finite() {
                    Some(to_rat(p.b)?)
                } else {
                    None
                },
                poly: Poly::new(p.coeffs.iter().map(|c| to_rat(*c)).collect::<Result<_>>()?),
            });
        }
        Ok(Self::normalized(atoms, pieces, rate))
    }

    fn normalized(
        mut atoms: Vec<(BigRational, BigRational)>,
        pieces: Vec<ExactPiece>,
        rate: f64,
    ) -> Self {
        atoms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(BigRational, BigRational)> = Vec::new();
        for (x, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 = &last.1 + w,
                _ => merged.push((x, w)),
            }
        }
        merged.retain(|a| !a.1.is_zero());

        let mut cuts: Vec<BigRational> = pieces
            .iter()
            .flat_map(|p| std::iter::once(p.a.clone()).chain(p.b.clone()))
            .collect();
        cuts.sort();
        cuts.dedup();
        let mut bounds: Vec<Option<BigRational>> = cuts.into_iter().map(Some).collect();
        if pieces.iter().any(|p| p.b.is_none()) {
            bounds.push(None);
        }
        let two = BigRational::from_integer(BigInt::from(2));
        let mut out: Vec<ExactPiece> = Vec::new();
        for w in bounds.windows(2) {
            let lo = w[0].clone().expect("only the last bound is infinite");
            let mid = match &w[1] {
                Some(hi) => (&lo + hi) / &two,
                None => &lo + BigRational::one(),
            };
            let mut sum = Poly::zero();
            for p in pieces.iter().filter(|p| p.contains(&mid)) {
                sum = sum.add(&p.poly);
            }
            if let Some(d) = sum.degree() {
                sum.coeffs.truncate(d + 1);
                out.push(ExactPiece {
                    a: lo,
                    b: w[1].clone(),
                    poly: sum,
                });
            }
        }
        let rate = if out.is_empty() { 0.0 } else { rate };
        Self {
            atoms: merged,
            pieces: out,
            rate,
        }
    }

    /// Common exponential rate of the pieces (0 without pieces).
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// `P_j`: reweight by `x^j / j!`.
    pub fn monomial_reweight(&self, j: u32) -> Self {
        let inv = BigRational::one() / factorial(j);
        let atoms = self
            .atoms
            .iter()
            .map(|(x, w)| (x.clone(), w * num_traits::pow(x.clone(), j as usize) * &inv))
            .collect();
        let pieces = self
            .pieces
            .iter()
            .map(|p| ExactPiece {
                a: p.a.clone(),
                b: p.b.clone(),
                poly: p.poly.shift_up(j as usize).scale(&inv),
            })
            .collect();
        Self::normalized(atoms, pieces, self.rate)
    }

    /// Rate of a combination of `self` and `other`, which must agree when
    /// both carry pieces.
    fn joint_rate(&self, other: &Self) -> Result<f64> {
        match (self.pieces.is_empty(), other.pieces.is_empty()) {
            (false, false) if self.rate != other.rate => {
                Err(Error::MixedRates(self.rate, other.rate))
            }
            (false, _) => Ok(self.rate),
            _ => Ok(other.rate),
        }
    }

    pub fn convolve(&self, other: &Self) -> Result<Self> {
        let rate = self.joint_rate(other)?;
        let mut atoms = Vec::new();
        let mut pieces = Vec::new();
        for (x, w) in &self.atoms {
            for (y, v) in &other.atoms {
                atoms.push((x + y, w * v));
            }
        }
        for (atoms_side, pieces_side) in
            [(&self.atoms, &other.pieces), (&other.atoms, &self.pieces)]
        {
            if rate != 0.0 && !atoms_side.is_empty() && !pieces_side.is_empty() {
                return Err(Error::InvalidInput(
                    "exact arithmetic cannot shift exponential pieces by atoms".into(),
                ));
            }
            for (x, w) in atoms_side.iter() {
                for p in pieces_side.iter() {
                    let shifted = p
                        .poly
                        .compose(&Poly::linear(-x.clone(), BigRational::one()));
                    pieces.push(ExactPiece {
                        a: &p.a + x,
                        b: p.b.as_ref().map(|b| b + x),
                        poly: shifted.scale(w),
                    });
                }
            }
        }
        for p in &self.pieces {
            for q in &other.pieces {
                for cp in convolve_pieces(&p.poly, &p.a, &p.b, &q.poly, &q.a, &q.b) {
                    pieces.push(ExactPiece {
                        a: cp.lo,
                        b: cp.hi,
                        poly: cp.poly,
                    });
                }
            }
        }
        Ok(Self::normalized(atoms, pieces, rate))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let rate = self.joint_rate(other)?;
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().map(|(x, w)| (x.clone(), -w.clone())));
        let mut pieces = self.pieces.clone();
        pieces.extend(other.pieces.iter().map(|p| ExactPiece {
            a: p.a.clone(),
            b: p.b.clone(),
            poly: p.poly.neg(),
        }));
        Ok(Self::normalized(atoms, pieces, rate))
    }

    /// Polynomial factor of the density at `x` (atoms and `e^{-rate x}`
    /// excluded).
    pub fn density(&self, x: &BigRational) -> BigRational {
        self.pieces
            .iter()
            .filter(|p| p.contains(x))
            .fold(BigRational::zero(), |acc, p| acc + p.poly.eval(x))
    }

    /// Weight of the atom at `x`, zero if none.
    pub fn atom_weight(&self, x: &BigRational) -> BigRational {
        self.atoms
            .iter()
            .find(|a| a.0 == *x)
            .map(|a| a.1.clone())
            .unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.pieces.is_empty()
    }

    /// True if no atom has negative weight and no bounded piece is negative
    /// at its endpoints or stationary points, for degrees up to two. `None`
    /// when some piece is out of reach of this test.
    pub fn is_nonnegative_low_degree(&self) -> Option<bool> {
        if self.atoms.iter().any(|a| a.1.is_negative()) {
            return Some(false);
        }
        for p in &self.pieces {
            let d = p.poly.degree().unwrap_or(0);
            let b = p.b.clone()?;
            if d > 2 {
                return None;
            }
            let mut pts = vec![p.a.clone(), b.clone()];
            if d == 2 {
                let c = &p.poly.coeffs;
                let v = -c[1].clone() / (BigRational::from_integer(BigInt::from(2)) * c[2].clone());
                if p.a < v && v < b {
                    pts.push(v);
                }
            }
            if pts.iter().any(|x| p.poly.eval(x).is_negative()) {
                return Some(false);
            }
        }
        Some(true)
    }

    /// Back to floating point (nearest representable values).
    pub fn to_measure(&self, signed: bool) -> Result<HalfLineMeasure> {
        let f = |r: &BigRational| {
            r.to_f64()
                .ok_or_else(|| Error::InvalidInput("rational out of range".into()))
        };
        let atoms = self
            .atoms
            .iter()
            .map(|(x, w)| Ok(Atom { x: f(x)?, w: f(w)? }))
            .collect::<Result<Vec<_>>>()?;
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                Ok(Piece::new(
                    f(&p.a)?,
                    p.b.as_ref().map_or(Ok(f64::INFINITY), f)?,
                    p.poly.coeffs.iter().map(f).collect::<Result<_>>()?,
                    self.rate,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        HalfLineMeasure::new(atoms, pieces, signed)
    }
}
