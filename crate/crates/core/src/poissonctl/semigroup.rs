//! Bounded payoffs on the non-negative integers, the Poisson semigroup and
//! the value function `F(t, x) = log P_{T-t}(e^f)(x)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::ln_gamma_p;

/// `f(x) = values[x]` for `x < values.len()`, `beyond` otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct Payoff {
    pub values: Vec<f64>,
    pub beyond: f64,
}

impl Payoff {
    pub fn new(values: Vec<f64>, beyond: f64) -> Result<Self> {
        if values.iter().chain([&beyond]).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("payoff values must be finite".into()));
        }
        Ok(Self { values, beyond })
    }

    pub fn constant(c: f64) -> Self {
        Self {
            values: Vec::new(),
            beyond: c,
        }
    }

    /// `f(x) = scale · 1{x = 0}`.
    pub fn indicator_zero(scale: f64) -> Self {
        Self {
            values: vec![scale],
            beyond: 0.0,
        }
    }

    pub fn at(&self, x: u64) -> f64 {
        self.values.get(x as usize).copied().unwrap_or(self.beyond)
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(self.beyond, f64::max)
    }

    pub fn inf(&self) -> f64 {
        self.values.iter().copied().fold(self.beyond, f64::min)
    }

    /// `sup f - inf f`.
    pub fn oscillation(&self) -> f64 {
        self.sup() - self.inf()
    }

    pub fn map(&self, g: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|v| g(*v)).collect(),
            beyond: g(self.beyond),
        }
    }
}

impl TryFrom<BTreeMap<String, f64>> for Payoff {
    type Error = Error;

    fn try_from(map: BTreeMap<String, f64>) -> Result<Self> {
        let mut beyond = None;
        let mut entries = BTreeMap::new();
        for (k, v) in map {
            if k == "beyond" {
                beyond = Some(v);
            } else {
                let x: u64 = k.trim().parse().map_err(|_| {
                    Error::Parse(format!("payoff key {k:?} is not a non-negative integer"))
                })?;
                entries.insert(x, v);
            }
        }
        let beyond =
            beyond.ok_or_else(|| Error::Parse("payoff needs a \"beyond\" value".into()))?;
        let len = entries.keys().next_back().map_or(0, |k| k + 1);
        if entries.len() as u64 != len {
            return Err(Error::Parse(
                "payoff keys must be 0, 1, ..., K without gaps".into(),
            ));
        }
        Payoff::new(entries.into_values().collect(), beyond)
    }
}

impl From<Payoff> for BTreeMap<String, f64> {
    fn from(p: Payoff) -> Self {
        let mut m: BTreeMap<String, f64> = p
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| (i.to_string(), *v))
            .collect();
        m.insert("beyond".into(), p.beyond);
        m
    }
}

/// `π_t(0..len)` by the forward recurrence.
fn poisson_weights(t: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut p = (-t).exp();
    for n in 0..len {
        out.push(p);
        p *= t / (n + 1) as f64;
    }
    out
}

/// `P(N_t >= j)`.
fn poisson_tail(t: f64, j: u64) -> f64 {
    if j == 0 {
        1.0
    } else {
        ln_gamma_p(j, t).exp()
    }
}

/// `P_t g(x) = Σ_n g(x+n) π_t(n)`, exact: finitely many terms plus the
/// `beyond` constant times a Poisson tail.
pub fn semigroup_apply(g: &Payoff, t: f64, x: u64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidInput(format!(
            "semigroup time {t} must be finite and >= 0"
        )));
    }
    let len = g.values.len() as u64;
    if x >= len {
        return Ok(g.beyond);
    }
    let m = (len - x) as usize;
    let w = poisson_weights(t, m);
    let head: f64 = (0..m).map(|n| g.values[x as usize + n] * w[n]).sum();
    Ok(head + g.beyond * poisson_tail(t, m as u64))
}

/// `log ∫ e^f dπ_T`, shifted by `max f`.
pub fn log_poisson_integral(f: &Payoff, t: f64) -> Result<f64> {
    let m = f.sup();
    let shifted = f.map(|v| (v - m).exp());
    Ok(m + semigroup_apply(&shifted, t, 0)?.ln())
}

/// `F(t, x) = log P_{T-t}(e^f)(x)` on `[0, T] × ℕ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueFunction {
    payoff: Payoff,
    shift: f64,
    exp_payoff: Payoff,
    pub horizon: f64,
}

impl ValueFunction {
    pub fn new(payoff: Payoff, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidInput(format!(
                "horizon {horizon} must be positive"
            )));
        }
        let shift = payoff.sup();
        let exp_payoff = payoff.map(|v| (v - shift).exp());
        Ok(Self {
            payoff,
            shift,
            exp_payoff,
            horizon,
        })
    }

    pub fn payoff(&self) -> &Payoff {
        &self.payoff
    }

    pub fn value(&self, t: f64, x: u64) -> f64 {
        let s = (self.horizon - t).max(0.0);
        let len = self.exp_payoff.values.len() as u64;
        if x >= len {
            return self.payoff.beyond;
        }
        let m = (len - x) as usize;
        let w = poisson_weights(s, m);
        let head: f64 = (0..m)
            .map(|n| self.exp_payoff.values[x as usize + n] * w[n])
            .sum();
        self.shift + (head + self.exp_payoff.beyond * poisson_tail(s, m as u64)).ln()
    }

    /// `∂_x F(t, x) = F(t, x+1) - F(t, x)`.
    pub fn gradient(&self, t: f64, x: u64) -> f64 {
        self.value(t, x + 1) - self.value(t, x)
    }
}
