//! Noise-free evaluation of the control functional for Markov policies by
//! solving the backward Kolmogorov system with an adaptive Dormand-Prince
//! 5(4) integrator.

use super::policy::IntensityPolicy;
use super::semigroup::Payoff;
use super::simulate::phi;
use crate::error::{Error, Result};
use crate::special::ln_gamma_p;

/// Largest allowed probability of the count reaching the truncation level.
pub const TRUNCATION_MASS: f64 = 1e-10;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `y' = rhs(s, y)` from `s0` to `s1 > s0` with error control
/// `|err_i| <= atol + rtol |y_i|`.
pub fn dopri45(
    mut rhs: impl FnMut(f64, &[f64], &mut [f64]),
    s0: f64,
    s1: f64,
    y0: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<Vec<f64>> {
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut s = s0;
    let mut h = (s1 - s0) / 100.0;
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut steps = 0usize;
    while s < s1 {
        if steps > 1_000_000 {
            return Err(Error::Divergence("ODE step budget exhausted".into()));
        }
        steps += 1;
        h = h.min(s1 - s);
        for stage in 0..7 {
            for i in 0..n {
                tmp[i] = y[i] + h * (0..stage).map(|j| A[stage][j] * k[j][i]).sum::<f64>();
            }
            rhs(s + C[stage] * h, &tmp, &mut k[stage]);
        }
        let mut err: f64 = 0.0;
        let mut y5 = vec![0.0; n];
        for i in 0..n {
            let mut hi = 0.0;
            let mut lo = 0.0;
            for j in 0..7 {
                hi += B5[j] * k[j][i];
                lo += B4[j] * k[j][i];
            }
            y5[i] = y[i] + h * hi;
            let scale = atol + rtol * y[i].abs().max(y5[i].abs());
            err = err.max((h * (hi - lo)).abs() / scale);
        }
        if err <= 1.0 {
            s += h;
            y = y5;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < 1e-14 * (s1 - s0) {
            return Err(Error::Divergence("ODE step size underflow".into()));
        }
    }
    Ok(y)
}

/// `v(0, 0)` for `v(T, x) = f(x)` and
/// `∂_t v(t, x) = -λ(t, x) [v(t, x+1) - v(t, x)] + φ(λ(t, x))` on `x <= x_max`,
/// with `v(t, x_max + 1) := v(t, x_max)`.
pub fn ode_policy_value<P: IntensityPolicy + ?Sized>(
    policy: &P,
    f: &Payoff,
    horizon: f64,
    x_max: u64,
) -> Result<f64> {
    if !policy.is_markov() {
        return Err(Error::InvalidInput(
            "the ODE evaluation needs a Markov policy".into(),
        ));
    }
    let mass = policy.bound() * horizon;
    let reach = if x_max == 0 {
        1.0
    } else {
        ln_gamma_p(x_max, mass).exp()
    };
    if reach > TRUNCATION_MASS {
        return Err(Error::Truncation(format!(
            "P(Poisson({mass}) >= {x_max}) = {reach:e} exceeds {TRUNCATION_MASS:e}"
        )));
    }
    let n = x_max as usize + 1;
    let y0: Vec<f64> = (0..n).map(|x| f.at(x as u64)).collect();
    // s = T - t runs forward.
    let rhs = |s: f64, v: &[f64], dv: &mut [f64]| {
        let t = horizon - s;
        for x in 0..n {
            let lam = policy.rate(t, x as u64, &[]);
            let next = if x + 1 < n { v[x + 1] } else { v[x] };
            dv[x] = lam * (next - v[x]) - phi(lam);
        }
    };
    let v = dopri45(rhs, 0.0, horizon, &y0, 1e-12, 1e-13)?;
    Ok(v[0])
}

/// Smallest `x_max` with reach probability below [`TRUNCATION_MASS`].
pub fn default_x_max(bound: f64, horizon: f64) -> u64 {
    let mass = bound * horizon;
    let mut x = (mass.ceil() as u64).max(1);
    while ln_gamma_p(x, mass).exp() > TRUNCATION_MASS {
        x += 1;
    }
    x
}
