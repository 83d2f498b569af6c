//! The Berwald-Borell transform `ν = P_l μ * P_m μ - P_k μ * P_n μ` of a
//! log-concave measure and certificates for its structural properties.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::halfmeasure::{ExactMeasure, HalfLineMeasure, MeasureCert};
use crate::laplace::{measurement, signed_derivative_from_table, MomentSource, MomentTable};
use crate::par::{try_map_indexed, Exec};
use crate::seqcore::Quadruple;

/// Relative tolerance (to the piece supremum) for non-negativity of `ν`.
pub const NONNEG_TOL: f64 = 1e-10;
/// Relative tolerance of the Laplace identity.
pub const LAPLACE_TOL: f64 = 1e-9;
/// Relative tolerance on signed derivatives.
pub const CM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBTransform {
    pub source: HalfLineMeasure,
    pub q: Quadruple,
    pub nu: HalfLineMeasure,
    /// Log-concavity of `ν`: recorded, never required.
    pub nu_log_concave: MeasureCert,
}

/// The signed difference of convolutions, without any certification.
/// Computed in rational arithmetic and rounded once when the input allows
/// it, so exact cancellations leave no residue; otherwise in floating point.
pub fn bb_signed(mu: &HalfLineMeasure, q: Quadruple) -> Result<HalfLineMeasure> {
    if ExactMeasure::from_measure(mu).is_ok() {
        return bb_transform_exact(mu, q)?.to_measure(true);
    }
    bb_signed_float(mu, q)
}

/// [`bb_signed`] entirely in floating point.
pub fn bb_signed_float(mu: &HalfLineMeasure, q: Quadruple) -> Result<HalfLineMeasure> {
    let pl = mu.monomial_reweight(q.l() as u32);
    let pm = mu.monomial_reweight(q.m() as u32);
    let pk = mu.monomial_reweight(q.k() as u32);
    let pn = mu.monomial_reweight(q.n() as u32);
    pl.convolve(&pm)?.sub(&pk.convolve(&pn)?)
}

/// Builds `ν` for a certified log-concave `μ` and certifies `ν >= 0`.
pub fn bb_transform(mu: &HalfLineMeasure, q: Quadruple) -> Result<BBTransform> {
    let cert = mu.certify_log_concave();
    if !cert.pass {
        return Err(Error::Precondition(format!(
            "source measure is not log-concave: {}",
            cert.reason.unwrap_or_default()
        )));
    }
    let nu = bb_signed(mu, q)?;
    nu.certify_nonnegative(NONNEG_TOL)?;
    let nu_log_concave = nu.certify_log_concave();
    Ok(BBTransform {
        source: mu.clone(),
        q,
        nu,
        nu_log_concave,
    })
}

/// Rational-arithmetic transform; pieces must share one rate.
pub fn bb_transform_exact(mu: &HalfLineMeasure, q: Quadruple) -> Result<ExactMeasure> {
    let e = ExactMeasure::from_measure(mu)?;
    let pl = e.monomial_reweight(q.l() as u32);
    let pm = e.monomial_reweight(q.m() as u32);
    let pk = e.monomial_reweight(q.k() as u32);
    let pn = e.monomial_reweight(q.n() as u32);
    pl.convolve(&pm)?.sub(&pk.convolve(&pn)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplaceIdentityReport {
    /// `(t, ∫e^{-tx}dν, c_q(t))` per grid point.
    pub rows: Vec<(f64, f64, f64)>,
    /// Largest `|∫e^{-tx}dν - c_q(t)| / (a_t(l) a_t(m))`.
    pub max_rel_err: f64,
    pub pass: bool,
}

/// Compares the Laplace transform of `ν` with the measurement of `μ`.
pub fn verify_laplace_identity(bb: &BBTransform, t_grid: &[f64]) -> Result<LaplaceIdentityReport> {
    let mut rows = Vec::with_capacity(t_grid.len());
    let mut max_rel_err: f64 = 0.0;
    for &t in t_grid {
        let lhs = bb.nu.moment(t, 0)?;
        let c = measurement(&bb.source, bb.q, t)?;
        let diff = (lhs - c.value).abs();
        let rel = if diff == 0.0 { 0.0 } else { diff / c.scale };
        max_rel_err = max_rel_err.max(rel);
        rows.push((t, lhs, c.value));
    }
    Ok(LaplaceIdentityReport {
        rows,
        max_rel_err,
        pass: max_rel_err <= LAPLACE_TOL,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmReport {
    pub q: Quadruple,
    pub j_max: u32,
    /// Smallest `(-1)^j c_q^{(j)}(t) / scale` over the grid.
    pub min_rel: f64,
    /// `(t, j)` where the minimum occurs.
    pub worst: (f64, u32),
    pub pass: bool,
}

/// `(-1)^j c_q^{(j)}(t) >= -CM_TOL · scale` for all `t` in the grid and `j <= j_max`.
pub fn complete_monotonicity_certificate<S: MomentSource + ?Sized>(
    src: &S,
    q: Quadruple,
    t_grid: &[f64],
    j_max: u32,
) -> Result<CmReport> {
    let mut min_rel = f64::INFINITY;
    let mut worst = (f64::NAN, 0);
    for &t in t_grid {
        let table = MomentTable::new(src, t, q.n() + j_max as usize)?;
        for j in 0..=j_max {
            let d = signed_derivative_from_table(&table, q, j);
            let rel = if d.value == 0.0 {
                0.0
            } else {
                d.value / d.scale
            };
            if rel < min_rel {
                min_rel = rel;
                worst = (t, j);
            }
        }
    }
    Ok(CmReport {
        q,
        j_max,
        min_rel,
        worst,
        pass: min_rel >= -CM_TOL,
    })
}

/// One line of a batch certification run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub measure: String,
    pub q: Quadruple,
    pub laplace_rel_err: f64,
    pub cm_min_rel: f64,
    pub nu_total_variation: f64,
    pub nu_log_concave: bool,
    pub pass: bool,
}

/// Certifies every `(measure, quadruple)` pair; pairs run in parallel under
/// [`Exec::Parallel`], rows are returned in input order.
pub fn batch_certify(
    exec: Exec,
    measures: &[(String, HalfLineMeasure)],
    quads: &[Quadruple],
    t_grid: &[f64],
    j_max: u32,
) -> Result<Vec<BatchRow>> {
    let nq = quads.len();
    try_map_indexed(exec, measures.len() * nq, |i| {
        let (name, mu) = &measures[i / nq];
        let q = quads[i % nq];
        let bb = bb_transform(mu, q)?;
        let lap = verify_laplace_identity(&bb, t_grid)?;
        let cm = complete_monotonicity_certificate(mu, q, t_grid, j_max)?;
        Ok(BatchRow {
            measure: name.clone(),
            q,
            laplace_rel_err: lap.max_rel_err,
            cm_min_rel: cm.min_rel,
            nu_total_variation: bb.nu.total_variation()?,
            nu_log_concave: bb.nu_log_concave.pass,
            pass: lap.pass && cm.pass,
        })
    })
}

/// `(x, density)` samples of `ν` on its support hull.
pub fn density_samples(nu: &HalfLineMeasure, points: usize) -> Vec<(f64, f64)> {
    let Some((lo, hi)) = nu.support() else {
        return Vec::new();
    };
    let hi = if hi.is_finite() { hi } else { lo + 20.0 };
    (0..points)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (points.max(2) - 1) as f64;
            (x, nu.density(x))
        })
        .collect()
}
