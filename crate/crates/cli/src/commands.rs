use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use lclab::berwald::{
    self, bb_transform_exact, complete_monotonicity_certificate, density_samples,
    verify_laplace_identity, CM_TOL, LAPLACE_TOL,
};
use lclab::discretepl::{
    self, check_conclusion_counting, check_conclusion_poisson, check_hypothesis,
    stirling_limit_experiment, QuadrupleOfFunctions, WindowFn, CONCLUSION_REL,
};
use lclab::halfmeasure::load_measure;
use lclab::laplace::{
    euler_maclaurin_check, geometric_grid, post_inversion_sum, root_convexity_check,
    taylor_log_concavity, xy_csv, GtDensity, MeasurementFn, MomentTable, ROOT_CONVEXITY_TOL,
};
use lclab::poissonctl::{
    default_x_max, log_poisson_integral, mc_functional, ode_policy_value, optimal_policy,
    ConstantPolicy, IntensityPolicy, Payoff, SinusoidalPolicy,
};
use lclab::seqcore::{is_log_concave, Quadruple};
use lclab::{HalfLineMeasure, LogConcaveSeq};

use crate::{
    BbArgs, CheckArgs, CliError, CmArgs, CouplingArgs, Ctx, DiscretePlArgs, Figure1Args, Outcome,
    PlMode, PoissonArgs, PostArgs, RootArgs, TaylorArgs,
};

type Res = Result<Outcome, CliError>;

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn measure(arg: &str) -> Result<HalfLineMeasure, CliError> {
    Ok(load_measure(arg)?)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))
}

fn f64_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| input(format!("bad number {v:?}")))
        })
        .collect()
}

fn quad(s: &str) -> Result<Quadruple, CliError> {
    let v = s
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<i64>()
                .map_err(|_| input(format!("bad quadruple entry {v:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    match v[..] {
        [k, l, m, n] => Ok(Quadruple::new(k, l, m, n)?),
        _ => Err(input(format!("quadruple needs four entries, got {s:?}"))),
    }
}

fn quad_label(q: Quadruple) -> String {
    format!("({},{},{},{})", q.k(), q.l(), q.m(), q.n())
}

/// `lo:hi:points` for a geometric grid, otherwise a comma-separated list.
fn t_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let grid = if let [lo, hi, n] = parts[..] {
        let lo: f64 = lo
            .trim()
            .parse()
            .map_err(|_| input(format!("bad grid {s:?}")))?;
        let hi: f64 = hi
            .trim()
            .parse()
            .map_err(|_| input(format!("bad grid {s:?}")))?;
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| input(format!("bad grid {s:?}")))?;
        if !(lo > 0.0 && hi > lo && n >= 2) {
            return Err(input(format!(
                "grid {s:?} needs 0 < lo < hi and at least 2 points"
            )));
        }
        geometric_grid(lo, hi, n)
    } else {
        f64_list(s)?
    };
    if grid.iter().any(|t| !(*t > 0.0)) {
        return Err(input("grid values must be positive"));
    }
    Ok(grid)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SinusoidalFile {
    amp: Vec<f64>,
    omega: Vec<f64>,
    phase: Vec<f64>,
}

enum PolicySpec {
    Optimal,
    Fixed(Box<dyn IntensityPolicy>),
}

fn policy(spec: &str, allow_optimal: bool) -> Result<PolicySpec, CliError> {
    if spec == "optimal" {
        return if allow_optimal {
            Ok(PolicySpec::Optimal)
        } else {
            Err(input("the optimal policy is not available here"))
        };
    }
    if let Some(c) = spec.strip_prefix("constant:") {
        let c: f64 = c
            .trim()
            .parse()
            .map_err(|_| input(format!("bad constant rate {c:?}")))?;
        if !(c >= 0.0) || !c.is_finite() {
            return Err(input(format!(
                "constant rate {c} must be finite and non-negative"
            )));
        }
        return Ok(PolicySpec::Fixed(Box::new(ConstantPolicy(c))));
    }
    let f: SinusoidalFile = read_json(Path::new(spec))?;
    let n = f.amp.len();
    if n == 0 || f.omega.len() != n || f.phase.len() != n {
        return Err(input(
            "sinusoidal policy needs equal, non-empty amp, omega and phase lists",
        ));
    }
    if f.amp
        .iter()
        .chain(&f.omega)
        .chain(&f.phase)
        .any(|v| !v.is_finite())
        || f.amp.iter().any(|a| *a < 0.0)
    {
        return Err(input(
            "sinusoidal policy needs finite values and non-negative amplitudes",
        ));
    }
    Ok(PolicySpec::Fixed(Box::new(SinusoidalPolicy {
        amp: f.amp,
        omega: f.omega,
        phase: f.phase,
    })))
}

fn fixed_policy(spec: &str) -> Result<Box<dyn IntensityPolicy>, CliError> {
    match policy(spec, false)? {
        PolicySpec::Fixed(p) => Ok(p),
        PolicySpec::Optimal => unreachable!("rejected above"),
    }
}

pub fn check_logconcave(ctx: &Ctx, a: &CheckArgs) -> Res {
    let tol = ctx.tol(1e-12);
    if let Some(s) = &a.sequence {
        let seq = LogConcaveSeq::new(f64_list(s)?)?;
        let cert = is_log_concave(&seq, tol);
        let first_failure =
            (!cert.pass).then(|| format!("sequence fails at index {:?}", cert.violation_index));
        return Ok(Outcome {
            tolerances: json!({ "log_concavity_rel": tol }),
            result: json!({ "kind": "sequence", "certificate": cert }),
            first_failure,
        });
    }
    let spec = a.measure.as_deref().unwrap_or_default();
    let mu = measure(spec)?;
    let cert = mu.certify_log_concave();
    let taylor = taylor_log_concavity(&mu, a.t, a.n_max, tol)?;
    let first_failure = if !cert.pass {
        Some(format!(
            "measure is not log-concave: {}",
            cert.reason.clone().unwrap_or_default()
        ))
    } else if !taylor.pass {
        Some(format!(
            "a_t(n) fails log-concavity at n = {:?}",
            taylor.violation_index
        ))
    } else {
        None
    };
    Ok(Outcome {
        tolerances: json!({ "log_concavity_rel": tol }),
        result: json!({
            "kind": "measure",
            "measure": spec,
            "t": a.t,
            "n_max": a.n_max,
            "measure_certificate": cert,
            "taylor_certificate": taylor,
        }),
        first_failure,
    })
}

pub fn taylor(ctx: &Ctx, a: &TaylorArgs) -> Res {
    let tol = ctx.tol(1e-12);
    let mu = measure(&a.measure)?;
    let table = MomentTable::new(&mu, a.t, a.n_max)?;
    let rows: Vec<(usize, f64, f64)> = (0..table.len())
        .map(|n| (n, table.ln_value(n).1, table.value(n)))
        .collect();
    if let Some(path) = &a.out {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| CliError::Run(format!("csv: {e}"));
        w.write_record(["n", "ln_a", "a"]).map_err(err)?;
        for (n, l, v) in &rows {
            w.write_record([n.to_string(), l.to_string(), v.to_string()])
                .map_err(err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| CliError::Run(format!("csv: {e}")))?;
        write_file(path, &String::from_utf8_lossy(&bytes))?;
    }
    let cert = taylor_log_concavity(&mu, a.t, a.n_max, tol)?;
    Ok(Outcome {
        tolerances: json!({ "log_concavity_rel": tol }),
        result: json!({
            "measure": a.measure,
            "t": a.t,
            "coefficients": rows.iter().map(|r| r.2).collect::<Vec<_>>(),
            "ln_coefficients": rows.iter().map(|r| r.1).collect::<Vec<_>>(),
            "log_concavity": cert,
        }),
        first_failure: None,
    })
}

pub fn bb_transform(ctx: &Ctx, a: &BbArgs) -> Res {
    let tol = ctx.tol(LAPLACE_TOL);
    let mu = measure(&a.measure)?;
    let q = quad(&a.quad)?;
    let grid = t_grid(&a.t_grid)?;
    let bb = berwald::bb_transform(&mu, q)?;
    let lap = verify_laplace_identity(&bb, &grid)?;
    if let Some(path) = &a.out {
        let text =
            serde_json::to_string_pretty(&bb.nu).map_err(|e| CliError::Run(e.to_string()))?;
        write_file(path, &(text + "\n"))?;
    }
    if let Some(path) = &a.plot {
        write_file(
            path,
            &xy_csv(["x", "density"], &density_samples(&bb.nu, a.points.max(2)))?,
        )?;
    }
    let first_failure = (lap.max_rel_err > tol).then(|| {
        format!(
            "Laplace identity error {:e} exceeds {tol:e}",
            lap.max_rel_err
        )
    });
    Ok(Outcome {
        tolerances: json!({ "laplace_rel": tol }),
        result: json!({
            "measure": a.measure,
            "quadruple": q,
            "total_variation": bb.nu.total_variation()?,
            "support": bb.nu.support(),
            "nu_log_concave": bb.nu_log_concave,
            "laplace_max_rel_err": lap.max_rel_err,
            "nu": bb.nu,
        }),
        first_failure,
    })
}

pub fn cm_certify(ctx: &Ctx, a: &CmArgs) -> Res {
    let tol = ctx.tol(CM_TOL);
    let mu = measure(&a.measure)?;
    let grid = t_grid(&a.t_grid)?;
    let quads = match &a.quad {
        Some(s) => vec![quad(s)?],
        None => Quadruple::enumerate(a.n_max),
    };
    let mut reports = Vec::with_capacity(quads.len());
    let mut first_failure = None;
    for &q in &quads {
        let r = complete_monotonicity_certificate(&mu, q, &grid, a.j_max)?;
        if r.min_rel < -tol && first_failure.is_none() {
            first_failure = Some(format!(
                "q = {}: (-1)^j c^(j)(t)/scale = {:e} at t = {}, j = {}",
                quad_label(q),
                r.min_rel,
                r.worst.0,
                r.worst.1
            ));
        }
        reports.push(json!({ "quadruple": q, "min_rel": r.min_rel, "worst_t": r.worst.0, "worst_j": r.worst.1 }));
    }
    if let (Some(path), [q]) = (&a.curve, &quads[..]) {
        let rows = MeasurementFn::new(&mu, *q).curve(&grid)?;
        write_file(path, &xy_csv(["t", "c"], &rows)?)?;
    }
    Ok(Outcome {
        tolerances: json!({ "cm_rel": tol }),
        result: json!({ "measure": a.measure, "j_max": a.j_max, "grid": grid, "quadruples": reports }),
        first_failure,
    })
}

pub fn post_invert(ctx: &Ctx, a: &PostArgs) -> Res {
    let tol = ctx.tol(0.05);
    let mu = measure(&a.measure)?;
    let ts = f64_list(&a.t)?;
    if ts.is_empty() || ts.iter().any(|t| !(*t > 0.0)) {
        return Err(input("t values must be positive"));
    }
    if !(a.r > 0.0) {
        return Err(input(format!("R = {} must be positive", a.r)));
    }
    let mass = mu.interval_mass(0.0, a.r, true)?;
    let mut rows = Vec::with_capacity(ts.len());
    let mut first_failure = None;
    for &t in &ts {
        let em = euler_maclaurin_check(&mu, t, a.r)?;
        if !em.pass && first_failure.is_none() {
            first_failure = Some(format!(
                "t = {t}: |Post sum - g_t mass| = {:e} exceeds bound {:e}",
                (em.post_sum - em.gt_mass).abs(),
                em.bound
            ));
        }
        rows.push(em);
    }
    let t_max = ts.iter().copied().fold(0.0, f64::max);
    let last = post_inversion_sum(&mu, t_max, a.r)?;
    if (last - mass).abs() > tol && first_failure.is_none() {
        first_failure = Some(format!(
            "t = {t_max}: |Post sum - mass| = {:e} exceeds {tol:e}",
            (last - mass).abs()
        ));
    }
    let gt = GtDensity::new(&mu, t_max, a.x_max)?;
    if let Some(path) = &a.plot {
        write_file(path, &xy_csv(["x", "g_t"], &gt.samples(401))?)?;
    }
    Ok(Outcome {
        tolerances: json!({ "mass_abs": tol }),
        result: json!({
            "measure": a.measure,
            "R": a.r,
            "mass": mass,
            "post_sum_at_max_t": last,
            "euler_maclaurin": rows,
            "g_t_log_concave": gt.certify_log_concave(8),
        }),
        first_failure,
    })
}

pub fn root_convexity(ctx: &Ctx, a: &RootArgs) -> Res {
    let rel = ctx.tol(ROOT_CONVEXITY_TOL);
    let mu = measure(&a.measure)?;
    let grid = t_grid(&a.t_grid)?;
    let r = root_convexity_check(&mu, a.n, &grid)?;
    let hmax = r.h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let abs_tol = rel * hmax;
    let first_failure = (r.min_defect < -abs_tol)
        .then(|| format!("convexity defect {:e} below -{abs_tol:e}", r.min_defect));
    Ok(Outcome {
        tolerances: json!({ "convexity_rel": rel, "convexity_abs": abs_tol }),
        result: json!({ "measure": a.measure, "n": a.n, "grid": r.grid, "h": r.h, "min_defect": r.min_defect }),
        first_failure,
    })
}

pub fn poisson_variational(ctx: &Ctx, a: &PoissonArgs) -> Res {
    let sigmas = ctx.tol(3.0);
    let ode_tol = 1e-6;
    if !(a.horizon > 0.0) || a.trajectories < 2 {
        return Err(input("need a positive horizon and at least 2 trajectories"));
    }
    let f: Payoff = read_json(&a.payoff)?;
    let spec = policy(&a.policy, true)?;
    let opt;
    let (p, optimal): (&dyn IntensityPolicy, bool) = match &spec {
        PolicySpec::Optimal => {
            opt = optimal_policy(&f, a.horizon)?;
            (&opt, true)
        }
        PolicySpec::Fixed(p) => (p.as_ref(), false),
    };
    let lhs = log_poisson_integral(&f, a.horizon)?;
    let mc = mc_functional(ctx.exec, p, &f, a.horizon, a.trajectories, a.seed)?;
    let ode = ode_policy_value(p, &f, a.horizon, default_x_max(p.bound(), a.horizon))?;
    let band = sigmas * mc.se;
    let first_failure = if mc.estimate > lhs + band {
        Some(format!(
            "estimate {} exceeds lhs {lhs} by more than {sigmas} SE",
            mc.estimate
        ))
    } else if optimal && (mc.estimate - lhs).abs() > band {
        Some(format!(
            "optimal estimate {} differs from lhs {lhs} by more than {sigmas} SE",
            mc.estimate
        ))
    } else if optimal && (ode - lhs).abs() > ode_tol {
        Some(format!(
            "ODE value {ode} differs from lhs {lhs} by more than {ode_tol:e}"
        ))
    } else {
        None
    };
    let verdict = if first_failure.is_none() {
        "pass"
    } else {
        "fail"
    };
    Ok(Outcome {
        tolerances: json!({ "se_multiple": sigmas, "ode_abs": ode_tol }),
        result: json!({
            "policy": a.policy,
            "horizon": a.horizon,
            "trajectories": a.trajectories,
            "seed": a.seed,
            "lhs": lhs,
            "estimate": mc.estimate,
            "se": mc.se,
            "ode_value": ode,
            "verdict": verdict,
        }),
        first_failure,
    })
}

pub fn coupling_check(ctx: &Ctx, a: &CouplingArgs) -> Res {
    let tol = ctx.tol(1e-12);
    if !(a.horizon > 0.0) {
        return Err(input("horizon must be positive"));
    }
    let alpha = fixed_policy(&a.alpha)?;
    let beta = fixed_policy(&a.beta)?;
    let r = discretepl::coupling_batch(ctx.exec, &alpha, &beta, a.horizon, a.noises, a.seed)?;
    let first_failure = if let Some((i, t)) = r.first_mismatch {
        Some(format!("floor/ceil identity fails on noise {i} at t = {t}"))
    } else if r.max_swap_defect > tol {
        Some(format!(
            "swap defect {:e} exceeds {tol:e}",
            r.max_swap_defect
        ))
    } else {
        None
    };
    Ok(Outcome {
        tolerances: json!({ "swap_defect_abs": tol }),
        result: json!({ "alpha": a.alpha, "beta": a.beta, "horizon": a.horizon, "seed": a.seed, "report": r }),
        first_failure,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadFile {
    f: WindowFn,
    g: WindowFn,
    h: Option<WindowFn>,
    k: Option<WindowFn>,
}

pub fn discrete_pl(ctx: &Ctx, a: &DiscretePlArgs) -> Res {
    let stirling_tol = ctx.tol(0.05);
    let file: QuadFile = read_json(&a.quad)?;
    let q = match (file.h, file.k) {
        (Some(h), Some(k)) => QuadrupleOfFunctions {
            f: file.f,
            g: file.g,
            h,
            k,
        },
        (None, None) => QuadrupleOfFunctions::tight(file.f, file.g),
        _ => return Err(input("give both h and k or neither")),
    };
    let mut first_failure = None;
    let mut result = serde_json::Map::new();
    let hyp = check_hypothesis(&q);
    result.insert("hypothesis".into(), json!(hyp));
    match a.mode {
        PlMode::Counting => {
            if let Some(v) = hyp.violation {
                first_failure = Some(format!(
                    "hypothesis fails at x = {}, y = {}: {} > {}",
                    v.x, v.y, v.lhs, v.rhs
                ));
            } else {
                let c = check_conclusion_counting(&q)?;
                if !c.pass {
                    first_failure = Some(format!("conclusion fails: {} > {}", c.lhs, c.rhs));
                }
                result.insert("conclusion".into(), json!(c));
            }
        }
        PlMode::Poisson => {
            let t = a
                .horizon
                .ok_or_else(|| input("--T is required in poisson mode"))?;
            if !(t > 0.0) {
                return Err(input("--T must be positive"));
            }
            let r = check_conclusion_poisson(&q, t)?;
            if !r.hypothesis {
                first_failure = Some("hypothesis fails on the non-negative integers".into());
            } else if !r.conclusion.pass {
                first_failure = Some(format!(
                    "Poisson conclusion fails: {} > {}",
                    r.conclusion.lhs, r.conclusion.rhs
                ));
            }
            result.insert("poisson".into(), json!(r));
        }
    }
    if let Some(list) = &a.limit {
        let ns = list
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<u64>()
                    .map_err(|_| input(format!("bad n {v:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let rows = stirling_limit_experiment(&q, &ns)?;
        if first_failure.is_none() {
            if let Some(last) = rows.last() {
                let worst = last.rel_err.iter().copied().fold(0.0, f64::max);
                if worst > stirling_tol {
                    first_failure = Some(format!(
                        "n = {}: Stirling relative error {worst} exceeds {stirling_tol}",
                        last.n
                    ));
                } else if let Some(r) = rows.iter().find(|r| !r.shifted.pass) {
                    first_failure = Some(format!("n = {}: shifted Poisson conclusion fails", r.n));
                }
            }
        }
        result.insert("limit".into(), json!(rows));
    }
    Ok(Outcome {
        tolerances: json!({ "conclusion_rel": CONCLUSION_REL, "stirling_rel": stirling_tol }),
        result: result.into(),
        first_failure,
    })
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn figure1(ctx: &Ctx, a: &Figure1Args) -> Res {
    let tol = ctx.tol(1e-8);
    let mu = HalfLineMeasure::uniform(1.0, 2.0)?;
    let q = Quadruple::new(0, 1, 1, 2)?;
    let bb = berwald::bb_transform(&mu, q)?;
    let exact = bb_transform_exact(&mu, q)?;
    let mut rows = Vec::with_capacity(101);
    let mut max_err: f64 = 0.0;
    let mut exact_mismatch = None;
    for i in 0..=100i64 {
        let s = 2.0 + i as f64 / 50.0;
        let d = bb.nu.density(s);
        let want = if s <= 3.0 {
            (s - 1.0) * (s - 2.0) / 2.0
        } else {
            (s - 2.0) * (4.0 - s)
        };
        max_err = max_err.max((d - want).abs());
        rows.push((s, d));
        let sr = rat(2, 1) + rat(i, 50);
        let want_r = if sr <= rat(3, 1) {
            (&sr - rat(1, 1)) * (&sr - rat(2, 1)) / rat(2, 1)
        } else {
            (&sr - rat(2, 1)) * (rat(4, 1) - &sr)
        };
        if exact.density(&sr) != want_r && exact_mismatch.is_none() {
            exact_mismatch = Some(sr.to_string());
        }
    }
    let at3 = bb.nu.density(3.0);
    let rational_exact = exact_mismatch.is_none();
    if let Some(path) = &a.out {
        write_file(path, &xy_csv(["s", "density"], &rows)?)?;
    }
    let first_failure = if max_err > tol {
        Some(format!(
            "max |density - closed form| = {max_err:e} exceeds {tol:e}"
        ))
    } else if (at3 - 1.0).abs() > tol {
        Some(format!("density(3) = {at3}, expected 1"))
    } else {
        exact_mismatch.map(|s| format!("rational density differs from the closed form at s = {s}"))
    };
    Ok(Outcome {
        tolerances: json!({ "density_abs": tol, "rational": "exact" }),
        result: json!({
            "quadruple": q,
            "points": rows.len(),
            "max_abs_err": max_err,
            "density_at_3": at3,
            "rational_exact": rational_exact,
        }),
        first_failure,
    })
}
