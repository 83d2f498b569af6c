//! One pass/fail line per acceptance criterion; exits non-zero on any failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use lclab::berwald::{bb_transform, bb_transform_exact};
use lclab::discretepl::{
    coupling_batch, pl_harness, random_centred_tight_instance, stirling_limit_experiment,
    QuadrupleOfFunctions, WindowFn,
};
use lclab::gen;
use lclab::halfmeasure::library;
use lclab::laplace::{
    derivative_decomposition, euler_maclaurin_check, measurement, post_inversion_sum,
    signed_derivative, taylor_log_concavity, GammaMoments, GtDensity, MomentTable,
};
use lclab::poissonctl::{
    default_x_max, fixed_point_solve, log_poisson_integral, ode_policy_value, optimal_policy,
    supermartingale_check, trajectory_rng, ConstantPolicy, HistoryPolicy, IntensityPolicy,
    MarkovPolicy, Payoff,
};
use lclab::seqcore::{
    binomial_tail_transform, is_log_concave, walkup_convolve, LogConcaveSeq, Quadruple,
};
use lclab::{Exec, HalfLineMeasure};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn uniform_closed_form() -> Outcome {
    let u = HalfLineMeasure::uniform(1.0, 2.0)?;
    let q = Quadruple::new(0, 1, 1, 2)?;
    let bb = bb_transform(&u, q)?;
    let mut max_err: f64 = 0.0;
    for i in 0..=100 {
        let s = 2.0 + 2.0 * i as f64 / 100.0;
        let want = if s <= 3.0 {
            (s - 1.0) * (s - 2.0) / 2.0
        } else {
            (s - 2.0) * (4.0 - s)
        };
        max_err = max_err.max((bb.nu.density(s) - want).abs());
    }
    let exact = bb_transform_exact(&u, q)?;
    let mut exact_ok = true;
    for i in 0..=100 {
        let s = rat(2, 1) + rat(i, 50);
        let want = if s <= rat(3, 1) {
            (&s - rat(1, 1)) * (&s - rat(2, 1)) / rat(2, 1)
        } else {
            (&s - rat(2, 1)) * (rat(4, 1) - &s)
        };
        exact_ok &= exact.density(&s) == want;
    }
    Ok((
        max_err <= 1e-8 && exact_ok,
        format!("max |density - formula| = {max_err:.2e}, rational path exact = {exact_ok}"),
    ))
}

fn exponential_null() -> Outcome {
    let mut worst_rel: f64 = 0.0;
    let mut worst_tv: f64 = 0.0;
    for alpha in [0.5, 1.0, 2.0] {
        let e = HalfLineMeasure::exponential(alpha)?;
        for q in Quadruple::enumerate(6) {
            for t in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
                let m = measurement(&e, q, t)?;
                worst_rel = worst_rel.max(m.value.abs() / m.scale);
            }
            worst_tv = worst_tv.max(bb_transform(&e, q)?.nu.total_variation()?);
        }
    }
    Ok((
        worst_rel <= 1e-14 && worst_tv <= 1e-12,
        format!(
            "max |c|/(a_l a_m) = {worst_rel:.2e}, max TV(nu) = {:.2e}",
            worst_tv + 0.0
        ),
    ))
}

fn gamma_case() -> Outcome {
    let src = GammaMoments::probability(2.0, 1.0)?;
    // a_t(n) = (n+1) / (t+1)^(n+2) for the density x e^{-x}
    let mut worst: f64 = 0.0;
    for q in Quadruple::enumerate(6)
        .into_iter()
        .filter(|q| !q.is_degenerate())
    {
        let (k, l, m, n) = (q.k() as f64, q.l() as f64, q.m() as f64, q.n() as f64);
        let c = (l + 1.0) * (m + 1.0) - (k + 1.0) * (n + 1.0);
        for i in 0..=60 {
            let t = 0.25 * (32.0f64).powf(i as f64 / 60.0);
            let want = c * (t + 1.0).powf(-(l + m + 4.0));
            let got = measurement(&src, q, t)?.value;
            worst = worst.max((got - want).abs() / want.abs());
        }
    }
    Ok((worst <= 1e-8, format!("max relative error = {worst:.2e}")))
}

fn forward_bernstein() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    for (name, mu) in library() {
        for i in 1..=16 {
            let t = 0.25 * i as f64;
            let r = taylor_log_concavity(&mu, t, 50, 1e-12)?;
            worst = worst.min(r.margin);
            if !r.pass {
                failures.push(format!("{name}@{t}"));
            }
        }
    }
    Ok((
        failures.is_empty(),
        format!("15 measures x 16 t values, n <= 50, smallest log second difference {worst:.2e}, failures {failures:?}"),
    ))
}

fn complete_monotonicity() -> Outcome {
    let lib = library();
    let quads = Quadruple::enumerate(8);
    let mut worst = f64::INFINITY;
    for (_, mu) in &lib {
        for &q in &quads {
            for t in [0.5, 1.0, 2.0] {
                for j in 0..=4 {
                    let d = signed_derivative(mu, q, t, j)?;
                    if d.value != 0.0 {
                        worst = worst.min(d.value / d.scale);
                    }
                }
            }
        }
    }
    let mut rng = trajectory_rng(5, 5);
    let mut fd_worst: f64 = 0.0;
    for _ in 0..50 {
        let (_, mu) = &lib[rng.random_range(0..lib.len())];
        let q = quads[rng.random_range(0..quads.len())];
        let t = rng.random_range(0.5..2.0);
        let h = 1e-4 * t;
        let fd = (measurement(mu, q, t - h)?.value - measurement(mu, q, t + h)?.value) / (2.0 * h);
        let table = MomentTable::new(mu, t, q.n() + 1)?;
        let (mut dec, mut scale) = (0.0, 0.0);
        for (w, sub) in derivative_decomposition(q) {
            let m = table.measurement(sub);
            dec += w as f64 * m.value;
            scale += w as f64 * m.scale;
        }
        if scale > 0.0 {
            fd_worst = fd_worst.max((fd - dec).abs() / scale.max(dec.abs()));
        }
    }
    Ok((
        worst >= -1e-12 && fd_worst <= 1e-6,
        format!("min signed derivative / scale = {worst:.2e}, decomposition vs finite difference {fd_worst:.2e}"),
    ))
}

fn post_inversion() -> Outcome {
    let u = HalfLineMeasure::uniform(1.0, 2.0)?;
    let mut worst: f64 = 0.0;
    let mut em_ok = true;
    for r in [1.2, 1.5, 1.8] {
        worst = worst.max((post_inversion_sum(&u, 400.0, r)? - (r - 1.0)).abs());
        for t in [10.0, 50.0, 100.0, 400.0] {
            em_ok &= euler_maclaurin_check(&u, t, r)?.pass;
        }
    }
    let mut gt_ok = true;
    for t in [1.0, 10.0, 100.0] {
        gt_ok &= GtDensity::new(&u, t, 4.0)?.certify_log_concave(8).pass;
    }
    Ok((
        worst <= 0.05 && em_ok && gt_ok,
        format!("max |Post sum - mass| at t=400 = {worst:.4}, Euler-Maclaurin bound holds = {em_ok}, g_t log-concave = {gt_ok}"),
    ))
}

fn variational() -> Outcome {
    let payoffs = [
        Payoff::new(
            (0..=10)
                .map(|x| if x == 0 { 2f64.ln() } else { 0.0 })
                .collect(),
            0.0,
        )?,
        Payoff::new((0..=10).map(|x| -0.3 * x as f64).collect(), -3.0)?,
        Payoff::new(
            vec![0.0, 1.0, -0.5, 2.0, 0.3, -1.0, 0.0, 0.8, 0.1, -0.2, 0.5],
            0.5,
        )?,
    ];
    let mut rng = trajectory_rng(7, 0);
    let mut violations = 0;
    let mut max_opt_z: f64 = 0.0;
    let mut max_ode: f64 = 0.0;
    for (k, f) in payoffs.iter().enumerate() {
        for i in 0..20 {
            let p = gen::sinusoidal_policy(&mut rng, 8, 3.0);
            let r = supermartingale_check(
                Exec::default(),
                &p,
                f,
                1.0,
                10_000,
                (1000 * k + i) as u64,
                false,
            )?;
            violations += usize::from(!r.upper_ok);
        }
        let opt = optimal_policy(f, 1.0)?;
        let r = supermartingale_check(Exec::default(), &opt, f, 1.0, 100_000, 99 + k as u64, true)?;
        max_opt_z = max_opt_z.max((r.estimate - r.lhs).abs() / r.se);
        let ode = ode_policy_value(&opt, f, 1.0, default_x_max(opt.bound(), 1.0))?;
        max_ode = max_ode.max((ode - log_poisson_integral(f, 1.0)?).abs());
    }
    Ok((
        violations == 0 && max_opt_z <= 3.0 && max_ode <= 1e-6,
        format!("random-policy violations {violations}/60, optimal |est - lhs|/SE = {max_opt_z:.2}, ODE error {max_ode:.1e}"),
    ))
}

fn fixed_point() -> Outcome {
    let g1 = |_t: f64, x: u64| (1.0 + x as f64).min(4.0);
    let g2 = |t: f64, x: u64| 1.0 + (t + x as f64).sin().abs();
    let r1 = fixed_point_solve(Exec::default(), &g1, 4.0, 1.0, 6, 10_000, 1, 0.6)?;
    let r2 = fixed_point_solve(Exec::default(), &g2, 2.0, 1.0, 6, 10_000, 2, 0.6)?;
    Ok((
        r1.pass && r2.pass,
        format!(
            "max ratios {:.3} and {:.3} over {} steps",
            r1.max_ratio,
            r2.max_ratio,
            r1.ratios.len()
        ),
    ))
}

fn coupling() -> Outcome {
    let sin_a = gen::sinusoidal_policy(&mut trajectory_rng(5, 0), 4, 2.0);
    let sin_b = gen::sinusoidal_policy(&mut trajectory_rng(5, 1), 4, 2.0);
    let markov = MarkovPolicy::new(3.0, |t: f64, x| {
        3.0 / (1.0 + x as f64) * (0.5 + 0.5 * t.cos())
    });
    let selfexc = HistoryPolicy {
        bound: 3.0,
        rule: |t: f64, jumps: &[f64]| {
            (0.5 + jumps.iter().map(|s| (-(t - s)).exp()).sum::<f64>()).min(3.0)
        },
    };
    let pairs: [(&dyn IntensityPolicy, &dyn IntensityPolicy); 3] = [
        (&ConstantPolicy(2.0), &ConstantPolicy(1.0)),
        (&sin_a, &sin_b),
        (&markov, &selfexc),
    ];
    let mut mismatches = 0;
    let mut atoms = 0;
    for (i, (a, b)) in pairs.into_iter().enumerate() {
        let r = coupling_batch(Exec::default(), a, b, 1.0, 1000, 40 + i as u64)?;
        mismatches += r.mismatches;
        atoms += r.atoms;
    }
    Ok((
        mismatches == 0,
        format!("{mismatches} mismatches over {atoms} atoms on 3 x 1000 noises"),
    ))
}

fn discrete_pl() -> Outcome {
    let h = pl_harness(Exec::default(), 1000, 15, &[0.5, 1.0, 2.0], 2024)?;
    let zero = WindowFn::constant(-5, 5, 0.0)?;
    let mut instances = vec![QuadrupleOfFunctions::tight(zero.clone(), zero)];
    let mut rng = trajectory_rng(3, 3);
    instances.extend((0..50).map(|_| random_centred_tight_instance(&mut rng, 11)));
    let mut worst: f64 = 0.0;
    let mut shifted_ok = true;
    for q in &instances {
        let rows = stirling_limit_experiment(q, &[10, 50, 200])?;
        shifted_ok &= rows.iter().all(|r| r.shifted.pass);
        worst = worst.max(rows[2].rel_err.iter().copied().fold(0.0, f64::max));
    }
    Ok((
        h.pass && shifted_ok && worst <= 0.05,
        format!(
            "harness violations {}/{}/{} (hypothesis/counting/Poisson) of {}, Stirling worst relative error at n=200 {worst:.4}",
            h.hypothesis_failures, h.counting_violations, h.poisson_violations, h.instances
        ),
    ))
}

fn sequence_transforms() -> Outcome {
    let mut rng = trajectory_rng(2024, 11);
    let mut walkup_fail = 0;
    let mut tail_fail = 0;
    for _ in 0..500 {
        let a = gen::log_concave_seq(&mut rng, 12);
        let b = gen::log_concave_seq(&mut rng, 12);
        walkup_fail += usize::from(!is_log_concave(&walkup_convolve(&a, &b)?, 1e-12).pass);
    }
    for _ in 0..500 {
        let a = gen::log_concave_seq(&mut rng, 12);
        tail_fail += usize::from(!is_log_concave(&binomial_tail_transform(&a)?, 1e-12).pass);
    }
    let ones = LogConcaveSeq::new(vec![1.0; 4])?;
    let pair = LogConcaveSeq::new(vec![1.0, 1.0])?;
    let golden = binomial_tail_transform(&ones)?.values() == [4.0, 6.0, 4.0, 1.0]
        && walkup_convolve(&pair, &pair)?.values() == [1.0, 2.0, 2.0];
    Ok((
        walkup_fail == 0 && tail_fail == 0 && golden,
        format!("Walkup failures {walkup_fail}/500, binomial-tail failures {tail_fail}/500, golden vectors exact = {golden}"),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (
            "uniform[1,2] closed form",
            uniform_closed_form,
            Some(Duration::from_secs(1)),
        ),
        ("exponential null case", exponential_null, None),
        ("gamma case", gamma_case, None),
        (
            "forward Bernstein",
            forward_bernstein,
            Some(Duration::from_secs(5)),
        ),
        ("complete monotonicity", complete_monotonicity, None),
        ("Post inversion", post_inversion, None),
        (
            "variational formula",
            variational,
            Some(Duration::from_secs(60)),
        ),
        ("fixed-point contraction", fixed_point, None),
        ("coupling", coupling, None),
        (
            "discrete Prekopa-Leindler",
            discrete_pl,
            Some(Duration::from_secs(30)),
        ),
        ("sequence transforms", sequence_transforms, None),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok((pass, detail)) => {
                let in_time = limit.is_none_or(|l| elapsed <= l);
                let detail = if in_time {
                    detail
                } else {
                    format!("{detail}; over time budget {:?}", limit.unwrap_or_default())
                };
                (pass && in_time, detail)
            }
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} [{:>2}] {name}: {detail} ({:.2}s)",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
