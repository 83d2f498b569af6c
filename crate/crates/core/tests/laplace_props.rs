use lclab::halfmeasure::library;
use lclab::laplace::{
    derivative_decomposition, geometric_grid, measurement, root_convexity_check, signed_derivative,
    taylor_coeffs, taylor_log_concavity, MomentTable,
};
use lclab::poissonctl::trajectory_rng;
use lclab::seqcore::{binomial_tail_transform, LogConcaveSeq, Quadruple};
use lclab::HalfLineMeasure;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn taylor_log_concavity_iff_measurements_nonnegative() {
    let mut measures = library();
    let bimodal = HalfLineMeasure::dirac(1.0, 1.0)
        .unwrap()
        .add(&HalfLineMeasure::dirac(10.0, 1.0).unwrap())
        .unwrap();
    measures.push(("dirac(1)+dirac(10)".into(), bimodal));
    let quads = Quadruple::enumerate(20);
    let mut saw_failure = false;
    for (name, mu) in &measures {
        for t in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let seq = taylor_log_concavity(mu, t, 20, 1e-12).unwrap().pass;
            let table = MomentTable::new(mu, t, 20).unwrap();
            let all = quads
                .iter()
                .all(|&q| table.measurement(q).is_nonnegative(1e-12));
            assert_eq!(seq, all, "{name} t={t}");
            saw_failure |= !seq;
        }
    }
    assert!(saw_failure, "the bimodal measure should fail somewhere");
}

#[test]
fn log_concavity_propagates_to_smaller_t() {
    let bimodal = HalfLineMeasure::dirac(1.0, 1.0)
        .unwrap()
        .add(&HalfLineMeasure::dirac(6.0, 0.5).unwrap())
        .unwrap();
    let mut measures = library();
    measures.push(("bimodal".into(), bimodal));
    for (name, mu) in &measures {
        for s in [0.5, 1.0, 2.0, 4.0, 8.0] {
            if !taylor_log_concavity(mu, s, 30, 1e-12).unwrap().pass {
                continue;
            }
            for r in [s / 8.0, s / 4.0, s / 2.0] {
                assert!(
                    taylor_log_concavity(mu, r, 30, 1e-12).unwrap().pass,
                    "{name} s={s} r={r}"
                );
            }
        }
    }
}

#[test]
fn binomial_tail_shifts_taylor_centre() {
    let mu = HalfLineMeasure::uniform(1.0, 2.0).unwrap();
    let (s, t, n_max) = (1.0, 2.0, 80);
    let at = taylor_coeffs(&mu, t, n_max).unwrap();
    let scaled: Vec<f64> = at
        .values()
        .iter()
        .enumerate()
        .map(|(n, a)| (t - s).powi(n as i32) * a)
        .collect();
    let tail = binomial_tail_transform(&LogConcaveSeq::new(scaled).unwrap()).unwrap();
    let as_ = taylor_coeffs(&mu, s, n_max).unwrap();
    for k in 0..=40 {
        let want = (t - s).powi(k as i32) * as_.get(k);
        let got = tail.get(k);
        assert!((got - want).abs() <= 1e-8 * want, "k={k}: {got} vs {want}");
    }
}

#[test]
fn signed_derivatives_nonnegative_on_library() {
    for (name, mu) in library() {
        if !mu.certify_log_concave().pass {
            continue;
        }
        for q in Quadruple::enumerate(8) {
            for t in [0.5, 1.0, 2.0] {
                for j in 0..=4 {
                    let d = signed_derivative(&mu, q, t, j).unwrap();
                    assert!(d.is_nonnegative(1e-12), "{name} {q} t={t} j={j}: {d:?}");
                }
            }
        }
    }
}

#[test]
fn decomposition_matches_finite_differences() {
    let lib = library();
    let quads = Quadruple::enumerate(8);
    let mut rng = trajectory_rng(77, 0);
    for _ in 0..50 {
        let (name, mu) = &lib[rng.random_range(0..lib.len())];
        let q = quads[rng.random_range(0..quads.len())];
        let t = rng.random_range(0.5..2.0);
        let h = 1e-4 * t;
        let fd = (measurement(mu, q, t - h).unwrap().value
            - measurement(mu, q, t + h).unwrap().value)
            / (2.0 * h);
        let table = MomentTable::new(mu, t, q.n() + 1).unwrap();
        let (mut dec, mut scale) = (0.0, 0.0);
        for (w, sub) in derivative_decomposition(q) {
            let m = table.measurement(sub);
            dec += w as f64 * m.value;
            scale += w as f64 * m.scale;
        }
        assert!(
            (fd - dec).abs() <= 1e-6 * scale.max(dec.abs()),
            "{name} {q} t={t}: fd {fd} vs {dec}"
        );
    }
}

#[test]
fn root_convexity_on_library() {
    let grid = geometric_grid(0.25, 8.0, 33);
    for (name, mu) in library() {
        for n in 1..=4 {
            let r = root_convexity_check(&mu, n, &grid).unwrap();
            assert!(r.pass, "{name} n={n}: {}", r.min_defect);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn measurement_is_antisymmetric_in_pairs(idx in 0usize..15, t in 0.2f64..4.0, n in 1usize..10, d in 0usize..5) {
        let lib = library();
        let mu = &lib[idx].1;
        let k = 0;
        let l = d.min(n);
        let q = Quadruple::new(k, l as i64, (n - l) as i64, n as i64);
        prop_assume!(q.is_ok());
        let q = q.unwrap();
        let m = measurement(mu, q, t).unwrap();
        let table = MomentTable::new(mu, t, n).unwrap();
        let direct = table.value(q.l()) * table.value(q.m()) - table.value(q.k()) * table.value(q.n());
        prop_assert!((m.value - direct).abs() <= 1e-12 * m.scale.max(1e-300) + 1e-300);
    }
}
