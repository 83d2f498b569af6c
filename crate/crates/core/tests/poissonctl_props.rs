use lclab::gen;
use lclab::poissonctl::{
    default_x_max, fixed_point_solve, intensity_identity_check, legendre_gap, log_poisson_integral,
    mc_functional, ode_policy_value, optimal_policy, simulate_counting, supermartingale_check,
    trajectory_rng, ConstantPolicy, HistoryPolicy, IntensityPolicy, MarkovPolicy, Payoff,
    PlanarNoise, ValueFunction,
};
use lclab::Exec;
use proptest::prelude::*;

fn payoffs() -> Vec<Payoff> {
    vec![
        Payoff::indicator_zero(2f64.ln()),
        Payoff::new((0..=10).map(|x| -0.3 * x as f64).collect(), -3.0).unwrap(),
        Payoff::new(
            vec![0.0, 1.0, -0.5, 2.0, 0.3, -1.0, 0.0, 0.8, 0.1, -0.2, 0.5],
            0.0,
        )
        .unwrap(),
    ]
}

#[test]
fn value_function_solves_the_hamilton_jacobi_equation() {
    let h = 1e-4;
    for f in payoffs() {
        let vf = ValueFunction::new(f, 1.0).unwrap();
        let mut worst: f64 = 0.0;
        for i in 1..20 {
            let t = i as f64 * 0.05;
            for x in 0..15 {
                let dt = (vf.value(t + h, x) - vf.value(t - h, x)) / (2.0 * h);
                worst = worst.max((dt + vf.gradient(t, x).exp() - 1.0).abs());
            }
        }
        assert!(worst <= 1e-5, "{worst}");
    }
}

#[test]
fn compensated_counts_are_centred() {
    let sin = gen::sinusoidal_policy(&mut trajectory_rng(3, 0), 4, 2.0);
    let hist = HistoryPolicy {
        bound: 2.0,
        rule: |t: f64, jumps: &[f64]| match jumps.last() {
            Some(&s) => 0.5 + 1.5 * (-(t - s)).exp(),
            None => 1.0,
        },
    };
    let opt = optimal_policy(&payoffs()[2], 1.0).unwrap();
    let policies: Vec<Box<dyn IntensityPolicy>> = vec![
        Box::new(ConstantPolicy(1.5)),
        Box::new(sin),
        Box::new(hist),
        Box::new(opt),
    ];
    for (i, p) in policies.iter().enumerate() {
        let r =
            intensity_identity_check(Exec::default(), p, |_, _| 1.0, 1.0, 20_000, 100 + i as u64)
                .unwrap();
        assert!(r.pass, "policy {i}: {r:?}");
        let r = intensity_identity_check(
            Exec::default(),
            p,
            |t, x| t * (x as f64 + 1.0).sqrt(),
            1.0,
            20_000,
            200 + i as u64,
        )
        .unwrap();
        assert!(r.pass, "policy {i} weighted: {r:?}");
    }
}

#[test]
fn variational_inequality_for_random_policies() {
    let mut rng = trajectory_rng(11, 0);
    for (k, f) in payoffs().iter().enumerate() {
        for i in 0..5 {
            let p = gen::sinusoidal_policy(&mut rng, 6, 3.0);
            let r = supermartingale_check(
                Exec::default(),
                &p,
                f,
                1.0,
                4000,
                (k * 100 + i) as u64,
                false,
            )
            .unwrap();
            assert!(r.upper_ok, "payoff {k} policy {i}: {r:?}");
        }
    }
}

#[test]
fn ode_agrees_with_closed_form_and_simulation() {
    for f in payoffs() {
        let opt = optimal_policy(&f, 1.0).unwrap();
        let v = ode_policy_value(&opt, &f, 1.0, default_x_max(opt.bound(), 1.0)).unwrap();
        assert!((v - log_poisson_integral(&f, 1.0).unwrap()).abs() < 1e-6);
    }
    let f = &payoffs()[2];
    let p = MarkovPolicy::new(2.0, |t: f64, x| 1.0 + 0.5 * (3.0 * t + x as f64).sin());
    let ode = ode_policy_value(&p, f, 1.0, default_x_max(2.0, 1.0)).unwrap();
    let mc = mc_functional(Exec::default(), &p, f, 1.0, 40_000, 5).unwrap();
    assert!((mc.estimate - ode).abs() <= 4.0 * mc.se, "{ode} vs {mc:?}");
}

#[test]
fn execution_modes_agree_bitwise() {
    let f = &payoffs()[1];
    let p = gen::sinusoidal_policy(&mut trajectory_rng(9, 9), 3, 1.5);
    let a = mc_functional(Exec::Parallel, &p, f, 1.0, 3000, 42).unwrap();
    let b = mc_functional(Exec::Sequential, &p, f, 1.0, 3000, 42).unwrap();
    assert_eq!(a, b);
}

#[test]
fn fixed_point_iteration_contracts() {
    let g1 = |_t: f64, x: u64| (1.0 + x as f64).min(4.0);
    let g2 = |t: f64, x: u64| 1.0 + (t + x as f64).sin().abs();
    for (g, c) in [
        (&g1 as &(dyn Fn(f64, u64) -> f64 + Sync + Send), 4.0),
        (&g2, 2.0),
    ] {
        let r = fixed_point_solve(Exec::default(), &g, c, 1.0, 6, 4000, 17, 0.6).unwrap();
        assert!(r.pass, "{r:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn legendre_gap_nonnegative(x in -5.0f64..5.0, y in 0.0f64..20.0) {
        prop_assert!(legendre_gap(x, y) >= -1e-12 * (1.0 + y + x.exp()));
    }

    #[test]
    fn thinning_is_a_function_of_the_noise(seed in any::<u64>(), idx in 0u64..1000, amp in 0.2f64..3.0) {
        let p = gen::sinusoidal_policy(&mut trajectory_rng(seed, 1), 4, amp);
        let noise = PlanarNoise::sample(1.5, p.bound(), seed, idx).unwrap();
        let a = simulate_counting(&p, &noise).unwrap();
        let again = PlanarNoise::sample(1.5, p.bound(), seed, idx).unwrap();
        prop_assert_eq!(a, simulate_counting(&p, &again).unwrap());
    }

    #[test]
    fn optimal_rates_stay_in_oscillation_band(seed in any::<u64>(), t in 0.0f64..0.999, x in 0u64..30) {
        let f = gen::payoff(&mut trajectory_rng(seed, 2), 10, 2.0);
        let p = optimal_policy(&f, 1.0).unwrap();
        let osc = f.oscillation();
        let r = p.rate(t, x, &[]);
        prop_assert!(r >= (-osc).exp() * (1.0 - 1e-9) && r <= osc.exp() * (1.0 + 1e-9));
    }
}
