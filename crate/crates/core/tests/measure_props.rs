use lclab::halfmeasure::{library, Atom, Piece};
use lclab::laplace::taylor_log_concavity;
use lclab::poissonctl::trajectory_rng;
use lclab::HalfLineMeasure;
use proptest::prelude::*;
use rand::Rng;

/// Adaptive Simpson to absolute tolerance `tol`.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Random non-negative piecewise polynomial on `[0, 4]` with an optional atom.
fn random_measure(seed: u64) -> HalfLineMeasure {
    let mut rng = trajectory_rng(seed, 0);
    let n_pieces = rng.random_range(1..=3);
    let mut cuts: Vec<f64> = (0..=n_pieces).map(|_| rng.random_range(0.0..4.0)).collect();
    cuts.sort_by(f64::total_cmp);
    let pieces = cuts
        .windows(2)
        .filter(|w| w[1] - w[0] > 1e-3)
        .map(|w| {
            let deg = rng.random_range(0..=2);
            Piece::new(
                w[0],
                w[1],
                (0..=deg).map(|_| rng.random_range(0.0..2.0)).collect(),
                0.0,
            )
        })
        .collect();
    let atoms = if rng.random_bool(0.3) {
        vec![Atom {
            x: rng.random_range(0.0..3.0),
            w: rng.random_range(0.1..1.0),
        }]
    } else {
        vec![]
    };
    HalfLineMeasure::new(atoms, pieces, false).unwrap()
}

fn breakpoints(m: &HalfLineMeasure) -> Vec<f64> {
    m.pieces().iter().flat_map(|p| [p.a, p.b]).collect()
}

/// `∫ p1(y) p2(x - y) dy` plus atom contributions, by quadrature.
fn conv_oracle(m1: &HalfLineMeasure, m2: &HalfLineMeasure, x: f64) -> f64 {
    let dens = |m: &HalfLineMeasure, y: f64| -> f64 {
        m.pieces()
            .iter()
            .filter(|p| p.a <= y && y < p.b)
            .map(|p| poly(&p.coeffs, y))
            .sum()
    };
    let mut cuts: Vec<f64> = breakpoints(m1)
        .into_iter()
        .chain(breakpoints(m2).into_iter().map(|b| x - b))
        .filter(|c| (0.0..=x).contains(c))
        .collect();
    cuts.extend([0.0, x]);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += simpson(&|y| dens(m1, y) * dens(m2, x - y), w[0], w[1], 1e-14);
    }
    for a in m1.atoms() {
        total += a.w * dens(m2, x - a.x);
    }
    for a in m2.atoms() {
        total += a.w * dens(m1, x - a.x);
    }
    total
}

#[test]
fn convolution_matches_quadrature_oracle() {
    for seed in 0..100 {
        let (m1, m2) = (random_measure(2 * seed), random_measure(2 * seed + 1));
        let conv = m1.convolve(&m2).unwrap();
        let mut cuts: Vec<f64> = breakpoints(&conv);
        cuts.extend(m1.atoms().iter().map(|a| a.x));
        let mut rng = trajectory_rng(seed, 9);
        let mut checked = 0;
        while checked < 10 {
            let x = rng.random_range(0.0..8.0);
            if cuts.iter().any(|c| (c - x).abs() < 1e-6) {
                continue;
            }
            checked += 1;
            let want = conv_oracle(&m1, &m2, x);
            let got = conv.density(x);
            assert!(
                (got - want).abs() <= 1e-8 * want.abs().max(1e-6),
                "seed {seed} x {x}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn laplace_of_convolution_factorizes() {
    for seed in 0..50 {
        let (m1, m2) = (
            random_measure(1000 + 2 * seed),
            random_measure(1001 + 2 * seed),
        );
        let conv = m1.convolve(&m2).unwrap();
        for t in [0.5, 1.0, 2.0] {
            let lhs = conv.moment(t, 0).unwrap();
            let rhs = m1.moment(t, 0).unwrap() * m2.moment(t, 0).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs(), "{lhs} {rhs}");
        }
    }
}

#[test]
fn moments_match_quadrature_oracle() {
    for seed in 0..30 {
        let m = random_measure(5000 + seed);
        for (t, n) in [(0.5, 0u64), (1.0, 3), (2.0, 7)] {
            let fact: f64 = (1..=n).map(|i| i as f64).product();
            let mut want: f64 = m
                .pieces()
                .iter()
                .map(|p| {
                    simpson(
                        &|x| poly(&p.coeffs, x) * x.powi(n as i32) / fact * (-t * x).exp(),
                        p.a,
                        p.b,
                        1e-15,
                    )
                })
                .sum();
            want += m
                .atoms()
                .iter()
                .map(|a| a.w * a.x.powi(n as i32) / fact * (-t * a.x).exp())
                .sum::<f64>();
            let got = m.moment(t, n).unwrap();
            assert!(
                (got - want).abs() <= 1e-9 * want.abs().max(1e-300),
                "{got} {want}"
            );
        }
    }
}

#[test]
fn forward_bernstein_on_library() {
    for (name, mu) in library() {
        for t in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let r = taylor_log_concavity(&mu, t, 50, 1e-12).unwrap();
            assert!(r.pass, "{name} t={t}: {r:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn moment_linearity(s1 in 0u64..10_000, s2 in 0u64..10_000, a in 0.1f64..3.0, b in 0.1f64..3.0,
                        t in 0.1f64..3.0, n in 0u64..12) {
        let (m1, m2) = (random_measure(s1), random_measure(s2));
        let comb = m1.scale(a).add(&m2.scale(b)).unwrap();
        let lhs = comb.moment(t, n).unwrap();
        let rhs = a * m1.moment(t, n).unwrap() + b * m2.moment(t, n).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300), "{} {}", lhs, rhs);
    }

    #[test]
    fn tilt_scales_moments(s in 0u64..10_000, u in 0.1f64..2.0, t in 0.1f64..2.0, n in 0u64..8) {
        let m = random_measure(s);
        let tilted = m.exponential_tilt(u).unwrap();
        let lhs = tilted.moment(t, n).unwrap();
        let rhs = m.moment(t + u, n).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1e-300));
    }
}
