//! Gauss-Legendre quadrature.

use std::sync::LazyLock;

/// Default node count for fixed-order quadrature on smooth integrands.
pub const DEFAULT_NODES: usize = 64;

static GL64: LazyLock<(Vec<f64>, Vec<f64>)> = LazyLock::new(|| gauss_legendre(DEFAULT_NODES));

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Maps the 64-point rule onto `[a, b]` and calls `visit(x, weight)` per node.
pub fn for_each_node(a: f64, b: f64, mut visit: impl FnMut(f64, f64)) {
    if b <= a {
        return;
    }
    let (nodes, weights) = &*GL64;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    for (x, w) in nodes.iter().zip(weights) {
        visit(mid + half * x, half * w);
    }
}

/// `∫_a^b f` with the 64-point rule.
pub fn integrate(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let mut acc = 0.0;
    for_each_node(a, b, |x, w| acc += w * f(x));
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 64] {
            let (_, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn exact_for_high_degree_polynomials() {
        let v = integrate(0.0, 2.0, |x| x.powi(101));
        assert_relative_eq!(v, 2f64.powi(102) / 102.0, max_relative = 1e-13);
        let v = integrate(0.0, std::f64::consts::PI, f64::sin);
        assert_relative_eq!(v, 2.0, max_relative = 1e-14);
    }
}
