//! Gauss–Legendre rules and adaptive composite integration.

use std::f64::consts::PI;

/// `m`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_m` from Chebyshev-like initial guesses.
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        let mf = m as f64;
        for i in 0..m.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(m, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if m == 0 {
        return (1.0, 0.0);
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integral value and the summed `|fine - coarse|` convergence proxy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

/// Adaptive composite Gauss–Legendre on `[a, b]`.
///
/// Starts from `initial_panels` equal panels; a panel is accepted when the
/// two-half estimate differs from the whole-panel estimate by at most its
/// share of `tol`, otherwise both halves are refined (up to `max_depth`).
pub fn adaptive<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    initial_panels: usize,
    tol: f64,
    max_depth: usize,
    mut f: F,
) -> QuadResult {
    let panels = initial_panels.max(1);
    let width = (b - a) / panels as f64;
    let mut out = QuadResult {
        value: 0.0,
        error: 0.0,
        panels: 0,
    };
    let mut stack: Vec<(f64, f64, f64, usize)> = Vec::new();
    for p in (0..panels).rev() {
        let lo = a + p as f64 * width;
        let hi = if p + 1 == panels { b } else { lo + width };
        let whole = rule.integrate(lo, hi, &mut f);
        stack.push((lo, hi, whole, 0));
    }
    while let Some((lo, hi, whole, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(lo, mid, &mut f);
        let right = rule.integrate(mid, hi, &mut f);
        let fine = left + right;
        let diff = (fine - whole).abs();
        let share = tol * (hi - lo) / (b - a);
        if diff <= share || depth >= max_depth {
            out.value += fine;
            out.error += diff;
            out.panels += 2;
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_rules_match_tables() {
        let r = GaussLegendre::new(2);
        assert!((r.nodes[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);
        let r = GaussLegendre::new(3);
        assert!((r.nodes[2] - (0.6f64).sqrt()).abs() < 1e-15);
        assert!((r.weights[1] - 8.0 / 9.0).abs() < 1e-15);
        assert!((r.weights[0] - 5.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_two_and_polynomials_are_exact() {
        for m in [1, 5, 16, 20, 32, 64] {
            let r = GaussLegendre::new(m);
            assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13, "m={m}");
            let deg = 2 * m - 1;
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            let got = r.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
            assert!((got - exact).abs() < 1e-13);
            let even = 2 * m - 2;
            let got = r.integrate(-1.0, 1.0, |x| x.powi(even as i32));
            assert!((got - 2.0 / (even as f64 + 1.0)).abs() < 1e-13, "m={m}");
        }
    }

    #[test]
    fn adaptive_gaussian_integral() {
        let r = GaussLegendre::new(20);
        let q = adaptive(&r, -10.0, 10.0, 8, 1e-14, 30, |x| (-0.5 * x * x).exp());
        assert!((q.value - (2.0 * PI).sqrt()).abs() < 1e-13);
        assert!(q.error < 1e-13);
    }

    #[test]
    fn adaptive_refines_near_a_kink() {
        let r = GaussLegendre::new(8);
        let q = adaptive(&r, -1.0, 1.3, 1, 1e-12, 40, |x: f64| x.abs());
        assert!((q.value - (0.5 + 0.5 * 1.69)).abs() < 1e-11);
        assert!(q.panels > 2);
    }
}
