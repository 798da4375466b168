//! Gauss-Legendre quadrature.
//!
//! Nodes and weights are generated by Newton iteration on the Legendre
//! polynomial with Chebyshev-based starting guesses, which converges to full
//! double precision in a handful of steps for every order used here.

/// Gauss-Legendre rule on `[-1, 1]` of a given order (node count).
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Build the rule of the given order (`order >= 1`).
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be at least 1");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Chebyshev-like initial guess for the i-th positive-side root.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    let (p2, d2) = legendre_with_derivative(n, x);
                    dp = d2;
                    x -= p2 / d2;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
            let (_, d) = legendre_with_derivative(n, 0.0);
            weights[n / 2] = 2.0 / (d * d);
        }
        GaussLegendre { nodes, weights }
    }

    /// Number of nodes.
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes on `[-1, 1]` in ascending order.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights matching [`Self::nodes`].
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped to the interval `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| (mid + half * x, half * w))
            .collect()
    }

    /// Integrate a scalar function over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).iter().map(|&(x, w)| w * f(x)).sum()
    }
}

/// Legendre polynomial `P_n` and its derivative at `x`, by the three-term
/// recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let d = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Reference nodes for order 5 (roots of P_5), from the closed-form values
    // x = 0, +-sqrt(5 - 2 sqrt(10/7))/3, +-sqrt(5 + 2 sqrt(10/7))/3.
    #[test]
    fn order_five_matches_closed_form() {
        let rule = GaussLegendre::new(5);
        let inner = ((5.0 - 2.0 * (10.0f64 / 7.0).sqrt()) as f64).sqrt() / 3.0;
        let outer = ((5.0 + 2.0 * (10.0f64 / 7.0).sqrt()) as f64).sqrt() / 3.0;
        let expect = [-outer, -inner, 0.0, inner, outer];
        for (got, want) in rule.nodes().iter().zip(expect) {
            assert_relative_eq!(*got, want, epsilon = 1e-14);
        }
        let w_inner = (322.0 + 13.0 * 70.0f64.sqrt()) / 900.0;
        let w_outer = (322.0 - 13.0 * 70.0f64.sqrt()) / 900.0;
        let expect_w = [w_outer, w_inner, 128.0 / 225.0, w_inner, w_outer];
        for (got, want) in rule.weights().iter().zip(expect_w) {
            assert_relative_eq!(*got, want, epsilon = 1e-14);
        }
    }

    #[test]
    fn integrates_monomials_exactly() {
        for order in [1usize, 2, 3, 8, 16, 32, 64] {
            let rule = GaussLegendre::new(order);
            // Exact for degree <= 2 * order - 1 on [-1, 1].
            for degree in 0..(2 * order) {
                let value = rule.integrate(-1.0, 1.0, |x| x.powi(degree as i32));
                let exact = if degree % 2 == 0 {
                    2.0 / (degree as f64 + 1.0)
                } else {
                    0.0
                };
                assert_relative_eq!(value, exact, epsilon = 1e-12, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for order in [2usize, 7, 33, 64] {
            let rule = GaussLegendre::new(order);
            let total: f64 = rule.weights().iter().sum();
            assert_relative_eq!(total, 2.0, epsilon = 1e-13);
            let mapped: f64 = rule.mapped(0.0, 3.5).iter().map(|&(_, w)| w).sum();
            assert_relative_eq!(mapped, 3.5, epsilon = 1e-13);
        }
    }

    #[test]
    fn smooth_periodic_integral_converges() {
        // Integral of exp(sin phi) over one period.
        let exact = 7.954926521012845; // 2 pi I_0(1)
        let rule = GaussLegendre::new(32);
        let value = rule.integrate(0.0, 2.0 * std::f64::consts::PI, |x| x.sin().exp());
        assert_relative_eq!(value, exact, max_relative = 1e-12);
    }
}
