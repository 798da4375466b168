//! Finite differences along great circles, for derivative checks and for
//! backends defined only through point evaluation.

use nalgebra::{Matrix2, Vector2, Vector3};

const STEP: f64 = 1e-5;

/// Value at a point moved along the great circle through `n` tangent to `t`.
fn geodesic<F: Fn(&Vector3<f64>) -> f64 + ?Sized>(
    f: &F,
    n: &Vector3<f64>,
    t: &Vector3<f64>,
    h: f64,
) -> f64 {
    f(&(h.cos() * n + h.sin() * t))
}

/// Centered-difference tangential gradient, components along `t1` and `t2`.
pub fn sphere_gradient<F: Fn(&Vector3<f64>) -> f64 + ?Sized>(
    f: &F,
    n: &Vector3<f64>,
    t1: &Vector3<f64>,
    t2: &Vector3<f64>,
) -> Vector2<f64> {
    let d = |t: &Vector3<f64>| {
        (geodesic(f, n, t, STEP) - geodesic(f, n, t, -STEP)) / (2.0 * STEP)
    };
    Vector2::new(d(t1), d(t2))
}

/// Second geodesic difference plus the value, i.e. the tangential stiffness
/// form evaluated by finite differences. The cross term comes from the
/// diagonal direction by polarization.
pub fn sphere_hessian_plus_gamma<F: Fn(&Vector3<f64>) -> f64 + ?Sized>(
    f: &F,
    n: &Vector3<f64>,
    t1: &Vector3<f64>,
    t2: &Vector3<f64>,
) -> Matrix2<f64> {
    let value = f(n);
    let second = |t: &Vector3<f64>| {
        (geodesic(f, n, t, STEP) - 2.0 * value + geodesic(f, n, t, -STEP)) / (STEP * STEP)
    };
    let h11 = second(t1);
    let h22 = second(t2);
    let diag = (t1 + t2) / std::f64::consts::SQRT_2;
    let h12 = second(&diag) - 0.5 * (h11 + h22);
    Matrix2::new(h11 + value, h12, h12, h22 + value)
}
