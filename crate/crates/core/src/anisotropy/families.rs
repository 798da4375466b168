//! Backend evaluation for each energy density family.

use super::fd;
use crate::curve::PlanarCurve;
use crate::error::Error;
use crate::geom::tangent_basis;
use crate::Result;
use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use std::sync::Arc;

type EvalFn = dyn Fn(&Vector3<f64>) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum Backend {
    Isotropic,
    Quadratic {
        q: Matrix3<f64>,
    },
    Lens {
        beta: f64,
    },
    Product {
        profile: Arc<PlanarCurve>,
        cross: Arc<PlanarCurve>,
    },
    Table(Arc<TableData>),
    Custom {
        eval: Arc<EvalFn>,
    },
}

impl Backend {
    /// Density value at a unit direction.
    pub fn value_unit(&self, n: &Vector3<f64>) -> f64 {
        match self {
            Backend::Isotropic => 1.0,
            Backend::Quadratic { q } => n.dot(&(q * n)).sqrt(),
            Backend::Lens { beta } => 1.0 + beta * (n.x * n.x + n.y * n.y),
            Backend::Product { profile, cross } => {
                let (a, _, _) = cross_jet(cross, n);
                let w = Vector2::new(a, n.z);
                let phi = w.y.atan2(w.x);
                w.norm() * profile.support_jet(phi).h
            }
            Backend::Table(t) => t.eval(polar_angle(n)),
            Backend::Custom { eval } => eval(n),
        }
    }

    /// Tangential sphere gradient at a unit direction.
    pub fn sphere_gradient(&self, n: &Vector3<f64>) -> Vector3<f64> {
        match self {
            Backend::Isotropic => Vector3::zeros(),
            Backend::Quadratic { .. } | Backend::Lens { .. } | Backend::Product { .. } => {
                let (value, xi, _) = self.jet_unit(n);
                xi - value * n
            }
            Backend::Table(t) => {
                let theta = polar_angle(n);
                let (_, df, _) = t.eval_jet(theta);
                df * theta_direction(n)
            }
            Backend::Custom { eval } => {
                let (t1, t2) = tangent_basis(n);
                let g = fd::sphere_gradient(&|m| eval(m), n, &t1, &t2);
                g.x * t1 + g.y * t2
            }
        }
    }

    /// Value, Cahn-Hoffman vector, and extension Hessian at a unit direction.
    pub fn jet_unit(&self, n: &Vector3<f64>) -> (f64, Vector3<f64>, Matrix3<f64>) {
        match self {
            Backend::Isotropic => (
                1.0,
                *n,
                Matrix3::identity() - n * n.transpose(),
            ),
            Backend::Quadratic { q } => {
                let qn = q * n;
                let g = n.dot(&qn).sqrt();
                let xi = qn / g;
                let h = q / g - (qn * qn.transpose()) / (g * g * g);
                (g, xi, h)
            }
            Backend::Lens { beta } => {
                let b = *beta;
                let rho2 = n.x * n.x + n.y * n.y;
                let p12n = Vector3::new(n.x, n.y, 0.0);
                let value = 1.0 + b * rho2;
                let grad = n + b * (2.0 * p12n - rho2 * n);
                let p12 = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.0));
                let h = (Matrix3::identity() - n * n.transpose())
                    + b * (2.0 * p12
                        - 2.0 * (p12n * n.transpose() + n * p12n.transpose())
                        - rho2 * Matrix3::identity()
                        + 3.0 * rho2 * (n * n.transpose()));
                (value, grad, h)
            }
            Backend::Product { profile, cross } => {
                let (a, ca_grad, ca_hess) = cross_jet(cross, n);
                let (value, p_grad, p_hess) =
                    profile.homogeneous_jet(Vector2::new(a, n.z));
                let grad = Vector3::new(
                    p_grad.x * ca_grad.x,
                    p_grad.x * ca_grad.y,
                    p_grad.y,
                );
                let mut h = Matrix3::zeros();
                for i in 0..2 {
                    for j in 0..2 {
                        h[(i, j)] = p_hess[(0, 0)] * ca_grad[i] * ca_grad[j]
                            + p_grad.x * ca_hess[(i, j)];
                    }
                    h[(i, 2)] = p_hess[(0, 1)] * ca_grad[i];
                    h[(2, i)] = h[(i, 2)];
                }
                h[(2, 2)] = p_hess[(1, 1)];
                (value, grad, h)
            }
            Backend::Table(t) => {
                let theta = polar_angle(n);
                let (f, df, ddf) = t.eval_jet(theta);
                let et = theta_direction(n);
                let ep = n.cross(&et);
                let xi = df * et + f * n;
                // Meridian eigenvalue f'' + f, azimuthal cot(theta) f' + f.
                let cot = if theta.sin().abs() > 1e-12 {
                    theta.cos() / theta.sin()
                } else {
                    0.0
                };
                let a_tt = ddf + f;
                let a_pp = cot * df + f;
                let h = a_tt * (et * et.transpose()) + a_pp * (ep * ep.transpose());
                (f, xi, h)
            }
            Backend::Custom { eval } => {
                let value = eval(n);
                let (t1, t2) = tangent_basis(n);
                let g2 = fd::sphere_gradient(&|m| eval(m), n, &t1, &t2);
                let grad = g2.x * t1 + g2.y * t2;
                let a = fd::sphere_hessian_plus_gamma(&|m| eval(m), n, &t1, &t2);
                let h = embed_tangent_form(&a, &t1, &t2);
                (value, grad + value * n, h)
            }
        }
    }
}

/// One-homogeneous jet of the cross-section support at the equatorial part of
/// a direction, with a deterministic convention on the axis itself.
fn cross_jet(cross: &PlanarCurve, n: &Vector3<f64>) -> (f64, Vector2<f64>, Matrix2<f64>) {
    let w = Vector2::new(n.x, n.y);
    if w.norm() < 1e-14 {
        // On the axis the radial part vanishes; the gradient convention picks
        // the phi = 0 piece. Axis directions only occur at patch poles, which
        // carry no quadrature weight.
        let jet = cross.support_jet(0.0);
        return (
            0.0,
            Vector2::new(jet.h, jet.dh),
            Matrix2::zeros(),
        );
    }
    cross.homogeneous_jet(w)
}

/// Embed a 2x2 tangent-plane form into 3x3 using the given orthonormal basis.
fn embed_tangent_form(
    a: &Matrix2<f64>,
    t1: &Vector3<f64>,
    t2: &Vector3<f64>,
) -> Matrix3<f64> {
    let ts = [t1, t2];
    let mut h = Matrix3::zeros();
    for i in 0..2 {
        for j in 0..2 {
            h += a[(i, j)] * (ts[i] * ts[j].transpose());
        }
    }
    h
}

/// Polar angle from the +z axis, clamped inside the open interval.
fn polar_angle(n: &Vector3<f64>) -> f64 {
    n.z.clamp(-1.0, 1.0).acos().clamp(1e-8, std::f64::consts::PI - 1e-8)
}

/// Unit vector in the direction of increasing polar angle.
fn theta_direction(n: &Vector3<f64>) -> Vector3<f64> {
    let rho = (n.x * n.x + n.y * n.y).sqrt();
    if rho < 1e-14 {
        return Vector3::x();
    }
    let (cphi, sphi) = (n.x / rho, n.y / rho);
    let theta = polar_angle(n);
    Vector3::new(theta.cos() * cphi, theta.cos() * sphi, -theta.sin())
}

/// Sampled rotationally symmetric meridian data with a natural cubic spline.
#[derive(Debug, Clone)]
pub struct TableData {
    theta: Vec<f64>,
    values: Vec<f64>,
    /// Spline second derivatives at the knots.
    moments: Vec<f64>,
}

impl TableData {
    pub(crate) fn new(theta: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if theta.len() != values.len() {
            return Err(Error::param(
                "table",
                "theta and value arrays must have equal length".to_string(),
            ));
        }
        if theta.len() < 4 {
            return Err(Error::param("table", "need at least 4 samples".to_string()));
        }
        if theta.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("table", "theta must be strictly increasing".to_string()));
        }
        let span_lo = theta[0];
        let span_hi = *theta.last().unwrap();
        if span_lo > 1e-6 || span_hi < std::f64::consts::PI - 1e-6 {
            return Err(Error::param(
                "table",
                format!("theta must cover [0, pi], got [{span_lo}, {span_hi}]"),
            ));
        }
        if values.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::param("table", "values must be positive".to_string()));
        }
        let moments = natural_spline_moments(&theta, &values);
        Ok(TableData {
            theta,
            values,
            moments,
        })
    }

    pub(crate) fn eval(&self, t: f64) -> f64 {
        self.eval_jet(t).0
    }

    /// Spline value and first two derivatives at a polar angle.
    pub(crate) fn eval_jet(&self, t: f64) -> (f64, f64, f64) {
        let n = self.theta.len();
        let t = t.clamp(self.theta[0], self.theta[n - 1]);
        let i = match self
            .theta
            .binary_search_by(|x| x.partial_cmp(&t).unwrap())
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        let h = self.theta[i + 1] - self.theta[i];
        let a = (self.theta[i + 1] - t) / h;
        let b = (t - self.theta[i]) / h;
        let (m0, m1) = (self.moments[i], self.moments[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let value = a * y0
            + b * y1
            + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let deriv = (y1 - y0) / h
            + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        let second = a * m0 + b * m1;
        (value, deriv, second)
    }
}

/// Natural cubic spline moments via the Thomas algorithm.
fn natural_spline_moments(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    diag[0] = 1.0;
    diag[n - 1] = 1.0;
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        diag[i] = (h0 + h1) / 3.0;
        upper[i] = h1 / 6.0;
        rhs[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
    }
    // Forward sweep (lower entries mirror the uppers of the previous row).
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let lower = if i > 0 && i < n - 1 {
            (x[i] - x[i - 1]) / 6.0
        } else {
            0.0
        };
        let m = diag[i] - lower * c[i - 1];
        c[i] = if i < n - 1 { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower * d[i - 1]) / m;
    }
    let mut moments = vec![0.0; n];
    moments[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        moments[i] = d[i] - c[i] * moments[i + 1];
    }
    moments
}
