//! Anisotropic surface energy densities and their pointwise data.
//!
//! An energy density is a positive function `gamma` on unit directions. All
//! derivative bookkeeping goes through the degree-one homogeneous extension
//! `G(Y) = |Y| gamma(Y / |Y|)`, whose gradient at a unit direction `n` is the
//! Cahn-Hoffman vector
//!
//! ```text
//! xi(n) = grad G(n) = D gamma(n) + gamma(n) n,
//! ```
//!
//! with `D gamma` the (tangential) sphere gradient. The Hessian of `G`
//! restricted to the tangent plane at `n` equals the sphere Hessian plus
//! `gamma` times the identity; that 2x2 matrix `A` controls everything
//! second-order: its inverse is the Wulff shape's shape operator, and
//! `1 / det A` is the Wulff Gauss curvature attained at normal `n`.
//!
//! Built-in families:
//!
//! * [`Anisotropy::isotropic`]: `gamma = 1` (Wulff shape: unit sphere);
//! * [`Anisotropy::quadratic`]: `gamma(n) = sqrt(n^T Q n)` for symmetric
//!   positive definite `Q` (Wulff shape: the ellipsoid `x^T Q^{-1} x = 1`);
//! * [`Anisotropy::lens`]: `gamma(n) = 1 + beta (n_x^2 + n_y^2)`, rotationally
//!   symmetric; convex for `beta <= 1`, and for `beta > 1` the Wulff shape
//!   develops a sharp equatorial edge;
//! * [`Anisotropy::product`]: support-function composition of two planar
//!   convex profiles, `gamma(n) = p(c(n_x, n_y), n_z)` with `c` and `p` the
//!   one-homogeneous planar support extensions; corners of the planar curves
//!   become edge curves of the Wulff shape.
//!
//! Custom densities can supply closures for the value and optionally the
//! derivatives; missing derivatives fall back to geodesic centered finite
//! differences on the sphere. Analytic derivatives are cross-checked against
//! those finite differences at construction time.

pub mod families;
mod fd;

pub use families::TableData;

use crate::error::Error;
use crate::geom::{restrict_to_plane, sym2_eigenvalues, tangent_basis};
use crate::Result;
use nalgebra::{Matrix2, Matrix3, Vector3};
use std::sync::Arc;

use families::Backend;

/// Determinant threshold below which the Wulff curvature is reported as
/// unattained (infinite) rather than as a huge finite number.
pub const KW_SINGULAR_DET: f64 = 1e-12;

/// An anisotropic surface energy density on the unit sphere.
#[derive(Clone)]
pub struct Anisotropy {
    backend: Backend,
    name: String,
}

impl std::fmt::Debug for Anisotropy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Anisotropy").field("name", &self.name).finish()
    }
}

/// Pointwise Cahn-Hoffman data at a unit normal direction.
#[derive(Debug, Clone)]
pub struct CahnHoffmanPointData {
    /// The direction the data was evaluated at.
    pub normal: Vector3<f64>,
    /// Energy density value `gamma(n)`.
    pub gamma: f64,
    /// Sphere gradient `D gamma(n)` (tangential).
    pub grad: Vector3<f64>,
    /// Cahn-Hoffman vector `xi = D gamma + gamma n`.
    pub xi: Vector3<f64>,
    /// The 2x2 matrix `A = D^2 gamma + gamma I` on the tangent plane, in the
    /// deterministic basis returned by [`crate::geom::tangent_basis`].
    pub a: Matrix2<f64>,
    /// Eigenvalues of `A`, ascending; the reciprocals of the principal Wulff
    /// curvatures at this normal.
    pub a_eigenvalues: (f64, f64),
    /// Wulff Gauss curvature `1 / det A`, or `None` when `det A` is below
    /// [`KW_SINGULAR_DET`] in magnitude (curvature unattained).
    pub wulff_curvature: Option<f64>,
    /// True when `A` is positive definite at this normal.
    pub convex: bool,
}

/// Classification of `A(n)` over a sphere sample.
#[derive(Debug, Clone)]
pub struct ConvexityScan {
    /// Sample count on the sphere.
    pub samples: usize,
    /// Count of samples with `A` positive definite.
    pub positive_definite: usize,
    /// Count of samples with `A` indefinite or negative definite.
    pub non_convex: usize,
    /// Smallest `det A` encountered.
    pub min_det: f64,
    /// Smallest eigenvalue of `A` encountered.
    pub min_eigenvalue: f64,
    /// Directions (unit vectors) at which `A` failed positive definiteness,
    /// capped at 64 entries for reporting.
    pub failures: Vec<Vector3<f64>>,
}

impl ConvexityScan {
    /// True when every sampled `A(n)` was positive definite.
    pub fn is_convex(&self) -> bool {
        self.non_convex == 0
    }
}

impl Anisotropy {
    /// The isotropic density `gamma = 1`.
    pub fn isotropic() -> Self {
        Anisotropy {
            backend: Backend::Isotropic,
            name: "isotropic".to_string(),
        }
    }

    /// Quadratic density `gamma(n) = sqrt(n^T Q n)` for symmetric positive
    /// definite `Q`.
    pub fn quadratic(q: Matrix3<f64>) -> Result<Self> {
        if (q - q.transpose()).norm() > 1e-12 * q.norm() {
            return Err(Error::param("q", "matrix must be symmetric".to_string()));
        }
        let sym = 0.5 * (q + q.transpose());
        let eig = sym.symmetric_eigenvalues();
        if eig.min() <= 0.0 {
            return Err(Error::param(
                "q",
                format!("matrix must be positive definite (eigenvalues {eig:?})"),
            ));
        }
        Ok(Anisotropy {
            backend: Backend::Quadratic { q: sym },
            name: "quadratic".to_string(),
        })
    }

    /// Rotationally symmetric density `gamma(n) = 1 + beta (n_x^2 + n_y^2)`.
    pub fn lens(beta: f64) -> Result<Self> {
        if !(beta > -0.5) {
            return Err(Error::param(
                "beta",
                format!("need beta > -1/2 to keep gamma positive, got {beta}"),
            ));
        }
        Ok(Anisotropy {
            backend: Backend::Lens { beta },
            name: format!("lens(beta={beta})"),
        })
    }

    /// Product-form density: the support function of the convex body swept by
    /// scaling `cross` along `profile` (both planar convex curves containing
    /// the origin).
    ///
    /// Writing `c` and `p` for the one-homogeneous support extensions of the
    /// cross-section and profile bodies, the density is
    /// `gamma(Y) = p(c(Y_x, Y_y), Y_z)`.
    pub fn product(profile: crate::curve::PlanarCurve, cross: crate::curve::PlanarCurve) -> Self {
        Anisotropy {
            backend: Backend::Product {
                profile: Arc::new(profile),
                cross: Arc::new(cross),
            },
            name: "product".to_string(),
        }
    }

    /// Rotationally symmetric density from sampled meridian values
    /// `gamma(theta)` with a natural cubic spline in the polar angle;
    /// derivatives come from geodesic finite differences of the spline.
    pub fn table(theta: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let data = TableData::new(theta, values)?;
        Ok(Anisotropy {
            backend: Backend::Table(Arc::new(data)),
            name: "table".to_string(),
        })
    }

    /// Custom density from a value closure; derivatives by geodesic finite
    /// differences at step `1e-5`.
    pub fn custom(
        name: impl Into<String>,
        eval: impl Fn(&Vector3<f64>) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Anisotropy {
            backend: Backend::Custom {
                eval: Arc::new(eval),
            },
            name: name.into(),
        }
    }

    /// Identifying name (family plus parameters).
    pub fn name(&self) -> &str {
        &self.name
    }

    /// The family dispatch value behind this density.
    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    /// Density value at a unit direction.
    pub fn gamma(&self, n: &Vector3<f64>) -> f64 {
        self.backend.value_unit(n)
    }

    /// Value of the degree-one homogeneous extension at any nonzero `y`.
    pub fn extension_value(&self, y: &Vector3<f64>) -> Result<f64> {
        let norm = y.norm();
        if norm < 1e-300 {
            return Err(Error::ZeroDirection { norm });
        }
        Ok(norm * self.backend.value_unit(&(y / norm)))
    }

    /// Value and gradient of the homogeneous extension at any nonzero `y`.
    ///
    /// The gradient is homogeneous of degree zero and satisfies the Euler
    /// relation `grad . y = value`; at a unit direction it is the
    /// Cahn-Hoffman vector `xi`.
    pub fn extension_gradient(&self, y: &Vector3<f64>) -> Result<(f64, Vector3<f64>)> {
        let norm = y.norm();
        if norm < 1e-300 {
            return Err(Error::ZeroDirection { norm });
        }
        let n = y / norm;
        let value = self.backend.value_unit(&n);
        let grad_s = self.backend.sphere_gradient(&n);
        Ok((norm * value, grad_s + value * n))
    }

    /// Full second-order jet of the homogeneous extension at a unit
    /// direction: `(gamma, xi, H)` with `H` the 3x3 extension Hessian.
    ///
    /// `H` annihilates `n` and restricts on the tangent plane to
    /// `A = D^2 gamma + gamma I`.
    pub fn extension_jet(&self, n: &Vector3<f64>) -> (f64, Vector3<f64>, Matrix3<f64>) {
        self.backend.jet_unit(n)
    }

    /// Cahn-Hoffman vector at a unit direction.
    pub fn xi(&self, n: &Vector3<f64>) -> Vector3<f64> {
        let value = self.backend.value_unit(n);
        self.backend.sphere_gradient(n) + value * n
    }

    /// The matrix `A = D^2 gamma + gamma I` in the orthonormal basis
    /// `(t1, t2)` of the tangent plane at `n`.
    pub fn a_matrix_in(
        &self,
        n: &Vector3<f64>,
        t1: &Vector3<f64>,
        t2: &Vector3<f64>,
    ) -> Matrix2<f64> {
        let (_, _, h) = self.backend.jet_unit(n);
        restrict_to_plane(&h, t1, t2)
    }

    /// Pointwise Cahn-Hoffman data at a unit direction (`|n|` within `1e-12`
    /// of one).
    pub fn point_data(&self, n: &Vector3<f64>) -> Result<CahnHoffmanPointData> {
        if (n.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::param(
                "n",
                format!("direction must be unit length, |n| = {:.15}", n.norm()),
            ));
        }
        let (gamma, xi, h) = self.backend.jet_unit(n);
        if gamma <= 0.0 {
            return Err(Error::NonPositiveGamma {
                direction: [n.x, n.y, n.z],
                value: gamma,
            });
        }
        let (t1, t2) = tangent_basis(n);
        let a = restrict_to_plane(&h, &t1, &t2);
        let eig = sym2_eigenvalues(&a);
        let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        let wulff_curvature = if det.abs() < KW_SINGULAR_DET {
            None
        } else {
            Some(1.0 / det)
        };
        Ok(CahnHoffmanPointData {
            normal: *n,
            gamma,
            grad: xi - gamma * n,
            xi,
            a,
            a_eigenvalues: eig,
            wulff_curvature,
            convex: eig.0 > 0.0,
        })
    }

    /// Classify `A(n)` over a quasi-uniform sphere sample.
    pub fn convexity_scan(&self, samples: usize, seed: u64) -> ConvexityScan {
        let mut scan = ConvexityScan {
            samples,
            positive_definite: 0,
            non_convex: 0,
            min_det: f64::INFINITY,
            min_eigenvalue: f64::INFINITY,
            failures: Vec::new(),
        };
        for n in crate::geom::fibonacci_sphere(samples, seed) {
            let (t1, t2) = tangent_basis(&n);
            let a = self.a_matrix_in(&n, &t1, &t2);
            let (lo, _) = sym2_eigenvalues(&a);
            let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
            scan.min_det = scan.min_det.min(det);
            scan.min_eigenvalue = scan.min_eigenvalue.min(lo);
            if lo > 0.0 {
                scan.positive_definite += 1;
            } else {
                scan.non_convex += 1;
                if scan.failures.len() < 64 {
                    scan.failures.push(n);
                }
            }
        }
        scan
    }

    /// Cross-check analytic derivatives against geodesic finite differences
    /// on a deterministic sample grid. Returns the worst gradient and Hessian
    /// deviations.
    pub fn validate_derivatives(&self, samples: usize) -> (f64, f64) {
        let mut worst_grad = 0.0f64;
        let mut worst_hess = 0.0f64;
        for n in crate::geom::fibonacci_sphere(samples, 7) {
            let (gamma, xi, h) = self.backend.jet_unit(&n);
            let (t1, t2) = tangent_basis(&n);
            let fd_grad = fd::sphere_gradient(&|m| self.backend.value_unit(m), &n, &t1, &t2);
            let an_grad = xi - gamma * n;
            worst_grad = worst_grad
                .max((fd_grad - nalgebra::Vector2::new(an_grad.dot(&t1), an_grad.dot(&t2))).norm());
            let fd_a = fd::sphere_hessian_plus_gamma(
                &|m| self.backend.value_unit(m),
                &n,
                &t1,
                &t2,
            );
            let an_a = restrict_to_plane(&h, &t1, &t2);
            worst_hess = worst_hess.max((fd_a - an_a).norm());
        }
        (worst_grad, worst_hess)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::PlanarCurve;
    use approx::assert_relative_eq;
    use nalgebra::Vector2;

    fn families() -> Vec<Anisotropy> {
        vec![
            Anisotropy::isotropic(),
            Anisotropy::quadratic(Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 4.0))).unwrap(),
            Anisotropy::quadratic(Matrix3::new(
                2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 1.0,
            ))
            .unwrap(),
            Anisotropy::lens(0.5).unwrap(),
            Anisotropy::lens(2.0).unwrap(),
            Anisotropy::product(
                PlanarCurve::lens(1.0, 2.0).unwrap(),
                PlanarCurve::circle(1.0).unwrap(),
            ),
            Anisotropy::product(
                PlanarCurve::circle(1.0).unwrap(),
                PlanarCurve::arcgon(3, 1.0, 1.6).unwrap(),
            ),
        ]
    }

    /// Directions chosen away from the planar piece boundaries of the
    /// product families, where second derivatives jump.
    fn generic_directions() -> Vec<Vector3<f64>> {
        crate::geom::fibonacci_sphere(200, 11)
            .into_iter()
            .filter(|n| n.z.abs() > 0.05 && n.z.abs() < 0.93)
            .collect()
    }

    #[test]
    fn euler_relation_holds_for_all_families() {
        for gamma in families() {
            for n in generic_directions() {
                for scale in [0.3, 1.0, 17.0] {
                    let y = scale * n;
                    let (value, grad) = gamma.extension_gradient(&y).unwrap();
                    assert_relative_eq!(grad.dot(&y), value, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn gradient_is_degree_zero_homogeneous() {
        for gamma in families() {
            for n in generic_directions().into_iter().take(40) {
                let (_, g1) = gamma.extension_gradient(&n).unwrap();
                let (_, g2) = gamma.extension_gradient(&(251.0 * n)).unwrap();
                assert!((g1 - g2).norm() <= 1e-10 * g1.norm().max(1.0));
            }
        }
    }

    #[test]
    fn xi_normal_component_is_gamma() {
        for gamma in families() {
            for n in generic_directions().into_iter().take(60) {
                let xi = gamma.xi(&n);
                assert_relative_eq!(xi.dot(&n), gamma.gamma(&n), max_relative = 1e-10);
                // Tangential part is the sphere gradient: orthogonality check.
                let grad = xi - gamma.gamma(&n) * n;
                assert!(grad.dot(&n).abs() < 1e-10 * (1.0 + grad.norm()));
            }
        }
    }

    #[test]
    fn quadratic_gradient_matches_closed_form() {
        // For gamma(n) = sqrt(n^T Q n) the extension is sqrt(Y^T Q Y) with
        // gradient Q Y / sqrt(Y^T Q Y); frozen check at Y = e_z for
        // Q = diag(1, 1, 4): value 2, gradient (0, 0, 2).
        let q = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 4.0));
        let gamma = Anisotropy::quadratic(q).unwrap();
        let (value, grad) = gamma.extension_gradient(&Vector3::z()).unwrap();
        assert_relative_eq!(value, 2.0, epsilon = 1e-14);
        assert!((grad - Vector3::new(0.0, 0.0, 2.0)).norm() < 1e-13);
        // General directions against the closed form.
        for n in generic_directions().into_iter().take(50) {
            let (value, grad) = gamma.extension_gradient(&n).unwrap();
            let expect = (n.dot(&(q * n))).sqrt();
            assert_relative_eq!(value, expect, max_relative = 1e-13);
            assert!((grad - q * n / expect).norm() < 1e-12);
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        for gamma in families() {
            let (g, h) = gamma.validate_derivatives(150);
            assert!(g < 1e-7, "{}: gradient deviation {g}", gamma.name());
            assert!(h < 2e-4, "{}: hessian deviation {h}", gamma.name());
        }
    }

    #[test]
    fn extension_hessian_annihilates_the_direction() {
        for gamma in families() {
            for n in generic_directions().into_iter().take(40) {
                let (_, _, h) = gamma.extension_jet(&n);
                assert!((h * n).norm() < 1e-9 * (1.0 + h.norm()));
                assert!((h - h.transpose()).norm() < 1e-9 * (1.0 + h.norm()));
            }
        }
    }

    #[test]
    fn lens_equator_eigenvalue_is_one_minus_beta() {
        // Independent meridian oracle: for a rotationally symmetric density
        // g(theta), the meridian eigenvalue of A is g'' + g. Centered finite
        // differences of g(theta) = 1 + beta sin^2(theta) at the equator give
        // g'' = -2 beta, so the eigenvalue is 1 - beta.
        for beta in [0.5, 1.0, 2.0, 3.5] {
            let g = |theta: f64| 1.0 + beta * theta.sin() * theta.sin();
            let h = 1e-5;
            let theta = std::f64::consts::FRAC_PI_2;
            let oracle =
                (g(theta + h) - 2.0 * g(theta) + g(theta - h)) / (h * h) + g(theta);
            assert_relative_eq!(oracle, 1.0 - beta, epsilon = 1e-4);

            let gamma = Anisotropy::lens(beta).unwrap();
            let data = gamma.point_data(&Vector3::x()).unwrap();
            assert_relative_eq!(data.a_eigenvalues.0, 1.0 - beta, epsilon = 1e-10);
            assert_relative_eq!(data.a_eigenvalues.1, 1.0 + beta, epsilon = 1e-10);
        }
    }

    #[test]
    fn convexity_scan_flags_lens_band() {
        let scan = Anisotropy::lens(0.5).unwrap().convexity_scan(2000, 0);
        assert!(scan.is_convex(), "beta = 0.5 should be convex everywhere");
        assert!(scan.min_eigenvalue > 0.4 && scan.min_eigenvalue < 0.6);

        let scan = Anisotropy::lens(2.0).unwrap().convexity_scan(2000, 0);
        assert!(!scan.is_convex(), "beta = 2 has an indefinite band");
        // The failing band is sin^2(theta) > (1 + 2 beta) / (3 beta): check a
        // failure direction lies there and the equator value is 1 - beta.
        let data = Anisotropy::lens(2.0)
            .unwrap()
            .point_data(&Vector3::x())
            .unwrap();
        assert_relative_eq!(data.a_eigenvalues.0, -1.0, epsilon = 1e-10);
        for n in &scan.failures {
            let s2 = n.x * n.x + n.y * n.y;
            assert!(s2 > (1.0 + 4.0) / 6.0 - 0.05);
        }
    }

    #[test]
    fn isotropic_point_data_is_trivial() {
        let gamma = Anisotropy::isotropic();
        let n = Vector3::new(0.6, -0.48, 0.64).normalize();
        let data = gamma.point_data(&n).unwrap();
        assert_relative_eq!(data.gamma, 1.0, epsilon = 1e-15);
        assert!(data.grad.norm() < 1e-14);
        assert!((data.xi - n).norm() < 1e-14);
        assert!((data.a - Matrix2::identity()).norm() < 1e-12);
        assert_relative_eq!(data.wulff_curvature.unwrap(), 1.0, epsilon = 1e-12);
        assert!(data.convex);
    }

    #[test]
    fn point_data_rejects_non_unit_directions() {
        let gamma = Anisotropy::isotropic();
        assert!(gamma.point_data(&Vector3::new(1.1, 0.0, 0.0)).is_err());
        assert!(gamma.extension_value(&Vector3::zeros()).is_err());
        assert!(gamma.extension_gradient(&Vector3::zeros()).is_err());
    }

    #[test]
    fn product_gamma_equals_support_composition() {
        let profile = PlanarCurve::lens(1.0, 2.0).unwrap();
        let cross = PlanarCurve::circle(1.0).unwrap();
        let gamma = Anisotropy::product(profile.clone(), cross.clone());
        for n in generic_directions().into_iter().take(60) {
            let rho = (n.x * n.x + n.y * n.y).sqrt();
            let a = rho * cross.support_jet(n.y.atan2(n.x)).h;
            let expect = {
                let w = Vector2::new(a, n.z);
                let phi = w.y.atan2(w.x);
                w.norm() * profile.support_jet(phi).h
            };
            assert_relative_eq!(gamma.gamma(&n), expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn product_with_unit_circles_is_isotropic() {
        let gamma = Anisotropy::product(
            PlanarCurve::circle(1.0).unwrap(),
            PlanarCurve::circle(1.0).unwrap(),
        );
        for n in generic_directions().into_iter().take(40) {
            assert_relative_eq!(gamma.gamma(&n), 1.0, max_relative = 1e-12);
            assert!((gamma.xi(&n) - n).norm() < 1e-10);
        }
    }

    #[test]
    fn table_density_reproduces_lens_values() {
        let beta = 0.5;
        let m = 400;
        let theta: Vec<f64> = (0..=m)
            .map(|i| std::f64::consts::PI * i as f64 / m as f64)
            .collect();
        let values: Vec<f64> = theta
            .iter()
            .map(|t| 1.0 + beta * t.sin() * t.sin())
            .collect();
        let table = Anisotropy::table(theta, values).unwrap();
        let exact = Anisotropy::lens(beta).unwrap();
        for n in generic_directions().into_iter().take(40) {
            assert_relative_eq!(table.gamma(&n), exact.gamma(&n), max_relative = 1e-8);
            assert!((table.xi(&n) - exact.xi(&n)).norm() < 1e-5);
        }
    }

    #[test]
    fn custom_density_uses_finite_difference_derivatives() {
        let gamma = Anisotropy::custom("shifted", |n: &Vector3<f64>| 1.0 + 0.2 * n.z);
        // Smooth convex-ish density: xi = D gamma + gamma n with
        // D gamma = 0.2 (e_z - (n . e_z) n).
        for n in generic_directions().into_iter().take(30) {
            let xi = gamma.xi(&n);
            let expect = 0.2 * (Vector3::z() - n.z * n) + (1.0 + 0.2 * n.z) * n;
            assert!((xi - expect).norm() < 1e-8, "{:?}", xi - expect);
        }
    }
}
