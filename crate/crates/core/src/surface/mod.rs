//! Piecewise-smooth oriented surfaces and their pointwise geometry.
//!
//! A surface is a list of rectangular parametric patches (the smooth faces)
//! plus explicit edge records where two faces meet along a curve. All
//! pointwise quantities are computed in an orthonormal tangent frame
//! `(e1, e2, nu)` chosen right-handed with the outward normal, so on the unit
//! sphere the shape operator is `+I` and the anisotropic mean curvature of a
//! unit Wulff shape is `-2`.

pub mod shapes;

use crate::anisotropy::Anisotropy;
use crate::error::Error;
use crate::quad::GaussLegendre;
use crate::Result;
use nalgebra::{Matrix2, Vector3};
use std::sync::Arc;

/// Threshold on the area element below which a sample counts as an
/// immersion failure.
pub const IMMERSION_EPS: f64 = 1e-10;

/// Position and first partial derivatives of a chart.
#[derive(Debug, Clone, Copy)]
pub struct Jet1 {
    pub x: Vector3<f64>,
    pub xs: Vector3<f64>,
    pub xt: Vector3<f64>,
}

/// Second partial derivatives of a chart.
#[derive(Debug, Clone, Copy)]
pub struct Jet2 {
    pub xss: Vector3<f64>,
    pub xst: Vector3<f64>,
    pub xtt: Vector3<f64>,
}

/// A smooth map from a parameter rectangle into 3-space.
///
/// `jet1` must be analytic. Charts may supply exact second derivatives
/// and an exact normal jet; missing pieces are filled in by centered
/// differences at the patch level.
pub trait Chart: Send + Sync {
    fn jet1(&self, s: f64, t: f64) -> Jet1;

    fn jet2(&self, _s: f64, _t: f64) -> Option<Jet2> {
        None
    }

    /// Unit normal and its partials, when the chart knows them exactly.
    ///
    /// The returned normal is the chart's raw orientation; the patch's
    /// orientation sign is applied on top.
    fn normal_jet(&self, _s: f64, _t: f64) -> Option<(Vector3<f64>, Vector3<f64>, Vector3<f64>)> {
        None
    }
}

/// One smooth face of a piecewise surface.
#[derive(Clone)]
pub struct ParametricPatch {
    pub name: String,
    pub chart: Arc<dyn Chart>,
    pub s_range: (f64, f64),
    pub t_range: (f64, f64),
    /// `+1` if the chart's raw normal `X_s x X_t` is outward, `-1` otherwise.
    pub orientation: f64,
}

impl ParametricPatch {
    pub fn new(
        name: impl Into<String>,
        chart: Arc<dyn Chart>,
        s_range: (f64, f64),
        t_range: (f64, f64),
        orientation: f64,
    ) -> Self {
        ParametricPatch {
            name: name.into(),
            chart,
            s_range,
            t_range,
            orientation,
        }
    }

    pub fn span_s(&self) -> f64 {
        self.s_range.1 - self.s_range.0
    }

    pub fn span_t(&self) -> f64 {
        self.t_range.1 - self.t_range.0
    }

    pub fn jet1(&self, s: f64, t: f64) -> Jet1 {
        self.chart.jet1(s, t)
    }

    pub fn point(&self, s: f64, t: f64) -> Vector3<f64> {
        self.chart.jet1(s, t).x
    }

    /// Second derivatives: the chart's analytic ones, or centered
    /// differences of `jet1` at `h = 1e-4` of the domain span.
    pub fn jet2(&self, s: f64, t: f64) -> Jet2 {
        if let Some(j) = self.chart.jet2(s, t) {
            return j;
        }
        let hs = 1e-4 * self.span_s();
        let ht = 1e-4 * self.span_t();
        let jp = self.chart.jet1(s + hs, t);
        let jm = self.chart.jet1(s - hs, t);
        let kp = self.chart.jet1(s, t + ht);
        let km = self.chart.jet1(s, t - ht);
        Jet2 {
            xss: (jp.xs - jm.xs) / (2.0 * hs),
            xst: (kp.xs - km.xs) / (2.0 * ht),
            xtt: (kp.xt - km.xt) / (2.0 * ht),
        }
    }

    /// Outward unit normal and its partials, with the orientation sign
    /// applied.
    pub fn normal_jet(&self, s: f64, t: f64) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        if let Some((n, ns, nt)) = self.chart.normal_jet(s, t) {
            return (
                self.orientation * n,
                self.orientation * ns,
                self.orientation * nt,
            );
        }
        let j1 = self.jet1(s, t);
        let j2 = self.jet2(s, t);
        let u = j1.xs.cross(&j1.xt);
        let us = j2.xss.cross(&j1.xt) + j1.xs.cross(&j2.xst);
        let ut = j2.xst.cross(&j1.xt) + j1.xs.cross(&j2.xtt);
        let norm = u.norm();
        let uhat = u / norm;
        let proj = |v: Vector3<f64>| (v - uhat * uhat.dot(&v)) / norm;
        (
            self.orientation * uhat,
            self.orientation * proj(us),
            self.orientation * proj(ut),
        )
    }

    pub fn normal(&self, s: f64, t: f64) -> Vector3<f64> {
        self.normal_jet(s, t).0
    }

    /// Gauss-Legendre sample grid over the open interior (nodes are
    /// strictly interior, so boundary derivative singularities never enter).
    pub fn quadrature_grid(&self, order: usize) -> Vec<(f64, f64, f64)> {
        let gl = GaussLegendre::new(order);
        let snodes = gl.mapped(self.s_range.0, self.s_range.1);
        let tnodes = gl.mapped(self.t_range.0, self.t_range.1);
        let mut grid = Vec::with_capacity(order * order);
        for &(s, ws) in &snodes {
            for &(t, wt) in &tnodes {
                grid.push((s, t, ws * wt));
            }
        }
        grid
    }

    /// Face energy `int gamma(nu) dS` by tensor Gauss-Legendre quadrature.
    pub fn energy(&self, gamma: &Anisotropy, order: usize) -> f64 {
        let mut total = 0.0;
        for (s, t, w) in self.quadrature_grid(order) {
            let j = self.jet1(s, t);
            let area = j.xs.cross(&j.xt).norm();
            let nu = self.normal(s, t);
            total += w * area * gamma.gamma(&nu);
        }
        total
    }

    /// Scaled copy about the origin; normals are unchanged.
    pub fn scaled(&self, r: f64) -> ParametricPatch {
        ParametricPatch {
            name: self.name.clone(),
            chart: Arc::new(shapes::ScaledChart {
                base: self.chart.clone(),
                factor: r,
            }),
            s_range: self.s_range,
            t_range: self.t_range,
            orientation: self.orientation,
        }
    }

    /// Patch for the normal graph `X + eps xi(nu)`, which shares the base
    /// patch's normal field.
    pub fn expanded(&self, gamma: &Anisotropy, eps: f64) -> ParametricPatch {
        ParametricPatch {
            name: self.name.clone(),
            chart: Arc::new(shapes::ExpandedChart {
                base: self.clone(),
                gamma: gamma.clone(),
                eps,
            }),
            s_range: self.s_range,
            t_range: self.t_range,
            // ExpandedChart returns the outward normal directly.
            orientation: 1.0,
        }
    }
}

pub type CurveFn = dyn Fn(f64) -> Vector3<f64> + Send + Sync;
pub type ParamFn = dyn Fn(f64) -> (f64, f64) + Send + Sync;

/// A curve along which two faces meet.
#[derive(Clone)]
pub struct Edge {
    pub name: String,
    pub curve: Arc<CurveFn>,
    pub tangent: Arc<CurveFn>,
    pub tau_range: (f64, f64),
    /// Patch index on each side.
    pub left: usize,
    pub right: usize,
    /// Map edge parameter to patch coordinates on each side.
    pub left_param: Arc<ParamFn>,
    pub right_param: Arc<ParamFn>,
}

/// Per-sample edge data: traces of the Cahn-Hoffman field from both sides
/// and the edge frame.
#[derive(Debug, Clone, Copy)]
pub struct EdgeTrace {
    pub position: Vector3<f64>,
    pub tangent_unit: Vector3<f64>,
    pub xi_left: Vector3<f64>,
    pub xi_right: Vector3<f64>,
    pub conormal_left: Vector3<f64>,
    pub conormal_right: Vector3<f64>,
    /// Distance from the edge curve to each side's chart point.
    pub position_mismatch: f64,
}

impl Edge {
    pub fn trace(&self, surface: &PiecewiseSurface, gamma: &Anisotropy, tau: f64) -> EdgeTrace {
        let pos = (self.curve)(tau);
        let tan = (self.tangent)(tau);
        let that = tan / tan.norm();

        let side = |patch_idx: usize, param: &Arc<ParamFn>| {
            let (s, t) = param(tau);
            let patch = &surface.patches[patch_idx];
            let nu = patch.normal(s, t);
            let xi = gamma.xi(&nu);
            let x = patch.point(s, t);
            let co = conormal(patch, s, t, &that, &nu);
            (xi, co, (x - pos).norm())
        };
        let (xi_left, conormal_left, mis_l) = side(self.left, &self.left_param);
        let (xi_right, conormal_right, mis_r) = side(self.right, &self.right_param);
        EdgeTrace {
            position: pos,
            tangent_unit: that,
            xi_left,
            xi_right,
            conormal_left,
            conormal_right,
            position_mismatch: mis_l.max(mis_r),
        }
    }
}

/// Outward unit conormal of a patch at a boundary point: tangent to the
/// surface, perpendicular to the edge direction, pointing out of the face.
fn conormal(
    patch: &ParametricPatch,
    s: f64,
    t: f64,
    edge_tangent: &Vector3<f64>,
    nu: &Vector3<f64>,
) -> Vector3<f64> {
    let mut c = edge_tangent.cross(nu);
    c /= c.norm();
    // Step toward the domain center to find the inward direction.
    let j = patch.jet1(s, t);
    let mid_s = 0.5 * (patch.s_range.0 + patch.s_range.1);
    let mid_t = 0.5 * (patch.t_range.0 + patch.t_range.1);
    let inward = (mid_s - s) * j.xs + (mid_t - t) * j.xt;
    if c.dot(&inward) > 0.0 {
        -c
    } else {
        c
    }
}

/// All pointwise geometry at one quadrature sample.
#[derive(Debug, Clone, Copy)]
pub struct SampleFields {
    pub patch: usize,
    pub s: f64,
    pub t: f64,
    pub position: Vector3<f64>,
    pub normal: Vector3<f64>,
    /// Support `q = X . nu`.
    pub support: f64,
    pub gamma: f64,
    pub xi: Vector3<f64>,
    pub e1: Vector3<f64>,
    pub e2: Vector3<f64>,
    /// Shape operator in the `(e1, e2)` frame.
    pub dnu: Matrix2<f64>,
    /// `A = D^2 gamma + gamma I` restricted to the tangent plane.
    pub a: Matrix2<f64>,
    /// `d xi = A . d nu`.
    pub dxi: Matrix2<f64>,
    /// `-trace(d xi)`.
    pub lambda: f64,
    /// Independent recomputation `-g^{ij} X_i . xi_j`.
    pub lambda_alt: f64,
    /// Gauss curvature `det(d nu)`.
    pub k_sigma: f64,
    /// Wulff Gauss curvature `1 / det A` at the sample normal.
    pub kw: f64,
    pub kw_singular: bool,
    pub det_dxi: f64,
    /// `|X_s x X_t|`.
    pub area_element: f64,
    /// Quadrature weight including the area element.
    pub weight: f64,
}

/// Field samples over a surface, with immersion failures dropped.
#[derive(Debug, Clone)]
pub struct GeometryFields {
    pub samples: Vec<SampleFields>,
    pub skipped: usize,
}

impl GeometryFields {
    /// Weighted integral of a pointwise function over the sampled surface.
    pub fn integrate(&self, f: impl Fn(&SampleFields) -> f64) -> f64 {
        self.samples.iter().map(|p| p.weight * f(p)).sum()
    }

    pub fn area(&self) -> f64 {
        self.integrate(|_| 1.0)
    }

    pub fn energy(&self) -> f64 {
        self.integrate(|p| p.gamma)
    }

    /// `(1/3) int q dS`.
    pub fn volume(&self) -> f64 {
        self.integrate(|p| p.support) / 3.0
    }

    /// Area-weighted mean of `Lambda` and max deviation from it.
    pub fn lambda_stats(&self) -> (f64, f64) {
        let area = self.area();
        let mean = self.integrate(|p| p.lambda) / area;
        let dev = self
            .samples
            .iter()
            .map(|p| (p.lambda - mean).abs())
            .fold(0.0, f64::max);
        (mean, dev)
    }
}

/// Per-face equilibrium statistics.
#[derive(Debug, Clone)]
pub struct FaceEquilibrium {
    pub patch: usize,
    pub name: String,
    pub lambda_mean: f64,
    pub lambda_max_dev: f64,
    pub samples: usize,
}

/// Per-edge balance statistics.
#[derive(Debug, Clone)]
pub struct EdgeEquilibrium {
    pub name: String,
    pub max_xi_jump: f64,
    /// Max of `|(xi_1 - xi_2) x t|` with unit edge tangent.
    pub max_cross_residual: f64,
    pub max_position_mismatch: f64,
}

/// Output of [`PiecewiseSurface::equilibrium_check`].
#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    pub faces: Vec<FaceEquilibrium>,
    pub edges: Vec<EdgeEquilibrium>,
    /// Global area-weighted mean of `Lambda`.
    pub lambda_mean: f64,
    /// Max over all samples of `|Lambda - mean|`.
    pub lambda_max_dev: f64,
    pub lambda_tolerance: f64,
    pub edge_tolerance: f64,
    pub lambda_constant: bool,
    pub edges_balanced: bool,
    pub skipped_samples: usize,
}

impl EquilibriumReport {
    pub fn passed(&self) -> bool {
        self.lambda_constant && self.edges_balanced
    }
}

/// A surface assembled from smooth faces and edge records.
#[derive(Clone)]
pub struct PiecewiseSurface {
    pub patches: Vec<ParametricPatch>,
    pub edges: Vec<Edge>,
    pub closed: bool,
    pub genus: Option<u32>,
}

impl PiecewiseSurface {
    pub fn closed_from_patches(patches: Vec<ParametricPatch>, edges: Vec<Edge>) -> Self {
        PiecewiseSurface {
            patches,
            edges,
            closed: true,
            genus: Some(0),
        }
    }

    /// All pointwise fields at one parameter point.
    pub fn fields_at(
        &self,
        gamma: &Anisotropy,
        patch_idx: usize,
        s: f64,
        t: f64,
    ) -> Result<SampleFields> {
        self.fields_at_weighted(gamma, patch_idx, s, t, 1.0)
    }

    fn fields_at_weighted(
        &self,
        gamma: &Anisotropy,
        patch_idx: usize,
        s: f64,
        t: f64,
        quad_weight: f64,
    ) -> Result<SampleFields> {
        let patch = &self.patches[patch_idx];
        let j = patch.jet1(s, t);
        let cross = j.xs.cross(&j.xt);
        let area_element = cross.norm();
        if area_element <= IMMERSION_EPS {
            return Err(Error::ImmersionFailure { patch: patch_idx, s, t });
        }
        let (nu, nu_s, nu_t) = patch.normal_jet(s, t);

        // Right-handed orthonormal tangent frame.
        let e1 = j.xs / j.xs.norm();
        let mut e2 = j.xt - e1 * e1.dot(&j.xt);
        e2 /= e2.norm();
        if e1.cross(&e2).dot(&nu) < 0.0 {
            e2 = -e2;
        }

        // Shape operator: d nu in frame coordinates. With T = [xs xt] and
        // N = [nu_s nu_t], the matrix is (P^T N) (P^T T)^{-1}.
        let r = Matrix2::new(e1.dot(&j.xs), e1.dot(&j.xt), e2.dot(&j.xs), e2.dot(&j.xt));
        let n = Matrix2::new(e1.dot(&nu_s), e1.dot(&nu_t), e2.dot(&nu_s), e2.dot(&nu_t));
        let r_inv = r
            .try_inverse()
            .ok_or(Error::ImmersionFailure { patch: patch_idx, s, t })?;
        let dnu = n * r_inv;

        let (gval, xi, hess) = gamma.extension_jet(&nu);
        let a = crate::geom::restrict_to_plane(&hess, &e1, &e2);
        let dxi = a * dnu;
        let lambda = -(dxi[(0, 0)] + dxi[(1, 1)]);

        // Independent route: -g^{ij} X_i . xi_j with xi_j = Hess . nu_j.
        let xi_s = hess * nu_s;
        let xi_t = hess * nu_t;
        let g11 = j.xs.dot(&j.xs);
        let g12 = j.xs.dot(&j.xt);
        let g22 = j.xt.dot(&j.xt);
        let det_g = g11 * g22 - g12 * g12;
        let lambda_alt = -(g22 * j.xs.dot(&xi_s) - g12 * (j.xs.dot(&xi_t) + j.xt.dot(&xi_s))
            + g11 * j.xt.dot(&xi_t))
            / det_g;

        let det_a = a.determinant();
        let kw_singular = det_a.abs() < crate::anisotropy::KW_SINGULAR_DET;
        Ok(SampleFields {
            patch: patch_idx,
            s,
            t,
            position: j.x,
            normal: nu,
            support: j.x.dot(&nu),
            gamma: gval,
            xi,
            e1,
            e2,
            dnu,
            a,
            dxi,
            lambda,
            lambda_alt,
            k_sigma: dnu.determinant(),
            kw: 1.0 / det_a,
            kw_singular,
            det_dxi: dxi.determinant(),
            area_element,
            weight: quad_weight * area_element,
        })
    }

    /// Fields at every tensor quadrature node of every patch.
    ///
    /// Samples where the chart fails to immerse are dropped and counted.
    pub fn fields(&self, gamma: &Anisotropy, order: usize) -> GeometryFields {
        let mut samples = Vec::new();
        let mut skipped = 0;
        for (idx, patch) in self.patches.iter().enumerate() {
            for (s, t, w) in patch.quadrature_grid(order) {
                match self.fields_at_weighted(gamma, idx, s, t, w) {
                    Ok(f) => samples.push(f),
                    Err(_) => skipped += 1,
                }
            }
        }
        GeometryFields { samples, skipped }
    }

    pub fn energy(&self, gamma: &Anisotropy, order: usize) -> f64 {
        self.patches
            .iter()
            .map(|p| p.energy(gamma, order))
            .sum()
    }

    pub fn area(&self, order: usize) -> f64 {
        let mut total = 0.0;
        for patch in &self.patches {
            for (s, t, w) in patch.quadrature_grid(order) {
                let j = patch.jet1(s, t);
                total += w * j.xs.cross(&j.xt).norm();
            }
        }
        total
    }

    /// Enclosed volume `(1/3) int X . nu dS` of a closed surface.
    pub fn volume(&self, order: usize) -> Result<f64> {
        if !self.closed {
            return Err(Error::NotClosed {
                operation: "volume",
            });
        }
        let mut total = 0.0;
        for patch in &self.patches {
            for (s, t, w) in patch.quadrature_grid(order) {
                let j = patch.jet1(s, t);
                let nu = patch.normal(s, t);
                total += w * j.xs.cross(&j.xt).norm() * j.x.dot(&nu);
            }
        }
        Ok(total / 3.0)
    }

    /// `(1/4 pi) int K dS`, plus the rounded integer alongside.
    pub fn degree_of_gauss_map(&self, gamma: &Anisotropy, order: usize) -> Result<(f64, i64)> {
        if !self.closed {
            return Err(Error::NotClosed {
                operation: "gauss map degree",
            });
        }
        let fields = self.fields(gamma, order);
        let raw = fields.integrate(|p| p.k_sigma) / (4.0 * std::f64::consts::PI);
        Ok((raw, raw.round() as i64))
    }

    /// Jacobi operator `L[psi] = div(A grad psi) + <d xi, d nu> psi` at one
    /// interior point, by nested centered differences at spacing `h`.
    ///
    /// `psi` is a scalar field on the patch's parameter domain. The sample
    /// must clear the boundary by `2h` in each direction.
    pub fn jacobi_apply(
        &self,
        gamma: &Anisotropy,
        patch_idx: usize,
        psi: &dyn Fn(f64, f64) -> f64,
        s: f64,
        t: f64,
        h: f64,
    ) -> Result<f64> {
        let patch = &self.patches[patch_idx];
        let required = 2.0 * h;
        let margin = (s - patch.s_range.0)
            .min(patch.s_range.1 - s)
            .min(t - patch.t_range.0)
            .min(patch.t_range.1 - t);
        if margin < required {
            return Err(Error::BoundaryMargin {
                s,
                t,
                margin,
                required,
            });
        }

        // Y = A grad psi as an ambient tangent vector; the extension Hessian
        // annihilates nu, so applying it to the surface gradient realizes A.
        let field = |s: f64, t: f64| -> Vector3<f64> {
            let j = patch.jet1(s, t);
            let dpsi_s = (psi(s + h, t) - psi(s - h, t)) / (2.0 * h);
            let dpsi_t = (psi(s, t + h) - psi(s, t - h)) / (2.0 * h);
            let g11 = j.xs.dot(&j.xs);
            let g12 = j.xs.dot(&j.xt);
            let g22 = j.xt.dot(&j.xt);
            let det = g11 * g22 - g12 * g12;
            let grad = ((g22 * dpsi_s - g12 * dpsi_t) * j.xs
                + (g11 * dpsi_t - g12 * dpsi_s) * j.xt)
                / det;
            let nu = patch.normal(s, t);
            let (_, _, hess) = gamma.extension_jet(&nu);
            hess * grad
        };
        let div = self.surface_divergence_of(patch_idx, &field, s, t, h)?;

        let center = self.fields_at(gamma, patch_idx, s, t)?;
        let frob = center.dxi.component_mul(&center.dnu).sum();
        Ok(div + frob * psi(s, t))
    }

    /// Surface divergence of an ambient tangent field given on the chart,
    /// via `(1/sqrt g) d_i (sqrt g Y^i)` with centered differences.
    pub fn surface_divergence_of(
        &self,
        patch_idx: usize,
        field: &dyn Fn(f64, f64) -> Vector3<f64>,
        s: f64,
        t: f64,
        h: f64,
    ) -> Result<f64> {
        let patch = &self.patches[patch_idx];
        let density = |s: f64, t: f64| -> (f64, f64) {
            let j = patch.jet1(s, t);
            let y = field(s, t);
            let g11 = j.xs.dot(&j.xs);
            let g12 = j.xs.dot(&j.xt);
            let g22 = j.xt.dot(&j.xt);
            let det = g11 * g22 - g12 * g12;
            let sqrt_g = det.sqrt();
            let ys = y.dot(&j.xs);
            let yt = y.dot(&j.xt);
            let y1 = (g22 * ys - g12 * yt) / det;
            let y2 = (g11 * yt - g12 * ys) / det;
            (sqrt_g * y1, sqrt_g * y2)
        };
        let j0 = patch.jet1(s, t);
        let sqrt_g0 = j0.xs.cross(&j0.xt).norm();
        if sqrt_g0 <= IMMERSION_EPS {
            return Err(Error::ImmersionFailure { patch: patch_idx, s, t });
        }
        let (p1, _) = density(s + h, t);
        let (m1, _) = density(s - h, t);
        let (_, p2) = density(s, t + h);
        let (_, m2) = density(s, t - h);
        Ok(((p1 - m1) / (2.0 * h) + (p2 - m2) / (2.0 * h)) / sqrt_g0)
    }

    /// Check `Lambda` constancy across faces and force balance along edges.
    pub fn equilibrium_check(
        &self,
        gamma: &Anisotropy,
        order: usize,
        edge_samples: usize,
    ) -> EquilibriumReport {
        let mut faces = Vec::new();
        let mut all = GeometryFields {
            samples: Vec::new(),
            skipped: 0,
        };
        for (idx, patch) in self.patches.iter().enumerate() {
            let mut face_fields = GeometryFields {
                samples: Vec::new(),
                skipped: 0,
            };
            for (s, t, w) in patch.quadrature_grid(order) {
                match self.fields_at_weighted(gamma, idx, s, t, w) {
                    Ok(f) => face_fields.samples.push(f),
                    Err(_) => face_fields.skipped += 1,
                }
            }
            let (mean, dev) = face_fields.lambda_stats();
            faces.push(FaceEquilibrium {
                patch: idx,
                name: patch.name.clone(),
                lambda_mean: mean,
                lambda_max_dev: dev,
                samples: face_fields.samples.len(),
            });
            all.skipped += face_fields.skipped;
            all.samples.append(&mut face_fields.samples);
        }
        let (lambda_mean, lambda_max_dev) = all.lambda_stats();

        let gl = GaussLegendre::new(edge_samples.max(2));
        let mut edges = Vec::new();
        for edge in &self.edges {
            let mut max_jump = 0.0_f64;
            let mut max_cross = 0.0_f64;
            let mut max_mismatch = 0.0_f64;
            for &(tau, _) in gl.mapped(edge.tau_range.0, edge.tau_range.1).iter() {
                let tr = edge.trace(self, gamma, tau);
                let jump = tr.xi_left - tr.xi_right;
                max_jump = max_jump.max(jump.norm());
                max_cross = max_cross.max(jump.cross(&tr.tangent_unit).norm());
                max_mismatch = max_mismatch.max(tr.position_mismatch);
            }
            edges.push(EdgeEquilibrium {
                name: edge.name.clone(),
                max_xi_jump: max_jump,
                max_cross_residual: max_cross,
                max_position_mismatch: max_mismatch,
            });
        }

        let lambda_tolerance = 1e-6 * lambda_mean.abs() + 1e-9;
        let edge_tolerance = 1e-8;
        let lambda_constant = lambda_max_dev <= lambda_tolerance;
        let edges_balanced = edges
            .iter()
            .all(|e| e.max_cross_residual <= edge_tolerance);
        EquilibriumReport {
            faces,
            edges,
            lambda_mean,
            lambda_max_dev,
            lambda_tolerance,
            edge_tolerance,
            lambda_constant,
            edges_balanced,
            skipped_samples: all.skipped,
        }
    }

    /// Scaled copy about the origin.
    pub fn scaled(&self, r: f64) -> PiecewiseSurface {
        assert!(r > 0.0, "scale factor must be positive");
        let patches: Vec<_> = self.patches.iter().map(|p| p.scaled(r)).collect();
        let edges = self
            .edges
            .iter()
            .map(|e| {
                let curve = e.curve.clone();
                let tangent = e.tangent.clone();
                Edge {
                    name: e.name.clone(),
                    curve: Arc::new(move |tau| r * curve(tau)),
                    tangent: Arc::new(move |tau| r * tangent(tau)),
                    tau_range: e.tau_range,
                    left: e.left,
                    right: e.right,
                    left_param: e.left_param.clone(),
                    right_param: e.right_param.clone(),
                }
            })
            .collect();
        PiecewiseSurface {
            patches,
            edges,
            closed: self.closed,
            genus: self.genus,
        }
    }

    /// The normal graph `X + eps xi(nu)` over this surface.
    ///
    /// Edge curves are carried over through the left patch; on surfaces with
    /// continuous `xi` (the only ones this map is used on) both sides agree.
    pub fn expanded(&self, gamma: &Anisotropy, eps: f64) -> PiecewiseSurface {
        let patches: Vec<_> = self
            .patches
            .iter()
            .map(|p| p.expanded(gamma, eps))
            .collect();
        let edges = self
            .edges
            .iter()
            .map(|e| {
                let chart = patches[e.left].chart.clone();
                let left_param = e.left_param.clone();
                let chart2 = chart.clone();
                let left_param2 = e.left_param.clone();
                let span = e.tau_range.1 - e.tau_range.0;
                let curve = move |tau: f64| {
                    let (s, t) = left_param(tau);
                    chart.jet1(s, t).x
                };
                let tangent = move |tau: f64| {
                    let h = 1e-6 * span;
                    let at = |tau: f64| {
                        let (s, t) = left_param2(tau);
                        chart2.jet1(s, t).x
                    };
                    (at(tau + h) - at(tau - h)) / (2.0 * h)
                };
                Edge {
                    name: e.name.clone(),
                    curve: Arc::new(curve),
                    tangent: Arc::new(tangent),
                    tau_range: e.tau_range,
                    left: e.left,
                    right: e.right,
                    left_param: e.left_param.clone(),
                    right_param: e.right_param.clone(),
                }
            })
            .collect();
        PiecewiseSurface {
            patches,
            edges,
            closed: self.closed,
            genus: self.genus,
        }
    }

    /// Max over edge samples of the chart/curve position mismatch, for
    /// validating assembled surfaces.
    pub fn max_edge_mismatch(&self, gamma: &Anisotropy, samples: usize) -> f64 {
        let gl = GaussLegendre::new(samples.max(2));
        let mut worst = 0.0_f64;
        for edge in &self.edges {
            for &(tau, _) in gl.mapped(edge.tau_range.0, edge.tau_range.1).iter() {
                worst = worst.max(edge.trace(self, gamma, tau).position_mismatch);
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::shapes;
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn iso() -> Anisotropy {
        Anisotropy::isotropic()
    }

    #[test]
    fn unit_sphere_fields_match_closed_forms() {
        let sph = shapes::sphere(1.0);
        let gamma = iso();
        let fields = sph.fields(&gamma, 16);
        assert_eq!(fields.skipped, 0);
        for p in &fields.samples {
            assert_relative_eq!(p.lambda, -2.0, epsilon = 1e-10);
            assert_relative_eq!(p.lambda_alt, -2.0, epsilon = 1e-8);
            assert_relative_eq!(p.k_sigma, 1.0, epsilon = 1e-10);
            assert_relative_eq!(p.kw, 1.0, epsilon = 1e-10);
            assert_relative_eq!(p.support, 1.0, epsilon = 1e-12);
            assert_relative_eq!(p.det_dxi, 1.0, epsilon = 1e-10);
            assert!((p.dnu - Matrix2::identity()).norm() < 1e-9);
            assert!((p.normal - p.position).norm() < 1e-12);
        }
    }

    #[test]
    fn sphere_energy_and_volume_match_closed_forms() {
        let sph = shapes::sphere(1.0);
        let gamma = iso();
        assert_relative_eq!(sph.energy(&gamma, 64), 4.0 * PI, max_relative = 1e-9);
        assert_relative_eq!(sph.volume(64).unwrap(), 4.0 * PI / 3.0, max_relative = 1e-9);
    }

    #[test]
    fn scaling_laws_hold() {
        let base = shapes::ellipsoid(1.0, 1.0, 2.0);
        let gamma = iso();
        let f0 = base.energy(&gamma, 32);
        let v0 = base.volume(32).unwrap();
        for r in [0.5, 2.0, 7.0] {
            let scaled = base.scaled(r);
            assert_relative_eq!(scaled.energy(&gamma, 32), r * r * f0, max_relative = 1e-8);
            assert_relative_eq!(scaled.volume(32).unwrap(), r.powi(3) * v0, max_relative = 1e-8);
            let p = scaled.fields_at(&gamma, 0, 0.9, 1.3).unwrap();
            let p0 = base.fields_at(&gamma, 0, 0.9, 1.3).unwrap();
            assert_relative_eq!(p.lambda, p0.lambda / r, max_relative = 1e-8);
        }
    }

    #[test]
    fn ellipsoid_mean_curvature_matches_closed_form() {
        // Lambda under the area functional is -2H with H the mean curvature.
        let a = 1.0;
        let c = 2.0;
        let surf = shapes::ellipsoid(a, a, c);
        let gamma = iso();
        for &(s, t) in &[(PI / 2.0, 0.3), (1.1, 2.0), (0.4, 4.9)] {
            let p = surf.fields_at(&gamma, 0, s, t).unwrap();
            // Closed form for a spheroid in polar parametrization.
            let (sin, cos) = s.sin_cos();
            let w2 = a * a * cos * cos + c * c * sin * sin;
            let h_mean = c * (a * a + w2) / (2.0 * a * w2.powf(1.5));
            assert_relative_eq!(p.lambda, -2.0 * h_mean, max_relative = 1e-8);
            assert_relative_eq!(p.lambda_alt, p.lambda, max_relative = 1e-6);
            // Gauss curvature closed form.
            let k = (c / w2).powi(2);
            assert_relative_eq!(p.k_sigma, k, max_relative = 1e-8);
        }
    }

    #[test]
    fn frame_rotation_leaves_invariants_fixed() {
        let surf = shapes::ellipsoid(1.0, 1.3, 2.0);
        let q = nalgebra::Matrix3::from_diagonal(&Vector3::new(1.0, 1.5, 4.0));
        let gamma = Anisotropy::quadratic(q).unwrap();
        let p = surf.fields_at(&gamma, 0, 1.0, 0.7).unwrap();
        // Recompute the pair (dnu, a) in a rotated frame and compare the
        // invariants.
        let angle = 0.63_f64;
        let (sin, cos) = angle.sin_cos();
        let rot = Matrix2::new(cos, -sin, sin, cos);
        let dnu_r = rot.transpose() * p.dnu * rot;
        let a_r = rot.transpose() * p.a * rot;
        let dxi_r = a_r * dnu_r;
        assert_relative_eq!(-(dxi_r.trace()), p.lambda, max_relative = 1e-12);
        assert_relative_eq!(dxi_r.determinant(), p.det_dxi, max_relative = 1e-12);
        // dnu symmetric in the orthonormal frame.
        assert!((p.dnu[(0, 1)] - p.dnu[(1, 0)]).abs() < 1e-8);
        // det(dxi) = K_Sigma / kw.
        assert_relative_eq!(p.det_dxi, p.k_sigma / p.kw, max_relative = 1e-8);
    }

    #[test]
    fn volume_errors_on_open_surface() {
        let mut surf = shapes::sphere(1.0);
        surf.closed = false;
        assert!(matches!(
            surf.volume(8),
            Err(Error::NotClosed { .. })
        ));
    }

    #[test]
    fn degree_is_one_for_sphere_and_zero_for_torus() {
        let gamma = iso();
        let (raw, rounded) = shapes::sphere(1.0)
            .degree_of_gauss_map(&gamma, 32)
            .unwrap();
        assert_relative_eq!(raw, 1.0, epsilon = 1e-6);
        assert_eq!(rounded, 1);
        let (raw, rounded) = shapes::torus(2.0, 0.7)
            .degree_of_gauss_map(&gamma, 48)
            .unwrap();
        assert!(raw.abs() < 1e-4);
        assert_eq!(rounded, 0);
    }

    #[test]
    fn jacobi_on_unit_sphere_matches_closed_forms() {
        let sph = shapes::sphere(1.0);
        let gamma = iso();
        let h = 1e-3 * PI;
        // L[1] = |dnu|^2 = 2.
        let l_one = sph
            .jacobi_apply(&gamma, 0, &|_, _| 1.0, 1.2, 2.1, h)
            .unwrap();
        assert_relative_eq!(l_one, 2.0, epsilon = 1e-5);
        // Degree-one spherical harmonic: L[psi] = (-2 + 2) psi = 0.
        let psi = |s: f64, t: f64| s.sin() * t.cos();
        let l_psi = sph.jacobi_apply(&gamma, 0, &psi, 1.2, 2.1, h).unwrap();
        assert!(l_psi.abs() < 1e-5, "got {l_psi}");
    }

    #[test]
    fn jacobi_is_linear() {
        let surf = shapes::ellipsoid(1.0, 1.0, 2.0);
        let q = nalgebra::Matrix3::from_diagonal(&Vector3::new(1.0, 2.0, 3.0));
        let gamma = Anisotropy::quadratic(q).unwrap();
        let h = 1e-3 * PI;
        let (s, t) = (1.3, 2.4);
        let p1 = |s: f64, t: f64| (s - 1.0).powi(2) + 0.3 * t;
        let p2 = |s: f64, t: f64| (s * 0.7).cos() * (t * 0.5).sin();
        let combo = |s: f64, t: f64| 2.0 * p1(s, t) - 3.0 * p2(s, t);
        let l1 = surf.jacobi_apply(&gamma, 0, &p1, s, t, h).unwrap();
        let l2 = surf.jacobi_apply(&gamma, 0, &p2, s, t, h).unwrap();
        let lc = surf.jacobi_apply(&gamma, 0, &combo, s, t, h).unwrap();
        assert_relative_eq!(lc, 2.0 * l1 - 3.0 * l2, epsilon = 1e-8);
    }

    #[test]
    fn jacobi_rejects_boundary_samples() {
        let sph = shapes::sphere(1.0);
        let gamma = iso();
        let err = sph.jacobi_apply(&gamma, 0, &|_, _| 1.0, 1e-4, 2.0, 1e-2);
        assert!(matches!(err, Err(Error::BoundaryMargin { .. })));
    }

    #[test]
    fn equilibrium_passes_on_sphere_fails_on_ellipsoid() {
        let gamma = iso();
        let report = shapes::sphere(1.0).equilibrium_check(&gamma, 16, 8);
        assert!(report.passed());
        assert_relative_eq!(report.lambda_mean, -2.0, epsilon = 1e-9);

        let report = shapes::ellipsoid(1.0, 1.0, 2.0).equilibrium_check(&gamma, 16, 8);
        assert!(!report.passed());
        assert!(!report.lambda_constant);
    }

    #[test]
    fn expansion_of_sphere_is_concentric_sphere() {
        let gamma = iso();
        let sph = shapes::sphere(1.0);
        let eps = 0.25;
        let grown = sph.expanded(&gamma, eps);
        for &(s, t) in &[(0.4, 0.9), (1.5, 3.3), (2.7, 5.9)] {
            let p = grown.fields_at(&gamma, 0, s, t).unwrap();
            assert_relative_eq!(p.position.norm(), 1.0 + eps, epsilon = 1e-12);
            assert_relative_eq!(p.lambda, -2.0 / (1.0 + eps), epsilon = 1e-9);
            assert!((p.normal - p.position / p.position.norm()).norm() < 1e-10);
        }
        assert_relative_eq!(
            grown.energy(&gamma, 48),
            4.0 * PI * (1.0 + eps) * (1.0 + eps),
            max_relative = 1e-9
        );
    }

    #[test]
    fn orientation_flip_negates_lambda_on_sphere() {
        let mut sph = shapes::sphere(1.0);
        sph.patches[0].orientation = -1.0;
        let gamma = iso();
        let p = sph.fields_at(&gamma, 0, 1.0, 1.0).unwrap();
        assert_relative_eq!(p.lambda, 2.0, epsilon = 1e-10);
    }
}
