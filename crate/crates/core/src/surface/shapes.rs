//! Built-in charts and surface constructors: spheres, ellipsoids, tori,
//! normal-parametrized convex bodies, capped lens bodies, product bodies,
//! and the generic wrappers (scaled, rotated, expanded, varied).

use super::{Chart, Edge, Jet1, Jet2, ParametricPatch, PiecewiseSurface};
use crate::anisotropy::Anisotropy;
use crate::curve::PlanarCurve;
use crate::error::Error;
use crate::Result;
use nalgebra::{Matrix3, Vector3};
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

/// Sphere in polar angles: `s` is the colatitude, `t` the longitude.
pub struct SphereChart {
    pub radius: f64,
    pub center: Vector3<f64>,
}

impl Chart for SphereChart {
    fn jet1(&self, s: f64, t: f64) -> Jet1 {
        let r = self.radius;
        let (ss, cs) = s.sin_cos();
        let (st, ct) = t.sin_cos();
        Jet1 {
            x: self.center + r * Vector3::new(ss * ct, ss * st, cs),
            xs: r * Vector3::new(cs * ct, cs * st, -ss),
            xt: r * Vector3::new(-ss * st, ss * ct, 0.0),
        }
    }

    fn jet2(&self, s: f64, t: f64) -> Option<Jet2> {
        let r = self.radius;
        let (ss, cs) = s.sin_cos();
        let (st, ct) = t.sin_cos();
        Some(Jet2 {
            xss: r * Vector3::new(-ss * ct, -ss * st, -cs),
            xst: r * Vector3::new(-cs * st, cs * ct, 0.0),
            xtt: r * Vector3::new(-ss * ct, -ss * st, 0.0),
        })
    }

    fn normal_jet(&self, s: f64, t: f64) -> Option<(Vector3<f64>, Vector3<f64>, Vector3<f64>)> {
        let j = self.jet1(s, t);
        Some((
            (j.x - self.center) / self.radius,
            j.xs / self.radius,
            j.xt / self.radius,
        ))
    }
}

/// Axis-aligned ellipsoid in polar angles.
pub struct EllipsoidChart {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Chart for EllipsoidChart {
    fn jet1(&self, s: f64, t: f64) -> Jet1 {
        let (ss, cs) = s.sin_cos();
        let (st, ct) = t.sin_cos();
        Jet1 {
            x: Vector3::new(self.a * ss * ct, self.b * ss * st, self.c * cs),
            xs: Vector3::new(self.a * cs * ct, self.b * cs * st, -self.c * ss),
            xt: Vector3::new(-self.a * ss * st, self.b * ss * ct, 0.0),
        }
    }

    fn jet2(&self, s: f64, t: f64) -> Option<Jet2> {
        let (ss, cs) = s.sin_cos();
        let (st, ct) = t.sin_cos();
        Some(Jet2 {
            xss: Vector3::new(-self.a * ss * ct, -self.b * ss * st, -self.c * cs),
            xst: Vector3::new(-self.a * cs * st, self.b * cs * ct, 0.0),
            xtt: Vector3::new(-self.a * ss * ct, -self.b * ss * st, 0.0),
        })
    }
}

/// Torus of revolution about the z-axis; `s` runs around the tube.
pub struct TorusChart {
    pub major: f64,
    pub minor: f64,
}

impl Chart for TorusChart {
    fn jet1(&self, s: f64, t: f64) -> Jet1 {
        let (ss, cs) = s.sin_cos();
        let (st, ct) = t.sin_cos();
        let w = self.major + self.minor * cs;
        Jet1 {
            x: Vector3::new(w * ct, w * st, self.minor * ss),
            xs: Vector3::new(-self.minor * ss * ct, -self.minor * ss * st, self.minor * cs),
            xt: Vector3::new(-w * st, w * ct, 0.0),
        }
    }

    fn jet2(&self, s: f64, t: f64) -> Option<Jet2> {
        let (ss, cs) = s.sin_cos();
        let (st, ct) = t.sin_cos();
        let w = self.major + self.minor * cs;
        Some(Jet2 {
            xss: Vector3::new(-self.minor * cs * ct, -self.minor * cs * st, -self.minor * ss),
            xst: Vector3::new(self.minor * ss * st, -self.minor * ss * ct, 0.0),
            xtt: Vector3::new(-w * ct, -w * st, 0.0),
        })
    }
}

/// Convex body parametrized by its normal direction: `X = xi(n(s, t))` with
/// `n` the polar parametrization of the unit sphere. The normal jet is exact
/// by construction, which is what makes this chart useful wherever the
/// energy density is smooth and strictly stable.
pub struct GaussMapChart {
    pub gamma: Anisotropy,
}

fn sphere_dir_jet(s: f64, t: f64) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let (ss, cs) = s.sin_cos();
    let (st, ct) = t.sin_cos();
    (
        Vector3::new(ss * ct, ss * st, cs),
        Vector3::new(cs * ct, cs * st, -ss),
        Vector3::new(-ss * st, ss * ct, 0.0),
    )
}

impl Chart for GaussMapChart {
    fn jet1(&self, s: f64, t: f64) -> Jet1 {
        let (n, ns, nt) = sphere_dir_jet(s, t);
        let (_, xi, hess) = self.gamma.extension_jet(&n);
        Jet1 {
            x: xi,
            xs: hess * ns,
            xt: hess * nt,
        }
    }

    fn normal_jet(&self, s: f64, t: f64) -> Option<(Vector3<f64>, Vector3<f64>, Vector3<f64>)> {
        Some(sphere_dir_jet(s, t))
    }
}

/// Rigid rotation of another chart.
pub struct RotatedChart {
    pub base: Arc<dyn Chart>,
    pub rot: Matrix3<f64>,
}

impl Chart for RotatedChart {
    fn jet1(&self, s: f64, t: f64) -> Jet1 {
        let j = self.base.jet1(s, t);
        Jet1 {
            x: self.rot * j.x,
            xs: self.rot * j.xs,
            xt: self.rot * j.xt,
        }
    }

    fn jet2(&self, s: f64, t: f64) -> Option<Jet2> {
        self.base.jet2(s, t).map(|j| Jet2 {
            xss: self.rot * j.xss,
            xst: self.rot * j.xst,
            xtt: self.rot * j.xtt,
        })
    }

    fn normal_jet(&self, s: f64, t: f64) -> Option<(Vector3<f64>, Vector3<f64>, Vector3<f64>)> {
        self.base
            .normal_jet(s, t)
            .map(|(n, ns, nt)| (self.rot * n, self.rot * ns, self.rot * nt))
    }
}

/// Dilation of another chart about the origin; normals are unchanged.
pub struct ScaledChart {
    pub base: Arc<dyn Chart>,
    pub factor: f64,
}

impl Chart for ScaledChart {
    fn jet1(&self, s: f64, t: f64) -> Jet1 {
        let j = self.base.jet1(s, t);
        Jet1 {
            x: self.factor * j.x,
            xs: self.factor * j.xs,
            xt: self.factor * j.xt,
        }
    }

    fn jet2(&self, s: f64, t: f64) -> Option<Jet2> {
        self.base.jet2(s, t).map(|j| Jet2 {
            xss: self.factor * j.xss,
            xst: self.factor * j.xst,
            xtt: self.factor * j.xtt,
        })
    }

    fn normal_jet(&self, s: f64, t: f64) -> Option<(Vector3<f64>, Vector3<f64>, Vector3<f64>)> {
        self.base.normal_jet(s, t)
    }
}

/// The normal graph `X + eps xi(nu)` over a base patch.
///
/// Pushing along the Cahn-Hoffman field does not change the normal field
/// (the tangent plane is transported in parallel), so the chart reports the
/// base patch's outward normal exactly; wrap it in a patch with
/// orientation `+1`.
pub struct ExpandedChart {
    pub base: ParametricPatch,
    pub gamma: Anisotropy,
    pub eps: f64,
}

impl Chart for ExpandedChart {
    fn jet1(&self, s: f64, t: f64) -> Jet1 {
        let j = self.base.jet1(s, t);
        let (nu, nu_s, nu_t) = self.base.normal_jet(s, t);
        let (_, xi, hess) = self.gamma.extension_jet(&nu);
        Jet1 {
            x: j.x + self.eps * xi,
            xs: j.xs + self.eps * (hess * nu_s),
            xt: j.xt + self.eps * (hess * nu_t),
        }
    }

    fn normal_jet(&self, s: f64, t: f64) -> Option<(Vector3<f64>, Vector3<f64>, Vector3<f64>)> {
        Some(self.base.normal_jet(s, t))
    }
}

pub type DeltaJetFn =
    dyn Fn(f64, f64) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) + Send + Sync;

/// `X + eps delta(s, t)` for an arbitrary variation field with analytic
/// partials.
pub struct VariedChart {
    pub base: Arc<dyn Chart>,
    pub delta: Arc<DeltaJetFn>,
    pub eps: f64,
}

impl Chart for VariedChart {
    fn jet1(&self, s: f64, t: f64) -> Jet1 {
        let j = self.base.jet1(s, t);
        let (d, ds, dt) = (self.delta)(s, t);
        Jet1 {
            x: j.x + self.eps * d,
            xs: j.xs + self.eps * ds,
            xt: j.xt + self.eps * dt,
        }
    }
}

/// Product body chart `(u(s) alpha(t), u(s) beta(t), v(s))` built from a
/// profile curve `(u, v)` and a cross-section curve `(alpha, beta)`.
pub struct ProductChart {
    pub profile: Arc<PlanarCurve>,
    pub cross: Arc<PlanarCurve>,
}

impl Chart for ProductChart {
    fn jet1(&self, s: f64, t: f64) -> Jet1 {
        let p = self.profile.point(s);
        let dp = self.profile.velocity(s);
        let c = self.cross.point(t);
        let dc = self.cross.velocity(t);
        Jet1 {
            x: Vector3::new(p.x * c.x, p.x * c.y, p.y),
            xs: Vector3::new(dp.x * c.x, dp.x * c.y, dp.y),
            xt: Vector3::new(p.x * dc.x, p.x * dc.y, 0.0),
        }
    }

    fn jet2(&self, s: f64, t: f64) -> Option<Jet2> {
        let p = self.profile.point(s);
        let dp = self.profile.velocity(s);
        let ddp = self.profile.acceleration(s);
        let c = self.cross.point(t);
        let dc = self.cross.velocity(t);
        let ddc = self.cross.acceleration(t);
        Some(Jet2 {
            xss: Vector3::new(ddp.x * c.x, ddp.x * c.y, ddp.y),
            xst: Vector3::new(dp.x * dc.x, dp.x * dc.y, 0.0),
            xtt: Vector3::new(p.x * ddc.x, p.x * ddc.y, 0.0),
        })
    }
}

/// Closed sphere surface of one patch (poles and seam carry no measure).
pub fn sphere(radius: f64) -> PiecewiseSurface {
    let chart = Arc::new(SphereChart {
        radius,
        center: Vector3::zeros(),
    });
    PiecewiseSurface::closed_from_patches(
        vec![ParametricPatch::new("sphere", chart, (0.0, PI), (0.0, TAU), 1.0)],
        Vec::new(),
    )
}

/// Closed axis-aligned ellipsoid surface.
pub fn ellipsoid(a: f64, b: f64, c: f64) -> PiecewiseSurface {
    let chart = Arc::new(EllipsoidChart { a, b, c });
    PiecewiseSurface::closed_from_patches(
        vec![ParametricPatch::new(
            "ellipsoid",
            chart,
            (0.0, PI),
            (0.0, TAU),
            1.0,
        )],
        Vec::new(),
    )
}

/// Closed torus of revolution (genus one). The raw chart normal points
/// into the tube, hence the negative orientation.
pub fn torus(major: f64, minor: f64) -> PiecewiseSurface {
    let chart = Arc::new(TorusChart { major, minor });
    let mut surf = PiecewiseSurface::closed_from_patches(
        vec![ParametricPatch::new(
            "torus",
            chart,
            (0.0, TAU),
            (0.0, TAU),
            -1.0,
        )],
        Vec::new(),
    );
    surf.genus = Some(1);
    surf
}

/// Boundary of the equilibrium body for a smooth, strictly stable energy
/// density, parametrized by the normal.
pub fn gauss_map_surface(gamma: &Anisotropy) -> PiecewiseSurface {
    let chart = Arc::new(GaussMapChart {
        gamma: gamma.clone(),
    });
    PiecewiseSurface::closed_from_patches(
        vec![ParametricPatch::new("wulff", chart, (0.0, PI), (0.0, TAU), 1.0)],
        Vec::new(),
    )
}

/// Equilibrium body of the lens-type density `1 + beta (n1^2 + n2^2)` for
/// `beta > 1`: two strictly convex caps meeting along an equatorial edge
/// circle of radius `2 sqrt(beta)`.
pub fn lens_capped_surface(beta: f64) -> Result<PiecewiseSurface> {
    if !(beta > 1.0) {
        return Err(Error::param(
            "beta",
            format!("capped construction needs beta > 1, got {beta}"),
        ));
    }
    let gamma = Anisotropy::lens(beta)?;
    let theta_c = (1.0 / beta.sqrt()).asin();
    let upper = Arc::new(GaussMapChart {
        gamma: gamma.clone(),
    });
    // The body is invariant under the half-turn about the x-axis, which
    // maps the upper cap onto the lower one and preserves orientation.
    let half_turn = Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0);
    let lower = Arc::new(RotatedChart {
        base: upper.clone(),
        rot: half_turn,
    });
    let patches = vec![
        ParametricPatch::new("cap_upper", upper, (0.0, theta_c), (0.0, TAU), 1.0),
        ParametricPatch::new("cap_lower", lower, (0.0, theta_c), (0.0, TAU), 1.0),
    ];
    let rim = 2.0 * beta.sqrt();
    let edge = Edge {
        name: "rim".to_string(),
        curve: Arc::new(move |tau: f64| rim * Vector3::new(tau.cos(), tau.sin(), 0.0)),
        tangent: Arc::new(move |tau: f64| rim * Vector3::new(-tau.sin(), tau.cos(), 0.0)),
        tau_range: (0.0, TAU),
        left: 0,
        right: 1,
        left_param: Arc::new(move |tau: f64| (theta_c, tau)),
        right_param: Arc::new(move |tau: f64| (theta_c, TAU - tau)),
    };
    Ok(PiecewiseSurface::closed_from_patches(patches, vec![edge]))
}

/// The two parameters where a closed convex profile curve crosses the
/// rotation axis `u = 0`, returned as (south, north) in counterclockwise
/// order so that the arc through increasing parameter has `u > 0`.
pub fn profile_axis_crossings(profile: &PlanarCurve) -> Result<(f64, f64)> {
    let u = |tau: f64| profile.point(tau).x;
    // Breakpoints: corners plus a dense grid; bisect every sign change.
    let mut taus: Vec<f64> = (0..=720).map(|i| TAU * i as f64 / 720.0).collect();
    taus.extend(profile.corners());
    taus.sort_by(f64::total_cmp);
    taus.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    let mut crossings = Vec::new();
    for w in taus.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (ulo, uhi) = (u(lo), u(hi));
        if ulo == 0.0 {
            crossings.push(lo);
            continue;
        }
        if ulo * uhi > 0.0 {
            continue;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if u(lo) * u(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        crossings.push(0.5 * (lo + hi));
    }
    crossings.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    if crossings.len() == 2 && (crossings[0] - 0.0).abs() < 1e-9 {
        // Guard against the periodic duplicate of a crossing at zero.
        crossings.retain(|&c| (c - TAU).abs() > 1e-9);
    }
    if crossings.len() != 2 {
        return Err(Error::param(
            "profile",
            format!(
                "expected exactly two axis crossings, found {}",
                crossings.len()
            ),
        ));
    }
    // South crossing: u increasing through zero.
    let (a, b) = (crossings[0], crossings[1]);
    let rising = |tau: f64| u(tau + 1e-7) > u(tau - 1e-7);
    if rising(a) {
        Ok((a, b))
    } else {
        Ok((b, a + TAU))
    }
}

/// Boundary surface of the product body swept by a profile curve and a
/// cross-section curve: patches are the smooth parameter rectangles between
/// profile corners and cross-section corners, with edge records along both
/// kinds of corner curve.
pub fn product_surface(profile: &PlanarCurve, cross: &PlanarCurve) -> Result<PiecewiseSurface> {
    let (south, mut north) = profile_axis_crossings(profile)?;
    if north < south {
        north += TAU;
    }
    let chart = Arc::new(ProductChart {
        profile: Arc::new(profile.clone()),
        cross: Arc::new(cross.clone()),
    });

    // Profile breakpoints: corners lifted into (south, north).
    let mut s_breaks = vec![south];
    for &c in &profile.corners() {
        for lift in [c, c + TAU] {
            if lift > south + 1e-9 && lift < north - 1e-9 {
                s_breaks.push(lift);
            }
        }
    }
    s_breaks.push(north);
    s_breaks.sort_by(f64::total_cmp);

    // Cross-section breakpoints: the corner list, or the full period.
    let cross_corners = cross.corners();
    let t_breaks: Vec<(f64, f64)> = if cross_corners.is_empty() {
        vec![(0.0, TAU)]
    } else {
        let k = cross_corners.len();
        (0..k)
            .map(|j| {
                let a = cross_corners[j];
                let b = if j + 1 < k {
                    cross_corners[j + 1]
                } else {
                    cross_corners[0] + TAU
                };
                (a, b)
            })
            .collect()
    };

    let n_s = s_breaks.len() - 1;
    let n_t = t_breaks.len();
    let mut patches = Vec::new();
    for i in 0..n_s {
        for (j, &(t0, t1)) in t_breaks.iter().enumerate() {
            patches.push(ParametricPatch::new(
                format!("product_s{i}_t{j}"),
                chart.clone() as Arc<dyn Chart>,
                (s_breaks[i], s_breaks[i + 1]),
                (t0, t1),
                -1.0,
            ));
        }
    }
    let patch_id = |i: usize, j: usize| i * n_t + j;

    let mut edges = Vec::new();
    // Edges along profile corners (fixed s, running in t).
    for i in 1..n_s {
        let sc = s_breaks[i];
        let p = profile.point(sc);
        for (j, &(t0, t1)) in t_breaks.iter().enumerate() {
            let cross_c = cross.clone();
            let cross_t = cross.clone();
            edges.push(Edge {
                name: format!("profile_corner_{i}_t{j}"),
                curve: Arc::new(move |tau: f64| {
                    let c = cross_c.point(tau);
                    Vector3::new(p.x * c.x, p.x * c.y, p.y)
                }),
                tangent: Arc::new(move |tau: f64| {
                    let dc = cross_t.velocity(tau);
                    Vector3::new(p.x * dc.x, p.x * dc.y, 0.0)
                }),
                tau_range: (t0, t1),
                left: patch_id(i - 1, j),
                right: patch_id(i, j),
                left_param: Arc::new(move |tau: f64| (sc, tau)),
                right_param: Arc::new(move |tau: f64| (sc, tau)),
            });
        }
    }
    // Edges along cross-section corners (fixed t, running in s).
    if n_t > 1 {
        for (j, &(t0, _)) in t_breaks.iter().enumerate() {
            // The corner at the start of piece j separates piece j-1 from j.
            let j_prev = (j + n_t - 1) % n_t;
            let t_prev = t_breaks[j_prev].1;
            let c = cross.point(t0);
            for i in 0..n_s {
                let profile_c = profile.clone();
                let profile_t = profile.clone();
                edges.push(Edge {
                    name: format!("cross_corner_{j}_s{i}"),
                    curve: Arc::new(move |s: f64| {
                        let p = profile_c.point(s);
                        Vector3::new(p.x * c.x, p.x * c.y, p.y)
                    }),
                    tangent: Arc::new(move |s: f64| {
                        let dp = profile_t.velocity(s);
                        Vector3::new(dp.x * c.x, dp.x * c.y, dp.y)
                    }),
                    tau_range: (s_breaks[i], s_breaks[i + 1]),
                    left: patch_id(i, j_prev),
                    right: patch_id(i, j),
                    left_param: Arc::new(move |s: f64| (s, t_prev)),
                    right_param: Arc::new(move |s: f64| (s, t0)),
                });
            }
        }
    }
    Ok(PiecewiseSurface::closed_from_patches(patches, edges))
}
