//! Planar convex curves with support-function and boundary views.
//!
//! Each curve bounds a convex planar body containing the origin and is used
//! two ways:
//!
//! * as a *support function* `h(phi)` of the outward normal angle, together
//!   with two derivatives, feeding the product-form energy density;
//! * as a *boundary parametrization* `tau in [0, 2 pi) -> p(tau)` with corner
//!   parameters, feeding cross-sections and profiles of swept surfaces.
//!
//! Smooth families (circle, ellipse) have closed-form support functions. The
//! cornered families are unions of circular arcs meeting at corners (convex
//! intersections of disks); their support functions are piecewise: an arc
//! contributes `h = c . e(phi) + R` on its normal range, a corner contributes
//! the linear `h = x_c . e(phi)` on its normal fan. Values and first
//! derivatives are continuous across piece boundaries; second derivatives
//! jump, which is exactly the curvature degeneracy that produces edges on the
//! induced Wulff shapes.

use crate::error::Error;
use crate::Result;
use nalgebra::{Matrix2, Vector2};
use std::f64::consts::{PI, TAU};

/// Wrap an angle into `[0, 2 pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut x = a % TAU;
    if x < 0.0 {
        x += TAU;
    }
    x
}

/// Unit vector at angle `phi`.
fn e(phi: f64) -> Vector2<f64> {
    Vector2::new(phi.cos(), phi.sin())
}

/// Unit vector rotated a quarter turn ahead of `e(phi)`.
fn e_perp(phi: f64) -> Vector2<f64> {
    Vector2::new(-phi.sin(), phi.cos())
}

/// One circular arc of a cornered body, described in both views.
#[derive(Debug, Clone)]
struct ArcPiece {
    center: Vector2<f64>,
    radius: f64,
    /// Outward normal angle at the start of the arc (counterclockwise).
    psi0: f64,
    /// Outward normal angle at the end; always `> psi0` after unwrapping.
    psi1: f64,
    /// Boundary parameter at the start of the arc.
    tau0: f64,
    /// Boundary parameter at the end of the arc.
    tau1: f64,
}

/// Support value and first two derivatives at a normal angle.
#[derive(Debug, Clone, Copy)]
pub struct SupportJet {
    pub h: f64,
    pub dh: f64,
    pub ddh: f64,
}

/// A closed convex planar curve enclosing the origin.
#[derive(Debug, Clone)]
pub enum PlanarCurve {
    Circle {
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    /// Counterclockwise chain of circular arcs joined at corners.
    Arcs {
        pieces: Vec<ArcChain>,
    },
}

/// Public arc description for [`PlanarCurve::Arcs`].
#[derive(Debug, Clone)]
pub struct ArcChain {
    arc: ArcPiece,
}

impl PlanarCurve {
    /// Circle of the given radius centered at the origin.
    pub fn circle(radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::param("radius", format!("must be positive, got {radius}")));
        }
        Ok(PlanarCurve::Circle { radius })
    }

    /// Axis-aligned ellipse with semi-axes `a`, `b`.
    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0) || !(b > 0.0) {
            return Err(Error::param("semi-axes", format!("must be positive, got ({a}, {b})")));
        }
        Ok(PlanarCurve::Ellipse { a, b })
    }

    /// Lens: intersection of two equal disks, with corners at `(+-w, 0)`.
    ///
    /// `arc_radius` must exceed `w`; the apexes sit at `(0, +-(R - d))` with
    /// `d = sqrt(R^2 - w^2)`.
    pub fn lens(half_width: f64, arc_radius: f64) -> Result<Self> {
        let (w, r) = (half_width, arc_radius);
        if !(w > 0.0) || !(r > w) {
            return Err(Error::param(
                "lens",
                format!("need 0 < half_width < arc_radius, got ({w}, {r})"),
            ));
        }
        let d = (r * r - w * w).sqrt();
        let beta = d.atan2(w); // normal angle at the east corner, upper side
        let upper = ArcPiece {
            center: Vector2::new(0.0, -d),
            radius: r,
            psi0: beta,
            psi1: PI - beta,
            tau0: 0.0,
            tau1: 0.0,
        };
        let lower = ArcPiece {
            center: Vector2::new(0.0, d),
            radius: r,
            psi0: PI + beta,
            psi1: TAU - beta,
            tau0: 0.0,
            tau1: 0.0,
        };
        Self::from_arcs(vec![upper, lower])
    }

    /// Rounded regular polygon: `k` corners at distance `circumradius` from
    /// the origin, consecutive corners joined by arcs of the given radius.
    ///
    /// The arc radius must exceed the circumradius: at `R = circumradius` the
    /// arcs close into the circumscribed circle (no corners), and as `R`
    /// grows the shape flattens toward the straight-edged polygon while
    /// keeping strictly positive face curvature `1/R`.
    pub fn arcgon(k: usize, circumradius: f64, arc_radius: f64) -> Result<Self> {
        if k < 3 {
            return Err(Error::param("k", format!("need at least 3 corners, got {k}")));
        }
        if !(circumradius > 0.0) {
            return Err(Error::param("circumradius", "must be positive".to_string()));
        }
        let rc = circumradius;
        let half_sector = PI / k as f64;
        let half_chord = rc * half_sector.sin();
        if !(arc_radius > rc) {
            return Err(Error::param(
                "arc_radius",
                format!("need arc_radius > circumradius {rc}, got {arc_radius}"),
            ));
        }
        let mut arcs = Vec::with_capacity(k);
        for j in 0..k {
            let a0 = TAU * j as f64 / k as f64;
            let a1 = TAU * (j + 1) as f64 / k as f64;
            let c0 = rc * e(a0);
            let c1 = rc * e(a1);
            let mid = 0.5 * (c0 + c1);
            let toward_origin = -mid.normalize();
            let offset = (arc_radius * arc_radius - half_chord * half_chord).sqrt();
            let center = mid + offset * toward_origin;
            let psi0 = {
                let dirv = (c0 - center) / arc_radius;
                dirv.y.atan2(dirv.x)
            };
            let psi1 = {
                let dirv = (c1 - center) / arc_radius;
                dirv.y.atan2(dirv.x)
            };
            arcs.push(ArcPiece {
                center,
                radius: arc_radius,
                psi0,
                psi1,
                tau0: 0.0,
                tau1: 0.0,
            });
        }
        Self::from_arcs(arcs)
    }

    /// Build a cornered body from a counterclockwise arc chain.
    fn from_arcs(mut arcs: Vec<ArcPiece>) -> Result<Self> {
        // Unwrap normal ranges to a single increasing sequence starting in
        // [0, 2 pi).
        let base = wrap_angle(arcs[0].psi0);
        let mut prev_end = base;
        for (i, a) in arcs.iter_mut().enumerate() {
            let mut p0 = wrap_angle(a.psi0);
            while p0 < prev_end - 1e-12 {
                p0 += TAU;
            }
            if i == 0 {
                p0 = base;
            }
            let mut p1 = wrap_angle(a.psi1);
            while p1 < p0 + 1e-12 {
                p1 += TAU;
            }
            a.psi0 = p0;
            a.psi1 = p1;
            prev_end = p1;
            if !(a.radius > 0.0) {
                return Err(Error::param("arc radius", "must be positive".to_string()));
            }
        }
        if prev_end > base + TAU + 1e-9 {
            return Err(Error::param("arcs", "normal ranges overlap".to_string()));
        }
        // Corner fans must be nonempty and arc endpoints must meet.
        let n = arcs.len();
        for i in 0..n {
            let j = (i + 1) % n;
            let end = arcs[i].center + arcs[i].radius * e(arcs[i].psi1);
            let start = arcs[j].center + arcs[j].radius * e(arcs[j].psi0);
            if (end - start).norm() > 1e-9 * arcs[i].radius.max(1.0) {
                return Err(Error::param(
                    "arcs",
                    format!("arc {i} does not meet arc {j} at a common corner"),
                ));
            }
            let gap = if j == 0 {
                base + TAU - arcs[i].psi1
            } else {
                arcs[j].psi0 - arcs[i].psi1
            };
            if gap < 1e-9 {
                return Err(Error::param(
                    "arcs",
                    format!("corner fan between arcs {i} and {j} is empty"),
                ));
            }
        }
        // Assign boundary parameters proportional to normal-angle spans.
        let total: f64 = arcs.iter().map(|a| a.psi1 - a.psi0).sum();
        let mut tau = 0.0;
        for a in arcs.iter_mut() {
            a.tau0 = tau;
            tau += (a.psi1 - a.psi0) / total * TAU;
            a.tau1 = tau;
        }
        if let Some(last) = arcs.last_mut() {
            last.tau1 = TAU;
        }
        let curve = PlanarCurve::Arcs {
            pieces: arcs.into_iter().map(|arc| ArcChain { arc }).collect(),
        };
        // The origin must be interior for the support composition to work.
        for i in 0..64 {
            let phi = TAU * i as f64 / 64.0;
            if curve.support_jet(phi).h <= 0.0 {
                return Err(Error::param(
                    "arcs",
                    "origin is not interior to the body".to_string(),
                ));
            }
        }
        Ok(curve)
    }

    /// True when the boundary has no corners.
    pub fn is_smooth(&self) -> bool {
        matches!(self, PlanarCurve::Circle { .. } | PlanarCurve::Ellipse { .. })
    }

    /// Corner parameters in `[0, 2 pi)`, ascending (empty for smooth curves).
    pub fn corners(&self) -> Vec<f64> {
        match self {
            PlanarCurve::Circle { .. } | PlanarCurve::Ellipse { .. } => Vec::new(),
            PlanarCurve::Arcs { pieces } => {
                let mut taus: Vec<f64> = pieces.iter().map(|p| p.arc.tau0).collect();
                taus.push(TAU);
                taus.remove(0);
                let mut out: Vec<f64> = taus.into_iter().map(|t| t % TAU).collect();
                out.sort_by(f64::total_cmp);
                out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
                out
            }
        }
    }

    /// Boundary point at parameter `tau`.
    pub fn point(&self, tau: f64) -> Vector2<f64> {
        match self {
            PlanarCurve::Circle { radius } => *radius * e(tau),
            PlanarCurve::Ellipse { a, b } => Vector2::new(a * tau.cos(), b * tau.sin()),
            PlanarCurve::Arcs { pieces } => {
                let (arc, psi) = arc_at(pieces, tau);
                arc.center + arc.radius * e(psi)
            }
        }
    }

    /// First derivative of the boundary with respect to `tau` (one-sided at
    /// corners, taken from the arc containing `tau` in its half-open range).
    pub fn velocity(&self, tau: f64) -> Vector2<f64> {
        match self {
            PlanarCurve::Circle { radius } => *radius * e_perp(tau),
            PlanarCurve::Ellipse { a, b } => Vector2::new(-a * tau.sin(), b * tau.cos()),
            PlanarCurve::Arcs { pieces } => {
                let (arc, psi) = arc_at(pieces, tau);
                arc.radius * rate(pieces, arc) * e_perp(psi)
            }
        }
    }

    /// Second derivative of the boundary with respect to `tau`.
    pub fn acceleration(&self, tau: f64) -> Vector2<f64> {
        match self {
            PlanarCurve::Circle { radius } => -*radius * e(tau),
            PlanarCurve::Ellipse { a, b } => Vector2::new(-a * tau.cos(), -b * tau.sin()),
            PlanarCurve::Arcs { pieces } => {
                let (arc, psi) = arc_at(pieces, tau);
                let r = rate(pieces, arc);
                -arc.radius * r * r * e(psi)
            }
        }
    }

    /// Outward normal angle at a smooth boundary parameter.
    pub fn normal_angle(&self, tau: f64) -> f64 {
        match self {
            PlanarCurve::Circle { .. } => wrap_angle(tau),
            PlanarCurve::Ellipse { a, b } => (a * tau.sin()).atan2(b * tau.cos()),
            PlanarCurve::Arcs { pieces } => {
                let (_, psi) = arc_at(pieces, tau);
                wrap_angle(psi)
            }
        }
    }

    /// Boundary parameter whose outward normal is `phi`; for a normal inside
    /// a corner fan this is the corner parameter.
    pub fn param_at_normal(&self, phi: f64) -> f64 {
        match self {
            PlanarCurve::Circle { .. } => wrap_angle(phi),
            PlanarCurve::Ellipse { a, b } => {
                wrap_angle((b * phi.sin()).atan2(a * phi.cos()))
            }
            PlanarCurve::Arcs { pieces } => {
                let base = pieces[0].arc.psi0;
                let mut p = wrap_angle(phi);
                while p < base - 1e-12 {
                    p += TAU;
                }
                for piece in pieces {
                    let a = &piece.arc;
                    if p <= a.psi1 {
                        if p >= a.psi0 {
                            let f = (p - a.psi0) / (a.psi1 - a.psi0);
                            return (a.tau0 + f * (a.tau1 - a.tau0)) % TAU;
                        }
                        // Inside the fan before this arc: its starting corner.
                        return a.tau0 % TAU;
                    }
                }
                // Fan after the last arc wraps to the first arc's corner.
                pieces[0].arc.tau0
            }
        }
    }

    /// Support function jet at outward normal angle `phi`.
    pub fn support_jet(&self, phi: f64) -> SupportJet {
        match self {
            PlanarCurve::Circle { radius } => SupportJet {
                h: *radius,
                dh: 0.0,
                ddh: 0.0,
            },
            PlanarCurve::Ellipse { a, b } => {
                let (c, s) = (phi.cos(), phi.sin());
                let g = a * a * c * c + b * b * s * s;
                let h = g.sqrt();
                let dg = (b * b - a * a) * (2.0 * s * c);
                let ddg = 2.0 * (b * b - a * a) * (c * c - s * s);
                let dh = dg / (2.0 * h);
                let ddh = ddg / (2.0 * h) - dg * dg / (4.0 * g * h);
                SupportJet { h, dh, ddh }
            }
            PlanarCurve::Arcs { pieces } => {
                let base = pieces[0].arc.psi0;
                let mut p = wrap_angle(phi);
                while p < base - 1e-12 {
                    p += TAU;
                }
                for (i, piece) in pieces.iter().enumerate() {
                    let a = &piece.arc;
                    if p <= a.psi1 + 1e-15 {
                        if p >= a.psi0 - 1e-15 {
                            return support_of_arc(a, p);
                        }
                        // Corner fan before arc i: supported at that corner.
                        let prev = &pieces[(i + pieces.len() - 1) % pieces.len()].arc;
                        let corner = prev.center + prev.radius * e(prev.psi1);
                        return support_of_point(corner, p);
                    }
                }
                let last = &pieces[pieces.len() - 1].arc;
                let corner = last.center + last.radius * e(last.psi1);
                support_of_point(corner, p)
            }
        }
    }

    /// Boundary curvature at a smooth parameter.
    pub fn curvature(&self, tau: f64) -> f64 {
        match self {
            PlanarCurve::Circle { radius } => 1.0 / radius,
            PlanarCurve::Ellipse { .. } => {
                let v = self.velocity(tau);
                let w = self.acceleration(tau);
                (v.x * w.y - v.y * w.x) / v.norm().powi(3)
            }
            PlanarCurve::Arcs { pieces } => {
                let (arc, _) = arc_at(pieces, tau);
                1.0 / arc.radius
            }
        }
    }

    /// Enclosed (signed) area, by the shoelace integral over the boundary.
    pub fn area(&self, order: usize) -> f64 {
        let rule = crate::quad::GaussLegendre::new(order.max(8));
        let corners = self.corners();
        let mut cuts = vec![0.0];
        cuts.extend(corners.iter().copied().filter(|t| *t > 1e-12));
        cuts.push(TAU);
        let mut total = 0.0;
        for pair in cuts.windows(2) {
            total += rule.integrate(pair[0], pair[1], |t| {
                let p = self.point(t);
                let v = self.velocity(t);
                0.5 * (p.x * v.y - p.y * v.x)
            });
        }
        total
    }

    /// One-homogeneous support extension jet at a planar vector `w`:
    /// value, gradient, and Hessian of `|w| h(arg w)`.
    pub fn homogeneous_jet(&self, w: Vector2<f64>) -> (f64, Vector2<f64>, Matrix2<f64>) {
        let rho = w.norm();
        let phi = w.y.atan2(w.x);
        let jet = self.support_jet(phi);
        let er = e(phi);
        let ep = e_perp(phi);
        let value = rho * jet.h;
        let grad = jet.h * er + jet.dh * ep;
        let hess = ((jet.h + jet.ddh) / rho) * (ep * ep.transpose());
        (value, grad, hess)
    }
}

/// Arc containing `tau` (half-open ranges), plus the normal angle there.
fn arc_at<'a>(pieces: &'a [ArcChain], tau: f64) -> (&'a ArcPiece, f64) {
    let t = wrap_angle(tau);
    for piece in pieces {
        let a = &piece.arc;
        if t >= a.tau0 - 1e-15 && t <= a.tau1 + 1e-15 {
            let f = ((t - a.tau0) / (a.tau1 - a.tau0)).clamp(0.0, 1.0);
            return (a, a.psi0 + f * (a.psi1 - a.psi0));
        }
    }
    let a = &pieces[pieces.len() - 1].arc;
    (a, a.psi1)
}

/// Normal-angle rate `d psi / d tau` for an arc chain (constant by
/// construction of the parameter assignment).
fn rate(pieces: &[ArcChain], _arc: &ArcPiece) -> f64 {
    let total: f64 = pieces.iter().map(|p| p.arc.psi1 - p.arc.psi0).sum();
    total / TAU
}

fn support_of_arc(a: &ArcPiece, phi: f64) -> SupportJet {
    let ev = e(phi);
    let ep = e_perp(phi);
    SupportJet {
        h: a.center.dot(&ev) + a.radius,
        dh: a.center.dot(&ep),
        ddh: -a.center.dot(&ev),
    }
}

fn support_of_point(x: Vector2<f64>, phi: f64) -> SupportJet {
    let ev = e(phi);
    let ep = e_perp(phi);
    SupportJet {
        h: x.dot(&ev),
        dh: x.dot(&ep),
        ddh: -x.dot(&ev),
    }
}
