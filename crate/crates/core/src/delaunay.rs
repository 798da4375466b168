//! Constant anisotropic mean curvature surfaces whose cross sections are
//! homothets of a fixed convex curve.
//!
//! For an equilibrium body of product form, swept by a profile curve
//! `(u, v)` and a cross-section curve `(alpha, beta)`, the surfaces
//! `X(s, tau) = (x(s) alpha(tau), x(s) beta(tau), z(s))` with constant
//! `Lambda` reduce to one profile ODE in arc length `s`:
//!
//! ```text
//! x' = u'(sigma)/w,   z' = v'(sigma)/w,   sigma' = (-Lambda - u/x)/w
//! ```
//!
//! where `sigma(s)` is the body parameter at which the body's tangent
//! direction matches the surface meridian's, and `w = |(u', v')|`. The map
//! `(s, tau) -> chi(sigma(s), tau)` then realizes the tangency field `xi`,
//! with `d xi` eigenvalues `d sigma_arc/ds` and `u/x`, so the ODE never
//! references the cross section: one solved profile serves every cross
//! curve. The flux `u x + (Lambda/2) x^2` is conserved and classifies the
//! solutions: zero for rescaled bodies, positive with `Lambda = 0` for
//! catenoid analogues, and between zero and the cylinder value for
//! unduloid analogues.

use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::Vector3;

use crate::anisotropy::Anisotropy;
use crate::curve::PlanarCurve;
use crate::surface::shapes::profile_axis_crossings;
use crate::surface::{Chart, Edge, Jet1, Jet2, ParametricPatch, PiecewiseSurface};
use crate::{Error, Result};

/// Which constant-`Lambda` family a solved profile belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileClass {
    /// Rescaled equilibrium body, `Lambda = -2/r`, zero flux.
    Wulff,
    /// `Lambda = 0` with positive flux.
    Catenoid,
    /// Constant radius `u_max / |Lambda|`.
    Cylinder,
    /// Periodic profile oscillating between neck and bulge.
    Unduloid,
}

impl ProfileClass {
    pub fn name(self) -> &'static str {
        match self {
            ProfileClass::Wulff => "wulff",
            ProfileClass::Catenoid => "catenoid",
            ProfileClass::Cylinder => "cylinder",
            ProfileClass::Unduloid => "unduloid",
        }
    }
}

/// A product-form convex body: a profile curve `(u, v)` swept by a
/// cross-section curve, with its support density.
#[derive(Debug, Clone)]
pub struct ProductWulff {
    pub profile: PlanarCurve,
    pub cross: PlanarCurve,
    gamma: Anisotropy,
    /// Axis crossings of the profile: the `u > 0` arc runs `south..north`.
    south: f64,
    north: f64,
    /// Profile parameter of the widest point and the width there.
    sigma_eq: f64,
    u_max: f64,
    /// Profile corner parameters lifted into `(south, north)`.
    corner_sigmas: Vec<f64>,
}

impl ProductWulff {
    pub fn new(profile: PlanarCurve, cross: PlanarCurve) -> Result<Self> {
        let (south, mut north) = profile_axis_crossings(&profile)?;
        if north < south {
            north += TAU;
        }
        let mut corner_sigmas = Vec::new();
        for &c in &profile.corners() {
            for lift in [c, c + TAU] {
                if lift > south + 1e-9 && lift < north - 1e-9 {
                    corner_sigmas.push(lift);
                }
            }
        }
        corner_sigmas.sort_by(f64::total_cmp);
        let (sigma_eq, u_max) = widest_point(&profile, south, north, &corner_sigmas)?;
        let gamma = Anisotropy::product(profile.clone(), cross.clone());
        let body = ProductWulff {
            profile,
            cross,
            gamma,
            south,
            north,
            sigma_eq,
            u_max,
            corner_sigmas,
        };
        body.validate_support()?;
        Ok(body)
    }

    /// Body point at profile parameter `sigma` and cross parameter `tau`.
    pub fn chi(&self, sigma: f64, tau: f64) -> Vector3<f64> {
        let p = self.profile.point(sigma);
        let c = self.cross.point(tau);
        Vector3::new(p.x * c.x, p.x * c.y, p.y)
    }

    /// Support density of the body.
    pub fn gamma(&self) -> &Anisotropy {
        &self.gamma
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn sigma_eq(&self) -> f64 {
        self.sigma_eq
    }

    /// Profile parameter range of the `u > 0` arc.
    pub fn sigma_range(&self) -> (f64, f64) {
        (self.south, self.north)
    }

    /// The assembled boundary surface of the body itself.
    pub fn boundary(&self) -> Result<PiecewiseSurface> {
        crate::surface::shapes::product_surface(&self.profile, &self.cross)
    }

    /// Every sampled boundary point must satisfy `p . n <= gamma(n)` against
    /// every sampled normal, with equality at its own normal.
    fn validate_support(&self) -> Result<()> {
        let m = 24usize;
        let tol = 1e-7 * self.u_max.max(1.0);
        let mut points = Vec::new();
        let mut normals = Vec::new();
        for i in 0..m {
            let f = (i as f64 + 0.5) / m as f64;
            let sigma = self.south + f * (self.north - self.south);
            for j in 0..m {
                let tau = TAU * (j as f64 + 0.5) / m as f64;
                let p = self.profile.point(sigma);
                let dp = self.profile.velocity(sigma);
                let c = self.cross.point(tau);
                let dc = self.cross.velocity(tau);
                let xs = Vector3::new(dp.x * c.x, dp.x * c.y, dp.y);
                let xt = Vector3::new(p.x * dc.x, p.x * dc.y, 0.0);
                let n = -xs.cross(&xt);
                let norm = n.norm();
                if norm < 1e-12 {
                    continue;
                }
                let n = n / norm;
                let x = Vector3::new(p.x * c.x, p.x * c.y, p.y);
                if (x.dot(&n) - self.gamma.gamma(&n)).abs() > tol {
                    return Err(Error::param(
                        "product",
                        format!(
                            "support identity fails at (sigma, tau) = ({sigma:.4}, {tau:.4}): \
                             point gives {:.6e}, density gives {:.6e}",
                            x.dot(&n),
                            self.gamma.gamma(&n)
                        ),
                    ));
                }
                points.push(x);
                normals.push(n);
            }
        }
        for n in &normals {
            let g = self.gamma.gamma(n);
            for p in &points {
                if p.dot(n) > g + tol {
                    return Err(Error::param(
                        "product",
                        "swept body is not convex: a boundary point crosses a support plane"
                            .to_string(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Locate the widest point of the `u > 0` profile arc: either an interior
/// zero of `u'` on a smooth piece or a corner where `u'` changes sign.
fn widest_point(
    profile: &PlanarCurve,
    south: f64,
    north: f64,
    corners: &[f64],
) -> Result<(f64, f64)> {
    let udot = |s: f64| profile.velocity(s).x;
    let mut breaks = vec![south];
    breaks.extend_from_slice(corners);
    breaks.push(north);
    let nudge = 1e-9 * (north - south);
    for win in breaks.windows(2) {
        let (a, b) = (win[0] + nudge, win[1] - nudge);
        if udot(a) > 0.0 && udot(b) < 0.0 {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if udot(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let sigma = 0.5 * (lo + hi);
            return Ok((sigma, profile.point(sigma).x));
        }
    }
    for &c in corners {
        if udot(c - nudge) > 0.0 && udot(c + nudge) < 0.0 {
            return Ok((c, profile.point(c).x));
        }
    }
    Err(Error::param(
        "profile",
        "no widest point found on the u > 0 arc".to_string(),
    ))
}

/// Profile state and two arc-length derivatives at one parameter.
#[derive(Debug, Clone, Copy)]
pub struct ProfilePoint {
    pub s: f64,
    pub x: f64,
    pub z: f64,
    pub sigma: f64,
    pub dx: f64,
    pub dz: f64,
    pub dsigma: f64,
    pub ddx: f64,
    pub ddz: f64,
    pub ddsigma: f64,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    s: f64,
    y: [f64; 3],
    dy: [f64; 3],
    ddy: [f64; 3],
}

/// One smooth piece of a solved profile, with dense quintic output.
#[derive(Debug, Clone)]
pub struct ProfileBranch {
    nodes: Vec<Node>,
}

impl ProfileBranch {
    pub fn s_range(&self) -> (f64, f64) {
        (self.nodes[0].s, self.nodes[self.nodes.len() - 1].s)
    }

    fn eval(&self, s: f64) -> ProfilePoint {
        let n = self.nodes.len();
        let hi = self
            .nodes
            .partition_point(|node| node.s < s)
            .clamp(1, n - 1);
        let (a, b) = (&self.nodes[hi - 1], &self.nodes[hi]);
        let h = b.s - a.s;
        let u = (s - a.s) / h;
        let (p, dp, ddp) = quintic_basis(u);
        let mut out = [[0.0_f64; 3]; 3];
        for k in 0..3 {
            let c = [
                a.y[k],
                h * a.dy[k],
                h * h * a.ddy[k],
                b.y[k],
                h * b.dy[k],
                h * h * b.ddy[k],
            ];
            for i in 0..6 {
                out[0][k] += c[i] * p[i];
                out[1][k] += c[i] * dp[i];
                out[2][k] += c[i] * ddp[i];
            }
            out[1][k] /= h;
            out[2][k] /= h * h;
        }
        ProfilePoint {
            s,
            x: out[0][0],
            z: out[0][1],
            sigma: out[0][2],
            dx: out[1][0],
            dz: out[1][1],
            dsigma: out[1][2],
            ddx: out[2][0],
            ddz: out[2][1],
            ddsigma: out[2][2],
        }
    }
}

/// Quintic Hermite basis on `[0, 1]` matching value, slope, and curvature
/// at both ends: values, first, and second derivatives of the six basis
/// polynomials.
fn quintic_basis(u: f64) -> ([f64; 6], [f64; 6], [f64; 6]) {
    let (u2, u3, u4, u5) = (u * u, u * u * u, u * u * u * u, u * u * u * u * u);
    let p = [
        1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5,
        u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5,
        0.5 * u2 - 1.5 * u3 + 1.5 * u4 - 0.5 * u5,
        10.0 * u3 - 15.0 * u4 + 6.0 * u5,
        -4.0 * u3 + 7.0 * u4 - 3.0 * u5,
        0.5 * u3 - u4 + 0.5 * u5,
    ];
    let dp = [
        -30.0 * u2 + 60.0 * u3 - 30.0 * u4,
        1.0 - 18.0 * u2 + 32.0 * u3 - 15.0 * u4,
        u - 4.5 * u2 + 6.0 * u3 - 2.5 * u4,
        30.0 * u2 - 60.0 * u3 + 30.0 * u4,
        -12.0 * u2 + 28.0 * u3 - 15.0 * u4,
        1.5 * u2 - 4.0 * u3 + 2.5 * u4,
    ];
    let ddp = [
        -60.0 * u + 180.0 * u2 - 120.0 * u3,
        -36.0 * u + 96.0 * u2 - 60.0 * u3,
        1.0 - 9.0 * u + 18.0 * u2 - 10.0 * u3,
        60.0 * u - 180.0 * u2 + 120.0 * u3,
        -24.0 * u + 84.0 * u2 - 60.0 * u3,
        3.0 * u - 12.0 * u2 + 10.0 * u3,
    ];
    (p, dp, ddp)
}

/// A solved meridian `(x(s), z(s))` with the body parameter `sigma(s)`
/// riding along, split into smooth branches at body-corner crossings.
#[derive(Debug, Clone)]
pub struct ProfileCurve {
    pub class: ProfileClass,
    pub lambda: f64,
    /// Conserved flux `u x + (Lambda/2) x^2`.
    pub flux: f64,
    pub step: f64,
    pub branches: Vec<ProfileBranch>,
    /// Arc-length positions where `sigma` crosses a body corner; the built
    /// surface carries a sharp cross-section circle at each.
    pub corner_s: Vec<f64>,
    pub s_range: (f64, f64),
    /// Arc length of one full oscillation (unduloids only).
    pub period: Option<f64>,
    /// Vertical advance over one period (unduloids only).
    pub pitch: Option<f64>,
    /// Max `|Lambda - target|` reported by the generic evaluator on the
    /// circular-cross referee surface.
    pub lambda_residual: f64,
}

impl ProfileCurve {
    pub fn eval(&self, s: f64) -> ProfilePoint {
        let n = self.branches.len();
        let idx = self
            .branches
            .partition_point(|b| b.s_range().1 < s)
            .min(n - 1);
        self.branches[idx].eval(s)
    }

    pub fn branch_ranges(&self) -> Vec<(f64, f64)> {
        self.branches.iter().map(|b| b.s_range()).collect()
    }
}

/// Knobs for [`solve_profile_with`]; [`solve_profile`] fills in defaults.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Integrator arc-length step.
    pub step: f64,
    /// Half vertical extent for catenoid, cylinder, and rescaled-body
    /// profiles; `None` picks a class default.
    pub z_half: Option<f64>,
    /// Full oscillations to cover for unduloids.
    pub periods: usize,
    /// Catenoid neck radius; default `u_max / 2`.
    pub neck_radius: Option<f64>,
    /// Unduloid bulge radius; default `1.5 u_max / |Lambda|`.
    pub bulge_radius: Option<f64>,
    /// Stop rescaled-body and catenoid marches when `u` falls below this
    /// fraction of `u_max` (the normal nears the rotation axis).
    pub u_floor: f64,
}

impl SolveOptions {
    pub fn with_step(step: f64) -> Self {
        SolveOptions {
            step,
            z_half: None,
            periods: 2,
            neck_radius: None,
            bulge_radius: None,
            u_floor: 0.05,
        }
    }
}

/// Solve the constant-`Lambda` meridian of the given class with default
/// extents; see [`SolveOptions`] for the knobs.
pub fn solve_profile(
    body: &ProductWulff,
    lambda_target: f64,
    class: ProfileClass,
    step: f64,
) -> Result<ProfileCurve> {
    solve_profile_with(body, lambda_target, class, SolveOptions::with_step(step))
}

pub fn solve_profile_with(
    body: &ProductWulff,
    lambda_target: f64,
    class: ProfileClass,
    opts: SolveOptions,
) -> Result<ProfileCurve> {
    if !(opts.step > 0.0) || !opts.step.is_finite() {
        return Err(Error::param(
            "step",
            format!("must be a positive step length, got {}", opts.step),
        ));
    }
    let mut curve = match class {
        ProfileClass::Wulff => solve_wulff(body, lambda_target, &opts)?,
        ProfileClass::Catenoid => solve_catenoid(body, lambda_target, &opts)?,
        ProfileClass::Cylinder => solve_cylinder(body, lambda_target, &opts)?,
        ProfileClass::Unduloid => solve_unduloid(body, lambda_target, &opts)?,
    };
    let residual = lambda_referee(body, &curve)?;
    curve.lambda_residual = residual;
    let gate = 1e-6 * (1.0 + lambda_target.abs());
    if residual > gate {
        return Err(Error::solver(format!(
            "solved {} profile misses its curvature target: generic evaluator \
             reports max |Lambda - ({lambda_target})| = {residual:.3e} > {gate:.1e}; \
             reduce the step (currently {})",
            class.name(),
            curve.step,
        )));
    }
    Ok(curve)
}

/// Generic-evaluator referee: assemble the profile with a circular cross
/// section and measure `Lambda` at interior samples.
fn lambda_referee(body: &ProductWulff, curve: &ProfileCurve) -> Result<f64> {
    let circle = PlanarCurve::circle(1.0)?;
    let gamma = Anisotropy::product(body.profile.clone(), circle.clone());
    let built = build_surface(curve, &circle)?;
    let mut max_dev = 0.0_f64;
    for (a, b) in curve.branch_ranges() {
        let span = b - a;
        for i in 0..8 {
            let s = a + span * (0.06 + 0.88 * i as f64 / 7.0);
            for tau in [0.7, 2.9, 4.6] {
                let (pidx, ps, pt) = built.patch_at(s, tau).ok_or_else(|| {
                    Error::solver(format!("referee sample ({s:.4}, {tau:.4}) misses all patches"))
                })?;
                let f = built.surface.fields_at(&gamma, pidx, ps, pt)?;
                max_dev = max_dev.max((f.lambda - curve.lambda).abs());
            }
        }
    }
    Ok(max_dev)
}

struct Stepper<'a> {
    profile: &'a PlanarCurve,
    lambda: f64,
    flux: f64,
    south: f64,
    north: f64,
    corners: &'a [f64],
}

impl Stepper<'_> {
    fn rhs(&self, y: &[f64; 3]) -> [f64; 3] {
        let vel = self.profile.velocity(y[2]);
        let w = vel.norm();
        let u = self.profile.point(y[2]).x;
        [vel.x / w, vel.y / w, (-self.lambda - u / y[0]) / w]
    }

    /// First and second arc-length derivatives of the state.
    fn jets(&self, y: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
        let vel = self.profile.velocity(y[2]);
        let acc = self.profile.acceleration(y[2]);
        let w = vel.norm();
        let u = self.profile.point(y[2]).x;
        let g = -self.lambda - u / y[0];
        let sp = g / w;
        let dx = vel.x / w;
        let dz = vel.y / w;
        let wdot = vel.dot(&acc) / w;
        let ddx = sp * (acc.x * w - vel.x * wdot) / (w * w);
        let ddz = sp * (acc.y * w - vel.y * wdot) / (w * w);
        let gp = -(vel.x * sp) / y[0] + u * dx / (y[0] * y[0]);
        let ddsigma = (gp - sp * sp * wdot) / w;
        ([dx, dz, sp], [ddx, ddz, ddsigma])
    }

    /// One RK4 step of signed length `h`, then a flux projection.
    fn step(&self, y: &[f64; 3], h: f64) -> [f64; 3] {
        let k1 = self.rhs(y);
        let y2 = add(y, &k1, 0.5 * h);
        let k2 = self.rhs(&y2);
        let y3 = add(y, &k2, 0.5 * h);
        let k3 = self.rhs(&y3);
        let y4 = add(y, &k3, h);
        let k4 = self.rhs(&y4);
        let mut out = *y;
        for i in 0..3 {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        self.project(&mut out);
        out
    }

    /// Newton-project the state back onto the conserved-flux manifold,
    /// moving whichever of `sigma`, `x` is better conditioned and never
    /// crossing a corner. Runs unconditionally: a fire-above-threshold
    /// rule would turn the smooth integrator drift into a sawtooth whose
    /// second differences pollute the interpolated curvature.
    fn project(&self, y: &mut [f64; 3]) {
        let (mut lo, mut hi) = (self.south, self.north);
        for &c in self.corners {
            if c < y[2] {
                lo = lo.max(c);
            } else {
                hi = hi.min(c);
            }
        }
        for _ in 0..3 {
            let u = self.profile.point(y[2]).x;
            let f = u * y[0] + 0.5 * self.lambda * y[0] * y[0] - self.flux;
            let df_dsigma = self.profile.velocity(y[2]).x * y[0];
            let df_dx = u + self.lambda * y[0];
            if df_dsigma.abs() >= df_dx.abs() {
                if df_dsigma == 0.0 {
                    return;
                }
                y[2] = (y[2] - f / df_dsigma).clamp(lo, hi);
            } else {
                if df_dx == 0.0 {
                    return;
                }
                y[0] -= f / df_dx;
            }
        }
    }

    /// Re-solve `x` from the flux at a pinned `sigma`.
    fn project_x(&self, y: &mut [f64; 3]) {
        let u = self.profile.point(y[2]).x;
        for _ in 0..8 {
            let f = u * y[0] + 0.5 * self.lambda * y[0] * y[0] - self.flux;
            let df = u + self.lambda * y[0];
            if df.abs() < 1e-12 {
                return;
            }
            y[0] -= f / df;
        }
    }

    /// Node with one-sided body jets: `side` nudges `sigma` off a corner.
    fn node(&self, s: f64, y: [f64; 3], side: f64) -> Node {
        let mut probe = y;
        probe[2] += side * 1e-12;
        let (dy, ddy) = self.jets(&probe);
        Node { s, y, dy, ddy }
    }
}

fn add(y: &[f64; 3], k: &[f64; 3], h: f64) -> [f64; 3] {
    [y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2]]
}

/// Raw output of one march direction, in visit order.
struct March {
    branches: Vec<Vec<Node>>,
    corner_s: Vec<f64>,
    turns: Vec<f64>,
}

struct MarchSpec {
    h: f64,
    /// Branch side of the start when it sits exactly on a corner.
    initial_side: f64,
    /// Stop once this many turning events (`sigma' = 0`) have fired.
    stop_turns: Option<usize>,
    /// Stop when `|z - z0|` exceeds this.
    z_half: Option<f64>,
    /// Stop when `u(sigma)` falls below this.
    u_min: f64,
    max_steps: usize,
}

fn march(stepper: &Stepper, start: [f64; 3], s0: f64, spec: &MarchSpec) -> Result<March> {
    let mut out = March {
        branches: Vec::new(),
        corner_s: Vec::new(),
        turns: Vec::new(),
    };
    let mut nodes = vec![stepper.node(s0, start, spec.initial_side)];
    let mut s = s0;
    // The integration state rides a hair inside the branch when the start
    // sits on a corner, so every RK4 stage samples the correct side.
    let mut y = start;
    y[2] += spec.initial_side * 1e-12;
    let z0 = start[1];
    // Starting disarmed: the start may itself be a turning point, where the
    // sign of `sigma'` is pure noise.
    let mut last_turn = s0;

    for _ in 0..spec.max_steps {
        let y_next = stepper.step(&y, spec.h);

        // Corner crossing: end the branch exactly on the corner and restart
        // on the far side.
        let crossed = stepper
            .corners
            .iter()
            .copied()
            .find(|&c| (y[2] - c) * (y_next[2] - c) < 0.0);
        if let Some(c) = crossed {
            let (mut lo, mut hi) = (0.0_f64, spec.h.abs());
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let ym = stepper.step(&y, spec.h.signum() * mid);
                if (y[2] - c) * (ym[2] - c) < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let t_c = 0.5 * (lo + hi);
            let mut y_c = stepper.step(&y, spec.h.signum() * t_c);
            let incoming = (y[2] - c).signum();
            y_c[2] = c;
            stepper.project_x(&mut y_c);
            let s_c = s + spec.h.signum() * t_c;
            nodes.push(stepper.node(s_c, y_c, incoming));
            out.branches.push(std::mem::take(&mut nodes));
            out.corner_s.push(s_c);
            nodes.push(stepper.node(s_c, y_c, -incoming));
            s = s_c;
            y = y_c;
            y[2] -= incoming * 1e-12;
            continue;
        }

        // Turning event: `sigma'` changes sign. Detection stays disarmed
        // for the step leaving a turn, where the sign at the node is noise.
        if spec.stop_turns.is_some() && (s - last_turn).abs() > 0.5 * spec.h.abs() {
            let d0 = stepper.rhs(&y)[2];
            let d1 = stepper.rhs(&y_next)[2];
            if d0 * d1 < 0.0 {
                let (mut lo, mut hi) = (0.0_f64, spec.h.abs());
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let ym = stepper.step(&y, spec.h.signum() * mid);
                    if d0 * stepper.rhs(&ym)[2] < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let t_t = 0.5 * (lo + hi);
                let y_t = stepper.step(&y, spec.h.signum() * t_t);
                let s_t = s + spec.h.signum() * t_t;
                nodes.push(stepper.node(s_t, y_t, 0.0));
                out.turns.push(s_t);
                s = s_t;
                y = y_t;
                last_turn = s_t;
                if out.turns.len() >= spec.stop_turns.unwrap_or(usize::MAX) {
                    out.branches.push(std::mem::take(&mut nodes));
                    return Ok(out);
                }
                continue;
            }
        }

        s += spec.h;
        y = y_next;
        nodes.push(stepper.node(s, y, 0.0));

        let u = stepper.profile.point(y[2]).x;
        let z_done = spec.z_half.is_some_and(|zh| (y[1] - z0).abs() >= zh);
        if z_done || u <= spec.u_min {
            out.branches.push(std::mem::take(&mut nodes));
            return Ok(out);
        }
    }
    Err(Error::solver(format!(
        "profile march exceeded {} steps without meeting its stop condition",
        spec.max_steps
    )))
}

/// Merge a backward and a forward march from a common start into ascending
/// branches, recording whether the start itself sits on a corner.
fn assemble(
    backward: March,
    forward: March,
    start_on_corner: bool,
    class: ProfileClass,
    lambda: f64,
    flux: f64,
    step: f64,
) -> ProfileCurve {
    let mut branches: Vec<Vec<Node>> = Vec::new();
    for mut b in backward.branches.into_iter().rev() {
        b.reverse();
        branches.push(b);
    }
    let mut corner_s: Vec<f64> = backward.corner_s;
    corner_s.extend(forward.corner_s.iter().copied());
    if start_on_corner {
        corner_s.push(forward.branches[0][0].s);
        branches.extend(forward.branches);
    } else {
        // Stitch the two branches that share the start node.
        let mut fwd = forward.branches.into_iter();
        let first_fwd = fwd.next().expect("forward march returns a branch");
        match branches.last_mut() {
            Some(last) => {
                last.pop();
                last.extend(first_fwd);
            }
            None => branches.push(first_fwd),
        }
        branches.extend(fwd);
    }
    corner_s.sort_by(f64::total_cmp);
    let s_range = (
        branches[0][0].s,
        branches[branches.len() - 1].last().expect("nonempty branch").s,
    );
    ProfileCurve {
        class,
        lambda,
        flux,
        step,
        branches: branches.into_iter().map(|nodes| ProfileBranch { nodes }).collect(),
        corner_s,
        s_range,
        period: None,
        pitch: None,
        lambda_residual: 0.0,
    }
}

fn solve_wulff(
    body: &ProductWulff,
    lambda_target: f64,
    opts: &SolveOptions,
) -> Result<ProfileCurve> {
    if !(lambda_target < 0.0) {
        return Err(Error::param(
            "lambda",
            format!("rescaled-body profiles need Lambda < 0, got {lambda_target}"),
        ));
    }
    let r = 2.0 / lambda_target.abs();
    let p_eq = body.profile.point(body.sigma_eq);
    let start = [r * body.u_max, r * p_eq.y, body.sigma_eq];
    let stepper = Stepper {
        profile: &body.profile,
        lambda: lambda_target,
        flux: 0.0,
        south: body.south,
        north: body.north,
        corners: &body.corner_sigmas,
    };
    let on_corner = body
        .corner_sigmas
        .iter()
        .any(|&c| (c - body.sigma_eq).abs() < 1e-12);
    let spec = |h: f64, side: f64| MarchSpec {
        h,
        initial_side: side,
        stop_turns: None,
        z_half: opts.z_half,
        u_min: opts.u_floor * body.u_max,
        max_steps: 2_000_000,
    };
    // Forward sigma increases here, so a corner start opens upward.
    let fwd = march(&stepper, start, 0.0, &spec(opts.step, if on_corner { 1.0 } else { 0.0 }))?;
    let bwd = march(
        &stepper,
        start,
        0.0,
        &spec(-opts.step, if on_corner { -1.0 } else { 0.0 }),
    )?;
    Ok(assemble(
        bwd,
        fwd,
        on_corner,
        ProfileClass::Wulff,
        lambda_target,
        0.0,
        opts.step,
    ))
}

fn solve_catenoid(
    body: &ProductWulff,
    lambda_target: f64,
    opts: &SolveOptions,
) -> Result<ProfileCurve> {
    if lambda_target.abs() > 1e-12 {
        return Err(Error::param(
            "lambda",
            format!("catenoid profiles have Lambda = 0, got {lambda_target}"),
        ));
    }
    let neck = opts.neck_radius.unwrap_or(0.5 * body.u_max);
    if !(neck > 0.0) {
        return Err(Error::param(
            "neck_radius",
            format!("must be positive, got {neck}"),
        ));
    }
    let flux = body.u_max * neck;
    let z_half = opts.z_half.unwrap_or(2.2 * neck);
    let start = [neck, 0.0, body.sigma_eq];
    let stepper = Stepper {
        profile: &body.profile,
        lambda: 0.0,
        flux,
        south: body.south,
        north: body.north,
        corners: &body.corner_sigmas,
    };
    let on_corner = body
        .corner_sigmas
        .iter()
        .any(|&c| (c - body.sigma_eq).abs() < 1e-12);
    let spec = |h: f64, side: f64| MarchSpec {
        h,
        initial_side: side,
        stop_turns: None,
        z_half: Some(z_half),
        u_min: opts.u_floor * body.u_max,
        max_steps: 2_000_000,
    };
    // Forward sigma decreases (sigma' = -u/(x w) < 0): a corner start opens
    // below going forward, above going backward.
    let fwd = march(&stepper, start, 0.0, &spec(opts.step, if on_corner { -1.0 } else { 0.0 }))?;
    let bwd = march(
        &stepper,
        start,
        0.0,
        &spec(-opts.step, if on_corner { 1.0 } else { 0.0 }),
    )?;
    Ok(assemble(
        bwd,
        fwd,
        on_corner,
        ProfileClass::Catenoid,
        0.0,
        flux,
        opts.step,
    ))
}

fn solve_cylinder(
    body: &ProductWulff,
    lambda_target: f64,
    opts: &SolveOptions,
) -> Result<ProfileCurve> {
    if !(lambda_target < 0.0) {
        return Err(Error::param(
            "lambda",
            format!("cylinder profiles need Lambda < 0, got {lambda_target}"),
        ));
    }
    let x0 = body.u_max / lambda_target.abs();
    let z_half = opts.z_half.unwrap_or(1.5 * x0);
    let flux = body.u_max * x0 + 0.5 * lambda_target * x0 * x0;
    let node = |s: f64| Node {
        s,
        y: [x0, s, body.sigma_eq],
        dy: [0.0, 1.0, 0.0],
        ddy: [0.0, 0.0, 0.0],
    };
    let mut nodes = Vec::new();
    let count = ((2.0 * z_half / opts.step).ceil() as usize).clamp(2, 4096);
    for i in 0..=count {
        let s = -z_half + 2.0 * z_half * i as f64 / count as f64;
        nodes.push(node(s));
    }
    Ok(ProfileCurve {
        class: ProfileClass::Cylinder,
        lambda: lambda_target,
        flux,
        step: opts.step,
        branches: vec![ProfileBranch { nodes }],
        corner_s: Vec::new(),
        s_range: (-z_half, z_half),
        period: None,
        pitch: None,
        lambda_residual: 0.0,
    })
}

fn solve_unduloid(
    body: &ProductWulff,
    lambda_target: f64,
    opts: &SolveOptions,
) -> Result<ProfileCurve> {
    if !(lambda_target < 0.0) {
        return Err(Error::param(
            "lambda",
            format!("unduloid profiles need Lambda < 0, got {lambda_target}"),
        ));
    }
    let lam = lambda_target.abs();
    let cyl = body.u_max / lam;
    let max_bulge = 2.0 * body.u_max / lam;
    let bulge = opts.bulge_radius.unwrap_or(1.5 * cyl);
    if !(bulge > cyl) || !(bulge < max_bulge) {
        return Err(Error::solver(format!(
            "no unduloid with bulge radius {bulge}: the radius must lie strictly \
             between the cylinder radius {cyl} and the rescaled-body radius {max_bulge}"
        )));
    }
    let flux = body.u_max * bulge + 0.5 * lambda_target * bulge * bulge;
    // Start at the lower turning point of sigma: u = sqrt(2 |Lambda| flux),
    // x = sqrt(2 flux / |Lambda|), on the rising side of the profile.
    let u_t = (2.0 * lam * flux).sqrt();
    let x_t = (2.0 * flux / lam).sqrt();
    let sigma_start = {
        let (mut lo, mut hi) = (body.south + 1e-9, body.sigma_eq);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if body.profile.point(mid).x < u_t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let start = [x_t, 0.0, sigma_start];
    let stepper = Stepper {
        profile: &body.profile,
        lambda: lambda_target,
        flux,
        south: body.south,
        north: body.north,
        corners: &body.corner_sigmas,
    };
    let periods = opts.periods.max(1);
    let spec = MarchSpec {
        h: opts.step,
        initial_side: 0.0,
        stop_turns: Some(2 * periods),
        z_half: None,
        u_min: 0.0,
        max_steps: 4_000_000,
    };
    let fwd = march(&stepper, start, 0.0, &spec)?;
    if fwd.turns.len() < 2 {
        return Err(Error::solver(
            "unduloid march ended before completing one period".to_string(),
        ));
    }
    let period = fwd.turns[1];
    let empty = March {
        branches: Vec::new(),
        corner_s: Vec::new(),
        turns: Vec::new(),
    };
    let mut curve = assemble(
        empty,
        fwd,
        false,
        ProfileClass::Unduloid,
        lambda_target,
        flux,
        opts.step,
    );
    curve.pitch = Some(curve.eval(period).z - curve.eval(0.0).z);
    curve.period = Some(period);
    Ok(curve)
}

/// Chart of the assembled surface: the meridian dense output swept by the
/// cross-section curve.
struct DelaunayChart {
    profile: Arc<ProfileCurve>,
    cross: Arc<PlanarCurve>,
}

impl Chart for DelaunayChart {
    fn jet1(&self, s: f64, t: f64) -> Jet1 {
        let p = self.profile.eval(s);
        let c = self.cross.point(t);
        let dc = self.cross.velocity(t);
        Jet1 {
            x: Vector3::new(p.x * c.x, p.x * c.y, p.z),
            xs: Vector3::new(p.dx * c.x, p.dx * c.y, p.dz),
            xt: Vector3::new(p.x * dc.x, p.x * dc.y, 0.0),
        }
    }

    fn jet2(&self, s: f64, t: f64) -> Option<Jet2> {
        let p = self.profile.eval(s);
        let c = self.cross.point(t);
        let dc = self.cross.velocity(t);
        let ddc = self.cross.acceleration(t);
        Some(Jet2 {
            xss: Vector3::new(p.ddx * c.x, p.ddx * c.y, p.ddz),
            xst: Vector3::new(p.dx * dc.x, p.dx * dc.y, 0.0),
            xtt: Vector3::new(p.x * ddc.x, p.x * ddc.y, 0.0),
        })
    }
}

/// A built surface plus the parameter layout needed to address it.
#[derive(Clone)]
pub struct DelaunaySurface {
    pub surface: PiecewiseSurface,
    pub profile: Arc<ProfileCurve>,
    pub cross: Arc<PlanarCurve>,
    s_pieces: Vec<(f64, f64)>,
    t_pieces: Vec<(f64, f64)>,
}

impl DelaunaySurface {
    /// Patch index and coordinates for a meridian position and cross
    /// parameter, or `None` outside the covered range.
    pub fn patch_at(&self, s: f64, tau: f64) -> Option<(usize, f64, f64)> {
        let i = self
            .s_pieces
            .iter()
            .position(|&(a, b)| s >= a - 1e-12 && s <= b + 1e-12)?;
        let base = self.t_pieces[0].0;
        let mut t = tau;
        while t < base - 1e-12 {
            t += TAU;
        }
        while t >= base + TAU - 1e-12 {
            t -= TAU;
        }
        let j = self
            .t_pieces
            .iter()
            .position(|&(a, b)| t >= a - 1e-12 && t <= b + 1e-12)?;
        Some((i * self.t_pieces.len() + j, s, t))
    }
}

/// Assemble the piecewise surface swept by a solved meridian: patches are
/// the smooth rectangles between meridian corner circles and cross-section
/// corner lines, with edge records along both.
pub fn build_surface(profile: &ProfileCurve, cross: &PlanarCurve) -> Result<DelaunaySurface> {
    let profile = Arc::new(profile.clone());
    let cross_arc = Arc::new(cross.clone());
    let chart = Arc::new(DelaunayChart {
        profile: profile.clone(),
        cross: cross_arc.clone(),
    });

    let mut s_breaks = vec![profile.s_range.0];
    s_breaks.extend(
        profile
            .corner_s
            .iter()
            .copied()
            .filter(|&s| s > profile.s_range.0 + 1e-12 && s < profile.s_range.1 - 1e-12),
    );
    s_breaks.push(profile.s_range.1);
    let s_pieces: Vec<(f64, f64)> = s_breaks.windows(2).map(|w| (w[0], w[1])).collect();

    let cross_corners = cross.corners();
    let t_pieces: Vec<(f64, f64)> = if cross_corners.is_empty() {
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

    let n_s = s_pieces.len();
    let n_t = t_pieces.len();
    let mut patches = Vec::new();
    for (i, &(a, b)) in s_pieces.iter().enumerate() {
        for (j, &(t0, t1)) in t_pieces.iter().enumerate() {
            patches.push(ParametricPatch::new(
                format!("delaunay_s{i}_t{j}"),
                chart.clone() as Arc<dyn Chart>,
                (a, b),
                (t0, t1),
                -1.0,
            ));
        }
    }
    let patch_id = |i: usize, j: usize| i * n_t + j;

    let mut edges = Vec::new();
    // Sharp circles where the meridian crosses a body corner. The two sides
    // are addressed a hair inside their patches so each chart evaluation
    // stays on its own branch of the dense output.
    let delta = 1e-10 * (profile.s_range.1 - profile.s_range.0).max(1.0);
    for i in 1..n_s {
        let sc = s_pieces[i].0;
        let p = profile.eval(sc);
        for (j, &(t0, t1)) in t_pieces.iter().enumerate() {
            let cross_c = cross_arc.clone();
            let cross_t = cross_arc.clone();
            let (xc, zc) = (p.x, p.z);
            edges.push(Edge {
                name: format!("meridian_corner_{i}_t{j}"),
                curve: Arc::new(move |tau: f64| {
                    let c = cross_c.point(tau);
                    Vector3::new(xc * c.x, xc * c.y, zc)
                }),
                tangent: Arc::new(move |tau: f64| {
                    let dc = cross_t.velocity(tau);
                    Vector3::new(xc * dc.x, xc * dc.y, 0.0)
                }),
                tau_range: (t0, t1),
                left: patch_id(i - 1, j),
                right: patch_id(i, j),
                left_param: Arc::new(move |tau: f64| (sc - delta, tau)),
                right_param: Arc::new(move |tau: f64| (sc + delta, tau)),
            });
        }
    }
    // Lines along cross-section corners.
    if n_t > 1 {
        for (j, &(t0, _)) in t_pieces.iter().enumerate() {
            let j_prev = (j + n_t - 1) % n_t;
            let t_prev = t_pieces[j_prev].1;
            let c = cross.point(t0);
            for (i, &(a, b)) in s_pieces.iter().enumerate() {
                let prof_c = profile.clone();
                let prof_t = profile.clone();
                let (cx, cy) = (c.x, c.y);
                edges.push(Edge {
                    name: format!("cross_corner_{j}_s{i}"),
                    curve: Arc::new(move |s: f64| {
                        let p = prof_c.eval(s);
                        Vector3::new(p.x * cx, p.x * cy, p.z)
                    }),
                    tangent: Arc::new(move |s: f64| {
                        let p = prof_t.eval(s);
                        Vector3::new(p.dx * cx, p.dx * cy, p.dz)
                    }),
                    tau_range: (a, b),
                    left: patch_id(i, j_prev),
                    right: patch_id(i, j),
                    left_param: Arc::new(move |s: f64| (s, t_prev)),
                    right_param: Arc::new(move |s: f64| (s, t0)),
                });
            }
        }
    }

    Ok(DelaunaySurface {
        surface: PiecewiseSurface {
            patches,
            edges,
            closed: false,
            genus: None,
        },
        profile,
        cross: cross_arc,
        s_pieces,
        t_pieces,
    })
}

/// The tangency construction of the Cahn-Hoffman field: find the body
/// parameter whose tangent plane matches the surface's at `(s, tau)` and
/// return the body point there. Independent of the `sigma(s)` the solver
/// stored, so it cross-validates the solve against the density gradient.
pub fn xi_by_tangency(
    body: &ProductWulff,
    profile: &ProfileCurve,
    s: f64,
    tau: f64,
) -> Result<Vector3<f64>> {
    let p = profile.eval(s);
    let speed = (p.dx * p.dx + p.dz * p.dz).sqrt();
    if speed < 1e-12 {
        return Err(Error::solver(format!(
            "meridian fails to immerse at s = {s}"
        )));
    }
    // Outward meridian normal angle in the (u, v) plane.
    let phi = (-p.dx).atan2(p.dz);
    let mut sigma = body.profile.param_at_normal(phi);
    while sigma < body.south - 1e-9 {
        sigma += TAU;
    }
    if sigma > body.north + 1e-9 {
        return Err(Error::solver(format!(
            "surface normal at s = {s} lies outside the body's attained set"
        )));
    }
    Ok(body.chi(sigma, tau))
}

/// Outcome of comparing `Lambda` profiles across two cross sections.
#[derive(Debug, Clone)]
pub struct CrossComparison {
    pub samples: usize,
    /// Max over matched meridian positions of the `Lambda` difference.
    pub max_gap: f64,
    /// Max deviation from the target on either surface.
    pub max_dev: f64,
    pub lambda_target: f64,
}

/// Verify that one solved meridian yields the same constant `Lambda` under
/// two different cross sections, each measured by the generic evaluator
/// with its own product density.
pub fn cross_section_independence(
    profile: &ProfileCurve,
    body_a: &ProductWulff,
    body_b: &ProductWulff,
    per_branch: usize,
) -> Result<CrossComparison> {
    let built_a = build_surface(profile, &body_a.cross)?;
    let built_b = build_surface(profile, &body_b.cross)?;
    let mut samples = 0usize;
    let mut max_gap = 0.0_f64;
    let mut max_dev = 0.0_f64;
    let lambda_at = |built: &DelaunaySurface, body: &ProductWulff, s: f64| -> Result<f64> {
        let mut acc = 0.0;
        let mut count = 0usize;
        for tau in [0.9, 3.5] {
            let (pidx, ps, pt) = built
                .patch_at(s, tau)
                .ok_or_else(|| Error::solver(format!("sample s = {s} misses all patches")))?;
            let f = built.surface.fields_at(body.gamma(), pidx, ps, pt)?;
            acc += f.lambda;
            count += 1;
        }
        Ok(acc / count as f64)
    };
    for (a, b) in profile.branch_ranges() {
        let span = b - a;
        for i in 0..per_branch.max(2) {
            let s = a + span * (0.05 + 0.9 * i as f64 / (per_branch.max(2) - 1) as f64);
            let la = lambda_at(&built_a, body_a, s)?;
            let lb = lambda_at(&built_b, body_b, s)?;
            max_gap = max_gap.max((la - lb).abs());
            max_dev = max_dev
                .max((la - profile.lambda).abs())
                .max((lb - profile.lambda).abs());
            samples += 1;
        }
    }
    Ok(CrossComparison {
        samples,
        max_gap,
        max_dev,
        lambda_target: profile.lambda,
    })
}

/// Meridian table `(s, x, z, Lambda)` with `Lambda` from the generic
/// evaluator on the given built surface.
pub fn profile_table(
    built: &DelaunaySurface,
    gamma: &Anisotropy,
    rows: usize,
) -> Result<Vec<(f64, f64, f64, f64)>> {
    let (s0, s1) = built.profile.s_range;
    let mut out = Vec::with_capacity(rows);
    let tau = midpoint(built.t_pieces[0]);
    for i in 0..rows.max(2) {
        let f = (i as f64 + 0.5) / rows.max(2) as f64;
        let s = s0 + f * (s1 - s0);
        let p = built.profile.eval(s);
        let lambda = match built.patch_at(s, tau) {
            Some((pidx, ps, pt)) => built
                .surface
                .fields_at(gamma, pidx, ps, pt)
                .map(|f| f.lambda)
                .unwrap_or(f64::NAN),
            None => f64::NAN,
        };
        out.push((s, p.x, p.z, lambda));
    }
    Ok(out)
}

fn midpoint(range: (f64, f64)) -> f64 {
    0.5 * (range.0 + range.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_sphere_body() -> ProductWulff {
        ProductWulff::new(
            PlanarCurve::circle(1.0).unwrap(),
            PlanarCurve::circle(1.0).unwrap(),
        )
        .unwrap()
    }

    fn lens_body() -> ProductWulff {
        ProductWulff::new(
            PlanarCurve::lens(1.0, 1.8).unwrap(),
            PlanarCurve::circle(1.0).unwrap(),
        )
        .unwrap()
    }

    fn arcgon_body() -> ProductWulff {
        ProductWulff::new(
            PlanarCurve::circle(1.0).unwrap(),
            PlanarCurve::arcgon(3, 1.0, 1.4).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn quintic_basis_reproduces_a_degree_five_polynomial() {
        let f = |u: f64| 1.0 + u * (2.0 - u * (3.0 - u * (1.5 + u * (0.5 - 0.25 * u))));
        let df = |u: f64| 2.0 - 6.0 * u + 4.5 * u * u + 2.0 * u * u * u - 1.25 * u.powi(4);
        let ddf = |u: f64| -6.0 + 9.0 * u + 6.0 * u * u - 5.0 * u.powi(3);
        let c = [f(0.0), df(0.0), ddf(0.0), f(1.0), df(1.0), ddf(1.0)];
        for i in 0..=20 {
            let u = i as f64 / 20.0;
            let (p, dp, ddp) = quintic_basis(u);
            let mut v = [0.0_f64; 3];
            for k in 0..6 {
                v[0] += c[k] * p[k];
                v[1] += c[k] * dp[k];
                v[2] += c[k] * ddp[k];
            }
            assert!((v[0] - f(u)).abs() < 1e-12);
            assert!((v[1] - df(u)).abs() < 1e-11);
            assert!((v[2] - ddf(u)).abs() < 1e-10);
        }
    }

    #[test]
    fn widest_point_of_circle_and_lens_profiles() {
        let body = unit_sphere_body();
        assert!((body.u_max() - 1.0).abs() < 1e-9);
        let lens = lens_body();
        assert!((lens.u_max() - 1.0).abs() < 1e-9);
        // The lens is widest at its corner.
        assert!(lens
            .corner_sigmas
            .iter()
            .any(|&c| (c - lens.sigma_eq()).abs() < 1e-12));
    }

    #[test]
    fn rescaled_body_profile_traces_the_sphere() {
        let body = unit_sphere_body();
        let curve = solve_profile(&body, -2.0, ProfileClass::Wulff, 1e-3).unwrap();
        for i in 0..=40 {
            let s = curve.s_range.0
                + (curve.s_range.1 - curve.s_range.0) * i as f64 / 40.0;
            let p = curve.eval(s);
            let r = (p.x * p.x + p.z * p.z).sqrt();
            assert!((r - 1.0).abs() < 1e-8, "radius {r} at s = {s}");
        }
        assert!(curve.lambda_residual <= 1e-8, "{}", curve.lambda_residual);
    }

    #[test]
    fn isotropic_catenoid_matches_the_cosh_oracle() {
        let body = unit_sphere_body();
        let curve = solve_profile(&body, 0.0, ProfileClass::Catenoid, 1e-3).unwrap();
        let c = 0.5;
        let mut max_err = 0.0_f64;
        for i in 0..=200 {
            let s = curve.s_range.0
                + (curve.s_range.1 - curve.s_range.0) * i as f64 / 200.0;
            let p = curve.eval(s);
            max_err = max_err.max((p.x - c * (p.z / c).cosh()).abs());
        }
        assert!(max_err <= 1e-6, "catenoid deviates {max_err:.3e} from cosh");
        assert!(curve.corner_s.is_empty());
        assert_eq!(curve.branches.len(), 1);
    }

    #[test]
    fn unduloid_profile_is_periodic_with_recorded_pitch() {
        let body = unit_sphere_body();
        let curve = solve_profile(&body, -1.5, ProfileClass::Unduloid, 1e-3).unwrap();
        let period = curve.period.expect("period recorded");
        let pitch = curve.pitch.expect("pitch recorded");
        assert!(pitch > 0.0);
        for i in 0..=20 {
            let s = curve.s_range.0 + period * i as f64 / 20.0;
            let p0 = curve.eval(s);
            let p1 = curve.eval(s + period);
            assert!((p1.x - p0.x).abs() < 1e-6, "x gap at s = {s}");
            assert!((p1.z - p0.z - pitch).abs() < 1e-6, "z gap at s = {s}");
        }
        // Neck and bulge radii from the flux quadratic.
        let disc = (body.u_max().powi(2) - 2.0 * 1.5 * curve.flux).sqrt();
        let neck = (body.u_max() - disc) / 1.5;
        let bulge = (body.u_max() + disc) / 1.5;
        let xs: Vec<f64> = (0..=400)
            .map(|i| curve.eval(curve.s_range.0 + period * i as f64 / 400.0).x)
            .collect();
        let x_min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let x_max = xs.iter().cloned().fold(0.0, f64::max);
        assert!((x_min - neck).abs() < 1e-5, "neck {x_min} vs {neck}");
        assert!((x_max - bulge).abs() < 1e-5, "bulge {x_max} vs {bulge}");
    }

    #[test]
    fn cornered_body_catenoid_has_one_sharp_neck_circle() {
        let body = lens_body();
        let curve = solve_profile(&body, 0.0, ProfileClass::Catenoid, 1e-3).unwrap();
        assert_eq!(curve.corner_s.len(), 1);
        assert!(curve.corner_s[0].abs() < 1e-12);
        assert_eq!(curve.branches.len(), 2);
        let built = build_surface(&curve, &body.cross).unwrap();
        assert_eq!(built.surface.patches.len(), 2);
        assert_eq!(built.surface.edges.len(), 1);
        let report = built.surface.equilibrium_check(body.gamma(), 16, 32);
        // The target here is zero, so the report's constancy flag floors at
        // 1e-9, the dense-output noise level. The gates the surface is
        // built to meet are 1e-6 on Lambda and 1e-8 on the edge jump.
        assert!(report.lambda_max_dev <= 1e-6, "{report:?}");
        assert!(report.edges_balanced, "{report:?}");
        assert!(report.edges[0].max_xi_jump <= 1e-8);
    }

    #[test]
    fn cornered_body_unduloid_passes_the_equilibrium_check() {
        let body = lens_body();
        let curve = solve_profile(&body, -1.5, ProfileClass::Unduloid, 1e-3).unwrap();
        assert!(curve.corner_s.len() >= 4, "necks and bulges are corners");
        let built = build_surface(&curve, &body.cross).unwrap();
        let report = built.surface.equilibrium_check(body.gamma(), 16, 32);
        assert!(report.lambda_constant, "{report:?}");
        assert!(report.edges_balanced, "{report:?}");
        assert!((report.lambda_mean - -1.5).abs() < 1e-6);
    }

    #[test]
    fn cornered_cross_section_unduloid_has_three_seam_lines() {
        let body = arcgon_body();
        let curve = solve_profile(&body, -1.5, ProfileClass::Unduloid, 1e-3).unwrap();
        assert!(curve.corner_s.is_empty());
        let built = build_surface(&curve, &body.cross).unwrap();
        assert_eq!(built.surface.patches.len(), 3);
        assert_eq!(built.surface.edges.len(), 3);
        let report = built.surface.equilibrium_check(body.gamma(), 16, 32);
        assert!(report.lambda_constant, "{report:?}");
        assert!(report.edges_balanced, "{report:?}");
    }

    #[test]
    fn tangency_field_matches_the_density_gradient() {
        let body = lens_body();
        let curve = solve_profile(&body, -1.5, ProfileClass::Unduloid, 1e-3).unwrap();
        let built = build_surface(&curve, &body.cross).unwrap();
        let mut max_err = 0.0_f64;
        for (a, b) in curve.branch_ranges() {
            for i in 0..6 {
                let s = a + (b - a) * (0.08 + 0.84 * i as f64 / 5.0);
                for tau in [0.4, 2.2, 5.1] {
                    let xi_t = xi_by_tangency(&body, &curve, s, tau).unwrap();
                    let (pidx, ps, pt) = built.patch_at(s, tau).unwrap();
                    let f = built.surface.fields_at(body.gamma(), pidx, ps, pt).unwrap();
                    max_err = max_err.max((xi_t - f.xi).norm());
                }
            }
        }
        assert!(max_err <= 1e-6, "tangency field deviates {max_err:.3e}");
    }

    #[test]
    fn lambda_profile_ignores_the_cross_section() {
        let circle_body = unit_sphere_body();
        let arcgon = arcgon_body();
        let curve = solve_profile(&circle_body, 0.0, ProfileClass::Catenoid, 1e-3).unwrap();
        let cmp = cross_section_independence(&curve, &circle_body, &arcgon, 8).unwrap();
        assert!(cmp.max_gap <= 1e-6, "{cmp:?}");
        assert!(cmp.max_dev <= 1e-6, "{cmp:?}");

        let sphere = solve_profile(&circle_body, -2.0, ProfileClass::Wulff, 1e-3).unwrap();
        let cmp = cross_section_independence(&sphere, &circle_body, &arcgon, 8).unwrap();
        assert!(cmp.max_gap <= 1e-6, "{cmp:?}");
        assert!(cmp.max_dev <= 1e-6, "{cmp:?}");
    }

    #[test]
    fn cylinder_profile_hits_its_curvature_target() {
        let body = unit_sphere_body();
        let curve = solve_profile(&body, -1.25, ProfileClass::Cylinder, 1e-2).unwrap();
        assert!((curve.eval(0.3).x - 0.8).abs() < 1e-12);
        assert!(curve.lambda_residual <= 1e-8, "{}", curve.lambda_residual);
    }

    #[test]
    fn solver_rejects_inconsistent_targets() {
        let body = unit_sphere_body();
        assert!(solve_profile(&body, 0.5, ProfileClass::Unduloid, 1e-3).is_err());
        assert!(solve_profile(&body, -0.5, ProfileClass::Catenoid, 1e-3).is_err());
        assert!(solve_profile(&body, 1.0, ProfileClass::Wulff, 1e-3).is_err());
        let opts = SolveOptions {
            bulge_radius: Some(5.0),
            ..SolveOptions::with_step(1e-3)
        };
        assert!(solve_profile_with(&body, -1.0, ProfileClass::Unduloid, opts).is_err());
    }
}
