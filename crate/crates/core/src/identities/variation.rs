//! Variation identities: first variation of the energy against centered
//! differences, the cubic volume / quadratic energy expansions along the
//! Cahn-Hoffman offset, and the sign of the second variation.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{local, CheckContext};
use crate::anisotropy::Anisotropy;
use crate::error::Error;
use crate::quad::GaussLegendre;
use crate::report::CheckRecord;
use crate::surface::shapes::{DeltaJetFn, VariedChart};
use crate::surface::{ParametricPatch, PiecewiseSurface};
use crate::Result;

/// Energy of one patch displaced by `eps` times a variation field with
/// analytic partials.
fn varied_energy(
    patch: &ParametricPatch,
    gamma: &Anisotropy,
    delta: &Arc<DeltaJetFn>,
    eps: f64,
    order: usize,
) -> f64 {
    let chart = Arc::new(VariedChart {
        base: patch.chart.clone(),
        delta: delta.clone(),
        eps,
    });
    ParametricPatch::new(
        "varied",
        chart,
        patch.s_range,
        patch.t_range,
        patch.orientation,
    )
    .energy(gamma, order)
}

/// Counterclockwise boundary integral of `(xi x dGamma) . delta` around the
/// patch's parameter rectangle, oriented by the patch.
fn boundary_loop(
    patch: &ParametricPatch,
    gamma: &Anisotropy,
    delta: &dyn Fn(f64, f64) -> Vector3<f64>,
    order: usize,
) -> f64 {
    let (s0, s1) = patch.s_range;
    let (t0, t1) = patch.t_range;
    let gl = GaussLegendre::new(order);
    let term = |s: f64, t: f64, along_s: bool| -> f64 {
        let j = patch.jet1(s, t);
        let nu = patch.normal(s, t);
        let xi = gamma.xi(&nu);
        let tangent = if along_s { j.xs } else { j.xt };
        xi.cross(&tangent).dot(&delta(s, t))
    };
    let mut total = 0.0;
    for &(s, w) in gl.mapped(s0, s1).iter() {
        total += w * (term(s, t0, true) - term(s, t1, true));
    }
    for &(t, w) in gl.mapped(t0, t1).iter() {
        total += w * (term(s1, t, false) - term(s0, t, false));
    }
    patch.orientation * total
}

fn inset_patch(patch: &ParametricPatch, frac: f64) -> ParametricPatch {
    let ds = frac * patch.span_s();
    let dt = frac * patch.span_t();
    ParametricPatch::new(
        format!("{}_inset", patch.name),
        patch.chart.clone(),
        (patch.s_range.0 + ds, patch.s_range.1 - ds),
        (patch.t_range.0 + dt, patch.t_range.1 - dt),
        patch.orientation,
    )
}

fn open_surface(patch: ParametricPatch) -> PiecewiseSurface {
    PiecewiseSurface {
        patches: vec![patch],
        edges: Vec::new(),
        closed: false,
        genus: None,
    }
}

/// Analytic bump on a rectangle: a product of sin^4 windows that vanishes
/// to third order on the boundary, so Gauss rules converge spectrally and
/// the boundary loop contributes nothing.
fn bump_profile(
    patch: &ParametricPatch,
    s: f64,
    t: f64,
) -> (f64, f64, f64) {
    let window = |x: f64, lo: f64, span: f64| -> (f64, f64) {
        let u = (x - lo) / span;
        if !(0.0..=1.0).contains(&u) {
            return (0.0, 0.0);
        }
        let a = std::f64::consts::PI * u;
        let (sin, cos) = a.sin_cos();
        let w = sin.powi(4);
        let dw = 4.0 * sin.powi(3) * cos * std::f64::consts::PI / span;
        (w, dw)
    };
    let (ws, dws) = window(s, patch.s_range.0, patch.span_s());
    let (wt, dwt) = window(t, patch.t_range.0, patch.span_t());
    (ws * wt, dws * wt, ws * dwt)
}

struct VariationCase {
    name: &'static str,
    numeric: f64,
    formula: f64,
}

impl VariationCase {
    fn relative_residual(&self) -> f64 {
        (self.numeric - self.formula).abs() / (1.0 + self.numeric.abs().max(self.formula.abs()))
    }
}

pub fn check_first_variation(ctx: &CheckContext) -> CheckRecord {
    let mut rec = CheckRecord::new(
        "first_variation",
        "dF = -sum over faces of (integral Lambda dX.nu dSigma - loop (xi x dGamma).dX)",
    );
    let eps = 1e-5;
    let order = ctx.order;
    let v = Vector3::new(0.36, -0.22, 0.48);
    let mut cases: Vec<VariationCase> = Vec::new();

    if ctx.surface.closed {
        let fields = ctx.surface.fields(ctx.gamma, order);
        // Rigid translation: both sides vanish; the edge loops cancel by
        // continuity of xi, leaving the weighted normal integral.
        let energy_at = |eps: f64| -> f64 {
            ctx.surface
                .patches
                .iter()
                .map(|patch| {
                    let delta: Arc<DeltaJetFn> =
                        Arc::new(move |_, _| (v, Vector3::zeros(), Vector3::zeros()));
                    varied_energy(patch, ctx.gamma, &delta, eps, order)
                })
                .sum()
        };
        cases.push(VariationCase {
            name: "translation_closed",
            numeric: (energy_at(eps) - energy_at(-eps)) / (2.0 * eps),
            formula: fields.integrate(|f| -f.lambda * f.normal.dot(&v)),
        });

        // Dilation: scaling the whole surface doubles the energy rate.
        let dilation_at = |eps: f64| -> f64 {
            ctx.surface
                .patches
                .iter()
                .map(|patch| {
                    let chart = patch.chart.clone();
                    let delta: Arc<DeltaJetFn> = Arc::new(move |s, t| {
                        let j = chart.jet1(s, t);
                        (j.x, j.xs, j.xt)
                    });
                    varied_energy(patch, ctx.gamma, &delta, eps, order)
                })
                .sum()
        };
        cases.push(VariationCase {
            name: "dilation_closed",
            numeric: (dilation_at(eps) - dilation_at(-eps)) / (2.0 * eps),
            formula: fields.integrate(|f| -f.lambda * f.support),
        });
    }

    // Open sub-patch cases exercise the boundary loop explicitly.
    let sub = inset_patch(&ctx.surface.patches[0], 0.15);
    let sub_surface = open_surface(sub.clone());
    let sub_fields = sub_surface.fields(ctx.gamma, order);

    {
        let delta: Arc<DeltaJetFn> =
            Arc::new(move |_, _| (v, Vector3::zeros(), Vector3::zeros()));
        let numeric = (varied_energy(&sub, ctx.gamma, &delta, eps, order)
            - varied_energy(&sub, ctx.gamma, &delta, -eps, order))
            / (2.0 * eps);
        let interior = sub_fields.integrate(|f| -f.lambda * f.normal.dot(&v));
        let loop_term = boundary_loop(&sub, ctx.gamma, &|_, _| v, order);
        cases.push(VariationCase {
            name: "translation_patch",
            numeric,
            formula: interior - loop_term,
        });
    }

    {
        let chart = sub.chart.clone();
        let delta: Arc<DeltaJetFn> = Arc::new(move |s, t| {
            let j = chart.jet1(s, t);
            (j.x, j.xs, j.xt)
        });
        let numeric = (varied_energy(&sub, ctx.gamma, &delta, eps, order)
            - varied_energy(&sub, ctx.gamma, &delta, -eps, order))
            / (2.0 * eps);
        let interior = sub_fields.integrate(|f| -f.lambda * f.support);
        let position = |s: f64, t: f64| sub.jet1(s, t).x;
        let loop_term = boundary_loop(&sub, ctx.gamma, &position, order);
        cases.push(VariationCase {
            name: "dilation_patch",
            numeric,
            formula: interior - loop_term,
        });
    }

    {
        // Compactly supported normal bump: the loop term drops out.
        let bump_patch = sub.clone();
        let delta: Arc<DeltaJetFn> = Arc::new(move |s, t| {
            let (nu, nus, nut) = bump_patch.normal_jet(s, t);
            let (phi, phis, phit) = bump_profile(&bump_patch, s, t);
            (phi * nu, phis * nu + phi * nus, phit * nu + phi * nut)
        });
        let numeric = (varied_energy(&sub, ctx.gamma, &delta, eps, order)
            - varied_energy(&sub, ctx.gamma, &delta, -eps, order))
            / (2.0 * eps);
        let formula = sub_fields.integrate(|f| {
            let (phi, _, _) = bump_profile(&sub, f.s, f.t);
            -f.lambda * phi
        });
        cases.push(VariationCase {
            name: "normal_bump_patch",
            numeric,
            formula,
        });
    }

    let mut max_res = 0.0_f64;
    for case in &cases {
        let r = case.relative_residual();
        rec.note(format!(
            "{}: numeric {:.6e}, formula {:.6e}, relative residual {:.3e}",
            case.name, case.numeric, case.formula, r
        ));
        max_res = max_res.max(r);
    }
    rec.max_pointwise = max_res;
    rec.samples = cases.len();
    rec.tolerance = 1e-5 * ctx.tolerance_scale;
    rec.passed = max_res <= rec.tolerance && max_res.is_finite();
    rec
}

/// Exact-degree least squares fit of `ys` against powers of `xs`.
fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Vec<f64> {
    let scale = xs.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(1e-300);
    let design = DMatrix::from_fn(xs.len(), degree + 1, |i, j| (xs[i] / scale).powi(j as i32));
    let rhs = DVector::from_column_slice(ys);
    let solution = design
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .expect("least-squares solve");
    (0..=degree).map(|k| solution[k] / scale.powi(k as i32)).collect()
}

fn polyval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Fitted and analytic expansion data for the Cahn-Hoffman offset family
/// `X + eps xi`.
#[derive(Debug, Clone)]
pub struct ExpansionFit {
    pub eps_grid: Vec<f64>,
    /// Cubic volume coefficients `v0..v3`, fitted.
    pub v_fit: [f64; 4],
    /// Quadratic energy coefficients `f0..f2`, fitted.
    pub f_fit: [f64; 3],
    /// The same coefficients by direct quadrature of the densities.
    pub v_analytic: [f64; 4],
    pub f_analytic: [f64; 3],
    /// Max relative fit residual over the grid, volume then energy.
    pub v_fit_residual: f64,
    pub f_fit_residual: f64,
    pub ratio_v1: f64,
    pub ratio_v2: f64,
    pub s1: f64,
    pub s2: f64,
    /// `|eps^2` coefficient of `s(eps)^3 V(eps)| / v0`; zero when the
    /// normalization series is wired correctly.
    pub rescale_residual: f64,
    pub lambda_mean: f64,
    pub lambda_constant: bool,
}

pub fn expansion_fit(ctx: &CheckContext) -> Result<ExpansionFit> {
    if !ctx.surface.closed {
        return Err(Error::NotClosed {
            operation: "expansion fit",
        });
    }
    let eps_grid = vec![-0.1, -0.05, -0.025, 0.0, 0.025, 0.05, 0.1];
    let mut volumes = Vec::with_capacity(eps_grid.len());
    let mut energies = Vec::with_capacity(eps_grid.len());
    for &eps in &eps_grid {
        let expanded = ctx.surface.expanded(ctx.gamma, eps);
        volumes.push(expanded.volume(ctx.order)?);
        energies.push(expanded.energy(ctx.gamma, ctx.order));
    }
    let v_fit_vec = polyfit(&eps_grid, &volumes, 3);
    let f_fit_vec = polyfit(&eps_grid, &energies, 2);
    let v_fit = [v_fit_vec[0], v_fit_vec[1], v_fit_vec[2], v_fit_vec[3]];
    let f_fit = [f_fit_vec[0], f_fit_vec[1], f_fit_vec[2]];

    let rel_residual = |coeffs: &[f64], ys: &[f64]| -> f64 {
        eps_grid
            .iter()
            .zip(ys)
            .map(|(&x, &y)| (polyval(coeffs, x) - y).abs() / y.abs().max(1e-300))
            .fold(0.0_f64, f64::max)
    };

    let fields = ctx.surface.fields(ctx.gamma, ctx.order);
    let v_analytic = [
        fields.integrate(|f| f.support) / 3.0,
        fields.integrate(|f| f.gamma - f.lambda * f.support) / 3.0,
        fields.integrate(|f| f.support * f.det_dxi - f.lambda * f.gamma) / 3.0,
        fields.integrate(|f| f.gamma * f.det_dxi) / 3.0,
    ];
    let f_analytic = [
        fields.integrate(|f| f.gamma),
        fields.integrate(|f| -f.gamma * f.lambda),
        fields.integrate(|f| f.gamma * f.det_dxi),
    ];

    let (lambda_mean, lambda_dev) = fields.lambda_stats();
    let lambda_constant = lambda_dev <= 1e-6 * lambda_mean.abs() + 1e-9;
    let ratio_v1 = v_fit[1] / v_fit[0];
    let ratio_v2 = v_fit[2] / v_fit[0];
    let s1 = -ratio_v1 / 3.0;
    let s2 = 2.0 / 9.0 * ratio_v1 * ratio_v1 - ratio_v2 / 3.0;
    let c2 = v_fit[2] + 3.0 * s1 * v_fit[1] + 3.0 * (s2 + s1 * s1) * v_fit[0];

    Ok(ExpansionFit {
        v_fit_residual: rel_residual(&v_fit_vec, &volumes),
        f_fit_residual: rel_residual(&f_fit_vec, &energies),
        eps_grid,
        v_fit,
        f_fit,
        v_analytic,
        f_analytic,
        ratio_v1,
        ratio_v2,
        s1,
        s2,
        rescale_residual: c2.abs() / v_fit[0].abs().max(1e-300),
        lambda_mean,
        lambda_constant,
    })
}

pub fn expansion_record(ctx: &CheckContext) -> CheckRecord {
    let mut rec = CheckRecord::new(
        "volume_energy_expansion",
        "V(eps) integrates q + eps(gamma - Lambda q) + eps^2(q K_Sigma/K_W - Lambda gamma) \
         + eps^3 gamma K_Sigma/K_W over 3; F(eps) integrates gamma(1 - eps Lambda \
         + eps^2 K_Sigma/K_W)",
    );
    let fit = match expansion_fit(ctx) {
        Ok(fit) => fit,
        Err(err) => {
            rec.passed = false;
            rec.note(format!("error: {err}"));
            return rec;
        }
    };
    let coeff_scale_v = fit.v_analytic[0].abs();
    let coeff_scale_f = fit.f_analytic[0].abs();
    let mut max_coeff = 0.0_f64;
    for k in 0..4 {
        let denom = fit.v_analytic[k].abs().max(1e-3 * coeff_scale_v);
        max_coeff = max_coeff.max((fit.v_fit[k] - fit.v_analytic[k]).abs() / denom);
    }
    for k in 0..3 {
        let denom = fit.f_analytic[k].abs().max(1e-3 * coeff_scale_f);
        max_coeff = max_coeff.max((fit.f_fit[k] - fit.f_analytic[k]).abs() / denom);
    }

    rec.max_pointwise = fit.v_fit_residual.max(fit.f_fit_residual);
    rec.integral_residual = max_coeff;
    rec.samples = fit.eps_grid.len();
    rec.tolerance = 1e-6 * ctx.tolerance_scale;
    rec.note(format!(
        "fitted volume coefficients {:?}",
        fit.v_fit.map(|v| format!("{v:.9e}"))
    ));
    rec.note(format!(
        "fitted energy coefficients {:?}",
        fit.f_fit.map(|v| format!("{v:.9e}"))
    ));
    rec.note(format!(
        "fit residuals: volume {:.3e}, energy {:.3e}",
        fit.v_fit_residual, fit.f_fit_residual
    ));
    rec.note(format!(
        "normalization series s1 {:.9e}, s2 {:.9e}, rescale residual {:.3e}",
        fit.s1, fit.s2, fit.rescale_residual
    ));

    let mut ratios_ok = true;
    if fit.lambda_constant {
        let target1 = -1.5 * fit.lambda_mean;
        let target2 = 0.75 * fit.lambda_mean * fit.lambda_mean;
        let r1_err = (fit.ratio_v1 - target1).abs() / (1.0 + target1.abs());
        let r2_err = (fit.ratio_v2 - target2).abs() / (1.0 + target2.abs());
        ratios_ok = r1_err <= rec.tolerance && r2_err <= rec.tolerance;
        rec.note(format!(
            "equilibrium ratios: v1/v0 {:.9e} vs -3 Lambda/2 {:.9e}; v2/v0 {:.9e} vs \
             3 Lambda^2/4 {:.9e}",
            fit.ratio_v1, target1, fit.ratio_v2, target2
        ));
    } else {
        rec.note(format!(
            "Lambda not constant (mean {:.6e}); equilibrium ratio targets not applicable",
            fit.lambda_mean
        ));
    }

    rec.passed = fit.v_fit_residual <= 1e-9 * ctx.tolerance_scale
        && fit.f_fit_residual <= 1e-9 * ctx.tolerance_scale
        && max_coeff <= rec.tolerance
        && fit.rescale_residual <= 1e-9 * ctx.tolerance_scale
        && ratios_ok;
    rec
}

/// Second-variation summary at the Cahn-Hoffman equilibrium.
#[derive(Debug, Clone)]
pub struct SecondVariation {
    /// `integral gamma (K_Sigma/K_W - Lambda^2/4) dSigma`.
    pub delta2_f: f64,
    /// Minimum over samples of `Lambda^2/4 - K_Sigma/K_W`.
    pub min_pointwise: f64,
    pub energy: f64,
}

pub fn second_variation(ctx: &CheckContext) -> Result<SecondVariation> {
    if !ctx.surface.closed {
        return Err(Error::NotClosed {
            operation: "second variation",
        });
    }
    let eq = ctx.surface.equilibrium_check(ctx.gamma, ctx.order, 64);
    if !eq.passed() {
        return Err(Error::NotEquilibrium {
            message: format!(
                "Lambda deviates by {:.3e} (tolerance {:.3e}) and edges balance: {}",
                eq.lambda_max_dev, eq.lambda_tolerance, eq.edges_balanced
            ),
        });
    }
    let fields = ctx.surface.fields(ctx.gamma, ctx.order);
    let delta2_f =
        fields.integrate(|f| f.gamma * (f.det_dxi - f.lambda * f.lambda / 4.0));
    let min_pointwise = fields
        .samples
        .iter()
        .map(|f| f.lambda * f.lambda / 4.0 - f.det_dxi)
        .fold(f64::INFINITY, f64::min);
    Ok(SecondVariation {
        delta2_f,
        min_pointwise,
        energy: fields.energy(),
    })
}

pub fn second_variation_record(ctx: &CheckContext) -> CheckRecord {
    let mut rec = CheckRecord::new(
        "second_variation",
        "d2F = integral gamma (K_Sigma/K_W - Lambda^2/4) dSigma <= 0; pointwise \
         Lambda^2/4 - K_Sigma/K_W >= 0",
    );
    // Brute-force matrix oracle for the pointwise inequality.
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed.wrapping_add(0x5345_4356));
    let mut oracle_min = f64::INFINITY;
    for _ in 0..10_000 {
        let (a, dnu) = local::random_pair(&mut rng);
        oracle_min = oracle_min.min(local::spectral_gap(&(a * dnu)));
    }
    rec.note(format!(
        "random SPD x symmetric pairs: min tr^2/4 - det = {oracle_min:.3e} over 10000"
    ));

    match second_variation(ctx) {
        Ok(sv) => {
            rec.max_pointwise = (-sv.min_pointwise).max(0.0);
            rec.integral_residual = sv.delta2_f.abs() / sv.energy;
            rec.samples = 10_000;
            rec.tolerance = 1e-8 * ctx.tolerance_scale;
            let gap_zero = sv.delta2_f.abs() <= 1e-8 * sv.energy * ctx.tolerance_scale;
            rec.passed = sv.delta2_f <= 1e-8 * sv.energy * ctx.tolerance_scale
                && sv.min_pointwise >= -1e-10 * ctx.tolerance_scale
                && oracle_min >= -1e-12 * ctx.tolerance_scale;
            rec.note(format!(
                "d2F = {:.6e} against energy {:.6e}; pointwise min {:.3e}",
                sv.delta2_f, sv.energy, sv.min_pointwise
            ));
            if gap_zero {
                rec.note("stability gap vanishes (equality case)".to_string());
            }
        }
        Err(err) => {
            rec.passed = false;
            rec.note(format!("error: {err}"));
        }
    }
    rec
}
