//! Pointwise identities: the rotated conjugation relation for `d xi` and
//! the Jacobi-operator identity for the density composed with the Gauss
//! map.

use nalgebra::{Matrix2, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{interior_samples, CheckContext};
use crate::report::CheckRecord;

fn rot90() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, 0.0)
}

/// Frobenius norm of `J dxi + dxi^T J + Lambda J` with `J` the quarter
/// turn; zero in exact arithmetic whenever `Lambda = -tr(dxi)`.
pub fn conjugation_residual(dxi: &Matrix2<f64>, lambda: f64) -> f64 {
    let j = rot90();
    (j * dxi + dxi.transpose() * j + lambda * j).norm()
}

/// `tr(M)^2 / 4 - det M`; nonnegative whenever `M` is a product of a
/// symmetric positive definite matrix and a symmetric matrix.
pub fn spectral_gap(m: &Matrix2<f64>) -> f64 {
    let t = m.trace();
    t * t / 4.0 - m.determinant()
}

/// One random (SPD, symmetric) matrix pair for brute-force oracles.
pub fn random_pair(rng: &mut impl Rng) -> (Matrix2<f64>, Matrix2<f64>) {
    let m = Matrix2::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    );
    let a = m.transpose() * m + 0.05 * Matrix2::identity();
    let d1 = rng.gen_range(-2.0..2.0);
    let off = rng.gen_range(-2.0..2.0);
    let d2 = rng.gen_range(-2.0..2.0);
    let sym = Matrix2::new(d1, off, off, d2);
    (a, sym)
}

pub fn check_rotation_conjugation(ctx: &CheckContext) -> CheckRecord {
    let mut rec = CheckRecord::new(
        "rotation_conjugation",
        "J dxi + dxi^T J + Lambda J = 0 with J the quarter turn",
    );
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed.wrapping_add(0x524f_5443));
    let oracle_pairs = 10_000;
    let mut max_oracle = 0.0_f64;
    for _ in 0..oracle_pairs {
        let (a, dnu) = random_pair(&mut rng);
        let dxi = a * dnu;
        max_oracle = max_oracle.max(conjugation_residual(&dxi, -dxi.trace()));
    }

    let fields = ctx.surface.fields(ctx.gamma, ctx.order);
    let mut max_pipeline = 0.0_f64;
    for f in &fields.samples {
        max_pipeline = max_pipeline.max(conjugation_residual(&f.dxi, f.lambda));
    }

    rec.max_pointwise = max_oracle.max(max_pipeline);
    rec.samples = oracle_pairs + fields.samples.len();
    rec.tolerance = 1e-8 * ctx.tolerance_scale;
    rec.passed = max_oracle <= 1e-12 * ctx.tolerance_scale && max_pipeline <= rec.tolerance;
    rec.note(format!(
        "random SPD x symmetric pairs: max residual {max_oracle:.3e} over {oracle_pairs}"
    ));
    rec.note(format!(
        "surface samples: max residual {:.3e} over {}",
        max_pipeline,
        fields.samples.len()
    ));
    rec
}

/// Tangential gradient of `Lambda` at a sample, by centered differences in
/// the chart.
fn lambda_surface_gradient(
    ctx: &CheckContext,
    pidx: usize,
    s: f64,
    t: f64,
    h: f64,
) -> Option<Vector3<f64>> {
    let lam = |s: f64, t: f64| -> Option<f64> {
        ctx.surface.fields_at(ctx.gamma, pidx, s, t).ok().map(|f| f.lambda)
    };
    let dls = (lam(s + h, t)? - lam(s - h, t)?) / (2.0 * h);
    let dlt = (lam(s, t + h)? - lam(s, t - h)?) / (2.0 * h);
    let j = ctx.surface.patches[pidx].jet1(s, t);
    let g11 = j.xs.dot(&j.xs);
    let g12 = j.xs.dot(&j.xt);
    let g22 = j.xt.dot(&j.xt);
    let det = g11 * g22 - g12 * g12;
    Some(((g22 * dls - g12 * dlt) * j.xs + (g11 * dlt - g12 * dls) * j.xt) / det)
}

/// Residual of the Jacobi identity for the density composed with the Gauss
/// map at one sample, with the stencil width `h_rel` relative to the patch
/// span. Returns (identity residual, |transport term|); the transport term
/// measures how far the bare operator statement would be off on
/// non-equilibrium input. `None` at singular or boundary samples.
pub fn jacobi_residual(
    ctx: &CheckContext,
    pidx: usize,
    s: f64,
    t: f64,
    h_rel: f64,
) -> Option<(f64, f64)> {
    let f = ctx.surface.fields_at(ctx.gamma, pidx, s, t).ok()?;
    if f.kw_singular {
        return None;
    }
    let patch = &ctx.surface.patches[pidx];
    let span = patch.span_s().min(patch.span_t());
    let h = h_rel * span;
    let psi = |ps: f64, pt: f64| ctx.gamma.gamma(&patch.normal(ps, pt));
    let l = ctx.surface.jacobi_apply(ctx.gamma, pidx, &psi, s, t, h).ok()?;
    let grad_lambda = lambda_surface_gradient(ctx, pidx, s, t, 1e-4 * span)?;
    let transport = grad_lambda.dot(&(f.xi - f.gamma * f.normal));
    let r = (l + transport - (f.lambda * f.lambda - 2.0 * f.det_dxi)).abs();
    (r.is_finite() && transport.is_finite()).then_some((r, transport.abs()))
}

pub fn check_jacobi_of_gamma(ctx: &CheckContext) -> CheckRecord {
    let mut rec = CheckRecord::new(
        "jacobi_of_gamma",
        "L[gamma(nu)] + grad Lambda . D gamma = Lambda^2 - 2 K_Sigma / K_W \
         (the transport term vanishes at equilibrium)",
    );
    let per_patch = (1000 / ctx.surface.patches.len().max(1)).max(36);
    let samples = interior_samples(ctx.surface, per_patch, 0.06);

    let residual_at =
        |pidx: usize, s: f64, t: f64, h_rel: f64| jacobi_residual(ctx, pidx, s, t, h_rel);

    let mut max_res = 0.0_f64;
    let mut max_transport = 0.0_f64;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for &(pidx, s, t) in &samples {
        match residual_at(pidx, s, t, 5e-4) {
            Some((r, transport)) => {
                max_res = max_res.max(r);
                max_transport = max_transport.max(transport);
                used += 1;
            }
            None => skipped += 1,
        }
    }
    rec.note(format!(
        "transport term grad Lambda . D gamma reaches {max_transport:.3e}"
    ));

    // Stencil refinement on a subset: residuals should shrink at second
    // order until they hit the nested-difference roundoff floor.
    let stride = (samples.len() / 25).max(1);
    let rels = [2e-3, 1e-3, 5e-4];
    let mut decay = [0.0_f64; 3];
    for (slot, &h_rel) in rels.iter().enumerate() {
        for &(pidx, s, t) in samples.iter().step_by(stride) {
            if let Some((r, _)) = residual_at(pidx, s, t, h_rel) {
                decay[slot] = decay[slot].max(r);
            }
        }
    }
    let floor = 1e-8;
    let order_est = if decay[2] > floor && decay[0] > decay[2] {
        (decay[0] / decay[2]).ln() / 4.0_f64.ln()
    } else {
        2.0
    };
    let decay_ok = order_est >= 1.5 || decay[2] <= floor;
    rec.note(format!(
        "stencil maxima at h/span = 2e-3, 1e-3, 5e-4: {:.3e}, {:.3e}, {:.3e} (order {:.2})",
        decay[0], decay[1], decay[2], order_est
    ));

    // Cross-check: the normal speed of Lambda under the Cahn-Hoffman
    // variation equals L[gamma] + grad(Lambda) . D gamma.
    let eps = 1e-5;
    let plus = ctx.surface.expanded(ctx.gamma, eps);
    let minus = ctx.surface.expanded(ctx.gamma, -eps);
    let mut max_dlam = 0.0_f64;
    let mut dlam_used = 0usize;
    let dlam_stride = (samples.len() / 9).max(1);
    for &(pidx, s, t) in samples.iter().step_by(dlam_stride) {
        let patch = &ctx.surface.patches[pidx];
        let h = 1e-3 * patch.span_s().min(patch.span_t());
        let grad_h = 1e-4 * patch.span_s().min(patch.span_t());
        let f0 = match ctx.surface.fields_at(ctx.gamma, pidx, s, t) {
            Ok(f) if !f.kw_singular => f,
            _ => continue,
        };
        let lp = match plus.fields_at(ctx.gamma, pidx, s, t) {
            Ok(f) => f.lambda,
            Err(_) => continue,
        };
        let lm = match minus.fields_at(ctx.gamma, pidx, s, t) {
            Ok(f) => f.lambda,
            Err(_) => continue,
        };
        let dlam_num = (lp - lm) / (2.0 * eps);
        let psi = |ps: f64, pt: f64| ctx.gamma.gamma(&patch.normal(ps, pt));
        let l_gamma = match ctx.surface.jacobi_apply(ctx.gamma, pidx, &psi, s, t, h) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let grad_lambda = match lambda_surface_gradient(ctx, pidx, s, t, grad_h) {
            Some(g) => g,
            None => continue,
        };
        let tangential = f0.xi - f0.gamma * f0.normal;
        let rhs = l_gamma + grad_lambda.dot(&tangential);
        let r = (dlam_num - rhs).abs();
        if r.is_finite() {
            max_dlam = max_dlam.max(r);
            dlam_used += 1;
        }
    }
    rec.note(format!(
        "normal-speed cross-check: max |dLambda/deps - (L[gamma] + grad Lambda . D gamma)| \
         = {max_dlam:.3e} over {dlam_used} samples"
    ));

    rec.max_pointwise = max_res;
    rec.samples = used;
    rec.tolerance = 1e-4 * ctx.tolerance_scale;
    rec.passed = used > 0
        && max_res <= rec.tolerance
        && decay_ok
        && max_dlam <= 1e-3 * ctx.tolerance_scale;
    if skipped > 0 {
        rec.note(format!("skipped {skipped} samples (singular or boundary)"));
    }
    rec
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anisotropy::Anisotropy;
    use crate::surface::shapes;
    use nalgebra::Matrix3;

    #[test]
    fn conjugation_residual_is_roundoff_for_any_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let (a, dnu) = random_pair(&mut rng);
            let dxi = a * dnu;
            assert!(conjugation_residual(&dxi, -dxi.trace()) <= 1e-12);
        }
    }

    #[test]
    fn spectral_gap_is_nonnegative_for_spd_times_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10_000 {
            let (a, dnu) = random_pair(&mut rng);
            assert!(spectral_gap(&(a * dnu)) >= -1e-12);
        }
    }

    #[test]
    fn unit_sphere_jacobi_identity_is_exact() {
        let gamma = Anisotropy::isotropic();
        let sphere = shapes::sphere(1.0);
        let ctx = CheckContext::new(&gamma, &sphere, "sphere");
        let rec = check_jacobi_of_gamma(&ctx);
        assert!(rec.passed, "{rec:?}");
        assert!(rec.max_pointwise < 1e-6, "max {}", rec.max_pointwise);
    }

    #[test]
    fn stretched_ellipsoid_passes_under_anisotropic_density() {
        let q = Matrix3::from_diagonal(&Vector3::new(1.0, 1.3, 0.8));
        let gamma = Anisotropy::quadratic(q).unwrap();
        let ell = shapes::ellipsoid(1.0, 1.0, 2.0);
        let ctx = CheckContext::new(&gamma, &ell, "ellipsoid");
        let rec = check_jacobi_of_gamma(&ctx);
        assert!(rec.passed, "{rec:?}");
    }

    #[test]
    fn rotation_conjugation_holds_through_the_full_pipeline() {
        let q = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 4.0));
        let gamma = Anisotropy::quadratic(q).unwrap();
        let ell = shapes::ellipsoid(1.0, 1.0, 2.0);
        let ctx = CheckContext::new(&gamma, &ell, "ellipsoid");
        let rec = check_rotation_conjugation(&ctx);
        assert!(rec.passed, "{rec:?}");
        assert!(rec.max_pointwise <= 1e-8);
    }
}
