//! Acceptance gate: one test per release criterion, each printing a single
//! PASS/FAIL line with the measured numbers against the stated tolerances.
//!
//! Every tolerance here is a contract, not a wish: tests measure through
//! the public API and compare against independent oracles (closed forms,
//! brute-force matrix sampling, classical catenoid geometry).

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wulffgeo::anisotropy::Anisotropy;
use wulffgeo::curve::PlanarCurve;
use wulffgeo::delaunay::{
    build_surface, cross_section_independence, solve_profile, ProductWulff, ProfileClass,
};
use wulffgeo::identities::{
    check_closed_integrals, conjugation_residual, divergence_residual, expansion_fit,
    interior_samples, isoperimetric_ratio, jacobi_residual, random_pair, second_variation,
    CheckContext, DivergenceForm,
};
use wulffgeo::surface::{shapes, PiecewiseSurface};
use wulffgeo::wulff::{wulff_construct, wulff_surface};

fn verdict(criterion: &str, pass: bool, detail: String) {
    let flag = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {criterion}: {flag} ({detail})");
    assert!(pass, "criterion {criterion}: {detail}");
}

/// The four built-in density families, each with a (name, density) pair.
fn families() -> Vec<(&'static str, Anisotropy)> {
    vec![
        ("isotropic", Anisotropy::isotropic()),
        (
            "quadratic",
            Anisotropy::quadratic(Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 4.0))).unwrap(),
        ),
        ("lens", Anisotropy::lens(2.0).unwrap()),
        (
            "product",
            Anisotropy::product(
                PlanarCurve::lens(1.0, 1.8).unwrap(),
                PlanarCurve::circle(1.0).unwrap(),
            ),
        ),
    ]
}

fn quadratic_114() -> Anisotropy {
    Anisotropy::quadratic(Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 4.0))).unwrap()
}

/// Max residuals at stencil widths {2e-3, 1e-3, 5e-4} on a fixed sample
/// subset, plus the fitted decay order between the widest and finest.
fn decay_order(maxima: &[f64; 3]) -> (f64, bool) {
    let floor = 1e-8;
    if maxima[2] <= floor {
        return (2.0, true);
    }
    if maxima[0] <= maxima[2] {
        return (0.0, false);
    }
    let order = (maxima[0] / maxima[2]).ln() / 4.0_f64.ln();
    (order, order >= 1.5)
}

#[test]
fn criterion_1_isotropic_ground_truth() {
    let t0 = Instant::now();
    let gamma = Anisotropy::isotropic();
    let shape = wulff_construct(&gamma, 5000, 0).expect("isotropic construction");
    let hausdorff = shape.hausdorff_to_unit_sphere();
    let f_err = (shape.energy - 4.0 * PI).abs();
    let v_err = (shape.volume - 4.0 * PI / 3.0).abs();

    let w = wulff_surface(&gamma).expect("parametric unit ball boundary");
    let eq = w.equilibrium_check(&gamma, 24, 32);
    let lambda_err = (eq.lambda_mean + 2.0).abs().max(eq.lambda_max_dev);
    let secs = t0.elapsed().as_secs_f64();

    let pass = hausdorff <= 5e-3
        && f_err <= 1e-4
        && v_err <= 1e-4
        && lambda_err <= 1e-8
        && secs < 10.0;
    verdict(
        "1 isotropic ground truth",
        pass,
        format!(
            "hausdorff {hausdorff:.2e} <= 5e-3, |F - 4pi| {f_err:.2e} <= 1e-4, \
             |V - 4pi/3| {v_err:.2e} <= 1e-4, |Lambda + 2| {lambda_err:.2e} <= 1e-8, \
             {secs:.1}s < 10s"
        ),
    );
}

#[test]
fn criterion_2_conjugation_of_the_curvature_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut max_random = 0.0_f64;
    for _ in 0..10_000 {
        let (a, dnu) = random_pair(&mut rng);
        let dxi = a * dnu;
        max_random = max_random.max(conjugation_residual(&dxi, -dxi.trace()));
    }

    let cases = [
        (shapes::ellipsoid(1.0, 1.0, 2.0), quadratic_114()),
        (
            shapes::ellipsoid(0.9, 1.3, 1.7),
            Anisotropy::quadratic(Matrix3::from_diagonal(&Vector3::new(1.2, 0.8, 1.5))).unwrap(),
        ),
    ];
    let mut max_pipeline = 0.0_f64;
    let mut count = 0usize;
    for (surface, gamma) in &cases {
        for (pidx, s, t) in interior_samples(surface, 512, 0.05) {
            if let Ok(f) = surface.fields_at(gamma, pidx, s, t) {
                max_pipeline = max_pipeline.max(conjugation_residual(&f.dxi, f.lambda));
                count += 1;
            }
        }
    }

    let pass = max_random <= 1e-12 && max_pipeline <= 1e-8 && count >= 1000;
    verdict(
        "2 rotated conjugation",
        pass,
        format!(
            "random pairs max {max_random:.2e} <= 1e-12 over 10000, \
             pipeline max {max_pipeline:.2e} <= 1e-8 over {count} ellipsoid samples"
        ),
    );
}

#[test]
fn criterion_3_jacobi_identity_with_stencil_decay() {
    let surface = shapes::ellipsoid(1.0, 1.0, 2.0);
    let gammas = [("isotropic", Anisotropy::isotropic()), ("quadratic", quadratic_114())];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, gamma) in &gammas {
        let ctx = CheckContext::new(gamma, &surface, "ellipsoid");
        let samples = interior_samples(&surface, 1089, 0.06);

        let mut max_res = 0.0_f64;
        let mut used = 0usize;
        for &(pidx, s, t) in &samples {
            if let Some((r, _)) = jacobi_residual(&ctx, pidx, s, t, 5e-4) {
                max_res = max_res.max(r);
                used += 1;
            }
        }

        let stride = (samples.len() / 130).max(1);
        let mut maxima = [0.0_f64; 3];
        for (slot, h_rel) in [2e-3, 1e-3, 5e-4].into_iter().enumerate() {
            for &(pidx, s, t) in samples.iter().step_by(stride) {
                if let Some((r, _)) = jacobi_residual(&ctx, pidx, s, t, h_rel) {
                    maxima[slot] = maxima[slot].max(r);
                }
            }
        }
        let (order, decay_ok) = decay_order(&maxima);
        pass = pass && used >= 1000 && max_res <= 1e-4 && decay_ok;
        parts.push(format!(
            "{name}: max {max_res:.2e} <= 1e-4 over {used}, decay order {order:.2}"
        ));
    }
    verdict("3 Jacobi identity", pass, parts.join("; "));
}

#[test]
fn criterion_4_divergence_identities_and_closed_integrals() {
    let mut pass = true;
    let mut parts = Vec::new();

    let surface = shapes::ellipsoid(1.0, 1.0, 2.0);
    let gammas = [("isotropic", Anisotropy::isotropic()), ("quadratic", quadratic_114())];
    for (name, gamma) in &gammas {
        let ctx = CheckContext::new(gamma, &surface, "ellipsoid");
        let samples = interior_samples(&surface, 1089, 0.08);
        for form in [DivergenceForm::Support, DivergenceForm::Curvature] {
            let mut max_res = 0.0_f64;
            let mut used = 0usize;
            for &(pidx, s, t) in &samples {
                if let Some(r) = divergence_residual(&ctx, form, pidx, s, t, 5e-4) {
                    max_res = max_res.max(r);
                    used += 1;
                }
            }
            let stride = (samples.len() / 130).max(1);
            let mut maxima = [0.0_f64; 3];
            for (slot, h_rel) in [2e-3, 1e-3, 5e-4].into_iter().enumerate() {
                for &(pidx, s, t) in samples.iter().step_by(stride) {
                    if let Some(r) = divergence_residual(&ctx, form, pidx, s, t, h_rel) {
                        maxima[slot] = maxima[slot].max(r);
                    }
                }
            }
            let (order, decay_ok) = decay_order(&maxima);
            pass = pass && used >= 1000 && max_res <= 1e-4 && decay_ok;
            parts.push(format!("{name}/{form:?}: max {max_res:.2e}, order {order:.2}"));
        }
    }

    let mut max_scaled_rel = 0.0_f64;
    for (name, gamma) in &families() {
        let w = wulff_surface(gamma).expect("every built-in family has a boundary");
        for r in [1.0, 2.0, 0.5] {
            let s = w.scaled(r);
            let mut ctx = CheckContext::new(gamma, &s, "rW");
            ctx.order = 32;
            let energy = s.energy(gamma, 32);
            let (i1, i2) = check_closed_integrals(&ctx);
            let rel = i1
                .integral_residual
                .abs()
                .max(i2.integral_residual.abs())
                / energy;
            max_scaled_rel = max_scaled_rel.max(rel);
            if rel > 1e-6 {
                pass = false;
                parts.push(format!("{name} at scale {r}: |I|/F = {rel:.2e} > 1e-6"));
            }
        }
    }
    parts.push(format!(
        "closed integrals on rW, 4 families x 3 scales: max |I|/F {max_scaled_rel:.2e} <= 1e-6"
    ));

    let iso = Anisotropy::isotropic();
    let mut ctx = CheckContext::new(&iso, &surface, "ellipsoid");
    ctx.order = 32;
    let energy = surface.energy(&iso, 32);
    let (i1, _) = check_closed_integrals(&ctx);
    let mink_rel = i1.integral_residual.abs() / energy;
    pass = pass && mink_rel <= 1e-6;
    parts.push(format!(
        "Minkowski on non-equilibrium ellipsoid: |I1|/F {mink_rel:.2e} <= 1e-6"
    ));

    verdict("4 divergence identities", pass, parts.join("; "));
}

#[test]
fn criterion_5_offset_expansion_coefficients() {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, gamma) in &families() {
        let w = wulff_surface(gamma).expect("boundary");
        let mut ctx = CheckContext::new(gamma, &w, "wulff");
        ctx.order = 32;
        let fit = expansion_fit(&ctx).expect("offset family fits");
        let r1 = (fit.ratio_v1 - 3.0).abs();
        let r2 = (fit.ratio_v2 - 3.0).abs();
        let mut f_rel = 0.0_f64;
        for k in 0..3 {
            let denom = fit.f_analytic[k].abs().max(1e-12);
            f_rel = f_rel.max((fit.f_fit[k] - fit.f_analytic[k]).abs() / denom);
        }
        pass = pass && r1 <= 1e-6 && r2 <= 1e-6 && f_rel <= 1e-6;
        parts.push(format!(
            "{name}: |v1/v0 - 3| {r1:.2e}, |v2/v0 - 3| {r2:.2e}, energy coeffs rel {f_rel:.2e}"
        ));
    }
    verdict(
        "5 offset expansion (tolerance 1e-6)",
        pass,
        parts.join("; "),
    );
}

#[test]
fn criterion_6_second_variation_vanishes_on_scaled_bodies() {
    let mut pass = true;
    let mut worst_d2f = 0.0_f64;
    let mut worst_gap = f64::INFINITY;
    for (name, gamma) in &families() {
        let w = wulff_surface(gamma).expect("boundary");
        for r in [0.5, 1.0, 2.0] {
            let s = w.scaled(r);
            let mut ctx = CheckContext::new(gamma, &s, "rW");
            ctx.order = 32;
            let sv = second_variation(&ctx)
                .unwrap_or_else(|e| panic!("{name} at scale {r}: {e}"));
            let rel = sv.delta2_f.abs() / sv.energy;
            worst_d2f = worst_d2f.max(rel);
            worst_gap = worst_gap.min(sv.min_pointwise);
            if rel > 1e-8 || sv.min_pointwise < -1e-10 {
                pass = false;
            }
        }
    }
    verdict(
        "6 second variation",
        pass,
        format!(
            "max |d2F|/F {worst_d2f:.2e} <= 1e-8 over 4 families x scales {{0.5, 1, 2}}, \
             min pointwise stability gap {worst_gap:.2e} >= -1e-10"
        ),
    );
}

#[test]
fn criterion_7_isoperimetric_ratio_and_gauss_degree() {
    let order = 32;
    let mut pass = true;
    let mut parts = Vec::new();

    let mut worst_rw = 0.0_f64;
    for (name, gamma) in &families() {
        let w = wulff_surface(gamma).expect("boundary");
        let f_w = w.energy(gamma, order);
        for r in [0.5, 1.0, 2.0] {
            let s = w.scaled(r);
            let iso = isoperimetric_ratio(&s, gamma, order, f_w).expect("closed");
            worst_rw = worst_rw.max(iso.gap.abs() / f_w);
            if iso.gap.abs() > 1e-6 * f_w {
                pass = false;
                parts.push(format!("{name} at scale {r}: gap/F {:.2e}", iso.gap / f_w));
            }
        }
        let (deg, rounded) = w.degree_of_gauss_map(gamma, order).expect("closed");
        if (deg - 1.0).abs() > 0.01 || rounded != 1 {
            pass = false;
            parts.push(format!("{name} W: degree {deg}"));
        }
    }
    parts.push(format!("rW equality: max |gap|/F {worst_rw:.2e} <= 1e-6"));

    let iso_gamma = Anisotropy::isotropic();
    let ell = shapes::ellipsoid(1.0, 1.0, 2.0);
    let f_w = 4.0 * PI;
    let summary = isoperimetric_ratio(&ell, &iso_gamma, order, f_w).expect("closed");
    pass = pass && summary.gap > 1e-3 * f_w;
    parts.push(format!(
        "ellipsoid deficit: gap/F {:.2e} > 1e-3",
        summary.gap / f_w
    ));

    for (label, surface) in [
        ("sphere", shapes::sphere(1.0)),
        ("ellipsoid", shapes::ellipsoid(1.0, 1.0, 2.0)),
    ] {
        let (deg, rounded) = surface.degree_of_gauss_map(&iso_gamma, order).expect("closed");
        if (deg - 1.0).abs() > 0.01 || rounded != 1 {
            pass = false;
            parts.push(format!("{label}: degree {deg}"));
        }
    }
    let torus = shapes::torus(2.0, 0.5);
    let (deg_torus, rounded_torus) = torus.degree_of_gauss_map(&iso_gamma, order).expect("closed");
    pass = pass && deg_torus.abs() <= 0.01 && rounded_torus == 0;
    parts.push(format!("torus degree {deg_torus:.2e} within 0.01 of 0"));

    verdict("7 isoperimetric and degree", pass, parts.join("; "));
}

/// Measure one generated profile against every criterion-8 gate.
struct DelaunayGates {
    lambda_err: f64,
    xi_jump: f64,
    cross_dev: f64,
    min_gap: f64,
    secs: f64,
}

fn delaunay_gates(
    profile: &PlanarCurve,
    cross: &PlanarCurve,
    alt_cross: &PlanarCurve,
    class: ProfileClass,
    lambda: f64,
) -> DelaunayGates {
    let t0 = Instant::now();
    let body = ProductWulff::new(profile.clone(), cross.clone()).expect("valid product body");
    let curve = solve_profile(&body, lambda, class, 1e-3).expect("profile solves");
    let built = build_surface(&curve, &body.cross).expect("surface assembles");

    let eq = built.surface.equilibrium_check(body.gamma(), 20, 64);
    let lambda_err = eq.lambda_max_dev.max((eq.lambda_mean - lambda).abs());
    let xi_jump = eq
        .edges
        .iter()
        .map(|e| e.max_xi_jump)
        .fold(0.0_f64, f64::max);

    let fields = built.surface.fields(body.gamma(), 16);
    let min_gap = fields
        .samples
        .iter()
        .map(|f| f.lambda * f.lambda / 4.0 - f.det_dxi)
        .fold(f64::INFINITY, f64::min);

    let alt_body = ProductWulff::new(profile.clone(), alt_cross.clone()).expect("valid alt body");
    let cmp = cross_section_independence(&curve, &body, &alt_body, 8).expect("comparison runs");
    let cross_dev = cmp.max_gap.max(cmp.max_dev);

    DelaunayGates {
        lambda_err,
        xi_jump,
        cross_dev,
        min_gap,
        secs: t0.elapsed().as_secs_f64(),
    }
}

#[test]
fn criterion_8_delaunay_generation() {
    let mut pass = true;
    let mut parts = Vec::new();

    // Classical oracle: the isotropic catenoid is x = c cosh(z/c) with c
    // the neck radius.
    let circle = PlanarCurve::circle(1.0).unwrap();
    let body = ProductWulff::new(circle.clone(), circle.clone()).unwrap();
    let curve = solve_profile(&body, 0.0, ProfileClass::Catenoid, 1e-3).unwrap();
    let c = 0.5;
    let (s0, s1) = curve.s_range;
    let mut cosh_err = 0.0_f64;
    for i in 0..500 {
        let s = s0 + (s1 - s0) * (i as f64 + 0.5) / 500.0;
        let p = curve.eval(s);
        cosh_err = cosh_err.max((p.x - c * (p.z / c).cosh()).abs());
    }
    pass = pass && cosh_err <= 1e-6;
    parts.push(format!("isotropic catenoid vs c cosh(z/c): {cosh_err:.2e} <= 1e-6"));

    let lens = PlanarCurve::lens(1.0, 1.8).unwrap();
    let arcgon = PlanarCurve::arcgon(3, 1.0, 1.4).unwrap();
    let surfaces: [(&str, &PlanarCurve, &PlanarCurve, &PlanarCurve, ProfileClass, f64); 4] = [
        ("W1 catenoid", &lens, &circle, &arcgon, ProfileClass::Catenoid, 0.0),
        ("W1 unduloid", &lens, &circle, &arcgon, ProfileClass::Unduloid, -1.5),
        ("W2 catenoid", &circle, &arcgon, &circle, ProfileClass::Catenoid, 0.0),
        ("W2 unduloid", &circle, &arcgon, &circle, ProfileClass::Unduloid, -1.5),
    ];
    for (label, profile, cross, alt, class, lambda) in surfaces {
        let g = delaunay_gates(profile, cross, alt, class, lambda);
        let ok = g.lambda_err <= 1e-6
            && g.xi_jump <= 1e-8
            && g.cross_dev <= 1e-6
            && g.min_gap >= -1e-10
            && g.secs < 60.0;
        pass = pass && ok;
        parts.push(format!(
            "{label}: |Lambda - target| {:.2e} <= 1e-6, xi jump {:.2e} <= 1e-8, \
             cross independence {:.2e} <= 1e-6, stability gap min {:.2e}, {:.0}s < 60s",
            g.lambda_err, g.xi_jump, g.cross_dev, g.min_gap, g.secs
        ));
    }

    verdict("8 Delaunay generation", pass, parts.join("; "));
}

#[test]
fn criterion_9_verify_reports_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("scenario.toml");
    fs::write(
        &cfg_path,
        "[gamma]\nfamily = \"quadratic\"\ndiag = [1.0, 1.0, 4.0]\n\n\
         [surface]\nkind = \"wulff\"\n",
    )
    .unwrap();

    let run_once = |out: &Path| -> (i32, Vec<u8>, Vec<u8>) {
        let status = Command::new(env!("CARGO_BIN_EXE_wulffgeo"))
            .args([
                "verify",
                "--config",
                cfg_path.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--seed",
                "11",
            ])
            .output()
            .expect("binary runs");
        (
            status.status.code().unwrap_or(-1),
            fs::read(out.join("report.json")).unwrap(),
            fs::read(out.join("report.txt")).unwrap(),
        )
    };
    let (code_a, json_a, text_a) = run_once(&tmp.path().join("a"));
    let (code_b, json_b, text_b) = run_once(&tmp.path().join("b"));

    let pass = code_a == 0 && code_b == 0 && json_a == json_b && text_a == text_b;
    verdict(
        "9 determinism",
        pass,
        format!(
            "two cmd_verify runs with seed 11: exit codes ({code_a}, {code_b}), \
             report.json identical: {}, report.txt identical: {}",
            json_a == json_b,
            text_a == text_b
        ),
    );
}

/// The acceptance surfaces stay well-formed: both product bodies used by
/// criterion 8 satisfy the support identity on construction.
#[test]
fn acceptance_bodies_are_valid_wulff_products() {
    let w1 = ProductWulff::new(
        PlanarCurve::lens(1.0, 1.8).unwrap(),
        PlanarCurve::circle(1.0).unwrap(),
    );
    let w2 = ProductWulff::new(
        PlanarCurve::circle(1.0).unwrap(),
        PlanarCurve::arcgon(3, 1.0, 1.4).unwrap(),
    );
    assert!(w1.is_ok() && w2.is_ok());
    let _ = PiecewiseSurface::closed_from_patches(Vec::new(), Vec::new());
}
