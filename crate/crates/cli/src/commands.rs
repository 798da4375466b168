//! Subcommand implementations and the exit-code discipline.
//!
//! Exit codes: 0 success, 2 a verification gate failed, 3 the configuration
//! is invalid, 4 a numeric construction or solver failure.

use std::fs;
use std::path::{Path, PathBuf};

use wulffgeo::anisotropy::Anisotropy;
use wulffgeo::delaunay::{
    build_surface, cross_section_independence, profile_table, solve_profile_with, ProductWulff,
};
use wulffgeo::identities::{run_all, CheckContext};
use wulffgeo::io::{csv_encode, float17, mesh_to_obj, vector_json, Json};
use wulffgeo::report::{merge_reports, VerificationReport};
use wulffgeo::surface::{shapes, PiecewiseSurface};
use wulffgeo::wulff::{wulff_construct_with_threshold, wulff_surface, EDGE_THRESHOLD_DEG};

use crate::config::{parse_config, CurveSpec, GammaSpec, ScenarioConfig, SurfaceSpec};
use crate::tessellate::tessellate;

pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure {
            code: 3,
            message: message.into(),
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Failure {
            code: 4,
            message: message.into(),
        }
    }

    pub fn check(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<wulffgeo::Error> for Failure {
    fn from(e: wulffgeo::Error) -> Self {
        Failure::numeric(e.to_string())
    }
}

pub type CmdResult = Result<(), Failure>;

#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quadrature: Option<usize>,
    pub tolerance_scale: Option<f64>,
}

/// Read and validate the scenario, apply flag overrides, and resolve the
/// output directory.
pub fn load_scenario(
    config_path: &Path,
    ov: &Overrides,
) -> Result<(ScenarioConfig, PathBuf), Failure> {
    let text = fs::read_to_string(config_path).map_err(|e| {
        Failure::config(format!("cannot read config {}: {e}", config_path.display()))
    })?;
    let mut cfg = parse_config(&text).map_err(Failure::config)?;
    if let Some(seed) = ov.seed {
        cfg.numerics.seed = seed;
    }
    if let Some(q) = ov.quadrature {
        cfg.numerics.quadrature = q;
    }
    if let Some(t) = ov.tolerance_scale {
        cfg.numerics.tolerance_scale = t;
    }
    if cfg.numerics.quadrature < 2 {
        return Err(Failure::config("[numerics] quadrature must be at least 2"));
    }
    if !(cfg.numerics.tolerance_scale > 0.0) {
        return Err(Failure::config("[numerics] tolerance_scale must be positive"));
    }
    let out = match &ov.out {
        Some(dir) => dir.clone(),
        None => match &cfg.output_dir {
            Some(dir) => PathBuf::from(dir),
            None => {
                return Err(Failure::config(
                    "no output directory: pass --out DIR or set [output] dir",
                ))
            }
        },
    };
    Ok((cfg, out))
}

fn write_file(dir: &Path, name: &str, content: &str) -> CmdResult {
    fs::write(dir.join(name), content)
        .map_err(|e| Failure::numeric(format!("cannot write {name}: {e}")))
}

fn prepare_dir(dir: &Path) -> CmdResult {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::numeric(format!("cannot create {}: {e}", dir.display())))
}

fn build_gamma(cfg: &ScenarioConfig) -> Result<Anisotropy, Failure> {
    cfg.gamma
        .build()
        .map_err(|e| Failure::config(format!("invalid [gamma]: {e}")))
}

pub fn cmd_wulff(cfg: &ScenarioConfig, out: &Path) -> CmdResult {
    let gamma = build_gamma(cfg)?;
    let threshold = cfg.wulff.edge_threshold_deg.unwrap_or(EDGE_THRESHOLD_DEG);
    let shape =
        wulff_construct_with_threshold(&gamma, cfg.wulff.samples, cfg.numerics.seed, threshold)?;

    prepare_dir(out)?;
    write_file(out, "wulff_mesh.obj", &mesh_to_obj(&shape.mesh))?;
    write_file(out, "wulff_edges.json", &shape.sidecar_json().encode())?;

    let iso = shape.energy.powi(3) / (9.0 * shape.volume * shape.volume);
    let mut summary = Json::obj();
    summary.push("gamma", Json::Str(cfg.gamma.describe()));
    summary.push("samples", Json::Int(cfg.wulff.samples as i64));
    summary.push("seed", Json::Int(cfg.numerics.seed as i64));
    summary.push("edge_threshold_deg", Json::Num(threshold));
    summary.push("energy", Json::Num(shape.energy));
    summary.push("volume", Json::Num(shape.volume));
    summary.push("isoperimetric_ratio", Json::Num(iso));
    summary.push("mesh_energy", Json::Num(shape.mesh_energy));
    summary.push("mesh_volume", Json::Num(shape.mesh_volume));
    summary.push("face_count", Json::Int(shape.faces.len() as i64));
    summary.push("edge_count", Json::Int(shape.edges.len() as i64));
    write_file(out, "wulff_summary.json", &summary.encode())?;
    write_file(out, "config_echo.toml", &cfg.echo(&out.display().to_string()))?;

    println!(
        "wulff [{}]: energy {}, volume {}, {} sharp edges",
        cfg.gamma.describe(),
        float17(shape.energy),
        float17(shape.volume),
        shape.edges.len()
    );
    Ok(())
}

/// Build the surface a scenario asks to verify, with a short label for the
/// report metadata.
fn build_check_surface(
    cfg: &ScenarioConfig,
    gamma: &Anisotropy,
) -> Result<(PiecewiseSurface, String), Failure> {
    let spec = cfg
        .surface
        .as_ref()
        .ok_or_else(|| Failure::config("[surface] section is required for verify"))?;
    let surface = match *spec {
        SurfaceSpec::Wulff { scale } => {
            if !(scale > 0.0) {
                return Err(Failure::config("[surface] scale must be positive"));
            }
            let w = wulff_surface(gamma).ok_or_else(|| {
                Failure::numeric(
                    "this density has no parametric equilibrium boundary; \
                     use the wulff subcommand for the mesh construction",
                )
            })?;
            if scale == 1.0 {
                w
            } else {
                w.scaled(scale)
            }
        }
        SurfaceSpec::Sphere { radius } => {
            if !(radius > 0.0) {
                return Err(Failure::config("[surface] radius must be positive"));
            }
            shapes::sphere(radius)
        }
        SurfaceSpec::Ellipsoid { a, b, c } => {
            if !(a > 0.0 && b > 0.0 && c > 0.0) {
                return Err(Failure::config("[surface] semi-axes must be positive"));
            }
            shapes::ellipsoid(a, b, c)
        }
        SurfaceSpec::Torus { major, minor } => {
            if !(minor > 0.0 && major > minor) {
                return Err(Failure::config(
                    "[surface] torus needs major > minor > 0",
                ));
            }
            shapes::torus(major, minor)
        }
        SurfaceSpec::Delaunay => {
            let (built, _, _) = generate_delaunay(cfg)?;
            built.surface
        }
    };
    Ok((surface, spec.describe()))
}

pub fn cmd_verify(cfg: &ScenarioConfig, out: &Path) -> CmdResult {
    let gamma = build_gamma(cfg)?;
    let (surface, surface_name) = build_check_surface(cfg, &gamma)?;

    let mut ctx = CheckContext::new(&gamma, &surface, surface_name);
    ctx.order = cfg.numerics.quadrature;
    ctx.seed = cfg.numerics.seed;
    ctx.tolerance_scale = cfg.numerics.tolerance_scale;
    let ctx = ctx.with_wulff_reference();
    let mut report = run_all(&ctx);

    if let Some(only) = &cfg.checks {
        let meta = report.meta.clone();
        let mut filtered = VerificationReport::new(meta);
        for record in report
            .checks
            .into_iter()
            .filter(|c| only.iter().any(|n| n == &c.name))
        {
            filtered
                .push(record)
                .map_err(|e| Failure::numeric(e.to_string()))?;
        }
        report = filtered.finalize();
    }

    prepare_dir(out)?;
    write_file(out, "report.json", &report.to_json().encode())?;
    write_file(out, "report.txt", &report.to_text())?;
    write_file(out, "config_echo.toml", &cfg.echo(&out.display().to_string()))?;

    print!("{}", report.to_text());
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::check(format!(
            "checks failed: {}",
            report.failed_names().join(", ")
        )))
    }
}

/// Solve the meridian and assemble the surface from the scenario's product
/// density and `[delaunay]` block.
fn generate_delaunay(
    cfg: &ScenarioConfig,
) -> Result<(wulffgeo::delaunay::DelaunaySurface, ProductWulff, wulffgeo::delaunay::ProfileCurve), Failure> {
    let (profile_spec, cross_spec) = match &cfg.gamma {
        GammaSpec::Product { profile, cross } => (profile, cross),
        _ => {
            return Err(Failure::config(
                "delaunay generation needs a product-form density: [gamma] family = \"product\"",
            ))
        }
    };
    let spec = cfg
        .delaunay
        .as_ref()
        .ok_or_else(|| Failure::config("[delaunay] section is required"))?;
    if !(spec.step > 0.0) {
        return Err(Failure::config("[delaunay] step must be positive"));
    }
    let profile = profile_spec
        .build()
        .map_err(|e| Failure::config(format!("invalid [gamma.profile]: {e}")))?;
    let cross = cross_spec
        .build()
        .map_err(|e| Failure::config(format!("invalid [gamma.cross]: {e}")))?;
    let body = ProductWulff::new(profile, cross)?;
    let curve = solve_profile_with(&body, spec.lambda, spec.class, spec.solve_options())?;
    let built = build_surface(&curve, &body.cross)?;
    Ok((built, body, curve))
}

pub fn cmd_delaunay(cfg: &ScenarioConfig, out: &Path) -> CmdResult {
    let (built, body, curve) = generate_delaunay(cfg)?;
    let spec = cfg.delaunay.as_ref().expect("checked in generate_delaunay");
    let gamma = body.gamma();
    let tol = cfg.numerics.tolerance_scale;

    let mesh = tessellate(&built.surface, 160, 96)?;
    let equilibrium = built
        .surface
        .equilibrium_check(gamma, cfg.numerics.quadrature.min(24), 64);

    let lambda_gate = 1e-6 * (1.0 + spec.lambda.abs()) * tol;
    let xi_gate = 1e-8 * tol;
    let mean_dev = (equilibrium.lambda_mean - spec.lambda).abs();
    let max_xi_jump = equilibrium
        .edges
        .iter()
        .map(|e| e.max_xi_jump)
        .fold(0.0_f64, f64::max);
    let lambda_pass = equilibrium.lambda_max_dev <= lambda_gate && mean_dev <= lambda_gate;
    let xi_pass = max_xi_jump <= xi_gate;

    let alternate: CurveSpec = if body.cross.is_smooth() {
        CurveSpec::Arcgon {
            sides: 3,
            circumradius: 1.0,
            arc_radius: 1.4,
        }
    } else {
        CurveSpec::Circle { radius: 1.0 }
    };
    let alt_body = ProductWulff::new(
        body.profile.clone(),
        alternate.build().map_err(Failure::from)?,
    )?;
    let comparison = cross_section_independence(&curve, &body, &alt_body, 8)?;

    prepare_dir(out)?;
    write_file(out, "delaunay_mesh.obj", &mesh_to_obj(&mesh))?;

    let rows = profile_table(&built, gamma, 400)?;
    let mut table = vec![vec![
        "s".to_string(),
        "x".to_string(),
        "z".to_string(),
        "lambda".to_string(),
    ]];
    for (s, x, z, lambda) in rows {
        table.push(vec![float17(s), float17(x), float17(z), float17(lambda)]);
    }
    write_file(out, "profile.csv", &csv_encode(&table))?;

    let mut edges_json = Vec::new();
    for edge in &built.surface.edges {
        let mut o = Json::obj();
        o.push("name", Json::Str(edge.name.clone()));
        let (t0, t1) = edge.tau_range;
        let pts = (0..=64)
            .map(|i| {
                let tau = t0 + (t1 - t0) * i as f64 / 64.0;
                vector_json(&(edge.curve)(tau))
            })
            .collect();
        o.push("points", Json::Arr(pts));
        edges_json.push(o);
    }
    write_file(
        out,
        "delaunay_edges.json",
        &Json::Arr(edges_json).encode(),
    )?;

    let mut summary = Json::obj();
    summary.push("class", Json::Str(curve.class.name().to_string()));
    summary.push("gamma", Json::Str(cfg.gamma.describe()));
    summary.push("lambda_target", Json::Num(spec.lambda));
    summary.push("flux", Json::Num(curve.flux));
    summary.push("step", Json::Num(curve.step));
    summary.push(
        "s_range",
        Json::Arr(vec![Json::Num(curve.s_range.0), Json::Num(curve.s_range.1)]),
    );
    summary.push(
        "period",
        curve.period.map(Json::Num).unwrap_or(Json::Null),
    );
    summary.push("pitch", curve.pitch.map(Json::Num).unwrap_or(Json::Null));
    summary.push("corner_count", Json::Int(curve.corner_s.len() as i64));
    summary.push("branch_count", Json::Int(curve.branches.len() as i64));
    summary.push("patch_count", Json::Int(built.surface.patches.len() as i64));
    summary.push("edge_count", Json::Int(built.surface.edges.len() as i64));
    summary.push("referee_lambda_residual", Json::Num(curve.lambda_residual));

    let mut eq = Json::obj();
    eq.push("lambda_mean", Json::Num(equilibrium.lambda_mean));
    eq.push("lambda_max_dev", Json::Num(equilibrium.lambda_max_dev));
    eq.push("lambda_mean_deviation", Json::Num(mean_dev));
    eq.push("lambda_gate", Json::Num(lambda_gate));
    eq.push("lambda_pass", Json::Bool(lambda_pass));
    eq.push("max_xi_jump", Json::Num(max_xi_jump));
    eq.push("xi_gate", Json::Num(xi_gate));
    eq.push("xi_pass", Json::Bool(xi_pass));
    let mut eq_edges = Vec::new();
    for e in &equilibrium.edges {
        let mut o = Json::obj();
        o.push("name", Json::Str(e.name.clone()));
        o.push("max_xi_jump", Json::Num(e.max_xi_jump));
        o.push("max_cross_residual", Json::Num(e.max_cross_residual));
        o.push(
            "max_position_mismatch",
            Json::Num(e.max_position_mismatch),
        );
        eq_edges.push(o);
    }
    eq.push("edges", Json::Arr(eq_edges));
    summary.push("equilibrium", eq);

    let mut cmp = Json::obj();
    cmp.push("alternate_cross", Json::Str(alternate.describe()));
    cmp.push("samples", Json::Int(comparison.samples as i64));
    cmp.push("max_gap", Json::Num(comparison.max_gap));
    cmp.push("max_dev", Json::Num(comparison.max_dev));
    summary.push("cross_independence", cmp);

    write_file(out, "delaunay_summary.json", &summary.encode())?;
    write_file(out, "config_echo.toml", &cfg.echo(&out.display().to_string()))?;

    println!(
        "delaunay {} [{}]: lambda mean {} (target {}), max dev {}, xi jump {}",
        curve.class.name(),
        cfg.gamma.describe(),
        float17(equilibrium.lambda_mean),
        float17(spec.lambda),
        float17(equilibrium.lambda_max_dev),
        float17(max_xi_jump),
    );
    if lambda_pass && xi_pass {
        Ok(())
    } else {
        Err(Failure::check(format!(
            "equilibrium gates failed: lambda max dev {} vs gate {}, mean deviation {}, \
             xi jump {} vs gate {}",
            float17(equilibrium.lambda_max_dev),
            float17(lambda_gate),
            float17(mean_dev),
            float17(max_xi_jump),
            float17(xi_gate),
        )))
    }
}

pub fn cmd_report_merge(inputs: &[PathBuf], out: &Path) -> CmdResult {
    let mut reports = Vec::new();
    for path in inputs {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        let json = Json::parse(&text)
            .map_err(|e| Failure::config(format!("{} is not valid JSON: {e}", path.display())))?;
        let report = VerificationReport::from_json(&json).map_err(|e| {
            Failure::config(format!("{} is not a verification report: {e}", path.display()))
        })?;
        reports.push(report);
    }
    let count = reports.len();
    let merged = merge_reports(reports);
    prepare_dir(out)?;
    write_file(out, "merged_report.json", &merged.encode())?;
    let all = merged
        .get("all_passed")
        .and_then(|v| match v {
            Json::Bool(b) => Some(*b),
            _ => None,
        })
        .unwrap_or(false);
    println!("merged {count} reports, all passed: {all}");
    if all {
        Ok(())
    } else {
        Err(Failure::check("merged reports contain failed checks"))
    }
}
