//! End-to-end tests driving the compiled binary: exit codes, file
//! contracts, and byte-level determinism.

use std::fs;
use std::path::Path;
use std::process::Command;

use wulffgeo::io::Json;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_wulffgeo"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

const ISO_SPHERE: &str = "[gamma]\nfamily = \"isotropic\"\n\n[surface]\nkind = \"sphere\"\nradius = 1.0\n";
const ISO_ELLIPSOID: &str =
    "[gamma]\nfamily = \"isotropic\"\n\n[surface]\nkind = \"ellipsoid\"\na = 1.0\nb = 1.0\nc = 2.0\n";

#[test]
fn verify_passes_on_the_isotropic_sphere() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", ISO_SPHERE);
    let out = tmp.path().join("run");
    let (code, stdout, _) = run(&["verify", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "stdout: {stdout}");
    assert!(stdout.contains("overall: pass"));
    for file in ["report.json", "report.txt", "config_echo.toml"] {
        assert!(out.join(file).is_file(), "missing {file}");
    }
}

#[test]
fn verify_reports_are_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", ISO_SPHERE);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let (code_a, _, _) = run(&["verify", "--config", &cfg, "--out", a.to_str().unwrap()]);
    let (code_b, _, _) = run(&["verify", "--config", &cfg, "--out", b.to_str().unwrap()]);
    assert_eq!((code_a, code_b), (0, 0));
    for file in ["report.json", "report.txt"] {
        let bytes_a = fs::read(a.join(file)).unwrap();
        let bytes_b = fs::read(b.join(file)).unwrap();
        assert_eq!(bytes_a, bytes_b, "{file} differs between identical runs");
    }
}

#[test]
fn ellipsoid_report_keeps_minkowski_but_fails_equilibrium() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "e.toml", ISO_ELLIPSOID);
    let out = tmp.path().join("run");
    let (code, _, stderr) = run(&["verify", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2, "stderr: {stderr}");
    let report = Json::parse(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let checks = match report.get("checks").unwrap() {
        Json::Arr(items) => items,
        other => panic!("checks should be an array, got {other:?}"),
    };
    let passed = |name: &str| -> bool {
        let rec = checks
            .iter()
            .find(|c| c.get("name").and_then(Json::as_str) == Some(name))
            .unwrap_or_else(|| panic!("record {name} missing"));
        matches!(rec.get("passed"), Some(Json::Bool(true)))
    };
    assert!(!passed("equilibrium"), "ellipsoid is not an equilibrium");
    assert!(passed("closed_integral_support"), "support integral holds on any closed surface");
}

#[test]
fn checks_filter_selects_a_subset() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "f.toml",
        &format!("{ISO_ELLIPSOID}\n[checks]\nonly = [\"closed_integral_support\"]\n"),
    );
    let out = tmp.path().join("run");
    let (code, _, stderr) = run(&["verify", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "selected check passes on the ellipsoid: {stderr}");
    let report = Json::parse(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    match report.get("checks").unwrap() {
        Json::Arr(items) => assert_eq!(items.len(), 1),
        other => panic!("checks should be an array, got {other:?}"),
    }
}

#[test]
fn exit_codes_distinguish_config_check_and_numeric_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let out_s = out.to_str().unwrap();

    let bad_key = write_config(tmp.path(), "bad_key.toml", "[gamma]\nfamily = \"isotropic\"\nx = 1\n");
    let (code, _, stderr) = run(&["verify", "--config", &bad_key, "--out", out_s]);
    assert_eq!(code, 3, "unknown key is a config error: {stderr}");
    assert!(stderr.contains("unknown key"));

    let no_out = write_config(tmp.path(), "no_out.toml", ISO_SPHERE);
    let (code, _, stderr) = run(&["verify", "--config", &no_out]);
    assert_eq!(code, 3, "missing output dir is a config error: {stderr}");

    let (code, _, _) = run(&["verify", "--config", "/nonexistent/x.toml", "--out", out_s]);
    assert_eq!(code, 3, "unreadable config is a config error");

    let bad_flag = write_config(tmp.path(), "s.toml", ISO_SPHERE);
    let (code, _, _) = run(&["verify", "--config", &bad_flag, "--no-such-flag"]);
    assert_eq!(code, 3, "unknown flag is a config error");

    let bulge = write_config(
        tmp.path(),
        "bulge.toml",
        "[gamma]\nfamily = \"product\"\n\n[gamma.profile]\nkind = \"circle\"\nradius = 1.0\n\n\
         [gamma.cross]\nkind = \"circle\"\nradius = 1.0\n\n\
         [delaunay]\nclass = \"unduloid\"\nlambda = -1.0\nbulge_radius = 5.0\n",
    );
    let (code, _, stderr) = run(&["delaunay", "--config", &bulge, "--out", out_s]);
    assert_eq!(code, 4, "out-of-range bulge is a solver failure: {stderr}");
    assert!(
        stderr.contains("between the cylinder radius"),
        "solver failure carries bracketing diagnostics: {stderr}"
    );

    let (code, _, _) = run(&["--help"]);
    assert_eq!(code, 0);
}

#[test]
fn wulff_isotropic_emits_a_spherical_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "w.toml", "[gamma]\nfamily = \"isotropic\"\n");
    let out = tmp.path().join("run");
    let (code, _, stderr) = run(&["wulff", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "stderr: {stderr}");
    let summary = Json::parse(&fs::read_to_string(out.join("wulff_summary.json")).unwrap()).unwrap();
    let energy = summary.get("energy").and_then(Json::as_f64).unwrap();
    let volume = summary.get("volume").and_then(Json::as_f64).unwrap();
    assert!((energy - 4.0 * std::f64::consts::PI).abs() < 1e-6);
    assert!((volume - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-6);
    let mesh = wulffgeo::io::mesh_from_obj(&fs::read_to_string(out.join("wulff_mesh.obj")).unwrap())
        .unwrap();
    assert!(mesh.is_closed());
}

#[test]
fn wulff_lens_density_emits_a_nonempty_edge_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "w.toml", "[gamma]\nfamily = \"lens\"\nbeta = 2.0\n");
    let out = tmp.path().join("run");
    let (code, _, stderr) = run(&["wulff", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "stderr: {stderr}");
    let summary = Json::parse(&fs::read_to_string(out.join("wulff_summary.json")).unwrap()).unwrap();
    match summary.get("edge_count").unwrap() {
        Json::Int(n) => assert!(*n >= 1, "lens body has a sharp equator"),
        other => panic!("edge_count should be an integer, got {other:?}"),
    }
}

#[test]
fn quadratic_wulff_matches_the_analytic_ellipsoid() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "q.toml",
        "[gamma]\nfamily = \"quadratic\"\ndiag = [1.0, 1.0, 4.0]\n",
    );
    let out = tmp.path().join("run");
    let (code, _, stderr) = run(&["wulff", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "stderr: {stderr}");
    let mesh = wulffgeo::io::mesh_from_obj(&fs::read_to_string(out.join("wulff_mesh.obj")).unwrap())
        .unwrap();
    // Hull vertices sit outside the smooth body by the sampling resolution.
    for v in &mesh.vertices {
        let r = (v.x * v.x + v.y * v.y + v.z * v.z / 4.0).sqrt();
        assert!((r - 1.0).abs() < 5e-3, "vertex off the ellipsoid by {:e}", (r - 1.0).abs());
    }
}

#[test]
fn delaunay_catenoid_writes_profile_and_mesh() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "d.toml",
        "[gamma]\nfamily = \"product\"\n\n[gamma.profile]\nkind = \"circle\"\nradius = 1.0\n\n\
         [gamma.cross]\nkind = \"circle\"\nradius = 1.0\n\n\
         [delaunay]\nclass = \"catenoid\"\nlambda = 0.0\nstep = 0.002\n",
    );
    let out = tmp.path().join("run");
    let (code, stdout, stderr) = run(&["delaunay", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "stdout: {stdout}\nstderr: {stderr}");
    for file in [
        "delaunay_mesh.obj",
        "profile.csv",
        "delaunay_summary.json",
        "delaunay_edges.json",
        "config_echo.toml",
    ] {
        assert!(out.join(file).is_file(), "missing {file}");
    }
    let csv = fs::read_to_string(out.join("profile.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("s,x,z,lambda"));
    let neck = 0.5;
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 4);
        let (x, z, lambda) = (cols[1], cols[2], cols[3]);
        let oracle = neck * (z / neck).cosh();
        assert!((x - oracle).abs() < 1e-6, "catenoid radius off by {:e}", (x - oracle).abs());
        assert!(lambda.abs() < 1e-6);
    }
    let summary =
        Json::parse(&fs::read_to_string(out.join("delaunay_summary.json")).unwrap()).unwrap();
    let residual = summary
        .get("referee_lambda_residual")
        .and_then(Json::as_f64)
        .unwrap();
    assert!(residual <= 1e-6);
}

#[test]
fn report_merge_combines_pass_and_fail_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let sphere = write_config(tmp.path(), "s.toml", ISO_SPHERE);
    let ellipsoid = write_config(tmp.path(), "e.toml", ISO_ELLIPSOID);
    let (run_a, run_b) = (tmp.path().join("a"), tmp.path().join("b"));
    let (code, _, _) = run(&["verify", "--config", &sphere, "--out", run_a.to_str().unwrap()]);
    assert_eq!(code, 0);
    let (code, _, _) = run(&["verify", "--config", &ellipsoid, "--out", run_b.to_str().unwrap()]);
    assert_eq!(code, 2);

    let merged_dir = tmp.path().join("merged");
    let report_a = run_a.join("report.json");
    let report_b = run_b.join("report.json");
    let (code, stdout, _) = run(&[
        "report-merge",
        report_a.to_str().unwrap(),
        report_b.to_str().unwrap(),
        "--out",
        merged_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "merged document contains failures");
    assert!(stdout.contains("merged 2 reports"));
    let merged =
        Json::parse(&fs::read_to_string(merged_dir.join("merged_report.json")).unwrap()).unwrap();
    assert!(matches!(merged.get("all_passed"), Some(Json::Bool(false))));
    match merged.get("runs").unwrap() {
        Json::Arr(runs) => assert_eq!(runs.len(), 2),
        other => panic!("runs should be an array, got {other:?}"),
    }

    let solo_dir = tmp.path().join("solo");
    let (code, _, _) = run(&[
        "report-merge",
        report_a.to_str().unwrap(),
        "--out",
        solo_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "all-pass merge exits cleanly");
}

#[test]
fn config_echo_reparses_and_records_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", ISO_SPHERE);
    let out = tmp.path().join("run");
    let (code, _, _) = run(&[
        "verify", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "7",
        "--quadrature", "16",
    ]);
    assert_eq!(code, 0);
    let echo = fs::read_to_string(out.join("config_echo.toml")).unwrap();
    assert!(echo.contains("quadrature = 16"), "override recorded: {echo}");
    assert!(echo.contains("seed = 7"), "override recorded: {echo}");
    assert!(echo.contains("tolerance_scale = 1.0"), "default recorded: {echo}");
    let table: toml::Table = echo.parse().unwrap();
    assert!(table.contains_key("gamma") && table.contains_key("numerics"));
}
