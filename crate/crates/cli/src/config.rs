//! Scenario configuration: strict TOML parsing and the resolved echo.
//!
//! Parsing is schema-driven rather than derive-driven so unknown keys are
//! rejected everywhere with the offending path in the message, including
//! inside family-tagged sections.

use nalgebra::Matrix3;
use toml::{Table, Value};

use wulffgeo::anisotropy::Anisotropy;
use wulffgeo::curve::PlanarCurve;
use wulffgeo::delaunay::{ProfileClass, SolveOptions};

/// Names of every verification check, kept sorted; `[checks] only` entries
/// must come from this list.
pub const CHECK_NAMES: [&str; 12] = [
    "closed_integral_curvature",
    "closed_integral_support",
    "divergence_curvature",
    "divergence_support",
    "equilibrium",
    "first_variation",
    "gauss_map_degree",
    "isoperimetric_ratio",
    "jacobi_of_gamma",
    "rotation_conjugation",
    "second_variation",
    "volume_energy_expansion",
];

#[derive(Debug, Clone)]
pub enum CurveSpec {
    Circle { radius: f64 },
    Ellipse { a: f64, b: f64 },
    Lens { half_width: f64, arc_radius: f64 },
    Arcgon { sides: usize, circumradius: f64, arc_radius: f64 },
}

#[derive(Debug, Clone)]
pub enum GammaSpec {
    Isotropic,
    Quadratic { diag: Option<[f64; 3]>, matrix: Option<[[f64; 3]; 3]> },
    Lens { beta: f64 },
    Product { profile: CurveSpec, cross: CurveSpec },
    Table { theta: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone)]
pub enum SurfaceSpec {
    Wulff { scale: f64 },
    Sphere { radius: f64 },
    Ellipsoid { a: f64, b: f64, c: f64 },
    Torus { major: f64, minor: f64 },
    /// Generated from the `[delaunay]` block and a product-form density.
    Delaunay,
}

#[derive(Debug, Clone)]
pub struct DelaunaySpec {
    pub class: ProfileClass,
    pub lambda: f64,
    pub step: f64,
    pub periods: usize,
    pub u_floor: f64,
    pub z_half: Option<f64>,
    pub neck_radius: Option<f64>,
    pub bulge_radius: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Numerics {
    pub quadrature: usize,
    pub seed: u64,
    pub tolerance_scale: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            quadrature: 32,
            seed: 0,
            tolerance_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WulffOptions {
    pub samples: usize,
    pub edge_threshold_deg: Option<f64>,
}

impl Default for WulffOptions {
    fn default() -> Self {
        WulffOptions {
            samples: 4000,
            edge_threshold_deg: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub gamma: GammaSpec,
    pub surface: Option<SurfaceSpec>,
    pub delaunay: Option<DelaunaySpec>,
    pub checks: Option<Vec<String>>,
    pub numerics: Numerics,
    pub output_dir: Option<String>,
    pub wulff: WulffOptions,
}

type CfgResult<T> = Result<T, String>;

pub fn parse_config(text: &str) -> CfgResult<ScenarioConfig> {
    let table: Table = text
        .parse()
        .map_err(|e| format!("config is not valid TOML: {e}"))?;
    check_keys(
        &table,
        "",
        &["gamma", "surface", "delaunay", "checks", "numerics", "output", "wulff"],
    )?;
    let gamma = gamma_spec(table_of(req(&table, "", "gamma")?, "[gamma]")?)?;
    let surface = match table.get("surface") {
        Some(v) => Some(surface_spec(table_of(v, "[surface]")?)?),
        None => None,
    };
    let delaunay = match table.get("delaunay") {
        Some(v) => Some(delaunay_spec(table_of(v, "[delaunay]")?)?),
        None => None,
    };
    let checks = match table.get("checks") {
        Some(v) => {
            let t = table_of(v, "[checks]")?;
            check_keys(t, "[checks]", &["only"])?;
            let names = str_array(req(t, "[checks]", "only")?, "[checks] only")?;
            for name in &names {
                if !CHECK_NAMES.contains(&name.as_str()) {
                    return Err(format!(
                        "[checks] only: unknown check {name:?}; known checks: {}",
                        CHECK_NAMES.join(", ")
                    ));
                }
            }
            Some(names)
        }
        None => None,
    };
    let numerics = match table.get("numerics") {
        Some(v) => numerics_spec(table_of(v, "[numerics]")?)?,
        None => Numerics::default(),
    };
    let output_dir = match table.get("output") {
        Some(v) => {
            let t = table_of(v, "[output]")?;
            check_keys(t, "[output]", &["dir"])?;
            Some(str_of(req(t, "[output]", "dir")?, "[output] dir")?)
        }
        None => None,
    };
    let wulff = match table.get("wulff") {
        Some(v) => wulff_options(table_of(v, "[wulff]")?)?,
        None => WulffOptions::default(),
    };
    Ok(ScenarioConfig {
        gamma,
        surface,
        delaunay,
        checks,
        numerics,
        output_dir,
        wulff,
    })
}

fn gamma_spec(t: &Table) -> CfgResult<GammaSpec> {
    let family = str_of(req(t, "[gamma]", "family")?, "[gamma] family")?;
    match family.as_str() {
        "isotropic" => {
            check_keys(t, "[gamma]", &["family"])?;
            Ok(GammaSpec::Isotropic)
        }
        "quadratic" => {
            check_keys(t, "[gamma]", &["family", "diag", "matrix"])?;
            let diag = match t.get("diag") {
                Some(v) => Some(f64_triple(v, "[gamma] diag")?),
                None => None,
            };
            let matrix = match t.get("matrix") {
                Some(v) => Some(f64_matrix3(v, "[gamma] matrix")?),
                None => None,
            };
            if diag.is_some() == matrix.is_some() {
                return Err(
                    "[gamma] quadratic family needs exactly one of `diag`, `matrix`".to_string(),
                );
            }
            Ok(GammaSpec::Quadratic { diag, matrix })
        }
        "lens" => {
            check_keys(t, "[gamma]", &["family", "beta"])?;
            Ok(GammaSpec::Lens {
                beta: f64_of(req(t, "[gamma]", "beta")?, "[gamma] beta")?,
            })
        }
        "product" => {
            check_keys(t, "[gamma]", &["family", "profile", "cross"])?;
            Ok(GammaSpec::Product {
                profile: curve_spec(
                    table_of(req(t, "[gamma]", "profile")?, "[gamma.profile]")?,
                    "[gamma.profile]",
                )?,
                cross: curve_spec(
                    table_of(req(t, "[gamma]", "cross")?, "[gamma.cross]")?,
                    "[gamma.cross]",
                )?,
            })
        }
        "table" => {
            check_keys(t, "[gamma]", &["family", "theta", "values"])?;
            Ok(GammaSpec::Table {
                theta: f64_array(req(t, "[gamma]", "theta")?, "[gamma] theta")?,
                values: f64_array(req(t, "[gamma]", "values")?, "[gamma] values")?,
            })
        }
        other => Err(format!(
            "[gamma] family {other:?} is not one of isotropic, quadratic, lens, product, table"
        )),
    }
}

fn curve_spec(t: &Table, path: &str) -> CfgResult<CurveSpec> {
    let kind = str_of(req(t, path, "kind")?, &format!("{path} kind"))?;
    match kind.as_str() {
        "circle" => {
            check_keys(t, path, &["kind", "radius"])?;
            Ok(CurveSpec::Circle {
                radius: f64_of(req(t, path, "radius")?, &format!("{path} radius"))?,
            })
        }
        "ellipse" => {
            check_keys(t, path, &["kind", "a", "b"])?;
            Ok(CurveSpec::Ellipse {
                a: f64_of(req(t, path, "a")?, &format!("{path} a"))?,
                b: f64_of(req(t, path, "b")?, &format!("{path} b"))?,
            })
        }
        "lens" => {
            check_keys(t, path, &["kind", "half_width", "arc_radius"])?;
            Ok(CurveSpec::Lens {
                half_width: f64_of(req(t, path, "half_width")?, &format!("{path} half_width"))?,
                arc_radius: f64_of(req(t, path, "arc_radius")?, &format!("{path} arc_radius"))?,
            })
        }
        "arcgon" => {
            check_keys(t, path, &["kind", "sides", "circumradius", "arc_radius"])?;
            Ok(CurveSpec::Arcgon {
                sides: usize_of(req(t, path, "sides")?, &format!("{path} sides"))?,
                circumradius: f64_of(
                    req(t, path, "circumradius")?,
                    &format!("{path} circumradius"),
                )?,
                arc_radius: f64_of(req(t, path, "arc_radius")?, &format!("{path} arc_radius"))?,
            })
        }
        other => Err(format!(
            "{path} kind {other:?} is not one of circle, ellipse, lens, arcgon"
        )),
    }
}

fn surface_spec(t: &Table) -> CfgResult<SurfaceSpec> {
    let kind = str_of(req(t, "[surface]", "kind")?, "[surface] kind")?;
    match kind.as_str() {
        "wulff" => {
            check_keys(t, "[surface]", &["kind", "scale"])?;
            let scale = match t.get("scale") {
                Some(v) => f64_of(v, "[surface] scale")?,
                None => 1.0,
            };
            Ok(SurfaceSpec::Wulff { scale })
        }
        "sphere" => {
            check_keys(t, "[surface]", &["kind", "radius"])?;
            Ok(SurfaceSpec::Sphere {
                radius: f64_of(req(t, "[surface]", "radius")?, "[surface] radius")?,
            })
        }
        "ellipsoid" => {
            check_keys(t, "[surface]", &["kind", "a", "b", "c"])?;
            Ok(SurfaceSpec::Ellipsoid {
                a: f64_of(req(t, "[surface]", "a")?, "[surface] a")?,
                b: f64_of(req(t, "[surface]", "b")?, "[surface] b")?,
                c: f64_of(req(t, "[surface]", "c")?, "[surface] c")?,
            })
        }
        "torus" => {
            check_keys(t, "[surface]", &["kind", "major", "minor"])?;
            Ok(SurfaceSpec::Torus {
                major: f64_of(req(t, "[surface]", "major")?, "[surface] major")?,
                minor: f64_of(req(t, "[surface]", "minor")?, "[surface] minor")?,
            })
        }
        "delaunay" => {
            check_keys(t, "[surface]", &["kind"])?;
            Ok(SurfaceSpec::Delaunay)
        }
        other => Err(format!(
            "[surface] kind {other:?} is not one of wulff, sphere, ellipsoid, torus, delaunay"
        )),
    }
}

fn delaunay_spec(t: &Table) -> CfgResult<DelaunaySpec> {
    check_keys(
        t,
        "[delaunay]",
        &[
            "class",
            "lambda",
            "step",
            "periods",
            "u_floor",
            "z_half",
            "neck_radius",
            "bulge_radius",
        ],
    )?;
    let class = match str_of(req(t, "[delaunay]", "class")?, "[delaunay] class")?.as_str() {
        "wulff" => ProfileClass::Wulff,
        "catenoid" => ProfileClass::Catenoid,
        "cylinder" => ProfileClass::Cylinder,
        "unduloid" => ProfileClass::Unduloid,
        other => {
            return Err(format!(
                "[delaunay] class {other:?} is not one of wulff, catenoid, cylinder, unduloid"
            ))
        }
    };
    let opt_f64 = |key: &str| -> CfgResult<Option<f64>> {
        match t.get(key) {
            Some(v) => Ok(Some(f64_of(v, &format!("[delaunay] {key}"))?)),
            None => Ok(None),
        }
    };
    Ok(DelaunaySpec {
        class,
        lambda: f64_of(req(t, "[delaunay]", "lambda")?, "[delaunay] lambda")?,
        step: opt_f64("step")?.unwrap_or(1e-3),
        periods: match t.get("periods") {
            Some(v) => usize_of(v, "[delaunay] periods")?,
            None => 2,
        },
        u_floor: opt_f64("u_floor")?.unwrap_or(0.05),
        z_half: opt_f64("z_half")?,
        neck_radius: opt_f64("neck_radius")?,
        bulge_radius: opt_f64("bulge_radius")?,
    })
}

fn numerics_spec(t: &Table) -> CfgResult<Numerics> {
    check_keys(t, "[numerics]", &["quadrature", "seed", "tolerance_scale"])?;
    let defaults = Numerics::default();
    Ok(Numerics {
        quadrature: match t.get("quadrature") {
            Some(v) => usize_of(v, "[numerics] quadrature")?,
            None => defaults.quadrature,
        },
        seed: match t.get("seed") {
            Some(v) => u64_of(v, "[numerics] seed")?,
            None => defaults.seed,
        },
        tolerance_scale: match t.get("tolerance_scale") {
            Some(v) => f64_of(v, "[numerics] tolerance_scale")?,
            None => defaults.tolerance_scale,
        },
    })
}

fn wulff_options(t: &Table) -> CfgResult<WulffOptions> {
    check_keys(t, "[wulff]", &["samples", "edge_threshold_deg"])?;
    let defaults = WulffOptions::default();
    Ok(WulffOptions {
        samples: match t.get("samples") {
            Some(v) => usize_of(v, "[wulff] samples")?,
            None => defaults.samples,
        },
        edge_threshold_deg: match t.get("edge_threshold_deg") {
            Some(v) => Some(f64_of(v, "[wulff] edge_threshold_deg")?),
            None => None,
        },
    })
}

fn check_keys(t: &Table, path: &str, allowed: &[&str]) -> CfgResult<()> {
    for key in t.keys() {
        if !allowed.contains(&key.as_str()) {
            let scope = if path.is_empty() { "top level" } else { path };
            return Err(format!(
                "{scope}: unknown key {key:?}; allowed keys: {}",
                allowed.join(", ")
            ));
        }
    }
    Ok(())
}

fn req<'a>(t: &'a Table, path: &str, key: &str) -> CfgResult<&'a Value> {
    t.get(key).ok_or_else(|| {
        let scope = if path.is_empty() { "top level" } else { path };
        format!("{scope}: missing required key {key:?}")
    })
}

fn table_of<'a>(v: &'a Value, path: &str) -> CfgResult<&'a Table> {
    v.as_table().ok_or_else(|| format!("{path} must be a table"))
}

fn str_of(v: &Value, path: &str) -> CfgResult<String> {
    v.as_str()
        .map(str::to_string)
        .ok_or_else(|| format!("{path} must be a string"))
}

fn f64_of(v: &Value, path: &str) -> CfgResult<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(format!("{path} must be a number")),
    }
}

fn usize_of(v: &Value, path: &str) -> CfgResult<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(format!("{path} must be a non-negative integer")),
    }
}

fn u64_of(v: &Value, path: &str) -> CfgResult<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(format!("{path} must be a non-negative integer")),
    }
}

fn f64_array(v: &Value, path: &str) -> CfgResult<Vec<f64>> {
    let arr = v
        .as_array()
        .ok_or_else(|| format!("{path} must be an array of numbers"))?;
    arr.iter().map(|item| f64_of(item, path)).collect()
}

fn str_array(v: &Value, path: &str) -> CfgResult<Vec<String>> {
    let arr = v
        .as_array()
        .ok_or_else(|| format!("{path} must be an array of strings"))?;
    arr.iter().map(|item| str_of(item, path)).collect()
}

fn f64_triple(v: &Value, path: &str) -> CfgResult<[f64; 3]> {
    let items = f64_array(v, path)?;
    items
        .try_into()
        .map_err(|_| format!("{path} must have exactly 3 entries"))
}

fn f64_matrix3(v: &Value, path: &str) -> CfgResult<[[f64; 3]; 3]> {
    let rows = v
        .as_array()
        .ok_or_else(|| format!("{path} must be a 3x3 array of numbers"))?;
    if rows.len() != 3 {
        return Err(format!("{path} must have exactly 3 rows"));
    }
    let mut out = [[0.0; 3]; 3];
    for (i, row) in rows.iter().enumerate() {
        out[i] = f64_triple(row, path)?;
    }
    Ok(out)
}

impl CurveSpec {
    pub fn build(&self) -> wulffgeo::Result<PlanarCurve> {
        match *self {
            CurveSpec::Circle { radius } => PlanarCurve::circle(radius),
            CurveSpec::Ellipse { a, b } => PlanarCurve::ellipse(a, b),
            CurveSpec::Lens {
                half_width,
                arc_radius,
            } => PlanarCurve::lens(half_width, arc_radius),
            CurveSpec::Arcgon {
                sides,
                circumradius,
                arc_radius,
            } => PlanarCurve::arcgon(sides, circumradius, arc_radius),
        }
    }

    fn echo(&self, out: &mut String, header: &str) {
        out.push_str(&format!("[{header}]\n"));
        match *self {
            CurveSpec::Circle { radius } => {
                out.push_str("kind = \"circle\"\n");
                out.push_str(&format!("radius = {}\n", fmt_f64(radius)));
            }
            CurveSpec::Ellipse { a, b } => {
                out.push_str("kind = \"ellipse\"\n");
                out.push_str(&format!("a = {}\n", fmt_f64(a)));
                out.push_str(&format!("b = {}\n", fmt_f64(b)));
            }
            CurveSpec::Lens {
                half_width,
                arc_radius,
            } => {
                out.push_str("kind = \"lens\"\n");
                out.push_str(&format!("half_width = {}\n", fmt_f64(half_width)));
                out.push_str(&format!("arc_radius = {}\n", fmt_f64(arc_radius)));
            }
            CurveSpec::Arcgon {
                sides,
                circumradius,
                arc_radius,
            } => {
                out.push_str("kind = \"arcgon\"\n");
                out.push_str(&format!("sides = {sides}\n"));
                out.push_str(&format!("circumradius = {}\n", fmt_f64(circumradius)));
                out.push_str(&format!("arc_radius = {}\n", fmt_f64(arc_radius)));
            }
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            CurveSpec::Circle { radius } => format!("circle({radius})"),
            CurveSpec::Ellipse { a, b } => format!("ellipse({a},{b})"),
            CurveSpec::Lens {
                half_width,
                arc_radius,
            } => format!("lens({half_width},{arc_radius})"),
            CurveSpec::Arcgon {
                sides,
                circumradius,
                arc_radius,
            } => format!("arcgon({sides},{circumradius},{arc_radius})"),
        }
    }
}

impl GammaSpec {
    pub fn build(&self) -> wulffgeo::Result<Anisotropy> {
        match self {
            GammaSpec::Isotropic => Ok(Anisotropy::isotropic()),
            GammaSpec::Quadratic { diag, matrix } => {
                let q = if let Some(d) = diag {
                    Matrix3::from_diagonal(&nalgebra::Vector3::new(d[0], d[1], d[2]))
                } else {
                    let m = matrix.expect("validated: one of diag, matrix");
                    Matrix3::from_rows(&[
                        nalgebra::RowVector3::new(m[0][0], m[0][1], m[0][2]),
                        nalgebra::RowVector3::new(m[1][0], m[1][1], m[1][2]),
                        nalgebra::RowVector3::new(m[2][0], m[2][1], m[2][2]),
                    ])
                };
                Anisotropy::quadratic(q)
            }
            GammaSpec::Lens { beta } => Anisotropy::lens(*beta),
            GammaSpec::Product { profile, cross } => {
                Ok(Anisotropy::product(profile.build()?, cross.build()?))
            }
            GammaSpec::Table { theta, values } => {
                Anisotropy::table(theta.clone(), values.clone())
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            GammaSpec::Isotropic => "isotropic".to_string(),
            GammaSpec::Quadratic { diag: Some(d), .. } => {
                format!("quadratic(diag {} {} {})", d[0], d[1], d[2])
            }
            GammaSpec::Quadratic { .. } => "quadratic(matrix)".to_string(),
            GammaSpec::Lens { beta } => format!("lens(beta={beta})"),
            GammaSpec::Product { profile, cross } => {
                format!("product({}, {})", profile.describe(), cross.describe())
            }
            GammaSpec::Table { theta, .. } => format!("table({} nodes)", theta.len()),
        }
    }
}

impl SurfaceSpec {
    pub fn describe(&self) -> String {
        match *self {
            SurfaceSpec::Wulff { scale } if scale == 1.0 => "wulff".to_string(),
            SurfaceSpec::Wulff { scale } => format!("wulff(x{scale})"),
            SurfaceSpec::Sphere { radius } => format!("sphere({radius})"),
            SurfaceSpec::Ellipsoid { a, b, c } => format!("ellipsoid({a},{b},{c})"),
            SurfaceSpec::Torus { major, minor } => format!("torus({major},{minor})"),
            SurfaceSpec::Delaunay => "delaunay".to_string(),
        }
    }
}

impl DelaunaySpec {
    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            step: self.step,
            z_half: self.z_half,
            periods: self.periods,
            neck_radius: self.neck_radius,
            bulge_radius: self.bulge_radius,
            u_floor: self.u_floor,
        }
    }
}

/// Render a float so TOML reads it back as a float.
fn fmt_f64(x: f64) -> String {
    if x.is_finite() && x == x.trunc() && x.abs() < 1e15 {
        format!("{x:.1}")
    } else {
        format!("{x}")
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

impl ScenarioConfig {
    /// The fully-resolved configuration, defaults included, as TOML.
    pub fn echo(&self, resolved_out_dir: &str) -> String {
        let mut out = String::new();
        out.push_str("[gamma]\n");
        match &self.gamma {
            GammaSpec::Isotropic => out.push_str("family = \"isotropic\"\n"),
            GammaSpec::Quadratic { diag, matrix } => {
                out.push_str("family = \"quadratic\"\n");
                if let Some(d) = diag {
                    out.push_str(&format!(
                        "diag = [{}, {}, {}]\n",
                        fmt_f64(d[0]),
                        fmt_f64(d[1]),
                        fmt_f64(d[2])
                    ));
                }
                if let Some(m) = matrix {
                    let row = |r: &[f64; 3]| {
                        format!("[{}, {}, {}]", fmt_f64(r[0]), fmt_f64(r[1]), fmt_f64(r[2]))
                    };
                    out.push_str(&format!(
                        "matrix = [{}, {}, {}]\n",
                        row(&m[0]),
                        row(&m[1]),
                        row(&m[2])
                    ));
                }
            }
            GammaSpec::Lens { beta } => {
                out.push_str("family = \"lens\"\n");
                out.push_str(&format!("beta = {}\n", fmt_f64(*beta)));
            }
            GammaSpec::Product { .. } => out.push_str("family = \"product\"\n"),
            GammaSpec::Table { theta, values } => {
                out.push_str("family = \"table\"\n");
                let list = |xs: &[f64]| {
                    xs.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(", ")
                };
                out.push_str(&format!("theta = [{}]\n", list(theta)));
                out.push_str(&format!("values = [{}]\n", list(values)));
            }
        }
        if let GammaSpec::Product { profile, cross } = &self.gamma {
            out.push('\n');
            profile.echo(&mut out, "gamma.profile");
            out.push('\n');
            cross.echo(&mut out, "gamma.cross");
        }
        if let Some(surface) = &self.surface {
            out.push_str("\n[surface]\n");
            match *surface {
                SurfaceSpec::Wulff { scale } => {
                    out.push_str("kind = \"wulff\"\n");
                    out.push_str(&format!("scale = {}\n", fmt_f64(scale)));
                }
                SurfaceSpec::Sphere { radius } => {
                    out.push_str("kind = \"sphere\"\n");
                    out.push_str(&format!("radius = {}\n", fmt_f64(radius)));
                }
                SurfaceSpec::Ellipsoid { a, b, c } => {
                    out.push_str("kind = \"ellipsoid\"\n");
                    out.push_str(&format!("a = {}\n", fmt_f64(a)));
                    out.push_str(&format!("b = {}\n", fmt_f64(b)));
                    out.push_str(&format!("c = {}\n", fmt_f64(c)));
                }
                SurfaceSpec::Torus { major, minor } => {
                    out.push_str("kind = \"torus\"\n");
                    out.push_str(&format!("major = {}\n", fmt_f64(major)));
                    out.push_str(&format!("minor = {}\n", fmt_f64(minor)));
                }
                SurfaceSpec::Delaunay => out.push_str("kind = \"delaunay\"\n"),
            }
        }
        if let Some(d) = &self.delaunay {
            out.push_str("\n[delaunay]\n");
            out.push_str(&format!("class = \"{}\"\n", d.class.name()));
            out.push_str(&format!("lambda = {}\n", fmt_f64(d.lambda)));
            out.push_str(&format!("step = {}\n", fmt_f64(d.step)));
            out.push_str(&format!("periods = {}\n", d.periods));
            out.push_str(&format!("u_floor = {}\n", fmt_f64(d.u_floor)));
            if let Some(z) = d.z_half {
                out.push_str(&format!("z_half = {}\n", fmt_f64(z)));
            }
            if let Some(n) = d.neck_radius {
                out.push_str(&format!("neck_radius = {}\n", fmt_f64(n)));
            }
            if let Some(b) = d.bulge_radius {
                out.push_str(&format!("bulge_radius = {}\n", fmt_f64(b)));
            }
        }
        if let Some(checks) = &self.checks {
            out.push_str("\n[checks]\n");
            let list = checks
                .iter()
                .map(|c| format!("\"{}\"", escape(c)))
                .collect::<Vec<_>>()
                .join(", ");
            out.push_str(&format!("only = [{list}]\n"));
        }
        out.push_str("\n[numerics]\n");
        out.push_str(&format!("quadrature = {}\n", self.numerics.quadrature));
        out.push_str(&format!("seed = {}\n", self.numerics.seed));
        out.push_str(&format!(
            "tolerance_scale = {}\n",
            fmt_f64(self.numerics.tolerance_scale)
        ));
        out.push_str("\n[output]\n");
        out.push_str(&format!("dir = \"{}\"\n", escape(resolved_out_dir)));
        out.push_str("\n[wulff]\n");
        out.push_str(&format!("samples = {}\n", self.wulff.samples));
        if let Some(e) = self.wulff.edge_threshold_deg {
            out.push_str(&format!("edge_threshold_deg = {}\n", fmt_f64(e)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = parse_config("[gamma]\nfamily = \"isotropic\"\n").unwrap();
        assert!(matches!(cfg.gamma, GammaSpec::Isotropic));
        assert_eq!(cfg.numerics.quadrature, 32);
        assert_eq!(cfg.numerics.seed, 0);
        assert_eq!(cfg.numerics.tolerance_scale, 1.0);
        assert!(cfg.surface.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_path() {
        let err = parse_config("[gamma]\nfamily = \"isotropic\"\nbeta = 2.0\n").unwrap_err();
        assert!(err.contains("[gamma]"), "{err}");
        assert!(err.contains("beta"), "{err}");
        let err = parse_config("[gamma]\nfamily = \"isotropic\"\n\n[extra]\nx = 1\n").unwrap_err();
        assert!(err.contains("extra"), "{err}");
        let err = parse_config(
            "[gamma]\nfamily = \"product\"\n[gamma.profile]\nkind = \"circle\"\nradius = 1.0\n\
             radiu = 2.0\n[gamma.cross]\nkind = \"circle\"\nradius = 1.0\n",
        )
        .unwrap_err();
        assert!(err.contains("[gamma.profile]"), "{err}");
    }

    #[test]
    fn quadratic_requires_exactly_one_matrix_form() {
        let err = parse_config("[gamma]\nfamily = \"quadratic\"\n").unwrap_err();
        assert!(err.contains("exactly one"), "{err}");
        let cfg =
            parse_config("[gamma]\nfamily = \"quadratic\"\ndiag = [1.0, 1.0, 4.0]\n").unwrap();
        match cfg.gamma {
            GammaSpec::Quadratic { diag: Some(d), .. } => assert_eq!(d, [1.0, 1.0, 4.0]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_check_names_are_rejected() {
        let err = parse_config(
            "[gamma]\nfamily = \"isotropic\"\n[checks]\nonly = [\"no_such_check\"]\n",
        )
        .unwrap_err();
        assert!(err.contains("no_such_check"), "{err}");
    }

    #[test]
    fn echo_round_trips_through_the_parser() {
        let text = "[gamma]\nfamily = \"product\"\n\
                    [gamma.profile]\nkind = \"lens\"\nhalf_width = 1.0\narc_radius = 1.8\n\
                    [gamma.cross]\nkind = \"circle\"\nradius = 1.0\n\
                    [delaunay]\nclass = \"catenoid\"\nlambda = 0.0\nstep = 0.001\n";
        let cfg = parse_config(text).unwrap();
        let echo = cfg.echo("out");
        let again = parse_config(&echo).unwrap();
        assert_eq!(again.output_dir.as_deref(), Some("out"));
        let echo2 = again.echo("out");
        assert_eq!(echo, echo2, "echo must be a fixed point of parse+echo");
    }
}
