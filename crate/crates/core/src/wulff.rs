//! Wulff construction: the equilibrium body of an energy density as the
//! intersection of its support half-spaces.
//!
//! The construction dualizes: each sampled direction `n` maps to the point
//! `n / gamma(n)`, the convex hull of those points is taken, and the body is
//! read off as the polar dual polytope. Sharp edges appear where adjacent
//! support directions differ by more than an angular threshold; maximal
//! smooth regions are the components left after cutting along sharp edges.

use crate::anisotropy::Anisotropy;
use crate::error::Error;
use crate::geom::fibonacci_sphere;
use crate::hull::convex_hull;
use crate::io::{vector_json, Json};
use crate::mesh::TriMesh;
use crate::surface::{shapes, PiecewiseSurface};
use crate::Result;
use nalgebra::Vector3;

/// Default angular threshold separating sharp edges from mesh discretization
/// noise, in degrees.
pub const EDGE_THRESHOLD_DEG: f64 = 3.0;

/// A maximal smooth region of the body boundary with the support directions
/// it is exposed to.
#[derive(Debug, Clone)]
pub struct FaceRegion {
    /// Sample indices of the supporting directions.
    pub members: Vec<usize>,
    pub mean_normal: Vector3<f64>,
    /// Largest angle (degrees) between a member direction and the mean.
    pub cone_angle_deg: f64,
}

/// A chained sharp-edge curve on the body.
#[derive(Debug, Clone)]
pub struct EdgePolyline {
    /// Mesh vertex indices along the chain.
    pub vertex_ids: Vec<usize>,
    pub points: Vec<Vector3<f64>>,
    pub closed: bool,
}

impl EdgePolyline {
    pub fn length(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .sum()
    }
}

/// The constructed equilibrium body.
#[derive(Clone)]
pub struct WulffShape {
    pub mesh: TriMesh,
    pub faces: Vec<FaceRegion>,
    pub edges: Vec<EdgePolyline>,
    /// Boundary energy; from the parametric surface when one exists, else
    /// from the mesh.
    pub energy: f64,
    /// Enclosed volume on the same basis as `energy`.
    pub volume: f64,
    pub mesh_energy: f64,
    pub mesh_volume: f64,
    /// Exact parametric boundary for the built-in families that have one.
    pub surface: Option<PiecewiseSurface>,
    pub edge_threshold_deg: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Exact parametric boundary of the equilibrium body, for densities where
/// one is available: smooth strictly stable densities via the normal
/// parametrization, the capped lens family, and product bodies.
pub fn wulff_surface(gamma: &Anisotropy) -> Option<PiecewiseSurface> {
    use crate::anisotropy::families::Backend;
    match gamma.backend() {
        Backend::Isotropic | Backend::Quadratic { .. } => {
            Some(shapes::gauss_map_surface(gamma))
        }
        Backend::Lens { beta } => {
            if *beta < 1.0 {
                Some(shapes::gauss_map_surface(gamma))
            } else {
                shapes::lens_capped_surface(*beta).ok()
            }
        }
        Backend::Product { profile, cross } => {
            shapes::product_surface(profile, cross).ok()
        }
        Backend::Table(_) | Backend::Custom { .. } => {
            let scan = gamma.convexity_scan(2000, 0);
            if scan.is_convex() {
                Some(shapes::gauss_map_surface(gamma))
            } else {
                None
            }
        }
    }
}

/// Build the equilibrium body from `samples` quasi-uniform support
/// directions. Identical inputs produce identical output bit for bit.
pub fn wulff_construct(gamma: &Anisotropy, samples: usize, seed: u64) -> Result<WulffShape> {
    wulff_construct_with_threshold(gamma, samples, seed, EDGE_THRESHOLD_DEG)
}

pub fn wulff_construct_with_threshold(
    gamma: &Anisotropy,
    samples: usize,
    seed: u64,
    edge_threshold_deg: f64,
) -> Result<WulffShape> {
    if samples < 100 {
        return Err(Error::param(
            "samples",
            format!("need at least 100 support directions, got {samples}"),
        ));
    }
    let dirs = fibonacci_sphere(samples, seed);
    let mut dual = Vec::with_capacity(samples);
    for n in &dirs {
        let g = gamma.gamma(n);
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::NonPositiveGamma {
                direction: [n.x, n.y, n.z],
                value: g,
            });
        }
        dual.push(n / g);
    }
    let hull = convex_hull(&dual)?;

    // Polar duality: each hull facet plane {y : m . y = d} becomes the body
    // vertex m / d, and each hull vertex (a support direction) becomes a
    // body face.
    let mut vertices = Vec::with_capacity(hull.faces.len());
    for face in &hull.faces {
        if face.offset <= 0.0 {
            return Err(Error::solver(
                "dual hull does not enclose the origin; energy density too irregular",
            ));
        }
        vertices.push(face.normal / face.offset);
    }

    let cycles = hull.vertex_cycles();
    let mut triangles = Vec::new();
    for (sample_idx, cycle) in &cycles {
        let mut cycle = cycle.clone();
        // Wind the body face so its outward side matches the supporting
        // direction.
        let mut newell = Vector3::zeros();
        for i in 0..cycle.len() {
            let a = vertices[cycle[i]];
            let b = vertices[cycle[(i + 1) % cycle.len()]];
            newell += a.cross(&b);
        }
        if newell.dot(&dirs[*sample_idx]) < 0.0 {
            cycle.reverse();
        }
        for i in 1..cycle.len() - 1 {
            triangles.push([cycle[0], cycle[i], cycle[i + 1]]);
        }
    }
    let mesh = TriMesh::new(vertices, triangles)?;

    // Sharp edges: dual-hull edges joining support directions that differ
    // by more than the threshold. Neighboring samples on a smooth cap
    // already differ by about the sampling resolution, so the effective
    // threshold never drops below twice the mean spacing.
    let mean_spacing_deg =
        (4.0 * std::f64::consts::PI / samples as f64).sqrt().to_degrees();
    let effective_threshold_deg = edge_threshold_deg.max(2.0 * mean_spacing_deg);
    let cos_threshold = effective_threshold_deg.to_radians().cos();
    let mut sharp_segments = Vec::new();
    let mut smooth_pairs = Vec::new();
    for (a, b, f, g) in hull.edges() {
        let cosang = dirs[a].dot(&dirs[b]).clamp(-1.0, 1.0);
        if cosang < cos_threshold {
            sharp_segments.push((f.min(g), f.max(g)));
        } else {
            smooth_pairs.push((a, b));
        }
    }
    sharp_segments.sort();
    sharp_segments.dedup();
    let edges = chain_segments(&sharp_segments, &mesh.vertices);

    // Maximal smooth regions: support directions connected through
    // non-sharp dual edges.
    let hull_vertex_ids: Vec<usize> = {
        let mut ids: Vec<usize> = cycles.iter().map(|(v, _)| *v).collect();
        ids.sort_unstable();
        ids
    };
    let faces = smooth_regions(&hull_vertex_ids, &smooth_pairs, &dirs);

    let mesh_energy = mesh.energy(gamma);
    let mesh_volume = mesh.volume();
    let surface = wulff_surface(gamma);
    let (energy, volume) = match &surface {
        Some(surf) => (surf.energy(gamma, 64), surf.volume(64)?),
        None => (mesh_energy, mesh_volume),
    };

    Ok(WulffShape {
        mesh,
        faces,
        edges,
        energy,
        volume,
        mesh_energy,
        mesh_volume,
        surface,
        edge_threshold_deg: effective_threshold_deg,
        samples,
        seed,
    })
}

fn chain_segments(segments: &[(usize, usize)], points: &[Vector3<f64>]) -> Vec<EdgePolyline> {
    use std::collections::BTreeMap;
    let mut incident: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &(a, b)) in segments.iter().enumerate() {
        incident.entry(a).or_default().push(i);
        incident.entry(b).or_default().push(i);
    }
    let mut used = vec![false; segments.len()];
    let mut polylines = Vec::new();
    // Open chains start at odd-degree vertices; the rest are loops.
    let mut starts: Vec<usize> = incident
        .iter()
        .filter(|(_, segs)| segs.len() % 2 == 1)
        .map(|(&v, _)| v)
        .collect();
    starts.extend(incident.keys().copied());
    for start in starts {
        loop {
            let Some(&seg) = incident[&start].iter().find(|&&s| !used[s]) else {
                break;
            };
            let mut ids = vec![start];
            let mut current = seg;
            let mut at = start;
            loop {
                used[current] = true;
                let (a, b) = segments[current];
                at = if a == at { b } else { a };
                ids.push(at);
                let next = incident[&at].iter().find(|&&s| !used[s]);
                match next {
                    Some(&s) => current = s,
                    None => break,
                }
            }
            let closed = ids.len() > 2 && ids.first() == ids.last();
            if closed {
                ids.pop();
            }
            polylines.push(EdgePolyline {
                points: ids.iter().map(|&i| points[i]).collect(),
                vertex_ids: ids,
                closed,
            });
        }
    }
    polylines
}

fn smooth_regions(
    members: &[usize],
    smooth_pairs: &[(usize, usize)],
    dirs: &[Vector3<f64>],
) -> Vec<FaceRegion> {
    use std::collections::HashMap;
    let index: HashMap<usize, usize> = members.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut parent: Vec<usize> = (0..members.len()).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        let mut root = x;
        while parent[root] != root {
            root = parent[root];
        }
        let mut cur = x;
        while parent[cur] != root {
            let next = parent[cur];
            parent[cur] = root;
            cur = next;
        }
        root
    }
    for &(a, b) in smooth_pairs {
        let (Some(&ia), Some(&ib)) = (index.get(&a), index.get(&b)) else {
            continue;
        };
        let ra = find(&mut parent, ia);
        let rb = find(&mut parent, ib);
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..members.len() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(members[i]);
    }
    groups
        .into_values()
        .map(|group| {
            let mut mean = Vector3::zeros();
            for &m in &group {
                mean += dirs[m];
            }
            mean /= mean.norm();
            let cone = group
                .iter()
                .map(|&m| dirs[m].dot(&mean).clamp(-1.0, 1.0).acos())
                .fold(0.0, f64::max);
            FaceRegion {
                members: group,
                mean_normal: mean,
                cone_angle_deg: cone.to_degrees(),
            }
        })
        .collect()
}

impl WulffShape {
    /// Max over mesh vertices of the distance to the unit sphere.
    pub fn hausdorff_to_unit_sphere(&self) -> f64 {
        self.mesh
            .vertices
            .iter()
            .map(|v| (v.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Max over mesh vertices of the radial distance to the axis-aligned
    /// ellipsoid with the given semi-axes (an upper bound on the true
    /// distance, exact for the sphere).
    pub fn hausdorff_to_ellipsoid(&self, a: f64, b: f64, c: f64) -> f64 {
        self.mesh
            .vertices
            .iter()
            .map(|v| {
                let level =
                    ((v.x / a).powi(2) + (v.y / b).powi(2) + (v.z / c).powi(2)).sqrt();
                (v.norm() * (level - 1.0) / level).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Max over vertices and probe directions of `v . n - gamma(n)`.
    pub fn support_excess(&self, gamma: &Anisotropy, dirs: &[Vector3<f64>]) -> f64 {
        self.mesh.support_excess(gamma, dirs)
    }

    /// Sidecar description of edges and smooth regions.
    pub fn sidecar_json(&self) -> Json {
        let mut root = Json::obj();
        root.push("samples", Json::Int(self.samples as i64));
        root.push("seed", Json::Int(self.seed as i64));
        root.push("edge_threshold_deg", Json::Num(self.edge_threshold_deg));
        root.push("energy", Json::Num(self.energy));
        root.push("volume", Json::Num(self.volume));
        root.push("mesh_energy", Json::Num(self.mesh_energy));
        root.push("mesh_volume", Json::Num(self.mesh_volume));
        let faces = self
            .faces
            .iter()
            .map(|f| {
                let mut o = Json::obj();
                o.push("support_count", Json::Int(f.members.len() as i64));
                o.push("mean_normal", vector_json(&f.mean_normal));
                o.push("cone_angle_deg", Json::Num(f.cone_angle_deg));
                o
            })
            .collect();
        root.push("faces", Json::Arr(faces));
        let edges = self
            .edges
            .iter()
            .map(|e| {
                let mut o = Json::obj();
                o.push("closed", Json::Bool(e.closed));
                o.push("length", Json::Num(e.length()));
                o.push(
                    "points",
                    Json::Arr(e.points.iter().map(vector_json).collect()),
                );
                o
            })
            .collect();
        root.push("edges", Json::Arr(edges));
        root
    }
}
