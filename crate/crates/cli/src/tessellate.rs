//! Uniform-grid triangulation of parametric surfaces for OBJ export.

use std::collections::HashMap;

use nalgebra::Vector3;
use wulffgeo::mesh::TriMesh;
use wulffgeo::surface::PiecewiseSurface;

/// Quantization used to weld coincident seam vertices. Patch grids are far
/// coarser than this, so distinct vertices never collapse.
const WELD: f64 = 1e-9;

fn key(p: &Vector3<f64>) -> (i64, i64, i64) {
    (
        (p.x / WELD).round() as i64,
        (p.y / WELD).round() as i64,
        (p.z / WELD).round() as i64,
    )
}

/// Triangulate every patch on a uniform grid. The largest patch receives
/// `s_cells` by `t_cells` cells; smaller patches scale down proportionally.
/// Triangle winding is counterclockwise seen from outside, using each
/// patch's recorded orientation.
pub fn tessellate(
    surface: &PiecewiseSurface,
    s_cells: usize,
    t_cells: usize,
) -> wulffgeo::Result<TriMesh> {
    let span_s = |r: (f64, f64)| r.1 - r.0;
    let max_s = surface
        .patches
        .iter()
        .map(|p| span_s(p.s_range))
        .fold(0.0_f64, f64::max);
    let max_t = surface
        .patches
        .iter()
        .map(|p| span_s(p.t_range))
        .fold(0.0_f64, f64::max);

    let mut vertices: Vec<Vector3<f64>> = Vec::new();
    let mut index: HashMap<(i64, i64, i64), usize> = HashMap::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();

    for patch in &surface.patches {
        let ds = span_s(patch.s_range);
        let dt = span_s(patch.t_range);
        let n_s = ((ds / max_s * s_cells as f64).ceil() as usize).clamp(2, s_cells.max(2));
        let n_t = ((dt / max_t * t_cells as f64).ceil() as usize).clamp(2, t_cells.max(2));

        let mut ids = vec![vec![0usize; n_t + 1]; n_s + 1];
        for (i, row) in ids.iter_mut().enumerate() {
            let s = patch.s_range.0 + ds * i as f64 / n_s as f64;
            for (j, slot) in row.iter_mut().enumerate() {
                let t = patch.t_range.0 + dt * j as f64 / n_t as f64;
                let p = patch.jet1(s, t).x;
                let id = *index.entry(key(&p)).or_insert_with(|| {
                    vertices.push(p);
                    vertices.len() - 1
                });
                *slot = id;
            }
        }

        for i in 0..n_s {
            for j in 0..n_t {
                let (a, b, c, d) = (ids[i][j], ids[i + 1][j], ids[i + 1][j + 1], ids[i][j + 1]);
                let mut t1 = [a, b, c];
                let mut t2 = [a, c, d];
                if patch.orientation < 0.0 {
                    t1.swap(1, 2);
                    t2.swap(1, 2);
                }
                for t in [t1, t2] {
                    if t[0] != t[1] && t[1] != t[2] && t[0] != t[2] {
                        triangles.push(t);
                    }
                }
            }
        }
    }
    TriMesh::new(vertices, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use wulffgeo::surface::shapes;

    #[test]
    fn tessellated_sphere_is_closed_with_unit_radius() {
        let mesh = tessellate(&shapes::sphere(1.0), 48, 96).unwrap();
        assert!(mesh.is_closed());
        for v in &mesh.vertices {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        assert!((mesh.volume() - 4.0 * std::f64::consts::PI / 3.0).abs() < 0.01);
    }

    #[test]
    fn orientation_sign_controls_the_winding() {
        let mesh = tessellate(&shapes::sphere(1.0), 32, 64).unwrap();
        assert!(mesh.volume() > 0.0, "outward winding gives positive volume");
    }
}
