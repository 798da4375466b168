//! Closed oriented triangle meshes and their discrete measures.
//!
//! Discrete estimators on meshes are first-order accurate and are intended
//! for export, visualization, and the topological quantities (area, energy,
//! volume, Gauss map degree via angle defect). Identities involving the
//! shape operator are computed on parametric charts, never on meshes.

use crate::anisotropy::Anisotropy;
use crate::error::Error;
use crate::Result;
use nalgebra::Vector3;
use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<Vector3<f64>>,
    /// Counterclockwise seen from outside.
    pub triangles: Vec<[usize; 3]>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vector3<f64>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        for t in &triangles {
            for &i in t {
                if i >= vertices.len() {
                    return Err(Error::MeshTopology {
                        message: format!("triangle index {i} out of bounds"),
                    });
                }
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::MeshTopology {
                    message: "degenerate triangle with repeated vertex".to_string(),
                });
            }
        }
        Ok(TriMesh {
            vertices,
            triangles,
        })
    }

    /// Every undirected edge shared by exactly two triangles traversing it
    /// in opposite directions.
    pub fn is_closed(&self) -> bool {
        let mut edges: HashMap<(usize, usize), (u32, i64)> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let e = edges.entry((a.min(b), a.max(b))).or_insert((0, 0));
                e.0 += 1;
                e.1 += if a < b { 1 } else { -1 };
            }
        }
        edges.values().all(|&(total, net)| total == 2 && net == 0)
    }

    pub fn triangle_normal_area(&self, i: usize) -> (Vector3<f64>, f64) {
        let [a, b, c] = self.triangles[i];
        let n = (self.vertices[b] - self.vertices[a])
            .cross(&(self.vertices[c] - self.vertices[a]));
        let len = n.norm();
        if len > 0.0 {
            (n / len, 0.5 * len)
        } else {
            (Vector3::zeros(), 0.0)
        }
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|i| self.triangle_normal_area(i).1)
            .sum()
    }

    /// Sum of facet area times density at the facet normal.
    pub fn energy(&self, gamma: &Anisotropy) -> f64 {
        (0..self.triangles.len())
            .map(|i| {
                let (n, a) = self.triangle_normal_area(i);
                if a > 0.0 {
                    a * gamma.gamma(&n)
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Signed enclosed volume; positive for outward orientation.
    pub fn volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|&[a, b, c]| {
                self.vertices[a]
                    .dot(&self.vertices[b].cross(&self.vertices[c]))
                    / 6.0
            })
            .sum()
    }

    /// Gauss map degree as total angle defect over 4 pi; equals half the
    /// Euler characteristic for a closed mesh.
    pub fn degree(&self) -> Result<f64> {
        if !self.is_closed() {
            return Err(Error::NotClosed {
                operation: "gauss map degree",
            });
        }
        let mut defect = vec![2.0 * std::f64::consts::PI; self.vertices.len()];
        for t in &self.triangles {
            for k in 0..3 {
                let v = t[k];
                let a = self.vertices[t[(k + 1) % 3]] - self.vertices[v];
                let b = self.vertices[t[(k + 2) % 3]] - self.vertices[v];
                let cos = a.dot(&b) / (a.norm() * b.norm());
                defect[v] -= cos.clamp(-1.0, 1.0).acos();
            }
        }
        Ok(defect.iter().sum::<f64>() / (4.0 * std::f64::consts::PI))
    }

    /// Maximum of v . n - gamma(n) over all vertices and the given normals;
    /// nonpositive (up to discretization) when the mesh lies inside the
    /// region bounded by the support function.
    pub fn support_excess(&self, gamma: &Anisotropy, normals: &[Vector3<f64>]) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for n in normals {
            let g = gamma.gamma(n);
            for v in &self.vertices {
                worst = worst.max(v.dot(n) - g);
            }
        }
        worst
    }

    /// Support function of the vertex set in direction n.
    pub fn support(&self, n: &Vector3<f64>) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.dot(n))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::fibonacci_sphere;
    use crate::hull::convex_hull;
    use approx::assert_relative_eq;

    fn sphere_mesh(count: usize) -> TriMesh {
        let pts = fibonacci_sphere(count, 7);
        let hull = convex_hull(&pts).unwrap();
        TriMesh::new(pts, hull.faces.iter().map(|f| f.v).collect()).unwrap()
    }

    #[test]
    fn sphere_mesh_is_closed_with_degree_one() {
        let m = sphere_mesh(600);
        assert!(m.is_closed());
        assert_relative_eq!(m.degree().unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn sphere_mesh_area_and_volume_converge_from_below() {
        let m = sphere_mesh(4000);
        let pi = std::f64::consts::PI;
        let area = m.area();
        let vol = m.volume();
        assert!(area < 4.0 * pi && area > 4.0 * pi * 0.995, "area {area}");
        assert!(
            vol < 4.0 * pi / 3.0 && vol > 4.0 * pi / 3.0 * 0.995,
            "vol {vol}"
        );
    }

    #[test]
    fn isotropic_energy_equals_area() {
        let m = sphere_mesh(500);
        let gamma = Anisotropy::isotropic();
        assert_relative_eq!(m.energy(&gamma), m.area(), max_relative = 1e-12);
    }

    #[test]
    fn open_mesh_rejected_for_degree() {
        let verts = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
        ];
        let m = TriMesh::new(verts, vec![[0, 1, 2]]).unwrap();
        assert!(!m.is_closed());
        assert!(m.degree().is_err());
    }

    #[test]
    fn support_excess_nonpositive_for_inscribed_sphere() {
        let m = sphere_mesh(800);
        let gamma = Anisotropy::isotropic();
        let dirs = fibonacci_sphere(500, 1);
        let excess = m.support_excess(&gamma, &dirs);
        assert!(excess <= 1e-12, "excess {excess}");
        assert!(excess > -0.05);
    }
}
