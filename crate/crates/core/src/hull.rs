//! Incremental convex hull of a 3-D point set.
//!
//! Deterministic: points are inserted in index order and every tie-break is
//! by index, so the same input always yields the same face list. Faces are
//! output wound counterclockwise seen from outside.

use crate::error::Error;
use crate::Result;
use nalgebra::Vector3;
use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct HullFace {
    /// Indices into the input point slice.
    pub v: [usize; 3],
    /// Outward unit normal.
    pub normal: Vector3<f64>,
    /// Plane offset: x on the face plane satisfies normal . x = offset.
    pub offset: f64,
}

#[derive(Debug, Clone)]
pub struct Hull {
    pub faces: Vec<HullFace>,
}

impl Hull {
    /// Undirected hull edges with their two adjacent face indices.
    pub fn edges(&self) -> Vec<(usize, usize, usize, usize)> {
        let twin = self.directed_edge_map();
        let mut out = Vec::new();
        for (fi, face) in self.faces.iter().enumerate() {
            for k in 0..3 {
                let a = face.v[k];
                let b = face.v[(k + 1) % 3];
                if a < b {
                    let gi = twin[&(b, a)];
                    out.push((a, b, fi, gi));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Faces around each hull vertex, in consistent winding order.
    /// Returns pairs (vertex index, face cycle).
    pub fn vertex_cycles(&self) -> Vec<(usize, Vec<usize>)> {
        let twin = self.directed_edge_map();
        let mut start: HashMap<usize, usize> = HashMap::new();
        for (fi, face) in self.faces.iter().enumerate() {
            for &v in &face.v {
                let e = start.entry(v).or_insert(fi);
                *e = (*e).min(fi);
            }
        }
        let mut keys: Vec<usize> = start.keys().copied().collect();
        keys.sort_unstable();
        let mut out = Vec::with_capacity(keys.len());
        for v in keys {
            let first = start[&v];
            let mut cycle = Vec::new();
            let mut f = first;
            loop {
                cycle.push(f);
                // The one directed edge of f that starts at v.
                let face = &self.faces[f];
                let i = face.v.iter().position(|&x| x == v).unwrap();
                let w = face.v[(i + 1) % 3];
                f = twin[&(w, v)];
                if f == first {
                    break;
                }
            }
            out.push((v, cycle));
        }
        out
    }

    fn directed_edge_map(&self) -> HashMap<(usize, usize), usize> {
        let mut map = HashMap::with_capacity(self.faces.len() * 3);
        for (fi, face) in self.faces.iter().enumerate() {
            for k in 0..3 {
                map.insert((face.v[k], face.v[(k + 1) % 3]), fi);
            }
        }
        map
    }
}

struct Builder<'a> {
    pts: &'a [Vector3<f64>],
    eps: f64,
    interior: Vector3<f64>,
    verts: Vec<[usize; 3]>,
    planes: Vec<(Vector3<f64>, f64)>,
    /// Neighbor across the edge (v[k], v[k+1]); usize::MAX while unset.
    neighbors: Vec<[usize; 3]>,
    alive: Vec<bool>,
    hint: usize,
}

/// Convex hull of at least four affinely independent points.
pub fn convex_hull(points: &[Vector3<f64>]) -> Result<Hull> {
    if points.len() < 4 {
        return Err(Error::MeshTopology {
            message: format!("hull needs at least 4 points, got {}", points.len()),
        });
    }
    let scale = points
        .iter()
        .map(|p| p.abs().max())
        .fold(0.0_f64, f64::max)
        .max(1e-30);
    let eps = 1e-12 * scale;

    let (i0, i1, i2, i3) = initial_simplex(points, eps)?;
    let interior =
        (points[i0] + points[i1] + points[i2] + points[i3]) / 4.0;

    let mut b = Builder {
        pts: points,
        eps,
        interior,
        verts: Vec::new(),
        planes: Vec::new(),
        neighbors: Vec::new(),
        alive: Vec::new(),
        hint: 0,
    };
    for tri in [[i0, i1, i2], [i0, i1, i3], [i0, i2, i3], [i1, i2, i3]] {
        b.push_face(tri);
    }
    b.wire_neighbors_brute();

    let skip = [i0, i1, i2, i3];
    for p in 0..points.len() {
        if skip.contains(&p) {
            continue;
        }
        b.insert(p);
    }

    let mut faces: Vec<HullFace> = (0..b.verts.len())
        .filter(|&f| b.alive[f])
        .map(|f| HullFace {
            v: b.verts[f],
            normal: b.planes[f].0,
            offset: b.planes[f].1,
        })
        .collect();
    faces.sort_by_key(|f| {
        let mut s = f.v;
        s.sort_unstable();
        s
    });
    Ok(Hull { faces })
}

fn initial_simplex(pts: &[Vector3<f64>], eps: f64) -> Result<(usize, usize, usize, usize)> {
    let mut i0 = 0;
    for (i, p) in pts.iter().enumerate() {
        let q = pts[i0];
        if (p.x, p.y, p.z) > (q.x, q.y, q.z) {
            i0 = i;
        }
    }
    let mut i1 = usize::MAX;
    let mut best = -1.0;
    for (i, p) in pts.iter().enumerate() {
        let d = (p - pts[i0]).norm_squared();
        if i != i0 && d > best {
            best = d;
            i1 = i;
        }
    }
    let mut i2 = usize::MAX;
    best = -1.0;
    for (i, p) in pts.iter().enumerate() {
        if i == i0 || i == i1 {
            continue;
        }
        let d = (p - pts[i0]).cross(&(p - pts[i1])).norm_squared();
        if d > best {
            best = d;
            i2 = i;
        }
    }
    let mut i3 = usize::MAX;
    best = -1.0;
    for (i, p) in pts.iter().enumerate() {
        if i == i0 || i == i1 || i == i2 {
            continue;
        }
        let d = (pts[i1] - pts[i0])
            .cross(&(pts[i2] - pts[i0]))
            .dot(&(p - pts[i0]))
            .abs();
        if d > best {
            best = d;
            i3 = i;
        }
    }
    let scale = eps / 1e-12;
    if i3 == usize::MAX || best <= 1e-10 * scale * scale * scale {
        return Err(Error::MeshTopology {
            message: "input points are degenerate (coplanar or coincident)".to_string(),
        });
    }
    Ok((i0, i1, i2, i3))
}

impl Builder<'_> {
    fn push_face(&mut self, mut tri: [usize; 3]) -> usize {
        let (a, b, c) = (self.pts[tri[0]], self.pts[tri[1]], self.pts[tri[2]]);
        let mut n = (b - a).cross(&(c - a));
        let norm = n.norm();
        if norm > 0.0 {
            n /= norm;
        }
        let mut o = n.dot(&a);
        // Wind outward: the interior reference point must be below the plane.
        if n.dot(&self.interior) > o {
            tri.swap(1, 2);
            n = -n;
            o = -o;
        }
        self.verts.push(tri);
        self.planes.push((n, o));
        self.neighbors.push([usize::MAX; 3]);
        self.alive.push(true);
        self.verts.len() - 1
    }

    /// O(F^2) wiring, used only for the 4-face seed.
    fn wire_neighbors_brute(&mut self) {
        let nf = self.verts.len();
        for f in 0..nf {
            for k in 0..3 {
                let (a, b) = (self.verts[f][k], self.verts[f][(k + 1) % 3]);
                for g in 0..nf {
                    if g == f {
                        continue;
                    }
                    for m in 0..3 {
                        let (c, d) = (self.verts[g][m], self.verts[g][(m + 1) % 3]);
                        if (a, b) == (d, c) {
                            self.neighbors[f][k] = g;
                        }
                    }
                }
            }
        }
    }

    fn height(&self, f: usize, p: usize) -> f64 {
        let (n, o) = self.planes[f];
        n.dot(&self.pts[p]) - o
    }

    fn visible(&self, f: usize, p: usize) -> bool {
        self.alive[f] && self.height(f, p) > self.eps
    }

    /// Find a face visible from p: hill-climb from the hint, fall back to a
    /// full scan. Returns None when p is inside the current hull.
    fn find_visible(&self, p: usize) -> Option<usize> {
        let mut f = self.hint;
        if !self.alive[f] {
            f = (0..self.verts.len()).find(|&g| self.alive[g])?;
        }
        let mut h = self.height(f, p);
        for _ in 0..self.verts.len() {
            if h > self.eps {
                return Some(f);
            }
            let mut improved = false;
            for k in 0..3 {
                let g = self.neighbors[f][k];
                if g != usize::MAX && self.alive[g] {
                    let hg = self.height(g, p);
                    if hg > h {
                        f = g;
                        h = hg;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        // Climb stalled below the surface; scan to be certain.
        let mut best: Option<(f64, usize)> = None;
        for g in 0..self.verts.len() {
            if self.alive[g] {
                let hg = self.height(g, p);
                if hg > self.eps && best.map(|(bh, _)| hg > bh).unwrap_or(true) {
                    best = Some((hg, g));
                }
            }
        }
        best.map(|(_, g)| g)
    }

    fn insert(&mut self, p: usize) {
        let Some(seed) = self.find_visible(p) else {
            return;
        };
        // Flood fill the visible region.
        let mut visible = vec![seed];
        let mut mark = vec![false; self.verts.len()];
        mark[seed] = true;
        let mut stack = vec![seed];
        while let Some(f) = stack.pop() {
            for k in 0..3 {
                let g = self.neighbors[f][k];
                if g != usize::MAX && !mark[g] && self.visible(g, p) {
                    mark[g] = true;
                    visible.push(g);
                    stack.push(g);
                }
            }
        }
        // Horizon: directed edges of visible faces whose twin is hidden.
        let mut horizon: Vec<(usize, usize, usize)> = Vec::new();
        for &f in &visible {
            for k in 0..3 {
                let g = self.neighbors[f][k];
                if g == usize::MAX || !mark[g] {
                    horizon.push((self.verts[f][k], self.verts[f][(k + 1) % 3], g));
                }
            }
        }
        for &f in &visible {
            self.alive[f] = false;
        }
        // Chain the horizon into cycles (one for a disk-shaped visible
        // region, more in rare pinched configurations).
        let mut next: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
        for &(a, b, g) in &horizon {
            next.entry(a).or_default().push((b, g));
        }
        let mut remaining = horizon.len();
        while remaining > 0 {
            let start = next
                .iter()
                .filter(|(_, v)| !v.is_empty())
                .map(|(&a, _)| a)
                .min()
                .unwrap();
            let mut loop_edges = Vec::new();
            let mut a = start;
            loop {
                let (b, g) = next.get_mut(&a).unwrap().remove(0);
                loop_edges.push((a, b, g));
                remaining -= 1;
                a = b;
                if a == start {
                    break;
                }
            }
            // New cone of faces over this cycle.
            let mut new_faces = Vec::with_capacity(loop_edges.len());
            for &(a, b, _) in &loop_edges {
                new_faces.push(self.push_face([a, b, p]));
            }
            let m = new_faces.len();
            for (i, &(a, b, outer)) in loop_edges.iter().enumerate() {
                let f = new_faces[i];
                // Edge order in the new face may have been swapped by winding.
                for k in 0..3 {
                    let (x, y) = (self.verts[f][k], self.verts[f][(k + 1) % 3]);
                    self.neighbors[f][k] = if (x, y) == (a, b) || (x, y) == (b, a) {
                        outer
                    } else if (x, y) == (p, a) || (x, y) == (a, p) {
                        new_faces[(i + m - 1) % m]
                    } else {
                        new_faces[(i + 1) % m]
                    };
                }
                if outer != usize::MAX {
                    for k in 0..3 {
                        let (x, y) = (self.verts[outer][k], self.verts[outer][(k + 1) % 3]);
                        if (x, y) == (b, a) || (x, y) == (a, b) {
                            self.neighbors[outer][k] = f;
                        }
                    }
                }
            }
            self.hint = new_faces[0];
        }
    }
}
