//! Small geometric helpers shared across modules.

use nalgebra::{Matrix2, Matrix3, Vector3};

/// Deterministic orthonormal tangent basis `(t1, t2)` at a unit direction `n`,
/// right-handed in the sense `t1 x t2 = n`.
///
/// The seed axis is chosen from the component of `n` with the largest
/// magnitude, so the basis is a piecewise-smooth function of `n` with no
/// dependence on evaluation order.
pub fn tangent_basis(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let a = n.iamax();
    let seed = Vector3::ith((a + 1) % 3, 1.0);
    let t1 = (seed - n * seed.dot(n)).normalize();
    let t2 = n.cross(&t1);
    (t1, t2)
}

/// Eigenvalues of a symmetric 2x2 matrix, ascending.
pub fn sym2_eigenvalues(m: &Matrix2<f64>) -> (f64, f64) {
    let half_tr = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = (half_tr * half_tr - det).max(0.0).sqrt();
    (half_tr - disc, half_tr + disc)
}

/// Projection onto the plane orthogonal to the unit vector `n`.
pub fn tangent_projector(n: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::identity() - n * n.transpose()
}

/// Restrict a 3x3 bilinear form to the plane spanned by the orthonormal pair
/// `(t1, t2)`, producing its 2x2 matrix in that basis.
pub fn restrict_to_plane(
    b: &Matrix3<f64>,
    t1: &Vector3<f64>,
    t2: &Vector3<f64>,
) -> Matrix2<f64> {
    Matrix2::new(
        (b * t1).dot(t1),
        (b * t2).dot(t1),
        (b * t1).dot(t2),
        (b * t2).dot(t2),
    )
}

/// Quasi-uniform deterministic unit sphere samples (spherical Fibonacci set).
///
/// A nonzero `seed` applies a fixed rotation derived from the seed, giving
/// reproducibly distinct sample sets while preserving quasi-uniformity.
pub fn fibonacci_sphere(count: usize, seed: u64) -> Vec<Vector3<f64>> {
    let golden = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let rot = seed_rotation(seed);
    (0..count)
        .map(|k| {
            let z = 1.0 - (2 * k + 1) as f64 / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = 2.0 * std::f64::consts::PI * (k as f64 / golden).fract();
            rot * Vector3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Fixed rotation associated with a seed; identity for `seed == 0`.
pub fn seed_rotation(seed: u64) -> Matrix3<f64> {
    if seed == 0 {
        return Matrix3::identity();
    }
    // SplitMix64 steps give well-spread Euler angles deterministic in the seed.
    let mut state = seed;
    let mut next = || {
        state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z = z ^ (z >> 31);
        (z as f64 / u64::MAX as f64) * 2.0 * std::f64::consts::PI
    };
    let (a, b, c) = (next(), next(), next());
    let rz = Matrix3::new(a.cos(), -a.sin(), 0.0, a.sin(), a.cos(), 0.0, 0.0, 0.0, 1.0);
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, b.cos(), -b.sin(), 0.0, b.sin(), b.cos());
    let rz2 = Matrix3::new(c.cos(), -c.sin(), 0.0, c.sin(), c.cos(), 0.0, 0.0, 0.0, 1.0);
    rz2 * rx * rz
}
