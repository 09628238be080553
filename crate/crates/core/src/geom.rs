//! Small vector helpers shared by every kernel.
//!
//! Points of both the plane and space are stored as [`Vec3`]; planar
//! geometry lives in the `z = 0` plane and every routine carries the ambient
//! dimension explicitly.

use nalgebra::{Matrix3, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Global geometric tolerance for O(1) coordinates.
pub const TAU_GEOM: f64 = 1e-9;

/// Tolerance scaled to the coordinate magnitude of a point cloud.
pub fn scaled_tol(points: &[Vec3]) -> f64 {
    let m = points.iter().map(|p| p.amax()).fold(1.0_f64, f64::max);
    TAU_GEOM * m
}

pub fn e(i: usize) -> Vec3 {
    let mut v = Vec3::zeros();
    v[i] = 1.0;
    v
}

/// Outward normal of a counter-clockwise planar edge direction.
pub fn rot_cw(v: &Vec3) -> Vec3 {
    Vec3::new(v.y, -v.x, 0.0)
}

pub fn cross2(a: &Vec3, b: &Vec3) -> f64 {
    a.x * b.y - a.y * b.x
}

pub fn centroid(points: &[Vec3]) -> Vec3 {
    let mut c = Vec3::zeros();
    for p in points {
        c += p;
    }
    c / points.len().max(1) as f64
}

/// Rotation of the plane by `angle`, embedded in 3x3.
pub fn rotation_2d(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Unit-ball volumes kappa_n for n = 0..=3.
pub fn kappa(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 1.0,
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => panic!("kappa only tabulated up to n = 3"),
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}
