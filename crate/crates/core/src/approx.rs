//! Simultaneous polytopal approximation of convex bodies with a convex
//! union, and the decreasing scheme built from it.
//!
//! Bodies are given by support functions. `Q` is an inner approximation of
//! the union `K`, each `R_i` an outer approximation of `K_i`; then
//! `P_i = (Q ∩ R_i) ⊕ C` with `εB ⊂ C ⊂ 2εB`, and `P_1 ∪ ... ∪ P_m = Q ⊕ C`.

use serde::{Deserialize, Serialize};

use crate::boolean::{union_phi, DEFAULT_CLIQUE_CAP};
use crate::clip::intersect_lower;
use crate::error::{Error, Result};
use crate::functional::AssociatedFunctional;
use crate::geom::{Mat3, Vec3};
use crate::polytope::{minkowski_sum_2d, Polytope};
use crate::spherical::sphere_points;

/// A convex body known through its support function.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupportBody {
    Polytope { polytope: Polytope },
    Ball { center: Vec<f64>, radius: f64 },
    /// `center + A B^d` with the row-major matrix `matrix`.
    Ellipsoid { center: Vec<f64>, matrix: Vec<Vec<f64>> },
    Sum { terms: Vec<SupportBody> },
}

fn vec3(v: &[f64]) -> Vec3 {
    let mut out = Vec3::zeros();
    for (i, x) in v.iter().take(3).enumerate() {
        out[i] = *x;
    }
    out
}

fn mat3(m: &[Vec<f64>]) -> Mat3 {
    Mat3::from_fn(|i, k| m.get(i).and_then(|r| r.get(k)).copied().unwrap_or(0.0))
}

impl SupportBody {
    pub fn ball(d: usize, center: Vec3, radius: f64) -> Self {
        SupportBody::Ball { center: center.iter().take(d).copied().collect(), radius }
    }

    pub fn ambient(&self) -> usize {
        match self {
            SupportBody::Polytope { polytope } => polytope.ambient(),
            SupportBody::Ball { center, .. } | SupportBody::Ellipsoid { center, .. } => center.len(),
            SupportBody::Sum { terms } => terms.first().map_or(0, |t| t.ambient()),
        }
    }

    pub fn support(&self, u: &Vec3) -> f64 {
        match self {
            SupportBody::Polytope { polytope } => polytope.support(u),
            SupportBody::Ball { center, radius } => vec3(center).dot(u) + radius * u.norm(),
            SupportBody::Ellipsoid { center, matrix } => vec3(center).dot(u) + (mat3(matrix).transpose() * u).norm(),
            SupportBody::Sum { terms } => terms.iter().map(|t| t.support(u)).sum(),
        }
    }

    /// A boundary point with outer normal `u`.
    pub fn support_point(&self, u: &Vec3) -> Vec3 {
        match self {
            SupportBody::Polytope { polytope } => polytope.support_point(u),
            SupportBody::Ball { center, radius } => vec3(center) + u.normalize() * *radius,
            SupportBody::Ellipsoid { center, matrix } => {
                let a = mat3(matrix);
                let v = a.transpose() * u;
                let n = v.norm();
                if n == 0.0 {
                    vec3(center)
                } else {
                    vec3(center) + a * v / n
                }
            }
            SupportBody::Sum { terms } => terms.iter().map(|t| t.support_point(u)).sum(),
        }
    }

    /// Upper bound on `max |x|` over the body.
    pub fn circumradius_bound(&self) -> f64 {
        match self {
            SupportBody::Polytope { polytope } => polytope.vertices().iter().map(|v| v.norm()).fold(0.0, f64::max),
            SupportBody::Ball { center, radius } => vec3(center).norm() + radius,
            SupportBody::Ellipsoid { center, matrix } => vec3(center).norm() + mat3(matrix).norm(),
            SupportBody::Sum { terms } => terms.iter().map(|t| t.circumradius_bound()).sum(),
        }
    }

    /// Largest violation of `h(u + v) <= h(u) + h(v)` over pairs of the
    /// first `n` test directions.
    pub fn sublinearity_defect(&self, n: usize) -> f64 {
        let dirs = sphere_points(self.ambient(), n);
        let mut worst: f64 = 0.0;
        for (i, u) in dirs.iter().enumerate() {
            for v in &dirs[i + 1..] {
                worst = worst.max(self.support(&(u + v)) - self.support(u) - self.support(v));
            }
        }
        worst
    }

    /// Distance from `x` to the body: exact for polytopes, balls and their
    /// sums with balls; otherwise by nearest-point ascent on the dual
    /// `max_u <u, x> - h(u)` started from the best direction of `hint`.
    pub fn distance(&self, x: &Vec3, hint: &[Vec3]) -> f64 {
        match self {
            SupportBody::Polytope { polytope } => polytope.distance(x),
            SupportBody::Ball { center, radius } => ((x - vec3(center)).norm() - radius).max(0.0),
            SupportBody::Sum { terms } if terms.iter().filter(|t| !matches!(t, SupportBody::Ball { .. })).count() == 1 => {
                let (mut shift, mut r) = (Vec3::zeros(), 0.0);
                let mut rest = None;
                for t in terms {
                    match t {
                        SupportBody::Ball { center, radius } => {
                            shift += vec3(center);
                            r += radius;
                        }
                        other => rest = Some(other),
                    }
                }
                (rest.unwrap().distance(&(x - shift), hint) - r).max(0.0)
            }
            _ => {
                let f = |u: &Vec3| u.dot(x) - self.support(u);
                let mut u = *hint.iter().max_by(|a, b| f(a).total_cmp(&f(b))).unwrap_or(&Vec3::x());
                let mut best = f(&u);
                for _ in 0..100 {
                    let step = x - self.support_point(&u);
                    if step.norm() == 0.0 {
                        break;
                    }
                    u = step.normalize();
                    best = best.max(f(&u));
                }
                best.max(0.0)
            }
        }
    }

    pub fn dilated(&self, r: f64) -> SupportBody {
        let d = self.ambient();
        SupportBody::Sum { terms: vec![self.clone(), SupportBody::ball(d, Vec3::zeros(), r)] }
    }
}

/// Output of one approximation step.
#[derive(Clone, Debug, Serialize)]
pub struct Approximation {
    pub eps: f64,
    pub dirs: usize,
    pub q: Polytope,
    pub c: Polytope,
    pub q_parts: Vec<Polytope>,
    pub r_parts: Vec<Polytope>,
    pub pieces: Vec<Polytope>,
    pub union: Polytope,
}

fn union_support(bodies: &[SupportBody], u: &Vec3) -> (f64, Vec3) {
    bodies
        .iter()
        .map(|b| (b.support(u), b.support_point(u)))
        .fold((f64::NEG_INFINITY, Vec3::zeros()), |a, b| if b.0 > a.0 { b } else { a })
}

/// Polytope `{x : <u_k, x - c> <= g_k}` for directions spread over the
/// sphere, through the polar of the points `u_k / g_k`.
fn from_halfspaces(d: usize, c: &Vec3, dirs: &[Vec3], gaps: &[f64]) -> Result<Polytope> {
    let dual: Vec<Vec3> = dirs.iter().zip(gaps).map(|(u, g)| u / *g).collect();
    let dp = Polytope::new(d, &dual)?;
    let verts: Vec<Vec3> = dp.halfspaces().iter().map(|h| c + h.normal / h.offset).collect();
    Polytope::new(d, &verts)
}

/// `R ⊃ K` with tangent halfspaces at `dirs`. A polytope is its own `R`,
/// and a sum with at most one smooth term is `Σ P_t ⊕ R(rest)`.
fn outer(body: &SupportBody, dirs: &[Vec3]) -> Result<Polytope> {
    match body {
        SupportBody::Polytope { polytope } => return Ok(polytope.clone()),
        SupportBody::Sum { terms } => {
            let (flat, smooth): (Vec<&SupportBody>, Vec<&SupportBody>) =
                terms.iter().partition(|t| matches!(t, SupportBody::Polytope { .. }));
            if smooth.len() <= 1 && !terms.is_empty() {
                let mut acc = match smooth.first() {
                    Some(t) => outer(t, dirs)?,
                    None => outer(flat[0], dirs)?,
                };
                for t in flat.iter().skip(usize::from(smooth.is_empty())) {
                    acc = minkowski(&acc, &outer(t, dirs)?)?;
                }
                return Ok(acc);
            }
        }
        _ => {}
    }
    let d = body.ambient();
    let pts: Vec<Vec3> = dirs.iter().map(|u| body.support_point(u)).collect();
    let c = pts.iter().sum::<Vec3>() / pts.len() as f64;
    let gaps: Vec<f64> = dirs.iter().map(|u| body.support(u) - u.dot(&c)).collect();
    if gaps.iter().any(|g| *g <= 0.0) {
        return Err(Error::DegenerateInput { ambient: d, found: d - 1 });
    }
    from_halfspaces(d, &c, dirs, &gaps)
}

/// A polytope `C` with `εB ⊂ C ⊂ 2εB`.
pub fn ball_polytope(d: usize, eps: f64) -> Result<Polytope> {
    if d == 2 {
        let n = 16;
        return Ok(Polytope::regular_polygon(n, eps / (std::f64::consts::PI / n as f64).cos(), 0.0));
    }
    let mut dirs = Vec::new();
    for a in [-1.0f64, 0.0, 1.0] {
        for b in [-1.0f64, 0.0, 1.0] {
            for c in [-1.0f64, 0.0, 1.0] {
                let v = Vec3::new(a, b, c);
                if v.norm() > 0.0 {
                    dirs.push(v.normalize());
                }
            }
        }
    }
    let gaps = vec![eps; dirs.len()];
    from_halfspaces(3, &Vec3::zeros(), &dirs, &gaps)
}

fn minkowski(p: &Polytope, q: &Polytope) -> Result<Polytope> {
    if p.ambient() == 2 {
        return minkowski_sum_2d(p, q);
    }
    let pts: Vec<Vec3> = p.vertices().iter().flat_map(|a| q.vertices().iter().map(move |b| a + b)).collect();
    Polytope::new(p.ambient(), &pts)
}

fn start_dirs(d: usize) -> usize {
    if d == 2 {
        16
    } else {
        64
    }
}

/// Run the construction at accuracy `eps`, doubling the direction count up
/// to `n_dirs` until `Q` and every `R_i` are within `0.9 eps` of their
/// bodies. `R_i` is measured exactly at its vertices; `Q` on a test set
/// four times as dense, its facet normals and the vertices of polytopes.
pub fn approximate_simultaneous(bodies: &[SupportBody], eps: f64, n_dirs: usize) -> Result<Approximation> {
    if bodies.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let d = bodies[0].ambient();
    if !(2..=3).contains(&d) {
        return Err(Error::UnsupportedDimension(d));
    }
    if bodies.iter().any(|b| b.ambient() != d) {
        return Err(Error::DimensionMismatch("bodies live in different spaces".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::SpecInvalid(format!("eps = {eps}")));
    }
    let target = 0.9 * eps;
    let mut n = start_dirs(d).min(n_dirs.max(1));
    loop {
        let dirs = sphere_points(d, n);
        let test = sphere_points(d, 4 * n);
        let mut q_pts: Vec<Vec3> = dirs.iter().map(|u| union_support(bodies, u).1).collect();
        for b in bodies {
            if let SupportBody::Polytope { polytope } = b {
                q_pts.extend_from_slice(polytope.vertices());
            }
        }
        let q = Polytope::new(d, &q_pts)?;
        // Sampled for smooth bodies, exact at the vertices of polytopes.
        let normals: Vec<Vec3> = q.halfspaces().iter().map(|h| h.normal).collect();
        let mut gap = test
            .iter()
            .chain(&normals)
            .map(|u| union_support(bodies, u).0 - q.support(u))
            .fold(0.0, f64::max);
        for b in bodies {
            if let SupportBody::Polytope { polytope } = b {
                gap = gap.max(polytope.vertices().iter().map(|v| q.distance(v)).fold(0.0, f64::max));
            }
        }
        let mut r_parts = Vec::with_capacity(bodies.len());
        for b in bodies {
            let r = outer(b, &dirs)?;
            gap = gap.max(r.vertices().iter().map(|v| b.distance(v, &test)).fold(0.0, f64::max));
            r_parts.push(r);
        }
        if gap <= target {
            return assemble(d, eps, n, q, r_parts);
        }
        if n >= n_dirs {
            return Err(Error::DirectionBudgetExceeded { gap, target, dirs: n_dirs });
        }
        n = (2 * n).min(n_dirs);
    }
}

fn assemble(d: usize, eps: f64, dirs: usize, q: Polytope, r_parts: Vec<Polytope>) -> Result<Approximation> {
    let c = ball_polytope(d, eps)?;
    let mut q_parts = Vec::with_capacity(r_parts.len());
    let mut pieces = Vec::with_capacity(r_parts.len());
    for r in &r_parts {
        let qi = intersect_lower(&q, r).ok_or(Error::DegenerateInput { ambient: d, found: 0 })?;
        pieces.push(minkowski(&qi, &c)?);
        q_parts.push(qi);
    }
    let union = minkowski(&q, &c)?;
    Ok(Approximation { eps, dirs, q, c, q_parts, r_parts, pieces, union })
}

/// Support-function certificate of one approximation.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Certificate {
    /// Largest `h(K_i, u) - h(P_i, u)`; positive values break `K_i ⊂ P_i`.
    pub max_inner_violation: f64,
    /// Largest `h(P_i, u) - h(K_i, u) - 3ε`.
    pub max_outer_excess: f64,
    /// Largest `|h(K_i, u) - h(Q_i, u)| - ε`.
    pub max_q_excess: f64,
    /// `|V(P_1 ∪ ... ∪ P_m) - V(Q ⊕ C)|`, the union volume taken by
    /// inclusion–exclusion.
    pub union_volume_gap: f64,
    pub union_ok: bool,
    pub sandwich_ok: bool,
    pub directions: usize,
}

/// Certify on `n_test` directions. The union test checks that each `P_i`
/// lies in `Q ⊕ C`, each vertex of `Q ⊕ C` in some `P_i`, and that the
/// pieces cover the volume of `Q ⊕ C`.
pub fn certify(bodies: &[SupportBody], a: &Approximation, n_test: usize) -> Certificate {
    let d = a.q.ambient();
    let dirs = sphere_points(d, n_test);
    let scale = bodies.iter().map(|b| b.circumradius_bound()).fold(1.0, f64::max) + 3.0 * a.eps;
    let tol = 1e-9 * scale;
    let (mut inner, mut outer, mut qx) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (i, b) in bodies.iter().enumerate() {
        for u in &dirs {
            let hk = b.support(u);
            let hp = a.pieces[i].support(u);
            inner = inner.max(hk - hp);
            outer = outer.max(hp - hk - 3.0 * a.eps);
            qx = qx.max((hk - a.q_parts[i].support(u)).abs() - a.eps);
        }
    }
    let utol = 1e-7 * scale;
    let inside_union = a.pieces.iter().all(|p| p.vertices().iter().all(|v| a.union.contains(v, utol)));
    let covered = a.union.vertices().iter().all(|v| a.pieces.iter().any(|p| p.contains(v, utol)));
    let vol = AssociatedFunctional::intrinsic_volume(d, d);
    let gap = union_phi(&a.pieces, &[d], &vol, DEFAULT_CLIQUE_CAP)
        .map_or(f64::INFINITY, |v| (v[0] - a.union.volume()).abs());
    Certificate {
        max_inner_violation: inner,
        max_outer_excess: outer,
        max_q_excess: qx,
        union_volume_gap: gap,
        union_ok: inside_union && covered && gap <= 1e-7 * a.union.volume().max(1.0),
        sandwich_ok: inner <= tol && outer <= tol,
        directions: n_test,
    }
}

/// Approximations of `K_i ⊕ 2^{-r} B` at accuracy `2^{-r} / 3` for
/// `r = 1..=r_max`, so that `K_i ⊕ 2^{-r} B ⊂ P_i^(r) ⊂ K_i ⊕ 2^{1-r} B`
/// and the pieces decrease in `r`. Nesting is checked on vertices; on a
/// violation the step is rebuilt with twice the directions.
pub fn decreasing_scheme(bodies: &[SupportBody], r_max: usize, n_dirs: usize) -> Result<Vec<Approximation>> {
    let mut out: Vec<Approximation> = Vec::with_capacity(r_max);
    for r in 1..=r_max {
        let delta = 0.5f64.powi(r as i32);
        let dilated: Vec<SupportBody> = bodies.iter().map(|b| b.dilated(delta)).collect();
        let mut budget = n_dirs;
        loop {
            let a = approximate_simultaneous(&dilated, delta / 3.0, budget)?;
            let excess = match out.last() {
                None => 0.0,
                Some(prev) => nesting_excess(prev, &a),
            };
            if excess <= 1e-9 * (1.0 + bodies.iter().map(|b| b.circumradius_bound()).fold(0.0, f64::max)) {
                out.push(a);
                break;
            }
            if budget >= 8 * n_dirs {
                return Err(Error::NestingViolated { r, excess });
            }
            budget *= 2;
        }
    }
    Ok(out)
}

/// Largest amount by which a vertex of a new piece leaves the old piece.
pub fn nesting_excess(old: &Approximation, new: &Approximation) -> f64 {
    old.pieces
        .iter()
        .zip(&new.pieces)
        .flat_map(|(p, q)| q.vertices().iter().map(move |v| p.halfspaces().iter().map(|h| h.eval(v)).fold(f64::NEG_INFINITY, f64::max)))
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn halves() -> Vec<SupportBody> {
        vec![
            SupportBody::Polytope { polytope: Polytope::cuboid(2, &[0.0, 0.0], &[1.0, 1.0]).unwrap() },
            SupportBody::Polytope { polytope: Polytope::cuboid(2, &[1.0, 0.0], &[2.0, 1.0]).unwrap() },
        ]
    }

    #[test]
    fn support_oracles() {
        let e = SupportBody::Ellipsoid { center: vec![1.0, 0.0], matrix: vec![vec![2.0, 0.0], vec![0.0, 0.5]] };
        assert_relative_eq!(e.support(&Vec3::new(1.0, 0.0, 0.0)), 3.0, epsilon = 1e-12);
        assert_relative_eq!(e.support(&Vec3::new(0.0, -1.0, 0.0)), 0.5, epsilon = 1e-12);
        let p = e.support_point(&Vec3::new(0.6, 0.8, 0.0));
        assert_relative_eq!(p.dot(&Vec3::new(0.6, 0.8, 0.0)), e.support(&Vec3::new(0.6, 0.8, 0.0)), epsilon = 1e-12);
        let s = SupportBody::ball(2, Vec3::zeros(), 1.0).dilated(0.5);
        assert_relative_eq!(s.support(&Vec3::new(0.0, 1.0, 0.0)), 1.5, epsilon = 1e-12);
        assert!(e.sublinearity_defect(40) <= 1e-12);
    }

    #[test]
    fn ball_polytope_bounds() {
        for d in [2, 3] {
            let c = ball_polytope(d, 0.1).unwrap();
            for u in sphere_points(d, 200) {
                assert!(c.support(&u) >= 0.1 - 1e-12);
            }
            assert!(c.vertices().iter().all(|v| v.norm() <= 0.2));
        }
    }

    #[test]
    fn half_squares() {
        let b = halves();
        for eps in [0.1, 0.01] {
            let a = approximate_simultaneous(&b, eps, 4096).unwrap();
            let c = certify(&b, &a, 1000);
            assert!(c.sandwich_ok && c.union_ok && c.max_q_excess <= 1e-9, "{c:?}");
        }
    }

    #[test]
    fn single_disc_and_budget() {
        let b = vec![SupportBody::ball(2, Vec3::zeros(), 1.0)];
        let a = approximate_simultaneous(&b, 0.01, 4096).unwrap();
        assert!(certify(&b, &a, 1000).sandwich_ok);
        assert!(matches!(approximate_simultaneous(&b, 1e-6, 32), Err(Error::DirectionBudgetExceeded { .. })));
    }

    #[test]
    fn scheme_nests() {
        let b = halves();
        let seq = decreasing_scheme(&b, 4, 4096).unwrap();
        for w in seq.windows(2) {
            assert!(nesting_excess(&w[0], &w[1]) <= 1e-9);
        }
        for (r, a) in seq.iter().enumerate() {
            let delta = 0.5f64.powi(r as i32 + 1);
            for u in sphere_points(2, 500) {
                for (k, p) in b.iter().zip(&a.pieces) {
                    let gap = p.support(&u) - k.support(&u);
                    assert!(gap >= delta - 1e-9 && gap <= 2.0 * delta + 1e-9, "r = {r}, gap = {gap}");
                }
            }
        }
    }
}
