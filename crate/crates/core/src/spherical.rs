//! Spherical polytopes: cross-sections of polyhedral cones with the unit
//! sphere of their linear span, and integration of densities over them.
//!
//! The measure on the sphere of a `q`-dimensional span is normalised to total
//! mass one. For `q <= 3` every region is a point set, an arc, or a
//! geodesically convex spherical region that splits into spherical triangles.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Mat3, Vec3};
use crate::hull::plane_basis;
use crate::quadrature::{gauss_legendre, integrate_interval};
use crate::subspace::Subspace;

/// Absolute tolerance of the adaptive quadrature on the sphere.
pub const TAU_QUAD: f64 = 1e-10;
/// Default Gauss-Legendre order on arcs.
pub const ARC_ORDER: usize = 32;
const TRI_ORDER: usize = 12;
const MAX_DEPTH: usize = 10;
const ANG_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
enum Region {
    /// One or two antipodal points of a one-dimensional span.
    Points(Vec<Vec3>),
    /// `cos t * a + sin t * b` for `t` in `[0, sweep]`.
    Arc { a: Vec3, b: Vec3, sweep: f64 },
    /// Pointed cone in R^3: counter-clockwise extreme rays.
    Polygon(Vec<Vec3>),
    /// Cone with a lineality line `±p`, bounded by the half-planes through
    /// `a` and `b` (both orthogonal to `p`).
    Lune { p: Vec3, a: Vec3, b: Vec3, angle: f64 },
    /// `{u : <u, n> <= 0}`.
    Hemisphere(Vec3),
    Sphere,
}

/// `pos(generators) ∩ S(span)`.
#[derive(Clone, Debug)]
pub struct SphericalPolytope {
    ambient: usize,
    span: Subspace,
    generators: Vec<Vec3>,
    /// Outward normals of the cone's facets (q = 3 only).
    facets: Vec<Vec3>,
    lineality: usize,
    region: Region,
}

/// Result of [`cone_sum`].
#[derive(Clone, Debug)]
pub enum ConeSum {
    Cone(SphericalPolytope),
    Degenerate,
}

impl SphericalPolytope {
    /// Spherical polytope of the positive hull of `generators`. Zero vectors
    /// are ignored; at least one nonzero generator is required.
    pub fn from_generators(ambient: usize, generators: &[Vec3]) -> Result<Self> {
        let gens: Vec<Vec3> = generators
            .iter()
            .filter(|g| g.norm() > 1e-12)
            .map(|g| g.normalize())
            .collect();
        if gens.is_empty() {
            return Err(Error::TooFewPoints { needed: 1, got: 0 });
        }
        let span = Subspace::span(ambient, &gens);
        let q = span.dim();
        let (region, lineality, facets) = match q {
            1 => {
                let b = span.basis()[0];
                let pos = gens.iter().any(|g| g.dot(&b) > 0.0);
                let neg = gens.iter().any(|g| g.dot(&b) < 0.0);
                match (pos, neg) {
                    (true, true) => (Region::Points(vec![b, -b]), 1, Vec::new()),
                    (true, false) => (Region::Points(vec![b]), 0, Vec::new()),
                    _ => (Region::Points(vec![-b]), 0, Vec::new()),
                }
            }
            2 => {
                let (r, l) = arc_region(&span, &gens);
                (r, l, Vec::new())
            }
            3 => cap_region(&gens),
            _ => unreachable!("span dimension above 3"),
        };
        Ok(SphericalPolytope { ambient, span, generators: gens, facets, lineality, region })
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn span(&self) -> &Subspace {
        &self.span
    }

    pub fn span_dim(&self) -> usize {
        self.span.dim()
    }

    /// Dimension of the spherical polytope, `dim span - 1`.
    pub fn intrinsic_dim(&self) -> usize {
        self.span.dim() - 1
    }

    pub fn generators(&self) -> &[Vec3] {
        &self.generators
    }

    /// Dimension of the largest linear subspace contained in the cone.
    pub fn lineality(&self) -> usize {
        self.lineality
    }

    pub fn is_pointed(&self) -> bool {
        self.lineality == 0
    }

    /// The cone is the whole span.
    pub fn is_full_span(&self) -> bool {
        self.lineality == self.span.dim()
    }

    /// Normalised measure `ω(p)` with `ω(S(span)) = 1`.
    pub fn normalized_measure(&self) -> f64 {
        match &self.region {
            Region::Points(pts) => 0.5 * pts.len() as f64,
            Region::Arc { sweep, .. } => sweep / (2.0 * PI),
            Region::Polygon(v) => polygon_area(v) / (4.0 * PI),
            Region::Lune { angle, .. } => angle / (2.0 * PI),
            Region::Hemisphere(_) => 0.5,
            Region::Sphere => 1.0,
        }
    }

    /// As [`Self::normalized_measure`], rejecting cones that are neither
    /// pointed nor the full span.
    pub fn pointed_measure(&self) -> Result<f64> {
        if self.is_pointed() || self.is_full_span() {
            Ok(self.normalized_measure())
        } else {
            Err(Error::NonPointedCone)
        }
    }

    /// Membership of a unit vector `u`.
    pub fn contains(&self, u: &Vec3) -> bool {
        let tol = 1e-9;
        if !self.span.contains(u, tol) {
            return false;
        }
        match &self.region {
            Region::Points(pts) => pts.iter().any(|p| (p - u).norm() <= tol),
            Region::Arc { a, b, sweep } => {
                let mut t = b.dot(u).atan2(a.dot(u));
                if t < -tol {
                    t += 2.0 * PI;
                }
                t <= sweep + tol
            }
            Region::Sphere => true,
            _ => self.facets.iter().all(|n| n.dot(u) <= tol),
        }
    }

    /// Image under an orthogonal map.
    pub fn transformed(&self, r: &Mat3) -> SphericalPolytope {
        let gens: Vec<Vec3> = self.generators.iter().map(|g| r * g).collect();
        SphericalPolytope::from_generators(self.ambient, &gens).expect("rotated cone")
    }

    /// Spherical triangles covering a region of a three-dimensional span.
    fn triangles(&self) -> Vec<[Vec3; 3]> {
        match &self.region {
            Region::Polygon(v) => {
                let c = v.iter().sum::<Vec3>().normalize();
                (0..v.len()).map(|i| [c, v[i], v[(i + 1) % v.len()]]).collect()
            }
            Region::Lune { p, a, b, .. } => {
                let m = (a + b).normalize();
                vec![[*p, *a, m], [*p, m, *b], [-p, m, *a], [-p, *b, m]]
            }
            Region::Hemisphere(n) => {
                let (a, b) = plane_basis(n);
                let s = -n;
                vec![[s, b, a], [s, -a, b], [s, -b, -a], [s, a, -b]]
            }
            Region::Sphere => {
                let mut out = Vec::with_capacity(8);
                for sx in [1.0, -1.0] {
                    for sy in [1.0, -1.0] {
                        for sz in [1.0, -1.0] {
                            out.push([Vec3::x() * sx, Vec3::y() * sy, Vec3::z() * sz]);
                        }
                    }
                }
                out
            }
            _ => Vec::new(),
        }
    }

    /// Exact `∫_p u ω(du)`.
    pub fn first_moment(&self) -> Vec3 {
        match &self.region {
            Region::Points(pts) => pts.iter().sum::<Vec3>() * 0.5,
            Region::Arc { a, b, sweep } => (a * sweep.sin() + b * (1.0 - sweep.cos())) / (2.0 * PI),
            _ => self.triangles().iter().map(triangle_moment).sum::<Vec3>() / (4.0 * PI),
        }
    }

    /// `∫_p h dω`.
    pub fn integrate_density(&self, h: &DensityFunction) -> Result<f64> {
        match h {
            DensityFunction::Constant { c } => Ok(c * self.normalized_measure()),
            DensityFunction::LinearOffset { c, x0 } => {
                let x = vec_from(x0);
                Ok(c * self.normalized_measure() + x.dot(&self.first_moment()))
            }
            _ => self.integrate(|u| h.eval(u), ARC_ORDER, TAU_QUAD),
        }
    }

    /// `∫_p f dω` by quadrature: Gauss-Legendre of order `order` on arcs and
    /// adaptive triangle rules with absolute tolerance `tol` on S^2.
    pub fn integrate(&self, f: impl Fn(&Vec3) -> f64, order: usize, tol: f64) -> Result<f64> {
        match &self.region {
            Region::Points(pts) => Ok(0.5 * pts.iter().map(&f).sum::<f64>()),
            Region::Arc { a, b, sweep } => {
                let pieces = (sweep / (0.5 * PI)).ceil().max(1.0) as usize;
                let step = sweep / pieces as f64;
                let mut total = 0.0;
                for k in 0..pieces {
                    let t0 = k as f64 * step;
                    total += integrate_interval(t0, t0 + step, order, |t| f(&(a * t.cos() + b * t.sin())));
                }
                Ok(total / (2.0 * PI))
            }
            _ => {
                let tris = self.triangles();
                let per = tol * 4.0 * PI / tris.len() as f64;
                let mut total = 0.0;
                for t in &tris {
                    total += adaptive_triangle(&f, t, per, 0)?;
                }
                Ok(total / (4.0 * PI))
            }
        }
    }
}

fn vec_from(x: &[f64]) -> Vec3 {
    let mut v = Vec3::zeros();
    for (i, c) in x.iter().take(3).enumerate() {
        v[i] = *c;
    }
    v
}

fn arc_region(span: &Subspace, gens: &[Vec3]) -> (Region, usize) {
    let (e1, e2) = (span.basis()[0], span.basis()[1]);
    let mut ang: Vec<f64> = gens.iter().map(|g| e2.dot(g).atan2(e1.dot(g))).collect();
    ang.sort_by(|a, b| a.total_cmp(b));
    let n = ang.len();
    let (mut gap, mut after) = (0.0, 0);
    for i in 0..n {
        let next = if i + 1 < n { ang[i + 1] } else { ang[0] + 2.0 * PI };
        if next - ang[i] > gap {
            gap = next - ang[i];
            after = (i + 1) % n;
        }
    }
    let start = ang[after];
    let a = e1 * start.cos() + e2 * start.sin();
    let b = -e1 * start.sin() + e2 * start.cos();
    if gap > PI + ANG_TOL {
        (Region::Arc { a, b, sweep: 2.0 * PI - gap }, 0)
    } else if gap >= PI - ANG_TOL {
        (Region::Arc { a, b, sweep: PI }, 1)
    } else {
        (Region::Arc { a, b, sweep: 2.0 * PI }, 2)
    }
}

fn cap_region(gens: &[Vec3]) -> (Region, usize, Vec<Vec3>) {
    let tol = 1e-9;
    let mut facets: Vec<Vec3> = Vec::new();
    if gens.len() == 3 && gens[0].dot(&gens[1].cross(&gens[2])).abs() > 1e-6 {
        // Simplicial cone: each pair of generators spans a facet.
        for (i, k, o) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
            let c = gens[i].cross(&gens[k]).normalize();
            facets.push(if c.dot(&gens[o]) > 0.0 { -c } else { c });
        }
    } else {
        for i in 0..gens.len() {
            for k in i + 1..gens.len() {
                let c = gens[i].cross(&gens[k]);
                if c.norm() <= 1e-9 {
                    continue;
                }
                let c = c.normalize();
                for n in [c, -c] {
                    if gens.iter().all(|g| n.dot(g) <= tol) && !facets.iter().any(|f| (f - n).norm() <= 1e-7) {
                        facets.push(n);
                    }
                }
            }
        }
    }
    match facets.len() {
        0 => (Region::Sphere, 3, facets),
        1 => (Region::Hemisphere(facets[0]), 2, facets),
        2 => {
            let (n1, n2) = (facets[0], facets[1]);
            let p = n1.cross(&n2).normalize();
            let mut a = n1.cross(&p);
            if a.dot(&n2) > 0.0 {
                a = -a;
            }
            let mut b = n2.cross(&p);
            if b.dot(&n1) > 0.0 {
                b = -b;
            }
            let angle = a.dot(&b).clamp(-1.0, 1.0).acos();
            (Region::Lune { p, a, b, angle }, 1, facets)
        }
        _ => {
            let mut rays: Vec<Vec3> = Vec::new();
            for g in gens {
                let on = facets.iter().filter(|n| n.dot(g).abs() <= 1e-9).count();
                if on >= 2 && !rays.iter().any(|r| (r - g).norm() <= 1e-9) {
                    rays.push(*g);
                }
            }
            let c = rays.iter().sum::<Vec3>().normalize();
            let (b1, b2) = plane_basis(&c);
            let mut keyed: Vec<(f64, Vec3)> = rays.iter().map(|x| (b2.dot(x).atan2(b1.dot(x)), *x)).collect();
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
            (Region::Polygon(keyed.into_iter().map(|(_, x)| x).collect()), 0, facets)
        }
    }
}

/// Area of a convex spherical polygon via Gauss-Bonnet.
fn polygon_area(v: &[Vec3]) -> f64 {
    let n = v.len();
    let mut sum = 0.0;
    for i in 0..n {
        let (p, c, nx) = (v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
        let t1 = p - c * c.dot(&p);
        let t2 = nx - c * c.dot(&nx);
        sum += t1.cross(&t2).dot(&c).abs().atan2(t1.dot(&t2));
    }
    sum - (n as f64 - 2.0) * PI
}

/// `∫_T u dσ` for a spherical triangle, via the boundary formula
/// `1/2 Σ θ_e ν_e` with `ν_e` the inward normal of each edge plane.
fn triangle_moment(t: &[Vec3; 3]) -> Vec3 {
    let mut m = Vec3::zeros();
    let orient = if t[0].cross(&t[1]).dot(&t[2]) >= 0.0 { 1.0 } else { -1.0 };
    for i in 0..3 {
        let (a, b) = (t[i], t[(i + 1) % 3]);
        let c = a.cross(&b);
        let s = c.norm();
        if s == 0.0 {
            continue;
        }
        let theta = s.atan2(a.dot(&b));
        m += c / s * (orient * theta);
    }
    m * 0.5
}

fn triangle_rule(f: &impl Fn(&Vec3) -> f64, t: &[Vec3; 3]) -> f64 {
    // Duffy-collapsed tensor rule on the flat triangle, pushed to the sphere.
    let (x, w) = gauss_legendre(TRI_ORDER);
    let (a, b, c) = (t[0], t[1], t[2]);
    let nrm = (b - a).cross(&(c - a));
    let mut total = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        for (yj, wj) in x.iter().zip(w) {
            let s = *xi;
            let tt = (1.0 - s) * yj;
            let p = a + (b - a) * s + (c - a) * tt;
            let r = p.norm();
            let jac = (1.0 - s) * p.dot(&nrm).abs() / (r * r * r);
            total += wi * wj * jac * f(&(p / r));
        }
    }
    total
}

fn adaptive_triangle(f: &impl Fn(&Vec3) -> f64, t: &[Vec3; 3], tol: f64, depth: usize) -> Result<f64> {
    let whole = triangle_rule(f, t);
    let mab = (t[0] + t[1]).normalize();
    let mbc = (t[1] + t[2]).normalize();
    let mca = (t[2] + t[0]).normalize();
    let kids = [[t[0], mab, mca], [mab, t[1], mbc], [mca, mbc, t[2]], [mab, mbc, mca]];
    let parts: f64 = kids.iter().map(|k| triangle_rule(f, k)).sum();
    if (parts - whole).abs() <= tol {
        return Ok(parts);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::QuadratureNotConverged { tol, estimate: parts });
    }
    let mut s = 0.0;
    for k in &kids {
        s += adaptive_triangle(f, k, tol / 4.0, depth + 1)?;
    }
    Ok(s)
}

/// Positive hull of the union of both generator sets, or `Degenerate` when
/// the span has the wrong dimension or new lineality appears.
pub fn cone_sum(p1: &SphericalPolytope, p2: &SphericalPolytope, expected_span_dim: Option<usize>) -> ConeSum {
    let mut g = p1.generators.clone();
    g.extend_from_slice(&p2.generators);
    let s = SphericalPolytope::from_generators(p1.ambient, &g).expect("nonempty generator set");
    if expected_span_dim.is_some_and(|q| q != s.span_dim()) {
        return ConeSum::Degenerate;
    }
    if s.lineality > p1.lineality + p2.lineality {
        return ConeSum::Degenerate;
    }
    ConeSum::Cone(s)
}

/// One term `c * u1^p1 * u2^p2 * u3^p3`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub c: f64,
    pub powers: [u32; 3],
}

/// Continuous density on the unit sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityFunction {
    Constant { c: f64 },
    /// `u -> c + <u, x0>`.
    LinearOffset { c: f64, x0: Vec<f64> },
    Polynomial { terms: Vec<Monomial> },
}

impl DensityFunction {
    pub fn constant(c: f64) -> Self {
        DensityFunction::Constant { c }
    }

    pub fn linear_offset(c: f64, x0: Vec3) -> Self {
        DensityFunction::LinearOffset { c, x0: x0.as_slice().to_vec() }
    }

    pub fn eval(&self, u: &Vec3) -> f64 {
        match self {
            DensityFunction::Constant { c } => *c,
            DensityFunction::LinearOffset { c, x0 } => c + vec_from(x0).dot(u),
            DensityFunction::Polynomial { terms } => terms
                .iter()
                .map(|t| t.c * u.x.powi(t.powers[0] as i32) * u.y.powi(t.powers[1] as i32) * u.z.powi(t.powers[2] as i32))
                .sum(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            DensityFunction::Constant { c } => *c == 0.0,
            DensityFunction::LinearOffset { c, x0 } => *c == 0.0 && x0.iter().all(|x| *x == 0.0),
            DensityFunction::Polynomial { terms } => terms.iter().all(|t| t.c == 0.0),
        }
    }

    /// Nonnegativity on S^{d-1}: exact for the affine kinds, by sampling for
    /// polynomials.
    pub fn is_nonnegative(&self, d: usize, samples: usize) -> bool {
        match self {
            DensityFunction::Constant { c } => *c >= 0.0,
            DensityFunction::LinearOffset { c, x0 } => {
                let x = vec_from(x0);
                let norm = (0..d).map(|i| x[i] * x[i]).sum::<f64>().sqrt();
                *c >= norm
            }
            DensityFunction::Polynomial { .. } => sphere_points(d, samples).iter().all(|u| self.eval(u) >= -1e-12),
        }
    }
}

/// Deterministic quasi-uniform points on S^{d-1}.
pub fn sphere_points(d: usize, n: usize) -> Vec<Vec3> {
    if d == 2 {
        return (0..n)
            .map(|k| {
                let t = 2.0 * PI * (k as f64 + 0.5) / n as f64;
                Vec3::new(t.cos(), t.sin(), 0.0)
            })
            .collect();
    }
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * k as f64;
            Vec3::new(r * t.cos(), r * t.sin(), z)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sp(d: usize, g: &[Vec3]) -> SphericalPolytope {
        SphericalPolytope::from_generators(d, g).unwrap()
    }

    #[test]
    fn basic_measures() {
        assert_relative_eq!(sp(2, &[Vec3::x(), Vec3::y()]).normalized_measure(), 0.25);
        assert_relative_eq!(sp(2, &[Vec3::x()]).normalized_measure(), 0.5);
        assert_relative_eq!(sp(3, &[Vec3::x(), Vec3::y(), Vec3::z()]).normalized_measure(), 0.125, epsilon = 1e-14);
        assert_relative_eq!(sp(2, &[Vec3::x(), -Vec3::x(), Vec3::y(), -Vec3::y()]).normalized_measure(), 1.0);
        assert_relative_eq!(sp(3, &[Vec3::x(), -Vec3::x(), Vec3::y()]).normalized_measure(), 0.5);
        let lune = sp(3, &[Vec3::z(), -Vec3::z(), Vec3::x(), Vec3::y()]);
        assert_eq!(lune.lineality(), 1);
        assert_relative_eq!(lune.normalized_measure(), 0.25, epsilon = 1e-14);
        let ball = [Vec3::x(), -Vec3::x(), Vec3::y(), -Vec3::y(), Vec3::z(), -Vec3::z()];
        assert_relative_eq!(sp(3, &ball).normalized_measure(), 1.0);
    }

    #[test]
    fn octant_moment() {
        let o = sp(3, &[Vec3::x(), Vec3::y(), Vec3::z()]);
        let m = o.first_moment() * 4.0 * PI;
        for i in 0..3 {
            assert_relative_eq!(m[i], PI / 4.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn arc_density_examples() {
        let q = sp(2, &[Vec3::x(), Vec3::y()]);
        let h = DensityFunction::linear_offset(0.0, Vec3::y());
        assert_relative_eq!(q.integrate_density(&h).unwrap(), 1.0 / (2.0 * PI), epsilon = 1e-14);
        let full = sp(2, &[Vec3::x(), -Vec3::x(), Vec3::y(), -Vec3::y()]);
        let h = DensityFunction::linear_offset(1.0, Vec3::new(0.3, -0.2, 0.0));
        assert_relative_eq!(full.integrate_density(&h).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn quadrature_matches_exact_moments() {
        let cones = [
            sp(3, &[Vec3::x(), Vec3::y(), Vec3::new(0.3, 0.2, 1.0)]),
            sp(3, &[Vec3::x(), Vec3::y(), Vec3::new(-1.0, 0.2, 0.4), Vec3::new(0.1, -0.5, 1.0)]),
            sp(3, &[Vec3::z(), -Vec3::z(), Vec3::x(), Vec3::new(-1.0, 1.0, 0.0)]),
            sp(3, &[Vec3::x(), -Vec3::x(), Vec3::y()]),
        ];
        for c in &cones {
            let x0 = Vec3::new(0.4, -0.7, 0.2);
            let exact = c.first_moment().dot(&x0);
            let num = c.integrate(|u| u.dot(&x0), ARC_ORDER, TAU_QUAD).unwrap();
            assert_relative_eq!(exact, num, epsilon = 1e-10);
            let m = c.integrate(|_| 1.0, ARC_ORDER, TAU_QUAD).unwrap();
            assert_relative_eq!(m, c.normalized_measure(), epsilon = 1e-10);
        }
    }

    #[test]
    fn cone_sum_examples() {
        let a = sp(2, &[Vec3::x()]);
        let b = sp(2, &[Vec3::y()]);
        match cone_sum(&a, &b, Some(2)) {
            ConeSum::Cone(c) => assert_relative_eq!(c.normalized_measure(), 0.25),
            ConeSum::Degenerate => panic!(),
        }
        let mb = sp(2, &[-Vec3::x()]);
        assert!(matches!(cone_sum(&a, &mb, None), ConeSum::Degenerate));
        let t = PI / 3.0;
        let r = sp(2, &[Vec3::new(t.cos(), t.sin(), 0.0)]);
        match cone_sum(&a, &r, Some(2)) {
            ConeSum::Cone(c) => assert_relative_eq!(c.normalized_measure(), 1.0 / 6.0, epsilon = 1e-14),
            ConeSum::Degenerate => panic!(),
        }
    }

    #[test]
    fn membership() {
        let o = sp(3, &[Vec3::x(), Vec3::y(), Vec3::z()]);
        assert!(o.contains(&Vec3::new(1.0, 1.0, 1.0).normalize()));
        assert!(!o.contains(&Vec3::new(-1.0, 1.0, 1.0).normalize()));
        let arc = sp(2, &[Vec3::x(), Vec3::y()]);
        assert!(arc.contains(&Vec3::new(1.0, 1.0, 0.0).normalize()));
        assert!(!arc.contains(&Vec3::new(-1.0, 1.0, 0.0).normalize()));
    }

    #[test]
    fn density_json() {
        let h = DensityFunction::linear_offset(1.0, Vec3::new(0.5, 0.0, 0.0));
        let s = serde_json::to_string(&h).unwrap();
        assert!(s.contains("\"kind\":\"linear_offset\""));
        let back: DensityFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, h);
    }
}
