//! Local functionals given by associated functions on spherical polytopes.
//!
//! A functional is fixed by densities `h_0, ..., h_{d-1}` and a volume
//! coefficient `c_d`. Its degree-`j` part on a polytope is the face sum
//! `Σ_{F ∈ F_j(P)} f_j(n(P, F)) λ_j(F)` with `f_j(p) = ∫_p h_j dω`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::clip::{clip_halfspace, intersect_lower};
use crate::error::{Error, Result};
use crate::geom::{Vec3, TAU_GEOM};
use crate::polytope::{Face, Halfspace, Polytope};
use crate::quadrature::gauss_legendre;
use crate::spherical::{DensityFunction, SphericalPolytope, ARC_ORDER, TAU_QUAD};

/// Anything that assigns a weight `f_j(p)` to spherical polytopes.
pub trait ConeWeight: Sync {
    fn ambient(&self) -> usize;
    /// Weight of a spherical polytope whose span has dimension `d - j`.
    fn cone_weight(&self, j: usize, p: &SphericalPolytope) -> Result<f64>;
    /// Coefficient of the volume part.
    fn volume_coefficient(&self) -> f64;
    /// `Some(c)` when the degree-`j` weight is `c` times the normalised measure.
    fn constant_weight(&self, _j: usize) -> Option<f64> {
        None
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssociatedFunctional {
    #[serde(default)]
    pub d: usize,
    pub c_d: f64,
    pub densities: Vec<DensityFunction>,
}

impl AssociatedFunctional {
    pub fn new(d: usize, densities: Vec<DensityFunction>, c_d: f64) -> Result<Self> {
        if densities.len() != d {
            return Err(Error::DimensionMismatch(format!("{} densities for d = {d}", densities.len())));
        }
        Ok(AssociatedFunctional { d, c_d, densities })
    }

    /// All `h_j ≡ 1`, `c_d = 1`: the sum of the intrinsic volumes.
    pub fn intrinsic(d: usize) -> Self {
        AssociatedFunctional { d, c_d: 1.0, densities: vec![DensityFunction::constant(1.0); d] }
    }

    /// Only degree `j` with density one: the intrinsic volume `V_j`.
    pub fn intrinsic_volume(d: usize, j: usize) -> Self {
        let mut densities = vec![DensityFunction::constant(0.0); d];
        if j < d {
            densities[j] = DensityFunction::constant(1.0);
        }
        AssociatedFunctional { d, c_d: if j == d { 1.0 } else { 0.0 }, densities }
    }

    pub fn euler(d: usize) -> Self {
        Self::intrinsic_volume(d, 0)
    }

    /// All degrees with density `1 + <u, x0>`, `c_d = 1`.
    pub fn perturbed(d: usize, x0: Vec3) -> Self {
        AssociatedFunctional { d, c_d: 1.0, densities: vec![DensityFunction::linear_offset(1.0, x0); d] }
    }

    /// Same functional restricted to degree `j`.
    pub fn degree(&self, j: usize) -> Self {
        let mut af = self.clone();
        for (i, h) in af.densities.iter_mut().enumerate() {
            if i != j {
                *h = DensityFunction::constant(0.0);
            }
        }
        if j != self.d {
            af.c_d = 0.0;
        }
        af
    }

    /// Named presets: `intrinsic`, `euler`, `volume`, `v<j>`, `perturbed(x,y[,z])`.
    pub fn preset(name: &str, d: usize) -> Result<Self> {
        let name = name.trim();
        let bad = || Error::Unsupported(format!("unknown functional preset `{name}`"));
        match name {
            "intrinsic" => return Ok(Self::intrinsic(d)),
            "euler" => return Ok(Self::euler(d)),
            "volume" => return Ok(Self::intrinsic_volume(d, d)),
            _ => {}
        }
        if let Some(rest) = name.strip_prefix('v').or_else(|| name.strip_prefix('V')) {
            let j: usize = rest.parse().map_err(|_| bad())?;
            if j > d {
                return Err(bad());
            }
            return Ok(Self::intrinsic_volume(d, j));
        }
        if let Some(inner) = name.strip_prefix("perturbed(").and_then(|s| s.strip_suffix(')')) {
            let c: Vec<f64> = inner
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad())?;
            if c.len() != d {
                return Err(bad());
            }
            let mut x0 = Vec3::zeros();
            for (i, v) in c.iter().enumerate() {
                x0[i] = *v;
            }
            return Ok(Self::perturbed(d, x0));
        }
        Err(bad())
    }

    /// `f_j(p)`. Spherical polytopes of the wrong dimension get weight zero.
    pub fn f(&self, j: usize, p: &SphericalPolytope) -> Result<f64> {
        if j >= self.d || p.span_dim() != self.d - j {
            return Ok(0.0);
        }
        p.integrate_density(&self.densities[j])
    }

    /// All densities and `c_d` nonnegative.
    pub fn is_nonnegative(&self) -> bool {
        self.c_d >= 0.0 && self.densities.iter().all(|h| h.is_nonnegative(self.d, 2000))
    }
}

impl ConeWeight for AssociatedFunctional {
    fn ambient(&self) -> usize {
        self.d
    }

    fn cone_weight(&self, j: usize, p: &SphericalPolytope) -> Result<f64> {
        self.f(j, p)
    }

    fn volume_coefficient(&self) -> f64 {
        self.c_d
    }

    fn constant_weight(&self, j: usize) -> Option<f64> {
        match self.densities.get(j) {
            Some(DensityFunction::Constant { c }) => Some(*c),
            _ => None,
        }
    }
}

/// Borel set at which local functionals are evaluated.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionSet {
    AllSpace,
    Polytope(Polytope),
    /// `{x : <normal, x> <= offset}`.
    Halfspace { normal: [f64; 3], offset: f64 },
}

impl RegionSet {
    pub fn contains(&self, x: &Vec3) -> bool {
        match self {
            RegionSet::AllSpace => true,
            RegionSet::Polytope(a) => a.contains(x, a.tolerance()),
            RegionSet::Halfspace { .. } => self.halfspace().unwrap().eval(x) <= TAU_GEOM * x.norm().max(1.0),
        }
    }

    fn halfspace(&self) -> Option<Halfspace> {
        match self {
            RegionSet::Halfspace { normal, offset } => {
                Some(Halfspace { normal: Vec3::new(normal[0], normal[1], normal[2]), offset: *offset })
            }
            _ => None,
        }
    }
}

/// The normal cone `n(P, F)` as a spherical polytope.
pub fn normal_cone(p: &Polytope, f: &Face) -> SphericalPolytope {
    SphericalPolytope::from_generators(p.ambient(), &f.normal_cone).expect("faces below the top have normal cones")
}

/// `λ_j(F ∩ A)` for a `j`-face `F`.
pub fn face_measure_in(p: &Polytope, f: &Face, a: &RegionSet) -> f64 {
    match a {
        RegionSet::AllSpace => f.measure,
        _ => {
            let v = p.vertices();
            let inside = |i: &usize| a.contains(&v[*i]);
            if f.vertex_ids.iter().all(inside) {
                return f.measure;
            }
            if f.dim == 0 {
                return 0.0;
            }
            let fp = p.face_polytope(f);
            let r = match a {
                RegionSet::Polytope(region) => intersect_lower(&fp, region),
                _ => clip_halfspace(&fp, &a.halfspace().unwrap()),
            };
            match r {
                Some(r) if r.dim() == f.dim => r.lambda(f.dim),
                _ => 0.0,
            }
        }
    }
}

/// `Σ_{F ∈ F_j(P)} w_j(n(P, F)) λ_j(F ∩ A)`, or `c_d λ_d(P ∩ A)` for `j = d`.
pub fn face_sum<W: ConeWeight + ?Sized>(p: &Polytope, j: usize, w: &W, a: &RegionSet) -> Result<f64> {
    let d = p.ambient();
    if j == d {
        if !p.is_full() {
            return Ok(0.0);
        }
        let c = w.volume_coefficient();
        if c == 0.0 {
            return Ok(0.0);
        }
        let top = &p.faces(d)[0];
        return Ok(c * face_measure_in(p, top, a));
    }
    let mut total = 0.0;
    for f in p.faces(j) {
        let lam = face_measure_in(p, f, a);
        if lam == 0.0 {
            continue;
        }
        total += w.cone_weight(j, &normal_cone(p, f))? * lam;
    }
    Ok(total)
}

/// `φ^(j)(P)`, the face sum over all of space. For a full-dimensional `P`
/// and a constant weight `c` this is `c V_j(P)`, evaluated from facet areas
/// and dihedral angles without building normal cones.
pub fn global_face_sum<W: ConeWeight + ?Sized>(p: &Polytope, j: usize, w: &W) -> Result<f64> {
    let d = p.ambient();
    if let (true, true, Some(c)) = (p.is_full(), j < d, w.constant_weight(j)) {
        if j == 0 {
            return Ok(c);
        }
        if j == d - 1 {
            return Ok(c * 0.5 * p.faces(j).iter().map(|f| f.measure).sum::<f64>());
        }
        let edges = p.faces(1);
        if edges.iter().all(|e| e.normal_cone.len() == 2) {
            let ext = |e: &Face| e.normal_cone[0].dot(&e.normal_cone[1]).clamp(-1.0, 1.0).acos() / (2.0 * PI);
            return Ok(c * edges.iter().map(|e| e.measure * ext(e)).sum::<f64>());
        }
    }
    face_sum(p, j, w, &RegionSet::AllSpace)
}

/// Degree-`j` part `φ^(j)(P)`.
pub fn phi_j(p: &Polytope, j: usize, af: &AssociatedFunctional) -> Result<f64> {
    if j > af.d {
        return Err(Error::DimensionMismatch(format!("degree {j} above d = {}", af.d)));
    }
    if j < af.d && af.densities[j].is_zero() {
        return Ok(0.0);
    }
    face_sum(p, j, af, &RegionSet::AllSpace)
}

/// `φ(P) = Σ_j φ^(j)(P)`.
pub fn phi_total(p: &Polytope, af: &AssociatedFunctional) -> Result<f64> {
    (0..=af.d).map(|j| phi_j(p, j, af)).sum()
}

/// Local extension `Φ(P, A)`.
pub fn local_extension(p: &Polytope, a: &RegionSet, af: &AssociatedFunctional) -> Result<f64> {
    let mut total = 0.0;
    for j in 0..=af.d {
        if j < af.d && af.densities[j].is_zero() {
            continue;
        }
        total += face_sum(p, j, af, a)?;
    }
    Ok(total)
}

/// Quadrature nodes on a face with weights summing to `λ_j(F)`.
pub fn face_nodes(p: &Polytope, f: &Face, order: usize) -> Vec<(Vec3, f64)> {
    let v = p.vertices();
    match f.dim {
        0 => vec![(v[f.vertex_ids[0]], 1.0)],
        1 => {
            let (a, b) = (v[f.vertex_ids[0]], v[f.vertex_ids[1]]);
            let (x, w) = gauss_legendre(order);
            x.iter().zip(w).map(|(t, wt)| (a + (b - a) * *t, wt * f.measure)).collect()
        }
        2 => {
            let lp = &f.vertex_ids;
            let (x, w) = gauss_legendre(order);
            let mut out = Vec::new();
            for k in 1..lp.len() - 1 {
                let (a, b, c) = (v[lp[0]], v[lp[k]], v[lp[k + 1]]);
                let area = 0.5 * (b - a).cross(&(c - a)).norm();
                for (s, ws) in x.iter().zip(w) {
                    for (t, wt) in x.iter().zip(w) {
                        let pt = a + (b - a) * *s + (c - a) * ((1.0 - s) * t);
                        out.push((pt, 2.0 * area * ws * wt * (1.0 - s)));
                    }
                }
            }
            out
        }
        _ => panic!("face nodes only for faces of dimension below 3"),
    }
}

/// `∫ g(x, u) Λ_j(P, d(x, u))` by product quadrature.
pub fn support_measure_integral(p: &Polytope, j: usize, g: impl Fn(&Vec3, &Vec3) -> f64) -> Result<f64> {
    if j >= p.ambient() {
        return Err(Error::DimensionMismatch(format!("support measures have degree below {}", p.ambient())));
    }
    let mut total = 0.0;
    for f in p.faces(j) {
        let cone = normal_cone(p, f);
        for (x, w) in face_nodes(p, f, 12) {
            total += w * cone.integrate(|u| g(&x, u), ARC_ORDER, TAU_QUAD)?;
        }
    }
    Ok(total)
}

/// `∫ f(u) Ψ_j(P, du)`.
pub fn area_measure_integral(p: &Polytope, j: usize, f: impl Fn(&Vec3) -> f64) -> Result<f64> {
    if j >= p.ambient() {
        return Err(Error::DimensionMismatch(format!("area measures have degree below {}", p.ambient())));
    }
    let mut total = 0.0;
    for face in p.faces(j) {
        total += face.measure * normal_cone(p, face).integrate(&f, ARC_ORDER, TAU_QUAD)?;
    }
    Ok(total)
}

/// `∫ u Ψ_j(P, du)`, computed exactly.
pub fn area_measure_centroid(p: &Polytope, j: usize) -> Vec3 {
    p.faces(j).iter().map(|f| normal_cone(p, f).first_moment() * f.measure).sum()
}

/// Curvature measure `Φ_j(P, A)`.
pub fn curvature_measure(p: &Polytope, j: usize, a: &RegionSet) -> Result<f64> {
    face_sum(p, j, &AssociatedFunctional::intrinsic_volume(p.ambient(), j), a)
}

/// The second local extension of `V_j`: kernel density `1 + <u, x0>`.
pub fn perturbed_extension(p: &Polytope, a: &RegionSet, j: usize, x0: &Vec3) -> Result<f64> {
    let d = p.ambient();
    if j >= d {
        return face_sum(p, j, &AssociatedFunctional::intrinsic_volume(d, d), a);
    }
    let mut af = AssociatedFunctional::intrinsic_volume(d, j);
    af.densities[j] = DensityFunction::linear_offset(1.0, *x0);
    face_sum(p, j, &af, a)
}

/// External angle `γ(F, P)`.
pub fn external_angle(p: &Polytope, f: &Face) -> f64 {
    if f.dim == p.ambient() {
        return 1.0;
    }
    normal_cone(p, f).normalized_measure()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cube_intrinsic_volumes() {
        let c = Polytope::unit_cube(3);
        let af = AssociatedFunctional::intrinsic(3);
        let v: Vec<f64> = (0..=3).map(|j| phi_j(&c, j, &af).unwrap()).collect();
        for (j, x) in v.iter().enumerate() {
            assert_relative_eq!(*x, [1.0, 3.0, 3.0, 1.0][j], epsilon = 1e-12);
        }
        assert_relative_eq!(phi_total(&c, &af).unwrap(), 8.0, epsilon = 1e-12);
    }

    #[test]
    fn square_examples() {
        let s = Polytope::unit_cube(2);
        assert_relative_eq!(phi_j(&s, 1, &AssociatedFunctional::intrinsic(2)).unwrap(), 2.0, epsilon = 1e-12);
        let vol5 = AssociatedFunctional { d: 2, c_d: 5.0, densities: vec![DensityFunction::constant(0.0); 2] };
        assert_relative_eq!(phi_total(&s, &vol5).unwrap(), 5.0, epsilon = 1e-12);
        assert_relative_eq!(phi_total(&s, &AssociatedFunctional::euler(2)).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_matches_face_sum() {
        let oct: Vec<Vec3> = [Vec3::x(), -Vec3::x(), Vec3::y(), -Vec3::y(), Vec3::z() * 2.0, -Vec3::z()].to_vec();
        let tri = [Vec3::zeros(), Vec3::new(2.0, 0.0, 0.0), Vec3::new(0.3, 1.0, 0.0)];
        for p in [Polytope::new(3, &oct).unwrap(), Polytope::new(2, &tri).unwrap(), Polytope::unit_cube(3)] {
            let af = AssociatedFunctional::new(p.ambient(), vec![DensityFunction::constant(1.5); p.ambient()], 1.0).unwrap();
            for j in 0..=p.ambient() {
                let general = face_sum(&p, j, &af, &RegionSet::AllSpace).unwrap();
                assert_relative_eq!(global_face_sum(&p, j, &af).unwrap(), general, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn half_plane_local_extension() {
        let s = Polytope::unit_cube(2);
        let a = RegionSet::Polytope(Polytope::cuboid(2, &[-1.0, -1.0], &[0.5, 2.0]).unwrap());
        let v = local_extension(&s, &a, &AssociatedFunctional::intrinsic_volume(2, 1)).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-12);
        assert_relative_eq!(curvature_measure(&s, 1, &a).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn perturbed_right_half() {
        let s = Polytope::unit_cube(2);
        let a = RegionSet::Polytope(Polytope::cuboid(2, &[0.5, -1.0], &[2.0, 2.0]).unwrap());
        let x0 = Vec3::x();
        let diff = perturbed_extension(&s, &a, 1, &x0).unwrap() - curvature_measure(&s, 1, &a).unwrap();
        assert_relative_eq!(diff, 0.5, epsilon = 1e-12);
        let total = perturbed_extension(&s, &RegionSet::AllSpace, 1, &x0).unwrap();
        assert_relative_eq!(total, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn cube_edge_moment() {
        let c = Polytope::unit_cube(3);
        let v = support_measure_integral(&c, 1, |_, u| u.z * u.z).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-10);
        let m = area_measure_centroid(&c, 1);
        assert!(m.norm() < 1e-12);
    }

    #[test]
    fn presets_parse() {
        assert_eq!(AssociatedFunctional::preset("intrinsic", 3).unwrap(), AssociatedFunctional::intrinsic(3));
        let p = AssociatedFunctional::preset("perturbed(0.5, 0)", 2).unwrap();
        assert_eq!(p.densities[0], DensityFunction::linear_offset(1.0, Vec3::new(0.5, 0.0, 0.0)));
        assert!(AssociatedFunctional::preset("bogus", 2).is_err());
    }
}
