//! Intersections of polytopes by successive halfspace clipping.
//!
//! Full-dimensional bodies are clipped loop by loop (Sutherland-Hodgman in
//! the plane, facet loops plus a cap polygon in space). Contacts of lower
//! dimension fall back to a vertex-based construction.

use rustc_hash::FxHashMap as HashMap;

use crate::geom::Vec3;
use crate::hull::{plane_basis, FacetMesh, MeshFacet};
use crate::polytope::{clean_loop, Halfspace, Intersection, Polytope};

enum Step<T> {
    Keep(T),
    Disjoint,
    Flat,
}

fn clip_loop_2d(lp: &[Vec3], h: &Halfspace, tol: f64) -> Step<Vec<Vec3>> {
    let s: Vec<f64> = lp.iter().map(|p| h.eval(p)).collect();
    let (mn, mx) = s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if mx <= tol {
        return Step::Keep(lp.to_vec());
    }
    if mn > tol {
        return Step::Disjoint;
    }
    if mn >= -tol {
        return Step::Flat;
    }
    let n = lp.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let k = (i + 1) % n;
        let (sa, sb) = (s[i], s[k]);
        if sa <= tol {
            out.push(lp[i]);
        }
        if (sa < -tol && sb > tol) || (sa > tol && sb < -tol) {
            out.push(lp[i] + (lp[k] - lp[i]) * (sa / (sa - sb)));
        }
    }
    Step::Keep(out)
}

fn clip_mesh(mesh: FacetMesh, h: &Halfspace, tol: f64) -> Step<FacetMesh> {
    // Points cut away by earlier halfspaces stay in the list; only those
    // still on some facet count.
    let mut live = vec![false; mesh.points.len()];
    for f in &mesh.facets {
        for &i in &f.verts {
            live[i] = true;
        }
    }
    let s: Vec<f64> = mesh.points.iter().map(|p| h.eval(p)).collect();
    let (mn, mx) = s
        .iter()
        .zip(&live)
        .filter(|(_, &l)| l)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (&x, _)| (a.min(x), b.max(x)));
    if mx <= tol {
        return Step::Keep(mesh);
    }
    if mn > tol {
        return Step::Disjoint;
    }
    if mn >= -tol {
        return Step::Flat;
    }
    let mut points = mesh.points.clone();
    let mut crossings: HashMap<(usize, usize), usize> = HashMap::default();
    let mut cap: Vec<usize> = Vec::new();
    for (i, &si) in s.iter().enumerate() {
        if live[i] && si.abs() <= tol {
            cap.push(i);
        }
    }
    let mut facets = Vec::with_capacity(mesh.facets.len() + 1);
    for f in &mesh.facets {
        let n = f.verts.len();
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..n {
            let (a, b) = (f.verts[i], f.verts[(i + 1) % n]);
            let (sa, sb) = (s[a], s[b]);
            if sa <= tol {
                out.push(a);
            }
            if (sa < -tol && sb > tol) || (sa > tol && sb < -tol) {
                let key = (a.min(b), a.max(b));
                let idx = *crossings.entry(key).or_insert_with(|| {
                    let (p, q) = (mesh.points[a], mesh.points[b]);
                    points.push(p + (q - p) * (sa / (sa - sb)));
                    cap.push(points.len() - 1);
                    points.len() - 1
                });
                out.push(idx);
            }
        }
        if out.len() >= 3 {
            facets.push(MeshFacet { normal: f.normal, offset: f.offset, verts: out });
        }
    }
    if cap.len() >= 3 {
        let c = cap.iter().map(|&i| points[i]).sum::<Vec3>() / cap.len() as f64;
        let (b1, b2) = plane_basis(&h.normal);
        let mut keyed: Vec<(f64, usize)> = cap
            .iter()
            .map(|&i| {
                let w = points[i] - c;
                (b2.dot(&w).atan2(b1.dot(&w)), i)
            })
            .collect();
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
        facets.push(MeshFacet {
            normal: h.normal,
            offset: h.offset,
            verts: keyed.into_iter().map(|(_, i)| i).collect(),
        });
    }
    Step::Keep(FacetMesh { points, facets })
}

/// Vertex-based intersection that keeps lower-dimensional results.
///
/// Every vertex of `P ∩ Q` is a vertex of one body inside the other or the
/// crossing of an edge of one body with a facet plane of the other.
fn intersect_generic(p: &Polytope, q: &Polytope) -> Option<Polytope> {
    let tol = p.tolerance().max(q.tolerance());
    let mut pts: Vec<Vec3> = Vec::new();
    for (a, b) in [(p, q), (q, p)] {
        for v in a.vertices() {
            if b.contains(v, tol) {
                pts.push(*v);
            }
        }
        for e in a.faces(1) {
            let (u, w) = (a.vertices()[e.vertex_ids[0]], a.vertices()[e.vertex_ids[1]]);
            for h in b.halfspaces() {
                let (su, sw) = (h.eval(&u), h.eval(&w));
                if (su < 0.0 && sw > 0.0) || (su > 0.0 && sw < 0.0) {
                    let x = u + (w - u) * (su / (su - sw));
                    if b.contains(&x, tol) && a.contains(&x, tol) {
                        pts.push(x);
                    }
                }
            }
        }
    }
    if pts.is_empty() {
        return None;
    }
    Polytope::hull(p.ambient(), &pts, true).ok()
}

fn shifted(hs: &[Halfspace], x: &Vec3) -> Vec<Halfspace> {
    hs.iter().map(|h| Halfspace { normal: h.normal, offset: h.offset + h.normal.dot(x) }).collect()
}

fn generic_outcome(p: &Polytope, q: &Polytope, x: &Vec3) -> Intersection {
    match intersect_generic(p, &q.translate(x)) {
        Some(r) if r.is_full() => Intersection::Body(r),
        Some(_) => Intersection::Empty { touching: true },
        None => Intersection::Empty { touching: false },
    }
}

/// `P ∩ (Q + x)` for full-dimensional `P`, `Q`.
pub fn intersect_translated(p: &Polytope, q: &Polytope, x: &Vec3) -> Intersection {
    assert_eq!(p.ambient(), q.ambient(), "intersecting bodies in different spaces");
    if !p.is_full() || !q.is_full() {
        return generic_outcome(p, q, x);
    }
    let tol = p.tolerance().max(q.tolerance() + x.amax() * crate::geom::TAU_GEOM);
    let hs = shifted(q.halfspaces(), x);
    if p.ambient() == 2 {
        let mut lp: Vec<Vec3> = p.faces(2)[0].vertex_ids.iter().map(|&i| p.vertices()[i]).collect();
        for h in &hs {
            match clip_loop_2d(&lp, h, tol) {
                Step::Keep(next) => lp = next,
                Step::Disjoint => return Intersection::Empty { touching: false },
                Step::Flat => return generic_outcome(p, q, x),
            }
        }
        let lp = clean_loop(&lp, tol);
        if lp.len() < 3 {
            return generic_outcome(p, q, x);
        }
        return Intersection::Body(Polytope::from_loop(2, &lp, Vec3::z(), Vec::new(), tol));
    }
    let mut mesh = p.to_mesh();
    for h in &hs {
        match clip_mesh(mesh, h, tol) {
            Step::Keep(next) => mesh = next,
            Step::Disjoint => return Intersection::Empty { touching: false },
            Step::Flat => return generic_outcome(p, q, x),
        }
    }
    match Polytope::from_mesh(mesh, tol) {
        Ok(r) => Intersection::Body(r),
        Err(_) => generic_outcome(p, q, x),
    }
}

/// `P ∩ Q`; contacts of lower dimension are reported as touching.
pub fn intersect(p: &Polytope, q: &Polytope) -> Intersection {
    intersect_translated(p, q, &Vec3::zeros())
}

/// `P ∩ Q` keeping lower-dimensional results; `None` when disjoint.
pub fn intersect_lower(p: &Polytope, q: &Polytope) -> Option<Polytope> {
    if p.is_full() && q.is_full() {
        if let Intersection::Body(r) = intersect(p, q) {
            return Some(r);
        }
    }
    intersect_generic(p, q)
}

/// `P ∩ {<n, x> <= c}`, keeping lower-dimensional results.
pub fn clip_halfspace(p: &Polytope, h: &Halfspace) -> Option<Polytope> {
    let tol = p.tolerance();
    let mut pts: Vec<Vec3> = p.vertices().iter().filter(|v| h.eval(v) <= tol).copied().collect();
    for e in p.faces(1) {
        let (u, w) = (p.vertices()[e.vertex_ids[0]], p.vertices()[e.vertex_ids[1]]);
        let (su, sw) = (h.eval(&u), h.eval(&w));
        if (su < -tol && sw > tol) || (su > tol && sw < -tol) {
            pts.push(u + (w - u) * (su / (su - sw)));
        }
    }
    if pts.is_empty() {
        return None;
    }
    Polytope::hull(p.ambient(), &pts, true).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn round(n: usize, r: f64, c: Vec3) -> Polytope {
        let pts: Vec<Vec3> = crate::spherical::sphere_points(3, n).iter().map(|u| c + u * r).collect();
        Polytope::new(3, &pts).unwrap()
    }

    #[test]
    fn clipping_and_vertex_construction_agree() {
        for (n, shift) in [(60, 0.5), (200, 0.3), (400, 1.2)] {
            let p = round(n, 1.0, Vec3::zeros());
            let q = round(n / 2, 0.8, Vec3::new(shift, 0.1, -0.2));
            let a = intersect(&p, &q).body().unwrap();
            let b = intersect(&q, &p).body().unwrap();
            let c = intersect_generic(&p, &q).unwrap();
            assert_relative_eq!(a.volume(), b.volume(), max_relative = 1e-9);
            assert_relative_eq!(a.volume(), c.volume(), max_relative = 1e-9);
        }
    }

    #[test]
    fn square_overlaps() {
        let s = Polytope::unit_cube(2);
        let r = intersect_translated(&s, &s, &Vec3::new(0.5, 0.5, 0.0)).body().unwrap();
        assert_relative_eq!(r.volume(), 0.25, epsilon = 1e-12);
        assert!(matches!(intersect_translated(&s, &s, &Vec3::new(2.0, 0.0, 0.0)), Intersection::Empty { touching: false }));
        assert!(matches!(intersect_translated(&s, &s, &Vec3::new(1.0, 0.0, 0.0)), Intersection::Empty { touching: true }));
        let edge = intersect_lower(&s, &s.translate(&Vec3::new(1.0, 0.0, 0.0))).unwrap();
        assert_eq!(edge.dim(), 1);
        assert_relative_eq!(edge.lambda(1), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cube_overlaps() {
        let c = Polytope::unit_cube(3);
        let r = intersect_translated(&c, &c, &Vec3::new(0.5, 0.25, -0.5)).body().unwrap();
        assert_eq!(r.face_counts(), vec![8, 12, 6, 1]);
        assert_relative_eq!(r.volume(), 0.5 * 0.75 * 0.5, epsilon = 1e-12);
        let corner = intersect_lower(&c, &c.translate(&Vec3::new(1.0, 1.0, 1.0))).unwrap();
        assert_eq!(corner.dim(), 0);
    }

    #[test]
    fn cube_cut_by_diagonal_plane() {
        let c = Polytope::unit_cube(3);
        let h = Halfspace { normal: Vec3::new(1.0, 1.0, 1.0).normalize(), offset: 1.5 / 3f64.sqrt() };
        let lo = clip_halfspace(&c, &h).unwrap();
        let hi = clip_halfspace(&c, &Halfspace { normal: -h.normal, offset: -h.offset }).unwrap();
        assert_relative_eq!(lo.volume() + hi.volume(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(lo.volume(), 0.5, epsilon = 1e-12);
        assert_eq!(lo.faces(2).len(), 7);
    }
}
