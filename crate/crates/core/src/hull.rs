//! Convex hulls in the plane and in space.
//!
//! Both routines return facet loops; the face lattice is assembled in
//! [`crate::polytope`].

use rustc_hash::{FxHashMap as HashMap, FxHashSet as HashSet};

use crate::geom::Vec3;

/// A facet `<normal, x> = offset` with its vertex loop, counter-clockwise
/// when seen from outside.
#[derive(Clone, Debug)]
pub(crate) struct MeshFacet {
    pub normal: Vec3,
    pub offset: f64,
    pub verts: Vec<usize>,
}

#[derive(Clone, Debug)]
pub(crate) struct FacetMesh {
    pub points: Vec<Vec3>,
    pub facets: Vec<MeshFacet>,
}

fn cross_z(o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Is `a` a strict left turn from `o` to `b`, by more than `eps` in distance?
fn turns_left(o: &[f64; 2], a: &[f64; 2], b: &[f64; 2], eps: f64) -> bool {
    cross_z(o, a, b) > eps * (b[0] - o[0]).hypot(b[1] - o[1])
}

/// Andrew's monotone chain. Returns indices of the hull vertices in
/// counter-clockwise order, collinear points dropped. A point within `eps`
/// of the chord of its neighbours counts as collinear.
pub(crate) fn hull_2d(pts: &[[f64; 2]], eps: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| {
        pts[a][0]
            .total_cmp(&pts[b][0])
            .then(pts[a][1].total_cmp(&pts[b][1]))
    });
    idx.dedup_by(|a, b| {
        (pts[*a][0] - pts[*b][0]).abs() <= eps && (pts[*a][1] - pts[*b][1]).abs() <= eps
    });
    if idx.len() < 3 {
        return idx;
    }
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2
            && !turns_left(&pts[lower[lower.len() - 2]], &pts[lower[lower.len() - 1]], &pts[i], eps)
        {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2
            && !turns_left(&pts[upper[upper.len() - 2]], &pts[upper[upper.len() - 1]], &pts[i], eps)
        {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

#[derive(Clone)]
struct Tri {
    v: [usize; 3],
    n: Vec3,
    off: f64,
    alive: bool,
}

impl Tri {
    fn new(points: &[Vec3], a: usize, b: usize, c: usize) -> Self {
        let cr = (points[b] - points[a]).cross(&(points[c] - points[a]));
        let norm = cr.norm();
        let n = if norm > 0.0 { cr / norm } else { Vec3::zeros() };
        Tri { v: [a, b, c], n, off: n.dot(&points[a]), alive: true }
    }
}

/// Convex hull of a full-dimensional point set in space.
///
/// Returns `None` when no non-degenerate initial tetrahedron exists.
pub(crate) fn hull_3d(points: &[Vec3], tol: f64) -> Option<FacetMesh> {
    let n = points.len();
    if n < 4 {
        return None;
    }
    let i0 = 0;
    let i1 = (0..n).max_by(|&a, &b| {
        (points[a] - points[i0]).norm().total_cmp(&(points[b] - points[i0]).norm())
    })?;
    let dir = (points[i1] - points[i0]).normalize();
    let line_dist = |p: &Vec3| {
        let w = p - points[i0];
        (w - dir * dir.dot(&w)).norm()
    };
    let i2 = (0..n).max_by(|&a, &b| line_dist(&points[a]).total_cmp(&line_dist(&points[b])))?;
    if line_dist(&points[i2]) <= tol {
        return None;
    }
    let pn = (points[i1] - points[i0]).cross(&(points[i2] - points[i0])).normalize();
    let plane_dist = |p: &Vec3| pn.dot(&(p - points[i0]));
    let i3 = (0..n).max_by(|&a, &b| plane_dist(&points[a]).abs().total_cmp(&plane_dist(&points[b]).abs()))?;
    if plane_dist(&points[i3]).abs() <= tol {
        return None;
    }

    let exact = |p: &Vec3| robust::Coord3D { x: p.x, y: p.y, z: p.z };
    // Positive when `p` lies strictly inside the half-space behind the
    // counter-clockwise triangle `abc`.
    let orient = |t: &[usize; 3], p: usize| {
        robust::orient3d(exact(&points[t[0]]), exact(&points[t[1]]), exact(&points[t[2]]), exact(&points[p]))
    };
    let mut tris: Vec<Tri> = Vec::new();
    for ([a, b, c], o) in [([i0, i1, i2], i3), ([i0, i1, i3], i2), ([i0, i2, i3], i1), ([i1, i2, i3], i0)] {
        if orient(&[a, b, c], o) > 0.0 {
            tris.push(Tri::new(points, a, b, c));
        } else {
            tris.push(Tri::new(points, a, c, b));
        }
    }

    // Quickhull with conflict lists. Exact visibility keeps the triangulated
    // surface a closed manifold and the visible region connected.
    let mut edge: HashMap<(usize, usize), usize> = HashMap::default();
    for (i, t) in tris.iter().enumerate() {
        for k in 0..3 {
            edge.insert((t.v[k], t.v[(k + 1) % 3]), i);
        }
    }
    let mut outside: Vec<Vec<usize>> = vec![Vec::new(); 4];
    for p in 0..n {
        if let Some(t) = (0..4).find(|&t| orient(&tris[t].v, p) < 0.0) {
            outside[t].push(p);
        }
    }
    let mut pending: Vec<usize> = (0..4).collect();
    while let Some(t) = pending.pop() {
        if !tris[t].alive || outside[t].is_empty() {
            continue;
        }
        let mut orphans = std::mem::take(&mut outside[t]);
        let height = |q: usize| tris[t].n.dot(&points[q]) - tris[t].off;
        let k = (0..orphans.len()).max_by(|&a, &b| height(orphans[a]).total_cmp(&height(orphans[b]))).unwrap();
        let p = orphans.swap_remove(k);

        let mut visible = vec![t];
        let mut seen: HashSet<usize> = std::iter::once(t).collect();
        let mut i = 0;
        while i < visible.len() {
            let v = tris[visible[i]].v;
            i += 1;
            for e in 0..3 {
                if let Some(&nb) = edge.get(&(v[(e + 1) % 3], v[e])) {
                    if seen.insert(nb) && orient(&tris[nb].v, p) < 0.0 {
                        visible.push(nb);
                    }
                }
            }
        }
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        for &vt in &visible {
            let v = tris[vt].v;
            for e in 0..3 {
                let (a, b) = (v[e], v[(e + 1) % 3]);
                if !edge.get(&(b, a)).is_some_and(|nb| visible.contains(nb)) {
                    horizon.push((a, b));
                }
            }
        }
        for &vt in &visible {
            let v = tris[vt].v;
            for e in 0..3 {
                edge.remove(&(v[e], v[(e + 1) % 3]));
            }
            tris[vt].alive = false;
            orphans.append(&mut outside[vt]);
        }
        let first = tris.len();
        for (a, b) in horizon {
            let id = tris.len();
            for e in [(a, b), (b, p), (p, a)] {
                edge.insert(e, id);
            }
            tris.push(Tri::new(points, a, b, p));
            outside.push(Vec::new());
            pending.push(id);
        }
        for q in orphans {
            if let Some(nt) = (first..tris.len()).find(|&nt| orient(&tris[nt].v, q) < 0.0) {
                outside[nt].push(q);
            }
        }
    }
    tris.retain(|t| t.alive);
    let facets = merge_flat(points, &tris, 10.0 * tol);
    Some(FacetMesh { points: points.to_vec(), facets })
}

fn tri_area(points: &[Vec3], t: &Tri) -> f64 {
    (points[t.v[1]] - points[t.v[0]]).cross(&(points[t.v[2]] - points[t.v[0]])).norm()
}

/// A triangle of height at most `tol`, whose normal carries no information.
fn is_sliver(points: &[Vec3], t: &Tri, tol: f64) -> bool {
    let longest = (0..3).map(|k| (points[t.v[k]] - points[t.v[(k + 1) % 3]]).norm()).fold(0.0, f64::max);
    tri_area(points, t) <= tol * longest
}

/// Grows groups of edge-adjacent triangles lying within `plane_tol` of a
/// common plane and returns their boundary loops as facets. Neighbouring
/// facets share their boundary edges, so the surface stays closed.
fn merge_flat(points: &[Vec3], tris: &[Tri], plane_tol: f64) -> Vec<MeshFacet> {
    let mut owner: HashMap<(usize, usize), usize> = HashMap::default();
    for (i, t) in tris.iter().enumerate() {
        for k in 0..3 {
            owner.insert((t.v[k], t.v[(k + 1) % 3]), i);
        }
    }
    let mut order: Vec<usize> = (0..tris.len()).collect();
    order.sort_by(|&a, &b| tri_area(points, &tris[b]).total_cmp(&tri_area(points, &tris[a])));
    let mut group = vec![usize::MAX; tris.len()];
    let mut loops: Vec<Vec<usize>> = Vec::new();
    for &seed in &order {
        if group[seed] != usize::MAX {
            continue;
        }
        let gid = loops.len();
        let (n, off) = (tris[seed].n, tris[seed].off);
        let mut members = vec![seed];
        group[seed] = gid;
        let mut k = 0;
        while k < members.len() {
            let t = tris[members[k]].v;
            k += 1;
            for e in 0..3 {
                let Some(&nb) = owner.get(&(t[(e + 1) % 3], t[e])) else { continue };
                if group[nb] == usize::MAX
                    && (tris[nb].n.dot(&n) > 0.0 || is_sliver(points, &tris[nb], plane_tol))
                    && tris[nb].v.iter().all(|&i| (n.dot(&points[i]) - off).abs() <= plane_tol)
                {
                    group[nb] = gid;
                    members.push(nb);
                }
            }
        }
        match boundary_loop(tris, &members, &group, &owner, gid) {
            Some(l) => loops.push(l),
            None => {
                // Not a disc: keep the triangles as separate facets.
                for (j, &m) in members.iter().enumerate() {
                    group[m] = gid + j;
                    loops.push(tris[m].v.to_vec());
                }
            }
        }
    }

    // A vertex on only two facets lies on their common edge.
    let mut incident: HashMap<usize, usize> = HashMap::default();
    for l in &loops {
        for &v in l {
            *incident.entry(v).or_default() += 1;
        }
    }
    let removable = |v: &usize| incident[v] == 2;
    let blocked: HashSet<usize> = loops
        .iter()
        .filter(|l| l.iter().filter(|&v| !removable(v)).count() < 3)
        .flat_map(|l| l.iter().copied())
        .collect();
    for l in loops.iter_mut() {
        l.retain(|v| !removable(v) || blocked.contains(v));
    }

    loops
        .into_iter()
        .filter_map(|verts| {
            let mut n = Vec3::zeros();
            for k in 0..verts.len() {
                n += points[verts[k]].cross(&points[verts[(k + 1) % verts.len()]]);
            }
            if !(n.norm() > 0.0) {
                return None;
            }
            let n = n.normalize();
            let offset = verts.iter().map(|&i| n.dot(&points[i])).sum::<f64>() / verts.len() as f64;
            Some(MeshFacet { normal: n, offset, verts })
        })
        .collect()
}

/// The single boundary cycle of a group of triangles, if it has one.
fn boundary_loop(
    tris: &[Tri],
    members: &[usize],
    group: &[usize],
    owner: &HashMap<(usize, usize), usize>,
    gid: usize,
) -> Option<Vec<usize>> {
    let mut next: HashMap<usize, usize> = HashMap::default();
    for &m in members {
        let t = tris[m].v;
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let inner = owner.get(&(b, a)).is_some_and(|&nb| group[nb] == gid);
            if !inner && next.insert(a, b).is_some() {
                return None;
            }
        }
    }
    let start = *next.keys().min()?;
    let mut out = vec![start];
    let mut cur = next[&start];
    while cur != start {
        out.push(cur);
        cur = *next.get(&cur)?;
        if out.len() > next.len() {
            return None;
        }
    }
    (out.len() == next.len()).then_some(out)
}

/// Right-handed orthonormal pair spanning the plane orthogonal to `n`.
pub(crate) fn plane_basis(n: &Vec3) -> (Vec3, Vec3) {
    let a = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let b1 = (a - n * n.dot(&a)).normalize();
    let b2 = n.cross(&b1);
    (b1, b2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_with_interior_and_collinear_points() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5], [0.5, 0.0]];
        let h = hull_2d(&pts, 1e-12);
        assert_eq!(h.len(), 4);
        assert!(!h.contains(&4) && !h.contains(&5));
    }

    #[test]
    fn cube_hull_has_six_quadrilaterals() {
        let mut pts = Vec::new();
        for i in 0..8 {
            pts.push(Vec3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64));
        }
        pts.push(Vec3::new(0.5, 0.5, 0.5));
        pts.push(Vec3::new(0.5, 0.0, 0.0));
        let mesh = hull_3d(&pts, 1e-9).unwrap();
        assert_eq!(mesh.facets.len(), 6);
        assert!(mesh.facets.iter().all(|f| f.verts.len() == 4));
        for f in &mesh.facets {
            let (a, b, c) = (pts[f.verts[0]], pts[f.verts[1]], pts[f.verts[2]]);
            assert!((b - a).cross(&(c - b)).dot(&f.normal) > 0.0);
        }
    }

    #[test]
    fn float_degenerate_triangles_are_absorbed() {
        // Vertices of pieces of a hexagonal prism: side faces are coplanar
        // only up to rounding, and some points lie on edges.
        let raw = "-1.00000000000000000 0.00000000000000012 0.00000000000000000
-1.00000000000000000 0.00000000000000012 0.80000000000000004
-0.50000000000000044 -0.86602540378443837 0.00000000000000000
-0.50000000000000044 -0.86602540378443837 0.80000000000000004
-0.49999999999999978 0.86602540378443871 0.00000000000000000
-0.49999999999999978 0.86602540378443871 0.80000000000000004
-0.37573593128807153 0.86602540378443871 0.80000000000000004
-0.37573593128807148 -0.86602540378443837 0.80000000000000004
0.42426406871192845 -0.86602540378443860 0.00000000000000000
0.42426406871192857 0.86602540378443860 0.00000000000000000
-0.94142135623730960 -0.10146118723545745 0.80000000000000004
-0.94142135623730960 0.10146118723545756 0.80000000000000004
-0.50000000000000044 -0.86602540378443837 0.35857864376269100
-0.49999999999999978 0.86602540378443871 0.35857864376269016
-0.14142135623730956 0.86602540378443871 0.00000000000000000
-0.14142135623730950 -0.86602540378443849 0.00000000000000000
0.50000000000000011 -0.86602540378443860 0.00000000000000000
0.50000000000000011 -0.86602540378443860 0.80000000000000004
0.50000000000000011 0.86602540378443860 0.00000000000000000
0.50000000000000011 0.86602540378443860 0.80000000000000004
1.00000000000000000 0.00000000000000000 0.00000000000000000
1.00000000000000000 0.00000000000000000 0.80000000000000004";
        let pts: Vec<Vec3> = raw
            .lines()
            .map(|l| {
                let v: Vec<f64> = l.split_whitespace().map(|x| x.parse().unwrap()).collect();
                Vec3::new(v[0], v[1], v[2])
            })
            .collect();
        let mesh = hull_3d(&pts, 1e-9).unwrap();
        assert_eq!(mesh.facets.len(), 8);
        let edges: HashSet<(usize, usize)> = mesh
            .facets
            .iter()
            .flat_map(|f| (0..f.verts.len()).map(move |k| (f.verts[k], f.verts[(k + 1) % f.verts.len()])))
            .collect();
        assert!(edges.iter().all(|(a, b)| edges.contains(&(*b, *a))));
        assert_eq!(edges.len(), 36);
    }
}
