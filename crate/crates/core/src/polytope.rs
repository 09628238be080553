//! Convex polytopes in R^2 and R^3 with their full face lattice.
//!
//! Every face records its affine hull, its volume, the facets containing it
//! and the generators of its normal cone. Lower-dimensional polytopes are
//! supported; their normal cones additionally contain the orthogonal
//! complement of the affine hull.

use std::path::Path;

use rustc_hash::FxHashMap as HashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{cross2, scaled_tol, Mat3, Vec3};
use crate::hull::{hull_2d, hull_3d, FacetMesh, MeshFacet};
use crate::subspace::Subspace;

/// Affine hull of a face: a base point plus an orthonormal direction basis.
#[derive(Clone, Debug)]
pub struct AffineHull {
    pub point: Vec3,
    pub basis: Vec<Vec3>,
}

impl AffineHull {
    pub fn direction(&self, ambient: usize) -> Subspace {
        Subspace::from_orthonormal(ambient, self.basis.clone())
            .expect("face bases are orthonormal by construction")
    }
}

#[derive(Clone, Debug)]
pub struct Face {
    pub dim: usize,
    /// Vertex indices; polygons keep their boundary loop order.
    pub vertex_ids: Vec<usize>,
    /// `dim`-dimensional volume.
    pub measure: f64,
    /// Unit vectors positively spanning the normal cone.
    pub normal_cone: Vec<Vec3>,
    /// Indices into the facets (faces of dimension `dim P - 1`) containing this face.
    pub facet_ids: Vec<usize>,
    pub hull: AffineHull,
}

/// Closed halfspace `<normal, x> <= offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Halfspace {
    pub normal: Vec3,
    pub offset: f64,
}

impl Halfspace {
    pub fn eval(&self, x: &Vec3) -> f64 {
        self.normal.dot(x) - self.offset
    }
}

#[derive(Clone, Debug)]
pub struct Polytope {
    ambient: usize,
    dim: usize,
    vertices: Vec<Vec3>,
    faces: Vec<Vec<Face>>,
    halfspaces: Vec<Halfspace>,
    orth: Vec<Vec3>,
    tol: f64,
}

/// Result of intersecting two full-dimensional polytopes.
#[derive(Clone, Debug)]
pub enum Intersection {
    Body(Polytope),
    /// No full-dimensional overlap; `touching` marks a nonempty contact of
    /// lower dimension.
    Empty { touching: bool },
}

impl Intersection {
    pub fn body(self) -> Option<Polytope> {
        match self {
            Intersection::Body(p) => Some(p),
            Intersection::Empty { .. } => None,
        }
    }
}

/// File format `{"dim": d, "vertices": [[x, ...], ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolytopeFile {
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FaceSummary {
    pub dim: usize,
    pub count: usize,
    pub measures: Vec<f64>,
}

/// Canonical output: the input format plus per-dimension face data.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CanonicalPolytope {
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    pub faces: Vec<FaceSummary>,
}

fn lex_cmp(a: &Vec3, b: &Vec3) -> std::cmp::Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)).then(a.z.total_cmp(&b.z))
}

fn dedup_points(points: &[Vec3], tol: f64) -> Vec<Vec3> {
    let mut pts = points.to_vec();
    pts.sort_by(lex_cmp);
    let mut out: Vec<Vec3> = Vec::with_capacity(pts.len());
    for p in pts {
        if !out.iter().any(|q| (q - p).amax() <= tol) {
            out.push(p);
        }
    }
    out
}

fn point_from_slice(ambient: usize, c: &[f64]) -> Result<Vec3> {
    if c.len() != ambient {
        return Err(Error::DimensionMismatch(format!(
            "vertex has {} coordinates, expected {ambient}",
            c.len()
        )));
    }
    let mut v = Vec3::zeros();
    for (i, x) in c.iter().enumerate() {
        v[i] = *x;
    }
    Ok(v)
}

/// Build the convex hull of `vertices` in R^`ambient`. Lower-dimensional
/// hulls are rejected unless `lower_dim_ok` is set.
pub fn build_polytope(ambient: usize, vertices: &[Vec3], lower_dim_ok: bool) -> Result<Polytope> {
    if !(2..=3).contains(&ambient) {
        return Err(Error::UnsupportedDimension(ambient));
    }
    Polytope::hull(ambient, vertices, lower_dim_ok)
}

impl Polytope {
    /// Full-dimensional hull in R^`ambient`.
    pub fn new(ambient: usize, vertices: &[Vec3]) -> Result<Self> {
        build_polytope(ambient, vertices, false)
    }

    pub fn from_coords(ambient: usize, coords: &[&[f64]]) -> Result<Self> {
        let pts = coords
            .iter()
            .map(|c| point_from_slice(ambient, c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(ambient, &pts)
    }

    /// Axis-parallel box `[lo, hi]`.
    pub fn cuboid(ambient: usize, lo: &[f64], hi: &[f64]) -> Result<Self> {
        let mut pts = Vec::new();
        for mask in 0..(1usize << ambient) {
            let mut v = Vec3::zeros();
            for i in 0..ambient {
                v[i] = if mask >> i & 1 == 1 { hi[i] } else { lo[i] };
            }
            pts.push(v);
        }
        Self::new(ambient, &pts)
    }

    pub fn unit_cube(ambient: usize) -> Self {
        Self::cuboid(ambient, &[0.0; 3][..ambient], &[1.0; 3][..ambient]).expect("unit cube")
    }

    /// Regular `n`-gon with circumradius `r` centred at the origin.
    pub fn regular_polygon(n: usize, r: f64, phase: f64) -> Self {
        let pts: Vec<Vec3> = (0..n)
            .map(|k| {
                let t = phase + 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                Vec3::new(r * t.cos(), r * t.sin(), 0.0)
            })
            .collect();
        Self::new(2, &pts).expect("regular polygon")
    }

    pub(crate) fn hull(ambient: usize, vertices: &[Vec3], lower_dim_ok: bool) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::TooFewPoints { needed: 1, got: 0 });
        }
        let tol = scaled_tol(vertices);
        let pts = dedup_points(vertices, tol);
        let p0 = pts[0];
        let diffs: Vec<Vec3> = pts.iter().map(|p| p - p0).collect();
        let span = Subspace::span(ambient, &diffs);
        let k = span.dim();
        if k < ambient && !lower_dim_ok {
            if pts.len() < ambient + 1 {
                return Err(Error::TooFewPoints { needed: ambient + 1, got: pts.len() });
            }
            return Err(Error::DegenerateInput { ambient, found: k });
        }
        match (k, ambient) {
            (3, 3) => {
                match hull_3d(&pts, tol) {
                    Some(mesh) => Self::from_mesh(mesh, tol),
                    None => Self::thin_fallback(ambient, &pts, lower_dim_ok, tol),
                }
            }
            (2, 2) => {
                let local: Vec<[f64; 2]> = pts.iter().map(|p| [p.x, p.y]).collect();
                let ext = extent(&pts);
                let idx = hull_2d(&local, tol * ext);
                if idx.len() < 3 {
                    return Self::thin_fallback(ambient, &pts, lower_dim_ok, tol);
                }
                let lp: Vec<Vec3> = idx.iter().map(|&i| pts[i]).collect();
                Ok(Self::from_loop(ambient, &lp, Vec3::z(), Vec::new(), tol))
            }
            (2, 3) => {
                let b = span.basis();
                let local: Vec<[f64; 2]> =
                    diffs.iter().map(|w| [b[0].dot(w), b[1].dot(w)]).collect();
                let ext = extent(&pts);
                let idx = hull_2d(&local, tol * ext);
                if idx.len() < 3 {
                    return Self::thin_fallback(ambient, &pts, lower_dim_ok, tol);
                }
                let lp: Vec<Vec3> = idx.iter().map(|&i| pts[i]).collect();
                let m = b[0].cross(&b[1]);
                Ok(Self::from_loop(ambient, &lp, m, vec![m], tol))
            }
            (1, _) => {
                let t = span.basis()[0];
                let (mut lo, mut hi) = (0usize, 0usize);
                for (i, w) in diffs.iter().enumerate() {
                    if t.dot(w) < t.dot(&diffs[lo]) {
                        lo = i;
                    }
                    if t.dot(w) > t.dot(&diffs[hi]) {
                        hi = i;
                    }
                }
                Ok(Self::segment(ambient, pts[lo], pts[hi], span.complement().basis().to_vec(), tol))
            }
            (0, _) => Ok(Self::point(ambient, p0, tol)),
            _ => unreachable!("affine rank exceeds ambient dimension"),
        }
    }

    /// Point sets whose rank test passes but whose hull collapses under the
    /// tolerance are flattened onto their coarse affine hull and rebuilt.
    fn thin_fallback(ambient: usize, pts: &[Vec3], lower_dim_ok: bool, _tol: f64) -> Result<Self> {
        let p0 = pts[0];
        let diffs: Vec<Vec3> = pts.iter().map(|p| p - p0).collect();
        let fine = Subspace::span(ambient, &diffs).dim();
        let span = Subspace::span_with_tol(ambient, &diffs, 1e-6);
        if span.dim() >= fine {
            return Err(Error::Lattice("near-degenerate hull".into()));
        }
        if !lower_dim_ok {
            return Err(Error::DegenerateInput { ambient, found: span.dim() });
        }
        let flat: Vec<Vec3> = pts.iter().map(|p| p0 + span.project(&(p - p0))).collect();
        Self::hull(ambient, &flat, true)
    }

    fn point(ambient: usize, p: Vec3, tol: f64) -> Self {
        let orth: Vec<Vec3> = (0..ambient).map(crate::geom::e).collect();
        let cone: Vec<Vec3> = orth.iter().flat_map(|o| [*o, -o]).collect();
        let halfspaces = orth
            .iter()
            .flat_map(|o| {
                [
                    Halfspace { normal: *o, offset: o.dot(&p) },
                    Halfspace { normal: -o, offset: -o.dot(&p) },
                ]
            })
            .collect();
        let face = Face {
            dim: 0,
            vertex_ids: vec![0],
            measure: 1.0,
            normal_cone: cone,
            facet_ids: Vec::new(),
            hull: AffineHull { point: p, basis: Vec::new() },
        };
        Polytope { ambient, dim: 0, vertices: vec![p], faces: vec![vec![face]], halfspaces, orth, tol }
    }

    fn segment(ambient: usize, a: Vec3, b: Vec3, orth: Vec<Vec3>, tol: f64) -> Self {
        let t = (b - a).normalize();
        let pm: Vec<Vec3> = orth.iter().flat_map(|o| [*o, -o]).collect();
        let mk_vertex = |i: usize, p: Vec3, n: Vec3| {
            let mut cone = vec![n];
            cone.extend_from_slice(&pm);
            Face {
                dim: 0,
                vertex_ids: vec![i],
                measure: 1.0,
                normal_cone: cone,
                facet_ids: vec![i],
                hull: AffineHull { point: p, basis: Vec::new() },
            }
        };
        let edge = Face {
            dim: 1,
            vertex_ids: vec![0, 1],
            measure: (b - a).norm(),
            normal_cone: pm.clone(),
            facet_ids: vec![0, 1],
            hull: AffineHull { point: a, basis: vec![t] },
        };
        let mut halfspaces = vec![
            Halfspace { normal: -t, offset: -t.dot(&a) },
            Halfspace { normal: t, offset: t.dot(&b) },
        ];
        push_equalities(&mut halfspaces, &orth, &a);
        Polytope {
            ambient,
            dim: 1,
            vertices: vec![a, b],
            faces: vec![vec![mk_vertex(0, a, -t), mk_vertex(1, b, t)], vec![edge]],
            halfspaces,
            orth,
            tol,
        }
    }

    /// Polygon from a convex loop, counter-clockwise around `m`.
    pub(crate) fn from_loop(ambient: usize, lp: &[Vec3], m: Vec3, orth: Vec<Vec3>, tol: f64) -> Self {
        let n = lp.len();
        let pm: Vec<Vec3> = orth.iter().flat_map(|o| [*o, -o]).collect();
        let mut edges = Vec::with_capacity(n);
        let mut halfspaces = Vec::with_capacity(n + 2);
        for i in 0..n {
            let (a, b) = (lp[i], lp[(i + 1) % n]);
            let t = (b - a).normalize();
            let nrm = t.cross(&m).normalize();
            let mut cone = vec![nrm];
            cone.extend_from_slice(&pm);
            halfspaces.push(Halfspace { normal: nrm, offset: nrm.dot(&a) });
            edges.push(Face {
                dim: 1,
                vertex_ids: vec![i, (i + 1) % n],
                measure: (b - a).norm(),
                normal_cone: cone,
                facet_ids: vec![i],
                hull: AffineHull { point: a, basis: vec![t] },
            });
        }
        let verts: Vec<Face> = (0..n)
            .map(|i| {
                let prev = (i + n - 1) % n;
                let mut cone = vec![halfspaces[prev].normal, halfspaces[i].normal];
                cone.extend_from_slice(&pm);
                Face {
                    dim: 0,
                    vertex_ids: vec![i],
                    measure: 1.0,
                    normal_cone: cone,
                    facet_ids: vec![prev, i],
                    hull: AffineHull { point: lp[i], basis: Vec::new() },
                }
            })
            .collect();
        let mut area = Vec3::zeros();
        for i in 0..n {
            area += lp[i].cross(&lp[(i + 1) % n]);
        }
        let b1 = (lp[1] - lp[0]).normalize();
        let body = Face {
            dim: 2,
            vertex_ids: (0..n).collect(),
            measure: 0.5 * area.dot(&m).abs(),
            normal_cone: pm,
            facet_ids: (0..n).collect(),
            hull: AffineHull { point: lp[0], basis: vec![b1, m.cross(&b1)] },
        };
        push_equalities(&mut halfspaces, &orth, &lp[0]);
        Polytope {
            ambient,
            dim: 2,
            vertices: lp.to_vec(),
            faces: vec![verts, edges, vec![body]],
            halfspaces,
            orth,
            tol,
        }
    }

    /// Assemble the lattice of a full-dimensional polytope in space from its
    /// facet loops.
    pub(crate) fn from_mesh(mesh: FacetMesh, tol: f64) -> Result<Self> {
        let mut remap = vec![usize::MAX; mesh.points.len()];
        let mut used: Vec<usize> = mesh.facets.iter().flat_map(|f| f.verts.iter().copied()).collect();
        used.sort_unstable();
        used.dedup();
        let mut vertices = Vec::with_capacity(used.len());
        for (k, &i) in used.iter().enumerate() {
            remap[i] = k;
            vertices.push(mesh.points[i]);
        }
        let nv = vertices.len();
        let mut vert_facets: Vec<Vec<usize>> = vec![Vec::new(); nv];
        let mut edge_map: HashMap<(usize, usize), usize> = HashMap::default();
        let mut edge_facets: Vec<Vec<usize>> = Vec::new();
        let mut edge_ends: Vec<(usize, usize)> = Vec::new();
        let mut facets = Vec::with_capacity(mesh.facets.len());
        let mut halfspaces = Vec::with_capacity(mesh.facets.len());
        let mut volume = 0.0;
        for (fi, f) in mesh.facets.iter().enumerate() {
            let lp: Vec<usize> = f.verts.iter().map(|&i| remap[i]).collect();
            let k = lp.len();
            let mut a = Vec3::zeros();
            for i in 0..k {
                let (p, q) = (lp[i], lp[(i + 1) % k]);
                a += vertices[p].cross(&vertices[q]);
                vert_facets[p].push(fi);
                let key = (p.min(q), p.max(q));
                let e = *edge_map.entry(key).or_insert_with(|| {
                    edge_facets.push(Vec::new());
                    edge_ends.push(key);
                    edge_facets.len() - 1
                });
                edge_facets[e].push(fi);
            }
            let area = 0.5 * a.dot(&f.normal).abs();
            volume += area * f.offset / 3.0;
            let b1 = (vertices[lp[1]] - vertices[lp[0]]).normalize();
            facets.push(Face {
                dim: 2,
                vertex_ids: lp.clone(),
                measure: area,
                normal_cone: vec![f.normal],
                facet_ids: vec![fi],
                hull: AffineHull { point: vertices[lp[0]], basis: vec![b1, f.normal.cross(&b1)] },
            });
            halfspaces.push(Halfspace { normal: f.normal, offset: f.offset });
        }
        let ne = edge_ends.len();
        if nv + facets.len() != ne + 2 {
            return Err(Error::Lattice(format!(
                "Euler relation fails: V={nv} E={ne} F={}",
                facets.len()
            )));
        }
        let mut edges = Vec::with_capacity(ne);
        for (e, &(p, q)) in edge_ends.iter().enumerate() {
            if edge_facets[e].len() != 2 {
                return Err(Error::Lattice(format!("edge ({p},{q}) lies in {} facets", edge_facets[e].len())));
            }
            let d = vertices[q] - vertices[p];
            edges.push(Face {
                dim: 1,
                vertex_ids: vec![p, q],
                measure: d.norm(),
                normal_cone: edge_facets[e].iter().map(|&f| halfspaces[f].normal).collect(),
                facet_ids: edge_facets[e].clone(),
                hull: AffineHull { point: vertices[p], basis: vec![d.normalize()] },
            });
        }
        let verts: Vec<Face> = (0..nv)
            .map(|i| {
                let mut fs = vert_facets[i].clone();
                fs.sort_unstable();
                fs.dedup();
                Face {
                    dim: 0,
                    vertex_ids: vec![i],
                    measure: 1.0,
                    normal_cone: fs.iter().map(|&f| halfspaces[f].normal).collect(),
                    facet_ids: fs,
                    hull: AffineHull { point: vertices[i], basis: Vec::new() },
                }
            })
            .collect();
        let body = Face {
            dim: 3,
            vertex_ids: (0..nv).collect(),
            measure: volume,
            normal_cone: Vec::new(),
            facet_ids: (0..facets.len()).collect(),
            hull: AffineHull { point: vertices[0], basis: vec![Vec3::x(), Vec3::y(), Vec3::z()] },
        };
        Ok(Polytope {
            ambient: 3,
            dim: 3,
            vertices,
            faces: vec![verts, edges, facets, vec![body]],
            halfspaces,
            orth: Vec::new(),
            tol,
        })
    }

    pub(crate) fn to_mesh(&self) -> FacetMesh {
        debug_assert!(self.ambient == 3 && self.dim == 3);
        FacetMesh {
            points: self.vertices.clone(),
            facets: self.faces[2]
                .iter()
                .zip(&self.halfspaces)
                .map(|(f, h)| MeshFacet { normal: h.normal, offset: h.offset, verts: f.vertex_ids.clone() })
                .collect(),
        }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    /// Dimension of the affine hull.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_full(&self) -> bool {
        self.dim == self.ambient
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    /// Faces of dimension `j`; empty above the polytope's dimension.
    pub fn faces(&self, j: usize) -> &[Face] {
        self.faces.get(j).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn face_counts(&self) -> Vec<usize> {
        self.faces.iter().map(|f| f.len()).collect()
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    /// Orthonormal basis of the orthogonal complement of the affine hull.
    pub fn orthogonal_basis(&self) -> &[Vec3] {
        &self.orth
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// Volume in the ambient dimension (zero for lower-dimensional bodies).
    pub fn volume(&self) -> f64 {
        self.lambda(self.ambient)
    }

    /// `j`-dimensional Lebesgue measure of the polytope.
    pub fn lambda(&self, j: usize) -> f64 {
        if j == self.dim {
            self.faces[j][0].measure
        } else if j > self.dim {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn contains(&self, x: &Vec3, tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.eval(x) <= tol)
    }

    pub fn support(&self, u: &Vec3) -> f64 {
        self.vertices.iter().map(|v| v.dot(u)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn support_point(&self, u: &Vec3) -> Vec3 {
        *self
            .vertices
            .iter()
            .max_by(|a, b| a.dot(u).total_cmp(&b.dot(u)))
            .expect("nonempty vertex list")
    }

    /// Centroid of the vertex set (an interior point for full-dimensional bodies).
    pub fn vertex_centroid(&self) -> Vec3 {
        crate::geom::centroid(&self.vertices)
    }

    /// Axis-aligned bounding box.
    pub fn bbox(&self) -> (Vec3, Vec3) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    pub fn translate(&self, x: &Vec3) -> Polytope {
        let mut p = self.clone();
        for v in &mut p.vertices {
            *v += x;
        }
        for h in &mut p.halfspaces {
            h.offset += h.normal.dot(x);
        }
        for fs in &mut p.faces {
            for f in fs {
                f.hull.point += x;
            }
        }
        p.tol = scaled_tol(&p.vertices);
        p
    }

    /// Image under `x -> alpha * r x` with `r` orthogonal and `alpha != 0`.
    pub fn similarity(&self, r: &Mat3, alpha: f64) -> Polytope {
        assert!(alpha != 0.0, "similarity needs a nonzero scale");
        let s = alpha.signum();
        let mut p = self.clone();
        for v in &mut p.vertices {
            *v = r * *v * alpha;
        }
        for h in &mut p.halfspaces {
            h.normal = r * h.normal * s;
            h.offset *= alpha.abs();
        }
        for o in &mut p.orth {
            *o = r * *o;
        }
        for (j, fs) in p.faces.iter_mut().enumerate() {
            for f in fs {
                f.measure *= alpha.abs().powi(j as i32);
                f.hull.point = r * f.hull.point * alpha;
                for b in &mut f.hull.basis {
                    *b = r * *b;
                }
                for n in &mut f.normal_cone {
                    *n = r * *n * s;
                }
            }
        }
        // Keep polygon loops counter-clockwise from outside.
        let orientation = r.determinant() * s.powi(self.ambient as i32);
        if self.ambient == 3 && self.dim == 3 && orientation < 0.0 {
            for f in &mut p.faces[2] {
                f.vertex_ids.reverse();
            }
        }
        if self.ambient == 2 && self.dim == 2 && orientation < 0.0 {
            return Polytope::hull(2, &p.vertices, false).expect("reflected polygon");
        }
        p.tol = scaled_tol(&p.vertices);
        p
    }

    pub fn scale(&self, alpha: f64) -> Polytope {
        self.similarity(&Mat3::identity(), alpha)
    }

    pub fn rotate(&self, r: &Mat3) -> Polytope {
        self.similarity(r, 1.0)
    }

    /// Point reflection `-P`.
    pub fn reflect(&self) -> Polytope {
        self.scale(-1.0)
    }

    /// The face as a polytope of its own dimension, embedded in R^d.
    pub fn face_polytope(&self, f: &Face) -> Polytope {
        let pts: Vec<Vec3> = f.vertex_ids.iter().map(|&i| self.vertices[i]).collect();
        Polytope::hull(self.ambient, &pts, true).expect("face of a polytope")
    }

    /// Euclidean distance from `x` to the polytope.
    pub fn distance(&self, x: &Vec3) -> f64 {
        if self.contains(x, self.tol) {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for v in &self.vertices {
            best = best.min((x - v).norm());
        }
        for e in self.faces(1) {
            let a = self.vertices[e.vertex_ids[0]];
            let b = self.vertices[e.vertex_ids[1]];
            best = best.min(point_segment_distance(x, &a, &b));
        }
        if self.dim >= 2 {
            let facets2 = if self.ambient == 3 { self.faces(2) } else { &[] };
            for (i, f) in facets2.iter().enumerate() {
                let n = if self.dim == 3 { self.halfspaces[i].normal } else { self.orth[0] };
                let h = n.dot(&(x - f.hull.point));
                let y = x - n * h;
                if polygon_contains(&self.vertices, &f.vertex_ids, &n, &y, self.tol) {
                    best = best.min(h.abs());
                }
            }
        }
        best
    }

    /// Decomposition into simplices with their volumes (full-dimensional only).
    pub fn simplices(&self) -> Vec<(Vec<Vec3>, f64)> {
        assert!(self.is_full(), "simplices of a lower-dimensional polytope");
        let apex = self.vertices[0];
        let mut out = Vec::new();
        if self.ambient == 2 {
            let lp = &self.faces[2][0].vertex_ids;
            for k in 1..lp.len() - 1 {
                let (b, c) = (self.vertices[lp[k]], self.vertices[lp[k + 1]]);
                let a = self.vertices[lp[0]];
                let v = 0.5 * cross2(&(b - a), &(c - a)).abs();
                out.push((vec![a, b, c], v));
            }
        } else {
            for f in &self.faces[2] {
                if f.vertex_ids.contains(&0) {
                    continue;
                }
                let lp = &f.vertex_ids;
                for k in 1..lp.len() - 1 {
                    let (a, b, c) = (self.vertices[lp[0]], self.vertices[lp[k]], self.vertices[lp[k + 1]]);
                    let v = ((a - apex).cross(&(b - apex))).dot(&(c - apex)).abs() / 6.0;
                    out.push((vec![apex, a, b, c], v));
                }
            }
        }
        out
    }

    pub fn to_file(&self) -> PolytopeFile {
        PolytopeFile {
            dim: self.ambient,
            vertices: self.vertices.iter().map(|v| v.as_slice()[..self.ambient].to_vec()).collect(),
        }
    }

    pub fn canonical(&self) -> CanonicalPolytope {
        let f = self.to_file();
        CanonicalPolytope {
            dim: f.dim,
            vertices: f.vertices,
            faces: self
                .faces
                .iter()
                .enumerate()
                .map(|(j, fs)| FaceSummary { dim: j, count: fs.len(), measures: fs.iter().map(|f| f.measure).collect() })
                .collect(),
        }
    }

    pub fn from_file(f: &PolytopeFile) -> Result<Self> {
        let pts = f
            .vertices
            .iter()
            .map(|c| point_from_slice(f.dim, c))
            .collect::<Result<Vec<_>>>()?;
        build_polytope(f.dim, &pts, false)
    }

    /// Read a polytope file; any failure is reported with the path.
    pub fn load(path: &Path) -> Result<Self> {
        let invalid = |msg: String| Error::ConfigInvalid { path: path.to_path_buf(), msg };
        let text = std::fs::read_to_string(path).map_err(|e| invalid(e.to_string()))?;
        let f: PolytopeFile = serde_json::from_str(&text).map_err(|e| invalid(e.to_string()))?;
        Self::from_file(&f).map_err(|e| invalid(e.to_string()))
    }
}

impl Serialize for Polytope {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polytope {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = PolytopeFile::deserialize(d)?;
        Polytope::from_file(&f).map_err(serde::de::Error::custom)
    }
}

fn push_equalities(hs: &mut Vec<Halfspace>, orth: &[Vec3], p: &Vec3) {
    for o in orth {
        hs.push(Halfspace { normal: *o, offset: o.dot(p) });
        hs.push(Halfspace { normal: -o, offset: -o.dot(p) });
    }
}

fn extent(pts: &[Vec3]) -> f64 {
    pts.iter().map(|p| p.amax()).fold(1.0, f64::max)
}

pub(crate) fn point_segment_distance(x: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let d = b - a;
    let l2 = d.norm_squared();
    if l2 == 0.0 {
        return (x - a).norm();
    }
    let t = ((x - a).dot(&d) / l2).clamp(0.0, 1.0);
    (x - (a + d * t)).norm()
}

fn polygon_contains(verts: &[Vec3], lp: &[usize], n: &Vec3, y: &Vec3, tol: f64) -> bool {
    let k = lp.len();
    let side = |i: usize| {
        let a = verts[lp[i]];
        let b = verts[lp[(i + 1) % k]];
        (b - a).cross(&(y - a)).dot(n)
    };
    (0..k).all(|i| side(i) >= -tol) || (0..k).all(|i| side(i) <= tol)
}

/// Minkowski sum of two planar polygons by merging edges in angular order.
pub fn minkowski_sum_2d(p: &Polytope, q: &Polytope) -> Result<Polytope> {
    if p.ambient != 2 || q.ambient != 2 {
        return Err(Error::DimensionMismatch("minkowski_sum_2d needs planar polygons".into()));
    }
    if !p.is_full() || !q.is_full() {
        let mut pts = Vec::with_capacity(p.vertices.len() * q.vertices.len());
        for a in &p.vertices {
            for b in &q.vertices {
                pts.push(a + b);
            }
        }
        return Polytope::hull(2, &pts, true);
    }
    let start = |poly: &Polytope| -> Vec<Vec3> {
        let lp: Vec<Vec3> = poly.faces[2][0].vertex_ids.iter().map(|&i| poly.vertices[i]).collect();
        let s = (0..lp.len())
            .min_by(|&a, &b| lp[a].y.total_cmp(&lp[b].y).then(lp[a].x.total_cmp(&lp[b].x)))
            .unwrap();
        (0..lp.len()).map(|k| lp[(s + k) % lp.len()]).collect()
    };
    let (a, b) = (start(p), start(q));
    let (n, m) = (a.len(), b.len());
    let mut out = Vec::with_capacity(n + m);
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        out.push(a[i % n] + b[j % m]);
        let ea = a[(i + 1) % n] - a[i % n];
        let eb = b[(j + 1) % m] - b[j % m];
        let c = cross2(&ea, &eb);
        if j >= m || (i < n && c > 0.0) {
            i += 1;
        } else if i >= n || c < 0.0 {
            j += 1;
        } else {
            i += 1;
            j += 1;
        }
    }
    let tol = scaled_tol(&out);
    let lp = clean_loop(&out, tol);
    Ok(Polytope::from_loop(2, &lp, Vec3::z(), Vec::new(), tol))
}

/// Drop repeated and collinear points from a convex counter-clockwise loop.
pub(crate) fn clean_loop(pts: &[Vec3], tol: f64) -> Vec<Vec3> {
    let mut lp: Vec<Vec3> = Vec::with_capacity(pts.len());
    for p in pts {
        if lp.last().is_none_or(|q: &Vec3| (q - p).amax() > tol) {
            lp.push(*p);
        }
    }
    while lp.len() > 1 && (lp[0] - lp[lp.len() - 1]).amax() <= tol {
        lp.pop();
    }
    let ext = extent(&lp);
    let mut changed = true;
    while changed && lp.len() >= 3 {
        changed = false;
        let k = lp.len();
        for i in 0..k {
            let (a, b, c) = (lp[(i + k - 1) % k], lp[i], lp[(i + 1) % k]);
            if cross2(&(b - a), &(c - b)) <= tol * ext {
                lp.remove(i);
                changed = true;
                break;
            }
        }
    }
    lp
}

/// Point reflection followed by Minkowski sum: `P + (-Q)`.
pub fn difference_body(p: &Polytope, q: &Polytope) -> Result<Polytope> {
    if p.ambient != q.ambient {
        return Err(Error::DimensionMismatch("difference body of bodies in different spaces".into()));
    }
    if p.ambient == 2 {
        return minkowski_sum_2d(p, &q.reflect());
    }
    let mut pts = Vec::with_capacity(p.vertices.len() * q.vertices.len());
    for a in &p.vertices {
        for b in &q.vertices {
            pts.push(a - b);
        }
    }
    Polytope::hull(p.ambient, &pts, true)
}

/// Mixed area `V(K, M)`.
pub fn mixed_area_2d(k: &Polytope, m: &Polytope) -> Result<f64> {
    let s = minkowski_sum_2d(k, m)?;
    Ok(0.5 * (s.volume() - k.volume() - m.volume()))
}

/// Orthogonal projection onto `l`, in the coordinates of `l`'s basis.
pub fn project(p: &Polytope, l: &Subspace) -> Result<Polytope> {
    if l.ambient() != p.ambient || !(1..=p.ambient).contains(&l.dim()) {
        return Err(Error::DimensionMismatch(format!(
            "cannot project a polytope in R^{} onto a {}-subspace of R^{}",
            p.ambient,
            l.dim(),
            l.ambient()
        )));
    }
    let pts: Vec<Vec3> = p
        .vertices
        .iter()
        .map(|v| {
            let c = l.coords(v);
            let mut w = Vec3::zeros();
            for (i, x) in c.iter().enumerate() {
                w[i] = *x;
            }
            w
        })
        .collect();
    Polytope::hull(l.dim(), &pts, true)
}
