//! Linear subspaces of R^2 / R^3 with orthonormal bases.

use crate::error::{Error, Result};
use crate::geom::{e, Vec3};

/// A linear subspace of R^d given by an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    ambient: usize,
    basis: Vec<Vec3>,
}

/// Relative threshold below which a Gram-Schmidt residual is treated as zero.
const RANK_TOL: f64 = 1e-9;

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Subspace { ambient, basis: Vec::new() }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace { ambient, basis: (0..ambient).map(e).collect() }
    }

    /// Linear span of `vectors`; near-dependent vectors are dropped.
    pub fn span(ambient: usize, vectors: &[Vec3]) -> Self {
        Self::span_with_tol(ambient, vectors, RANK_TOL)
    }

    /// As [`Subspace::span`] with a custom relative rank threshold.
    pub fn span_with_tol(ambient: usize, vectors: &[Vec3], rel_tol: f64) -> Self {
        let scale = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut basis: Vec<Vec3> = Vec::with_capacity(ambient);
        if scale == 0.0 {
            return Subspace { ambient, basis };
        }
        // Pick the largest residual first for stability.
        let pool = vectors;
        while basis.len() < ambient {
            if ambient == 3 && basis.len() == 2 {
                let n = basis[0].cross(&basis[1]).normalize();
                // The last direction is fixed; only its residual matters.
                let h = vectors.iter().map(|v| v.dot(&n)).fold(0.0, |a: f64, b| if b.abs() > a.abs() { b } else { a });
                if h.abs() > rel_tol * scale {
                    basis.push(n * h.signum());
                }
                break;
            }
            let mut best: Option<(f64, Vec3)> = None;
            for v in pool {
                let mut r = *v;
                for b in &basis {
                    r -= b * b.dot(&r);
                }
                for b in &basis {
                    r -= b * b.dot(&r);
                }
                let n = r.norm();
                if best.as_ref().map_or(true, |(bn, _)| n > *bn) {
                    best = Some((n, r));
                }
            }
            match best {
                Some((n, r)) if n > rel_tol * scale => basis.push(r / n),
                _ => break,
            }
        }
        Subspace { ambient, basis }
    }

    /// Subspace from an already orthonormal basis. Fails if the vectors are
    /// not orthonormal within `1e-9`.
    pub fn from_orthonormal(ambient: usize, basis: Vec<Vec3>) -> Result<Self> {
        for (i, a) in basis.iter().enumerate() {
            if (a.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::DimensionMismatch("basis vector not unit".into()));
            }
            for b in &basis[i + 1..] {
                if a.dot(b).abs() > 1e-9 {
                    return Err(Error::DimensionMismatch("basis not orthogonal".into()));
                }
            }
        }
        Ok(Subspace { ambient, basis })
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec3] {
        &self.basis
    }

    pub fn project(&self, v: &Vec3) -> Vec3 {
        self.basis.iter().map(|b| b * b.dot(v)).sum()
    }

    pub fn coords(&self, v: &Vec3) -> Vec<f64> {
        self.basis.iter().map(|b| b.dot(v)).collect()
    }

    pub fn contains(&self, v: &Vec3, tol: f64) -> bool {
        (v - self.project(v)).norm() <= tol * v.norm().max(1.0)
    }

    /// Orthogonal complement inside R^ambient.
    pub fn complement(&self) -> Subspace {
        let mut basis = self.basis.clone();
        for i in 0..self.ambient {
            if basis.len() == self.ambient {
                break;
            }
            let mut r = e(i);
            for _ in 0..2 {
                for b in &basis {
                    r -= b * b.dot(&r);
                }
            }
            let n = r.norm();
            if n > 1e-6 {
                basis.push(r / n);
            }
        }
        Subspace { ambient: self.ambient, basis: basis[self.basis.len()..].to_vec() }
    }

    /// Sum (join) of two subspaces.
    pub fn join(&self, other: &Subspace) -> Subspace {
        let mut v = self.basis.clone();
        v.extend_from_slice(&other.basis);
        Subspace::span(self.ambient, &v)
    }

    /// Join with a single vector, e.g. `L^perp v u`.
    pub fn join_vector(&self, u: &Vec3) -> Subspace {
        let mut v = self.basis.clone();
        v.push(*u);
        Subspace::span(self.ambient, &v)
    }

    /// Intersection with the hyperplane orthogonal to `u`.
    pub fn meet_orthogonal(&self, u: &Vec3) -> Subspace {
        let w = self.project(u);
        let n = w.norm();
        if n <= 1e-12 * u.norm().max(1.0) {
            return self.clone();
        }
        let w = w / n;
        let projected: Vec<Vec3> = self.basis.iter().map(|b| b - w * w.dot(b)).collect();
        let mut s = Subspace::span(self.ambient, &projected);
        s.basis.truncate(self.dim() - 1);
        s
    }
}

/// Volume of the parallelotope spanned by `vectors`: sqrt of the Gram determinant.
pub fn gram_volume(vectors: &[Vec3]) -> f64 {
    match vectors.len() {
        0 => 1.0,
        1 => vectors[0].norm(),
        2 => vectors[0].cross(&vectors[1]).norm(),
        3 => vectors[0].dot(&vectors[1].cross(&vectors[2])).abs(),
        n => {
            let g = nalgebra::DMatrix::from_fn(n, n, |i, k| vectors[i].dot(&vectors[k]));
            g.determinant().max(0.0).sqrt()
        }
    }
}

/// Generalised sine `[L1, L2]` between two direction spaces whose
/// dimensions add up to `d + j`: the volume spanned by orthonormal bases of
/// the two orthogonal complements.
pub fn bracket(l1: &Subspace, l2: &Subspace, j: usize) -> Result<f64> {
    let d = l1.ambient();
    if l2.ambient() != d {
        return Err(Error::DimensionMismatch("subspaces live in different spaces".into()));
    }
    if l1.dim() + l2.dim() != d + j {
        return Err(Error::DimensionMismatch(format!(
            "dim L1 + dim L2 = {} but d + j = {}",
            l1.dim() + l2.dim(),
            d + j
        )));
    }
    let (c1, c2) = (l1.complement(), l2.complement());
    let vol = |a: &Subspace, b: &Subspace| {
        let mut frame: Vec<Vec3> = a.basis().to_vec();
        frame.extend_from_slice(b.basis());
        gram_volume(&frame)
    };
    // Both orders, so that swapping the arguments gives the same bits.
    Ok((0.5 * (vol(&c1, &c2) + vol(&c2, &c1))).min(1.0))
}
