//! Mixed functionals of pairs of polytopes and Monte Carlo evaluation of
//! translative integrals.
//!
//! For `k = 2` the mixed functional of degree `(m1, m2)` is the face-pair sum
//! `Σ f_j(pos(N(P,F) ∪ N(Q,G))) [F, G] λ(F) λ(G)` over `F ∈ F_m1(P)`,
//! `G ∈ F_m2(Q)`. Genuinely mixed terms for three bodies are estimated by
//! integrating one translation numerically around the exact pair formula.

use serde::{Deserialize, Serialize};

use crate::clip::intersect_translated;
use crate::error::{Error, Result};
use crate::functional::{face_measure_in, face_sum, global_face_sum, normal_cone, ConeWeight, RegionSet};
use crate::geom::Vec3;
use crate::mc::{check_id, run_multi, Estimate, MCConfig, Stats, UniformSampler};
use crate::polytope::{difference_body, Intersection, Polytope};
use crate::report::{timed, VerificationReport};
use crate::spherical::{cone_sum, ConeSum, SphericalPolytope};
use crate::subspace::{bracket, Subspace};

/// Degrees `(m_1, ..., m_k)` of a mixed functional of homogeneity `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixedSpec {
    pub d: usize,
    pub j: usize,
    pub ms: Vec<usize>,
}

impl MixedSpec {
    pub fn new(d: usize, j: usize, ms: Vec<usize>) -> Result<Self> {
        let k = ms.len();
        if k == 0 || j > d {
            return Err(Error::SpecInvalid(format!("j = {j}, k = {k}")));
        }
        if ms.iter().any(|&m| m < j || m > d) {
            return Err(Error::SpecInvalid(format!("degrees {ms:?} outside [{j}, {d}]")));
        }
        let sum: usize = ms.iter().sum();
        if sum != (k - 1) * d + j {
            return Err(Error::SpecInvalid(format!("sum of {ms:?} is {sum}, expected {}", (k - 1) * d + j)));
        }
        Ok(MixedSpec { d, j, ms })
    }

    pub fn k(&self) -> usize {
        self.ms.len()
    }

    /// All index tuples of `k` bodies for degree `j` in R^d.
    pub fn all(d: usize, j: usize, k: usize) -> Vec<MixedSpec> {
        let mut out = Vec::new();
        let mut cur = vec![j; k];
        loop {
            if let Ok(s) = MixedSpec::new(d, j, cur.clone()) {
                out.push(s);
            }
            let mut i = 0;
            loop {
                if i == k {
                    return out;
                }
                cur[i] += 1;
                if cur[i] <= d {
                    break;
                }
                cur[i] = j;
                i += 1;
            }
        }
    }

    pub fn is_decomposable(&self) -> bool {
        self.ms.contains(&self.d)
    }
}

struct FaceData {
    measure: f64,
    cone: SphericalPolytope,
    dir: Subspace,
}

fn face_data(p: &Polytope, m: usize, region: &RegionSet) -> Vec<FaceData> {
    p.faces(m)
        .iter()
        .filter_map(|f| {
            let measure = face_measure_in(p, f, region);
            (measure > 0.0).then(|| FaceData { measure, cone: normal_cone(p, f), dir: f.hull.direction(p.ambient()) })
        })
        .collect()
}

/// `Φ^(j)_{m1,m2}(P, Q; A × B)`.
pub fn mixed_measure_2<W: ConeWeight + ?Sized>(
    p: &Polytope,
    q: &Polytope,
    spec: &MixedSpec,
    w: &W,
    a: &RegionSet,
    b: &RegionSet,
) -> Result<f64> {
    if spec.k() != 2 {
        return Err(Error::SpecInvalid("two bodies expected".into()));
    }
    let (d, j, m1, m2) = (spec.d, spec.j, spec.ms[0], spec.ms[1]);
    if p.ambient() != d || q.ambient() != d {
        return Err(Error::DimensionMismatch("bodies and spec disagree on d".into()));
    }
    if m1 == d {
        if !p.is_full() {
            return Ok(0.0);
        }
        return Ok(face_measure_in(p, &p.faces(d)[0], a) * face_sum(q, j, w, b)?);
    }
    if m2 == d {
        if !q.is_full() {
            return Ok(0.0);
        }
        return Ok(face_sum(p, j, w, a)? * face_measure_in(q, &q.faces(d)[0], b));
    }
    let fp = face_data(p, m1, a);
    let fq = face_data(q, m2, b);
    let mut total = 0.0;
    for f in &fp {
        for g in &fq {
            let br = bracket(&f.dir, &g.dir, j)?;
            if br <= 1e-12 {
                continue;
            }
            if let ConeSum::Cone(c) = cone_sum(&f.cone, &g.cone, Some(d - j)) {
                total += w.cone_weight(j, &c)? * br * f.measure * g.measure;
            }
        }
    }
    Ok(total)
}

/// `φ^(j)_{m1,m2}(P, Q)`.
pub fn mixed_functional_2<W: ConeWeight + ?Sized>(p: &Polytope, q: &Polytope, spec: &MixedSpec, w: &W) -> Result<f64> {
    mixed_measure_2(p, q, spec, w, &RegionSet::AllSpace, &RegionSet::AllSpace)
}

/// Right-hand side of the two-body translative formula,
/// `Σ_m φ^(j)_{m, d+j-m}(P, Q)`.
pub fn translative_rhs_2<W: ConeWeight + ?Sized>(p: &Polytope, q: &Polytope, j: usize, w: &W) -> Result<f64> {
    let d = p.ambient();
    MixedSpec::all(d, j, 2).iter().map(|s| mixed_functional_2(p, q, s, w)).sum()
}

/// `∫_D f(x) dx` over a polytope `D`, with `dim` simultaneous integrands.
/// Stratification allocates samples to the simplices of `D` in proportion
/// to their volume.
pub fn integrate_over<F>(dom: &Polytope, cfg: &MCConfig, id: u64, dim: usize, f: F) -> Result<Vec<Estimate>>
where
    F: Fn(&Vec3, &mut [f64]) + Sync,
{
    let sampler = UniformSampler::new(dom);
    let vol = sampler.volume();
    let check = |st: &[Stats]| -> Result<()> {
        if st.iter().any(|s| !s.mean.is_finite()) {
            return Err(Error::QuadratureNotConverged { tol: crate::spherical::TAU_QUAD, estimate: f64::NAN });
        }
        Ok(())
    };
    if !cfg.stratified {
        let st = run_multi(cfg, id, dim, |rng, out| f(&sampler.sample(rng), out));
        check(&st)?;
        return Ok(st.iter().map(|s| s.scaled(vol)).collect());
    }
    let parts = dom.simplices();
    let mut ests = vec![Estimate::exact(0.0); dim];
    let mut total_n = 0;
    for (k, (s, v)) in parts.iter().enumerate() {
        let n = ((cfg.sample_count as f64 * v / vol).round() as u64).max(2);
        total_n += n;
        let sub = cfg.with_samples(n);
        let st = run_multi(&sub, id ^ (k as u64).wrapping_mul(0x9E37_79B9), dim, |rng, out| {
            f(&crate::mc::uniform_in_simplex(s, rng), out)
        });
        check(&st)?;
        for (e, s) in ests.iter_mut().zip(&st) {
            *e = e.add(&s.scaled(*v));
        }
    }
    for e in &mut ests {
        e.samples = total_n;
    }
    Ok(ests)
}

/// Monte Carlo estimates of `∫ φ^(j)(P ∩ (Q + x)) dx` for several degrees
/// from a shared sample.
pub fn translative_lhs_mc_multi<W: ConeWeight + ?Sized>(
    p: &Polytope,
    q: &Polytope,
    js: &[usize],
    w: &W,
    cfg: &MCConfig,
) -> Result<Vec<Estimate>> {
    let db = difference_body(p, q)?;
    let id = check_id("translative-lhs");
    integrate_over(&db, cfg, id, js.len(), |x, out| {
        if let Intersection::Body(r) = intersect_translated(p, q, x) {
            for (o, &j) in out.iter_mut().zip(js) {
                *o = global_face_sum(&r, j, w).unwrap_or(f64::NAN);
            }
        }
    })
}

pub fn translative_lhs_mc<W: ConeWeight + ?Sized>(
    p: &Polytope,
    q: &Polytope,
    j: usize,
    w: &W,
    cfg: &MCConfig,
) -> Result<Estimate> {
    Ok(translative_lhs_mc_multi(p, q, &[j], w, cfg)?[0])
}

/// Two-body translative formula checks for several degrees sharing one sample.
pub fn translative_check_2_multi<W: ConeWeight + ?Sized>(
    p: &Polytope,
    q: &Polytope,
    js: &[usize],
    w: &W,
    cfg: &MCConfig,
) -> Result<Vec<VerificationReport>> {
    let t = std::time::Instant::now();
    let lhs = translative_lhs_mc_multi(p, q, js, w, cfg)?;
    let ms = t.elapsed().as_millis() as u64;
    js.iter()
        .zip(&lhs)
        .map(|(&j, est)| {
            let rhs = translative_rhs_2(p, q, j, w)?;
            let mut r = VerificationReport::compare(&format!("translative_k2_j{j}"), rhs, est, None, cfg.seed);
            r.runtime_ms = ms;
            Ok(r)
        })
        .collect()
}

pub fn translative_check_2<W: ConeWeight + ?Sized>(
    p: &Polytope,
    q: &Polytope,
    j: usize,
    w: &W,
    cfg: &MCConfig,
) -> Result<VerificationReport> {
    Ok(translative_check_2_multi(p, q, &[j], w, cfg)?.remove(0))
}

/// `φ^(j)_{m1,m2,m3}(K1, K2, K3)`: exact when some `m_i = d`, otherwise
/// by integrating the third translation around the exact pair formula.
pub fn mixed_functional_3<W: ConeWeight + ?Sized>(
    bodies: [&Polytope; 3],
    spec: &MixedSpec,
    w: &W,
    cfg: &MCConfig,
) -> Result<Estimate> {
    if spec.k() != 3 {
        return Err(Error::SpecInvalid("three bodies expected".into()));
    }
    let (d, j) = (spec.d, spec.j);
    if let Some(i) = spec.ms.iter().position(|&m| m == d) {
        let vol = bodies[i].volume();
        let rest: Vec<usize> = (0..3).filter(|&k| k != i).collect();
        let sub = MixedSpec::new(d, j, vec![spec.ms[rest[0]], spec.ms[rest[1]]])?;
        let v = mixed_functional_2(bodies[rest[0]], bodies[rest[1]], &sub, w)?;
        return Ok(Estimate::exact(vol * v));
    }
    // ∫ φ_{a,m2}(K1 ∩ (K3 + x), K2) dx = Σ_{m1'+m3' = d+a} φ_{m1',m2,m3'}(K1, K2, K3)
    let (m1, m2, m3) = (spec.ms[0], spec.ms[1], spec.ms[2]);
    let a = m1 + m3 - d;
    let inner = MixedSpec::new(d, j, vec![a, m2])?;
    let [k1, k2, k3] = bodies;
    let db = difference_body(k1, k3)?;
    let id = check_id(&format!("mixed3-{m1}-{m2}-{m3}"));
    let est = integrate_over(&db, cfg, id, 1, |x, out| {
        if let Intersection::Body(r) = intersect_translated(k1, k3, x) {
            out[0] = mixed_functional_2(&r, k2, &inner, w).unwrap_or(f64::NAN);
        }
    })?[0];
    let mut value = est;
    for n1 in j..=d {
        if n1 == m1 || d + a < n1 || d + a - n1 > d || d + a - n1 < j {
            continue;
        }
        let other = MixedSpec::new(d, j, vec![n1, m2, d + a - n1])?;
        if !other.is_decomposable() {
            return Err(Error::Unsupported(format!("nested evaluation of {:?}", other.ms)));
        }
        value = value.add(&mixed_functional_3(bodies, &other, w, cfg)?.scale(-1.0));
    }
    Ok(value)
}

/// Right-hand side of the three-body formula.
pub fn translative_rhs_3<W: ConeWeight + ?Sized>(bodies: [&Polytope; 3], j: usize, w: &W, cfg: &MCConfig) -> Result<Estimate> {
    let d = bodies[0].ambient();
    let mut total = Estimate::exact(0.0);
    for s in MixedSpec::all(d, j, 3) {
        total = total.add(&mixed_functional_3(bodies, &s, w, cfg)?);
    }
    Ok(total)
}

/// `∫∫ φ^(j)(K1 ∩ (K2 + x2) ∩ (K3 + x3)) dx2 dx3` by Monte Carlo.
pub fn translative_lhs_mc_3<W: ConeWeight + ?Sized>(
    bodies: [&Polytope; 3],
    j: usize,
    w: &W,
    cfg: &MCConfig,
) -> Result<Estimate> {
    let [k1, k2, k3] = bodies;
    let s2 = UniformSampler::new(&difference_body(k1, k2)?);
    let s3 = UniformSampler::new(&difference_body(k1, k3)?);
    let vol = s2.volume() * s3.volume();
    let st = run_multi(cfg, check_id("translative-lhs-3"), 1, |rng, out| {
        let x2 = s2.sample(rng);
        let x3 = s3.sample(rng);
        if let Intersection::Body(r) = intersect_translated(k1, k2, &x2) {
            if let Intersection::Body(r) = intersect_translated(&r, k3, &x3) {
                out[0] = global_face_sum(&r, j, w).unwrap_or(f64::NAN);
            }
        }
    });
    if !st[0].mean.is_finite() {
        return Err(Error::QuadratureNotConverged { tol: crate::spherical::TAU_QUAD, estimate: f64::NAN });
    }
    Ok(st[0].scaled(vol))
}

pub fn translative_check_3<W: ConeWeight + ?Sized>(
    bodies: [&Polytope; 3],
    j: usize,
    w: &W,
    cfg: &MCConfig,
) -> Result<VerificationReport> {
    timed(|| {
        let lhs = translative_lhs_mc_3(bodies, j, w, cfg)?;
        let rhs = translative_rhs_3(bodies, j, w, &cfg.fork("rhs"))?;
        let combined = Estimate {
            value: lhs.value,
            std_error: (lhs.std_error.powi(2) + rhs.std_error.powi(2)).sqrt(),
            samples: lhs.samples,
        };
        Ok(VerificationReport::compare(&format!("translative_k3_j{j}"), rhs.value, &combined, None, cfg.seed))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{phi_j, AssociatedFunctional};
    use crate::polytope::mixed_area_2d;
    use approx::assert_relative_eq;

    fn triangle() -> Polytope {
        Polytope::from_coords(2, &[&[0.0, 0.0], &[1.0, 0.0], &[0.3, 0.8]]).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(MixedSpec::new(2, 0, vec![1, 1]).is_ok());
        assert!(MixedSpec::new(2, 0, vec![1, 2]).is_err());
        assert_eq!(MixedSpec::all(2, 0, 2).len(), 3);
        assert_eq!(MixedSpec::all(3, 0, 3).len(), 10);
    }

    #[test]
    fn squares_mixed_euler_term() {
        let s = Polytope::unit_cube(2);
        let af = AssociatedFunctional::euler(2);
        let v = mixed_functional_2(&s, &s, &MixedSpec::new(2, 0, vec![1, 1]).unwrap(), &af).unwrap();
        assert_relative_eq!(v, 2.0, epsilon = 1e-12);
        assert_relative_eq!(translative_rhs_2(&s, &s, 0, &af).unwrap(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn triangles_fix_orientation() {
        let t = triangle();
        let af = AssociatedFunctional::euler(2);
        let v = mixed_functional_2(&t, &t, &MixedSpec::new(2, 0, vec![1, 1]).unwrap(), &af).unwrap();
        assert_relative_eq!(v, 2.0 * mixed_area_2d(&t, &t.reflect()).unwrap(), epsilon = 1e-12);
        assert!((v - 2.0 * t.volume()).abs() > 0.1);
    }

    #[test]
    fn decomposable_terms() {
        let s = Polytope::unit_cube(2);
        let t = triangle();
        let af = AssociatedFunctional::intrinsic(2);
        let v = mixed_functional_2(&t, &s, &MixedSpec::new(2, 0, vec![0, 2]).unwrap(), &af).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-12);
        let v = mixed_functional_2(&t, &s, &MixedSpec::new(2, 1, vec![1, 2]).unwrap(), &af).unwrap();
        assert_relative_eq!(v, phi_j(&t, 1, &af).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn symmetric_in_slots() {
        let c = Polytope::unit_cube(3);
        let p = Polytope::new(3, &[
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.2, 0.1, 0.0),
            Vec3::new(0.2, 0.9, 0.3),
            Vec3::new(0.1, 0.2, 1.1),
            Vec3::new(0.7, 0.8, 0.9),
        ])
        .unwrap();
        let af = AssociatedFunctional::intrinsic(3);
        for j in 0..3 {
            for s in MixedSpec::all(3, j, 2) {
                let a = mixed_functional_2(&c, &p, &s, &af).unwrap();
                let rev = MixedSpec::new(3, j, vec![s.ms[1], s.ms[0]]).unwrap();
                let b = mixed_functional_2(&p, &c, &rev, &af).unwrap();
                assert_relative_eq!(a, b, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn squares_lhs_mc() {
        let s = Polytope::unit_cube(2);
        let af = AssociatedFunctional::intrinsic(2);
        let cfg = MCConfig::new(20_000, 11);
        let r = translative_check_2_multi(&s, &s, &[0, 1, 2], &af, &cfg).unwrap();
        for x in &r {
            assert!(x.pass, "{x:?}");
        }
        assert_relative_eq!(r[0].exact_value.unwrap(), 4.0, epsilon = 1e-12);
        assert_relative_eq!(r[1].exact_value.unwrap(), 4.0, epsilon = 1e-12);
        assert_relative_eq!(r[2].exact_value.unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn triple_of_squares() {
        let s = Polytope::unit_cube(2);
        let af = AssociatedFunctional::euler(2);
        let cfg = MCConfig::new(20_000, 5);
        let rhs = translative_rhs_3([&s, &s, &s], 0, &af, &cfg).unwrap();
        assert_relative_eq!(rhs.value, 9.0, epsilon = 1e-12);
        assert!(translative_check_3([&s, &s, &s], 0, &af, &cfg).unwrap().pass);
    }
}
