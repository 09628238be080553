//! Integrals over rigid motions and the factorisation of rotation-averaged
//! mixed functionals.
//!
//! Rotations are Haar distributed (probability measure on SO(d)); the motion
//! measure is Lebesgue measure on translations times this measure.

use crate::clip::intersect_translated;
use crate::error::{Error, Result};
use crate::functional::{global_face_sum, phi_j, AssociatedFunctional, ConeWeight};
use crate::geom::kappa;
use crate::mc::{check_id, random_rotation, run, run_multi, Estimate, MCConfig, UniformSampler};
use crate::polytope::{difference_body, Intersection, Polytope};
use crate::report::{timed, VerificationReport};
use crate::translative::{mixed_functional_2, MixedSpec};

/// `∫ φ^(j)(K ∩ gM) μ(dg)` for several degrees from one sample of motions.
pub fn kinematic_lhs_mc_multi<W: ConeWeight + ?Sized>(
    k: &Polytope,
    m: &Polytope,
    js: &[usize],
    w: &W,
    cfg: &MCConfig,
) -> Result<Vec<Estimate>> {
    let d = k.ambient();
    let st = run_multi(cfg, check_id("kinematic-lhs"), js.len(), |rng, out| {
        let rot = random_rotation(d, rng);
        let mr = m.rotate(&rot);
        let db = difference_body(k, &mr).expect("difference body of full-dimensional bodies");
        let sampler = UniformSampler::new(&db);
        let x = sampler.sample(rng);
        if let Intersection::Body(r) = intersect_translated(k, &mr, &x) {
            for (o, &j) in out.iter_mut().zip(js) {
                *o = sampler.volume() * global_face_sum(&r, j, w).unwrap_or(f64::NAN);
            }
        }
    });
    if st.iter().any(|s| !s.mean.is_finite()) {
        return Err(Error::QuadratureNotConverged { tol: crate::spherical::TAU_QUAD, estimate: f64::NAN });
    }
    Ok(st.iter().map(|s| s.scaled(1.0)).collect())
}

pub fn kinematic_lhs_mc<W: ConeWeight + ?Sized>(
    k: &Polytope,
    m: &Polytope,
    j: usize,
    w: &W,
    cfg: &MCConfig,
) -> Result<Estimate> {
    Ok(kinematic_lhs_mc_multi(k, m, &[j], w, cfg)?[0])
}

/// `∫_{SO(d)} φ^(j)_{m1,m2}(K, ϑM) ν(dϑ)`.
pub fn rotation_average_mixed<W: ConeWeight + ?Sized>(
    k: &Polytope,
    m: &Polytope,
    spec: &MixedSpec,
    w: &W,
    cfg: &MCConfig,
) -> Result<Estimate> {
    let d = k.ambient();
    let id = check_id(&format!("rotation-average-{:?}", spec.ms));
    let st = run(cfg, id, |rng| {
        let rot = random_rotation(d, rng);
        mixed_functional_2(k, &m.rotate(&rot), spec, w).unwrap_or(f64::NAN)
    });
    if !st.mean.is_finite() {
        return Err(Error::QuadratureNotConverged { tol: crate::spherical::TAU_QUAD, estimate: f64::NAN });
    }
    Ok(st.scaled(1.0))
}

/// Intrinsic volume `V_j(P)`.
pub fn intrinsic_volume(p: &Polytope, j: usize) -> f64 {
    phi_j(p, j, &AssociatedFunctional::intrinsic_volume(p.ambient(), j)).expect("constant densities integrate exactly")
}

/// Principal kinematic formula for intrinsic volumes:
/// `Σ_{k=j}^{d} c(d, j, k) V_k(K) V_{d+j-k}(M)`.
pub fn principal_kinematic_value(k: &Polytope, m: &Polytope, j: usize) -> f64 {
    let d = k.ambient();
    let fl = |n: usize| (1..=n).product::<usize>() as f64;
    (j..=d)
        .map(|i| {
            let c = fl(i) * kappa(i) * fl(d + j - i) * kappa(d + j - i) / (fl(j) * kappa(j) * fl(d) * kappa(d));
            c * intrinsic_volume(k, i) * intrinsic_volume(m, d + j - i)
        })
        .sum()
}

/// Exact kinematic integral when the degree-`j` density is a constant `c`:
/// `c` times the principal kinematic value.
pub fn kinematic_exact(k: &Polytope, m: &Polytope, j: usize, af: &AssociatedFunctional) -> Option<f64> {
    let d = k.ambient();
    let c = if j == d {
        af.c_d
    } else {
        match af.densities.get(j)? {
            crate::spherical::DensityFunction::Constant { c } => *c,
            _ => return None,
        }
    };
    Some(c * principal_kinematic_value(k, m, j))
}

/// Kinematic integral against an exact value, or against the sum of the
/// rotation-averaged mixed functionals when no value is given.
pub fn kinematic_check<W: ConeWeight + ?Sized>(
    k: &Polytope,
    m: &Polytope,
    j: usize,
    w: &W,
    cfg: &MCConfig,
    exact: Option<f64>,
) -> Result<VerificationReport> {
    timed(|| {
        let lhs = kinematic_lhs_mc(k, m, j, w, cfg)?;
        let name = format!("kinematic_j{j}");
        match exact {
            Some(v) => Ok(VerificationReport::compare(&name, v, &lhs, None, cfg.seed)),
            None => {
                let d = k.ambient();
                let mut rhs = Estimate::exact(0.0);
                for s in MixedSpec::all(d, j, 2) {
                    rhs = rhs.add(&rotation_average_mixed(k, m, &s, w, &cfg.fork("rhs"))?);
                }
                let est = Estimate { std_error: lhs.std_error.hypot(rhs.std_error), ..lhs };
                Ok(VerificationReport::compare(&name, rhs.value, &est, None, cfg.seed))
            }
        }
    })
}

/// Ratio `avg φ^(j)_{m, d+j-m}(K, ϑM) / V_{d+j-m}(M)` with its error.
fn factor_ratio<W: ConeWeight + ?Sized>(k: &Polytope, m: &Polytope, spec: &MixedSpec, w: &W, cfg: &MCConfig) -> Result<Estimate> {
    let avg = rotation_average_mixed(k, m, spec, w, cfg)?;
    Ok(avg.scale(1.0 / intrinsic_volume(m, spec.ms[1])))
}

/// The rotation average factorises as `c(K) V_{d+j-m}(M)`: the ratio to
/// `V_{d+j-m}(M)` agrees for `M1` and `M2` within combined 3σ.
pub fn factorization_check(
    k: &Polytope,
    m1: &Polytope,
    m2: &Polytope,
    spec: &MixedSpec,
    af: &AssociatedFunctional,
    cfg: &MCConfig,
) -> Result<VerificationReport> {
    if spec.k() != 2 {
        return Err(Error::SpecInvalid("factorization needs two bodies".into()));
    }
    if !af.is_nonnegative() {
        return Err(Error::Unsupported("factorization requires a nonnegative functional".into()));
    }
    timed(|| {
        let r1 = factor_ratio(k, m1, spec, af, cfg)?;
        let r2 = factor_ratio(k, m2, spec, af, cfg)?;
        let diff = Estimate { value: r1.value - r2.value, std_error: r1.std_error.hypot(r2.std_error), samples: r1.samples };
        let name = format!("factorization_j{}_m{}", spec.j, spec.ms[0]);
        Ok(VerificationReport::compare(&name, 0.0, &diff, None, cfg.seed)
            .with_note(format!("ratio(M1) = {:.9}, ratio(M2) = {:.9}", r1.value, r2.value)))
    })
}

/// With constant densities the coefficient `c(K)` is proportional to
/// `V_m(K)`: the normalised ratios agree across bodies.
pub fn hadwiger_constancy_check<W: ConeWeight + ?Sized>(
    ks: &[Polytope],
    m: &Polytope,
    spec: &MixedSpec,
    w: &W,
    cfg: &MCConfig,
) -> Result<VerificationReport> {
    timed(|| {
        let mut ratios = Vec::with_capacity(ks.len());
        for k in ks {
            let r = factor_ratio(k, m, spec, w, cfg)?;
            ratios.push(r.scale(1.0 / intrinsic_volume(k, spec.ms[0])));
        }
        let base = ratios[0];
        let worst = ratios
            .iter()
            .map(|r| {
                let s = r.std_error.hypot(base.std_error);
                if s > 0.0 {
                    (r.value - base.value).abs() / s
                } else if (r.value - base.value).abs() <= 1e-9 * base.value.abs().max(1.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max);
        let note = ratios.iter().map(|r| format!("{:.6}", r.value)).collect::<Vec<_>>().join(", ");
        let mut rep = VerificationReport::predicate(
            &format!("hadwiger_constancy_j{}_m{}", spec.j, spec.ms[0]),
            base.value,
            worst < 3.0,
            cfg.seed,
            &format!("normalised ratios: {note}"),
        );
        rep.std_error = base.std_error;
        rep.z_score = Some(worst);
        rep.sample_count = cfg.sample_count;
        Ok(rep)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn principal_formula_for_squares() {
        let s = Polytope::unit_cube(2);
        assert_relative_eq!(principal_kinematic_value(&s, &s, 0), 2.0 + 8.0 / PI, epsilon = 1e-12);
        assert_relative_eq!(principal_kinematic_value(&s, &s, 1), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn squares_mc() {
        let s = Polytope::unit_cube(2);
        let af = AssociatedFunctional::intrinsic(2);
        let cfg = MCConfig::new(20_000, 3);
        let r = kinematic_check(&s, &s, 0, &af, &cfg, Some(2.0 + 8.0 / PI)).unwrap();
        assert!(r.pass, "{r:?}");
        let r = kinematic_check(&s, &s, 0, &af, &cfg, None).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn scaled_copy_factorises_exactly() {
        let s = Polytope::unit_cube(2);
        let t = Polytope::regular_polygon(3, 0.7, 0.1);
        let af = AssociatedFunctional::euler(2);
        let spec = MixedSpec::new(2, 0, vec![1, 1]).unwrap();
        let cfg = MCConfig::new(2_000, 8);
        let r = factorization_check(&s, &t, &t.scale(2.0), &spec, &af, &cfg).unwrap();
        assert!(r.pass);
        assert!(r.estimate.abs() < 1e-12);
    }
}
