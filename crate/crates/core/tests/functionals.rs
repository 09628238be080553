mod common;

use common::*;
use proptest::prelude::*;
use transgeom::approx::{approximate_simultaneous, decreasing_scheme, SupportBody};
use transgeom::boolean::union_phi_total;
use transgeom::clip::clip_halfspace;
use transgeom::functional::{global_face_sum, phi_j, phi_total};
use transgeom::mc::random_rotation;
use transgeom::polytope::{difference_body, Halfspace};
use transgeom::spherical::DensityFunction;
use transgeom::translative::{mixed_functional_2, translative_lhs_mc, MixedSpec};
use transgeom::{AssociatedFunctional, MCConfig, Polytope, Vec3};

/// A functional with non-constant densities of every degree.
fn wobbly(d: usize, r: &mut rand_chacha::ChaCha8Rng) -> AssociatedFunctional {
    let dens = (0..d)
        .map(|_| DensityFunction::linear_offset(2.0, random_unit_vector(d, r) * 0.8))
        .collect();
    AssociatedFunctional::new(d, dens, 1.3).unwrap()
}

/// `(P ∩ H^-, P ∩ H, P ∩ H^+)` for the hyperplane `<n, x> = c`.
fn cut(p: &Polytope, n: Vec3, c: f64) -> (Polytope, Polytope, Polytope) {
    let lo = clip_halfspace(p, &Halfspace { normal: n, offset: c }).unwrap();
    let hi = clip_halfspace(p, &Halfspace { normal: -n, offset: -c }).unwrap();
    let mid = clip_halfspace(&lo, &Halfspace { normal: -n, offset: -c }).unwrap();
    (lo, mid, hi)
}

fn spec(d: usize, j: usize, m1: usize) -> MixedSpec {
    MixedSpec::new(d, j, vec![m1, d + j - m1]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn degree_j_parts_are_j_homogeneous(seed in any::<u64>(), d in 2usize..=3) {
        let mut r = rng(seed);
        let p = random_body(d, &mut r);
        let af = wobbly(d, &mut r);
        for j in 0..=d {
            let base = phi_j(&p, j, &af).unwrap();
            for a in [0.5, 2.0, 3.0] {
                let scaled = phi_j(&p.scale(a), j, &af).unwrap();
                prop_assert!(rel_err(scaled, a.powi(j as i32) * base) < 1e-9, "j = {}, α = {}", j, a);
            }
        }
    }

    #[test]
    fn total_is_weakly_additive(seed in any::<u64>(), d in 2usize..=3) {
        let mut r = rng(seed);
        let p = random_body(d, &mut r);
        let af = wobbly(d, &mut r);
        let (n, c) = through_interior(&p, &mut r);
        let (lo, mid, hi) = cut(&p, n, c);
        let lhs = phi_total(&p, &af).unwrap() + phi_total(&mid, &af).unwrap();
        let rhs = phi_total(&lo, &af).unwrap() + phi_total(&hi, &af).unwrap();
        prop_assert!(rel_err(lhs, rhs) < 1e-8, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn total_is_translation_invariant(seed in any::<u64>(), d in 2usize..=3) {
        let mut r = rng(seed);
        let p = random_body(d, &mut r);
        let af = wobbly(d, &mut r);
        let x = random_unit_vector(d, &mut r) * 5.0;
        prop_assert!((phi_total(&p.translate(&x), &af).unwrap() - phi_total(&p, &af).unwrap()).abs() < 1e-10 * 10.0);
    }

    #[test]
    fn closed_form_intrinsic_volumes_match_face_sums(seed in any::<u64>(), d in 2usize..=3) {
        let mut r = rng(seed);
        let p = random_body(d, &mut r);
        let af = AssociatedFunctional::intrinsic(d);
        for j in 0..=d {
            prop_assert!(rel_err(global_face_sum(&p, j, &af).unwrap(), phi_j(&p, j, &af).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn mixed_functionals_are_symmetric(seed in any::<u64>(), d in 2usize..=3) {
        let mut r = rng(seed);
        let (p, q) = (random_body(d, &mut r), random_body(d, &mut r));
        let af = wobbly(d, &mut r);
        for j in 0..d {
            for m1 in j + 1..d {
                let a = mixed_functional_2(&p, &q, &spec(d, j, m1), &af).unwrap();
                let b = mixed_functional_2(&q, &p, &spec(d, j, d + j - m1), &af).unwrap();
                prop_assert!(rel_err(a, b) < 1e-9, "j = {}, m1 = {}: {} vs {}", j, m1, a, b);
            }
        }
    }

    #[test]
    fn mixed_functionals_are_homogeneous_per_slot(seed in any::<u64>(), d in 2usize..=3) {
        let mut r = rng(seed);
        let (p, q) = (random_body(d, &mut r), random_body(d, &mut r));
        let af = wobbly(d, &mut r);
        for j in 0..d {
            for m1 in j + 1..d {
                let s = spec(d, j, m1);
                let base = mixed_functional_2(&p, &q, &s, &af).unwrap();
                for a in [2.0f64, 3.0] {
                    let first = mixed_functional_2(&p.scale(a), &q, &s, &af).unwrap();
                    let second = mixed_functional_2(&p, &q.scale(a), &s, &af).unwrap();
                    prop_assert!(rel_err(first, a.powi(m1 as i32) * base) < 1e-9);
                    prop_assert!(rel_err(second, a.powi((d + j - m1) as i32) * base) < 1e-9);
                }
            }
        }
    }

    #[test]
    fn mixed_functionals_are_additive_in_the_first_slot(seed in any::<u64>(), d in 2usize..=3) {
        let mut r = rng(seed);
        let (p, q) = (random_body(d, &mut r), random_body(d, &mut r));
        let af = wobbly(d, &mut r);
        let (n, c) = through_interior(&p, &mut r);
        let (lo, mid, hi) = cut(&p, n, c);
        for j in 0..d {
            for m1 in j + 1..d {
                let s = spec(d, j, m1);
                let f = |k: &Polytope| mixed_functional_2(k, &q, &s, &af).unwrap();
                let (lhs, rhs) = (f(&p) + f(&mid), f(&lo) + f(&hi));
                prop_assert!(rel_err(lhs, rhs) < 1e-8, "j = {}, m1 = {}: {} vs {}", j, m1, lhs, rhs);
            }
        }
    }

    #[test]
    fn mixed_functionals_are_translation_invariant(seed in any::<u64>(), d in 2usize..=3) {
        let mut r = rng(seed);
        let (p, q) = (random_body(d, &mut r), random_body(d, &mut r));
        let af = wobbly(d, &mut r);
        let (x, y) = (random_unit_vector(d, &mut r) * 4.0, random_unit_vector(d, &mut r) * 2.0);
        for j in 0..d {
            for m1 in j + 1..d {
                let s = spec(d, j, m1);
                let a = mixed_functional_2(&p, &q, &s, &af).unwrap();
                let b = mixed_functional_2(&p.translate(&x), &q.translate(&y), &s, &af).unwrap();
                prop_assert!((a - b).abs() < 1e-10 * a.abs().max(1.0) * 10.0);
            }
        }
    }
}

proptest! {
    #![proptest_config(fixed_cases(6))]

    #[test]
    fn inclusion_exclusion_over_convex_unions(seed in any::<u64>(), d in 2usize..=3, m in 1usize..=4) {
        let mut r = rng(seed);
        let af = wobbly(d, &mut r);
        let k = random_body(d, &mut r);
        let bodies: Vec<SupportBody> = cover(&k, m, &mut r).into_iter().map(|polytope| SupportBody::Polytope { polytope }).collect();
        let a = approximate_simultaneous(&bodies, 0.2, 4096).unwrap();
        let direct = phi_total(&a.union, &af).unwrap();
        let ie = union_phi_total(&a.pieces, &af).unwrap();
        prop_assert!(rel_err(ie, direct) < 1e-7, "{} vs {}", ie, direct);
    }

    #[test]
    fn euler_integral_is_difference_body_volume(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (p, q) = (random_body(2, &mut r), random_body(2, &mut r));
        let rot = random_rotation(2, &mut r);
        let q = q.rotate(&rot);
        let est = translative_lhs_mc(&p, &q, 0, &AssociatedFunctional::euler(2), &MCConfig::new(20_000, seed)).unwrap();
        let exact = difference_body(&p, &q).unwrap().volume();
        prop_assert!((est.value - exact).abs() <= 3.0 * est.std_error + 1e-9, "{:?} vs {}", est, exact);
    }
}

#[test]
fn decreasing_approximations_converge_monotonically() {
    let disc = SupportBody::ball(2, Vec3::zeros(), 1.0);
    let steps = decreasing_scheme(&[disc], 6, 64).unwrap();
    let af = AssociatedFunctional::intrinsic(2);
    let values: Vec<f64> = steps.iter().map(|a| phi_total(&a.pieces[0], &af).unwrap()).collect();
    let limit = 1.0 + std::f64::consts::PI + std::f64::consts::PI;
    for w in values.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{values:?}");
    }
    let diffs: Vec<f64> = values.windows(2).map(|w| w[0] - w[1]).collect();
    assert!(diffs.last().unwrap() < &(diffs[0] * 0.25), "{diffs:?}");
    assert!(values.iter().all(|v| *v >= limit - 1e-9));
}

#[test]
fn cube_intrinsic_volumes() {
    let c = Polytope::unit_cube(3);
    let af = AssociatedFunctional::intrinsic(3);
    for (j, v) in [1.0, 3.0, 3.0, 1.0].into_iter().enumerate() {
        assert!((phi_j(&c, j, &af).unwrap() - v).abs() < 1e-12);
    }
}
