mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use transgeom::approx::{approximate_simultaneous, certify, decreasing_scheme, nesting_excess, SupportBody};
use transgeom::{Polytope, Vec3};

/// Bodies with a convex union: either pieces of one polytope, or an
/// ellipsoid together with polytopes inside it.
fn bodies(d: usize, r: &mut rand_chacha::ChaCha8Rng) -> Vec<SupportBody> {
    let k = random_body(d, r);
    if r.random_bool(0.5) {
        let m = r.random_range(1..=3);
        return cover(&k, m, r).into_iter().map(|polytope| SupportBody::Polytope { polytope }).collect();
    }
    let radius = k.vertices().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut matrix = vec![vec![0.0; d]; d];
    for (i, row) in matrix.iter_mut().enumerate() {
        row[i] = radius * r.random_range(1.0..1.5);
    }
    vec![
        SupportBody::Ellipsoid { center: vec![0.0; d], matrix },
        SupportBody::Polytope { polytope: k },
    ]
}

fn polytope_pair() -> Vec<SupportBody> {
    let lo = Polytope::cuboid(2, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
    let hi = Polytope::cuboid(2, &[0.5, 0.0], &[2.0, 1.0]).unwrap();
    vec![SupportBody::Polytope { polytope: lo }, SupportBody::Polytope { polytope: hi }]
}

proptest! {
    #![proptest_config(fixed_cases(8))]

    #[test]
    fn approximations_are_sandwiched_and_unite(seed in any::<u64>(), d in 2usize..=3, fine in any::<bool>()) {
        let mut r = rng(seed);
        let bs = bodies(d, &mut r);
        let eps = if fine { 0.05 } else { 0.1 };
        let a = approximate_simultaneous(&bs, eps, 4096).unwrap();
        let c = certify(&bs, &a, 1000);
        prop_assert!(c.sandwich_ok, "{:?}", c);
        prop_assert!(c.union_ok, "{:?}", c);
        prop_assert!(c.max_q_excess <= 1e-9 * 4.0, "{:?}", c);
        for (b, p) in bs.iter().zip(&a.pieces) {
            let u = random_unit_vector(d, &mut r);
            prop_assert!(p.support(&u) >= b.support(&u) - 1e-9);
            prop_assert!(p.support(&u) <= b.support(&u) + 3.0 * eps + 1e-9);
        }
    }
}

#[test]
fn nested_balls_have_a_convex_union() {
    let bs = vec![SupportBody::ball(3, Vec3::zeros(), 1.0), SupportBody::ball(3, Vec3::new(0.2, 0.0, 0.1), 0.5)];
    for eps in [0.1, 0.01] {
        let a = approximate_simultaneous(&bs, eps, 8192).unwrap();
        let c = certify(&bs, &a, 1000);
        assert!(c.sandwich_ok && c.union_ok, "eps = {eps}: {c:?}");
    }
}

#[test]
fn decreasing_scheme_is_nested() {
    let steps = decreasing_scheme(&polytope_pair(), 6, 2048).unwrap();
    assert_eq!(steps.len(), 6);
    for w in steps.windows(2) {
        assert!(nesting_excess(&w[0], &w[1]) <= 1e-9);
        for (old, new) in w[0].pieces.iter().zip(&w[1].pieces) {
            assert!(new.volume() <= old.volume() + 1e-12);
        }
    }
    let last = steps.last().unwrap();
    for (b, p) in polytope_pair().iter().zip(&last.pieces) {
        let u = Vec3::new(0.6, 0.8, 0.0);
        assert!(p.support(&u) - b.support(&u) <= 2.0 * 0.5f64.powi(6) + 1e-12);
    }
}

#[test]
fn too_few_directions_are_reported() {
    let bs = vec![SupportBody::ball(3, Vec3::zeros(), 1.0)];
    assert!(approximate_simultaneous(&bs, 0.001, 16).is_err());
}
