mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use transgeom::approx::ball_polytope;
use transgeom::clip::{clip_halfspace, intersect};
use transgeom::geom::TAU_GEOM;
use transgeom::polytope::{project, Halfspace};
use transgeom::spherical::{DensityFunction, Monomial, SphericalPolytope, TAU_QUAD};
use transgeom::subspace::bracket;
use transgeom::mc::random_rotation;
use transgeom::{Intersection, Polytope, Subspace, Vec3};

fn split(p: &Polytope, n: Vec3, c: f64) -> (Option<Polytope>, Option<Polytope>) {
    let lo = clip_halfspace(p, &Halfspace { normal: n, offset: c });
    let hi = clip_halfspace(p, &Halfspace { normal: -n, offset: -c });
    (lo, hi)
}

fn vol(p: &Option<Polytope>) -> f64 {
    p.as_ref().filter(|p| p.is_full()).map_or(0.0, |p| p.volume())
}

fn inside(a: &Polytope, b: &Polytope) -> bool {
    a.vertices().iter().all(|v| b.contains(v, 1e-8))
}

/// `cone(gens) ∩ {<n, x> >= 0}` from the generators on the positive side and
/// the crossing points of every sign-changing pair.
fn cut_cone(gens: &[Vec3], n: &Vec3) -> Vec<Vec3> {
    let mut out: Vec<Vec3> = gens.iter().filter(|g| n.dot(g) >= 0.0).copied().collect();
    for (i, a) in gens.iter().enumerate() {
        for b in &gens[i + 1..] {
            let (sa, sb) = (n.dot(a), n.dot(b));
            if sa * sb < 0.0 {
                out.push(a * sb.abs() + b * sa.abs());
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn h_and_v_representations_agree(seed in any::<u64>(), d in 2usize..=3) {
        let mut r = rng(seed);
        let p = random_body(d, &mut r);
        let tol = p.tolerance().max(TAU_GEOM);
        for h in p.halfspaces() {
            prop_assert!(p.vertices().iter().all(|v| h.eval(v) <= tol));
            let tight = p.vertices().iter().filter(|v| h.eval(v).abs() <= tol).count();
            prop_assert!(tight >= d);
        }
        for v in p.vertices() {
            prop_assert!(p.contains(v, tol));
        }
    }

    #[test]
    fn volume_splits_along_hyperplanes(seed in any::<u64>(), d in 2usize..=3) {
        let mut r = rng(seed);
        let p = random_body(d, &mut r);
        let n = random_unit_vector(d, &mut r);
        let c = r.random_range(-0.5..0.5);
        let (lo, hi) = split(&p, n, c);
        prop_assert!(rel_err(vol(&lo) + vol(&hi), p.volume()) < 1e-9 * p.volume().max(1.0));
    }

    #[test]
    fn intersection_commutes_and_shrinks(seed in any::<u64>(), d in 2usize..=3) {
        let mut r = rng(seed);
        let p = random_body(d, &mut r);
        let q = random_polytope(d, 8, random_unit_vector(d, &mut r) * 0.5, &mut r);
        match (intersect(&p, &q), intersect(&q, &p)) {
            (Intersection::Body(a), Intersection::Body(b)) => {
                prop_assert!(rel_err(a.volume(), b.volume()) < 1e-9);
                prop_assert!(inside(&a, &b) && inside(&b, &a));
                prop_assert!(inside(&a, &p) && inside(&a, &q));
            }
            (Intersection::Empty { .. }, Intersection::Empty { .. }) => {}
            _ => prop_assert!(false, "asymmetric outcome"),
        }
    }

    #[test]
    fn minkowski_sum_hulls_are_valid(seed in any::<u64>(), eps in 0.01f64..0.3) {
        let mut r = rng(seed);
        let p = random_polytope(3, 30, Vec3::zeros(), &mut r);
        let c = ball_polytope(3, eps).unwrap();
        let pts: Vec<Vec3> = p.vertices().iter().flat_map(|a| c.vertices().iter().map(move |b| a + b)).collect();
        let s = Polytope::new(3, &pts).unwrap();
        let counts = s.face_counts();
        prop_assert_eq!(counts[0] + counts[2], counts[1] + 2);
        for u in (0..20).map(|_| random_unit_vector(3, &mut r)) {
            prop_assert!((s.support(&u) - p.support(&u) - c.support(&u)).abs() < 1e-9);
        }
    }

    #[test]
    fn hulls_survive_nearly_collinear_points(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_body(3, &mut r);
        // Perturbed edge midpoints lie within rounding of the edges.
        let mut pts = p.vertices().to_vec();
        for e in p.faces(1) {
            let (a, b) = (p.vertices()[e.vertex_ids[0]], p.vertices()[e.vertex_ids[1]]);
            let t = r.random_range(0.1..0.9);
            pts.push(a + (b - a) * t + random_unit_vector(3, &mut r) * 1e-10);
        }
        let q = Polytope::new(3, &pts).unwrap();
        prop_assert!(rel_err(q.volume(), p.volume()) < 1e-8);
    }

    #[test]
    fn bracket_is_symmetric(seed in any::<u64>(), k in 1usize..=2) {
        let mut r = rng(seed);
        let a = Subspace::span(3, &[random_unit_vector(3, &mut r), random_unit_vector(3, &mut r)]);
        let b = Subspace::span(3, &(0..k).map(|_| random_unit_vector(3, &mut r)).collect::<Vec<_>>());
        let j = a.dim() + b.dim() - 3;
        prop_assert_eq!(bracket(&a, &b, j).unwrap(), bracket(&b, &a, j).unwrap());
    }

    #[test]
    fn projection_is_hull_of_projected_vertices(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_body(3, &mut r);
        let l = Subspace::span(3, &[random_unit_vector(3, &mut r), random_unit_vector(3, &mut r)]);
        let q = project(&p, &l).unwrap();
        let coords: Vec<Vec3> = p.vertices().iter().map(|v| {
            let c = l.coords(v);
            Vec3::new(c[0], c[1], 0.0)
        }).collect();
        for c in &coords {
            prop_assert!(q.contains(c, 1e-9));
        }
        for v in q.vertices() {
            prop_assert!(coords.iter().any(|c| (c - v).norm() < 1e-9));
        }
    }

    #[test]
    fn spherical_measure_is_simply_additive(seed in any::<u64>(), n_gens in 2usize..=4) {
        let mut r = rng(seed);
        let base = random_unit_vector(3, &mut r);
        let gens: Vec<Vec3> = (0..n_gens).map(|_| (base + random_unit_vector(3, &mut r) * 0.6).normalize()).collect();
        let p = SphericalPolytope::from_generators(3, &gens).unwrap();
        // Cut by a great circle through the cone.
        let inner = gens.iter().sum::<Vec3>().normalize();
        let mut n = random_unit_vector(3, &mut r);
        n -= inner * n.dot(&inner);
        let n = n.normalize();
        let h = DensityFunction::Polynomial { terms: vec![
            Monomial { c: 1.0, powers: [0, 0, 0] },
            Monomial { c: 0.7, powers: [1, 0, 0] },
            Monomial { c: -0.4, powers: [0, 2, 1] },
        ] };
        let whole = p.integrate_density(&h).unwrap();
        let part = |g: Vec<Vec3>| SphericalPolytope::from_generators(3, &g)
            .map_or(0.0, |q| if q.span_dim() == p.span_dim() { q.integrate_density(&h).unwrap() } else { 0.0 });
        let sum = part(cut_cone(&gens, &n)) + part(cut_cone(&gens, &-n));
        prop_assert!((sum - whole).abs() <= 10.0 * TAU_QUAD, "{} vs {}", sum, whole);
    }

    #[test]
    fn spherical_measure_is_rotation_invariant(seed in any::<u64>(), n_gens in 1usize..=4) {
        let mut r = rng(seed);
        let base = random_unit_vector(3, &mut r);
        let gens: Vec<Vec3> = (0..n_gens).map(|_| (base + random_unit_vector(3, &mut r) * 0.8).normalize()).collect();
        let p = SphericalPolytope::from_generators(3, &gens).unwrap();
        let rot = random_rotation(3, &mut r);
        prop_assert!((p.transformed(&rot).normalized_measure() - p.normalized_measure()).abs() < TAU_GEOM);
    }
}

#[test]
fn full_spheres_have_unit_measure() {
    let one = DensityFunction::constant(1.0);
    for (d, k) in [(2, 2), (3, 2), (3, 3)] {
        let mut gens = Vec::new();
        for i in 0..k {
            let mut e = Vec3::zeros();
            e[i] = 1.0;
            gens.push(e);
            gens.push(-e);
        }
        let p = SphericalPolytope::from_generators(d, &gens).unwrap();
        assert!((p.integrate_density(&one).unwrap() - 1.0).abs() < 1e-12, "d = {d}, span {k}");
    }
}

#[test]
fn unit_cube_roundtrips_through_json() {
    let c = Polytope::unit_cube(3);
    let text = serde_json::to_string(&c).unwrap();
    let back: Polytope = serde_json::from_str(&text).unwrap();
    assert_eq!(back.face_counts(), vec![8, 12, 6, 1]);
    assert!((back.volume() - 1.0).abs() < 1e-12);
}
