//! Flag measures of polytopes, evaluated against test functions.
//!
//! `ψ_j(K, ·)` lives on pairs `(u, M)` with `M` a `(d-j)`-subspace containing
//! `u`. It is computed as a mean over `L ∈ G(d, j+1)` of the order-`j` area
//! measure of `K|L`, each normal `u ∈ L` being paired with `L^⊥ ∨ u`. The
//! mean is normalised so that the image under `(u, M) ↦ u` is `Ψ_j(K, ·)`.
//!
//! `ψ_j^⊥` carries `(u, M^⊥)` instead, with `M^⊥ = L ∩ u^⊥`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::boolean::GrainModel;
use crate::error::{Error, Result};
use crate::functional::{area_measure_integral, face_sum, ConeWeight, RegionSet};
use crate::geom::{binomial, kappa, Mat3, Vec3};
use crate::mc::{check_id, gaussian_vector, run, run_multi, Estimate, MCConfig};
use crate::polytope::{project, Polytope};
use crate::report::{timed, VerificationReport};
use crate::spherical::SphericalPolytope;
use crate::subspace::{gram_volume, Subspace};
use crate::translative::{mixed_functional_2, mixed_functional_3, MixedSpec};

/// A unit vector with a subspace either containing it or orthogonal to it.
#[derive(Clone, Debug)]
pub struct FlagElement {
    pub u: Vec3,
    pub space: Subspace,
}

fn vec3(v: &[f64]) -> Vec3 {
    let mut out = Vec3::zeros();
    for (i, x) in v.iter().take(3).enumerate() {
        out[i] = *x;
    }
    out
}

/// Test functions on flag elements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Constant { c: f64 },
    /// `<u, x0>`.
    Linear { x0: Vec<f64> },
    /// `<u, a>^p`.
    UDotPow { a: Vec<f64>, p: u32 },
    /// `|b|_M|^2`, the squared norm of the projection of `b` onto the subspace.
    ProjNormSq { b: Vec<f64> },
    Product { factors: Vec<TestFunction> },
    Sum { terms: Vec<TestFunction> },
    /// `f(u, M^⊥)`: turns a test function for `ψ_j` into one for `ψ_j^⊥`.
    Perp { inner: Box<TestFunction> },
    /// `f(R u, R M)` with the row-major matrix `r`.
    Rotated { r: [[f64; 3]; 3], inner: Box<TestFunction> },
}

impl TestFunction {
    pub fn eval(&self, e: &FlagElement) -> f64 {
        match self {
            TestFunction::Constant { c } => *c,
            TestFunction::Linear { x0 } => e.u.dot(&vec3(x0)),
            TestFunction::UDotPow { a, p } => e.u.dot(&vec3(a)).powi(*p as i32),
            TestFunction::ProjNormSq { b } => e.space.project(&vec3(b)).norm_squared(),
            TestFunction::Product { factors } => factors.iter().map(|f| f.eval(e)).product(),
            TestFunction::Sum { terms } => terms.iter().map(|f| f.eval(e)).sum(),
            TestFunction::Perp { inner } => inner.eval(&FlagElement { u: e.u, space: e.space.complement() }),
            TestFunction::Rotated { r, inner } => {
                let m = Mat3::from_fn(|i, k| r[i][k]);
                let basis: Vec<Vec3> = e.space.basis().iter().map(|b| m * b).collect();
                let space = Subspace::span(e.space.ambient(), &basis);
                inner.eval(&FlagElement { u: m * e.u, space })
            }
        }
    }

    /// True when the value does not depend on the subspace.
    pub fn depends_only_on_u(&self) -> bool {
        match self {
            TestFunction::Constant { .. } | TestFunction::Linear { .. } | TestFunction::UDotPow { .. } => true,
            TestFunction::ProjNormSq { .. } => false,
            TestFunction::Product { factors: v } | TestFunction::Sum { terms: v } => v.iter().all(|f| f.depends_only_on_u()),
            TestFunction::Perp { inner } | TestFunction::Rotated { inner, .. } => inner.depends_only_on_u(),
        }
    }

    pub fn rotated(&self, r: &Mat3) -> TestFunction {
        TestFunction::Rotated { r: std::array::from_fn(|i| std::array::from_fn(|k| r[(i, k)])), inner: Box::new(self.clone()) }
    }

    fn eval_u(&self, u: &Vec3) -> f64 {
        self.eval(&FlagElement { u: *u, space: Subspace::span(3, &[*u]) })
    }
}

/// Normalisation of the projection mean: the mean over `G(d, j+1)` of
/// `V_j(K|L)` is `V_j(K)` divided by this constant.
pub fn flag_constant(d: usize, j: usize) -> f64 {
    let k = j + 1;
    binomial(d, j) * kappa(d) * kappa(k - j) / (binomial(k, j) * kappa(k) * kappa(d - j))
}

/// Haar-distributed `k`-subspace of R^d from an orthonormalised Gaussian
/// frame; frames with a pivot below `1e-6` of their length are redrawn.
pub fn random_subspace<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Subspace {
    if k == d {
        return Subspace::full(d);
    }
    'draw: loop {
        let mut basis: Vec<Vec3> = Vec::with_capacity(k);
        for _ in 0..k {
            let g = gaussian_vector(d, rng);
            let mut r = g;
            for _ in 0..2 {
                for b in &basis {
                    r -= b * b.dot(&r);
                }
            }
            let n = r.norm();
            if n < 1e-6 * g.norm() {
                continue 'draw;
            }
            basis.push(r / n);
        }
        return Subspace::from_orthonormal(d, basis).expect("orthonormal frame");
    }
}

fn check_degree(p: &Polytope, j: usize) -> Result<()> {
    if j + 1 > p.ambient() {
        return Err(Error::DimensionMismatch(format!("flag measures need j < d = {}", p.ambient())));
    }
    Ok(())
}

/// Atoms `(u, λ_j(F) / 2)` of the order-`j` area measure of `K|L` inside
/// `L`, or `None` if the projection is not full-dimensional in `L`.
fn projected_atoms(p: &Polytope, l: &Subspace) -> Option<Vec<(Vec3, f64)>> {
    let q = project(p, l).ok()?;
    if !q.is_full() {
        return None;
    }
    let j = l.dim() - 1;
    Some(
        q.faces(j)
            .iter()
            .map(|f| {
                let n = f.normal_cone[0];
                let u: Vec3 = l.basis().iter().enumerate().map(|(i, b)| b * n[i]).sum();
                (u.normalize(), 0.5 * f.measure)
            })
            .collect(),
    )
}

/// Which subspace accompanies `u`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    /// `L^⊥ ∨ u`, for `ψ_j`.
    Join,
    /// `L ∩ u^⊥`, for `ψ_j^⊥`.
    Meet,
}

fn projection_mean(p: &Polytope, j: usize, f: &TestFunction, cfg: &MCConfig, side: Side) -> Result<(Estimate, u64)> {
    check_degree(p, j)?;
    let d = p.ambient();
    let c = flag_constant(d, j);
    let label = match side {
        Side::Join => "flag",
        Side::Meet => "flag-perp",
    };
    let st = run_multi(cfg, check_id(label), 2, |rng, out| {
        let l = random_subspace(d, j + 1, rng);
        let Some(atoms) = projected_atoms(p, &l) else {
            out[1] = 1.0;
            return;
        };
        let lperp = l.complement();
        out[0] = c * atoms
            .iter()
            .map(|(u, w)| {
                let space = match side {
                    Side::Join => lperp.join_vector(u),
                    Side::Meet => l.meet_orthogonal(u),
                };
                w * f.eval(&FlagElement { u: *u, space })
            })
            .sum::<f64>();
    });
    let degenerate = (st[1].mean * st[1].n as f64).round() as u64;
    Ok((st[0].scaled(1.0), degenerate))
}

/// `∫ f dψ_j(K)` with the number of degenerate projections.
pub fn flag_integral_counted(p: &Polytope, j: usize, f: &TestFunction, cfg: &MCConfig) -> Result<(Estimate, u64)> {
    projection_mean(p, j, f, cfg, Side::Join)
}

pub fn flag_integral(p: &Polytope, j: usize, f: &TestFunction, cfg: &MCConfig) -> Result<Estimate> {
    let (e, bad) = flag_integral_counted(p, j, f, cfg)?;
    if bad == cfg.sample_count && bad > 0 {
        return Err(Error::DegenerateProjection);
    }
    Ok(e)
}

/// `∫ f dψ_j^⊥(K)`.
pub fn flag_integral_perp(p: &Polytope, j: usize, f: &TestFunction, cfg: &MCConfig) -> Result<Estimate> {
    let (e, bad) = projection_mean(p, j, f, cfg, Side::Meet)?;
    if bad == cfg.sample_count && bad > 0 {
        return Err(Error::DegenerateProjection);
    }
    Ok(e)
}

/// The flag test function for one fixed `L ∈ G(d, j+1)`, seen as a weight
/// on normal cones: for a cone `p` spanning `F^⊥`, the line `L ∩ F^⊥` meets
/// `p` in `±u`, and the atom carries `λ_j(F|L) / λ_j(F)` times `f(u, L^⊥ ∨ u)`.
/// Averaging face sums of this weight over `L` reproduces `∫ f dψ_j`.
pub struct FlagWeightAt<'a> {
    pub f: &'a TestFunction,
    pub l: Subspace,
    lperp: Subspace,
    c: f64,
}

impl<'a> FlagWeightAt<'a> {
    pub fn new(f: &'a TestFunction, l: Subspace) -> Self {
        let d = l.ambient();
        let j = l.dim() - 1;
        FlagWeightAt { f, lperp: l.complement(), l, c: flag_constant(d, j) }
    }
}

impl ConeWeight for FlagWeightAt<'_> {
    fn ambient(&self) -> usize {
        self.l.ambient()
    }

    fn cone_weight(&self, j: usize, p: &SphericalPolytope) -> Result<f64> {
        let d = self.l.ambient();
        if j + 1 != self.l.dim() || p.span_dim() != d - j {
            return Ok(0.0);
        }
        let face_dir = p.span().complement();
        let mut line = self.l.clone();
        for b in face_dir.basis() {
            line = line.meet_orthogonal(b);
        }
        if line.dim() != 1 {
            return Ok(0.0);
        }
        let u = line.basis()[0];
        let jac = gram_volume(&face_dir.basis().iter().map(|b| self.l.project(b)).collect::<Vec<_>>());
        let mut total = 0.0;
        for s in [u, -u] {
            if p.contains(&s) {
                total += self.f.eval(&FlagElement { u: s, space: self.lperp.join_vector(&s) });
            }
        }
        Ok(self.c * 0.5 * jac * total)
    }

    fn volume_coefficient(&self) -> f64 {
        0.0
    }
}

/// `∫ f dψ_j(K)` through face sums of [`FlagWeightAt`].
pub fn flag_integral_faces(p: &Polytope, j: usize, f: &TestFunction, cfg: &MCConfig) -> Result<Estimate> {
    check_degree(p, j)?;
    let d = p.ambient();
    let st = run(cfg, check_id("flag-faces"), |rng| {
        let w = FlagWeightAt::new(f, random_subspace(d, j + 1, rng));
        face_sum(p, j, &w, &RegionSet::AllSpace).unwrap_or(f64::NAN)
    });
    if !st.mean.is_finite() {
        return Err(Error::QuadratureNotConverged { tol: crate::spherical::TAU_QUAD, estimate: f64::NAN });
    }
    Ok(st.scaled(1.0))
}

/// Flag integral against its exact marginal when `f` depends on `u` only,
/// otherwise against the independent face-sum route.
pub fn flag_check(p: &Polytope, j: usize, f: &TestFunction, cfg: &MCConfig) -> Result<VerificationReport> {
    timed(|| {
        let est = flag_integral(p, j, f, cfg)?;
        let name = format!("flag_j{j}");
        if f.depends_only_on_u() {
            let exact = area_measure_integral(p, j, |u| f.eval_u(u))?;
            Ok(VerificationReport::compare(&name, exact, &est, None, cfg.seed).with_note("against the area-measure marginal"))
        } else {
            let other = flag_integral_faces(p, j, f, &cfg.fork("faces"))?;
            let combined = Estimate { std_error: est.std_error.hypot(other.std_error), ..est };
            Ok(VerificationReport::compare(&name, other.value, &combined, None, cfg.seed).with_note("against the face-sum route"))
        }
    })
}

/// `∫ <u, x0> dψ_j(K) = 0`.
pub fn centeredness_check(p: &Polytope, j: usize, x0: &Vec3, cfg: &MCConfig) -> Result<VerificationReport> {
    timed(|| {
        let f = TestFunction::Linear { x0: x0.iter().copied().collect() };
        let est = flag_integral(p, j, &f, cfg)?;
        Ok(VerificationReport::compare(&format!("flag_centered_j{j}"), 0.0, &est, None, cfg.seed))
    })
}

/// `∫ f∘ρ^{-1} dψ_j^⊥ = ∫ f dψ_j` from independent samples.
pub fn rho_consistency_check(p: &Polytope, j: usize, f: &TestFunction, cfg: &MCConfig) -> Result<VerificationReport> {
    timed(|| {
        let a = flag_integral(p, j, f, cfg)?;
        let g = TestFunction::Perp { inner: Box::new(f.clone()) };
        let b = flag_integral_perp(p, j, &g, &cfg.fork("perp"))?;
        let combined = Estimate { std_error: a.std_error.hypot(b.std_error), ..b };
        Ok(VerificationReport::compare(&format!("flag_rho_j{j}"), a.value, &combined, None, cfg.seed))
    })
}

/// Model-side value of `∫ f dψ̄_j(Z)` for a stationary Boolean model.
pub fn flag_boolean_rhs(gm: &GrainModel, j: usize, f: &TestFunction, cfg: &MCConfig) -> Result<Estimate> {
    let d = gm.ambient();
    if j + 1 > d {
        return Err(Error::DimensionMismatch(format!("flag measures need j < d = {d}")));
    }
    let gamma = match gm.intensity {
        crate::boolean::Intensity::Stationary(g) => g,
        _ => return Err(Error::SpecInvalid("stationary intensity required".into())),
    };
    let damp = (-gamma * gm.mean_volume()).exp();
    let pairs: Vec<MixedSpec> = MixedSpec::all(d, j, 2).into_iter().filter(|s| !s.is_decomposable()).collect();
    let triples: Vec<MixedSpec> = if d >= j + 3 {
        MixedSpec::all(d, j, 3).into_iter().filter(|s| !s.is_decomposable()).collect()
    } else {
        Vec::new()
    };
    let inner = MCConfig { worker_count: 1, ..cfg.with_samples(1024) };
    let st = run(cfg, check_id("flag-boolean"), |rng| {
        let w = FlagWeightAt::new(f, random_subspace(d, j + 1, rng));
        let g: Vec<Polytope> = (0..3).map(|_| gm.sample_grain(rng)).collect();
        let mut v = gamma * face_sum(&g[0], j, &w, &RegionSet::AllSpace).unwrap_or(f64::NAN);
        for s in &pairs {
            v -= 0.5 * gamma * gamma * mixed_functional_2(&g[0], &g[1], s, &w).unwrap_or(f64::NAN);
        }
        for s in &triples {
            let m = mixed_functional_3([&g[0], &g[1], &g[2]], s, &w, &inner).map(|e| e.value).unwrap_or(f64::NAN);
            v += gamma.powi(3) / 6.0 * m;
        }
        v
    });
    if !st.mean.is_finite() {
        return Err(Error::QuadratureNotConverged { tol: crate::spherical::TAU_QUAD, estimate: f64::NAN });
    }
    Ok(st.scaled(damp))
}
