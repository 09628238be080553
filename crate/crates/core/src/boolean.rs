//! Boolean models with convex polytope grains.
//!
//! Samples are generated by plus-sampling on `W ⊕ R B^d`. The default density
//! estimator sums the local functional `Φ^(j)(Z, W)` over the nerve of the
//! grains, which is unbiased for stationary models. The estimator that clips
//! the union to the window is available for comparison.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::clip::intersect_lower;
use crate::error::{Error, Result};
use crate::functional::{face_sum, global_face_sum, AssociatedFunctional, ConeWeight, RegionSet};
use crate::geom::{kappa, Vec3};
use crate::kinematic::intrinsic_volume;
use crate::mc::{block_rng, check_id, par_map, random_rotation, run, Estimate, MCConfig, Stats};
use crate::polytope::Polytope;
use crate::report::{timed, VerificationReport};
use crate::translative::{mixed_functional_2, mixed_functional_3, mixed_measure_2, MixedSpec};

/// Intensity function of a non-stationary germ process.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Eta {
    Constant { gamma: f64 },
    /// `γ 1{<normal, x> >= offset}`.
    Halfspace { gamma: f64, normal: Vec<f64>, offset: f64 },
    /// `γ 1{x ∈ region}`.
    Region { gamma: f64, region: Polytope },
}

impl Eta {
    pub fn eval(&self, x: &Vec3) -> f64 {
        match self {
            Eta::Constant { gamma } => *gamma,
            Eta::Halfspace { gamma, normal, offset } => {
                let n = vec3(normal);
                if n.dot(x) >= *offset {
                    *gamma
                } else {
                    0.0
                }
            }
            Eta::Region { gamma, region } => {
                if region.contains(x, region.tolerance()) {
                    *gamma
                } else {
                    0.0
                }
            }
        }
    }

    pub fn gamma(&self) -> f64 {
        match self {
            Eta::Constant { gamma } | Eta::Halfspace { gamma, .. } | Eta::Region { gamma, .. } => *gamma,
        }
    }

    /// Points `y` with `η(z - y) = γ`; the function vanishes elsewhere.
    fn support_at(&self, z: &Vec3) -> RegionSet {
        match self {
            Eta::Constant { .. } => RegionSet::AllSpace,
            Eta::Halfspace { normal, offset, .. } => {
                let n = vec3(normal);
                RegionSet::Halfspace { normal: [n[0], n[1], n[2]], offset: n.dot(z) - offset }
            }
            Eta::Region { region, .. } => RegionSet::Polytope(region.reflect().translate(z)),
        }
    }
}

fn vec3(v: &[f64]) -> Vec3 {
    let mut out = Vec3::zeros();
    for (i, x) in v.iter().take(3).enumerate() {
        out[i] = *x;
    }
    out
}

#[derive(Clone, Debug)]
pub enum Intensity {
    Stationary(f64),
    Function(Eta),
}

/// A grain shape and its probability under the shape distribution.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Shape {
    pub polytope: Polytope,
    pub p: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "GrainModelFile", into = "GrainModelFile")]
pub struct GrainModel {
    shapes: Vec<Shape>,
    radii: Vec<f64>,
    pub isotropic: bool,
    pub intensity: Intensity,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct GrainModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eta: Option<Eta>,
    #[serde(default)]
    isotropic: bool,
    shapes: Vec<Shape>,
}

impl TryFrom<GrainModelFile> for GrainModel {
    type Error = Error;

    fn try_from(f: GrainModelFile) -> Result<Self> {
        let intensity = match (f.gamma, f.eta) {
            (Some(g), None) => Intensity::Stationary(g),
            (None, Some(e)) => Intensity::Function(e),
            _ => return Err(Error::SpecInvalid("give exactly one of `gamma` and `eta`".into())),
        };
        GrainModel::new(f.shapes, f.isotropic, intensity)
    }
}

impl From<GrainModel> for GrainModelFile {
    fn from(g: GrainModel) -> Self {
        let (gamma, eta) = match g.intensity {
            Intensity::Stationary(x) => (Some(x), None),
            Intensity::Function(e) => (None, Some(e)),
        };
        GrainModelFile { gamma, eta, isotropic: g.isotropic, shapes: g.shapes }
    }
}

impl GrainModel {
    /// Shapes are recentred so that their circumcentres sit at the origin.
    pub fn new(shapes: Vec<Shape>, isotropic: bool, intensity: Intensity) -> Result<Self> {
        if shapes.is_empty() {
            return Err(Error::SpecInvalid("no grain shapes".into()));
        }
        let total: f64 = shapes.iter().map(|s| s.p).sum();
        if shapes.iter().any(|s| s.p < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::SpecInvalid(format!("shape probabilities sum to {total}")));
        }
        let d = shapes[0].polytope.ambient();
        if shapes.iter().any(|s| s.polytope.ambient() != d || !s.polytope.is_full()) {
            return Err(Error::DimensionMismatch("grains must be full-dimensional in a common space".into()));
        }
        let gamma = match &intensity {
            Intensity::Stationary(g) => *g,
            Intensity::Function(e) => e.gamma(),
        };
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::SpecInvalid(format!("intensity {gamma}")));
        }
        let mut placed = Vec::with_capacity(shapes.len());
        let mut radii = Vec::with_capacity(shapes.len());
        for s in shapes {
            let (c, r) = enclosing_ball(s.polytope.vertices(), d);
            placed.push(Shape { polytope: s.polytope.translate(&-c), p: s.p });
            radii.push(r);
        }
        Ok(GrainModel { shapes: placed, radii, isotropic, intensity })
    }

    pub fn stationary(shape: Polytope, gamma: f64, isotropic: bool) -> Result<Self> {
        GrainModel::new(vec![Shape { polytope: shape, p: 1.0 }], isotropic, Intensity::Stationary(gamma))
    }

    pub fn ambient(&self) -> usize {
        self.shapes[0].polytope.ambient()
    }

    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    /// Largest circumradius.
    pub fn radius(&self) -> f64 {
        self.radii.iter().cloned().fold(0.0, f64::max)
    }

    fn gamma(&self) -> Result<f64> {
        match &self.intensity {
            Intensity::Stationary(g) => Ok(*g),
            Intensity::Function(Eta::Constant { gamma }) => Ok(*gamma),
            Intensity::Function(_) => Err(Error::SpecInvalid("stationary intensity required".into())),
        }
    }

    /// Mean grain volume.
    pub fn mean_volume(&self) -> f64 {
        self.shapes.iter().map(|s| s.p * s.polytope.volume()).sum()
    }

    pub fn sample_grain<R: Rng + ?Sized>(&self, rng: &mut R) -> Polytope {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut k = self.shapes.len() - 1;
        for (i, s) in self.shapes.iter().enumerate() {
            acc += s.p;
            if u < acc {
                k = i;
                break;
            }
        }
        let p = &self.shapes[k].polytope;
        if self.isotropic {
            p.rotate(&random_rotation(self.ambient(), rng))
        } else {
            p.clone()
        }
    }

    /// `E f(K_1, ..., K_k)` over independent grains. Exact as a finite sum
    /// when the grains are not rotated, by Monte Carlo otherwise.
    fn expect<F>(&self, k: usize, cfg: &MCConfig, label: &str, f: F) -> Result<Estimate>
    where
        F: Fn(&[Polytope]) -> Result<f64> + Sync,
    {
        if !self.isotropic {
            let n = self.shapes.len();
            let mut total = 0.0;
            for combo in 0..n.pow(k as u32) {
                let idx: Vec<usize> = (0..k).map(|i| combo / n.pow(i as u32) % n).collect();
                let w: f64 = idx.iter().map(|&i| self.shapes[i].p).product();
                if w == 0.0 {
                    continue;
                }
                let grains: Vec<Polytope> = idx.iter().map(|&i| self.shapes[i].polytope.clone()).collect();
                total += w * f(&grains)?;
            }
            return Ok(Estimate::exact(total));
        }
        let st = run(cfg, check_id(label), |rng| {
            let grains: Vec<Polytope> = (0..k).map(|_| self.sample_grain(rng)).collect();
            f(&grains).unwrap_or(f64::NAN)
        });
        if !st.mean.is_finite() {
            return Err(Error::QuadratureNotConverged { tol: crate::spherical::TAU_QUAD, estimate: f64::NAN });
        }
        Ok(st.scaled(1.0))
    }
}

/// Smallest ball containing the points (Welzl's algorithm).
pub fn enclosing_ball(points: &[Vec3], d: usize) -> (Vec3, f64) {
    fn ball(support: &[Vec3]) -> Option<(Vec3, f64)> {
        let p0 = *support.first()?;
        let a: Vec<Vec3> = support[1..].iter().map(|p| p - p0).collect();
        let n = a.len();
        if n == 0 {
            return Some((p0, 0.0));
        }
        let g = nalgebra::DMatrix::from_fn(n, n, |i, k| a[i].dot(&a[k]));
        let rhs = nalgebra::DVector::from_fn(n, |i, _| a[i].norm_squared() / 2.0);
        let lam = g.lu().solve(&rhs)?;
        let c = p0 + a.iter().zip(lam.iter()).map(|(v, l)| v * *l).sum::<Vec3>();
        Some((c, (c - p0).norm()))
    }
    fn welzl(pts: &[Vec3], support: &mut Vec<Vec3>, d: usize) -> (Vec3, f64) {
        if pts.is_empty() || support.len() == d + 1 {
            return ball(support).unwrap_or((Vec3::zeros(), 0.0));
        }
        let (p, rest) = pts.split_last().unwrap();
        let b = welzl(rest, support, d);
        if !support.is_empty() || !rest.is_empty() {
            if (p - b.0).norm() <= b.1 * (1.0 + 1e-12) + 1e-12 {
                return b;
            }
        }
        support.push(*p);
        let b = welzl(rest, support, d);
        support.pop();
        b
    }
    welzl(points, &mut Vec::new(), d)
}

/// `V_d(W ⊕ R B^d)` by the Steiner formula.
pub fn steiner_volume(w: &Polytope, r: f64) -> f64 {
    let d = w.ambient();
    (0..=d).map(|i| kappa(d - i) * r.powi((d - i) as i32) * intrinsic_volume(w, i)).sum()
}

/// One realisation restricted to the grains that can hit the window.
#[derive(Clone, Debug, Serialize)]
pub struct BooleanSample {
    pub window: Polytope,
    pub radius: f64,
    #[serde(serialize_with = "ser_points")]
    pub germs: Vec<Vec3>,
    pub grains: Vec<Polytope>,
}

fn ser_points<S: serde::Serializer>(pts: &[Vec3], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(pts.iter().map(|p| [p[0], p[1], p[2]]))
}

/// Realisation number `index` of the model under `seed`.
pub fn simulate_run(gm: &GrainModel, w: &Polytope, seed: u64, index: u64) -> Result<BooleanSample> {
    let gamma = gm.gamma()?;
    if w.ambient() != gm.ambient() || !w.is_full() {
        return Err(Error::DimensionMismatch("window must be full-dimensional in the grain space".into()));
    }
    let r = gm.radius();
    let mut rng: ChaCha8Rng = block_rng(seed, check_id("boolean-sim"), index);
    let mean = gamma * steiner_volume(w, r);
    let n = if mean > 0.0 { Poisson::new(mean).map_err(|e| Error::SpecInvalid(e.to_string()))?.sample(&mut rng) as usize } else { 0 };
    let (lo, hi) = w.bbox();
    let d = w.ambient();
    let mut germs = Vec::with_capacity(n);
    let mut grains = Vec::with_capacity(n);
    while germs.len() < n {
        let mut x = Vec3::zeros();
        for i in 0..d {
            x[i] = rng.random_range(lo[i] - r..=hi[i] + r);
        }
        if w.distance(&x) > r {
            continue;
        }
        grains.push(gm.sample_grain(&mut rng).translate(&x));
        germs.push(x);
    }
    Ok(BooleanSample { window: w.clone(), radius: r, germs, grains })
}

pub fn simulate(gm: &GrainModel, w: &Polytope, cfg: &MCConfig) -> Result<BooleanSample> {
    simulate_run(gm, w, cfg.seed, 0)
}

/// How the union is evaluated against the window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// `Φ^(j)(Z, W) / V_d(W)`.
    #[default]
    Local,
    /// `φ^(j)(Z ∩ W) / V_d(W)`.
    Clipped,
}

pub const DEFAULT_CLIQUE_CAP: usize = 10_000_000;

fn boxes_overlap(a: &(Vec3, Vec3), b: &(Vec3, Vec3), tol: f64) -> bool {
    (0..3).all(|i| a.0[i] <= b.1[i] + tol && b.0[i] <= a.1[i] + tol)
}

/// Visit every nonempty `K_I`, `I` a clique of the intersection graph, with
/// `|I|`. Sets whose bounding box misses `clip` are pruned.
fn nerve<F>(grains: &[Polytope], clip: Option<&(Vec3, Vec3)>, cap: usize, visit: F) -> Result<usize>
where
    F: FnMut(usize, &Polytope) -> Result<()>,
{
    let n = grains.len();
    let boxes: Vec<(Vec3, Vec3)> = grains.iter().map(|g| g.bbox()).collect();
    let tol = 1e-9 * boxes.iter().map(|b| b.0.abs().max().max(b.1.abs().max())).fold(1.0, f64::max);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| boxes[a].0[0].total_cmp(&boxes[b].0[0]).then(a.cmp(&b)));
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (pos, &a) in order.iter().enumerate() {
        for &b in &order[pos + 1..] {
            if boxes[b].0[0] > boxes[a].1[0] + tol {
                break;
            }
            if boxes_overlap(&boxes[a], &boxes[b], tol) {
                let (lo, hi) = (a.min(b), a.max(b));
                adj[lo].push(hi);
            }
        }
    }
    adj.iter_mut().for_each(|v| v.sort_unstable());

    struct Ctx<'a, F> {
        grains: &'a [Polytope],
        adj: &'a [Vec<usize>],
        clip: Option<&'a (Vec3, Vec3)>,
        tol: f64,
        cap: usize,
        count: usize,
        visit: F,
    }
    fn extend<F: FnMut(usize, &Polytope) -> Result<()>>(c: &mut Ctx<'_, F>, k: &Polytope, size: usize, cand: &[usize]) -> Result<()> {
        for (i, &g) in cand.iter().enumerate() {
            let Some(kk) = intersect_lower(k, &c.grains[g]) else { continue };
            if let Some(b) = c.clip {
                if !boxes_overlap(&kk.bbox(), b, c.tol) {
                    continue;
                }
            }
            c.count += 1;
            if c.count > c.cap {
                return Err(Error::CliqueBudgetExceeded(c.cap));
            }
            (c.visit)(size + 1, &kk)?;
            let next: Vec<usize> = cand[i + 1..].iter().copied().filter(|x| c.adj[g].binary_search(x).is_ok()).collect();
            if !next.is_empty() {
                extend(c, &kk, size + 1, &next)?;
            }
        }
        Ok(())
    }

    let mut c = Ctx { grains, adj: &adj, clip, tol, cap, count: 0, visit };
    for i in 0..n {
        if let Some(b) = clip {
            if !boxes_overlap(&boxes[i], b, tol) {
                continue;
            }
        }
        c.count += 1;
        if c.count > cap {
            return Err(Error::CliqueBudgetExceeded(cap));
        }
        (c.visit)(1, &grains[i])?;
        let cand = adj[i].clone();
        extend(&mut c, &grains[i], 1, &cand)?;
    }
    Ok(c.count)
}

/// `φ^(j)(P_1 ∪ ... ∪ P_n)` for each `j` in `js`, by inclusion–exclusion.
pub fn union_phi<W: ConeWeight + ?Sized>(polys: &[Polytope], js: &[usize], w: &W, cap: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; js.len()];
    nerve(polys, None, cap, |size, k| {
        let sign = if size % 2 == 1 { 1.0 } else { -1.0 };
        for (o, &j) in out.iter_mut().zip(js) {
            *o += sign * global_face_sum(k, j, w)?;
        }
        Ok(())
    })?;
    Ok(out)
}

/// `φ(P_1 ∪ ... ∪ P_n)` summed over all degrees.
pub fn union_phi_total(polys: &[Polytope], af: &AssociatedFunctional) -> Result<f64> {
    let js: Vec<usize> = (0..=af.d).collect();
    Ok(union_phi(polys, &js, af, DEFAULT_CLIQUE_CAP)?.iter().sum())
}

/// Empirical densities of degrees `js` from one sample.
pub fn empirical_densities<W: ConeWeight + ?Sized>(
    sample: &BooleanSample,
    js: &[usize],
    w: &W,
    estimator: Estimator,
    cap: usize,
) -> Result<Vec<f64>> {
    let win = &sample.window;
    let vol = win.volume();
    let wb = win.bbox();
    let mut out = vec![0.0; js.len()];
    match estimator {
        Estimator::Local => {
            let region = RegionSet::Polytope(win.clone());
            nerve(&sample.grains, Some(&wb), cap, |size, k| {
                let sign = if size % 2 == 1 { 1.0 } else { -1.0 };
                for (o, &j) in out.iter_mut().zip(js) {
                    *o += sign * face_sum(k, j, w, &region)?;
                }
                Ok(())
            })?;
        }
        Estimator::Clipped => {
            let clipped: Vec<Polytope> = sample
                .grains
                .iter()
                .filter(|g| boxes_overlap(&g.bbox(), &wb, 0.0))
                .filter_map(|g| intersect_lower(g, win))
                .collect();
            out = union_phi(&clipped, js, w, cap)?;
        }
    }
    Ok(out.into_iter().map(|x| x / vol).collect())
}

pub fn empirical_density<W: ConeWeight + ?Sized>(sample: &BooleanSample, j: usize, w: &W, estimator: Estimator) -> Result<f64> {
    Ok(empirical_densities(sample, &[j], w, estimator, DEFAULT_CLIQUE_CAP)?[0])
}

fn rotation_invariant(af: &AssociatedFunctional) -> bool {
    af.densities.iter().all(|h| matches!(h, crate::spherical::DensityFunction::Constant { .. }))
}

/// Genuinely mixed degree tuples of `s` bodies (all `m_i < d`).
fn inner_specs(d: usize, j: usize, s: usize) -> Vec<MixedSpec> {
    MixedSpec::all(d, j, s).into_iter().filter(|m| !m.is_decomposable()).collect()
}

fn factorial(n: usize) -> f64 {
    (1..=n).product::<usize>() as f64
}

/// Model-side density of `φ^(j)(Z)` for a stationary model. `cfg` sets
/// the number of grain tuples used for rotation averages.
pub fn theoretical_density(gm: &GrainModel, j: usize, af: &AssociatedFunctional, cfg: &MCConfig) -> Result<Estimate> {
    let gamma = gm.gamma()?;
    let d = gm.ambient();
    if j > d {
        return Err(Error::DimensionMismatch(format!("degree {j} above d = {d}")));
    }
    let vbar = gamma * gm.mean_volume();
    let damp = (-vbar).exp();
    if j == d {
        return Ok(Estimate::exact(af.c_d * (1.0 - damp)));
    }
    let single = if rotation_invariant(af) {
        let plain = GrainModel { isotropic: false, ..gm.clone() };
        plain.expect(1, cfg, "boolean-single", |g| crate::functional::phi_j(&g[0], j, af))?
    } else {
        gm.expect(1, cfg, &format!("boolean-single-{j}"), |g| crate::functional::phi_j(&g[0], j, af))?
    };
    let mut total = single.scale(gamma);
    for s in 2..=d - j {
        let coeff = (if s % 2 == 0 { 1.0 } else { -1.0 }) / factorial(s);
        for spec in inner_specs(d, j, s) {
            let label = format!("boolean-mixed-{:?}", spec.ms);
            let dens = if s == 2 {
                gm.expect(2, cfg, &label, |g| mixed_functional_2(&g[0], &g[1], &spec, af))?
            } else {
                let inner = MCConfig { worker_count: 1, ..cfg.with_samples(4096) };
                let outer = cfg.with_samples((cfg.sample_count / 10_000).max(8));
                let c = if gm.isotropic { &outer } else { &inner };
                gm.expect(3, c, &label, |g| Ok(mixed_functional_3([&g[0], &g[1], &g[2]], &spec, af, &inner)?.value))?
            };
            total = total.add(&dens.scale(-coeff * gamma.powi(s as i32)));
        }
    }
    Ok(total.scale(damp))
}

/// Model-side density at `z` for a germ intensity `η`.
pub fn nonstationary_density_rhs(
    gm: &GrainModel,
    j: usize,
    af: &AssociatedFunctional,
    z: &Vec3,
    cfg: &MCConfig,
) -> Result<Estimate> {
    let eta = match &gm.intensity {
        Intensity::Stationary(_) | Intensity::Function(Eta::Constant { .. }) => return theoretical_density(gm, j, af, cfg),
        Intensity::Function(e) => e,
    };
    let d = gm.ambient();
    if j > d {
        return Err(Error::DimensionMismatch(format!("degree {j} above d = {d}")));
    }
    let gamma = eta.gamma();
    let a = eta.support_at(z);
    let vol = AssociatedFunctional::intrinsic_volume(d, d);
    let vbar = gm.expect(1, cfg, "ns-volume", |g| face_sum(&g[0], d, &vol, &a))?.scale(gamma);
    let damp = (-vbar.value).exp();
    if j == d {
        let v = af.c_d * (1.0 - damp);
        return Ok(Estimate { value: v, std_error: af.c_d.abs() * damp * vbar.std_error, samples: vbar.samples });
    }
    let single = gm.expect(1, cfg, &format!("ns-single-{j}"), |g| face_sum(&g[0], j, af, &a))?;
    let mut total = single.scale(gamma);
    for s in 2..=d - j {
        if s > 2 {
            return Err(Error::Unsupported("three-grain terms of a non-stationary model".into()));
        }
        for spec in inner_specs(d, j, s) {
            let dens = gm.expect(2, cfg, &format!("ns-mixed-{:?}", spec.ms), |g| mixed_measure_2(&g[0], &g[1], &spec, af, &a, &a))?;
            total = total.add(&dens.scale(-0.5 * gamma * gamma));
        }
    }
    let out = total.scale(damp);
    let extra = out.value.abs() * vbar.std_error;
    Ok(Estimate { std_error: out.std_error.hypot(extra), ..out })
}

/// Options of the simulation checks.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BooleanOptions {
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default = "default_cap")]
    pub clique_cap: usize,
    /// Grain tuples for rotation-averaged mixed densities.
    #[serde(default = "default_pairs")]
    pub pair_samples: u64,
}

fn default_cap() -> usize {
    DEFAULT_CLIQUE_CAP
}

fn default_pairs() -> u64 {
    100_000
}

impl Default for BooleanOptions {
    fn default() -> Self {
        BooleanOptions { estimator: Estimator::Local, clique_cap: DEFAULT_CLIQUE_CAP, pair_samples: default_pairs() }
    }
}

/// Means over `runs` realisations: for each `j`, local and clipped.
fn run_densities(
    gm: &GrainModel,
    js: &[usize],
    af: &AssociatedFunctional,
    w: &Polytope,
    runs: usize,
    cfg: &MCConfig,
    opts: &BooleanOptions,
    both: bool,
) -> Result<Vec<(Stats, Stats)>> {
    let per_run = par_map(cfg.worker_count, runs, |r| -> Result<(Vec<f64>, Vec<f64>)> {
        let sample = simulate_run(gm, w, cfg.seed, r as u64)?;
        let first = empirical_densities(&sample, js, af, opts.estimator, opts.clique_cap)?;
        let other = if both {
            let est = match opts.estimator {
                Estimator::Local => Estimator::Clipped,
                Estimator::Clipped => Estimator::Local,
            };
            empirical_densities(&sample, js, af, est, opts.clique_cap)?
        } else {
            vec![0.0; js.len()]
        };
        Ok((first, other))
    });
    let mut out = vec![(Stats::default(), Stats::default()); js.len()];
    for r in per_run {
        let (a, b) = r?;
        for (i, o) in out.iter_mut().enumerate() {
            o.0.push(a[i]);
            o.1.push(a[i] - b[i]);
        }
    }
    Ok(out)
}

/// Simulated densities against the model-side formula, one report per `j`.
pub fn boolean_check_multi(
    gm: &GrainModel,
    js: &[usize],
    af: &AssociatedFunctional,
    w: &Polytope,
    runs: usize,
    cfg: &MCConfig,
    opts: &BooleanOptions,
) -> Result<Vec<VerificationReport>> {
    let start = std::time::Instant::now();
    let clipped = opts.estimator == Estimator::Clipped;
    let stats = run_densities(gm, js, af, w, runs, cfg, opts, clipped)?;
    let d = gm.ambient();
    let mut reports = Vec::with_capacity(js.len());
    for (&j, (st, diff)) in js.iter().zip(&stats) {
        let th = theoretical_density(gm, j, af, &cfg.fork("boolean-theory").with_samples(opts.pair_samples))?;
        let emp = st.scaled(1.0);
        let combined = Estimate { value: emp.value, std_error: emp.std_error.hypot(th.std_error), samples: runs as u64 };
        // Clipping bias: measured shift against the unbiased local estimator.
        let bias = if clipped { diff.mean.abs() + 3.0 * diff.std_error() } else { 0.0 };
        let r = VerificationReport::compare(&format!("boolean_d{d}_j{j}"), th.value, &combined, Some(bias), cfg.seed)
            .with_note(format!("{:?} estimator, {runs} runs, theory σ = {:.3e}", opts.estimator, th.std_error));
        reports.push(r);
    }
    let ms = start.elapsed().as_millis() as u64;
    reports.iter_mut().for_each(|r| r.runtime_ms = ms);
    Ok(reports)
}

pub fn boolean_check(
    gm: &GrainModel,
    j: usize,
    af: &AssociatedFunctional,
    w: &Polytope,
    runs: usize,
    cfg: &MCConfig,
) -> Result<VerificationReport> {
    Ok(boolean_check_multi(gm, &[j], af, w, runs, cfg, &BooleanOptions::default())?.remove(0))
}

/// Mean germ count over `runs` samples against `γ V_d(W ⊕ R B^d)`.
pub fn germ_count_check(gm: &GrainModel, w: &Polytope, runs: usize, cfg: &MCConfig) -> Result<VerificationReport> {
    timed(|| {
        let lambda = gm.gamma()? * steiner_volume(w, gm.radius());
        let counts = par_map(cfg.worker_count, runs, |r| simulate_run(gm, w, cfg.seed, r as u64).map(|s| s.germs.len()));
        let mut st = Stats::default();
        for c in counts {
            st.push(c? as f64);
        }
        let est = Estimate { value: st.mean, std_error: (lambda / runs as f64).sqrt(), samples: runs as u64 };
        Ok(VerificationReport::compare("boolean_germ_count", lambda, &est, None, cfg.seed))
    })
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut k, mut dmax) = (0usize, 0usize, 0.0f64);
    while i < a.len() && k < b.len() {
        let x = a[i].min(b[k]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while k < b.len() && b[k] <= x {
            k += 1;
        }
        dmax = dmax.max((i as f64 / n - k as f64 / m).abs());
    }
    let ne = (n * m / (n + m)).sqrt();
    let lam = (ne + 0.12 + 0.11 / ne) * dmax;
    // The alternating series only converges away from zero, where Q = 1.
    let mut p = 1.0;
    let mut acc = 0.0;
    for j in 1..=100 {
        let t = 2.0 * (if j % 2 == 1 { 1.0 } else { -1.0 }) * (-2.0 * (j * j) as f64 * lam * lam).exp();
        acc += t;
        if t.abs() < 1e-12 {
            p = acc;
            break;
        }
    }
    (dmax, p.clamp(0.0, 1.0))
}

/// Distribution of the empirical density under a shift of the window
/// (two-sample KS test at level 0.01).
pub fn stationarity_check(
    gm: &GrainModel,
    j: usize,
    af: &AssociatedFunctional,
    w: &Polytope,
    shift: &Vec3,
    runs: usize,
    cfg: &MCConfig,
) -> Result<VerificationReport> {
    timed(|| {
        let sample_set = |win: &Polytope, c: &MCConfig| -> Result<Vec<f64>> {
            par_map(c.worker_count, runs, |r| {
                let s = simulate_run(gm, win, c.seed, r as u64)?;
                empirical_density(&s, j, af, Estimator::Local)
            })
            .into_iter()
            .collect()
        };
        let a = sample_set(w, cfg)?;
        let b = sample_set(&w.translate(shift), &cfg.fork("shifted"))?;
        let (dstat, p) = ks_two_sample(&a, &b);
        let mut r = VerificationReport::predicate(
            &format!("boolean_stationarity_j{j}"),
            dstat,
            p > 0.01,
            cfg.seed,
            &format!("KS p-value {p:.4}"),
        );
        r.sample_count = runs as u64;
        Ok(r)
    })
}
