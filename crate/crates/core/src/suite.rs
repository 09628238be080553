//! JSON-configured check suites and report bundles.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::approx::{approximate_simultaneous, certify, SupportBody};
use crate::boolean::{boolean_check_multi, BooleanOptions, Estimator, GrainModel};
use crate::error::{Error, Result};
use crate::flag::{flag_check, TestFunction};
use crate::functional::{phi_j, phi_total, AssociatedFunctional};
use crate::kinematic::{factorization_check, kinematic_check, kinematic_exact};
use crate::mc::{par_map, Estimate, MCConfig};
use crate::polytope::Polytope;
use crate::report::{timed, VerificationReport, SCHEMA};
use crate::translative::{translative_check_2_multi, translative_check_3, MixedSpec};

/// A value given inline or as a path relative to the configuration file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Path(String),
    Inline(T),
}

impl<T: DeserializeOwned + Clone> Source<T> {
    pub fn resolve(&self, base: &Path) -> Result<T> {
        match self {
            Source::Inline(t) => Ok(t.clone()),
            Source::Path(p) => {
                let path = base.join(p);
                let invalid = |msg: String| Error::ConfigInvalid { path: path.clone(), msg };
                let text = std::fs::read_to_string(&path).map_err(|e| invalid(e.to_string()))?;
                serde_json::from_str(&text).map_err(|e| invalid(e.to_string()))
            }
        }
    }
}

/// A functional given by preset name or by its densities.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionalSpec {
    Preset(String),
    Explicit(AssociatedFunctional),
}

impl Default for FunctionalSpec {
    fn default() -> Self {
        FunctionalSpec::Preset("intrinsic".into())
    }
}

impl FunctionalSpec {
    /// The functional in R^d. Explicit functionals without `d` take it from
    /// the number of densities.
    pub fn resolve(&self, d: usize) -> Result<AssociatedFunctional> {
        match self {
            FunctionalSpec::Preset(name) => AssociatedFunctional::preset(name, d),
            FunctionalSpec::Explicit(af) => {
                let mut af = af.clone();
                if af.d == 0 {
                    af.d = af.densities.len();
                }
                if af.d != d || af.densities.len() != d {
                    return Err(Error::DimensionMismatch(format!("functional for d = {} used in R^{d}", af.d)));
                }
                Ok(af)
            }
        }
    }
}

fn default_samples() -> u64 {
    100_000
}

fn default_runs() -> usize {
    200
}

fn default_test_dirs() -> usize {
    1000
}

fn default_dirs() -> usize {
    8192
}

/// One entry of a suite configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheckSpec {
    /// `φ^(j)(P)` (or `φ(P)` without `j`) against a known value.
    Identity {
        #[serde(default)]
        name: Option<String>,
        body: Source<Polytope>,
        #[serde(default)]
        functional: FunctionalSpec,
        #[serde(default)]
        j: Option<usize>,
        expected: f64,
    },
    Translative {
        bodies: Vec<Source<Polytope>>,
        js: Vec<usize>,
        #[serde(default)]
        functional: FunctionalSpec,
        #[serde(default = "default_samples")]
        samples: u64,
    },
    Kinematic {
        bodies: Vec<Source<Polytope>>,
        j: usize,
        #[serde(default)]
        functional: FunctionalSpec,
        #[serde(default = "default_samples")]
        samples: u64,
        /// Compare with the exact value when the density is constant.
        #[serde(default = "yes")]
        exact: bool,
    },
    Factorization {
        body: Source<Polytope>,
        m1: Source<Polytope>,
        m2: Source<Polytope>,
        j: usize,
        m: usize,
        #[serde(default)]
        functional: FunctionalSpec,
        #[serde(default = "default_samples")]
        samples: u64,
    },
    Boolean {
        model: Source<GrainModel>,
        window: Source<Polytope>,
        js: Vec<usize>,
        #[serde(default)]
        functional: FunctionalSpec,
        #[serde(default = "default_runs")]
        runs: usize,
        #[serde(default)]
        estimator: Estimator,
        #[serde(default = "default_samples")]
        pair_samples: u64,
    },
    Flag {
        body: Source<Polytope>,
        j: usize,
        test_function: Source<TestFunction>,
        #[serde(default = "default_samples")]
        samples: u64,
    },
    Approx {
        bodies: Source<Vec<SupportBody>>,
        eps: f64,
        #[serde(default = "default_dirs")]
        dirs: usize,
        #[serde(default = "default_test_dirs")]
        test_dirs: usize,
    },
}

fn yes() -> bool {
    true
}

fn one() -> usize {
    1
}

fn seed_default() -> u64 {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteConfig {
    #[serde(default = "seed_default")]
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
}

impl SuiteConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let invalid = |msg: String| Error::ConfigInvalid { path: path.to_path_buf(), msg };
        let text = std::fs::read_to_string(path).map_err(|e| invalid(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| invalid(e.to_string()))
    }
}

impl CheckSpec {
    pub fn label(&self) -> &'static str {
        match self {
            CheckSpec::Identity { .. } => "identity",
            CheckSpec::Translative { .. } => "translative",
            CheckSpec::Kinematic { .. } => "kinematic",
            CheckSpec::Factorization { .. } => "factorization",
            CheckSpec::Boolean { .. } => "boolean",
            CheckSpec::Flag { .. } => "flag",
            CheckSpec::Approx { .. } => "approx",
        }
    }

    /// Run the check. Inputs that cannot be loaded are errors; everything
    /// else ends up in the returned reports.
    pub fn run(&self, base: &Path, cfg: &MCConfig) -> Result<Vec<VerificationReport>> {
        match self {
            CheckSpec::Identity { name, body, functional, j, expected } => {
                let p = body.resolve(base)?;
                let af = functional.resolve(p.ambient())?;
                let rep = timed(|| {
                    let v = match j {
                        Some(j) => phi_j(&p, *j, &af)?,
                        None => phi_total(&p, &af)?,
                    };
                    let label = name.clone().unwrap_or_else(|| match j {
                        Some(j) => format!("identity_j{j}"),
                        None => "identity_total".into(),
                    });
                    Ok(VerificationReport::compare(&label, *expected, &Estimate::exact(v), None, cfg.seed))
                })?;
                Ok(vec![rep])
            }
            CheckSpec::Translative { bodies, js, functional, samples } => {
                let bs = bodies.iter().map(|b| b.resolve(base)).collect::<Result<Vec<_>>>()?;
                let af = functional.resolve(bs[0].ambient())?;
                let c = cfg.with_samples(*samples);
                match bs.len() {
                    2 => translative_check_2_multi(&bs[0], &bs[1], js, &af, &c),
                    3 => js.iter().map(|&j| translative_check_3([&bs[0], &bs[1], &bs[2]], j, &af, &c)).collect(),
                    n => Err(Error::SpecInvalid(format!("translative checks take 2 or 3 bodies, got {n}"))),
                }
            }
            CheckSpec::Kinematic { bodies, j, functional, samples, exact } => {
                let bs = bodies.iter().map(|b| b.resolve(base)).collect::<Result<Vec<_>>>()?;
                if bs.len() != 2 {
                    return Err(Error::SpecInvalid("kinematic checks take 2 bodies".into()));
                }
                let af = functional.resolve(bs[0].ambient())?;
                let value = if *exact { kinematic_exact(&bs[0], &bs[1], *j, &af) } else { None };
                Ok(vec![kinematic_check(&bs[0], &bs[1], *j, &af, &cfg.with_samples(*samples), value)?])
            }
            CheckSpec::Factorization { body, m1, m2, j, m, functional, samples } => {
                let k = body.resolve(base)?;
                let (a, b) = (m1.resolve(base)?, m2.resolve(base)?);
                let d = k.ambient();
                let af = functional.resolve(d)?;
                let spec = MixedSpec::new(d, *j, vec![*m, d + j - m])?;
                Ok(vec![factorization_check(&k, &a, &b, &spec, &af, &cfg.with_samples(*samples))?])
            }
            CheckSpec::Boolean { model, window, js, functional, runs, estimator, pair_samples } => {
                let gm = model.resolve(base)?;
                let w = window.resolve(base)?;
                let af = functional.resolve(gm.ambient())?;
                let opts = BooleanOptions { estimator: *estimator, pair_samples: *pair_samples, ..Default::default() };
                boolean_check_multi(&gm, js, &af, &w, *runs, cfg, &opts)
            }
            CheckSpec::Flag { body, j, test_function, samples } => {
                let p = body.resolve(base)?;
                let f = test_function.resolve(base)?;
                Ok(vec![flag_check(&p, *j, &f, &cfg.with_samples(*samples))?])
            }
            CheckSpec::Approx { bodies, eps, dirs, test_dirs } => {
                let bs = bodies.resolve(base)?;
                Ok(vec![approx_report(&bs, *eps, *dirs, *test_dirs, cfg.seed)?])
            }
        }
    }
}

/// Certification of one simultaneous approximation as a report.
pub fn approx_report(bodies: &[SupportBody], eps: f64, dirs: usize, test_dirs: usize, seed: u64) -> Result<VerificationReport> {
    timed(|| {
        let a = approximate_simultaneous(bodies, eps, dirs)?;
        let c = certify(bodies, &a, test_dirs);
        let tol = 1e-9 * (1.0 + bodies.iter().map(|b| b.circumradius_bound()).fold(0.0, f64::max));
        let pass = c.sandwich_ok && c.union_ok && c.max_q_excess <= tol;
        let mut r = VerificationReport::predicate(
            &format!("approx_m{}_eps{eps}", bodies.len()),
            c.max_outer_excess,
            pass,
            seed,
            &format!(
                "{} directions; inner violation {:.3e}, outer excess {:.3e}, Q_i excess {:.3e}, union {}",
                a.dirs, c.max_inner_violation, c.max_outer_excess, c.max_q_excess, c.union_ok
            ),
        );
        r.sample_count = test_dirs as u64;
        Ok(r)
    })
}

/// All reports of one suite run.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ReportBundle {
    pub schema: u32,
    pub seed: u64,
    pub pass: bool,
    pub reports: Vec<VerificationReport>,
}

impl ReportBundle {
    pub fn new(seed: u64, reports: Vec<VerificationReport>) -> Self {
        ReportBundle { schema: SCHEMA, seed, pass: reports.iter().all(|r| r.pass), reports }
    }

    pub fn to_csv(&self) -> String {
        to_csv(&self.reports)
    }

    /// Write `report.json` and `report.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)? + "\n")?;
        std::fs::write(dir.join("report.csv"), self.to_csv())?;
        Ok(())
    }

    pub fn without_runtime(&self) -> Self {
        ReportBundle { reports: self.reports.iter().map(|r| r.without_runtime()).collect(), ..self.clone() }
    }
}

pub fn to_csv(reports: &[VerificationReport]) -> String {
    let mut s = String::from(VerificationReport::csv_header());
    s.push('\n');
    for r in reports {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// Failed report standing in for a check that raised an error.
fn failure(label: &str, seed: u64, e: &Error) -> VerificationReport {
    VerificationReport::predicate(label, f64::NAN, false, seed, &format!("error: {e}"))
}

/// Run every check of a configuration concurrently. Each check draws from
/// its own seed derived from the suite seed and its position.
pub fn run_config(config: &SuiteConfig, base: &Path) -> ReportBundle {
    let n = config.checks.len();
    let inner_workers = if n > 1 { 1 } else { config.workers };
    let results = par_map(config.workers, n, |i| {
        let check = &config.checks[i];
        let cfg = MCConfig::new(0, config.seed).with_workers(inner_workers).fork(&format!("{i}:{}", check.label()));
        check.run(base, &cfg).unwrap_or_else(|e| vec![failure(check.label(), cfg.seed, &e)])
    });
    ReportBundle::new(config.seed, results.into_iter().flatten().collect())
}

/// Load a configuration and run it; seed and workers may be overridden.
pub fn run_suite(path: &Path, seed: Option<u64>, workers: Option<usize>) -> Result<ReportBundle> {
    let mut config = SuiteConfig::load(path)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(w) = workers {
        config.workers = w.max(1);
    }
    let base: PathBuf = path.parent().map(Path::to_path_buf).unwrap_or_default();
    // Inputs are loaded up front so that unreadable files fail the run.
    for check in &config.checks {
        validate(check, &base)?;
    }
    Ok(run_config(&config, &base))
}

fn validate(check: &CheckSpec, base: &Path) -> Result<()> {
    let load_all = |v: &[Source<Polytope>]| v.iter().try_for_each(|b| b.resolve(base).map(|_| ()));
    match check {
        CheckSpec::Identity { body, .. } => body.resolve(base).map(|_| ()),
        CheckSpec::Translative { bodies, .. } | CheckSpec::Kinematic { bodies, .. } => load_all(bodies),
        CheckSpec::Factorization { body, m1, m2, .. } => load_all(&[body.clone(), m1.clone(), m2.clone()]),
        CheckSpec::Boolean { model, window, .. } => {
            model.resolve(base)?;
            window.resolve(base).map(|_| ())
        }
        CheckSpec::Flag { body, test_function, .. } => {
            body.resolve(base)?;
            test_function.resolve(base).map(|_| ())
        }
        CheckSpec::Approx { bodies, .. } => bodies.resolve(base).map(|_| ()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_suite_passes() {
        let cfg: SuiteConfig = serde_json::from_str(r#"{"checks": []}"#).unwrap();
        let b = run_config(&cfg, Path::new("."));
        assert!(b.pass && b.reports.is_empty());
    }

    #[test]
    fn inline_checks() {
        let txt = r#"{"seed": 3, "checks": [
            {"kind": "identity", "body": {"dim": 2, "vertices": [[0,0],[1,0],[1,1],[0,1]]}, "functional": "v1", "j": 1, "expected": 2.0},
            {"kind": "identity", "body": {"dim": 2, "vertices": [[0,0],[1,0],[1,1],[0,1]]},
             "functional": {"c_d": 1.0, "densities": [{"kind": "constant", "c": 1.0}, {"kind": "constant", "c": 1.0}]}, "expected": 4.0},
            {"kind": "translative", "bodies": [{"dim": 2, "vertices": [[0,0],[1,0],[1,1],[0,1]]}, {"dim": 2, "vertices": [[0,0],[1,0],[1,1],[0,1]]}],
             "js": [0], "functional": "euler", "samples": 5000}
        ]}"#;
        let cfg: SuiteConfig = serde_json::from_str(txt).unwrap();
        let b = run_config(&cfg, Path::new("."));
        assert_eq!(b.reports.len(), 3);
        assert!(b.pass, "{:?}", b.reports);
        let again = run_config(&cfg, Path::new("."));
        assert_eq!(serde_json::to_string(&b.without_runtime()).unwrap(), serde_json::to_string(&again.without_runtime()).unwrap());
    }

    #[test]
    fn missing_file_names_path() {
        let txt = r#"{"checks": [{"kind": "identity", "body": "nowhere.json", "expected": 1.0}]}"#;
        let dir = std::env::temp_dir().join("transgeom-suite-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("suite.json");
        std::fs::write(&path, txt).unwrap();
        match run_suite(&path, None, None) {
            Err(Error::ConfigInvalid { path, .. }) => assert!(path.ends_with("nowhere.json")),
            other => panic!("{other:?}"),
        }
    }
}
