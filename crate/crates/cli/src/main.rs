use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use transgeom::approx::{approximate_simultaneous, certify, SupportBody};
use transgeom::boolean::{boolean_check_multi, BooleanOptions, Estimator, GrainModel};
use transgeom::flag::{flag_check, TestFunction};
use transgeom::functional::{phi_j, phi_total};
use transgeom::kinematic::{kinematic_check, kinematic_exact};
use transgeom::suite::{approx_report, run_suite, FunctionalSpec, ReportBundle};
use transgeom::translative::{translative_check_2_multi, translative_check_3};
use transgeom::{AssociatedFunctional, Error, MCConfig, Polytope, VerificationReport};

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

#[derive(Parser)]
#[command(name = "transgeom", version, about = "Translative and kinematic integral formulas for local functionals")]
struct Cli {
    /// Global seed (default 1; a suite config may set its own).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory for report files (and approximation polytopes).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

impl Cli {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Local,
    Clipped,
}

#[derive(Subcommand)]
enum Command {
    /// Canonical form of a polytope and its functional values.
    Eval {
        #[arg(long)]
        body: PathBuf,
        /// Preset name or functional JSON file.
        #[arg(long, default_value = "intrinsic")]
        functional: String,
        /// Only this degree; all degrees and the total otherwise.
        #[arg(long)]
        j: Option<usize>,
    },
    /// Translative integral against the mixed-functional sum (2 or 3 bodies).
    TranslativeCheck {
        #[arg(long, num_args = 2..=3, required = true)]
        bodies: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        j: Vec<usize>,
        #[arg(long, default_value = "intrinsic")]
        functional: String,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
    /// Kinematic integral over rigid motions.
    KinematicCheck {
        #[arg(long, num_args = 2, required = true)]
        bodies: Vec<PathBuf>,
        #[arg(long)]
        j: usize,
        #[arg(long, default_value = "intrinsic")]
        functional: String,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
    /// Simulated Boolean model densities against the model-side formula.
    BooleanSim {
        #[arg(long)]
        model: PathBuf,
        /// Window polytope file, or a side length L for [0, L]^d.
        #[arg(long)]
        window: String,
        #[arg(long, default_value_t = 200)]
        runs: usize,
        #[arg(long, num_args = 1.., required = true)]
        j: Vec<usize>,
        #[arg(long, default_value = "intrinsic")]
        functional: String,
        #[arg(long, value_enum, default_value_t = EstimatorArg::Local)]
        estimator: EstimatorArg,
        #[arg(long, default_value_t = 100_000)]
        pair_samples: u64,
    },
    /// Flag measure integral of a test function.
    FlagCheck {
        #[arg(long)]
        body: PathBuf,
        #[arg(long)]
        j: usize,
        #[arg(long)]
        test_function: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
    /// Simultaneous polytopal approximation of convex bodies.
    Approx {
        /// JSON array of support bodies.
        #[arg(long)]
        bodies: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 8192)]
        dirs: usize,
        #[arg(long, default_value_t = 1000)]
        test_dirs: usize,
    },
    /// Run a JSON suite configuration.
    Suite { config: PathBuf },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let invalid = |msg: String| Error::ConfigInvalid { path: path.to_path_buf(), msg };
    let text = std::fs::read_to_string(path).map_err(|e| invalid(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| invalid(e.to_string()))
}

fn functional(arg: &str, d: usize) -> anyhow::Result<AssociatedFunctional> {
    let path = Path::new(arg);
    let spec = if path.is_file() {
        FunctionalSpec::Explicit(read_json(path)?)
    } else {
        FunctionalSpec::Preset(arg.to_string())
    };
    Ok(spec.resolve(d)?)
}

fn window(arg: &str, d: usize) -> anyhow::Result<Polytope> {
    if let Ok(l) = arg.parse::<f64>() {
        if !(l > 0.0) {
            bail!("window side must be positive, got {l}");
        }
        return Ok(Polytope::cuboid(d, &vec![0.0; d], &vec![l; d])?);
    }
    Ok(Polytope::load(Path::new(arg))?)
}

fn write_out(out: &Option<PathBuf>, name: &str, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(name), text).with_context(|| format!("writing {}", dir.join(name).display()))?;
    }
    Ok(())
}

/// Print the bundle in the chosen format, write both formats to `--out`.
fn emit(cli: &Cli, reports: Vec<VerificationReport>) -> anyhow::Result<bool> {
    let bundle = ReportBundle::new(cli.seed(), reports);
    if let Some(dir) = &cli.out {
        bundle.write(dir)?;
    }
    match cli.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&bundle)?),
        Format::Csv => print!("{}", bundle.to_csv()),
    }
    Ok(bundle.pass)
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let cfg = MCConfig::new(0, cli.seed()).with_workers(cli.workers.unwrap_or(1).max(1));
    match &cli.command {
        Command::Eval { body, functional: f, j } => {
            let p = Polytope::load(body)?;
            let af = functional(f, p.ambient())?;
            let degrees: Vec<usize> = match j {
                Some(j) => vec![*j],
                None => (0..=p.ambient()).collect(),
            };
            let values = degrees.iter().map(|&j| Ok((j, phi_j(&p, j, &af)?))).collect::<Result<Vec<_>, Error>>()?;
            match cli.format {
                Format::Json => {
                    let mut v = json!({
                        "polytope": p.canonical(),
                        "values": values.iter().map(|(j, x)| json!({"j": j, "value": x})).collect::<Vec<_>>(),
                    });
                    if j.is_none() {
                        v["total"] = json!(phi_total(&p, &af)?);
                    }
                    let text = serde_json::to_string_pretty(&v)?;
                    write_out(&cli.out, "eval.json", &(text.clone() + "\n"))?;
                    println!("{text}");
                }
                Format::Csv => {
                    let mut text = String::from("j,value\n");
                    for (j, x) in &values {
                        text.push_str(&format!("{j},{x}\n"));
                    }
                    write_out(&cli.out, "eval.csv", &text)?;
                    print!("{text}");
                }
            }
            Ok(true)
        }
        Command::TranslativeCheck { bodies, j, functional: f, samples } => {
            let bs = bodies.iter().map(|b| Polytope::load(b)).collect::<Result<Vec<_>, _>>()?;
            let af = functional(f, bs[0].ambient())?;
            let c = cfg.with_samples(*samples);
            let reports = if bs.len() == 2 {
                translative_check_2_multi(&bs[0], &bs[1], j, &af, &c)?
            } else {
                j.iter().map(|&j| translative_check_3([&bs[0], &bs[1], &bs[2]], j, &af, &c)).collect::<Result<_, _>>()?
            };
            emit(cli, reports)
        }
        Command::KinematicCheck { bodies, j, functional: f, samples } => {
            let (k, m) = (Polytope::load(&bodies[0])?, Polytope::load(&bodies[1])?);
            let af = functional(f, k.ambient())?;
            let exact = kinematic_exact(&k, &m, *j, &af);
            emit(cli, vec![kinematic_check(&k, &m, *j, &af, &cfg.with_samples(*samples), exact)?])
        }
        Command::BooleanSim { model, window: w, runs, j, functional: f, estimator, pair_samples } => {
            let gm: GrainModel = read_json(model)?;
            let d = gm.ambient();
            let w = window(w, d)?;
            let af = functional(f, d)?;
            let estimator = match estimator {
                EstimatorArg::Local => Estimator::Local,
                EstimatorArg::Clipped => Estimator::Clipped,
            };
            let opts = BooleanOptions { estimator, pair_samples: *pair_samples, ..Default::default() };
            let reports = boolean_check_multi(&gm, j, &af, &w, *runs, &cfg, &opts)?;
            if let Format::Csv = cli.format {
                return emit(cli, reports);
            }
            let rows: Vec<_> = j
                .iter()
                .zip(&reports)
                .map(|(j, r)| {
                    json!({
                        "j": j,
                        "empirical": r.estimate,
                        "theoretical": r.exact_value,
                        "sigma": r.std_error,
                        "bias_bound": r.bias_bound,
                        "z": r.z_score,
                        "pass": r.pass,
                        "report": r,
                    })
                })
                .collect();
            let pass = reports.iter().all(|r| r.pass);
            let text = serde_json::to_string_pretty(&json!({"schema": 1, "seed": cli.seed(), "pass": pass, "densities": rows}))?;
            if let Some(dir) = &cli.out {
                ReportBundle::new(cli.seed(), reports).write(dir)?;
                std::fs::write(dir.join("boolean.json"), text.clone() + "\n")?;
            }
            println!("{text}");
            Ok(pass)
        }
        Command::FlagCheck { body, j, test_function, samples } => {
            let p = Polytope::load(body)?;
            let f: TestFunction = read_json(test_function)?;
            emit(cli, vec![flag_check(&p, *j, &f, &cfg.with_samples(*samples))?])
        }
        Command::Approx { bodies, eps, dirs, test_dirs } => {
            let bs: Vec<SupportBody> = read_json(bodies)?;
            if let Some(dir) = &cli.out {
                let a = approximate_simultaneous(&bs, *eps, *dirs)?;
                std::fs::create_dir_all(dir)?;
                for (i, p) in a.pieces.iter().enumerate() {
                    std::fs::write(dir.join(format!("piece_{i}.json")), serde_json::to_string_pretty(p)? + "\n")?;
                }
                std::fs::write(dir.join("union.json"), serde_json::to_string_pretty(&a.union)? + "\n")?;
                let cert = certify(&bs, &a, *test_dirs);
                std::fs::write(dir.join("certificate.json"), serde_json::to_string_pretty(&cert)? + "\n")?;
            }
            emit(cli, vec![approx_report(&bs, *eps, *dirs, *test_dirs, cli.seed())?])
        }
        Command::Suite { config } => {
            let bundle = run_suite(config, cli.seed, cli.workers)?;
            if let Some(dir) = &cli.out {
                bundle.write(dir)?;
            }
            match cli.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&bundle)?),
                Format::Csv => print!("{}", bundle.to_csv()),
            }
            Ok(bundle.pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
