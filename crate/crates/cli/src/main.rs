use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use resilimat::bounds::BoundInputs;
use resilimat::exact_oracles::{
    greedy_nonresilient, optimal_resilient, random_feasible, worst_case_removal, OracleOptions,
};
use resilimat::harness::{run_experiment, write_csv, ExperimentConfig};
use resilimat::lqg::{build_landing_scenario, ScenarioConfig};
use resilimat::matroid::{verify_axioms_of, IndependenceOracle};
use resilimat::setfn::{curvature_kappa, total_curvature_exact, EXHAUSTIVE_LIMIT};
use resilimat::{solve_resilient, Error, Matroid, MatroidDescriptor, ObjectiveDescriptor, SetFunction, Subset};

#[derive(Parser)]
#[command(name = "resilimat", version, about = "Resilient set-function maximization over matroids")]
struct Cli {
    /// Base RNG seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Instance {
    /// Objective descriptor (JSON file).
    #[arg(long)]
    objective: PathBuf,
    /// Selection matroid descriptor (JSON file).
    #[arg(long)]
    matroid: PathBuf,
    /// Removal matroid descriptor (JSON file).
    #[arg(long = "removal-matroid")]
    removal_matroid: Option<PathBuf>,
    /// Enumeration limit for the brute-force oracles.
    #[arg(long)]
    guard: Option<u128>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleMode {
    WorstRemoval,
    Optimal,
    Greedy,
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Run the resilient solver.
    Solve {
        #[command(flatten)]
        instance: Instance,
        /// Write the result JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also compute the worst-case value and the ratio to the optimum by enumeration.
        #[arg(long)]
        certify: bool,
    },
    /// Run a brute-force or baseline oracle.
    Oracle {
        #[arg(long, value_enum)]
        mode: OracleMode,
        #[command(flatten)]
        instance: Instance,
        /// Comma-separated selection attacked in worst-removal mode.
        #[arg(long)]
        selection: Option<String>,
    },
    /// Print the approximation bounds.
    Bounds {
        #[arg(long)]
        alpha: usize,
        #[arg(long)]
        beta: usize,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        ctotal: Option<f64>,
    },
    /// Curvature and, for small ground sets, total curvature of an objective.
    Curvature {
        #[arg(long)]
        objective: PathBuf,
        #[arg(long, default_value_t = EXHAUSTIVE_LIMIT)]
        limit: usize,
    },
    /// Exhaustively verify the matroid axioms of a descriptor.
    CheckMatroid {
        #[arg(long)]
        matroid: PathBuf,
    },
    /// Run the Monte Carlo sensor-selection experiment.
    Experiment {
        /// Experiment config (JSON). Defaults apply to missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV output path; stdout when absent.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Summary JSON output path.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Export a seeded landing scenario as an objective descriptor.
    Scenario {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "T", default_value_t = 20)]
        horizon: usize,
        #[arg(long, default_value_t = 12)]
        n_ground: usize,
    },
}

/// Error that maps to a specific exit status.
#[derive(Debug)]
struct Malformed(String);

impl std::fmt::Display for Malformed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Malformed {}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| Malformed(format!("{}: {e}", path.display())).into())
}

struct Loaded {
    f: SetFunction,
    selection: Matroid,
    removal: Matroid,
    options: OracleOptions,
}

fn load(instance: &Instance) -> anyhow::Result<Loaded> {
    let objective: ObjectiveDescriptor = read_json(&instance.objective)?;
    let f = objective.build()?;
    let selection = read_json::<MatroidDescriptor>(&instance.matroid)?.build()?;
    let removal = match &instance.removal_matroid {
        Some(p) => read_json::<MatroidDescriptor>(p)?.build()?,
        None => Matroid::uniform(f.ground_size(), 0),
    };
    let mut options = OracleOptions::from_env();
    if let Some(g) = instance.guard {
        options.removal_limit = g;
        options.pair_limit = g;
    }
    Ok(Loaded {
        f,
        selection,
        removal,
        options,
    })
}

fn ids(s: &Subset) -> Vec<usize> {
    s.to_vec()
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Solve {
            instance,
            out,
            certify,
        } => {
            let l = load(&instance)?;
            let result = solve_resilient(&l.f, &l.selection, &l.removal)?;
            let mut doc = json!({
                "a1": ids(&result.a1),
                "a2": ids(&result.a2),
                "a": ids(&result.a),
                "eval_count": result.eval_count,
                "warnings": result.warnings,
            });
            if certify {
                let f = l.f.clone().memoized();
                let worst = worst_case_removal(&f, &result.a, &l.removal, &l.options)?;
                let best = optimal_resilient(&f, &l.selection, &l.removal, &l.options)?;
                let ratio = if best.value == 0.0 { 1.0 } else { worst.value / best.value };
                doc["certificate"] = json!({
                    "worst_case_removal": ids(&worst.argset),
                    "worst_case_value": worst.value,
                    "optimal_value": best.value,
                    "optimal_selection": ids(&best.argset),
                    "ratio": ratio,
                });
            }
            emit(&doc, out.as_deref())
        }
        Command::Oracle {
            mode,
            instance,
            selection,
        } => {
            let l = load(&instance)?;
            let doc = match mode {
                OracleMode::WorstRemoval => {
                    let Some(sel) = selection else {
                        bail!(Malformed("--selection is required in worst-removal mode".into()));
                    };
                    let parsed: Vec<usize> = sel
                        .split(',')
                        .filter(|t| !t.trim().is_empty())
                        .map(|t| t.trim().parse())
                        .collect::<Result<_, _>>()
                        .map_err(|e| Malformed(format!("--selection: {e}")))?;
                    let a = Subset::from_ids(l.f.ground_size(), parsed)?;
                    serde_json::to_value(worst_case_removal(&l.f, &a, &l.removal, &l.options)?)?
                }
                OracleMode::Optimal => {
                    let f = l.f.clone().memoized();
                    serde_json::to_value(optimal_resilient(&f, &l.selection, &l.removal, &l.options)?)?
                }
                OracleMode::Greedy => {
                    let s = greedy_nonresilient(&l.f, &l.selection)?;
                    json!({ "argset": ids(&s), "value": l.f.evaluate(&s)?, "eval_count": l.f.eval_count() })
                }
                OracleMode::Random => {
                    let s = random_feasible(&l.selection, cli.seed);
                    json!({ "argset": ids(&s), "value": l.f.evaluate(&s)?, "seed": cli.seed })
                }
            };
            emit(&doc, None)
        }
        Command::Bounds {
            alpha,
            beta,
            kappa,
            ctotal,
        } => {
            let report = BoundInputs {
                alpha,
                beta,
                kappa,
                c_total: ctotal,
            }
            .report()?;
            if cli.json {
                return emit(&report, None);
            }
            println!("h(alpha={alpha}, beta={beta}) = {:.6}", report.h);
            if let Some(b) = report.submodular_uniform {
                println!("submodular, uniform matroid: {b:.6}");
            }
            if let Some(b) = report.submodular_matroid {
                println!("submodular, any matroid:     {b:.6}");
            }
            if let Some(b) = report.monotone {
                println!("monotone (total curvature):  {b:.6}");
            }
            Ok(())
        }
        Command::Curvature { objective, limit } => {
            let f = read_json::<ObjectiveDescriptor>(&objective)?.build()?;
            let kappa = curvature_kappa(&f);
            let total = if f.ground_size() <= limit {
                Some(total_curvature_exact(&f, limit)?)
            } else {
                None
            };
            let doc = json!({
                "kappa": kappa.as_ref().ok().map(|k| k.value),
                "kappa_witness": kappa.as_ref().ok().and_then(|k| k.witness),
                "kappa_error": kappa.as_ref().err().map(ToString::to_string),
                "c_total": total.as_ref().map(|t| t.value),
                "mode": if total.is_some() { "exact" } else { "unavailable" },
            });
            if cli.json {
                return emit(&doc, None);
            }
            match &kappa {
                Ok(k) => println!("kappa   = {:.12}", k.value),
                Err(e) => println!("kappa   = undefined ({e})"),
            }
            match total {
                Some(t) => println!("c_total = {:.12}", t.value),
                None => println!("c_total = unavailable (ground set above {limit})"),
            }
            Ok(())
        }
        Command::CheckMatroid { matroid } => {
            let m = read_json::<MatroidDescriptor>(&matroid)?.build()?;
            match verify_axioms_of(&m)? {
                None => {
                    println!("ok: {} matroid of rank {} on {} elements", m.kind(), m.rank(), m.ground_size());
                    Ok(())
                }
                Some(v) => Err(Error::Contract(format!("not a matroid: {v}")).into()),
            }
        }
        Command::Experiment {
            config,
            csv,
            summary,
        } => {
            let mut cfg = match &config {
                Some(p) => read_json::<ExperimentConfig>(p)?,
                None => ExperimentConfig::default(),
            };
            if cli.seed != 0 || config.is_none() {
                cfg.seed = cli.seed;
            }
            let (rows, sum) = run_experiment(&cfg)?;
            let csv_path = csv.or_else(|| cfg.output.as_ref().map(PathBuf::from));
            match csv_path {
                Some(p) => write_csv(&rows, fs::File::create(&p).with_context(|| format!("creating {}", p.display()))?)?,
                None => write_csv(&rows, std::io::stdout().lock())?,
            }
            if let Some(p) = summary {
                emit(&sum, Some(&p))?;
            }
            Ok(())
        }
        Command::Scenario {
            out,
            horizon,
            n_ground,
        } => {
            let sc = build_landing_scenario(&ScenarioConfig {
                seed: cli.seed,
                horizon,
                dt: 1.0,
                n_ground,
            })?;
            emit(&ObjectiveDescriptor::LqgSensing(sc.to_descriptor()), out.as_deref())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Malformed>().is_some() {
        return 2;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::GuardExceeded { .. }) => 3,
        Some(Error::Input(_)) | Some(Error::InvalidElement { .. }) | Some(Error::GroundMismatch { .. }) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
