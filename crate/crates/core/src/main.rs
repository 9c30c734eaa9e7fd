use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use rapl::bench::persist::run_dir;
use rapl::bench::{
    build_library, evaluate_greedy, obtain_demo, run_experiment, summarize, sweep, sweep_csv,
    BenchError, ExperimentConfig, LearnerKind, RunRecord, SweepConfig, DEFAULT_ID_EPSILON,
};
use rapl::discovery::{AblationKind, RoutineLibrary};
use rapl::scalar::argmax;
use rapl::world::{ActionSpace, Environment, ExtendedAction};
use rapl::StateId;

#[derive(Parser)]
#[command(name = "rapl", version, about = "Routine discovery and routine-augmented learners on grid worlds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Run only this seed instead of the config's seed list.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config's `out`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Record a scripted-expert demonstration to `<out>/demo.jsonl`.
    RecordDemo(Common),
    /// Discover routines from a demonstration into `<out>/library.json`.
    Discover {
        #[command(flatten)]
        common: Common,
        /// Demonstration to read instead of recording one.
        #[arg(long)]
        demo: Option<PathBuf>,
    },
    /// Run demo, discovery, training and evaluation for every seed.
    Train(Common),
    /// Re-evaluate a trained policy written by `train`.
    Eval(Common),
    /// Train with an ablated routine library (RR, PBE, RF, RP) or a degraded
    /// demonstration (ID).
    Ablate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        kind: String,
    },
    /// One-factor-at-a-time parameter sweep; the config holds `base` and
    /// `grid`.
    Sweep(Common),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) {
                e.exit();
            }
            emit_error("usage", &e.to_string());
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            emit_error(e.kind(), &e.to_string());
            ExitCode::FAILURE
        }
    }
}

fn emit_error(kind: &str, message: &str) {
    let line = json!({ "error": { "kind": kind, "message": message.trim() } });
    eprintln!("{line}");
}

fn print_json<T: Serialize>(value: &T) -> Result<(), BenchError> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn load_config(common: &Common) -> Result<ExperimentConfig, BenchError> {
    let text = read_config(&common.config)?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = common.seed {
        config.seeds = vec![seed];
    }
    if let Some(out) = &common.out {
        config.out = Some(out.clone());
    }
    if config.out.is_none() {
        config.out = Some(PathBuf::from("runs"));
    }
    config.validate()?;
    Ok(config)
}

fn read_config(path: &Path) -> Result<String, BenchError> {
    fs::read_to_string(path)
        .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))
}

fn out_dir(config: &ExperimentConfig) -> &Path {
    config.out.as_deref().expect("load_config sets an output directory")
}

fn run(command: Command) -> Result<(), BenchError> {
    match command {
        Command::RecordDemo(common) => {
            let config = load_config(&common)?;
            let seed = config.seeds[0];
            let mut env = config.env.build()?;
            let demo = obtain_demo(&config, &mut env, seed)?;
            let out = out_dir(&config);
            fs::create_dir_all(out)?;
            let path = out.join("demo.jsonl");
            demo.write_jsonl(fs::File::create(&path)?)?;
            print_json(&json!({
                "demo": path,
                "env": demo.env,
                "steps": demo.len(),
                "return": demo.total_return,
            }))
        }
        Command::Discover { common, demo } => {
            let mut config = load_config(&common)?;
            if demo.is_some() {
                config.demo.path = demo;
                config.validate()?;
            }
            let seed = config.seeds[0];
            let mut env = config.env.build()?;
            let demo = obtain_demo(&config, &mut env, seed)?;
            let library = build_library(&config, &demo, seed)?;
            let out = out_dir(&config);
            fs::create_dir_all(out)?;
            let path = out.join("library.json");
            fs::write(&path, library.to_json())?;
            print_json(&json!({ "library": path, "routines": library.routines }))
        }
        Command::Train(common) => {
            let config = load_config(&common)?;
            report(&config)
        }
        Command::Eval(common) => {
            let config = load_config(&common)?;
            eval(&config)
        }
        Command::Ablate { common, kind } => {
            let mut config = load_config(&common)?;
            if kind.eq_ignore_ascii_case("id") {
                config.demo.expert_epsilon = DEFAULT_ID_EPSILON;
            } else {
                let kind: AblationKind = kind.parse().map_err(BenchError::Config)?;
                config.ablation = Some(kind);
            }
            report(&config)
        }
        Command::Sweep(common) => {
            let text = read_config(&common.config)?;
            let mut sweep_config: SweepConfig = serde_json::from_str(&text)?;
            if let Some(seed) = common.seed {
                sweep_config.base.seeds = vec![seed];
            }
            let out = common
                .out
                .or(sweep_config.base.out.clone())
                .unwrap_or_else(|| PathBuf::from("runs"));
            sweep_config.base.out = Some(out.clone());
            let points = sweep(&sweep_config.base, &sweep_config.grid)?;
            fs::create_dir_all(&out)?;
            fs::write(out.join("sweep.csv"), sweep_csv(&points)?)?;
            let rows: Vec<_> = points
                .iter()
                .map(|p| json!({ "param": p.param, "value": p.value, "config_hash": p.config_hash, "summary": p.summary }))
                .collect();
            fs::write(out.join("sweep.json"), serde_json::to_string_pretty(&rows)?)?;
            print_json(&json!({ "sweep": out.join("sweep.csv"), "points": points.len() }))
        }
    }
}

/// Run the experiment and print one summary line.
fn report(config: &ExperimentConfig) -> Result<(), BenchError> {
    let outputs = run_experiment(config)?;
    let records: Vec<RunRecord> = outputs.into_iter().map(|o| o.record).collect();
    let failures: Vec<_> = records
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| json!({ "seed": r.seed, "error": e })))
        .collect();
    print_json(&json!({
        "config_hash": config.hash(),
        "out": out_dir(config).join(config.hash()),
        "summary": summarize(&records),
        "failures": failures,
    }))?;
    if records.iter().all(|r| r.error.is_some()) {
        return Err(BenchError::Config("every seed failed".into()));
    }
    Ok(())
}

fn eval(config: &ExperimentConfig) -> Result<(), BenchError> {
    let hash = config.hash();
    let mut results = Vec::new();
    for &seed in &config.seeds {
        let dir = run_dir(out_dir(config), &hash, seed);
        let library_text = fs::read_to_string(dir.join("library.json"))?;
        let library: RoutineLibrary = RoutineLibrary::from_json(&library_text)?;
        let policy_text = fs::read_to_string(dir.join("policy.json"))?;
        let mut env = config.env.build()?;
        let space = ActionSpace::from_library(env.spec().n_actions, &library);
        let evaluation = if matches!(config.learner, LearnerKind::RaplSqil | LearnerKind::Sqil) {
            let greedy: BTreeMap<StateId, ExtendedAction> = serde_json::from_str(&policy_text)?;
            evaluate_greedy(
                &mut env,
                &space,
                |s| greedy.get(&s).map_or(0, |&a| space.index_of(a)),
                config.eval_episodes.max(1),
                seed,
            )?
        } else {
            let logits: BTreeMap<StateId, Vec<f64>> = serde_json::from_str(&policy_text)?;
            evaluate_greedy(
                &mut env,
                &space,
                |s| logits.get(&s).map_or(0, |row| argmax(row)),
                config.eval_episodes.max(1),
                seed,
            )?
        };
        fs::write(dir.join("eval.json"), serde_json::to_string_pretty(&evaluation)?)?;
        results.push(json!({
            "seed": seed,
            "mean_return": evaluation.mean_return,
            "gate_success": evaluation.gate_success,
        }));
    }
    print_json(&json!({ "config_hash": hash, "eval": results }))
}
