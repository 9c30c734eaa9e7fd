use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::eval::{evaluate_greedy, Evaluation};
use super::metrics::{alignment_score, mean_stderr, median};
use super::BenchError;
use crate::curve::LearningCurve;
use crate::discovery::{
    ablation_generate, discover, AblationKind, DiscoveryParams, Routine, RoutineLibrary,
    DEFAULT_ENUMERATION_CAP,
};
use crate::imitate::{train_sqil, SqilConfig};
use crate::reinforce::{train_a2c, A2cConfig, A2cMode};
use crate::scalar::argmax;
use crate::world::{
    record_expert_demo, ActionSpace, Demonstration, EnvConfig, Environment, World,
};

/// Exploration rate of the degraded expert used for the ID ablation.
pub const DEFAULT_ID_EPSILON: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    RaplSqil,
    Sqil,
    RaplA2c,
    A2c,
    MacroA2c,
}

impl LearnerKind {
    /// Whether the learner acts over a routine library.
    pub fn uses_routines(self) -> bool {
        matches!(self, Self::RaplSqil | Self::RaplA2c | Self::MacroA2c)
    }

    pub fn is_imitation(self) -> bool {
        matches!(self, Self::RaplSqil | Self::Sqil)
    }
}

impl std::str::FromStr for LearnerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase().replace('-', "_")))
            .map_err(|_| format!("unknown learner {s:?}"))
    }
}

/// Where the demonstration comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoConfig {
    /// Probability of replacing the scripted expert's action by a random one.
    pub expert_epsilon: f64,
    /// Load this JSONL file instead of recording.
    pub path: Option<PathBuf>,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            expert_epsilon: 0.0,
            path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub seeds: Vec<u64>,
    pub demo: DemoConfig,
    pub discovery: DiscoveryParams,
    /// Replace discovered routines by an ablation library of the same shape.
    pub ablation: Option<AblationKind>,
    pub enumeration_cap: u64,
    pub learner: LearnerKind,
    pub sqil: SqilConfig,
    pub a2c: A2cConfig,
    pub eval_episodes: usize,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: EnvConfig::default(),
            seeds: (0..5).collect(),
            demo: DemoConfig::default(),
            discovery: DiscoveryParams::default(),
            ablation: None,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            learner: LearnerKind::RaplA2c,
            sqil: SqilConfig::default(),
            a2c: A2cConfig::default(),
            eval_episodes: 100,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let config: Self = serde_json::from_str(text)?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.seeds.is_empty() {
            return Err(BenchError::Config("seed list is empty".into()));
        }
        if !(0.0..=1.0).contains(&self.demo.expert_epsilon) {
            return Err(BenchError::Config("expert_epsilon must lie in [0, 1]".into()));
        }
        if let Some(path) = &self.demo.path {
            if !path.is_file() {
                return Err(BenchError::Config(format!(
                    "demonstration file {} does not exist",
                    path.display()
                )));
            }
        }
        self.discovery.validate()?;
        self.sqil.validate()?;
        self.a2c.validate()?;
        self.env.build()?;
        Ok(())
    }

    /// Hex digest identifying everything that determines a seed's run: the
    /// whole config except the seed list and output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.seeds.clear();
        canonical.out = None;
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(&Sha256::digest(&bytes)[..8])
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seeds: vec![seed],
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalScores {
    /// Mean return of the last 100 training episodes.
    pub final_return: f64,
    /// Mean return of the greedy evaluation episodes.
    pub eval_return: f64,
    /// Alignment of one greedy episode with the demonstration.
    pub alignment: f64,
    pub gate_success: Option<f64>,
}

/// Deterministic outcome of one seed; timing lives in the run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    pub learner: LearnerKind,
    pub error: Option<String>,
    pub library: Vec<Routine>,
    pub demo_return: f64,
    pub curve: LearningCurve,
    pub scores: Option<FinalScores>,
}

impl RunRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }
}

/// Files produced by one seed besides the record.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub demo: Option<Demonstration>,
    pub library: Option<RoutineLibrary>,
    /// JSON policy dump.
    pub policy: Option<String>,
    pub evaluation: Option<Evaluation>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: RunRecord,
    pub artifacts: RunArtifacts,
    pub wall_clock_secs: f64,
}

/// Demonstration for `seed`: loaded from the configured file or recorded
/// from the (possibly degraded) scripted expert.
pub fn obtain_demo(config: &ExperimentConfig, env: &mut World, seed: u64) -> Result<Demonstration, BenchError> {
    match &config.demo.path {
        Some(path) => {
            let file = std::fs::File::open(path)?;
            let demo = Demonstration::read_jsonl(std::io::BufReader::new(file))?;
            if demo.env != env.name() {
                return Err(BenchError::Config(format!(
                    "demonstration was recorded on {}, config builds {}",
                    demo.env,
                    env.name()
                )));
            }
            Ok(demo)
        }
        None => Ok(record_expert_demo(env, config.demo.expert_epsilon, seed)?),
    }
}

/// Routine library for `seed`: discovery, or an ablation library with the
/// discovered library's routine lengths.
pub fn build_library(
    config: &ExperimentConfig,
    demo: &Demonstration,
    seed: u64,
) -> Result<RoutineLibrary, BenchError> {
    let actions = demo.actions();
    let mut library = discover(&actions, &config.discovery)?;
    if let Some(kind) = config.ablation {
        library = ablation_generate(
            kind,
            &library.lengths(),
            &actions,
            demo.n_actions,
            seed,
            &config.discovery,
            config.enumeration_cap,
        )?;
    }
    library.seed = seed;
    library.source_demo = demo.env.clone();
    Ok(library)
}

/// Demo, library, training and greedy evaluation for one seed.
pub fn run_seed(config: &ExperimentConfig, seed: u64) -> RunOutput {
    let start = Instant::now();
    let hash = config.hash();
    let mut artifacts = RunArtifacts {
        demo: None,
        library: None,
        policy: None,
        evaluation: None,
    };
    let mut record = RunRecord {
        config_hash: hash,
        seed,
        learner: config.learner,
        error: None,
        library: Vec::new(),
        demo_return: 0.0,
        curve: LearningCurve::default(),
        scores: None,
    };
    if let Err(e) = run_stages(config, seed, &mut record, &mut artifacts) {
        record.error = Some(e.to_string());
        record.scores = None;
    }
    RunOutput {
        record,
        artifacts,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    }
}

fn run_stages(
    config: &ExperimentConfig,
    seed: u64,
    record: &mut RunRecord,
    artifacts: &mut RunArtifacts,
) -> Result<(), BenchError> {
    let mut env = config.env.build()?;
    let demo = obtain_demo(config, &mut env, seed)?;
    record.demo_return = demo.total_return;
    let library = if config.learner.uses_routines() {
        build_library(config, &demo, seed)?
    } else {
        RoutineLibrary::empty()
    };
    record.library = library.routines.clone();
    artifacts.library = Some(library.clone());
    let n_actions = env.spec().n_actions;
    let space = ActionSpace::from_library(n_actions, &library);

    let (policy_json, evaluation) = if config.learner.is_imitation() {
        let sqil = SqilConfig {
            seed,
            ..config.sqil.clone()
        };
        let run = train_sqil(&mut env, &demo, &library, &sqil)?;
        record.curve = run.curve;
        let eval = evaluate_greedy(&mut env, &space, |s| run.q.greedy(s), config.eval_episodes.max(1), seed)?;
        let dump = serde_json::to_string_pretty(&run.q.policy_dump(&space))?;
        (dump, eval)
    } else {
        let a2c = A2cConfig {
            seed,
            mode: if config.learner == LearnerKind::MacroA2c {
                A2cMode::Macro
            } else {
                A2cMode::Rapl
            },
            ..config.a2c.clone()
        };
        let run = train_a2c(&mut env, &library, &a2c)?;
        record.curve = run.curve;
        let model = &run.model;
        let eval = evaluate_greedy(&mut env, &space, |s| argmax(&model.logits(s)), config.eval_episodes.max(1), seed)?;
        let dump = serde_json::to_string_pretty(&model.policy_dump())?;
        (dump, eval)
    };

    record.scores = Some(FinalScores {
        final_return: record.curve.tail_mean_return(100),
        eval_return: evaluation.mean_return,
        alignment: alignment_score(&demo.actions(), &evaluation.first_actions)?,
        gate_success: evaluation.gate_success,
    });
    artifacts.demo = Some(demo);
    artifacts.policy = Some(policy_json);
    artifacts.evaluation = Some(evaluation);
    Ok(())
}

/// Every seed of the config, in parallel, returned in seed-list order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunOutput>, BenchError> {
    config.validate()?;
    let outputs: Vec<RunOutput> = config
        .seeds
        .par_iter()
        .map(|&seed| run_seed(config, seed))
        .collect();
    if let Some(out) = &config.out {
        super::persist::write_experiment(out, config, &outputs)?;
    }
    Ok(outputs)
}

/// Mean and standard error of one score across seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub stderr: f64,
    pub median: f64,
    pub n: usize,
}

impl Aggregate {
    pub fn of(xs: &[f64]) -> Self {
        let (mean, stderr) = mean_stderr(xs);
        Self {
            mean,
            stderr,
            median: median(xs),
            n: xs.len(),
        }
    }
}

/// Aggregated scores of the successful runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: usize,
    pub failed: usize,
    pub final_return: Aggregate,
    pub eval_return: Aggregate,
    pub alignment: Aggregate,
    pub gate_success: Option<Aggregate>,
}

pub fn summarize(records: &[RunRecord]) -> Summary {
    let scores: Vec<&FinalScores> = records.iter().filter_map(|r| r.scores.as_ref()).collect();
    let pick = |f: fn(&FinalScores) -> f64| scores.iter().map(|s| f(s)).collect::<Vec<f64>>();
    let gates: Vec<f64> = scores.iter().filter_map(|s| s.gate_success).collect();
    Summary {
        runs: records.len(),
        failed: records.len() - scores.len(),
        final_return: Aggregate::of(&pick(|s| s.final_return)),
        eval_return: Aggregate::of(&pick(|s| s.eval_return)),
        alignment: Aggregate::of(&pick(|s| s.alignment)),
        gate_success: (!gates.is_empty()).then(|| Aggregate::of(&gates)),
    }
}
