//! On-disk layout: `<out>/<config hash>/config.json` plus one directory per
//! seed holding `demo.jsonl`, `library.json`, `curve.csv`, `policy.json`,
//! `record.json` and `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::experiment::{ExperimentConfig, RunOutput, RunRecord};
use super::BenchError;

/// Per-seed metadata that is not part of the deterministic record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    pub crate_version: String,
    pub wall_clock_secs: f64,
    pub config: ExperimentConfig,
}

pub fn run_dir(out: &Path, config_hash: &str, seed: u64) -> PathBuf {
    out.join(config_hash).join(seed.to_string())
}

pub fn write_experiment(out: &Path, config: &ExperimentConfig, outputs: &[RunOutput]) -> Result<(), BenchError> {
    let hash = config.hash();
    let root = out.join(&hash);
    fs::create_dir_all(&root)?;
    fs::write(root.join("config.json"), serde_json::to_string_pretty(config)?)?;
    for output in outputs {
        write_run(out, config, output)?;
    }
    Ok(())
}

pub fn write_run(out: &Path, config: &ExperimentConfig, output: &RunOutput) -> Result<PathBuf, BenchError> {
    let record = &output.record;
    let dir = run_dir(out, &record.config_hash, record.seed);
    fs::create_dir_all(&dir)?;
    let artifacts = &output.artifacts;
    if let Some(demo) = &artifacts.demo {
        demo.write_jsonl(fs::File::create(dir.join("demo.jsonl"))?)?;
    }
    if let Some(library) = &artifacts.library {
        fs::write(dir.join("library.json"), library.to_json())?;
    }
    record.curve.write_csv(fs::File::create(dir.join("curve.csv"))?)?;
    if let Some(policy) = &artifacts.policy {
        fs::write(dir.join("policy.json"), policy)?;
    }
    fs::write(dir.join("record.json"), record.to_json())?;
    let manifest = Manifest {
        config_hash: record.config_hash.clone(),
        seed: record.seed,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_secs: output.wall_clock_secs,
        config: config.with_seed(record.seed),
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(dir)
}

pub fn read_record(dir: &Path) -> Result<RunRecord, BenchError> {
    let text = fs::read_to_string(dir.join("record.json"))?;
    Ok(serde_json::from_str(&text)?)
}
