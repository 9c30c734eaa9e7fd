use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::experiment::{run_experiment, summarize, ExperimentConfig, RunRecord, Summary};
use super::BenchError;

/// One swept parameter: a dotted path into the experiment config (for
/// example `discovery.k` or `a2c.learning_rate`) and the values to try.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: ExperimentConfig,
    #[serde(default)]
    pub grid: Vec<SweepAxis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// `None` for the base config of an empty grid.
    pub param: Option<String>,
    pub value: Option<Value>,
    pub config_hash: String,
    pub summary: Summary,
    pub records: Vec<RunRecord>,
}

/// Copy of `config` with the field at `path` replaced by `value`. The path
/// must name an existing field.
pub fn set_param(config: &ExperimentConfig, path: &str, value: &Value) -> Result<ExperimentConfig, BenchError> {
    let mut tree = serde_json::to_value(config)?;
    let mut slot = &mut tree;
    for part in path.split('.') {
        slot = slot
            .as_object_mut()
            .and_then(|o| o.get_mut(part))
            .ok_or_else(|| BenchError::Config(format!("unknown sweep parameter {path:?}")))?;
    }
    *slot = value.clone();
    serde_json::from_value(tree)
        .map_err(|e| BenchError::Config(format!("bad value {value} for {path}: {e}")))
}

/// One-factor-at-a-time sweep: each axis is varied alone with every other
/// parameter at its base value. An empty grid runs the base config once.
pub fn sweep(base: &ExperimentConfig, grid: &[SweepAxis]) -> Result<Vec<SweepPoint>, BenchError> {
    let mut plan = Vec::new();
    if grid.is_empty() {
        plan.push((None, None, base.clone()));
    }
    for axis in grid {
        for value in &axis.values {
            plan.push((
                Some(axis.param.clone()),
                Some(value.clone()),
                set_param(base, &axis.param, value)?,
            ));
        }
    }
    let mut points = Vec::with_capacity(plan.len());
    for (param, value, config) in plan {
        let outputs = run_experiment(&config)?;
        let records: Vec<RunRecord> = outputs.into_iter().map(|o| o.record).collect();
        points.push(SweepPoint {
            param,
            value,
            config_hash: config.hash(),
            summary: summarize(&records),
            records,
        });
    }
    Ok(points)
}

#[derive(Debug, Serialize)]
struct SweepRow<'a> {
    param: &'a str,
    value: String,
    config_hash: &'a str,
    runs: usize,
    failed: usize,
    final_return_mean: f64,
    final_return_stderr: f64,
    final_return_median: f64,
    eval_return_mean: f64,
    eval_return_stderr: f64,
    alignment_mean: f64,
    alignment_stderr: f64,
}

/// One CSV row per sweep point.
pub fn sweep_csv(points: &[SweepPoint]) -> Result<String, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in points {
        let s = &p.summary;
        w.serialize(SweepRow {
            param: p.param.as_deref().unwrap_or("base"),
            value: p.value.as_ref().map_or(String::new(), Value::to_string),
            config_hash: &p.config_hash,
            runs: s.runs,
            failed: s.failed,
            final_return_mean: s.final_return.mean,
            final_return_stderr: s.final_return.stderr,
            final_return_median: s.final_return.median,
            eval_return_mean: s.eval_return.mean,
            eval_return_stderr: s.eval_return.stderr,
            alignment_mean: s.alignment.mean,
            alignment_stderr: s.alignment.stderr,
        })?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}
