//! Routine discovery from one demonstrated action trajectory.
//!
//! Two phases. Proposal runs Sequitur over the trajectory and expands every
//! auxiliary rule into a candidate routine. Selection scores each candidate
//! by `frequency + lambda_length * length`, visits candidates best-first and
//! keeps one only if it is at least `alpha` edits away from every routine
//! already kept, then truncates to the `k` best.
//!
//! The ablated generators in [`ablation_generate`] produce libraries of the
//! same shape without the Sequitur proposal step.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{self, Symbol};
use crate::scalar::Scalar;
use crate::ActionId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscoveryError {
    #[error("a routine needs at least two actions, got {0}")]
    RoutineTooShort(usize),
    #[error("library size cap k must be at least 1")]
    ZeroCapacity,
    #[error("lambda_length must be a non-negative finite number")]
    BadLambda,
    #[error("enumerating {alphabet}^{length} routines exceeds the cap of {cap}")]
    EnumerationCap {
        alphabet: usize,
        length: usize,
        cap: u64,
    },
    #[error("cannot fetch a routine of length {length} from a trajectory of length {available}")]
    TrajectoryTooShort { length: usize, available: usize },
    #[error("ablation needs a non-empty alphabet and trajectory")]
    EmptyInput,
}

/// A fixed sequence of primitive actions, executed open-loop.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Routine(Vec<ActionId>);

impl Routine {
    pub fn new(actions: Vec<ActionId>) -> Result<Self, DiscoveryError> {
        if actions.len() < 2 {
            return Err(DiscoveryError::RoutineTooShort(actions.len()));
        }
        Ok(Self(actions))
    }

    pub fn actions(&self) -> &[ActionId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "S: Scalar")]
pub struct DiscoveryParams<S: Scalar = f64> {
    pub k: usize,
    pub alpha: usize,
    pub lambda_length: S,
}

impl<S: Scalar> DiscoveryParams<S> {
    pub fn new(k: usize, alpha: usize, lambda_length: S) -> Result<Self, DiscoveryError> {
        let p = Self {
            k,
            alpha,
            lambda_length,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), DiscoveryError> {
        if self.k == 0 {
            return Err(DiscoveryError::ZeroCapacity);
        }
        if !self.lambda_length.is_finite() || self.lambda_length < S::zero() {
            return Err(DiscoveryError::BadLambda);
        }
        Ok(())
    }
}

impl<S: Scalar> Default for DiscoveryParams<S> {
    fn default() -> Self {
        Self {
            k: 3,
            alpha: 2,
            lambda_length: S::lit(0.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate<S: Scalar = f64> {
    pub routine: Routine,
    pub frequency: usize,
    pub score: S,
}

impl<S: Scalar> ScoredCandidate<S> {
    pub fn score(routine: Routine, trajectory: &[ActionId], lambda_length: S) -> Self {
        let frequency = frequency(routine.actions(), trajectory);
        let score = S::from_count(frequency) + lambda_length * S::from_count(routine.len());
        Self {
            routine,
            frequency,
            score,
        }
    }
}

/// Selection order: higher score, then longer routine, then lexicographically
/// smaller action ids.
pub fn priority_order<S: Scalar>(a: &ScoredCandidate<S>, b: &ScoredCandidate<S>) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| b.routine.len().cmp(&a.routine.len()))
        .then_with(|| a.routine.cmp(&b.routine))
}

/// The set of routines used to augment an action space, plus provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct RoutineLibrary<S: Scalar = f64> {
    pub routines: Vec<Routine>,
    pub params: DiscoveryParams<S>,
    pub seed: u64,
    pub source_demo: String,
}

impl<S: Scalar> RoutineLibrary<S> {
    pub fn empty() -> Self {
        Self {
            routines: Vec::new(),
            params: DiscoveryParams::default(),
            seed: 0,
            source_demo: String::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.routines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routines.is_empty()
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.routines.iter().map(Routine::len).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("library serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// Expand every auxiliary Sequitur rule of `trajectory` into a routine,
/// dropping duplicate expansions. Order follows rule ids.
pub fn propose_candidates(trajectory: &[ActionId]) -> Vec<Routine> {
    if trajectory.len() < 2 {
        return Vec::new();
    }
    let alphabet = trajectory.iter().copied().max().unwrap_or(0) as usize + 1;
    let g = grammar::induce(trajectory, alphabet).expect("alphabet covers the trajectory");
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &id in g.rules.keys() {
        let actions = grammar::expand(&g, Symbol::NonTerminal(id)).expect("rule is defined");
        if seen.insert(actions.clone()) {
            out.push(Routine::new(actions).expect("Sequitur rules expand to >= 2 actions"));
        }
    }
    out
}

/// Number of non-overlapping occurrences of `routine` in `trajectory`,
/// found by a greedy left-to-right scan.
pub fn frequency(routine: &[ActionId], trajectory: &[ActionId]) -> usize {
    occurrences(routine, trajectory).len()
}

/// Start positions of the greedy non-overlapping occurrences.
pub fn occurrences(routine: &[ActionId], trajectory: &[ActionId]) -> Vec<usize> {
    let mut out = Vec::new();
    if routine.is_empty() || routine.len() > trajectory.len() {
        return out;
    }
    let mut i = 0;
    while i + routine.len() <= trajectory.len() {
        if &trajectory[i..i + routine.len()] == routine {
            out.push(i);
            i += routine.len();
        } else {
            i += 1;
        }
    }
    out
}

/// Unit-cost edit distance between two sequences (two-row dynamic program).
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Score, prune near-duplicates and truncate. Candidates are deduplicated
/// first; provenance fields of the result are left at their defaults.
pub fn select<S: Scalar>(
    candidates: &[Routine],
    trajectory: &[ActionId],
    params: &DiscoveryParams<S>,
) -> RoutineLibrary<S> {
    let scored = score_candidates(candidates, trajectory, params.lambda_length);
    let kept = prune(&scored, params.alpha);
    RoutineLibrary {
        routines: kept
            .into_iter()
            .take(params.k)
            .map(|c| c.routine.clone())
            .collect(),
        params: *params,
        seed: 0,
        source_demo: String::new(),
    }
}

/// Deduplicated candidates with scores, in selection order.
pub fn score_candidates<S: Scalar>(
    candidates: &[Routine],
    trajectory: &[ActionId],
    lambda_length: S,
) -> Vec<ScoredCandidate<S>> {
    let unique: BTreeSet<&Routine> = candidates.iter().collect();
    let mut scored: Vec<ScoredCandidate<S>> = unique
        .into_iter()
        .map(|r| ScoredCandidate::score(r.clone(), trajectory, lambda_length))
        .collect();
    scored.sort_by(priority_order);
    scored
}

fn prune<S: Scalar>(ordered: &[ScoredCandidate<S>], alpha: usize) -> Vec<&ScoredCandidate<S>> {
    let mut kept: Vec<&ScoredCandidate<S>> = Vec::new();
    for cand in ordered {
        let similar = kept
            .iter()
            .any(|k| levenshtein(k.routine.actions(), cand.routine.actions()) < alpha);
        if !similar {
            kept.push(cand);
        }
    }
    kept
}

/// Proposal followed by selection.
pub fn discover<S: Scalar>(
    trajectory: &[ActionId],
    params: &DiscoveryParams<S>,
) -> Result<RoutineLibrary<S>, DiscoveryError> {
    params.validate()?;
    let candidates = propose_candidates(trajectory);
    Ok(select(&candidates, trajectory, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AblationKind {
    /// Random routines: uniform random action sequences.
    Rr,
    /// Proposal by enumeration: every action sequence of the given length,
    /// selected by score against the trajectory.
    Pbe,
    /// Random fetch: random contiguous slices of the trajectory.
    Rf,
    /// Repeat: the most frequent primitive repeated.
    Rp,
}

impl std::str::FromStr for AblationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "RR" => Ok(Self::Rr),
            "PBE" => Ok(Self::Pbe),
            "RF" => Ok(Self::Rf),
            "RP" => Ok(Self::Rp),
            other => Err(format!("unknown ablation kind {other:?}")),
        }
    }
}

pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 20;

/// Build a library with the given routine lengths without Sequitur.
#[allow(clippy::too_many_arguments)]
pub fn ablation_generate<S: Scalar>(
    kind: AblationKind,
    shape: &[usize],
    trajectory: &[ActionId],
    alphabet_size: usize,
    seed: u64,
    params: &DiscoveryParams<S>,
    enumeration_cap: u64,
) -> Result<RoutineLibrary<S>, DiscoveryError> {
    if let Some(&bad) = shape.iter().find(|&&l| l < 2) {
        return Err(DiscoveryError::RoutineTooShort(bad));
    }
    if alphabet_size == 0 {
        return Err(DiscoveryError::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let routines = match kind {
        AblationKind::Rr => shape
            .iter()
            .map(|&len| {
                let actions = (0..len)
                    .map(|_| rng.gen_range(0..alphabet_size) as ActionId)
                    .collect();
                Routine::new(actions)
            })
            .collect::<Result<Vec<_>, _>>()?,
        AblationKind::Rf => shape
            .iter()
            .map(|&len| {
                if len > trajectory.len() {
                    return Err(DiscoveryError::TrajectoryTooShort {
                        length: len,
                        available: trajectory.len(),
                    });
                }
                let start = rng.gen_range(0..=trajectory.len() - len);
                Routine::new(trajectory[start..start + len].to_vec())
            })
            .collect::<Result<Vec<_>, _>>()?,
        AblationKind::Rp => {
            let top = most_frequent(trajectory).ok_or(DiscoveryError::EmptyInput)?;
            shape
                .iter()
                .map(|&len| Routine::new(vec![top; len]))
                .collect::<Result<Vec<_>, _>>()?
        }
        AblationKind::Pbe => enumerate_best(shape, trajectory, alphabet_size, params, enumeration_cap)?,
    };
    Ok(RoutineLibrary {
        routines,
        params: *params,
        seed,
        source_demo: String::new(),
    })
}

fn most_frequent(trajectory: &[ActionId]) -> Option<ActionId> {
    let max = *trajectory.iter().max()?;
    let mut counts = vec![0usize; max as usize + 1];
    for &a in trajectory {
        counts[a as usize] += 1;
    }
    // Ties go to the smallest action id.
    let best = (0..counts.len()).max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))?;
    Some(best as ActionId)
}

fn enumerate_best<S: Scalar>(
    shape: &[usize],
    trajectory: &[ActionId],
    alphabet: usize,
    params: &DiscoveryParams<S>,
    cap: u64,
) -> Result<Vec<Routine>, DiscoveryError> {
    let mut lengths: Vec<usize> = shape.to_vec();
    lengths.sort_unstable();
    lengths.dedup();
    let mut ranked: Vec<(usize, Vec<Routine>)> = Vec::new();
    for &len in &lengths {
        let total = (alphabet as u64)
            .checked_pow(len as u32)
            .filter(|&t| t <= cap)
            .ok_or(DiscoveryError::EnumerationCap {
                alphabet,
                length: len,
                cap,
            })?;
        let mut scored: Vec<ScoredCandidate<S>> = (0..total)
            .map(|code| {
                let mut actions = vec![0; len];
                let mut c = code;
                for slot in actions.iter_mut().rev() {
                    *slot = (c % alphabet as u64) as ActionId;
                    c /= alphabet as u64;
                }
                ScoredCandidate::score(Routine(actions), trajectory, params.lambda_length)
            })
            .collect();
        scored.sort_by(priority_order);
        ranked.push((len, scored.into_iter().map(|c| c.routine).collect()));
    }
    let mut taken = vec![0usize; ranked.len()];
    Ok(shape
        .iter()
        .map(|len| {
            let slot = ranked.iter().position(|(l, _)| l == len).expect("length ranked");
            let r = ranked[slot].1[taken[slot]].clone();
            taken[slot] += 1;
            r
        })
        .collect())
}
