//! Soft-Q imitation over the routine-augmented action space.
//!
//! Demonstration transitions (primitive and routine level) are regressed
//! toward soft Bellman targets with reward 1, explored transitions toward
//! targets with reward 0. With an empty library the action space is just the
//! primitives and this is ordinary SQIL, through the same code.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::metrics::alignment_score;
use crate::curve::{CurvePoint, LearningCurve};
use crate::discovery::{occurrences, RoutineLibrary};
use crate::scalar::{argmax, log_sum_exp, powi, sample_index, softmax, Scalar};
use crate::world::{
    step_extended, ActionSpace, Demonstration, Environment, ExtendedAction, RoutineOutcome,
    WorldError,
};
use crate::StateId;

#[derive(Debug, Error)]
pub enum ImitateError {
    #[error("soft Bellman error of an empty dataset")]
    EmptyDataset,
    #[error("demonstration was recorded on {demo} ({demo_actions} actions), environment is {env} ({env_actions} actions)")]
    EnvMismatch {
        demo: String,
        demo_actions: usize,
        env: String,
        env_actions: usize,
    },
    #[error("invalid SQIL configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    World(#[from] WorldError),
}

/// Tabular soft Q-function over `L̃`; unseen entries read as zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct SoftQ<S: Scalar = f64> {
    n_actions: usize,
    rows: BTreeMap<StateId, Vec<S>>,
}

impl<S: Scalar> SoftQ<S> {
    pub fn new(n_actions: usize) -> Self {
        Self {
            n_actions,
            rows: BTreeMap::new(),
        }
    }

    /// Size of the extended action space.
    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn get(&self, s: StateId, action: usize) -> S {
        self.rows.get(&s).map_or(S::zero(), |row| row[action])
    }

    pub fn set(&mut self, s: StateId, action: usize, value: S) {
        self.row_mut(s)[action] = value;
    }

    pub fn row(&self, s: StateId) -> Vec<S> {
        self.rows
            .get(&s)
            .cloned()
            .unwrap_or_else(|| vec![S::zero(); self.n_actions])
    }

    fn row_mut(&mut self, s: StateId) -> &mut Vec<S> {
        let n = self.n_actions;
        self.rows.entry(s).or_insert_with(|| vec![S::zero(); n])
    }

    /// `log Σ exp Q(s, ·)`.
    pub fn soft_value(&self, s: StateId) -> S {
        match self.rows.get(&s) {
            Some(row) => log_sum_exp(row),
            None => log_sum_exp(&vec![S::zero(); self.n_actions]),
        }
    }

    pub fn policy(&self, s: StateId, temperature: S) -> Vec<S> {
        softmax(&self.row(s), temperature)
    }

    pub fn greedy(&self, s: StateId) -> usize {
        argmax(&self.row(s))
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.rows.keys().copied()
    }

    /// Greedy extended action for every state with a stored row.
    pub fn policy_dump(&self, space: &ActionSpace) -> BTreeMap<StateId, ExtendedAction> {
        self.rows
            .iter()
            .map(|(&s, row)| (s, space.get(argmax(row))))
            .collect()
    }
}

/// Where a dataset entry came from, which fixes its SQIL reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Demo,
    Sample,
}

impl Origin {
    pub fn sqil_reward<S: Scalar>(self) -> S {
        match self {
            Origin::Demo => S::one(),
            Origin::Sample => S::zero(),
        }
    }
}

/// One `(s, ρ̃, s')` tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct SqilEntry<S: Scalar = f64> {
    pub s: StateId,
    /// Dense index into the extended action space.
    pub action: usize,
    pub s_next: StateId,
    /// `|ρ̃|` for the target: nominal for demo entries, executed for samples.
    pub length: usize,
    pub terminal: bool,
    pub origin: Origin,
    /// `Σ γ^i r_i` of the environment rewards along the entry.
    pub env_reward: S,
}

impl<S: Scalar> SqilEntry<S> {
    pub fn from_outcome(outcome: &RoutineOutcome<S>, space: &ActionSpace) -> Self {
        Self {
            s: outcome.s_start,
            action: space.index_of(outcome.action),
            s_next: outcome.s_end,
            length: outcome.executed,
            terminal: outcome.terminated,
            origin: Origin::Sample,
            env_reward: outcome.discounted_reward,
        }
    }
}

/// `D_prim`, `D_routine` and the replay buffer `D_sample`.
#[derive(Debug, Clone, PartialEq)]
pub struct SqilDatasets<S: Scalar = f64> {
    prim: Vec<SqilEntry<S>>,
    routine: Vec<SqilEntry<S>>,
    sample: VecDeque<SqilEntry<S>>,
    sample_capacity: usize,
}

impl<S: Scalar> SqilDatasets<S> {
    /// Panics if a demo list holds a sampled entry or vice versa.
    pub fn new(
        prim: Vec<SqilEntry<S>>,
        routine: Vec<SqilEntry<S>>,
        sample: Vec<SqilEntry<S>>,
        sample_capacity: usize,
    ) -> Self {
        assert!(
            prim.iter().chain(&routine).all(|e| e.origin == Origin::Demo),
            "demo datasets may only hold demo entries"
        );
        assert!(
            sample.iter().all(|e| e.origin == Origin::Sample),
            "D_sample may only hold explored entries"
        );
        let mut out = Self {
            prim,
            routine,
            sample: VecDeque::new(),
            sample_capacity: sample_capacity.max(1),
        };
        for e in sample {
            out.push_sample(e);
        }
        out
    }

    /// Append to `D_sample`, evicting the oldest entry when full.
    pub fn push_sample(&mut self, entry: SqilEntry<S>) {
        assert_eq!(entry.origin, Origin::Sample, "D_sample may only hold explored entries");
        if self.sample.len() == self.sample_capacity {
            self.sample.pop_front();
        }
        self.sample.push_back(entry);
    }

    pub fn prim(&self) -> &[SqilEntry<S>] {
        &self.prim
    }

    pub fn routine(&self) -> &[SqilEntry<S>] {
        &self.routine
    }

    pub fn sample(&self) -> &VecDeque<SqilEntry<S>> {
        &self.sample
    }

    pub fn demo_len(&self) -> usize {
        self.prim.len() + self.routine.len()
    }

    /// Entry `i` of `D_prim ∪ D_routine`.
    pub fn demo_entry(&self, i: usize) -> &SqilEntry<S> {
        if i < self.prim.len() {
            &self.prim[i]
        } else {
            &self.routine[i - self.prim.len()]
        }
    }

    pub fn demo_entries(&self) -> impl Iterator<Item = &SqilEntry<S>> {
        self.prim.iter().chain(&self.routine)
    }
}

/// Primitive-level demo entries, one per transition.
pub fn build_prim_demo<S: Scalar>(demo: &Demonstration) -> Vec<SqilEntry<S>> {
    demo.transitions
        .iter()
        .map(|tr| SqilEntry {
            s: tr.s,
            action: tr.a as usize,
            s_next: tr.s_next,
            length: 1,
            terminal: tr.done,
            origin: Origin::Demo,
            env_reward: S::lit(tr.r),
        })
        .collect()
}

/// Routine-level demo entries: every greedy non-overlapping occurrence of
/// every library routine in the demonstration's action sequence.
pub fn build_routine_demo<S: Scalar, L: Scalar>(
    demo: &Demonstration,
    library: &RoutineLibrary<L>,
    gamma: S,
) -> Vec<SqilEntry<S>> {
    let actions = demo.actions();
    let n_primitive = demo.n_actions;
    let mut out = Vec::new();
    for (i, routine) in library.routines.iter().enumerate() {
        let len = routine.len();
        for t in occurrences(routine.actions(), &actions) {
            let slice = &demo.transitions[t..t + len];
            debug_assert_eq!(
                slice.iter().map(|tr| tr.a).collect::<Vec<_>>(),
                routine.actions()
            );
            let mut env_reward = S::zero();
            let mut discount = S::one();
            for tr in slice {
                env_reward += discount * S::lit(tr.r);
                discount *= gamma;
            }
            out.push(SqilEntry {
                s: slice[0].s,
                action: n_primitive + i,
                s_next: slice[len - 1].s_next,
                length: len,
                terminal: slice[len - 1].done,
                origin: Origin::Demo,
                env_reward,
            });
        }
    }
    out
}

/// `R_sq(ρ̃, r) = Σ_{τ=1}^{|ρ̃|} γ^{τ-1} r`.
pub fn r_sq<S: Scalar>(length: usize, r: S, gamma: S) -> S {
    let mut total = S::zero();
    let mut discount = S::one();
    for _ in 0..length {
        total += discount * r;
        discount *= gamma;
    }
    total
}

/// `R_sq + γ^{|ρ̃|} log Σ exp Q(s', ·)`, without the bootstrap when `s'` is
/// terminal.
pub fn sq_target<S: Scalar>(
    q: &SoftQ<S>,
    length: usize,
    s_next: StateId,
    terminal: bool,
    r: S,
    gamma: S,
) -> S {
    let reward = r_sq(length, r, gamma);
    if terminal {
        reward
    } else {
        reward + powi(gamma, length) * q.soft_value(s_next)
    }
}

fn residual<S: Scalar>(q: &SoftQ<S>, e: &SqilEntry<S>, r: S, gamma: S) -> S {
    q.get(e.s, e.action) - sq_target(q, e.length, e.s_next, e.terminal, r, gamma)
}

/// Mean squared soft Bellman residual over `entries` with reward `r`.
pub fn soft_bellman_error<'a, S, I>(q: &SoftQ<S>, entries: I, r: S, gamma: S) -> Result<S, ImitateError>
where
    S: Scalar,
    I: IntoIterator<Item = &'a SqilEntry<S>>,
{
    let mut total = S::zero();
    let mut n = 0usize;
    for e in entries {
        let d = residual(q, e, r, gamma);
        total += d * d;
        n += 1;
    }
    if n == 0 {
        return Err(ImitateError::EmptyDataset);
    }
    Ok(total / S::from_count(n))
}

/// `δ²(D_prim ∪ D_routine, 1) + λ_sample δ²(D_sample, 0)`, with the demo
/// union normalized as one dataset.
pub fn sqil_loss<S: Scalar>(
    q: &SoftQ<S>,
    data: &SqilDatasets<S>,
    lambda_sample: S,
    gamma: S,
) -> Result<S, ImitateError> {
    let demo = soft_bellman_error(q, data.demo_entries(), S::one(), gamma)?;
    let sample = if data.sample.is_empty() {
        S::zero()
    } else {
        soft_bellman_error(q, &data.sample, S::zero(), gamma)?
    };
    Ok(demo + lambda_sample * sample)
}

/// One semi-gradient SGD step on the mini-batch loss
/// `mean_demo δ² + λ_sample mean_sample δ²`. Targets are held fixed and
/// every residual is computed before any entry moves.
pub fn sgd_step<S: Scalar>(
    q: &mut SoftQ<S>,
    demo_batch: &[&SqilEntry<S>],
    sample_batch: &[&SqilEntry<S>],
    lambda_sample: S,
    gamma: S,
    learning_rate: S,
) {
    let two = S::lit(2.0);
    let mut updates = Vec::with_capacity(demo_batch.len() + sample_batch.len());
    if !demo_batch.is_empty() {
        let scale = two / S::from_count(demo_batch.len());
        for e in demo_batch {
            updates.push((e.s, e.action, scale * residual(q, e, S::one(), gamma)));
        }
    }
    if !sample_batch.is_empty() {
        let scale = lambda_sample * two / S::from_count(sample_batch.len());
        for e in sample_batch {
            updates.push((e.s, e.action, scale * residual(q, e, S::zero(), gamma)));
        }
    }
    for (s, a, g) in updates {
        q.row_mut(s)[a] -= learning_rate * g;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "S: Scalar")]
pub struct SqilConfig<S: Scalar = f64> {
    pub lambda_sample: S,
    pub gamma: S,
    pub learning_rate: S,
    pub temperature: S,
    /// Training episodes.
    pub episodes: usize,
    /// Mini-batch size, split evenly between demo and sampled entries.
    pub batch_size: usize,
    /// Gradient steps after each extended action.
    pub updates_per_step: usize,
    pub buffer_capacity: usize,
    pub seed: u64,
}

impl<S: Scalar> Default for SqilConfig<S> {
    fn default() -> Self {
        Self {
            lambda_sample: S::one(),
            gamma: S::lit(0.99),
            learning_rate: S::lit(0.01),
            temperature: S::one(),
            episodes: 100,
            batch_size: 32,
            updates_per_step: 1,
            buffer_capacity: 50_000,
            seed: 0,
        }
    }
}

impl<S: Scalar> SqilConfig<S> {
    // Negated comparisons so that NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ImitateError> {
        let bad = |m: &str| Err(ImitateError::BadConfig(m.into()));
        if !(self.lambda_sample >= S::zero()) {
            return bad("lambda_sample must be >= 0");
        }
        if !(self.gamma > S::zero() && self.gamma <= S::one()) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(self.temperature > S::zero()) {
            return bad("temperature must be positive");
        }
        if !(self.learning_rate > S::zero()) {
            return bad("learning rate must be positive");
        }
        if self.batch_size < 2 {
            return bad("batch size must be at least 2");
        }
        Ok(())
    }
}

/// Trained Q-function plus everything needed to inspect the run.
#[derive(Debug, Clone)]
pub struct SqilRun<S: Scalar = f64> {
    pub q: SoftQ<S>,
    pub space: ActionSpace,
    pub curve: LearningCurve,
    pub datasets: SqilDatasets<S>,
}

/// Train on `demo` with routines from `library`.
///
/// Each episode starts from `reset(config.seed)`. After every extended
/// action the outcome joins `D_sample` and `updates_per_step` SGD steps are
/// taken on balanced batches drawn with replacement.
pub fn train_sqil<S, L, E>(
    env: &mut E,
    demo: &Demonstration,
    library: &RoutineLibrary<L>,
    config: &SqilConfig<S>,
) -> Result<SqilRun<S>, ImitateError>
where
    S: Scalar,
    L: Scalar,
    E: Environment + ?Sized,
{
    config.validate()?;
    let spec = env.spec();
    if demo.env != env.name() || demo.n_actions != spec.n_actions {
        return Err(ImitateError::EnvMismatch {
            demo: demo.env.clone(),
            demo_actions: demo.n_actions,
            env: env.name(),
            env_actions: spec.n_actions,
        });
    }
    let space = ActionSpace::from_library(spec.n_actions, library);
    let gamma = config.gamma;
    let mut data = SqilDatasets::new(
        build_prim_demo(demo),
        build_routine_demo(demo, library, gamma),
        Vec::new(),
        config.buffer_capacity,
    );
    if data.demo_len() == 0 {
        return Err(ImitateError::EmptyDataset);
    }
    let demo_actions = demo.actions();
    let mut q = SoftQ::new(space.len());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let half = config.batch_size / 2;
    let mut curve = LearningCurve::default();
    let mut steps = 0u64;

    for episode in 0..config.episodes {
        let mut s = env.reset(config.seed);
        let mut actions = Vec::new();
        let mut ret = 0.0;
        while !env.is_done() {
            let probs = q.policy(s, config.temperature);
            let idx = sample_index(&probs, S::lit(rng.gen::<f64>()));
            let outcome = step_extended(env, space.get(idx), &space, gamma)?;
            steps += outcome.executed as u64;
            for tr in &outcome.inner {
                actions.push(tr.a);
                ret += tr.r;
            }
            data.push_sample(SqilEntry::from_outcome(&outcome, &space));
            s = outcome.s_end;

            for _ in 0..config.updates_per_step {
                let demo_batch: Vec<&SqilEntry<S>> = (0..half)
                    .map(|_| data.demo_entry(rng.gen_range(0..data.demo_len())))
                    .collect();
                let sample_batch: Vec<&SqilEntry<S>> = (0..half)
                    .map(|_| &data.sample[rng.gen_range(0..data.sample.len())])
                    .collect();
                sgd_step(
                    &mut q,
                    &demo_batch,
                    &sample_batch,
                    config.lambda_sample,
                    gamma,
                    config.learning_rate,
                );
            }
        }
        let alignment = alignment_score::<f64>(&demo_actions, &actions).ok();
        curve.push(CurvePoint {
            episode,
            steps,
            episode_return: ret,
            alignment,
        });
    }
    Ok(SqilRun {
        q,
        space,
        curve,
        datasets: data,
    })
}
