use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::scalar::{softmax, Scalar};
use crate::StateId;

/// How `π` and `V` are parameterized.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approximator {
    /// One logit row and one value per state.
    #[default]
    Tabular,
    /// Logits and value linear in the environment's state features.
    Linear,
}

/// State features for the linear parameterization.
#[derive(Clone)]
pub struct Featurizer(Arc<dyn Fn(StateId) -> Vec<f64> + Send + Sync>);

impl Featurizer {
    pub fn new<F: Fn(StateId) -> Vec<f64> + Send + Sync + 'static>(f: F) -> Self {
        Self(Arc::new(f))
    }

    pub fn features(&self, s: StateId) -> Vec<f64> {
        (self.0)(s)
    }
}

impl fmt::Debug for Featurizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Featurizer")
    }
}

/// `dL/dlogits(s)` and `dL/dV(s)` for the states a loss touched.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradient<S: Scalar = f64> {
    pub policy: BTreeMap<StateId, Vec<S>>,
    pub value: BTreeMap<StateId, S>,
}

impl<S: Scalar> Gradient<S> {
    pub fn add_policy(&mut self, s: StateId, g: &[S]) {
        let row = self
            .policy
            .entry(s)
            .or_insert_with(|| vec![S::zero(); g.len()]);
        for (r, &x) in row.iter_mut().zip(g) {
            *r += x;
        }
    }

    pub fn add_value(&mut self, s: StateId, g: S) {
        *self.value.entry(s).or_insert_with(S::zero) += g;
    }
}

#[derive(Debug, Clone)]
enum Params<S: Scalar> {
    Tabular {
        logits: BTreeMap<StateId, Vec<S>>,
        values: BTreeMap<StateId, S>,
    },
    Linear {
        dim: usize,
        /// Row-major `dim x n_actions`.
        policy: Vec<S>,
        value: Vec<S>,
        features: Featurizer,
        seen: BTreeSet<StateId>,
    },
}

/// Softmax policy and state-value critic over the extended action space.
#[derive(Debug, Clone)]
pub struct ActorCritic<S: Scalar = f64> {
    n_actions: usize,
    params: Params<S>,
}

impl<S: Scalar> ActorCritic<S> {
    /// Zero-initialized table: uniform policy, zero values.
    pub fn tabular(n_actions: usize) -> Self {
        Self {
            n_actions,
            params: Params::Tabular {
                logits: BTreeMap::new(),
                values: BTreeMap::new(),
            },
        }
    }

    pub fn linear(n_actions: usize, dim: usize, features: Featurizer) -> Self {
        Self {
            n_actions,
            params: Params::Linear {
                dim,
                policy: vec![S::zero(); dim * n_actions],
                value: vec![S::zero(); dim],
                features,
                seen: BTreeSet::new(),
            },
        }
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn approximator(&self) -> Approximator {
        match self.params {
            Params::Tabular { .. } => Approximator::Tabular,
            Params::Linear { .. } => Approximator::Linear,
        }
    }

    pub fn logits(&self, s: StateId) -> Vec<S> {
        match &self.params {
            Params::Tabular { logits, .. } => logits
                .get(&s)
                .cloned()
                .unwrap_or_else(|| vec![S::zero(); self.n_actions]),
            Params::Linear {
                policy, features, ..
            } => {
                let phi = features.features(s);
                let mut out = vec![S::zero(); self.n_actions];
                for (f, &x) in phi.iter().enumerate() {
                    if x == 0.0 {
                        continue;
                    }
                    let x = S::lit(x);
                    let row = &policy[f * self.n_actions..(f + 1) * self.n_actions];
                    for (o, &w) in out.iter_mut().zip(row) {
                        *o += x * w;
                    }
                }
                out
            }
        }
    }

    pub fn value(&self, s: StateId) -> S {
        match &self.params {
            Params::Tabular { values, .. } => values.get(&s).copied().unwrap_or_else(S::zero),
            Params::Linear {
                value, features, ..
            } => features
                .features(s)
                .iter()
                .zip(value)
                .filter(|(&x, _)| x != 0.0)
                .map(|(&x, &w)| S::lit(x) * w)
                .sum(),
        }
    }

    pub fn policy(&self, s: StateId) -> Vec<S> {
        softmax(&self.logits(s), S::one())
    }

    /// Overwrite a tabular entry. Panics in linear mode.
    pub fn set_state(&mut self, s: StateId, logits: Vec<S>, value: S) {
        assert_eq!(logits.len(), self.n_actions);
        match &mut self.params {
            Params::Tabular {
                logits: l,
                values,
            } => {
                l.insert(s, logits);
                values.insert(s, value);
            }
            Params::Linear { .. } => panic!("set_state needs a tabular model"),
        }
    }

    /// SGD step `θ -= lr * dL/dθ`.
    pub fn apply(&mut self, grad: &Gradient<S>, learning_rate: S) {
        let m = self.n_actions;
        match &mut self.params {
            Params::Tabular { logits, values } => {
                for (&s, g) in &grad.policy {
                    let row = logits.entry(s).or_insert_with(|| vec![S::zero(); m]);
                    for (w, &d) in row.iter_mut().zip(g) {
                        *w -= learning_rate * d;
                    }
                }
                for (&s, &g) in &grad.value {
                    *values.entry(s).or_insert_with(S::zero) -= learning_rate * g;
                }
            }
            Params::Linear {
                policy,
                value,
                features,
                seen,
                ..
            } => {
                let (dp, dv) = linear_gradient(m, policy.len() / m.max(1), features, grad);
                for (w, d) in policy.iter_mut().zip(dp) {
                    *w -= learning_rate * d;
                }
                for (w, d) in value.iter_mut().zip(dv) {
                    *w -= learning_rate * d;
                }
                seen.extend(grad.policy.keys().chain(grad.value.keys()).copied());
            }
        }
    }

    /// All parameters in a fixed order: tabular logits then values by state,
    /// or the linear policy matrix then the value weights.
    pub fn param_vector(&self) -> Vec<S> {
        match &self.params {
            Params::Tabular { logits, values } => logits
                .values()
                .flatten()
                .copied()
                .chain(values.values().copied())
                .collect(),
            Params::Linear { policy, value, .. } => {
                policy.iter().chain(value).copied().collect()
            }
        }
    }

    pub fn set_param_vector(&mut self, theta: &[S]) {
        let mut it = theta.iter().copied();
        match &mut self.params {
            Params::Tabular { logits, values } => {
                for w in logits.values_mut().flatten().chain(values.values_mut()) {
                    *w = it.next().expect("parameter vector too short");
                }
            }
            Params::Linear { policy, value, .. } => {
                for w in policy.iter_mut().chain(value.iter_mut()) {
                    *w = it.next().expect("parameter vector too short");
                }
            }
        }
        assert!(it.next().is_none(), "parameter vector too long");
    }

    /// `grad` mapped onto [`param_vector`](Self::param_vector)'s layout.
    /// In tabular mode every touched state must already have an entry.
    pub fn flatten_gradient(&self, grad: &Gradient<S>) -> Vec<S> {
        let m = self.n_actions;
        match &self.params {
            Params::Tabular { logits, values } => {
                assert!(
                    grad.policy.keys().all(|s| logits.contains_key(s))
                        && grad.value.keys().all(|s| values.contains_key(s)),
                    "gradient touches a state without parameters"
                );
                let zeros = vec![S::zero(); m];
                let mut out = Vec::new();
                for s in logits.keys() {
                    out.extend_from_slice(grad.policy.get(s).unwrap_or(&zeros));
                }
                for s in values.keys() {
                    out.push(grad.value.get(s).copied().unwrap_or_else(S::zero));
                }
                out
            }
            Params::Linear {
                dim, features, ..
            } => {
                let (dp, dv) = linear_gradient(m, *dim, features, grad);
                dp.into_iter().chain(dv).collect()
            }
        }
    }

    /// States with stored parameters (tabular) or seen in updates (linear).
    pub fn known_states(&self) -> Vec<StateId> {
        match &self.params {
            Params::Tabular { logits, values } => {
                let set: BTreeSet<StateId> = logits.keys().chain(values.keys()).copied().collect();
                set.into_iter().collect()
            }
            Params::Linear { seen, .. } => seen.iter().copied().collect(),
        }
    }

    /// State id to logits over `L̃`, for every known state.
    pub fn policy_dump(&self) -> BTreeMap<StateId, Vec<S>> {
        self.known_states()
            .into_iter()
            .map(|s| (s, self.logits(s)))
            .collect()
    }
}

fn linear_gradient<S: Scalar>(
    m: usize,
    dim: usize,
    features: &Featurizer,
    grad: &Gradient<S>,
) -> (Vec<S>, Vec<S>) {
    let mut dp = vec![S::zero(); dim * m];
    let mut dv = vec![S::zero(); dim];
    for (&s, g) in &grad.policy {
        for (f, &x) in features.features(s).iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let x = S::lit(x);
            for (d, &gk) in dp[f * m..(f + 1) * m].iter_mut().zip(g) {
                *d += x * gk;
            }
        }
    }
    for (&s, &g) in &grad.value {
        for (f, &x) in features.features(s).iter().enumerate() {
            if x != 0.0 {
                dv[f] += S::lit(x) * g;
            }
        }
    }
    (dp, dv)
}
