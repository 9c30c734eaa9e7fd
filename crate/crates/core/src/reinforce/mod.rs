//! Advantage actor-critic over the routine-augmented action space.
//!
//! Each update uses one on-policy segment of up to `N` extended steps. The
//! critic is regressed on routine-level advantages (discounting by the
//! executed duration) and, when a library is present, on one primitive-level
//! window drawn from the segment's inner transitions. With an empty library
//! the learner is plain n-step A2C.

mod loss;
mod model;
mod segment;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::world::WorldError;

pub use loss::{a2c_loss, entropy_term, A2cLoss};
pub use model::{ActorCritic, Approximator, Featurizer, Gradient};
pub use segment::{
    primitive_advantage, routine_advantage, sample_window, step_terms, suffix_advantages,
    suffix_returns, RolloutSegment, SegmentStep,
};
pub use train::{train_a2c, train_a2c_with, A2cRun};

#[derive(Debug, Error)]
pub enum ReinforceError {
    #[error("invalid A2C configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    World(#[from] WorldError),
}

/// How routine outcomes enter the returns.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum A2cMode {
    /// Discounted inner rewards, `γ^{|ρ̃|}` per step, primitive windows.
    #[default]
    Rapl,
    /// Routines as opaque actions: undiscounted reward sums, `γ` per step,
    /// no primitive windows.
    Macro,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "S: Scalar")]
pub struct A2cConfig<S: Scalar = f64> {
    /// Extended steps per segment.
    pub n_steps: usize,
    pub lambda_value: S,
    pub lambda_prim: S,
    pub lambda_entropy: S,
    pub learning_rate: S,
    pub gamma: S,
    /// Primitive environment steps.
    pub step_budget: u64,
    pub seed: u64,
    pub mode: A2cMode,
    pub approximator: Approximator,
}

impl<S: Scalar> Default for A2cConfig<S> {
    fn default() -> Self {
        Self {
            n_steps: 5,
            lambda_value: S::lit(0.5),
            lambda_prim: S::one(),
            lambda_entropy: S::lit(0.01),
            learning_rate: S::lit(7e-4),
            gamma: S::lit(0.99),
            step_budget: 50_000,
            seed: 0,
            mode: A2cMode::Rapl,
            approximator: Approximator::Tabular,
        }
    }
}

impl<S: Scalar> A2cConfig<S> {
    // Negated comparisons so that NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ReinforceError> {
        let bad = |m: &str| Err(ReinforceError::BadConfig(m.into()));
        if self.n_steps == 0 {
            return bad("n_steps must be at least 1");
        }
        if !(self.lambda_value >= S::zero()
            && self.lambda_prim >= S::zero()
            && self.lambda_entropy >= S::zero())
        {
            return bad("balancing factors must be >= 0");
        }
        if !(self.gamma > S::zero() && self.gamma <= S::one()) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(self.learning_rate > S::zero()) {
            return bad("learning rate must be positive");
        }
        Ok(())
    }
}
