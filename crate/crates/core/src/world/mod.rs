//! Discrete worlds, routine execution as temporally extended actions, and
//! demonstration recording.

mod corridor;
mod demo;
mod extended;
mod qbert;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{ActionId, StateId};

pub use corridor::{Corridor, CorridorAction};
pub use demo::{record_demo, record_expert_demo, Demonstration, DemoHeader};
pub use extended::{step_extended, ActionSpace, ExtendedAction, RoutineOutcome};
pub use qbert::{MiniQbert, QbertAction};

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("action {action} is out of range for {n_actions} actions")]
    ActionOutOfRange { action: ActionId, n_actions: usize },
    #[error("extended action index {index} is out of range for {len} extended actions")]
    ExtendedOutOfRange { index: usize, len: usize },
    #[error("routine {index} does not exist in a library of {len}")]
    RoutineOutOfRange { index: usize, len: usize },
    #[error("the episode has already finished; reset first")]
    EpisodeFinished,
    #[error("invalid world configuration: {0}")]
    BadConfig(String),
    #[error("malformed demonstration at line {line}: {reason}")]
    BadDemo { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Static description of a world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdpSpec {
    /// Number of enumerable state ids, when small enough to enumerate.
    pub n_states: Option<u64>,
    pub feature_dim: usize,
    pub n_actions: usize,
    pub gamma: f64,
    pub step_cap: usize,
}

/// One primitive step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub t: u64,
    pub s: StateId,
    pub a: ActionId,
    pub r: f64,
    #[serde(rename = "sn")]
    pub s_next: StateId,
    pub done: bool,
}

/// A deterministic episodic world with integer states and actions.
pub trait Environment {
    fn spec(&self) -> MdpSpec;

    /// Stable identifier written into demonstration headers.
    fn name(&self) -> String;

    fn reset(&mut self, seed: u64) -> StateId;

    fn step(&mut self, action: ActionId) -> Result<Transition, WorldError>;

    fn state(&self) -> StateId;

    fn is_done(&self) -> bool;

    /// Fixed-length encoding of a state for linear function approximation.
    fn features(&self, state: StateId) -> Vec<f64>;

    /// Action of the built-in scripted expert in `state`.
    fn expert_action(&self, state: StateId) -> ActionId;
}

/// World selection as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvConfig {
    Corridor {
        #[serde(default = "default_corridor_length")]
        length: usize,
        #[serde(default = "default_corridor_cap")]
        step_cap: usize,
    },
    MiniQbert {
        #[serde(default = "default_qbert_size")]
        size: usize,
        #[serde(default = "default_qbert_cap")]
        step_cap: usize,
    },
}

fn default_corridor_length() -> usize {
    corridor::DEFAULT_LENGTH
}

fn default_corridor_cap() -> usize {
    corridor::DEFAULT_STEP_CAP
}

fn default_qbert_size() -> usize {
    qbert::DEFAULT_SIZE
}

fn default_qbert_cap() -> usize {
    qbert::DEFAULT_STEP_CAP
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig::Corridor {
            length: corridor::DEFAULT_LENGTH,
            step_cap: corridor::DEFAULT_STEP_CAP,
        }
    }
}

impl EnvConfig {
    pub fn build(&self) -> Result<World, WorldError> {
        Ok(match *self {
            EnvConfig::Corridor { length, step_cap } => {
                World::Corridor(Corridor::new(length, step_cap)?)
            }
            EnvConfig::MiniQbert { size, step_cap } => {
                World::MiniQbert(MiniQbert::new(size, step_cap)?)
            }
        })
    }
}

/// Closed set of built-in worlds.
#[derive(Debug, Clone)]
pub enum World {
    Corridor(Corridor),
    MiniQbert(MiniQbert),
}

macro_rules! delegate {
    ($self:ident, $w:ident => $e:expr) => {
        match $self {
            World::Corridor($w) => $e,
            World::MiniQbert($w) => $e,
        }
    };
}

impl Environment for World {
    fn spec(&self) -> MdpSpec {
        delegate!(self, w => w.spec())
    }

    fn name(&self) -> String {
        delegate!(self, w => w.name())
    }

    fn reset(&mut self, seed: u64) -> StateId {
        delegate!(self, w => w.reset(seed))
    }

    fn step(&mut self, action: ActionId) -> Result<Transition, WorldError> {
        delegate!(self, w => w.step(action))
    }

    fn state(&self) -> StateId {
        delegate!(self, w => w.state())
    }

    fn is_done(&self) -> bool {
        delegate!(self, w => w.is_done())
    }

    fn features(&self, state: StateId) -> Vec<f64> {
        delegate!(self, w => w.features(state))
    }

    fn expert_action(&self, state: StateId) -> ActionId {
        delegate!(self, w => w.expert_action(state))
    }
}
