use serde::{Deserialize, Serialize};

use super::{Environment, Transition, WorldError};
use crate::discovery::{Routine, RoutineLibrary};
use crate::scalar::Scalar;
use crate::{ActionId, StateId};

/// An element of the routine-augmented action space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtendedAction {
    Primitive(ActionId),
    /// Index into the routine library.
    Routine(usize),
}

/// Primitive actions followed by library routines, with a dense index:
/// `0..n_primitive` are primitives and `n_primitive + i` is routine `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSpace {
    n_primitive: usize,
    routines: Vec<Routine>,
}

impl ActionSpace {
    pub fn new(n_primitive: usize, routines: Vec<Routine>) -> Self {
        Self {
            n_primitive,
            routines,
        }
    }

    pub fn primitive_only(n_primitive: usize) -> Self {
        Self::new(n_primitive, Vec::new())
    }

    pub fn from_library<S: Scalar>(n_primitive: usize, library: &RoutineLibrary<S>) -> Self {
        Self::new(n_primitive, library.routines.clone())
    }

    /// Size of the augmented space.
    pub fn len(&self) -> usize {
        self.n_primitive + self.routines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_primitive(&self) -> usize {
        self.n_primitive
    }

    pub fn routines(&self) -> &[Routine] {
        &self.routines
    }

    pub fn get(&self, index: usize) -> ExtendedAction {
        if index < self.n_primitive {
            ExtendedAction::Primitive(index as ActionId)
        } else {
            ExtendedAction::Routine(index - self.n_primitive)
        }
    }

    pub fn index_of(&self, action: ExtendedAction) -> usize {
        match action {
            ExtendedAction::Primitive(a) => a as usize,
            ExtendedAction::Routine(i) => self.n_primitive + i,
        }
    }

    /// Primitive actions the extended action expands to.
    pub fn primitives(&self, action: ExtendedAction) -> Result<Vec<ActionId>, WorldError> {
        match action {
            ExtendedAction::Primitive(a) if (a as usize) < self.n_primitive => Ok(vec![a]),
            ExtendedAction::Primitive(a) => Err(WorldError::ActionOutOfRange {
                action: a,
                n_actions: self.n_primitive,
            }),
            ExtendedAction::Routine(i) => self
                .routines
                .get(i)
                .map(|r| r.actions().to_vec())
                .ok_or(WorldError::RoutineOutOfRange {
                    index: i,
                    len: self.routines.len(),
                }),
        }
    }

    /// Nominal length: 1 for primitives, routine length otherwise.
    pub fn nominal_len(&self, action: ExtendedAction) -> usize {
        match action {
            ExtendedAction::Primitive(_) => 1,
            ExtendedAction::Routine(i) => self.routines[i].len(),
        }
    }
}

/// Result of executing one extended action.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutineOutcome<S: Scalar = f64> {
    pub action: ExtendedAction,
    pub s_start: StateId,
    pub s_end: StateId,
    /// Sum over executed steps of `gamma^i * r_i`.
    pub discounted_reward: S,
    /// `gamma^executed`.
    pub discount: S,
    pub executed: usize,
    pub terminated: bool,
    pub inner: Vec<Transition>,
}

impl<S: Scalar> RoutineOutcome<S> {
    /// Undiscounted sum of the inner rewards.
    pub fn reward_sum(&self) -> S {
        self.inner.iter().map(|tr| S::lit(tr.r)).sum()
    }
}

/// Execute the primitives of `action` in order, stopping early at the end
/// of the episode.
pub fn step_extended<S: Scalar, E: Environment + ?Sized>(
    env: &mut E,
    action: ExtendedAction,
    space: &ActionSpace,
    gamma: S,
) -> Result<RoutineOutcome<S>, WorldError> {
    let primitives = space.primitives(action)?;
    let s_start = env.state();
    let mut inner = Vec::with_capacity(primitives.len());
    let mut discounted_reward = S::zero();
    let mut discount = S::one();
    let mut terminated = false;
    for a in primitives {
        let tr = env.step(a)?;
        discounted_reward += discount * S::lit(tr.r);
        discount *= gamma;
        inner.push(tr);
        if tr.done {
            terminated = true;
            break;
        }
    }
    let s_end = inner.last().map_or(s_start, |tr| tr.s_next);
    Ok(RoutineOutcome {
        action,
        s_start,
        s_end,
        discounted_reward,
        discount,
        executed: inner.len(),
        terminated,
        inner,
    })
}
