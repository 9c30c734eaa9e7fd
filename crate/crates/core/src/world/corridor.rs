use super::{Environment, MdpSpec, Transition, WorldError};
use crate::{ActionId, StateId};

pub const DEFAULT_LENGTH: usize = 24;
pub const DEFAULT_STEP_CAP: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum CorridorAction {
    Left = 0,
    Right = 1,
    Up = 2,
    Noop = 3,
}

/// A 1 x L strip. The agent starts in cell 0 and the goal is cell L-1.
///
/// Every third cell (x % 3 == 2) is a gate: RIGHT bumps into it like a wall
/// and only UP passes through to the next cell. Off the gates UP does
/// nothing. The fastest way along the strip is therefore the motif
/// RIGHT, RIGHT, UP repeated. Reward is +1 on reaching the goal, else 0.
#[derive(Debug, Clone)]
pub struct Corridor {
    length: usize,
    step_cap: usize,
    pos: usize,
    t: u64,
    done: bool,
}

impl Corridor {
    pub fn new(length: usize, step_cap: usize) -> Result<Self, WorldError> {
        if length < 2 {
            return Err(WorldError::BadConfig(format!(
                "corridor length must be at least 2, got {length}"
            )));
        }
        if step_cap == 0 {
            return Err(WorldError::BadConfig("step cap must be positive".into()));
        }
        Ok(Self {
            length,
            step_cap,
            pos: 0,
            t: 0,
            done: false,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn goal(&self) -> usize {
        self.length - 1
    }

    pub fn is_gate(&self, x: usize) -> bool {
        x % 3 == 2 && x != self.goal()
    }

    /// Gate cells strictly before the goal.
    pub fn gates(&self) -> Vec<usize> {
        (0..self.goal()).filter(|&x| self.is_gate(x)).collect()
    }

    /// Next position under the deterministic dynamics.
    pub fn next_position(&self, x: usize, action: ActionId) -> usize {
        match action {
            a if a == CorridorAction::Left as u32 => x.saturating_sub(1),
            a if a == CorridorAction::Right as u32 && !self.is_gate(x) => (x + 1).min(self.goal()),
            a if a == CorridorAction::Up as u32 && self.is_gate(x) => x + 1,
            _ => x,
        }
    }
}

impl Environment for Corridor {
    fn spec(&self) -> MdpSpec {
        MdpSpec {
            n_states: Some(self.length as u64),
            feature_dim: self.length,
            n_actions: 4,
            gamma: 0.99,
            step_cap: self.step_cap,
        }
    }

    fn name(&self) -> String {
        format!("corridor-{}", self.length)
    }

    fn reset(&mut self, _seed: u64) -> StateId {
        self.pos = 0;
        self.t = 0;
        self.done = false;
        0
    }

    fn step(&mut self, action: ActionId) -> Result<Transition, WorldError> {
        if self.done {
            return Err(WorldError::EpisodeFinished);
        }
        if action >= 4 {
            return Err(WorldError::ActionOutOfRange {
                action,
                n_actions: 4,
            });
        }
        let s = self.pos as StateId;
        self.pos = self.next_position(self.pos, action);
        let reached = self.pos == self.goal();
        let tr = Transition {
            t: self.t,
            s,
            a: action,
            r: if reached { 1.0 } else { 0.0 },
            s_next: self.pos as StateId,
            done: reached || self.t + 1 >= self.step_cap as u64,
        };
        self.t += 1;
        self.done = tr.done;
        Ok(tr)
    }

    fn state(&self) -> StateId {
        self.pos as StateId
    }

    fn is_done(&self) -> bool {
        self.done
    }

    fn features(&self, state: StateId) -> Vec<f64> {
        let mut f = vec![0.0; self.length];
        f[state as usize] = 1.0;
        f
    }

    fn expert_action(&self, state: StateId) -> ActionId {
        if self.is_gate(state as usize) {
            CorridorAction::Up as ActionId
        } else {
            CorridorAction::Right as ActionId
        }
    }
}
