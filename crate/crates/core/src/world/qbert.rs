use std::collections::VecDeque;

use super::{Environment, MdpSpec, Transition, WorldError};
use crate::{ActionId, StateId};

pub const DEFAULT_SIZE: usize = 4;
pub const DEFAULT_STEP_CAP: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum QbertAction {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
}

const MOVES: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

/// An n x n board where every square starts uncolored. Stepping onto an
/// uncolored square colors it and pays +1; the episode ends once every
/// square is colored (or at the step cap). The agent starts on the top-left
/// square, which is only colored when the agent steps back onto it.
///
/// State ids pack `position << n*n | colored_bitmap`.
#[derive(Debug, Clone)]
pub struct MiniQbert {
    size: usize,
    step_cap: usize,
    pos: usize,
    colored: u64,
    t: u64,
    done: bool,
}

impl MiniQbert {
    pub fn new(size: usize, step_cap: usize) -> Result<Self, WorldError> {
        if !(2..=7).contains(&size) {
            return Err(WorldError::BadConfig(format!(
                "mini-Qbert board size must be in 2..=7, got {size}"
            )));
        }
        if step_cap == 0 {
            return Err(WorldError::BadConfig("step cap must be positive".into()));
        }
        Ok(Self {
            size,
            step_cap,
            pos: 0,
            colored: 0,
            t: 0,
            done: false,
        })
    }

    pub fn squares(&self) -> usize {
        self.size * self.size
    }

    fn full_mask(&self) -> u64 {
        (1u64 << self.squares()) - 1
    }

    pub fn encode(&self, pos: usize, colored: u64) -> StateId {
        ((pos as u64) << self.squares()) | colored
    }

    pub fn decode(&self, state: StateId) -> (usize, u64) {
        ((state >> self.squares()) as usize, state & self.full_mask())
    }

    /// Square reached by `action` from `pos`; walls leave it unchanged.
    pub fn neighbor(&self, pos: usize, action: ActionId) -> usize {
        let (dr, dc) = MOVES[action as usize];
        let (r, c) = ((pos / self.size) as isize + dr, (pos % self.size) as isize + dc);
        let n = self.size as isize;
        if (0..n).contains(&r) && (0..n).contains(&c) {
            (r * n + c) as usize
        } else {
            pos
        }
    }
}

impl Environment for MiniQbert {
    fn spec(&self) -> MdpSpec {
        MdpSpec {
            n_states: Some((self.squares() as u64) << self.squares()),
            feature_dim: 2 * self.squares(),
            n_actions: 4,
            gamma: 0.99,
            step_cap: self.step_cap,
        }
    }

    fn name(&self) -> String {
        format!("mini-qbert-{}", self.size)
    }

    fn reset(&mut self, _seed: u64) -> StateId {
        self.pos = 0;
        self.colored = 0;
        self.t = 0;
        self.done = false;
        self.state()
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
        let s = self.state();
        let next = self.neighbor(self.pos, action);
        let mut r = 0.0;
        if next != self.pos {
            self.pos = next;
            if self.colored & (1 << next) == 0 {
                self.colored |= 1 << next;
                r = 1.0;
            }
        }
        let all = self.colored == self.full_mask();
        let tr = Transition {
            t: self.t,
            s,
            a: action,
            r,
            s_next: self.state(),
            done: all || self.t + 1 >= self.step_cap as u64,
        };
        self.t += 1;
        self.done = tr.done;
        Ok(tr)
    }

    fn state(&self) -> StateId {
        self.encode(self.pos, self.colored)
    }

    fn is_done(&self) -> bool {
        self.done
    }

    fn features(&self, state: StateId) -> Vec<f64> {
        let (pos, colored) = self.decode(state);
        let n = self.squares();
        let mut f = vec![0.0; 2 * n];
        f[pos] = 1.0;
        for (i, slot) in f[n..].iter_mut().enumerate() {
            if colored & (1 << i) != 0 {
                *slot = 1.0;
            }
        }
        f
    }

    /// First move of a shortest path to the nearest uncolored square other
    /// than the current one, falling back to stepping off and back on.
    fn expert_action(&self, state: StateId) -> ActionId {
        let (pos, colored) = self.decode(state);
        let n = self.squares();
        let mut first_move = vec![None::<ActionId>; n];
        let mut seen = vec![false; n];
        seen[pos] = true;
        let mut queue = VecDeque::new();
        for a in 0..4u32 {
            let nb = self.neighbor(pos, a);
            if !seen[nb] {
                seen[nb] = true;
                first_move[nb] = Some(a);
                queue.push_back(nb);
            }
        }
        while let Some(cell) = queue.pop_front() {
            if colored & (1 << cell) == 0 {
                return first_move[cell].expect("queued cells carry a first move");
            }
            for a in 0..4u32 {
                let nb = self.neighbor(cell, a);
                if !seen[nb] {
                    seen[nb] = true;
                    first_move[nb] = first_move[cell];
                    queue.push_back(nb);
                }
            }
        }
        (0..4u32)
            .find(|&a| self.neighbor(pos, a) != pos)
            .expect("every square has a neighbor")
    }
}
