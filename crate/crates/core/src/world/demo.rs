use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Environment, Transition, WorldError};
use crate::{ActionId, StateId};

/// First line of a demonstration file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemoHeader {
    pub env: String,
    pub seed: u64,
    pub n_actions: usize,
}

/// One recorded episode of primitive transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct Demonstration {
    pub env: String,
    pub seed: u64,
    pub n_actions: usize,
    pub transitions: Vec<Transition>,
    pub total_return: f64,
}

impl Demonstration {
    pub fn new(env: String, seed: u64, n_actions: usize, transitions: Vec<Transition>) -> Self {
        let total_return = transitions.iter().map(|t| t.r).sum();
        Self {
            env,
            seed,
            n_actions,
            transitions,
            total_return,
        }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn actions(&self) -> Vec<ActionId> {
        self.transitions.iter().map(|t| t.a).collect()
    }

    /// `s_0, s_1, ..., s_n`: the state before every step plus the final one.
    pub fn states(&self) -> Vec<StateId> {
        let mut out: Vec<StateId> = self.transitions.iter().map(|t| t.s).collect();
        if let Some(last) = self.transitions.last() {
            out.push(last.s_next);
        }
        out
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), WorldError> {
        let header = DemoHeader {
            env: self.env.clone(),
            seed: self.seed,
            n_actions: self.n_actions,
        };
        writeln!(out, "{}", serde_json::to_string(&header).expect("header serializes"))?;
        for tr in &self.transitions {
            writeln!(out, "{}", serde_json::to_string(tr).expect("transition serializes"))?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self, WorldError> {
        let mut lines = input.lines().enumerate();
        let (_, header) = lines.next().ok_or(WorldError::BadDemo {
            line: 1,
            reason: "missing header".into(),
        })?;
        let header: DemoHeader = serde_json::from_str(&header?).map_err(|e| WorldError::BadDemo {
            line: 1,
            reason: e.to_string(),
        })?;
        let mut transitions = Vec::new();
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let tr: Transition = serde_json::from_str(&line).map_err(|e| WorldError::BadDemo {
                line: i + 1,
                reason: e.to_string(),
            })?;
            if tr.t != transitions.len() as u64 {
                return Err(WorldError::BadDemo {
                    line: i + 1,
                    reason: format!("expected t = {}, found {}", transitions.len(), tr.t),
                });
            }
            transitions.push(tr);
        }
        Ok(Self::new(header.env, header.seed, header.n_actions, transitions))
    }
}

/// Roll out one full episode of `policy` from `reset(seed)`.
pub fn record_demo<E, P>(env: &mut E, mut policy: P, seed: u64) -> Result<Demonstration, WorldError>
where
    E: Environment + ?Sized,
    P: FnMut(StateId) -> ActionId,
{
    let mut s = env.reset(seed);
    let mut transitions = Vec::new();
    while !env.is_done() {
        let tr = env.step(policy(s))?;
        s = tr.s_next;
        transitions.push(tr);
    }
    let spec = env.spec();
    Ok(Demonstration::new(env.name(), seed, spec.n_actions, transitions))
}

/// Record the world's scripted expert, replacing its action with a uniformly
/// random one with probability `epsilon` (seeded by `seed`).
pub fn record_expert_demo<E: Environment + Clone>(
    env: &mut E,
    epsilon: f64,
    seed: u64,
) -> Result<Demonstration, WorldError> {
    let oracle = env.clone();
    let n_actions = env.spec().n_actions;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    record_demo(
        env,
        |s| {
            if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
                rng.gen_range(0..n_actions) as ActionId
            } else {
                oracle.expert_action(s)
            }
        },
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Corridor;

    #[test]
    fn corridor_expert_walks_the_motif() {
        let mut c = Corridor::new(8, 64).unwrap();
        let demo = record_expert_demo(&mut c, 0.0, 3).unwrap();
        assert_eq!(demo.actions(), vec![1, 1, 2, 1, 1, 2, 1]);
        assert_eq!(demo.total_return, 1.0);
        assert!(demo.transitions.last().unwrap().done);
        assert_eq!(demo.states(), (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn jsonl_layout() {
        let mut c = Corridor::new(4, 64).unwrap();
        let demo = record_expert_demo(&mut c, 0.0, 5).unwrap();
        let text = demo.to_jsonl();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            r#"{"env":"corridor-4","seed":5,"n_actions":4}"#
        );
        assert_eq!(
            lines.next().unwrap(),
            r#"{"t":0,"s":0,"a":1,"r":0.0,"sn":1,"done":false}"#
        );
    }

    #[test]
    fn jsonl_rejects_gaps_in_time() {
        let text = "{\"env\":\"x\",\"seed\":0,\"n_actions\":2}\n{\"t\":1,\"s\":0,\"a\":1,\"r\":0.0,\"sn\":1,\"done\":false}\n";
        assert!(matches!(
            Demonstration::read_jsonl(text.as_bytes()),
            Err(WorldError::BadDemo { line: 2, .. })
        ));
    }
}
