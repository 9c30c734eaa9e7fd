use serde::{Deserialize, Serialize};

use crate::world::{step_extended, ActionSpace, Corridor, Environment, Transition, World, WorldError};
use crate::{ActionId, StateId};

/// Greedy roll-outs of a trained policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub returns: Vec<f64>,
    pub mean_return: f64,
    /// Fraction of corridor gates crossed, averaged over episodes; `None`
    /// for worlds without gates.
    pub gate_success: Option<f64>,
    /// Primitive actions of the first episode.
    pub first_actions: Vec<ActionId>,
}

/// Run `episodes` episodes from `reset(seed)`, choosing the extended action
/// `policy(s)` at every decision point.
pub fn evaluate_greedy<P>(
    env: &mut World,
    space: &ActionSpace,
    policy: P,
    episodes: usize,
    seed: u64,
) -> Result<Evaluation, WorldError>
where
    P: Fn(StateId) -> usize,
{
    let gamma = env.spec().gamma;
    let mut returns = Vec::with_capacity(episodes);
    let mut gates = Vec::new();
    let mut first_actions = Vec::new();
    for episode in 0..episodes {
        let mut s = env.reset(seed);
        let mut transitions = Vec::new();
        while !env.is_done() {
            let outcome = step_extended(env, space.get(policy(s)), space, gamma)?;
            s = outcome.s_end;
            transitions.extend(outcome.inner);
        }
        returns.push(transitions.iter().map(|tr| tr.r).sum());
        if let World::Corridor(c) = env {
            gates.extend(gate_success(c, &transitions));
        }
        if episode == 0 {
            first_actions = transitions.iter().map(|tr| tr.a).collect();
        }
    }
    let mean_return = if returns.is_empty() {
        0.0
    } else {
        returns.iter().sum::<f64>() / returns.len() as f64
    };
    let gate_success = (!gates.is_empty()).then(|| gates.iter().sum::<f64>() / gates.len() as f64);
    Ok(Evaluation {
        returns,
        mean_return,
        gate_success,
        first_actions,
    })
}

/// Fraction of the corridor's gates the episode moved past.
pub fn gate_success(corridor: &Corridor, transitions: &[Transition]) -> Option<f64> {
    let gates = corridor.gates();
    if gates.is_empty() {
        return None;
    }
    let crossed = gates
        .iter()
        .filter(|&&g| {
            transitions
                .iter()
                .any(|tr| tr.s == g as StateId && tr.s_next == g as StateId + 1)
        })
        .count();
    Some(crossed as f64 / gates.len() as f64)
}
