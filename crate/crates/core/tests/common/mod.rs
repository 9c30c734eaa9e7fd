//! Test-only oracles. Nothing here calls into the code path it checks
//! except for environment stepping and seeding.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rapl::reinforce::{a2c_loss, A2cConfig, A2cMode, ActorCritic, RolloutSegment, SegmentStep};
use rapl::world::{Demonstration, Environment, ExtendedAction, RoutineOutcome, Transition};

/// Edit distance from the full `(n+1) x (m+1)` table.
pub fn levenshtein_table(a: &[u32], b: &[u32]) -> usize {
    let (n, m) = (a.len(), b.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[n][m]
}

/// Non-overlapping occurrences by a left-to-right scan.
pub fn count_greedy(routine: &[u32], trajectory: &[u32]) -> usize {
    let mut count = 0;
    let mut i = 0;
    while i + routine.len() <= trajectory.len() {
        if &trajectory[i..i + routine.len()] == routine {
            count += 1;
            i += routine.len();
        } else {
            i += 1;
        }
    }
    count
}

/// Candidates sorted by score (descending), then length (descending), then
/// lexicographically, with their scores.
pub fn ranked(candidates: &[Vec<u32>], trajectory: &[u32], lambda: f64) -> Vec<(Vec<u32>, f64)> {
    let mut unique: Vec<Vec<u32>> = Vec::new();
    for c in candidates {
        if !unique.contains(c) {
            unique.push(c.clone());
        }
    }
    let mut scored: Vec<(Vec<u32>, f64)> = unique
        .into_iter()
        .map(|c| {
            let s = count_greedy(&c, trajectory) as f64 + lambda * c.len() as f64;
            (c, s)
        })
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then(b.0.len().cmp(&a.0.len()))
            .then(a.0.cmp(&b.0))
    });
    scored
}

/// Selection by replaying the add-then-resolve loop: each candidate (in
/// rank order) joins the library, then pairs closer than `alpha` are
/// resolved in favor of the better-ranked routine; finally the library is
/// cut to the `k` best.
pub fn select_by_replay(candidates: &[Vec<u32>], trajectory: &[u32], k: usize, alpha: usize, lambda: f64) -> Vec<Vec<u32>> {
    let order = ranked(candidates, trajectory, lambda);
    let rank = |r: &Vec<u32>| order.iter().position(|(c, _)| c == r).unwrap();
    let mut library: Vec<Vec<u32>> = Vec::new();
    for (cand, _) in &order {
        library.push(cand.clone());
        // Resolve close pairs one at a time, always discarding the
        // worse-ranked member of the worst pair.
        loop {
            let mut worst: Option<usize> = None;
            for (i, a) in library.iter().enumerate() {
                for b in &library[i + 1..] {
                    if levenshtein_table(a, b) < alpha {
                        let loser = if rank(a) > rank(b) { a } else { b };
                        let idx = library.iter().position(|r| r == loser).unwrap();
                        if worst.is_none_or(|w| rank(&library[w]) < rank(loser)) {
                            worst = Some(idx);
                        }
                    }
                }
            }
            match worst {
                Some(idx) => {
                    library.remove(idx);
                }
                None => break,
            }
        }
    }
    library.sort_by_key(|r| rank(r));
    library.truncate(k);
    library
}

/// Selection by enumeration: among all subsets whose members are pairwise at
/// distance `>= alpha`, the one that is lexicographically greatest when
/// membership is read in rank order; then the `k` best of it.
pub fn select_by_enumeration(candidates: &[Vec<u32>], trajectory: &[u32], k: usize, alpha: usize, lambda: f64) -> Vec<Vec<u32>> {
    let order = ranked(candidates, trajectory, lambda);
    let n = order.len();
    assert!(n <= 16, "enumeration oracle is exponential");
    let mut best: Option<u32> = None;
    let key = |mask: u32| -> u32 {
        // Bit n-1-i set when rank i is present, so higher ranks dominate.
        (0..n).filter(|i| mask & (1 << i) != 0).map(|i| 1u32 << (n - 1 - i)).sum()
    };
    for mask in 0u32..(1u32 << n) {
        let members: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let independent = members.iter().enumerate().all(|(x, &i)| {
            members[x + 1..]
                .iter()
                .all(|&j| levenshtein_table(&order[i].0, &order[j].0) >= alpha)
        });
        if independent && best.is_none_or(|b| key(mask) > key(b)) {
            best = Some(mask);
        }
    }
    let mask = best.unwrap_or(0);
    (0..n)
        .filter(|i| mask & (1 << i) != 0)
        .map(|i| order[i].0.clone())
        .take(k)
        .collect()
}

fn reference_lse(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

fn reference_softmax(xs: &[f64], temperature: f64) -> Vec<f64> {
    let scaled: Vec<f64> = xs.iter().map(|&x| x / temperature).collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scaled.iter().map(|&x| (x - max).exp()).collect();
    let total: f64 = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn draw(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// What a plain learner produced, in a form both implementations can be
/// compared on.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    /// `(steps, return)` per finished episode.
    pub episodes: Vec<(u64, f64)>,
    /// Every learned value keyed by `(state, action)`; values keyed by
    /// `action == usize::MAX` for critics.
    pub table: Vec<((u64, usize), f64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct PlainSqil {
    pub lambda_sample: f64,
    pub gamma: f64,
    pub learning_rate: f64,
    pub temperature: f64,
    pub episodes: usize,
    pub batch_size: usize,
    pub updates_per_step: usize,
    pub buffer_capacity: usize,
    pub seed: u64,
}

/// Textbook tabular SQIL over primitive actions: reward 1 on demo
/// transitions, 0 on the agent's own, soft Bellman targets, balanced
/// batches drawn with replacement.
pub fn plain_sqil<E: Environment>(env: &mut E, demo: &Demonstration, p: PlainSqil) -> Trace {
    let n_actions = env.spec().n_actions;
    let mut q: HashMap<(u64, usize), f64> = HashMap::new();
    let qrow = |q: &HashMap<(u64, usize), f64>, s: u64| -> Vec<f64> {
        (0..n_actions).map(|a| *q.get(&(s, a)).unwrap_or(&0.0)).collect()
    };
    let demo_set: Vec<Transition> = demo.transitions.clone();
    let mut replay: std::collections::VecDeque<Transition> = Default::default();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let half = p.batch_size / 2;
    let mut steps = 0u64;
    let mut episodes = Vec::new();
    for _ in 0..p.episodes {
        let mut s = env.reset(p.seed);
        let mut ret = 0.0;
        while !env.is_done() {
            let probs = reference_softmax(&qrow(&q, s), p.temperature);
            let a = draw(&probs, rng.gen::<f64>());
            let tr = env.step(a as u32).unwrap();
            steps += 1;
            ret += tr.r;
            if replay.len() == p.buffer_capacity {
                replay.pop_front();
            }
            replay.push_back(tr);
            s = tr.s_next;
            for _ in 0..p.updates_per_step {
                let demo_batch: Vec<Transition> = (0..half)
                    .map(|_| demo_set[rng.gen_range(0..demo_set.len())])
                    .collect();
                let sample_batch: Vec<Transition> = (0..half)
                    .map(|_| replay[rng.gen_range(0..replay.len())])
                    .collect();
                let mut updates = Vec::new();
                let target = |q: &HashMap<(u64, usize), f64>, t: &Transition, r: f64| {
                    if t.done {
                        r
                    } else {
                        r + p.gamma * reference_lse(&qrow(q, t.s_next))
                    }
                };
                let demo_scale = 2.0 / half as f64;
                for t in &demo_batch {
                    let res = q.get(&(t.s, t.a as usize)).unwrap_or(&0.0) - target(&q, t, 1.0);
                    updates.push(((t.s, t.a as usize), demo_scale * res));
                }
                let sample_scale = p.lambda_sample * 2.0 / half as f64;
                for t in &sample_batch {
                    let res = q.get(&(t.s, t.a as usize)).unwrap_or(&0.0) - target(&q, t, 0.0);
                    updates.push(((t.s, t.a as usize), sample_scale * res));
                }
                for (key, g) in updates {
                    // Touching a state materializes its whole row.
                    for a in 0..n_actions {
                        q.entry((key.0, a)).or_insert(0.0);
                    }
                    *q.get_mut(&key).unwrap() -= p.learning_rate * g;
                }
            }
        }
        episodes.push((steps, ret));
    }
    let mut table: Vec<((u64, usize), f64)> = q.into_iter().collect();
    table.sort_by_key(|e| e.0);
    Trace { episodes, table }
}

#[derive(Debug, Clone, Copy)]
pub struct PlainA2c {
    pub n_steps: usize,
    pub lambda_value: f64,
    pub lambda_entropy: f64,
    pub learning_rate: f64,
    pub gamma: f64,
    pub step_budget: u64,
    pub seed: u64,
}

/// Textbook tabular n-step A2C over primitive actions, one update per
/// rollout of up to `n_steps` transitions, averaged over the rollout.
pub fn plain_a2c<E: Environment>(env: &mut E, p: PlainA2c) -> Trace {
    let m = env.spec().n_actions;
    let mut logits: HashMap<u64, Vec<f64>> = HashMap::new();
    let mut values: HashMap<u64, f64> = HashMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut s = env.reset(p.seed);
    let mut steps = 0u64;
    let mut ret = 0.0;
    let mut episodes = Vec::new();
    while steps < p.step_budget {
        let mut rollout: Vec<(Transition, usize)> = Vec::new();
        while rollout.len() < p.n_steps {
            let z = logits.get(&s).cloned().unwrap_or_else(|| vec![0.0; m]);
            let a = draw(&reference_softmax(&z, 1.0), rng.gen::<f64>());
            let tr = env.step(a as u32).unwrap();
            steps += 1;
            ret += tr.r;
            s = tr.s_next;
            rollout.push((tr, a));
            if tr.done {
                break;
            }
        }
        let v = |values: &HashMap<u64, f64>, s: u64| *values.get(&s).unwrap_or(&0.0);
        let last = rollout.last().unwrap().0;
        let mut g = if last.done { 0.0 } else { v(&values, last.s_next) };
        let mut returns = vec![0.0; rollout.len()];
        for (i, (tr, _)) in rollout.iter().enumerate().rev() {
            g = tr.r + p.gamma * g;
            returns[i] = g;
        }
        let n = rollout.len() as f64;
        let mut dlogits: std::collections::BTreeMap<u64, Vec<f64>> = Default::default();
        let mut dvalues: std::collections::BTreeMap<u64, f64> = Default::default();
        for ((tr, a), g) in rollout.iter().zip(&returns) {
            let z = logits.get(&tr.s).cloned().unwrap_or_else(|| vec![0.0; m]);
            let lse = reference_lse(&z);
            let logp: Vec<f64> = z.iter().map(|&x| x - lse).collect();
            let probs: Vec<f64> = logp.iter().map(|&l| l.exp()).collect();
            let neg_h: f64 = probs.iter().zip(&logp).map(|(&p, &l)| p * l).sum();
            let adv = g - v(&values, tr.s);
            let row = dlogits.entry(tr.s).or_insert_with(|| vec![0.0; m]);
            for k in 0..m {
                let onehot = if k == *a { 1.0 } else { 0.0 };
                row[k] += (-adv * (onehot - probs[k]) + p.lambda_entropy * probs[k] * (logp[k] - neg_h)) / n;
            }
            *dvalues.entry(tr.s).or_insert(0.0) += -p.lambda_value * 2.0 * adv / n;
        }
        for (st, d) in dlogits {
            let row = logits.entry(st).or_insert_with(|| vec![0.0; m]);
            for (w, g) in row.iter_mut().zip(d) {
                *w -= p.learning_rate * g;
            }
        }
        for (st, d) in dvalues {
            *values.entry(st).or_insert(0.0) -= p.learning_rate * d;
        }
        if last.done {
            episodes.push((steps, ret));
            s = env.reset(p.seed);
            ret = 0.0;
        }
    }
    let mut table: Vec<((u64, usize), f64)> = Vec::new();
    for (st, row) in &logits {
        for (k, &w) in row.iter().enumerate() {
            table.push(((*st, k), w));
        }
    }
    for (st, &w) in &values {
        table.push(((*st, usize::MAX), w));
    }
    table.sort_by_key(|e| e.0);
    Trace { episodes, table }
}

/// Discounted return of the flattened segment with its bootstrap, computed
/// with explicit powers of `gamma` rather than per-step discounts.
pub fn flattened_advantage(seg: &RolloutSegment<f64>, v: impl Fn(u64) -> f64, gamma: f64) -> f64 {
    let flat = seg.flattened();
    let mut total = 0.0;
    for (tau, tr) in flat.iter().enumerate() {
        total += gamma.powi(tau as i32) * tr.r;
    }
    if !seg.terminal() {
        total += gamma.powi(flat.len() as i32) * v(seg.s_end());
    }
    total - v(seg.s_start())
}

/// Largest relative deviation between the analytic gradient and central
/// differences of the loss in every parameter of `model`.
pub fn gradient_check(
    seg: &RolloutSegment<f64>,
    window: Option<&[Transition]>,
    model: &ActorCritic<f64>,
    config: &A2cConfig<f64>,
    h: f64,
) -> f64 {
    let frozen = model.clone();
    let (_, grad) = a2c_loss(seg, window, model, &frozen, config);
    let analytic = model.flatten_gradient(&grad);
    let theta = model.param_vector();
    let mut numeric = vec![0.0; theta.len()];
    let mut probe = model.clone();
    for j in 0..theta.len() {
        let mut up = theta.clone();
        up[j] += h;
        probe.set_param_vector(&up);
        let lu = a2c_loss(seg, window, &probe, &frozen, config).0.total;
        let mut down = theta.clone();
        down[j] -= h;
        probe.set_param_vector(&down);
        let ld = a2c_loss(seg, window, &probe, &frozen, config).0.total;
        numeric[j] = (lu - ld) / (2.0 * h);
    }
    let diff: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let na: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nn: f64 = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
    let scale = na.max(nn);
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

fn random_outcome(rng: &mut ChaCha8Rng, s: u64, n_states: u64, m: usize, n_prim: usize, gamma: f64, last: bool) -> SegmentStep<f64> {
    let action = rng.gen_range(0..m);
    let executed = if action < n_prim { 1 } else { rng.gen_range(1..4) };
    let terminated = last && rng.gen_bool(0.3);
    let mut inner = Vec::new();
    let mut cur = s;
    let mut dr = 0.0;
    let mut disc = 1.0;
    for i in 0..executed {
        let next = rng.gen_range(0..n_states);
        let r = if rng.gen_bool(0.5) { rng.gen_range(-1.0..1.0) } else { 0.0 };
        inner.push(Transition {
            t: i as u64,
            s: cur,
            a: rng.gen_range(0..n_prim as u32),
            r,
            s_next: next,
            done: terminated && i + 1 == executed,
        });
        dr += disc * r;
        disc *= gamma;
        cur = next;
    }
    let ext = if action < n_prim {
        ExtendedAction::Primitive(action as u32)
    } else {
        ExtendedAction::Routine(action - n_prim)
    };
    SegmentStep {
        action,
        outcome: RoutineOutcome {
            action: ext,
            s_start: s,
            s_end: cur,
            discounted_reward: dr,
            discount: disc,
            executed,
            terminated,
            inner,
        },
    }
}

/// Random segment of up to five extended steps with consistent
/// semi-MDP bookkeeping.
pub fn random_segment(rng: &mut ChaCha8Rng, n_states: u64, m: usize, n_prim: usize, gamma: f64) -> RolloutSegment<f64> {
    let len = rng.gen_range(1..=5);
    let mut seg = RolloutSegment::new(0);
    let mut s = rng.gen_range(0..n_states);
    for i in 0..len {
        let step = random_outcome(rng, s, n_states, m, n_prim, gamma, i + 1 == len);
        s = step.outcome.s_end;
        seg.steps.push(step);
    }
    seg
}

pub fn random_config(rng: &mut ChaCha8Rng) -> A2cConfig<f64> {
    A2cConfig {
        lambda_value: rng.gen_range(0.1..1.0),
        lambda_prim: rng.gen_range(0.0..2.0),
        lambda_entropy: rng.gen_range(0.0..0.1),
        gamma: rng.gen_range(0.8..1.0),
        mode: if rng.gen_bool(0.8) { A2cMode::Rapl } else { A2cMode::Macro },
        ..A2cConfig::default()
    }
}
