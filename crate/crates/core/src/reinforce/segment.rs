use std::ops::Range;

use rand::Rng;

use super::A2cMode;
use crate::scalar::Scalar;
use crate::world::{RoutineOutcome, Transition};
use crate::StateId;

/// One extended step of a rollout: the dense action index and its outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentStep<S: Scalar = f64> {
    pub action: usize,
    pub outcome: RoutineOutcome<S>,
}

/// Up to `N` consecutive extended steps of one episode. Only the last step
/// may end the episode.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutSegment<S: Scalar = f64> {
    /// Primitive time index of the first step.
    pub t0: u64,
    pub steps: Vec<SegmentStep<S>>,
}

impl<S: Scalar> RolloutSegment<S> {
    pub fn new(t0: u64) -> Self {
        Self {
            t0,
            steps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn terminal(&self) -> bool {
        self.steps.last().is_some_and(|s| s.outcome.terminated)
    }

    pub fn s_start(&self) -> StateId {
        self.steps[0].outcome.s_start
    }

    pub fn s_end(&self) -> StateId {
        self.steps.last().expect("non-empty segment").outcome.s_end
    }

    /// `t_0, t_1, ..., t_N` from the executed lengths.
    pub fn boundaries(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        let mut t = self.t0;
        out.push(t);
        for step in &self.steps {
            t += step.outcome.executed as u64;
            out.push(t);
        }
        out
    }

    /// All primitive transitions of the segment in order.
    pub fn flattened(&self) -> Vec<Transition> {
        self.steps
            .iter()
            .flat_map(|s| s.outcome.inner.iter().copied())
            .collect()
    }

    pub fn primitive_len(&self) -> usize {
        self.steps.iter().map(|s| s.outcome.executed).sum()
    }

    /// `γ^{t_N - t_0}` as the product of the per-step discount fields.
    pub fn total_discount(&self) -> S {
        let mut d = S::one();
        for step in &self.steps {
            d *= step.outcome.discount;
        }
        d
    }
}

/// Reward and discount of one extended step as seen by the learner.
/// RAPL uses `Σ γ^i r_i` and `γ^{executed}`; MACRO sums the rewards
/// undiscounted and discounts the whole step by a single `γ`.
pub fn step_terms<S: Scalar>(step: &RoutineOutcome<S>, mode: A2cMode, gamma: S) -> (S, S) {
    match mode {
        A2cMode::Rapl => (step.discounted_reward, step.discount),
        A2cMode::Macro => (step.reward_sum(), gamma),
    }
}

/// Advantage of every suffix of the segment: entry `i` is
/// `Σ_{j≥i} (Π_{i≤k<j} d_k) R_j + (Π_{i≤k<N} d_k) V(s_N) - V(s_i)`, with the
/// bootstrap dropped when the segment ends the episode. `bootstrap` supplies
/// `V(s_N)` and `baseline` supplies `V(s_i)`.
pub fn suffix_advantages<S, B, V>(
    seg: &RolloutSegment<S>,
    bootstrap: B,
    baseline: V,
    gamma: S,
    mode: A2cMode,
) -> Vec<S>
where
    S: Scalar,
    B: Fn(StateId) -> S,
    V: Fn(StateId) -> S,
{
    let returns = suffix_returns(seg, bootstrap, gamma, mode);
    seg.steps
        .iter()
        .zip(returns)
        .map(|(step, g)| g - baseline(step.outcome.s_start))
        .collect()
}

/// Bootstrapped returns of every suffix, by the backward recursion
/// `G_i = R_i + d_i G_{i+1}`.
pub fn suffix_returns<S, B>(seg: &RolloutSegment<S>, bootstrap: B, gamma: S, mode: A2cMode) -> Vec<S>
where
    S: Scalar,
    B: Fn(StateId) -> S,
{
    if seg.is_empty() {
        return Vec::new();
    }
    let mut g = if seg.terminal() {
        S::zero()
    } else {
        bootstrap(seg.s_end())
    };
    let mut out = vec![S::zero(); seg.len()];
    for (i, step) in seg.steps.iter().enumerate().rev() {
        let (r, d) = step_terms(&step.outcome, mode, gamma);
        g = r + d * g;
        out[i] = g;
    }
    out
}

/// Routine-level advantage of the whole segment.
pub fn routine_advantage<S: Scalar, V: Fn(StateId) -> S>(seg: &RolloutSegment<S>, v: V, gamma: S) -> S {
    suffix_advantages(seg, &v, &v, gamma, A2cMode::Rapl)[0]
}

/// `Σ γ^i r_i + γ^n V(s_end) - V(s_start)` over consecutive primitive
/// transitions, with no bootstrap if the window ends the episode.
pub fn primitive_advantage<S, B, V>(window: &[Transition], bootstrap: B, baseline: V, gamma: S) -> S
where
    S: Scalar,
    B: Fn(StateId) -> S,
    V: Fn(StateId) -> S,
{
    let last = window.last().expect("non-empty window");
    let mut g = if last.done {
        S::zero()
    } else {
        bootstrap(last.s_next)
    };
    for tr in window.iter().rev() {
        g = S::lit(tr.r) + gamma * g;
    }
    g - baseline(window[0].s)
}

/// Uniformly drawn window of `n` consecutive transitions inside a segment of
/// `len` primitive steps. Windows may only run short when the segment ends
/// the episode; otherwise a segment shorter than `n` yields `None`.
pub fn sample_window<R: Rng>(len: usize, n: usize, terminal: bool, rng: &mut R) -> Option<Range<usize>> {
    if len == 0 || n == 0 {
        return None;
    }
    let starts = if terminal {
        len
    } else if len >= n {
        len - n + 1
    } else {
        return None;
    };
    let start = rng.gen_range(0..starts);
    Some(start..(start + n).min(len))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::world::ExtendedAction;

    fn tr(t: u64, s: StateId, r: f64, done: bool) -> Transition {
        Transition {
            t,
            s,
            a: 0,
            r,
            s_next: s + 1,
            done,
        }
    }

    fn step(inner: Vec<Transition>, gamma: f64, terminated: bool) -> SegmentStep<f64> {
        let mut discounted_reward = 0.0;
        let mut discount = 1.0;
        for t in &inner {
            discounted_reward += discount * t.r;
            discount *= gamma;
        }
        SegmentStep {
            action: 0,
            outcome: RoutineOutcome {
                action: ExtendedAction::Primitive(0),
                s_start: inner[0].s,
                s_end: inner.last().unwrap().s_next,
                discounted_reward,
                discount,
                executed: inner.len(),
                terminated,
                inner,
            },
        }
    }

    #[test]
    fn one_primitive_step() {
        let seg = RolloutSegment {
            t0: 0,
            steps: vec![step(vec![tr(0, 0, 1.0, false)], 0.9, false)],
        };
        assert_eq!(routine_advantage(&seg, |_| 0.0, 0.9), 1.0);
    }

    #[test]
    fn one_routine_of_length_two() {
        let mut st = step(vec![tr(0, 0, 1.0, false), tr(1, 1, 0.0, false)], 0.9, false);
        st.outcome.discounted_reward = 1.0;
        let seg = RolloutSegment { t0: 0, steps: vec![st] };
        let v = |s: StateId| if s == 2 { 1.0 } else { 0.5 };
        assert!((routine_advantage(&seg, v, 0.9) - 1.31).abs() < 1e-12);
    }

    #[test]
    fn primitive_window_examples() {
        let w = [tr(0, 0, 0.0, false), tr(1, 1, 1.0, false)];
        assert!((primitive_advantage(&w, |_| 0.0, |_| 0.0, 0.9f64) - 0.9).abs() < 1e-15);
        let zeros = [tr(0, 0, 0.0, false), tr(1, 1, 0.0, false), tr(2, 2, 0.0, false)];
        let c = 2.0f64;
        let a = primitive_advantage(&zeros, |_| c, |_| c, 0.9f64);
        assert!((a - c * (0.9f64.powi(3) - 1.0)).abs() < 1e-12);
        assert!(a < 0.0);
    }

    #[test]
    fn all_primitive_segments_match_the_window_exactly() {
        let gamma = 0.97;
        let flat: Vec<Transition> = (0..5).map(|i| tr(i, i, (i % 3) as f64 * 0.5, false)).collect();
        let seg = RolloutSegment {
            t0: 0,
            steps: flat.iter().map(|t| step(vec![*t], gamma, false)).collect(),
        };
        let v = |s: StateId| s as f64 * 0.1 - 0.2;
        assert_eq!(routine_advantage(&seg, v, gamma), primitive_advantage(&flat, v, v, gamma));
    }

    #[test]
    fn terminal_segments_do_not_bootstrap() {
        let seg = RolloutSegment {
            t0: 3,
            steps: vec![step(vec![tr(3, 3, 0.0, false), tr(4, 4, 1.0, true)], 0.5, true)],
        };
        assert_eq!(routine_advantage(&seg, |_| 10.0, 0.5), 0.5 - 10.0);
        assert_eq!(seg.boundaries(), vec![3, 5]);
        assert_eq!(seg.total_discount(), 0.25);
    }

    #[test]
    fn macro_mode_ignores_inner_discounting() {
        let st = step(vec![tr(0, 0, 1.0, false), tr(1, 1, 1.0, false)], 0.5, false);
        let seg = RolloutSegment { t0: 0, steps: vec![st] };
        let rapl = suffix_returns(&seg, |_| 4.0, 0.5, A2cMode::Rapl)[0];
        let mac = suffix_returns(&seg, |_| 4.0, 0.5, A2cMode::Macro)[0];
        assert_eq!(rapl, 1.5 + 0.25 * 4.0);
        assert_eq!(mac, 2.0 + 0.5 * 4.0);
    }

    #[test]
    fn windows_stay_inside_the_segment() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            let w = sample_window(9, 5, false, &mut rng).unwrap();
            assert!(w.end <= 9 && w.len() == 5);
            let t = sample_window(3, 5, true, &mut rng).unwrap();
            assert!(t.end == 3 && !t.is_empty());
        }
        assert_eq!(sample_window(3, 5, false, &mut rng), None);
    }
}
