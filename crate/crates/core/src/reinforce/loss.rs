use super::model::{ActorCritic, Gradient};
use super::segment::{primitive_advantage, suffix_advantages, suffix_returns, RolloutSegment};
use super::{A2cConfig, A2cMode};
use crate::scalar::{log_sum_exp, Scalar};
use crate::world::Transition;

/// Value of the combined loss on one segment, split into its terms.
#[derive(Debug, Clone, PartialEq)]
pub struct A2cLoss<S: Scalar = f64> {
    pub total: S,
    pub policy: S,
    pub entropy: S,
    pub value: S,
    pub prim: S,
    /// Routine-level advantage of each suffix of the segment.
    pub advantages: Vec<S>,
    pub prim_advantage: Option<S>,
}

/// `Σ π log π` of a logit row (the negative entropy).
pub fn entropy_term<S: Scalar>(logits: &[S]) -> S {
    let lse = log_sum_exp(logits);
    logits
        .iter()
        .map(|&z| {
            let logp = z - lse;
            logp.exp() * logp
        })
        .sum()
}

/// Loss and gradient on one segment plus an optional primitive window.
///
/// Every suffix `i` of the segment contributes
/// `-A_i log π(ρ̃_i|s_i) + λ_e Σ π log π + λ_v A_i²`, averaged over the
/// suffixes; the window adds `λ_v λ_prim A_prim²` once. Advantages in the
/// policy term and all bootstrap values come from `frozen`, so the gradient
/// with respect to `model` flows through the policy's log-probabilities and
/// entropy and through `V(s_i)` in the squared advantages. In MACRO mode the
/// window term is dropped.
pub fn a2c_loss<S: Scalar>(
    seg: &RolloutSegment<S>,
    window: Option<&[Transition]>,
    model: &ActorCritic<S>,
    frozen: &ActorCritic<S>,
    config: &A2cConfig<S>,
) -> (A2cLoss<S>, Gradient<S>) {
    let gamma = config.gamma;
    let m = model.n_actions();
    let n = S::from_count(seg.len().max(1));
    let returns = suffix_returns(seg, |s| frozen.value(s), gamma, config.mode);
    let advantages = suffix_advantages(seg, |s| frozen.value(s), |s| frozen.value(s), gamma, config.mode);

    let mut grad = Gradient::default();
    let (mut policy, mut entropy, mut value) = (S::zero(), S::zero(), S::zero());
    let two = S::lit(2.0);
    for ((step, &g), &a_frozen) in seg.steps.iter().zip(&returns).zip(&advantages) {
        let s = step.outcome.s_start;
        let logits = model.logits(s);
        let lse = log_sum_exp(&logits);
        let logp: Vec<S> = logits.iter().map(|&z| z - lse).collect();
        let probs: Vec<S> = logp.iter().map(|&l| l.exp()).collect();
        let neg_h: S = probs.iter().zip(&logp).map(|(&p, &l)| p * l).sum();
        policy += -a_frozen * logp[step.action];
        entropy += config.lambda_entropy * neg_h;

        let mut d = vec![S::zero(); m];
        for k in 0..m {
            let onehot = if k == step.action { S::one() } else { S::zero() };
            d[k] = (-a_frozen * (onehot - probs[k])
                + config.lambda_entropy * probs[k] * (logp[k] - neg_h))
                / n;
        }
        grad.add_policy(s, &d);

        let a_model = g - model.value(s);
        value += config.lambda_value * a_model * a_model;
        grad.add_value(s, -config.lambda_value * two * a_model / n);
    }
    policy = policy / n;
    entropy = entropy / n;
    value = value / n;

    let mut prim = S::zero();
    let mut prim_advantage = None;
    if let (Some(w), A2cMode::Rapl) = (window, config.mode) {
        if !w.is_empty() && config.lambda_prim > S::zero() {
            let a = primitive_advantage(w, |s| frozen.value(s), |s| model.value(s), gamma);
            let weight = config.lambda_value * config.lambda_prim;
            prim = weight * a * a;
            grad.add_value(w[0].s, -weight * two * a);
            prim_advantage = Some(a);
        }
    }

    let loss = A2cLoss {
        total: policy + entropy + value + prim,
        policy,
        entropy,
        value,
        prim,
        advantages,
        prim_advantage,
    };
    (loss, grad)
}
