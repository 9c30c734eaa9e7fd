use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::loss::{a2c_loss, A2cLoss};
use super::model::{ActorCritic, Approximator, Featurizer};
use super::segment::{sample_window, RolloutSegment, SegmentStep};
use super::{A2cConfig, A2cMode, ReinforceError};
use crate::curve::{CurvePoint, LearningCurve};
use crate::discovery::RoutineLibrary;
use crate::scalar::{sample_index, Scalar};
use crate::world::{step_extended, ActionSpace, Environment};

/// Stream of the window-sampling generator; actions use stream 0.
const WINDOW_STREAM: u64 = 1;

#[derive(Debug, Clone)]
pub struct A2cRun<S: Scalar = f64> {
    pub model: ActorCritic<S>,
    pub space: ActionSpace,
    pub curve: LearningCurve,
    pub segments: usize,
    pub steps: u64,
}

pub fn train_a2c<S, L, E>(
    env: &mut E,
    library: &RoutineLibrary<L>,
    config: &A2cConfig<S>,
) -> Result<A2cRun<S>, ReinforceError>
where
    S: Scalar,
    L: Scalar,
    E: Environment + Clone + Send + Sync + 'static,
{
    train_a2c_with(env, library, config, |_, _, _| {})
}

/// Train until `step_budget` primitive steps have been taken, calling
/// `observe(segment, model, loss)` before every update.
///
/// Episodes always start from `reset(config.seed)`. The primitive window is
/// drawn from its own random stream, and only when the library is non-empty,
/// `lambda_prim > 0` and the mode is RAPL; otherwise the update sequence is
/// exactly that of plain n-step A2C.
pub fn train_a2c_with<S, L, E, O>(
    env: &mut E,
    library: &RoutineLibrary<L>,
    config: &A2cConfig<S>,
    mut observe: O,
) -> Result<A2cRun<S>, ReinforceError>
where
    S: Scalar,
    L: Scalar,
    E: Environment + Clone + Send + Sync + 'static,
    O: FnMut(&RolloutSegment<S>, &ActorCritic<S>, &A2cLoss<S>),
{
    config.validate()?;
    let spec = env.spec();
    let space = ActionSpace::from_library(spec.n_actions, library);
    let mut model = match config.approximator {
        Approximator::Tabular => ActorCritic::tabular(space.len()),
        Approximator::Linear => {
            let world = env.clone();
            ActorCritic::linear(
                space.len(),
                spec.feature_dim,
                Featurizer::new(move |s| world.features(s)),
            )
        }
    };
    let use_window =
        config.mode == A2cMode::Rapl && config.lambda_prim > S::zero() && !library.is_empty();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut window_rng = ChaCha8Rng::seed_from_u64(config.seed);
    window_rng.set_stream(WINDOW_STREAM);
    let tolerance = S::lit(1e-9).max(S::lit(16.0) * S::epsilon() * S::from_count(space.len()));

    let mut curve = LearningCurve::default();
    let mut steps = 0u64;
    let mut segments = 0usize;
    let mut s = env.reset(config.seed);
    let mut t_episode = 0u64;
    let mut episode_return = 0.0;

    while steps < config.step_budget {
        let mut seg = RolloutSegment::new(t_episode);
        while seg.len() < config.n_steps {
            let probs = model.policy(s);
            let idx = sample_index(&probs, S::lit(rng.gen::<f64>()));
            let outcome = step_extended(env, space.get(idx), &space, config.gamma)?;
            steps += outcome.executed as u64;
            t_episode += outcome.executed as u64;
            episode_return += outcome.inner.iter().map(|tr| tr.r).sum::<f64>();
            s = outcome.s_end;
            let done = outcome.terminated;
            seg.steps.push(SegmentStep {
                action: idx,
                outcome,
            });
            if done {
                break;
            }
        }

        let window = if use_window {
            let flat = seg.flattened();
            sample_window(flat.len(), config.n_steps, seg.terminal(), &mut window_rng)
                .map(|r| flat[r].to_vec())
        } else {
            None
        };
        let (loss, grad) = a2c_loss(&seg, window.as_deref(), &model, &model, config);
        observe(&seg, &model, &loss);
        model.apply(&grad, config.learning_rate);
        for &state in grad.policy.keys() {
            let total: S = model.policy(state).into_iter().sum();
            assert!(
                (total - S::one()).abs() <= tolerance,
                "policy at state {state} left the simplex: sum {total}"
            );
        }
        segments += 1;

        if seg.terminal() {
            curve.push(CurvePoint {
                episode: curve.len(),
                steps,
                episode_return,
                alignment: None,
            });
            s = env.reset(config.seed);
            t_episode = 0;
            episode_return = 0.0;
        }
    }
    Ok(A2cRun {
        model,
        space,
        curve,
        segments,
        steps,
    })
}
