use std::collections::{HashMap, VecDeque};

use proptest::prelude::*;

use rapl::discovery::Routine;
use rapl::world::{
    record_expert_demo, step_extended, ActionSpace, Corridor, Environment, ExtendedAction,
    MiniQbert, RoutineOutcome,
};

/// Corridor dynamics restated from the rules: RIGHT moves on except at a
/// gate, UP crosses a gate, LEFT moves back, everything else stays.
fn corridor_next(length: usize, x: usize, a: u32) -> usize {
    let goal = length - 1;
    let gate = x % 3 == 2 && x != goal;
    match a {
        0 => x.saturating_sub(1),
        1 if !gate => (x + 1).min(goal),
        2 if gate => x + 1,
        _ => x,
    }
}

fn bfs_distance(length: usize) -> usize {
    let mut dist: HashMap<usize, usize> = HashMap::from([(0, 0)]);
    let mut queue = VecDeque::from([0]);
    while let Some(x) = queue.pop_front() {
        if x == length - 1 {
            return dist[&x];
        }
        for a in 0..4 {
            let y = corridor_next(length, x, a);
            if !dist.contains_key(&y) {
                dist.insert(y, dist[&x] + 1);
                queue.push_back(y);
            }
        }
    }
    unreachable!("goal is reachable")
}

#[test]
fn corridor_expert_takes_a_shortest_path() {
    for length in [2, 3, 5, 8, 13, 24, 40] {
        let mut env = Corridor::new(length, 4 * length).unwrap();
        let demo = record_expert_demo(&mut env, 0.0, 0).unwrap();
        assert_eq!(demo.len(), bfs_distance(length), "length {length}");
        assert_eq!(demo.total_return, 1.0);
        assert!(demo.transitions.last().unwrap().done);
        let mut x = 0;
        for tr in &demo.transitions {
            x = corridor_next(length, x, tr.a);
        }
        assert_eq!(x, length - 1);
    }
}

#[test]
fn corridor_matches_restated_dynamics() {
    let length = 11;
    let mut env = Corridor::new(length, 500).unwrap();
    env.reset(0);
    let mut x = 0;
    let mut rng_state = 12345u64;
    for _ in 0..400 {
        if env.is_done() {
            env.reset(0);
            x = 0;
        }
        rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let a = (rng_state >> 33) as u32 % 4;
        let tr = env.step(a).unwrap();
        let y = corridor_next(length, x, a);
        assert_eq!(tr.r, if y == length - 1 { 1.0 } else { 0.0 });
        assert_eq!(tr.done, y == length - 1 || tr.t + 1 == 500);
        x = y;
    }
}

#[test]
fn qbert_expert_finishes_the_board() {
    for size in [2, 3, 4] {
        let mut env = MiniQbert::new(size, 400).unwrap();
        let demo = record_expert_demo(&mut env, 0.0, 0).unwrap();
        let last = demo.transitions.last().unwrap();
        assert!(last.done);
        assert!(demo.len() < 400, "expert hit the step cap on size {size}");
        let (_, colored) = env.decode(last.s_next);
        assert_eq!(colored.count_ones() as usize, env.squares());
    }
}

fn routine_space(n_primitive: usize, routines: &[Vec<u32>]) -> ActionSpace {
    ActionSpace::new(
        n_primitive,
        routines.iter().map(|r| Routine::new(r.clone()).unwrap()).collect(),
    )
}

fn run(env: &mut Corridor, actions: &[u32], gamma: f64) -> RoutineOutcome<f64> {
    let space = routine_space(4, &[actions.to_vec()]);
    step_extended(env, ExtendedAction::Routine(0), &space, gamma).unwrap()
}

#[test]
fn truncated_routine_example() {
    // Length-3 strip: two RIGHTs reach the goal, the third never runs.
    let mut env = Corridor::new(3, 64).unwrap();
    env.reset(0);
    let out = run(&mut env, &[1, 1, 1], 0.9);
    assert_eq!(out.executed, 2);
    assert!(out.terminated);
    assert!((out.discounted_reward - 0.9).abs() < 1e-12);
    assert!((out.discount - 0.81).abs() < 1e-12);
    assert_eq!(out.inner.len(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn extended_step_matches_primitive_replay(
        prefix in prop::collection::vec(0u32..4, 0..20),
        routine in prop::collection::vec(0u32..4, 2..8),
        gamma in 0.5f64..1.0,
    ) {
        let mut a = Corridor::new(9, 30).unwrap();
        a.reset(0);
        for &p in &prefix {
            if a.is_done() { break; }
            a.step(p).unwrap();
        }
        prop_assume!(!a.is_done());
        let mut b = a.clone();
        let out = run(&mut a, &routine, gamma);

        let mut replay = Vec::new();
        for &p in &routine {
            let tr = b.step(p).unwrap();
            replay.push(tr);
            if tr.done { break; }
        }
        prop_assert_eq!(&out.inner, &replay);
        prop_assert_eq!(out.executed, replay.len());
        prop_assert_eq!(out.s_end, replay.last().unwrap().s_next);
        prop_assert_eq!(out.terminated, replay.last().unwrap().done);
        let expected: f64 = replay.iter().enumerate().map(|(i, tr)| gamma.powi(i as i32) * tr.r).sum();
        prop_assert!((out.discounted_reward - expected).abs() < 1e-12);
        prop_assert!((out.discount - gamma.powi(out.executed as i32)).abs() < 1e-12);
        prop_assert_eq!(a.state(), b.state());
    }

    #[test]
    fn split_routines_telescope(
        first in prop::collection::vec(0u32..4, 2..6),
        second in prop::collection::vec(0u32..4, 2..6),
        gamma in 0.5f64..1.0,
    ) {
        let mut whole = Corridor::new(40, 200).unwrap();
        whole.reset(0);
        let mut parts = whole.clone();
        let joined: Vec<u32> = first.iter().chain(&second).copied().collect();
        let w = run(&mut whole, &joined, gamma);
        let p1 = run(&mut parts, &first, gamma);
        let p2 = run(&mut parts, &second, gamma);
        prop_assert_eq!(w.executed, p1.executed + p2.executed);
        prop_assert!((w.discounted_reward - (p1.discounted_reward + p1.discount * p2.discounted_reward)).abs() < 1e-12);
        prop_assert!((w.discount - p1.discount * p2.discount).abs() < 1e-12);
        prop_assert_eq!(w.s_end, p2.s_end);
    }
}

#[test]
fn worlds_are_deterministic() {
    for make in [
        || -> Box<dyn Environment> { Box::new(Corridor::new(24, 64).unwrap()) },
        || -> Box<dyn Environment> { Box::new(MiniQbert::new(3, 64).unwrap()) },
    ] {
        let mut a = make();
        let mut b = make();
        assert_eq!(a.reset(4), b.reset(4));
        for i in 0..60u32 {
            if a.is_done() {
                break;
            }
            let action = (i * 7 + 3) % a.spec().n_actions as u32;
            assert_eq!(a.step(action).unwrap(), b.step(action).unwrap());
        }
    }
}
