//! Routine discovery from demonstrations and routine-augmented learners.
//!
//! A demonstration's action sequence is compressed into a grammar
//! ([`grammar`]), whose rules become candidate routines that are scored and
//! pruned into a small library ([`discovery`]). Routines execute as
//! temporally extended actions in small grid worlds ([`world`]) and extend
//! the action space of a soft-Q imitation learner ([`imitate`]) and an
//! advantage actor-critic ([`reinforce`]). [`bench`] ties the stages into
//! seeded, reproducible experiments.
//!
//! Learner and scoring code is generic over [`scalar::Scalar`] (`f32` or
//! `f64`); the aliases below fix the common choices.

pub mod bench;
pub mod curve;
pub mod discovery;
pub mod grammar;
pub mod imitate;
pub mod reinforce;
pub mod scalar;
pub mod world;

pub type ActionId = u32;
pub type StateId = u64;

pub type RoutineLibrary64 = discovery::RoutineLibrary<f64>;
pub type RoutineLibrary32 = discovery::RoutineLibrary<f32>;
pub type SoftQ64 = imitate::SoftQ<f64>;
pub type SoftQ32 = imitate::SoftQ<f32>;
pub type SqilConfig64 = imitate::SqilConfig<f64>;
pub type SqilConfig32 = imitate::SqilConfig<f32>;
pub type ActorCritic64 = reinforce::ActorCritic<f64>;
pub type ActorCritic32 = reinforce::ActorCritic<f32>;
pub type A2cConfig64 = reinforce::A2cConfig<f64>;
pub type A2cConfig32 = reinforce::A2cConfig<f32>;
pub type RoutineOutcome64 = world::RoutineOutcome<f64>;
pub type RoutineOutcome32 = world::RoutineOutcome<f32>;
