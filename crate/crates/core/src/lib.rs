//! Highway driving stack: a deterministic kinematic simulator, hybrid risk
//! fields rasterized into ego-centric observations, an attention-equipped
//! actor-critic with hand-written gradients, PPO training with GAE, and a
//! safety filter that certifies lane changes by integrating risk along a
//! sampled lateral trajectory.
//!
//! The crate is organized by subsystem:
//!
//! - [`sim`] — world state, vehicle kinematics, HDV behavior, collisions
//! - [`risk`] — static/dynamic/hybrid risk evaluation and rasterization
//! - [`safety`] — lane-change trajectory building, risk certification, gating
//! - [`reward`] — per-step reward decomposition and the balanced reward
//! - [`net`] — tensors, layers, attention blocks, actor/critic networks
//! - [`ppo`] — rollout collection, GAE, the clipped-surrogate update
//! - [`harness`] — train/eval/ablate orchestration, metrics, checkpoints
//!
//! Everything is single-threaded and seeded; identical configuration and seed
//! reproduce identical outputs byte for byte.

pub mod config;
pub mod error;
pub mod harness;
pub mod net;
pub mod ppo;
pub mod reward;
pub mod risk;
pub mod safety;
pub mod seeds;
pub mod sim;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
