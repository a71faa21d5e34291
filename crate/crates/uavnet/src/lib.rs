//! Discrete-time simulator of a UAV-assisted wireless network.
//!
//! UAV base stations hover at a fixed altitude over an area of mobile ground
//! users and move one step per time instant to maximize the users' sum data
//! rate. Each UAV carries an independent deep Q-network agent (2-10-5
//! multilayer perceptron, epsilon-greedy exploration, FIFO experience replay,
//! frozen target network) trained on the sign of the sum-rate change its own
//! move caused. Baseline movement policies (fixed, k-means tracking, one-step
//! exhaustive search) run under the same kinematics for comparison.
//!
//! Modules, bottom-up:
//!
//! - [`channel`]: line-of-sight probability, air-to-ground and terrestrial
//!   path loss, SINR, Shannon rate.
//! - [`world`]: entity geometry, nearest-station association, sum-rate
//!   objective.
//! - [`mobility`]: random-walk ground users with a three-phase concentration
//!   scenario.
//! - [`dqn`]: the per-agent Q-network, replay buffer, and training step.
//! - [`policies`]: the four movement policies behind one interface.
//! - [`harness`]: episode/step orchestration for training and frozen
//!   evaluation.
//! - [`config`]: presets, the flat-key JSON config format, run metadata.
//! - [`plot`]: deterministic SVG renderings of run records.

pub mod channel;
pub mod config;
pub mod dqn;
pub mod error;
pub mod harness;
pub mod mobility;
pub mod plot;
pub mod policies;
pub mod record;
pub mod world;

pub use error::{Error, Result};
