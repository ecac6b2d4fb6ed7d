//! Clock synchronization in the beeping model.
//!
//! The crate provides the fast synchronization protocol and its
//! self-stabilizing extension as pure per-node transition functions, a
//! synchronous round engine with trace-level invariant checking, a
//! continuous-time slot simulator, and an analyzer that builds and certifies
//! non-synchronizing witnesses for arbitrary single-node protocol automata.

pub mod checkpoints;
pub mod engine;
pub mod error;
pub mod export;
pub mod fast;
pub mod fsm;
pub mod selfstab;
pub mod slots;
pub mod topology;

pub use error::{Error, Result};
