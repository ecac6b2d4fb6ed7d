//! Deterministic synchronous-round simulation.
//!
//! Every round has two phases: first the beep set is computed from the
//! configurations at the start of the round, then every node steps with
//! `heard_beep = N(v) ∩ B ≠ ∅`. No node observes another node's update from
//! the same round, so the result never depends on iteration order.

mod fast_run;
mod invariants;
mod stab_run;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fast::BeepClass;
use crate::topology::{NodeId, Topology};

pub use fast_run::{default_fast_horizon, run_fast};
pub use invariants::{
    check_closure, check_invariants, check_stab_invariants, first_collective_pulse, InvariantCheck,
    Violation,
};
pub use stab_run::{
    default_stab_horizon, first_all_lock_round, has_pulse_episode, is_legitimate, run_selfstab,
};

/// Per-node adversary wake-up rounds (raw rounds; `None` = never woken by the
/// adversary).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivationSchedule {
    wake_round: Vec<Option<u64>>,
}

impl ActivationSchedule {
    pub fn new(wake_round: Vec<Option<u64>>) -> Result<Self> {
        if wake_round.iter().all(Option::is_none) {
            return Err(Error::Schedule(
                "at least one node needs a finite wake round".into(),
            ));
        }
        Ok(Self { wake_round })
    }

    /// Only `node` is woken, at round `round`.
    pub fn single(node_count: usize, node: NodeId, round: u64) -> Result<Self> {
        if node >= node_count {
            return Err(Error::Schedule(format!(
                "node {node} outside 0..{node_count}"
            )));
        }
        let mut wake_round = vec![None; node_count];
        wake_round[node] = Some(round);
        Self::new(wake_round)
    }

    /// Seeded random schedule. With `multi == false` one uniformly chosen
    /// node is woken at round 0; otherwise a random subset of at least
    /// `min(2, n)` nodes is woken at rounds drawn from `0..=spread`.
    pub fn random(node_count: usize, multi: bool, spread: u64, seed: u64) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::Schedule("empty node set".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut wake_round = vec![None; node_count];
        if !multi {
            wake_round[rng.gen_range(0..node_count)] = Some(0);
            return Self::new(wake_round);
        }
        let count = rng.gen_range(node_count.min(2)..=node_count);
        let mut ids: Vec<NodeId> = (0..node_count).collect();
        ids.shuffle(&mut rng);
        for &v in &ids[..count] {
            wake_round[v] = Some(rng.gen_range(0..=spread));
        }
        Self::new(wake_round)
    }

    pub fn node_count(&self) -> usize {
        self.wake_round.len()
    }

    pub fn wake_round(&self, v: NodeId) -> Option<u64> {
        self.wake_round[v]
    }

    /// The adversary's first activation round.
    pub fn first_wake(&self) -> u64 {
        self.wake_round
            .iter()
            .flatten()
            .copied()
            .min()
            .expect("validated non-empty")
    }

    /// Nodes woken in the first activation round.
    pub fn first_woken(&self) -> Vec<NodeId> {
        let first = self.first_wake();
        (0..self.node_count())
            .filter(|&v| self.wake_round[v] == Some(first))
            .collect()
    }
}

/// One node's row in a round of the trace: its configuration at the start
/// of the round plus what happened during the round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeRecord<C> {
    pub config: C,
    pub beeped: bool,
    pub beep_class: Option<BeepClass>,
    /// The node was induced (clock advanced by 2) in this round.
    pub induce_event: bool,
    /// Total clock advance since activation; `None` while inactive and in
    /// self-stabilizing runs.
    pub virtual_counter: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RoundTrace<C> {
    pub topology: Topology,
    pub period: u32,
    /// Raw round index of reported round 0.
    pub round_offset: u64,
    /// `rounds[t][v]`.
    pub rounds: Vec<Vec<NodeRecord<C>>>,
    /// First reported round in which each node is active.
    pub activation_round: Vec<Option<u64>>,
    /// Nodes woken by the adversary in its first activation round.
    pub first_woken: Vec<NodeId>,
}

impl<C> RoundTrace<C> {
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SimResult {
    /// First reported round from which all nodes are active with equal
    /// clocks for the rest of the trace.
    pub sync_round: Option<u64>,
    /// First round from which every remaining round is legitimate
    /// (self-stabilizing mode).
    pub legitimate_round: Option<u64>,
    pub closure_verified: bool,
    pub invariant_violations: Vec<Violation>,
}
