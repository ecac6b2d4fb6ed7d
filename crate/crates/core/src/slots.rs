//! Continuous-time slot simulator for the fast protocol.
//!
//! Every node divides time into slots of length `μ` starting at its own
//! offset. A beeping node beeps for its whole slot; reception is
//! instantaneous. A node that listens one clock value before a checkpoint,
//! or is inactive, stretches its current slot by the offset of the first
//! beep onset it hears in that slot.
//!
//! Time is kept in integer ticks (`2^32` per slot length), so extension
//! arithmetic is exact. Only the initial offsets are rounded to the tick
//! grid.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::checkpoints::CheckpointSet;
use crate::engine::ActivationSchedule;
use crate::error::{Error, Result};
use crate::fast::{step_traced, will_beep, FastNodeConfig, FastState, FastTransition, RoundInput};
use crate::topology::{NodeId, Topology};

/// Ticks per slot length.
pub const TICKS_PER_SLOT: u64 = 1 << 32;

/// One completed slot of one node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotRecord {
    pub node: NodeId,
    pub slot_index: u64,
    pub start_time: f64,
    pub end_time: f64,
    pub beeped: bool,
    pub clock: u32,
    pub state: FastState,
    pub induced: bool,
    /// Extension applied to this slot, in time units.
    pub extension: f64,
    #[serde(skip)]
    pub start_tick: u64,
    #[serde(skip)]
    pub end_tick: u64,
    #[serde(skip)]
    pub induce_event: bool,
}

impl SlotRecord {
    pub fn config(&self) -> FastNodeConfig {
        FastNodeConfig::new(self.clock, self.state, self.induced)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotSummary {
    /// Slot length `μ`.
    pub slot_length: f64,
    /// Time from which every node's slots start at the same instants with
    /// equal clocks, up to the horizon.
    pub alignment_time: Option<f64>,
    /// First aligned slot start at or after `alignment_time` where all
    /// clocks are 0; from there on every beep is checked to happen at
    /// clock 0.
    pub first_common_pulse: Option<f64>,
    /// At least one period of aligned slots follows `first_common_pulse`
    /// and all of them beep exactly at clock 0.
    pub closure_verified: bool,
    /// Largest extension applied, in time units.
    pub max_extension: f64,
}

#[derive(Debug, Clone, Copy)]
struct NodeSlot {
    index: u64,
    start: u64,
    end: u64,
    config: FastNodeConfig,
    beeping: bool,
    decided: bool,
    extension: u64,
}

/// Uniform offsets in `[0, slot_length)`.
pub fn random_offsets(n: usize, slot_length: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0.0..slot_length)).collect()
}

fn to_ticks(time: f64, mu: f64) -> u64 {
    (time / mu * TICKS_PER_SLOT as f64).round() as u64
}

fn to_time(ticks: u64, mu: f64) -> f64 {
    ticks as f64 / TICKS_PER_SLOT as f64 * mu
}

/// Runs the fast protocol in the slot model.
///
/// `schedule` holds slot indices: node `v` is woken at the end of its own
/// slot `wake_round(v)`, and beeps in the following slot. Slots that end
/// after `horizon_time` are not recorded.
pub fn run_slots(
    topology: &Topology,
    offsets: &[f64],
    slot_length: f64,
    schedule: &ActivationSchedule,
    cp: &CheckpointSet,
    horizon_time: f64,
) -> Result<(SlotSummary, Vec<SlotRecord>)> {
    let n = topology.node_count();
    if !(slot_length.is_finite() && slot_length > 0.0) {
        return Err(Error::Argument(format!(
            "slot length must be positive, got {slot_length}"
        )));
    }
    if offsets.len() != n {
        return Err(Error::Argument(format!(
            "{} offsets for {n} nodes",
            offsets.len()
        )));
    }
    if let Some(bad) = offsets
        .iter()
        .find(|&&o| !(o.is_finite() && (0.0..slot_length).contains(&o)))
    {
        return Err(Error::Argument(format!(
            "offset {bad} outside [0, {slot_length})"
        )));
    }
    if schedule.node_count() != n {
        return Err(Error::Schedule(format!(
            "schedule covers {} nodes, topology has {n}",
            schedule.node_count()
        )));
    }
    if !(horizon_time.is_finite() && horizon_time > 0.0) {
        return Err(Error::Argument("horizon must be positive".into()));
    }
    let horizon = to_ticks(horizon_time, slot_length);

    let mut slots: Vec<NodeSlot> = offsets
        .iter()
        .map(|&o| {
            let start = to_ticks(o, slot_length).min(TICKS_PER_SLOT - 1);
            NodeSlot {
                index: 0,
                start,
                end: start + TICKS_PER_SLOT,
                config: FastNodeConfig::INACTIVE,
                beeping: false,
                decided: false,
                extension: 0,
            }
        })
        .collect();
    // Beep intervals per node, in start order.
    let mut beeps: Vec<Vec<(u64, u64)>> = vec![Vec::new(); n];
    let mut queue: BinaryHeap<Reverse<(u64, NodeId)>> = slots
        .iter()
        .enumerate()
        .map(|(v, s)| Reverse((s.end, v)))
        .collect();
    let mut history = Vec::new();

    while let Some(Reverse((time, v))) = queue.pop() {
        if time > horizon {
            break;
        }
        let slot = slots[v];
        if time != slot.end {
            continue;
        }
        let overlapping = |w: NodeId, end: u64| {
            beeps[w]
                .iter()
                .rev()
                .take_while(|&&(_, e)| e > slot.start)
                .filter(move |&&(s, _)| s < end)
                .map(move |&(s, _)| s.max(slot.start))
                .collect::<Vec<_>>()
        };

        if !slot.decided {
            slots[v].decided = true;
            let eligible = slot.config.state == FastState::Inactive
                || (slot.config.state == FastState::Listen
                    && cp.precedes_checkpoint(slot.config.clock));
            if eligible {
                let onset = topology
                    .neighbors(v)
                    .iter()
                    .flat_map(|&w| overlapping(w, slot.end))
                    .min();
                if let Some(onset) = onset {
                    let t = onset - slot.start;
                    if t > 0 {
                        slots[v].extension = t;
                        slots[v].end += t;
                        queue.push(Reverse((slots[v].end, v)));
                        continue;
                    }
                }
            }
        }

        let heard = topology
            .neighbors(v)
            .iter()
            .any(|&w| !overlapping(w, slot.end).is_empty());
        let input = RoundInput {
            heard_beep: heard,
            adversary_wakes: schedule.wake_round(v) == Some(slot.index),
        };
        let (next, transition) = step_traced(slot.config, input, cp);
        history.push(SlotRecord {
            node: v,
            slot_index: slot.index,
            start_time: to_time(slot.start, slot_length),
            end_time: to_time(slot.end, slot_length),
            beeped: slot.beeping,
            clock: slot.config.clock,
            state: slot.config.state,
            induced: slot.config.induced,
            extension: to_time(slot.extension, slot_length),
            start_tick: slot.start,
            end_tick: slot.end,
            induce_event: transition == FastTransition::Induced,
        });

        let start = slot.end;
        let beeping = will_beep(&next);
        if beeping {
            beeps[v].push((start, start + TICKS_PER_SLOT));
        }
        slots[v] = NodeSlot {
            index: slot.index + 1,
            start,
            end: start + TICKS_PER_SLOT,
            config: next,
            beeping,
            decided: false,
            extension: 0,
        };
        queue.push(Reverse((slots[v].end, v)));
    }

    history.sort_by_key(|r| (r.node, r.slot_index));
    let summary = summarize(&history, n, cp.period(), slot_length);
    Ok((summary, history))
}

fn summarize(history: &[SlotRecord], n: usize, period: u32, mu: f64) -> SlotSummary {
    let max_extension = history.iter().map(|r| r.extension).fold(0.0, f64::max);
    let mut summary = SlotSummary {
        slot_length: mu,
        alignment_time: None,
        first_common_pulse: None,
        closure_verified: false,
        max_extension,
    };

    // Only compare slots every node has had the chance to complete.
    let cut = (0..n)
        .map(|v| {
            history
                .iter()
                .filter(|r| r.node == v)
                .map(|r| r.end_tick)
                .max()
                .unwrap_or(0)
        })
        .min()
        .unwrap_or(0);
    let mut groups: BTreeMap<u64, Vec<&SlotRecord>> = BTreeMap::new();
    for r in history.iter().filter(|r| r.end_tick <= cut) {
        groups.entry(r.start_tick).or_default().push(r);
    }
    let aligned = |g: &[&SlotRecord]| {
        g.len() == n
            && g.iter()
                .all(|r| r.state != FastState::Inactive && r.clock == g[0].clock)
    };
    let tail: Vec<(&u64, &Vec<&SlotRecord>)> = groups
        .iter()
        .rev()
        .take_while(|(_, g)| aligned(g))
        .collect();
    let Some((&start, _)) = tail.last() else {
        return summary;
    };
    summary.alignment_time = Some(to_time(start, mu));

    let from_pulse: Vec<&Vec<&SlotRecord>> = tail
        .iter()
        .rev()
        .map(|(_, g)| *g)
        .skip_while(|g| g[0].clock != 0)
        .collect();
    if let Some(first) = from_pulse.first() {
        summary.first_common_pulse = Some(to_time(first[0].start_tick, mu));
        summary.closure_verified = from_pulse.len() >= period as usize
            && from_pulse
                .iter()
                .all(|g| g.iter().all(|r| r.beeped == (r.clock == 0)));
    }
    summary
}
