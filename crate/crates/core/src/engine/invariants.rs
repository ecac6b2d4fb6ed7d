//! Trace-level checks of the counter, beep and difference properties that
//! executions of the fast protocol must satisfy, plus episode checks for the
//! self-stabilizing protocol.

use serde::Serialize;

use crate::checkpoints::CheckpointSet;
use crate::error::{Error, Result};
use crate::fast::{BeepClass, FastNodeConfig, FastState};
use crate::selfstab::{StabNodeConfig, StabParams, StabState};
use crate::topology::NodeId;

use super::RoundTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum InvariantCheck {
    /// C1: `clock == (1 + counter) mod T`.
    ClockCounter,
    /// C2: the counter advances by 1 or 2 per active round.
    CounterStep,
    /// C3: a Beep state sits on a checkpoint or one past it.
    BeepStateLegality,
    /// C4: a beeping neighbor with counter equal or one lower never induces.
    InduceLegality,
    /// C5: a neighbor counter gap above 1 closes again the next round.
    DifferenceRecovery,
    /// C6: a first-woken node with maximal counter stays maximal.
    MaxCounterPersistence,
    /// C7: neighbors activated one round apart differ by exactly 1.
    NeighborActivation,
    /// Pulse episodes last exactly 4 beeping rounds.
    PulseEpisode,
    /// Lock episodes entered with `r = 0` last exactly `4N` rounds.
    LockEpisode,
    /// `b` is reset by every silent Listen round.
    BeepCounterReset,
    /// `r` grows by one per round between resets and saturates.
    RoundCounter,
}

impl InvariantCheck {
    pub fn code(self) -> &'static str {
        match self {
            InvariantCheck::ClockCounter => "C1",
            InvariantCheck::CounterStep => "C2",
            InvariantCheck::BeepStateLegality => "C3",
            InvariantCheck::InduceLegality => "C4",
            InvariantCheck::DifferenceRecovery => "C5",
            InvariantCheck::MaxCounterPersistence => "C6",
            InvariantCheck::NeighborActivation => "C7",
            InvariantCheck::PulseEpisode => "S1",
            InvariantCheck::LockEpisode => "S2",
            InvariantCheck::BeepCounterReset => "S3",
            InvariantCheck::RoundCounter => "S4",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub check: InvariantCheck,
    pub round: u64,
    pub nodes: Vec<NodeId>,
    pub detail: String,
}

impl Violation {
    fn new(check: InvariantCheck, round: usize, nodes: Vec<NodeId>, detail: String) -> Self {
        Self {
            check,
            round: round as u64,
            nodes,
            detail,
        }
    }
}

fn diff(a: u64, b: u64) -> u64 {
    a.abs_diff(b)
}

/// Runs C1-C7 over a fast-protocol trace; an empty list means every check
/// held in every round.
pub fn check_invariants(trace: &RoundTrace<FastNodeConfig>, cp: &CheckpointSet) -> Vec<Violation> {
    use InvariantCheck::*;
    let t_mod = u64::from(cp.period());
    let topo = &trace.topology;
    let n = topo.node_count();
    let mut out = Vec::new();

    for (t, row) in trace.rounds.iter().enumerate() {
        for (v, rec) in row.iter().enumerate() {
            match (rec.config.is_active(), rec.virtual_counter) {
                (true, Some(c)) => {
                    if u64::from(rec.config.clock) != (1 + c) % t_mod {
                        out.push(Violation::new(
                            ClockCounter,
                            t,
                            vec![v],
                            format!("clock {} vs counter {c}", rec.config.clock),
                        ));
                    }
                }
                (true, None) => out.push(Violation::new(
                    ClockCounter,
                    t,
                    vec![v],
                    "active node without counter".into(),
                )),
                (false, _) => {}
            }

            if rec.config.state == FastState::Beep
                && rec.beep_class != Some(BeepClass::Activation)
                && !(cp.contains(rec.config.clock) || cp.follows_checkpoint(rec.config.clock))
            {
                out.push(Violation::new(
                    BeepStateLegality,
                    t,
                    vec![v],
                    format!("Beep state at clock {}", rec.config.clock),
                ));
            }

            if rec.induce_event {
                if let Some(cv) = rec.virtual_counter {
                    for &w in topo.neighbors(v) {
                        let other = &row[w];
                        if let (true, Some(cw)) = (other.beeped, other.virtual_counter) {
                            if cv == cw || cv == cw + 1 {
                                out.push(Violation::new(
                                    InduceLegality,
                                    t,
                                    vec![w, v],
                                    format!("inducer counter {cw}, induced counter {cv}"),
                                ));
                            }
                        }
                    }
                }
            }
        }

        if let Some(next) = trace.rounds.get(t + 1) {
            for v in 0..n {
                if let (Some(a), Some(b)) = (row[v].virtual_counter, next[v].virtual_counter) {
                    if b < a + 1 || b > a + 2 {
                        out.push(Violation::new(
                            CounterStep,
                            t + 1,
                            vec![v],
                            format!("counter {a} -> {b}"),
                        ));
                    }
                }
            }

            let max_now = row.iter().filter_map(|r| r.virtual_counter).max();
            let max_next = next.iter().filter_map(|r| r.virtual_counter).max();
            if let (Some(max_now), Some(max_next)) = (max_now, max_next) {
                for &v in &trace.first_woken {
                    if row[v].virtual_counter == Some(max_now)
                        && next[v].virtual_counter != Some(max_next)
                    {
                        out.push(Violation::new(
                            MaxCounterPersistence,
                            t + 1,
                            vec![v],
                            format!(
                                "counter {:?} below maximum {max_next}",
                                next[v].virtual_counter
                            ),
                        ));
                    }
                }
            }
        }
    }

    for (u, w) in topo.edges() {
        let pair = |t: usize| -> Option<u64> {
            let row = &trace.rounds[t];
            Some(diff(row[u].virtual_counter?, row[w].virtual_counter?))
        };
        for t in 1..trace.rounds.len() {
            if let (Some(before), Some(now)) = (pair(t - 1), pair(t)) {
                if before <= 1 && now > 1 {
                    if let Some(after) = (t + 1 < trace.rounds.len()).then(|| pair(t + 1)).flatten()
                    {
                        if after > 1 {
                            out.push(Violation::new(
                                DifferenceRecovery,
                                t + 1,
                                vec![u, w],
                                format!("difference {now} then {after}"),
                            ));
                        }
                    }
                }
            }
        }

        for (v, x) in [(u, w), (w, u)] {
            if let (Some(av), Some(ax)) = (trace.activation_round[v], trace.activation_round[x]) {
                if av >= 1 && ax == av - 1 {
                    if let Some(d) = pair(av as usize) {
                        if d != 1 {
                            out.push(Violation::new(
                                NeighborActivation,
                                av as usize,
                                vec![v, x],
                                format!("difference {d} at activation"),
                            ));
                        }
                    }
                }
            }
        }
    }

    out.sort_by_key(|v| (v.round, v.check.code(), v.nodes.clone()));
    out
}

/// First round at or after `from` in which every node is active at clock 0.
pub fn first_collective_pulse(trace: &RoundTrace<FastNodeConfig>, from: u64) -> Option<u64> {
    (from as usize..trace.rounds.len())
        .find(|&t| {
            trace.rounds[t]
                .iter()
                .all(|r| r.config.is_active() && r.config.clock == 0)
        })
        .map(|t| t as u64)
}

/// Checks the synchronized regime over `window` rounds, starting at the
/// first collective pulse at or after `sync_round`: every round has equal
/// clocks and a node beeps exactly when its clock is 0.
///
/// Returns `false` if the trace ends before the window does; rejects
/// windows shorter than `2T`.
pub fn check_closure(
    trace: &RoundTrace<FastNodeConfig>,
    sync_round: u64,
    window: u64,
) -> Result<bool> {
    if window < 2 * u64::from(trace.period) {
        return Err(Error::Argument(format!(
            "closure window {window} shorter than 2T = {}",
            2 * trace.period
        )));
    }
    let Some(start) = first_collective_pulse(trace, sync_round) else {
        return Ok(false);
    };
    let end = start + window;
    if end > trace.rounds.len() as u64 {
        return Ok(false);
    }
    Ok(trace.rounds[start as usize..end as usize]
        .iter()
        .all(|row| {
            let clock = row[0].config.clock;
            row.iter().all(|r| {
                r.config.is_active() && r.config.clock == clock && r.beeped == (r.config.clock == 0)
            })
        }))
}

/// Episode checks for self-stabilizing traces (rows hold post-check
/// configurations): Pulse bursts, Lock waits, `b` resets and the `r`
/// counter discipline. Episodes cut off by either end of the trace, or not
/// entered with `r = 0`, are skipped.
pub fn check_stab_invariants(
    trace: &RoundTrace<StabNodeConfig>,
    params: &StabParams,
) -> Vec<Violation> {
    use InvariantCheck::*;
    let mut out = Vec::new();
    let rows = &trace.rounds;
    let n = trace.topology.node_count();
    let rmax = params.max_round_counter();

    for v in 0..n {
        let config = |t: usize| &rows[t][v].config;
        let mut t = 0;
        while t < rows.len() {
            let state = config(t).state;
            let run = (t..rows.len())
                .take_while(|&s| config(s).state == state)
                .count();
            let fresh = t > 0 && config(t).rounds == 0;
            let finished = t + run < rows.len();
            if fresh && finished {
                match state {
                    StabState::Pulse => {
                        let next = config(t + run).state;
                        if run != 4 || next != StabState::Lock {
                            out.push(Violation::new(
                                PulseEpisode,
                                t,
                                vec![v],
                                format!("{run} pulse rounds, then {next:?}"),
                            ));
                        }
                    }
                    StabState::Lock if run as u64 != params.lock_rounds() => {
                        out.push(Violation::new(
                            LockEpisode,
                            t,
                            vec![v],
                            format!("locked for {run} rounds"),
                        ));
                    }
                    _ => {}
                }
            }
            t += run;
        }

        for t in 1..rows.len() {
            let prev = config(t - 1);
            let cur = config(t);
            let heard = trace
                .topology
                .neighbors(v)
                .iter()
                .any(|&w| rows[t - 1][w].beeped);
            if prev.state == StabState::Listen && !heard && cur.beeps != 0 {
                out.push(Violation::new(
                    BeepCounterReset,
                    t,
                    vec![v],
                    format!("b = {} after a silent Listen round", cur.beeps),
                ));
            }
            if cur.rounds != 0 && cur.rounds != (prev.rounds + 1).min(rmax) {
                out.push(Violation::new(
                    RoundCounter,
                    t,
                    vec![v],
                    format!("r {} -> {}", prev.rounds, cur.rounds),
                ));
            }
        }
    }
    out.sort_by_key(|v| (v.round, v.check.code(), v.nodes.clone()));
    out
}
