//! Lower-bound machinery for arbitrary single-node protocol automata.
//!
//! An automaton has two deterministic transitions per state (beep heard,
//! silence) and a beep predicate. The analyzer finds the cycle `L` a node
//! follows while hearing beeps forever, classifies the automaton into one of
//! three cases and builds a small graph plus initial states on which the
//! automaton never synchronizes. Certification simulates the global system
//! until its configuration repeats.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::checkpoints::CheckpointSet;
use crate::error::{Error, Result};
use crate::fast::{step, will_beep, FastNodeConfig, RoundInput};
use crate::selfstab::{
    consistency_check, stab_step, will_beep_stab, StabNodeConfig, StabParams, StabState,
    MAX_BEEP_COUNT,
};
use crate::topology::Topology;

pub type StateId = usize;

/// `(beep_next, silence_next, beeps, clock)` of one parsed line.
type Row = (StateId, StateId, bool, Option<u32>);

/// Default largest counterexample the analyzer builds or certifies.
pub const DEFAULT_NODE_BUDGET: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolAutomaton {
    beep_next: Vec<StateId>,
    silence_next: Vec<StateId>,
    beeps: Vec<bool>,
    clock: Option<Vec<u32>>,
    labels: Vec<String>,
}

impl ProtocolAutomaton {
    pub fn new(
        beep_next: Vec<StateId>,
        silence_next: Vec<StateId>,
        beeps: Vec<bool>,
        clock: Option<Vec<u32>>,
    ) -> Result<Self> {
        let k = beep_next.len();
        if k == 0 {
            return Err(Error::Argument("automaton needs at least one state".into()));
        }
        if silence_next.len() != k
            || beeps.len() != k
            || clock.as_ref().is_some_and(|c| c.len() != k)
        {
            return Err(Error::Argument(
                "transition table columns differ in length".into(),
            ));
        }
        if let Some(bad) = beep_next.iter().chain(&silence_next).find(|&&s| s >= k) {
            return Err(Error::Argument(format!(
                "transition to unknown state {bad}"
            )));
        }
        Ok(Self {
            beep_next,
            silence_next,
            beeps,
            clock,
            labels: (0..k).map(|s| s.to_string()).collect(),
        })
    }

    fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.labels = labels;
        self
    }

    pub fn state_count(&self) -> usize {
        self.beep_next.len()
    }

    pub fn next(&self, state: StateId, heard_beep: bool) -> StateId {
        if heard_beep {
            self.beep_next[state]
        } else {
            self.silence_next[state]
        }
    }

    pub fn beeps(&self, state: StateId) -> bool {
        self.beeps[state]
    }

    pub fn clock_of(&self, state: StateId) -> Option<u32> {
        self.clock.as_ref().map(|c| c[state])
    }

    pub fn has_clock(&self) -> bool {
        self.clock.is_some()
    }

    /// Human-readable name; the state index for parsed automata.
    pub fn label(&self, state: StateId) -> &str {
        &self.labels[state]
    }

    /// Parses the text format: a `states k` header, then one line per state
    /// `state beep_next silence_next beeps [clock]`. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "missing `states k` header".into(),
        })?;
        let k: usize = match header.split_whitespace().collect::<Vec<_>>()[..] {
            ["states", k] => k.parse().map_err(|_| Error::Parse {
                line: hline,
                msg: format!("bad state count `{k}`"),
            })?,
            _ => {
                return Err(Error::Parse {
                    line: hline,
                    msg: "expected `states k`".into(),
                })
            }
        };
        let mut rows: Vec<Option<Row>> = vec![None; k];
        for (line, l) in lines {
            let err = |msg: String| Error::Parse { line, msg };
            let fields: Vec<&str> = l.split_whitespace().collect();
            if !(4..=5).contains(&fields.len()) {
                return Err(err(format!("expected 4 or 5 fields, got {}", fields.len())));
            }
            let num = |s: &str| -> Result<usize> {
                s.parse().map_err(|_| err(format!("bad number `{s}`")))
            };
            let state = num(fields[0])?;
            let (b, s) = (num(fields[1])?, num(fields[2])?);
            if let Some(bad) = [state, b, s].into_iter().find(|&x| x >= k) {
                return Err(err(format!("state {bad} outside 0..{k}")));
            }
            let beeps = match fields[3] {
                "0" => false,
                "1" => true,
                other => return Err(err(format!("beep flag must be 0 or 1, got `{other}`"))),
            };
            let clock = fields
                .get(4)
                .map(|c| {
                    c.parse::<u32>()
                        .map_err(|_| err(format!("bad clock `{c}`")))
                })
                .transpose()?;
            if rows[state].replace((b, s, beeps, clock)).is_some() {
                return Err(err(format!("state {state} defined twice")));
            }
        }
        let rows: Vec<_> = rows
            .into_iter()
            .enumerate()
            .map(|(s, r)| {
                r.ok_or(Error::Parse {
                    line: 0,
                    msg: format!("state {s} has no transitions"),
                })
            })
            .collect::<Result<_>>()?;
        let with_clock = rows.iter().filter(|r| r.3.is_some()).count();
        let clock = match with_clock {
            0 => None,
            n if n == k => Some(rows.iter().map(|r| r.3.unwrap_or(0)).collect()),
            _ => {
                return Err(Error::Parse {
                    line: 0,
                    msg: "clock column given for some states only".into(),
                })
            }
        };
        Self::new(
            rows.iter().map(|r| r.0).collect(),
            rows.iter().map(|r| r.1).collect(),
            rows.iter().map(|r| r.2).collect(),
            clock,
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("states {}\n", self.state_count());
        for s in 0..self.state_count() {
            write!(
                out,
                "{s} {} {} {}",
                self.beep_next[s],
                self.silence_next[s],
                u8::from(self.beeps[s])
            )
            .expect("write to string");
            if let Some(c) = self.clock_of(s) {
                write!(out, " {c}").expect("write to string");
            }
            out.push('\n');
        }
        out
    }

    /// The fast protocol's configurations reachable from an inactive node,
    /// with the inactive state as state 0.
    pub fn from_fast(cp: &CheckpointSet) -> Self {
        let mut index: HashMap<FastNodeConfig, StateId> = HashMap::new();
        let mut configs = vec![FastNodeConfig::INACTIVE];
        index.insert(FastNodeConfig::INACTIVE, 0);
        let mut beep_next = Vec::new();
        let mut silence_next = Vec::new();
        let mut i = 0;
        while i < configs.len() {
            let c = configs[i];
            for (heard, column) in [(true, &mut beep_next), (false, &mut silence_next)] {
                let next = step(c, RoundInput::heard(heard), cp);
                let id = *index.entry(next).or_insert_with(|| {
                    configs.push(next);
                    configs.len() - 1
                });
                column.push(id);
            }
            i += 1;
        }
        let beeps = configs.iter().map(will_beep).collect();
        let clock = configs.iter().map(|c| c.clock).collect();
        let labels = configs.iter().map(|c| c.to_string()).collect();
        Self::new(beep_next, silence_next, beeps, Some(clock))
            .expect("closed under both inputs")
            .with_labels(labels)
    }

    /// Every configuration of the self-stabilizing protocol's domain. A state
    /// is the configuration at the start of a round; the consistency check
    /// is part of the transition. State 0 is inactive with zero counters.
    pub fn from_selfstab(params: &StabParams) -> Self {
        let cp = params.checkpoints();
        let mut configs = Vec::new();
        for state in StabState::ALL {
            for clock in 0..params.period() {
                for induced in [false, true] {
                    for rounds in 0..=params.max_round_counter() {
                        for beeps in 0..=MAX_BEEP_COUNT {
                            configs.push(StabNodeConfig {
                                clock,
                                state,
                                induced,
                                rounds,
                                beeps,
                            });
                        }
                    }
                }
            }
        }
        let index: HashMap<StabNodeConfig, StateId> =
            configs.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        let next = |c: &StabNodeConfig, heard: bool| {
            index[&stab_step(consistency_check(*c, cp), RoundInput::heard(heard), params)]
        };
        let beep_next = configs.iter().map(|c| next(c, true)).collect();
        let silence_next = configs.iter().map(|c| next(c, false)).collect();
        let beeps = configs
            .iter()
            .map(|c| will_beep_stab(&consistency_check(*c, cp)))
            .collect();
        let clock = configs.iter().map(|c| c.clock).collect();
        let labels = configs.iter().map(|c| c.to_string()).collect();
        Self::new(beep_next, silence_next, beeps, Some(clock))
            .expect("domain closed under the step")
            .with_labels(labels)
    }
}

/// The eventual cycle under constant input `heard`, as first reached from
/// `start`, without repeating the first state.
fn eventual_cycle(a: &ProtocolAutomaton, start: StateId, heard: bool) -> Vec<StateId> {
    let mut seen: HashMap<StateId, usize> = HashMap::new();
    let mut path = Vec::new();
    let mut s = start;
    while let std::collections::hash_map::Entry::Vacant(e) = seen.entry(s) {
        e.insert(path.len());
        path.push(s);
        s = a.next(s, heard);
    }
    path.split_off(seen[&s])
}

/// The cycle `L` a node starting in `start` follows when it hears a beep in
/// every round. The returned sequence is closed: its last element repeats
/// the first.
pub fn find_beep_cycle(a: &ProtocolAutomaton, start: StateId) -> Vec<StateId> {
    let mut cycle = eventual_cycle(a, start, true);
    cycle.push(cycle[0]);
    cycle
}

/// The cycle a lone node starting in `start` eventually follows.
pub fn find_silence_cycle(a: &ProtocolAutomaton, start: StateId) -> Vec<StateId> {
    eventual_cycle(a, start, false)
}

/// True when `pattern` (one flag per round of a cycle) is set exactly on
/// the rounds of one residue class mod `T`.
fn pulses_every(pattern: &[bool], period: u32) -> bool {
    let t = period as usize;
    if t == 0 || !pattern.len().is_multiple_of(t) {
        return false;
    }
    let Some(phase) = pattern.iter().position(|&b| b) else {
        return false;
    };
    pattern
        .iter()
        .enumerate()
        .all(|(i, &b)| b == (i % t == phase % t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Case {
    /// The beep cycle never beeps and some lone node never pulses with
    /// period `T`.
    A1,
    /// The beep cycle never beeps, every lone node pulses with period `T`.
    A2,
    /// The beep cycle contains a beeping state.
    B,
}

#[derive(Debug, Clone)]
pub struct Counterexample {
    pub topology: Topology,
    pub initial: Vec<StateId>,
}

#[derive(Debug, Clone)]
pub struct CycleReport {
    /// Closed: `beep_cycle[r] == beep_cycle[0]`.
    pub beep_cycle: Vec<StateId>,
    /// The lone-node cycle used by the construction, starting at `m_0`
    /// (empty outside case A2).
    pub silence_cycle: Vec<StateId>,
    pub case: Case,
    pub counterexample: Counterexample,
}

/// Index of `m_0` on a lone-node cycle: a beeping state with clock 0, or
/// any beeping state when the automaton has no clock.
fn clock_zero_anchor(a: &ProtocolAutomaton, cycle: &[StateId]) -> Result<usize> {
    cycle
        .iter()
        .position(|&s| a.beeps(s) && a.clock_of(s).is_none_or(|c| c == 0))
        .ok_or_else(|| Error::Inapplicable("lone-node cycle has no beeping clock-0 state".into()))
}

fn check_budget(size: usize, budget: usize) -> Result<()> {
    if size > budget {
        return Err(Error::NotConstructible(format!(
            "counterexample needs {size} nodes, budget is {budget}"
        )));
    }
    Ok(())
}

/// Classifies `a` starting from its state 0 and builds the matching
/// non-synchronizing counterexample.
pub fn classify(a: &ProtocolAutomaton, period: u32, budget: usize) -> Result<CycleReport> {
    if period == 0 {
        return Err(Error::Argument("T must be at least 1".into()));
    }
    let beep_cycle = find_beep_cycle(a, 0);
    let l = &beep_cycle[..beep_cycle.len() - 1];

    if l.iter().any(|&s| a.beeps(s)) {
        check_budget(l.len(), budget)?;
        return Ok(CycleReport {
            counterexample: Counterexample {
                topology: Topology::clique(l.len())?,
                initial: l.to_vec(),
            },
            beep_cycle,
            silence_cycle: Vec::new(),
            case: Case::B,
        });
    }

    let lone_pulses = |cycle: &[StateId]| {
        let pattern: Vec<bool> = cycle.iter().map(|&s| a.beeps(s)).collect();
        pulses_every(&pattern, period)
    };
    for s in 0..a.state_count() {
        let cycle = find_silence_cycle(a, s);
        if !lone_pulses(&cycle) {
            return Ok(CycleReport {
                beep_cycle,
                silence_cycle: Vec::new(),
                case: Case::A1,
                counterexample: Counterexample {
                    topology: Topology::line(1)?,
                    initial: vec![cycle[0]],
                },
            });
        }
    }

    let m = find_silence_cycle(a, 0);
    if m.len() < period as usize {
        return Err(Error::Inapplicable(format!(
            "lone-node cycle of length {} is shorter than T={period}",
            m.len()
        )));
    }
    let anchor = clock_zero_anchor(a, &m)?;
    let mut m = m;
    m.rotate_left(anchor);
    check_budget(period as usize + 1, budget)?;
    let mut initial = vec![beep_cycle[0]];
    initial.extend_from_slice(&m[..period as usize]);
    Ok(CycleReport {
        counterexample: Counterexample {
            topology: Topology::star(period as usize + 1)?,
            initial,
        },
        beep_cycle,
        silence_cycle: m,
        case: Case::A2,
    })
}

/// Trajectory of the global configuration until it repeats: every visited
/// configuration in order, and the index where the cycle starts.
fn global_run(
    a: &ProtocolAutomaton,
    topology: &Topology,
    initial: &[StateId],
) -> (Vec<Vec<StateId>>, usize) {
    let mut seen: HashMap<Vec<StateId>, usize> = HashMap::new();
    let mut path: Vec<Vec<StateId>> = Vec::new();
    let mut config = initial.to_vec();
    loop {
        if let Some(&start) = seen.get(&config) {
            return (path, start);
        }
        seen.insert(config.clone(), path.len());
        let beeping: Vec<bool> = config.iter().map(|&s| a.beeps(s)).collect();
        let next = (0..config.len())
            .map(|v| {
                let heard = topology.neighbors(v).iter().any(|&w| beeping[w]);
                a.next(config[v], heard)
            })
            .collect();
        path.push(std::mem::replace(&mut config, next));
    }
}

/// All nodes agree (same clock, or same state without clocks) and beep
/// all together or not at all.
fn agreeing(a: &ProtocolAutomaton, config: &[StateId]) -> bool {
    let same = match a.clock_of(config[0]) {
        Some(c0) => config.iter().all(|&s| a.clock_of(s) == Some(c0)),
        None => config.iter().all(|&s| s == config[0]),
    };
    same && config.iter().all(|&s| a.beeps(s) == a.beeps(config[0]))
}

fn cycle_synchronized(a: &ProtocolAutomaton, cycle: &[Vec<StateId>], period: u32) -> bool {
    cycle.iter().all(|c| agreeing(a, c))
        && pulses_every(
            &cycle.iter().map(|c| a.beeps(c[0])).collect::<Vec<_>>(),
            period,
        )
}

fn validate_instance(a: &ProtocolAutomaton, ce: &Counterexample) -> Result<()> {
    if ce.initial.len() != ce.topology.node_count() {
        return Err(Error::Argument(format!(
            "{} initial states for {} nodes",
            ce.initial.len(),
            ce.topology.node_count()
        )));
    }
    if let Some(bad) = ce.initial.iter().find(|&&s| s >= a.state_count()) {
        return Err(Error::Argument(format!("unknown state {bad}")));
    }
    check_budget(ce.topology.node_count(), DEFAULT_NODE_BUDGET)
}

/// True iff the system started from `ce` never reaches a configuration
/// from which it stays synchronized: agreeing nodes that pulse together
/// exactly every `T` rounds.
pub fn certify_no_sync(a: &ProtocolAutomaton, ce: &Counterexample, period: u32) -> Result<bool> {
    validate_instance(a, ce)?;
    let (path, start) = global_run(a, &ce.topology, &ce.initial);
    Ok(!cycle_synchronized(a, &path[start..], period))
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoOutcome {
    pub m0: StateId,
    pub m1: StateId,
    /// First round (counted from 1) from which the two nodes stay
    /// synchronized.
    pub first_sync_round: u64,
}

/// Two adjacent nodes started on consecutive states `m_0`, `m_1` of the
/// lone-node cycle reached from state 0.
pub fn runtime_lower_bound_demo(a: &ProtocolAutomaton, period: u32) -> Result<DemoOutcome> {
    if period == 0 {
        return Err(Error::Argument("T must be at least 1".into()));
    }
    let mut m = find_silence_cycle(a, 0);
    if !m.iter().any(|&s| a.beeps(s)) {
        return Err(Error::Inapplicable("lone-node cycle never beeps".into()));
    }
    let anchor = clock_zero_anchor(a, &m)?;
    m.rotate_left(anchor);
    let (m0, m1) = (m[0], m[1 % m.len()]);
    let topology = Topology::line(2)?;
    let (path, start) = global_run(a, &topology, &[m0, m1]);
    if !cycle_synchronized(a, &path[start..], period) {
        return Err(Error::Inapplicable(
            "the two nodes never synchronize".into(),
        ));
    }
    let first = path[..start]
        .iter()
        .rposition(|c| !agreeing(a, c))
        .map_or(0, |i| i + 1);
    Ok(DemoOutcome {
        m0,
        m1,
        first_sync_round: first as u64 + 1,
    })
}
