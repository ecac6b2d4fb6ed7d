use crate::checkpoints::CheckpointSet;
use crate::error::{Error, Result};
use crate::fast::{
    classify_beep, step_traced, will_beep, FastNodeConfig, FastTransition, RoundInput,
};
use crate::topology::Topology;

use super::invariants::{check_closure, check_invariants};
use super::{ActivationSchedule, NodeRecord, RoundTrace, SimResult};

/// `2 * bound + 6T`: room for the synchronization bound, the first common
/// pulse after it and a 4T closure window.
pub fn default_fast_horizon(cp: &CheckpointSet, diameter: usize) -> u64 {
    2 * cp.fast_runtime_bound(diameter as u64) + 6 * u64::from(cp.period())
}

/// Runs the fast protocol from an all-inactive start.
///
/// Raw round `w0` is the adversary's first wake-up; activation assignments
/// happen in that round and the first beep in `w0 + 1`, which is reported
/// as round 0. The trace holds reported rounds `0..horizon`.
pub fn run_fast(
    topology: &Topology,
    schedule: &ActivationSchedule,
    cp: &CheckpointSet,
    horizon: Option<u64>,
) -> Result<(SimResult, RoundTrace<FastNodeConfig>)> {
    let n = topology.node_count();
    if schedule.node_count() != n {
        return Err(Error::Schedule(format!(
            "schedule covers {} nodes, topology has {n}",
            schedule.node_count()
        )));
    }
    let horizon = horizon.unwrap_or_else(|| default_fast_horizon(cp, topology.diameter()));
    if horizon == 0 {
        return Err(Error::Argument("horizon must be at least 1".into()));
    }

    let first_wake = schedule.first_wake();
    let mut configs = vec![FastNodeConfig::INACTIVE; n];
    for (v, c) in configs.iter_mut().enumerate() {
        let input = RoundInput {
            heard_beep: false,
            adversary_wakes: schedule.wake_round(v) == Some(first_wake),
        };
        *c = step_traced(*c, input, cp).0;
    }

    let mut counters: Vec<Option<u64>> =
        configs.iter().map(|c| c.is_active().then_some(0)).collect();
    let mut activation_round: Vec<Option<u64>> = counters.iter().map(|c| c.map(|_| 0)).collect();
    let mut rounds = Vec::with_capacity(horizon as usize);
    let mut beeping = vec![false; n];

    for t in 0..horizon {
        let raw = first_wake + 1 + t;
        for (b, c) in beeping.iter_mut().zip(&configs) {
            *b = will_beep(c);
        }
        let mut row = Vec::with_capacity(n);
        let mut next = Vec::with_capacity(n);
        for v in 0..n {
            let config = configs[v];
            let input = RoundInput {
                heard_beep: topology.neighbors(v).iter().any(|&w| beeping[w]),
                adversary_wakes: schedule.wake_round(v) == Some(raw),
            };
            let (stepped, transition) = step_traced(config, input, cp);
            let beep_class = if beeping[v] {
                let fresh = activation_round[v] == Some(t);
                Some(classify_beep(&config, cp, fresh)?)
            } else {
                None
            };
            row.push(NodeRecord {
                config,
                beeped: beeping[v],
                beep_class,
                induce_event: transition == FastTransition::Induced,
                virtual_counter: counters[v],
            });
            match transition {
                FastTransition::Activated => {
                    counters[v] = Some(0);
                    activation_round[v] = Some(t + 1);
                }
                other => {
                    if let (Some(c), Some(adv)) = (counters[v].as_mut(), other.clock_advance()) {
                        *c += adv;
                    }
                }
            }
            next.push(stepped);
        }
        rounds.push(row);
        configs = next;
    }

    let trace = RoundTrace {
        topology: topology.clone(),
        period: cp.period(),
        round_offset: first_wake + 1,
        rounds,
        activation_round: activation_round
            .into_iter()
            .map(|a| a.filter(|&r| r < horizon))
            .collect(),
        first_woken: schedule.first_woken(),
    };

    let sync_round = stable_sync_round(&trace);
    let closure_verified = match sync_round {
        Some(s) => check_closure(&trace, s, 4 * u64::from(cp.period()))?,
        None => false,
    };
    let result = SimResult {
        sync_round,
        legitimate_round: None,
        closure_verified,
        invariant_violations: check_invariants(&trace, cp),
    };
    Ok((result, trace))
}

fn all_synced(row: &[NodeRecord<FastNodeConfig>]) -> bool {
    let clock = row[0].config.clock;
    row.iter()
        .all(|r| r.config.is_active() && r.config.clock == clock)
}

/// First round from which every remaining row is synchronized.
fn stable_sync_round(trace: &RoundTrace<FastNodeConfig>) -> Option<u64> {
    let mut start = None;
    for (t, row) in trace.rounds.iter().enumerate().rev() {
        if all_synced(row) {
            start = Some(t as u64);
        } else {
            break;
        }
    }
    start
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checkpoints::compute_checkpoints;

    #[test]
    fn tight_line_example() {
        let topo = Topology::line(4).unwrap();
        let cp = compute_checkpoints(7, 4).unwrap();
        let schedule = ActivationSchedule::single(4, 0, 0).unwrap();
        let (res, trace) = run_fast(&topo, &schedule, &cp, Some(60)).unwrap();
        assert_eq!(res.sync_round, Some(21));
        assert!(
            res.invariant_violations.is_empty(),
            "{:?}",
            res.invariant_violations
        );
        assert!(res.closure_verified);
        assert_eq!(
            trace.activation_round,
            vec![Some(0), Some(1), Some(2), Some(3)]
        );
    }

    #[test]
    fn single_node_is_synchronized_immediately() {
        let topo = Topology::line(1).unwrap();
        let cp = compute_checkpoints(5, 4).unwrap();
        let schedule = ActivationSchedule::single(1, 0, 0).unwrap();
        let (res, _) = run_fast(&topo, &schedule, &cp, None).unwrap();
        assert_eq!(res.sync_round, Some(0));
        assert!(res.closure_verified);
    }

    #[test]
    fn line_of_five_multiple_of_four() {
        let topo = Topology::line(5).unwrap();
        let cp = compute_checkpoints(8, 4).unwrap();
        let schedule = ActivationSchedule::single(5, 0, 0).unwrap();
        let (res, _) = run_fast(&topo, &schedule, &cp, None).unwrap();
        assert_eq!(res.sync_round, Some(16));
        assert!(res.invariant_violations.is_empty());
    }

    #[test]
    fn rejects_empty_schedule() {
        assert!(ActivationSchedule::new(vec![None, None]).is_err());
        let topo = Topology::line(3).unwrap();
        let cp = compute_checkpoints(8, 4).unwrap();
        let schedule = ActivationSchedule::single(2, 0, 0).unwrap();
        assert!(run_fast(&topo, &schedule, &cp, None).is_err());
    }

    #[test]
    fn late_first_wake_is_normalized() {
        let topo = Topology::line(4).unwrap();
        let cp = compute_checkpoints(7, 4).unwrap();
        let schedule = ActivationSchedule::single(4, 0, 13).unwrap();
        let (res, trace) = run_fast(&topo, &schedule, &cp, Some(60)).unwrap();
        assert_eq!(res.sync_round, Some(21));
        assert_eq!(trace.round_offset, 14);
    }
}
