use crate::error::{Error, Result};
use crate::fast::{BeepClass, RoundInput};
use crate::selfstab::{
    consistency_check, stab_step, super_state, will_beep_stab, StabNodeConfig, StabParams,
    StabState, SuperState,
};
use crate::topology::Topology;

use super::{NodeRecord, RoundTrace, SimResult};

/// `50 * max{T, sf, 4N}`.
pub fn default_stab_horizon(params: &StabParams) -> u64 {
    50 * u64::from(params.period())
        .max(params.sf())
        .max(params.lock_rounds())
}

/// All clocks equal, every node in FAST, no induced flag set.
pub fn is_legitimate(row: &[NodeRecord<StabNodeConfig>]) -> bool {
    let clock = row[0].config.clock;
    row.iter().all(|r| {
        r.config.clock == clock && super_state(&r.config) == SuperState::Fast && !r.config.induced
    })
}

/// Runs the self-stabilizing protocol for `horizon` rounds from the given
/// initial configurations.
///
/// Each round: every node runs the consistency check, the beep set is taken
/// from the checked configurations, then every node steps. Trace rows hold
/// the checked configurations. `legitimate_round` is the first round from
/// which every remaining row is legitimate; `closure_verified` additionally
/// requires at least `4T` legitimate rows.
pub fn run_selfstab(
    topology: &Topology,
    initial: &[StabNodeConfig],
    params: &StabParams,
    horizon: u64,
) -> Result<(SimResult, RoundTrace<StabNodeConfig>)> {
    let n = topology.node_count();
    if initial.len() != n {
        return Err(Error::Config(format!(
            "{} initial configurations for {n} nodes",
            initial.len()
        )));
    }
    if horizon == 0 {
        return Err(Error::Argument("horizon must be at least 1".into()));
    }
    for c in initial {
        params.validate(c)?;
    }
    let cp = params.checkpoints();

    let mut configs = initial.to_vec();
    let mut prev_inactive: Vec<bool> = vec![false; n];
    let mut rounds = Vec::with_capacity(horizon as usize);
    let mut beeping = vec![false; n];
    let mut legit_since: Option<u64> = None;

    for t in 0..horizon {
        for c in configs.iter_mut() {
            *c = consistency_check(*c, cp);
        }
        for (b, c) in beeping.iter_mut().zip(&configs) {
            *b = will_beep_stab(c);
        }
        let mut row = Vec::with_capacity(n);
        let mut next = Vec::with_capacity(n);
        for v in 0..n {
            let config = configs[v];
            let heard = topology.neighbors(v).iter().any(|&w| beeping[w]);
            let stepped = stab_step(config, RoundInput::heard(heard), params);
            let beep_class = beeping[v].then(|| match config.state {
                StabState::Pulse => BeepClass::Pulse,
                _ if prev_inactive[v] => BeepClass::Activation,
                _ if cp.contains(config.clock) => BeepClass::Mature,
                _ => BeepClass::Induced,
            });
            let induce_event = config.state == StabState::Listen
                && stepped.state == StabState::Beep
                && stepped.clock == (config.clock + 2) % cp.period();
            row.push(NodeRecord {
                config,
                beeped: beeping[v],
                beep_class,
                induce_event,
                virtual_counter: None,
            });
            prev_inactive[v] = config.state == StabState::Inactive;
            next.push(stepped);
        }
        if is_legitimate(&row) {
            legit_since.get_or_insert(t);
        } else {
            legit_since = None;
        }
        rounds.push(row);
        configs = next;
    }

    let closure_verified = legit_since
        .map(|l| horizon - l >= 4 * u64::from(params.period()))
        .unwrap_or(false);
    let trace = RoundTrace {
        topology: topology.clone(),
        period: params.period(),
        round_offset: 0,
        rounds,
        activation_round: vec![None; n],
        first_woken: Vec::new(),
    };
    let result = SimResult {
        sync_round: None,
        legitimate_round: legit_since,
        closure_verified,
        invariant_violations: super::check_stab_invariants(&trace, params),
    };
    Ok((result, trace))
}

/// First round in which every node is in super-state LOCK.
pub fn first_all_lock_round(trace: &RoundTrace<StabNodeConfig>) -> Option<u64> {
    trace
        .rounds
        .iter()
        .position(|row| row.iter().all(|r| r.config.state == StabState::Lock))
        .map(|t| t as u64)
}

/// Whether any node is ever in the Pulse state.
pub fn has_pulse_episode(trace: &RoundTrace<StabNodeConfig>) -> bool {
    trace
        .rounds
        .iter()
        .any(|row| row.iter().any(|r| r.config.state == StabState::Pulse))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn legit(clock: u32) -> StabNodeConfig {
        StabNodeConfig {
            clock,
            state: if clock == 0 {
                StabState::Beep
            } else {
                StabState::Listen
            },
            induced: false,
            rounds: 0,
            beeps: 0,
        }
    }

    #[test]
    fn legitimate_start_stays_legitimate() {
        let topo = Topology::ring(5).unwrap();
        let params = StabParams::new(10, 5, 5).unwrap();
        for clock in 0..10 {
            let init = vec![legit(clock); 5];
            let (res, trace) = run_selfstab(&topo, &init, &params, 200).unwrap();
            assert_eq!(res.legitimate_round, Some(0));
            assert!(res.closure_verified);
            assert!(res.invariant_violations.is_empty());
            assert!(trace.rounds.iter().all(|row| is_legitimate(row)));
        }
    }

    #[test]
    fn pulsing_clique_locks_then_deactivates() {
        let topo = Topology::clique(3).unwrap();
        let params = StabParams::new(10, 5, 3).unwrap();
        let init = vec![
            StabNodeConfig {
                clock: 0,
                state: StabState::Pulse,
                induced: false,
                rounds: 0,
                beeps: 0
            };
            3
        ];
        let (res, trace) = run_selfstab(&topo, &init, &params, 400).unwrap();
        assert!(trace.rounds[..4].iter().all(|row| row
            .iter()
            .all(|r| r.beeped && r.config.state == StabState::Pulse)));
        assert!(trace.rounds[4]
            .iter()
            .all(|r| r.config.state == StabState::Lock));
        assert!(trace.rounds[4 + 12]
            .iter()
            .all(|r| r.config.state == StabState::Inactive));
        assert_eq!(first_all_lock_round(&trace), Some(4));
        assert!(res.legitimate_round.is_some());
        assert!(res.closure_verified);
        assert!(
            res.invariant_violations.is_empty(),
            "{:?}",
            res.invariant_violations
        );
    }

    #[test]
    fn rejects_out_of_domain_configs() {
        let topo = Topology::line(2).unwrap();
        let params = StabParams::new(10, 5, 2).unwrap();
        let bad = StabNodeConfig {
            clock: 10,
            ..legit(1)
        };
        assert!(run_selfstab(&topo, &[legit(1), bad], &params, 10).is_err());
        let bad = StabNodeConfig {
            beeps: 5,
            ..legit(1)
        };
        assert!(run_selfstab(&topo, &[legit(1), bad], &params, 10).is_err());
        assert!(run_selfstab(&topo, &[legit(1)], &params, 10).is_err());
    }
}
