use beepsync::checkpoints::compute_checkpoints;
use beepsync::fsm::{
    certify_no_sync, classify, find_beep_cycle, runtime_lower_bound_demo, Case, Counterexample,
    ProtocolAutomaton, DEFAULT_NODE_BUDGET,
};
use beepsync::selfstab::StabParams;
use beepsync::topology::Topology;
use beepsync::Error;

/// A clock that ignores beeps: `T` states, state 0 beeps, both inputs
/// advance the clock.
fn free_running_clock(t: usize) -> ProtocolAutomaton {
    let next: Vec<usize> = (0..t).map(|s| (s + 1) % t).collect();
    let beeps = (0..t).map(|s| s == 0).collect();
    let clock = (0..t as u32).collect();
    ProtocolAutomaton::new(next.clone(), next, beeps, Some(clock)).unwrap()
}

#[test]
fn five_state_beep_cycle_gives_a_k5() {
    // Beep input walks 0 -> 1 -> 2 -> 3 -> 4 -> 0; only state 2 beeps.
    let beep_next = vec![1, 2, 3, 4, 0];
    let silence_next = vec![0, 0, 0, 0, 0];
    let beeps = vec![false, false, true, false, false];
    let a = ProtocolAutomaton::new(beep_next, silence_next, beeps, None).unwrap();
    let report = classify(&a, 3, DEFAULT_NODE_BUDGET).unwrap();
    assert_eq!(report.case, Case::B);
    assert_eq!(report.beep_cycle, vec![0, 1, 2, 3, 4, 0]);
    let ce = &report.counterexample;
    assert_eq!(ce.topology.node_count(), 5);
    assert_eq!(ce.topology.edges().len(), 10);
    let mut states = ce.initial.clone();
    states.sort();
    assert_eq!(states, vec![0, 1, 2, 3, 4]);
    assert!(certify_no_sync(&a, ce, 3).unwrap());
}

#[test]
fn quiet_beep_cycle_with_period_six_gives_a_star() {
    // States 0..6 form a lone-node clock with a beep at clock 0; hearing a
    // beep sends any node to the silent sink 6.
    let t = 6;
    let mut silence_next: Vec<usize> = (0..t).map(|s| (s + 1) % t).collect();
    silence_next.push(0);
    let beep_next = vec![t; t + 1];
    let beeps = (0..=t).map(|s| s == 0).collect();
    let clock = (0..=t as u32).map(|c| c % t as u32).collect();
    let a = ProtocolAutomaton::new(beep_next, silence_next, beeps, Some(clock)).unwrap();
    let report = classify(&a, t as u32, DEFAULT_NODE_BUDGET).unwrap();
    assert_eq!(report.case, Case::A2);
    let ce = &report.counterexample;
    assert_eq!(ce.topology.node_count(), t + 1);
    assert_eq!(ce.topology.neighbors(0).len(), t);
    assert_eq!(ce.initial[0], t);
    let mut leaves = ce.initial[1..].to_vec();
    leaves.sort();
    assert_eq!(leaves, (0..t).collect::<Vec<_>>());
    assert!(certify_no_sync(&a, ce, t as u32).unwrap());
}

#[test]
fn never_beeping_automaton_is_case_a1() {
    let a = ProtocolAutomaton::new(vec![1, 0], vec![1, 0], vec![false, false], None).unwrap();
    let report = classify(&a, 4, DEFAULT_NODE_BUDGET).unwrap();
    assert_eq!(report.case, Case::A1);
    assert_eq!(report.counterexample.topology.node_count(), 1);
    assert!(certify_no_sync(&a, &report.counterexample, 4).unwrap());
}

#[test]
fn identical_clocks_are_recognized_as_synchronized() {
    let a = free_running_clock(4);
    let ce = Counterexample {
        topology: Topology::clique(3).unwrap(),
        initial: vec![2, 2, 2],
    };
    assert!(!certify_no_sync(&a, &ce, 4).unwrap());
    let ce = Counterexample {
        topology: Topology::clique(3).unwrap(),
        initial: vec![0, 1, 2],
    };
    assert!(certify_no_sync(&a, &ce, 4).unwrap());
}

#[test]
fn budget_limits_construction() {
    // Case B with |L| = 8.
    let a = free_running_clock(8);
    match classify(&a, 8, 4) {
        Err(Error::NotConstructible(_)) => {}
        other => panic!("expected budget error, got {other:?}"),
    }
}

#[test]
fn fast_protocol_t4_witness() {
    let cp = compute_checkpoints(4, 4).unwrap();
    let a = ProtocolAutomaton::from_fast(&cp);
    let cycle = find_beep_cycle(&a, 0);
    let labels: Vec<&str> = cycle.iter().map(|&s| a.label(s)).collect();
    assert_eq!(
        labels,
        vec![
            "(1, beep, true)",
            "(2, listen, true)",
            "(3, listen, true)",
            "(1, beep, true)"
        ]
    );
    let report = classify(&a, 4, DEFAULT_NODE_BUDGET).unwrap();
    assert_eq!(report.case, Case::B);
    assert_eq!(report.counterexample.topology.node_count(), 3);
    assert!(report.counterexample.topology.node_count() <= a.state_count() + 1);
    assert!(certify_no_sync(&a, &report.counterexample, 4).unwrap());
}

#[test]
fn demo_on_degenerate_and_selfstab_automata() {
    let always = ProtocolAutomaton::new(vec![0], vec![0], vec![true], Some(vec![0])).unwrap();
    assert!(
        runtime_lower_bound_demo(&always, 1)
            .unwrap()
            .first_sync_round
            >= 1
    );

    let params = StabParams::new(6, 5, 2).unwrap();
    let a = ProtocolAutomaton::from_selfstab(&params);
    let demo = runtime_lower_bound_demo(&a, 6).unwrap();
    assert!(demo.first_sync_round >= 6);
    assert_eq!(a.clock_of(demo.m0), Some(0));
    assert_eq!(a.clock_of(demo.m1), Some(1));

    let cp = compute_checkpoints(4, 4).unwrap();
    let fast = ProtocolAutomaton::from_fast(&cp);
    assert!(matches!(
        runtime_lower_bound_demo(&fast, 4),
        Err(Error::Inapplicable(_))
    ));
}
