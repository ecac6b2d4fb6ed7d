use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use beepsync::checkpoints::{compute_checkpoints, CheckpointSet};
use beepsync::engine::{
    default_stab_horizon, first_all_lock_round, has_pulse_episode, ActivationSchedule,
};
use beepsync::export::{write_slots, write_trace, ExportConfig, TraceFormat};
use beepsync::fsm::{self, ProtocolAutomaton};
use beepsync::selfstab::{StabNodeConfig, StabParams};
use beepsync::slots::random_offsets;
use beepsync::topology::{generate, Topology, TopologyKind};
use beepsync::Error;
use serde_json::{json, Value};

use crate::args::{FastArgs, FsmArgs, GraphArgs, OutputArgs, Protocol, SlotArgs, StabArgs};
use crate::{EXIT_BOUND, EXIT_INVARIANT};

fn require_seed(seed: Option<u64>, what: &str) -> Result<u64, Error> {
    seed.ok_or_else(|| Error::Argument(format!("{what} needs --seed")))
}

/// Builds the topology named by `kind`; `file:PATH` reads an edge list.
pub fn build_topology(
    kind: &str,
    n: Option<usize>,
    edge_prob: f64,
    seed: Option<u64>,
) -> Result<Topology> {
    if let Some(path) = kind.strip_prefix("file:") {
        let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
        return Ok(Topology::parse_edge_list(&text)?);
    }
    let mut kind: TopologyKind = kind.parse()?;
    let n = n.ok_or_else(|| Error::Argument("--n is required".into()))?;
    let mut graph_seed = 0;
    if let TopologyKind::RandomConnected { extra_edge_prob } = &mut kind {
        *extra_edge_prob = edge_prob;
        graph_seed = require_seed(seed, "a random topology")?;
    }
    Ok(generate(kind, n, graph_seed)?)
}

fn topology(g: &GraphArgs) -> Result<Topology> {
    build_topology(&g.topology, g.n, g.edge_prob, g.seed)
}

/// Explicit `NODE=ROUND` pairs, or a seeded random schedule.
fn schedule(
    n: usize,
    wake: &[(usize, u64)],
    multi: bool,
    spread: u64,
    seed: Option<u64>,
) -> Result<ActivationSchedule> {
    if wake.is_empty() {
        let seed = require_seed(seed, "a random wake-up schedule")?;
        return Ok(ActivationSchedule::random(n, multi, spread, seed)?);
    }
    let mut rounds = vec![None; n];
    for &(v, r) in wake {
        let slot = rounds
            .get_mut(v)
            .ok_or_else(|| Error::Schedule(format!("node {v} out of range for n={n}")))?;
        if slot.is_some() {
            return Err(Error::Schedule(format!("node {v} woken twice")).into());
        }
        *slot = Some(r);
    }
    Ok(ActivationSchedule::new(rounds)?)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Prints to stdout; a closed pipe is not an error.
pub fn print_stdout(text: &str) -> Result<()> {
    match writeln!(io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn emit_summary(summary: &Value, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(summary)?;
    print_stdout(&text)?;
    if let Some(path) = path {
        fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn write_trace_out<C: ExportConfig>(
    out: &OutputArgs,
    trace: &beepsync::engine::RoundTrace<C>,
) -> Result<()> {
    if let Some(path) = &out.out {
        write_trace(trace, TraceFormat::from(out.format), create(path)?)?;
    }
    Ok(())
}

fn graph_json(topo: &Topology) -> Value {
    json!({ "nodes": topo.node_count(), "diameter": topo.diameter(), "edges": topo.edges() })
}

pub fn run_fast(a: FastArgs) -> Result<u8> {
    let topo = topology(&a.graph)?;
    let cp = compute_checkpoints(a.period, a.q)?;
    let n = topo.node_count();
    let sched = schedule(n, &a.wake, a.multi, 2 * u64::from(a.period), a.graph.seed)?;
    let (res, trace) = beepsync::engine::run_fast(&topo, &sched, &cp, a.horizon)?;
    write_trace_out(&a.output, &trace)?;

    let bound = cp.fast_runtime_bound(topo.diameter() as u64);
    let satisfied = res.sync_round.is_some_and(|s| s <= bound);
    let summary = json!({
        "mode": "fast",
        "topology": graph_json(&topo),
        "T": a.period,
        "q": a.q,
        "checkpoints": cp.members(),
        "rounds": trace.len(),
        "sync_round": res.sync_round,
        "bound": bound,
        "bound_satisfied": satisfied,
        "closure_verified": res.closure_verified,
        "invariant_violations": res.invariant_violations,
    });
    emit_summary(&summary, a.output.summary.as_deref())?;
    Ok(
        if !res.invariant_violations.is_empty() || !res.closure_verified {
            EXIT_INVARIANT
        } else if !satisfied {
            EXIT_BOUND
        } else {
            0
        },
    )
}

fn read_init(path: &Path) -> Result<Vec<StabNodeConfig>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())).into())
}

pub fn run_selfstab(a: StabArgs) -> Result<u8> {
    let topo = topology(&a.graph)?;
    let n = topo.node_count();
    let params = StabParams::new(a.period, a.q, a.size_bound.unwrap_or(n as u64))?;
    let initial = match &a.init_file {
        Some(path) => read_init(path)?,
        None => params.random_configs(
            n,
            require_seed(a.graph.seed, "random initial configurations")?,
        ),
    };
    let horizon = a.horizon.unwrap_or_else(|| default_stab_horizon(&params));
    let (res, trace) = beepsync::engine::run_selfstab(&topo, &initial, &params, horizon)?;
    write_trace_out(&a.output, &trace)?;

    let summary = json!({
        "mode": "selfstab",
        "topology": graph_json(&topo),
        "T": a.period,
        "q": a.q,
        "N": params.size_bound(),
        "rounds": trace.len(),
        "legitimate_round": res.legitimate_round,
        "closure_verified": res.closure_verified,
        "pulse_episode": has_pulse_episode(&trace),
        "first_all_lock_round": first_all_lock_round(&trace),
        "invariant_violations": res.invariant_violations,
    });
    emit_summary(&summary, a.output.summary.as_deref())?;
    Ok(if !res.invariant_violations.is_empty() {
        EXIT_INVARIANT
    } else if res.legitimate_round.is_none() {
        EXIT_BOUND
    } else if !res.closure_verified {
        EXIT_INVARIANT
    } else {
        0
    })
}

pub fn run_slots(a: SlotArgs) -> Result<u8> {
    let topo = topology(&a.graph)?;
    let cp = compute_checkpoints(a.period, a.q)?;
    let n = topo.node_count();
    let sched = schedule(n, &a.wake, false, 2 * u64::from(a.period), a.graph.seed)?;
    let offsets = if a.offsets.is_empty() {
        random_offsets(n, a.mu, require_seed(a.graph.seed, "random slot offsets")?)
    } else {
        a.offsets.clone()
    };
    let bound = cp.fast_runtime_bound(topo.diameter() as u64);
    let horizon = a.horizon.unwrap_or_else(|| {
        let last_wake = (0..n)
            .filter_map(|v| sched.wake_round(v))
            .max()
            .unwrap_or(0);
        (last_wake + 3 * bound + 12 * u64::from(a.period)) as f64 * a.mu
    });
    let (summary, history) =
        beepsync::slots::run_slots(&topo, &offsets, a.mu, &sched, &cp, horizon)?;
    if let Some(path) = &a.output.out {
        write_slots(&history, TraceFormat::from(a.output.format), create(path)?)?;
    }
    let report = json!({
        "mode": "slots",
        "topology": graph_json(&topo),
        "T": a.period,
        "q": a.q,
        "offsets": offsets,
        "horizon": horizon,
        "slots": history.len(),
        "round_bound": bound,
        "summary": summary,
    });
    emit_summary(&report, a.output.summary.as_deref())?;
    Ok(if summary.alignment_time.is_none() {
        EXIT_BOUND
    } else if !summary.closure_verified {
        EXIT_INVARIANT
    } else {
        0
    })
}

fn automaton(a: &FsmArgs) -> Result<(ProtocolAutomaton, String)> {
    if let Some(path) = &a.automaton {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return Ok((ProtocolAutomaton::parse(&text)?, path.display().to_string()));
    }
    Ok(match a.protocol {
        Protocol::Fast => {
            let cp: CheckpointSet = compute_checkpoints(a.period, a.q.unwrap_or(4))?;
            (ProtocolAutomaton::from_fast(&cp), "fast".into())
        }
        Protocol::Selfstab => {
            let params = StabParams::new(a.period, a.q.unwrap_or(5), a.size_bound)?;
            (ProtocolAutomaton::from_selfstab(&params), "selfstab".into())
        }
    })
}

pub fn analyze_fsm(a: FsmArgs) -> Result<u8> {
    let (aut, source) = automaton(&a)?;
    let labels = |states: &[usize]| -> Vec<String> {
        states.iter().map(|&s| aut.label(s).to_string()).collect()
    };
    let report = fsm::classify(&aut, a.period, a.budget)?;
    let certified = fsm::certify_no_sync(&aut, &report.counterexample, a.period)?;
    let demo = match fsm::runtime_lower_bound_demo(&aut, a.period) {
        Ok(d) => json!({
            "m0": aut.label(d.m0),
            "m1": aut.label(d.m1),
            "first_sync_round": d.first_sync_round,
        }),
        Err(Error::Inapplicable(msg)) => json!({ "inapplicable": msg }),
        Err(e) => return Err(e.into()),
    };
    let ce = &report.counterexample;
    let summary = json!({
        "automaton": source,
        "states": aut.state_count(),
        "T": a.period,
        "case": report.case,
        "beep_cycle": labels(&report.beep_cycle),
        "silence_cycle": labels(&report.silence_cycle),
        "counterexample": {
            "topology": graph_json(&ce.topology),
            "initial": labels(&ce.initial),
        },
        "certified_no_sync": certified,
        "demo": demo,
    });
    emit_summary(&summary, a.summary.as_deref())?;
    Ok(if certified { 0 } else { EXIT_BOUND })
}
