use std::fs;

use anyhow::{Context, Result};
use beepsync::checkpoints::{compute_checkpoints, DEFAULT_STAB_SPACING, FAST_SPACING};
use beepsync::engine::{default_stab_horizon, run_fast, run_selfstab, ActivationSchedule};
use beepsync::selfstab::StabParams;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{Mode, ScheduleKind, SweepArgs};
use crate::commands::{build_topology, print_stdout};
use crate::{EXIT_BOUND, EXIT_INVALID, EXIT_INVARIANT};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
struct Key {
    topology: String,
    n: u64,
    #[serde(rename = "T")]
    period: u64,
    q: u64,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct Row {
    #[serde(flatten)]
    key: Key,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule: Option<ScheduleKind>,
    diameter: Option<usize>,
    /// Sync round (fast) or legitimate round (selfstab).
    converged_round: Option<u64>,
    /// Runtime bound for fast runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    bound: Option<u64>,
    closure_verified: bool,
    violations: usize,
    ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct Aggregate {
    runs: usize,
    failures: usize,
    errors: usize,
    max_converged_round: Option<u64>,
    mean_converged_round: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Report {
    mode: Mode,
    aggregate: Aggregate,
    rows: Vec<Row>,
}

fn u32_of(x: u64, what: &str) -> Result<u32, beepsync::Error> {
    u32::try_from(x).map_err(|_| beepsync::Error::Argument(format!("{what}={x} too large")))
}

fn run_row(mode: Mode, schedule: ScheduleKind, edge_prob: f64, key: &Key) -> Row {
    let mut row = Row {
        key: key.clone(),
        schedule: (mode == Mode::Fast).then_some(schedule),
        diameter: None,
        converged_round: None,
        bound: None,
        closure_verified: false,
        violations: 0,
        ok: false,
        error: None,
    };
    if let Err(e) = fill_row(mode, schedule, edge_prob, &mut row) {
        row.error = Some(format!("{e:#}"));
    }
    row
}

fn fill_row(mode: Mode, schedule: ScheduleKind, edge_prob: f64, row: &mut Row) -> Result<()> {
    let key = row.key.clone();
    let n = usize::try_from(key.n)?;
    let topo = build_topology(&key.topology, Some(n), edge_prob, Some(key.seed))?;
    row.diameter = Some(topo.diameter());
    let period = u32_of(key.period, "T")?;
    let q = u32_of(key.q, "q")?;
    match mode {
        Mode::Fast => {
            let cp = compute_checkpoints(period, q)?;
            let multi = match schedule {
                ScheduleKind::Single => false,
                ScheduleKind::Multi => true,
                ScheduleKind::Mixed => key.seed % 2 == 1,
            };
            let sched = ActivationSchedule::random(
                n,
                multi,
                2 * key.period,
                key.seed.wrapping_mul(7919).wrapping_add(key.n),
            )?;
            let (res, _) = run_fast(&topo, &sched, &cp, None)?;
            let bound = cp.fast_runtime_bound(topo.diameter() as u64);
            row.bound = Some(bound);
            row.converged_round = res.sync_round;
            row.closure_verified = res.closure_verified;
            row.violations = res.invariant_violations.len();
            row.ok = row.violations == 0
                && res.closure_verified
                && res.sync_round.is_some_and(|s| s <= bound);
        }
        Mode::Selfstab => {
            let params = StabParams::new(period, q, key.n)?;
            let init = params.random_configs(n, key.seed);
            let (res, _) = run_selfstab(&topo, &init, &params, default_stab_horizon(&params))?;
            row.converged_round = res.legitimate_round;
            row.closure_verified = res.closure_verified;
            row.violations = res.invariant_violations.len();
            row.ok = row.violations == 0 && res.closure_verified;
        }
    }
    Ok(())
}

fn aggregate(rows: &[Row]) -> Aggregate {
    let rounds: Vec<u64> = rows.iter().filter_map(|r| r.converged_round).collect();
    Aggregate {
        runs: rows.len(),
        failures: rows.iter().filter(|r| r.error.is_none() && !r.ok).count(),
        errors: rows.iter().filter(|r| r.error.is_some()).count(),
        max_converged_round: rounds.iter().copied().max(),
        mean_converged_round: (!rounds.is_empty())
            .then(|| rounds.iter().sum::<u64>() as f64 / rounds.len() as f64),
    }
}

fn row_code(r: &Row) -> u8 {
    if r.error.is_some() {
        EXIT_INVALID
    } else if r.violations > 0 || (r.converged_round.is_some() && !r.closure_verified) {
        EXIT_INVARIANT
    } else if !r.ok {
        EXIT_BOUND
    } else {
        0
    }
}

pub fn run(a: SweepArgs) -> Result<u8> {
    let qs = a.q.as_ref().map(|q| q.0.clone()).unwrap_or_else(|| {
        vec![u64::from(match a.mode {
            Mode::Fast => FAST_SPACING,
            Mode::Selfstab => DEFAULT_STAB_SPACING,
        })]
    });
    let mut keys = Vec::new();
    for topology in &a.topology {
        for &n in &a.n.0 {
            for &period in &a.period.0 {
                for &q in &qs {
                    for &seed in &a.seeds.0 {
                        keys.push(Key {
                            topology: topology.clone(),
                            n,
                            period,
                            q,
                            seed,
                        });
                    }
                }
            }
        }
    }
    keys.sort();
    keys.dedup();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .context("building worker pool")?;
    let rows: Vec<Row> = pool.install(|| {
        keys.par_iter()
            .map(|k| run_row(a.mode, a.schedule, a.edge_prob, k))
            .collect()
    });
    let code = rows.iter().map(row_code).max().unwrap_or(0);
    let report = Report {
        mode: a.mode,
        aggregate: aggregate(&rows),
        rows,
    };
    let text = serde_json::to_string_pretty(&report)?;
    match &a.out {
        Some(path) => {
            fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?
        }
        None => print_stdout(&text)?,
    }
    Ok(code)
}
