//! Trace export as CSV or JSON lines, one record per (round, node).

use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::engine::RoundTrace;
use crate::error::{Error, Result};
use crate::fast::FastNodeConfig;
use crate::selfstab::StabNodeConfig;
use crate::slots::SlotRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceFormat {
    #[default]
    Csv,
    /// One JSON object per line.
    Jsonl,
}

impl FromStr for TraceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TraceFormat::Csv),
            "jsonl" | "json" | "records" => Ok(TraceFormat::Jsonl),
            other => Err(Error::Argument(format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub round: u64,
    pub node: usize,
    pub clock: u32,
    pub state: &'static str,
    pub induced: bool,
    pub r: Option<u64>,
    pub b: Option<u8>,
    pub beeped: bool,
    pub beep_class: Option<&'static str>,
    pub virtual_counter: Option<u64>,
}

/// Node configurations that can be flattened into a [`TraceRecord`].
pub trait ExportConfig {
    /// `(clock, state, induced, r, b)`.
    fn export_fields(&self) -> (u32, &'static str, bool, Option<u64>, Option<u8>);
}

impl ExportConfig for FastNodeConfig {
    fn export_fields(&self) -> (u32, &'static str, bool, Option<u64>, Option<u8>) {
        (self.clock, self.state.name(), self.induced, None, None)
    }
}

impl ExportConfig for StabNodeConfig {
    fn export_fields(&self) -> (u32, &'static str, bool, Option<u64>, Option<u8>) {
        (
            self.clock,
            self.state.name(),
            self.induced,
            Some(self.rounds),
            Some(self.beeps),
        )
    }
}

pub fn trace_records<C: ExportConfig>(trace: &RoundTrace<C>) -> Vec<TraceRecord> {
    let mut out = Vec::with_capacity(trace.len() * trace.topology.node_count());
    for (t, row) in trace.rounds.iter().enumerate() {
        for (node, rec) in row.iter().enumerate() {
            let (clock, state, induced, r, b) = rec.config.export_fields();
            out.push(TraceRecord {
                round: t as u64,
                node,
                clock,
                state,
                induced,
                r,
                b,
                beeped: rec.beeped,
                beep_class: rec.beep_class.map(|c| c.name()),
                virtual_counter: rec.virtual_counter,
            });
        }
    }
    out
}

/// Writes any serializable records in the chosen format.
pub fn write_records<T: Serialize, W: Write>(
    records: &[T],
    format: TraceFormat,
    out: W,
) -> Result<()> {
    match format {
        TraceFormat::Csv => {
            let mut writer = csv::Writer::from_writer(out);
            for r in records {
                writer.serialize(r)?;
            }
            writer.flush()?;
        }
        TraceFormat::Jsonl => {
            let mut out = std::io::BufWriter::new(out);
            for r in records {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

pub fn write_trace<C: ExportConfig, W: Write>(
    trace: &RoundTrace<C>,
    format: TraceFormat,
    out: W,
) -> Result<()> {
    write_records(&trace_records(trace), format, out)
}

pub fn write_slots<W: Write>(records: &[SlotRecord], format: TraceFormat, out: W) -> Result<()> {
    write_records(records, format, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checkpoints::compute_checkpoints;
    use crate::engine::{run_fast, ActivationSchedule};
    use crate::topology::Topology;

    #[test]
    fn csv_has_one_row_per_round_and_node() {
        let topo = Topology::line(3).unwrap();
        let cp = compute_checkpoints(8, 4).unwrap();
        let schedule = ActivationSchedule::single(3, 0, 0).unwrap();
        let (_, trace) = run_fast(&topo, &schedule, &cp, Some(10)).unwrap();
        let mut buf = Vec::new();
        write_trace(&trace, TraceFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "round,node,clock,state,induced,r,b,beeped,beep_class,virtual_counter"
        );
        assert_eq!(lines.count(), 30);
        assert!(text.contains("0,0,1,beep,true,,,true,activation,0"));
    }

    #[test]
    fn jsonl_lines_parse() {
        let topo = Topology::line(2).unwrap();
        let cp = compute_checkpoints(8, 4).unwrap();
        let schedule = ActivationSchedule::single(2, 1, 0).unwrap();
        let (_, trace) = run_fast(&topo, &schedule, &cp, Some(5)).unwrap();
        let mut buf = Vec::new();
        write_trace(&trace, TraceFormat::Jsonl, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 10);
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(v.get("virtual_counter").is_some());
        }
        assert!("xml".parse::<TraceFormat>().is_err());
    }
}
