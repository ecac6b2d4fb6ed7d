use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "beepsync",
    version,
    about = "Clock synchronization in the beeping model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the fast protocol from an all-inactive start
    RunFast(FastArgs),
    /// Run the self-stabilizing protocol from explicit or random configurations
    RunSelfstab(StabArgs),
    /// Run the fast protocol with unaligned slot boundaries
    RunSlots(SlotArgs),
    /// Classify a protocol automaton and certify a non-synchronizing witness
    AnalyzeFsm(FsmArgs),
    /// Run many seeded simulations and aggregate the results
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
pub struct GraphArgs {
    /// line | star | clique | ring | random | file:PATH
    #[arg(long, env = "BEEPSYNC_TOPOLOGY", default_value = "line")]
    pub topology: String,

    /// Number of nodes (ignored for file topologies)
    #[arg(long, env = "BEEPSYNC_N")]
    pub n: Option<usize>,

    /// Extra edge probability for random topologies
    #[arg(long, env = "BEEPSYNC_EDGE_PROB", default_value_t = beepsync::topology::DEFAULT_EXTRA_EDGE_PROB)]
    pub edge_prob: f64,

    /// Seed for every randomized input
    #[arg(long, env = "BEEPSYNC_SEED")]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Trace output path
    #[arg(long, env = "BEEPSYNC_OUT")]
    pub out: Option<PathBuf>,

    /// Trace format
    #[arg(long, env = "BEEPSYNC_FORMAT", value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Also write the JSON summary to this path
    #[arg(long, env = "BEEPSYNC_SUMMARY")]
    pub summary: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl From<Format> for beepsync::export::TraceFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => beepsync::export::TraceFormat::Csv,
            Format::Jsonl => beepsync::export::TraceFormat::Jsonl,
        }
    }
}

#[derive(Args, Debug)]
pub struct FastArgs {
    #[command(flatten)]
    pub graph: GraphArgs,

    /// Period T
    #[arg(long = "T", env = "BEEPSYNC_T")]
    pub period: u32,

    /// Checkpoint spacing q
    #[arg(long, env = "BEEPSYNC_Q", default_value_t = 4)]
    pub q: u32,

    /// Adversary wake-up as NODE=ROUND; repeatable. Without it a random
    /// schedule is drawn from --seed.
    #[arg(long, value_parser = parse_wake)]
    pub wake: Vec<(usize, u64)>,

    /// With a random schedule, wake several nodes
    #[arg(long)]
    pub multi: bool,

    /// Rounds to simulate
    #[arg(long, env = "BEEPSYNC_HORIZON")]
    pub horizon: Option<u64>,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct StabArgs {
    #[command(flatten)]
    pub graph: GraphArgs,

    /// Period T
    #[arg(long = "T", env = "BEEPSYNC_T")]
    pub period: u32,

    /// Checkpoint spacing q (at least 5)
    #[arg(long, env = "BEEPSYNC_Q", default_value_t = 5)]
    pub q: u32,

    /// Known bound N on the network size; defaults to the node count
    #[arg(long = "N", env = "BEEPSYNC_SIZE_BOUND")]
    pub size_bound: Option<u64>,

    /// JSON array of initial node configurations. Without it the
    /// configurations are drawn from --seed.
    #[arg(long, env = "BEEPSYNC_INIT_FILE")]
    pub init_file: Option<PathBuf>,

    /// Rounds to simulate
    #[arg(long, env = "BEEPSYNC_HORIZON")]
    pub horizon: Option<u64>,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct SlotArgs {
    #[command(flatten)]
    pub graph: GraphArgs,

    /// Period T
    #[arg(long = "T", env = "BEEPSYNC_T")]
    pub period: u32,

    /// Checkpoint spacing q
    #[arg(long, env = "BEEPSYNC_Q", default_value_t = 4)]
    pub q: u32,

    /// Adversary wake-up as NODE=SLOT; repeatable
    #[arg(long, value_parser = parse_wake)]
    pub wake: Vec<(usize, u64)>,

    /// Slot length
    #[arg(long, env = "BEEPSYNC_MU", default_value_t = 1.0)]
    pub mu: f64,

    /// Comma-separated slot offsets in [0, mu). Without it offsets are
    /// drawn from --seed.
    #[arg(long, value_delimiter = ',')]
    pub offsets: Vec<f64>,

    /// Simulated time
    #[arg(long, env = "BEEPSYNC_HORIZON")]
    pub horizon: Option<f64>,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Fast,
    Selfstab,
}

#[derive(Args, Debug)]
pub struct FsmArgs {
    /// Automaton in text format; overrides --protocol
    #[arg(long, env = "BEEPSYNC_AUTOMATON")]
    pub automaton: Option<PathBuf>,

    /// Extract the automaton from one of the built-in protocols
    #[arg(long, value_enum, default_value_t = Protocol::Fast)]
    pub protocol: Protocol,

    /// Period T
    #[arg(long = "T", env = "BEEPSYNC_T")]
    pub period: u32,

    /// Checkpoint spacing q; defaults to 4 (fast) or 5 (selfstab)
    #[arg(long, env = "BEEPSYNC_Q")]
    pub q: Option<u32>,

    /// Size bound N for the self-stabilizing automaton
    #[arg(long = "N", env = "BEEPSYNC_SIZE_BOUND", default_value_t = 2)]
    pub size_bound: u64,

    /// Largest counterexample to build
    #[arg(long, default_value_t = beepsync::fsm::DEFAULT_NODE_BUDGET)]
    pub budget: usize,

    /// Also write the JSON report to this path
    #[arg(long, env = "BEEPSYNC_SUMMARY")]
    pub summary: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Fast,
    Selfstab,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Single,
    Multi,
    /// Single for even seeds, multi for odd ones
    Mixed,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value_t = Mode::Fast)]
    pub mode: Mode,

    /// Comma-separated topology kinds
    #[arg(
        long,
        env = "BEEPSYNC_TOPOLOGY",
        default_value = "line",
        value_delimiter = ','
    )]
    pub topology: Vec<String>,

    /// Node counts: A, A-B (inclusive) or A,B,C
    #[arg(long, env = "BEEPSYNC_N", value_parser = parse_range)]
    pub n: Values,

    /// Periods, same syntax as --n
    #[arg(long = "T", env = "BEEPSYNC_T", value_parser = parse_range)]
    pub period: Values,

    /// Checkpoint spacings; default 4 (fast) or 5 (selfstab)
    #[arg(long, env = "BEEPSYNC_Q", value_parser = parse_range)]
    pub q: Option<Values>,

    /// Seeds, same syntax as --n
    #[arg(long, env = "BEEPSYNC_SEEDS", value_parser = parse_range)]
    pub seeds: Values,

    /// Adversary schedule for fast sweeps
    #[arg(long, value_enum, default_value_t = ScheduleKind::Mixed)]
    pub schedule: ScheduleKind,

    /// Extra edge probability for random topologies
    #[arg(long, default_value_t = beepsync::topology::DEFAULT_EXTRA_EDGE_PROB)]
    pub edge_prob: f64,

    /// Worker threads; 0 uses all cores
    #[arg(long, env = "BEEPSYNC_JOBS", default_value_t = 0)]
    pub jobs: usize,

    /// Report output path
    #[arg(long, env = "BEEPSYNC_OUT")]
    pub out: Option<PathBuf>,
}

fn parse_wake(s: &str) -> Result<(usize, u64), String> {
    let (node, round) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NODE=ROUND, got `{s}`"))?;
    let node = node
        .trim()
        .parse()
        .map_err(|_| format!("bad node `{node}`"))?;
    let round = round
        .trim()
        .parse()
        .map_err(|_| format!("bad round `{round}`"))?;
    Ok((node, round))
}

/// A list of integers given on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Values(pub Vec<u64>);

/// `A`, `A-B` (inclusive, empty when `A > B`) or `A,B,C`.
pub fn parse_range(s: &str) -> Result<Values, String> {
    let num = |x: &str| {
        x.trim()
            .parse::<u64>()
            .map_err(|_| format!("bad number `{x}` in `{s}`"))
    };
    if let Some((a, b)) = s.split_once('-') {
        return Ok(Values((num(a)?..=num(b)?).collect()));
    }
    s.split(',').map(num).collect::<Result<_, _>>().map(Values)
}
