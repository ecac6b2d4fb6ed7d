//! Single-node transition functions of the self-stabilizing protocol: the
//! per-round consistency check and the main step.
//!
//! Nodes know a bound `N >= n`; every "4n" threshold of the protocol is `4N`
//! here, and the error-detection threshold `sf` is evaluated at `N`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoints::CheckpointSet;
use crate::error::{Error, Result};
use crate::fast::{clock_bits, RoundInput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabState {
    Inactive,
    Beep,
    Listen,
    Pulse,
    Lock,
}

impl StabState {
    pub const ALL: [StabState; 5] = [
        StabState::Inactive,
        StabState::Beep,
        StabState::Listen,
        StabState::Pulse,
        StabState::Lock,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StabState::Inactive => "inactive",
            StabState::Beep => "beep",
            StabState::Listen => "listen",
            StabState::Pulse => "pulse",
            StabState::Lock => "lock",
        }
    }
}

/// Coarse protocol phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SuperState {
    Pulse,
    Lock,
    Inactive,
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StabNodeConfig {
    pub clock: u32,
    pub state: StabState,
    pub induced: bool,
    /// Round counter `r`.
    pub rounds: u64,
    /// Consecutive-beep counter `b`.
    pub beeps: u8,
}

impl fmt::Display for StabNodeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, r={}, b={})",
            self.clock,
            self.state.name(),
            self.induced,
            self.rounds,
            self.beeps
        )
    }
}

/// Largest value of the consecutive-beep counter.
pub const MAX_BEEP_COUNT: u8 = 4;

/// Protocol constants shared by every node: checkpoints, the size bound `N`
/// and the derived thresholds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabParams {
    cp: CheckpointSet,
    size_bound: u64,
    sf: u64,
}

impl StabParams {
    /// Requires `5 <= q <= T` and `N >= 1`.
    pub fn new(period: u32, spacing: u32, size_bound: u64) -> Result<Self> {
        if spacing < 5 {
            return Err(Error::CheckpointParams { period, spacing });
        }
        if size_bound == 0 {
            return Err(Error::Argument("size bound N must be at least 1".into()));
        }
        let cp = CheckpointSet::new(period, spacing)?;
        let sf = cp.sf(size_bound);
        Ok(Self { cp, size_bound, sf })
    }

    pub fn checkpoints(&self) -> &CheckpointSet {
        &self.cp
    }

    pub fn period(&self) -> u32 {
        self.cp.period()
    }

    pub fn size_bound(&self) -> u64 {
        self.size_bound
    }

    pub fn sf(&self) -> u64 {
        self.sf
    }

    /// `4N`: Lock duration and Inactive timeout.
    pub fn lock_rounds(&self) -> u64 {
        4 * self.size_bound
    }

    /// Saturation value `max{4N, sf + 1}` of the round counter.
    pub fn max_round_counter(&self) -> u64 {
        self.lock_rounds().max(self.sf + 1)
    }

    pub fn validate(&self, config: &StabNodeConfig) -> Result<()> {
        if config.clock >= self.period() {
            return Err(Error::Config(format!(
                "clock {} outside [0, {})",
                config.clock,
                self.period()
            )));
        }
        if config.rounds > self.max_round_counter() {
            return Err(Error::Config(format!(
                "round counter {} exceeds {}",
                config.rounds,
                self.max_round_counter()
            )));
        }
        if config.beeps > MAX_BEEP_COUNT {
            return Err(Error::Config(format!(
                "beep counter {} exceeds {MAX_BEEP_COUNT}",
                config.beeps
            )));
        }
        Ok(())
    }

    /// A configuration with every field drawn uniformly from its domain.
    pub fn random_config<R: Rng + ?Sized>(&self, rng: &mut R) -> StabNodeConfig {
        StabNodeConfig {
            clock: rng.gen_range(0..self.period()),
            state: StabState::ALL[rng.gen_range(0..StabState::ALL.len())],
            induced: rng.gen(),
            rounds: rng.gen_range(0..=self.max_round_counter()),
            beeps: rng.gen_range(0..=MAX_BEEP_COUNT),
        }
    }

    /// `n` random configurations from a seeded generator.
    pub fn random_configs(&self, n: usize, seed: u64) -> Vec<StabNodeConfig> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.random_config(&mut rng)).collect()
    }

    /// Bits of the fixed-width encoding: clock, 3 state bits, induced, `r`, `b`.
    pub fn config_bits(&self) -> u32 {
        let r_bits = 64 - self.max_round_counter().leading_zeros();
        clock_bits(self.period()) + 3 + 1 + r_bits + 3
    }
}

pub fn super_state(config: &StabNodeConfig) -> SuperState {
    match config.state {
        StabState::Beep | StabState::Listen => SuperState::Fast,
        StabState::Pulse => SuperState::Pulse,
        StabState::Lock => SuperState::Lock,
        StabState::Inactive => SuperState::Inactive,
    }
}

pub fn will_beep_stab(config: &StabNodeConfig) -> bool {
    matches!(config.state, StabState::Beep | StabState::Pulse)
}

/// Resets a Beep/Listen node whose clock is inconsistent with its state.
/// Pulse, Lock and Inactive are never touched.
pub fn consistency_check(config: StabNodeConfig, cp: &CheckpointSet) -> StabNodeConfig {
    let consistent = match config.state {
        StabState::Beep => cp.contains(config.clock) || cp.follows_checkpoint(config.clock),
        StabState::Listen => config.clock > 0,
        StabState::Inactive | StabState::Pulse | StabState::Lock => return config,
    };
    if consistent {
        config
    } else {
        StabNodeConfig {
            rounds: 0,
            state: StabState::Pulse,
            ..config
        }
    }
}

/// Main per-round transition; `consistency_check` must already have been
/// applied this round. `input.adversary_wakes` is ignored.
pub fn stab_step(config: StabNodeConfig, input: RoundInput, params: &StabParams) -> StabNodeConfig {
    let cp = params.checkpoints();
    let t = cp.period();
    let mut c = config;
    if c.rounds < params.max_round_counter() {
        c.rounds += 1;
    }
    let to_pulse = |c: StabNodeConfig| StabNodeConfig {
        rounds: 0,
        state: StabState::Pulse,
        ..c
    };
    match c.state {
        StabState::Inactive => {
            if input.heard_beep || c.rounds >= params.lock_rounds() {
                c.rounds = 0;
                c.beeps = 1;
                c.clock = 1 % t;
                c.state = StabState::Beep;
                c.induced = true;
            }
            c
        }
        StabState::Beep => {
            c.beeps = (c.beeps + 1).min(MAX_BEEP_COUNT);
            if c.beeps >= MAX_BEEP_COUNT {
                to_pulse(c)
            } else {
                c.clock = (c.clock + 1) % t;
                c.state = StabState::Listen;
                c
            }
        }
        StabState::Listen if input.heard_beep => {
            c.beeps = (c.beeps + 1).min(MAX_BEEP_COUNT);
            if c.beeps >= MAX_BEEP_COUNT || c.rounds > params.sf() {
                to_pulse(c)
            } else if cp.precedes_checkpoint(c.clock) {
                c.clock = (c.clock + 2) % t;
                c.state = StabState::Beep;
                c.induced = true;
                c
            } else {
                c.clock = (c.clock + 1) % t;
                c
            }
        }
        StabState::Listen => {
            c.beeps = 0;
            c.clock = (c.clock + 1) % t;
            if (c.induced && cp.contains(c.clock)) || c.clock == 0 {
                c.state = StabState::Beep;
                c.induced = false;
            }
            c
        }
        StabState::Pulse => {
            if c.rounds >= 4 {
                c.rounds = 0;
                c.state = StabState::Lock;
            }
            c
        }
        StabState::Lock => {
            if c.rounds >= params.lock_rounds() {
                c.rounds = 0;
                c.state = StabState::Inactive;
            }
            c
        }
    }
}
