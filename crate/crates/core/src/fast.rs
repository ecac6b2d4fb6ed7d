//! Single-node transition function of the fast synchronization protocol.
//!
//! The function is pure: the engine decides whether any neighbor beeped and
//! whether the adversary wakes the node, and hands both in as a
//! [`RoundInput`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::checkpoints::CheckpointSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FastState {
    Inactive,
    Beep,
    Listen,
}

impl FastState {
    pub const ALL: [FastState; 3] = [FastState::Inactive, FastState::Beep, FastState::Listen];

    pub fn name(self) -> &'static str {
        match self {
            FastState::Inactive => "inactive",
            FastState::Beep => "beep",
            FastState::Listen => "listen",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FastNodeConfig {
    pub clock: u32,
    pub state: FastState,
    pub induced: bool,
}

impl FastNodeConfig {
    pub const INACTIVE: FastNodeConfig = FastNodeConfig {
        clock: 0,
        state: FastState::Inactive,
        induced: false,
    };

    pub fn new(clock: u32, state: FastState, induced: bool) -> Self {
        Self {
            clock,
            state,
            induced,
        }
    }

    pub fn is_active(&self) -> bool {
        self.state != FastState::Inactive
    }

    pub fn validate(&self, period: u32) -> Result<()> {
        if self.clock >= period {
            return Err(Error::Config(format!(
                "clock {} outside [0, {period})",
                self.clock
            )));
        }
        Ok(())
    }
}

impl fmt::Display for FastNodeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {})",
            self.clock,
            self.state.name(),
            self.induced
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RoundInput {
    pub heard_beep: bool,
    pub adversary_wakes: bool,
}

impl RoundInput {
    pub fn heard(heard_beep: bool) -> Self {
        Self {
            heard_beep,
            adversary_wakes: false,
        }
    }
}

/// Which branch of the transition function fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastTransition {
    /// Inactive and not woken.
    Idle,
    /// Woken by a beep or the adversary; clock set to 1.
    Activated,
    /// Beeped and moved to Listen.
    Beeped,
    /// Heard a beep one round before a checkpoint; clock advanced by 2.
    Induced,
    /// Heard a beep off-checkpoint; clock advanced by 1.
    Advanced,
    /// Silent round; `matured` is true when the node scheduled a mature beep.
    Silent { matured: bool },
}

impl FastTransition {
    /// How far the clock moved, or `None` for Idle/Activated (no counter yet).
    pub fn clock_advance(self) -> Option<u64> {
        match self {
            FastTransition::Idle | FastTransition::Activated => None,
            FastTransition::Induced => Some(2),
            FastTransition::Beeped | FastTransition::Advanced | FastTransition::Silent { .. } => {
                Some(1)
            }
        }
    }
}

pub fn will_beep(config: &FastNodeConfig) -> bool {
    config.state == FastState::Beep
}

pub fn step(config: FastNodeConfig, input: RoundInput, cp: &CheckpointSet) -> FastNodeConfig {
    step_traced(config, input, cp).0
}

pub fn step_traced(
    config: FastNodeConfig,
    input: RoundInput,
    cp: &CheckpointSet,
) -> (FastNodeConfig, FastTransition) {
    let t = cp.period();
    let next = |clock: u32, by: u32| (clock + by) % t;
    match config.state {
        FastState::Inactive if input.heard_beep || input.adversary_wakes => (
            FastNodeConfig::new(1 % t, FastState::Beep, true),
            FastTransition::Activated,
        ),
        FastState::Inactive => (config, FastTransition::Idle),
        FastState::Beep => (
            FastNodeConfig {
                clock: next(config.clock, 1),
                state: FastState::Listen,
                ..config
            },
            FastTransition::Beeped,
        ),
        FastState::Listen if input.heard_beep => {
            if cp.precedes_checkpoint(config.clock) {
                (
                    FastNodeConfig::new(next(config.clock, 2), FastState::Beep, true),
                    FastTransition::Induced,
                )
            } else {
                (
                    FastNodeConfig {
                        clock: next(config.clock, 1),
                        ..config
                    },
                    FastTransition::Advanced,
                )
            }
        }
        FastState::Listen => {
            let clock = next(config.clock, 1);
            if (config.induced && cp.contains(clock)) || clock == 0 {
                (
                    FastNodeConfig::new(clock, FastState::Beep, false),
                    FastTransition::Silent { matured: true },
                )
            } else {
                (
                    FastNodeConfig { clock, ..config },
                    FastTransition::Silent { matured: false },
                )
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeepClass {
    Mature,
    Induced,
    Activation,
    /// Reset-burst beep of the self-stabilizing protocol.
    Pulse,
}

impl BeepClass {
    pub fn name(self) -> &'static str {
        match self {
            BeepClass::Mature => "mature",
            BeepClass::Induced => "induced",
            BeepClass::Activation => "activation",
            BeepClass::Pulse => "pulse",
        }
    }
}

/// Classifies the beep a node emits this round. `just_activated` is set by
/// the engine for the first beep after activation.
///
/// Returns an error for a config that does not beep, or whose clock is
/// neither on nor one past a checkpoint.
pub fn classify_beep(
    config: &FastNodeConfig,
    cp: &CheckpointSet,
    just_activated: bool,
) -> Result<BeepClass> {
    if !will_beep(config) {
        return Err(Error::Config(format!("{config} does not beep")));
    }
    if just_activated {
        Ok(BeepClass::Activation)
    } else if cp.contains(config.clock) {
        Ok(BeepClass::Mature)
    } else if cp.follows_checkpoint(config.clock) {
        Ok(BeepClass::Induced)
    } else {
        Err(Error::Config(format!(
            "{config} beeps at an illegal clock value"
        )))
    }
}

/// Bits needed to store a clock in `[0, T)`.
pub fn clock_bits(period: u32) -> u32 {
    if period <= 1 {
        0
    } else {
        32 - (period - 1).leading_zeros()
    }
}

/// Fixed-width bit encoding of a node configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PackedConfig {
    pub bits: u64,
    pub width: u32,
}

/// Layout, least significant first: clock, two state bits, one induced bit.
pub fn encode(config: &FastNodeConfig, period: u32) -> Result<PackedConfig> {
    config.validate(period)?;
    let cb = clock_bits(period);
    let state = match config.state {
        FastState::Inactive => 0u64,
        FastState::Beep => 1,
        FastState::Listen => 2,
    };
    Ok(PackedConfig {
        bits: u64::from(config.clock) | state << cb | u64::from(config.induced) << (cb + 2),
        width: cb + 3,
    })
}

pub fn decode(packed: PackedConfig, period: u32) -> Result<FastNodeConfig> {
    let cb = clock_bits(period);
    if packed.width != cb + 3 || packed.bits >> packed.width != 0 {
        return Err(Error::Config(format!(
            "packed width {} does not match T={period}",
            packed.width
        )));
    }
    let clock = (packed.bits & ((1u64 << cb) - 1)) as u32;
    let state = match (packed.bits >> cb) & 0b11 {
        0 => FastState::Inactive,
        1 => FastState::Beep,
        2 => FastState::Listen,
        other => return Err(Error::Config(format!("state code {other}"))),
    };
    let config = FastNodeConfig::new(clock, state, (packed.bits >> (cb + 2)) & 1 == 1);
    config.validate(period)?;
    Ok(config)
}

/// Every configuration in the domain for period `T`.
pub fn all_configs(period: u32) -> impl Iterator<Item = FastNodeConfig> {
    (0..period).flat_map(|clock| {
        FastState::ALL.into_iter().flat_map(move |state| {
            [false, true]
                .into_iter()
                .map(move |induced| FastNodeConfig::new(clock, state, induced))
        })
    })
}
