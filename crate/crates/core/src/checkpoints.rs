//! Checkpoint sets, the cyclic successor function, period partitions and the
//! closed-form round bounds.
//!
//! A checkpoint is a clock value `c` with `c mod q == 0` and `T - c > q - 1`.
//! The fast protocol uses `q = 4`; the self-stabilizing protocol uses
//! `5 <= q <= T`.

use std::ops::RangeInclusive;

use crate::error::{Error, Result};

/// Spacing used by the fast protocol.
pub const FAST_SPACING: u32 = 4;
/// Default spacing for the self-stabilizing protocol.
pub const DEFAULT_STAB_SPACING: u32 = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointSet {
    period: u32,
    spacing: u32,
    members: Vec<u32>,
    is_member: Vec<bool>,
}

impl CheckpointSet {
    /// Accepts `q == 4` with `T >= 4`, or `5 <= q <= T`.
    pub fn new(period: u32, spacing: u32) -> Result<Self> {
        let valid = period >= 4 && (spacing == FAST_SPACING || (5..=period).contains(&spacing));
        if !valid {
            return Err(Error::CheckpointParams { period, spacing });
        }
        let members: Vec<u32> = (0..period)
            .filter(|&c| c % spacing == 0 && period - c > spacing - 1)
            .collect();
        let mut is_member = vec![false; period as usize];
        for &c in &members {
            is_member[c as usize] = true;
        }
        Ok(Self {
            period,
            spacing,
            members,
            is_member,
        })
    }

    pub fn period(&self) -> u32 {
        self.period
    }

    pub fn spacing(&self) -> u32 {
        self.spacing
    }

    /// Checkpoints in increasing order; always starts with 0.
    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn contains(&self, clock: u32) -> bool {
        self.is_member.get(clock as usize).copied().unwrap_or(false)
    }

    /// `clock == c - 1 mod T` for some checkpoint `c`: the only clock values
    /// at which a listening node can be induced.
    pub fn precedes_checkpoint(&self, clock: u32) -> bool {
        self.contains((clock + 1) % self.period)
    }

    /// `clock == c + 1 mod T` for some checkpoint `c`.
    pub fn follows_checkpoint(&self, clock: u32) -> bool {
        self.contains((clock + self.period - 1) % self.period)
    }

    /// Smallest checkpoint strictly larger than `clock`, or 0 if none.
    pub fn succ(&self, clock: u32) -> u32 {
        self.members
            .iter()
            .copied()
            .find(|&c| c > clock)
            .unwrap_or(0)
    }

    /// Number of rounds from checkpoint `c` to `succ(c)`, cyclically.
    /// A single-checkpoint set has one gap of length `T`.
    pub fn gap_after(&self, c: u32) -> u32 {
        let next = self.succ(c);
        (next + self.period - c - 1) % self.period + 1
    }

    /// Consecutive periods `P_1..P_count`, starting at round 1 with the gap
    /// that follows checkpoint 0.
    pub fn period_partition(&self, count: usize) -> Vec<RangeInclusive<u64>> {
        let mut periods = Vec::with_capacity(count);
        let mut start = 1u64;
        let mut checkpoint = 0u32;
        for _ in 0..count {
            let len = u64::from(self.gap_after(checkpoint));
            periods.push(start..=start + len - 1);
            start += len;
            checkpoint = self.succ(checkpoint);
        }
        periods
    }

    /// `qD + floor(D / floor(T/q)) * (T mod q)`.
    pub fn fast_runtime_bound(&self, diameter: u64) -> u64 {
        let t = u64::from(self.period);
        let q = u64::from(self.spacing);
        q * diameter + diameter / (t / q) * (t % q)
    }

    /// `q(n-1) + floor((n-1) / floor(T/q)) * (T mod q) + q`.
    pub fn sf(&self, nodes: u64) -> u64 {
        let d = nodes.saturating_sub(1);
        self.fast_runtime_bound(d) + u64::from(self.spacing)
    }
}

pub fn compute_checkpoints(period: u32, spacing: u32) -> Result<CheckpointSet> {
    CheckpointSet::new(period, spacing)
}

pub fn succ(clock: u32, cp: &CheckpointSet) -> u32 {
    cp.succ(clock)
}

pub fn period_partition(
    period: u32,
    spacing: u32,
    count: usize,
) -> Result<Vec<RangeInclusive<u64>>> {
    Ok(CheckpointSet::new(period, spacing)?.period_partition(count))
}

pub fn fast_runtime_bound(diameter: u64, period: u32, spacing: u32) -> Result<u64> {
    Ok(CheckpointSet::new(period, spacing)?.fast_runtime_bound(diameter))
}

/// The self-stabilizing error-detection threshold; requires `5 <= q <= T`
/// and `n >= 1`.
pub fn sf(nodes: u64, period: u32, spacing: u32) -> Result<u64> {
    if spacing < 5 {
        return Err(Error::CheckpointParams { period, spacing });
    }
    if nodes == 0 {
        return Err(Error::Argument("sf requires at least one node".into()));
    }
    Ok(CheckpointSet::new(period, spacing)?.sf(nodes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn checkpoint_examples() {
        assert_eq!(
            compute_checkpoints(19, 4).unwrap().members(),
            &[0, 4, 8, 12]
        );
        assert_eq!(compute_checkpoints(7, 4).unwrap().members(), &[0]);
        // 10 fails 12 - 10 > 4
        assert_eq!(compute_checkpoints(12, 5).unwrap().members(), &[0, 5]);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(compute_checkpoints(3, 4).is_err());
        assert!(compute_checkpoints(12, 3).is_err());
        assert!(compute_checkpoints(12, 13).is_err());
        assert!(compute_checkpoints(4, 5).is_err());
        assert!(compute_checkpoints(5, 5).is_ok());
    }

    #[test]
    fn successor_examples() {
        let cp19 = compute_checkpoints(19, 4).unwrap();
        assert_eq!(succ(4, &cp19), 8);
        assert_eq!(succ(12, &cp19), 0);
        assert_eq!(succ(0, &compute_checkpoints(7, 4).unwrap()), 0);
    }

    #[test]
    fn partition_examples() {
        let p = period_partition(19, 4, 5).unwrap();
        assert_eq!(p[0], 1..=4);
        assert_eq!(p[1], 5..=8);
        assert_eq!(p[2], 9..=12);
        assert_eq!(p[3], 13..=19);
        assert_eq!(p[4], 20..=23);
        assert_eq!(period_partition(8, 4, 2).unwrap(), vec![1..=4, 5..=8]);
        assert_eq!(period_partition(7, 4, 2).unwrap(), vec![1..=7, 8..=14]);
    }

    #[test]
    fn bound_examples() {
        assert_eq!(fast_runtime_bound(3, 7, 4).unwrap(), 21);
        assert_eq!(fast_runtime_bound(5, 8, 4).unwrap(), 20);
        assert_eq!(fast_runtime_bound(5, 19, 4).unwrap(), 23);
    }

    #[test]
    fn sf_examples() {
        assert_eq!(sf(4, 12, 5).unwrap(), 22);
        assert_eq!(sf(1, 10, 5).unwrap(), 5);
        assert_eq!(sf(3, 10, 5).unwrap(), 15);
        assert!(sf(3, 10, 4).is_err());
        assert!(sf(0, 10, 5).is_err());
    }

    fn valid_params() -> impl Strategy<Value = (u32, u32)> {
        (4u32..200).prop_flat_map(|t| {
            let qs = if t >= 5 {
                prop_oneof![Just(4u32), 5u32..=t].boxed()
            } else {
                Just(4u32).boxed()
            };
            (Just(t), qs)
        })
    }

    proptest! {
        #[test]
        fn fast_checkpoint_count(t in 4u32..500) {
            let cp = compute_checkpoints(t, 4).unwrap();
            let multiples = (0..=t - 4).filter(|x| x % 4 == 0).count();
            prop_assert_eq!(cp.members().len(), multiples);
        }

        #[test]
        fn members_satisfy_definition((t, q) in valid_params()) {
            let cp = compute_checkpoints(t, q).unwrap();
            prop_assert_eq!(cp.members()[0], 0);
            for &c in cp.members() {
                prop_assert!(c % q == 0 && t - c > q - 1);
            }
            for &c in cp.members() {
                prop_assert!(cp.gap_after(c) >= q);
            }
        }

        #[test]
        fn succ_cycles_through_members((t, q) in valid_params()) {
            let cp = compute_checkpoints(t, q).unwrap();
            let mut seen = vec![0u32];
            let mut c = cp.succ(0);
            while c != 0 {
                seen.push(c);
                c = cp.succ(c);
            }
            prop_assert_eq!(seen.as_slice(), cp.members());
            let cycle: u64 = cp
                .period_partition(cp.members().len())
                .iter()
                .map(|p| p.end() - p.start() + 1)
                .sum();
            prop_assert_eq!(cycle, u64::from(t));
        }

        #[test]
        fn fast_bound_between_4d_and_7d(d in 0u64..1000, t in 4u32..200) {
            let b = fast_runtime_bound(d, t, 4).unwrap();
            prop_assert!(4 * d <= b && b <= 7 * d);
        }
    }
}
