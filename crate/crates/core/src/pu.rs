//! Primary-user traffic, the per-CR history window and the sleep-slot
//! estimator built on busy-run statistics.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sensing_math::{MathError, Probability};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PuError {
    #[error("history holds no busy slots")]
    NoBusySlots,
    #[error("run length {i} outside [{min}, {max}]")]
    OutOfRange { i: usize, min: usize, max: usize },
    #[error("invalid history character {0:?}")]
    BadBit(char),
    #[error("slot stages ({stages} s) exceed slot length ({slot} s)")]
    SlotOverrun { stages: f64, slot: f64 },
    #[error(transparent)]
    Math(#[from] MathError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PuState {
    Idle,
    Busy,
}

impl PuState {
    pub fn is_busy(self) -> bool {
        self == PuState::Busy
    }

    pub fn bit(self) -> u8 {
        u8::from(self.is_busy())
    }
}

/// Two-state Markov chain described by its idle→busy and busy→idle
/// transition probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PuChain {
    p_ib: Probability,
    p_bi: Probability,
    pub state: PuState,
}

impl PuChain {
    pub fn new(p_ib: Probability, p_bi: Probability, state: PuState) -> Self {
        PuChain { p_ib, p_bi, state }
    }

    pub fn p_ib(&self) -> f64 {
        self.p_ib.get()
    }
    pub fn p_bi(&self) -> f64 {
        self.p_bi.get()
    }
    pub fn p_ii(&self) -> f64 {
        1.0 - self.p_ib.get()
    }
    pub fn p_bb(&self) -> f64 {
        1.0 - self.p_bi.get()
    }

    pub fn positively_correlated(&self) -> bool {
        self.p_ii() > self.p_ib() && self.p_bb() > self.p_bi()
    }

    /// Long-run fraction of busy slots.
    pub fn stationary_busy(&self) -> f64 {
        let total = self.p_ib() + self.p_bi();
        if total == 0.0 {
            f64::from(self.state.bit())
        } else {
            self.p_ib() / total
        }
    }

    /// Advances one slot and returns the new state.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> PuState {
        let u: f64 = rng.random();
        self.state = match self.state {
            PuState::Idle if u < self.p_ib() => PuState::Busy,
            PuState::Idle => PuState::Idle,
            PuState::Busy if u < self.p_bi() => PuState::Idle,
            PuState::Busy => PuState::Busy,
        };
        self.state
    }
}

/// Sliding window of past decisions, oldest first; `1` means busy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuHistory {
    bits: VecDeque<u8>,
    capacity: usize,
}

impl PuHistory {
    pub fn new(capacity: usize) -> Self {
        let capacity = capacity.max(1);
        PuHistory { bits: VecDeque::with_capacity(capacity), capacity }
    }

    /// Parses a `0`/`1` string, keeping the newest `capacity` bits.
    pub fn from_bits(text: &str, capacity: usize) -> Result<Self, PuError> {
        let mut h = PuHistory::new(capacity);
        for c in text.chars() {
            match c {
                '0' => h.push(0),
                '1' => h.push(1),
                other => return Err(PuError::BadBit(other)),
            }
        }
        Ok(h)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> impl Iterator<Item = u8> + '_ {
        self.bits.iter().copied()
    }

    pub fn push(&mut self, bit: u8) {
        if self.bits.len() == self.capacity {
            self.bits.pop_front();
        }
        self.bits.push_back(u8::from(bit != 0));
    }

    /// Records the current slot. An idle decision is confirmed by an ACK;
    /// a missing ACK means the channel was in fact busy. A busy decision has
    /// no correction path and is stored as given.
    pub fn record_slot(&mut self, decision_busy: bool, ack_observed: Option<bool>) {
        let bit = if decision_busy {
            1
        } else {
            match ack_observed {
                Some(false) => 1,
                _ => 0,
            }
        };
        self.push(bit);
    }

    pub fn run_stats(&self) -> RunStats {
        RunStats::from_bits(self.bits())
    }

    pub fn estimate_sleep_slots(&self) -> usize {
        if self.len() < 2 {
            return 0;
        }
        estimate_sleep_slots(&self.run_stats())
    }
}

impl fmt::Display for PuHistory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            f.write_str(if *b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for PuHistory {
    type Err = PuError;

    /// The window is sized to the string, with a floor of one bit.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PuHistory::from_bits(s, s.chars().count())
    }
}

/// Busy-run statistics of a history window.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct RunStats {
    /// Number of maximal busy runs, including length-1 runs.
    pub np: usize,
    /// Total busy slots.
    pub n1: usize,
    /// Shortest run of length ≥ 2, or 0 when there is none.
    pub n_min: usize,
    /// Longest run of length ≥ 2, or 0 when there is none.
    pub n_max: usize,
    /// `G_i` for every `i` in `[n_min, n_max]`.
    pub g: BTreeMap<usize, usize>,
}

impl RunStats {
    pub fn from_bits<I: IntoIterator<Item = u8>>(bits: I) -> Self {
        let mut runs = Vec::new();
        let mut current = 0usize;
        for b in bits {
            if b != 0 {
                current += 1;
            } else if current > 0 {
                runs.push(current);
                current = 0;
            }
        }
        if current > 0 {
            runs.push(current);
        }

        let mut stats = RunStats {
            np: runs.len(),
            n1: runs.iter().sum(),
            ..RunStats::default()
        };
        let long: Vec<usize> = runs.iter().copied().filter(|&r| r >= 2).collect();
        if let (Some(&lo), Some(&hi)) = (long.iter().min(), long.iter().max()) {
            stats.n_min = lo;
            stats.n_max = hi;
            for i in lo..=hi {
                stats.g.insert(i, 0);
            }
            for r in long {
                *stats.g.entry(r).or_default() += 1;
            }
        }
        stats
    }

    pub fn has_long_runs(&self) -> bool {
        self.n_max >= 2
    }

    fn check(&self, i: usize) -> Result<(), PuError> {
        if self.has_long_runs() && (self.n_min..=self.n_max).contains(&i) {
            Ok(())
        } else {
            Err(PuError::OutOfRange { i, min: self.n_min, max: self.n_max })
        }
    }
}

/// `G_i^s = G_i + Σ_{j>i} G_j·⌊j/i⌋`: runs of length `j` contain `⌊j/i⌋`
/// disjoint runs of length `i`.
pub fn g_cumulative(stats: &RunStats, i: usize) -> Result<usize, PuError> {
    stats.check(i)?;
    Ok(stats.g.range(i..).map(|(&j, &gj)| gj * (j / i)).sum())
}

/// `NP / N_1`.
pub fn pr_nz(stats: &RunStats) -> Result<Probability, PuError> {
    if stats.n1 == 0 {
        return Err(PuError::NoBusySlots);
    }
    Ok(Probability::new(stats.np as f64 / stats.n1 as f64)?)
}

/// `G_i^s · i / N_1`.
pub fn pr_gis(stats: &RunStats, i: usize) -> Result<Probability, PuError> {
    if stats.n1 == 0 {
        return Err(PuError::NoBusySlots);
    }
    let gs = g_cumulative(stats, i)?;
    Ok(Probability::new((gs * i) as f64 / stats.n1 as f64)?)
}

/// Smallest run length whose cumulative probability beats `NP / N_1`, or 0
/// when no such length exists.
pub fn estimate_sleep_slots(stats: &RunStats) -> usize {
    if stats.n1 == 0 || !stats.has_long_runs() {
        return 0;
    }
    let threshold = stats.np as f64 / stats.n1 as f64;
    (stats.n_min..=stats.n_max)
        .find(|&i| {
            let gs = g_cumulative(stats, i).unwrap_or(0);
            (gs * i) as f64 / stats.n1 as f64 > threshold
        })
        .unwrap_or(0)
}

/// `n_s·T + T_rem`, where `T_rem` is what is left of the slot after setup,
/// sensing and reporting.
pub fn sleep_duration(n_s: usize, t_slot: f64, t_set: f64, tau_s: f64, t_r: f64) -> Result<f64, PuError> {
    let stages = t_set + tau_s + t_r;
    if stages > t_slot {
        return Err(PuError::SlotOverrun { stages, slot: t_slot });
    }
    Ok(n_s as f64 * t_slot + (t_slot - stages))
}
