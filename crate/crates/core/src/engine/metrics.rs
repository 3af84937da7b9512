//! Run-level metrics over slot records.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{Fallback, SlotRecord};
use crate::energy::StageTotals;

/// `(1/n)·Σ (H_j − D_j)²` over paired actual states and decisions.
pub fn mse(pairs: &[(u8, u8)]) -> Option<f64> {
    if pairs.is_empty() {
        return None;
    }
    let sum: f64 = pairs.iter().map(|&(h, d)| (f64::from(h) - f64::from(d)).powi(2)).sum();
    Some(sum / pairs.len() as f64)
}

/// Fraction of busy slots in which the decision was busy.
pub fn detection_probability(pairs: &[(u8, u8)]) -> Option<f64> {
    let busy: Vec<_> = pairs.iter().filter(|p| p.0 == 1).collect();
    if busy.is_empty() {
        return None;
    }
    Some(busy.iter().filter(|p| p.1 == 1).count() as f64 / busy.len() as f64)
}

/// Rounds until residual energy falls below `fraction` of the initial
/// energy. When the run ends first, the mean per-round consumption is
/// extrapolated; the flag tells which.
pub fn lifetime(initial: f64, residual_by_round: &[f64], fraction: f64) -> (Option<f64>, bool) {
    let floor = fraction * initial;
    if let Some(i) = residual_by_round.iter().position(|&r| r < floor) {
        return (Some((i + 1) as f64), true);
    }
    let rounds = residual_by_round.len();
    let Some(&last) = residual_by_round.last() else {
        return (None, false);
    };
    let per_round = (initial - last) / rounds as f64;
    if per_round <= 0.0 {
        return (None, false);
    }
    (Some((initial - floor) / per_round), false)
}

fn mode_of(counts: &BTreeMap<usize, usize>) -> Option<usize> {
    // Highest count; ties to the smaller value.
    counts.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(&v, _)| v)
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub rounds: usize,
    pub energy: StageTotals,
    pub total_energy_j: f64,
    pub setup_share: f64,
    pub initial_energy_j: f64,
    pub residual_energy_j: f64,
    pub mse: Option<f64>,
    pub detection_probability: Option<f64>,
    pub false_alarm_rate: Option<f64>,
    pub mean_n_s: Option<f64>,
    pub n_s_estimates: usize,
    pub mean_selected: Option<f64>,
    pub modal_selected: Option<usize>,
    pub selected_histogram: BTreeMap<usize, usize>,
    pub mean_k: Option<f64>,
    pub modal_k: Option<usize>,
    pub k_histogram: BTreeMap<usize, usize>,
    pub mean_cluster_size: Option<f64>,
    pub mean_delay_s: Option<f64>,
    pub sleep_cluster_rounds: usize,
    pub sensing_cluster_rounds: usize,
    pub extended_rounds: usize,
    pub full_fallback_rounds: usize,
    pub overrun_rounds: usize,
    pub k_constraint_unmet_rounds: usize,
    pub dead_nodes: usize,
    pub lifetime_rounds: Option<f64>,
    pub lifetime_reached: bool,
    pub subset_size: usize,
    pub detection_bound: usize,
    pub subset_size_feasible: bool,
}

/// Per-cluster decision pairs `(actual, decided)` over every live
/// cluster-round.
pub fn decision_pairs(records: &[SlotRecord]) -> Vec<(u8, u8)> {
    records
        .iter()
        .flat_map(|r| r.clusters.iter().filter_map(move |c| c.decision.map(|d| (r.pu_state, d))))
        .collect()
}

pub(crate) struct SummaryInputs<'a> {
    pub records: &'a [SlotRecord],
    pub initial: f64,
    pub residual: f64,
    pub energy: StageTotals,
    pub dead_nodes: usize,
    pub subset_size: crate::sensing_math::SubsetSize,
}

pub(crate) fn summarize(inp: SummaryInputs<'_>) -> Summary {
    let records = inp.records;
    let pairs = decision_pairs(records);
    let idle: Vec<_> = pairs.iter().filter(|p| p.0 == 0).collect();
    let false_alarm_rate =
        (!idle.is_empty()).then(|| idle.iter().filter(|p| p.1 == 1).count() as f64 / idle.len() as f64);

    let mut n_s = Vec::new();
    let mut selected = Vec::new();
    let mut sel_counts = BTreeMap::new();
    let mut k = Vec::new();
    let mut k_counts = BTreeMap::new();
    let mut sizes = Vec::new();
    let mut delays = Vec::new();
    let (mut slept, mut sensed, mut extended, mut full, mut overrun, mut unmet) = (0, 0, 0, 0, 0, 0);
    for r in records {
        for c in &r.clusters {
            if !c.live {
                continue;
            }
            sizes.push(c.members as f64);
            k.push(c.k as f64);
            *k_counts.entry(c.k).or_insert(0) += 1;
            if c.k_constraint_unmet {
                unmet += 1;
            }
            if let Some(v) = c.n_s {
                n_s.push(v as f64);
            }
            if c.slept {
                slept += 1;
                continue;
            }
            sensed += 1;
            selected.push(c.selected as f64);
            *sel_counts.entry(c.selected).or_insert(0) += 1;
            if let Some(d) = c.delay {
                delays.push(d);
            }
            match c.fallback {
                Fallback::Extended => extended += 1,
                Fallback::Full => full += 1,
                Fallback::None => {}
            }
            if c.overrun {
                overrun += 1;
            }
        }
    }
    let residuals: Vec<f64> = records.iter().map(|r| r.residual_j).collect();
    let (life, reached) = lifetime(inp.initial, &residuals, 0.5);
    let total = inp.energy.total();
    Summary {
        rounds: records.len(),
        energy: inp.energy,
        total_energy_j: total,
        setup_share: if total > 0.0 { inp.energy.setup / total } else { 0.0 },
        initial_energy_j: inp.initial,
        residual_energy_j: inp.residual,
        mse: mse(&pairs),
        detection_probability: detection_probability(&pairs),
        false_alarm_rate,
        mean_n_s: mean(&n_s),
        n_s_estimates: n_s.len(),
        mean_selected: mean(&selected),
        modal_selected: mode_of(&sel_counts),
        selected_histogram: sel_counts,
        mean_k: mean(&k),
        modal_k: mode_of(&k_counts),
        k_histogram: k_counts,
        mean_cluster_size: mean(&sizes),
        mean_delay_s: mean(&delays),
        sleep_cluster_rounds: slept,
        sensing_cluster_rounds: sensed,
        extended_rounds: extended,
        full_fallback_rounds: full,
        overrun_rounds: overrun,
        k_constraint_unmet_rounds: unmet,
        dead_nodes: inp.dead_nodes,
        lifetime_rounds: life,
        lifetime_reached: reached,
        subset_size: inp.subset_size.s,
        detection_bound: inp.subset_size.detection_bound,
        subset_size_feasible: inp.subset_size.feasible,
    }
}
