//! Splitting a cluster into subsets, picking the active one, ordering its
//! reports and choosing which of its nodes actually sense.

use serde::Serialize;
use thiserror::Error;

use crate::energy::{sensing_energy, RadioParams};
use crate::sensing_math::{num_subsets, sensing_time, MathError, Probability};
use crate::topology::{SensorNode, TIE_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SubsetError {
    #[error("no subsets to choose from")]
    Empty,
    #[error(transparent)]
    Math(#[from] MathError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subset {
    pub members: Vec<usize>,
    pub total_energy: f64,
}

impl Subset {
    pub fn refresh_energy(&mut self, residual: &[f64]) {
        self.total_energy = self.members.iter().map(|&n| residual[n]).sum();
    }
}

/// Greedy partition of a cluster into `K = ⌊C/S⌋` subsets.
///
/// Each subset is seeded with the highest-energy unassigned node. It then
/// grows one node at a time: the current selector (the node added last)
/// picks, among unassigned nodes closer than `2·r_s`, the one farthest from
/// it. With no such candidate the nearest unassigned node is taken instead.
/// Whatever is left after `K` subsets joins the last one.
pub fn form_subsets(members: &[usize], nodes: &[SensorNode], residual: &[f64], r_s: f64, s: usize) -> Vec<Subset> {
    if members.is_empty() {
        return Vec::new();
    }
    let k = num_subsets(members.len(), s).k;
    let mut pool: Vec<usize> = members.to_vec();
    pool.sort_unstable();
    let mut out: Vec<Subset> = Vec::with_capacity(k);

    for _ in 0..k {
        if pool.is_empty() {
            break;
        }
        let seed_at = argmax_by(&pool, |&n| residual[n]);
        let seed = pool.remove(seed_at);
        let mut subset = vec![seed];
        let mut selector = seed;
        while subset.len() < s && !pool.is_empty() {
            let from = nodes[selector].pos;
            let d = |n: usize| from.distance(&nodes[n].pos);
            let overlapping: Vec<usize> = pool.iter().copied().filter(|&n| d(n) < 2.0 * r_s).collect();
            let pick = if overlapping.is_empty() {
                pool[argmax_by(&pool, |&n| -d(n))]
            } else {
                overlapping[argmax_by(&overlapping, |&n| d(n))]
            };
            pool.retain(|&n| n != pick);
            subset.push(pick);
            selector = pick;
        }
        out.push(Subset { members: subset, total_energy: 0.0 });
    }
    if let Some(last) = out.last_mut() {
        last.members.append(&mut pool);
    }
    for sub in &mut out {
        sub.refresh_energy(residual);
    }
    out
}

/// Index of the largest key in an id-sorted slice; near-equal keys resolve to
/// the earlier (lower id) entry.
fn argmax_by<F: Fn(&usize) -> f64>(ids: &[usize], key: F) -> usize {
    let mut best = 0;
    let mut best_key = key(&ids[0]);
    for (i, id) in ids.iter().enumerate().skip(1) {
        let k = key(id);
        if k > best_key + TIE_TOLERANCE {
            best = i;
            best_key = k;
        }
    }
    best
}

/// Subset with the largest total residual energy; ties to the lower index.
pub fn select_active_subset(subsets: &[Subset]) -> Result<usize, SubsetError> {
    if subsets.is_empty() {
        return Err(SubsetError::Empty);
    }
    let mut best = 0;
    for (i, s) in subsets.iter().enumerate().skip(1) {
        if s.total_energy > subsets[best].total_energy {
            best = i;
        }
    }
    Ok(best)
}

fn by_snr_desc(ids: &[usize], nodes: &[SensorNode]) -> Vec<usize> {
    let mut order = ids.to_vec();
    order.sort_by(|&a, &b| {
        nodes[b].snr.linear().total_cmp(&nodes[a].snr.linear()).then(a.cmp(&b))
    });
    order
}

/// Reporting order: highest SNR first, ties by id.
pub fn tdma_schedule(members: &[usize], nodes: &[SensorNode]) -> Vec<usize> {
    by_snr_desc(members, nodes)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionParams {
    pub qd_min: Probability,
    pub pf_target: Probability,
    /// Detection probability each included node is sized to reach.
    pub pd_target: Probability,
    pub tau_max: f64,
    pub f_s: f64,
    /// Cap on the number of sensing nodes, normally the subset capacity.
    pub max_selected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensingSelection {
    pub selected: Vec<usize>,
    /// Sensing duration of each selected node, aligned with `selected`.
    pub taus: Vec<f64>,
    pub achieved_qd: f64,
    pub e_s: f64,
    pub infeasible: bool,
}

/// Greedy sensing-node choice: walk nodes by descending SNR, skip those that
/// cannot reach the per-node target within `tau_max`, and stop once the fused
/// detection probability reaches `qd_min` or `max_selected` nodes are in.
pub fn select_sensing_nodes(
    candidates: &[usize],
    nodes: &[SensorNode],
    params: &SelectionParams,
    radio: &RadioParams,
) -> Result<SensingSelection, SubsetError> {
    let mut sel = SensingSelection { selected: Vec::new(), taus: Vec::new(), achieved_qd: 0.0, e_s: 0.0, infeasible: false };
    let qd_min = params.qd_min.get();
    let miss_node = 1.0 - params.pd_target.get();
    let mut miss = 1.0;
    for id in by_snr_desc(candidates, nodes) {
        if 1.0 - miss >= qd_min || sel.selected.len() >= params.max_selected {
            break;
        }
        let tau = sensing_time(nodes[id].snr, params.pf_target, params.pd_target, params.f_s)?;
        if tau > params.tau_max {
            continue;
        }
        sel.selected.push(id);
        sel.taus.push(tau);
        sel.e_s += sensing_energy(tau, radio);
        miss *= miss_node;
    }
    sel.achieved_qd = 1.0 - miss;
    sel.infeasible = sel.achieved_qd < qd_min;
    Ok(sel)
}
