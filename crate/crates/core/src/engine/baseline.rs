//! Delay and reporting-cost models for the sensing architectures compared
//! against subset-based sensing.
//!
//! * `leachc_like`: a base station elects the highest-energy member as
//!   cluster head each round; members report to the head, which forwards one
//!   aggregate packet to the base station.
//! * `sendora_like`: members report to the CR, and the fused result is
//!   carried to a fixed sink by sensor relays spaced about `r_s` apart.

use crate::energy::{rx_energy, tx_energy, EnergyLedger, RadioParams, Stage};
use crate::topology::{Position, SensorNode};

/// Sensing plus TDMA reporting of `reports` packets.
pub fn direct_delay(max_tau: f64, reports: usize, t_rep: f64) -> f64 {
    max_tau + reports as f64 * t_rep
}

/// Head-assignment broadcast, sensing, member reports, aggregation at the
/// head and the head's uplink.
pub fn leach_delay(tau: f64, members: usize, t_rep: f64, t_ctrl: f64, t_proc: f64) -> f64 {
    t_ctrl + tau + members.saturating_sub(1) as f64 * t_rep + t_proc + t_rep
}

/// Sensing, member reports to the CR, then `hops` store-and-forward hops to
/// the sink.
pub fn sendora_delay(tau: f64, members: usize, t_rep: f64, hops: usize, t_proc: f64) -> f64 {
    tau + members as f64 * t_rep + hops as f64 * (t_rep + t_proc)
}

/// Highest-residual member; ties to the lowest id.
pub fn elect_head(members: &[usize], ledger: &EnergyLedger) -> Option<usize> {
    let mut best: Option<usize> = None;
    let mut sorted = members.to_vec();
    sorted.sort_unstable();
    for id in sorted {
        match best {
            Some(b) if ledger.residual(id) <= ledger.residual(b) => {}
            _ => best = Some(id),
        }
    }
    best
}

pub fn hop_count(from: &Position, sink: &Position, r_s: f64) -> usize {
    ((from.distance(sink) / r_s).ceil() as usize).max(1)
}

/// Relay nodes for a path of `hops` hops: the alive node nearest each
/// intermediate waypoint, never reused.
pub fn pick_relays(from: &Position, sink: &Position, hops: usize, nodes: &[SensorNode], ledger: &EnergyLedger) -> Vec<usize> {
    let mut used: Vec<usize> = Vec::new();
    for k in 1..hops {
        let t = k as f64 / hops as f64;
        let way = Position::new(from.x + (sink.x - from.x) * t, from.y + (sink.y - from.y) * t);
        let pick = nodes
            .iter()
            .filter(|n| ledger.is_alive(n.id) && !used.contains(&n.id))
            .min_by(|a, b| a.pos.distance(&way).total_cmp(&b.pos.distance(&way)).then(a.id.cmp(&b.id)));
        match pick {
            Some(n) => used.push(n.id),
            None => break,
        }
    }
    used
}

/// Charges the relay chain: each relay receives the packet and sends it to
/// the next relay, the last one to the sink.
pub fn charge_relays(relays: &[usize], sink: &Position, bits: u64, nodes: &[SensorNode], ledger: &mut EnergyLedger, radio: &RadioParams) {
    for (i, &r) in relays.iter().enumerate() {
        let next = relays.get(i + 1).map_or(*sink, |&n| nodes[n].pos);
        ledger.charge(r, Stage::Send, rx_energy(bits, radio));
        ledger.charge(r, Stage::Send, tx_energy(bits, nodes[r].pos.distance(&next), radio));
    }
}
