//! Node and CR placement, random-waypoint CR motion, and the
//! advertisement / join / leave protocol that keeps clusters current.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::pu::PuHistory;
use crate::sensing_math::Snr;

/// Distances closer than this are treated as equal.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl Area {
    pub fn contains(&self, p: &Position) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    pub fn clamp(&self, p: Position) -> Position {
        Position::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.height))
    }

    pub fn centre(&self) -> Position {
        Position::new(self.width / 2.0, self.height / 2.0)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Position {
        Position::new(rng.random::<f64>() * self.width, rng.random::<f64>() * self.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeMode {
    Active,
    Sleep,
    Unclustered,
}

/// A fixed sensor node. Residual energy lives in the
/// [`EnergyLedger`](crate::energy::EnergyLedger), indexed by `id`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensorNode {
    pub id: usize,
    pub pos: Position,
    pub snr: Snr,
    pub cluster: Option<usize>,
    pub subset: Option<usize>,
    pub mode: NodeMode,
    /// Sensing duration used in the latest round, seconds.
    pub tau_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CognitiveRadio {
    pub id: usize,
    pub pos: Position,
    /// Registered node ids in join order.
    pub registered: Vec<usize>,
    pub subsets: Vec<Vec<usize>>,
    pub active_subset: Option<usize>,
    pub history: PuHistory,
    pub tdma: Vec<usize>,
}

impl CognitiveRadio {
    fn deregister(&mut self, node: usize) -> bool {
        let before = self.registered.len();
        self.registered.retain(|&n| n != node);
        before != self.registered.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MessageKind {
    Adv,
    JReq,
    LReq,
    Sched,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Endpoint {
    Node(usize),
    Cr(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Payload {
    Adv { cr: usize, pos: Position, nodes: Vec<usize> },
    JReq { node: usize, cr: usize, e_rem: f64, snr_db: f64 },
    LReq { node: usize, cr: usize },
    Sched { cr: usize, node: usize, subset: usize, slot: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Message {
    pub kind: MessageKind,
    pub bits: u64,
    pub src: Endpoint,
    /// Nodes or CR that receive the message; broadcasts list every hearer.
    pub dst: Vec<Endpoint>,
    pub payload: Payload,
}

/// Control-message sizes in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MessageSizing {
    /// Every control message occupies one full data packet.
    Packet(u64),
    /// Sum of the message's fields.
    Fields { header: u64, id: u64, coord: u64, value: u64 },
}

impl Default for MessageSizing {
    fn default() -> Self {
        MessageSizing::Fields { header: 8, id: 16, coord: 32, value: 32 }
    }
}

impl MessageSizing {
    pub fn bits(&self, payload: &Payload) -> u64 {
        match *self {
            MessageSizing::Packet(l) => l,
            MessageSizing::Fields { header, id, coord, value } => match payload {
                Payload::Adv { nodes, .. } => header + id + 2 * coord + id * nodes.len() as u64,
                Payload::JReq { .. } => header + 2 * id + 2 * value,
                Payload::LReq { .. } => header + 2 * id,
                Payload::Sched { .. } => header + 2 * id + 2 * header,
            },
        }
    }

    fn message(&self, kind: MessageKind, src: Endpoint, dst: Vec<Endpoint>, payload: Payload) -> Message {
        Message { kind, bits: self.bits(&payload), src, dst, payload }
    }
}

/// Placement inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacementParams {
    pub nodes: usize,
    pub crs: usize,
    pub area: Area,
    pub snr_db: (f64, f64),
    pub history_window: usize,
}

/// Drops nodes and CRs uniformly over the area; nodes start unclustered.
pub fn place_network<R: Rng + ?Sized>(params: &PlacementParams, rng: &mut R) -> (Vec<SensorNode>, Vec<CognitiveRadio>) {
    let (lo, hi) = params.snr_db;
    let nodes = (0..params.nodes)
        .map(|id| {
            let pos = params.area.sample(rng);
            let db = lo + rng.random::<f64>() * (hi - lo);
            SensorNode {
                id,
                pos,
                snr: Snr::from_db(db).expect("finite dB gives positive SNR"),
                cluster: None,
                subset: None,
                mode: NodeMode::Unclustered,
                tau_s: 0.0,
            }
        })
        .collect();
    let crs = (0..params.crs)
        .map(|id| CognitiveRadio {
            id,
            pos: params.area.sample(rng),
            registered: Vec::new(),
            subsets: Vec::new(),
            active_subset: None,
            history: PuHistory::new(params.history_window),
            tdma: Vec::new(),
        })
        .collect();
    (nodes, crs)
}

/// Preferred CR for a node among those within `radius`: nearest first, then
/// `favour` (the node's current CR), then fewest registered nodes, then
/// lowest id.
fn best_cr(pos: &Position, crs: &[CognitiveRadio], radius: f64, favour: Option<usize>) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for cr in crs {
        let d = pos.distance(&cr.pos);
        if d > radius {
            continue;
        }
        best = match best {
            None => Some((d, cr.id)),
            Some((bd, bid)) => {
                let better = if (d - bd).abs() > TIE_TOLERANCE {
                    d < bd
                } else if favour == Some(bid) {
                    false
                } else if favour == Some(cr.id) {
                    true
                } else {
                    let (n, bn) = (cr.registered.len(), crs[bid].registered.len());
                    n < bn || (n == bn && cr.id < bid)
                };
                if better { Some((d, cr.id)) } else { Some((bd, bid)) }
            }
        };
    }
    best.map(|(_, id)| id)
}

fn adv(cr: &CognitiveRadio, nodes: &[SensorNode], alive: &[bool], radius: f64, sizing: &MessageSizing) -> Message {
    let hearers = nodes
        .iter()
        .filter(|n| alive[n.id] && n.pos.distance(&cr.pos) <= radius)
        .map(|n| Endpoint::Node(n.id))
        .collect();
    sizing.message(
        MessageKind::Adv,
        Endpoint::Cr(cr.id),
        hearers,
        Payload::Adv { cr: cr.id, pos: cr.pos, nodes: cr.registered.clone() },
    )
}

fn join(node: &mut SensorNode, cr: &mut CognitiveRadio, e_rem: f64, sizing: &MessageSizing) -> Message {
    node.cluster = Some(cr.id);
    node.subset = None;
    node.mode = NodeMode::Active;
    cr.registered.push(node.id);
    sizing.message(
        MessageKind::JReq,
        Endpoint::Node(node.id),
        vec![Endpoint::Cr(cr.id)],
        Payload::JReq { node: node.id, cr: cr.id, e_rem, snr_db: node.snr.db() },
    )
}

fn leave(node: &mut SensorNode, cr: &mut CognitiveRadio, notify: bool, sizing: &MessageSizing) -> Option<Message> {
    cr.deregister(node.id);
    node.cluster = None;
    node.subset = None;
    node.mode = NodeMode::Unclustered;
    notify.then(|| {
        sizing.message(
            MessageKind::LReq,
            Endpoint::Node(node.id),
            vec![Endpoint::Cr(cr.id)],
            Payload::LReq { node: node.id, cr: cr.id },
        )
    })
}

/// Messages from one formation or update step and the CRs whose membership
/// changed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClusterChange {
    pub messages: Vec<Message>,
    pub changed: BTreeSet<usize>,
}

impl ClusterChange {
    pub fn merge(&mut self, other: ClusterChange) {
        self.messages.extend(other.messages);
        self.changed.extend(other.changed);
    }
}

/// Initial formation: every alive node within `radius` of a CR joins its
/// preferred CR. `residual` supplies the energy reported in each join
/// request.
pub fn form_clusters(
    nodes: &mut [SensorNode],
    crs: &mut [CognitiveRadio],
    residual: &[f64],
    radius: f64,
    sizing: &MessageSizing,
) -> ClusterChange {
    let alive: Vec<bool> = residual.iter().map(|&e| e > 0.0).collect();
    let mut out = ClusterChange::default();
    for cr in crs.iter() {
        out.messages.push(adv(cr, nodes, &alive, radius, sizing));
    }
    for node in nodes.iter_mut() {
        if !alive[node.id] || node.cluster.is_some() {
            continue;
        }
        if let Some(c) = best_cr(&node.pos, crs, radius, None) {
            out.messages.push(join(node, &mut crs[c], residual[node.id], sizing));
            out.changed.insert(c);
        }
    }
    out
}

/// Draws a heading uniformly on `[0, 2π)` and moves `step` metres, clamped
/// to the area.
pub fn move_cr<R: Rng + ?Sized>(pos: Position, area: &Area, step: f64, rng: &mut R) -> Position {
    let theta = rng.random::<f64>() * std::f64::consts::TAU;
    area.clamp(Position::new(pos.x + step * theta.cos(), pos.y + step * theta.sin()))
}

/// Membership update after CR `moved` has taken its new position.
///
/// The moved CR advertises. Its own members re-evaluate against every CR and
/// stay, switch, or become unclustered when nothing is in range. Unclustered
/// hearers join. Members of other CRs switch only when strictly closer to the
/// moved CR.
pub fn update_clusters(
    nodes: &mut [SensorNode],
    crs: &mut [CognitiveRadio],
    residual: &[f64],
    moved: usize,
    radius: f64,
    sizing: &MessageSizing,
) -> ClusterChange {
    let alive: Vec<bool> = residual.iter().map(|&e| e > 0.0).collect();
    let mut out = ClusterChange::default();
    let mut touched = BTreeSet::new();
    out.messages.push(adv(&crs[moved], nodes, &alive, radius, sizing));
    let m_pos = crs[moved].pos;

    for node in nodes.iter_mut() {
        if !alive[node.id] {
            continue;
        }
        let d_m = node.pos.distance(&m_pos);
        match node.cluster {
            Some(c) if c == moved => {
                let target = best_cr(&node.pos, crs, radius, Some(moved));
                if target == Some(moved) {
                    continue;
                }
                let reachable = d_m <= radius;
                if let Some(msg) = leave(node, &mut crs[moved], reachable, sizing) {
                    out.messages.push(msg);
                }
                touched.insert(moved);
                if let Some(t) = target {
                    out.messages.push(join(node, &mut crs[t], residual[node.id], sizing));
                    touched.insert(t);
                }
            }
            None if d_m <= radius => {
                if let Some(t) = best_cr(&node.pos, crs, radius, None) {
                    out.messages.push(join(node, &mut crs[t], residual[node.id], sizing));
                    touched.insert(t);
                }
            }
            Some(c) if d_m <= radius => {
                let d_c = node.pos.distance(&crs[c].pos);
                if d_m < d_c - TIE_TOLERANCE {
                    if let Some(msg) = leave(node, &mut crs[c], true, sizing) {
                        out.messages.push(msg);
                    }
                    out.messages.push(join(node, &mut crs[moved], residual[node.id], sizing));
                    touched.insert(c);
                    touched.insert(moved);
                }
            }
            _ => {}
        }
    }
    out.changed = touched;
    out
}

/// Removes dead nodes from their clusters silently.
pub fn drop_dead(nodes: &mut [SensorNode], crs: &mut [CognitiveRadio], residual: &[f64]) -> BTreeSet<usize> {
    let mut changed = BTreeSet::new();
    for node in nodes.iter_mut() {
        if residual[node.id] > 0.0 {
            continue;
        }
        if let Some(c) = node.cluster.take() {
            crs[c].deregister(node.id);
            changed.insert(c);
        }
        node.subset = None;
        node.mode = NodeMode::Unclustered;
    }
    changed
}

/// Per-member subset and reporting slot notice from a CR.
pub fn sched_message(cr: usize, node: usize, subset: usize, slot: usize, sizing: &MessageSizing) -> Message {
    sizing.message(
        MessageKind::Sched,
        Endpoint::Cr(cr),
        vec![Endpoint::Node(node)],
        Payload::Sched { cr, node, subset, slot },
    )
}

/// Checks the structural cluster invariants, returning a description of the
/// first violation.
pub fn check_clusters(nodes: &[SensorNode], crs: &[CognitiveRadio], radius: f64) -> Result<(), String> {
    let mut seen = vec![None; nodes.len()];
    for cr in crs {
        for &n in &cr.registered {
            if let Some(other) = seen[n] {
                return Err(format!("node {n} registered with CR {other} and CR {}", cr.id));
            }
            seen[n] = Some(cr.id);
            if nodes[n].cluster != Some(cr.id) {
                return Err(format!("node {n} listed by CR {} but points at {:?}", cr.id, nodes[n].cluster));
            }
            let d = nodes[n].pos.distance(&cr.pos);
            if d > radius + TIE_TOLERANCE {
                return Err(format!("node {n} is {d} m from CR {}", cr.id));
            }
        }
        if !cr.subsets.is_empty() {
            let mut members: Vec<usize> = cr.subsets.iter().flatten().copied().collect();
            let before = members.len();
            members.sort_unstable();
            members.dedup();
            let mut reg = cr.registered.clone();
            reg.sort_unstable();
            if members.len() != before || members != reg {
                return Err(format!("subsets of CR {} do not partition its cluster", cr.id));
            }
        }
    }
    for n in nodes {
        if n.cluster.is_some() != (n.mode != NodeMode::Unclustered) {
            return Err(format!("node {} mode {:?} disagrees with cluster {:?}", n.id, n.mode, n.cluster));
        }
        if let Some(c) = n.cluster {
            if seen[n.id] != Some(c) {
                return Err(format!("node {} claims CR {c} but is not registered", n.id));
            }
        }
    }
    Ok(())
}
