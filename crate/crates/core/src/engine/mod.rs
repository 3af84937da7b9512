//! Round loop: setup (mobility, cluster updating, subset formation), sensing,
//! reporting, and sleep scheduling, for the subset process and the
//! comparison architectures.

pub mod baseline;
pub mod metrics;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, Mode, SimConfig, SleepPolicy, SleepRecord};
use crate::energy::{rx_energy, sensing_energy, tx_energy, EnergyLedger, RadioParams, Stage, StageTotals};
use crate::pu::{PuChain, PuState};
use crate::sensing_math::{achieved_detection_prob, num_subsets, subset_size, MathError, Probability, SubsetSize};
use crate::subsets::{form_subsets, select_active_subset, select_sensing_nodes, tdma_schedule, SelectionParams, Subset};
use crate::topology::{
    drop_dead, form_clusters, move_cr, place_network, sched_message, update_clusters, ClusterChange, CognitiveRadio,
    Endpoint, MessageSizing, NodeMode, Payload, SensorNode,
};

pub use metrics::Summary;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Math(#[from] MathError),
}

/// How a cluster's sensing set was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    /// Greedy selection within the active subset (or the whole cluster when
    /// no subsets are used) met the detection target.
    None,
    /// The active subset could not, so selection ran over the whole cluster.
    Extended,
    /// Every member sensed for `tau_max` with its false-alarm share of the
    /// global budget.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterRecord {
    pub cr: usize,
    pub live: bool,
    pub members: usize,
    pub k: usize,
    pub k_constraint_unmet: bool,
    /// Membership changed during this round's setup.
    pub updated: bool,
    /// Held busy by a scheduled sleep; nothing was sensed.
    pub slept: bool,
    pub selected: usize,
    pub decision: Option<u8>,
    pub delay: Option<f64>,
    /// Sleep estimate computed after a busy decision.
    pub n_s: Option<usize>,
    pub t_sleep: Option<f64>,
    pub fallback: Fallback,
    /// Setup, sensing and reporting did not fit in one slot.
    pub overrun: bool,
    /// Charges to this cluster's members during the round.
    pub energy: StageTotals,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotRecord {
    pub round: usize,
    pub pu_state: u8,
    pub energy: StageTotals,
    pub residual_j: f64,
    pub messages: usize,
    pub clusters: Vec<ClusterRecord>,
}

#[derive(Debug, Clone, Default)]
struct ClusterState {
    subsets: Vec<Subset>,
    sleep_left: usize,
}

struct Participant {
    id: usize,
    tau: f64,
    pd: f64,
    pf: f64,
}

const STREAM_PLACEMENT: u64 = 0;
const STREAM_MOBILITY: u64 = 1;
const STREAM_PU: u64 = 2;
const STREAM_SENSING: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub struct Simulation {
    cfg: SimConfig,
    radio: RadioParams,
    sizing: MessageSizing,
    size: SubsetSize,
    selection: SelectionParams,
    nodes: Vec<SensorNode>,
    crs: Vec<CognitiveRadio>,
    ledger: EnergyLedger,
    pu: PuChain,
    clusters: Vec<ClusterState>,
    mobility: ChaCha8Rng,
    pu_rng: ChaCha8Rng,
    sensing: ChaCha8Rng,
    round: usize,
}

impl Simulation {
    pub fn new(cfg: SimConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let p = |v: f64| Probability::new(v).expect("validated probability");
        let size = subset_size(p(cfg.qd_min), p(cfg.qf_max), p(cfg.pd_min), p(cfg.pf_max))?;
        let (nodes, crs) = place_network(&cfg.placement(), &mut stream(cfg.seed, STREAM_PLACEMENT));
        let mut pu_rng = stream(cfg.seed, STREAM_PU);
        let chain_probe = PuChain::new(p(cfg.p_ib), p(cfg.p_bi()), PuState::Idle);
        let start = if pu_rng.random::<f64>() < chain_probe.stationary_busy() { PuState::Busy } else { PuState::Idle };
        let selection = SelectionParams {
            qd_min: p(cfg.qd_min),
            pf_target: p(cfg.pf_max),
            pd_target: cfg.pd_node(),
            tau_max: cfg.tau_max,
            f_s: cfg.f_s,
            max_selected: size.s,
        };
        Ok(Simulation {
            radio: cfg.radio(),
            sizing: cfg.sizing(),
            size,
            selection,
            ledger: EnergyLedger::new(nodes.len(), cfg.e0),
            pu: PuChain::new(p(cfg.p_ib), p(cfg.p_bi()), start),
            clusters: vec![ClusterState::default(); crs.len()],
            nodes,
            crs,
            mobility: stream(cfg.seed, STREAM_MOBILITY),
            pu_rng,
            sensing: stream(cfg.seed, STREAM_SENSING),
            round: 0,
            cfg,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }
    pub fn nodes(&self) -> &[SensorNode] {
        &self.nodes
    }
    pub fn crs(&self) -> &[CognitiveRadio] {
        &self.crs
    }
    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }
    pub fn subset_size(&self) -> SubsetSize {
        self.size
    }
    pub fn round(&self) -> usize {
        self.round
    }
    pub fn pu_state(&self) -> PuState {
        self.pu.state
    }

    /// Subsets currently held for CR `cr`.
    pub fn subsets(&self, cr: usize) -> &[Subset] {
        &self.clusters[cr].subsets
    }

    fn charge_messages(&mut self, change: &ClusterChange) {
        for msg in &change.messages {
            if let Endpoint::Node(n) = msg.src {
                if let Some(Endpoint::Cr(c)) = msg.dst.first() {
                    let d = self.nodes[n].pos.distance(&self.crs[*c].pos);
                    self.ledger.charge(n, Stage::Setup, tx_energy(msg.bits, d, &self.radio));
                }
            } else {
                for dst in &msg.dst {
                    if let Endpoint::Node(n) = dst {
                        self.ledger.charge(*n, Stage::Setup, rx_energy(msg.bits, &self.radio));
                    }
                }
            }
        }
    }

    fn setup(&mut self) -> (ClusterChange, usize) {
        let radius = self.cfg.join_radius();
        let mut change = ClusterChange::default();
        change.changed = drop_dead(&mut self.nodes, &mut self.crs, self.ledger.residuals());
        if self.round == 0 {
            change.merge(form_clusters(&mut self.nodes, &mut self.crs, self.ledger.residuals(), radius, &self.sizing));
        } else {
            let area = self.cfg.area();
            for c in 0..self.crs.len() {
                let moves = self.mobility.random::<f64>() < self.cfg.p_move;
                let next = move_cr(self.crs[c].pos, &area, self.cfg.d_cr, &mut self.mobility);
                if moves && self.cfg.d_cr > 0.0 {
                    self.crs[c].pos = next;
                    let step = update_clusters(&mut self.nodes, &mut self.crs, self.ledger.residuals(), c, radius, &self.sizing);
                    change.merge(step);
                }
            }
        }
        self.charge_messages(&change);
        let mut sched = 0;
        for &c in &change.changed {
            sched += self.reform_subsets(c);
        }
        (change, sched)
    }

    /// Rebuilds CR `c`'s subsets and tells each member its subset and slot.
    fn reform_subsets(&mut self, c: usize) -> usize {
        let members = self.crs[c].registered.clone();
        let subsets = form_subsets(&members, &self.nodes, self.ledger.residuals(), self.cfg.r_s, self.size.s);
        let mut sent = 0;
        for (si, sub) in subsets.iter().enumerate() {
            for (slot, id) in tdma_schedule(&sub.members, &self.nodes).into_iter().enumerate() {
                self.nodes[id].subset = Some(si);
                let msg = sched_message(c, id, si, slot, &self.sizing);
                self.ledger.charge(id, Stage::Setup, rx_energy(msg.bits, &self.radio));
                sent += 1;
            }
        }
        self.crs[c].subsets = subsets.iter().map(|s| s.members.clone()).collect();
        self.crs[c].active_subset = None;
        self.clusters[c].subsets = subsets;
        sent
    }

    /// Every member sensing for `tau_max` at its share of the false-alarm
    /// budget.
    fn full_participation(&self, members: &[usize]) -> Result<Vec<Participant>, MathError> {
        let c = members.len() as f64;
        let pf = 1.0 - (1.0 - self.cfg.qf_max).powf(1.0 / c);
        let pf_p = Probability::new(pf)?;
        members
            .iter()
            .map(|&id| {
                let pd = achieved_detection_prob(self.nodes[id].snr, pf_p, self.cfg.tau_max, self.cfg.f_s)?.get();
                Ok(Participant { id, tau: self.cfg.tau_max, pd, pf })
            })
            .collect()
    }

    fn greedy(&self, candidates: &[usize]) -> Result<Option<Vec<Participant>>, MathError> {
        let sel = select_sensing_nodes(candidates, &self.nodes, &self.selection, &self.radio).map_err(|e| match e {
            crate::subsets::SubsetError::Math(m) => m,
            other => MathError::Domain(other.to_string()),
        })?;
        if sel.infeasible {
            return Ok(None);
        }
        let (pd, pf) = (self.selection.pd_target.get(), self.selection.pf_target.get());
        Ok(Some(sel.selected.iter().zip(&sel.taus).map(|(&id, &tau)| Participant { id, tau, pd, pf }).collect()))
    }

    fn choose_participants(&mut self, c: usize, members: &[usize]) -> Result<(Vec<Participant>, Fallback), MathError> {
        if self.cfg.mode != Mode::Cusf {
            return Ok((self.full_participation(members)?, Fallback::Full));
        }
        if self.cfg.sleep != SleepPolicy::None && !self.clusters[c].subsets.is_empty() {
            let residual = self.ledger.residuals().to_vec();
            let state = &mut self.clusters[c];
            for s in &mut state.subsets {
                s.refresh_energy(&residual);
            }
            let active = select_active_subset(&state.subsets).expect("non-empty");
            self.crs[c].active_subset = Some(active);
            let candidates: Vec<usize> =
                self.clusters[c].subsets[active].members.iter().copied().filter(|&n| self.ledger.is_alive(n)).collect();
            if let Some(p) = self.greedy(&candidates)? {
                return Ok((p, Fallback::None));
            }
            if let Some(p) = self.greedy(members)? {
                return Ok((p, Fallback::Extended));
            }
        } else if let Some(p) = self.greedy(members)? {
            return Ok((p, Fallback::None));
        }
        Ok((self.full_participation(members)?, Fallback::Full))
    }

    /// Reporting energy and end-to-end delay for this round's participants.
    fn report(&mut self, c: usize, parts: &[Participant]) -> f64 {
        let l = self.cfg.packet_bits;
        let t_rep = self.cfg.t_report();
        let cr_pos = self.crs[c].pos;
        let max_tau = parts.iter().map(|p| p.tau).fold(0.0, f64::max);
        match self.cfg.mode {
            Mode::Cusf | Mode::WithoutSubsets => {
                for p in parts {
                    let d = self.nodes[p.id].pos.distance(&cr_pos);
                    self.ledger.charge(p.id, Stage::Send, tx_energy(l, d, &self.radio));
                }
                baseline::direct_delay(max_tau, parts.len(), t_rep)
            }
            Mode::LeachcLike => {
                let ids: Vec<usize> = parts.iter().map(|p| p.id).collect();
                let head = baseline::elect_head(&ids, &self.ledger).expect("non-empty cluster");
                let head_pos = self.nodes[head].pos;
                for &id in &ids {
                    if id != head {
                        let d = self.nodes[id].pos.distance(&head_pos);
                        self.ledger.charge(id, Stage::Send, tx_energy(l, d, &self.radio));
                        self.ledger.charge(head, Stage::Send, rx_energy(l, &self.radio));
                    }
                }
                let d_bs = head_pos.distance(&self.cfg.base_position());
                self.ledger.charge(head, Stage::Send, tx_energy(l, d_bs, &self.radio));
                baseline::leach_delay(max_tau, ids.len(), t_rep, self.leach_ctrl_time(), self.cfg.t_proc)
            }
            Mode::SendoraLike => {
                for p in parts {
                    let d = self.nodes[p.id].pos.distance(&cr_pos);
                    self.ledger.charge(p.id, Stage::Send, tx_energy(l, d, &self.radio));
                }
                let sink = self.cfg.sink_position();
                let hops = baseline::hop_count(&cr_pos, &sink, self.cfg.r_s);
                let relays = baseline::pick_relays(&cr_pos, &sink, hops, &self.nodes, &self.ledger);
                baseline::charge_relays(&relays, &sink, l, &self.nodes, &mut self.ledger, &self.radio);
                baseline::sendora_delay(max_tau, parts.len(), t_rep, hops, self.cfg.t_proc)
            }
        }
    }

    fn leach_assignment_bits(&self) -> u64 {
        self.sizing.bits(&Payload::LReq { node: 0, cr: 0 })
    }

    fn leach_status_bits(&self) -> u64 {
        self.sizing.bits(&Payload::JReq { node: 0, cr: 0, e_rem: 0.0, snr_db: 0.0 })
    }

    fn leach_ctrl_time(&self) -> f64 {
        self.leach_assignment_bits() as f64 / self.cfg.bit_rate
    }

    /// Centralised head election: each member uploads its status to the base
    /// station and receives its assignment.
    fn leach_setup(&mut self) {
        let base = self.cfg.base_position();
        let (up, down) = (self.leach_status_bits(), self.leach_assignment_bits());
        for cr in 0..self.crs.len() {
            for i in 0..self.crs[cr].registered.len() {
                let id = self.crs[cr].registered[i];
                if !self.ledger.is_alive(id) {
                    continue;
                }
                let d = self.nodes[id].pos.distance(&base);
                self.ledger.charge(id, Stage::Setup, tx_energy(up, d, &self.radio));
                self.ledger.charge(id, Stage::Setup, rx_energy(down, &self.radio));
            }
        }
    }

    /// Runs one round and advances the primary user.
    pub fn run_round(&mut self) -> Result<SlotRecord, SimError> {
        self.ledger.begin_round();
        let (change, sched) = self.setup();
        if self.cfg.mode == Mode::LeachcLike {
            self.leach_setup();
        }
        let pu_busy = self.pu.state.is_busy();
        let mut clusters = Vec::with_capacity(self.crs.len());

        for c in 0..self.crs.len() {
            let members: Vec<usize> =
                self.crs[c].registered.iter().copied().filter(|&n| self.ledger.is_alive(n)).collect();
            let count = num_subsets(members.len(), self.size.s);
            let updated = change.changed.contains(&c);
            let mut rec = ClusterRecord {
                cr: c,
                live: !members.is_empty(),
                members: members.len(),
                k: if members.is_empty() { 0 } else { self.clusters[c].subsets.len() },
                k_constraint_unmet: !members.is_empty() && count.constraint_unmet,
                updated,
                slept: false,
                selected: 0,
                decision: None,
                delay: None,
                n_s: None,
                t_sleep: None,
                fallback: Fallback::None,
                overrun: false,
                energy: StageTotals::default(),
            };
            if members.is_empty() {
                clusters.push(rec);
                continue;
            }

            if self.cfg.sleep == SleepPolicy::AllSleepNs && self.clusters[c].sleep_left > 0 {
                self.clusters[c].sleep_left -= 1;
                for &id in &members {
                    self.nodes[id].mode = NodeMode::Sleep;
                    self.nodes[id].tau_s = 0.0;
                }
                if self.cfg.sleep_record == SleepRecord::Busy {
                    self.crs[c].history.record_slot(true, None);
                }
                rec.slept = true;
                rec.decision = Some(1);
            } else {
                let (parts, fallback) = self.choose_participants(c, &members)?;
                for &id in &members {
                    self.nodes[id].mode = NodeMode::Sleep;
                    self.nodes[id].tau_s = 0.0;
                }
                let order: Vec<usize> = {
                    let ids: Vec<usize> = parts.iter().map(|p| p.id).collect();
                    tdma_schedule(&ids, &self.nodes)
                };
                let mut busy = false;
                for &id in &order {
                    let p = parts.iter().find(|p| p.id == id).expect("participant");
                    let u: f64 = self.sensing.random();
                    busy |= if pu_busy { u < p.pd } else { u < p.pf };
                    self.nodes[id].mode = NodeMode::Active;
                    self.nodes[id].tau_s = p.tau;
                    self.ledger.charge(id, Stage::Sense, sensing_energy(p.tau, &self.radio));
                }
                self.crs[c].tdma = order;
                let delay = self.report(c, &parts);
                let max_tau = parts.iter().map(|p| p.tau).fold(0.0, f64::max);
                let t_r = parts.len() as f64 * self.cfg.t_report();
                let t_set = if updated { self.cfg.t_set } else { 0.0 };
                let stages = t_set + max_tau + t_r;

                let ack = (!busy).then_some(!pu_busy);
                self.crs[c].history.record_slot(busy, ack);
                if busy {
                    let n_s = self.crs[c].history.estimate_sleep_slots();
                    rec.n_s = Some(n_s);
                    let t_rem = (self.cfg.slot - stages).max(0.0);
                    rec.t_sleep = Some(n_s as f64 * self.cfg.slot + t_rem);
                    if self.cfg.sleep == SleepPolicy::AllSleepNs {
                        self.clusters[c].sleep_left = n_s;
                    }
                }
                rec.overrun = stages > self.cfg.slot;
                rec.selected = parts.len();
                rec.fallback = fallback;
                rec.delay = Some(delay);
                rec.decision = Some(u8::from(busy));
            }
            clusters.push(rec);
        }

        for rec in &mut clusters {
            for &id in &self.crs[rec.cr].registered {
                rec.energy.add(&self.ledger.round_node_totals(id));
            }
        }
        let record = SlotRecord {
            round: self.round,
            pu_state: u8::from(pu_busy),
            energy: self.ledger.round_totals(),
            residual_j: self.ledger.total_residual(),
            messages: change.messages.len() + sched,
            clusters,
        };
        self.pu.step(&mut self.pu_rng);
        self.round += 1;
        Ok(record)
    }

    fn dead_nodes(&self) -> usize {
        (0..self.nodes.len()).filter(|&n| !self.ledger.is_alive(n)).count()
    }
}

/// Records and summary of a complete run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<SlotRecord>,
    pub summary: Summary,
}

/// Runs `cfg.rounds` rounds, calling `observe` after every round with the
/// simulation state.
pub fn run_with<F: FnMut(&Simulation, &SlotRecord)>(cfg: &SimConfig, mut observe: F) -> Result<RunOutput, SimError> {
    let mut sim = Simulation::new(cfg.clone())?;
    let mut records = Vec::with_capacity(cfg.rounds);
    for _ in 0..cfg.rounds {
        let r = sim.run_round()?;
        observe(&sim, &r);
        records.push(r);
    }
    let summary = metrics::summarize(metrics::SummaryInputs {
        records: &records,
        initial: sim.ledger.total_initial(),
        residual: sim.ledger.total_residual(),
        energy: sim.ledger.cumulative(),
        dead_nodes: sim.dead_nodes(),
        subset_size: sim.size,
    });
    Ok(RunOutput { records, summary })
}

pub fn run_experiment(cfg: &SimConfig) -> Result<RunOutput, SimError> {
    run_with(cfg, |_, _| {})
}
