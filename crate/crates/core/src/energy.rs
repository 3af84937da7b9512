//! First-order radio model and the per-node, per-stage energy ledger.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    /// Electronics energy, J/bit.
    pub e_elec: f64,
    /// Free-space amplifier energy, J/bit/m².
    pub e_amp: f64,
    /// Sensing power, W.
    pub p_sense: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams { e_elec: 50e-9, e_amp: 10e-12, p_sense: 0.1 }
    }
}

pub fn tx_energy(bits: u64, d: f64, radio: &RadioParams) -> f64 {
    let l = bits as f64;
    l * radio.e_elec + l * radio.e_amp * d * d
}

pub fn rx_energy(bits: u64, radio: &RadioParams) -> f64 {
    bits as f64 * radio.e_elec
}

/// One ADV receive, one join/leave transmit and one schedule receive.
pub fn setup_energy(bits: u64, d: f64, radio: &RadioParams) -> f64 {
    2.0 * rx_energy(bits, radio) + tx_energy(bits, d, radio)
}

pub fn sensing_energy(tau: f64, radio: &RadioParams) -> f64 {
    radio.p_sense * tau
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Setup,
    Sense,
    Send,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StageTotals {
    pub setup: f64,
    pub sense: f64,
    pub send: f64,
}

impl StageTotals {
    pub fn total(&self) -> f64 {
        self.setup + self.sense + self.send
    }

    fn slot(&mut self, stage: Stage) -> &mut f64 {
        match stage {
            Stage::Setup => &mut self.setup,
            Stage::Sense => &mut self.sense,
            Stage::Send => &mut self.send,
        }
    }

    pub fn add(&mut self, other: &StageTotals) {
        self.setup += other.setup;
        self.sense += other.sense;
        self.send += other.send;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Charge {
    Applied,
    /// The node reached zero on this charge.
    Depleted,
    /// The node was already dead; nothing was charged.
    DeadNoop,
}

/// Residual energy of every node plus per-round and cumulative stage sums.
#[derive(Debug, Clone)]
pub struct EnergyLedger {
    e0: f64,
    residual: Vec<f64>,
    round_nodes: Vec<StageTotals>,
    round: StageTotals,
    cumulative: StageTotals,
    dead_charges: u64,
}

impl EnergyLedger {
    pub fn new(nodes: usize, e0: f64) -> Self {
        EnergyLedger {
            e0,
            residual: vec![e0; nodes],
            round_nodes: vec![StageTotals::default(); nodes],
            round: StageTotals::default(),
            cumulative: StageTotals::default(),
            dead_charges: 0,
        }
    }

    pub fn initial_energy(&self) -> f64 {
        self.e0
    }

    pub fn residual(&self, node: usize) -> f64 {
        self.residual[node]
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residual
    }

    pub fn is_alive(&self, node: usize) -> bool {
        self.residual[node] > 0.0
    }

    pub fn total_residual(&self) -> f64 {
        self.residual.iter().sum()
    }

    pub fn total_initial(&self) -> f64 {
        self.e0 * self.residual.len() as f64
    }

    /// Starts a new round's accumulators.
    pub fn begin_round(&mut self) {
        self.round = StageTotals::default();
        self.round_nodes.iter_mut().for_each(|t| *t = StageTotals::default());
    }

    /// Debits `amount` joules from `node` under `stage`, clamping at zero.
    pub fn charge(&mut self, node: usize, stage: Stage, amount: f64) -> Charge {
        debug_assert!(amount >= 0.0);
        if amount == 0.0 {
            return if self.is_alive(node) { Charge::Applied } else { Charge::DeadNoop };
        }
        let left = self.residual[node];
        if left <= 0.0 {
            self.dead_charges += 1;
            return Charge::DeadNoop;
        }
        let taken = amount.min(left);
        self.residual[node] = left - taken;
        *self.round_nodes[node].slot(stage) += taken;
        *self.round.slot(stage) += taken;
        *self.cumulative.slot(stage) += taken;
        if self.residual[node] <= 0.0 {
            self.residual[node] = 0.0;
            Charge::Depleted
        } else {
            Charge::Applied
        }
    }

    pub fn round_totals(&self) -> StageTotals {
        self.round
    }

    pub fn round_node_totals(&self, node: usize) -> StageTotals {
        self.round_nodes[node]
    }

    pub fn cumulative(&self) -> StageTotals {
        self.cumulative
    }

    /// Charges attempted against nodes that were already dead.
    pub fn dead_charges(&self) -> u64 {
        self.dead_charges
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-15 + 1e-12 * b.abs()
    }

    #[test]
    fn radio_examples() {
        let r = RadioParams::default();
        assert_eq!(tx_energy(0, 10.0, &r), 0.0);
        assert!(close(tx_energy(4000, 10.0, &r), 204e-6));
        assert_eq!(tx_energy(4000, 0.0, &r), 4000.0 * r.e_elec);
        assert!(close(rx_energy(4000, &r), 200e-6));
        assert!(rx_energy(4000, &r) < tx_energy(4000, 0.5, &r));
        assert!(close(setup_energy(4000, 10.0, &r), 604e-6));
        assert_eq!(setup_energy(0, 10.0, &r), 0.0);
    }

    #[test]
    fn sensing_examples() {
        let r = RadioParams::default();
        assert_eq!(sensing_energy(0.0, &r), 0.0);
        assert!(close(sensing_energy(1e-3, &r), 100e-6));
        let total: f64 = [1e-3, 1e-3, 2e-3].iter().map(|&t| sensing_energy(t, &r)).sum();
        assert!(close(total, 400e-6));
    }

    #[test]
    fn ledger_bookkeeping() {
        let mut l = EnergyLedger::new(2, 1.0);
        l.begin_round();
        assert_eq!(l.charge(0, Stage::Setup, 0.0), Charge::Applied);
        assert_eq!(l.residual(0), 1.0);
        l.charge(0, Stage::Sense, 0.25);
        l.charge(1, Stage::Send, 0.125);
        l.charge(0, Stage::Setup, 0.0625);
        let t = l.round_totals();
        assert_eq!((t.setup, t.sense, t.send), (0.0625, 0.25, 0.125));
        assert_eq!(l.total_residual() + t.total(), l.total_initial());
        assert_eq!(l.round_node_totals(0).total(), 0.3125);
    }

    #[test]
    fn depletion_then_noop() {
        let mut l = EnergyLedger::new(1, 0.5);
        assert_eq!(l.charge(0, Stage::Sense, 0.25), Charge::Applied);
        assert_eq!(l.charge(0, Stage::Send, 0.25), Charge::Depleted);
        assert!(!l.is_alive(0));
        assert_eq!(l.charge(0, Stage::Send, 0.1), Charge::DeadNoop);
        assert_eq!(l.dead_charges(), 1);
        assert_eq!(l.cumulative().total(), 0.5);
    }

    #[test]
    fn overdraw_is_clamped() {
        let mut l = EnergyLedger::new(1, 0.5);
        assert_eq!(l.charge(0, Stage::Sense, 2.0), Charge::Depleted);
        assert_eq!(l.residual(0), 0.0);
        assert_eq!(l.cumulative().sense, 0.5);
    }
}
