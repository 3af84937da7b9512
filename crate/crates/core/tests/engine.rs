use cusf::config::{Mode, SimConfig, SleepPolicy};
use cusf::engine::{run_experiment, run_with, Simulation};
use cusf::engine::metrics::decision_pairs;
use cusf::output::rounds_csv;
use cusf::topology::check_clusters;

fn cfg(rounds: usize, seed: u64) -> SimConfig {
    let mut c = SimConfig::default();
    c.rounds = rounds;
    c.seed = seed;
    c
}

#[test]
fn same_seed_same_csv() {
    let c = cfg(300, 7);
    let a = run_experiment(&c).unwrap();
    let b = run_experiment(&c).unwrap();
    assert_eq!(rounds_csv(c.crs, &a.records), rounds_csv(c.crs, &b.records));
    let other = run_experiment(&cfg(300, 8)).unwrap();
    assert_ne!(rounds_csv(c.crs, &a.records), rounds_csv(c.crs, &other.records));
}

#[test]
fn energy_is_conserved_every_round() {
    for mode in [Mode::Cusf, Mode::LeachcLike, Mode::SendoraLike] {
        let mut c = cfg(400, 3);
        c.mode = mode;
        if mode != Mode::Cusf {
            c.sleep = SleepPolicy::None;
        }
        let out = run_experiment(&c).unwrap();
        let initial = c.e0 * c.nodes as f64;
        let mut consumed = 0.0;
        for r in &out.records {
            consumed += r.energy.total();
            let rel = (initial - r.residual_j - consumed).abs() / initial;
            assert!(rel < 1e-12, "{mode} round {}: residual {} consumed {consumed}", r.round, r.residual_j);
            let by_cluster: f64 = r.clusters.iter().map(|c| c.energy.total()).sum();
            assert!(by_cluster <= r.energy.total() * (1.0 + 1e-12));
        }
        let s = &out.summary;
        assert!((s.initial_energy_j - s.residual_energy_j - s.total_energy_j).abs() < 1e-9);
    }
}

#[test]
fn partitions_hold_every_round() {
    let c = cfg(500, 11);
    let radius = c.join_radius();
    run_with(&c, |sim, r| {
        check_clusters(sim.nodes(), sim.crs(), radius).unwrap_or_else(|e| panic!("round {}: {e}", r.round));
        for cr in sim.crs() {
            let subs = sim.subsets(cr.id);
            if let Some(last) = subs.len().checked_sub(1) {
                for s in &subs[..last] {
                    assert_eq!(s.members.len(), sim.subset_size().s);
                }
            }
        }
    })
    .unwrap();
}

#[test]
fn slept_rounds_spend_nothing_on_sensing() {
    let mut c = cfg(400, 5);
    c.sleep = SleepPolicy::AllSleepNs;
    let out = run_experiment(&c).unwrap();
    let slept: Vec<_> = out.records.iter().flat_map(|r| r.clusters.iter()).filter(|c| c.slept).collect();
    assert!(!slept.is_empty());
    for c in slept {
        assert_eq!(c.energy.sense, 0.0);
        assert_eq!(c.energy.send, 0.0);
        assert_eq!(c.decision, Some(1));
        assert_eq!(c.selected, 0);
    }
}

#[test]
fn zero_rounds_is_empty() {
    let out = run_experiment(&cfg(0, 1)).unwrap();
    assert!(out.records.is_empty());
    assert_eq!(out.summary.total_energy_j, 0.0);
    assert_eq!(out.summary.mse, None);
}

#[test]
fn detection_meets_target_and_false_alarms_stay_bounded() {
    let c = cfg(3000, 2);
    let out = run_experiment(&c).unwrap();
    let pairs = decision_pairs(&out.records);
    let busy = pairs.iter().filter(|p| p.0 == 1).count() as f64;
    let idle = pairs.iter().filter(|p| p.0 == 0).count() as f64;
    let qd = out.summary.detection_probability.unwrap();
    let qf = out.summary.false_alarm_rate.unwrap();
    // Binomial 3σ slack around the design targets.
    assert!(qd >= c.qd_min - 3.0 * (c.qd_min * (1.0 - c.qd_min) / busy).sqrt(), "qd {qd}");
    assert!(qf <= c.qf_max + 3.0 * (c.qf_max * (1.0 - c.qf_max) / idle).sqrt(), "qf {qf}");
}

#[test]
fn simulation_steps_match_batch_run() {
    let c = cfg(50, 9);
    let batch = run_experiment(&c).unwrap();
    let mut sim = Simulation::new(c.clone()).unwrap();
    for r in &batch.records {
        assert_eq!(&sim.run_round().unwrap(), r);
    }
    assert_eq!(sim.round(), 50);
}

#[test]
fn invalid_config_is_rejected() {
    let mut c = cfg(10, 1);
    c.r_s = 30.0;
    assert!(Simulation::new(c).is_err());
}

#[test]
fn farther_moves_send_more_control_messages() {
    let mut last = 0;
    for d in [5.0, 10.0, 20.0, 40.0] {
        let mut c = cfg(1000, 1);
        c.d_cr = d;
        let sent: usize = run_experiment(&c).unwrap().records.iter().map(|r| r.messages).sum();
        assert!(sent >= last, "d_cr {d}: {sent} < {last}");
        last = sent;
    }
}
