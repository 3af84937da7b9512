use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cusf::pu::{estimate_sleep_slots, pr_gis, pr_nz, PuHistory, RunStats};
use cusf::subsets::form_subsets;
use cusf::topology::{
    check_clusters, form_clusters, move_cr, place_network, update_clusters, Area, MessageSizing, PlacementParams,
    Position,
};

fn bits() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(prop::bool::weighted(0.6).prop_map(u8::from), 0..80)
}

fn placement(nodes: usize, crs: usize) -> PlacementParams {
    PlacementParams {
        nodes,
        crs,
        area: Area { width: 100.0, height: 100.0 },
        snr_db: (-25.0, -5.0),
        history_window: 50,
    }
}

const SIZING: MessageSizing = MessageSizing::Fields { header: 8, id: 16, coord: 32, value: 32 };

proptest! {
    #[test]
    fn run_stats_count_every_busy_slot(h in bits()) {
        let s = RunStats::from_bits(h.iter().copied());
        prop_assert_eq!(s.n1, h.iter().filter(|&&b| b == 1).count());
        let starts = (0..h.len()).filter(|&i| h[i] == 1 && (i == 0 || h[i - 1] == 0)).count();
        prop_assert_eq!(s.np, starts);
        let long: usize = s.g.values().sum();
        let long_slots: usize = s.g.iter().map(|(&i, &g)| i * g).sum();
        // The runs not counted in G are singletons.
        prop_assert_eq!(s.n1 - long_slots, s.np - long);
        if s.has_long_runs() {
            prop_assert!(s.g[&s.n_min] > 0 && s.g[&s.n_max] > 0);
            prop_assert_eq!(s.g.len(), s.n_max - s.n_min + 1);
        } else {
            prop_assert!(s.g.is_empty());
        }
    }

    #[test]
    fn sleep_estimate_lies_in_run_range(h in bits()) {
        let s = RunStats::from_bits(h.iter().copied());
        let n = estimate_sleep_slots(&s);
        prop_assert!(n == 0 || (s.n_min..=s.n_max).contains(&n));
        if n > 0 {
            let threshold = pr_nz(&s).unwrap().get();
            prop_assert!(pr_gis(&s, n).unwrap().get() > threshold);
            for i in s.n_min..n {
                prop_assert!(pr_gis(&s, i).unwrap().get() <= threshold);
            }
        }
    }

    #[test]
    fn history_keeps_last_window(h in bits(), w in 1usize..60) {
        let mut hist = PuHistory::new(w);
        for &b in &h {
            hist.push(b);
            prop_assert!(hist.len() <= w);
        }
        let tail: Vec<u8> = h.iter().copied().skip(h.len().saturating_sub(w)).collect();
        prop_assert_eq!(hist.bits().collect::<Vec<_>>(), tail);
    }

    #[test]
    fn clusters_are_consistent_after_moves(seed in any::<u64>(), rounds in 1usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = placement(60, 4);
        let (mut nodes, mut crs) = place_network(&p, &mut rng);
        let residual = vec![1.0; nodes.len()];
        let radius = 20.0;
        form_clusters(&mut nodes, &mut crs, &residual, radius, &SIZING);
        prop_assert!(check_clusters(&nodes, &crs, radius).is_ok());
        for _ in 0..rounds {
            for m in 0..crs.len() {
                crs[m].pos = move_cr(crs[m].pos, &p.area, 20.0, &mut rng);
                prop_assert!(p.area.contains(&crs[m].pos));
                update_clusters(&mut nodes, &mut crs, &residual, m, radius, &SIZING);
                check_clusters(&nodes, &crs, radius).map_err(TestCaseError::fail)?;
            }
        }
        // Every CR advertised from its final position, so a node left
        // unclustered has no CR in range.
        for n in nodes.iter().filter(|n| n.cluster.is_none()) {
            prop_assert!(crs.iter().all(|c| c.pos.distance(&n.pos) > radius));
        }
    }

    #[test]
    fn subsets_partition_the_cluster(seed in any::<u64>(), s in 1usize..7, r_s in 3.0f64..15.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (nodes, _) = place_network(&placement(30, 1), &mut rng);
        let members: Vec<usize> = (0..nodes.len()).filter(|i| i % 3 != 0).collect();
        let residual: Vec<f64> = (0..nodes.len()).map(|i| 1.0 + (i % 7) as f64).collect();
        let subsets = form_subsets(&members, &nodes, &residual, r_s, s);
        prop_assert_eq!(subsets.len(), (members.len() / s).max(1));
        let mut all: Vec<usize> = subsets.iter().flat_map(|x| x.members.iter().copied()).collect();
        all.sort_unstable();
        prop_assert_eq!(&all, &members);
        for x in &subsets[..subsets.len() - 1] {
            prop_assert_eq!(x.members.len(), s);
        }
        for x in &subsets {
            let e: f64 = x.members.iter().map(|&m| residual[m]).sum();
            prop_assert!((x.total_energy - e).abs() < 1e-12);
        }
    }
}

#[test]
fn corner_move_stays_on_boundary() {
    let area = Area { width: 100.0, height: 100.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let p = move_cr(Position::new(0.0, 0.0), &area, 20.0, &mut rng);
        assert!(area.contains(&p));
        assert!(p.distance(&Position::new(0.0, 0.0)) <= 20.0 + 1e-9);
    }
}
