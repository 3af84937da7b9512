//! Special functions against the shared quadrature oracles, plus a Monte
//! Carlo energy detector.

mod common;

use common::{gamma_oracle, marcum_oracle, quantile_oracle};
use cusf::sensing_math::special::{gamma_q, marcum_q};
use cusf::sensing_math::{
    achieved_detection_prob, gaussian_q, gaussian_q_inv, local_detection_prob,
    local_false_alarm_prob, or_fuse, sensing_time, subset_size, DetectorParams, Probability, Snr,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn marcum_matches_quadrature() {
    let grid = [(1u32, 0.0, 1.5), (1, 1.0, 1.0), (2, 0.8, 3.0), (5, 2.0, 4.5), (10, 3.0, 5.0), (10, 0.5, 7.5), (3, 6.0, 2.0)];
    for &(u, a, b) in &grid {
        let got = marcum_q(u, a, b).unwrap();
        let want = marcum_oracle(u, a, b);
        assert!((got - want).abs() < 1e-9, "Q_{u}({a},{b}): {got} vs {want}");
    }
}

#[test]
fn regularized_gamma_matches_quadrature() {
    for &(a, x) in &[(1.0, 0.3), (2.5, 1.0), (5.0, 5.0), (10.0, 12.5), (20.0, 14.0), (3.0, 9.0)] {
        let got = gamma_q(a, x).unwrap();
        let want = gamma_oracle(a, x);
        assert!((got - want).abs() < 1e-10, "Q({a},{x}): {got} vs {want}");
    }
}

#[test]
fn gaussian_quantile_matches_bisection() {
    for &p in &[1e-6, 0.001, 0.03, 0.1, 0.5, 0.7, 0.95, 0.999] {
        let got = gaussian_q_inv(p).unwrap();
        let want = quantile_oracle(p);
        assert!((got - want).abs() < 1e-8, "Qinv({p}): {got} vs {want}");
        assert!((gaussian_q(got) - p).abs() < 1e-10 * p.max(1e-3));
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Energy detector statistic over `2u` real components with total signal
/// energy `2γ` (unit noise variance per component).
fn monte_carlo_detector(u: u32, snr: f64, eps: f64, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = (2.0 * snr).sqrt();
    let hits = (0..trials)
        .filter(|_| {
            let mut y = 0.0;
            for i in 0..2 * u {
                let x = standard_normal(&mut rng) + if i == 0 { mean } else { 0.0 };
                y += x * x;
            }
            y > eps
        })
        .count();
    hits as f64 / trials as f64
}

#[test]
fn detector_probabilities_match_monte_carlo() {
    let trials = 200_000;
    for &(u, snr_db, eps) in &[(5u32, 3.0, 18.0), (10, 0.0, 28.0), (2, 6.0, 9.0)] {
        let det = DetectorParams::new(eps, u, 3e5).unwrap();
        let snr = Snr::from_db(snr_db).unwrap();
        let pd = local_detection_prob(snr, &det).unwrap().get();
        let pf = local_false_alarm_prob(&det).unwrap().get();
        let mc_pd = monte_carlo_detector(u, snr.linear(), eps, trials, 11);
        let mc_pf = monte_carlo_detector(u, 0.0, eps, trials, 12);
        let tol = |p: f64| 4.5 * (p * (1.0 - p) / trials as f64).sqrt() + 1e-4;
        assert!((pd - mc_pd).abs() < tol(pd), "pd {pd} vs {mc_pd}");
        assert!((pf - mc_pf).abs() < tol(pf), "pf {pf} vs {mc_pf}");
    }
}

#[test]
fn or_fuse_matches_monte_carlo() {
    let locals = [0.2, 0.35, 0.5, 0.1];
    let probs: Vec<Probability> = locals.iter().map(|&v| Probability::new(v).unwrap()).collect();
    let fused = or_fuse(&probs).unwrap().get();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let trials = 200_000;
    let hits = (0..trials)
        .filter(|_| locals.iter().any(|&pj| rng.random::<f64>() < pj))
        .count();
    let mc = hits as f64 / trials as f64;
    assert!((fused - mc).abs() < 4.5 * (fused * (1.0 - fused) / trials as f64).sqrt());
}

fn prob() -> impl Strategy<Value = f64> {
    0.001f64..0.999
}

proptest! {
    #[test]
    fn marcum_is_a_probability_and_monotone(u in 1u32..20, a in 0.0f64..8.0, b in 0.0f64..12.0, db in 0.01f64..2.0, da in 0.01f64..2.0) {
        let q = marcum_q(u, a, b).unwrap();
        prop_assert!((0.0..=1.0).contains(&q));
        prop_assert!(marcum_q(u, a, b + db).unwrap() <= q + 1e-12);
        prop_assert!(marcum_q(u, a + da, b).unwrap() >= q - 1e-12);
    }

    #[test]
    fn gamma_q_is_decreasing(a in 0.2f64..30.0, x in 0.0f64..40.0, dx in 0.01f64..3.0) {
        let q = gamma_q(a, x).unwrap();
        prop_assert!((0.0..=1.0).contains(&q));
        prop_assert!(gamma_q(a, x + dx).unwrap() <= q + 1e-12);
    }

    #[test]
    fn fusion_dominates_each_local(ps in prop::collection::vec(0.0f64..=1.0, 1..12)) {
        let probs: Vec<Probability> = ps.iter().map(|&v| Probability::new(v).unwrap()).collect();
        let fused = or_fuse(&probs).unwrap().get();
        prop_assert!((0.0..=1.0).contains(&fused));
        for &v in &ps {
            prop_assert!(fused >= v - 1e-12);
        }
    }

    #[test]
    fn subset_size_honours_bounds(qd in prob(), qf in prob(), pd in prob(), pf in prob()) {
        let p = |v| Probability::new(v).unwrap();
        let r = subset_size(p(qd), p(qf), p(pd), p(pf)).unwrap();
        prop_assert!(r.s >= 1);
        prop_assert!((1.0 - pd).powi(r.detection_bound as i32) <= 1.0 - qd);
        if r.feasible {
            prop_assert!((1.0 - pf).powi(r.s as i32) >= 1.0 - qf);
            prop_assert!((1.0 - pd).powi(r.s as i32) <= 1.0 - qd);
            prop_assert!((1.0 - pf).powi(r.s as i32 + 1) < 1.0 - qf);
        }
    }

    #[test]
    fn sensing_time_inverts(snr_db in -20.0f64..0.0, pf in 0.001f64..0.5, pd in 0.5f64..0.999) {
        let snr = Snr::from_db(snr_db).unwrap();
        let p = |v| Probability::new(v).unwrap();
        let tau = sensing_time(snr, p(pf), p(pd), 3e5).unwrap();
        prop_assert!(tau >= 0.0);
        let back = achieved_detection_prob(snr, p(pf), tau, 3e5).unwrap().get();
        prop_assert!((back - pd).abs() < 1e-6);
    }
}
