//! Browser bindings for the simulator. Every export returns a JSON string;
//! failures come back as `{"error": "..."}`.

use serde::Serialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use cusf::config::{Mode, SimConfig, SleepPolicy};
use cusf::engine::run_experiment;
use cusf::pu::{estimate_sleep_slots, g_cumulative, pr_gis, pr_nz, PuHistory};
use cusf::sensing_math::{achieved_detection_prob, sensing_time, Probability, Snr};

/// Longest run the comparison export accepts, to keep the page responsive.
pub const MAX_ROUNDS: usize = 2000;

fn to_json(r: Result<Value, String>) -> String {
    r.unwrap_or_else(|e| json!({ "error": e })).to_string()
}

fn prob(name: &str, v: f64) -> Result<Probability, String> {
    Probability::new(v).map_err(|e| format!("{name}: {e}"))
}

#[derive(Serialize)]
struct RunProbability {
    i: usize,
    g: usize,
    g_s: usize,
    pr: f64,
}

/// Run statistics and sleep estimate for a busy/idle history such as
/// `"101101110110001111101"`.
pub fn sleep_estimate_value(bits: &str) -> Result<Value, String> {
    let bits: String = bits.chars().filter(|c| !c.is_whitespace()).collect();
    let h: PuHistory = bits.parse().map_err(|e| format!("{e}"))?;
    let s = h.run_stats();
    let runs: Vec<RunProbability> = if s.has_long_runs() && s.n1 > 0 {
        (s.n_min..=s.n_max)
            .map(|i| RunProbability {
                i,
                g: s.g[&i],
                g_s: g_cumulative(&s, i).unwrap_or(0),
                pr: pr_gis(&s, i).map(|p| p.get()).unwrap_or(0.0),
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(json!({
        "np": s.np,
        "n1": s.n1,
        "n_min": s.n_min,
        "n_max": s.n_max,
        "pr_nz": pr_nz(&s).ok().map(|p| p.get()),
        "runs": runs,
        "n_s": estimate_sleep_slots(&s),
    }))
}

/// Sensing time against the per-node detection target, and detection
/// probability against sensing time up to `tau_max`.
pub fn sensing_curves_value(snr_db: f64, pf: f64, f_s: f64, tau_max: f64) -> Result<Value, String> {
    let snr = Snr::from_db(snr_db).map_err(|e| e.to_string())?;
    let pf_p = prob("pf", pf)?;
    if !(tau_max > 0.0 && tau_max.is_finite()) {
        return Err("tau_max must be positive".into());
    }
    let steps = 60;
    let mut tau_for_pd = Vec::with_capacity(steps);
    for k in 0..steps {
        let pd = 0.05 + 0.94 * k as f64 / (steps - 1) as f64;
        let tau = sensing_time(snr, pf_p, prob("pd", pd)?, f_s).map_err(|e| e.to_string())?;
        tau_for_pd.push([pd, tau]);
    }
    let mut pd_for_tau = Vec::with_capacity(steps);
    for k in 0..steps {
        let tau = tau_max * k as f64 / (steps - 1) as f64;
        let pd = achieved_detection_prob(snr, pf_p, tau, f_s).map_err(|e| e.to_string())?;
        pd_for_tau.push([tau, pd.get()]);
    }
    Ok(json!({ "tau_for_pd": tau_for_pd, "pd_for_tau": pd_for_tau }))
}

/// Subset sensing against the two comparison architectures over a short run
/// at the default parameters: residual energy per round and final metrics.
pub fn compare_modes_value(rounds: usize, seed: u64) -> Result<Value, String> {
    if rounds == 0 || rounds > MAX_ROUNDS {
        return Err(format!("rounds must be in 1..={MAX_ROUNDS}"));
    }
    let mut series = Vec::new();
    for mode in [Mode::Cusf, Mode::SendoraLike, Mode::LeachcLike] {
        let mut cfg = SimConfig::default();
        cfg.rounds = rounds;
        cfg.seed = seed;
        cfg.mode = mode;
        if mode != Mode::Cusf {
            cfg.sleep = SleepPolicy::None;
        }
        let out = run_experiment(&cfg).map_err(|e| e.to_string())?;
        let s = &out.summary;
        series.push(json!({
            "mode": mode.to_string(),
            "residual_j": out.records.iter().map(|r| r.residual_j).collect::<Vec<_>>(),
            "total_energy_j": s.total_energy_j,
            "setup_share": s.setup_share,
            "mean_delay_s": s.mean_delay_s,
            "detection_probability": s.detection_probability,
        }));
    }
    Ok(json!({ "rounds": rounds, "seed": seed, "modes": series }))
}

#[wasm_bindgen]
pub fn sleep_estimate(bits: &str) -> String {
    to_json(sleep_estimate_value(bits))
}

#[wasm_bindgen]
pub fn sensing_curves(snr_db: f64, pf: f64, f_s: f64, tau_max: f64) -> String {
    to_json(sensing_curves_value(snr_db, pf, f_s, tau_max))
}

#[wasm_bindgen]
pub fn compare_modes(rounds: u32, seed: u32) -> String {
    to_json(compare_modes_value(rounds as usize, u64::from(seed)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use cusf::sensing_math::{gaussian_q, gaussian_q_inv};

    #[test]
    fn worked_history() {
        let v = sleep_estimate_value("1011011101 10001111101").unwrap();
        assert_eq!(v["n_s"], 2);
        assert_eq!(v["np"], 6);
        assert_eq!(v["runs"][0]["g_s"], 5);
    }

    #[test]
    fn bad_input_is_an_error_object() {
        let v: Value = serde_json::from_str(&sleep_estimate("10a1")).unwrap();
        assert!(v["error"].is_string());
        let v: Value = serde_json::from_str(&sensing_curves(-10.0, 1.5, 3e5, 2e-3)).unwrap();
        assert!(v["error"].is_string());
        assert!(compare_modes_value(0, 1).is_err());
    }

    #[test]
    fn curves_are_monotone() {
        let v = sensing_curves_value(-15.0, 0.03, 3e5, 2e-3).unwrap();
        let taus: Vec<f64> = v["tau_for_pd"].as_array().unwrap().iter().map(|p| p[1].as_f64().unwrap()).collect();
        assert!(taus.windows(2).all(|w| w[1] >= w[0]));
        let pds: Vec<f64> = v["pd_for_tau"].as_array().unwrap().iter().map(|p| p[1].as_f64().unwrap()).collect();
        assert!(pds.windows(2).all(|w| w[1] >= w[0]));
        // At zero sensing time the curve starts at Q(Qinv(pf)/sqrt(2g+1)), not pf.
        let g = Snr::from_db(-15.0).unwrap().linear();
        let at_zero = gaussian_q(gaussian_q_inv(0.03).unwrap() / (2.0 * g + 1.0).sqrt());
        assert!((pds[0] - at_zero).abs() < 1e-12);
    }

    #[test]
    fn comparison_has_three_series() {
        let v = compare_modes_value(30, 1).unwrap();
        let modes = v["modes"].as_array().unwrap();
        assert_eq!(modes.len(), 3);
        assert_eq!(modes[0]["residual_j"].as_array().unwrap().len(), 30);
    }
}
