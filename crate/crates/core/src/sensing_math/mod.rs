//! Detection and false-alarm probabilities, OR-rule fusion, subset sizing and
//! the SNR-dependent sensing time.

pub mod special;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use special::{gaussian_q, gaussian_q_inv};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MathError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("fusion needs at least one local probability")]
    EmptyFusion,
}

/// A value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self, MathError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(MathError::Domain(format!("probability out of [0,1]: {value}")))
        }
    }

    /// Clamps into `[0, 1]`; for values produced by numerics that may drift by
    /// an ulp.
    pub(crate) fn saturating(value: f64) -> Self {
        Probability(value.clamp(0.0, 1.0))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Self {
        Probability(1.0 - self.0)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Signal-to-noise ratio, stored linearly.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Snr {
    linear: f64,
}

impl Snr {
    pub fn from_linear(linear: f64) -> Result<Self, MathError> {
        if linear > 0.0 && linear.is_finite() {
            Ok(Snr { linear })
        } else {
            Err(MathError::Domain(format!("SNR must be positive, got {linear}")))
        }
    }

    pub fn from_db(db: f64) -> Result<Self, MathError> {
        Snr::from_linear(10f64.powf(db / 10.0))
    }

    pub fn linear(self) -> f64 {
        self.linear
    }

    pub fn db(self) -> f64 {
        10.0 * self.linear.log10()
    }
}

/// Energy-detector settings: threshold, sample count and sampling rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    pub epsilon: f64,
    pub samples: u32,
    pub f_s: f64,
}

impl DetectorParams {
    pub fn new(epsilon: f64, samples: u32, f_s: f64) -> Result<Self, MathError> {
        if !(epsilon >= 0.0) || samples == 0 || !(f_s > 0.0) {
            return Err(MathError::Domain(format!(
                "detector needs epsilon >= 0, u >= 1, f_s > 0 (got {epsilon}, {samples}, {f_s})"
            )));
        }
        Ok(DetectorParams { epsilon, samples, f_s })
    }
}

/// Result of sizing a subset against the global detection / false-alarm
/// targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetSize {
    /// Largest subset that keeps the fused false-alarm rate within budget.
    pub s: usize,
    /// Smallest subset that guarantees the fused detection target.
    pub detection_bound: usize,
    pub feasible: bool,
}

/// Number of subsets a cluster splits into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetCount {
    pub k: usize,
    /// Set when the cluster is smaller than one full subset.
    pub constraint_unmet: bool,
}

/// Generalized Marcum Q-function `Q_u(a, b)`.
pub fn marcum_q(u: u32, a: f64, b: f64) -> Result<Probability, MathError> {
    special::marcum_q(u, a, b).map(Probability::saturating)
}

/// `Γ(u, x) / Γ(u)`.
pub fn regularized_upper_gamma(u: f64, x: f64) -> Result<Probability, MathError> {
    special::gamma_q(u, x).map(Probability::saturating)
}

/// Energy-detector detection probability `Q_u(√(2γ), √ε)`.
pub fn local_detection_prob(snr: Snr, det: &DetectorParams) -> Result<Probability, MathError> {
    marcum_q(det.samples, (2.0 * snr.linear()).sqrt(), det.epsilon.sqrt())
}

/// Energy-detector false-alarm probability `Γ(u, ε/2) / Γ(u)`.
pub fn local_false_alarm_prob(det: &DetectorParams) -> Result<Probability, MathError> {
    regularized_upper_gamma(f64::from(det.samples), det.epsilon / 2.0)
}

/// OR-rule fusion: `1 − Π(1 − p_j)`.
pub fn or_fuse(locals: &[Probability]) -> Result<Probability, MathError> {
    if locals.is_empty() {
        return Err(MathError::EmptyFusion);
    }
    let miss: f64 = locals.iter().map(|p| 1.0 - p.get()).product();
    Ok(Probability::saturating(1.0 - miss))
}

fn open_unit(name: &str, p: Probability) -> Result<f64, MathError> {
    let v = p.get();
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(MathError::Domain(format!("{name} must lie in (0,1), got {v}")))
    }
}

/// Sizes a subset from the per-node bounds `pd_min`, `pf_max` and the global
/// targets.
///
/// The false-alarm side is taken as the ceiling of the log ratio and then
/// stepped down by one when `(1 − pf_max)^s` falls below `1 − qf_max`, so the
/// returned `s` is the largest size honouring the false-alarm budget. The
/// detection side is the smallest size with `(1 − pd_min)^s ≤ 1 − qd_min`.
pub fn subset_size(
    qd_min: Probability,
    qf_max: Probability,
    pd_min: Probability,
    pf_max: Probability,
) -> Result<SubsetSize, MathError> {
    let qd = open_unit("qd_min", qd_min)?;
    let qf = open_unit("qf_max", qf_max)?;
    let pd = open_unit("pd_min", pd_min)?;
    let pf = open_unit("pf_max", pf_max)?;

    let fa_ratio = (1.0 - qf).ln() / (1.0 - pf).ln();
    let mut s = fa_ratio.ceil().max(1.0) as usize;
    let fa_holds = |n: usize| (1.0 - pf).powi(n as i32) >= 1.0 - qf;
    let mut fa_ok = true;
    if !fa_holds(s) {
        if s > 1 {
            s -= 1;
        } else {
            fa_ok = false;
        }
    }

    let det_ratio = (1.0 - qd).ln() / (1.0 - pd).ln();
    let mut detection_bound = det_ratio.ceil().max(1.0) as usize;
    if (1.0 - pd).powi(detection_bound as i32) > 1.0 - qd {
        detection_bound += 1;
    }

    Ok(SubsetSize {
        s,
        detection_bound,
        feasible: fa_ok && detection_bound <= s,
    })
}

/// `K = ⌊C / S⌋`, with a single all-node subset when the cluster is smaller
/// than `S`.
pub fn num_subsets(c: usize, s: usize) -> SubsetCount {
    let s = s.max(1);
    if c >= s {
        SubsetCount { k: c / s, constraint_unmet: false }
    } else {
        SubsetCount { k: 1, constraint_unmet: true }
    }
}

fn check_rate(f_s: f64) -> Result<(), MathError> {
    if f_s > 0.0 && f_s.is_finite() {
        Ok(())
    } else {
        Err(MathError::Domain(format!("sampling rate must be positive, got {f_s}")))
    }
}

/// Sensing duration (seconds) needed to reach `pd_target` at false-alarm
/// rate `pf_target`:
///
/// `τ = ((Q⁻¹(pf) − Q⁻¹(pd)·√(2γ + 1)) / (√f_s · γ))²`
///
/// A target already met with no samples (negative numerator) yields `0`.
pub fn sensing_time(
    snr: Snr,
    pf_target: Probability,
    pd_target: Probability,
    f_s: f64,
) -> Result<f64, MathError> {
    let pf = open_unit("pf_target", pf_target)?;
    let pd = open_unit("pd_target", pd_target)?;
    check_rate(f_s)?;
    let g = snr.linear();
    let num = gaussian_q_inv(pf)? - gaussian_q_inv(pd)? * (2.0 * g + 1.0).sqrt();
    if num <= 0.0 {
        return Ok(0.0);
    }
    let root = num / (f_s.sqrt() * g);
    Ok(root * root)
}

/// Detection probability reached after sensing for `tau` seconds:
/// `Q((Q⁻¹(pf) − √(τ f_s)·γ) / √(2γ + 1))`.
pub fn achieved_detection_prob(
    snr: Snr,
    pf_target: Probability,
    tau: f64,
    f_s: f64,
) -> Result<Probability, MathError> {
    let pf = open_unit("pf_target", pf_target)?;
    check_rate(f_s)?;
    if !(tau >= 0.0) {
        return Err(MathError::Domain(format!("sensing time must be >= 0, got {tau}")));
    }
    let g = snr.linear();
    let arg = (gaussian_q_inv(pf)? - (tau * f_s).sqrt() * g) / (2.0 * g + 1.0).sqrt();
    Ok(Probability::saturating(gaussian_q(arg)))
}
