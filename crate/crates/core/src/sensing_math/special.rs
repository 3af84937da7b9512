//! Special functions backing the detection formulas.
//!
//! Everything here works on plain `f64` and reports domain violations through
//! [`MathError`]. The typed wrappers in the parent module attach the
//! [`Probability`](super::Probability) newtype.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use super::MathError;

const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const MAX_ITER: usize = 100_000;

/// Lanczos coefficients for g = 7, n = 9.
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1−x) = π / sin(πx)
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// log of the common prefactor `x^a e^{-x} / Γ(a)`.
fn ln_prefactor(a: f64, x: f64) -> f64 {
    a * x.ln() - x - ln_gamma(a)
}

/// Lower regularized gamma by its power series; valid for any `x ≥ 0`,
/// fast for `x < a + 1`.
fn lower_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * ln_prefactor(a, x).exp()
}

/// Upper regularized gamma by continued fraction (modified Lentz); fast for
/// `x > a + 1`.
fn upper_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    ln_prefactor(a, x).exp() * h
}

/// Regularized upper incomplete gamma `Γ(a, x) / Γ(a)`.
pub fn gamma_q(a: f64, x: f64) -> Result<f64, MathError> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(MathError::Domain(format!("gamma shape must be > 0, got {a}")));
    }
    if !(x >= 0.0) {
        return Err(MathError::Domain(format!("gamma argument must be >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let q = if x < a + 1.0 {
        1.0 - lower_series(a, x)
    } else {
        upper_fraction(a, x)
    };
    Ok(q.clamp(0.0, 1.0))
}

/// Regularized lower incomplete gamma `γ(a, x) / Γ(a)`.
pub fn gamma_p(a: f64, x: f64) -> Result<f64, MathError> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(MathError::Domain(format!("gamma shape must be > 0, got {a}")));
    }
    if !(x >= 0.0) {
        return Err(MathError::Domain(format!("gamma argument must be >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let p = if x < a + 1.0 {
        lower_series(a, x)
    } else {
        1.0 - upper_fraction(a, x)
    };
    Ok(p.clamp(0.0, 1.0))
}

/// Generalized Marcum Q-function `Q_u(a, b)` of integer order `u ≥ 1`.
///
/// Evaluated as the Poisson mixture
/// `Σ_k e^{-λ} λ^k / k! · Q(u + k, b²/2)` with `λ = a²/2`, where the gamma
/// tail is advanced with the recurrence
/// `Q(s + 1, y) = Q(s, y) + y^s e^{-y} / Γ(s + 1)`. The sum stops once the
/// Poisson weights are past their mode and the current term is below 1e-16.
pub fn marcum_q(u: u32, a: f64, b: f64) -> Result<f64, MathError> {
    if u == 0 {
        return Err(MathError::Domain("Marcum Q order must be >= 1".into()));
    }
    if !(a >= 0.0) || !a.is_finite() {
        return Err(MathError::Domain(format!("Marcum Q requires a >= 0, got {a}")));
    }
    if !(b >= 0.0) {
        return Err(MathError::Domain(format!("Marcum Q requires b >= 0, got {b}")));
    }
    if b == 0.0 {
        return Ok(1.0);
    }
    if b.is_infinite() {
        return Ok(0.0);
    }
    let lambda = 0.5 * a * a;
    let y = 0.5 * b * b;
    let s0 = f64::from(u);
    let mut tail = gamma_q(s0, y)?;
    if lambda == 0.0 {
        return Ok(tail);
    }

    let ln_lambda = lambda.ln();
    let ln_y = y.ln();
    let mut sum = 0.0;
    let mut k = 0usize;
    loop {
        let kf = k as f64;
        let weight = (-lambda + kf * ln_lambda - ln_gamma(kf + 1.0)).exp();
        let term = weight * tail;
        sum += term;
        if kf > 2.0 * lambda && weight < EPS {
            break;
        }
        if k >= MAX_ITER {
            break;
        }
        let s = s0 + kf;
        tail += (s * ln_y - y - ln_gamma(s + 1.0)).exp();
        tail = tail.min(1.0);
        k += 1;
    }
    Ok(sum.clamp(0.0, 1.0))
}

/// Complementary error function.
pub fn erfc(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z >= 0.0 {
        // erfc(z) = Q(1/2, z²)
        gamma_q(0.5, z * z).unwrap_or(0.0)
    } else {
        2.0 - erfc(-z)
    }
}

/// Standard Gaussian upper tail `Q(x) = P(Z > x)`.
pub fn gaussian_q(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

fn gaussian_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Acklam's rational approximation to the lower-tail normal quantile.
fn acklam_lower(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Inverse of [`gaussian_q`]: the `x` with `Q(x) = p`, for `0 < p < 1`.
pub fn gaussian_q_inv(p: f64) -> Result<f64, MathError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(MathError::Domain(format!(
            "Gaussian quantile needs 0 < p < 1, got {p}"
        )));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let mut x = -acklam_lower(p);
    // Newton polish on Q(x) - p; the Acklam start is good to ~1e-9.
    for _ in 0..3 {
        let pdf = gaussian_pdf(x);
        if pdf == 0.0 {
            break;
        }
        let step = (gaussian_q(x) - p) / pdf;
        x += step;
        if step.abs() < 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_integers() {
        let mut fact = 1.0f64;
        for n in 1..20 {
            assert!((ln_gamma(n as f64) - fact.ln()).abs() < 1e-12, "n={n}");
            fact *= n as f64;
        }
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn gamma_q_closed_forms() {
        assert_eq!(gamma_q(3.0, 0.0).unwrap(), 1.0);
        assert!((gamma_q(1.0, 2.0).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        // Q(2, x) = (1 + x) e^{-x}
        for &x in &[0.3, 1.0, 2.5, 7.0, 30.0] {
            let want = (1.0 + x) * f64::exp(-x);
            assert!((gamma_q(2.0, x).unwrap() - want).abs() < 1e-14, "x={x}");
        }
        assert!((gamma_p(2.0, 1.3).unwrap() + gamma_q(2.0, 1.3).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gamma_domain_errors() {
        assert!(gamma_q(0.0, 1.0).is_err());
        assert!(gamma_q(-1.0, 1.0).is_err());
        assert!(gamma_q(1.0, -0.1).is_err());
    }

    #[test]
    fn marcum_closed_forms() {
        assert_eq!(marcum_q(1, 2.0, 0.0).unwrap(), 1.0);
        let b = 1.0f64;
        assert!((marcum_q(1, 0.0, b).unwrap() - (-b * b / 2.0).exp()).abs() < 1e-15);
        assert!(marcum_q(1, -1.0, 1.0).is_err());
        assert!(marcum_q(1, 1.0, -1.0).is_err());
        assert!(marcum_q(0, 1.0, 1.0).is_err());
    }

    #[test]
    fn erfc_reference_values() {
        // erfc(1) and erfc(2) to 16 digits
        assert!((erfc(1.0) - 0.157_299_207_050_285_13).abs() < 1e-15);
        assert!((erfc(2.0) - 0.004_677_734_981_047_266).abs() < 1e-16);
        assert!((erfc(-1.0) - 1.842_700_792_949_714_9).abs() < 1e-15);
    }

    #[test]
    fn quantile_inverts_tail() {
        for &p in &[1e-12, 1e-6, 0.01, 0.02, 0.1, 0.3, 0.5, 0.7, 0.9, 0.999_999] {
            let x = gaussian_q_inv(p).unwrap();
            let back = gaussian_q(x);
            assert!((back - p).abs() <= 1e-13 * p.max(1e-3), "p={p} back={back}");
        }
        assert!((gaussian_q_inv(0.1).unwrap() - 1.281_551_565_544_6).abs() < 1e-12);
        assert!(gaussian_q_inv(0.0).is_err());
        assert!(gaussian_q_inv(1.0).is_err());
    }
}
