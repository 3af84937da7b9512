//! Independent numerical oracles shared by the test targets: adaptive
//! quadrature of the defining integrals and Bessel series in log space.

#![allow(dead_code)]

use std::sync::OnceLock;

/// `ln k!` from a running sum of logarithms.
fn ln_factorial(k: usize) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let t = TABLE.get_or_init(|| {
        let mut t = vec![0.0; 4096];
        for i in 2..t.len() {
            t[i] = t[i - 1] + (i as f64).ln();
        }
        t
    });
    t[k]
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, (tol / 2.0).max(1e-16), depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, (tol / 2.0).max(1e-16), depth - 1)
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    // Split into panels so narrow peaks are not stepped over.
    let panels = 64;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = lo + h;
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = h / 6.0 * (fa + 4.0 * fm + fb);
            simpson(&f, lo, hi, fa, fm, fb, whole, 1e-13, 16)
        })
        .sum()
}

/// `ln I_n(z)` by direct series, summed relative to its largest term.
fn ln_bessel_i(n: u32, z: f64) -> f64 {
    if z == 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let hz = (0.5 * z).ln();
    let term = |k: f64| (2.0 * k + n as f64) * hz - ln_factorial(k as usize) - ln_factorial(k as usize + n as usize);
    let peak_k = (0.5 * z).max(1.0) as usize;
    let kmax = peak_k + 200 + (z as usize);
    let logs: Vec<f64> = (0..=kmax).map(|k| term(k as f64)).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln()
}

pub fn marcum_oracle(u: u32, a: f64, b: f64) -> f64 {
    let density = |x: f64| {
        if x <= 0.0 {
            return 0.0;
        }
        if a == 0.0 {
            // Central chi density of the radius.
            let ln = (2.0 * u as f64 - 1.0) * x.ln() - 0.5 * x * x
                - (u as f64 - 1.0) * 2f64.ln()
                - ln_factorial(u as usize - 1);
            return ln.exp();
        }
        let ln = x.ln() + (u as f64 - 1.0) * (x / a).ln() - 0.5 * (x * x + a * a)
            + ln_bessel_i(u - 1, a * x);
        ln.exp()
    };
    let centre = (a * a + 2.0 * u as f64).sqrt();
    let upper = centre.max(b) + 40.0;
    if b >= centre {
        integrate(density, b, upper)
    } else {
        1.0 - integrate(density, 0.0, b)
    }
}

pub fn gamma_oracle(a: f64, x: f64) -> f64 {
    let f = |t: f64| if t <= 0.0 { if a == 1.0 { 1.0 } else { 0.0 } } else { ((a - 1.0) * t.ln() - t).exp() };
    let upper = a + 60.0 + 10.0 * a.sqrt();
    let total = integrate(f, 0.0, upper);
    if x > a {
        integrate(f, x, upper.max(x + 60.0)) / total
    } else {
        1.0 - integrate(f, 0.0, x) / total
    }
}

pub fn gaussian_tail_oracle(z: f64) -> f64 {
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if z >= 0.0 {
        integrate(pdf, z, z + 40.0)
    } else {
        1.0 - integrate(pdf, -z, -z + 40.0)
    }
}

pub fn quantile_oracle(p: f64) -> f64 {
    let (mut lo, mut hi) = (-12.0, 12.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if gaussian_tail_oracle(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

