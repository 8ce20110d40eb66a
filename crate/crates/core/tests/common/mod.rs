//! Reference computations that share no code with the library: tanh-sinh
//! quadrature, libm's `lgamma`, and brute-force enumeration.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub fn ln_beta2(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

pub fn ln_beta(alpha: &[f64]) -> f64 {
    alpha.iter().map(|&a| ln_gamma(a)).sum::<f64>() - ln_gamma(alpha.iter().sum())
}

pub fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + xs.iter().map(|x| (x - hi).exp()).sum::<f64>().ln()
}

/// Tanh-sinh quadrature of `f` over `[a, b]`.
///
/// `f(x, 1 - x)` receives both the abscissa and its complement, each computed
/// from the distance to the nearer endpoint so that integrable endpoint
/// singularities at 0 and 1 are sampled without cancellation.
pub fn tanh_sinh<F: Fn(f64, f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let half = 0.5 * (b - a);
    let eval = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let w = FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        // distance from the endpoint the node approaches
        let d = half * 2.0 / (1.0 + (2.0 * u.abs()).exp());
        let (x, xc) = if t >= 0.0 { (b - d, (1.0 - b) + d) } else { (a + d, (1.0 - a) - d) };
        if d == 0.0 {
            return 0.0;
        }
        let v = f(x, xc) * w;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    const T_MAX: f64 = 4.0;
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while k as f64 * h <= T_MAX {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut estimate = sum * h * half;
    for _ in 0..12 {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= T_MAX {
            let t = k as f64 * h;
            sum += eval(t) + eval(-t);
            k += 2;
        }
        let next = sum * h * half;
        let done = (next - estimate).abs() <= rel_tol * next.abs();
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}

/// `ln P(a ≤ θ ≤ b)` for `θ ~ Beta(p, q)`.
pub fn ln_beta_interval(a: f64, b: f64, p: f64, q: f64) -> f64 {
    let log_f = |x: f64, xc: f64| (p - 1.0) * x.ln() + (q - 1.0) * xc.ln();
    // shift by the largest value on an interior grid to keep exp in range
    let shift = (1..200)
        .map(|i| {
            let x = a + (b - a) * i as f64 / 200.0;
            log_f(x, 1.0 - x)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let integral = tanh_sinh(|x, xc| (log_f(x, xc) - shift).exp(), a, b, 1e-13);
    integral.ln() + shift - ln_beta2(p, q)
}

/// Jeffreys constant of the interval `[a, b]`: the arcsine law.
pub fn arcsine_mass(a: f64, b: f64) -> f64 {
    2.0 / PI * (b.sqrt().asin() - a.sqrt().asin())
}

/// `ln M(x)` for the binary Jeffreys mixture restricted to `θ_0 ∈ [a, b]`.
pub fn ln_mixture_binary(k0: u64, k1: u64, a: f64, b: f64) -> f64 {
    let (p, q) = (k0 as f64 + 0.5, k1 as f64 + 0.5);
    ln_beta2(p, q) - ln_beta2(0.5, 0.5) - arcsine_mass(a, b).ln() + ln_beta_interval(a, b, p, q)
}

/// `ln Π (k_i + ½)/(n + m/2)` accumulated along the sequence.
pub fn ln_kt_sequence(seq: &[usize], m: usize) -> f64 {
    let mut counts = vec![0u64; m];
    let mut total = 0.0;
    for (n, &s) in seq.iter().enumerate() {
        total += ((counts[s] as f64 + 0.5) / (n as f64 + m as f64 / 2.0)).ln();
        counts[s] += 1;
    }
    total
}

/// `ln` of the binary Shtarkov sum over `θ_0 ∈ [a, b]`, split into types
/// whose ML estimate is inside the interval and those clipped to an endpoint.
pub fn ln_shtarkov_binary(n: u64, a: f64, b: f64) -> (f64, f64) {
    let mut inside = Vec::new();
    let mut clipped = Vec::new();
    for k in 0..=n {
        let raw = k as f64 / n as f64;
        let theta = raw.clamp(a, b);
        let ln_p = |x: f64, c: u64| if c == 0 { 0.0 } else { c as f64 * x.ln() };
        let term = ln_choose(n, k) + ln_p(theta, k) + ln_p(1.0 - theta, n - k);
        if (a..=b).contains(&raw) {
            inside.push(term);
        } else {
            clipped.push(term);
        }
    }
    (log_sum_exp(&inside), log_sum_exp(&clipped))
}

/// Every sequence of length `n` over `m` symbols, in lexicographic order.
pub fn all_sequences(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..m).map(move |x| {
                    let mut t = s.clone();
                    t.push(x);
                    t
                })
            })
            .collect();
    }
    out
}

/// `max_θ ln P_θ(x)` over the whole simplex for one sequence.
pub fn ln_max_likelihood(seq: &[usize], m: usize) -> f64 {
    let n = seq.len() as f64;
    let mut counts = vec![0u64; m];
    for &s in seq {
        counts[s] += 1;
    }
    counts.iter().filter(|&&k| k > 0).map(|&k| k as f64 * (k as f64 / n).ln()).sum()
}

/// Random interval `[a, b] ⊂ [0, 1]` of width at least `min_width`.
pub fn random_interval<R: Rng>(rng: &mut R, min_width: f64) -> (f64, f64) {
    let a = rng.random_range(0.0..1.0 - min_width);
    let b = rng.random_range(a + min_width..=1.0);
    (a, b)
}

/// Sequence of `n` i.i.d. symbols drawn from `theta`.
pub fn sample_sequence<R: Rng>(rng: &mut R, theta: &[f64], n: usize) -> Vec<usize> {
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (i, &t) in theta.iter().enumerate() {
                acc += t;
                if u < acc {
                    return i;
                }
            }
            theta.len() - 1
        })
        .collect()
}
