//! Log-domain special functions.
//!
//! Everything probabilistic in this crate is carried in natural-log units.
//! Dirichlet normalisers, multinomial coefficients and Shtarkov sums all
//! underflow in the linear domain once sequences get a few hundred symbols
//! long, so the functions here either return logarithms directly or are
//! written to be combined in the log domain.

use std::f64::consts::PI;
use std::ops::{Add, Mul};

use crate::error::{Error, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
const STIRLING_SHIFT: f64 = 10.0;
const DIGAMMA_SHIFT: f64 = 10.0;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;

/// A probability (or any nonnegative quantity) stored as its natural logarithm.
///
/// `Add` is addition of the underlying quantities (max-shifted log-sum-exp),
/// `Mul` is multiplication (addition of logarithms).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogValue(pub f64);

impl LogValue {
    /// The logarithm of zero.
    pub const ZERO: LogValue = LogValue(f64::NEG_INFINITY);
    /// The logarithm of one.
    pub const ONE: LogValue = LogValue(0.0);

    pub fn from_linear(x: f64) -> Self {
        LogValue(x.ln())
    }

    #[inline]
    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn log2(self) -> f64 {
        self.0 / std::f64::consts::LN_2
    }

    pub fn exp(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
}

impl Add for LogValue {
    type Output = LogValue;

    fn add(self, rhs: LogValue) -> LogValue {
        LogValue(log_add_exp(self.0, rhs.0))
    }
}

impl Mul for LogValue {
    type Output = LogValue;

    #[allow(clippy::suspicious_arithmetic_impl)] // products add in the log domain
    fn mul(self, rhs: LogValue) -> LogValue {
        LogValue(self.0 + rhs.0)
    }
}

/// Streaming log-sum-exp over a sequence of log terms, in insertion order.
///
/// Keeps a running maximum and a scaled linear sum, rescaling only when the
/// maximum moves. The result depends only on the order of the pushed terms.
#[derive(Debug, Clone, Copy)]
pub struct LogSumAccumulator {
    max: f64,
    scaled: f64,
}

impl Default for LogSumAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumAccumulator {
    pub fn new() -> Self {
        Self { max: f64::NEG_INFINITY, scaled: 0.0 }
    }

    pub fn push(&mut self, term: f64) {
        if term == f64::NEG_INFINITY {
            return;
        }
        if term <= self.max {
            self.scaled += (term - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - term).exp() + 1.0;
            self.max = term;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// `ln(e^a + e^b)` without overflow; `-inf` is absorbing.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(e^a - e^b)` for `a >= b`. Returns `-inf` when `a == b`.
pub fn log_sub_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    if b >= a {
        return f64::NEG_INFINITY;
    }
    a + ln_one_minus_exp(b - a)
}

/// `ln(1 - e^x)` for `x <= 0`, accurate at both ends.
pub fn ln_one_minus_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `ln Σ exp(v_i)`, max-shifted. Exactly `-inf` when every entry is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

fn check_positive(what: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what, detail: format!("argument must be finite and positive, got {x}") })
    }
}

/// Stirling series for `ln Γ(x)`, valid for `x >= 10` to full double precision.
fn ln_gamma_stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Bernoulli terms B_{2k} / (2k (2k-1) x^{2k-1})
    let series = inv
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 360.0
                    + inv2
                        * (1.0 / 1260.0
                            + inv2 * (-1.0 / 1680.0 + inv2 * (1.0 / 1188.0 + inv2 * (-691.0 / 360_360.0))))));
    (x - 0.5) * x.ln() - x + HALF_LN_2PI + series
}

/// Natural logarithm of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    check_positive("log_gamma", x)?;
    if x >= STIRLING_SHIFT {
        return Ok(ln_gamma_stirling(x));
    }
    // Γ(x) = Γ(x + k) / (x (x+1) ... (x+k-1))
    let mut shifted = x;
    let mut product = 1.0;
    while shifted < STIRLING_SHIFT {
        product *= shifted;
        shifted += 1.0;
    }
    Ok(ln_gamma_stirling(shifted) - product.ln())
}

/// `ln B(α) = Σ ln Γ(α_i) - ln Γ(Σ α_i)`.
pub fn log_beta(alpha: &[f64]) -> Result<f64> {
    if alpha.len() < 2 {
        return Err(Error::Domain {
            what: "log_beta",
            detail: format!("need at least two parameters, got {}", alpha.len()),
        });
    }
    let mut acc = 0.0;
    let mut total = 0.0;
    for &a in alpha {
        acc += log_gamma(a)?;
        total += a;
    }
    Ok(acc - log_gamma(total)?)
}

/// Two-argument `ln B(a, b)`.
pub fn log_beta2(a: f64, b: f64) -> Result<f64> {
    log_beta(&[a, b])
}

/// `ln` of the multinomial coefficient `n! / Π k_i!`.
pub fn log_multinomial(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let ln_fact = |k: u64| -> f64 {
        // k + 1 >= 1 always lies in the domain
        log_gamma(k as f64 + 1.0).unwrap_or(0.0)
    };
    counts.iter().fold(ln_fact(n), |acc, &k| acc - ln_fact(k))
}

/// Digamma function `Ψ(x) = Γ'(x)/Γ(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    check_positive("digamma", x)?;
    let mut shifted = x;
    let mut acc = 0.0;
    while shifted < DIGAMMA_SHIFT {
        acc -= 1.0 / shifted;
        shifted += 1.0;
    }
    let inv2 = 1.0 / (shifted * shifted);
    let tail =
        inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
    Ok(acc + shifted.ln() - 0.5 / shifted - tail)
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> Result<f64> {
    let max_iter = 20_000 + (50.0 * (a.max(b)).sqrt()) as usize;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=max_iter {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() <= CF_EPS {
            return Ok(h);
        }
    }
    Err(Error::NonConvergence { what: "incomplete beta continued fraction", achieved: f64::NAN })
}

/// Both tails of the regularized incomplete beta function, as logarithms:
/// `(ln I_x(a,b), ln (1 - I_x(a,b)))`.
///
/// The tail on the near side of the mean `a/(a+b)` is evaluated directly by
/// the continued fraction; the other one by complement, which is then far
/// from cancellation. Both are accurate in relative terms even when tiny.
pub fn ln_inc_beta_tails(x: f64, a: f64, b: f64) -> Result<(f64, f64)> {
    check_positive("reg_inc_beta (a)", a)?;
    check_positive("reg_inc_beta (b)", b)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain { what: "reg_inc_beta", detail: format!("x must lie in [0, 1], got {x}") });
    }
    if x == 0.0 {
        return Ok((f64::NEG_INFINITY, 0.0));
    }
    if x == 1.0 {
        return Ok((0.0, f64::NEG_INFINITY));
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - log_beta2(a, b)?;
    if x <= a / (a + b) {
        let lower = ln_front + beta_continued_fraction(x, a, b)?.ln() - a.ln();
        let lower = lower.min(0.0);
        Ok((lower, ln_one_minus_exp(lower)))
    } else {
        let upper = ln_front + beta_continued_fraction(1.0 - x, b, a)?.ln() - b.ln();
        let upper = upper.min(0.0);
        Ok((ln_one_minus_exp(upper), upper))
    }
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    let (lower, _) = ln_inc_beta_tails(x, a, b)?;
    Ok(lower.exp())
}

/// `ln (I_hi(a,b) - I_lo(a,b))`: the log of the Beta(a, b) probability of
/// `[lo, hi]`, computed from whichever tails avoid cancellation.
pub fn ln_beta_interval_mass(lo: f64, hi: f64, a: f64, b: f64) -> Result<f64> {
    let lo = lo.clamp(0.0, 1.0);
    let hi = hi.clamp(0.0, 1.0);
    if hi <= lo {
        return Ok(f64::NEG_INFINITY);
    }
    let (lo_lower, lo_upper) = ln_inc_beta_tails(lo, a, b)?;
    let (hi_lower, hi_upper) = ln_inc_beta_tails(hi, a, b)?;
    let mean = a / (a + b);
    if hi <= mean {
        Ok(log_sub_exp(hi_lower, lo_lower))
    } else if lo >= mean {
        Ok(log_sub_exp(lo_upper, hi_upper))
    } else {
        // the interval straddles the mean, so the mass is not small
        let outside = log_add_exp(lo_lower, hi_upper);
        Ok(ln_one_minus_exp(outside.min(0.0)))
    }
}

/// `ln` of the Beta(a, b) density at `x ∈ (0, 1)`.
pub fn ln_beta_density(x: f64, a: f64, b: f64, ln_norm: f64) -> f64 {
    (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_norm
}

/// `ln Γ(1/2) = ln √π`.
pub fn ln_sqrt_pi() -> f64 {
    0.5 * PI.ln()
}
