//! Exact and asymptotic minimax redundancies, all reported in bits.
//!
//! Internally everything is computed in nats; the conversion to bits happens
//! only at the public boundary of each function.
//!
//! Asymptotic formulas (nats), for fixed `m` and a constraint set `S` with
//! Jeffreys constant `C(S)`:
//!
//! ```text
//! worst:   (m-1)/2 · ln(n/2)      - ln Γ(m/2) + ln C(S) + ½ ln π
//! average: (m-1)/2 · ln(n/(2e))   - ln Γ(m/2) + ln C(S) + ½ ln π
//! ```
//!
//! and, for the unconstrained simplex with large `m`,
//!
//! ```text
//! worst:   (m-1)/2 · ln(e n/m) + ½(1 - ln 2)
//! average: (m-1)/2 · ln(n/m)   + ½(1 - ln 2)
//! ```
//!
//! The average large-`m` value before its final Stirling step,
//! `(m-1)/2 · ln(n/(2πe)) + m ln Γ(½) - ln Γ(m/2)`, is available separately
//! through [`unconstrained_average_pre_stirling`]. The formulas are evaluated
//! verbatim; their `O(·)` error terms belong to whoever compares them with
//! exact values.
//!
//! The average redundancy reported by [`average_exact`] is that of the mixture
//! under the truncated Jeffreys prior, which lower-bounds the minimax average
//! redundancy; whether that prior is exactly maximin at finite `n` is not
//! settled here.

use std::f64::consts::{LN_2, PI};

use crate::constraints::{
    jeffreys_constant, Backend, ConstraintSet, GammaSampleSet, IntegrationConfig, MeasureEstimate,
};
use crate::error::{Error, Result};
use crate::estimator::log_mixture_counts_with_constant;
use crate::mle::{for_each_type, shtarkov_sum, sup_log_prob, CountVector};
use crate::quadrature::{integrate, QuadOptions};
use crate::specfn::{digamma, log_beta, log_gamma, log_multinomial};

const LOG2_E: f64 = std::f64::consts::LOG2_E;

fn bits(nats: f64) -> f64 {
    nats / LN_2
}

/// Shared by the worst-case and average asymptotic formulas, so that their
/// difference is exactly `(m-1)/2 · log2 e`.
fn constrained_formula_nats(n: f64, m: usize, log_c: f64, average: bool) -> Result<f64> {
    let half = (m as f64 - 1.0) / 2.0;
    let ln_scale = (n / 2.0).ln() - if average { 1.0 } else { 0.0 };
    Ok(half * ln_scale - log_gamma(m as f64 / 2.0)? + log_c + 0.5 * PI.ln())
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("redundancy needs n ≥ 1".into()));
    }
    Ok(())
}

/// Worst-case asymptotic redundancy given `ln C(S)` directly.
pub fn worst_case_asymptotic_with(n: u64, m: usize, log_c: f64) -> Result<f64> {
    check_n(n)?;
    Ok(bits(constrained_formula_nats(n as f64, m, log_c, false)?))
}

/// Average asymptotic redundancy given `ln C(S)` directly.
pub fn average_asymptotic_with(n: u64, m: usize, log_c: f64) -> Result<f64> {
    check_n(n)?;
    Ok(bits(constrained_formula_nats(n as f64, m, log_c, true)?))
}

pub fn worst_case_asymptotic(n: u64, set: &ConstraintSet, cfg: &IntegrationConfig) -> Result<f64> {
    let c = jeffreys_constant(set, cfg)?;
    worst_case_asymptotic_with(n, set.alphabet_size(), c.log_value)
}

pub fn average_asymptotic(n: u64, set: &ConstraintSet, cfg: &IntegrationConfig) -> Result<f64> {
    let c = jeffreys_constant(set, cfg)?;
    average_asymptotic_with(n, set.alphabet_size(), c.log_value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RedundancyKind {
    Worst,
    Average,
}

/// Large-alphabet formulas for the unconstrained simplex.
pub fn unconstrained_large_m(n: u64, m: usize, kind: RedundancyKind) -> Result<f64> {
    check_n(n)?;
    if m < 2 {
        return Err(Error::InvalidParameter(format!("alphabet size must be at least 2, got {m}")));
    }
    let half = (m as f64 - 1.0) / 2.0;
    let ln_ratio = (n as f64 / m as f64).ln() + if kind == RedundancyKind::Worst { 1.0 } else { 0.0 };
    Ok(bits(half * ln_ratio + 0.5 * (1.0 - LN_2)))
}

/// `(m-1)/2 · log(n/(2πe)) + log(Γ(½)^m / Γ(m/2))`, the unconstrained average
/// redundancy before Stirling's formula is applied to `Γ(m/2)`.
pub fn unconstrained_average_pre_stirling(n: u64, m: usize) -> Result<f64> {
    check_n(n)?;
    let half = (m as f64 - 1.0) / 2.0;
    let nats = half * (n as f64 / (2.0 * PI * std::f64::consts::E)).ln() + m as f64 * 0.5 * PI.ln()
        - log_gamma(m as f64 / 2.0)?;
    Ok(bits(nats))
}

/// `log2 S_n`: the exact worst-case minimax redundancy.
pub fn worst_case_exact(n: u64, set: &ConstraintSet) -> Result<f64> {
    check_n(n)?;
    Ok(bits(shtarkov_sum(n, set)?.log_sum))
}

/// One type class with its multinomial coefficient and mixture probability.
struct TypeTerm {
    k: Vec<u64>,
    ln_mult: f64,
    /// `ln M` of a single sequence of this type.
    ln_mixture: f64,
}

fn mixture_types(n: u64, set: &ConstraintSet, cfg: &IntegrationConfig, c: &MeasureEstimate) -> Result<Vec<TypeTerm>> {
    let mut terms = Vec::new();
    for_each_type(n, set.alphabet_size(), |k| {
        let counts = CountVector::new(k.to_vec())?;
        let mix = log_mixture_counts_with_constant(&counts, set, cfg, c)?;
        terms.push(TypeTerm { k: k.to_vec(), ln_mult: log_multinomial(k), ln_mixture: mix.log_value });
        Ok(())
    })?;
    Ok(terms)
}

/// `D(P_θ^n ‖ M)` in nats, by summing over type classes.
fn divergence_at(theta: &[f64], terms: &[TypeTerm]) -> f64 {
    let ln_theta: Vec<f64> = theta.iter().map(|t| t.ln()).collect();
    let mut total = 0.0;
    for t in terms {
        let mut ln_p = 0.0;
        for (&k, &lt) in t.k.iter().zip(&ln_theta) {
            if k > 0 {
                ln_p += k as f64 * lt;
            }
        }
        if ln_p == f64::NEG_INFINITY {
            continue;
        }
        total += (t.ln_mult + ln_p).exp() * (ln_p - t.ln_mixture);
    }
    total
}

/// Average redundancy with its Monte Carlo uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AverageRedundancy {
    pub bits: f64,
    pub std_error_bits: f64,
    pub backend: Backend,
}

/// `∫_S D(P_θ ‖ M) dw*(θ)` in bits: the average redundancy of the mixture
/// under the Jeffreys prior truncated to `S`.
///
/// For `m = 2` the outer integral is done by quadrature in the arcsine
/// variable `θ = sin² φ`, which absorbs the prior's endpoint singularities.
/// For larger alphabets θ is sampled from the truncated prior.
pub fn average_exact(n: u64, set: &ConstraintSet, cfg: &IntegrationConfig) -> Result<AverageRedundancy> {
    check_n(n)?;
    let c = jeffreys_constant(set, cfg)?;
    let terms = mixture_types(n, set, cfg, &c)?;
    if let Some((lo, hi)) = set.interval() {
        let (p0, p1) = (lo.sqrt().asin(), hi.sqrt().asin());
        let scale = 2.0 / (PI * c.value());
        let panels = 16;
        let points: Vec<f64> = (0..=panels).map(|j| p0 + (p1 - p0) * j as f64 / panels as f64).collect();
        let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-12, max_intervals: 4000 };
        let r = integrate(
            |phi| {
                let t = phi.sin().powi(2);
                Ok(scale * divergence_at(&[t, 1.0 - t], &terms))
            },
            &points,
            opts,
        )?;
        return Ok(AverageRedundancy {
            bits: bits(r.value),
            std_error_bits: bits(r.error),
            backend: if c.std_error > 0.0 { Backend::MonteCarlo } else { Backend::Quadrature },
        });
    }
    let m = set.alphabet_size();
    let seed = crate::constraints::mix_seed(&[cfg.seed, n, 0x4156_4552]);
    let draws = GammaSampleSet::draw(&vec![0.5; m], cfg.samples, seed)?;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut inside = 0usize;
    let mut theta = vec![0.0; m];
    for g in draws.rows() {
        let total: f64 = g.iter().sum();
        for i in 0..m {
            theta[i] = g[i] / total;
        }
        if !set.contains_slice(&theta) {
            continue;
        }
        let d = divergence_at(&theta, &terms);
        sum += d;
        sum_sq += d * d;
        inside += 1;
    }
    if inside < 2 {
        return Err(Error::MassCollapse { mass: inside as f64 / cfg.samples as f64, floor: 2.0 / cfg.samples as f64 });
    }
    let k = inside as f64;
    let mean = sum / k;
    let var = (sum_sq / k - mean * mean).max(0.0) * k / (k - 1.0);
    Ok(AverageRedundancy { bits: bits(mean), std_error_bits: bits((var / k).sqrt()), backend: Backend::MonteCarlo })
}

/// Unconstrained average redundancy of the KT mixture through digamma
/// derivatives of the beta function:
///
/// ```text
/// ln B(½) + Σ_k (n choose k) B(k+½)/B(½) · (Σ_i k_i (ψ(k_i+½) - ψ(n+m/2)) - ln B(k+½))
/// ```
pub fn average_exact_psi(n: u64, m: usize) -> Result<f64> {
    check_n(n)?;
    if m < 2 {
        return Err(Error::InvalidParameter(format!("alphabet size must be at least 2, got {m}")));
    }
    let ln_b_half = log_beta(&vec![0.5; m])?;
    let psi_total = digamma(n as f64 + m as f64 / 2.0)?;
    let mut psi_cache: Vec<Option<f64>> = vec![None; n as usize + 1];
    let mut acc = 0.0;
    let mut alpha = vec![0.0; m];
    for_each_type(n, m, |k| {
        for i in 0..m {
            alpha[i] = k[i] as f64 + 0.5;
        }
        let ln_b = log_beta(&alpha)?;
        let weight = (log_multinomial(k) + ln_b - ln_b_half).exp();
        let mut deriv = 0.0;
        for &ki in k {
            if ki == 0 {
                continue;
            }
            let psi = match psi_cache[ki as usize] {
                Some(v) => v,
                None => {
                    let v = digamma(ki as f64 + 0.5)?;
                    psi_cache[ki as usize] = Some(v);
                    v
                }
            };
            deriv += ki as f64 * (psi - psi_total);
        }
        acc += weight * (deriv - ln_b);
        Ok(())
    })?;
    Ok(bits(ln_b_half + acc))
}

/// `max_k [sup_{θ∈S} ln P_θ(x) - ln M(x)]` in bits: the worst-case regret of
/// the constrained mixture code.
pub fn mixture_worst_regret(n: u64, set: &ConstraintSet, cfg: &IntegrationConfig) -> Result<f64> {
    check_n(n)?;
    let c = jeffreys_constant(set, cfg)?;
    let mut worst = f64::NEG_INFINITY;
    for_each_type(n, set.alphabet_size(), |k| {
        let counts = CountVector::new(k.to_vec())?;
        let mix = log_mixture_counts_with_constant(&counts, set, cfg, &c)?;
        worst = worst.max(sup_log_prob(&counts, set)? - mix.log_value);
        Ok(())
    })?;
    Ok(bits(worst))
}

/// `E_θ[sup ln P(x) - ln P_θ(x)]` in nats, given per-type `sup ln P`.
fn expected_ml_gap(theta: &[f64], types: &[(Vec<u64>, f64, f64)]) -> f64 {
    let ln_theta: Vec<f64> = theta.iter().map(|t| t.ln()).collect();
    let mut total = 0.0;
    for (k, ln_mult, sup) in types {
        let mut ln_p = 0.0;
        for (&ki, &lt) in k.iter().zip(&ln_theta) {
            if ki > 0 {
                ln_p += ki as f64 * lt;
            }
        }
        if ln_p == f64::NEG_INFINITY {
            continue;
        }
        total += (ln_mult + ln_p).exp() * (sup - ln_p);
    }
    total
}

const CN_GRID: f64 = 1e-3;
const CN_GRID_MULTI: f64 = 1e-2;

/// `c_n(S) = sup_{θ∈S} E_θ[log2 (sup_P P(x) / P_θ(x))]`.
///
/// The supremum is taken over a grid (step `1e-3` for `m = 2`, refined by
/// golden-section search around the best grid point; step `1e-2` on a lattice
/// for larger alphabets).
pub fn cn_gap(n: u64, set: &ConstraintSet, _cfg: &IntegrationConfig) -> Result<f64> {
    check_n(n)?;
    let m = set.alphabet_size();
    let mut types = Vec::new();
    for_each_type(n, m, |k| {
        let counts = CountVector::new(k.to_vec())?;
        types.push((k.to_vec(), log_multinomial(k), sup_log_prob(&counts, set)?));
        Ok(())
    })?;
    if let Some((lo, hi)) = set.interval() {
        let f = |t: f64| expected_ml_gap(&[t, 1.0 - t], &types);
        let steps = ((hi - lo) / CN_GRID).ceil().max(1.0) as usize;
        let grid: Vec<f64> = (0..=steps).map(|j| (lo + j as f64 * CN_GRID).min(hi)).collect();
        let values: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
        let best = (0..grid.len()).max_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
        let left = grid[best.saturating_sub(1)];
        let right = grid[(best + 1).min(grid.len() - 1)];
        let refined = golden_section_max(&f, left, right, 1e-12);
        return Ok(bits(values[best].max(f(refined))));
    }
    // lattice over the first m-1 coordinates
    let steps = (1.0 / CN_GRID_MULTI).round() as u64;
    let mut best = f64::NEG_INFINITY;
    for_each_type(steps, m, |k| {
        let theta: Vec<f64> = k.iter().map(|&x| x as f64 / steps as f64).collect();
        if set.contains_slice(&theta) {
            best = best.max(expected_ml_gap(&theta, &types));
        }
        Ok(())
    })?;
    if best == f64::NEG_INFINITY {
        return Err(Error::InvalidParameter("no lattice point falls inside the constraint set".into()));
    }
    Ok(bits(best))
}

fn golden_section_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Which optional columns of a [`RedundancyReport`] to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReportColumns {
    pub exact_worst: bool,
    pub exact_avg: bool,
    pub mixture_worst_regret: bool,
    pub cn_gap: bool,
}

impl Default for ReportColumns {
    fn default() -> Self {
        Self { exact_worst: true, exact_avg: false, mixture_worst_regret: false, cn_gap: false }
    }
}

/// One row of the redundancy table, in bits.
#[derive(Debug, Clone, PartialEq)]
pub struct RedundancyReport {
    pub n: u64,
    pub m: usize,
    pub constraints_id: String,
    pub log2_c: Option<f64>,
    pub exact_worst: Option<f64>,
    pub asym_worst: Option<f64>,
    pub asym_avg: Option<f64>,
    pub exact_avg: Option<f64>,
    pub mixture_worst_regret: Option<f64>,
    pub cn_gap: Option<f64>,
    /// Errors from individual columns; the columns concerned stay empty.
    pub errors: Vec<String>,
}

pub const CSV_HEADER: &str =
    "n,m,constraints_id,log2_C,exact_worst,asym_worst,asym_avg,exact_avg,mixture_worst_regret,cn_gap";

impl RedundancyReport {
    pub fn csv_row(&self) -> String {
        let f = |v: Option<f64>| v.map(|x| format!("{x:.12}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.m,
            self.constraints_id,
            f(self.log2_c),
            f(self.exact_worst),
            f(self.asym_worst),
            f(self.asym_avg),
            f(self.exact_avg),
            f(self.mixture_worst_regret),
            f(self.cn_gap)
        )
    }
}

/// Computes one report row; a failing column is recorded in `errors` and
/// left empty while the others are still filled in.
pub fn redundancy_report(
    n: u64,
    set: &ConstraintSet,
    cfg: &IntegrationConfig,
    columns: ReportColumns,
) -> RedundancyReport {
    let m = set.alphabet_size();
    let mut report = RedundancyReport {
        n,
        m,
        constraints_id: format!("{:016x}", set.digest()),
        log2_c: None,
        exact_worst: None,
        asym_worst: None,
        asym_avg: None,
        exact_avg: None,
        mixture_worst_regret: None,
        cn_gap: None,
        errors: Vec::new(),
    };
    let record = |name: &str, r: Result<f64>, errors: &mut Vec<String>| match r {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push(format!("{name}: {e}"));
            None
        }
    };
    let mut errors = Vec::new();
    match jeffreys_constant(set, cfg) {
        Ok(c) => {
            report.log2_c = Some(bits(c.log_value));
            report.asym_worst = record("asym_worst", worst_case_asymptotic_with(n, m, c.log_value), &mut errors);
            report.asym_avg = record("asym_avg", average_asymptotic_with(n, m, c.log_value), &mut errors);
        }
        Err(e) => errors.push(format!("log2_C: {e}")),
    }
    if columns.exact_worst {
        report.exact_worst = record("exact_worst", worst_case_exact(n, set), &mut errors);
    }
    if columns.exact_avg {
        report.exact_avg = record("exact_avg", average_exact(n, set, cfg).map(|a| a.bits), &mut errors);
    }
    if columns.mixture_worst_regret {
        report.mixture_worst_regret = record("mixture_worst_regret", mixture_worst_regret(n, set, cfg), &mut errors);
    }
    if columns.cn_gap {
        report.cn_gap = record("cn_gap", cn_gap(n, set, cfg), &mut errors);
    }
    report.errors = errors;
    report
}

/// `(m-1)/2 · log2 e`, the exact gap between each worst/average formula pair.
pub fn formula_gap_bits(m: usize) -> f64 {
    (m as f64 - 1.0) / 2.0 * LOG2_E
}
