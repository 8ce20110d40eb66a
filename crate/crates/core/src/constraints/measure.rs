//! `Dir(S; α)`, the probability that a Dirichlet(α) vector falls in `S`, and
//! the posterior mean of θ conditioned on `θ ∈ S`.
//!
//! Three backends:
//!
//! - **Exact**: the whole simplex (mass 1), and every `m = 2` set, which is an
//!   interval of `θ_1` handled by incomplete-beta differences.
//! - **Quadrature**: boxes with `m ≤ quadrature_max_m`, by stick-breaking.
//!   `θ_1 = u_1`, `θ_2 = (1-u_1) u_2`, … with independent
//!   `u_j ~ Beta(α_j, α_{j+1} + … + α_m)`; the innermost level is an exact
//!   incomplete-beta difference and the outer levels are adaptive
//!   Gauss–Kronrod.
//! - **Monte Carlo**: everything else, from normalised Gamma variates. When the
//!   indicator mean drops under `mass_floor` the estimate is redone by
//!   importance sampling around the constrained maximiser.

use super::sampling::{alpha_digest, importance_moments, GammaSampleSet, SampleSummary};
use super::{mix_seed, ConstraintForm, ConstraintSet};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};
use crate::specfn::{ln_beta_interval_mass, log_beta2};

/// Masses below this are reported as a collapse rather than returned.
const MIN_LINEAR_MASS: f64 = 1e-290;

/// Dirichlet concentration parameters, all strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletParams {
    alpha: Vec<f64>,
}

impl DirichletParams {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InvalidParameter("empty Dirichlet parameter vector".into()));
        }
        if let Some(a) = alpha.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::Domain {
                what: "Dirichlet parameters",
                detail: format!("every α_i must be finite and positive, got {a}"),
            });
        }
        Ok(Self { alpha })
    }

    /// All-½: the Jeffreys prior.
    pub fn jeffreys(m: usize) -> Self {
        Self { alpha: vec![0.5; m] }
    }

    /// `k + ½`, the posterior after observing counts `k` under the Jeffreys prior.
    pub fn from_counts(counts: &[u64]) -> Self {
        Self { alpha: counts.iter().map(|&k| k as f64 + 0.5).collect() }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.alpha
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn concentration(&self) -> f64 {
        self.alpha.iter().sum()
    }

    /// `α + e_i`.
    pub fn shifted(&self, i: usize) -> Self {
        let mut alpha = self.alpha.clone();
        alpha[i] += 1.0;
        Self { alpha }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Exact,
    Quadrature,
    MonteCarlo,
    /// Monte Carlo with a proposal centred at the constrained maximiser, used
    /// once plain sampling sees too few points inside `S`.
    ImportanceSampling,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Quadrature => "quadrature",
            Backend::MonteCarlo => "monte-carlo",
            Backend::ImportanceSampling => "importance-sampling",
        }
    }

    pub fn is_sampled(self) -> bool {
        matches!(self, Backend::MonteCarlo | Backend::ImportanceSampling)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendPreference {
    /// Exact where available, quadrature for small boxes, sampling otherwise.
    Auto,
    /// Always sample (useful for cross-checking the other backends).
    MonteCarlo,
}

/// Numerical settings shared by every measure computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationConfig {
    /// Largest alphabet for which boxes are integrated by quadrature.
    pub quadrature_max_m: usize,
    /// Relative tolerance of the quadrature backend.
    pub quad_tol: f64,
    /// Monte Carlo sample count.
    pub samples: usize,
    pub seed: u64,
    /// Indicator mean below which plain sampling escalates to importance sampling.
    pub mass_floor: f64,
    pub backend: BackendPreference,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            quadrature_max_m: 4,
            quad_tol: 1e-9,
            samples: 100_000,
            seed: 0,
            mass_floor: 1e-3,
            backend: BackendPreference::Auto,
        }
    }
}

impl IntegrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.quad_tol > 0.0 && self.quad_tol <= 1e-3) {
            return Err(Error::InvalidParameter(format!(
                "quadrature tolerance must lie in (0, 1e-3], got {}",
                self.quad_tol
            )));
        }
        if self.samples == 0 {
            return Err(Error::InvalidParameter("sample count must be positive".into()));
        }
        if !(self.mass_floor >= 0.0 && self.mass_floor < 1.0) {
            return Err(Error::InvalidParameter(format!("mass floor {} outside [0, 1)", self.mass_floor)));
        }
        Ok(())
    }

    /// Stable 64-bit fingerprint of every field that changes computed values.
    pub fn fingerprint(&self) -> u64 {
        mix_seed(&[
            self.quadrature_max_m as u64,
            self.quad_tol.to_bits(),
            self.samples as u64,
            self.mass_floor.to_bits(),
            match self.backend {
                BackendPreference::Auto => 0,
                BackendPreference::MonteCarlo => 1,
            },
        ])
    }

    /// Which backend a deterministic-or-sampled computation on `set` uses.
    pub fn backend_for(&self, set: &ConstraintSet) -> Backend {
        if self.backend == BackendPreference::MonteCarlo {
            return Backend::MonteCarlo;
        }
        if set.is_whole_simplex() || set.interval().is_some() {
            return Backend::Exact;
        }
        match set.form() {
            ConstraintForm::Box { .. } if set.alphabet_size() <= self.quadrature_max_m => Backend::Quadrature,
            _ => Backend::MonteCarlo,
        }
    }
}

/// `Dir(S; α)` in log form with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureEstimate {
    pub log_value: f64,
    /// Standard error of the linear-scale value; zero for deterministic backends.
    pub std_error: f64,
    pub backend: Backend,
}

impl MeasureEstimate {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

/// Posterior mean of θ under Dirichlet(α) conditioned on `θ ∈ S`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRatio {
    pub probs: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// `ln Dir(S; α)`.
    pub log_mass: f64,
    /// `ln Dir(S; α + e_i)` for each `i`, when a deterministic backend produced them.
    pub log_next: Option<Vec<f64>>,
    pub backend: Backend,
    /// `|Σ r_i - 1|` before renormalisation (zero for sampled backends).
    pub residual: f64,
}

fn check_dims(set: &ConstraintSet, alpha: &DirichletParams) -> Result<()> {
    if alpha.dim() != set.alphabet_size() {
        return Err(Error::DimensionMismatch { expected: set.alphabet_size(), got: alpha.dim() });
    }
    Ok(())
}

/// `Dir(S; α)` by the backend the configuration selects for `S`.
pub fn dirichlet_measure(
    set: &ConstraintSet,
    alpha: &DirichletParams,
    cfg: &IntegrationConfig,
) -> Result<MeasureEstimate> {
    check_dims(set, alpha)?;
    cfg.validate()?;
    match cfg.backend_for(set) {
        Backend::MonteCarlo | Backend::ImportanceSampling => dirichlet_measure_monte_carlo(set, alpha, cfg),
        backend => Ok(MeasureEstimate {
            log_value: ln_measure_deterministic(set, alpha.as_slice(), backend, cfg)?,
            std_error: 0.0,
            backend,
        }),
    }
}

/// `C(S) = Dir(S; ½, …, ½)`.
pub fn jeffreys_constant(set: &ConstraintSet, cfg: &IntegrationConfig) -> Result<MeasureEstimate> {
    dirichlet_measure(set, &DirichletParams::jeffreys(set.alphabet_size()), cfg)
}

fn sampling_seed(cfg: &IntegrationConfig, alpha: &[f64]) -> u64 {
    mix_seed(&[cfg.seed, alpha_digest(alpha)])
}

/// `Dir(S; α)` by sampling regardless of what other backends are available.
pub fn dirichlet_measure_monte_carlo(
    set: &ConstraintSet,
    alpha: &DirichletParams,
    cfg: &IntegrationConfig,
) -> Result<MeasureEstimate> {
    check_dims(set, alpha)?;
    cfg.validate()?;
    let seed = sampling_seed(cfg, alpha.as_slice());
    let draws = GammaSampleSet::draw(alpha.as_slice(), cfg.samples, seed)?;
    let summary = draws.summarize(set);
    if summary.mass() >= cfg.mass_floor && summary.inside > 0 {
        return Ok(MeasureEstimate {
            log_value: summary.mass().ln(),
            std_error: summary.mass_std_error(),
            backend: Backend::MonteCarlo,
        });
    }
    let center = crate::mle::argmax_weighted(set, alpha.as_slice())?;
    let is = importance_moments(set, alpha.as_slice(), &center, cfg.samples, mix_seed(&[seed, 1]))?;
    Ok(MeasureEstimate { log_value: is.log_mass, std_error: is.mass_std_error, backend: Backend::ImportanceSampling })
}

/// Posterior mean of θ given `θ ∈ S` under Dirichlet(α).
pub fn constrained_moment_ratio(
    set: &ConstraintSet,
    alpha: &DirichletParams,
    cfg: &IntegrationConfig,
) -> Result<MomentRatio> {
    moment_ratio_with_cache(set, alpha, None, cfg)
}

/// As [`constrained_moment_ratio`], reusing a known `ln Dir(S; α)`.
pub(crate) fn moment_ratio_with_cache(
    set: &ConstraintSet,
    alpha: &DirichletParams,
    cached_log_mass: Option<f64>,
    cfg: &IntegrationConfig,
) -> Result<MomentRatio> {
    check_dims(set, alpha)?;
    cfg.validate()?;
    let backend = cfg.backend_for(set);
    if backend.is_sampled() {
        let seed = sampling_seed(cfg, alpha.as_slice());
        let draws = GammaSampleSet::draw(alpha.as_slice(), cfg.samples, seed)?;
        return ratio_from_samples(set, alpha, &draws, cfg, mix_seed(&[seed, 1]));
    }
    let a = alpha.as_slice();
    let total = alpha.concentration();
    let log_mass = match cached_log_mass {
        Some(v) => v,
        None => ln_measure_deterministic(set, a, backend, cfg)?,
    };
    let log_next = (0..a.len())
        .map(|i| ln_measure_deterministic(set, alpha.shifted(i).as_slice(), backend, cfg))
        .collect::<Result<Vec<f64>>>()?;
    let raw: Vec<f64> = a.iter().zip(&log_next).map(|(ai, ln)| ((ai / total).ln() + ln - log_mass).exp()).collect();
    let sum: f64 = raw.iter().sum();
    if !(sum.is_finite() && sum > 0.0) {
        return Err(Error::NonConvergence { what: "constrained moment ratio", achieved: sum });
    }
    Ok(MomentRatio {
        probs: raw.iter().map(|r| r / sum).collect(),
        std_errors: vec![0.0; a.len()],
        log_mass,
        log_next: Some(log_next),
        backend,
        residual: (sum - 1.0).abs(),
    })
}

/// Moment ratio from an existing set of Dirichlet(α) Gamma draws; escalates
/// to importance sampling (seeded by `escalation_seed`) when too few draws
/// land in `S`.
pub(crate) fn ratio_from_samples(
    set: &ConstraintSet,
    alpha: &DirichletParams,
    draws: &GammaSampleSet,
    cfg: &IntegrationConfig,
    escalation_seed: u64,
) -> Result<MomentRatio> {
    let summary: SampleSummary = draws.summarize(set);
    if summary.inside > 1 && summary.mass() >= cfg.mass_floor {
        return Ok(MomentRatio {
            probs: summary.conditional_means(),
            std_errors: summary.conditional_std_errors(),
            log_mass: summary.mass().ln(),
            log_next: None,
            backend: Backend::MonteCarlo,
            residual: 0.0,
        });
    }
    let center = crate::mle::argmax_weighted(set, alpha.as_slice())?;
    let is = importance_moments(set, alpha.as_slice(), &center, cfg.samples, escalation_seed)?;
    Ok(MomentRatio {
        probs: is.probs,
        std_errors: is.std_errors,
        log_mass: is.log_mass,
        log_next: None,
        backend: Backend::ImportanceSampling,
        residual: 0.0,
    })
}

/// `ln Dir(S; α)` for the exact and quadrature backends.
pub(crate) fn ln_measure_deterministic(
    set: &ConstraintSet,
    alpha: &[f64],
    backend: Backend,
    cfg: &IntegrationConfig,
) -> Result<f64> {
    if set.is_whole_simplex() {
        return Ok(0.0);
    }
    let value = match (backend, set.interval()) {
        (Backend::Exact, Some((lo, hi))) => ln_beta_interval_mass(lo, hi, alpha[0], alpha[1])?,
        (Backend::Quadrature, _) => {
            let (lower, upper) = match set.form() {
                ConstraintForm::Box { lower, upper } => (lower, upper),
                _ => unreachable!("quadrature backend is only selected for boxes"),
            };
            let quad = BoxQuadrature::new(alpha, lower, upper, cfg.quad_tol)?;
            let mass = quad.mass(0, 1.0)?;
            if !(mass > MIN_LINEAR_MASS) {
                return Err(Error::MassCollapse { mass, floor: MIN_LINEAR_MASS });
            }
            mass.ln().min(0.0)
        }
        _ => unreachable!("no deterministic backend for this constraint set"),
    };
    if value == f64::NEG_INFINITY {
        return Err(Error::MassCollapse { mass: 0.0, floor: 0.0 });
    }
    Ok(value.min(0.0))
}

/// Stick-breaking integration of a Dirichlet law over a box.
struct BoxQuadrature<'a> {
    alpha: &'a [f64],
    lower: &'a [f64],
    upper: &'a [f64],
    /// `α_{j+1} + … + α_m` (0-based `j`).
    tail_alpha: Vec<f64>,
    /// `a_j + … + a_{m-1}`, with a trailing zero.
    tail_lower: Vec<f64>,
    ln_norm: Vec<f64>,
    outer_tol: f64,
    inner_tol: f64,
}

impl<'a> BoxQuadrature<'a> {
    fn new(alpha: &'a [f64], lower: &'a [f64], upper: &'a [f64], tol: f64) -> Result<Self> {
        let k = lower.len();
        let tail_alpha: Vec<f64> = (0..k).map(|j| alpha[j + 1..].iter().sum()).collect();
        let mut tail_lower = vec![0.0; k + 1];
        for j in (0..k).rev() {
            tail_lower[j] = tail_lower[j + 1] + lower[j];
        }
        let ln_norm = (0..k).map(|j| log_beta2(alpha[j], tail_alpha[j])).collect::<Result<Vec<f64>>>()?;
        Ok(Self {
            alpha,
            lower,
            upper,
            tail_alpha,
            tail_lower,
            ln_norm,
            outer_tol: tol,
            inner_tol: (tol * 1e-2).max(1e-14),
        })
    }

    /// Probability that the box constraints on coordinates `j..` hold, given
    /// that coordinates `j..m` share total mass `r`.
    fn mass(&self, j: usize, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Ok(0.0);
        }
        let a = self.alpha[j];
        let b = self.tail_alpha[j];
        let u_lo = (self.lower[j] / r).max(0.0);
        let u_hi = (self.upper[j] / r).min(1.0 - self.tail_lower[j + 1] / r).min(1.0);
        if u_hi <= u_lo {
            return Ok(0.0);
        }
        if j + 1 == self.lower.len() {
            return Ok(ln_beta_interval_mass(u_lo, u_hi, a, b)?.exp());
        }

        let tol = if j == 0 { self.outer_tol } else { self.inner_tol };
        let opts = QuadOptions { abs_tol: 0.0, rel_tol: tol, max_intervals: 4000 };
        let ln_norm = self.ln_norm[j];

        // kinks of the inner mass as a function of u
        let mut points = vec![u_lo, u_hi];
        let next = j + 1;
        for rr in [self.upper[next], self.tail_lower[next], self.upper[next] + self.tail_lower[next + 1]] {
            points.push(1.0 - rr / r);
        }
        // the peak of the Beta(a, b) weight
        let mean = a / (a + b);
        let sd = (a * b / ((a + b) * (a + b) * (a + b + 1.0))).sqrt();
        points.push(mean);
        for k in [1.0, 2.0, 4.0, 8.0] {
            points.push(mean - k * sd);
            points.push(mean + k * sd);
        }
        points.retain(|p| p.is_finite() && *p >= u_lo && *p <= u_hi);
        points.sort_by(f64::total_cmp);
        points.dedup();

        // Endpoint singularities of the Beta weight (shape < 1) are removed
        // by u = s^{1/a} near 0 and 1 - u = t^{1/b} near 1.
        let left_sub = u_lo == 0.0 && a < 1.0;
        let right_sub = u_hi == 1.0 && b < 1.0;
        let c_left = if left_sub { mean.min(u_hi) } else { u_lo };
        let c_right = if right_sub { mean.max(c_left) } else { u_hi };

        let mut total = 0.0;
        if left_sub && c_left > u_lo {
            let pts: Vec<f64> =
                points.iter().filter(|&&p| p <= c_left).map(|p| p.powf(a)).chain([c_left.powf(a)]).collect();
            let pts = sorted_unique(pts);
            let scale = -(a.ln()) - ln_norm;
            let f = |s: f64| -> Result<f64> {
                let u = s.powf(1.0 / a);
                let w = ((b - 1.0) * (-u).ln_1p() + scale).exp();
                Ok(w * self.mass(next, r * (1.0 - u))?)
            };
            total += integrate(f, &pts, opts)?.value;
        }
        if c_right > c_left {
            let pts: Vec<f64> = [c_left, c_right]
                .into_iter()
                .chain(points.iter().copied().filter(|&p| p > c_left && p < c_right))
                .collect();
            let pts = sorted_unique(pts);
            let f = |u: f64| -> Result<f64> {
                if u <= 0.0 || u >= 1.0 {
                    return Ok(0.0);
                }
                let w = ((a - 1.0) * u.ln() + (b - 1.0) * (-u).ln_1p() - ln_norm).exp();
                Ok(w * self.mass(next, r * (1.0 - u))?)
            };
            total += integrate(f, &pts, opts)?.value;
        }
        if right_sub && u_hi > c_right {
            let pts: Vec<f64> = points
                .iter()
                .filter(|&&p| p >= c_right)
                .map(|p| (1.0 - p).max(0.0).powf(b))
                .chain([(1.0 - c_right).powf(b), 0.0])
                .collect();
            let pts = sorted_unique(pts);
            let scale = -(b.ln()) - ln_norm;
            let f = |t: f64| -> Result<f64> {
                let u = 1.0 - t.powf(1.0 / b);
                if u <= 0.0 {
                    return Ok(0.0);
                }
                let w = ((a - 1.0) * u.ln() + scale).exp();
                Ok(w * self.mass(next, r * (1.0 - u))?)
            };
            total += integrate(f, &pts, opts)?.value;
        }
        Ok(total)
    }
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}
