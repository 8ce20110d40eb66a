//! Monte Carlo machinery: Dirichlet sampling through normalised Gamma
//! variates, shared-sample summaries, and the self-normalised importance
//! sampler used when the posterior mass inside `S` collapses.
//!
//! All randomness is drawn in fixed-size chunks whose generators are seeded
//! from `(seed, chunk index)`, so results depend only on the inputs and never
//! on how work is split.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};

use super::{ConstraintSet, SimplexPoint};
use crate::error::{Error, Result};
use crate::specfn::{log_beta, LogSumAccumulator};

const CHUNK: usize = 4096;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive 64-bit mix of several words, used to derive child seeds.
pub fn mix_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x6A09_E667_F3BC_C908u64, |h, &p| splitmix64(h ^ splitmix64(p)))
}

pub(crate) fn alpha_digest(alpha: &[f64]) -> u64 {
    let bits: Vec<u64> = alpha.iter().map(|a| a.to_bits()).collect();
    mix_seed(&bits)
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(&[seed, chunk as u64]))
}

fn gamma_dists(alpha: &[f64]) -> Result<Vec<Gamma<f64>>> {
    alpha
        .iter()
        .map(|&a| {
            Gamma::new(a, 1.0).map_err(|e| Error::Domain { what: "gamma sampler", detail: format!("shape {a}: {e}") })
        })
        .collect()
}

/// `count` i.i.d. Dirichlet(α) draws.
pub fn sample_dirichlet(alpha: &super::DirichletParams, count: usize, seed: u64) -> Result<Vec<SimplexPoint>> {
    let set = GammaSampleSet::draw(alpha.as_slice(), count, seed)?;
    Ok(set
        .rows()
        .map(|g| {
            let total: f64 = g.iter().sum();
            SimplexPoint::new_unchecked(g.iter().map(|x| x / total).collect())
        })
        .collect())
}

/// A matrix of independent Gamma(α_i, 1) variates, one row per sample.
///
/// Normalising a row gives a Dirichlet(α) draw. Because
/// `Gamma(a) + Exp(1) ~ Gamma(a + 1)`, adding a fresh exponential variate to
/// column `i` turns the set into an exact sample from Dirichlet(α + e_i);
/// this is how the sequential estimator advances its samples in `O(N)` per
/// symbol.
#[derive(Debug, Clone)]
pub struct GammaSampleSet {
    m: usize,
    gammas: Vec<f64>,
}

impl GammaSampleSet {
    pub fn draw(alpha: &[f64], count: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("sample count must be at least 1".into()));
        }
        let m = alpha.len();
        let dists = gamma_dists(alpha)?;
        let mut gammas = Vec::with_capacity(count * m);
        for chunk in 0..count.div_ceil(CHUNK) {
            let mut rng = chunk_rng(seed, chunk);
            let rows = CHUNK.min(count - chunk * CHUNK);
            for _ in 0..rows {
                for d in &dists {
                    gammas.push(d.sample(&mut rng));
                }
            }
        }
        Ok(Self { m, gammas })
    }

    pub fn len(&self) -> usize {
        self.gammas.len() / self.m
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.gammas.chunks_exact(self.m)
    }

    /// Shifts every sample from shape `α_coord` to `α_coord + 1`.
    pub fn increment(&mut self, coord: usize, seed: u64) {
        let m = self.m;
        let count = self.len();
        for chunk in 0..count.div_ceil(CHUNK) {
            let mut rng = chunk_rng(seed, chunk);
            let start = chunk * CHUNK;
            let end = (start + CHUNK).min(count);
            for row in start..end {
                let e: f64 = Exp1.sample(&mut rng);
                self.gammas[row * m + coord] += e;
            }
        }
    }

    pub fn summarize(&self, set: &ConstraintSet) -> SampleSummary {
        let m = self.m;
        let mut summary = SampleSummary { total: self.len(), inside: 0, sum: vec![0.0; m], sum_sq: vec![0.0; m] };
        for g in self.rows() {
            let total: f64 = g.iter().sum();
            if !(total > 0.0) || !set.contains_scaled(g, total) {
                continue;
            }
            summary.inside += 1;
            for (i, &gi) in g.iter().enumerate() {
                let t = gi / total;
                summary.sum[i] += t;
                summary.sum_sq[i] += t * t;
            }
        }
        summary
    }
}

/// Indicator and coordinate moments of a shared sample set.
#[derive(Debug, Clone)]
pub struct SampleSummary {
    pub total: usize,
    pub inside: usize,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

impl SampleSummary {
    pub fn mass(&self) -> f64 {
        self.inside as f64 / self.total as f64
    }

    /// Binomial standard error of the indicator mean.
    pub fn mass_std_error(&self) -> f64 {
        let p = self.mass();
        (p * (1.0 - p) / self.total as f64).sqrt()
    }

    /// Conditional means `E[θ_i | θ ∈ S]`; they sum to one because every
    /// sample does.
    pub fn conditional_means(&self) -> Vec<f64> {
        let k = self.inside as f64;
        self.sum.iter().map(|s| s / k).collect()
    }

    pub fn conditional_std_errors(&self) -> Vec<f64> {
        let k = self.inside as f64;
        self.sum
            .iter()
            .zip(&self.sum_sq)
            .map(|(s, q)| {
                let mean = s / k;
                let var = (q / k - mean * mean).max(0.0) * k / (k - 1.0).max(1.0);
                (var / k).sqrt()
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct ImportanceEstimate {
    pub log_mass: f64,
    pub mass_std_error: f64,
    pub probs: Vec<f64>,
    pub std_errors: Vec<f64>,
}

/// Self-normalised importance sampling of the Dirichlet(α) law restricted to
/// `S`, with a Dirichlet proposal of the same total concentration centred at
/// `center` (a point of `S`).
pub(crate) fn importance_moments(
    set: &ConstraintSet,
    alpha: &[f64],
    center: &[f64],
    count: usize,
    seed: u64,
) -> Result<ImportanceEstimate> {
    let m = alpha.len();
    let concentration: f64 = alpha.iter().sum();
    let proposal: Vec<f64> = center.iter().map(|c| (concentration * c).max(0.5)).collect();
    let ln_norm = log_beta(&proposal)? - log_beta(alpha)?;
    let draws = GammaSampleSet::draw(&proposal, count, seed)?;

    let mut log_weights = Vec::with_capacity(count);
    let mut thetas: Vec<f64> = Vec::with_capacity(count * m);
    let mut acc = LogSumAccumulator::new();
    let mut theta = vec![0.0; m];
    for g in draws.rows() {
        let total: f64 = g.iter().sum();
        if !(total > 0.0) || !set.contains_scaled(g, total) {
            continue;
        }
        for i in 0..m {
            theta[i] = g[i] / total;
        }
        if theta.iter().any(|&t| t <= 0.0) {
            continue;
        }
        let lw: f64 =
            ln_norm + alpha.iter().zip(&proposal).zip(&theta).map(|((a, b), t)| (a - b) * t.ln()).sum::<f64>();
        acc.push(lw);
        log_weights.push(lw);
        thetas.extend_from_slice(&theta);
    }
    if log_weights.is_empty() {
        return Err(Error::MassCollapse { mass: 0.0, floor: 0.0 });
    }
    let ln_sum = acc.value();
    let log_mass = ln_sum - (count as f64).ln();
    // normalised weights
    let w: Vec<f64> = log_weights.iter().map(|lw| (lw - ln_sum).exp()).collect();
    let mut probs = vec![0.0; m];
    for (wj, t) in w.iter().zip(thetas.chunks_exact(m)) {
        for i in 0..m {
            probs[i] += wj * t[i];
        }
    }
    let mut var = vec![0.0; m];
    for (wj, t) in w.iter().zip(thetas.chunks_exact(m)) {
        for i in 0..m {
            var[i] += wj * wj * (t[i] - probs[i]).powi(2);
        }
    }
    // With unnormalised weights W_j the mass estimate is Z = ΣW/N; its
    // standard error is Z·sqrt((N·Σw² - 1)/(N - 1)) for normalised w.
    let n = count as f64;
    let second: f64 = w.iter().map(|x| x * x).sum();
    let mass_std_error = log_mass.exp() * ((n * second - 1.0).max(0.0) / (n - 1.0).max(1.0)).sqrt();
    Ok(ImportanceEstimate { log_mass, mass_std_error, probs, std_errors: var.iter().map(|v| v.sqrt()).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::DirichletParams;

    #[test]
    fn uniform_dirichlet_means() {
        let alpha = DirichletParams::new(vec![1.0; 4]).unwrap();
        let count = 100_000;
        let samples = sample_dirichlet(&alpha, count, 7).unwrap();
        for i in 0..4 {
            let xs: Vec<f64> = samples.iter().map(|s| s.as_slice()[i]).collect();
            let mean = xs.iter().sum::<f64>() / count as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count as f64 - 1.0);
            let se = (var / count as f64).sqrt();
            assert!((mean - 0.25).abs() < 4.0 * se, "coordinate {i}: {mean} ± {se}");
        }
    }

    #[test]
    fn arcsine_symmetry() {
        let alpha = DirichletParams::new(vec![0.5, 0.5]).unwrap();
        let count = 100_000;
        let below = sample_dirichlet(&alpha, count, 11).unwrap().iter().filter(|s| s.as_slice()[0] < 0.5).count()
            as f64
            / count as f64;
        let se = (0.25 / count as f64).sqrt();
        assert!((below - 0.5).abs() < 4.0 * se);
    }

    #[test]
    fn beta_two_one_mean() {
        // Dirichlet(2,1) mean of θ_1 is 2/3
        let alpha = DirichletParams::new(vec![2.0, 1.0]).unwrap();
        let count = 100_000;
        let xs: Vec<f64> = sample_dirichlet(&alpha, count, 3).unwrap().iter().map(|s| s.as_slice()[0]).collect();
        let mean = xs.iter().sum::<f64>() / count as f64;
        // Var = ab / ((a+b)^2 (a+b+1)) = 2/36
        let se = (2.0 / 36.0 / count as f64).sqrt();
        assert!((mean - 2.0 / 3.0).abs() < 4.0 * se);
    }

    #[test]
    fn draws_are_deterministic_per_seed() {
        let a = GammaSampleSet::draw(&[0.5, 1.5, 2.0], 10_000, 99).unwrap();
        let b = GammaSampleSet::draw(&[0.5, 1.5, 2.0], 10_000, 99).unwrap();
        let c = GammaSampleSet::draw(&[0.5, 1.5, 2.0], 10_000, 100).unwrap();
        assert_eq!(a.gammas, b.gammas);
        assert_ne!(a.gammas, c.gammas);
        // a prefix of a longer draw is the shorter draw
        let long = GammaSampleSet::draw(&[0.5, 1.5, 2.0], 12_000, 99).unwrap();
        assert_eq!(&long.gammas[..a.gammas.len()], &a.gammas[..]);
    }

    #[test]
    fn increment_shifts_shape_by_one() {
        // Gamma(0.5) + Exp(1) has mean 1.5
        let mut set = GammaSampleSet::draw(&[0.5, 0.5], 50_000, 5).unwrap();
        set.increment(0, 6);
        let col: Vec<f64> = set.rows().map(|r| r[0]).collect();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let se = (1.5f64 / col.len() as f64).sqrt();
        assert!((mean - 1.5).abs() < 4.0 * se);
    }

    #[test]
    fn mix_seed_is_order_sensitive() {
        assert_ne!(mix_seed(&[1, 2]), mix_seed(&[2, 1]));
        assert_eq!(mix_seed(&[1, 2]), mix_seed(&[1, 2]));
    }
}
