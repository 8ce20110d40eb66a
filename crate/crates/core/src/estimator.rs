//! The sequential constrained-KT estimator and the mixture it realises.
//!
//! After counts `k`, the next symbol is predicted with the posterior mean of θ
//! under the Jeffreys prior truncated to `S`:
//!
//! ```text
//! M(i | x^n) = (k_i + ½)/(n + m/2) · Dir(S; k + e_i + ½) / Dir(S; k + ½)
//! ```
//!
//! which collapses to the KT rule `(k_i + ½)/(n + m/2)` when `S` is the whole
//! simplex. Multiplying the predictions telescopes to the mixture
//!
//! ```text
//! ln M(x^n) = ln B(k + ½) - ln B(½) - ln C(S) + ln Dir(S; k + ½),
//! ```
//!
//! available directly from the final counts through [`log_mixture_direct`].
//!
//! Symbols are 0-based indices `0..m` throughout the API.
//!
//! Three engines back the state:
//!
//! - KT closed form for the whole simplex;
//! - exact or quadrature measures, with `ln Dir(S; k + ½)` cached so a step
//!   costs `m` new measure evaluations (one incomplete-beta pair per symbol for
//!   `m = 2`);
//! - Monte Carlo, where one shared set of Gamma variates is carried along and
//!   advanced by adding an independent `Exp(1)` variate to the observed
//!   coordinate. Every step's randomness is seeded from
//!   `(seed, step, digest of α)`, so an encoder and a decoder running the same
//!   inputs reproduce identical probabilities.

use crate::constraints::{
    alpha_digest, dirichlet_measure, jeffreys_constant, ln_measure_deterministic, mix_seed, moment_ratio_with_cache,
    ratio_from_samples, Backend, ConstraintSet, DirichletParams, GammaSampleSet, IntegrationConfig, MeasureEstimate,
};
use crate::error::{Error, Result};
use crate::mle::CountVector;
use crate::specfn::log_beta;

/// Smallest probability the estimator will emit.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Conditional distribution of the next symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDistribution {
    pub probs: Vec<f64>,
    /// Standard errors of `probs` (zeros for deterministic backends).
    pub std_errors: Vec<f64>,
    pub backend: Backend,
    /// Whether any probability was raised to [`PROBABILITY_FLOOR`].
    pub clamped: bool,
    log_next: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
enum Engine {
    Kt,
    Deterministic { backend: Backend, log_mass: f64 },
    Sampled { draws: GammaSampleSet },
}

/// Counts plus whatever cached measures the backend needs to predict the
/// next symbol.
#[derive(Debug, Clone)]
pub struct EstimatorState {
    set: ConstraintSet,
    cfg: IntegrationConfig,
    seed: u64,
    counts: CountVector,
    log_c: MeasureEstimate,
    log_mixture: f64,
    log_mixture_var: f64,
    clamps: usize,
    engine: Engine,
}

impl EstimatorState {
    pub fn new(set: ConstraintSet, cfg: IntegrationConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let m = set.alphabet_size();
        let log_c = jeffreys_constant(&set, &cfg)?;
        if !log_c.log_value.is_finite() {
            return Err(Error::ZeroMeasure("the constraint set has no Jeffreys mass".into()));
        }
        let base_seed = mix_seed(&[cfg.seed, seed]);
        let engine = if set.is_whole_simplex() && !cfg.backend_for(&set).is_sampled() {
            Engine::Kt
        } else {
            match cfg.backend_for(&set) {
                b @ (Backend::Exact | Backend::Quadrature) => {
                    Engine::Deterministic { backend: b, log_mass: log_c.log_value }
                }
                _ => {
                    let alpha = DirichletParams::jeffreys(m);
                    let seed = mix_seed(&[base_seed, 0, alpha_digest(alpha.as_slice()), 0]);
                    Engine::Sampled { draws: GammaSampleSet::draw(alpha.as_slice(), cfg.samples, seed)? }
                }
            }
        };
        Ok(Self {
            counts: CountVector::zeros(m)?,
            set,
            cfg,
            seed: base_seed,
            log_c,
            log_mixture: 0.0,
            log_mixture_var: 0.0,
            clamps: 0,
            engine,
        })
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.set
    }

    pub fn config(&self) -> &IntegrationConfig {
        &self.cfg
    }

    pub fn counts(&self) -> &CountVector {
        &self.counts
    }

    /// `ln C(S)` as estimated at construction.
    pub fn jeffreys_constant(&self) -> MeasureEstimate {
        self.log_c
    }

    /// Running `ln M(x^n)`: the sum of the logs of the emitted predictions.
    pub fn log_mixture(&self) -> f64 {
        self.log_mixture
    }

    /// Standard error of [`Self::log_mixture`] from sampled predictions
    /// (first-order propagation; zero for deterministic backends).
    pub fn log_mixture_std_error(&self) -> f64 {
        self.log_mixture_var.sqrt()
    }

    /// How many emitted predictions needed the probability floor.
    pub fn clamp_count(&self) -> usize {
        self.clamps
    }

    fn alpha(&self) -> DirichletParams {
        DirichletParams::from_counts(self.counts.as_slice())
    }

    fn step_seed(&self, alpha: &DirichletParams, purpose: u64) -> u64 {
        mix_seed(&[self.seed, self.counts.n(), alpha_digest(alpha.as_slice()), purpose])
    }

    /// Distribution of the next symbol given the counts so far.
    pub fn predict(&self) -> Result<PredictiveDistribution> {
        let m = self.set.alphabet_size();
        let (probs, std_errors, backend, log_next) = match &self.engine {
            Engine::Kt => {
                let denom = self.counts.n() as f64 + m as f64 / 2.0;
                let probs = self.counts.as_slice().iter().map(|&k| (k as f64 + 0.5) / denom).collect();
                (probs, vec![0.0; m], Backend::Exact, None)
            }
            Engine::Deterministic { log_mass, .. } => {
                let r = moment_ratio_with_cache(&self.set, &self.alpha(), Some(*log_mass), &self.cfg)?;
                (r.probs, r.std_errors, r.backend, r.log_next)
            }
            Engine::Sampled { draws } => {
                let alpha = self.alpha();
                let r = ratio_from_samples(&self.set, &alpha, draws, &self.cfg, self.step_seed(&alpha, 1))?;
                (r.probs, r.std_errors, r.backend, None)
            }
        };
        Ok(floor_probs(probs, std_errors, backend, log_next))
    }

    /// Records `symbol`, returning the prediction it was charged against.
    pub fn update(&mut self, symbol: usize) -> Result<PredictiveDistribution> {
        let prediction = self.predict()?;
        self.update_with(symbol, &prediction)?;
        Ok(prediction)
    }

    /// Records `symbol` using a prediction already obtained from
    /// [`Self::predict`] on the current state.
    pub fn update_with(&mut self, symbol: usize, prediction: &PredictiveDistribution) -> Result<()> {
        let m = self.set.alphabet_size();
        if symbol >= m {
            return Err(Error::InvalidSymbol { symbol, m });
        }
        if prediction.probs.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: prediction.probs.len() });
        }
        let p = prediction.probs[symbol];
        self.log_mixture += p.ln();
        self.log_mixture_var += (prediction.std_errors[symbol] / p).powi(2);
        if prediction.clamped {
            self.clamps += 1;
        }
        let alpha = self.alpha();
        let increment_seed = self.step_seed(&alpha, 2);
        match &mut self.engine {
            Engine::Kt => {}
            Engine::Deterministic { backend, log_mass } => {
                *log_mass = match &prediction.log_next {
                    Some(next) => next[symbol],
                    None => ln_measure_deterministic(&self.set, alpha.shifted(symbol).as_slice(), *backend, &self.cfg)?,
                };
            }
            Engine::Sampled { draws } => draws.increment(symbol, increment_seed),
        }
        self.counts.increment(symbol);
        Ok(())
    }
}

fn floor_probs(
    mut probs: Vec<f64>,
    std_errors: Vec<f64>,
    backend: Backend,
    log_next: Option<Vec<f64>>,
) -> PredictiveDistribution {
    let clamped = probs.iter().any(|&p| !(p >= PROBABILITY_FLOOR));
    if clamped {
        for p in probs.iter_mut() {
            if !(*p >= PROBABILITY_FLOOR) {
                *p = PROBABILITY_FLOOR;
            }
        }
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
    }
    PredictiveDistribution { probs, std_errors, backend, clamped, log_next }
}

/// `ln M(x^n)` with its standard error (zero for deterministic backends).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureValue {
    pub log_value: f64,
    pub std_error: f64,
    pub backend: Backend,
}

/// `ln M(x^n)` from the sequence's counts alone.
pub fn log_mixture_direct(symbols: &[usize], set: &ConstraintSet, cfg: &IntegrationConfig) -> Result<f64> {
    let k = CountVector::from_symbols(symbols, set.alphabet_size())?;
    Ok(log_mixture_counts(&k, set, cfg)?.log_value)
}

/// `ln M` of any sequence with counts `k`.
pub fn log_mixture_counts(k: &CountVector, set: &ConstraintSet, cfg: &IntegrationConfig) -> Result<MixtureValue> {
    let c = jeffreys_constant(set, cfg)?;
    log_mixture_counts_with_constant(k, set, cfg, &c)
}

/// As [`log_mixture_counts`], reusing a computed `C(S)`.
pub fn log_mixture_counts_with_constant(
    k: &CountVector,
    set: &ConstraintSet,
    cfg: &IntegrationConfig,
    c: &MeasureEstimate,
) -> Result<MixtureValue> {
    let m = set.alphabet_size();
    if k.m() != m {
        return Err(Error::DimensionMismatch { expected: m, got: k.m() });
    }
    let alpha = DirichletParams::from_counts(k.as_slice());
    let prior = DirichletParams::jeffreys(m);
    let d = dirichlet_measure(set, &alpha, cfg)?;
    let log_value = log_beta(alpha.as_slice())? - log_beta(prior.as_slice())? - c.log_value + d.log_value;
    let rel = |e: &MeasureEstimate| if e.std_error > 0.0 { e.std_error / e.value() } else { 0.0 };
    Ok(MixtureValue { log_value, std_error: (rel(c).powi(2) + rel(&d).powi(2)).sqrt(), backend: d.backend })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::BackendPreference;

    fn interval(a: f64, b: f64) -> ConstraintSet {
        ConstraintSet::boxed(vec![a], vec![b]).unwrap()
    }

    #[test]
    fn kt_start() {
        let st = EstimatorState::new(ConstraintSet::full(2).unwrap(), IntegrationConfig::default(), 0).unwrap();
        assert_eq!(st.predict().unwrap().probs, vec![0.5, 0.5]);
        let st = EstimatorState::new(ConstraintSet::full(3).unwrap(), IntegrationConfig::default(), 0).unwrap();
        for p in st.predict().unwrap().probs {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn kt_sequence() {
        let mut st = EstimatorState::new(ConstraintSet::full(2).unwrap(), IntegrationConfig::default(), 0).unwrap();
        st.update(0).unwrap();
        assert_eq!(st.counts().as_slice(), &[1, 0]);
        assert!((st.log_mixture() - 0.5f64.ln()).abs() < 1e-15);
        st.update(0).unwrap();
        assert!((st.log_mixture() - (3.0f64 / 8.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn box_state_caches_jeffreys_constant() {
        let st = EstimatorState::new(interval(0.2, 0.6), IntegrationConfig::default(), 0).unwrap();
        let c = 2.0 / std::f64::consts::PI * (0.6f64.sqrt().asin() - 0.2f64.sqrt().asin());
        assert!((st.jeffreys_constant().log_value - c.ln()).abs() < 1e-13);
    }

    #[test]
    fn degenerate_box_is_rejected() {
        assert!(ConstraintSet::boxed(vec![0.3], vec![0.3]).is_err());
    }

    #[test]
    fn posterior_mean_prediction() {
        let mut st = EstimatorState::new(interval(0.2, 0.6), IntegrationConfig::default(), 0).unwrap();
        for s in [0, 0, 0, 0, 0, 0, 0, 0, 0, 1] {
            st.update(s).unwrap();
        }
        let p = st.predict().unwrap();
        assert!((p.probs[0] - 0.540_020_063_430_855_2).abs() < 1e-11);
        assert!(p.probs[0] > 0.2 && p.probs[0] < 0.6);
    }

    #[test]
    fn telescoping_on_an_interval() {
        let set = interval(0.2, 0.6);
        let cfg = IntegrationConfig::default();
        let seq = [0, 1, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0];
        let mut st = EstimatorState::new(set.clone(), cfg, 0).unwrap();
        for &s in &seq {
            st.update(s).unwrap();
        }
        let direct = log_mixture_direct(&seq, &set, &cfg).unwrap();
        assert!((st.log_mixture() - direct).abs() < 1e-10);
    }

    #[test]
    fn direct_mixture_examples() {
        let full = ConstraintSet::full(2).unwrap();
        let cfg = IntegrationConfig::default();
        assert!((log_mixture_direct(&[0], &full, &cfg).unwrap() - 0.5f64.ln()).abs() < 1e-14);
        assert!((log_mixture_direct(&[0, 0], &full, &cfg).unwrap() - (3.0f64 / 8.0).ln()).abs() < 1e-14);
        assert_eq!(
            log_mixture_direct(&[0, 1, 1], &full, &cfg).unwrap(),
            log_mixture_direct(&[1, 0, 1], &full, &cfg).unwrap()
        );
    }

    #[test]
    fn sampled_estimator_is_deterministic_and_normalised() {
        let set = ConstraintSet::boxed(vec![0.1, 0.1, 0.1], vec![0.5, 0.5, 0.5]).unwrap();
        let cfg = IntegrationConfig { quadrature_max_m: 3, samples: 2000, ..IntegrationConfig::default() };
        let seq = [0, 1, 2, 3, 0, 0, 1, 2];
        let run = || {
            let mut st = EstimatorState::new(set.clone(), cfg, 42).unwrap();
            let mut preds = Vec::new();
            for &s in &seq {
                preds.push(st.update(s).unwrap());
            }
            (st.log_mixture(), preds)
        };
        let (a, pa) = run();
        let (b, pb) = run();
        assert_eq!(a, b);
        assert_eq!(pa, pb);
        for p in &pa {
            assert_eq!(p.backend, Backend::MonteCarlo);
            assert!((p.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn forced_sampling_tracks_exact_mixture() {
        let set = interval(0.3, 0.7);
        let cfg = IntegrationConfig {
            backend: BackendPreference::MonteCarlo,
            samples: 20_000,
            ..IntegrationConfig::default()
        };
        let seq: Vec<usize> = (0..30).map(|i| usize::from(i % 3 == 0)).collect();
        let mut st = EstimatorState::new(set.clone(), cfg, 3).unwrap();
        for &s in &seq {
            st.update(s).unwrap();
        }
        let exact = log_mixture_direct(&seq, &set, &IntegrationConfig::default()).unwrap();
        assert!((st.log_mixture() - exact).abs() < 4.0 * st.log_mixture_std_error() + 1e-3);
    }
}
