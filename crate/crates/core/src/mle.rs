//! Constrained maximum likelihood over `S`, Shtarkov sums by type-class
//! enumeration, and the normalised maximum-likelihood (NML) distribution.
//!
//! Boxes (and every `m = 2` set) are solved in closed form by water-filling:
//! `θ_i = clip(k_i/λ, a_i, b_i)` is piecewise linear in `1/λ`, so the level
//! `λ` is found exactly between consecutive breakpoints rather than by
//! iteration. General polytopes use Frank–Wolfe with away steps and an exact
//! line search over the polytope's vertices.

use crate::constraints::{ConstraintSet, SimplexPoint};
use crate::error::{Error, Result};
use crate::specfn::{log_multinomial, LogSumAccumulator};

/// Maximum number of type classes an exact enumeration may visit.
pub const ENUMERATION_GUARD: f64 = 1e8;

const FW_GAP_TOL: f64 = 1e-8;
const FW_MAX_ITER: usize = 10_000;

/// Symbol counts `k = (k_1, …, k_m)` of a sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CountVector {
    counts: Vec<u64>,
    n: u64,
}

impl CountVector {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::InvalidParameter(format!("alphabet size must be at least 2, got {}", counts.len())));
        }
        let n = counts.iter().sum();
        Ok(Self { counts, n })
    }

    pub fn zeros(m: usize) -> Result<Self> {
        Self::new(vec![0; m])
    }

    /// Counts of a sequence of 0-based symbols.
    pub fn from_symbols(symbols: &[usize], m: usize) -> Result<Self> {
        let mut counts = vec![0u64; m];
        for &s in symbols {
            if s >= m {
                return Err(Error::InvalidSymbol { symbol: s, m });
            }
            counts[s] += 1;
        }
        Self::new(counts)
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn m(&self) -> usize {
        self.counts.len()
    }

    pub fn increment(&mut self, symbol: usize) {
        self.counts[symbol] += 1;
        self.n += 1;
    }

    /// The empirical distribution `k/n` (requires `n ≥ 1`).
    pub fn empirical(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.counts.iter().map(|&k| k as f64 / n).collect()
    }
}

fn check_counts(k: &CountVector, set: &ConstraintSet) -> Result<()> {
    if k.m() != set.alphabet_size() {
        return Err(Error::DimensionMismatch { expected: set.alphabet_size(), got: k.m() });
    }
    if k.n() == 0 {
        return Err(Error::InvalidParameter("maximum likelihood needs at least one symbol".into()));
    }
    Ok(())
}

/// `argmax_{θ∈S} Σ k_i ln θ_i`. Returns `k/n` itself when it lies in `S`.
pub fn constrained_mle(k: &CountVector, set: &ConstraintSet) -> Result<SimplexPoint> {
    check_counts(k, set)?;
    let empirical = k.empirical();
    if set.contains_slice(&empirical) {
        return Ok(SimplexPoint::new_unchecked(empirical));
    }
    let weights: Vec<f64> = k.as_slice().iter().map(|&c| c as f64).collect();
    Ok(SimplexPoint::new_unchecked(argmax_weighted(set, &weights)?))
}

/// `argmax_{θ∈S} Σ w_i ln θ_i` for nonnegative real weights.
pub(crate) fn argmax_weighted(set: &ConstraintSet, weights: &[f64]) -> Result<Vec<f64>> {
    if let Some((lo, hi)) = box_bounds(set) {
        return Ok(water_fill(weights, &lo, &hi));
    }
    frank_wolfe(set, weights)
}

/// Bounds on all `m` coordinates when `S` is a coordinate box.
fn box_bounds(set: &ConstraintSet) -> Option<(Vec<f64>, Vec<f64>)> {
    if let Some((a, b)) = set.interval() {
        return Some((vec![a, 0.0], vec![b, 1.0]));
    }
    set.full_box_bounds()
}

/// Exact solution of `max Σ w_i ln θ_i` over `lo ≤ θ ≤ hi`, `Σθ = 1`.
///
/// Zero-weight coordinates sit at their lower bound unless the positive ones
/// cannot absorb the remaining mass at their upper bounds, in which case the
/// excess goes to the zero-weight coordinates from the last one backwards
/// (the lexicographically smallest optimum).
fn water_fill(w: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let m = w.len();
    let positive: Vec<usize> = (0..m).filter(|&i| w[i] > 0.0).collect();
    let zero_floor: f64 = (0..m).filter(|&i| w[i] <= 0.0).map(|i| lo[i]).sum();
    let level = |lambda: f64| -> f64 {
        zero_floor + positive.iter().map(|&i| (w[i] / lambda).clamp(lo[i], hi[i])).sum::<f64>()
    };
    let cap: f64 = zero_floor + positive.iter().map(|&i| hi[i]).sum::<f64>();

    let mut theta: Vec<f64> = (0..m).map(|i| if w[i] > 0.0 { hi[i] } else { lo[i] }).collect();
    if positive.is_empty() || cap <= 1.0 {
        let mut excess = 1.0 - theta.iter().sum::<f64>();
        for i in (0..m).rev().filter(|&i| w[i] <= 0.0) {
            if excess <= 0.0 {
                break;
            }
            let add = excess.min(hi[i] - theta[i]);
            theta[i] += add;
            excess -= add;
        }
        return theta;
    }

    // level(λ) is continuous and nonincreasing; bracket the crossing of 1
    // between consecutive breakpoints w_i/b_i, w_i/a_i.
    let mut breaks: Vec<f64> =
        positive.iter().flat_map(|&i| [w[i] / hi[i], w[i] / lo[i]]).filter(|x| x.is_finite() && *x > 0.0).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut lower = 0.0; // level(lower) ≥ 1
    let mut upper = f64::INFINITY; // level(upper) ≤ 1
    for &bp in &breaks {
        if level(bp) >= 1.0 {
            lower = bp;
        } else {
            upper = bp;
            break;
        }
    }
    let probe = if upper.is_finite() { 0.5 * (lower + upper) } else { lower * 2.0 + 1.0 };
    // on (lower, upper) the set of unclamped coordinates is fixed
    let mut free_weight = 0.0;
    let mut clamped = zero_floor;
    for &i in &positive {
        let t = w[i] / probe;
        if t <= lo[i] {
            clamped += lo[i];
        } else if t >= hi[i] {
            clamped += hi[i];
        } else {
            free_weight += w[i];
        }
    }
    let lambda = if free_weight > 0.0 && clamped < 1.0 { free_weight / (1.0 - clamped) } else { probe };
    for &i in &positive {
        theta[i] = (w[i] / lambda).clamp(lo[i], hi[i]);
    }
    theta
}

#[cfg(test)]
fn objective(w: &[f64], theta: &[f64]) -> f64 {
    w.iter().zip(theta).filter(|(wi, _)| **wi > 0.0).map(|(wi, t)| wi * t.ln()).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Frank–Wolfe with away steps over the vertex set of a polytope.
fn frank_wolfe(set: &ConstraintSet, w: &[f64]) -> Result<Vec<f64>> {
    let vertices = set.vertices();
    let m = set.alphabet_size();
    let nv = vertices.len();
    if nv == 0 {
        return Err(Error::Infeasible("polytope has no vertices".into()));
    }
    // convex weights on the vertices, starting from the barycentre
    let mut lambda = vec![1.0 / nv as f64; nv];
    let mut theta = vec![0.0; m];
    let recompute = |lambda: &[f64], theta: &mut Vec<f64>| {
        theta.iter_mut().for_each(|t| *t = 0.0);
        for (l, v) in lambda.iter().zip(vertices) {
            for i in 0..m {
                theta[i] += l * v[i];
            }
        }
    };
    recompute(&lambda, &mut theta);

    let mut gap = f64::INFINITY;
    for _ in 0..FW_MAX_ITER {
        let grad: Vec<f64> = (0..m).map(|i| if w[i] > 0.0 { w[i] / theta[i] } else { 0.0 }).collect();
        let scores: Vec<f64> = vertices.iter().map(|v| dot(&grad, v)).collect();
        let here = dot(&grad, &theta);
        let fw = (0..nv).max_by(|&a, &b| scores[a].total_cmp(&scores[b])).unwrap_or(0);
        gap = scores[fw] - here;
        if gap <= FW_GAP_TOL {
            return Ok(theta);
        }
        let away = (0..nv).filter(|&j| lambda[j] > 0.0).min_by(|&a, &b| scores[a].total_cmp(&scores[b])).unwrap_or(fw);
        let away_gain = here - scores[away];
        let (dir, gamma_max, toward): (Vec<f64>, f64, bool) = if gap >= away_gain || lambda[away] >= 1.0 {
            ((0..m).map(|i| vertices[fw][i] - theta[i]).collect(), 1.0, true)
        } else {
            let la = lambda[away];
            ((0..m).map(|i| theta[i] - vertices[away][i]).collect(), la / (1.0 - la), false)
        };
        let gamma = line_search(w, &theta, &dir, gamma_max);
        if toward {
            for l in lambda.iter_mut() {
                *l *= 1.0 - gamma;
            }
            lambda[fw] += gamma;
        } else {
            for l in lambda.iter_mut() {
                *l *= 1.0 + gamma;
            }
            lambda[away] -= gamma;
            if lambda[away] < 1e-15 {
                lambda[away] = 0.0;
            }
        }
        recompute(&lambda, &mut theta);
    }
    Err(Error::NonConvergence { what: "Frank-Wolfe constrained maximum likelihood", achieved: gap })
}

/// Maximiser of the concave `γ ↦ Σ w_i ln(θ_i + γ d_i)` on `[0, γ_max]`.
fn line_search(w: &[f64], theta: &[f64], d: &[f64], gamma_max: f64) -> f64 {
    let slope = |g: f64| -> f64 {
        w.iter()
            .zip(theta)
            .zip(d)
            .filter(|((wi, _), _)| **wi > 0.0)
            .map(|((wi, t), di)| {
                let x = t + g * di;
                if x <= 0.0 {
                    if *di < 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        f64::INFINITY
                    }
                } else {
                    wi * di / x
                }
            })
            .sum()
    };
    if slope(gamma_max) >= 0.0 {
        return gamma_max;
    }
    let (mut lo, mut hi) = (0.0, gamma_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `sup_{θ∈S} Σ k_i ln θ_i` (with `0·ln 0 = 0`).
pub fn sup_log_prob(k: &CountVector, set: &ConstraintSet) -> Result<f64> {
    let theta = constrained_mle(k, set)?;
    Ok(k.as_slice().iter().zip(theta.as_slice()).filter(|(c, _)| **c > 0).map(|(&c, t)| c as f64 * t.ln()).sum())
}

/// `ln S_n` for the class `S`, split into type classes with `k/n ∈ S`
/// (interior) and the rest (boundary).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShtarkovResult {
    pub n: u64,
    pub m: usize,
    pub constraints_digest: u64,
    pub log_sum: f64,
    pub log_interior_sum: f64,
    /// `ln (S_n - S_n^{(S)})`, or `-∞` when every type lies in `S`.
    pub log_boundary_sum: f64,
}

/// Number of type classes `C(n+m-1, m-1)`.
pub fn type_class_count(n: u64, m: usize) -> f64 {
    (1..m).fold(1.0, |acc, i| acc * (n as f64 + i as f64) / i as f64)
}

/// Calls `f` on every composition of `n` into `m` nonnegative parts, in
/// lexicographically decreasing order of the first coordinates.
pub fn for_each_type<F>(n: u64, m: usize, mut f: F) -> Result<()>
where
    F: FnMut(&[u64]) -> Result<()>,
{
    let terms = type_class_count(n, m);
    if terms > ENUMERATION_GUARD {
        return Err(Error::EnumerationGuard { terms, guard: ENUMERATION_GUARD });
    }
    let mut k = vec![0u64; m];
    k[0] = n;
    loop {
        f(&k)?;
        // move one unit from the rightmost nonzero non-last coordinate
        let pivot = match (0..m - 1).rev().find(|&i| k[i] > 0) {
            Some(p) => p,
            None => return Ok(()),
        };
        k[pivot] -= 1;
        let rest = k[m - 1];
        k[m - 1] = 0;
        k[pivot + 1] += rest + 1;
    }
}

pub fn shtarkov_sum(n: u64, set: &ConstraintSet) -> Result<ShtarkovResult> {
    if n == 0 {
        return Err(Error::InvalidParameter("Shtarkov sum needs n ≥ 1".into()));
    }
    let m = set.alphabet_size();
    let mut interior = LogSumAccumulator::new();
    let mut boundary = LogSumAccumulator::new();
    let nf = n as f64;
    let mut theta = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for_each_type(n, m, |k| {
        for i in 0..m {
            theta[i] = k[i] as f64 / nf;
        }
        let inside = set.contains_slice(&theta);
        let sup = if inside {
            k.iter().filter(|&&c| c > 0).map(|&c| c as f64 * (c as f64 / nf).ln()).sum::<f64>()
        } else {
            for i in 0..m {
                weights[i] = k[i] as f64;
            }
            let opt = argmax_weighted(set, &weights)?;
            k.iter().zip(&opt).filter(|(c, _)| **c > 0).map(|(&c, t)| c as f64 * t.ln()).sum::<f64>()
        };
        let term = log_multinomial(k) + sup;
        if inside {
            interior.push(term);
        } else {
            boundary.push(term);
        }
        Ok(())
    })?;
    let log_interior_sum = interior.value();
    let log_boundary_sum = boundary.value();
    let mut total = LogSumAccumulator::new();
    total.push(log_interior_sum);
    total.push(log_boundary_sum);
    Ok(ShtarkovResult {
        n,
        m,
        constraints_digest: set.digest(),
        log_sum: total.value(),
        log_interior_sum,
        log_boundary_sum,
    })
}

/// Per-sequence NML log-probability `sup ln P(x^n) - ln S_n` of any sequence
/// of type `k`.
pub fn nml_log_prob(k: &CountVector, set: &ConstraintSet, precomputed: &ShtarkovResult) -> Result<f64> {
    if precomputed.n != k.n() || precomputed.m != k.m() || precomputed.constraints_digest != set.digest() {
        return Err(Error::InvalidParameter(format!(
            "Shtarkov sum was computed for n = {} and a different constraint set or alphabet",
            precomputed.n
        )));
    }
    Ok(sup_log_prob(k, set)? - precomputed.log_sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::Halfspace;

    fn cv(k: &[u64]) -> CountVector {
        CountVector::new(k.to_vec()).unwrap()
    }

    #[test]
    fn unconstrained_mle_is_empirical() {
        let t = constrained_mle(&cv(&[3, 1]), &ConstraintSet::full(2).unwrap()).unwrap();
        assert_eq!(t.as_slice(), &[0.75, 0.25]);
    }

    #[test]
    fn interval_mle_clips() {
        let set = ConstraintSet::boxed(vec![0.2], vec![0.6]).unwrap();
        let t = constrained_mle(&cv(&[9, 1]), &set).unwrap();
        assert!((t.as_slice()[0] - 0.6).abs() < 1e-15);
        assert!((t.as_slice()[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn box_water_filling() {
        let set = ConstraintSet::boxed(vec![0.1, 0.1], vec![0.5, 0.5]).unwrap();
        let t = constrained_mle(&cv(&[8, 1, 1]), &set).unwrap();
        let expect = [0.5, 0.25, 0.25];
        for (a, b) in t.as_slice().iter().zip(expect) {
            assert!((a - b).abs() < 1e-14, "{:?}", t);
        }
    }

    #[test]
    fn zero_counts_take_their_lower_bound() {
        let set = ConstraintSet::boxed(vec![0.1, 0.2], vec![0.5, 0.5]).unwrap();
        let t = constrained_mle(&cv(&[0, 0, 4]), &set).unwrap();
        assert_eq!(t.as_slice()[0], 0.1);
        assert_eq!(t.as_slice()[1], 0.2);
        assert!((t.as_slice()[2] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn zero_counts_absorb_excess_from_the_back() {
        // θ_1 ≤ 0.3 and only symbol 1 observed: the rest must take 0.7
        let set = ConstraintSet::boxed(vec![0.0, 0.0], vec![0.3, 1.0]).unwrap();
        let t = constrained_mle(&cv(&[5, 0, 0]), &set).unwrap();
        assert_eq!(t.as_slice(), &[0.3, 0.0, 0.7]);
    }

    #[test]
    fn sup_log_prob_examples() {
        let full = ConstraintSet::full(2).unwrap();
        assert!((sup_log_prob(&cv(&[2, 2]), &full).unwrap() - 4.0 * 0.5f64.ln()).abs() < 1e-14);
        assert_eq!(sup_log_prob(&cv(&[4, 0]), &full).unwrap(), 0.0);
        let set = ConstraintSet::boxed(vec![0.2], vec![0.6]).unwrap();
        assert!((sup_log_prob(&cv(&[10, 0]), &set).unwrap() - 10.0 * 0.6f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn polytope_mle_matches_box_solution() {
        // the same box as half-spaces
        let hs = vec![
            Halfspace::new(vec![-1.0, 0.0, 0.0], -0.1),
            Halfspace::new(vec![1.0, 0.0, 0.0], 0.5),
            Halfspace::new(vec![0.0, -1.0, 0.0], -0.1),
            Halfspace::new(vec![0.0, 1.0, 0.0], 0.5),
        ];
        let set = ConstraintSet::polytope(3, hs).unwrap();
        let t = constrained_mle(&cv(&[8, 1, 1]), &set).unwrap();
        for (a, b) in t.as_slice().iter().zip([0.5, 0.25, 0.25]) {
            assert!((a - b).abs() < 1e-6, "{:?}", t);
        }
    }

    #[test]
    fn shtarkov_small_cases() {
        let full = ConstraintSet::full(2).unwrap();
        assert!((shtarkov_sum(1, &full).unwrap().log_sum - 2f64.ln()).abs() < 1e-14);
        assert!((shtarkov_sum(1, &ConstraintSet::full(5).unwrap()).unwrap().log_sum - 5f64.ln()).abs() < 1e-13);
        assert!((shtarkov_sum(2, &full).unwrap().log_sum - 2.5f64.ln()).abs() < 1e-14);
        let set = ConstraintSet::boxed(vec![0.2], vec![0.6]).unwrap();
        let r = shtarkov_sum(2, &set).unwrap();
        assert!((r.log_sum - 1.5f64.ln()).abs() < 1e-14);
        assert!((r.log_interior_sum - 0.5f64.ln()).abs() < 1e-14);
        assert!((r.log_boundary_sum - 1.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn nml_per_sequence() {
        let full = ConstraintSet::full(2).unwrap();
        let s1 = shtarkov_sum(1, &full).unwrap();
        assert!((nml_log_prob(&cv(&[1, 0]), &full, &s1).unwrap() - 0.5f64.ln()).abs() < 1e-14);
        let s2 = shtarkov_sum(2, &full).unwrap();
        assert!((nml_log_prob(&cv(&[1, 1]), &full, &s2).unwrap() - 0.1f64.ln()).abs() < 1e-14);
        assert!(nml_log_prob(&cv(&[1, 0]), &full, &s2).is_err());
    }

    #[test]
    fn type_enumeration_counts() {
        let mut seen = 0;
        for_each_type(5, 3, |k| {
            assert_eq!(k.iter().sum::<u64>(), 5);
            seen += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, 21);
        assert!(for_each_type(100_000, 4, |_| Ok(())).is_err());
    }

    #[test]
    fn line_search_objective_improves() {
        let w = [3.0, 1.0];
        let theta = [0.5, 0.5];
        let d = [0.5, -0.5];
        let g = line_search(&w, &theta, &d, 1.0);
        assert!((g - 0.5).abs() < 1e-12);
        let moved: Vec<f64> = theta.iter().zip(&d).map(|(t, x)| t + g * x).collect();
        assert!(objective(&w, &moved) > objective(&w, &theta));
    }
}
