//! Constrained parameter sets `S ⊆ Θ` on the probability simplex and the
//! Dirichlet measures `Dir(S; α)` that the constrained mixture is built from.
//!
//! A [`ConstraintSet`] is one of three forms:
//!
//! - `Full`: the whole simplex.
//! - `Box`: per-coordinate intervals `a_i ≤ θ_i ≤ b_i` on the first `m-1`
//!   coordinates; the last coordinate is whatever is left over.
//! - `Polytope`: half-spaces `c·θ ≤ d` intersected with the simplex.
//!
//! Every form is validated at construction: the set must be nonempty and must
//! have positive Jeffreys measure, since every downstream formula divides by
//! `Dir(S; ·)`.

mod measure;
mod polytope;
mod sampling;

pub use measure::{
    constrained_moment_ratio, dirichlet_measure, dirichlet_measure_monte_carlo, jeffreys_constant, Backend,
    BackendPreference, DirichletParams, IntegrationConfig, MeasureEstimate, MomentRatio,
};
pub use polytope::Halfspace;
pub use sampling::{mix_seed, sample_dirichlet, GammaSampleSet, SampleSummary};

pub(crate) use measure::{ln_measure_deterministic, moment_ratio_with_cache, ratio_from_samples};
pub(crate) use sampling::alpha_digest;

use std::fmt::Write as _;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Per-inequality slack used by membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-12;
const SIMPLEX_SUM_TOL: f64 = 1e-12;

/// A point `θ` of the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    theta: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "simplex point needs at least 2 coordinates, got {}",
                theta.len()
            )));
        }
        if theta.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "simplex point has a negative or non-finite coordinate: {theta:?}"
            )));
        }
        let sum: f64 = theta.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::InvalidParameter(format!("simplex point sums to {sum}, not 1")));
        }
        Ok(Self { theta })
    }

    /// The empirical distribution `k / n`.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::InvalidParameter("empirical distribution of an empty sequence".into()));
        }
        Ok(Self { theta: counts.iter().map(|&k| k as f64 / n as f64).collect() })
    }

    pub(crate) fn new_unchecked(theta: Vec<f64>) -> Self {
        Self { theta }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.theta
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintForm {
    Full,
    /// Bounds on coordinates `1..m-1` (stored 0-based, length `m-1`).
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Polytope {
        halfspaces: Vec<Halfspace>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    m: usize,
    form: ConstraintForm,
    /// Vertices, kept for polytopes (linear maximisation and interior points).
    vertices: Vec<Vec<f64>>,
    /// `θ_1` range when `m == 2`.
    interval: Option<(f64, f64)>,
    whole_simplex: bool,
}

impl ConstraintSet {
    pub fn full(m: usize) -> Result<Self> {
        check_alphabet(m)?;
        let vertices = (0..m).map(|i| unit(m, i)).collect();
        Ok(Self {
            m,
            form: ConstraintForm::Full,
            vertices,
            interval: (m == 2).then_some((0.0, 1.0)),
            whole_simplex: true,
        })
    }

    /// Box constraints `lower[i] ≤ θ_{i+1} ≤ upper[i]` for the first `m-1`
    /// coordinates.
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        let m = lower.len() + 1;
        check_alphabet(m)?;
        for (i, (&a, &b)) in lower.iter().zip(&upper).enumerate() {
            if !(0.0 <= a && a <= b && b <= 1.0) {
                return Err(Error::InvalidParameter(format!("box {} needs 0 <= a <= b <= 1, got [{a}, {b}]", i + 1)));
            }
        }
        // The box meets the simplex iff the lower bounds leave room for θ_m ≥ 0;
        // it has interior iff every interval is nondegenerate and Σa < 1.
        let lower_sum: f64 = lower.iter().sum();
        if lower_sum > 1.0 + MEMBERSHIP_TOL {
            return Err(Error::Infeasible(format!("box lower bounds sum to {lower_sum} > 1")));
        }
        if lower.iter().zip(&upper).any(|(a, b)| a >= b) || lower_sum >= 1.0 {
            return Err(Error::ZeroMeasure("box is a lower-dimensional face of the simplex".into()));
        }
        let whole_simplex = lower.iter().all(|&a| a == 0.0) && upper.iter().all(|&b| b >= 1.0);
        let interval = (m == 2).then(|| (lower[0], upper[0]));
        Ok(Self { m, form: ConstraintForm::Box { lower, upper }, vertices: Vec::new(), interval, whole_simplex })
    }

    /// Half-space constraints `c·θ ≤ d` intersected with the simplex.
    pub fn polytope(m: usize, halfspaces: Vec<Halfspace>) -> Result<Self> {
        check_alphabet(m)?;
        for h in &halfspaces {
            if h.normal.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: h.normal.len() });
            }
            if h.normal.iter().chain(std::iter::once(&h.offset)).any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("half-space with non-finite coefficient".into()));
            }
        }
        let vertices = polytope::enumerate_vertices(m, &halfspaces)?;
        if vertices.is_empty() {
            return Err(Error::Infeasible("half-spaces do not meet the simplex".into()));
        }
        if polytope::affine_rank(&vertices) < m - 1 {
            return Err(Error::ZeroMeasure(format!("polytope spans fewer than {} dimensions", m - 1)));
        }
        let interval = (m == 2).then(|| {
            let lo = vertices.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
            let hi = vertices.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
            (lo.max(0.0), hi.min(1.0))
        });
        let mut set =
            Self { m, form: ConstraintForm::Polytope { halfspaces }, vertices, interval, whole_simplex: false };
        set.whole_simplex = (0..m).all(|i| set.contains_slice(&unit(m, i)));
        Ok(set)
    }

    pub fn alphabet_size(&self) -> usize {
        self.m
    }

    pub fn form(&self) -> &ConstraintForm {
        &self.form
    }

    /// True when the constraints cut nothing off the simplex.
    pub fn is_whole_simplex(&self) -> bool {
        self.whole_simplex
    }

    /// For `m == 2`, the admissible range of `θ_1`.
    pub fn interval(&self) -> Option<(f64, f64)> {
        self.interval
    }

    /// Vertices of a half-space polytope (or the simplex); empty for boxes.
    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    /// Per-coordinate bounds for all `m` coordinates when the set is a box
    /// (the last coordinate gets `[0, 1]`).
    pub(crate) fn full_box_bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match &self.form {
            ConstraintForm::Full => Some((vec![0.0; self.m], vec![1.0; self.m])),
            ConstraintForm::Box { lower, upper } => {
                let mut lo = lower.clone();
                let mut hi = upper.clone();
                lo.push(0.0);
                hi.push(1.0);
                Some((lo, hi))
            }
            ConstraintForm::Polytope { .. } => None,
        }
    }

    /// Membership of a simplex point, with slack [`MEMBERSHIP_TOL`] per inequality.
    pub fn contains(&self, theta: &SimplexPoint) -> Result<bool> {
        if theta.dim() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: theta.dim() });
        }
        Ok(self.contains_slice(theta.as_slice()))
    }

    /// Membership without validating that `theta` lies on the simplex.
    pub(crate) fn contains_slice(&self, theta: &[f64]) -> bool {
        match &self.form {
            ConstraintForm::Full => true,
            ConstraintForm::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .zip(theta)
                .all(|((&a, &b), &t)| t >= a - MEMBERSHIP_TOL && t <= b + MEMBERSHIP_TOL),
            ConstraintForm::Polytope { halfspaces } => halfspaces.iter().all(|h| h.slack(theta) >= -MEMBERSHIP_TOL),
        }
    }

    /// Same test on an unnormalised positive vector `g` with `θ = g / total`.
    pub(crate) fn contains_scaled(&self, g: &[f64], total: f64) -> bool {
        match &self.form {
            ConstraintForm::Full => true,
            ConstraintForm::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .zip(g)
                .all(|((&a, &b), &x)| x >= (a - MEMBERSHIP_TOL) * total && x <= (b + MEMBERSHIP_TOL) * total),
            ConstraintForm::Polytope { halfspaces } => halfspaces.iter().all(|h| {
                let dot: f64 = h.normal.iter().zip(g).map(|(c, x)| c * x).sum();
                dot <= (h.offset + MEMBERSHIP_TOL) * total
            }),
        }
    }

    /// Canonical text form, accepted back by [`ConstraintSet::from_str`].
    pub fn to_config_string(&self) -> String {
        let mut out = format!("alphabet {}\n", self.m);
        match &self.form {
            ConstraintForm::Full => {}
            ConstraintForm::Box { lower, upper } => {
                for (i, (a, b)) in lower.iter().zip(upper).enumerate() {
                    let _ = writeln!(out, "box {} {:?} {:?}", i + 1, a, b);
                }
            }
            ConstraintForm::Polytope { halfspaces } => {
                for h in halfspaces {
                    out.push_str("halfspace");
                    for c in &h.normal {
                        let _ = write!(out, " {c:?}");
                    }
                    let _ = writeln!(out, " {:?}", h.offset);
                }
            }
        }
        out
    }

    /// 64-bit digest of the canonical representation.
    pub fn digest(&self) -> u64 {
        let mut hasher = Sha256::new();
        hasher.update(b"polykt-constraints-v1");
        hasher.update((self.m as u64).to_be_bytes());
        match &self.form {
            ConstraintForm::Full => hasher.update([0u8]),
            ConstraintForm::Box { lower, upper } => {
                hasher.update([1u8]);
                for v in lower.iter().chain(upper) {
                    hasher.update(v.to_bits().to_be_bytes());
                }
            }
            ConstraintForm::Polytope { halfspaces } => {
                hasher.update([2u8]);
                for h in halfspaces {
                    for v in h.normal.iter().chain(std::iter::once(&h.offset)) {
                        hasher.update(v.to_bits().to_be_bytes());
                    }
                }
            }
        }
        let bytes = hasher.finalize();
        u64::from_be_bytes(bytes[..8].try_into().expect("sha256 output has 32 bytes"))
    }
}

fn check_alphabet(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("alphabet size must be at least 2, got {m}")));
    }
    Ok(())
}

fn unit(m: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; m];
    v[i] = 1.0;
    v
}

impl FromStr for ConstraintSet {
    type Err = Error;

    /// Parses the line-oriented constraint config:
    ///
    /// ```text
    /// alphabet <m>
    /// box <i> <a_i> <b_i>          # 1-based coordinate, i <= m-1
    /// halfspace <c_1> ... <c_m> <d> # c·θ <= d
    /// ```
    fn from_str(text: &str) -> Result<Self> {
        let mut m: Option<usize> = None;
        let mut boxes: Vec<(usize, usize, f64, f64)> = Vec::new();
        let mut halfspaces: Vec<(usize, Vec<f64>)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let keyword = tokens.next().unwrap_or_default();
            let rest: Vec<&str> = tokens.collect();
            let err = |message: String| Error::Parse { line: line_no, message };
            match keyword {
                "alphabet" => {
                    if m.is_some() {
                        return Err(err("duplicate alphabet directive".into()));
                    }
                    let [value] = rest.as_slice() else {
                        return Err(err("expected `alphabet <m>`".into()));
                    };
                    m = Some(value.parse().map_err(|e| err(format!("bad alphabet size {value:?}: {e}")))?);
                }
                "box" => {
                    let [i, a, b] = rest.as_slice() else {
                        return Err(err("expected `box <i> <a> <b>`".into()));
                    };
                    let i: usize = i.parse().map_err(|e| err(format!("bad coordinate {i:?}: {e}")))?;
                    let a: f64 = a.parse().map_err(|e| err(format!("bad lower bound {a:?}: {e}")))?;
                    let b: f64 = b.parse().map_err(|e| err(format!("bad upper bound {b:?}: {e}")))?;
                    boxes.push((line_no, i, a, b));
                }
                "halfspace" => {
                    let values = rest
                        .iter()
                        .map(|t| t.parse::<f64>().map_err(|e| err(format!("bad coefficient {t:?}: {e}"))))
                        .collect::<Result<Vec<_>>>()?;
                    halfspaces.push((line_no, values));
                }
                other => return Err(err(format!("unknown directive {other:?}"))),
            }
        }
        let m = m.ok_or(Error::Parse { line: 0, message: "missing `alphabet <m>` directive".into() })?;
        check_alphabet(m)?;
        let mut lower = vec![0.0; m - 1];
        let mut upper = vec![1.0; m - 1];
        let mut seen = vec![false; m - 1];
        for &(line, i, a, b) in &boxes {
            if i == 0 || i > m - 1 {
                return Err(Error::Parse { line, message: format!("box coordinate {i} outside 1..={}", m - 1) });
            }
            if std::mem::replace(&mut seen[i - 1], true) {
                return Err(Error::Parse { line, message: format!("duplicate box for coordinate {i}") });
            }
            lower[i - 1] = a;
            upper[i - 1] = b;
        }
        if halfspaces.is_empty() {
            return if boxes.is_empty() { Self::full(m) } else { Self::boxed(lower, upper) };
        }
        let mut hs = Vec::with_capacity(halfspaces.len() + 2 * boxes.len());
        for (line, values) in halfspaces {
            if values.len() != m + 1 {
                return Err(Error::Parse {
                    line,
                    message: format!("halfspace needs {} numbers, got {}", m + 1, values.len()),
                });
            }
            let offset = values[m];
            hs.push(Halfspace::new(values[..m].to_vec(), offset));
        }
        for &(_, i, a, b) in &boxes {
            hs.push(Halfspace::new(unit(m, i - 1), b));
            hs.push(Halfspace::new(unit(m, i - 1).iter().map(|v| -v).collect(), -a));
        }
        Self::polytope(m, hs)
    }
}
