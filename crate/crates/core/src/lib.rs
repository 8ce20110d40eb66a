//! Sequential universal probability assignment and compression for
//! memoryless sources whose parameter is known to lie in a convex polytope of
//! the probability simplex.
//!
//! The central object is the constrained Krichevsky–Trofimov mixture: the
//! Bayes mixture under the Jeffreys (Dirichlet-½) prior truncated to the
//! constraint set `S`. Its sequential form predicts the posterior mean of θ
//! conditioned on `θ ∈ S`, which [`estimator`] computes step by step and
//! [`codec`] feeds into a range coder. [`redundancy`] computes exact and
//! asymptotic minimax redundancies to compare the code against.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod codec;
pub mod constraints;
pub mod error;
pub mod estimator;
pub mod mle;
pub mod quadrature;
pub mod redundancy;
pub mod specfn;

pub use codec::{codelength_bits, decode, encode, BitBuffer};
pub use constraints::{
    constrained_moment_ratio, dirichlet_measure, jeffreys_constant, sample_dirichlet, Backend, BackendPreference,
    ConstraintForm, ConstraintSet, DirichletParams, Halfspace, IntegrationConfig, MeasureEstimate, SimplexPoint,
};
pub use error::{Error, Result};
pub use estimator::{log_mixture_direct, EstimatorState, PredictiveDistribution};
pub use mle::{constrained_mle, nml_log_prob, shtarkov_sum, sup_log_prob, CountVector, ShtarkovResult};
pub use redundancy::{
    average_asymptotic, average_exact, average_exact_psi, cn_gap, mixture_worst_regret, unconstrained_large_m,
    worst_case_asymptotic, worst_case_exact, RedundancyKind, RedundancyReport,
};
