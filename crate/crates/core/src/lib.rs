//! Importance sampling with optimal and near-optimal proposals.
//!
//! Targets are stored as log unnormalized densities; proposals as normalized
//! log densities with a sampler. Every estimator consumes a single
//! [`RngStream`], so results are reproducible bit for bit, and replications
//! use disjoint streams derived from one seed.
//!
//! - [`density`], [`field`], [`grid`]: models, integrands, the quadrature
//!   oracle and inverse-CDF grid samplers.
//! - [`estimators`]: MC, IS, SNIS, and estimators of `Z` (IS, reciprocal IS,
//!   umbrella and bridge sampling, with their iterative forms).
//! - [`multi`]: two- and three-proposal estimators and multiple IS.
//! - [`noisy`]: estimators for targets evaluated with noise.
//! - [`optimal`]: the optimal proposal densities of every scheme.
//! - [`diagnostics`]: divergences, ESS, closed-form variance curves.

// `!(x > 0.0)` guards deliberately reject NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod field;
pub mod grid;
pub mod multi;
pub mod noisy;
pub mod optimal;
pub mod rng;

pub use density::{ProposalModel, Sampler, Support, TargetModel};
pub use diagnostics::{ExtendedReal, WeightDiagnostics};
pub use error::{Error, Result};
pub use estimators::{EstimateReport, IterativeResult, WeightStats, WeightedSampleSet};
pub use field::{Integrand, ScalarField, VectorField};
pub use grid::{Grid1D, GridProposal, PiecewiseLinear, DEFAULT_GRID_POINTS};
pub use multi::{MisScheme, PositivisedPair, ProposalBank};
pub use noisy::{NoiseFamily, NoiseSpec, NoisyKind, NoisyTargetModel};
pub use optimal::{Built, OptimalSpec, Scheme, VarianceCheck, VarianceTarget};
pub use rng::{McRng, RngStream};
