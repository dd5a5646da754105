//! Simulation and verification toolkit for sparse inhomogeneous random
//! graphs in the regime where the maximal mean degree is far below `log n`.
//!
//! The crate covers five areas:
//!
//! - [`model`] — edge-probability models (homogeneous, stochastic block
//!   model, general symmetric) and reproducible O(n + edges) sampling;
//! - [`theory`] — deterministic predictors for extreme degrees and
//!   eigenvalues: the Bennett function, the Poisson rate function, the
//!   `L_k` / `Δ_k` predictors, tail-count and density formulas, and
//!   concentration bounds;
//! - [`poisson_binomial`] — an exact Poisson-binomial distribution engine
//!   with Poisson and binomial references and per-threshold bound reports;
//! - [`spectral`] — matrix-free symmetric operators for `A`, `E[A]` and
//!   `A − E[A]`, a block Lanczos extreme-eigenvalue solver with full
//!   reorthogonalization and deflated restarts, and a dense oracle;
//! - [`pruning`] — the star decomposition of a graph at a degree threshold,
//!   overlap statistics, and the pruned-residual norm check.
//!
//! [`experiments`] wires these into reproducible CSV/JSON-emitting
//! experiment pipelines driven by the `sparse-spectra` CLI.

pub mod error;
pub mod experiments;
pub mod model;
pub mod par;
pub mod poisson_binomial;
pub mod pruning;
pub mod spectral;
pub mod theory;

pub use error::{Error, Result};
pub use model::{
    build_model, check_hypotheses, ordered_degrees, sample_graph, threshold_sets,
    EdgeProbabilityModel, HypothesisCheck, ModelSpec, SampledGraph,
};
pub use par::Parallelism;
pub use poisson_binomial::{
    binomial_reference, bound_report, exact_pmf, fit_constant, poisson_reference, BoundReport,
    TailDistribution,
};
pub use spectral::{
    adjacency_operator, centered_operator, dense_spectrum, expectation_operator,
    extreme_eigenvalues, star_spectrum, SpectralReport, SymmetricOperator,
};
pub use theory::{
    bennett_h, degree_sum_deviation_bound, gershgorin_bound, rate_function, variance_bound,
    DeltaSolution, TheoryPredictor,
};
