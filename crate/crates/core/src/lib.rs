//! Bayesian inference for Gaussian covariance graph models over decomposable graphs.
//!
//! Covariance matrices are parameterized through their modified Cholesky
//! factors `Σ = L D Lᵀ`. On homogeneous graphs the prior admits closed-form
//! normalizing constants, exact sampling and posterior means; on general
//! decomposable graphs the posterior is explored by block Gibbs sampling.

pub mod datasets;
pub mod error;
pub mod gibbs;
pub mod graph;
pub mod homogeneous;
pub mod io;
pub mod linalg;
pub mod random;
pub mod report;
pub mod sampling;
pub mod wishart;

pub use error::{Error, Result};
pub use graph::{
    clique_decomposition, hasse_diagram, hasse_order, is_decomposable, is_homogeneous,
    neighbor_index, perfect_vertex_order, verify_order_in_sd, verify_order_in_sh,
    CliqueDecomposition, Graph, HasseDiagram, NeighborIndex, VertexOrder,
};
pub use linalg::{modified_cholesky, reconstruct, CholFactor, CovMatrix, IncompleteMatrix};
pub use sampling::{rng_stream, sample_invgamma, sample_mvn, ChainRng};
pub use wishart::{
    is_integrable, posterior_update, sample_covariance, DataSummary, PriorSpec, ShapeSpec,
};
pub use gibbs::{run_chain, ChainResult, ChainState, GibbsConfig, InitPolicy};
pub use io::{LocationSpec, RunSettings};
pub use homogeneous::{
    expected_sigma, exact_sample, layer_sets, log_normalizing_constant, ExactSampler, GammaCoords,
    HomogeneousModel, LayerSets,
};
