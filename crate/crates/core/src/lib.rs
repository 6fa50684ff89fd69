//! Piecewise flat embeddings (PFE) of weighted graphs.
//!
//! The solver minimizes the weighted ℓ₁ sum of embedding differences
//! `Σ w_ij ‖y_i − y_j‖₁` subject to `YᵀDY = I`, using an outer splitting-of-
//! orthogonality-constraint Bregman loop around a split Bregman inner loop.
//! Every inner least-squares step is the set of `d` independent `n × n`
//! systems `[(λ/2)MᵀM + (r/2)D] Y = (λ/2)MᵀQ₁ + (r/2)D^{1/2}Q₂`, solved with
//! incomplete-Cholesky preconditioned conjugate gradients. The Kronecker
//! matrices `I ⊗ M` and `I ⊗ D` of the vectorized formulation are never
//! formed.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the `*F64`
//! aliases below name the usual double-precision instantiations.

// `!(x > 0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cluster;
pub mod dense;
pub mod error;
pub mod graph;
pub mod imgio;
pub mod init;
pub mod metrics;
pub mod pcg;
pub mod pfe;
pub mod scalar;
pub mod sparse;

pub use cluster::{kmeans, KMeansResult, Segmentation};
pub use dense::DenseMatrix;
pub use error::{Error, ErrorKind, Result};
pub use graph::{PixelGrid, WeightedGraph};
pub use init::GmmModel;
pub use metrics::MetricsReport;
pub use pcg::{PcgConfig, PcgReport, Preconditioner};
pub use pfe::{Embedding, PfeOutcome, PfeParams, PfeSolver, SolverState};
pub use scalar::Real;
pub use sparse::{CsrMatrix, IcFactor};

pub type CsrMatrixF64 = CsrMatrix<f64>;
pub type CsrMatrixF32 = CsrMatrix<f32>;
pub type DenseMatrixF64 = DenseMatrix<f64>;
pub type DenseMatrixF32 = DenseMatrix<f32>;
pub type EmbeddingF64 = Embedding<f64>;
pub type EmbeddingF32 = Embedding<f32>;
pub type WeightedGraphF64 = WeightedGraph<f64>;
pub type WeightedGraphF32 = WeightedGraph<f32>;
pub type PfeParamsF64 = PfeParams<f64>;
pub type PfeParamsF32 = PfeParams<f32>;
pub type PfeSolverF64 = PfeSolver<f64>;
pub type PcgConfigF64 = PcgConfig<f64>;
pub type GmmModelF64 = GmmModel<f64>;
