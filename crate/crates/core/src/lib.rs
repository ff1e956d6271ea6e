//! Diversity-aware landmark selection for Nyström kernel approximation.
//!
//! The crate covers the full pipeline: Gaussian Gram matrices, ridge
//! leverage scores, four landmark samplers (uniform, leverage-proportional,
//! exact DPP/k-DPP and a greedy log-determinant targeting swap), the Nyström
//! factor itself, and the downstream methods built on it (kernel PCA, kernel
//! ridge regression with an optional preconditioner, kernel k-means). The
//! [`verify`] module enumerates small DPPs exhaustively to check expectation
//! identities exactly.
//!
//! Parallel code paths use rayon behind the default `parallel` feature; every
//! parallel routine also accepts [`Execution::Serial`].

pub mod cluster;
pub mod datasets;
pub mod error;
pub mod eval;
pub mod kernel;
pub mod kpca;
pub mod krr;
pub mod leverage;
pub mod linalg;
pub mod nystrom;
pub mod par;
pub mod rng;
pub mod sampling;
pub mod stats;
pub mod verify;

pub use datasets::{DataMatrix, SplitResult};
pub use error::{Error, Result};
pub use kernel::{CholeskyFactor, KernelMatrix, LandmarkSet};
pub use par::Execution;
