//! Multi-view deep subspace clustering.
//!
//! Each view of a dataset is passed through two convolutional (or dense)
//! auto-encoders. One feeds a view-specific self-expressive layer `Z_i`, the
//! other a self-expressive layer `Z` shared by every view. The view-specific
//! matrices are pushed apart with an HSIC diversity penalty and pulled toward
//! the shared matrix with a centralization penalty. Spectral clustering on
//! `(|Z| + |Z|^T) / 2` yields the final partition.
//!
//! Samples are stored as columns everywhere inside the crate (`d x n`); files
//! on disk keep one sample per row.

pub mod autoencoder;
pub mod dataset;
mod error;
pub mod metrics;
pub mod selfexpr;
pub mod spectral;
pub mod trainer;

pub use error::{Error, Result};

pub use autoencoder::{Architecture, AutoencoderParams, InputShape};
pub use dataset::{MultiViewDataset, SyntheticSpec, ViewData, ViewLayout};
pub use metrics::{acc, ari, f_measure, nmi, EvaluationReport};
pub use selfexpr::{LossBreakdown, LossWeights, SelfExprState};
pub use spectral::{build_affinity, spectral_cluster, AffinityMatrix};
pub use trainer::{train, ClusteringResult, TrainConfig, TrainLog};
