//! Manifolds of neural networks.
//!
//! Each network is represented by the diffusion geometry of its hidden-layer
//! activations over a shared, ordered test set. Networks are compared by the
//! Frobenius distance between their diffusion operators, the resulting distance
//! matrix is embedded with PHATE, and regions of the embedding are characterised
//! by class separation, Ward clustering, spectral entropy, persistent homology and
//! graph-signal smoothness.
//!
//! Modules follow the pipeline order:
//! [`corpus`] → [`diffusion`] → [`network_metric`] → [`phate`], with
//! [`structure`], [`tda`], [`graph_signal`] and [`recommend`] as analyses on top.

pub mod corpus;
pub mod diffusion;
pub mod error;
pub mod format;
pub mod graph_signal;
pub mod linalg;
pub mod network_metric;
pub mod phate;
pub mod recommend;
pub mod structure;
pub mod tda;

pub use corpus::{
    load_activations, load_corpus, ActivationSet, Corpus, Hyperparameters, NetworkRecord,
    TestSetSpec,
};
pub use diffusion::{DiffusionOperator, DiffusionSpectrum, DistanceMatrix};
pub use error::{Error, Result};
pub use network_metric::{ManifoldMatrix, NetworkSignature, SignatureMethod};
pub use phate::{PhateConfig, PhateEmbedding};
