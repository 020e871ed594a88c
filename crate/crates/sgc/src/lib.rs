//! Communicability geometry for signed graphs.
//!
//! A signed graph carries friendly (+) and antagonistic (−) edges. The matrix
//! exponential of its adjacency matrix, Γ = exp(A), counts positive minus
//! negative walks between nodes weighted by 1/k!, and induces a Euclidean
//! geometry: every node becomes a point on a hypersphere, with a
//! communicability distance ξ and a communicability angle θ between nodes.
//! Structural balance, faction structure, and polarization all become
//! geometric statements in that space.
//!
//! The crate provides:
//!
//! - [`graph`]: signed-graph storage, edge-list I/O, switching, balance
//!   detection, and deterministic fixture generators;
//! - [`oracle`]: brute-force oracles (walk enumeration, Taylor-series
//!   exponential, exhaustive frustration minimization) used to validate the
//!   closed-form machinery at small scale;
//! - [`eigen`]: a deterministic symmetric eigensolver front end;
//! - [`comm`]: the spectral core — Γ, the distance ξ, the squared-distance
//!   matrix M, angles θ, cosines ρ, d_θ, position vectors, closed forms for
//!   complete graphs, and the exponential balance criterion;
//! - [`embed`]: classical MDS, optional SMACOF refinement, PCA-based
//!   polarization scores, and Gaussian KDE;
//! - [`cluster`]: k-means++ with silhouette model selection, agglomerative
//!   clustering (Ward/average), dendrograms and Newick export;
//! - [`pipeline`]: the end-to-end analysis (angle matrix → MDS → clustering)
//!   plus vote-matrix ingestion;
//! - [`io`]: atomic writers and all serialization formats;
//! - [`cli`]: the `sgc` command-line interface.

pub mod cli;
pub mod cluster;
pub mod comm;
pub mod eigen;
pub mod embed;
pub mod error;
pub mod graph;
pub mod io;
pub mod oracle;
pub mod pipeline;

pub use error::{Error, Result};
