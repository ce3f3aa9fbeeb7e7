//! Self-supervised graph-embedding clustering.
//!
//! Learns a linear projection `W` and a hard cluster assignment `G` together.
//! The similarity graph that drives the projection is built from the current
//! labels (kNN edges between samples of the same cluster, weighted by the
//! inverse cluster size), and the labels are in turn re-solved on distances
//! in the projected space with a centroid-free K-means objective plus an
//! ℓ2,1 term that favors balanced cluster sizes.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`linalg`] | data/projection/distance types, pairwise distances, symmetric eigensolver |
//! | [`graph`] | assignments, kNN graphs, label-driven similarity graphs, Laplacians |
//! | [`embedding`] | projection solvers (eigen and trace-ratio) |
//! | [`assignment`] | balance-regularized label solver |
//! | [`pipeline`] | joint fit, Lloyd baseline, K-means objectives |
//! | [`eval`] | ACC / NMI / purity |
//! | [`io`] | matrix and label loading, run reports |
//! | [`cli`] | command-line interface |

pub mod assignment;
pub mod cli;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod pipeline;

pub use error::{Error, Result};
pub use eval::{accuracy, evaluate, nmi, purity, LabelVector, Metrics};
pub use graph::{Assignment, NeighborGraph, SimilarityGraph};
pub use linalg::{DataMatrix, DistanceMatrix, Projection};
pub use pipeline::{fit, kmeans_lloyd, Beta, FitConfig, FitReport, InitMethod, Method, MfaLabelDistances};
