//! Graph-regularized PCA, stacked GPCA networks and small GCN trainers.

mod binio;
pub mod dataset;
pub mod error;
pub mod gpca;
pub mod gpcanet;
pub mod graph;
pub mod linalg;
pub mod nn;
pub mod par;
pub mod smoother;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
