//! Analysis of learned activation spaces of paintings: principal modes of
//! variation, independent components, nonlinear manifold embeddings, and
//! correlation of embedding coordinates with creation time and formal
//! concept ratings.

pub mod correlate;
pub mod dataset;
pub mod embedding;
pub mod error;
pub mod ica;
pub mod insights;
pub mod linalg;
pub mod manifold;
pub mod pca;
#[cfg(feature = "testutil")]
pub mod testutil;
pub mod textio;

pub use error::{Error, Result};
