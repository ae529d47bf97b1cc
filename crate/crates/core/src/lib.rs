//! Restoring the asymptotic consensus value of a DeGroot opinion network
//! after an influence attack, by recommending edges whose addition shifts
//! eigenvector centrality back toward the pre-attack value.
//!
//! The pipeline: [`spectral`] computes centrality, [`mfpt`] supplies mean
//! first passage times, [`perturb`] turns them into closed-form single-edge
//! effects, and [`recommend`] picks and applies edges greedily. [`adversary`]
//! generates attacks and [`oracle`] holds exhaustive ground truth.

pub mod adversary;
pub mod graph;
pub mod mfpt;
pub mod opinion;
pub mod oracle;
pub mod perturb;
pub mod recommend;
pub mod seed;
pub mod spectral;

pub use graph::{EdgePerturbation, Graph, GraphError};
pub use opinion::Opinions;
pub use spectral::CentralityVector;
