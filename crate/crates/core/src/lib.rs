//! Sparse square-root factor-graph inference with a predictive variable
//! ordering subsystem for belief-space planning.
//!
//! The crate is layered bottom-up:
//!
//! - [`linalg`]: row-sparse matrices, Givens QR, partial refactorization and
//!   triangular solves.
//! - [`factorgraph`]: variables, whitened linear factors, Jacobian assembly and
//!   pose-graph ingestion.
//! - [`belief`]: the factorized Gaussian belief with incremental updates,
//!   reordering, MAP recovery and entropy.
//! - [`ordering`]: involvement levels, class division, fill-aware
//!   reclassification and constrained minimum-degree ordering.
//! - [`planner`]: information-gain evaluation of candidate hypotheses and
//!   argmax selection, in single- and multi-hypothesis modes.
//! - [`simworld`]: a lattice active-SLAM scenario driver that runs several
//!   ordering tactics side by side on an identical factor stream.
//! - [`oracle`]: dense and symbolic reference implementations used by tests.

pub mod belief;
pub mod config;
pub mod error;
pub mod factorgraph;
pub mod linalg;
pub mod oracle;
pub mod ordering;
pub mod planner;
pub mod simworld;

pub use belief::{AffectedReport, SqrtBelief, StateOrder, SuffixPolicy};
pub use config::Tolerances;
pub use error::{Error, Result};
pub use factorgraph::{FactorGraph, LinearFactor, UpdateGraph, VariableId};
pub use ordering::{ClassAssignment, ClassCount, Tactic};
