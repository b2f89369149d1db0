//! Compound dissimilarity measures for attribute/value collections with
//! partially missing attributes, and the kNN positioning machinery built on
//! them for WLAN RSS fingerprinting.
//!
//! The crate is organized bottom-up:
//!
//! - [`fingerprint`]: sparse fingerprints, location labels, reference maps.
//! - [`metrics`]: the eight base kernels, as per-pair terms and as vector metrics.
//! - [`compound`]: CDM, ACDM and RCDM over sparse fingerprints.
//! - [`positioning`]: kNN and hierarchical kNN over a reference map.
//! - [`evaluation`]: error statistics, ECDF, success rate, building accuracy.
//! - [`tuning`]: k-fold cross-validation over the regularization value alpha.
//! - [`dataset`]: manifest-driven CSV ingestion, cleaning and splitting.

pub mod compound;
pub mod dataset;
mod error;
pub mod evaluation;
pub mod fingerprint;
pub mod metrics;
pub mod positioning;
pub mod tuning;

pub use compound::{CompoundConfig, Variant};
pub use error::{Error, Result};
pub use fingerprint::{AttributeId, Fingerprint, GeoLabel, ReferenceFingerprintMap};
pub use metrics::Kernel;
pub use positioning::{Backend, LocateMode, PositionEstimate, Positioner, StageK};
