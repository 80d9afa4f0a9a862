//! Sample-query (SQ) access trees and D²-sampling seeders for k-means.
//!
//! The crate is organised bottom-up:
//!
//! * [`sqtree`]: binary sum-of-squares trees giving O(log n) entry updates
//!   and O(log n) sampling proportional to squared entries.
//! * [`osq`]: oversampling-and-query handles built on top of the trees
//!   (distance to one center, minimum over several centers) and the
//!   rejection sampler that turns them into exact D²-samples.
//! * [`approx_ip`]: sampled inner-product estimates used by the noisy
//!   sampler.
//! * [`seeding`]: k-means++, its SQ-backed and noisy variants, the 2k
//!   pseudo-approximation and the AFK-MC² baseline.
//! * [`approx_scheme`]: the D²-sampling based (1+ε) list scheme.
//! * [`oracle`]: brute-force ground truth used by tests and self-checks.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and plain iterators otherwise. Both paths
//! produce bit-identical results.

pub mod approx_ip;
pub mod approx_scheme;
pub mod data;
pub mod error;
pub mod oracle;
pub mod osq;
pub mod par;
pub mod seeding;
pub mod sqtree;
pub mod synthetic;

pub use data::{AspectReport, DataSet};
pub use error::{Error, Result};
pub use seeding::{Algorithm, SeedingResult};
pub use sqtree::{SqMatrix, SqVector};
