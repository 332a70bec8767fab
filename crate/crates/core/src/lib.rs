//! Influence-function importance subsampling for regression models.
//!
//! The pipeline: estimate per-point influence from a pilot fit ([`influence`]),
//! turn the influence norms into regularized PPS inclusion probabilities and
//! draw a Poisson sample ([`design`]), then refit on the inverse-probability
//! weighted sample ([`fit`]). [`harness`] runs the whole loop over schemes,
//! sample sizes and replications.

pub mod data;
pub mod design;
pub mod error;
pub mod family;
pub mod fit;
pub mod harness;
pub mod influence;
pub mod linalg;
pub mod rng;

pub use data::{Dataset, Noise, SplitSpec};
pub use design::{SampleDraw, SamplingDesign};
pub use error::{Error, Result};
pub use family::Family;
pub use fit::{FitOptions, FitResult};
pub use influence::{ImportanceScheme, InfluenceSet, SchemeKind, SchemeOptions, SigmaSource, Target};
pub use linalg::{InverseMode, SpdMatrix};
