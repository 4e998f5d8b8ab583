//! Reduced-reference quality assessment for motion deblurring.
//!
//! A deblurring result is scored from the blurred input and the deblurred
//! output alone: nine hand-crafted image-pair [`features`] feed a
//! [`forest`] of regression trees trained against pairwise subjective
//! preferences aggregated with the Bradley-Terry model ([`subjective`]).
//! [`eval`] and [`bench`] provide the correlation statistics,
//! cross-validation and leaderboards used to validate the metric.

pub mod baselines;
pub mod bench;
pub mod error;
pub mod eval;
pub mod features;
pub mod forest;
pub mod imgcore;
pub mod rng;
pub mod subjective;
pub mod synth;

pub use error::{Error, Result};
pub use features::{extract_all, FeatureParams, FeatureVector, FEATURE_NAMES, NUM_FEATURES};
