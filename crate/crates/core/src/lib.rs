//! Total causal effects in linear Gaussian structural causal models under
//! three error-variance regimes: arbitrary, equal for the cause–response
//! pair, and equal for all nodes.
//!
//! The crate estimates the set of effects compatible with the data via the
//! dual likelihood and builds confidence regions by test inversion.

// `!(x > t)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod chi2;
pub mod confidence;
pub mod dual;
pub mod error;
pub mod fixtures;
pub mod matrix;
pub mod nodeset;
pub mod orderings;
pub mod scm;

pub use confidence::{conf_ev, conf_general, conf_pev, confidence_region, ConfidenceRegion};
pub use dual::{estimate_effects, EffectEstimate};
pub use error::{Error, Result};
pub use matrix::{empirical_covariance, PdMatrix, SampleMatrix};
pub use nodeset::NodeSet;
pub use orderings::{CompleteOrdering, HypothesisClass};
pub use scm::{LinearScm, RegimeTag};
