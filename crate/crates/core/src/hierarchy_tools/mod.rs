//! Checks and baselines for coalition hierarchies over images.

mod axis;
mod counterexample;
mod tproperty;

pub use axis::axis_aligned_hierarchy;
pub use counterexample::{prop4_counterexample, Counterexample, COUNTEREXAMPLE_SIZE, COUNTEREXAMPLE_TAU};
pub use tproperty::{check_t_property, check_t_property_multi, node_scores, TPropertyReport, TViolation};
