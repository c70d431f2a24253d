//! Shapley and hierarchical Owen attributions for cooperative games, with an
//! edge-driven image segmentation that produces the coalition hierarchy.
//!
//! Engines are generic over [`Scalar`]; `f64` is the default and the type aliases below
//! fix the common choices.

pub mod error;
pub mod game;
pub mod hierarchy_tools;
pub mod metrics;
pub mod models;
pub mod owen;
pub mod raster;
pub mod scalar;
pub mod segmentation;
pub mod shapley;

pub use error::{Error, Result};
pub use game::{BaselineMode, CoalitionMask, EvalCache, EvalStats, FnGame, TableGame, ValueFunction};
pub use owen::{nested_permutation_oracle, owen_multilevel, owen_single_level, PartitionHierarchy};
pub use raster::{Grid, Image};
pub use scalar::Scalar;
pub use shapley::{exact_shapley, permutation_oracle_shapley, permutation_shapley, Attribution, Method};

/// Exact rational scalar.
pub type Rational = num_rational::Rational64;
/// Wider exact rational for games with many players.
pub type WideRational = num_rational::Ratio<i128>;

pub type AttributionF64 = Attribution<f64>;
pub type AttributionF32 = Attribution<f32>;
pub type AttributionExact = Attribution<Rational>;

pub type TableGameF64 = TableGame<f64>;
pub type TableGameF32 = TableGame<f32>;
pub type TableGameExact = TableGame<Rational>;
