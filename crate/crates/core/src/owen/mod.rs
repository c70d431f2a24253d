//! Coalition hierarchies and Owen values: single-level, multi-level, the cost model, and
//! a nested-permutation oracle.

pub mod cost;
mod hierarchy;
mod multi;
mod oracle;
mod single;

pub use cost::{
    cost_summary, full_pass_eval_count, pair_eval_exponent, predicted_eval_count, predicted_eval_exponent, CostSummary,
};
pub use hierarchy::{
    normalize_tree, validate_hierarchy, HierarchyDocument, HierarchyNode, Issue, LevelContext, Node,
    PartitionHierarchy, SiblingContext, ValidationReport,
};
pub use multi::{owen_feature_value, owen_multilevel, owen_multilevel_with, OwenOptions, DEFAULT_OWEN_LIMIT};
pub use oracle::{consistent_permutation_count, nested_permutation_oracle, NESTED_ORACLE_LIMIT};
pub use single::{owen_single_level, owen_single_level_with};
