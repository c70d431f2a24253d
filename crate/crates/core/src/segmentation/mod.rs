//! Edge-based initial segmentation and score-driven merging into a coalition hierarchy.

pub mod build;
pub mod canny;
pub mod components;
pub mod graph;

pub use build::{
    build_hierarchy, expand_pixels, initial_segmentation, BuiltHierarchy, EpsilonPolicy, HierarchyConfig,
    PixelExpansion, SegmentLevel,
};
pub use canny::{
    detect_edges, dilate_edges, double_threshold_hysteresis, gaussian_kernel, gaussian_smooth,
    hysteresis_with_reference, non_max_suppression, percentile, sobel_gradients, CannyConfig, EdgeMap, Gradients,
    ThresholdSource,
};
pub use components::{connected_components, label_components, merge_small, Segmentation, DEFAULT_MIN_SEGMENT_SIZE};
pub use graph::{
    build_adjacency_graph, merge_level, score_segments, MergeConfig, MergeOutcome, MergeStep, Segment, SegmentGraph,
};
