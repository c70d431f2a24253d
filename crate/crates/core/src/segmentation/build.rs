use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::game::ValueFunction;
use crate::owen::{HierarchyDocument, HierarchyNode, PartitionHierarchy};
use crate::raster::{Grid, Image};
use crate::segmentation::canny::{detect_edges, dilate_edges, percentile, CannyConfig, EdgeMap};
use crate::segmentation::components::{connected_components, Segmentation, DEFAULT_MIN_SEGMENT_SIZE};
use crate::segmentation::graph::{build_adjacency_graph, merge_level, score_segments, MergeConfig, MergeStep, Segment};

/// Threshold used at each merging round.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsilonPolicy {
    /// Median of the current edge weights.
    #[default]
    Median,
    Fixed(f64),
}

impl FromStr for EpsilonPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "median" {
            return Ok(Self::Median);
        }
        match s.parse::<f64>() {
            Ok(v) if v >= 0.0 => Ok(Self::Fixed(v)),
            _ => Err(Error::invalid(format!(
                "epsilon must be \"median\" or a non-negative real, got {s:?}"
            ))),
        }
    }
}

/// How the finest segments are broken down into single pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum PixelExpansion {
    /// Every pixel of a segment is a direct child of it.
    #[default]
    Flat,
    /// Halve the segment along the longer side of its bounding box until blocks hold at
    /// most `max_block` pixels, which then become direct children.
    Bisect { max_block: usize },
}

impl FromStr for PixelExpansion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "flat" {
            return Ok(Self::Flat);
        }
        let block = s.strip_prefix("bisect").map(|rest| rest.trim_start_matches(':'));
        match block {
            Some("") => Ok(Self::Bisect { max_block: 4 }),
            Some(n) => n
                .parse::<usize>()
                .ok()
                .filter(|&b| b >= 1)
                .map(|max_block| Self::Bisect { max_block })
                .ok_or_else(|| Error::invalid(format!("bad bisect block size in {s:?}"))),
            None => Err(Error::invalid(format!(
                "pixel split must be \"flat\" or \"bisect[:N]\", got {s:?}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchyConfig {
    pub canny: CannyConfig,
    pub dilate: usize,
    pub min_segment_size: usize,
    pub epsilon: EpsilonPolicy,
    /// Most children a merged segment may have.
    pub fanout: usize,
    /// Most levels above the pixels, root included.
    pub max_depth: usize,
    pub rescore_on_merge: bool,
    pub pixel_expansion: PixelExpansion,
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        Self {
            canny: CannyConfig::default(),
            dilate: 2,
            min_segment_size: DEFAULT_MIN_SEGMENT_SIZE,
            epsilon: EpsilonPolicy::Median,
            fanout: 5,
            max_depth: 6,
            rescore_on_merge: true,
            pixel_expansion: PixelExpansion::Flat,
        }
    }
}

/// One partition of the image inside a built hierarchy.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentLevel {
    pub labels: Grid<usize>,
    pub segments: Vec<Segment>,
    /// Segment ids of the next finer level that make up each segment here; `None` on the
    /// finest level.
    pub groups: Option<Vec<Vec<usize>>>,
    /// Threshold and merges that produced this level from the finer one.
    pub epsilon: Option<f64>,
    pub merges: Vec<MergeStep>,
}

#[derive(Clone, Debug)]
pub struct BuiltHierarchy {
    pub hierarchy: PartitionHierarchy,
    pub document: HierarchyDocument,
    pub edges: EdgeMap,
    /// Partitions below the root, coarsest first. Empty when the image has one segment.
    pub levels: Vec<SegmentLevel>,
    /// Merging stopped because no admissible edge remained.
    pub halted: bool,
}

impl BuiltHierarchy {
    /// Per-level label maps with pixel value `segment id mod 256`.
    pub fn label_maps(&self) -> Vec<Grid<u8>> {
        self.levels
            .iter()
            .map(|l| l.labels.map(|&id| (id % 256) as u8))
            .collect()
    }
}

/// Segments an image with the edge pipeline, then merges neighbouring segments of
/// similar score level by level until one segment (the root) remains or the depth
/// budget is spent.
pub fn build_hierarchy<V: ValueFunction<f64> + ?Sized>(
    image: &Image,
    vf: &V,
    cfg: &HierarchyConfig,
) -> Result<BuiltHierarchy> {
    let n = image.pixel_count();
    if vf.n_features() != n {
        return Err(Error::invalid(format!(
            "game has {} features, image has {n} pixels",
            vf.n_features()
        )));
    }
    if cfg.fanout < 2 {
        return Err(Error::invalid("fan-out must be at least 2"));
    }
    if cfg.max_depth < 1 {
        return Err(Error::invalid("max depth must be at least 1"));
    }
    let gray = image.to_gray();
    let edges = dilate_edges(&detect_edges(&gray, &cfg.canny)?, cfg.dilate)?;
    let finest = connected_components(&edges.edges, &gray, cfg.min_segment_size);

    let mut levels = vec![SegmentLevel {
        segments: score_segments(&finest.pixel_sets(), vf),
        labels: finest.labels,
        groups: None,
        epsilon: None,
        merges: Vec::new(),
    }];
    let mut halted = false;
    let budget = cfg.max_depth.saturating_sub(1).max(1);
    loop {
        let current = levels.last().expect("non-empty");
        let count = current.segments.len();
        if count <= 1 || levels.len() > budget {
            break;
        }
        let graph = build_adjacency_graph(&current.labels, current.segments.clone())?;
        let mut weights: Vec<f64> = graph.weights().into_values().collect();
        weights.sort_by(f64::total_cmp);
        let epsilon = match cfg.epsilon {
            EpsilonPolicy::Median => percentile(&weights, 50.0),
            EpsilonPolicy::Fixed(e) => e,
        };
        let merge = MergeConfig {
            epsilon,
            target_count: count.div_ceil(cfg.fanout),
            max_group: Some(cfg.fanout),
            rescore_on_merge: cfg.rescore_on_merge,
        };
        let out = merge_level(&graph, vf, &merge)?;
        if out.segments.len() == count {
            halted = true;
            break;
        }
        let assign = out.assignment(count);
        let labels = current.labels.map(|&l| assign[l]);
        levels.push(SegmentLevel {
            labels,
            segments: out.segments,
            groups: Some(out.groups),
            epsilon: Some(epsilon),
            merges: out.log,
        });
    }
    // The single-segment partition, if reached, is the root itself.
    if levels.last().is_some_and(|l| l.segments.len() == 1) {
        levels.pop();
    }
    while levels.len() >= cfg.max_depth {
        // Depth budget exhausted: keep the finer levels, the root absorbs the rest.
        levels.pop();
    }
    levels.reverse();

    let width = image.width();
    let root = match levels.first() {
        None => expand_pixels(&(0..n).collect::<Vec<_>>(), width, cfg.pixel_expansion),
        Some(top) => HierarchyNode::group(
            (0..n).collect(),
            (0..top.segments.len())
                .map(|s| level_node(&levels, 0, s, width, cfg.pixel_expansion))
                .collect(),
        ),
    };
    let hierarchy = PartitionHierarchy::from_tree(&root, n)?;
    let metadata = json!({
        "width": image.width(),
        "height": image.height(),
        "canny": cfg.canny,
        "t_lower": edges.t_lower,
        "t_upper": edges.t_upper,
        "dilate": cfg.dilate,
        "min_segment_size": cfg.min_segment_size,
        "epsilon_policy": cfg.epsilon,
        "epsilons": levels.iter().rev().filter_map(|l| l.epsilon).collect::<Vec<_>>(),
        "fanout": cfg.fanout,
        "max_depth": cfg.max_depth,
        "rescore_on_merge": cfg.rescore_on_merge,
        "pixel_expansion": cfg.pixel_expansion,
        "segment_counts": levels.iter().map(|l| l.segments.len()).collect::<Vec<_>>(),
        "halted": halted,
    });
    let mut document = hierarchy.to_document();
    document.metadata = Some(metadata);
    Ok(BuiltHierarchy {
        hierarchy,
        document,
        edges,
        levels,
        halted,
    })
}

fn level_node(levels: &[SegmentLevel], depth: usize, id: usize, width: usize, mode: PixelExpansion) -> HierarchyNode {
    let level = &levels[depth];
    let pixels = level.segments[id].pixels.clone();
    match &level.groups {
        Some(groups) if depth + 1 < levels.len() => HierarchyNode::group(
            pixels,
            groups[id]
                .iter()
                .map(|&child| level_node(levels, depth + 1, child, width, mode))
                .collect(),
        ),
        _ => expand_pixels(&pixels, width, mode),
    }
}

/// Node covering `pixels` whose leaves are single pixels.
pub fn expand_pixels(pixels: &[usize], width: usize, mode: PixelExpansion) -> HierarchyNode {
    match mode {
        PixelExpansion::Flat => HierarchyNode::group(pixels.to_vec(), Vec::new()),
        PixelExpansion::Bisect { max_block } => bisect(pixels.to_vec(), width, max_block.max(1)),
    }
}

fn bisect(mut pixels: Vec<usize>, width: usize, max_block: usize) -> HierarchyNode {
    pixels.sort_unstable();
    if pixels.len() <= max_block {
        return HierarchyNode::group(pixels, Vec::new());
    }
    let xs = pixels.iter().map(|p| p % width);
    let ys = pixels.iter().map(|p| p / width);
    let span_x = xs.clone().max().unwrap_or(0) - xs.min().unwrap_or(0);
    let span_y = ys.clone().max().unwrap_or(0) - ys.min().unwrap_or(0);
    let mut ordered = pixels.clone();
    if span_x >= span_y {
        ordered.sort_by_key(|p| (p % width, p / width));
    } else {
        ordered.sort_by_key(|p| (p / width, p % width));
    }
    let back = ordered.split_off(ordered.len() / 2);
    HierarchyNode::group(
        pixels,
        vec![bisect(ordered, width, max_block), bisect(back, width, max_block)],
    )
}

/// The finest partition alone, without merging.
pub fn initial_segmentation(image: &Image, cfg: &HierarchyConfig) -> Result<(EdgeMap, Segmentation)> {
    let gray = image.to_gray();
    let edges = dilate_edges(&detect_edges(&gray, &cfg.canny)?, cfg.dilate)?;
    let seg = connected_components(&edges.edges, &gray, cfg.min_segment_size);
    Ok((edges, seg))
}
