use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{CoalitionMask, ValueFunction};
use crate::raster::Grid;
use crate::segmentation::canny::neighbours8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub id: usize,
    /// Ascending pixel indices (row-major).
    pub pixels: Vec<usize>,
    /// Model score with only these pixels retained.
    pub score: f64,
}

/// Scores each pixel set by evaluating the game on the coalition that keeps exactly it.
pub fn score_segments<V: ValueFunction<f64> + ?Sized>(pixel_sets: &[Vec<usize>], vf: &V) -> Vec<Segment> {
    let n = vf.n_features();
    pixel_sets
        .par_iter()
        .enumerate()
        .map(|(id, pixels)| Segment {
            id,
            pixels: pixels.clone(),
            score: vf.evaluate(&CoalitionMask::from_indices(n, pixels.iter().copied())),
        })
        .collect()
}

/// Region adjacency graph of one level; segment `i` is `segments[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentGraph {
    pub segments: Vec<Segment>,
    /// Unordered adjacent pairs stored as `(low, high)`.
    pub edges: BTreeSet<(usize, usize)>,
}

impl SegmentGraph {
    pub fn weight(&self, a: usize, b: usize) -> f64 {
        (self.segments[a].score - self.segments[b].score).abs()
    }

    pub fn weights(&self) -> BTreeMap<(usize, usize), f64> {
        self.edges.iter().map(|&(a, b)| ((a, b), self.weight(a, b))).collect()
    }
}

/// Links segments whose pixels touch in the 8-neighbourhood. `labels` maps each pixel to
/// its segment id.
pub fn build_adjacency_graph(labels: &Grid<usize>, segments: Vec<Segment>) -> Result<SegmentGraph> {
    if let Some(&bad) = labels.data().iter().find(|&&l| l >= segments.len()) {
        return Err(Error::invalid(format!(
            "label {bad} has no segment (only {} given)",
            segments.len()
        )));
    }
    let (w, h) = (labels.width(), labels.height());
    let mut edges = BTreeSet::new();
    for y in 0..h {
        for x in 0..w {
            let a = *labels.get(x, y);
            for (nx, ny) in neighbours8(x, y, w, h) {
                let b = *labels.get(nx, ny);
                if a < b {
                    edges.insert((a, b));
                }
            }
        }
    }
    Ok(SegmentGraph { segments, edges })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeConfig {
    pub epsilon: f64,
    pub target_count: usize,
    /// Largest number of input segments one output segment may contain.
    pub max_group: Option<usize>,
    /// Re-evaluate the game on a merged segment instead of averaging by pixel count.
    pub rescore_on_merge: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeStep {
    pub kept: usize,
    pub absorbed: usize,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MergeOutcome {
    /// Coarse segments, ids `0..len` ordered by their smallest member.
    pub segments: Vec<Segment>,
    /// Input segment ids of each coarse segment, ascending.
    pub groups: Vec<Vec<usize>>,
    /// Merges in the order they happened, with ids of the input level.
    pub log: Vec<MergeStep>,
}

impl MergeOutcome {
    /// Coarse id of every input segment.
    pub fn assignment(&self, n_input: usize) -> Vec<usize> {
        let mut out = vec![0; n_input];
        for (g, members) in self.groups.iter().enumerate() {
            for &m in members {
                out[m] = g;
            }
        }
        out
    }
}

/// Greedy agglomeration: merge the lightest edge while its weight is at most `epsilon`
/// and more than `target_count` segments remain. Ties go to the lexicographically
/// smallest `(low, high)` pair and the merged segment keeps the lower id.
pub fn merge_level<V: ValueFunction<f64> + ?Sized>(
    graph: &SegmentGraph,
    vf: &V,
    cfg: &MergeConfig,
) -> Result<MergeOutcome> {
    if cfg.epsilon.is_nan() || cfg.epsilon < 0.0 {
        return Err(Error::invalid(format!(
            "epsilon must be non-negative, got {}",
            cfg.epsilon
        )));
    }
    if cfg.target_count == 0 {
        return Err(Error::invalid("target count must be at least 1"));
    }
    let n = graph.segments.len();
    let n_features = vf.n_features();
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut pixels: Vec<Vec<usize>> = graph.segments.iter().map(|s| s.pixels.clone()).collect();
    let mut score: Vec<f64> = graph.segments.iter().map(|s| s.score).collect();
    let mut alive = vec![true; n];
    let mut edges = graph.edges.clone();
    let mut count = n;
    let mut log = Vec::new();

    while count > cfg.target_count {
        let best = edges
            .iter()
            .filter(|&&(a, b)| {
                cfg.max_group
                    .is_none_or(|cap| members[a].len() + members[b].len() <= cap)
            })
            .map(|&(a, b)| ((score[a] - score[b]).abs(), a, b))
            .filter(|&(w, _, _)| w <= cfg.epsilon)
            .min_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let Some((weight, a, b)) = best else { break };
        log.push(MergeStep {
            kept: a,
            absorbed: b,
            weight,
        });

        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
        members[a].sort_unstable();
        let moved = std::mem::take(&mut pixels[b]);
        let (sa, sb) = (pixels[a].len() as f64, moved.len() as f64);
        pixels[a].extend(moved);
        pixels[a].sort_unstable();
        score[a] = if cfg.rescore_on_merge {
            vf.evaluate(&CoalitionMask::from_indices(n_features, pixels[a].iter().copied()))
        } else {
            (score[a] * sa + score[b] * sb) / (sa + sb)
        };
        alive[b] = false;
        count -= 1;

        edges = edges
            .into_iter()
            .filter_map(|(x, y)| {
                let x = if x == b { a } else { x };
                let y = if y == b { a } else { y };
                (x != y).then(|| (x.min(y), x.max(y)))
            })
            .collect();
    }

    let survivors: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
    Ok(MergeOutcome {
        segments: survivors
            .iter()
            .enumerate()
            .map(|(id, &i)| Segment {
                id,
                pixels: pixels[i].clone(),
                score: score[i],
            })
            .collect(),
        groups: survivors.iter().map(|&i| members[i].clone()).collect(),
        log,
    })
}
