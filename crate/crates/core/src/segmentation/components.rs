use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use crate::raster::Grid;
use crate::segmentation::canny::neighbours4;

pub const DEFAULT_MIN_SEGMENT_SIZE: usize = 16;

/// Dense labelling of an image into `count` segments, ids `0..count` in raster order of
/// first appearance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segmentation {
    pub labels: Grid<usize>,
    pub count: usize,
}

impl Segmentation {
    /// Relabels an arbitrary labelling so ids appear in raster order.
    pub fn from_labels(labels: &Grid<usize>) -> Self {
        let mut map = BTreeMap::new();
        let relabelled = labels.map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        });
        Self {
            labels: relabelled,
            count: map.len(),
        }
    }

    /// Pixel indices of every segment, each list ascending.
    pub fn pixel_sets(&self) -> Vec<Vec<usize>> {
        let mut sets = vec![Vec::new(); self.count];
        for (p, &l) in self.labels.data().iter().enumerate() {
            sets[l].push(p);
        }
        sets
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.count];
        for &l in self.labels.data() {
            sizes[l] += 1;
        }
        sizes
    }
}

/// 4-connected components of the cells where `keep` is true; other cells get `None`.
pub fn label_components(keep: &Grid<bool>) -> (Grid<Option<usize>>, usize) {
    let (w, h) = (keep.width(), keep.height());
    let mut labels: Grid<Option<usize>> = Grid::new(w, h, None);
    let mut count = 0;
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            if !*keep.get(x, y) || labels.get(x, y).is_some() {
                continue;
            }
            labels.set(x, y, Some(count));
            queue.push_back((x, y));
            while let Some((cx, cy)) = queue.pop_front() {
                for (nx, ny) in neighbours4(cx, cy, w, h) {
                    if *keep.get(nx, ny) && labels.get(nx, ny).is_none() {
                        labels.set(nx, ny, Some(count));
                        queue.push_back((nx, ny));
                    }
                }
            }
            count += 1;
        }
    }
    (labels, count)
}

/// Segments bounded by edges: 4-connected non-edge regions, edge pixels grown into the
/// reachable region of closest mean intensity, then regions smaller than
/// `min_size` folded into the neighbour they share the longest border with.
pub fn connected_components(edges: &Grid<bool>, gray: &Grid<f64>, min_size: usize) -> Segmentation {
    let (w, h) = (edges.width(), edges.height());
    let (mut labels, count) = label_components(&edges.map(|&e| !e));
    if count == 0 {
        return Segmentation {
            labels: Grid::new(w, h, 0),
            count: 1,
        };
    }

    let mut sum = vec![0.0; count];
    let mut n = vec![0usize; count];
    for (p, l) in labels.data().iter().enumerate() {
        if let Some(l) = *l {
            sum[l] += gray.data()[p];
            n[l] += 1;
        }
    }
    let mean: Vec<f64> = sum.iter().zip(&n).map(|(s, &c)| s / c as f64).collect();

    // Seeded region growing: repeatedly settle the unlabelled pixel whose intensity is
    // closest to the mean of a region it touches.
    let mut heap = BinaryHeap::new();
    let push = |heap: &mut BinaryHeap<Reverse<(u64, usize, usize)>>, x: usize, y: usize, l: usize| {
        let diff = (mean[l] - *gray.get(x, y)).abs();
        heap.push(Reverse((diff.to_bits(), l, y * w + x)));
    };
    for y in 0..h {
        for x in 0..w {
            if let Some(l) = *labels.get(x, y) {
                for (nx, ny) in neighbours4(x, y, w, h) {
                    if labels.get(nx, ny).is_none() {
                        push(&mut heap, nx, ny, l);
                    }
                }
            }
        }
    }
    while let Some(Reverse((_, l, p))) = heap.pop() {
        let (x, y) = (p % w, p / w);
        if labels.get(x, y).is_some() {
            continue;
        }
        labels.set(x, y, Some(l));
        for (nx, ny) in neighbours4(x, y, w, h) {
            if labels.get(nx, ny).is_none() {
                push(&mut heap, nx, ny, l);
            }
        }
    }
    let labels = labels.map(|l| l.expect("every pixel reached"));
    merge_small(Segmentation::from_labels(&labels), min_size)
}

/// Folds undersized segments into their most-adjacent neighbour until none remain.
pub fn merge_small(mut seg: Segmentation, min_size: usize) -> Segmentation {
    let (w, h) = (seg.labels.width(), seg.labels.height());
    loop {
        if seg.count <= 1 {
            return seg;
        }
        let sizes = seg.sizes();
        let Some(small) = (0..seg.count)
            .filter(|&l| sizes[l] < min_size)
            .min_by_key(|&l| (sizes[l], l))
        else {
            return seg;
        };
        let mut border: BTreeMap<usize, usize> = BTreeMap::new();
        for y in 0..h {
            for x in 0..w {
                if *seg.labels.get(x, y) != small {
                    continue;
                }
                for (nx, ny) in neighbours4(x, y, w, h) {
                    let other = *seg.labels.get(nx, ny);
                    if other != small {
                        *border.entry(other).or_default() += 1;
                    }
                }
            }
        }
        let target = border
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(&l, _)| l)
            .expect("a segment of a connected grid has a neighbour");
        let merged = seg.labels.map(|&l| if l == small { target } else { l });
        seg = Segmentation::from_labels(&merged);
    }
}
