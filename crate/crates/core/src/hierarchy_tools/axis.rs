use crate::error::{Error, Result};
use crate::owen::{HierarchyNode, PartitionHierarchy};

/// Splits `len` cells into at most `parts` runs; the last run absorbs the remainder.
fn split(start: usize, len: usize, parts: usize) -> Vec<(usize, usize)> {
    let parts = parts.min(len).max(1);
    let base = len / parts;
    (0..parts)
        .map(|i| {
            let s = start + i * base;
            let l = if i + 1 == parts { len - i * base } else { base };
            (s, l)
        })
        .collect()
}

/// Rectangular-tile hierarchy: level `l` cuts every tile of level `l-1` into a
/// `g × g` grid with `g = grid_per_level[l-1]`; tiles of the last level hold pixels.
pub fn axis_aligned_hierarchy(width: usize, height: usize, grid_per_level: &[usize]) -> Result<PartitionHierarchy> {
    if grid_per_level.is_empty() {
        return Err(Error::invalid("at least one grid level is required"));
    }
    if grid_per_level.contains(&0) {
        return Err(Error::invalid("grid sizes must be positive"));
    }
    if width == 0 || height == 0 {
        return Err(Error::invalid("image must have at least one pixel"));
    }
    fn tile(x: (usize, usize), y: (usize, usize), grids: &[usize], width: usize) -> HierarchyNode {
        let members: Vec<usize> = (y.0..y.0 + y.1)
            .flat_map(|yy| (x.0..x.0 + x.1).map(move |xx| yy * width + xx))
            .collect();
        match grids.split_first() {
            None => HierarchyNode::group(members, Vec::new()),
            Some((&g, rest)) => {
                let children = split(y.0, y.1, g)
                    .into_iter()
                    .flat_map(|ys| split(x.0, x.1, g).into_iter().map(move |xs| (xs, ys)))
                    .map(|(xs, ys)| tile(xs, ys, rest, width))
                    .collect();
                HierarchyNode::group(members, children)
            }
        }
    }
    let root = tile((0, width), (0, height), grid_per_level, width);
    PartitionHierarchy::from_tree(&root, width * height)
}
