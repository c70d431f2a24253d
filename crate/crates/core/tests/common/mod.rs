#![allow(dead_code)]

use hxai_core::owen::HierarchyNode;
use hxai_core::{PartitionHierarchy, TableGame};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_table(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..1usize << n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn table_game(n: usize, values: Vec<f64>) -> TableGame<f64> {
    TableGame::new(n, values).unwrap()
}

pub fn swap_bits(s: usize, i: usize, j: usize) -> usize {
    let (bi, bj) = ((s >> i) & 1, (s >> j) & 1);
    if bi == bj {
        s
    } else {
        s ^ (1 << i) ^ (1 << j)
    }
}

/// Every permutation of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).unwrap();
        p.swap(i - 1, j);
        p[i..].reverse();
    }
}

/// Average marginal contribution over the given orderings.
pub fn average_marginals(n: usize, v: &[f64], orders: &[Vec<usize>]) -> Vec<f64> {
    let mut phi = vec![0.0; n];
    for order in orders {
        let mut s = 0usize;
        for &i in order {
            phi[i] += v[s | 1 << i] - v[s];
            s |= 1 << i;
        }
    }
    phi.iter().map(|x| x / orders.len() as f64).collect()
}

pub fn brute_shapley(n: usize, v: &[f64]) -> Vec<f64> {
    average_marginals(n, v, &permutations(n))
}

/// Orderings in which every coalition of the hierarchy is contiguous.
pub fn consistent_orders(n: usize, groups: &[Vec<usize>]) -> Vec<Vec<usize>> {
    permutations(n)
        .into_iter()
        .filter(|p| {
            groups.iter().all(|g| {
                let pos: Vec<usize> = g.iter().map(|&f| p.iter().position(|&x| x == f).unwrap()).collect();
                pos.iter().max().unwrap() - pos.iter().min().unwrap() + 1 == g.len()
            })
        })
        .collect()
}

pub fn brute_owen(n: usize, v: &[f64], h: &PartitionHierarchy) -> Vec<f64> {
    let groups: Vec<Vec<usize>> = h.nodes().iter().map(|node| node.members.clone()).collect();
    average_marginals(n, v, &consistent_orders(n, &groups))
}

/// Random partition of `0..n` into at most `max_groups` non-empty groups.
pub fn random_partition(n: usize, max_groups: usize, rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let mut features: Vec<usize> = (0..n).collect();
    features.shuffle(rng);
    let k = rng.gen_range(1..=max_groups.min(n));
    let mut groups = vec![Vec::new(); k];
    for (slot, &f) in features.iter().enumerate() {
        let g = if slot < k { slot } else { rng.gen_range(0..k) };
        groups[g].push(f);
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    groups
}

/// Random nested hierarchy over `features`, splitting up to `depth` times.
pub fn random_tree(features: &[usize], depth: usize, rng: &mut impl Rng) -> HierarchyNode {
    if features.len() == 1 {
        return HierarchyNode::leaf(features[0]);
    }
    if depth == 0 {
        return HierarchyNode::group(features.to_vec(), Vec::new());
    }
    let parts = random_partition(features.len(), 3, rng);
    let children = parts
        .iter()
        .map(|p| {
            let sub: Vec<usize> = p.iter().map(|&i| features[i]).collect();
            random_tree(&sub, depth - 1, rng)
        })
        .collect();
    HierarchyNode::of_children(children)
}

pub fn random_hierarchy(n: usize, depth: usize, rng: &mut impl Rng) -> PartitionHierarchy {
    let features: Vec<usize> = (0..n).collect();
    PartitionHierarchy::from_tree(&random_tree(&features, depth, rng), n).unwrap()
}

pub fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        assert!((x - y).abs() <= tol, "index {i}: {x} vs {y}");
    }
}
