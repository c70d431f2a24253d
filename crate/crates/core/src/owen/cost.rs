//! Evaluation-count accounting for hierarchical attribution.

use serde::{Deserialize, Serialize};

use crate::owen::PartitionHierarchy;

/// Cost figures of one hierarchy, all as powers of two where they are per-feature.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostSummary {
    pub n_features: usize,
    pub levels: usize,
    /// Worst feature's `sum_l |sibling set at level l|`; the predicted count is `2^this`.
    pub predicted_exponent: u64,
    /// Worst feature's number of (with, without) evaluation pairs is `2^this`:
    /// `sum_l (|sibling set| - 1)` subsets times the pair.
    pub pair_exponent: u64,
    /// Exact number of distinct masks a memoized full pass requests, if it fits in `u128`.
    pub full_pass_evaluations: Option<u128>,
}

/// `sum_l |sibling set at level l|` along one feature's ancestor chain.
pub fn feature_exponent(h: &PartitionHierarchy, feature: usize) -> u64 {
    h.sibling_context(feature)
        .levels
        .iter()
        .map(|l| l.siblings.len() as u64)
        .sum()
}

/// Largest per-feature exponent over the hierarchy.
pub fn predicted_eval_exponent(h: &PartitionHierarchy) -> u64 {
    (0..h.n_features()).map(|f| feature_exponent(h, f)).max().unwrap_or(0)
}

/// Per-feature subset-combination count `prod_l 2^|sibling set at level l|` of the worst
/// feature, or `None` when it does not fit in `u128`. For a balanced fan-out `n` and
/// depth `L` this is `2^(nL)`.
pub fn predicted_eval_count(h: &PartitionHierarchy) -> Option<u128> {
    let e = predicted_eval_exponent(h);
    (e < 128).then(|| 1u128 << e)
}

/// Exponent of the worst feature's evaluation-pair count, `1 + sum_l (|sibling set| - 1)`.
pub fn pair_eval_exponent(h: &PartitionHierarchy) -> u64 {
    (0..h.n_features())
        .map(|f| {
            1 + h
                .sibling_context(f)
                .levels
                .iter()
                .map(|l| l.siblings.len() as u64 - 1)
                .sum::<u64>()
        })
        .max()
        .unwrap_or(1)
}

/// Distinct masks touched by a full pass: `f(empty)`, `f(N)`, and for every internal node
/// and every outer context, the `2^K - 2` proper non-empty unions of its `K` children.
pub fn full_pass_eval_count(h: &PartitionHierarchy) -> Option<u128> {
    fn rec(h: &PartitionHierarchy, id: usize, contexts: u128) -> Option<u128> {
        let node = h.node(id);
        if node.is_leaf() {
            return Some(0);
        }
        let k = node.children.len() as u32;
        if k >= 127 {
            return None;
        }
        let own = contexts.checked_mul((1u128 << k) - 2)?;
        let child_contexts = contexts.checked_mul(1u128 << (k - 1))?;
        node.children
            .iter()
            .try_fold(own, |acc, &c| acc.checked_add(rec(h, c, child_contexts)?))
    }
    rec(h, h.root(), 1)?.checked_add(2)
}

pub fn cost_summary(h: &PartitionHierarchy) -> CostSummary {
    CostSummary {
        n_features: h.n_features(),
        levels: h.levels(),
        predicted_exponent: predicted_eval_exponent(h),
        pair_exponent: pair_eval_exponent(h),
        full_pass_evaluations: full_pass_eval_count(h),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::owen::HierarchyNode;

    #[test]
    fn two_five_five_predicts_4096() {
        let h = PartitionHierarchy::balanced(&[2, 5, 5]).unwrap();
        assert_eq!(predicted_eval_count(&h), Some(4096));
        assert_eq!(pair_eval_exponent(&h), 10);
    }

    #[test]
    fn single_flat_group_gives_no_pruning() {
        let n = 6;
        let root = HierarchyNode::of_children(vec![HierarchyNode::group((0..n).collect(), vec![])]);
        let h = PartitionHierarchy::from_tree(&root, n).unwrap();
        assert_eq!(predicted_eval_count(&h), Some(1 << (n + 1)));
    }

    #[test]
    fn all_singletons_cost_two_to_the_n() {
        let h = PartitionHierarchy::all_singletons(7).unwrap();
        assert_eq!(predicted_eval_count(&h), Some(1 << 7));
        assert_eq!(full_pass_eval_count(&h), Some(1 << 7));
    }

    #[test]
    fn balanced_formula() {
        for (n, l) in [(2usize, 3usize), (3, 2), (5, 2)] {
            let h = PartitionHierarchy::balanced(&vec![n; l]).unwrap();
            assert_eq!(predicted_eval_exponent(&h), (n * l) as u64);
        }
    }

    #[test]
    fn full_pass_for_two_five_five() {
        // Enumerated independently: 4 x (32 + 5*30*16) - 4 = 9724.
        let h = PartitionHierarchy::balanced(&[2, 5, 5]).unwrap();
        assert_eq!(full_pass_eval_count(&h), Some(9724));
    }
}
