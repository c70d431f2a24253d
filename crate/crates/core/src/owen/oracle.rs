use itertools::Itertools;

use crate::error::{Error, Result};
use crate::game::{CoalitionMask, ValueFunction};
use crate::owen::PartitionHierarchy;
use crate::scalar::Scalar;
use crate::shapley::{Attribution, Method};

pub const NESTED_ORACLE_LIMIT: u128 = 1_000_000;

/// Number of orderings in which, at every node, each child's features appear contiguously.
pub fn consistent_permutation_count(h: &PartitionHierarchy) -> Option<u128> {
    h.nodes().iter().try_fold(1u128, |acc, node| {
        let k = node.children.len() as u128;
        (1..=k).try_fold(acc, |a, x| a.checked_mul(x))
    })
}

/// Owen values as the mean marginal contribution over all hierarchy-consistent orderings.
/// Shares no code with the subset-sum engines.
pub fn nested_permutation_oracle<T: Scalar, V: ValueFunction<T> + ?Sized>(
    vf: &V,
    h: &PartitionHierarchy,
) -> Result<Attribution<T>> {
    let n = h.n_features();
    if vf.n_features() != n {
        return Err(Error::invalid("game and hierarchy differ in feature count"));
    }
    let count = consistent_permutation_count(h).filter(|&c| c <= NESTED_ORACLE_LIMIT);
    let Some(count) = count else {
        return Err(Error::Capacity {
            what: "nested permutation oracle".into(),
            required: format!(
                "{} consistent orderings",
                consistent_permutation_count(h).map_or("> 2^128".into(), |c| c.to_string())
            ),
            limit: NESTED_ORACLE_LIMIT.to_string(),
        });
    };

    // One child permutation per internal node, advanced like an odometer.
    let internal: Vec<usize> = (0..h.nodes().len()).filter(|&i| !h.node(i).is_leaf()).collect();
    let choices: Vec<Vec<Vec<usize>>> = internal
        .iter()
        .map(|&id| {
            let kids = &h.node(id).children;
            kids.iter().copied().permutations(kids.len()).collect()
        })
        .collect();
    let mut slot_of = vec![usize::MAX; h.nodes().len()];
    for (s, &id) in internal.iter().enumerate() {
        slot_of[id] = s;
    }
    let mut digits = vec![0usize; internal.len()];

    let mut totals = vec![T::zero(); n];
    let mut requests = 0u64;
    loop {
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![h.root()];
        while let Some(id) = stack.pop() {
            let node = h.node(id);
            if node.is_leaf() {
                order.push(node.members[0]);
            } else {
                let s = slot_of[id];
                stack.extend(choices[s][digits[s]].iter().rev());
            }
        }
        let mut mask = CoalitionMask::empty(n);
        let mut prev = vf.evaluate(&mask);
        for &i in &order {
            mask.set(i);
            let next = vf.evaluate(&mask);
            totals[i] = totals[i].clone() + (next.clone() - prev);
            prev = next;
        }
        requests += n as u64 + 1;

        let mut carry = true;
        for (d, digit) in digits.iter_mut().enumerate() {
            *digit += 1;
            if *digit < choices[d].len() {
                carry = false;
                break;
            }
            *digit = 0;
        }
        if carry {
            break;
        }
    }
    let denom = T::from_u128(count).expect("ordering count representable");
    Ok(Attribution {
        scores: totals.into_iter().map(|t| t / denom.clone()).collect(),
        method: Method::OwenPermutationOracle,
        requests,
        cache: vf.eval_stats(),
    })
}
