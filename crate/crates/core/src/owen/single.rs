use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{CoalitionMask, ValueFunction};
use crate::owen::multi::OwenOptions;
use crate::owen::PartitionHierarchy;
use crate::scalar::{shapley_weights, Scalar};
use crate::shapley::{Attribution, Method};

pub fn owen_single_level<T: Scalar, V: ValueFunction<T> + ?Sized>(
    vf: &V,
    partition: &PartitionHierarchy,
) -> Result<Attribution<T>> {
    owen_single_level_with(vf, partition, &OwenOptions::default())
}

/// Owen value for a one-level coalition structure, evaluated feature by feature as a
/// double sum: subsets `T` of the other groups (kernel over the number of groups) and
/// subsets `S` of the feature's own group (kernel over the group size).
///
/// `partition` must have at most two levels; its level-1 nodes are the groups.
pub fn owen_single_level_with<T: Scalar, V: ValueFunction<T> + ?Sized>(
    vf: &V,
    partition: &PartitionHierarchy,
    opts: &OwenOptions,
) -> Result<Attribution<T>> {
    let n = partition.n_features();
    if vf.n_features() != n {
        return Err(Error::invalid(format!(
            "game has {} features, partition has {n}",
            vf.n_features()
        )));
    }
    if partition.levels() > 2 {
        return Err(Error::invalid(format!(
            "single-level Owen needs a flat partition, got {} levels",
            partition.levels()
        )));
    }
    let groups = partition.top_groups();
    let k = groups.len();
    let widest = groups.iter().map(Vec::len).max().unwrap_or(1);
    let pair_exp = (k - 1 + widest - 1 + 1) as u32;
    if pair_exp >= 127 || (1u128 << pair_exp) > opts.max_pairs_per_feature {
        return Err(Error::Capacity {
            what: format!("single-level Owen over {n} features"),
            required: format!("2^{pair_exp} evaluation pairs per feature"),
            limit: format!("{} pairs per feature", opts.max_pairs_per_feature),
        });
    }
    let group_masks: Vec<CoalitionMask> = groups
        .iter()
        .map(|g| CoalitionMask::from_indices(n, g.iter().copied()))
        .collect();
    let outer_w: Vec<T> = shapley_weights(k);

    let jobs: Vec<(usize, usize)> = groups
        .iter()
        .enumerate()
        .flat_map(|(g, members)| members.iter().map(move |&i| (g, i)))
        .collect();
    let results: Vec<(usize, T, u64)> = jobs
        .par_iter()
        .map(|&(g, i)| {
            let others: Vec<usize> = (0..k).filter(|&o| o != g).collect();
            let mates: Vec<usize> = groups[g].iter().copied().filter(|&m| m != i).collect();
            let inner_w: Vec<T> = shapley_weights(groups[g].len());
            let mut acc = T::zero();
            let mut requests = 0u64;
            for t in 0..1u64 << others.len() {
                let mut base = CoalitionMask::empty(n);
                for (b, &o) in others.iter().enumerate() {
                    if t >> b & 1 == 1 {
                        base.union_in_place(&group_masks[o]);
                    }
                }
                let wt = outer_w[t.count_ones() as usize].clone();
                for s in 0..1u64 << mates.len() {
                    let mut without = base.clone();
                    for (b, &m) in mates.iter().enumerate() {
                        if s >> b & 1 == 1 {
                            without.set(m);
                        }
                    }
                    let with = without.with(i);
                    let w = wt.clone() * inner_w[s.count_ones() as usize].clone();
                    acc = acc + w * (vf.evaluate(&with) - vf.evaluate(&without));
                    requests += 2;
                }
            }
            (i, acc, requests)
        })
        .collect();

    let mut scores = vec![T::zero(); n];
    let mut requests = 0;
    for (i, v, r) in results {
        scores[i] = v;
        requests += r;
    }
    Ok(Attribution {
        scores,
        method: Method::OwenSingle,
        requests,
        cache: vf.eval_stats(),
    })
}
