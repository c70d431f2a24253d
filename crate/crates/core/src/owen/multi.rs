use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{CoalitionMask, ValueFunction};
use crate::owen::cost::{pair_eval_exponent, predicted_eval_exponent};
use crate::owen::PartitionHierarchy;
use crate::scalar::{shapley_weights, Scalar};
use crate::shapley::{Attribution, Method};

#[derive(Clone, Copy, Debug)]
pub struct OwenOptions {
    /// Upper bound on a single feature's (with, without) evaluation pairs.
    pub max_pairs_per_feature: u128,
}

pub const DEFAULT_OWEN_LIMIT: u128 = 1 << 20;

impl Default for OwenOptions {
    fn default() -> Self {
        Self {
            max_pairs_per_feature: DEFAULT_OWEN_LIMIT,
        }
    }
}

/// Branching above which a node's coalition table would not fit in memory.
const MAX_TABLE_BITS: usize = 26;
/// Subtrees with fewer leaves than this are processed on the calling thread.
const PAR_MIN_LEAVES: usize = 16;

pub(crate) fn check_capacity(h: &PartitionHierarchy, opts: &OwenOptions) -> Result<()> {
    let pairs = pair_eval_exponent(h);
    let widest = h.nodes().iter().map(|n| n.children.len()).max().unwrap_or(0);
    let over = pairs >= 127 || (1u128 << pairs) > opts.max_pairs_per_feature || widest > MAX_TABLE_BITS;
    if over {
        return Err(Error::Capacity {
            what: format!("multi-level Owen over {} features", h.n_features()),
            required: format!(
                "2^{pairs} evaluation pairs per feature (predicted subset combinations 2^{})",
                predicted_eval_exponent(h)
            ),
            limit: format!("{} pairs per feature", opts.max_pairs_per_feature),
        });
    }
    Ok(())
}

pub fn owen_multilevel<T: Scalar, V: ValueFunction<T> + ?Sized>(
    vf: &V,
    h: &PartitionHierarchy,
) -> Result<Attribution<T>> {
    owen_multilevel_with(vf, h, &OwenOptions::default())
}

/// Multi-level Owen value over a coalition hierarchy.
///
/// For feature `i`, every level contributes a sum over subsets of the sibling set of
/// `i`'s ancestor at that level, weighted by the Shapley kernel of that sibling set; the
/// marginal is taken on the union of all selected coalitions. The traversal walks the
/// tree top-down, so each (node, outer context) pair tabulates the unions of its
/// children once and hands the two boundary values down: no mask is requested twice.
pub fn owen_multilevel_with<T: Scalar, V: ValueFunction<T> + ?Sized>(
    vf: &V,
    h: &PartitionHierarchy,
    opts: &OwenOptions,
) -> Result<Attribution<T>> {
    if vf.n_features() != h.n_features() {
        return Err(Error::invalid(format!(
            "game has {} features, hierarchy has {}",
            vf.n_features(),
            h.n_features()
        )));
    }
    check_capacity(h, opts)?;
    let engine = Engine::new(vf, h);
    let n = h.n_features();
    let empty = CoalitionMask::empty(n);
    let v_empty = engine.eval(&empty);
    let v_full = engine.eval(&CoalitionMask::full(n));
    let by_leaf_order = engine.node(h.root(), &empty, v_empty, v_full, T::one());
    let mut scores = vec![T::zero(); n];
    for (pos, value) in by_leaf_order.into_iter().enumerate() {
        scores[h.leaf_order()[pos]] = value;
    }
    Ok(Attribution {
        scores,
        method: Method::OwenMulti,
        requests: engine.requests.load(Ordering::SeqCst),
        cache: vf.eval_stats(),
    })
}

/// Owen value of one feature by direct enumeration of the sibling subsets along its
/// ancestor chain. Costs `2^pair_eval_exponent` evaluations.
pub fn owen_feature_value<T: Scalar, V: ValueFunction<T> + ?Sized>(
    vf: &V,
    h: &PartitionHierarchy,
    feature: usize,
    opts: &OwenOptions,
) -> Result<T> {
    if vf.n_features() != h.n_features() || feature >= h.n_features() {
        return Err(Error::invalid(format!(
            "feature {feature} of a {}-feature hierarchy with a {}-feature game",
            h.n_features(),
            vf.n_features()
        )));
    }
    check_capacity(h, opts)?;
    let chain = h.sibling_context(feature).levels;
    let masks: Vec<CoalitionMask> = (0..h.nodes().len()).map(|id| h.mask_of(id)).collect();

    fn rec<T: Scalar, V: ValueFunction<T> + ?Sized>(
        vf: &V,
        chain: &[crate::owen::LevelContext],
        masks: &[CoalitionMask],
        feature: usize,
        base: &CoalitionMask,
        weight: T,
    ) -> T {
        let Some((here, rest)) = chain.split_first() else {
            return weight * (vf.evaluate(&base.with(feature)) - vf.evaluate(base));
        };
        let others: Vec<usize> = here.siblings.iter().copied().filter(|&s| s != here.ancestor).collect();
        let weights: Vec<T> = shapley_weights(here.siblings.len());
        let mut acc = T::zero();
        for subset in 0..1u64 << others.len() {
            let mut next = base.clone();
            for (b, &o) in others.iter().enumerate() {
                if subset >> b & 1 == 1 {
                    next.union_in_place(&masks[o]);
                }
            }
            let w = weight.clone() * weights[subset.count_ones() as usize].clone();
            acc = acc + rec(vf, rest, masks, feature, &next, w);
        }
        acc
    }
    Ok(rec(
        vf,
        &chain,
        &masks,
        feature,
        &CoalitionMask::empty(h.n_features()),
        T::one(),
    ))
}

struct Engine<'a, T, V: ?Sized> {
    vf: &'a V,
    h: &'a PartitionHierarchy,
    masks: Vec<CoalitionMask>,
    weights: Vec<Vec<T>>,
    requests: AtomicU64,
}

impl<'a, T: Scalar, V: ValueFunction<T> + ?Sized> Engine<'a, T, V> {
    fn new(vf: &'a V, h: &'a PartitionHierarchy) -> Self {
        let widest = h.nodes().iter().map(|n| n.children.len()).max().unwrap_or(1);
        let weights = (0..=widest)
            .map(|k| if k == 0 { Vec::new() } else { shapley_weights(k) })
            .collect();
        Self {
            vf,
            h,
            masks: (0..h.nodes().len()).map(|id| h.mask_of(id)).collect(),
            weights,
            requests: AtomicU64::new(0),
        }
    }

    fn eval(&self, mask: &CoalitionMask) -> T {
        self.requests.fetch_add(1, Ordering::Relaxed);
        self.vf.evaluate(mask)
    }

    fn union_of(&self, base: &CoalitionMask, kids: &[usize], subset: u64) -> CoalitionMask {
        let mut m = base.clone();
        for (j, &kid) in kids.iter().enumerate() {
            if subset >> j & 1 == 1 {
                m.union_in_place(&self.masks[kid]);
            }
        }
        m
    }

    /// Contributions to every leaf under `id` (in leaf order), given the outer context
    /// `ctx`, its value, the value of `ctx + node`, and the accumulated outer weight.
    fn node(&self, id: usize, ctx: &CoalitionMask, v_ctx: T, v_full: T, weight: T) -> Vec<T> {
        let node = self.h.node(id);
        let kids = &node.children;
        let k = kids.len();
        let (start, end) = node.leaf_range;
        let wide = end - start >= PAR_MIN_LEAVES;
        let all = (1u64 << k) - 1;

        let mut table: Vec<T> = vec![T::zero(); 1usize << k];
        let inner: Vec<u64> = (1..all).collect();
        let evaluated: Vec<T> = if wide {
            inner
                .par_iter()
                .map(|&u| self.eval(&self.union_of(ctx, kids, u)))
                .collect()
        } else {
            inner.iter().map(|&u| self.eval(&self.union_of(ctx, kids, u))).collect()
        };
        for (u, v) in inner.iter().zip(evaluated) {
            table[*u as usize] = v;
        }
        table[0] = v_ctx;
        table[all as usize] = v_full;

        let weights = &self.weights[k];
        let mut out = vec![T::zero(); end - start];
        for (j, &kid) in kids.iter().enumerate() {
            let bit = 1u64 << j;
            let child = self.h.node(kid);
            let offset = child.leaf_range.0 - start;
            let subsets: Vec<u64> = (0..=all).filter(|s| s & bit == 0).collect();
            let term = |s: u64| -> (T, T, T) {
                let w = weight.clone() * weights[s.count_ones() as usize].clone();
                (w, table[s as usize].clone(), table[(s | bit) as usize].clone())
            };
            if child.is_leaf() {
                let mut acc = T::zero();
                for &s in &subsets {
                    let (w, v0, v1) = term(s);
                    acc = acc + w * (v1 - v0);
                }
                out[offset] = out[offset].clone() + acc;
                continue;
            }
            let recurse = |s: &u64| {
                let (w, v0, v1) = term(*s);
                let sub_ctx = self.union_of(ctx, kids, *s);
                self.node(kid, &sub_ctx, v0, v1, w)
            };
            let parts: Vec<Vec<T>> = if wide && subsets.len() > 1 {
                subsets.par_iter().map(recurse).collect()
            } else {
                subsets.iter().map(recurse).collect()
            };
            for part in parts {
                for (slot, v) in out[offset..offset + part.len()].iter_mut().zip(part) {
                    *slot = slot.clone() + v;
                }
            }
        }
        out
    }
}
