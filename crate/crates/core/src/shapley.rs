//! Shapley attribution: exact subset enumeration, a seeded permutation-sampling
//! estimator, and a brute-force permutation oracle.

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{CoalitionMask, EvalStats, ValueFunction};
use crate::scalar::{shapley_weights, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ShapleyExact,
    ShapleyMc,
    ShapleyPermutationOracle,
    OwenSingle,
    OwenMulti,
    OwenPermutationOracle,
}

impl Method {
    pub fn is_exact(self) -> bool {
        !matches!(self, Method::ShapleyMc)
    }
}

/// Per-feature attribution scores and how they were obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attribution<T = f64> {
    pub scores: Vec<T>,
    pub method: Method,
    /// Value-function calls issued by the engine, counting repeats.
    pub requests: u64,
    /// Snapshot of the evaluation cache when the game was wrapped in one.
    pub cache: Option<EvalStats>,
}

impl<T: Scalar> Attribution<T> {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn total(&self) -> T {
        self.scores.iter().cloned().fold(T::zero(), |a, b| a + b)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.scores.iter().map(Scalar::to_real).collect()
    }
}

/// `f(N) - f(empty)`, the amount an efficient attribution distributes.
pub fn grand_surplus<T: Scalar, V: ValueFunction<T> + ?Sized>(vf: &V) -> T {
    let n = vf.n_features();
    vf.evaluate(&CoalitionMask::full(n)) - vf.evaluate(&CoalitionMask::empty(n))
}

#[derive(Clone, Copy, Debug)]
pub struct ShapleyOptions {
    /// Hard limit on players for exact enumeration (`2^n` evaluations).
    pub max_features: usize,
}

pub const DEFAULT_EXACT_LIMIT: usize = 24;

impl Default for ShapleyOptions {
    fn default() -> Self {
        Self {
            max_features: DEFAULT_EXACT_LIMIT,
        }
    }
}

pub fn exact_shapley<T: Scalar, V: ValueFunction<T> + ?Sized>(vf: &V) -> Result<Attribution<T>> {
    exact_shapley_with(vf, &ShapleyOptions::default())
}

/// Shapley values by enumerating every coalition once.
///
/// Each of the `2^n` masks is evaluated exactly once, then
/// `phi_i = sum_{S not containing i} w(|S|) [v(S+i) - v(S)]`.
pub fn exact_shapley_with<T: Scalar, V: ValueFunction<T> + ?Sized>(
    vf: &V,
    opts: &ShapleyOptions,
) -> Result<Attribution<T>> {
    let n = vf.n_features();
    if n == 0 {
        return Err(Error::invalid("game has no features"));
    }
    let limit = opts.max_features.min(30);
    if n > limit {
        return Err(Error::Capacity {
            what: format!("exact Shapley over {n} features"),
            required: format!("2^{n} value-function evaluations"),
            limit: format!("{limit} features"),
        });
    }
    let table: Vec<T> = (0..1u64 << n)
        .into_par_iter()
        .map(|bits| vf.evaluate(&CoalitionMask::from_bits(n, bits)))
        .collect();
    let weights: Vec<T> = shapley_weights(n);
    let scores = (0..n)
        .into_par_iter()
        .map(|i| {
            let bit = 1u64 << i;
            let mut acc = T::zero();
            for s in 0..1u64 << n {
                if s & bit == 0 {
                    let w = &weights[s.count_ones() as usize];
                    acc = acc + w.clone() * (table[(s | bit) as usize].clone() - table[s as usize].clone());
                }
            }
            acc
        })
        .collect();
    Ok(Attribution {
        scores,
        method: Method::ShapleyExact,
        requests: 1u64 << n,
        cache: vf.eval_stats(),
    })
}

/// Samples drawn per parallel batch; results are summed batch by batch in sample order.
const MC_BATCH: usize = 64;

/// Monte-Carlo Shapley estimate from `samples` uniformly random permutations.
///
/// Every sampled permutation telescopes to `f(N) - f(empty)`, so the estimate is
/// efficient. The same seed always produces the same output.
pub fn permutation_shapley<T: Scalar, V: ValueFunction<T> + ?Sized>(
    vf: &V,
    samples: usize,
    seed: u64,
) -> Result<Attribution<T>> {
    let n = vf.n_features();
    if samples == 0 {
        return Err(Error::invalid("permutation sampling needs at least one sample"));
    }
    if n == 0 {
        return Err(Error::invalid("game has no features"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut totals = vec![T::zero(); n];
    let mut remaining = samples;
    while remaining > 0 {
        let batch = remaining.min(MC_BATCH);
        remaining -= batch;
        let perms: Vec<Vec<usize>> = (0..batch)
            .map(|_| {
                let mut p: Vec<usize> = (0..n).collect();
                p.shuffle(&mut rng);
                p
            })
            .collect();
        let marginals: Vec<Vec<T>> = perms.par_iter().map(|p| walk_permutation(vf, p)).collect();
        for m in marginals {
            for (t, v) in totals.iter_mut().zip(m) {
                *t = t.clone() + v;
            }
        }
    }
    let denom = T::from_usize(samples).expect("sample count representable");
    Ok(Attribution {
        scores: totals.into_iter().map(|t| t / denom.clone()).collect(),
        method: Method::ShapleyMc,
        requests: (samples as u64) * (n as u64 + 1),
        cache: vf.eval_stats(),
    })
}

/// Marginal contribution of each feature along one ordering.
fn walk_permutation<T: Scalar, V: ValueFunction<T> + ?Sized>(vf: &V, order: &[usize]) -> Vec<T> {
    let n = vf.n_features();
    let mut out = vec![T::zero(); n];
    let mut mask = CoalitionMask::empty(n);
    let mut prev = vf.evaluate(&mask);
    for &i in order {
        mask.set(i);
        let next = vf.evaluate(&mask);
        out[i] = next.clone() - prev;
        prev = next;
    }
    out
}

pub const PERMUTATION_ORACLE_LIMIT: usize = 8;

/// Shapley values as the mean marginal over all `n!` orderings. Independent of the
/// subset-weight formula; used to cross-check [`exact_shapley`].
pub fn permutation_oracle_shapley<T: Scalar, V: ValueFunction<T> + ?Sized>(vf: &V) -> Result<Attribution<T>> {
    let n = vf.n_features();
    if n == 0 {
        return Err(Error::invalid("game has no features"));
    }
    if n > PERMUTATION_ORACLE_LIMIT {
        return Err(Error::Capacity {
            what: format!("permutation oracle over {n} features"),
            required: format!("{n}! orderings"),
            limit: format!("{PERMUTATION_ORACLE_LIMIT} features"),
        });
    }
    let mut totals = vec![T::zero(); n];
    let mut count: u64 = 0;
    for order in (0..n).permutations(n) {
        for (t, v) in totals.iter_mut().zip(walk_permutation(vf, &order)) {
            *t = t.clone() + v;
        }
        count += 1;
    }
    let denom = T::from_u64(count).expect("factorial representable");
    Ok(Attribution {
        scores: totals.into_iter().map(|t| t / denom.clone()).collect(),
        method: Method::ShapleyPermutationOracle,
        requests: count * (n as u64 + 1),
        cache: vf.eval_stats(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{EvalCache, FnGame, TableGame};
    use num_rational::Rational64;

    fn two_player() -> TableGame<f64> {
        TableGame::new(2, vec![0.0, 1.0, 2.0, 4.0]).unwrap()
    }

    #[test]
    fn two_player_worked_example() {
        // Orderings (1,2): 1, 3 ; (2,1): 2, 2 -> averages 1.5, 2.5.
        let a = exact_shapley(&two_player()).unwrap();
        assert_eq!(a.scores, vec![1.5, 2.5]);
        assert_eq!(a.method, Method::ShapleyExact);
    }

    #[test]
    fn exact_rational_two_player() {
        let g = TableGame::new(2, [0, 1, 2, 4].iter().map(|&v| Rational64::from_integer(v)).collect()).unwrap();
        let a = exact_shapley(&g).unwrap();
        assert_eq!(a.scores, vec![Rational64::new(3, 2), Rational64::new(5, 2)]);
    }

    #[test]
    fn additive_game_returns_coefficients() {
        let c = [3.0, -1.0, 0.5, 7.0];
        let g = FnGame::new(4, move |m: &CoalitionMask| m.iter().map(|i| c[i]).sum::<f64>());
        let a = exact_shapley(&g).unwrap();
        for (x, y) in a.scores.iter().zip(c) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn dummy_feature_gets_zero() {
        let g = FnGame::new(4, |m: &CoalitionMask| {
            let b = m.low_bits() & 0b0111;
            (b * b) as f64 + if b & 1 == 1 && b & 2 == 2 { 5.0 } else { 0.0 }
        });
        let a = exact_shapley(&g).unwrap();
        assert!(a.scores[3].abs() < 1e-12);
    }

    #[test]
    fn over_limit_is_a_capacity_error() {
        let g = FnGame::new(25, |_: &CoalitionMask| 0.0f64);
        match exact_shapley(&g) {
            Err(Error::Capacity { required, .. }) => assert!(required.contains("2^25")),
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn cached_exact_shapley_makes_two_to_the_n_distinct_calls() {
        let c = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let cache = EvalCache::new(FnGame::new(6, move |m: &CoalitionMask| {
            m.iter().map(|i| c[i]).product::<f64>()
        }));
        let a: Attribution<f64> = exact_shapley(&cache).unwrap();
        assert_eq!(a.cache.unwrap().distinct_calls, 64);
        assert_eq!(a.requests, 64);
    }

    #[test]
    fn mc_additive_single_sample_is_exact() {
        let c = [3.0, -1.0, 2.0, 7.0, 11.0];
        let g = FnGame::new(5, move |m: &CoalitionMask| m.iter().map(|i| c[i]).sum::<f64>());
        for seed in [0, 1, 99] {
            let a = permutation_shapley(&g, 1, seed).unwrap();
            assert_eq!(a.scores, c.to_vec());
        }
    }

    #[test]
    fn mc_converges_and_is_reproducible() {
        let a = permutation_shapley(&two_player(), 10_000, 1).unwrap();
        assert!((a.scores[0] - 1.5).abs() < 0.05);
        assert!((a.scores[1] - 2.5).abs() < 0.05);
        let b = permutation_shapley(&two_player(), 10_000, 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mc_rejects_zero_samples() {
        assert!(matches!(
            permutation_shapley(&two_player(), 0, 1),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn oracle_symmetric_and_constant_games() {
        let sym = FnGame::new(5, |m: &CoalitionMask| (m.count() as f64).powi(3));
        let a = permutation_oracle_shapley(&sym).unwrap();
        for s in &a.scores {
            assert!((s - a.scores[0]).abs() < 1e-12);
        }
        let constant = FnGame::new(4, |_: &CoalitionMask| 3.25f64);
        let b = permutation_oracle_shapley(&constant).unwrap();
        assert!(b.scores.iter().all(|s| *s == 0.0));
        let big = FnGame::new(9, |_: &CoalitionMask| 0.0f64);
        assert!(matches!(permutation_oracle_shapley(&big), Err(Error::Capacity { .. })));
    }
}
