use std::collections::{HashMap, HashSet};
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::game::{check_arity, CoalitionMask, ValueFunction};
use crate::scalar::Scalar;

/// Snapshot of an [`EvalCache`]'s counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalStats {
    /// Unique masks stored in the cache.
    pub distinct_calls: u64,
    /// Every lookup, hit or miss.
    pub total_requests: u64,
}

const SHARDS: usize = 16;

/// Memoizing wrapper around a [`ValueFunction`] that counts distinct and total requests.
///
/// The cache key is the raw mask. Lookups may come from many threads; the underlying
/// function is evaluated outside the shard lock, so two threads racing on the same new
/// mask can both evaluate it, but only the first insert is stored and counted.
pub struct EvalCache<V, T = f64> {
    inner: V,
    shards: Vec<Mutex<HashMap<CoalitionMask, T>>>,
    distinct: AtomicU64,
    requests: AtomicU64,
}

impl<V, T> EvalCache<V, T>
where
    T: Scalar,
    V: ValueFunction<T>,
{
    pub fn new(inner: V) -> Self {
        Self {
            inner,
            shards: (0..SHARDS).map(|_| Mutex::new(HashMap::new())).collect(),
            distinct: AtomicU64::new(0),
            requests: AtomicU64::new(0),
        }
    }

    pub fn inner(&self) -> &V {
        &self.inner
    }

    pub fn stats(&self) -> EvalStats {
        EvalStats {
            distinct_calls: self.distinct.load(Ordering::SeqCst),
            total_requests: self.requests.load(Ordering::SeqCst),
        }
    }

    /// Value of `mask`, evaluating the wrapped function only on a miss.
    pub fn cached_evaluate(&self, mask: &CoalitionMask) -> Result<T> {
        check_arity(self.inner.n_features(), mask)?;
        Ok(self.lookup(mask))
    }

    fn shard_of(mask: &CoalitionMask) -> usize {
        let h = mask.words().iter().fold(0x9e37_79b9_7f4a_7c15u64, |acc, w| {
            (acc ^ w).wrapping_mul(0x100_0000_01b3)
        });
        (h >> 59) as usize % SHARDS
    }

    fn lookup(&self, mask: &CoalitionMask) -> T {
        self.requests.fetch_add(1, Ordering::SeqCst);
        let shard = &self.shards[Self::shard_of(mask)];
        if let Some(v) = shard.lock().expect("cache shard poisoned").get(mask) {
            return v.clone();
        }
        let value = self.inner.evaluate(mask);
        let mut guard = shard.lock().expect("cache shard poisoned");
        match guard.entry(mask.clone()) {
            std::collections::hash_map::Entry::Occupied(e) => e.get().clone(),
            std::collections::hash_map::Entry::Vacant(e) => {
                self.distinct.fetch_add(1, Ordering::SeqCst);
                e.insert(value.clone());
                value
            }
        }
    }
}

/// Free-function form of [`EvalCache::cached_evaluate`].
pub fn cached_evaluate<V, T>(cache: &EvalCache<V, T>, mask: &CoalitionMask) -> Result<T>
where
    T: Scalar,
    V: ValueFunction<T>,
{
    cache.cached_evaluate(mask)
}

impl<V, T> ValueFunction<T> for EvalCache<V, T>
where
    T: Scalar,
    V: ValueFunction<T>,
{
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    fn evaluate(&self, coalition: &CoalitionMask) -> T {
        debug_assert_eq!(coalition.len(), self.inner.n_features());
        self.lookup(coalition)
    }

    fn eval_stats(&self) -> Option<EvalStats> {
        Some(self.stats())
    }
}

/// Counts total and distinct requests without storing values.
///
/// Masks are remembered by a 128-bit fingerprint, so memory stays small when the
/// evaluation pattern is too large to cache; a fingerprint collision would undercount by
/// one and is vanishingly unlikely at the sizes this is used for.
pub struct EvalCounter<V> {
    inner: V,
    shards: Vec<Mutex<HashSet<u128>>>,
    distinct: AtomicU64,
    requests: AtomicU64,
}

impl<V> EvalCounter<V> {
    pub fn new(inner: V) -> Self {
        Self {
            inner,
            shards: (0..SHARDS).map(|_| Mutex::new(HashSet::new())).collect(),
            distinct: AtomicU64::new(0),
            requests: AtomicU64::new(0),
        }
    }

    pub fn inner(&self) -> &V {
        &self.inner
    }

    pub fn stats(&self) -> EvalStats {
        EvalStats {
            distinct_calls: self.distinct.load(Ordering::SeqCst),
            total_requests: self.requests.load(Ordering::SeqCst),
        }
    }

    fn record(&self, mask: &CoalitionMask) {
        self.requests.fetch_add(1, Ordering::SeqCst);
        let mut a = DefaultHasher::new();
        mask.hash(&mut a);
        let mut b = DefaultHasher::new();
        0xa5u8.hash(&mut b);
        mask.hash(&mut b);
        let key = (u128::from(a.finish()) << 64) | u128::from(b.finish());
        let shard = &self.shards[(key as usize) % SHARDS];
        if shard.lock().expect("counter shard poisoned").insert(key) {
            self.distinct.fetch_add(1, Ordering::SeqCst);
        }
    }
}

impl<V, T> ValueFunction<T> for EvalCounter<V>
where
    T: Scalar,
    V: ValueFunction<T>,
{
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    fn evaluate(&self, coalition: &CoalitionMask) -> T {
        self.record(coalition);
        self.inner.evaluate(coalition)
    }

    fn eval_stats(&self) -> Option<EvalStats> {
        Some(self.stats())
    }
}
