use std::sync::Arc;

use crate::error::{Error, Result};
use crate::game::{CoalitionMask, EvalStats};
use crate::scalar::Scalar;

/// Deterministic mapping from coalitions to game values.
///
/// Implementations must be pure: the same mask always yields a bit-identical value and
/// evaluation is safe from many threads at once. Stochastic scorers break every engine
/// in this crate and are not detected.
pub trait ValueFunction<T: Scalar = f64>: Send + Sync {
    fn n_features(&self) -> usize;

    fn evaluate(&self, coalition: &CoalitionMask) -> T;

    /// Counters of an underlying evaluation cache, when there is one.
    fn eval_stats(&self) -> Option<EvalStats> {
        None
    }
}

impl<T: Scalar, V: ValueFunction<T> + ?Sized> ValueFunction<T> for &V {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }
    fn evaluate(&self, coalition: &CoalitionMask) -> T {
        (**self).evaluate(coalition)
    }
    fn eval_stats(&self) -> Option<EvalStats> {
        (**self).eval_stats()
    }
}

impl<T: Scalar, V: ValueFunction<T> + ?Sized> ValueFunction<T> for Box<V> {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }
    fn evaluate(&self, coalition: &CoalitionMask) -> T {
        (**self).evaluate(coalition)
    }
    fn eval_stats(&self) -> Option<EvalStats> {
        (**self).eval_stats()
    }
}

impl<T: Scalar, V: ValueFunction<T> + ?Sized> ValueFunction<T> for Arc<V> {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }
    fn evaluate(&self, coalition: &CoalitionMask) -> T {
        (**self).evaluate(coalition)
    }
    fn eval_stats(&self) -> Option<EvalStats> {
        (**self).eval_stats()
    }
}

/// Checks that `mask` belongs to a game with `n` features.
pub fn check_arity(n: usize, mask: &CoalitionMask) -> Result<()> {
    if mask.len() != n {
        return Err(Error::invalid(format!(
            "mask has {} features, game has {n}",
            mask.len()
        )));
    }
    Ok(())
}

/// A game defined by a closure.
pub struct FnGame<F> {
    n: usize,
    f: F,
}

impl<F> FnGame<F> {
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<T, F> ValueFunction<T> for FnGame<F>
where
    T: Scalar,
    F: Fn(&CoalitionMask) -> T + Send + Sync,
{
    fn n_features(&self) -> usize {
        self.n
    }
    fn evaluate(&self, coalition: &CoalitionMask) -> T {
        (self.f)(coalition)
    }
}

/// A game stored as an explicit table of `2^n` values indexed by the mask bits.
#[derive(Clone, Debug, PartialEq)]
pub struct TableGame<T = f64> {
    n: usize,
    values: Vec<T>,
}

/// Largest player count a [`TableGame`] may hold.
pub const TABLE_GAME_MAX_FEATURES: usize = 24;

impl<T: Scalar> TableGame<T> {
    pub fn new(n: usize, values: Vec<T>) -> Result<Self> {
        if n == 0 || n > TABLE_GAME_MAX_FEATURES {
            return Err(Error::invalid(format!(
                "table games support 1..={TABLE_GAME_MAX_FEATURES} features, got {n}"
            )));
        }
        if values.len() != 1usize << n {
            return Err(Error::invalid(format!(
                "table for {n} features needs {} values, got {}",
                1usize << n,
                values.len()
            )));
        }
        Ok(Self { n, values })
    }

    /// Tabulates any game with at most 24 features.
    pub fn tabulate<V: ValueFunction<T> + ?Sized>(vf: &V) -> Result<Self> {
        let n = vf.n_features();
        if n == 0 || n > TABLE_GAME_MAX_FEATURES {
            return Err(Error::invalid(format!("cannot tabulate a {n}-feature game")));
        }
        let values = (0..1u64 << n)
            .map(|bits| vf.evaluate(&CoalitionMask::from_bits(n, bits)))
            .collect();
        Ok(Self { n, values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value_of_bits(&self, bits: u64) -> &T {
        &self.values[bits as usize]
    }

    /// Pointwise `a*self + b*other`.
    pub fn linear_combination(&self, a: T, other: &Self, b: T) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::invalid("games differ in feature count"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a.clone() * x.clone() + b.clone() * y.clone())
            .collect();
        Ok(Self { n: self.n, values })
    }
}

impl<T: Scalar> ValueFunction<T> for TableGame<T> {
    fn n_features(&self) -> usize {
        self.n
    }
    fn evaluate(&self, coalition: &CoalitionMask) -> T {
        debug_assert_eq!(coalition.len(), self.n);
        self.values[coalition.low_bits() as usize].clone()
    }
}
