//! Numeric abstraction shared by the game-theoretic engines.
//!
//! Game values, weights and attributions are generic over [`Scalar`] so the same
//! enumeration code runs on `f64` (the default everywhere), `f32`, or exact
//! rationals for closed-form checks.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// A value a cooperative game can take.
pub trait Scalar: Num + Clone + Debug + PartialOrd + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    /// `1 / denom`.
    fn recip_of(denom: u128) -> Self {
        Self::one() / Self::from_u128(denom).expect("denominator representable in scalar")
    }

    /// Lossy conversion used for real-valued fallbacks (log-factorial weights, random draws).
    fn from_real(x: f64) -> Self {
        Self::from_f64(x).expect("finite value representable in scalar")
    }

    fn to_real(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {}
impl Scalar for f32 {}
impl Scalar for Ratio<i64> {}
impl Scalar for Ratio<i128> {}

/// Binomial coefficient as an exact integer; `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(u128::from(n - i))? / u128::from(i + 1);
    }
    Some(acc)
}

/// `ln(n!)` for every `n` in `0..=max`.
pub fn log_factorials(max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(max + 1);
    let mut acc = 0.0f64;
    out.push(0.0);
    for i in 1..=max {
        acc += (i as f64).ln();
        out.push(acc);
    }
    out
}

/// Players at or below this count get exact integer binomials in their weights.
pub const EXACT_WEIGHT_LIMIT: usize = 20;

/// Classical Shapley kernel `|S|! (n-|S|-1)! / n! = 1 / (n * C(n-1, |S|))`, indexed by `|S|`.
pub fn shapley_weights<T: Scalar>(n: usize) -> Vec<T> {
    assert!(n >= 1, "a game needs at least one player");
    if n <= EXACT_WEIGHT_LIMIT {
        (0..n)
            .map(|s| {
                let c = binomial((n - 1) as u64, s as u64).expect("small binomial");
                T::recip_of(n as u128 * c)
            })
            .collect()
    } else {
        let lf = log_factorials(n);
        (0..n)
            .map(|s| T::from_real((lf[s] + lf[n - s - 1] - lf[n]).exp()))
            .collect()
    }
}
