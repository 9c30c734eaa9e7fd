//! Floating-point abstraction shared by the learners and scoring code.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar used for rewards, values, logits and scores: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from an `f64` literal or environment reward.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Scalar")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count is representable in every Scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `base^n` by repeated multiplication, so that products of per-step
/// discounts and direct powers agree bit for bit.
pub fn powi<S: Scalar>(base: S, n: usize) -> S {
    let mut acc = S::one();
    for _ in 0..n {
        acc *= base;
    }
    acc
}

/// Numerically stable `log(sum(exp(x)))`. Empty input yields `-inf`.
pub fn log_sum_exp<S: Scalar>(xs: &[S]) -> S {
    let max = xs.iter().copied().fold(S::neg_infinity(), S::max);
    if !max.is_finite() {
        return max;
    }
    let sum: S = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Softmax with temperature; the result sums to one up to rounding.
pub fn softmax<S: Scalar>(xs: &[S], temperature: S) -> Vec<S> {
    let scaled: Vec<S> = xs.iter().map(|&x| x / temperature).collect();
    let max = scaled.iter().copied().fold(S::neg_infinity(), S::max);
    let exps: Vec<S> = scaled.iter().map(|&x| (x - max).exp()).collect();
    let total: S = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax<S: Scalar>(xs: &[S]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Inverse-CDF draw from a probability vector given `u` in `[0, 1)`.
pub fn sample_index<S: Scalar>(probs: &[S], u: S) -> usize {
    let mut acc = S::zero();
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}
