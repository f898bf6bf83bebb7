//! Probability scalars.
//!
//! Enumeration and exact-probability code is generic over [`Weight`] so the
//! same loop runs with exact big rationals (`p` given as a small fraction) or
//! with `f32`/`f64`. Summation goes through [`WeightSum`], a compensated
//! accumulator; for exact scalars the compensation term is identically zero,
//! for floats it is Kahan summation.

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

pub trait Weight:
    Clone
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Debug
    + Send
    + Sync
{
    /// The exact fraction `num/den` as a scalar of this type.
    fn from_ratio(num: u64, den: u64) -> Self;

    fn to_f64(&self) -> f64;

    /// Unit roundoff of the scalar, `None` when arithmetic is exact.
    fn unit_roundoff() -> Option<f64>;
}

impl Weight for f64 {
    fn from_ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn unit_roundoff() -> Option<f64> {
        Some(f64::EPSILON / 2.0)
    }
}

impl Weight for f32 {
    fn from_ratio(num: u64, den: u64) -> Self {
        num as f32 / den as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }

    fn unit_roundoff() -> Option<f64> {
        Some(f32::EPSILON as f64 / 2.0)
    }
}

impl Weight for BigRational {
    fn from_ratio(num: u64, den: u64) -> Self {
        BigRational::new(num.into(), den.into())
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn unit_roundoff() -> Option<f64> {
        None
    }
}

/// Compensated accumulator over a weight scalar.
#[derive(Clone, Debug)]
pub struct WeightSum<W: Weight> {
    total: W,
    compensation: W,
}

impl<W: Weight> Default for WeightSum<W> {
    fn default() -> Self {
        WeightSum { total: W::zero(), compensation: W::zero() }
    }
}

impl<W: Weight> WeightSum<W> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, w: W) {
        let y = w - self.compensation.clone();
        let t = self.total.clone() + y.clone();
        self.compensation = (t.clone() - self.total.clone()) - y;
        self.total = t;
    }

    pub fn total(&self) -> W {
        self.total.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn rational_sum_is_exact() {
        let mut s = WeightSum::<Rational>::new();
        for _ in 0..3 {
            s.add(Rational::from_ratio(1, 3));
        }
        assert_eq!(s.total(), Rational::from_ratio(1, 1));
    }

    #[test]
    fn kahan_beats_naive_on_adversarial_input() {
        let mut s = WeightSum::<f64>::new();
        let tiny = 1e-16;
        s.add(1.0);
        for _ in 0..10_000 {
            s.add(tiny);
        }
        let expected = 1.0 + 1e-12;
        assert!((s.total() - expected).abs() < 1e-15);
    }

    #[test]
    fn ratio_constructors_agree() {
        assert_eq!(f64::from_ratio(1, 2), 0.5);
        assert_eq!(Rational::from_ratio(2, 4), Rational::from_ratio(1, 2));
        assert_eq!(Weight::to_f64(&Rational::from_ratio(1, 2)), 0.5);
        assert!(<Rational as Weight>::unit_roundoff().is_none());
    }
}
