//! Scalar abstractions shared by the numeric modules.
//!
//! [`Scalar`] only asks for exact field arithmetic, so the agreement and
//! aggregation code also runs over [`crate::Rational`]. [`Real`] adds the
//! transcendental functions the probe and the evaluation metrics need.

use std::fmt::{Debug, Display};

use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub trait Scalar: Num + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn from_int(n: i64) -> Self {
        Self::from_i64(n).expect("integer representable in scalar type")
    }

    /// `num / den` computed in the scalar type.
    fn ratio(num: i64, den: i64) -> Self {
        Self::from_int(num) / Self::from_int(den)
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
impl Scalar for BigRational {}

/// Floating point scalar: f32 or f64.
pub trait Real: Scalar + Float + Copy + Default + Display + Serialize + DeserializeOwned {
    fn from_f64_lossy(v: f64) -> Self {
        <Self as num_traits::NumCast>::from(v).unwrap_or_else(Self::nan)
    }
}

impl Real for f32 {}
impl Real for f64 {}
