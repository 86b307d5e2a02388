use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Scalar type for threshold voltages: `f32` or `f64`.
pub trait Voltage:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// One draw from `N(mean, sigma²)`; exactly `mean` when `sigma` is zero
    /// (and no randomness is consumed).
    fn sample_normal<R: Rng + ?Sized>(rng: &mut R, mean: Self, sigma: Self) -> Self;

    /// Lossy conversion from `f64`, for literals and configuration.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("voltage converts to f64")
    }
}

macro_rules! impl_voltage {
    ($t:ty) => {
        impl Voltage for $t {
            #[inline]
            fn sample_normal<R: Rng + ?Sized>(rng: &mut R, mean: Self, sigma: Self) -> Self {
                if sigma == 0.0 {
                    return mean;
                }
                let z: $t = StandardNormal.sample(rng);
                mean + sigma * z
            }
        }
    };
}

impl_voltage!(f32);
impl_voltage!(f64);
