//! Ordered reduction of complex phasors.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Summation {
    /// Left-to-right accumulation.
    #[default]
    Naive,
    /// Neumaier compensated accumulation on each component.
    Compensated,
}

/// Neumaier (improved Kahan) accumulator for one real component.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier<T> {
    sum: T,
    compensation: T,
}

impl<T: Real> Neumaier<T> {
    pub fn new() -> Self {
        Self { sum: T::zero(), compensation: T::zero() }
    }

    #[inline]
    pub fn add(&mut self, value: T) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation = self.compensation + ((self.sum - t) + value);
        } else {
            self.compensation = self.compensation + ((value - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.compensation
    }
}

/// Sums phasors in iteration order.
pub fn sum_complex<T: Real, I>(terms: I, mode: Summation) -> Complex<T>
where
    I: IntoIterator<Item = Complex<T>>,
{
    match mode {
        Summation::Naive => terms.into_iter().fold(Complex::new(T::zero(), T::zero()), |a, b| a + b),
        Summation::Compensated => {
            let (mut re, mut im) = (Neumaier::new(), Neumaier::new());
            for t in terms {
                re.add(t.re);
                im.add(t.im);
            }
            Complex::new(re.value(), im.value())
        }
    }
}
