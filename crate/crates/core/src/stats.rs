//! Streaming mean/variance with an order-deterministic merge.

use crate::real::Real;

/// Two-sided 95% normal quantile used for confidence half-widths.
pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary<T> {
    pub count: u64,
    pub mean: T,
    m2: T,
}

impl<T: Real> Default for Summary<T> {
    fn default() -> Self {
        Self {
            count: 0,
            mean: T::zero(),
            m2: T::zero(),
        }
    }
}

impl<T: Real> Summary<T> {
    pub fn push(&mut self, x: T) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / T::of(self.count as f64);
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let n = self.count + other.count;
        let (na, nb) = (T::of(self.count as f64), T::of(other.count as f64));
        let nt = T::of(n as f64);
        let delta = other.mean - self.mean;
        Self {
            count: n,
            mean: self.mean + delta * nb / nt,
            m2: self.m2 + other.m2 + delta * delta * na * nb / nt,
        }
    }

    /// Unbiased sample variance (zero for fewer than two samples).
    pub fn variance(&self) -> T {
        if self.count < 2 {
            T::zero()
        } else {
            self.m2 / T::of((self.count - 1) as f64)
        }
    }

    pub fn std_dev(&self) -> T {
        self.variance().sqrt()
    }

    /// 95% confidence half-width of the mean: `1.96 * s / sqrt(n)`.
    pub fn half_width(&self) -> T {
        if self.count == 0 {
            return T::zero();
        }
        T::of(Z95) * self.std_dev() / T::of(self.count as f64).sqrt()
    }

    pub fn from_slice(xs: &[T]) -> Self {
        let mut s = Self::default();
        for &x in xs {
            s.push(x);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_values() {
        let s = Summary::from_slice(&[1.0f64, 2.0, 3.0, 4.0]);
        assert_eq!(s.count, 4);
        assert!((s.mean - 2.5).abs() < 1e-15);
        assert!((s.variance() - 5.0 / 3.0).abs() < 1e-14);
        let hw = 1.96 * (5.0f64 / 3.0).sqrt() / 2.0;
        assert!((s.half_width() - hw).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn merge_matches_single_pass(xs in prop::collection::vec(-1e3f64..1e3, 1..60), split in 0usize..60) {
            let k = split.min(xs.len());
            let whole = Summary::from_slice(&xs);
            let merged = Summary::from_slice(&xs[..k]).merge(&Summary::from_slice(&xs[k..]));
            prop_assert_eq!(whole.count, merged.count);
            prop_assert!((whole.mean - merged.mean).abs() <= 1e-9 * (1.0 + whole.mean.abs()));
            prop_assert!((whole.variance() - merged.variance()).abs() <= 1e-7 * (1.0 + whole.variance()));
        }
    }
}
