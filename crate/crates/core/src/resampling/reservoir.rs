use rand::Rng;

use crate::error::{Error, Result};

/// Single-sample weighted reservoir.
///
/// `m` is the confidence weight. It is a real so that temporal capping and
/// confidence bookkeeping during reuse do not need a separate type.
#[derive(Clone, Debug, PartialEq)]
pub struct Reservoir<S> {
    pub sample: Option<S>,
    pub w_sum: f64,
    pub m: f64,
    /// Unbiased contribution weight of `sample` (reciprocal-PDF units).
    pub w: f64,
}

impl<S> Default for Reservoir<S> {
    fn default() -> Self {
        Reservoir {
            sample: None,
            w_sum: 0.0,
            m: 0.0,
            w: 0.0,
        }
    }
}

impl<S> Reservoir<S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.sample.is_none()
    }

    /// Streams one weighted candidate through the reservoir.
    ///
    /// Always consumes exactly one uniform variate. Returns whether the
    /// candidate replaced the current sample.
    pub fn update<R: Rng + ?Sized>(&mut self, candidate: S, weight: f64, rng: &mut R) -> Result<bool> {
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::InvalidWeight(weight));
        }
        let u: f64 = rng.random();
        self.w_sum += weight;
        self.m += 1.0;
        let replace = weight > 0.0 && u * self.w_sum < weight;
        if replace {
            self.sample = Some(candidate);
        }
        Ok(replace)
    }

    /// Sets the contribution weight `W = w_sum / p_hat(sample)`.
    ///
    /// Zero target value or an empty reservoir yields `W = 0`.
    pub fn finalize(&mut self, p_hat_at_sample: f64) {
        self.w = if self.sample.is_some() && p_hat_at_sample > 0.0 {
            self.w_sum / p_hat_at_sample
        } else {
            0.0
        };
    }

    pub fn map_sample<T>(self, f: impl FnOnce(S) -> T) -> Reservoir<T> {
        Reservoir {
            sample: self.sample.map(f),
            w_sum: self.w_sum,
            m: self.m,
            w: self.w,
        }
    }
}
