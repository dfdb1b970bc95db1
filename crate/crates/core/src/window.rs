use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Channel-by-feature matrix of one analysis window, with its time span and
/// ground-truth label (`0` non-seizure, `1` seizure).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureWindow {
    pub t_start: f64,
    pub t_end: f64,
    n_channels: usize,
    n_features: usize,
    values: Vec<f64>,
    pub label: u8,
}

impl FeatureWindow {
    /// `values` is row-major: all features of channel 0, then channel 1, ...
    pub fn new(
        t_start: f64,
        t_end: f64,
        n_channels: usize,
        n_features: usize,
        values: Vec<f64>,
        label: u8,
    ) -> Result<Self> {
        if values.len() != n_channels * n_features {
            return Err(Error::LengthMismatch {
                left: n_channels * n_features,
                right: values.len(),
            });
        }
        Ok(Self {
            t_start,
            t_end,
            n_channels,
            n_features,
            values,
            label,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, channel: usize, feature: usize) -> f64 {
        self.values[channel * self.n_features + feature]
    }

    pub fn channel(&self, channel: usize) -> &[f64] {
        &self.values[channel * self.n_features..(channel + 1) * self.n_features]
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.t_start + self.t_end)
    }
}
