use std::sync::OnceLock;

use crate::error::{Error, Result};

/// A non-empty series of finite observations. Order statistics are sorted
/// on first use and cached.
#[derive(Debug, Clone)]
pub struct Sample {
    values: Vec<f64>,
    descending: OnceLock<Vec<f64>>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self::from_finite_unchecked(values))
    }

    pub(crate) fn from_finite_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        Self {
            values,
            descending: OnceLock::new(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Order statistics, largest first.
    pub fn descending(&self) -> &[f64] {
        self.descending.get_or_init(|| {
            let mut sorted = self.values.clone();
            sorted.sort_unstable_by(|a, b| b.total_cmp(a));
            sorted
        })
    }

    /// Order statistics, smallest first.
    pub fn ascending(&self) -> Vec<f64> {
        self.descending().iter().rev().copied().collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Sample> {
        Sample::new(self.values.iter().map(|&v| f(v)).collect())
    }
}

impl PartialEq for Sample {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values
    }
}

impl TryFrom<Vec<f64>> for Sample {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Sample::new(values)
    }
}
