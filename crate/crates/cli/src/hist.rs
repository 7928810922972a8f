//! Histogram of standardized returns against the standard normal density.

use statrs::distribution::{Continuous, Normal};

#[derive(Debug, Clone, PartialEq)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Count divided by `total * width`, comparable with a density.
    pub density: f64,
    /// Standard normal density at the bin center.
    pub normal_density: f64,
}

impl Bin {
    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Standardize by sample mean and standard deviation, then bin over the
/// observed range with `bins` equal-width bins.
pub fn standardized_histogram(values: &[f64], bins: usize) -> Option<Vec<Bin>> {
    if bins == 0 || values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    if sd.is_nan() || sd <= 0.0 {
        return None;
    }
    let z: Vec<f64> = values.iter().map(|v| (v - mean) / sd).collect();
    let lo = z.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in &z {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let normal = Normal::standard();
    Some(
        counts
            .into_iter()
            .enumerate()
            .map(|(i, count)| {
                let b_lo = lo + i as f64 * width;
                let b_hi = if i + 1 == bins {
                    hi
                } else {
                    lo + (i + 1) as f64 * width
                };
                Bin {
                    lo: b_lo,
                    hi: b_hi,
                    count,
                    density: count as f64 / (n * width),
                    normal_density: normal.pdf(0.5 * (b_lo + b_hi)),
                }
            })
            .collect(),
    )
}
