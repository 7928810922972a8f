//! Hill estimation of the tail exponent from upper order statistics.
//!
//! For the `k` largest values `x_(1) >= ... >= x_(k)` and threshold
//! `x_(k+1)`,
//!
//! ```text
//! alpha_H(k) = k / sum_{i=1..k} [ln x_(i) - ln x_(k+1)]
//! ```
//!
//! Logs are split into mantissa and binary exponent before accumulating, so
//! that the exponent part of every log-spacing is summed in exact integer
//! arithmetic. Rescaling a sample by a power of two therefore leaves every
//! estimate bit-for-bit unchanged.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::sample::Sample;

/// How a two-sided series is reduced to a positive tail before estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailMode {
    /// Absolute values of all observations.
    Abs,
    /// Positive observations only; `k` still counts against the full length.
    #[default]
    Upper,
}

impl TailMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TailMode::Abs => "abs",
            TailMode::Upper => "upper",
        }
    }
}

impl fmt::Display for TailMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TailMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abs" => Ok(TailMode::Abs),
            "upper" => Ok(TailMode::Upper),
            other => Err(Error::InvalidParameter(format!(
                "unknown tail mode {other:?} (expected abs or upper)"
            ))),
        }
    }
}

/// The positive tail of a sample together with the number of observations
/// that were dropped for being non-positive.
#[derive(Debug, Clone)]
pub struct TailSample {
    pub sample: Sample,
    pub dropped: usize,
    pub mode: TailMode,
}

/// Reduce `s` to strictly positive values according to `mode`. Zeros (and
/// with `Upper`, negatives) are dropped and counted.
pub fn tail_transform(s: &Sample, mode: TailMode) -> Result<TailSample> {
    let kept = transform_values(s.values(), mode);
    let dropped = s.len() - kept.len();
    if kept.is_empty() {
        return Err(Error::EmptyResult);
    }
    Ok(TailSample {
        sample: Sample::from_finite_unchecked(kept),
        dropped,
        mode,
    })
}

pub(crate) fn transform_values(values: &[f64], mode: TailMode) -> Vec<f64> {
    match mode {
        TailMode::Abs => values
            .iter()
            .map(|v| v.abs())
            .filter(|v| *v > 0.0)
            .collect(),
        TailMode::Upper => values.iter().copied().filter(|v| *v > 0.0).collect(),
    }
}

/// Truncation counts at which the Hill estimator is evaluated, for a
/// sample of length `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KGrid {
    n: usize,
    k_values: Vec<usize>,
}

const FRACTION_SLACK: f64 = 1e-9;

impl KGrid {
    pub fn new(n: usize, k_values: Vec<usize>) -> Result<Self> {
        if k_values.is_empty() {
            return Err(Error::InvalidParameter(format!("empty k-grid for n = {n}")));
        }
        if k_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "k-grid must be strictly increasing".into(),
            ));
        }
        if k_values[0] < 1 || *k_values.last().unwrap() >= n {
            return Err(Error::InvalidParameter(format!(
                "every k must satisfy 1 <= k < n = {n}"
            )));
        }
        Ok(Self { n, k_values })
    }

    /// Every integer `k` with `lo * n <= k <= hi * n`.
    pub fn from_fractions(n: usize, lo: f64, hi: f64) -> Result<Self> {
        check_fractions(lo, hi)?;
        let first = ((lo * n as f64) - FRACTION_SLACK).ceil().max(1.0) as usize;
        let last = ((hi * n as f64) + FRACTION_SLACK).floor() as usize;
        Self::span(n, first, last)
    }

    /// Every integer `k` with `lo * n < k <= hi * n`.
    pub fn from_fractions_open_lower(n: usize, lo: f64, hi: f64) -> Result<Self> {
        check_fractions(lo, hi)?;
        let first = ((lo * n as f64) + FRACTION_SLACK).floor() as usize + 1;
        let last = ((hi * n as f64) + FRACTION_SLACK).floor() as usize;
        Self::span(n, first, last)
    }

    fn span(n: usize, first: usize, last: usize) -> Result<Self> {
        let last = last.min(n.saturating_sub(1));
        if first > last {
            return Err(Error::InvalidParameter(format!(
                "no integer k in the requested fraction range for n = {n}"
            )));
        }
        Self::new(n, (first..=last).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_values(&self) -> &[usize] {
        &self.k_values
    }

    pub fn len(&self) -> usize {
        self.k_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_values.is_empty()
    }

    pub fn max_k(&self) -> usize {
        *self.k_values.last().expect("k-grid is never empty")
    }

    pub fn fraction(&self, k: usize) -> f64 {
        k as f64 / self.n as f64
    }
}

fn check_fractions(lo: f64, hi: f64) -> Result<()> {
    if !(lo >= 0.0 && lo < hi && hi < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "fraction interval must satisfy 0 <= lo < hi < 1, got [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// Split a positive finite value into `(ln mantissa, binary exponent)` with
/// the mantissa in `[1, 2)`.
fn split_log(x: f64) -> (f64, i64) {
    debug_assert!(x > 0.0 && x.is_finite());
    const MANTISSA_MASK: u64 = (1 << 52) - 1;
    let (x, bias) = if x < f64::MIN_POSITIVE {
        (x * 2f64.powi(64), 64)
    } else {
        (x, 0)
    };
    let bits = x.to_bits();
    let exponent = ((bits >> 52) & 0x7ff) as i64 - 1023 - bias;
    let mantissa = f64::from_bits((bits & MANTISSA_MASK) | (1023 << 52));
    (mantissa.ln(), exponent)
}

/// Hill estimates at each `k` of `ks` from positive order statistics sorted
/// largest first. `top` must hold at least `max(ks) + 1` values.
pub(crate) fn estimates_from_descending(top: &[f64], ks: &[usize]) -> Result<Vec<f64>> {
    let k_max = *ks.last().expect("non-empty k list");
    debug_assert!(top.len() > k_max);
    let mut out = Vec::with_capacity(ks.len());
    let mut mantissa_sum = 0.0;
    let mut exponent_sum: i64 = 0;
    let mut next = 0;
    for (i, &x) in top.iter().enumerate().take(k_max + 1) {
        let (log_m, e) = split_log(x);
        while next < ks.len() && ks[next] == i {
            let k = i;
            if top[0] == x {
                return Err(Error::AtK {
                    k,
                    source: Box::new(Error::DegenerateTail { count: k + 1 }),
                });
            }
            let kf = k as f64;
            let spacing = (mantissa_sum - kf * log_m) + LN_2 * (exponent_sum - k as i64 * e) as f64;
            if spacing <= 0.0 {
                return Err(Error::AtK {
                    k,
                    source: Box::new(Error::DegenerateTail { count: k + 1 }),
                });
            }
            out.push(kf / spacing);
            next += 1;
        }
        mantissa_sum += log_m;
        exponent_sum += e;
    }
    Ok(out)
}

fn positive_prefix(desc: &[f64]) -> usize {
    desc.partition_point(|v| *v > 0.0)
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "k must satisfy 1 <= k < n = {n}, got {k}"
        )));
    }
    Ok(())
}

/// Hill estimate using the `k` largest positive values of `s`.
pub fn hill_estimate(s: &Sample, k: usize) -> Result<f64> {
    check_k(s.len(), k)?;
    let desc = s.descending();
    let found = positive_prefix(desc);
    if found < k + 1 {
        return Err(Error::NotEnoughPositive {
            k,
            needed: k + 1,
            found,
        });
    }
    estimates_from_descending(desc, &[k])
        .map(|v| v[0])
        .map_err(|e| e.root_owned())
}

impl Error {
    fn root_owned(self) -> Error {
        match self {
            Error::AtK { source, .. } => source.root_owned(),
            other => other,
        }
    }
}

/// Hill estimates over every `k` of a grid, with no confidence bands.
pub fn hill_estimates(s: &Sample, g: &KGrid) -> Result<Vec<f64>> {
    for &k in g.k_values() {
        check_k(s.len(), k)?;
    }
    let desc = s.descending();
    let found = positive_prefix(desc);
    let k = g.max_k();
    if found < k + 1 {
        return Err(Error::AtK {
            k,
            source: Box::new(Error::NotEnoughPositive {
                k,
                needed: k + 1,
                found,
            }),
        });
    }
    estimates_from_descending(desc, g.k_values())
}

/// Hill estimates over `g` computed on the tail of `s` selected by `mode`.
/// `g` is interpreted against the full length of `s`; returns the estimates
/// and the number of observations the tail transform dropped.
pub fn tail_estimates(s: &Sample, mode: TailMode, g: &KGrid) -> Result<(Vec<f64>, usize)> {
    if s.len() != g.n() {
        return Err(Error::InvalidParameter(format!(
            "k-grid built for n = {} applied to a sample of length {}",
            g.n(),
            s.len()
        )));
    }
    let mut tail = transform_values(s.values(), mode);
    let dropped = s.len() - tail.len();
    let k = g.max_k();
    if tail.len() < k + 1 {
        return Err(Error::AtK {
            k,
            source: Box::new(Error::NotEnoughPositive {
                k,
                needed: k + 1,
                found: tail.len(),
            }),
        });
    }
    let top = crate::mcgrid::top_descending(&mut tail, k + 1);
    Ok((estimates_from_descending(top, g.k_values())?, dropped))
}

/// Two-sided standard normal quantile for a confidence level.
pub fn normal_quantile(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(0.5 + level / 2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillCurve {
    pub kgrid: KGrid,
    pub estimates: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub level: f64,
}

impl HillCurve {
    pub fn iter(&self) -> impl Iterator<Item = HillPoint> + '_ {
        self.kgrid
            .k_values()
            .iter()
            .enumerate()
            .map(move |(i, &k)| HillPoint {
                k,
                k_fraction: self.kgrid.fraction(k),
                estimate: self.estimates[i],
                ci_low: self.ci_low[i],
                ci_high: self.ci_high[i],
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HillPoint {
    pub k: usize,
    pub k_fraction: f64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Hill curve over `g` with asymptotic normal bands `estimate +- z * estimate / sqrt(k)`.
pub fn hill_curve(s: &Sample, g: &KGrid, level: f64) -> Result<HillCurve> {
    let z = normal_quantile(level)?;
    let estimates = hill_estimates(s, g)?;
    Ok(with_bands(g, estimates, z, level))
}

/// [`hill_curve`] on the tail of `s` selected by `mode`, with `g` built for
/// the full length of `s`.
pub fn tail_hill_curve(s: &Sample, mode: TailMode, g: &KGrid, level: f64) -> Result<HillCurve> {
    let z = normal_quantile(level)?;
    let (estimates, _) = tail_estimates(s, mode, g)?;
    Ok(with_bands(g, estimates, z, level))
}

fn with_bands(g: &KGrid, estimates: Vec<f64>, z: f64, level: f64) -> HillCurve {
    let (ci_low, ci_high) = g
        .k_values()
        .iter()
        .zip(&estimates)
        .map(|(&k, &a)| {
            let half = z * a / (k as f64).sqrt();
            (a - half, a + half)
        })
        .unzip();
    HillCurve {
        kgrid: g.clone(),
        estimates,
        ci_low,
        ci_high,
        level,
    }
}
