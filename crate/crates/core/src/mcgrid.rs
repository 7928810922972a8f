//! Pre-simulated expected Hill curves over a grid of tail exponents.
//!
//! For every `alpha0` in the grid, `replications` independent series of
//! length `n` are drawn from `S(alpha0, beta, gamma, delta)`, each reduced
//! to its tail and turned into a Hill curve over the k-grid; the curves
//! are averaged per `(alpha0, k)` cell. Replication `r` of row `i` always
//! reads random stream `(master_seed, i, r)`, and the per-row reduction
//! runs in replication order, so the surface is identical for any thread
//! count.

mod io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hill::{transform_values, KGrid, TailMode};
use crate::rng::RngStream;
use crate::stable::{self, StableParams, UNIT_NORMAL_GAMMA};

pub use io::{load_grid, read_grid, save_grid, write_grid, FORMAT_VERSION};

/// Cells with more than this fraction of failed replications are flagged.
pub const EXCLUSION_FLAG_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub alpha0_values: Vec<f64>,
    pub replications: usize,
    pub k_lo: f64,
    pub k_hi: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub tail_mode: TailMode,
    pub master_seed: u64,
}

impl GridSpec {
    /// 100 exponents 1.01..=2.00, 1,000 replications, k in [1%, 20%] of n,
    /// symmetric law with `gamma = sqrt(2)/2`.
    pub fn with_defaults(n: usize, master_seed: u64) -> Self {
        Self {
            n,
            alpha0_values: alpha_range(1.01, 2.0, 0.01).expect("default range is valid"),
            replications: 1000,
            k_lo: 0.01,
            k_hi: 0.20,
            beta: 0.0,
            gamma: UNIT_NORMAL_GAMMA,
            delta: 0.0,
            tail_mode: TailMode::default(),
            master_seed,
        }
    }

    pub fn kgrid(&self) -> Result<KGrid> {
        KGrid::from_fractions(self.n, self.k_lo, self.k_hi)
    }

    pub fn params_for(&self, alpha0: f64) -> Result<StableParams> {
        StableParams::new(alpha0, self.beta, self.gamma, self.delta)
    }

    pub fn validate(&self) -> Result<KGrid> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid length n must be at least 2, got {}",
                self.n
            )));
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter(
                "replications must be positive".into(),
            ));
        }
        if self.replications > u32::MAX as usize || self.alpha0_values.len() >= u32::MAX as usize {
            return Err(Error::InvalidParameter("grid too large".into()));
        }
        if self.alpha0_values.is_empty() {
            return Err(Error::InvalidParameter("alpha0 grid is empty".into()));
        }
        if self.alpha0_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "alpha0 values must be strictly increasing".into(),
            ));
        }
        if let Some(a) = self
            .alpha0_values
            .iter()
            .find(|a| !(**a > 1.0 && **a <= 2.0))
        {
            return Err(Error::InvalidParameter(format!(
                "alpha0 values must lie in (1, 2], got {a}"
            )));
        }
        for &a in &self.alpha0_values {
            self.params_for(a)?;
        }
        self.kgrid()
    }

    /// Index of `alpha0` in the grid, compared exactly.
    pub fn alpha_index(&self, alpha0: f64) -> Option<usize> {
        self.alpha0_values.iter().position(|a| *a == alpha0)
    }
}

/// `min, min + step, ..., max`, each value snapped to nine decimals so
/// that e.g. `1.01 + 0.01 * 3` is the same double as the literal `1.04`.
pub fn alpha_range(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && min <= max && min.is_finite() && max.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "invalid alpha range {min}..={max} step {step}"
        )));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((min + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridProgress {
    pub rows_done: usize,
    pub rows_total: usize,
}

/// Row-major `alpha0 x k` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Copy> Matrix<T> {
    pub fn from_rows(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = T> + '_ {
        (0..self.rows).map(move |r| self.get(r, col))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSurface {
    pub spec: GridSpec,
    pub kgrid: KGrid,
    /// Mean Hill estimate over the successful replications of each cell.
    pub mean_curve: Matrix<f64>,
    /// Sample standard deviation across replications (0 with one success).
    pub std_dev: Matrix<f64>,
    pub min: Matrix<f64>,
    pub max: Matrix<f64>,
    /// Replications excluded from each cell because the estimate failed.
    pub excluded: Matrix<u32>,
}

impl GridSurface {
    pub fn row(&self, alpha_index: usize) -> &[f64] {
        self.mean_curve.row(alpha_index)
    }

    /// Standard error of a cell mean.
    pub fn standard_error(&self, row: usize, col: usize) -> f64 {
        let used = self.spec.replications as u32 - self.excluded.get(row, col);
        self.std_dev.get(row, col) / f64::from(used.max(1)).sqrt()
    }

    /// Cells where more than 1% of replications were excluded.
    pub fn flagged_cells(&self) -> Vec<(usize, usize)> {
        let limit = EXCLUSION_FLAG_FRACTION * self.spec.replications as f64;
        (0..self.excluded.rows)
            .flat_map(|r| (0..self.excluded.cols).map(move |c| (r, c)))
            .filter(|&(r, c)| f64::from(self.excluded.get(r, c)) > limit)
            .collect()
    }
}

/// Draw one series, reduce it to its tail, and return Hill estimates over
/// `ks` with `NaN` where the estimate is undefined.
pub(crate) fn replication_curve(
    params: &StableParams,
    n: usize,
    mode: TailMode,
    ks: &[usize],
    stream: RngStream,
) -> Vec<f64> {
    let raw = stable::sample_values(params, n, stream);
    tail_curve(&raw, mode, ks)
}

/// Hill estimates of the tail of `raw` at each `k`, `NaN` where undefined.
pub(crate) fn tail_curve(raw: &[f64], mode: TailMode, ks: &[usize]) -> Vec<f64> {
    let mut tail = transform_values(raw, mode);
    let k_max = *ks.last().expect("non-empty k list");
    let top = top_descending(&mut tail, k_max + 1);
    partial_estimates(top, ks)
}

/// The `m` largest values sorted largest first (or all of them if fewer).
pub(crate) fn top_descending(values: &mut [f64], m: usize) -> &[f64] {
    let m = m.min(values.len());
    if m == 0 {
        return &values[..0];
    }
    if m < values.len() {
        values.select_nth_unstable_by(m - 1, |a, b| b.total_cmp(a));
    }
    let top = &mut values[..m];
    top.sort_unstable_by(|a, b| b.total_cmp(a));
    top
}

/// Per-k estimates tolerant of failures: `NaN` where there are too few
/// positive values or the tail is degenerate.
pub(crate) fn partial_estimates(top: &[f64], ks: &[usize]) -> Vec<f64> {
    let usable = ks.partition_point(|&k| k < top.len());
    let mut out = vec![f64::NAN; ks.len()];
    let mut start = 0;
    while start < usable {
        match crate::hill::estimates_from_descending(top, &ks[start..usable]) {
            Ok(values) => {
                out[start..usable].copy_from_slice(&values);
                break;
            }
            Err(Error::AtK { k, .. }) => {
                let failed = start + ks[start..usable].iter().position(|&x| x == k).unwrap();
                // retry the remainder of the grid past the degenerate k
                let prefix = &ks[start..failed];
                if !prefix.is_empty() {
                    let values = crate::hill::estimates_from_descending(top, prefix)
                        .expect("prefix before the first failure succeeds");
                    out[start..failed].copy_from_slice(&values);
                }
                start = failed + 1;
            }
            Err(_) => break,
        }
    }
    out
}

struct CellStats {
    mean: f64,
    std_dev: f64,
    min: f64,
    max: f64,
    excluded: u32,
}

fn cell_stats(values: impl Iterator<Item = f64> + Clone) -> CellStats {
    let mut count = 0usize;
    let mut excluded = 0u32;
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in values.clone() {
        if v.is_finite() {
            count += 1;
            sum += v;
            min = min.min(v);
            max = max.max(v);
        } else {
            excluded += 1;
        }
    }
    if count == 0 {
        return CellStats {
            mean: f64::NAN,
            std_dev: f64::NAN,
            min: f64::NAN,
            max: f64::NAN,
            excluded,
        };
    }
    let mean = (sum / count as f64).clamp(min, max);
    let std_dev = if count > 1 {
        let ss: f64 = values
            .filter(|v| v.is_finite())
            .map(|v| (v - mean) * (v - mean))
            .sum();
        (ss / (count - 1) as f64).sqrt()
    } else {
        0.0
    };
    CellStats {
        mean,
        std_dev,
        min,
        max,
        excluded,
    }
}

/// Simulate the expected Hill surface for `spec`. Runs on the current rayon
/// pool; the result does not depend on its size.
pub fn simulate_grid(
    spec: &GridSpec,
    progress: Option<&(dyn Fn(GridProgress) + Sync)>,
) -> Result<GridSurface> {
    let kgrid = spec.validate()?;
    simulate_over(spec, kgrid, progress)
}

/// Like [`simulate_grid`] but over an explicit k-grid instead of the one
/// implied by the spec's fractions.
pub(crate) fn simulate_over(
    spec: &GridSpec,
    kgrid: KGrid,
    progress: Option<&(dyn Fn(GridProgress) + Sync)>,
) -> Result<GridSurface> {
    spec.validate()?;
    let ks = kgrid.k_values();
    let rows = spec.alpha0_values.len();
    let cols = ks.len();
    let mut mean = Vec::with_capacity(rows * cols);
    let mut std_dev = Vec::with_capacity(rows * cols);
    let mut min = Vec::with_capacity(rows * cols);
    let mut max = Vec::with_capacity(rows * cols);
    let mut excluded = Vec::with_capacity(rows * cols);

    for (row, &alpha0) in spec.alpha0_values.iter().enumerate() {
        let params = spec.params_for(alpha0)?;
        let curves: Vec<Vec<f64>> = (0..spec.replications)
            .into_par_iter()
            .map(|rep| {
                let stream = RngStream::new(spec.master_seed, row as u32, rep as u32);
                replication_curve(&params, spec.n, spec.tail_mode, ks, stream)
            })
            .collect();
        for col in 0..cols {
            let stats = cell_stats(curves.iter().map(|c| c[col]));
            if stats.mean.is_nan() {
                return Err(Error::GridDegenerate { alpha0 });
            }
            mean.push(stats.mean);
            std_dev.push(stats.std_dev);
            min.push(stats.min);
            max.push(stats.max);
            excluded.push(stats.excluded);
        }
        if let Some(sink) = progress {
            sink(GridProgress {
                rows_done: row + 1,
                rows_total: rows,
            });
        }
    }

    Ok(GridSurface {
        spec: spec.clone(),
        kgrid,
        mean_curve: Matrix::from_rows(rows, cols, mean),
        std_dev: Matrix::from_rows(rows, cols, std_dev),
        min: Matrix::from_rows(rows, cols, min),
        max: Matrix::from_rows(rows, cols, max),
        excluded: Matrix::from_rows(rows, cols, excluded),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(seed: u64) -> GridSpec {
        GridSpec {
            alpha0_values: vec![1.2, 1.5, 1.8, 2.0],
            replications: 40,
            ..GridSpec::with_defaults(500, seed)
        }
    }

    #[test]
    fn default_spec_shape() {
        let spec = GridSpec::with_defaults(1000, 1);
        assert_eq!(spec.alpha0_values.len(), 100);
        assert_eq!(spec.alpha0_values[0], 1.01);
        assert_eq!(spec.alpha0_values[19], 1.2);
        assert_eq!(spec.alpha0_values[99], 2.0);
        assert_eq!(spec.replications, 1000);
        assert_eq!(spec.kgrid().unwrap().len(), 191);
    }

    #[test]
    fn alpha_range_snaps_to_decimals() {
        let r = alpha_range(1.01, 2.0, 0.01).unwrap();
        assert_eq!(r.len(), 100);
        assert!(r.contains(&1.69));
        assert!(r.contains(&1.87));
        assert_eq!(alpha_range(1.5, 1.5, 0.1).unwrap(), vec![1.5]);
        assert!(alpha_range(2.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn validate_rejects_bad_specs() {
        let mut spec = small_spec(1);
        spec.alpha0_values = vec![1.5, 1.4];
        assert!(spec.validate().is_err());
        spec.alpha0_values = vec![1.0, 1.4];
        assert!(spec.validate().is_err());
        spec.alpha0_values = vec![1.4];
        spec.replications = 0;
        assert!(spec.validate().is_err());
        let mut spec = small_spec(1);
        spec.n = 4;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn surface_dimensions_and_bounds() {
        let surface = simulate_grid(&small_spec(3), None).unwrap();
        assert_eq!(surface.mean_curve.rows, 4);
        assert_eq!(surface.mean_curve.cols, surface.kgrid.len());
        for i in 0..surface.mean_curve.data.len() {
            let m = surface.mean_curve.data[i];
            assert!(m.is_finite() && m > 0.0);
            assert!(surface.min.data[i] <= m && m <= surface.max.data[i]);
        }
        assert!(surface.flagged_cells().is_empty());
    }

    #[test]
    fn progress_reports_each_row() {
        let seen = std::sync::Mutex::new(Vec::new());
        let sink = |p: GridProgress| seen.lock().unwrap().push(p.rows_done);
        simulate_grid(&small_spec(3), Some(&sink)).unwrap();
        assert_eq!(*seen.lock().unwrap(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn same_spec_same_surface() {
        let a = simulate_grid(&small_spec(9), None).unwrap();
        let b = simulate_grid(&small_spec(9), None).unwrap();
        assert_eq!(a, b);
        let c = simulate_grid(&small_spec(10), None).unwrap();
        assert_ne!(a.mean_curve, c.mean_curve);
    }

    #[test]
    fn partial_estimates_skip_degenerate_k() {
        let top = [4.0, 4.0, 4.0, 2.0, 1.0];
        let out = partial_estimates(&top, &[1, 2, 3, 4, 6]);
        assert!(out[0].is_nan());
        assert!(out[1].is_nan());
        assert!(out[2].is_finite());
        assert!(out[3].is_finite());
        assert!(out[4].is_nan());
    }

    #[test]
    fn top_descending_matches_full_sort() {
        let mut v: Vec<f64> = vec![0.3, 5.0, 1.2, 9.9, 4.4, 0.01, 7.7];
        let mut full = v.clone();
        full.sort_by(|a, b| b.total_cmp(a));
        assert_eq!(top_descending(&mut v, 3), &full[..3]);
    }

    #[test]
    fn cell_stats_excludes_nan() {
        let stats = cell_stats([1.0, f64::NAN, 3.0].into_iter());
        assert_eq!(stats.mean, 2.0);
        assert_eq!(stats.excluded, 1);
        assert_eq!(stats.min, 1.0);
        assert_eq!(stats.max, 3.0);
        assert!((stats.std_dev - 2f64.sqrt()).abs() < 1e-15);
    }
}
