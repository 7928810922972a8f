//! The Monte Carlo tail exponent estimator.
//!
//! The empirical Hill curve over the grid's k-values is compared with every
//! pre-simulated expected curve; the estimate is the grid exponent with the
//! smallest L1 distance,
//!
//! ```text
//! alpha_MC = argmin_{alpha0} sum_k | alpha_emp(k) - E[alpha_H(alpha0, k)] |
//! ```
//!
//! Finite-sample quantiles come from re-running the estimator on fresh
//! series simulated at the point estimate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hill::tail_estimates;
use crate::mcgrid::{GridSpec, GridSurface};
use crate::rng::{RngStream, CI_CELL};
use crate::sample::Sample;
use crate::stable;

/// Quantile levels reported by default: 0.5%, 2.5%, 5%, 95%, 97.5%, 99.5%.
pub const DEFAULT_LEVELS: [f64; 6] = [0.005, 0.025, 0.05, 0.95, 0.975, 0.995];

/// Default number of simulated series behind the quantiles.
pub const DEFAULT_CI_REPLICATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub alpha_hat: f64,
    pub loss: f64,
    /// `(level, value)` pairs, ascending in level.
    pub quantiles: Vec<(f64, f64)>,
    pub grid_spec: GridSpec,
    /// Observations removed by the tail transform.
    pub dropped: usize,
    pub ci_replications: usize,
    pub ci_failures: usize,
}

impl McEstimate {
    pub fn quantile(&self, level: f64) -> Option<f64> {
        self.quantiles
            .iter()
            .find(|(l, _)| *l == level)
            .map(|(_, v)| *v)
    }
}

/// Index of the best grid row and its loss, for an empirical curve over the
/// grid's k-values. Ties go to the smaller `alpha0`.
pub fn best_row(curve: &[f64], g: &GridSurface) -> Result<(usize, f64)> {
    if curve.len() != g.kgrid.len() {
        return Err(Error::InvalidParameter(format!(
            "curve has {} points, grid has {} k-values",
            curve.len(),
            g.kgrid.len()
        )));
    }
    let mut best = (0, f64::INFINITY);
    for row in 0..g.mean_curve.rows {
        let loss: f64 = curve
            .iter()
            .zip(g.row(row))
            .map(|(emp, expected)| (emp - expected).abs())
            .sum();
        if loss < best.1 {
            best = (row, loss);
        }
    }
    if !best.1.is_finite() {
        return Err(Error::InvalidParameter("loss is not finite".into()));
    }
    Ok(best)
}

/// Minimize the L1 loss for a precomputed empirical Hill curve.
pub fn estimate_from_curve(curve: &[f64], g: &GridSurface) -> Result<McEstimate> {
    let (row, loss) = best_row(curve, g)?;
    Ok(McEstimate {
        alpha_hat: g.spec.alpha0_values[row],
        loss,
        quantiles: Vec::new(),
        grid_spec: g.spec.clone(),
        dropped: 0,
        ci_replications: 0,
        ci_failures: 0,
    })
}

/// Point estimate for `s`, which must have exactly the grid's length.
pub fn estimate(s: &Sample, g: &GridSurface) -> Result<McEstimate> {
    if s.len() != g.spec.n {
        return Err(Error::LengthMismatch {
            sample: s.len(),
            grid: g.spec.n,
        });
    }
    let (curve, dropped) = tail_estimates(s, g.spec.tail_mode, &g.kgrid)?;
    let mut est = estimate_from_curve(&curve, g)?;
    est.dropped = dropped;
    Ok(est)
}

/// Nearest-rank empirical quantile of ascending `sorted` values: the
/// `ceil(p * N)`-th smallest.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let n = sorted.len();
    let rank = ((p * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    sorted[rank - 1]
}

fn check_levels(levels: &[f64]) -> Result<Vec<f64>> {
    if let Some(l) = levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(Error::InvalidParameter(format!(
            "quantile levels must lie in (0, 1), got {l}"
        )));
    }
    let mut sorted = levels.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    Ok(sorted)
}

/// Estimates from series simulated at a known exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedQuantiles {
    pub quantiles: Vec<(f64, f64)>,
    /// Successful estimates, ascending.
    pub estimates: Vec<f64>,
    pub failures: usize,
}

impl SimulatedQuantiles {
    pub fn median(&self) -> f64 {
        nearest_rank(&self.estimates, 0.5)
    }
}

/// Simulate `replications` series of the grid's length from
/// `S(alpha_point, beta, gamma, delta)`, estimate each against `g`, and
/// report nearest-rank quantiles of the estimates.
pub fn confidence_quantiles(
    alpha_point: f64,
    g: &GridSurface,
    levels: &[f64],
    replications: usize,
    seed: u64,
) -> Result<SimulatedQuantiles> {
    if !(alpha_point > 1.0 && alpha_point <= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (1, 2], got {alpha_point}"
        )));
    }
    if replications < 2 {
        return Err(Error::InvalidParameter(
            "at least two replications are needed for quantiles".into(),
        ));
    }
    if replications > u32::MAX as usize {
        return Err(Error::InvalidParameter("too many replications".into()));
    }
    let levels = check_levels(levels)?;
    let params = g.spec.params_for(alpha_point)?;
    let n = g.spec.n;

    let results: Vec<Option<f64>> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let stream = RngStream::new(seed, CI_CELL, rep as u32);
            let s = stable::sample(&params, n, stream).ok()?;
            estimate(&s, g).ok().map(|e| e.alpha_hat)
        })
        .collect();
    let mut estimates: Vec<f64> = results.iter().flatten().copied().collect();
    let failures = replications - estimates.len();
    if estimates.is_empty() {
        return Err(Error::AllReplicationsFailed(replications));
    }
    estimates.sort_by(f64::total_cmp);
    let quantiles = levels
        .iter()
        .map(|&l| (l, nearest_rank(&estimates, l)))
        .collect();
    Ok(SimulatedQuantiles {
        quantiles,
        estimates,
        failures,
    })
}

/// Point estimate with quantiles simulated at that estimate.
pub fn estimate_with_ci(
    s: &Sample,
    g: &GridSurface,
    levels: &[f64],
    replications: usize,
    seed: u64,
) -> Result<McEstimate> {
    let mut est = estimate(s, g)?;
    let sim = confidence_quantiles(est.alpha_hat, g, levels, replications, seed)?;
    est.quantiles = sim.quantiles;
    est.ci_replications = replications;
    est.ci_failures = sim.failures;
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcgrid::{simulate_grid, Matrix};
    use crate::StableParams;

    fn grid() -> GridSurface {
        let spec = GridSpec {
            alpha0_values: vec![1.2, 1.4, 1.6, 1.8, 2.0],
            replications: 60,
            ..GridSpec::with_defaults(400, 5)
        };
        simulate_grid(&spec, None).unwrap()
    }

    #[test]
    fn nearest_rank_rule() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(nearest_rank(&v, 0.005), 1.0);
        assert_eq!(nearest_rank(&v, 0.025), 3.0);
        assert_eq!(nearest_rank(&v, 0.05), 5.0);
        assert_eq!(nearest_rank(&v, 0.5), 50.0);
        assert_eq!(nearest_rank(&v, 0.95), 95.0);
        assert_eq!(nearest_rank(&v, 0.975), 98.0);
        assert_eq!(nearest_rank(&v, 0.995), 100.0);
        assert_eq!(nearest_rank(&[4.0], 0.3), 4.0);
    }

    #[test]
    fn injected_row_is_recovered_with_zero_loss() {
        let g = grid();
        let est = estimate_from_curve(g.row(1), &g).unwrap();
        assert_eq!(est.alpha_hat, 1.4);
        assert_eq!(est.loss, 0.0);
    }

    #[test]
    fn ties_go_to_smaller_alpha() {
        let mut g = grid();
        let cols = g.mean_curve.cols;
        let mut data = g.mean_curve.data.clone();
        let row3: Vec<f64> = g.row(3).to_vec();
        data[2 * cols..3 * cols].copy_from_slice(&row3);
        g.mean_curve = Matrix::from_rows(g.mean_curve.rows, cols, data);
        let est = estimate_from_curve(&row3, &g).unwrap();
        assert_eq!(est.alpha_hat, 1.6);
    }

    #[test]
    fn length_mismatch() {
        let g = grid();
        let s = Sample::new(vec![1.0; 399]).unwrap();
        assert!(matches!(
            estimate(&s, &g),
            Err(Error::LengthMismatch {
                sample: 399,
                grid: 400
            })
        ));
    }

    #[test]
    fn loss_positive_off_grid() {
        let g = grid();
        let s = stable::sample(
            &StableParams::symmetric_standard(1.5).unwrap(),
            400,
            RngStream::new(99, 0, 0),
        )
        .unwrap();
        let est = estimate(&s, &g).unwrap();
        assert!(est.loss > 0.0);
        assert!(g.spec.alpha0_values.contains(&est.alpha_hat));
    }

    #[test]
    fn quantile_arguments_checked() {
        let g = grid();
        assert!(confidence_quantiles(1.0, &g, &[0.5], 10, 1).is_err());
        assert!(confidence_quantiles(1.5, &g, &[0.5], 1, 1).is_err());
        assert!(confidence_quantiles(1.5, &g, &[1.0], 10, 1).is_err());
    }

    #[test]
    fn quantiles_are_monotone_and_bounded() {
        let g = grid();
        let sim = confidence_quantiles(2.0, &g, &DEFAULT_LEVELS, 20, 3).unwrap();
        assert_eq!(sim.quantiles.len(), 6);
        assert!(sim.quantiles.windows(2).all(|w| w[0].1 <= w[1].1));
        assert!(sim.quantiles.iter().all(|(_, v)| *v <= 2.0));
        assert_eq!(sim.median(), sim.estimates[9]);
    }

    #[test]
    fn composition_keeps_point_estimate() {
        let g = grid();
        let s = stable::sample(
            &StableParams::symmetric_standard(1.7).unwrap(),
            400,
            RngStream::new(4, 1, 2),
        )
        .unwrap();
        let point = estimate(&s, &g).unwrap();
        let full = estimate_with_ci(&s, &g, &DEFAULT_LEVELS, 10, 8).unwrap();
        assert_eq!(point.alpha_hat, full.alpha_hat);
        assert_eq!(point.loss, full.loss);
        assert_eq!(full.quantiles.len(), 6);
        assert_eq!(full.ci_replications, 10);
    }
}
