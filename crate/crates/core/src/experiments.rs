//! Seeded finite-sample studies of the Hill estimator and of the Monte
//! Carlo estimator, emitted as [`StudyReport`]s.

use serde_json::{json, Map, Value as Json};

use crate::error::{Error, Result};
use crate::estimator::{confidence_quantiles, nearest_rank, DEFAULT_LEVELS};
use crate::hill::{normal_quantile, KGrid, TailMode};
use crate::mcgrid::{simulate_over, GridSpec, GridSurface};
use crate::report::{Cell, StudyReport, Table};
use crate::rng::derive_seed;
use crate::stable::UNIT_NORMAL_GAMMA;

/// Sample lengths run by default.
pub const DESK_LENGTHS: [usize; 2] = [1_000, 10_000];
/// Additional lengths behind the long-run switch.
pub const LONG_RUN_LENGTHS: [usize; 2] = [100_000, 1_000_000];
pub const DEFAULT_STUDY_REPLICATIONS: usize = 200;
/// Relative deviation tolerated by the small-k study.
pub const SMALL_K_TOLERANCE: f64 = 0.05;
/// At most this many points per curve go into plot-data tables.
const MAX_PLOT_POINTS: usize = 2_000;

/// `1.1, 1.2, ..., 2.0`.
pub fn tenth_alphas() -> Vec<f64> {
    (11..=20).map(|i| f64::from(i) / 10.0).collect()
}

fn sorted_alphas(alphas: &[f64]) -> Result<Vec<f64>> {
    let mut out = alphas.to_vec();
    out.sort_by(f64::total_cmp);
    out.dedup();
    if out.is_empty() {
        return Err(Error::InvalidParameter("no alpha values given".into()));
    }
    if let Some(a) = out.iter().find(|a| !(**a > 1.0 && **a <= 2.0)) {
        return Err(Error::InvalidParameter(format!(
            "alpha values must lie in (1, 2], got {a}"
        )));
    }
    Ok(out)
}

fn study_spec(
    n: usize,
    alphas: Vec<f64>,
    replications: usize,
    seed: u64,
    tail_mode: TailMode,
) -> GridSpec {
    GridSpec {
        n,
        alpha0_values: alphas,
        replications,
        k_lo: 0.01,
        k_hi: 0.20,
        beta: 0.0,
        gamma: UNIT_NORMAL_GAMMA,
        delta: 0.0,
        tail_mode,
        // one independent master seed per sample length
        master_seed: derive_seed(seed, n as u64),
    }
}

fn plot_stride(len: usize) -> usize {
    len.div_ceil(MAX_PLOT_POINTS).max(1)
}

fn push_curves(table: &mut Table, surface: &GridSurface, z: f64) {
    let ks = surface.kgrid.k_values();
    let stride = plot_stride(ks.len());
    for (row, &alpha) in surface.spec.alpha0_values.iter().enumerate() {
        for col in (0..ks.len()).step_by(stride) {
            let k = ks[col];
            let mean = surface.mean_curve.get(row, col);
            let half = z * mean / (k as f64).sqrt();
            table.push(vec![
                surface.spec.n.into(),
                alpha.into(),
                k.into(),
                surface.kgrid.fraction(k).into(),
                mean.into(),
                surface.std_dev.get(row, col).into(),
                (mean - half).into(),
                (mean + half).into(),
            ]);
        }
    }
}

const CURVE_COLUMNS: [&str; 8] = [
    "n",
    "alpha",
    "k",
    "k_fraction",
    "mean_estimate",
    "std_dev",
    "ci_low",
    "ci_high",
];

fn base_parameters(alphas: &[f64], replications: usize, tail_mode: TailMode) -> Map<String, Json> {
    let mut p = Map::new();
    p.insert("alphas".into(), json!(alphas));
    p.insert("replications".into(), json!(replications));
    p.insert("beta".into(), json!(0.0));
    p.insert("gamma".into(), json!(UNIT_NORMAL_GAMMA));
    p.insert("delta".into(), json!(0.0));
    p.insert("tail_mode".into(), json!(tail_mode.as_str()));
    p
}

/// Index of the value closest to `target`, first on ties.
fn argmin_abs(values: &[f64], target: f64) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.iter().enumerate() {
        let d = (v - target).abs();
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// For each `(n, alpha)`, average Hill curves over `k` in `(1%, 20%]` of
/// `n` and report the `k` whose mean estimate is closest to `alpha`.
/// Optima on either end of the range are flagged.
pub fn optimal_k_study(
    lengths: &[usize],
    alphas: &[f64],
    replications: usize,
    seed: u64,
    tail_mode: TailMode,
) -> Result<StudyReport> {
    let alphas = sorted_alphas(alphas)?;
    if let Some(n) = lengths.iter().find(|n| **n < 100) {
        return Err(Error::InvalidParameter(format!(
            "sample lengths must be at least 100, got {n}"
        )));
    }
    let z = normal_quantile(0.95)?;
    let mut summary = Table::new(
        "optimal_k",
        &[
            "n",
            "alpha",
            "k_opt",
            "k_opt_pct",
            "mean_at_k_opt",
            "abs_error",
            "boundary",
        ],
    );
    let mut curves = Table::new("mean_curves", &CURVE_COLUMNS);
    for &n in lengths {
        let spec = study_spec(n, alphas.clone(), replications, seed, tail_mode);
        let kgrid = KGrid::from_fractions_open_lower(n, 0.01, 0.20)?;
        let surface = simulate_over(&spec, kgrid, None)?;
        let ks = surface.kgrid.k_values();
        for (row, &alpha) in alphas.iter().enumerate() {
            let mean = surface.row(row);
            let best = argmin_abs(mean, alpha);
            let k = ks[best];
            summary.push(vec![
                n.into(),
                alpha.into(),
                k.into(),
                (100.0 * k as f64 / n as f64).into(),
                mean[best].into(),
                (mean[best] - alpha).abs().into(),
                (best == 0 || best == ks.len() - 1).into(),
            ]);
        }
        push_curves(&mut curves, &surface, z);
    }
    let mut parameters = base_parameters(&alphas, replications, tail_mode);
    parameters.insert("lengths".into(), json!(lengths));
    parameters.insert("k_range".into(), json!("(0.01, 0.20]"));
    Ok(StudyReport {
        study_id: "optimal-k".into(),
        seed,
        parameters,
        tables: vec![summary, curves],
        generated_at: None,
    })
}

/// Longest contiguous run of indices where `|mean / alpha - 1| <= tol`;
/// the earliest run wins ties.
pub fn longest_within(mean: &[f64], alpha: f64, tol: f64) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for i in 0..=mean.len() {
        let inside = i < mean.len() && (mean[i] / alpha - 1.0).abs() <= tol;
        match (inside, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                let longer = best.is_none_or(|(a, b)| i - 1 - s > b - a);
                if longer {
                    best = Some((s, i - 1));
                }
                start = None;
            }
            _ => {}
        }
    }
    best
}

/// For each `alpha`, average Hill curves over `k = 1..=floor(0.01 n)` and
/// report the longest contiguous k-range whose mean stays within 5% of
/// `alpha`.
pub fn small_k_study(
    length: usize,
    alphas: &[f64],
    replications: usize,
    seed: u64,
    tail_mode: TailMode,
) -> Result<StudyReport> {
    let alphas = sorted_alphas(alphas)?;
    if length < 100 {
        return Err(Error::InvalidParameter(format!(
            "sample length must be at least 100, got {length}"
        )));
    }
    let z = normal_quantile(0.95)?;
    let mut spec = study_spec(length, alphas.clone(), replications, seed, tail_mode);
    spec.k_lo = 0.0;
    spec.k_hi = 0.01;
    let kgrid = spec.kgrid()?;
    let surface = simulate_over(&spec, kgrid, None)?;
    let ks = surface.kgrid.k_values();

    let mut ranges = Table::new(
        "optimal_range",
        &["n", "alpha", "found", "k_lo", "k_hi", "pct_lo", "pct_hi"],
    );
    for (row, &alpha) in alphas.iter().enumerate() {
        let pct = |k: usize| 100.0 * k as f64 / length as f64;
        match longest_within(surface.row(row), alpha, SMALL_K_TOLERANCE) {
            Some((a, b)) => ranges.push(vec![
                length.into(),
                alpha.into(),
                true.into(),
                ks[a].into(),
                ks[b].into(),
                pct(ks[a]).into(),
                pct(ks[b]).into(),
            ]),
            None => ranges.push(vec![
                length.into(),
                alpha.into(),
                false.into(),
                Cell::Missing,
                Cell::Missing,
                Cell::Missing,
                Cell::Missing,
            ]),
        }
    }
    let mut curves = Table::new("mean_curves", &CURVE_COLUMNS);
    push_curves(&mut curves, &surface, z);

    let mut parameters = base_parameters(&alphas, replications, tail_mode);
    parameters.insert("length".into(), json!(length));
    parameters.insert("k_range".into(), json!("[1, floor(0.01 n)]"));
    parameters.insert("tolerance".into(), json!(SMALL_K_TOLERANCE));
    Ok(StudyReport {
        study_id: "small-k".into(),
        seed,
        parameters,
        tables: vec![ranges, curves],
        generated_at: None,
    })
}

fn level_column(level: f64) -> String {
    format!("q{}", level * 100.0)
}

/// Simulated quantiles of the Monte Carlo estimator at each `alpha`, laid
/// out as `alpha, q0.5, q2.5, q5, alpha_mc, q95, q97.5, q99.5, failures`,
/// where `alpha_mc` is the median estimate.
pub fn estimator_quantile_study(
    alphas: &[f64],
    n: usize,
    replications: usize,
    grid: &GridSurface,
    seed: u64,
) -> Result<StudyReport> {
    let alphas = sorted_alphas(alphas)?;
    if grid.spec.n != n {
        return Err(Error::LengthMismatch {
            sample: n,
            grid: grid.spec.n,
        });
    }
    let lower: Vec<f64> = DEFAULT_LEVELS
        .iter()
        .copied()
        .filter(|l| *l < 0.5)
        .collect();
    let upper: Vec<f64> = DEFAULT_LEVELS
        .iter()
        .copied()
        .filter(|l| *l > 0.5)
        .collect();
    let mut columns: Vec<String> = vec!["alpha".into()];
    columns.extend(lower.iter().map(|l| level_column(*l)));
    columns.push("alpha_mc".into());
    columns.extend(upper.iter().map(|l| level_column(*l)));
    columns.push("failures".into());
    let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut table = Table::new("quantiles", &column_refs);
    let mut estimates = Table::new("estimates", &["alpha", "replication_rank", "alpha_mc"]);

    for (i, &alpha) in alphas.iter().enumerate() {
        let sim = confidence_quantiles(
            alpha,
            grid,
            &DEFAULT_LEVELS,
            replications,
            derive_seed(seed, i as u64),
        )?;
        let mut row: Vec<Cell> = vec![alpha.into()];
        let value = |l: f64| sim.quantiles.iter().find(|(q, _)| *q == l).map(|(_, v)| *v);
        row.extend(lower.iter().map(|l| Cell::from(value(*l))));
        row.push(nearest_rank(&sim.estimates, 0.5).into());
        row.extend(upper.iter().map(|l| Cell::from(value(*l))));
        row.push(sim.failures.into());
        table.push(row);
        for (rank, e) in sim.estimates.iter().enumerate() {
            estimates.push(vec![alpha.into(), (rank + 1).into(), (*e).into()]);
        }
    }

    let mut parameters = Map::new();
    parameters.insert("alphas".into(), json!(alphas));
    parameters.insert("n".into(), json!(n));
    parameters.insert("replications".into(), json!(replications));
    parameters.insert("levels".into(), json!(DEFAULT_LEVELS));
    parameters.insert("grid_seed".into(), json!(grid.spec.master_seed));
    parameters.insert("grid_replications".into(), json!(grid.spec.replications));
    parameters.insert("tail_mode".into(), json!(grid.spec.tail_mode.as_str()));
    Ok(StudyReport {
        study_id: "quantiles".into(),
        seed,
        parameters,
        tables: vec![table, estimates],
        generated_at: None,
    })
}
