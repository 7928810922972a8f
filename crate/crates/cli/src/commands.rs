use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::json;
use tailmc::estimator::{estimate_with_ci, McEstimate};
use tailmc::experiments::{self, LONG_RUN_LENGTHS};
use tailmc::hill::tail_hill_curve;
use tailmc::mcgrid::{alpha_range, simulate_grid, GridProgress, GridSpec};
use tailmc::report::StudyReport;
use tailmc::rng::{RngStream, STUDY_CELL_BASE};
use tailmc::{load_grid, save_grid, stable, KGrid, StableParams};

use crate::error::CliError;
use crate::hist::standardized_histogram;
use crate::ingest::{ingest, split_periods};
use crate::{
    EstimateArgs, GridSimulateArgs, HillPlotArgs, HistArgs, StudyCommand, StudyOutput, SynthArgs,
};

/// Write via a sibling temp file and rename, so a failed run never leaves a
/// partial output behind.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.partial", ext.to_string_lossy()),
        None => "partial".into(),
    });
    fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

fn csv_string(header: &[String], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e| CliError::Csv("output".into(), e);
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Usage(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn grid_simulate(a: GridSimulateArgs) -> Result<(), CliError> {
    let spec = GridSpec {
        n: a.n,
        alpha0_values: alpha_range(a.alpha_min, a.alpha_max, a.alpha_step)?,
        replications: a.reps,
        k_lo: a.k_lo,
        k_hi: a.k_hi,
        tail_mode: a.tail_mode,
        ..GridSpec::with_defaults(a.n, a.seed)
    };
    let quiet = a.quiet;
    let report = move |p: GridProgress| {
        if !quiet {
            eprint!("\rsimulating alpha0 row {}/{}", p.rows_done, p.rows_total);
            if p.rows_done == p.rows_total {
                eprintln!();
            }
        }
    };
    let surface = simulate_grid(&spec, Some(&report))?;
    let tmp = a.out.with_extension("partial");
    save_grid(&surface, &tmp)?;
    fs::rename(&tmp, &a.out).map_err(|e| CliError::io(&a.out, e))?;
    let flagged = surface.flagged_cells();
    if !flagged.is_empty() {
        eprintln!(
            "warning: {} cells had more than 1% failed replications",
            flagged.len()
        );
    }
    println!(
        "wrote {} ({} alpha0 x {} k, n = {}, {} replications, seed {})",
        a.out.display(),
        surface.mean_curve.rows,
        surface.mean_curve.cols,
        spec.n,
        spec.replications,
        spec.master_seed
    );
    Ok(())
}

pub fn grid_info(path: &Path) -> Result<(), CliError> {
    let g = load_grid(path)?;
    let s = &g.spec;
    println!("n={}", s.n);
    println!("replications={}", s.replications);
    println!("master_seed={}", s.master_seed);
    println!("tail_mode={}", s.tail_mode);
    println!(
        "alpha0={}..={} ({} values)",
        s.alpha0_values[0],
        s.alpha0_values[s.alpha0_values.len() - 1],
        s.alpha0_values.len()
    );
    println!(
        "k={}..={} ({} values, fractions [{}, {}])",
        g.kgrid.k_values()[0],
        g.kgrid.max_k(),
        g.kgrid.len(),
        s.k_lo,
        s.k_hi
    );
    println!("flagged_cells={}", g.flagged_cells().len());
    Ok(())
}

fn level_name(level: f64) -> String {
    format!("q{}", level * 100.0)
}

struct EstimateRow {
    period: usize,
    label: String,
    n: usize,
    est: McEstimate,
}

fn estimate_columns(levels: &[f64]) -> Vec<String> {
    let mut cols: Vec<String> = vec![
        "period".into(),
        "label".into(),
        "n".into(),
        "dropped".into(),
    ];
    cols.extend(levels.iter().filter(|l| **l < 0.5).map(|l| level_name(*l)));
    cols.push("alpha_mc".into());
    cols.extend(levels.iter().filter(|l| **l >= 0.5).map(|l| level_name(*l)));
    cols.push("loss".into());
    cols.push("ci_failures".into());
    cols
}

fn estimate_fields(r: &EstimateRow, levels: &[f64], fmt: impl Fn(f64) -> String) -> Vec<String> {
    let q = |l: f64| r.est.quantile(l).map_or(String::new(), &fmt);
    let mut f = vec![
        r.period.to_string(),
        r.label.clone(),
        r.n.to_string(),
        r.est.dropped.to_string(),
    ];
    f.extend(levels.iter().filter(|l| **l < 0.5).map(|l| q(*l)));
    f.push(fmt(r.est.alpha_hat));
    f.extend(levels.iter().filter(|l| **l >= 0.5).map(|l| q(*l)));
    f.push(format!("{:.6}", r.est.loss));
    f.push(r.est.ci_failures.to_string());
    f
}

pub fn estimate(a: EstimateArgs) -> Result<(), CliError> {
    let grid = load_grid(&a.grid)?;
    let series = ingest(&a.data.data, a.data.format, a.data.column.as_deref())?;
    let periods = split_periods(&series, a.split)?;
    let mut levels = a.levels.clone();
    levels.sort_by(f64::total_cmp);
    levels.dedup();

    let mut rows = Vec::new();
    for (i, period) in periods.iter().enumerate() {
        if period.len() != grid.spec.n {
            return Err(tailmc::Error::LengthMismatch {
                sample: period.len(),
                grid: grid.spec.n,
            }
            .into());
        }
        let est = estimate_with_ci(&period.to_sample()?, &grid, &levels, a.ci_reps, a.ci_seed)?;
        rows.push(EstimateRow {
            period: i + 1,
            label: period.label.clone(),
            n: period.len(),
            est,
        });
    }

    let header = estimate_columns(&levels);
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| estimate_fields(r, &levels, |v| format!("{v:.2}")))
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            body.iter()
                .map(|r| r[c].len())
                .chain([header[c].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut table = String::new();
    for cells in std::iter::once(&header).chain(&body) {
        let line: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (v, w))| {
                if c == 1 {
                    format!("{v:<w$}")
                } else {
                    format!("{v:>w$}")
                }
            })
            .collect();
        let _ = writeln!(table, "{}", line.join("  "));
    }
    print!("{table}");
    println!(
        "# grid={} n={} grid_seed={} ci_reps={} ci_seed={} tail_mode={}",
        a.grid.display(),
        grid.spec.n,
        grid.spec.master_seed,
        a.ci_reps,
        a.ci_seed,
        grid.spec.tail_mode
    );

    if let Some(path) = &a.out_csv {
        let body: Vec<Vec<String>> = rows
            .iter()
            .map(|r| estimate_fields(r, &levels, |v| v.to_string()))
            .collect();
        write_atomic(path, csv_string(&header, &body)?.as_bytes())?;
    }
    if let Some(path) = &a.out_json {
        let doc = json!({
            "grid": {
                "path": a.grid.display().to_string(),
                "n": grid.spec.n,
                "replications": grid.spec.replications,
                "master_seed": grid.spec.master_seed,
                "tail_mode": grid.spec.tail_mode.as_str(),
            },
            "data": series.provenance_json(),
            "ci_replications": a.ci_reps,
            "ci_seed": a.ci_seed,
            "levels": levels,
            "periods": rows.iter().map(|r| json!({
                "period": r.period,
                "label": r.label,
                "n": r.n,
                "dropped": r.est.dropped,
                "alpha_mc": r.est.alpha_hat,
                "loss": r.est.loss,
                "quantiles": r.est.quantiles.iter().map(|(l, v)| json!({"level": l, "value": v})).collect::<Vec<_>>(),
                "ci_failures": r.est.ci_failures,
            })).collect::<Vec<_>>(),
        });
        let mut text = serde_json::to_string_pretty(&doc).map_err(tailmc::Error::from)?;
        text.push('\n');
        write_atomic(path, text.as_bytes())?;
    }
    Ok(())
}

pub fn hill_plot(a: HillPlotArgs) -> Result<(), CliError> {
    let series = ingest(&a.data.data, a.data.format, a.data.column.as_deref())?;
    let sample = series.to_sample()?;
    let grid = a.grid.as_deref().map(load_grid).transpose()?;
    let (kgrid, mode) = match &grid {
        Some(g) => {
            if sample.len() != g.spec.n {
                return Err(tailmc::Error::LengthMismatch {
                    sample: sample.len(),
                    grid: g.spec.n,
                }
                .into());
            }
            (g.kgrid.clone(), a.tail_mode.unwrap_or(g.spec.tail_mode))
        }
        None => (
            KGrid::from_fractions(sample.len(), a.k_lo, a.k_hi)?,
            a.tail_mode.unwrap_or_default(),
        ),
    };
    let curve = tail_hill_curve(&sample, mode, &kgrid, a.level)?;

    let mut overlay_rows = Vec::new();
    if let Some(g) = &grid {
        for &alpha in &a.overlay {
            let idx = g.spec.alpha_index(alpha).ok_or_else(|| {
                CliError::Usage(format!("alpha0 = {alpha} is not a row of the grid"))
            })?;
            overlay_rows.push((alpha, g.row(idx)));
        }
    }
    let mut header: Vec<String> = ["k", "k_fraction", "estimate", "ci_low", "ci_high"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(overlay_rows.iter().map(|(a, _)| format!("grid_{a}")));
    let rows: Vec<Vec<String>> = curve
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut r = vec![
                p.k.to_string(),
                p.k_fraction.to_string(),
                p.estimate.to_string(),
                p.ci_low.to_string(),
                p.ci_high.to_string(),
            ];
            r.extend(overlay_rows.iter().map(|(_, row)| row[i].to_string()));
            r
        })
        .collect();
    write_atomic(&a.out, csv_string(&header, &rows)?.as_bytes())?;
    println!(
        "wrote {} ({} points, tail_mode={mode})",
        a.out.display(),
        rows.len()
    );
    Ok(())
}

fn finish_study(mut report: StudyReport, out: &StudyOutput) -> Result<(), CliError> {
    if out.stamp {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        report.generated_at = Some(format!("unix:{secs}"));
    }
    report.write_to(&out.out)?;
    let summary = &report.tables[0];
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(summary.to_csv()?.as_bytes());
    let _ = writeln!(
        stdout,
        "# study={} seed={} out={}",
        report.study_id,
        report.seed,
        out.out.display()
    );
    Ok(())
}

pub fn study(cmd: StudyCommand) -> Result<(), CliError> {
    match cmd {
        StudyCommand::OptimalK {
            mut lengths,
            long_run,
            alphas,
            reps,
            tail_mode,
            output,
        } => {
            if long_run {
                lengths.extend(
                    LONG_RUN_LENGTHS
                        .iter()
                        .filter(|l| !lengths.contains(l))
                        .collect::<Vec<_>>(),
                );
            }
            let alphas = alphas.unwrap_or_else(experiments::tenth_alphas);
            let report =
                experiments::optimal_k_study(&lengths, &alphas, reps, output.seed, tail_mode)?;
            finish_study(report, &output)
        }
        StudyCommand::SmallK {
            length,
            long_run,
            alphas,
            reps,
            tail_mode,
            output,
        } => {
            let length = if long_run { 1_000_000 } else { length };
            let alphas = alphas.unwrap_or_else(experiments::tenth_alphas);
            let report = experiments::small_k_study(length, &alphas, reps, output.seed, tail_mode)?;
            finish_study(report, &output)
        }
        StudyCommand::Quantiles {
            grid,
            alphas,
            reps,
            output,
        } => {
            let grid = load_grid(&grid)?;
            let alphas = alphas.unwrap_or_else(experiments::tenth_alphas);
            let report = experiments::estimator_quantile_study(
                &alphas,
                grid.spec.n,
                reps,
                &grid,
                output.seed,
            )?;
            finish_study(report, &output)
        }
    }
}

pub fn hist(a: HistArgs) -> Result<(), CliError> {
    let series = ingest(&a.data.data, a.data.format, a.data.column.as_deref())?;
    let bins = standardized_histogram(&series.observations, a.bins).ok_or_else(|| {
        CliError::Usage("histogram needs a positive bin count and non-constant data".into())
    })?;
    let header: Vec<String> = [
        "bin_lo",
        "bin_hi",
        "center",
        "count",
        "density",
        "normal_density",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let rows: Vec<Vec<String>> = bins
        .iter()
        .map(|b| {
            vec![
                b.lo.to_string(),
                b.hi.to_string(),
                b.center().to_string(),
                b.count.to_string(),
                b.density.to_string(),
                b.normal_density.to_string(),
            ]
        })
        .collect();
    write_atomic(&a.out, csv_string(&header, &rows)?.as_bytes())?;
    println!("wrote {} ({} bins)", a.out.display(), rows.len());
    Ok(())
}

/// Stream used for synthetic price paths.
const SYNTH_CELL: u32 = STUDY_CELL_BASE - 1;

pub fn synth_prices(a: SynthArgs) -> Result<(), CliError> {
    if a.rows < 2 {
        return Err(CliError::Usage("--rows must be at least 2".into()));
    }
    if !(a.start > 0.0 && a.scale > 0.0) {
        return Err(CliError::Usage(
            "--start and --scale must be positive".into(),
        ));
    }
    let params = StableParams::symmetric_standard(a.alpha)?;
    let draws = stable::sample(&params, a.rows - 1, RngStream::new(a.seed, SYNTH_CELL, 0))?;
    let mut out = String::from("t,close\n");
    let mut log_price = a.start.ln();
    let _ = writeln!(out, "0,{}", a.start);
    for (t, x) in draws.values().iter().enumerate() {
        log_price += a.scale * x;
        let _ = writeln!(out, "{},{}", t + 1, log_price.exp());
    }
    write_atomic(&a.out, out.as_bytes())?;
    println!(
        "wrote {} ({} rows, S({}, 0, sqrt(2)/2, 0) returns x {}, seed {})",
        a.out.display(),
        a.rows,
        a.alpha,
        a.scale,
        a.seed
    );
    Ok(())
}
