//! Delimited-text ingestion of price or return series.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use clap::ValueEnum;
use serde_json::json;
use tailmc::Sample;

use crate::error::CliError;

/// Fewer observations than this after the transform are rejected.
pub const MIN_OBSERVATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// Price levels; converted to log returns.
    Prices,
    /// Returns, used as given.
    Returns,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub source: String,
    pub column: String,
    pub transform: &'static str,
    pub rows_read: usize,
    /// Rows skipped for missing, non-finite or (for prices) non-positive values.
    pub rows_dropped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsSeries {
    pub label: String,
    pub observations: Vec<f64>,
    pub provenance: Provenance,
}

impl ReturnsSeries {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn to_sample(&self) -> Result<Sample, CliError> {
        Ok(Sample::new(self.observations.clone())?)
    }

    pub fn provenance_json(&self) -> serde_json::Value {
        json!({
            "source": self.provenance.source,
            "column": self.provenance.column,
            "transform": self.provenance.transform,
            "rows_read": self.provenance.rows_read,
            "rows_dropped": self.provenance.rows_dropped,
        })
    }
}

/// `ln(P_t / P_{t-1})` over consecutive values.
pub fn log_returns(prices: &[f64]) -> Vec<f64> {
    prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect()
}

fn is_missing(field: &str) -> bool {
    matches!(
        field.to_ascii_lowercase().as_str(),
        "" | "na" | "n/a" | "nan" | "null" | "none" | "-"
    )
}

const PRICE_COLUMNS: [&str; 4] = ["adj close", "adj_close", "close", "price"];
const RETURN_COLUMNS: [&str; 4] = ["return", "returns", "log_return", "ret"];

fn pick_column(
    headers: &[String],
    wanted: Option<&str>,
    format: InputFormat,
) -> Result<usize, CliError> {
    if let Some(name) = wanted {
        return headers
            .iter()
            .position(|h| h == name)
            .or_else(|| headers.iter().position(|h| h.eq_ignore_ascii_case(name)))
            .ok_or_else(|| CliError::MissingColumn {
                column: name.to_string(),
                available: headers.join(", "),
            });
    }
    let preferred: &[&str] = match format {
        InputFormat::Prices => &PRICE_COLUMNS,
        InputFormat::Returns => &RETURN_COLUMNS,
    };
    for p in preferred {
        if let Some(i) = headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(p))
        {
            return Ok(i);
        }
    }
    headers
        .len()
        .checked_sub(1)
        .ok_or_else(|| CliError::MissingColumn {
            column: "<any>".into(),
            available: String::new(),
        })
}

fn sniff_delimiter(path: &Path) -> Result<u8, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut first = String::new();
    BufReader::new(file)
        .read_line(&mut first)
        .map_err(|e| CliError::io(path, e))?;
    Ok(if first.contains('\t') && !first.contains(',') {
        b'\t'
    } else {
        b','
    })
}

/// Read one value column of a comma- or tab-separated file with a header row.
pub fn ingest(
    path: &Path,
    format: InputFormat,
    column: Option<&str>,
) -> Result<ReturnsSeries, CliError> {
    let delimiter = sniff_delimiter(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::Csv(path.display().to_string(), e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Csv(path.display().to_string(), e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let index = pick_column(&headers, column, format)?;

    let mut values = Vec::new();
    let mut rows_read = 0;
    let mut rows_dropped = 0;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Csv(path.display().to_string(), e))?;
        let line = record.position().map_or(0, |p| p.line());
        rows_read += 1;
        let field = record.get(index).unwrap_or("").trim();
        if is_missing(field) {
            rows_dropped += 1;
            continue;
        }
        let value: f64 = field.parse().map_err(|_| CliError::UnparsableRow {
            line,
            value: field.to_string(),
        })?;
        let keep = match format {
            InputFormat::Prices => value.is_finite() && value > 0.0,
            InputFormat::Returns => value.is_finite(),
        };
        if keep {
            values.push(value);
        } else {
            rows_dropped += 1;
        }
    }

    let (observations, transform) = match format {
        InputFormat::Prices => (log_returns(&values), "log_return"),
        InputFormat::Returns => (values, "as_is"),
    };
    if observations.len() < MIN_OBSERVATIONS {
        return Err(CliError::TooShort {
            found: observations.len(),
            needed: MIN_OBSERVATIONS,
        });
    }
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(ReturnsSeries {
        label,
        observations,
        provenance: Provenance {
            source: path.display().to_string(),
            column: headers[index].clone(),
            transform,
            rows_read,
            rows_dropped,
        },
    })
}

/// Contiguous equal blocks in chronological order, labelled `<label>#<i>`.
pub fn split_periods(s: &ReturnsSeries, parts: usize) -> Result<Vec<ReturnsSeries>, CliError> {
    if parts == 0 {
        return Err(CliError::Usage("--split must be at least 1".into()));
    }
    let remainder = s.len() % parts;
    if remainder != 0 {
        return Err(CliError::NotDivisible {
            len: s.len(),
            parts,
            remainder,
        });
    }
    if parts == 1 {
        return Ok(vec![s.clone()]);
    }
    let size = s.len() / parts;
    Ok(s.observations
        .chunks(size)
        .enumerate()
        .map(|(i, chunk)| ReturnsSeries {
            label: format!("{}#{}", s.label, i + 1),
            observations: chunk.to_vec(),
            provenance: s.provenance.clone(),
        })
        .collect())
}
