//! Grid cache file.
//!
//! ```text
//! # tailmc expected-hill grid
//! format_version=1
//! n=1000
//! ...key=value header lines...
//! [mean]
//! <one row per alpha0, comma separated, 17 significant digits>
//! [std_dev]
//! [min]
//! [max]
//! [excluded]
//! checksum=sha256:<hex digest of every byte before this line>
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use super::{GridSpec, GridSurface, Matrix};
use crate::error::{Error, Result};
use crate::hill::{KGrid, TailMode};

pub const FORMAT_VERSION: u32 = 1;

const MAGIC: &str = "# tailmc expected-hill grid";
const CHECKSUM_PREFIX: &str = "checksum=sha256:";
const SECTIONS: [&str; 5] = ["mean", "std_dev", "min", "max", "excluded"];

fn join<T>(values: &[T], fmt: impl Fn(&T) -> String) -> String {
    values.iter().map(fmt).collect::<Vec<_>>().join(",")
}

fn float17(v: &f64) -> String {
    format!("{v:.16e}")
}

/// Serialize a surface to the textual cache format.
pub fn write_grid(g: &GridSurface) -> String {
    let spec = &g.spec;
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "format_version={FORMAT_VERSION}");
    let _ = writeln!(out, "n={}", spec.n);
    let _ = writeln!(out, "replications={}", spec.replications);
    let _ = writeln!(out, "k_lo={}", spec.k_lo);
    let _ = writeln!(out, "k_hi={}", spec.k_hi);
    let _ = writeln!(out, "beta={}", spec.beta);
    let _ = writeln!(out, "gamma={}", spec.gamma);
    let _ = writeln!(out, "delta={}", spec.delta);
    let _ = writeln!(out, "tail_mode={}", spec.tail_mode);
    let _ = writeln!(out, "master_seed={}", spec.master_seed);
    let _ = writeln!(out, "alpha0_count={}", spec.alpha0_values.len());
    let _ = writeln!(out, "k_count={}", g.kgrid.len());
    let _ = writeln!(
        out,
        "alpha0={}",
        join(&spec.alpha0_values, |a| a.to_string())
    );
    let _ = writeln!(out, "k={}", join(g.kgrid.k_values(), |k| k.to_string()));
    for (name, matrix) in [
        ("mean", &g.mean_curve),
        ("std_dev", &g.std_dev),
        ("min", &g.min),
        ("max", &g.max),
    ] {
        let _ = writeln!(out, "[{name}]");
        for r in 0..matrix.rows {
            let _ = writeln!(out, "{}", join(matrix.row(r), float17));
        }
    }
    let _ = writeln!(out, "[excluded]");
    for r in 0..g.excluded.rows {
        let _ = writeln!(out, "{}", join(g.excluded.row(r), |v| v.to_string()));
    }
    let digest = hex(&Sha256::digest(out.as_bytes()));
    let _ = writeln!(out, "{CHECKSUM_PREFIX}{digest}");
    out
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn save_grid(g: &GridSurface, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_grid(g)).map_err(|e| Error::io(path, e))
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<GridSurface> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_grid(&text)
}

fn incompatible(msg: impl Into<String>) -> Error {
    Error::SpecIncompatible(msg.into())
}

fn check_version(text: &str) -> Result<()> {
    let line = text
        .lines()
        .take(4)
        .find_map(|l| l.strip_prefix("format_version="))
        .ok_or_else(|| incompatible("missing format_version header"))?;
    if line.trim() != FORMAT_VERSION.to_string() {
        return Err(Error::FormatVersionMismatch {
            found: line.trim().to_string(),
            expected: FORMAT_VERSION,
        });
    }
    Ok(())
}

fn check_checksum(text: &str) -> Result<&str> {
    let body_end = text
        .trim_end_matches('\n')
        .rfind('\n')
        .map(|i| i + 1)
        .ok_or(Error::ChecksumMismatch)?;
    let (body, trailer) = text.split_at(body_end);
    let stated = trailer
        .trim_end()
        .strip_prefix(CHECKSUM_PREFIX)
        .ok_or(Error::ChecksumMismatch)?;
    if hex(&Sha256::digest(body.as_bytes())) != stated {
        return Err(Error::ChecksumMismatch);
    }
    Ok(body)
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| incompatible(format!("cannot parse {key}={value}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|v| parse(key, v)).collect()
}

fn parse_matrix<T: FromStr + Copy>(
    name: &str,
    lines: &[&str],
    rows: usize,
    cols: usize,
) -> Result<Matrix<T>> {
    if lines.len() != rows {
        return Err(incompatible(format!(
            "section [{name}] has {} rows, header says {rows}",
            lines.len()
        )));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for line in lines {
        let row: Vec<T> = parse_list(name, line)?;
        if row.len() != cols {
            return Err(incompatible(format!(
                "section [{name}] row has {} values, header says {cols}",
                row.len()
            )));
        }
        data.extend(row);
    }
    Ok(Matrix::from_rows(rows, cols, data))
}

/// Parse the textual cache format. Checks run in order: format version,
/// checksum, then structural consistency.
pub fn read_grid(text: &str) -> Result<GridSurface> {
    if !text.starts_with(MAGIC) {
        return Err(incompatible("not a grid file (missing magic line)"));
    }
    check_version(text)?;
    let body = check_checksum(text)?;

    let mut header = HashMap::new();
    let mut sections: HashMap<&str, Vec<&str>> = HashMap::new();
    let mut current: Option<&str> = None;
    for line in body.lines().skip(1) {
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            if !SECTIONS.contains(&name) {
                return Err(incompatible(format!("unknown section [{name}]")));
            }
            current = Some(name);
            sections.insert(name, Vec::new());
        } else if let Some(name) = current {
            sections.get_mut(name).expect("section exists").push(line);
        } else if let Some((k, v)) = line.split_once('=') {
            header.insert(k, v);
        } else {
            return Err(incompatible(format!("malformed header line {line:?}")));
        }
    }
    let field = |key: &str| {
        header
            .get(key)
            .copied()
            .ok_or_else(|| incompatible(format!("missing header field {key}")))
    };

    let n: usize = parse("n", field("n")?)?;
    let tail_mode =
        TailMode::from_str(field("tail_mode")?).map_err(|_| incompatible("bad tail_mode"))?;
    let spec = GridSpec {
        n,
        alpha0_values: parse_list("alpha0", field("alpha0")?)?,
        replications: parse("replications", field("replications")?)?,
        k_lo: parse("k_lo", field("k_lo")?)?,
        k_hi: parse("k_hi", field("k_hi")?)?,
        beta: parse("beta", field("beta")?)?,
        gamma: parse("gamma", field("gamma")?)?,
        delta: parse("delta", field("delta")?)?,
        tail_mode,
        master_seed: parse("master_seed", field("master_seed")?)?,
    };
    let rows: usize = parse("alpha0_count", field("alpha0_count")?)?;
    let cols: usize = parse("k_count", field("k_count")?)?;
    let ks: Vec<usize> = parse_list("k", field("k")?)?;
    if spec.alpha0_values.len() != rows || ks.len() != cols {
        return Err(incompatible("alpha0/k lists disagree with their counts"));
    }
    let kgrid = KGrid::new(n, ks).map_err(|e| incompatible(e.to_string()))?;
    let expected = spec.validate().map_err(|e| incompatible(e.to_string()))?;
    if expected != kgrid {
        return Err(incompatible(
            "stored k-grid does not match the spec fractions",
        ));
    }

    let section = |name: &str| {
        sections
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| incompatible(format!("missing section [{name}]")))
    };
    Ok(GridSurface {
        mean_curve: parse_matrix("mean", section("mean")?, rows, cols)?,
        std_dev: parse_matrix("std_dev", section("std_dev")?, rows, cols)?,
        min: parse_matrix("min", section("min")?, rows, cols)?,
        max: parse_matrix("max", section("max")?, rows, cols)?,
        excluded: parse_matrix("excluded", section("excluded")?, rows, cols)?,
        spec,
        kgrid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcgrid::simulate_grid;

    fn tiny() -> GridSurface {
        let spec = GridSpec {
            alpha0_values: vec![1.3, 1.7],
            replications: 5,
            ..GridSpec::with_defaults(200, 77)
        };
        simulate_grid(&spec, None).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let g = tiny();
        let back = read_grid(&write_grid(&g)).unwrap();
        assert_eq!(back, g);
        for (a, b) in g.mean_curve.data.iter().zip(&back.mean_curve.data) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn save_and_load_file() {
        let g = tiny();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.txt");
        save_grid(&g, &path).unwrap();
        assert_eq!(load_grid(&path).unwrap(), g);
        assert!(matches!(
            load_grid(dir.path().join("missing.txt")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn edited_version_is_rejected() {
        let text = write_grid(&tiny()).replace("format_version=1", "format_version=2");
        assert!(matches!(
            read_grid(&text),
            Err(Error::FormatVersionMismatch { .. })
        ));
    }

    #[test]
    fn truncation_is_detected() {
        let text = write_grid(&tiny());
        for cut in [text.len() / 2, text.len() - 10, text.len() - 80] {
            assert!(matches!(
                read_grid(&text[..cut]),
                Err(Error::ChecksumMismatch)
            ));
        }
    }

    #[test]
    fn edited_value_is_detected() {
        let text = write_grid(&tiny());
        let idx = text.find("[mean]\n").unwrap() + 7;
        let mut bytes = text.into_bytes();
        bytes[idx] = if bytes[idx] == b'1' { b'2' } else { b'1' };
        let text = String::from_utf8(bytes).unwrap();
        assert!(matches!(read_grid(&text), Err(Error::ChecksumMismatch)));
    }

    #[test]
    fn inconsistent_body_with_valid_checksum() {
        let text = write_grid(&tiny());
        let body = text[..text.rfind(CHECKSUM_PREFIX).unwrap()]
            .replace("alpha0_count=2", "alpha0_count=3");
        let resealed = format!(
            "{body}{CHECKSUM_PREFIX}{}\n",
            hex(&Sha256::digest(body.as_bytes()))
        );
        assert!(matches!(
            read_grid(&resealed),
            Err(Error::SpecIncompatible(_))
        ));
    }

    #[test]
    fn not_a_grid() {
        assert!(matches!(
            read_grid("hello\n"),
            Err(Error::SpecIncompatible(_))
        ));
    }
}
