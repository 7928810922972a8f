//! Study reports: named tables plus a JSON manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};

use crate::error::{Error, Result};

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    Missing,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(v) => Some(*v as f64),
            Cell::Float(v) => Some(*v),
            _ => None,
        }
    }

    fn to_field(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(v) => v.clone(),
            Cell::Missing => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Missing, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_field))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub study_id: String,
    pub seed: u64,
    pub parameters: Map<String, Json>,
    pub tables: Vec<Table>,
    /// Left empty by the library so that reruns are byte-identical; the
    /// command line front end fills it only on request.
    pub generated_at: Option<String>,
}

impl StudyReport {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn manifest(&self) -> Json {
        let mut m = Map::new();
        m.insert("format_version".into(), REPORT_FORMAT_VERSION.into());
        m.insert("study_id".into(), self.study_id.clone().into());
        m.insert("seed".into(), self.seed.into());
        m.insert("parameters".into(), Json::Object(self.parameters.clone()));
        m.insert(
            "tables".into(),
            self.tables
                .iter()
                .map(|t| {
                    serde_json::json!({
                        "name": t.name,
                        "file": format!("{}.csv", t.name),
                        "columns": t.columns,
                        "rows": t.rows.len(),
                    })
                })
                .collect(),
        );
        if let Some(ts) = &self.generated_at {
            m.insert("generated_at".into(), ts.clone().into());
        }
        Json::Object(m)
    }

    /// Write `<dir>/<table>.csv` for each table and `<dir>/manifest.json`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        for table in &self.tables {
            let path = dir.join(format!("{}.csv", table.name));
            fs::write(&path, table.to_csv()?).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        let path = dir.join("manifest.json");
        let mut json = serde_json::to_string_pretty(&self.manifest())?;
        json.push('\n');
        fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rendering() {
        let mut t = Table::new("demo", &["k", "value", "flag", "note"]);
        t.push(vec![10usize.into(), 0.5.into(), true.into(), Cell::Missing]);
        t.push(vec![
            11usize.into(),
            1.25.into(),
            false.into(),
            "a,b".into(),
        ]);
        assert_eq!(
            t.to_csv().unwrap(),
            "k,value,flag,note\n10,0.5,true,\n11,1.25,false,\"a,b\"\n"
        );
    }

    #[test]
    fn writes_tables_and_manifest() {
        let mut t = Table::new("t1", &["x"]);
        t.push(vec![1.5.into()]);
        let report = StudyReport {
            study_id: "demo".into(),
            seed: 3,
            parameters: Map::new(),
            tables: vec![t],
            generated_at: None,
        };
        let dir = tempfile::tempdir().unwrap();
        let files = report.write_to(dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        let manifest: Json =
            serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
                .unwrap();
        assert_eq!(manifest["study_id"], "demo");
        assert_eq!(manifest["tables"][0]["file"], "t1.csv");
        assert!(manifest.get("generated_at").is_none());
    }
}
