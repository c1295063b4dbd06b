//! Named, ordered feature values per subject, and the CSV table format
//! consumed by the survival tooling.
//!
//! Missing values (small bands, degenerate texture windows) are first-class:
//! they serialize as empty CSV cells and are imputed with training medians
//! at model-fitting time.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Version tag written as a comment line above the CSV header so saved
/// models remain tied to a known column ordering.
pub const TABLE_VERSION: &str = "feature-columns-v1";

/// One subject's named feature values, in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    names: Vec<String>,
    values: Vec<Option<f64>>,
}

impl FeatureVector {
    pub fn new() -> Self {
        FeatureVector {
            names: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, value: Option<f64>) {
        self.names.push(name.into());
        self.values.push(value);
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<Option<f64>> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }

    /// Append another vector's entries, prefixing each name.
    pub fn extend_prefixed(&mut self, prefix: &str, other: &FeatureVector) {
        for (name, &value) in other.names.iter().zip(&other.values) {
            self.push(format!("{prefix}{name}"), value);
        }
    }

    pub fn extend(&mut self, other: &FeatureVector) {
        self.extend_prefixed("", other);
    }
}

impl Default for FeatureVector {
    fn default() -> Self {
        Self::new()
    }
}

/// Subjects × features matrix with missing-value support.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    subjects: Vec<String>,
    names: Vec<String>,
    rows: Vec<Vec<Option<f64>>>,
}

impl FeatureTable {
    pub fn new(names: Vec<String>) -> Result<Self> {
        check_unique(&names)?;
        Ok(FeatureTable {
            subjects: Vec::new(),
            names,
            rows: Vec::new(),
        })
    }

    pub fn from_rows(
        subjects: Vec<String>,
        names: Vec<String>,
        rows: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        check_unique(&names)?;
        if subjects.len() != rows.len() {
            return Err(Error::InvalidInput(format!(
                "{} subjects but {} rows",
                subjects.len(),
                rows.len()
            )));
        }
        for (s, row) in subjects.iter().zip(&rows) {
            if row.len() != names.len() {
                return Err(Error::InvalidInput(format!(
                    "row for {s} has {} values, expected {}",
                    row.len(),
                    names.len()
                )));
            }
        }
        Ok(FeatureTable {
            subjects,
            names,
            rows,
        })
    }

    pub fn push_row(&mut self, subject: impl Into<String>, features: &FeatureVector) -> Result<()> {
        if features.names() != self.names.as_slice() {
            return Err(Error::InvalidInput(
                "feature names do not match the table columns".into(),
            ));
        }
        self.subjects.push(subject.into());
        self.rows.push(features.values().to_vec());
        Ok(())
    }

    pub fn subjects(&self) -> &[String] {
        &self.subjects
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_subjects(&self) -> usize {
        self.subjects.len()
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, i: usize) -> &[Option<f64>] {
        &self.rows[i]
    }

    pub fn value(&self, i: usize, g: usize) -> Option<f64> {
        self.rows[i][g]
    }

    pub fn column(&self, g: usize) -> impl Iterator<Item = Option<f64>> + '_ {
        self.rows.iter().map(move |r| r[g])
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn subject_index(&self, subject: &str) -> Option<usize> {
        self.subjects.iter().position(|s| s == subject)
    }

    pub fn row_vector(&self, i: usize) -> FeatureVector {
        FeatureVector {
            names: self.names.clone(),
            values: self.rows[i].clone(),
        }
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
        writeln!(file, "# {TABLE_VERSION}").map_err(|e| Error::io(path, e))?;
        let mut wtr = csv::Writer::from_writer(file);
        let mut header = vec!["subject_id".to_string()];
        header.extend(self.names.iter().cloned());
        wtr.write_record(&header)
            .and_then(|_| {
                for (s, row) in self.subjects.iter().zip(&self.rows) {
                    let mut rec = vec![s.clone()];
                    rec.extend(row.iter().map(|v| match v {
                        Some(x) => format!("{x}"),
                        None => String::new(),
                    }));
                    wtr.write_record(&rec)?;
                }
                wtr.flush()?;
                Ok(())
            })
            .map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .has_headers(true)
            .from_reader(file);
        let headers = rdr
            .headers()
            .map_err(|e| Error::format(path, e.to_string()))?
            .clone();
        if headers.is_empty() || &headers[0] != "subject_id" {
            return Err(Error::format(
                path,
                "first column must be subject_id".to_string(),
            ));
        }
        let names: Vec<String> = headers.iter().skip(1).map(|s| s.to_string()).collect();
        let mut subjects = Vec::new();
        let mut rows = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::format(path, e.to_string()))?;
            if record.len() != names.len() + 1 {
                return Err(Error::format(
                    path,
                    format!(
                        "row {} has {} fields, expected {}",
                        line + 1,
                        record.len(),
                        names.len() + 1
                    ),
                ));
            }
            subjects.push(record[0].to_string());
            let mut row = Vec::with_capacity(names.len());
            for field in record.iter().skip(1) {
                if field.is_empty() {
                    row.push(None);
                } else {
                    let v: f64 = field.parse().map_err(|_| {
                        Error::format(path, format!("not a number: {field:?}"))
                    })?;
                    row.push(Some(v));
                }
            }
            rows.push(row);
        }
        FeatureTable::from_rows(subjects, names, rows)
    }
}

fn check_unique(names: &[String]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(Error::InvalidInput(format!("duplicate feature name {n:?}")));
        }
    }
    Ok(())
}
