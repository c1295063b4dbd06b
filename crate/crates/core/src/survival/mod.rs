//! Survival modeling: LASSO-penalized Cox regression over feature tables,
//! risk scoring, threshold-based stratification, and the standard evaluation
//! statistics (Kaplan-Meier, log-rank, concordance, hazard ratios).

mod cox;
mod lasso;
mod metrics;

pub use cox::cox_objective;
pub use lasso::{fit_lasso_cox, FitDiagnostics, LassoCoxOptions};
pub use metrics::{
    concordance_index, find_threshold, hazard_ratio, kaplan_meier, logrank, HazardRatio,
    ThresholdSearch,
};

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureTable, FeatureVector};

/// One subject's follow-up: time in days and whether the event was observed
/// (false = censored).
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalRecord {
    pub subject: String,
    pub time_days: f64,
    pub event: bool,
}

impl SurvivalRecord {
    pub fn new(subject: impl Into<String>, time_days: f64, event: bool) -> Result<Self> {
        if !(time_days.is_finite() && time_days > 0.0) {
            return Err(Error::InvalidInput(format!(
                "survival time must be finite and positive, got {time_days}"
            )));
        }
        Ok(SurvivalRecord {
            subject: subject.into(),
            time_days,
            event,
        })
    }
}

pub fn read_survival_csv(path: impl AsRef<Path>) -> Result<Vec<SurvivalRecord>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(file);
    let headers = rdr
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?;
    let expected = ["subject_id", "time_days", "event"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::format(
            path,
            format!("header must be {expected:?}, got {headers:?}"),
        ));
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::format(path, e.to_string()))?;
        let time: f64 = record[1]
            .parse()
            .map_err(|_| Error::format(path, format!("bad time {:?}", &record[1])))?;
        let event = match &record[2] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::format(
                    path,
                    format!("event must be 0/1, got {other:?}"),
                ))
            }
        };
        out.push(
            SurvivalRecord::new(record[0].to_string(), time, event)
                .map_err(|e| Error::format(path, e.to_string()))?,
        );
    }
    Ok(out)
}

pub fn write_survival_csv(path: impl AsRef<Path>, records: &[SurvivalRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut wtr =
        csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    wtr.write_record(["subject_id", "time_days", "event"])
        .and_then(|_| {
            for r in records {
                wtr.write_record([
                    r.subject.as_str(),
                    &format!("{}", r.time_days),
                    if r.event { "1" } else { "0" },
                ])?;
            }
            wtr.flush()?;
            Ok(())
        })
        .map_err(|e| Error::format(path, e.to_string()))
}

/// Intersect a feature table with survival records on subject id, keeping
/// table row order.
pub fn join_table(
    table: &FeatureTable,
    records: &[SurvivalRecord],
) -> Result<(FeatureTable, Vec<SurvivalRecord>)> {
    let mut by_subject = std::collections::HashMap::new();
    for r in records {
        if by_subject.insert(r.subject.as_str(), r).is_some() {
            return Err(Error::InvalidInput(format!(
                "duplicate survival record for subject {:?}",
                r.subject
            )));
        }
    }
    let mut subjects = Vec::new();
    let mut rows = Vec::new();
    let mut matched = Vec::new();
    for (i, s) in table.subjects().iter().enumerate() {
        if let Some(&r) = by_subject.get(s.as_str()) {
            subjects.push(s.clone());
            rows.push(table.row(i).to_vec());
            matched.push(r.clone());
        }
    }
    if matched.is_empty() {
        return Err(Error::Degenerate(
            "no subjects shared between the feature table and survival records".into(),
        ));
    }
    let joined = FeatureTable::from_rows(subjects, table.names().to_vec(), rows)?;
    Ok((joined, matched))
}

/// One selected feature of a fitted model. `coef` applies to the
/// standardized value (x − mean)/std; `median` is the training median used
/// to impute missing raw values before standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFeature {
    pub name: String,
    pub coef: f64,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub penalized: bool,
}

/// JSON cannot express non-finite numbers; an infinite penalty (a forced
/// all-zero model) round-trips as the string "inf".
mod lambda_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) => s.parse::<f64>().map_err(serde::de::Error::custom),
        }
    }
}

/// A fitted sparse Cox model: selected features with their standardization
/// record, the penalty that produced them, and the risk threshold separating
/// high- from low-risk subjects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxModel {
    pub features: Vec<ModelFeature>,
    #[serde(with = "lambda_serde")]
    pub lambda: f64,
    pub threshold: f64,
    pub seed: u64,
}

impl CoxModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("model serializes");
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    /// Continuous risk score: Σ coef · standardized feature value. A missing
    /// value falls back to the recorded training median; a missing feature
    /// name is an error.
    pub fn risk_score(&self, features: &FeatureVector) -> Result<f64> {
        let mut score = 0.0;
        for f in &self.features {
            let raw = match features.get(&f.name) {
                Some(Some(v)) => v,
                Some(None) => f.median,
                None => {
                    return Err(Error::InvalidInput(format!(
                        "feature {:?} required by the model is absent",
                        f.name
                    )))
                }
            };
            score += f.coef * (raw - f.mean) / f.std;
        }
        Ok(score)
    }

    /// Risk score per table row.
    pub fn risk_scores(&self, table: &FeatureTable) -> Result<Vec<f64>> {
        let cols: Vec<usize> = self
            .features
            .iter()
            .map(|f| {
                table.feature_index(&f.name).ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "feature {:?} required by the model is absent from the table",
                        f.name
                    ))
                })
            })
            .collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(table.n_subjects());
        for i in 0..table.n_subjects() {
            let mut score = 0.0;
            for (f, &g) in self.features.iter().zip(&cols) {
                let raw = table.value(i, g).unwrap_or(f.median);
                score += f.coef * (raw - f.mean) / f.std;
            }
            out.push(score);
        }
        Ok(out)
    }

    /// High-risk (true) / low-risk group labels by the stored threshold.
    pub fn risk_groups(&self, risks: &[f64]) -> Vec<bool> {
        risks.iter().map(|&r| r > self.threshold).collect()
    }
}
