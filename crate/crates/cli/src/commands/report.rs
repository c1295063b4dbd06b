//! Shared report writer for `fit` and `evaluate`: risk scores, group
//! labels, KM curve points, and the statistics block. Both commands go
//! through the same code path so that evaluating a model on its own
//! training cohort reproduces the fit report's statistics exactly.

use std::fmt::Write as _;
use std::path::Path;

use rdepth_core::survival::{
    concordance_index, hazard_ratio, kaplan_meier, logrank, CoxModel, SurvivalRecord,
};
use rdepth_core::FeatureTable;

use crate::{CliError, CliResult};

pub struct Applied {
    pub risks: Vec<f64>,
    pub groups: Vec<bool>,
    pub stats_block: String,
}

/// Score the cohort with a frozen model and render the statistics block.
pub fn apply_model(
    model: &CoxModel,
    table: &FeatureTable,
    records: &[SurvivalRecord],
) -> CliResult<Applied> {
    let risks = model.risk_scores(table)?;
    let groups = model.risk_groups(&risks);

    let high: Vec<SurvivalRecord> = records
        .iter()
        .zip(&groups)
        .filter(|(_, &g)| g)
        .map(|(r, _)| r.clone())
        .collect();
    let low: Vec<SurvivalRecord> = records
        .iter()
        .zip(&groups)
        .filter(|(_, &g)| !g)
        .map(|(r, _)| r.clone())
        .collect();

    let mut block = String::new();
    writeln!(block, "== statistics ==").unwrap();
    writeln!(block, "high-risk subjects: {}", high.len()).unwrap();
    writeln!(block, "low-risk subjects: {}", low.len()).unwrap();

    match logrank(&high, &low) {
        Ok((chi2, p)) => {
            writeln!(block, "log-rank chi2: {chi2}").unwrap();
            writeln!(block, "log-rank p: {p}").unwrap();
        }
        Err(e) => writeln!(block, "log-rank: not available ({e})").unwrap(),
    }
    match concordance_index(&risks, records) {
        Ok(c) => writeln!(block, "c-index: {c}").unwrap(),
        Err(e) => writeln!(block, "c-index: not available ({e})").unwrap(),
    }
    match hazard_ratio(&groups, records) {
        Ok(hr) => {
            writeln!(block, "hazard ratio (high vs low): {}", hr.hr).unwrap();
            writeln!(block, "hazard ratio 95% ci: {} to {}", hr.ci_low, hr.ci_high).unwrap();
        }
        Err(e) => writeln!(block, "hazard ratio: not available ({e})").unwrap(),
    }

    Ok(Applied {
        risks,
        groups,
        stats_block: block,
    })
}

pub fn data_block(table: &FeatureTable, records: &[SurvivalRecord]) -> String {
    let events = records.iter().filter(|r| r.event).count();
    let mut block = String::new();
    writeln!(block, "== data ==").unwrap();
    writeln!(block, "subjects: {}", table.n_subjects()).unwrap();
    writeln!(block, "events: {events}").unwrap();
    writeln!(block, "censored: {}", records.len() - events).unwrap();
    writeln!(block, "feature columns: {}", table.n_features()).unwrap();
    block
}

/// `risks.csv`: per-subject score and risk-group label.
pub fn write_risks_csv(
    path: &Path,
    table: &FeatureTable,
    applied: &Applied,
) -> CliResult<()> {
    let mut text = String::from("subject_id,risk,group\n");
    for (i, s) in table.subjects().iter().enumerate() {
        let group = if applied.groups[i] { "high" } else { "low" };
        writeln!(text, "{s},{},{group}", applied.risks[i]).unwrap();
    }
    std::fs::write(path, text)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

/// `km.csv`: product-limit curve points per risk group.
pub fn write_km_csv(
    path: &Path,
    records: &[SurvivalRecord],
    applied: &Applied,
) -> CliResult<()> {
    let mut text = String::from("group,time_days,survival\n");
    for (label, flag) in [("high", true), ("low", false)] {
        let group: Vec<SurvivalRecord> = records
            .iter()
            .zip(&applied.groups)
            .filter(|(_, &g)| g == flag)
            .map(|(r, _)| r.clone())
            .collect();
        if group.is_empty() {
            continue;
        }
        for (t, s) in kaplan_meier(&group)? {
            writeln!(text, "{label},{t},{s}").unwrap();
        }
    }
    std::fs::write(path, text)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

pub fn write_report(path: &Path, sections: &[String]) -> CliResult<()> {
    let text = sections.join("\n");
    std::fs::write(path, text)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}
