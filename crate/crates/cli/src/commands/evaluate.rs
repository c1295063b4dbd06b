//! Apply a frozen model to a cohort: report.txt, km.csv, risks.csv.

use std::fmt::Write as _;
use std::path::Path;

use rdepth_core::survival::{join_table, read_survival_csv, CoxModel};
use rdepth_core::FeatureTable;

use crate::commands::report;
use crate::{CliError, CliResult, Logger};

pub fn run(
    model_path: &Path,
    features: &Path,
    survival: &Path,
    out_dir: &Path,
    log: Logger,
) -> CliResult<()> {
    let model = CoxModel::load(model_path)?;
    let table = FeatureTable::read_csv(features)?;
    let records = read_survival_csv(survival)?;
    let (table, records) = join_table(&table, &records)?;

    let applied = report::apply_model(&model, &table, &records)?;

    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", out_dir.display())))?;

    let mut model_block = String::new();
    writeln!(model_block, "== model ==").unwrap();
    writeln!(model_block, "lambda: {}", model.lambda).unwrap();
    writeln!(model_block, "seed: {}", model.seed).unwrap();
    writeln!(model_block, "selected features: {}", model.features.len()).unwrap();

    let mut strat_block = String::new();
    writeln!(strat_block, "== stratification ==").unwrap();
    writeln!(strat_block, "threshold: {}", model.threshold).unwrap();

    report::write_report(
        &out_dir.join("report.txt"),
        &[
            "rdepth evaluate report\n".to_string(),
            report::data_block(&table, &records),
            model_block,
            strat_block,
            applied.stats_block.clone(),
        ],
    )?;
    report::write_risks_csv(&out_dir.join("risks.csv"), &table, &applied)?;
    report::write_km_csv(&out_dir.join("km.csv"), &records, &applied)?;

    log.info(&format!(
        "evaluated {} subjects -> {}",
        table.n_subjects(),
        out_dir.display()
    ));
    Ok(())
}
