//! Fit a LASSO-Cox model on a training cohort: model.json, report.txt,
//! km.csv, risks.csv.

use std::fmt::Write as _;
use std::path::PathBuf;

use rdepth_core::survival::{fit_lasso_cox, join_table, read_survival_csv, LassoCoxOptions};
use rdepth_core::FeatureTable;

use crate::commands::report;
use crate::{CliError, CliResult, Logger};

pub struct FitArgs {
    pub features: PathBuf,
    pub survival: PathBuf,
    pub out_dir: PathBuf,
    pub folds: usize,
    pub seed: u64,
    pub lambdas: Option<String>,
    pub lambda_count: usize,
    pub lambda_min_ratio: f64,
    pub unpenalized: Option<String>,
    pub log: Logger,
}

fn parse_lambdas(spec: &str) -> CliResult<Vec<f64>> {
    spec.split(',')
        .map(|tok| {
            let tok = tok.trim();
            tok.parse::<f64>()
                .map_err(|_| CliError::usage(format!("bad lambda value {tok:?}")))
        })
        .collect()
}

pub fn run(args: FitArgs) -> CliResult<()> {
    let table = FeatureTable::read_csv(&args.features)?;
    let records = read_survival_csv(&args.survival)?;
    let (table, records) = join_table(&table, &records)?;

    if table.n_subjects() < 10 {
        return Err(CliError::data(format!(
            "join yields {} subjects; need at least 10 to fit",
            table.n_subjects()
        )));
    }
    let events = records.iter().filter(|r| r.event).count();
    if events < 2 {
        return Err(CliError::data(format!(
            "join yields {events} events; need at least 2 to fit"
        )));
    }

    if args.folds < 2 {
        return Err(CliError::usage(format!(
            "--folds must be at least 2, got {}",
            args.folds
        )));
    }
    let unpenalized: Vec<String> = args
        .unpenalized
        .as_deref()
        .map(|s| s.split(',').map(|t| t.trim().to_string()).collect())
        .unwrap_or_default();
    for name in &unpenalized {
        if table.feature_index(name).is_none() {
            return Err(CliError::usage(format!(
                "--unpenalized covariate {name:?} is not a feature column"
            )));
        }
    }

    let opts = LassoCoxOptions {
        lambda_grid: match &args.lambdas {
            Some(s) => Some(parse_lambdas(s)?),
            None => None,
        },
        lambda_count: args.lambda_count,
        lambda_min_ratio: args.lambda_min_ratio,
        folds: args.folds,
        seed: args.seed,
        unpenalized,
        ..Default::default()
    };

    let (model, diag) = fit_lasso_cox(&table, &records, &opts)?;
    for w in &diag.warnings {
        args.log.warn(w);
    }

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", args.out_dir.display())))?;
    model.save(args.out_dir.join("model.json"))?;

    let applied = report::apply_model(&model, &table, &records)?;

    let mut model_block = String::new();
    writeln!(model_block, "== model ==").unwrap();
    writeln!(model_block, "lambda: {}", model.lambda).unwrap();
    writeln!(model_block, "lambda grid: {} values", diag.lambda_grid.len()).unwrap();
    writeln!(model_block, "cv folds: {}", args.folds).unwrap();
    writeln!(model_block, "seed: {}", model.seed).unwrap();
    writeln!(model_block, "kkt max violation: {}", diag.kkt_max_violation).unwrap();
    if diag.dropped.is_empty() {
        writeln!(model_block, "dropped columns: none").unwrap();
    } else {
        writeln!(model_block, "dropped columns: {}", diag.dropped.join(", ")).unwrap();
    }
    writeln!(model_block, "selected features: {}", model.features.len()).unwrap();
    for f in &model.features {
        let tag = if f.penalized { "" } else { " (unpenalized)" };
        writeln!(model_block, "  {} {}{tag}", f.name, f.coef).unwrap();
    }

    let mut strat_block = String::new();
    writeln!(strat_block, "== stratification ==").unwrap();
    writeln!(strat_block, "threshold: {}", model.threshold).unwrap();
    match &diag.threshold {
        Some(t) => {
            writeln!(strat_block, "candidate cutoffs: {}", t.n_candidates).unwrap();
            writeln!(strat_block, "threshold search log-rank p: {}", t.p_value).unwrap();
        }
        None => {
            writeln!(strat_block, "candidate cutoffs: search failed, threshold defaults to 0").unwrap()
        }
    }

    report::write_report(
        &args.out_dir.join("report.txt"),
        &[
            "rdepth fit report\n".to_string(),
            report::data_block(&table, &records),
            model_block,
            strat_block,
            applied.stats_block.clone(),
        ],
    )?;
    report::write_risks_csv(&args.out_dir.join("risks.csv"), &table, &applied)?;
    report::write_km_csv(&args.out_dir.join("km.csv"), &records, &applied)?;

    args.log.info(&format!(
        "fitted model with {} features (lambda {}) -> {}",
        model.features.len(),
        model.lambda,
        args.out_dir.display()
    ));
    Ok(())
}
