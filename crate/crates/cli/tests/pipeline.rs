//! End-to-end exercises of the command-line surface: extraction contracts,
//! skip policy, fitting, evaluation, and exit codes.

mod util;

use util::*;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use rdepth_core::survival::{logrank, CoxModel, SurvivalRecord};
use rdepth_core::FeatureTable;

#[test]
fn three_phantoms_yield_a_3_by_321_csv() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("spec.json"), PHANTOM_SPEC);
    assert_ok(
        &rdepth(&["synth", "--spec", "spec.json", "--out-dir", "ph"], dir.path()),
        "synth",
    );
    assert_ok(
        &rdepth(
            &["extract", "--config", "ph/config.json", "--out", "features.csv"],
            dir.path(),
        ),
        "extract",
    );
    let text = read(&dir.path().join("features.csv"));
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with('#'));
    assert_eq!(lines.len(), 1 + 1 + 3, "comment + header + 3 subjects");
    for line in &lines[1..] {
        assert_eq!(line.split(',').count(), 321, "1 id + 320 features");
    }

    // re-running on identical inputs is byte-identical
    assert_ok(
        &rdepth(
            &["extract", "--config", "ph/config.json", "--out", "again.csv"],
            dir.path(),
        ),
        "extract again",
    );
    assert_eq!(text, read(&dir.path().join("again.csv")));
}

#[test]
fn missing_field_skips_the_subject_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("spec.json"), PHANTOM_SPEC);
    assert_ok(
        &rdepth(&["synth", "--spec", "spec.json", "--out-dir", "ph"], dir.path()),
        "synth",
    );
    std::fs::remove_file(dir.path().join("ph/s0001/field.volhdr")).unwrap();

    let out = rdepth(
        &["extract", "--config", "ph/config.json", "--out", "features.csv"],
        dir.path(),
    );
    assert_eq!(exit_code(&out), 0);
    assert!(stderr(&out).contains("skipping subject \"s0001\""));
    let table = FeatureTable::read_csv(dir.path().join("features.csv")).unwrap();
    assert_eq!(table.subjects(), ["s0000", "s0002"]);
}

#[test]
fn json_log_stream_is_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("spec.json"), PHANTOM_SPEC);
    assert_ok(
        &rdepth(&["synth", "--spec", "spec.json", "--out-dir", "ph"], dir.path()),
        "synth",
    );
    std::fs::remove_file(dir.path().join("ph/s0002/field.volraw")).unwrap();
    let out = rdepth(
        &[
            "extract",
            "--log-json",
            "--config",
            "ph/config.json",
            "--out",
            "features.csv",
        ],
        dir.path(),
    );
    assert_eq!(exit_code(&out), 0);
    for line in stderr(&out).lines() {
        let v: serde_json::Value = serde_json::from_str(line).expect("each log line is JSON");
        assert!(v.get("level").is_some() && v.get("msg").is_some());
    }
}

#[test]
fn config_errors_exit_1_and_data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("bad.json"), "{ not json");
    let out = rdepth(
        &["extract", "--config", "bad.json", "--out", "f.csv"],
        dir.path(),
    );
    assert_eq!(exit_code(&out), 1, "malformed config is a usage error");

    // a present but corrupt volume is a data error
    write(&dir.path().join("spec.json"), PHANTOM_SPEC);
    assert_ok(
        &rdepth(&["synth", "--spec", "spec.json", "--out-dir", "ph"], dir.path()),
        "synth",
    );
    let raw = dir.path().join("ph/s0000/tumor.volraw");
    let bytes = std::fs::read(&raw).unwrap();
    std::fs::write(&raw, &bytes[..bytes.len() / 2]).unwrap();
    let out = rdepth(
        &["extract", "--config", "ph/config.json", "--out", "f.csv"],
        dir.path(),
    );
    assert_eq!(exit_code(&out), 2, "truncated payload is a data error");
}

#[test]
fn fit_on_a_planted_cohort_separates_risk_groups() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("spec.json"), COHORT_SPEC);
    assert_ok(
        &rdepth(&["synth", "--spec", "spec.json", "--out-dir", "cohort"], dir.path()),
        "synth",
    );
    assert_ok(
        &rdepth(
            &[
                "fit",
                "--features",
                "cohort/features.csv",
                "--survival",
                "cohort/survival.csv",
                "--out-dir",
                "fit",
                "--seed",
                "3",
            ],
            dir.path(),
        ),
        "fit",
    );
    let report = read(&dir.path().join("fit/report.txt"));
    assert!(report_value(&report, "log-rank p") < 0.01);
    assert!(report_value(&report, "c-index") > 0.6);
    let model = CoxModel::load(dir.path().join("fit/model.json")).unwrap();
    for name in ["f004", "f011", "f017"] {
        assert!(
            model.features.iter().any(|f| f.name == name),
            "planted feature {name} not selected"
        );
    }

    // same seed, same bytes
    assert_ok(
        &rdepth(
            &[
                "fit",
                "--features",
                "cohort/features.csv",
                "--survival",
                "cohort/survival.csv",
                "--out-dir",
                "fit2",
                "--seed",
                "3",
            ],
            dir.path(),
        ),
        "refit",
    );
    assert_eq!(
        std::fs::read(dir.path().join("fit/model.json")).unwrap(),
        std::fs::read(dir.path().join("fit2/model.json")).unwrap()
    );
}

#[test]
fn forcing_infinite_lambda_gives_an_empty_model_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("spec.json"), COHORT_SPEC);
    assert_ok(
        &rdepth(&["synth", "--spec", "spec.json", "--out-dir", "cohort"], dir.path()),
        "synth",
    );
    let out = rdepth(
        &[
            "fit",
            "--features",
            "cohort/features.csv",
            "--survival",
            "cohort/survival.csv",
            "--out-dir",
            "fit",
            "--lambdas",
            "inf",
        ],
        dir.path(),
    );
    assert_eq!(exit_code(&out), 0);
    assert!(stderr(&out).contains("removed every feature"));
    let model = CoxModel::load(dir.path().join("fit/model.json")).unwrap();
    assert!(model.features.is_empty());
    assert_eq!(model.threshold, 0.0);
}

#[test]
fn evaluating_the_training_set_reproduces_the_fit_statistics() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("spec.json"), COHORT_SPEC);
    assert_ok(
        &rdepth(&["synth", "--spec", "spec.json", "--out-dir", "cohort"], dir.path()),
        "synth",
    );
    assert_ok(
        &rdepth(
            &[
                "fit",
                "--features",
                "cohort/features.csv",
                "--survival",
                "cohort/survival.csv",
                "--out-dir",
                "fit",
            ],
            dir.path(),
        ),
        "fit",
    );
    assert_ok(
        &rdepth(
            &[
                "evaluate",
                "--model",
                "fit/model.json",
                "--features",
                "cohort/features.csv",
                "--survival",
                "cohort/survival.csv",
                "--out-dir",
                "eval",
            ],
            dir.path(),
        ),
        "evaluate",
    );
    let stats_of = |path: &str| {
        let text = read(&dir.path().join(path));
        let pos = text.find("== statistics ==").expect("statistics block");
        text[pos..].to_string()
    };
    assert_eq!(stats_of("fit/report.txt"), stats_of("eval/report.txt"));
    assert_eq!(
        read(&dir.path().join("fit/risks.csv")),
        read(&dir.path().join("eval/risks.csv"))
    );
    assert_eq!(
        read(&dir.path().join("fit/km.csv")),
        read(&dir.path().join("eval/km.csv"))
    );
}

/// Split a cohort CSV pair into train/test halves by subject rows.
fn split_cohort(dir: &std::path::Path) {
    for (file, has_comment) in [("features.csv", true), ("survival.csv", false)] {
        let text = read(&dir.join("cohort").join(file));
        let mut lines = text.lines();
        let mut head = String::new();
        if has_comment {
            head.push_str(lines.next().unwrap());
            head.push('\n');
        }
        head.push_str(lines.next().unwrap());
        head.push('\n');
        let rows: Vec<&str> = lines.collect();
        let mid = rows.len() / 2;
        write(
            &dir.join(format!("train_{file}")),
            &format!("{head}{}\n", rows[..mid].join("\n")),
        );
        write(
            &dir.join(format!("test_{file}")),
            &format!("{head}{}\n", rows[mid..].join("\n")),
        );
    }
}

#[test]
fn held_out_half_keeps_discrimination() {
    let dir = tempfile::tempdir().unwrap();
    let spec = COHORT_SPEC.replace("\"subjects\": 160", "\"subjects\": 300");
    write(&dir.path().join("spec.json"), &spec);
    assert_ok(
        &rdepth(&["synth", "--spec", "spec.json", "--out-dir", "cohort"], dir.path()),
        "synth",
    );
    split_cohort(dir.path());
    assert_ok(
        &rdepth(
            &[
                "fit",
                "--features",
                "train_features.csv",
                "--survival",
                "train_survival.csv",
                "--out-dir",
                "fit",
            ],
            dir.path(),
        ),
        "fit",
    );
    assert_ok(
        &rdepth(
            &[
                "evaluate",
                "--model",
                "fit/model.json",
                "--features",
                "test_features.csv",
                "--survival",
                "test_survival.csv",
                "--out-dir",
                "eval",
            ],
            dir.path(),
        ),
        "evaluate",
    );
    let report = read(&dir.path().join("eval/report.txt"));
    assert!(
        report_value(&report, "c-index") > 0.7,
        "held-out c-index too low:\n{report}"
    );
}

#[test]
fn shuffled_survival_labels_give_null_p_values() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("spec.json"), COHORT_SPEC);
    assert_ok(
        &rdepth(&["synth", "--spec", "spec.json", "--out-dir", "cohort"], dir.path()),
        "synth",
    );
    assert_ok(
        &rdepth(
            &[
                "fit",
                "--features",
                "cohort/features.csv",
                "--survival",
                "cohort/survival.csv",
                "--out-dir",
                "fit",
            ],
            dir.path(),
        ),
        "fit",
    );

    // frozen groups vs label-shuffled survival: p should look uniform
    let model = CoxModel::load(dir.path().join("fit/model.json")).unwrap();
    let table = FeatureTable::read_csv(dir.path().join("cohort/features.csv")).unwrap();
    let records =
        rdepth_core::survival::read_survival_csv(dir.path().join("cohort/survival.csv")).unwrap();
    let risks = model.risk_scores(&table).unwrap();
    let groups = model.risk_groups(&risks);

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut calm = 0;
    let trials = 50;
    for _ in 0..trials {
        let mut shuffled: Vec<(f64, bool)> =
            records.iter().map(|r| (r.time_days, r.event)).collect();
        shuffled.shuffle(&mut rng);
        let mk = |flag: bool| -> Vec<SurvivalRecord> {
            groups
                .iter()
                .zip(&shuffled)
                .filter(|(&g, _)| g == flag)
                .map(|(_, &(t, e))| SurvivalRecord::new("s", t, e).unwrap())
                .collect()
        };
        let (_, p) = logrank(&mk(true), &mk(false)).unwrap();
        if p > 0.05 {
            calm += 1;
        }
    }
    assert!(
        calm * 10 >= trials * 9,
        "only {calm}/{trials} shuffles were non-significant"
    );
}
