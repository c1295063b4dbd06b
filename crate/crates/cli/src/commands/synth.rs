//! Phantom-cohort and tabular-cohort synthesis.

use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use rdepth_core::io::{write_field, write_mask, write_volume, Dtype};
use rdepth_core::synth::{
    synth_feature_table, synth_phantom, synth_survival, CohortSpec, PhantomSpec,
};
use rdepth_core::survival::write_survival_csv;

use crate::config::{Param, SynthSpecFile, TextureSection};
use crate::{CliError, CliResult, Logger};

pub fn run(spec_path: &Path, out_dir: &Path, log: Logger) -> CliResult<()> {
    let spec = SynthSpecFile::load(spec_path)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", out_dir.display())))?;
    match spec {
        SynthSpecFile::Phantoms {
            subjects,
            dims,
            spacing,
            tumor_radius_mm,
            amplitude_mm,
            decay_mm,
            texture,
            seed,
        } => phantoms(
            out_dir,
            subjects,
            dims,
            spacing,
            tumor_radius_mm,
            amplitude_mm,
            decay_mm,
            &texture,
            seed,
            log,
        ),
        SynthSpecFile::Cohort {
            subjects,
            features,
            informative,
            baseline_hazard,
            censoring_rate,
            seed,
        } => cohort(
            out_dir,
            subjects,
            features,
            &informative,
            baseline_hazard,
            censoring_rate,
            seed,
            log,
        ),
    }
}

#[allow(clippy::too_many_arguments)]
fn phantoms(
    out_dir: &Path,
    subjects: usize,
    dims: [usize; 3],
    spacing: [f64; 3],
    radius: Param,
    amplitude: Param,
    decay_mm: f64,
    texture: &TextureSection,
    seed: u64,
    log: Logger,
) -> CliResult<()> {
    if subjects == 0 {
        return Err(CliError::usage("phantom spec needs at least 1 subject"));
    }

    // per-subject parameters drawn sequentially so the cohort is identical
    // at any worker count
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs: Vec<(String, PhantomSpec)> = (0..subjects)
        .map(|i| {
            let r = radius.sample(&mut rng);
            let a = amplitude.sample(&mut rng);
            let subject_seed = seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(i as u64);
            let spec = PhantomSpec::centered(
                dims,
                spacing,
                r,
                a,
                decay_mm,
                texture.to_kind(),
                subject_seed,
            )
            .map_err(|e| CliError::usage(e.to_string()))?;
            Ok((format!("s{i:04}"), spec))
        })
        .collect::<CliResult<_>>()?;

    specs.par_iter().try_for_each(|(id, spec)| -> CliResult<()> {
        let (vol, field, roi) = synth_phantom(spec)?;
        let dir = out_dir.join(id);
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display())))?;
        write_volume(dir.join("volume"), &vol, Dtype::F64)?;
        write_field(dir.join("field"), &field, Dtype::F64)?;
        write_mask(dir.join("brain"), &roi.brain)?;
        write_mask(dir.join("tumor"), &roi.tumor)?;
        write_mask(dir.join("peri"), &roi.peri)?;
        Ok(())
    })?;

    // extraction config referencing the generated datasets
    let subject_entries: Vec<serde_json::Value> = specs
        .iter()
        .map(|(id, _)| {
            serde_json::json!({
                "id": id,
                "volume": format!("{id}/volume"),
                "field": format!("{id}/field"),
                "brain": format!("{id}/brain"),
                "tumor": format!("{id}/tumor"),
                "peri": format!("{id}/peri"),
            })
        })
        .collect();
    let config = serde_json::json!({
        "band_width_mm": 5.0,
        "bands": 12,
        "collage": { "window": 5, "bins": 64, "cooc_window": 5 },
        "subjects": subject_entries,
    });
    let config_path = out_dir.join("config.json");
    std::fs::write(
        &config_path,
        serde_json::to_string_pretty(&config).expect("config serializes") + "\n",
    )
    .map_err(|e| CliError::data(format!("cannot write {}: {e}", config_path.display())))?;

    let mut truth = String::from("subject_id,tumor_radius_mm,amplitude_mm\n");
    for (id, spec) in &specs {
        truth.push_str(&format!(
            "{id},{},{}\n",
            spec.tumor_radius_mm, spec.amplitude_mm
        ));
    }
    std::fs::write(out_dir.join("truth.csv"), truth)
        .map_err(|e| CliError::data(format!("cannot write truth.csv: {e}")))?;

    log.info(&format!(
        "wrote {subjects} phantoms and config.json -> {}",
        out_dir.display()
    ));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cohort(
    out_dir: &Path,
    subjects: usize,
    features: usize,
    informative: &std::collections::BTreeMap<String, f64>,
    baseline_hazard: f64,
    censoring_rate: f64,
    seed: u64,
    log: Logger,
) -> CliResult<()> {
    if features == 0 {
        return Err(CliError::usage("cohort spec needs at least 1 feature"));
    }
    let table = synth_feature_table(subjects, features, seed)?;
    let mut beta = vec![0.0; features];
    for (name, value) in informative {
        let g = table
            .feature_index(name)
            .ok_or_else(|| {
                CliError::usage(format!(
                    "informative feature {name:?} is not among the generated columns f001..f{features:03}"
                ))
            })?;
        beta[g] = *value;
    }
    let spec = CohortSpec {
        n: subjects,
        beta,
        baseline_hazard,
        censoring_rate,
        seed,
    };
    spec.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let records = synth_survival(&table, &spec)?;

    table.write_csv(out_dir.join("features.csv"))?;
    write_survival_csv(out_dir.join("survival.csv"), &records)?;
    let truth = serde_json::json!({
        "beta": informative,
        "baseline_hazard": baseline_hazard,
        "censoring_rate": censoring_rate,
        "seed": seed,
    });
    std::fs::write(
        out_dir.join("truth.json"),
        serde_json::to_string_pretty(&truth).expect("truth serializes") + "\n",
    )
    .map_err(|e| CliError::data(format!("cannot write truth.json: {e}")))?;

    let events = records.iter().filter(|r| r.event).count();
    log.info(&format!(
        "wrote cohort of {subjects} subjects ({events} events) -> {}",
        out_dir.display()
    ));
    Ok(())
}
