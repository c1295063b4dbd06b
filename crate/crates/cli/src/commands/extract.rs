//! Batch feature extraction over the subjects of a pipeline config.
//!
//! Subjects are processed in parallel but assembled and logged in config
//! order, so the output CSV is byte-identical at any worker count. Subjects
//! with missing input files are skipped with a logged reason; present but
//! unreadable inputs abort with a data error.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use rdepth_core::collage::{aggregate_collage, collage_voxel_data, CollageVoxelData};
use rdepth_core::descriptor::{collage_block, deformation_block, descriptor_names, ExtractConfig};
use rdepth_core::features::{FeatureTable, FeatureVector};
use rdepth_core::io::{load_field, load_mask, load_volume, write_volume, Dtype};
use rdepth_core::{HaralickVector, RoiSet};

use crate::config::{PipelineConfigFile, SubjectEntry};
use crate::{CliError, CliResult, Logger};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Full,
    DeformOnly,
    CollageOnly,
}

enum Outcome {
    Features(FeatureVector),
    Skipped(String),
}

pub fn run(
    config_path: &Path,
    out: &Path,
    mode: Mode,
    export_maps: Option<&Path>,
    log: Logger,
) -> CliResult<()> {
    let (cfg_file, base) = PipelineConfigFile::load(config_path)?;
    let ecfg = cfg_file.extract_config()?;

    // config-schema validation up front: every subject must declare the
    // entries the requested mode reads
    for s in &cfg_file.subjects {
        for (present, field) in required_entries(mode, s) {
            if !present {
                return Err(CliError::usage(format!(
                    "subject {:?} lacks the {field:?} entry required by this command",
                    s.id
                )));
            }
        }
    }

    let names = column_names(mode, &ecfg);

    let outcomes: Vec<CliResult<Outcome>> = cfg_file
        .subjects
        .par_iter()
        .map(|s| process_subject(s, &base, mode, &ecfg, export_maps))
        .collect();

    let mut table = FeatureTable::new(names).map_err(CliError::from)?;
    let mut extracted = 0usize;
    for (subject, outcome) in cfg_file.subjects.iter().zip(outcomes) {
        match outcome? {
            Outcome::Features(fv) => {
                table.push_row(subject.id.clone(), &fv)?;
                extracted += 1;
            }
            Outcome::Skipped(reason) => {
                log.warn(&format!("skipping subject {:?}: {reason}", subject.id));
            }
        }
    }

    table.write_csv(out)?;
    log.info(&format!(
        "extracted {extracted}/{} subjects, {} feature columns -> {}",
        cfg_file.subjects.len(),
        table.n_features(),
        out.display()
    ));
    Ok(())
}

/// (entry present?, entry name) pairs the mode requires.
fn required_entries(mode: Mode, s: &SubjectEntry) -> Vec<(bool, &'static str)> {
    match mode {
        Mode::Full => vec![
            (s.volume.is_some(), "volume"),
            (s.field.is_some(), "field"),
            (s.brain.is_some(), "brain"),
        ],
        Mode::DeformOnly => vec![(s.field.is_some(), "field"), (s.brain.is_some(), "brain")],
        Mode::CollageOnly => vec![(s.volume.is_some(), "volume")],
    }
}

fn column_names(mode: Mode, cfg: &ExtractConfig) -> Vec<String> {
    match mode {
        Mode::Full => descriptor_names(cfg),
        Mode::DeformOnly => descriptor_names(cfg)
            .into_iter()
            .take(cfg.bands * 5)
            .collect(),
        Mode::CollageOnly => descriptor_names(cfg)
            .into_iter()
            .skip(cfg.bands * 5)
            .collect(),
    }
}

fn dataset_exists(base: &Path, rel: &str) -> bool {
    let p = base.join(rel);
    let hdr = PathBuf::from(format!("{}.volhdr", p.display()));
    let raw = PathBuf::from(format!("{}.volraw", p.display()));
    hdr.exists() && raw.exists()
}

fn process_subject(
    s: &SubjectEntry,
    base: &Path,
    mode: Mode,
    cfg: &ExtractConfig,
    export_maps: Option<&Path>,
) -> CliResult<Outcome> {
    // presence check of every input the mode will read
    let mut needed: Vec<(&str, &str)> = vec![("tumor", s.tumor.as_str()), ("peri", s.peri.as_str())];
    if mode != Mode::CollageOnly {
        needed.push(("brain", s.brain.as_deref().unwrap()));
        needed.push(("field", s.field.as_deref().unwrap()));
    } else if let Some(b) = s.brain.as_deref() {
        needed.push(("brain", b));
    }
    if mode != Mode::DeformOnly {
        needed.push(("volume", s.volume.as_deref().unwrap()));
    }
    for (what, rel) in &needed {
        if !dataset_exists(base, rel) {
            return Ok(Outcome::Skipped(format!("missing {what} dataset {rel:?}")));
        }
    }

    let tumor = load_mask(base.join(&s.tumor))?;
    let peri = load_mask(base.join(&s.peri))?;
    let brain = match (mode, s.brain.as_deref()) {
        (_, Some(rel)) => load_mask(base.join(rel))?,
        // texture extraction alone needs no parenchyma; the lesion itself
        // is a valid enclosing mask
        (Mode::CollageOnly, None) => tumor.union(&peri)?,
        _ => unreachable!("validated above"),
    };
    let roi = RoiSet::new(brain, tumor, peri)?;

    let mut fv = FeatureVector::new();
    if mode != Mode::CollageOnly {
        let field = load_field(base.join(s.field.as_deref().unwrap()))?;
        fv.extend(&deformation_block(
            &field,
            &roi,
            cfg.band_width_mm,
            cfg.bands,
        )?);
    }
    if mode != Mode::DeformOnly {
        let volume = load_volume(base.join(s.volume.as_deref().unwrap()))?;
        match export_maps {
            None => fv.extend(&collage_block(&volume, &roi, &cfg.collage)?),
            Some(dir) => {
                for (label, mask) in [("tumor", &roi.tumor), ("peri", &roi.peri)] {
                    let data = collage_voxel_data(&volume, mask, &cfg.collage)?;
                    let block = aggregate_collage(&data)?;
                    let mut prefixed = FeatureVector::new();
                    prefixed.extend_prefixed(&format!("{label}_"), &block);
                    fv.extend(&prefixed);
                    export_subject_maps(dir, &s.id, label, &data)?;
                }
            }
        }
    }
    Ok(Outcome::Features(fv))
}

/// Debug export: θ/φ orientation maps plus the 26 per-voxel statistic maps,
/// one volume per map, NaN outside the ROI.
fn export_subject_maps(
    dir: &Path,
    subject: &str,
    compartment: &str,
    data: &CollageVoxelData,
) -> CliResult<()> {
    let out = dir.join(subject).join(compartment);
    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", out.display())))?;
    write_volume(out.join("theta"), &data.to_volume(&data.theta), Dtype::F64)?;
    write_volume(out.join("phi"), &data.to_volume(&data.phi), Dtype::F64)?;
    for (h, name) in HaralickVector::NAMES.iter().enumerate() {
        for (angle, use_phi) in [("theta", false), ("phi", true)] {
            let values = data.stat_values(use_phi, h);
            write_volume(
                out.join(format!("{angle}_{name}")),
                &data.to_volume(&values),
                Dtype::F64,
            )?;
        }
    }
    Ok(())
}
