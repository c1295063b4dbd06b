//! Per-subject descriptor assembly: deformation-heterogeneity features over
//! the annular bands, texture features per lesion compartment, concatenated
//! in a fixed, documented column order.

use crate::bands::{build_bands, STAT_NAMES};
use crate::collage::{collage_feature_names, collage_features, CollageConfig};
use crate::deform::{deformation_features, DeformationField};
use crate::error::Result;
use crate::features::FeatureVector;
use crate::volume::{RoiSet, Volume};

pub const DEFAULT_BAND_WIDTH_MM: f64 = 5.0;
pub const DEFAULT_BANDS: usize = 12;

/// Parameters of the full per-subject extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractConfig {
    pub band_width_mm: f64,
    pub bands: usize,
    pub collage: CollageConfig,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            band_width_mm: DEFAULT_BAND_WIDTH_MM,
            bands: DEFAULT_BANDS,
            collage: CollageConfig::default(),
        }
    }
}

/// Deformation block: `bands·5` features named `deform_b{j}_{stat}`.
pub fn deformation_block(
    field: &DeformationField,
    roi: &RoiSet,
    band_width_mm: f64,
    bands: usize,
) -> Result<FeatureVector> {
    let partition = build_bands(roi, band_width_mm, bands)?;
    deformation_features(field, &partition)
}

/// Texture block for both compartments: 130 tumor features then 130 peri
/// features, prefixed `tumor_` / `peri_`.
pub fn collage_block(vol: &Volume, roi: &RoiSet, cfg: &CollageConfig) -> Result<FeatureVector> {
    let tumor = collage_features(vol, &roi.tumor, cfg)?;
    let peri = collage_features(vol, &roi.peri, cfg)?;
    let mut out = FeatureVector::new();
    out.extend_prefixed("tumor_", &tumor);
    out.extend_prefixed("peri_", &peri);
    Ok(out)
}

/// The full descriptor: deformation block then both texture blocks.
/// With defaults this is 60 + 130 + 130 = 320 features.
pub fn full_descriptor(
    vol: &Volume,
    field: &DeformationField,
    roi: &RoiSet,
    cfg: &ExtractConfig,
) -> Result<FeatureVector> {
    let mut out = deformation_block(field, roi, cfg.band_width_mm, cfg.bands)?;
    out.extend(&collage_block(vol, roi, &cfg.collage)?);
    Ok(out)
}

/// Column names of the full descriptor, in extraction order.
pub fn descriptor_names(cfg: &ExtractConfig) -> Vec<String> {
    let mut names = Vec::with_capacity(cfg.bands * 5 + 260);
    for j in 1..=cfg.bands {
        for stat in STAT_NAMES {
            names.push(format!("deform_b{j}_{stat}"));
        }
    }
    for prefix in ["tumor_", "peri_"] {
        for n in collage_feature_names() {
            names.push(format!("{prefix}{n}"));
        }
    }
    names
}
