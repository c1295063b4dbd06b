//! JSON config schemas: the extraction pipeline config and the synthesis
//! spec. Paths inside a config are resolved relative to the config file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use rdepth_core::collage::unit_directions;
use rdepth_core::descriptor::{ExtractConfig, DEFAULT_BANDS, DEFAULT_BAND_WIDTH_MM};
use rdepth_core::CollageConfig;

use crate::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfigFile {
    #[serde(default = "default_band_width")]
    pub band_width_mm: f64,
    #[serde(default = "default_bands")]
    pub bands: usize,
    #[serde(default)]
    pub collage: CollageSection,
    pub subjects: Vec<SubjectEntry>,
}

fn default_band_width() -> f64 {
    DEFAULT_BAND_WIDTH_MM
}

fn default_bands() -> usize {
    DEFAULT_BANDS
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollageSection {
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_window")]
    pub cooc_window: usize,
}

impl Default for CollageSection {
    fn default() -> Self {
        CollageSection {
            window: default_window(),
            bins: default_bins(),
            cooc_window: default_window(),
        }
    }
}

fn default_window() -> usize {
    5
}

fn default_bins() -> usize {
    64
}

/// Per-subject input paths (base names of .volhdr/.volraw pairs). `volume`
/// and `field` are optional because the deform-only and texture-only
/// commands need only part of the inputs.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectEntry {
    pub id: String,
    pub volume: Option<String>,
    pub field: Option<String>,
    pub brain: Option<String>,
    pub tumor: String,
    pub peri: String,
}

impl PipelineConfigFile {
    pub fn load(path: &Path) -> CliResult<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: PipelineConfigFile = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("malformed config {}: {e}", path.display())))?;
        if cfg.subjects.is_empty() {
            return Err(CliError::usage("config lists no subjects"));
        }
        let mut ids = std::collections::HashSet::new();
        for s in &cfg.subjects {
            if !ids.insert(s.id.as_str()) {
                return Err(CliError::usage(format!("duplicate subject id {:?}", s.id)));
            }
        }
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok((cfg, base))
    }

    pub fn extract_config(&self) -> CliResult<ExtractConfig> {
        let cfg = ExtractConfig {
            band_width_mm: self.band_width_mm,
            bands: self.bands,
            collage: CollageConfig {
                window: self.collage.window,
                bins: self.collage.bins,
                offsets: unit_directions(),
                cooc_window: self.collage.cooc_window,
            },
        };
        cfg.collage
            .validate()
            .map_err(|e| CliError::usage(e.to_string()))?;
        if !(cfg.band_width_mm > 0.0 && cfg.band_width_mm.is_finite()) {
            return Err(CliError::usage(format!(
                "band_width_mm must be finite and > 0, got {}",
                cfg.band_width_mm
            )));
        }
        if cfg.bands == 0 || cfg.bands > 255 {
            return Err(CliError::usage(format!(
                "bands must be in 1..=255, got {}",
                cfg.bands
            )));
        }
        Ok(cfg)
    }
}

/// Parameter that is either fixed or sampled uniformly per subject.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Fixed(f64),
    Range { min: f64, max: f64 },
}

impl Param {
    pub fn sample(&self, rng: &mut impl rand::Rng) -> f64 {
        match *self {
            Param::Fixed(v) => v,
            Param::Range { min, max } => {
                if min == max {
                    min
                } else {
                    rng.random_range(min..max)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TextureSection {
    Constant {
        value: f64,
    },
    Noise {
        amplitude: f64,
    },
    Sinusoid {
        amplitude: f64,
        frequency_per_mm: f64,
        direction: [f64; 3],
    },
}

impl TextureSection {
    pub fn to_kind(&self) -> rdepth_core::synth::TextureKind {
        use rdepth_core::synth::TextureKind;
        match self {
            TextureSection::Constant { value } => TextureKind::Constant { value: *value },
            TextureSection::Noise { amplitude } => TextureKind::IsotropicNoise {
                amplitude: *amplitude,
            },
            TextureSection::Sinusoid {
                amplitude,
                frequency_per_mm,
                direction,
            } => TextureKind::OrientedSinusoid {
                amplitude: *amplitude,
                frequency_per_mm: *frequency_per_mm,
                direction: *direction,
            },
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SynthSpecFile {
    /// Imaging phantoms: per-subject volume, field, and masks, plus an
    /// extraction config referencing them.
    Phantoms {
        subjects: usize,
        dims: [usize; 3],
        spacing: [f64; 3],
        tumor_radius_mm: Param,
        amplitude_mm: Param,
        decay_mm: f64,
        texture: TextureSection,
        seed: u64,
    },
    /// Tabular cohort: iid standard-normal features with a planted
    /// coefficient vector and proportional-hazards survival times.
    Cohort {
        subjects: usize,
        features: usize,
        /// Map feature name (f001..) to its true coefficient.
        informative: std::collections::BTreeMap<String, f64>,
        baseline_hazard: f64,
        #[serde(default)]
        censoring_rate: f64,
        seed: u64,
    },
}

impl SynthSpecFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read spec {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("malformed spec {}: {e}", path.display())))
    }
}
