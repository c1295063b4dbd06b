//! Deformation-heterogeneity features: per-voxel displacement magnitudes
//! aggregated into first-order statistics over the annular bands.

use crate::bands::{first_order, BandPartition, MIN_SAMPLE, STAT_NAMES};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::volume::{Grid, Volume};

/// Per-voxel displacement 3-vectors in millimeters, on the subject grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationField {
    grid: Grid,
    data: Vec<[f64; 3]>,
}

impl DeformationField {
    pub fn new(grid: Grid, data: Vec<[f64; 3]>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "field data length {} does not match dims {:?}",
                data.len(),
                grid.dims()
            )));
        }
        if let Some(i) = data.iter().position(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "non-finite displacement at voxel {i}"
            )));
        }
        Ok(DeformationField { grid, data })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        DeformationField {
            grid,
            data: vec![[0.0; 3]; n],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[[f64; 3]] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [[f64; 3]] {
        &mut self.data
    }
}

/// Per-voxel Euclidean norm of the displacement vector, in mm.
pub fn magnitude(field: &DeformationField) -> Volume {
    let data = field
        .data
        .iter()
        .map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt())
        .collect();
    Volume::new(field.grid, data).expect("lengths match by construction")
}

/// First-order statistics of the deformation magnitude per annular band,
/// flattened band-major into `m·5` named features `deform_b{j}_{stat}`.
/// Bands with fewer than [`MIN_SAMPLE`] voxels yield missing values.
pub fn deformation_features(
    field: &DeformationField,
    partition: &BandPartition,
) -> Result<FeatureVector> {
    field
        .grid
        .check_same(partition.grid(), "deformation field vs band partition")?;
    let mag = magnitude(field);

    let m = partition.bands();
    let mut per_band: Vec<Vec<f64>> = vec![Vec::new(); m + 1];
    for (i, &label) in partition.labels().iter().enumerate() {
        if label > 0 {
            per_band[label as usize].push(mag.data()[i]);
        }
    }

    let mut out = FeatureVector::new();
    for (j, band) in per_band.iter().enumerate().skip(1) {
        let stats = if band.len() >= MIN_SAMPLE {
            Some(first_order(band)?)
        } else {
            None
        };
        for (k, stat_name) in STAT_NAMES.iter().enumerate() {
            out.push(
                format!("deform_b{j}_{stat_name}"),
                stats.map(|s| s.as_array()[k]),
            );
        }
    }
    Ok(out)
}
