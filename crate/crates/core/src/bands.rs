//! Annular sub-volumes of the brain-around-tumor region.
//!
//! Bands are shells of in-brain, non-lesion voxels at fixed distance
//! intervals from the lesion margin (tumor ∪ peri). Distances come from an
//! exact separable Euclidean distance transform that respects anisotropic
//! voxel spacing.

use crate::error::{Error, Result};
use crate::volume::{Grid, Mask, RoiSet, Volume};

/// Bands with fewer voxels than this yield missing-valued features;
/// statistics over tiny samples are noise.
pub const MIN_SAMPLE: usize = 10;

/// Statistic order used by every first-order feature block.
pub const STAT_NAMES: [&str; 5] = ["mean", "median", "std", "skewness", "kurtosis"];

/// Mean, median, standard deviation, skewness, and kurtosis of a sample.
///
/// Conventions: population (1/n) central moments; std is the biased
/// estimator; kurtosis is Pearson (non-excess, normal = 3); a constant
/// sample has skewness = kurtosis = 0 by convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderStats {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

impl FirstOrderStats {
    pub fn as_array(&self) -> [f64; 5] {
        [self.mean, self.median, self.std, self.skewness, self.kurtosis]
    }
}

/// Neumaier compensated summation; keeps large-sample moment sums accurate
/// to a few ulps so downstream tolerances can stay tight.
pub(crate) fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn first_order(values: &[f64]) -> Result<FirstOrderStats> {
    if values.is_empty() {
        return Err(Error::InvalidInput(
            "first-order statistics need a non-empty sample".into(),
        ));
    }
    let n = values.len() as f64;
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return Ok(FirstOrderStats {
            mean: first,
            median: first,
            std: 0.0,
            skewness: 0.0,
            kurtosis: 0.0,
        });
    }

    let mean = compensated_sum(values.iter().copied()) / n;

    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    };

    let m2 = compensated_sum(values.iter().map(|&v| (v - mean) * (v - mean))) / n;
    let m3 = compensated_sum(values.iter().map(|&v| {
        let d = v - mean;
        d * d * d
    })) / n;
    let m4 = compensated_sum(values.iter().map(|&v| {
        let d = v - mean;
        (d * d) * (d * d)
    })) / n;

    let (skewness, kurtosis) = if m2 == 0.0 {
        (0.0, 0.0)
    } else {
        (m3 / m2.powf(1.5), m4 / (m2 * m2))
    };

    Ok(FirstOrderStats {
        mean,
        median,
        std: m2.sqrt(),
        skewness,
        kurtosis,
    })
}

/// Exact Euclidean distance (mm) from every background voxel to the nearest
/// foreground voxel; zero on foreground. Separable squared-distance passes
/// with per-axis weights spacing².
pub fn distance_transform(mask: &Mask) -> Result<Volume> {
    if mask.is_all_background() {
        return Err(Error::InvalidInput(
            "distance transform of an empty mask is undefined".into(),
        ));
    }
    let grid = *mask.grid();
    let [nx, ny, nz] = grid.dims();
    let [sx, sy, sz] = grid.spacing();

    let mut dist_sq: Vec<f64> = mask
        .data()
        .iter()
        .map(|&fg| if fg { 0.0 } else { f64::INFINITY })
        .collect();

    let mut line = vec![0.0; nx.max(ny).max(nz)];
    let mut out_line = vec![0.0; line.len()];

    // x pass
    for z in 0..nz {
        for y in 0..ny {
            let row = grid.index(0, y, z);
            line[..nx].copy_from_slice(&dist_sq[row..row + nx]);
            dt_line(&line[..nx], sx * sx, &mut out_line[..nx]);
            dist_sq[row..row + nx].copy_from_slice(&out_line[..nx]);
        }
    }
    // y pass
    for z in 0..nz {
        for x in 0..nx {
            for y in 0..ny {
                line[y] = dist_sq[grid.index(x, y, z)];
            }
            dt_line(&line[..ny], sy * sy, &mut out_line[..ny]);
            for y in 0..ny {
                dist_sq[grid.index(x, y, z)] = out_line[y];
            }
        }
    }
    // z pass
    for y in 0..ny {
        for x in 0..nx {
            for z in 0..nz {
                line[z] = dist_sq[grid.index(x, y, z)];
            }
            dt_line(&line[..nz], sz * sz, &mut out_line[..nz]);
            for z in 0..nz {
                dist_sq[grid.index(x, y, z)] = out_line[z];
            }
        }
    }

    Volume::new(grid, dist_sq.iter().map(|&d| d.sqrt()).collect())
}

/// 1D lower-envelope pass over `f[q] + w·(p−q)²`.
fn dt_line(f: &[f64], w: f64, out: &mut [f64]) {
    let n = f.len();
    let mut sites = vec![0usize; n];
    let mut bounds = vec![0.0f64; n + 1];
    let mut k = 0usize;
    let mut any = false;

    let intersect = |q: usize, r: usize| -> f64 {
        let fq = f[q] + w * (q * q) as f64;
        let fr = f[r] + w * (r * r) as f64;
        (fq - fr) / (2.0 * w * (q as f64 - r as f64))
    };

    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        if !any {
            sites[0] = q;
            bounds[0] = f64::NEG_INFINITY;
            bounds[1] = f64::INFINITY;
            k = 0;
            any = true;
            continue;
        }
        let mut s = intersect(q, sites[k]);
        while s <= bounds[k] {
            k -= 1;
            s = intersect(q, sites[k]);
        }
        k += 1;
        sites[k] = q;
        bounds[k] = s;
        bounds[k + 1] = f64::INFINITY;
    }

    if !any {
        out.fill(f64::INFINITY);
        return;
    }
    let mut j = 0usize;
    for p in 0..n {
        while bounds[j + 1] < p as f64 {
            j += 1;
        }
        let d = p as f64 - sites[j] as f64;
        out[p] = f[sites[j]] + w * d * d;
    }
}

/// Per-voxel band labels: 0 = not in the brain-around-tumor region,
/// j in 1..=m = annular band at distance ((j−1)·w, j·w] from the lesion
/// margin.
#[derive(Debug, Clone)]
pub struct BandPartition {
    grid: Grid,
    band_width_mm: f64,
    bands: usize,
    labels: Vec<u8>,
}

impl BandPartition {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn band_width_mm(&self) -> f64 {
        self.band_width_mm
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Linear indices of the voxels in band `j` (1-based).
    pub fn band_voxels(&self, j: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l as usize == j)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn band_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.bands + 1];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }
}

/// Partition the brain-around-tumor region into `m` annular bands of width
/// `band_width_mm`, measured from the margin of tumor ∪ peri. Bands exclude
/// both lesion compartments so they contain only normal-appearing
/// parenchyma; outer bands may be empty.
pub fn build_bands(roi: &RoiSet, band_width_mm: f64, m: usize) -> Result<BandPartition> {
    if !(band_width_mm.is_finite() && band_width_mm > 0.0) {
        return Err(Error::InvalidInput(format!(
            "band width must be finite and > 0, got {band_width_mm}"
        )));
    }
    if m == 0 || m > u8::MAX as usize {
        return Err(Error::InvalidInput(format!(
            "band count must be in 1..=255, got {m}"
        )));
    }
    if roi.tumor.is_all_background() {
        return Err(Error::InvalidInput("tumor mask is empty".into()));
    }

    let lesion = roi.lesion();
    let dist = distance_transform(&lesion)?;
    let grid = *roi.grid();

    let mut labels = vec![0u8; grid.len()];
    let outer = m as f64 * band_width_mm;
    for i in 0..grid.len() {
        if !roi.brain.data()[i] || roi.tumor.data()[i] || roi.peri.data()[i] {
            continue;
        }
        let d = dist.data()[i];
        if d <= 0.0 || d > outer {
            continue;
        }
        // nominal band from division, then nudged until the defining
        // predicate (j-1)·w < d <= j·w holds despite rounding
        let mut j = (d / band_width_mm).ceil() as usize;
        j = j.max(1);
        while j > 1 && d <= (j - 1) as f64 * band_width_mm {
            j -= 1;
        }
        while d > j as f64 * band_width_mm {
            j += 1;
        }
        if j <= m {
            labels[i] = j as u8;
        }
    }

    Ok(BandPartition {
        grid,
        band_width_mm,
        bands: m,
        labels,
    })
}
