//! Gradient-orientation co-occurrence texture inside lesion compartments.
//!
//! For every ROI voxel the dominant 3D gradient orientation of its local
//! neighborhood is extracted by singular value decomposition of the windowed
//! gradient matrix, expressed as an in-plane angle θ and an elevation angle
//! φ. Quantized angle maps feed per-voxel co-occurrence matrices, each
//! summarized by 13 Haralick statistics, and the per-voxel statistic maps are
//! aggregated into first-order features.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::bands::{compensated_sum, first_order, MIN_SAMPLE, STAT_NAMES};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::volume::{gradient, Axis, Grid, Mask, Volume};

/// ε guard inside logarithms; zero-probability bins are the common case.
pub const LOG_EPS: f64 = 1e-12;

/// The 13 unique unit-neighborhood directions (one of each antiparallel
/// pair of the 26-neighborhood).
pub fn unit_directions() -> Vec<[i32; 3]> {
    vec![
        [1, 0, 0],
        [0, 1, 0],
        [0, 0, 1],
        [1, 1, 0],
        [1, -1, 0],
        [1, 0, 1],
        [1, 0, -1],
        [0, 1, 1],
        [0, 1, -1],
        [1, 1, 1],
        [1, 1, -1],
        [1, -1, 1],
        [1, -1, -1],
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollageConfig {
    /// Odd edge length of the orientation window.
    pub window: usize,
    /// Number of uniform angle bins over (−π/2, π/2].
    pub bins: usize,
    /// Co-occurrence displacement vectors; pairwise non-antiparallel.
    pub offsets: Vec<[i32; 3]>,
    /// Odd edge length of the per-voxel co-occurrence window.
    pub cooc_window: usize,
}

impl Default for CollageConfig {
    fn default() -> Self {
        CollageConfig {
            window: 5,
            bins: 64,
            offsets: unit_directions(),
            cooc_window: 5,
        }
    }
}

impl CollageConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::InvalidInput(format!(
                "orientation window must be odd and >= 3, got {}",
                self.window
            )));
        }
        if self.cooc_window < 3 || self.cooc_window % 2 == 0 {
            return Err(Error::InvalidInput(format!(
                "co-occurrence window must be odd and >= 3, got {}",
                self.cooc_window
            )));
        }
        if self.bins < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 angle bins, got {}",
                self.bins
            )));
        }
        if self.offsets.is_empty() {
            return Err(Error::InvalidInput("offset set is empty".into()));
        }
        for (i, o) in self.offsets.iter().enumerate() {
            if *o == [0, 0, 0] {
                return Err(Error::InvalidInput("zero offset".into()));
            }
            for other in &self.offsets[i + 1..] {
                if *other == *o {
                    return Err(Error::InvalidInput(format!("duplicate offset {o:?}")));
                }
                if other[0] == -o[0] && other[1] == -o[1] && other[2] == -o[2] {
                    return Err(Error::InvalidInput(format!(
                        "antiparallel offsets {o:?} and {other:?} would double count"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Dominant-orientation angle maps in radians, range (−π/2, π/2], defined
/// only on ROI voxels (NaN elsewhere).
#[derive(Debug, Clone)]
pub struct OrientationMaps {
    pub theta: Volume,
    pub phi: Volume,
}

/// Symmetric co-occurrence counts over quantized angle levels.
#[derive(Debug, Clone)]
pub struct CoocMatrix {
    bins: usize,
    counts: Vec<f64>,
    total: f64,
}

impl CoocMatrix {
    pub fn new(bins: usize) -> Self {
        CoocMatrix {
            bins,
            counts: vec![0.0; bins * bins],
            total: 0.0,
        }
    }

    /// Accumulate one observed pair, symmetrically.
    pub fn add_pair(&mut self, a: usize, b: usize) {
        self.counts[a * self.bins + b] += 1.0;
        self.counts[b * self.bins + a] += 1.0;
        self.total += 2.0;
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn count(&self, i: usize, j: usize) -> f64 {
        self.counts[i * self.bins + j]
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Row-major probabilities; `None` when no pair was ever counted.
    pub fn probabilities(&self) -> Option<Vec<f64>> {
        if self.total == 0.0 {
            return None;
        }
        Some(self.counts.iter().map(|&c| c / self.total).collect())
    }

    /// Build from explicit nonnegative counts (row-major, bins × bins).
    pub fn from_counts(bins: usize, counts: Vec<f64>) -> Result<Self> {
        if counts.len() != bins * bins {
            return Err(Error::InvalidInput(format!(
                "{} counts for a {bins}×{bins} matrix",
                counts.len()
            )));
        }
        if counts.iter().any(|&c| c < 0.0 || !c.is_finite()) {
            return Err(Error::InvalidInput("counts must be finite and >= 0".into()));
        }
        let total = counts.iter().sum();
        Ok(CoocMatrix { bins, counts, total })
    }
}

/// The 13 classical co-occurrence statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HaralickVector {
    pub energy: f64,
    pub contrast: f64,
    pub correlation: f64,
    pub variance: f64,
    pub inverse_difference_moment: f64,
    pub sum_average: f64,
    pub sum_variance: f64,
    pub sum_entropy: f64,
    pub entropy: f64,
    pub difference_variance: f64,
    pub difference_entropy: f64,
    pub info_correlation_1: f64,
    pub info_correlation_2: f64,
}

impl HaralickVector {
    pub const NAMES: [&'static str; 13] = [
        "energy",
        "contrast",
        "correlation",
        "variance",
        "inverse_difference_moment",
        "sum_average",
        "sum_variance",
        "sum_entropy",
        "entropy",
        "difference_variance",
        "difference_entropy",
        "info_correlation_1",
        "info_correlation_2",
    ];

    pub fn as_array(&self) -> [f64; 13] {
        [
            self.energy,
            self.contrast,
            self.correlation,
            self.variance,
            self.inverse_difference_moment,
            self.sum_average,
            self.sum_variance,
            self.sum_entropy,
            self.entropy,
            self.difference_variance,
            self.difference_entropy,
            self.info_correlation_1,
            self.info_correlation_2,
        ]
    }
}

/// Rows of (∂f/∂x, ∂f/∂y, ∂f/∂z) over the window around `c`, clamped to the
/// volume bounds, in x-fastest row order.
pub fn local_gradient_matrix(
    gx: &Volume,
    gy: &Volume,
    gz: &Volume,
    c: [usize; 3],
    window: usize,
) -> Vec<[f64; 3]> {
    let grid = gx.grid();
    let dims = grid.dims();
    let h = (window / 2) as i64;
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..3 {
        lo[a] = (c[a] as i64 - h).max(0) as usize;
        hi[a] = ((c[a] as i64 + h) as usize).min(dims[a] - 1);
    }
    let mut rows = Vec::with_capacity(window * window * window);
    for z in lo[2]..=hi[2] {
        for y in lo[1]..=hi[1] {
            for x in lo[0]..=hi[0] {
                let i = grid.index(x, y, z);
                rows.push([gx.data()[i], gy.data()[i], gz.data()[i]]);
            }
        }
    }
    rows
}

/// Dominant gradient orientation of a windowed gradient matrix.
///
/// ψ is the right-singular vector of the largest singular value,
/// sign-canonicalized so its first nonzero component is positive; then
/// θ = atan(ψ_y/ψ_x) and φ = atan(ψ_z/√(ψ_x²+ψ_y²)), both in (−π/2, π/2].
/// The all-zero matrix maps to (0, 0).
pub fn dominant_orientation(rows: &[[f64; 3]]) -> (f64, f64) {
    if rows.iter().all(|r| *r == [0.0, 0.0, 0.0]) {
        return (0.0, 0.0);
    }
    let mat = DMatrix::from_fn(rows.len(), 3, |i, j| rows[i][j]);
    let svd = mat.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let k = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("at least one singular value");
    let mut psi = [vt[(k, 0)], vt[(k, 1)], vt[(k, 2)]];
    snap_degenerate(&mut psi);
    canonicalize_sign(&mut psi);
    angles_from_psi(psi)
}

/// ψ is unit norm; components below rounding noise are exact zeros of the
/// underlying problem and must be treated as such for the axis-aligned
/// angle conventions to hold.
fn snap_degenerate(psi: &mut [f64; 3]) {
    for c in psi.iter_mut() {
        if c.abs() < 1e-12 {
            *c = 0.0;
        }
    }
}

fn canonicalize_sign(psi: &mut [f64; 3]) {
    let flip = if psi[0] != 0.0 {
        psi[0] < 0.0
    } else if psi[1] != 0.0 {
        psi[1] < 0.0
    } else {
        psi[2] < 0.0
    };
    if flip {
        for c in psi.iter_mut() {
            *c = -*c;
        }
    }
}

fn angles_from_psi(psi: [f64; 3]) -> (f64, f64) {
    let theta = if psi[0] == 0.0 {
        if psi[1] == 0.0 {
            0.0
        } else {
            FRAC_PI_2
        }
    } else {
        (psi[1] / psi[0]).atan()
    };
    let planar = (psi[0] * psi[0] + psi[1] * psi[1]).sqrt();
    let phi = if planar == 0.0 {
        if psi[2] == 0.0 {
            0.0
        } else {
            FRAC_PI_2
        }
    } else {
        (psi[2] / planar).atan()
    };
    (theta, phi)
}

/// Uniform bin over (−π/2, π/2]; the closed lower endpoint folds into bin 0.
pub fn quantize_angle(angle: f64, bins: usize) -> usize {
    let t = (angle + FRAC_PI_2) / PI;
    ((t * bins as f64).floor() as isize).clamp(0, bins as isize - 1) as usize
}

/// Co-occurrence matrix of the quantized angle map over the window centered
/// at `c`. Pairs (p, p+o) require both endpoints inside the window and
/// inside the ROI (level >= 0); accumulation is symmetric.
pub fn cooccurrence(qmap: &[i32], grid: &Grid, c: [usize; 3], cfg: &CollageConfig) -> CoocMatrix {
    let dims = grid.dims();
    let h = (cfg.cooc_window / 2) as i64;
    let mut lo = [0i64; 3];
    let mut hi = [0i64; 3];
    for a in 0..3 {
        lo[a] = (c[a] as i64 - h).max(0);
        hi[a] = (c[a] as i64 + h).min(dims[a] as i64 - 1);
    }
    let mut mat = CoocMatrix::new(cfg.bins);
    for z in lo[2]..=hi[2] {
        for y in lo[1]..=hi[1] {
            for x in lo[0]..=hi[0] {
                let qa = qmap[grid.index(x as usize, y as usize, z as usize)];
                if qa < 0 {
                    continue;
                }
                for o in &cfg.offsets {
                    let px = x + o[0] as i64;
                    let py = y + o[1] as i64;
                    let pz = z + o[2] as i64;
                    if px < lo[0] || px > hi[0] || py < lo[1] || py > hi[1] || pz < lo[2] || pz > hi[2]
                    {
                        continue;
                    }
                    let qb = qmap[grid.index(px as usize, py as usize, pz as usize)];
                    if qb < 0 {
                        continue;
                    }
                    mat.add_pair(qa as usize, qb as usize);
                }
            }
        }
    }
    mat
}

/// The 13 Haralick statistics of a normalized co-occurrence matrix, or
/// `None` when no pair was counted. Log terms use ln(p + ε) with
/// ε = [`LOG_EPS`]; entropy-type statistics are clamped at zero.
pub fn haralick(m: &CoocMatrix) -> Option<HaralickVector> {
    let p = m.probabilities()?;
    let b = m.bins();

    let mut px = vec![0.0; b];
    let mut py = vec![0.0; b];
    let mut p_sum = vec![0.0; 2 * b - 1];
    let mut p_diff = vec![0.0; b];
    let mut nonzero: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..b {
        for j in 0..b {
            let v = p[i * b + j];
            if v > 0.0 {
                px[i] += v;
                py[j] += v;
                p_sum[i + j] += v;
                p_diff[i.abs_diff(j)] += v;
                nonzero.push((i, j, v));
            }
        }
    }

    let mu_x: f64 = px.iter().enumerate().map(|(i, &v)| i as f64 * v).sum();
    let mu_y: f64 = py.iter().enumerate().map(|(j, &v)| j as f64 * v).sum();
    let var_x: f64 = px
        .iter()
        .enumerate()
        .map(|(i, &v)| (i as f64 - mu_x).powi(2) * v)
        .sum();
    let var_y: f64 = py
        .iter()
        .enumerate()
        .map(|(j, &v)| (j as f64 - mu_y).powi(2) * v)
        .sum();
    let sigma_x = var_x.sqrt();
    let sigma_y = var_y.sqrt();

    let energy = compensated_sum(nonzero.iter().map(|&(_, _, v)| v * v));

    let contrast = p_diff
        .iter()
        .enumerate()
        .map(|(k, &v)| (k * k) as f64 * v)
        .sum::<f64>();

    let cross: f64 = nonzero
        .iter()
        .map(|&(i, j, v)| i as f64 * j as f64 * v)
        .sum();
    let correlation = if sigma_x * sigma_y == 0.0 {
        0.0
    } else {
        (cross - mu_x * mu_y) / (sigma_x * sigma_y)
    };

    let variance = var_x;

    let inverse_difference_moment = nonzero
        .iter()
        .map(|&(i, j, v)| v / (1.0 + (i as f64 - j as f64).powi(2)))
        .sum::<f64>();

    let sum_average: f64 = p_sum.iter().enumerate().map(|(k, &v)| k as f64 * v).sum();
    let sum_variance: f64 = p_sum
        .iter()
        .enumerate()
        .map(|(k, &v)| (k as f64 - sum_average).powi(2) * v)
        .sum();
    let sum_entropy = neg_p_log(p_sum.iter().copied()).max(0.0);

    let hxy = neg_p_log(nonzero.iter().map(|&(_, _, v)| v));
    let entropy = hxy.max(0.0);

    let diff_mean: f64 = p_diff.iter().enumerate().map(|(k, &v)| k as f64 * v).sum();
    let difference_variance: f64 = p_diff
        .iter()
        .enumerate()
        .map(|(k, &v)| (k as f64 - diff_mean).powi(2) * v)
        .sum();
    let difference_entropy = neg_p_log(p_diff.iter().copied()).max(0.0);

    let hx = neg_p_log(px.iter().copied());
    let hy = neg_p_log(py.iter().copied());
    let hxy1: f64 = -nonzero
        .iter()
        .map(|&(i, j, v)| v * (px[i] * py[j] + LOG_EPS).ln())
        .sum::<f64>();
    let nz_x: Vec<(usize, f64)> = px
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, v)| v > 0.0)
        .collect();
    let nz_y: Vec<(usize, f64)> = py
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, v)| v > 0.0)
        .collect();
    let mut hxy2 = 0.0;
    for &(_, vx) in &nz_x {
        for &(_, vy) in &nz_y {
            let q = vx * vy;
            hxy2 -= q * (q + LOG_EPS).ln();
        }
    }

    let info_correlation_1 = if hx.max(hy) == 0.0 {
        0.0
    } else {
        (hxy - hxy1) / hx.max(hy)
    };
    let info_correlation_2 = (1.0 - (-2.0 * (hxy2 - hxy)).exp()).max(0.0).sqrt();

    Some(HaralickVector {
        energy,
        contrast,
        correlation,
        variance,
        inverse_difference_moment,
        sum_average,
        sum_variance,
        sum_entropy,
        entropy,
        difference_variance,
        difference_entropy,
        info_correlation_1,
        info_correlation_2,
    })
}

fn neg_p_log(values: impl Iterator<Item = f64>) -> f64 {
    -values
        .filter(|&v| v > 0.0)
        .map(|v| v * (v + LOG_EPS).ln())
        .sum::<f64>()
}

/// Per-voxel orientation values and Haralick statistic maps over the ROI,
/// aligned with `roi_indices`. The building block behind both feature
/// aggregation and debug map export.
#[derive(Debug, Clone)]
pub struct CollageVoxelData {
    pub grid: Grid,
    pub roi_indices: Vec<usize>,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub theta_stats: Vec<Option<[f64; 13]>>,
    pub phi_stats: Vec<Option<[f64; 13]>>,
}

impl CollageVoxelData {
    /// Expand a per-ROI-voxel value list to a full volume, NaN outside.
    pub fn to_volume(&self, values: &[f64]) -> Volume {
        let mut data = vec![f64::NAN; self.grid.len()];
        for (k, &i) in self.roi_indices.iter().enumerate() {
            data[i] = values[k];
        }
        Volume::new(self.grid, data).expect("grid length")
    }

    pub fn stat_values(&self, use_phi: bool, stat: usize) -> Vec<f64> {
        let src = if use_phi { &self.phi_stats } else { &self.theta_stats };
        src.iter()
            .map(|s| s.map(|a| a[stat]).unwrap_or(f64::NAN))
            .collect()
    }
}

pub fn collage_voxel_data(vol: &Volume, roi: &Mask, cfg: &CollageConfig) -> Result<CollageVoxelData> {
    cfg.validate()?;
    vol.grid().check_same(roi.grid(), "volume vs roi mask")?;
    let grid = *vol.grid();

    let roi_indices: Vec<usize> = (0..grid.len()).filter(|&i| roi.data()[i]).collect();
    if roi_indices.is_empty() {
        return Err(Error::InvalidInput("empty ROI".into()));
    }

    let gx = gradient(vol, Axis::X)?;
    let gy = gradient(vol, Axis::Y)?;
    let gz = gradient(vol, Axis::Z)?;

    let angles: Vec<(f64, f64)> = roi_indices
        .par_iter()
        .map(|&i| {
            let c = grid.coords(i);
            let rows = local_gradient_matrix(&gx, &gy, &gz, c, cfg.window);
            dominant_orientation(&rows)
        })
        .collect();
    let theta: Vec<f64> = angles.iter().map(|a| a.0).collect();
    let phi: Vec<f64> = angles.iter().map(|a| a.1).collect();

    let mut q_theta = vec![-1i32; grid.len()];
    let mut q_phi = vec![-1i32; grid.len()];
    for (k, &i) in roi_indices.iter().enumerate() {
        q_theta[i] = quantize_angle(theta[k], cfg.bins) as i32;
        q_phi[i] = quantize_angle(phi[k], cfg.bins) as i32;
    }

    let per_voxel = |qmap: &[i32]| -> Vec<Option<[f64; 13]>> {
        roi_indices
            .par_iter()
            .map(|&i| {
                let c = grid.coords(i);
                let mat = cooccurrence(qmap, &grid, c, cfg);
                haralick(&mat).map(|h| h.as_array())
            })
            .collect()
    };
    let theta_stats = per_voxel(&q_theta);
    let phi_stats = per_voxel(&q_phi);

    Ok(CollageVoxelData {
        grid,
        roi_indices,
        theta,
        phi,
        theta_stats,
        phi_stats,
    })
}

/// Orientation maps as volumes (NaN outside the ROI), for debug export.
pub fn orientation_maps(vol: &Volume, roi: &Mask, cfg: &CollageConfig) -> Result<OrientationMaps> {
    let data = collage_voxel_data(vol, roi, cfg)?;
    Ok(OrientationMaps {
        theta: data.to_volume(&data.theta),
        phi: data.to_volume(&data.phi),
    })
}

/// Canonical order of the 130 per-compartment texture features.
pub fn collage_feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(130);
    for angle in ["theta", "phi"] {
        for hname in HaralickVector::NAMES {
            for stat in STAT_NAMES {
                names.push(format!("collage_{angle}_{stat}_{hname}"));
            }
        }
    }
    names
}

/// First-order statistics of the 26 per-voxel Haralick maps: exactly 130
/// named features. ROIs smaller than [`MIN_SAMPLE`] voxels yield all-missing
/// values.
pub fn collage_features(vol: &Volume, roi: &Mask, cfg: &CollageConfig) -> Result<FeatureVector> {
    let data = collage_voxel_data(vol, roi, cfg)?;
    aggregate_collage(&data)
}

/// Aggregate already-computed per-voxel maps into the 130 features.
pub fn aggregate_collage(data: &CollageVoxelData) -> Result<FeatureVector> {
    let mut out = FeatureVector::new();
    for (angle_idx, angle) in ["theta", "phi"].iter().enumerate() {
        let stats = if angle_idx == 0 {
            &data.theta_stats
        } else {
            &data.phi_stats
        };
        for (h, hname) in HaralickVector::NAMES.iter().enumerate() {
            let values: Vec<f64> = stats
                .iter()
                .filter_map(|s| s.map(|a| a[h]))
                .collect();
            let agg = if values.len() >= MIN_SAMPLE {
                Some(first_order(&values)?)
            } else {
                None
            };
            for (k, stat) in STAT_NAMES.iter().enumerate() {
                out.push(
                    format!("collage_{angle}_{stat}_{hname}"),
                    agg.map(|s| s.as_array()[k]),
                );
            }
        }
    }
    Ok(out)
}
