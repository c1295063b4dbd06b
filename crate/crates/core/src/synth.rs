//! Synthetic phantoms and cohorts with known ground truth: mass-effect-like
//! radial displacement fields, oriented/isotropic textures, and
//! proportional-hazards survival data. Everything is deterministic given the
//! seed; independent subjects draw from per-subject RNG streams.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::deform::DeformationField;
use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::survival::SurvivalRecord;
use crate::volume::{Grid, Mask, RoiSet, Volume};

/// Width of the generated peri-lesional shell.
pub const PERI_THICKNESS_MM: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub enum TextureKind {
    Constant {
        value: f64,
    },
    IsotropicNoise {
        amplitude: f64,
    },
    OrientedSinusoid {
        amplitude: f64,
        frequency_per_mm: f64,
        direction: [f64; 3],
    },
}

/// A single-subject imaging phantom: grid geometry, spherical tumor,
/// radially decaying displacement, and an intensity texture.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub tumor_center_mm: [f64; 3],
    pub tumor_radius_mm: f64,
    /// Displacement amplitude at the tumor surface, mm.
    pub amplitude_mm: f64,
    /// Exponential decay length of the displacement, mm.
    pub decay_mm: f64,
    pub texture: TextureKind,
    pub seed: u64,
}

impl PhantomSpec {
    /// Phantom with the tumor at the grid center.
    pub fn centered(
        dims: [usize; 3],
        spacing: [f64; 3],
        tumor_radius_mm: f64,
        amplitude_mm: f64,
        decay_mm: f64,
        texture: TextureKind,
        seed: u64,
    ) -> Result<Self> {
        let grid = Grid::new(dims, spacing)?;
        let spec = PhantomSpec {
            dims,
            spacing,
            tumor_center_mm: grid_center(&grid),
            tumor_radius_mm,
            amplitude_mm,
            decay_mm,
            texture,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dims, self.spacing)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        let extent = grid.extent_mm();
        let min_extent = extent.iter().copied().fold(f64::INFINITY, f64::min);
        if !(self.tumor_radius_mm > 0.0 && self.tumor_radius_mm < 0.5 * min_extent) {
            return Err(Error::InvalidInput(format!(
                "tumor radius {} must be positive and below half the minimal extent {}",
                self.tumor_radius_mm,
                0.5 * min_extent
            )));
        }
        if self.amplitude_mm < 0.0 || !self.amplitude_mm.is_finite() {
            return Err(Error::InvalidInput(
                "displacement amplitude must be finite and >= 0".into(),
            ));
        }
        if !(self.decay_mm > 0.0) {
            return Err(Error::InvalidInput("decay length must be > 0".into()));
        }
        Ok(())
    }
}

fn grid_center(grid: &Grid) -> [f64; 3] {
    let d = grid.dims();
    let s = grid.spacing();
    [
        (d[0] - 1) as f64 * s[0] * 0.5,
        (d[1] - 1) as f64 * s[1] * 0.5,
        (d[2] - 1) as f64 * s[2] * 0.5,
    ]
}

/// |u| at center distance `r`: zero strictly inside the tumor, A at the
/// surface, exponentially decaying outward.
fn radial_magnitude(r: f64, radius: f64, amplitude: f64, decay: f64) -> f64 {
    if r < radius {
        0.0
    } else {
        amplitude * (-(r - radius) / decay).exp()
    }
}

/// Mass-effect-like displacement field plus the matching ROI masks: tumor
/// sphere, 3 mm peri shell, and an enclosing brain ellipsoid.
pub fn synth_deformation(spec: &PhantomSpec) -> Result<(DeformationField, RoiSet)> {
    spec.validate()?;
    let grid = spec.grid()?;
    let tc = spec.tumor_center_mm;
    let bc = grid_center(&grid);
    let extent = grid.extent_mm();
    let semi = [0.46 * extent[0], 0.46 * extent[1], 0.46 * extent[2]];
    let min_semi = semi.iter().copied().fold(f64::INFINITY, f64::min);

    // the lesion sphere (tumor + peri) must fit inside the brain ellipsoid
    let off = ((tc[0] - bc[0]).powi(2) + (tc[1] - bc[1]).powi(2) + (tc[2] - bc[2]).powi(2)).sqrt();
    if off + spec.tumor_radius_mm + PERI_THICKNESS_MM >= min_semi {
        return Err(Error::InvalidInput(
            "tumor and peri shell do not fit inside the brain ellipsoid".into(),
        ));
    }

    let n = grid.len();
    let mut field = vec![[0.0f64; 3]; n];
    let mut tumor = vec![false; n];
    let mut peri = vec![false; n];
    let mut brain = vec![false; n];
    for i in 0..n {
        let p = grid.position_mm(grid.coords(i));
        let rvec = [p[0] - tc[0], p[1] - tc[1], p[2] - tc[2]];
        let r = (rvec[0] * rvec[0] + rvec[1] * rvec[1] + rvec[2] * rvec[2]).sqrt();
        let mag = radial_magnitude(r, spec.tumor_radius_mm, spec.amplitude_mm, spec.decay_mm);
        if mag > 0.0 && r > 0.0 {
            field[i] = [mag * rvec[0] / r, mag * rvec[1] / r, mag * rvec[2] / r];
        }
        tumor[i] = r <= spec.tumor_radius_mm;
        peri[i] = r > spec.tumor_radius_mm && r <= spec.tumor_radius_mm + PERI_THICKNESS_MM;
        let e = [
            (p[0] - bc[0]) / semi[0],
            (p[1] - bc[1]) / semi[1],
            (p[2] - bc[2]) / semi[2],
        ];
        brain[i] = e[0] * e[0] + e[1] * e[1] + e[2] * e[2] <= 1.0;
    }

    let roi = RoiSet::new(
        Mask::new(grid, brain)?,
        Mask::new(grid, tumor)?,
        Mask::new(grid, peri)?,
    )?;
    Ok((DeformationField::new(grid, field)?, roi))
}

/// Intensity volume for the phantom's texture kind.
pub fn synth_texture(spec: &PhantomSpec) -> Result<Volume> {
    spec.validate()?;
    let grid = spec.grid()?;
    match &spec.texture {
        TextureKind::Constant { value } => Ok(Volume::filled(grid, *value)),
        TextureKind::IsotropicNoise { amplitude } => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let data = (0..grid.len())
                .map(|_| amplitude * rng.sample::<f64, _>(StandardNormal))
                .collect();
            Volume::new(grid, data)
        }
        TextureKind::OrientedSinusoid {
            amplitude,
            frequency_per_mm,
            direction,
        } => {
            let norm = (direction[0].powi(2) + direction[1].powi(2) + direction[2].powi(2)).sqrt();
            if !(norm > 0.0) {
                return Err(Error::InvalidInput("texture direction must be nonzero".into()));
            }
            let d = [direction[0] / norm, direction[1] / norm, direction[2] / norm];
            let w = 2.0 * std::f64::consts::PI * frequency_per_mm;
            Ok(Volume::from_fn(grid, |x, y, z| {
                let p = grid.position_mm([x, y, z]);
                amplitude * (w * (d[0] * p[0] + d[1] * p[1] + d[2] * p[2])).sin()
            }))
        }
    }
}

/// Full phantom: intensity volume, displacement field, and ROI masks.
pub fn synth_phantom(spec: &PhantomSpec) -> Result<(Volume, DeformationField, RoiSet)> {
    let (field, roi) = synth_deformation(spec)?;
    let vol = synth_texture(spec)?;
    Ok((vol, field, roi))
}

/// Proportional-hazards cohort generator.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortSpec {
    pub n: usize,
    /// True coefficients, aligned with the feature-table columns.
    pub beta: Vec<f64>,
    pub baseline_hazard: f64,
    /// Target fraction of censored subjects in [0, 1).
    pub censoring_rate: f64,
    pub seed: u64,
}

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidInput(format!(
                "cohort needs at least 2 subjects, got {}",
                self.n
            )));
        }
        if !(self.baseline_hazard > 0.0 && self.baseline_hazard.is_finite()) {
            return Err(Error::InvalidInput("baseline hazard must be finite and > 0".into()));
        }
        if !(0.0..1.0).contains(&self.censoring_rate) {
            return Err(Error::InvalidInput(format!(
                "censoring rate must be in [0, 1), got {}",
                self.censoring_rate
            )));
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidInput("true coefficients must be finite".into()));
        }
        Ok(())
    }
}

/// Independent stream per (purpose, subject) so that feature values and
/// survival draws from the same seed never share random bits.
fn subject_rng(seed: u64, purpose: u64, subject: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((purpose << 40) | (subject as u64 + 1));
    rng
}

const STREAM_FEATURES: u64 = 1;
const STREAM_SURVIVAL: u64 = 2;

/// Complete iid standard-normal feature table with columns `f001..f{p}`.
pub fn synth_feature_table(n: usize, p: usize, seed: u64) -> Result<FeatureTable> {
    let names: Vec<String> = (1..=p).map(|g| format!("f{g:03}")).collect();
    let mut subjects = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = subject_rng(seed, STREAM_FEATURES, i);
        subjects.push(format!("s{i:04}"));
        rows.push(
            (0..p)
                .map(|_| Some(rng.sample::<f64, _>(StandardNormal)))
                .collect(),
        );
    }
    FeatureTable::from_rows(subjects, names, rows)
}

/// Exponential event times with hazard h₀·exp(x·β*), plus independent
/// uniform censoring calibrated to the target rate.
pub fn synth_survival(x: &FeatureTable, spec: &CohortSpec) -> Result<Vec<SurvivalRecord>> {
    spec.validate()?;
    if x.n_subjects() != spec.n {
        return Err(Error::InvalidInput(format!(
            "table has {} subjects, spec says {}",
            x.n_subjects(),
            spec.n
        )));
    }
    if x.n_features() != spec.beta.len() {
        return Err(Error::InvalidInput(format!(
            "table has {} features, beta has {}",
            x.n_features(),
            spec.beta.len()
        )));
    }

    let n = spec.n;
    let mut event_times = Vec::with_capacity(n);
    let mut censor_draws = Vec::with_capacity(n);
    for i in 0..n {
        let mut score = 0.0;
        for g in 0..x.n_features() {
            let v = x.value(i, g).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "missing value for subject {} feature {}; the generator needs a complete table",
                    x.subjects()[i],
                    x.names()[g]
                ))
            })?;
            score += v * spec.beta[g];
        }
        let mut rng = subject_rng(spec.seed, STREAM_SURVIVAL, i);
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        let hazard = spec.baseline_hazard * score.exp();
        let t = (-(1.0 - u).ln() / hazard).max(1e-9);
        event_times.push(t);
        censor_draws.push(v.max(1e-12));
    }

    let censor_times: Option<Vec<f64>> = if spec.censoring_rate == 0.0 {
        None
    } else {
        // bisect the censor-window width to hit the target censored fraction
        let t_max = event_times.iter().copied().fold(0.0f64, f64::max);
        let v_min = censor_draws.iter().copied().fold(f64::INFINITY, f64::min);
        let mut lo = 1e-12;
        let mut hi = t_max / v_min + 1.0;
        let frac = |c: f64| -> f64 {
            let censored = event_times
                .iter()
                .zip(&censor_draws)
                .filter(|(&t, &v)| v * c < t)
                .count();
            censored as f64 / n as f64
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if frac(mid) > spec.censoring_rate {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let c = 0.5 * (lo + hi);
        Some(censor_draws.iter().map(|&v| v * c).collect())
    };

    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let t = event_times[i];
        let (time, event) = match &censor_times {
            Some(c) if c[i] < t => (c[i], false),
            _ => (t, true),
        };
        records.push(SurvivalRecord::new(x.subjects()[i].clone(), time, event)?);
    }
    Ok(records)
}
