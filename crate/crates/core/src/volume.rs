//! Core 3D grid types and finite-difference gradients.
//!
//! All voxel data is stored row-major with x fastest: the linear index of
//! voxel (x, y, z) is `x + nx * (y + ny * z)`. Spacing is in millimeters and
//! all derived quantities (distances, gradients) are physical.

use crate::error::{Error, Result};

/// Shared geometry of a voxel grid: dimensions and anisotropic spacing in mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dims: [usize; 3],
    spacing: [f64; 3],
}

impl Grid {
    pub fn new(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidInput(format!(
                "grid dims must be positive, got {dims:?}"
            )));
        }
        if spacing.iter().any(|&s| !s.is_finite() || s <= 0.0) {
            return Err(Error::InvalidInput(format!(
                "grid spacing must be finite and > 0, got {spacing:?}"
            )));
        }
        Ok(Grid { dims, spacing })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    /// Number of voxels.
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        debug_assert!(x < self.dims[0] && y < self.dims[1] && z < self.dims[2]);
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let x = idx % self.dims[0];
        let rest = idx / self.dims[0];
        [x, rest % self.dims[1], rest / self.dims[1]]
    }

    /// True if the signed coordinate triple lies inside the grid.
    #[inline]
    pub fn contains(&self, p: [i64; 3]) -> bool {
        (0..3).all(|a| p[a] >= 0 && (p[a] as usize) < self.dims[a])
    }

    /// Physical position of a voxel center, with voxel (0,0,0) at the origin.
    #[inline]
    pub fn position_mm(&self, p: [usize; 3]) -> [f64; 3] {
        [
            p[0] as f64 * self.spacing[0],
            p[1] as f64 * self.spacing[1],
            p[2] as f64 * self.spacing[2],
        ]
    }

    /// Physical edge lengths of the full grid in mm.
    pub fn extent_mm(&self) -> [f64; 3] {
        [
            self.dims[0] as f64 * self.spacing[0],
            self.dims[1] as f64 * self.spacing[1],
            self.dims[2] as f64 * self.spacing[2],
        ]
    }

    pub(crate) fn check_same(&self, other: &Grid, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "{what}: {:?}/{:?} vs {:?}/{:?}",
                self.dims, self.spacing, other.dims, other.spacing
            )));
        }
        Ok(())
    }
}

/// 3D scalar grid with anisotropic voxel spacing; intensities, distances and
/// angle maps are all carried as `Volume`s.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    grid: Grid,
    data: Vec<f64>,
}

impl Volume {
    pub fn new(grid: Grid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "volume data length {} does not match dims {:?} ({} voxels)",
                data.len(),
                grid.dims(),
                grid.len()
            )));
        }
        Ok(Volume { grid, data })
    }

    pub fn filled(grid: Grid, value: f64) -> Self {
        let n = grid.len();
        Volume {
            grid,
            data: vec![value; n],
        }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for z in 0..grid.dims[2] {
            for y in 0..grid.dims[1] {
                for x in 0..grid.dims[0] {
                    data.push(f(x, y, z));
                }
            }
        }
        Volume { grid, data }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, z: usize) -> f64 {
        self.data[self.grid.index(x, y, z)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, v: f64) {
        let i = self.grid.index(x, y, z);
        self.data[i] = v;
    }
}

/// Per-voxel boolean mask on the same grid layout as [`Volume`].
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    grid: Grid,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(grid: Grid, data: Vec<bool>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "mask data length {} does not match dims {:?}",
                data.len(),
                grid.dims()
            )));
        }
        Ok(Mask { grid, data })
    }

    pub fn filled(grid: Grid, value: bool) -> Self {
        let n = grid.len();
        Mask {
            grid,
            data: vec![value; n],
        }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(usize, usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for z in 0..grid.dims[2] {
            for y in 0..grid.dims[1] {
                for x in 0..grid.dims[0] {
                    data.push(f(x, y, z));
                }
            }
        }
        Mask { grid, data }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [bool] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, z: usize) -> bool {
        self.data[self.grid.index(x, y, z)]
    }

    /// Number of foreground voxels.
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_all_background(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    /// Voxel-wise union, requiring identical grids.
    pub fn union(&self, other: &Mask) -> Result<Mask> {
        self.grid.check_same(&other.grid, "mask union")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a || b)
            .collect();
        Ok(Mask {
            grid: self.grid,
            data,
        })
    }
}

/// Labeled lesion compartments: whole brain, enhancing tumor, peri-lesional
/// region. Tumor and peri are disjoint and contained in the brain.
#[derive(Debug, Clone)]
pub struct RoiSet {
    pub brain: Mask,
    pub tumor: Mask,
    pub peri: Mask,
}

impl RoiSet {
    pub fn new(brain: Mask, tumor: Mask, peri: Mask) -> Result<Self> {
        brain.grid.check_same(&tumor.grid, "roi set brain/tumor")?;
        brain.grid.check_same(&peri.grid, "roi set brain/peri")?;
        for i in 0..brain.data.len() {
            if tumor.data[i] && !brain.data[i] {
                return Err(Error::InvalidInput(
                    "tumor mask extends outside the brain mask".into(),
                ));
            }
            if peri.data[i] && !brain.data[i] {
                return Err(Error::InvalidInput(
                    "peri mask extends outside the brain mask".into(),
                ));
            }
            if tumor.data[i] && peri.data[i] {
                return Err(Error::InvalidInput(
                    "tumor and peri masks overlap".into(),
                ));
            }
        }
        Ok(RoiSet { brain, tumor, peri })
    }

    pub fn grid(&self) -> &Grid {
        self.brain.grid()
    }

    /// Tumor ∪ peri: the lesion whose margin anchors the annular bands.
    pub fn lesion(&self) -> Mask {
        self.tumor.union(&self.peri).expect("same grid by construction")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    #[inline]
    pub fn as_index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Finite-difference gradient along one axis, in intensity per millimeter.
///
/// Central differences at interior voxels, first-order one-sided differences
/// at the two boundary slabs.
pub fn gradient(vol: &Volume, axis: Axis) -> Result<Volume> {
    let a = axis.as_index();
    let dims = vol.grid.dims();
    let n = dims[a];
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "gradient along {axis:?} needs >= 2 voxels, dims are {dims:?}"
        )));
    }
    let s = vol.grid.spacing()[a];
    let stride = match axis {
        Axis::X => 1,
        Axis::Y => dims[0],
        Axis::Z => dims[0] * dims[1],
    };

    let mut out = vec![0.0; vol.data.len()];
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let i = vol.grid.index(x, y, z);
                let pos = [x, y, z][a];
                out[i] = if pos == 0 {
                    (vol.data[i + stride] - vol.data[i]) / s
                } else if pos == n - 1 {
                    (vol.data[i] - vol.data[i - stride]) / s
                } else {
                    (vol.data[i + stride] - vol.data[i - stride]) / (2.0 * s)
                };
            }
        }
    }
    Volume::new(vol.grid, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(d: usize) -> Grid {
        Grid::new([d, d, d], [1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn grid_rejects_bad_spacing() {
        assert!(Grid::new([2, 2, 2], [0.0, 1.0, 1.0]).is_err());
        assert!(Grid::new([2, 2, 2], [f64::NAN, 1.0, 1.0]).is_err());
        assert!(Grid::new([2, 2, 2], [-1.0, 1.0, 1.0]).is_err());
        assert!(Grid::new([0, 2, 2], [1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn volume_length_invariant() {
        let g = grid(2);
        assert!(Volume::new(g, vec![0.0; 7]).is_err());
        assert!(Volume::new(g, vec![0.0; 8]).is_ok());
    }

    #[test]
    fn index_is_x_fastest() {
        let g = Grid::new([3, 4, 5], [1.0, 1.0, 1.0]).unwrap();
        assert_eq!(g.index(1, 0, 0), 1);
        assert_eq!(g.index(0, 1, 0), 3);
        assert_eq!(g.index(0, 0, 1), 12);
        assert_eq!(g.coords(g.index(2, 3, 4)), [2, 3, 4]);
    }

    #[test]
    fn gradient_of_linear_ramp_is_constant() {
        let g = grid(5);
        let vol = Volume::from_fn(g, |x, _, _| 3.0 * x as f64);
        let gx = gradient(&vol, Axis::X).unwrap();
        assert!(gx.data().iter().all(|&v| v == 3.0));
        let gy = gradient(&vol, Axis::Y).unwrap();
        assert!(gy.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let vol = Volume::filled(grid(4), 2.5);
        for axis in Axis::ALL {
            let gr = gradient(&vol, axis).unwrap();
            assert!(gr.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn gradient_of_quadratic_interior() {
        // f(x) = x^2 on x = 0..4, spacing 1: central difference at x=2 is
        // ((3^2 - 1^2) / 2) = 4, exact for quadratics.
        let g = Grid::new([5, 2, 2], [1.0, 1.0, 1.0]).unwrap();
        let vol = Volume::from_fn(g, |x, _, _| (x * x) as f64);
        let gx = gradient(&vol, Axis::X).unwrap();
        assert_eq!(gx.at(2, 0, 0), 4.0);
        // one-sided at the boundaries
        assert_eq!(gx.at(0, 0, 0), 1.0);
        assert_eq!(gx.at(4, 0, 0), 7.0);
    }

    #[test]
    fn gradient_respects_spacing() {
        let g = Grid::new([5, 2, 2], [2.0, 1.0, 1.0]).unwrap();
        let vol = Volume::from_fn(g, |x, _, _| x as f64); // 1 unit per voxel = 0.5 per mm
        let gx = gradient(&vol, Axis::X).unwrap();
        assert!(gx.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn gradient_needs_two_voxels() {
        let g = Grid::new([1, 4, 4], [1.0, 1.0, 1.0]).unwrap();
        let vol = Volume::filled(g, 0.0);
        assert!(gradient(&vol, Axis::X).is_err());
        assert!(gradient(&vol, Axis::Y).is_ok());
    }

    #[test]
    fn gradient_is_linear() {
        // gradient(a*f + b*g) == a*gradient(f) + b*gradient(g)
        let g = grid(6);
        let f = Volume::from_fn(g, |x, y, z| (x * y) as f64 + (z as f64).sin());
        let h = Volume::from_fn(g, |x, y, z| (x + 2 * y + 3 * z) as f64 * 0.25);
        let (a, b) = (2.5, -1.25);
        let combo = Volume::new(
            g,
            f.data()
                .iter()
                .zip(h.data())
                .map(|(&fv, &hv)| a * fv + b * hv)
                .collect(),
        )
        .unwrap();
        for axis in Axis::ALL {
            let lhs = gradient(&combo, axis).unwrap();
            let gf = gradient(&f, axis).unwrap();
            let gh = gradient(&h, axis).unwrap();
            for i in 0..lhs.data().len() {
                let rhs = a * gf.data()[i] + b * gh.data()[i];
                assert!((lhs.data()[i] - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn roi_set_validates_containment() {
        let g = grid(4);
        let brain = Mask::from_fn(g, |x, _, _| x < 3);
        let tumor = Mask::from_fn(g, |x, _, _| x == 0);
        let peri = Mask::from_fn(g, |x, _, _| x == 1);
        assert!(RoiSet::new(brain.clone(), tumor.clone(), peri.clone()).is_ok());

        let outside = Mask::from_fn(g, |x, _, _| x == 3);
        assert!(RoiSet::new(brain.clone(), outside, peri.clone()).is_err());
        assert!(RoiSet::new(brain, tumor.clone(), tumor).is_err());
    }
}
