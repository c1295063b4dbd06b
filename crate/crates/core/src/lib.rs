//! Volumetric radiomics for tumor field effect: deformation-heterogeneity
//! statistics over annular bands of normal parenchyma, gradient-orientation
//! co-occurrence texture inside lesion compartments, and LASSO-Cox survival
//! modeling over the resulting feature tables.
//!
//! The crate is organized around a small set of immutable grid types
//! ([`Volume`], [`Mask`], [`DeformationField`]) and pure functions over them;
//! everything downstream of the voxel grids (feature tables, survival models)
//! lives in [`features`] and [`survival`].

pub mod bands;
pub mod collage;
pub mod deform;
pub mod descriptor;
pub mod error;
pub mod features;
pub mod io;
pub mod survival;
pub mod synth;
pub mod volume;

pub use bands::{build_bands, distance_transform, first_order, BandPartition, FirstOrderStats};
pub use collage::{collage_features, CollageConfig, CoocMatrix, HaralickVector, OrientationMaps};
pub use deform::{deformation_features, magnitude, DeformationField};
pub use error::{Error, Result};
pub use features::{FeatureTable, FeatureVector};
pub use volume::{gradient, Axis, Grid, Mask, RoiSet, Volume};
