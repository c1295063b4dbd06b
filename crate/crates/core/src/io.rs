//! Volume container I/O.
//!
//! A dataset on disk is a pair of files sharing a base name: `<name>.volhdr`,
//! a JSON sidecar describing geometry and element type, and `<name>.volraw`,
//! the raw little-endian payload. Scalar volumes use dtype `f32` or `f64`,
//! masks and band labels use `u8`, and displacement fields carry
//! `channels: 3` with the component axis innermost (the three components of
//! a voxel are contiguous, voxels ordered x-fastest).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::deform::DeformationField;
use crate::error::{Error, Result};
use crate::volume::{Grid, Mask, Volume};

pub const ORDER: &str = "xyz-row-major";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
    U8,
}

impl Dtype {
    fn name(self) -> &'static str {
        match self {
            Dtype::F32 => "f32",
            Dtype::F64 => "f64",
            Dtype::U8 => "u8",
        }
    }

    fn byte_width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
            Dtype::U8 => 1,
        }
    }

    fn parse(s: &str) -> Option<Dtype> {
        match s {
            "f32" => Some(Dtype::F32),
            "f64" => Some(Dtype::F64),
            "u8" => Some(Dtype::U8),
            _ => None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    dims: [usize; 3],
    spacing: [f64; 3],
    dtype: String,
    order: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    channels: Option<u32>,
}

/// Strip a trailing `.volhdr` / `.volraw` so callers may pass either file or
/// the bare base name.
fn base_path(path: &Path) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("volhdr") | Some("volraw") => path.with_extension(""),
        _ => path.to_path_buf(),
    }
}

fn header_path(path: &Path) -> PathBuf {
    let mut p = base_path(path).into_os_string();
    p.push(".volhdr");
    PathBuf::from(p)
}

fn raw_path(path: &Path) -> PathBuf {
    let mut p = base_path(path).into_os_string();
    p.push(".volraw");
    PathBuf::from(p)
}

fn read_header(path: &Path) -> Result<(Header, PathBuf)> {
    let hpath = header_path(path);
    let text = fs::read_to_string(&hpath).map_err(|e| Error::io(&hpath, e))?;
    let header: Header =
        serde_json::from_str(&text).map_err(|e| Error::format(&hpath, e.to_string()))?;
    if header.order != ORDER {
        return Err(Error::format(
            &hpath,
            format!("unsupported order {:?}, expected {ORDER:?}", header.order),
        ));
    }
    Ok((header, hpath))
}

fn header_grid(header: &Header, hpath: &Path) -> Result<Grid> {
    Grid::new(header.dims, header.spacing).map_err(|e| Error::format(hpath, e.to_string()))
}

fn read_payload(path: &Path, expected_bytes: usize) -> Result<Vec<u8>> {
    let rpath = raw_path(path);
    let bytes = fs::read(&rpath).map_err(|e| Error::io(&rpath, e))?;
    if bytes.len() != expected_bytes {
        return Err(Error::SizeMismatch {
            path: rpath,
            expected: expected_bytes,
            actual: bytes.len(),
        });
    }
    Ok(bytes)
}

fn write_pair(path: &Path, header: &Header, payload: &[u8]) -> Result<()> {
    let hpath = header_path(path);
    let text = serde_json::to_string_pretty(header).expect("header serializes");
    fs::write(&hpath, text + "\n").map_err(|e| Error::io(&hpath, e))?;
    let rpath = raw_path(path);
    fs::write(&rpath, payload).map_err(|e| Error::io(&rpath, e))
}

fn decode_scalars(dtype: Dtype, bytes: &[u8]) -> Vec<f64> {
    match dtype {
        Dtype::F32 => bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        Dtype::F64 => bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        Dtype::U8 => bytes.iter().map(|&b| b as f64).collect(),
    }
}

fn encode_scalars(dtype: Dtype, values: &[f64]) -> Vec<u8> {
    match dtype {
        Dtype::F32 => values
            .iter()
            .flat_map(|&v| (v as f32).to_le_bytes())
            .collect(),
        Dtype::F64 => values.iter().flat_map(|&v| v.to_le_bytes()).collect(),
        Dtype::U8 => values.iter().map(|&v| v as u8).collect(),
    }
}

/// Write a scalar volume; `dtype` must be `F32` or `F64`.
pub fn write_volume(path: impl AsRef<Path>, vol: &Volume, dtype: Dtype) -> Result<()> {
    if dtype == Dtype::U8 {
        return Err(Error::InvalidInput(
            "scalar volumes store f32 or f64; u8 is reserved for masks and labels".into(),
        ));
    }
    let header = Header {
        dims: vol.grid().dims(),
        spacing: vol.grid().spacing(),
        dtype: dtype.name().into(),
        order: ORDER.into(),
        channels: None,
    };
    write_pair(path.as_ref(), &header, &encode_scalars(dtype, vol.data()))
}

pub fn load_volume(path: impl AsRef<Path>) -> Result<Volume> {
    let path = path.as_ref();
    let (header, hpath) = read_header(path)?;
    let grid = header_grid(&header, &hpath)?;
    if header.channels.is_some() {
        return Err(Error::format(
            &hpath,
            "multi-channel file; use load_field for displacement fields",
        ));
    }
    let dtype = Dtype::parse(&header.dtype)
        .filter(|d| *d != Dtype::U8)
        .ok_or_else(|| {
            Error::format(&hpath, format!("volume dtype must be f32/f64, got {:?}", header.dtype))
        })?;
    let bytes = read_payload(path, grid.len() * dtype.byte_width())?;
    Volume::new(grid, decode_scalars(dtype, &bytes))
}

pub fn write_mask(path: impl AsRef<Path>, mask: &Mask) -> Result<()> {
    let header = Header {
        dims: mask.grid().dims(),
        spacing: mask.grid().spacing(),
        dtype: Dtype::U8.name().into(),
        order: ORDER.into(),
        channels: None,
    };
    let payload: Vec<u8> = mask.data().iter().map(|&b| b as u8).collect();
    write_pair(path.as_ref(), &header, &payload)
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let path = path.as_ref();
    let (header, hpath) = read_header(path)?;
    let grid = header_grid(&header, &hpath)?;
    if header.dtype != "u8" {
        return Err(Error::format(
            &hpath,
            format!("mask dtype must be u8, got {:?}", header.dtype),
        ));
    }
    let bytes = read_payload(path, grid.len())?;
    let mut data = Vec::with_capacity(bytes.len());
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            0 => data.push(false),
            1 => data.push(true),
            other => {
                return Err(Error::format(
                    &hpath,
                    format!("mask voxel {i} has value {other}, expected 0 or 1"),
                ))
            }
        }
    }
    Mask::new(grid, data)
}

/// Write integer labels (band indices 0..=m) as a u8 volume.
pub fn write_labels(path: impl AsRef<Path>, grid: &Grid, labels: &[u8]) -> Result<()> {
    if labels.len() != grid.len() {
        return Err(Error::InvalidInput(format!(
            "label data length {} does not match dims {:?}",
            labels.len(),
            grid.dims()
        )));
    }
    let header = Header {
        dims: grid.dims(),
        spacing: grid.spacing(),
        dtype: Dtype::U8.name().into(),
        order: ORDER.into(),
        channels: None,
    };
    write_pair(path.as_ref(), &header, labels)
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<(Grid, Vec<u8>)> {
    let path = path.as_ref();
    let (header, hpath) = read_header(path)?;
    let grid = header_grid(&header, &hpath)?;
    if header.dtype != "u8" {
        return Err(Error::format(
            &hpath,
            format!("label dtype must be u8, got {:?}", header.dtype),
        ));
    }
    let bytes = read_payload(path, grid.len())?;
    Ok((grid, bytes))
}

/// Write a displacement field as a 3-channel file, components interleaved
/// per voxel.
pub fn write_field(path: impl AsRef<Path>, field: &DeformationField, dtype: Dtype) -> Result<()> {
    if dtype == Dtype::U8 {
        return Err(Error::InvalidInput(
            "displacement fields store f32 or f64 components".into(),
        ));
    }
    let header = Header {
        dims: field.grid().dims(),
        spacing: field.grid().spacing(),
        dtype: dtype.name().into(),
        order: ORDER.into(),
        channels: Some(3),
    };
    let flat: Vec<f64> = field.data().iter().flatten().copied().collect();
    write_pair(path.as_ref(), &header, &encode_scalars(dtype, &flat))
}

pub fn load_field(path: impl AsRef<Path>) -> Result<DeformationField> {
    let path = path.as_ref();
    let (header, hpath) = read_header(path)?;
    let grid = header_grid(&header, &hpath)?;
    match header.channels {
        Some(3) => {}
        other => {
            return Err(Error::format(
                &hpath,
                format!("displacement field must declare channels: 3, got {other:?}"),
            ))
        }
    }
    let dtype = Dtype::parse(&header.dtype)
        .filter(|d| *d != Dtype::U8)
        .ok_or_else(|| {
            Error::format(&hpath, format!("field dtype must be f32/f64, got {:?}", header.dtype))
        })?;
    let bytes = read_payload(path, grid.len() * 3 * dtype.byte_width())?;
    let flat = decode_scalars(dtype, &bytes);
    let data: Vec<[f64; 3]> = flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    DeformationField::new(grid, data)
}
