//! Middlebury `.flo` container and random 3×3 patch extraction.
//!
//! A `.flo` file is a 12-byte header (magic float `202021.25`, width, height,
//! all little-endian) followed by `height * width` interleaved `(u, v)` pairs of
//! little-endian `f32`, row-major.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FLO_MAGIC: f32 = 202021.25;
pub const MAX_SIDE: usize = 100_000;
/// Flow magnitude above which a pixel is treated as an invalid-flow sentinel.
pub const DEFAULT_SENTINEL_CUTOFF: f32 = 1e9;

const HEADER_LEN: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum FlowIoError {
    #[error("bad magic number {0}, expected 202021.25")]
    BadMagic(f32),
    #[error("truncated flow file: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("non-positive or oversized dimensions {width}x{height}")]
    NonPositiveDims { width: i64, height: i64 },
    #[error("non-finite flow value at pixel {index}")]
    NonFinite { index: usize },
    #[error("data length {len} does not match {width}x{height}")]
    ShapeMismatch {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error("no field has a valid 3x3 anchor")]
    NoValidAnchors,
    #[error("patch count must be at least 1")]
    ZeroCount,
}

/// A dense grid of 2D flow vectors in pixels per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    data: Vec<[f32; 2]>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, data: Vec<[f32; 2]>) -> Result<Self, FlowIoError> {
        if width == 0 || height == 0 || width > MAX_SIDE || height > MAX_SIDE {
            return Err(FlowIoError::NonPositiveDims {
                width: width as i64,
                height: height as i64,
            });
        }
        if data.len() != width * height {
            return Err(FlowIoError::ShapeMismatch {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds a field by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f32; 2],
    ) -> Result<Self, FlowIoError> {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[[f32; 2]] {
        &self.data
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> [f32; 2] {
        self.data[row * self.width + col]
    }
}

/// Where a patch came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Field { source: usize, row: usize, col: usize },
    Synthetic(String),
}

/// A 3×3 flow patch as `(u1..u9, v1..v9)`; pixels are numbered column-major,
/// so indices 1..3 are the first column from top to bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPatch {
    pub vec: [f64; 18],
    pub provenance: Provenance,
}

impl RawPatch {
    pub fn new(vec: [f64; 18], provenance: Provenance) -> Self {
        Self { vec, provenance }
    }

    pub fn synthetic(vec: [f64; 18], tag: &str) -> Self {
        Self::new(vec, Provenance::Synthetic(tag.to_owned()))
    }

    pub fn u(&self) -> &[f64] {
        &self.vec[..9]
    }

    pub fn v(&self) -> &[f64] {
        &self.vec[9..]
    }
}

/// Index of grid pixel `(row, col)` in the column-major patch layout.
#[inline]
pub fn pixel_index(row: usize, col: usize) -> usize {
    col * 3 + row
}

pub fn read_flo(bytes: &[u8]) -> Result<FlowField, FlowIoError> {
    if bytes.len() < HEADER_LEN {
        return Err(FlowIoError::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let word = |i: usize| -> [u8; 4] { bytes[i..i + 4].try_into().expect("4-byte slice") };
    let magic = f32::from_le_bytes(word(0));
    if magic != FLO_MAGIC {
        return Err(FlowIoError::BadMagic(magic));
    }
    let width = i32::from_le_bytes(word(4)) as i64;
    let height = i32::from_le_bytes(word(8)) as i64;
    if width <= 0 || height <= 0 || width > MAX_SIDE as i64 || height > MAX_SIDE as i64 {
        return Err(FlowIoError::NonPositiveDims { width, height });
    }
    let (width, height) = (width as usize, height as usize);
    let expected = HEADER_LEN + width * height * 8;
    if bytes.len() < expected {
        return Err(FlowIoError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    let data = bytes[HEADER_LEN..expected]
        .chunks_exact(8)
        .enumerate()
        .map(|(index, px)| {
            let u = f32::from_le_bytes(px[..4].try_into().expect("4-byte slice"));
            let v = f32::from_le_bytes(px[4..].try_into().expect("4-byte slice"));
            if u.is_finite() && v.is_finite() {
                Ok([u, v])
            } else {
                Err(FlowIoError::NonFinite { index })
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    FlowField::new(width, height, data)
}

pub fn write_flo(field: &FlowField) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + field.data.len() * 8);
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&(field.width as i32).to_le_bytes());
    out.extend_from_slice(&(field.height as i32).to_le_bytes());
    for [u, v] in &field.data {
        out.extend_from_slice(&u.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn extract_patch(field: &FlowField, source: usize, row: usize, col: usize) -> RawPatch {
    let mut vec = [0.0; 18];
    for dr in 0..3 {
        for dc in 0..3 {
            let [u, v] = field.at(row + dr, col + dc);
            let i = pixel_index(dr, dc);
            vec[i] = u as f64;
            vec[9 + i] = v as f64;
        }
    }
    RawPatch::new(vec, Provenance::Field { source, row, col })
}

fn anchor_is_valid(field: &FlowField, row: usize, col: usize, cutoff: f32) -> bool {
    (0..3).all(|dr| {
        (0..3).all(|dc| {
            let [u, v] = field.at(row + dr, col + dc);
            u.abs() <= cutoff && v.abs() <= cutoff
        })
    })
}

/// Draws `n` patches with replacement, uniformly over all valid top-left anchors
/// of all fields, using the default sentinel cutoff.
pub fn sample_patches(
    fields: &[FlowField],
    n: usize,
    seed: u64,
) -> Result<Vec<RawPatch>, FlowIoError> {
    sample_patches_with_cutoff(fields, n, seed, DEFAULT_SENTINEL_CUTOFF)
}

/// As [`sample_patches`], dropping anchors whose window contains a flow
/// component of magnitude above `cutoff`.
pub fn sample_patches_with_cutoff(
    fields: &[FlowField],
    n: usize,
    seed: u64,
    cutoff: f32,
) -> Result<Vec<RawPatch>, FlowIoError> {
    if n == 0 {
        return Err(FlowIoError::ZeroCount);
    }
    // (field, anchors along rows, anchors along cols, cumulative anchor count)
    let mut table = Vec::new();
    let mut total = 0usize;
    for (i, f) in fields.iter().enumerate() {
        if f.width < 3 || f.height < 3 {
            continue;
        }
        let (ar, ac) = (f.height - 2, f.width - 2);
        let any_valid = (0..ar).any(|r| (0..ac).any(|c| anchor_is_valid(f, r, c, cutoff)));
        if !any_valid {
            continue;
        }
        total += ar * ac;
        table.push((i, ar, ac, total));
    }
    if table.is_empty() {
        return Err(FlowIoError::NoValidAnchors);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        // Rejection over geometric anchors keeps the draw uniform over valid ones.
        let k = rng.random_range(0..total);
        let slot = table.partition_point(|&(_, _, _, cum)| cum <= k);
        let (fi, ar, ac, cum) = table[slot];
        let local = k - (cum - ar * ac);
        let (row, col) = (local / ac, local % ac);
        let field = &fields[fi];
        if anchor_is_valid(field, row, col, cutoff) {
            out.push(extract_patch(field, fi, row, col));
        }
    }
    Ok(out)
}
