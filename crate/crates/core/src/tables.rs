//! Tabular exchange formats: patch sets (18 columns), DCT coefficient sets
//! (16 columns) and point clouds, as CSV with a header row or as JSON.
//!
//! Floats are written in shortest round-trip form, so write → read is exact.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, PointCloud};

#[derive(Debug, Error)]
pub enum TableError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("row {row} has {found} columns, expected {expected}")]
    Width { row: usize, expected: usize, found: usize },
    #[error("row {row}, column {col}: cannot parse {value:?} as a finite number")]
    Parse { row: usize, col: usize, value: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// `u1..u9,v1..v9`, pixels column-major.
pub fn patch_header() -> Vec<String> {
    (1..=9).map(|i| format!("u{i}")).chain((1..=9).map(|i| format!("v{i}"))).collect()
}

/// `cu1..cu8,cv1..cv8`: D-orthonormal DCT coordinates of the u and v halves.
pub fn coefficient_header() -> Vec<String> {
    (1..=8).map(|i| format!("cu{i}")).chain((1..=8).map(|i| format!("cv{i}"))).collect()
}

fn write_rows<'a>(header: &[String], rows: impl IntoIterator<Item = &'a [f64]>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row.iter().map(|x| x.to_string())).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

fn read_rows(text: &str, width: usize) -> Result<Vec<Vec<f64>>, TableError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = r.headers()?.len();
    if header != width {
        return Err(TableError::Width { row: 0, expected: width, found: header });
    }
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != width {
            return Err(TableError::Width { row: row + 1, expected: width, found: rec.len() });
        }
        let vals = rec
            .iter()
            .enumerate()
            .map(|(col, s)| match s.trim().parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(TableError::Parse { row: row + 1, col, value: s.to_string() }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push(vals);
    }
    Ok(out)
}

fn fixed<const N: usize>(rows: Vec<Vec<f64>>) -> Vec<[f64; N]> {
    rows.into_iter().map(|r| r.try_into().expect("width checked")).collect()
}

pub fn patches_to_csv(patches: &[[f64; 18]]) -> String {
    write_rows(&patch_header(), patches.iter().map(|p| &p[..]))
}

pub fn patches_from_csv(text: &str) -> Result<Vec<[f64; 18]>, TableError> {
    Ok(fixed(read_rows(text, 18)?))
}

/// JSON array of 18-arrays.
pub fn patches_to_json(patches: &[[f64; 18]]) -> String {
    serde_json::to_string(patches).expect("finite floats")
}

pub fn patches_from_json(text: &str) -> Result<Vec<[f64; 18]>, TableError> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(text)?;
    for (row, r) in rows.iter().enumerate() {
        if r.len() != 18 {
            return Err(TableError::Width { row, expected: 18, found: r.len() });
        }
    }
    Ok(fixed(rows))
}

pub fn coefficients_to_csv(coeffs: &[[f64; 16]]) -> String {
    write_rows(&coefficient_header(), coeffs.iter().map(|c| &c[..]))
}

pub fn coefficients_from_csv(text: &str) -> Result<Vec<[f64; 16]>, TableError> {
    Ok(fixed(read_rows(text, 16)?))
}

/// `id,x0,x1,…`; ids are the points' stable identities.
pub fn cloud_to_csv(cloud: &PointCloud) -> String {
    let header: Vec<String> =
        std::iter::once("id".to_string()).chain((0..cloud.dim()).map(|i| format!("x{i}"))).collect();
    let rows: Vec<Vec<f64>> = cloud
        .ids()
        .iter()
        .zip(cloud.points())
        .map(|(&id, p)| std::iter::once(id as f64).chain(p.iter().copied()).collect())
        .collect();
    write_rows(&header, rows.iter().map(|r| &r[..]))
}

pub fn cloud_from_csv(text: &str) -> Result<PointCloud, TableError> {
    let width = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes())
        .headers()?
        .len();
    let rows = read_rows(text, width)?;
    let mut ids = Vec::with_capacity(rows.len());
    let mut points = Vec::with_capacity(rows.len());
    for (row, r) in rows.into_iter().enumerate() {
        let id = r[0];
        if id < 0.0 || id.fract() != 0.0 {
            return Err(TableError::Parse { row: row + 1, col: 0, value: id.to_string() });
        }
        ids.push(id as usize);
        points.push(r[1..].to_vec());
    }
    Ok(PointCloud::with_ids(points, ids)?)
}

/// A cloud with free-form shape metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudDocument {
    pub shape: String,
    pub dim: usize,
    pub ids: Vec<usize>,
    pub points: Vec<Vec<f64>>,
}

impl CloudDocument {
    pub fn new(shape: &str, cloud: &PointCloud) -> Self {
        Self {
            shape: shape.to_string(),
            dim: cloud.dim(),
            ids: cloud.ids().to_vec(),
            points: cloud.points().to_vec(),
        }
    }

    pub fn into_cloud(self) -> Result<PointCloud, TableError> {
        Ok(PointCloud::with_ids(self.points, self.ids)?)
    }
}
