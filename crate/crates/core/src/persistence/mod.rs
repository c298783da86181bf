//! Vietoris–Rips and lazy witness filtrations, persistent homology over Z/p by
//! boundary-matrix reduction, and an independent Betti-number oracle.

mod export;
mod filtration;
mod oracle;
mod reduction;
mod signature;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldError, PrimeField};

pub use export::{barcode_from_json, barcode_to_json, diagram_csv, diagram_svg};
pub use filtration::{
    clique_filtration, filtration_order, lazy_witness_edge_scales, lazy_witness_filtration,
    vr_filtration, vr_filtration_capped, Filtration, Simplex, DEFAULT_SIMPLEX_CAP,
};
pub use oracle::oracle_betti;
pub use reduction::{reduce, Algorithm, Pairing};
pub(crate) use reduction::{sub_scaled, Column};
pub use signature::{betti_signature, SignatureReport, DEFAULT_PERSISTENCE_RATIO};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PersistenceError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("filtration would exceed {cap} simplices (reached {reached}); reduce points or r_max")]
    SizeExplosion { cap: usize, reached: usize },
    #[error("scale {0} must be positive and finite")]
    InvalidScale(f64),
    #[error("no witnesses supplied")]
    NoWitnesses,
    #[error("witness complexes need at least 2 landmarks, got {0}")]
    TooFewLandmarks(usize),
    #[error("nu = {nu} exceeds the landmark count {n_landmarks}")]
    InvalidWitnessParameter { nu: usize, n_landmarks: usize },
    #[error("invalid filtration: {0}")]
    InvalidFiltration(String),
}

/// A persistence interval `[birth, death)`; `death = None` means it never dies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub dim: usize,
    pub birth: f64,
    pub death: Option<f64>,
}

impl Interval {
    pub fn contains(&self, r: f64) -> bool {
        self.birth <= r && self.death.is_none_or(|d| r < d)
    }

    /// Length, with an infinite interval truncated at `r_max`.
    pub fn length(&self, r_max: f64) -> f64 {
        self.death.unwrap_or(r_max) - self.birth
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Barcode {
    pub intervals: Vec<Interval>,
    pub prime: u32,
    pub max_dim: usize,
    pub r_max: f64,
}

impl Barcode {
    pub fn in_dim(&self, dim: usize) -> impl Iterator<Item = &Interval> {
        self.intervals.iter().filter(move |iv| iv.dim == dim)
    }

    /// Betti numbers at scale `r` for dimensions `0..=max_dim`.
    pub fn betti_at(&self, r: f64) -> Vec<usize> {
        let mut out = vec![0; self.max_dim + 1];
        for iv in self.intervals.iter().filter(|iv| iv.contains(r)) {
            out[iv.dim] += 1;
        }
        out
    }

    /// Longest interval in `dim`, by truncated length.
    pub fn dominant(&self, dim: usize) -> Option<Interval> {
        self.in_dim(dim)
            .copied()
            .max_by(|a, b| a.length(self.r_max).total_cmp(&b.length(self.r_max)))
    }
}

/// Converts a reduction result into intervals, dropping zero-length ones.
pub fn barcode_from_pairing(filt: &Filtration, pairing: &Pairing, prime: u32) -> Barcode {
    let s = filt.simplices();
    let mut intervals: Vec<Interval> = pairing
        .pairs
        .iter()
        .filter(|&&(b, d)| s[d].scale > s[b].scale)
        .map(|&(b, d)| Interval {
            dim: s[b].dim(),
            birth: s[b].scale,
            death: Some(s[d].scale),
        })
        .chain(pairing.essential.iter().map(|&b| Interval {
            dim: s[b].dim(),
            birth: s[b].scale,
            death: None,
        }))
        .collect();
    intervals.sort_by(|a, b| {
        a.dim
            .cmp(&b.dim)
            .then(a.birth.total_cmp(&b.birth))
            .then(
                a.death
                    .unwrap_or(f64::INFINITY)
                    .total_cmp(&b.death.unwrap_or(f64::INFINITY)),
            )
    });
    Barcode {
        intervals,
        prime,
        max_dim: filt.max_dim(),
        r_max: filt.r_max(),
    }
}

/// Barcode of `filt` over Z/p using the clearing reduction.
pub fn persistent_homology(filt: &Filtration, p: u64) -> Result<Barcode, PersistenceError> {
    persistent_homology_with(filt, p, Algorithm::Clearing)
}

pub fn persistent_homology_with(
    filt: &Filtration,
    p: u64,
    algorithm: Algorithm,
) -> Result<Barcode, PersistenceError> {
    let field = PrimeField::new(p)?;
    let pairing = reduce(filt, &field, algorithm);
    Ok(barcode_from_pairing(filt, &pairing, field.prime()))
}
