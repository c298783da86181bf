use std::collections::HashMap;

use super::filtration::Filtration;
use crate::field::PrimeField;

/// Sparse column over Z/p: `(row, nonzero coefficient)` sorted by row.
pub(crate) type Column = Vec<(usize, u32)>;

/// `target -= factor * source`, both sorted by row.
pub(crate) fn sub_scaled(target: &mut Column, source: &[(usize, u32)], factor: u32, field: &PrimeField) {
    let mut out = Vec::with_capacity(target.len() + source.len());
    let (mut a, mut b) = (0, 0);
    while a < target.len() || b < source.len() {
        let ra = target.get(a).map_or(usize::MAX, |e| e.0);
        let rb = source.get(b).map_or(usize::MAX, |e| e.0);
        if ra < rb {
            out.push(target[a]);
            a += 1;
        } else if rb < ra {
            out.push((rb, field.neg(field.mul(factor, source[b].1))));
            b += 1;
        } else {
            let v = field.sub(target[a].1, field.mul(factor, source[b].1));
            if v != 0 {
                out.push((ra, v));
            }
            a += 1;
            b += 1;
        }
    }
    *target = out;
}

/// Signed boundary columns of every simplex, rows indexed by filtration position.
pub(crate) fn boundary_columns(filt: &Filtration, field: &PrimeField) -> Vec<Column> {
    let index: HashMap<&[u32], usize> = filt
        .simplices()
        .iter()
        .enumerate()
        .map(|(i, s)| (s.vertices.as_slice(), i))
        .collect();
    filt.simplices()
        .iter()
        .map(|s| {
            if s.dim() == 0 {
                return Vec::new();
            }
            let mut col: Column = s
                .faces()
                .enumerate()
                .map(|(i, face)| {
                    let row = index[face.as_slice()];
                    let sign = if i % 2 == 0 { 1 } else { field.neg(1) };
                    (row, sign)
                })
                .collect();
            col.sort_unstable_by_key(|e| e.0);
            col
        })
        .collect()
}

/// Which reduction strategy to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Left-to-right column additions in filtration order.
    Standard,
    /// Dimensions processed top-down; columns known to be paired births are
    /// zeroed without reduction.
    #[default]
    Clearing,
}

/// Result of reducing a boundary matrix: which simplex kills which.
#[derive(Debug, Clone, PartialEq)]
pub struct Pairing {
    /// `(birth simplex, death simplex)` positions in the filtration.
    pub pairs: Vec<(usize, usize)>,
    /// Positive simplices that are never paired.
    pub essential: Vec<usize>,
}

pub fn reduce(filt: &Filtration, field: &PrimeField, algorithm: Algorithm) -> Pairing {
    let mut cols = boundary_columns(filt, field);
    let n = cols.len();
    let mut pivot_of: Vec<Option<usize>> = vec![None; n];
    let mut is_death = vec![false; n];

    let reduce_column = |j: usize, cols: &mut Vec<Column>, pivot_of: &mut Vec<Option<usize>>| {
        let mut col = std::mem::take(&mut cols[j]);
        while let Some(&(low, coeff)) = col.last() {
            match pivot_of[low] {
                Some(i) => {
                    let src = &cols[i];
                    let src_coeff = src.last().expect("pivot column is nonzero").1;
                    let factor = field.mul(coeff, field.inv(src_coeff));
                    sub_scaled(&mut col, src, factor, field);
                }
                None => {
                    pivot_of[low] = Some(j);
                    break;
                }
            }
        }
        let nonzero = !col.is_empty();
        cols[j] = col;
        nonzero
    };

    match algorithm {
        Algorithm::Standard => {
            for j in 0..n {
                if reduce_column(j, &mut cols, &mut pivot_of) {
                    is_death[j] = true;
                }
            }
        }
        Algorithm::Clearing => {
            let dims: Vec<usize> = filt.simplices().iter().map(|s| s.dim()).collect();
            let mut cleared = vec![false; n];
            for d in (1..=filt.max_dim()).rev() {
                for j in 0..n {
                    if dims[j] != d || cleared[j] {
                        continue;
                    }
                    if reduce_column(j, &mut cols, &mut pivot_of) {
                        is_death[j] = true;
                        let low = cols[j].last().expect("nonzero").0;
                        cleared[low] = true;
                        cols[low].clear();
                    }
                }
            }
        }
    }

    let mut pairs = Vec::new();
    let mut is_birth = vec![false; n];
    for (low, owner) in pivot_of.iter().enumerate() {
        if let Some(j) = owner {
            pairs.push((low, *j));
            is_birth[low] = true;
        }
    }
    pairs.sort_unstable();
    let essential = (0..n).filter(|&i| !is_birth[i] && !is_death[i]).collect();
    Pairing { pairs, essential }
}
