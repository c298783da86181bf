use std::collections::{BTreeMap, HashMap};

use super::ZigzagError;
use crate::field::{FpMatrix, PrimeField};
use crate::geometry::{distance_matrix, PointCloud};
use crate::persistence::{sub_scaled, vr_filtration, Column};

/// A finite simplicial complex on global vertex ids, simplices sorted by
/// dimension and then lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct Complex {
    simplices: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    max_dim: usize,
}

impl Complex {
    /// Builds a complex from an explicit list. Vertex lists are sorted,
    /// duplicates merged, and every face must be present.
    pub fn from_simplices(
        simplices: impl IntoIterator<Item = Vec<u32>>,
        max_dim: usize,
    ) -> Result<Self, ZigzagError> {
        let mut list: Vec<Vec<u32>> = simplices
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        if let Some(s) = list.iter().find(|s| s.is_empty() || s.len() > max_dim + 1) {
            return Err(ZigzagError::InvalidComplex(format!(
                "simplex {s:?} is empty or above dimension {max_dim}"
            )));
        }
        list.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        list.dedup();
        let complex = Self::from_sorted(list, max_dim);
        for s in complex.simplices.iter().filter(|s| s.len() > 1) {
            for face in faces(s) {
                if !complex.contains(&face) {
                    return Err(ZigzagError::InvalidComplex(format!(
                        "face {face:?} of {s:?} is missing"
                    )));
                }
            }
        }
        Ok(complex)
    }

    fn from_sorted(simplices: Vec<Vec<u32>>, max_dim: usize) -> Self {
        let index = simplices
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Self {
            simplices,
            index,
            max_dim,
        }
    }

    /// Vietoris–Rips complex of `cloud` at scale `r` up to `max_dim`, with
    /// vertices labelled by the cloud's ids.
    pub fn vietoris_rips(cloud: &PointCloud, r: f64, max_dim: usize) -> Result<Self, ZigzagError> {
        let ids: Vec<u32> = cloud
            .ids()
            .iter()
            .map(|&id| u32::try_from(id).map_err(|_| ZigzagError::IdOverflow(id)))
            .collect::<Result<_, _>>()?;
        let filt = vr_filtration(&distance_matrix(cloud), r, max_dim)?;
        let mut list: Vec<Vec<u32>> = filt
            .simplices()
            .iter()
            .map(|s| {
                let mut v: Vec<u32> = s.vertices.iter().map(|&l| ids[l as usize]).collect();
                v.sort_unstable();
                v
            })
            .collect();
        list.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        Ok(Self::from_sorted(list, max_dim))
    }

    pub fn simplices(&self) -> &[Vec<u32>] {
        &self.simplices
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn max_dim(&self) -> usize {
        self.max_dim
    }

    pub fn contains(&self, simplex: &[u32]) -> bool {
        self.index.contains_key(simplex)
    }

    /// First simplex of `self` missing from `other`, if any.
    pub fn first_missing_from(&self, other: &Complex) -> Option<&[u32]> {
        self.simplices
            .iter()
            .find(|s| !other.contains(s))
            .map(Vec::as_slice)
    }

    pub fn is_subcomplex_of(&self, other: &Complex) -> bool {
        self.first_missing_from(other).is_none()
    }

    pub fn count_by_dim(&self) -> Vec<usize> {
        let mut out = vec![0; self.max_dim + 1];
        for s in &self.simplices {
            out[s.len() - 1] += 1;
        }
        out
    }

    fn of_dim(&self, k: usize) -> &[Vec<u32>] {
        let lo = self.simplices.partition_point(|s| s.len() < k + 1);
        let hi = self.simplices.partition_point(|s| s.len() < k + 2);
        &self.simplices[lo..hi]
    }
}

fn faces(s: &[u32]) -> impl Iterator<Item = Vec<u32>> + '_ {
    (0..s.len()).map(move |skip| {
        s.iter()
            .enumerate()
            .filter(|&(i, _)| i != skip)
            .map(|(_, &v)| v)
            .collect()
    })
}

/// A chain: simplices with nonzero coefficients.
pub type Chain = Vec<(Vec<u32>, u32)>;

/// A basis of `H_k(K; Z/p)` with explicit cycle representatives.
#[derive(Debug, Clone)]
pub struct HomologyBasis<'a> {
    complex: &'a Complex,
    dim: usize,
    field: PrimeField,
    representatives: Vec<Chain>,
    /// Position of each `k`-simplex among the `k`-simplices.
    k_index: HashMap<&'a [u32], usize>,
    /// Spanning set of the cycles keyed by largest row. `Some(i)` marks
    /// representative `i`, `None` a boundary.
    pivots: HashMap<usize, (Column, Option<usize>)>,
}

impl<'a> HomologyBasis<'a> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn prime(&self) -> u32 {
        self.field.prime()
    }

    pub fn rank(&self) -> usize {
        self.representatives.len()
    }

    pub fn representatives(&self) -> &[Chain] {
        &self.representatives
    }

    pub fn complex(&self) -> &'a Complex {
        self.complex
    }

    /// Coordinates of a `k`-cycle of the complex in this basis, modulo
    /// boundaries.
    pub fn coordinates(&self, chain: &Chain) -> Result<Vec<u32>, ZigzagError> {
        let f = &self.field;
        let mut col: Column = Vec::with_capacity(chain.len());
        for (s, c) in chain {
            let &i = self
                .k_index
                .get(s.as_slice())
                .ok_or_else(|| ZigzagError::NotASubcomplex(s.clone()))?;
            col.push((i, c % f.prime()));
        }
        col.sort_unstable_by_key(|e| e.0);
        // merge repeated simplices
        let mut merged: Column = Vec::with_capacity(col.len());
        for (i, c) in col {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 = f.add(last.1, c),
                _ => merged.push((i, c)),
            }
        }
        merged.retain(|e| e.1 != 0);

        let mut coords = vec![0u32; self.rank()];
        while let Some(&(low, c)) = merged.last() {
            let (pivot, rep) = self.pivots.get(&low).ok_or(ZigzagError::NotACycle)?;
            let factor = f.mul(c, f.inv(pivot.last().expect("pivot nonzero").1));
            if let Some(r) = rep {
                coords[*r] = f.add(coords[*r], factor);
            }
            sub_scaled(&mut merged, pivot, factor, f);
        }
        Ok(coords)
    }
}

/// Boundary columns of the `k`-simplices, rows indexed among the
/// `(k-1)`-simplices.
fn boundary(complex: &Complex, k: usize, field: &PrimeField) -> Vec<Column> {
    if k == 0 {
        return vec![Vec::new(); complex.of_dim(0).len()];
    }
    let rows: HashMap<&[u32], usize> = complex
        .of_dim(k - 1)
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_slice(), i))
        .collect();
    complex
        .of_dim(k)
        .iter()
        .map(|s| {
            let mut col: Column = faces(s)
                .enumerate()
                .map(|(i, face)| {
                    let sign = if i % 2 == 0 { 1 } else { field.neg(1) };
                    (rows[face.as_slice()], sign)
                })
                .collect();
            col.sort_unstable_by_key(|e| e.0);
            col
        })
        .collect()
}

/// Column reduction; returns the reduced columns, the low → column map and,
/// when `track` is set, the matrix `V` with `R = ∂V`.
fn reduce(
    mut cols: Vec<Column>,
    field: &PrimeField,
    track: bool,
) -> (Vec<Column>, HashMap<usize, usize>, Vec<Column>) {
    let mut lows: HashMap<usize, usize> = HashMap::new();
    let mut v: Vec<Column> = if track {
        (0..cols.len()).map(|j| vec![(j, 1)]).collect()
    } else {
        Vec::new()
    };
    for j in 0..cols.len() {
        let mut col = std::mem::take(&mut cols[j]);
        let mut vj = if track { std::mem::take(&mut v[j]) } else { Vec::new() };
        while let Some(&(low, c)) = col.last() {
            let Some(&i) = lows.get(&low) else {
                lows.insert(low, j);
                break;
            };
            let factor = field.mul(c, field.inv(cols[i].last().expect("nonzero").1));
            sub_scaled(&mut col, &cols[i], factor, field);
            if track {
                sub_scaled(&mut vj, &v[i], factor, field);
            }
        }
        cols[j] = col;
        if track {
            v[j] = vj;
        }
    }
    (cols, lows, v)
}

/// Basis of `H_k(complex; Z/p)` by elimination: `ker ∂_k` from a tracked
/// reduction of `∂_k`, modulo the reduced columns of `∂_{k+1}`.
pub fn homology_basis(complex: &Complex, k: usize, p: u64) -> Result<HomologyBasis<'_>, ZigzagError> {
    let field = PrimeField::new(p)?;
    if complex.max_dim() < k + 1 {
        return Err(ZigzagError::DimensionTooLow {
            needed: k + 1,
            built: complex.max_dim(),
        });
    }
    let k_simplices = complex.of_dim(k);
    let (rk, _, v) = reduce(boundary(complex, k, &field), &field, true);
    let (rk1, lows_k1, _) = reduce(boundary(complex, k + 1, &field), &field, false);

    let mut pivots: HashMap<usize, (Column, Option<usize>)> = HashMap::new();
    for (&low, &j) in &lows_k1 {
        pivots.insert(low, (rk1[j].clone(), None));
    }
    let mut representatives = Vec::new();
    for j in 0..k_simplices.len() {
        if rk[j].is_empty() && !lows_k1.contains_key(&j) {
            let cycle = &v[j];
            debug_assert_eq!(cycle.last().map(|e| e.0), Some(j));
            pivots.insert(j, (cycle.clone(), Some(representatives.len())));
            representatives.push(
                cycle
                    .iter()
                    .map(|&(i, c)| (k_simplices[i].clone(), c))
                    .collect(),
            );
        }
    }
    let k_index = k_simplices
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_slice(), i))
        .collect();
    Ok(HomologyBasis {
        complex,
        dim: k,
        field,
        representatives,
        k_index,
        pivots,
    })
}

/// Matrix of the map on `H_k` induced by the inclusion of `from`'s complex
/// into `to`'s, of size `rank(to) × rank(from)`.
pub fn induced_map(from: &HomologyBasis<'_>, to: &HomologyBasis<'_>) -> Result<FpMatrix, ZigzagError> {
    if from.dim != to.dim || from.prime() != to.prime() {
        return Err(ZigzagError::IncompatibleBases);
    }
    if let Some(s) = from.complex.first_missing_from(to.complex) {
        return Err(ZigzagError::NotASubcomplex(s.to_vec()));
    }
    let mut m = FpMatrix::zeros(to.rank(), from.rank());
    for (c, rep) in from.representatives.iter().enumerate() {
        for (r, x) in to.coordinates(rep)?.into_iter().enumerate() {
            m.set(r, c, x);
        }
    }
    Ok(m)
}

/// Union of clouds keyed by id, sorted by id. A repeated id must carry the
/// same coordinates.
pub fn union_cloud(clouds: &[&PointCloud]) -> Result<PointCloud, ZigzagError> {
    let mut merged: BTreeMap<usize, &[f64]> = BTreeMap::new();
    for cloud in clouds {
        for (i, &id) in cloud.ids().iter().enumerate() {
            let p = cloud.point(i);
            if let Some(prev) = merged.insert(id, p) {
                if prev != p {
                    return Err(ZigzagError::IdConflict(id));
                }
            }
        }
    }
    let (ids, points): (Vec<usize>, Vec<Vec<f64>>) =
        merged.into_iter().map(|(id, p)| (id, p.to_vec())).unzip();
    Ok(PointCloud::with_ids(points, ids)?)
}
