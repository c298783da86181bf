use std::cmp::Ordering;
use std::collections::HashSet;

use super::PersistenceError;
use crate::geometry::DistanceMatrix;

/// Default cap on the number of simplices a filtration may hold.
pub const DEFAULT_SIMPLEX_CAP: usize = 5_000_000;

/// A simplex given by its sorted vertex list, with the scale at which it enters.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    pub vertices: Vec<u32>,
    pub scale: f64,
}

impl Simplex {
    pub fn new(mut vertices: Vec<u32>, scale: f64) -> Self {
        vertices.sort_unstable();
        Self { vertices, scale }
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Codimension-one faces, the `i`-th omitting vertex `i`.
    pub fn faces(&self) -> impl Iterator<Item = Vec<u32>> + '_ {
        (0..self.vertices.len()).map(move |skip| {
            self.vertices
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, &v)| v)
                .collect()
        })
    }
}

/// Filtration order: scale, then dimension, then lexicographic vertices.
pub fn filtration_order(a: &Simplex, b: &Simplex) -> Ordering {
    a.scale
        .total_cmp(&b.scale)
        .then(a.vertices.len().cmp(&b.vertices.len()))
        .then_with(|| a.vertices.cmp(&b.vertices))
}

/// Simplices sorted in filtration order, every face entering no later than
/// its cofaces.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtration {
    simplices: Vec<Simplex>,
    max_dim: usize,
    r_max: f64,
}

impl Filtration {
    /// Sorts and validates an explicit simplex list.
    pub fn new(mut simplices: Vec<Simplex>, max_dim: usize, r_max: f64) -> Result<Self, PersistenceError> {
        simplices.sort_by(filtration_order);
        let mut seen: HashSet<&[u32]> = HashSet::with_capacity(simplices.len());
        for s in &simplices {
            if s.vertices.is_empty() || s.dim() > max_dim {
                return Err(PersistenceError::InvalidFiltration(format!(
                    "simplex {:?} has unsupported dimension",
                    s.vertices
                )));
            }
            if !s.scale.is_finite() || s.scale > r_max {
                return Err(PersistenceError::InvalidFiltration(format!(
                    "simplex {:?} has scale {} beyond r_max {}",
                    s.vertices, s.scale, r_max
                )));
            }
            if s.vertices.windows(2).any(|w| w[0] == w[1]) {
                return Err(PersistenceError::InvalidFiltration(format!(
                    "repeated vertex in {:?}",
                    s.vertices
                )));
            }
            if s.dim() > 0 {
                for face in s.faces() {
                    if !seen.contains(face.as_slice()) {
                        return Err(PersistenceError::InvalidFiltration(format!(
                            "face {:?} of {:?} missing or entering later",
                            face, s.vertices
                        )));
                    }
                }
            }
            if !seen.insert(&s.vertices) {
                return Err(PersistenceError::InvalidFiltration(format!(
                    "duplicate simplex {:?}",
                    s.vertices
                )));
            }
        }
        Ok(Self {
            simplices,
            max_dim,
            r_max,
        })
    }

    pub(crate) fn from_sorted_unchecked(simplices: Vec<Simplex>, max_dim: usize, r_max: f64) -> Self {
        Self {
            simplices,
            max_dim,
            r_max,
        }
    }

    pub fn simplices(&self) -> &[Simplex] {
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

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Distinct simplex scales in increasing order.
    pub fn critical_scales(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.simplices.iter().map(|s| s.scale).collect();
        out.dedup();
        out
    }

    pub fn count_by_dim(&self) -> Vec<usize> {
        let mut counts = vec![0; self.max_dim + 1];
        for s in &self.simplices {
            counts[s.dim()] += 1;
        }
        counts
    }

    /// Applies a vertex relabeling and re-sorts.
    pub fn relabel(&self, perm: &[u32]) -> Filtration {
        let simplices = self
            .simplices
            .iter()
            .map(|s| Simplex::new(s.vertices.iter().map(|&v| perm[v as usize]).collect(), s.scale))
            .collect();
        let mut out = Filtration::from_sorted_unchecked(simplices, self.max_dim, self.r_max);
        out.simplices.sort_by(filtration_order);
        out
    }
}

/// Clique (flag) filtration of a weighted complete graph: vertices enter at 0,
/// edge `{i,j}` at `weights(i,j)`, and higher simplices with their last edge.
/// Edges above `r_max` are dropped.
pub fn clique_filtration(
    weights: &DistanceMatrix,
    r_max: f64,
    max_dim: usize,
    cap: usize,
) -> Result<Filtration, PersistenceError> {
    let n = weights.len();
    if n > u32::MAX as usize {
        return Err(PersistenceError::SizeExplosion { cap, reached: n });
    }
    let upper: Vec<Vec<u32>> = (0..n)
        .map(|i| {
            (i + 1..n)
                .filter(|&j| weights.get(i, j) <= r_max)
                .map(|j| j as u32)
                .collect()
        })
        .collect();

    let mut simplices: Vec<Simplex> = (0..n as u32).map(|v| Simplex::new(vec![v], 0.0)).collect();
    if max_dim >= 1 {
        // Depth-first over cliques; `cands` are the common upper neighbours.
        let mut stack: Vec<(Vec<u32>, f64, Vec<u32>)> = Vec::new();
        for v in 0..n as u32 {
            stack.push((vec![v], 0.0, upper[v as usize].clone()));
            while let Some((verts, scale, cands)) = stack.pop() {
                for (ci, &c) in cands.iter().enumerate() {
                    let w = verts
                        .iter()
                        .map(|&u| weights.get(u as usize, c as usize))
                        .fold(scale, f64::max);
                    let mut next = verts.clone();
                    next.push(c);
                    if simplices.len() >= cap {
                        return Err(PersistenceError::SizeExplosion {
                            cap,
                            reached: simplices.len() + 1,
                        });
                    }
                    if next.len() <= max_dim {
                        let nbrs = &upper[c as usize];
                        let further: Vec<u32> = cands[ci + 1..]
                            .iter()
                            .copied()
                            .filter(|x| nbrs.binary_search(x).is_ok())
                            .collect();
                        if !further.is_empty() {
                            stack.push((next.clone(), w, further));
                        }
                    }
                    simplices.push(Simplex { vertices: next, scale: w });
                }
            }
        }
    }
    simplices.sort_by(filtration_order);
    Ok(Filtration::from_sorted_unchecked(simplices, max_dim, r_max))
}

/// Vietoris–Rips filtration: a simplex enters at its diameter.
pub fn vr_filtration(
    dm: &DistanceMatrix,
    r_max: f64,
    max_dim: usize,
) -> Result<Filtration, PersistenceError> {
    vr_filtration_capped(dm, r_max, max_dim, DEFAULT_SIMPLEX_CAP)
}

pub fn vr_filtration_capped(
    dm: &DistanceMatrix,
    r_max: f64,
    max_dim: usize,
    cap: usize,
) -> Result<Filtration, PersistenceError> {
    if !(r_max > 0.0) {
        return Err(PersistenceError::InvalidScale(r_max));
    }
    clique_filtration(dm, r_max, max_dim, cap)
}

/// Edge appearance scales of the lazy witness complex.
///
/// With `m(z)` the distance from witness `z` to its `nu`-th nearest landmark
/// (`0` when `nu = 0`), edge `{l, l'}` enters at
/// `min_z max(d(z,l), d(z,l')) − m(z)`, floored at zero.
pub fn lazy_witness_edge_scales(
    witness_to_landmark: &[Vec<f64>],
    n_landmarks: usize,
    nu: usize,
) -> Result<DistanceMatrix, PersistenceError> {
    if witness_to_landmark.is_empty() {
        return Err(PersistenceError::NoWitnesses);
    }
    if n_landmarks < 2 {
        return Err(PersistenceError::TooFewLandmarks(n_landmarks));
    }
    if nu > n_landmarks {
        return Err(PersistenceError::InvalidWitnessParameter { nu, n_landmarks });
    }
    let mut best = vec![f64::INFINITY; n_landmarks * n_landmarks];
    let mut sorted = Vec::with_capacity(n_landmarks);
    for row in witness_to_landmark {
        assert_eq!(row.len(), n_landmarks, "one distance per landmark");
        let m = if nu == 0 {
            0.0
        } else {
            sorted.clear();
            sorted.extend_from_slice(row);
            let (_, kth, _) = sorted.select_nth_unstable_by(nu - 1, f64::total_cmp);
            *kth
        };
        for a in 0..n_landmarks {
            for b in 0..a {
                let s = (row[a].max(row[b]) - m).max(0.0);
                let slot = &mut best[a * n_landmarks + b];
                if s < *slot {
                    *slot = s;
                }
            }
        }
    }
    Ok(DistanceMatrix::from_fn(n_landmarks, |a, b| best[a * n_landmarks + b]))
}

/// Lazy witness filtration on the landmarks: the clique filtration of
/// [`lazy_witness_edge_scales`].
pub fn lazy_witness_filtration(
    witness_to_landmark: &[Vec<f64>],
    n_landmarks: usize,
    nu: usize,
    r_max: f64,
    max_dim: usize,
) -> Result<Filtration, PersistenceError> {
    if !(r_max > 0.0) {
        return Err(PersistenceError::InvalidScale(r_max));
    }
    let w = lazy_witness_edge_scales(witness_to_landmark, n_landmarks, nu)?;
    clique_filtration(&w, r_max, max_dim, DEFAULT_SIMPLEX_CAP)
}
