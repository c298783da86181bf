//! Point clouds, Euclidean distance matrices, k-NN density cores, and
//! subsampling (uniform random and sequential maxmin).

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("point cloud is empty")]
    Empty,
    #[error("non-finite coordinate in point {0}")]
    NonFinite(usize),
    #[error("k = {k} needs 1 <= k <= n - 1 with n = {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("percentage {0} outside (0, 100]")]
    BadPercentage(f64),
    #[error("landmark count {m} outside 1..={n}")]
    BadLandmarkCount { m: usize, n: usize },
}

/// Finite points of a common dimension. `ids` carries a stable identity for
/// each point (its index in some parent collection) through subsetting.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    points: Vec<Vec<f64>>,
    ids: Vec<usize>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        let ids = (0..points.len()).collect();
        Self::with_ids(points, ids)
    }

    pub fn with_ids(points: Vec<Vec<f64>>, ids: Vec<usize>) -> Result<Self, GeometryError> {
        assert_eq!(points.len(), ids.len(), "one id per point");
        let dim = points.first().ok_or(GeometryError::Empty)?.len();
        if dim == 0 {
            return Err(GeometryError::DimensionMismatch {
                index: 0,
                expected: 1,
                found: 0,
            });
        }
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(GeometryError::DimensionMismatch {
                    index,
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(GeometryError::NonFinite(index));
            }
        }
        Ok(Self { dim, points, ids })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    /// Sub-cloud at the given positions, in the given order.
    pub fn select(&self, positions: &[usize]) -> PointCloud {
        PointCloud {
            dim: self.dim,
            points: positions.iter().map(|&i| self.points[i].clone()).collect(),
            ids: positions.iter().map(|&i| self.ids[i]).collect(),
        }
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Symmetric matrix of pairwise distances with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds from a full square matrix, symmetrizing nothing: the caller must
    /// supply a symmetric, zero-diagonal, nonnegative matrix.
    pub fn from_square(rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, r) in rows.into_iter().enumerate() {
            assert_eq!(r.len(), n, "row {i} has wrong length");
            data.extend(r);
        }
        for i in 0..n {
            assert_eq!(data[i * n + i], 0.0, "nonzero diagonal at {i}");
            for j in 0..i {
                assert!(
                    (data[i * n + j] - data[j * n + i]).abs() <= 1e-12,
                    "asymmetric at ({i}, {j})"
                );
            }
        }
        Self { n, data }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                let d = f(i, j);
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        Self { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Restriction to the given indices.
    pub fn submatrix(&self, idx: &[usize]) -> DistanceMatrix {
        DistanceMatrix::from_fn(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }

    /// Largest entry; `0` for fewer than two points.
    pub fn diameter(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|d| d.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn distance_matrix(cloud: &PointCloud) -> DistanceMatrix {
    DistanceMatrix::from_fn(cloud.len(), |i, j| euclidean(&cloud.points[i], &cloud.points[j]))
}

/// Distances from every point of `from` to every point of `to`, row per `from` point.
pub fn cross_distances(from: &PointCloud, to: &PointCloud) -> Result<Vec<Vec<f64>>, GeometryError> {
    if from.dim != to.dim {
        return Err(GeometryError::DimensionMismatch {
            index: 0,
            expected: from.dim,
            found: to.dim,
        });
    }
    Ok(from
        .points
        .iter()
        .map(|a| to.points.iter().map(|b| euclidean(a, b)).collect())
        .collect())
}

/// `ρ_k(i)`: distance from point `i` to its `k`-th nearest other point.
pub fn knn_density(dm: &DistanceMatrix, k: usize) -> Result<Vec<f64>, GeometryError> {
    let n = dm.len();
    if k == 0 || k >= n {
        return Err(GeometryError::KTooLarge { k, n });
    }
    let mut scratch = Vec::with_capacity(n - 1);
    Ok((0..n)
        .map(|i| {
            scratch.clear();
            scratch.extend(
                dm.row(i)
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &d)| d),
            );
            let (_, kth, _) = scratch.select_nth_unstable_by(k - 1, f64::total_cmp);
            *kth
        })
        .collect())
}

fn percent_count(p: f64, n: usize) -> usize {
    (((p / 100.0) * n as f64 - 1e-9).ceil().max(1.0) as usize).min(n)
}

/// Positions of the `⌈(p/100)·n⌉` points of smallest `ρ_k`, ties by index,
/// returned in ascending position order.
pub fn densest_core_indices(
    dm: &DistanceMatrix,
    k: usize,
    p: f64,
) -> Result<Vec<usize>, GeometryError> {
    if !(p > 0.0 && p <= 100.0) {
        return Err(GeometryError::BadPercentage(p));
    }
    core_positions(&knn_density(dm, k)?, p)
}

/// [`knn_density`] computed one row at a time, without storing all pairs.
pub fn knn_density_cloud(cloud: &PointCloud, k: usize) -> Result<Vec<f64>, GeometryError> {
    let n = cloud.len();
    if k == 0 || k >= n {
        return Err(GeometryError::KTooLarge { k, n });
    }
    let pts = cloud.points();
    let mut scratch = Vec::with_capacity(n - 1);
    Ok((0..n)
        .map(|i| {
            scratch.clear();
            scratch.extend(
                pts.iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, b)| euclidean(&pts[i], b)),
            );
            let (_, kth, _) = scratch.select_nth_unstable_by(k - 1, f64::total_cmp);
            *kth
        })
        .collect())
}

fn core_positions(rho: &[f64], p: f64) -> Result<Vec<usize>, GeometryError> {
    if !(p > 0.0 && p <= 100.0) {
        return Err(GeometryError::BadPercentage(p));
    }
    let mut order: Vec<usize> = (0..rho.len()).collect();
    order.sort_by(|&a, &b| rho[a].total_cmp(&rho[b]));
    let mut keep = order[..percent_count(p, rho.len())].to_vec();
    keep.sort_unstable();
    Ok(keep)
}

/// The dense core `X(k, p)`.
pub fn densest_core(cloud: &PointCloud, k: usize, p: f64) -> Result<PointCloud, GeometryError> {
    if !(p > 0.0 && p <= 100.0) {
        return Err(GeometryError::BadPercentage(p));
    }
    let rho = knn_density_cloud(cloud, k)?;
    Ok(cloud.select(&core_positions(&rho, p)?))
}

/// Uniform sample of `n` points without replacement (order preserved); the
/// whole cloud when it has at most `n` points.
pub fn random_subsample(cloud: &PointCloud, n: usize, seed: u64) -> PointCloud {
    if cloud.len() <= n {
        return cloud.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, cloud.len(), n).into_vec();
    picked.sort_unstable();
    cloud.select(&picked)
}

/// Greedy farthest-point landmarks starting from `start`; ties go to the
/// smallest index. Returned in selection order.
pub fn maxmin_sample(
    dm: &DistanceMatrix,
    m: usize,
    start: usize,
) -> Result<Vec<usize>, GeometryError> {
    maxmin_by(dm.len(), m, start, |i, j| dm.get(i, j))
}

/// [`maxmin_sample`] computing distances on demand, for clouds too large for
/// a full distance matrix. `O(n·m)` distance evaluations.
pub fn maxmin_sample_cloud(
    cloud: &PointCloud,
    m: usize,
    start: usize,
) -> Result<Vec<usize>, GeometryError> {
    maxmin_by(cloud.len(), m, start, |i, j| {
        euclidean(cloud.point(i), cloud.point(j))
    })
}

fn maxmin_by(
    n: usize,
    m: usize,
    start: usize,
    dist: impl Fn(usize, usize) -> f64,
) -> Result<Vec<usize>, GeometryError> {
    if m == 0 || m > n || start >= n {
        return Err(GeometryError::BadLandmarkCount { m, n });
    }
    let mut chosen = vec![start];
    let mut is_chosen = vec![false; n];
    is_chosen[start] = true;
    let mut cover: Vec<f64> = (0..n).map(|i| dist(start, i)).collect();
    while chosen.len() < m {
        let mut best = None::<(usize, f64)>;
        for (i, &c) in cover.iter().enumerate() {
            if is_chosen[i] {
                continue;
            }
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((i, c));
            }
        }
        let (next, _) = best.expect("m <= n leaves a candidate");
        chosen.push(next);
        is_chosen[next] = true;
        for (i, c) in cover.iter_mut().enumerate() {
            *c = c.min(dist(next, i));
        }
    }
    Ok(chosen)
}

/// `max_x min_{l ∈ L} d(x, l)`.
pub fn cover_radius(dm: &DistanceMatrix, landmarks: &[usize]) -> f64 {
    (0..dm.len())
        .map(|x| {
            landmarks
                .iter()
                .map(|&l| dm.get(x, l))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}
