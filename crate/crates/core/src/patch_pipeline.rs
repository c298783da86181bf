//! Contrast normalization, mean centering, the DCT flow basis, and
//! predominant-direction binning for 3×3 flow patches.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::flow_io::{pixel_index, RawPatch};

/// Default contrast below which a patch cannot be normalized.
pub const DEFAULT_ZERO_CONTRAST: f64 = 1e-8;
/// Relative singular-value gap below which a patch has no predominant direction.
pub const ISOTROPIC_GAP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PatchError {
    #[error("patch contrast {norm} is at or below {eps}")]
    ZeroContrast { norm: f64, eps: f64 },
    #[error("no patches supplied")]
    EmptyInput,
    #[error("fraction {0} outside (0, 1]")]
    BadFraction(f64),
    #[error("patch flow matrix is numerically zero")]
    ZeroMatrix,
}

/// Laplacian of the 4-connected 3×3 pixel grid (12 edges), indexed in the
/// column-major patch layout. Positive semidefinite with kernel the constants.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLaplacian {
    matrix: [[f64; 9]; 9],
}

impl GridLaplacian {
    pub fn matrix(&self) -> &[[f64; 9]; 9] {
        &self.matrix
    }

    pub fn apply(&self, w: &[f64]) -> [f64; 9] {
        let mut out = [0.0; 9];
        for (i, row) in self.matrix.iter().enumerate() {
            out[i] = row.iter().zip(w).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// `aᵀ D b`.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(self.apply(b)).map(|(x, y)| x * y).sum()
    }

    pub fn quadratic(&self, w: &[f64]) -> f64 {
        self.inner(w, w)
    }

    /// The 12 adjacent pixel pairs in patch index space.
    pub fn edges() -> Vec<(usize, usize)> {
        let mut edges = Vec::with_capacity(12);
        for r in 0..3 {
            for c in 0..3 {
                if c + 1 < 3 {
                    edges.push((pixel_index(r, c), pixel_index(r, c + 1)));
                }
                if r + 1 < 3 {
                    edges.push((pixel_index(r, c), pixel_index(r + 1, c)));
                }
            }
        }
        edges
    }
}

pub fn grid_laplacian() -> GridLaplacian {
    let mut matrix = [[0.0; 9]; 9];
    for (i, j) in GridLaplacian::edges() {
        matrix[i][i] += 1.0;
        matrix[j][j] += 1.0;
        matrix[i][j] -= 1.0;
        matrix[j][i] -= 1.0;
    }
    GridLaplacian { matrix }
}

/// `sqrt(uᵀDu + vᵀDv)`.
pub fn contrast_norm(patch: &RawPatch, d: &GridLaplacian) -> f64 {
    contrast_norm_of(&patch.vec, d)
}

pub fn contrast_norm_of(vec: &[f64; 18], d: &GridLaplacian) -> f64 {
    (d.quadratic(&vec[..9]) + d.quadratic(&vec[9..])).max(0.0).sqrt()
}

fn take_count(q: f64, n: usize) -> usize {
    // Guard against products like 0.3 * 10 = 3.0000000000000004.
    (((q * n as f64) - 1e-9).ceil().max(1.0) as usize).min(n)
}

/// Keeps the `⌈q·N⌉` patches of largest contrast norm, ties broken by input
/// order. The survivors are returned in their original order.
pub fn select_top_contrast(
    patches: &[RawPatch],
    q: f64,
    d: &GridLaplacian,
) -> Result<Vec<RawPatch>, PatchError> {
    if patches.is_empty() {
        return Err(PatchError::EmptyInput);
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(PatchError::BadFraction(q));
    }
    let norms: Vec<f64> = patches.iter().map(|p| contrast_norm(p, d)).collect();
    let mut order: Vec<usize> = (0..patches.len()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let mut keep = order[..take_count(q, patches.len())].to_vec();
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| patches[i].clone()).collect())
}

/// A contrast-normalized, mean-centered patch.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedPatch {
    pub vec: [f64; 18],
    pub contrast_normalized: bool,
    pub mean_centered: bool,
}

impl NormalizedPatch {
    /// Wraps a vector already known to satisfy both normalization invariants.
    pub fn assume_normalized(vec: [f64; 18]) -> Self {
        Self {
            vec,
            contrast_normalized: true,
            mean_centered: true,
        }
    }

    pub fn u(&self) -> &[f64] {
        &self.vec[..9]
    }

    pub fn v(&self) -> &[f64] {
        &self.vec[9..]
    }

    pub fn to_raw(&self, tag: &str) -> RawPatch {
        RawPatch::synthetic(self.vec, tag)
    }
}

pub fn normalize(patch: &RawPatch, d: &GridLaplacian) -> Result<NormalizedPatch, PatchError> {
    normalize_vec(&patch.vec, d, DEFAULT_ZERO_CONTRAST)
}

pub fn normalize_vec(
    vec: &[f64; 18],
    d: &GridLaplacian,
    eps: f64,
) -> Result<NormalizedPatch, PatchError> {
    let norm = contrast_norm_of(vec, d);
    if norm <= eps {
        return Err(PatchError::ZeroContrast { norm, eps });
    }
    let mut out = vec.map(|x| x / norm);
    for channel in out.chunks_exact_mut(9) {
        let mean = channel.iter().sum::<f64>() / 9.0;
        channel.iter_mut().for_each(|x| *x -= mean);
    }
    Ok(NormalizedPatch {
        vec: out,
        contrast_normalized: true,
        mean_centered: true,
    })
}

/// D-orthonormal DCT basis of mean-zero 3×3 patches, lifted to flow.
///
/// `scalar[0]` is the horizontal gradient (increasing left to right),
/// `scalar[1]` the vertical gradient (increasing top to bottom); the rest follow
/// by Laplacian eigenvalue, then lexicographic frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowBasis {
    pub scalar: [[f64; 9]; 8],
    pub eigenvalues: [f64; 8],
    pub frequencies: [(usize, usize); 8],
}

impl FlowBasis {
    /// `e_iᵘ = (e_i, 0)`, zero-based.
    pub fn eu(&self, i: usize) -> [f64; 18] {
        let mut out = [0.0; 18];
        out[..9].copy_from_slice(&self.scalar[i]);
        out
    }

    /// `e_iᵛ = (0, e_i)`, zero-based.
    pub fn ev(&self, i: usize) -> [f64; 18] {
        let mut out = [0.0; 18];
        out[9..].copy_from_slice(&self.scalar[i]);
        out
    }

    /// Rebuilds a flow patch from 16 coefficients `(c₁ᵘ..c₈ᵘ, c₁ᵛ..c₈ᵛ)`.
    pub fn reconstruct(&self, coeffs: &[f64; 16]) -> [f64; 18] {
        let mut out = [0.0; 18];
        for i in 0..8 {
            for p in 0..9 {
                out[p] += coeffs[i] * self.scalar[i][p];
                out[9 + p] += coeffs[8 + i] * self.scalar[i][p];
            }
        }
        out
    }
}

pub fn dct_flow_basis(d: &GridLaplacian) -> FlowBasis {
    let mut freqs: Vec<(usize, usize)> = (0..3)
        .flat_map(|m| (0..3).map(move |n| (m, n)))
        .filter(|&f| f != (0, 0))
        .collect();
    // Laplacian eigenvalue of the (m, n) cosine is (2 - 2cos(mπ/3)) + (2 - 2cos(nπ/3)).
    let lambda = |(m, n): (usize, usize)| {
        let l = |k: usize| 2.0 - 2.0 * (k as f64 * PI / 3.0).cos();
        l(m) + l(n)
    };
    freqs.sort_by(|&a, &b| {
        let rank = |f: (usize, usize)| match f {
            (1, 0) => 0,
            (0, 1) => 1,
            _ => 2,
        };
        rank(a)
            .cmp(&rank(b))
            .then(lambda(a).total_cmp(&lambda(b)))
            .then(a.cmp(&b))
    });

    let mut scalar = [[0.0; 9]; 8];
    let mut eigenvalues = [0.0; 8];
    let mut frequencies = [(0, 0); 8];
    for (slot, &(m, n)) in freqs.iter().enumerate() {
        let mut e = [0.0; 9];
        for row in 0..3 {
            for col in 0..3 {
                // Mirrored so that the first-order cosines increase along their axis.
                let cx = (m as f64 * PI * (2.0 * (2 - col) as f64 + 1.0) / 6.0).cos();
                let cy = (n as f64 * PI * (2.0 * (2 - row) as f64 + 1.0) / 6.0).cos();
                e[pixel_index(row, col)] = cx * cy;
            }
        }
        let mean = e.iter().sum::<f64>() / 9.0;
        e.iter_mut().for_each(|x| *x -= mean);
        let norm = d.quadratic(&e).sqrt();
        e.iter_mut().for_each(|x| *x /= norm);
        scalar[slot] = e;
        eigenvalues[slot] = rayleigh(d, &e);
        frequencies[slot] = (m, n);
    }
    FlowBasis {
        scalar,
        eigenvalues,
        frequencies,
    }
}

fn rayleigh(d: &GridLaplacian, e: &[f64; 9]) -> f64 {
    let de = d.apply(e);
    let num: f64 = de.iter().zip(e).map(|(a, b)| a * b).sum();
    let den: f64 = e.iter().map(|x| x * x).sum();
    num / den
}

/// D-inner-product coordinates `(⟨u,e₁⟩_D..⟨u,e₈⟩_D, ⟨v,e₁⟩_D..⟨v,e₈⟩_D)`.
pub fn project(patch: &NormalizedPatch, basis: &FlowBasis, d: &GridLaplacian) -> [f64; 16] {
    project_vec(&patch.vec, basis, d)
}

pub fn project_vec(vec: &[f64; 18], basis: &FlowBasis, d: &GridLaplacian) -> [f64; 16] {
    let du = d.apply(&vec[..9]);
    let dv = d.apply(&vec[9..]);
    let mut out = [0.0; 16];
    for (i, e) in basis.scalar.iter().enumerate() {
        out[i] = du.iter().zip(e).map(|(a, b)| a * b).sum();
        out[8 + i] = dv.iter().zip(e).map(|(a, b)| a * b).sum();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Direction {
    /// Angle in `[0, π)`.
    Angle(f64),
    Isotropic,
}

impl Direction {
    pub fn angle(self) -> Option<f64> {
        match self {
            Direction::Angle(a) => Some(a),
            Direction::Isotropic => None,
        }
    }
}

/// Angle of the leading right singular vector of the 9×2 matrix of flow vectors.
pub fn predominant_direction(patch: &NormalizedPatch) -> Result<Direction, PatchError> {
    predominant_direction_of(&patch.vec)
}

pub fn predominant_direction_of(vec: &[f64; 18]) -> Result<Direction, PatchError> {
    let (u, v) = vec.split_at(9);
    let suu: f64 = u.iter().map(|x| x * x).sum();
    let svv: f64 = v.iter().map(|x| x * x).sum();
    let suv: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let trace = suu + svv;
    if trace <= 1e-24 {
        return Err(PatchError::ZeroMatrix);
    }
    // Eigenvalues of the 2×2 Gram matrix are the squared singular values.
    let half_gap = (((suu - svv) / 2.0).powi(2) + suv * suv).sqrt();
    let s1 = (trace / 2.0 + half_gap).sqrt();
    let s2 = (trace / 2.0 - half_gap).max(0.0).sqrt();
    if (s1 - s2) / s1 < ISOTROPIC_GAP {
        return Ok(Direction::Isotropic);
    }
    let angle = 0.5 * (2.0 * suv).atan2(suu - svv);
    Ok(Direction::Angle(angle.rem_euclid(PI) % PI))
}

/// Distance between two angles on the projective line `RP¹ = [0, π)`.
pub fn projective_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

/// Keeps patches whose predominant direction lies within `halfwidth` of `theta`
/// on `RP¹`; isotropic patches are dropped.
pub fn angle_bin_filter(
    patches: &[NormalizedPatch],
    theta: f64,
    halfwidth: f64,
) -> Vec<NormalizedPatch> {
    angle_bin_indices(patches, theta, halfwidth)
        .into_iter()
        .map(|i| patches[i].clone())
        .collect()
}

pub fn angle_bin_indices(patches: &[NormalizedPatch], theta: f64, halfwidth: f64) -> Vec<usize> {
    patches
        .iter()
        .enumerate()
        .filter_map(|(i, p)| match predominant_direction(p) {
            Ok(Direction::Angle(phi)) if projective_distance(phi, theta) <= halfwidth => Some(i),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const RAMP: [f64; 9] = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0];

    fn brute_dirichlet(w: &[f64]) -> f64 {
        // sum over 4-adjacent (row, col) pairs, independent of the matrix
        let px = |r: usize, c: usize| w[c * 3 + r];
        let mut s = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                if c < 2 {
                    s += (px(r, c) - px(r, c + 1)).powi(2);
                }
                if r < 2 {
                    s += (px(r, c) - px(r + 1, c)).powi(2);
                }
            }
        }
        s
    }

    fn ramp_patch() -> RawPatch {
        let mut v = [0.0; 18];
        v[..9].copy_from_slice(&RAMP);
        RawPatch::synthetic(v, "ramp")
    }

    #[test]
    fn laplacian_structure() {
        let d = grid_laplacian();
        assert_eq!(d.apply(&[1.0; 9]), [0.0; 9]);
        let m = d.matrix();
        assert_eq!(m[pixel_index(0, 0)][pixel_index(0, 0)], 2.0);
        assert_eq!(m[pixel_index(1, 1)][pixel_index(1, 1)], 4.0);
        assert_eq!(m[pixel_index(0, 1)][pixel_index(0, 1)], 3.0);
        assert_eq!(GridLaplacian::edges().len(), 12);
        for i in 0..9 {
            assert_eq!(m[i].iter().sum::<f64>(), 0.0);
            for j in 0..9 {
                assert_eq!(m[i][j], m[j][i]);
            }
        }
        assert_eq!(brute_dirichlet(&RAMP), 6.0);
        assert_eq!(d.quadratic(&RAMP), 6.0);
    }

    #[test]
    fn contrast_norm_cases() {
        let d = grid_laplacian();
        let constant = RawPatch::synthetic([3.5; 18], "c");
        assert_eq!(contrast_norm(&constant, &d), 0.0);
        assert!((contrast_norm(&ramp_patch(), &d) - 6f64.sqrt()).abs() < 1e-12);
        let mut scaled = ramp_patch();
        scaled.vec.iter_mut().for_each(|x| *x *= 2.5);
        assert!((contrast_norm(&scaled, &d) - 2.5 * 6f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn top_contrast_selection() {
        let d = grid_laplacian();
        let patches: Vec<RawPatch> = (0..10)
            .map(|k| {
                let mut p = ramp_patch();
                p.vec.iter_mut().for_each(|x| *x *= (k + 1) as f64);
                p.provenance = crate::flow_io::Provenance::Synthetic(k.to_string());
                p
            })
            .collect();
        assert_eq!(select_top_contrast(&patches, 1.0, &d).unwrap(), patches);
        let top = select_top_contrast(&patches, 0.2, &d).unwrap();
        assert_eq!(top, patches[8..].to_vec());

        let tied: Vec<RawPatch> = (0..4)
            .map(|k| {
                let mut p = ramp_patch();
                p.provenance = crate::flow_io::Provenance::Synthetic(k.to_string());
                p
            })
            .collect();
        assert_eq!(select_top_contrast(&tied, 0.5, &d).unwrap(), tied[..2].to_vec());
        assert_eq!(select_top_contrast(&[], 0.5, &d), Err(PatchError::EmptyInput));
        assert!(select_top_contrast(&tied, 0.0, &d).is_err());
    }

    #[test]
    fn normalize_cases() {
        let d = grid_laplacian();
        let n = normalize(&ramp_patch(), &d).unwrap();
        assert!((contrast_norm_of(&n.vec, &d) - 1.0).abs() < 1e-12);
        assert!(n.u().iter().sum::<f64>().abs() < 1e-12);
        assert!(n.v().iter().sum::<f64>().abs() < 1e-12);
        // fixed point
        let again = normalize(&n.to_raw("n"), &d).unwrap();
        for (a, b) in again.vec.iter().zip(n.vec) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(matches!(
            normalize(&RawPatch::synthetic([1.0; 18], "c"), &d),
            Err(PatchError::ZeroContrast { .. })
        ));
    }

    #[test]
    fn basis_is_d_orthonormal_eigenbasis() {
        let d = grid_laplacian();
        let b = dct_flow_basis(&d);
        for i in 0..8 {
            for j in 0..8 {
                let ip = d.inner(&b.scalar[i], &b.scalar[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-10, "<e{i},e{j}>_D = {ip}");
            }
            assert!(b.scalar[i].iter().sum::<f64>().abs() < 1e-12);
            let de = d.apply(&b.scalar[i]);
            for p in 0..9 {
                assert!((de[p] - b.eigenvalues[i] * b.scalar[i][p]).abs() < 1e-10);
            }
        }
        let expected_lambdas = [1.0, 1.0, 2.0, 3.0, 3.0, 4.0, 4.0, 6.0];
        for (got, want) in b.eigenvalues.iter().zip(expected_lambdas) {
            assert!((got - want).abs() < 1e-10);
        }
        assert_eq!(b.frequencies[..3], [(1, 0), (0, 1), (1, 1)]);
    }

    #[test]
    fn gradients_have_expected_shape() {
        let b = dct_flow_basis(&grid_laplacian());
        let e1 = &b.scalar[0];
        let e2 = &b.scalar[1];
        for c in 0..3 {
            assert!((e1[pixel_index(0, c)] - e1[pixel_index(2, c)]).abs() < 1e-12);
            assert!((e2[pixel_index(c, 0)] - e2[pixel_index(c, 2)]).abs() < 1e-12);
        }
        assert!(e1[pixel_index(1, 0)] < e1[pixel_index(1, 1)]);
        assert!(e1[pixel_index(1, 1)] < e1[pixel_index(1, 2)]);
        assert!(e2[pixel_index(0, 1)] < e2[pixel_index(1, 1)]);
        assert!(e2[pixel_index(1, 1)] < e2[pixel_index(2, 1)]);
    }

    #[test]
    fn projection_and_reconstruction() {
        let d = grid_laplacian();
        let b = dct_flow_basis(&d);
        let c = project(&NormalizedPatch::assume_normalized(b.eu(0)), &b, &d);
        let mut want = [0.0; 16];
        want[0] = 1.0;
        for (x, y) in c.iter().zip(want) {
            assert!((x - y).abs() < 1e-12);
        }
        let n = normalize(&ramp_patch(), &d).unwrap();
        let c = project(&n, &b, &d);
        assert!((c.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-10);
        let back = b.reconstruct(&c);
        for (x, y) in back.iter().zip(n.vec) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn directions() {
        let b = dct_flow_basis(&grid_laplacian());
        let dir = |v: [f64; 18]| predominant_direction_of(&v).unwrap().angle().unwrap();
        assert!(dir(b.eu(0)).abs() < 1e-12);
        assert!((dir(b.ev(0)) - PI / 2.0).abs() < 1e-12);
        let neg = b.ev(3).map(|x| -x);
        assert!((dir(neg) - PI / 2.0).abs() < 1e-12);
        // equal-energy orthogonal flows have no predominant direction
        let mut iso = b.eu(0);
        iso[9..].copy_from_slice(&b.scalar[1]);
        assert_eq!(predominant_direction_of(&iso).unwrap(), Direction::Isotropic);
        assert_eq!(predominant_direction_of(&[0.0; 18]), Err(PatchError::ZeroMatrix));
    }

    #[test]
    fn angle_bins() {
        let b = dct_flow_basis(&grid_laplacian());
        let at = |phi: f64| {
            let mut v = [0.0; 18];
            for p in 0..9 {
                v[p] = phi.cos() * b.scalar[0][p];
                v[9 + p] = phi.sin() * b.scalar[0][p];
            }
            NormalizedPatch::assume_normalized(v)
        };
        let wrap = at(11.0 * PI / 12.0 + PI / 24.0);
        assert_eq!(angle_bin_filter(std::slice::from_ref(&wrap), 0.0, PI / 12.0).len(), 1);
        assert!(angle_bin_filter(&[at(0.0)], PI / 2.0, PI / 12.0).is_empty());
        let mut iso = b.eu(0);
        iso[9..].copy_from_slice(&b.scalar[1]);
        let all = vec![at(0.1), at(1.0), at(2.0), wrap, NormalizedPatch::assume_normalized(iso)];
        assert_eq!(angle_bin_filter(&all, 0.3, PI / 2.0).len(), 4);
    }
}
