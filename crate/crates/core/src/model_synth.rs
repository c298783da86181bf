//! Analytic flow models: range primary-circle patches, camera-translation flow,
//! the horizontal flow circle, the flow torus `f(α, θ)`, and synthetic samplers.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::flow_io::RawPatch;
use crate::geometry::{euclidean, PointCloud};
use crate::patch_pipeline::{FlowBasis, GridLaplacian, NormalizedPatch};

/// Torus parameters: range-edge orientation `alpha` and camera translation
/// direction `theta`, both reduced to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusParams {
    pub alpha: f64,
    pub theta: f64,
}

impl TorusParams {
    pub fn new(alpha: f64, theta: f64) -> Self {
        Self {
            alpha: alpha.rem_euclid(TAU),
            theta: theta.rem_euclid(TAU),
        }
    }
}

/// A scalar 3×3 patch in column-major layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangePatch(pub [f64; 9]);

/// `cos(α)e₁ + sin(α)e₂`.
pub fn range_primary_circle(alpha: f64, basis: &FlowBasis) -> RangePatch {
    let (s, c) = alpha.sin_cos();
    let mut out = [0.0; 9];
    for (p, o) in out.iter_mut().enumerate() {
        *o = c * basis.scalar[0][p] + s * basis.scalar[1][p];
    }
    RangePatch(out)
}

/// Flow seen when the camera translates in direction `theta` over a scene whose
/// depth-dependent parallax is `range`: every pixel moves along
/// `(cosθ, sinθ)` by `gain · range_i`, plus a common `drift`.
pub fn flow_from_range(range: &RangePatch, theta: f64, gain: f64, drift: [f64; 2]) -> RawPatch {
    assert!(gain > 0.0, "gain must be positive");
    let (s, c) = theta.sin_cos();
    let mut vec = [0.0; 18];
    for (p, r) in range.0.iter().enumerate() {
        vec[p] = gain * r * c + drift[0];
        vec[9 + p] = gain * r * s + drift[1];
    }
    RawPatch::synthetic(vec, "flow_from_range")
}

/// `f(α,θ) = cosθ(cosα e₁ᵘ + sinα e₂ᵘ) + sinθ(cosα e₁ᵛ + sinα e₂ᵛ)`.
pub fn flow_torus_map(params: TorusParams, basis: &FlowBasis) -> NormalizedPatch {
    NormalizedPatch::assume_normalized(flow_torus_vec(params.alpha, params.theta, basis))
}

pub fn flow_torus_vec(alpha: f64, theta: f64, basis: &FlowBasis) -> [f64; 18] {
    let (sa, ca) = alpha.sin_cos();
    let (st, ct) = theta.sin_cos();
    let mut out = [0.0; 18];
    for p in 0..9 {
        let edge = ca * basis.scalar[0][p] + sa * basis.scalar[1][p];
        out[p] = ct * edge;
        out[9 + p] = st * edge;
    }
    out
}

/// `(α, θ − α mod 2π)`.
pub fn shear_coordinates(params: TorusParams) -> (f64, f64) {
    (params.alpha, (params.theta - params.alpha).rem_euclid(TAU))
}

pub fn unshear_coordinates(alpha: f64, sheared: f64) -> TorusParams {
    TorusParams::new(alpha, sheared + alpha)
}

/// `K(u,v) = ((2+cos v)cos u, (2+cos v)sin u, sin v cos(u/2), sin v sin(u/2))`.
pub fn klein_embedding(u: f64, v: f64) -> [f64; 4] {
    let r = 2.0 + v.cos();
    [
        r * u.cos(),
        r * u.sin(),
        v.sin() * (u / 2.0).cos(),
        v.sin() * (u / 2.0).sin(),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Circle,
    HorizontalCircle,
    FlowTorus,
    KleinControl,
}

impl std::str::FromStr for Shape {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "circle" => Ok(Shape::Circle),
            "horizontal_circle" => Ok(Shape::HorizontalCircle),
            "flow_torus" => Ok(Shape::FlowTorus),
            "klein_control" => Ok(Shape::KleinControl),
            other => Err(format!("unknown shape `{other}`")),
        }
    }
}

/// How parameters are laid out on the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// `n` evenly spaced points (a `√n × √n`-ish grid for two-parameter shapes).
    Grid,
    /// `n` uniform random parameter draws.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub shape: Shape,
    pub count: usize,
    pub noise_sigma: f64,
    pub layout: Layout,
    pub seed: u64,
}

/// Samples a synthetic point cloud. Two-parameter shapes on a grid use
/// `⌈√n⌉` steps per parameter, truncated to `n` points.
pub fn sample_cloud(spec: &SampleSpec, basis: &FlowBasis) -> PointCloud {
    assert!(spec.count >= 1, "count must be positive");
    assert!(spec.noise_sigma >= 0.0, "noise must be nonnegative");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.count;
    let params: Vec<(f64, f64)> = match (spec.shape, spec.layout) {
        (Shape::Circle | Shape::HorizontalCircle, Layout::Grid) => {
            (0..n).map(|i| (TAU * i as f64 / n as f64, 0.0)).collect()
        }
        (Shape::Circle | Shape::HorizontalCircle, Layout::Random) => {
            (0..n).map(|_| (rng.random_range(0.0..TAU), 0.0)).collect()
        }
        (_, Layout::Grid) => {
            let side = (n as f64).sqrt().ceil() as usize;
            (0..side * side)
                .take(n)
                .map(|i| {
                    (
                        TAU * (i % side) as f64 / side as f64,
                        TAU * (i / side) as f64 / side as f64,
                    )
                })
                .collect()
        }
        (_, Layout::Random) => (0..n)
            .map(|_| (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)))
            .collect(),
    };
    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let points = params
        .into_iter()
        .map(|(a, b)| {
            let mut x: Vec<f64> = match spec.shape {
                Shape::Circle => vec![a.cos(), a.sin()],
                Shape::HorizontalCircle => flow_torus_vec(a, 0.0, basis).to_vec(),
                Shape::FlowTorus => flow_torus_vec(a, b, basis).to_vec(),
                Shape::KleinControl => klein_embedding(a, b).to_vec(),
            };
            if spec.noise_sigma > 0.0 {
                x.iter_mut().for_each(|c| *c += noise.sample(&mut rng));
            }
            x
        })
        .collect();
    PointCloud::new(points).expect("sampled points are finite and uniform")
}

/// Outcome of checking that `f` identifies exactly `(α,θ) ~ (α+π, θ+π)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentificationReport {
    pub grid_resolution: usize,
    /// `max ‖f(α,θ) − f(α+π,θ+π)‖` over the grid.
    pub max_shift_violation: f64,
    /// `max ‖f(α,θ) − f(−α,−θ)‖` over the grid: the alternative
    /// identification `(α,θ) ~ (−α,−θ)`, which the formula does not satisfy.
    pub max_negation_violation: f64,
    /// Smallest `‖f(p) − f(q)‖` over grid pairs not related by the shift.
    pub min_unrelated_distance: f64,
    pub shift_holds: bool,
    pub negation_holds: bool,
}

pub const IDENTIFICATION_TOLERANCE: f64 = 1e-12;

pub fn quotient_identification_check(
    grid_resolution: usize,
    basis: &FlowBasis,
    d: &GridLaplacian,
) -> IdentificationReport {
    assert!(grid_resolution >= 2, "resolution must be at least 2");
    let n = grid_resolution;
    let angle = |i: usize| TAU * i as f64 / n as f64;
    let mut shift = 0.0f64;
    let mut negation = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let (a, t) = (angle(i), angle(j));
            let base = flow_torus_vec(a, t, basis);
            shift = shift.max(euclidean(&base, &flow_torus_vec(a + PI, t + PI, basis)));
            negation = negation.max(euclidean(&base, &flow_torus_vec(-a, -t, basis)));
        }
    }

    // Unrelated pairs: grid points whose parameter difference is not (0,0) or (π,π).
    let points: Vec<((usize, usize), [f64; 18])> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| ((i, j), flow_torus_vec(angle(i), angle(j), basis)))
        .collect();
    let related = |(i1, j1): (usize, usize), (i2, j2): (usize, usize)| {
        let di = (i1 + n - i2) % n;
        let dj = (j1 + n - j2) % n;
        (di == 0 && dj == 0) || (2 * di == n && 2 * dj == n)
    };
    let mut min_unrelated = f64::INFINITY;
    for (x, (p, fp)) in points.iter().enumerate() {
        for (q, fq) in &points[x + 1..] {
            if !related(*p, *q) {
                let diff: Vec<f64> = fp.iter().zip(fq).map(|(a, b)| a - b).collect();
                let dn = (d.quadratic(&diff[..9]) + d.quadratic(&diff[9..])).sqrt();
                min_unrelated = min_unrelated.min(dn);
            }
        }
    }
    IdentificationReport {
        grid_resolution,
        max_shift_violation: shift,
        max_negation_violation: negation,
        min_unrelated_distance: min_unrelated,
        shift_holds: shift <= IDENTIFICATION_TOLERANCE,
        negation_holds: negation <= IDENTIFICATION_TOLERANCE,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patch_pipeline::{
        contrast_norm_of, dct_flow_basis, grid_laplacian, normalize, predominant_direction,
        project_vec,
    };

    fn setup() -> (GridLaplacian, FlowBasis) {
        let d = grid_laplacian();
        let b = dct_flow_basis(&d);
        (d, b)
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn primary_circle() {
        let (d, b) = setup();
        assert!(close(&range_primary_circle(0.0, &b).0, &b.scalar[0], 1e-15));
        let neg: Vec<f64> = b.scalar[0].iter().map(|x| -x).collect();
        assert!(close(&range_primary_circle(PI, &b).0, &neg, 1e-15));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let r = range_primary_circle(rng.random_range(0.0..TAU), &b);
            assert!((d.quadratic(&r.0).sqrt() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn camera_translation_flow() {
        let (d, b) = setup();
        let e1 = RangePatch(b.scalar[0]);
        assert!(close(&flow_from_range(&e1, 0.0, 1.0, [0.0; 2]).vec, &b.eu(0), 1e-15));
        assert!(close(&flow_from_range(&e1, PI / 2.0, 1.0, [0.0; 2]).vec, &b.ev(0), 1e-15));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let (a, t) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
            let g = rng.random_range(0.05..20.0);
            let drift = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let raw = flow_from_range(&range_primary_circle(a, &b), t, g, drift);
            let n = normalize(&raw, &d).unwrap();
            assert!(close(&n.vec, &flow_torus_vec(a, t, &b), 1e-8));
        }
    }

    #[test]
    fn torus_map_values() {
        let (d, b) = setup();
        for i in 0..36 {
            let a = TAU * i as f64 / 36.0;
            let horiz = flow_torus_vec(a, 0.0, &b);
            let mut want = [0.0; 18];
            for p in 0..9 {
                want[p] = a.cos() * b.scalar[0][p] + a.sin() * b.scalar[1][p];
            }
            assert!(close(&horiz, &want, 1e-15));
            for j in 0..36 {
                let t = TAU * j as f64 / 36.0;
                let f = flow_torus_map(TorusParams::new(a, t), &b);
                assert!((contrast_norm_of(&f.vec, &d) - 1.0).abs() < 1e-10);
                assert!(f.u().iter().sum::<f64>().abs() < 1e-12);
                // fixed by normalization
                let n = normalize(&f.to_raw("f"), &d).unwrap();
                assert!(close(&n.vec, &f.vec, 1e-12));
                // projection lands on the four coefficients of the formula
                let c = project_vec(&f.vec, &b, &d);
                assert!((c[0] - t.cos() * a.cos()).abs() < 1e-10);
                assert!((c[9] - t.sin() * a.sin()).abs() < 1e-10);
            }
        }
        assert!(close(&flow_torus_vec(0.0, PI / 2.0, &b), &b.ev(0), 1e-15));
    }

    #[test]
    fn torus_direction_is_theta() {
        let (_, b) = setup();
        for i in 0..24 {
            for j in 0..24 {
                let (a, t) = (TAU * i as f64 / 24.0 + 0.01, TAU * j as f64 / 24.0);
                let f = flow_torus_map(TorusParams::new(a, t), &b);
                let phi = predominant_direction(&f).unwrap().angle().unwrap();
                assert!(crate::patch_pipeline::projective_distance(phi, t) < 1e-8);
            }
        }
        let f = flow_torus_map(TorusParams::new(0.3, PI / 3.0), &b);
        let phi = predominant_direction(&f).unwrap().angle().unwrap();
        assert!((phi - PI / 3.0).abs() < 1e-8);
    }

    #[test]
    fn horizontal_circle_is_theta_zero_or_pi_slice() {
        let (_, b) = setup();
        for i in 0..36 {
            let a = TAU * i as f64 / 36.0;
            let at_pi = flow_torus_vec(a, PI, &b);
            let neg: Vec<f64> = flow_torus_vec(a, 0.0, &b).iter().map(|x| -x).collect();
            assert!(close(&at_pi, &neg, 1e-15));
        }
    }

    #[test]
    fn shear_round_trip() {
        let s = shear_coordinates(TorusParams::new(PI / 2.0, PI / 2.0));
        assert_eq!(s, (PI / 2.0, 0.0));
        assert_eq!(shear_coordinates(TorusParams::new(0.0, 1.25)), (0.0, 1.25));
        for i in 0..20 {
            for j in 0..20 {
                let p = TorusParams::new(TAU * i as f64 / 20.0, TAU * j as f64 / 20.0);
                let (a, s) = shear_coordinates(p);
                let back = unshear_coordinates(a, s);
                assert!((back.alpha - p.alpha).abs() < 1e-12);
                let dt = (back.theta - p.theta).rem_euclid(TAU);
                assert!(dt.min(TAU - dt) < 1e-12);
            }
        }
    }

    #[test]
    fn klein_identification() {
        for i in 0..40 {
            for j in 0..40 {
                let (u, v) = (TAU * i as f64 / 40.0, TAU * j as f64 / 40.0);
                let a = klein_embedding(u, v);
                let c = klein_embedding(u + TAU, TAU - v);
                assert!(close(&a, &c, 1e-12));
            }
        }
    }

    #[test]
    fn sampler_cases() {
        let (d, b) = setup();
        let circle = sample_cloud(
            &SampleSpec {
                shape: Shape::Circle,
                count: 4,
                noise_sigma: 0.0,
                layout: Layout::Grid,
                seed: 0,
            },
            &b,
        );
        let want = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (p, w) in circle.points().iter().zip(want) {
            assert!(close(p, &w, 1e-15));
        }
        let torus = sample_cloud(
            &SampleSpec {
                shape: Shape::FlowTorus,
                count: 200,
                noise_sigma: 0.0,
                layout: Layout::Random,
                seed: 3,
            },
            &b,
        );
        assert_eq!(torus.dim(), 18);
        for p in torus.points() {
            let v: [f64; 18] = p.as_slice().try_into().unwrap();
            assert!((contrast_norm_of(&v, &d) - 1.0).abs() < 1e-10);
        }
        let spec = SampleSpec {
            shape: Shape::KleinControl,
            count: 50,
            noise_sigma: 0.05,
            layout: Layout::Random,
            seed: 8,
        };
        assert_eq!(sample_cloud(&spec, &b), sample_cloud(&spec, &b));
        assert_eq!(sample_cloud(&spec, &b).dim(), 4);
    }

    #[test]
    fn identification_report() {
        let (d, b) = setup();
        let r = quotient_identification_check(36, &b, &d);
        assert!(r.shift_holds, "{r:?}");
        assert!(!r.negation_holds);
        assert!(r.min_unrelated_distance > 0.1);
        let f00 = flow_torus_vec(0.0, 0.0, &b);
        let fpp = flow_torus_vec(PI, PI, &b);
        assert!(euclidean(&f00, &fpp) < 1e-15);
        let fp0 = flow_torus_vec(PI, 0.0, &b);
        let diff: Vec<f64> = f00.iter().zip(fp0).map(|(x, y)| x - y).collect();
        assert!(((d.quadratic(&diff[..9]) + d.quadratic(&diff[9..])).sqrt() - 2.0).abs() < 1e-12);
    }
}
