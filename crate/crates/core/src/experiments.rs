//! End-to-end protocols shared by the CLI and the acceptance suite. Each
//! returns a serializable report carrying its parameters and a verdict.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow_io::{read_flo, write_flo, FlowField, FlowIoError, RawPatch};
use crate::geometry::{
    cross_distances, densest_core, distance_matrix, maxmin_sample_cloud,
    random_subsample, GeometryError, PointCloud,
};
use crate::model_synth::{
    flow_from_range, quotient_identification_check, range_primary_circle, sample_cloud,
    IdentificationReport, Layout, SampleSpec, Shape,
};
use crate::patch_pipeline::{
    normalize, predominant_direction, project, select_top_contrast, Direction, FlowBasis,
    GridLaplacian, PatchError,
};
use crate::persistence::{
    betti_signature, lazy_witness_filtration, oracle_betti, persistent_homology,
    persistent_homology_with, vr_filtration, Algorithm, Barcode, PersistenceError,
};
use crate::zigzag::{auto_scale, build_angle_zigzag, zigzag_intervals, ZigzagBarcode, ZigzagError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("flow input: {0}")]
    FlowIo(#[from] FlowIoError),
    #[error("patch pipeline: {0}")]
    Patch(#[from] PatchError),
    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),
    #[error("persistence: {0}")]
    Persistence(#[from] PersistenceError),
    #[error("zigzag: {0}")]
    Zigzag(#[from] ZigzagError),
    #[error("{0}")]
    Invalid(String),
}

/// Full VR barcode of a small cloud up to `max_dim`, filtered to its diameter.
pub fn full_vr_barcode(cloud: &PointCloud, max_dim: usize, p: u64) -> Result<Barcode, ExperimentError> {
    let dm = distance_matrix(cloud);
    let r = dm.diameter().max(f64::MIN_POSITIVE);
    Ok(persistent_homology(&vr_filtration(&dm, r, max_dim)?, p)?)
}

// ---------------------------------------------------------------------------
// Synthetic flow patches

/// Which camera translations the synthetic scene uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Translation {
    /// `θ ∈ {0, π}`.
    Horizontal,
    /// `θ` uniform on the circle.
    AllDirections,
}

/// Flow patches from primary-circle range patches under random gain and
/// drift, with pixel noise, mixed with low-contrast clutter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticFlowParams {
    pub count: usize,
    pub translation: Translation,
    pub clutter_fraction: f64,
    /// Median pixel noise as a fraction of the patch gain.
    pub noise: f64,
    /// Log-normal spread of the per-patch noise level.
    pub noise_spread: f64,
    pub gain_min: f64,
    pub gain_max: f64,
    pub drift_sigma: f64,
    /// Per-pixel spread of the clutter patches.
    pub clutter_sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticFlowParams {
    fn default() -> Self {
        Self {
            count: 40_000,
            translation: Translation::AllDirections,
            clutter_fraction: 0.5,
            noise: 0.015,
            noise_spread: 0.5,
            gain_min: 0.5,
            gain_max: 2.0,
            drift_sigma: 1.0,
            clutter_sigma: 0.05,
            seed: 1,
        }
    }
}

pub fn synthetic_flow_patches(params: &SyntheticFlowParams, basis: &FlowBasis) -> Vec<RawPatch> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    (0..params.count)
        .map(|_| {
            let drift = [
                params.drift_sigma * unit.sample(&mut rng),
                params.drift_sigma * unit.sample(&mut rng),
            ];
            if rng.random_bool(params.clutter_fraction.clamp(0.0, 1.0)) {
                let mut vec = [0.0; 18];
                for (i, x) in vec.iter_mut().enumerate() {
                    *x = drift[i / 9] + params.clutter_sigma * unit.sample(&mut rng);
                }
                return RawPatch::synthetic(vec, "clutter");
            }
            let alpha = rng.random_range(0.0..TAU);
            let theta = match params.translation {
                Translation::Horizontal => {
                    if rng.random_bool(0.5) {
                        0.0
                    } else {
                        PI
                    }
                }
                Translation::AllDirections => rng.random_range(0.0..TAU),
            };
            // log-uniform gain
            let gain = (rng.random_range(params.gain_min.ln()..=params.gain_max.ln())).exp();
            let level = params.noise * (params.noise_spread * unit.sample(&mut rng)).exp();
            let mut patch = flow_from_range(&range_primary_circle(alpha, basis), theta, gain, drift);
            for x in patch.vec.iter_mut() {
                *x += level * gain * unit.sample(&mut rng);
            }
            patch
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Patch pipeline: contrast selection through per-bin dense cores

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    /// Fraction of highest-contrast patches kept.
    pub q: f64,
    /// Density neighbour count; capped at a quarter of each bin.
    pub k: usize,
    /// Percentage of densest points kept.
    pub p: f64,
    pub bins: usize,
    pub halfwidth: f64,
    pub subsample_cap: usize,
    /// Maxmin landmarks taken from each core.
    pub landmarks: usize,
    /// First maxmin landmark, as a position in the core.
    pub maxmin_start: usize,
    pub seed: u64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            q: 0.2,
            k: 300,
            p: 50.0,
            bins: 12,
            halfwidth: PI / 12.0,
            subsample_cap: 50_000,
            landmarks: 50,
            maxmin_start: 0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinSummary {
    pub theta: f64,
    pub members: usize,
    pub k_used: usize,
    pub core_size: usize,
    pub landmark_count: usize,
}

/// Per-bin outputs. Clouds live in the 16 DCT coordinates; ids index the
/// subsampled, normalized patch set.
#[derive(Debug, Clone)]
pub struct BinOutput {
    pub summary: BinSummary,
    pub core: PointCloud,
    pub landmarks: PointCloud,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub input: usize,
    pub selected: usize,
    pub zero_contrast: usize,
    pub coordinates: PointCloud,
    pub bins: Vec<BinOutput>,
}

/// Contrast selection, normalization, DCT coordinates, subsampling, angle
/// bins centred at `iπ/bins`, densest cores and maxmin landmarks.
pub fn run_pipeline(
    patches: &[RawPatch],
    params: &PipelineParams,
    d: &GridLaplacian,
    basis: &FlowBasis,
) -> Result<PipelineOutput, ExperimentError> {
    if params.bins == 0 || params.landmarks == 0 || params.k == 0 || params.subsample_cap == 0 {
        return Err(ExperimentError::Invalid("counts must be positive".into()));
    }
    let selected = select_top_contrast(patches, params.q, d)?;
    let mut normalized = Vec::with_capacity(selected.len());
    let mut zero_contrast = 0;
    for patch in &selected {
        match normalize(patch, d) {
            Ok(n) => normalized.push(n),
            Err(PatchError::ZeroContrast { .. }) => zero_contrast += 1,
            Err(e) => return Err(e.into()),
        }
    }
    if normalized.is_empty() {
        return Err(ExperimentError::Invalid("no patch survived normalization".into()));
    }
    let coords: Vec<Vec<f64>> = normalized.iter().map(|n| project(n, basis, d).to_vec()).collect();
    let all = PointCloud::new(coords)?;
    let cloud = random_subsample(&all, params.subsample_cap, params.seed);
    let directions: Vec<Option<f64>> = cloud
        .ids()
        .iter()
        .map(|&id| match predominant_direction(&normalized[id]) {
            Ok(Direction::Angle(a)) => Some(a),
            _ => None,
        })
        .collect();

    let mut bins = Vec::with_capacity(params.bins);
    for b in 0..params.bins {
        let theta = PI * b as f64 / params.bins as f64;
        let members: Vec<usize> = directions
            .iter()
            .enumerate()
            .filter_map(|(i, a)| {
                a.filter(|&a| crate::patch_pipeline::projective_distance(a, theta) <= params.halfwidth)
                    .map(|_| i)
            })
            .collect();
        if members.len() < 2 {
            return Err(ExperimentError::Invalid(format!(
                "bin {b} at θ = {theta:.4} holds {} patches",
                members.len()
            )));
        }
        let bin = cloud.select(&members);
        let k_used = params.k.min(bin.len() / 4).max(1);
        let core = densest_core(&bin, k_used, params.p)?;
        let m = params.landmarks.min(core.len());
        let landmarks = core.select(&maxmin_sample_cloud(&core, m, params.maxmin_start)?);
        bins.push(BinOutput {
            summary: BinSummary {
                theta,
                members: bin.len(),
                k_used,
                core_size: core.len(),
                landmark_count: landmarks.len(),
            },
            core,
            landmarks,
        });
    }
    Ok(PipelineOutput {
        input: patches.len(),
        selected: selected.len(),
        zero_contrast,
        coordinates: cloud,
        bins,
    })
}

// ---------------------------------------------------------------------------
// Witness-complex signatures on the torus and the Klein control

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessParams {
    pub witnesses: usize,
    pub landmarks: usize,
    pub nu: usize,
    pub noise_sigma: f64,
    /// `r_max` as a multiple of the landmark cover radius.
    pub r_max_factor: f64,
    /// Simplices are built one dimension above the highest reported.
    pub max_dim: usize,
    pub primes: Vec<u64>,
    pub persistence_ratio: f64,
    pub seed: u64,
}

impl Default for WitnessParams {
    fn default() -> Self {
        Self {
            witnesses: 10_000,
            landmarks: 150,
            nu: 1,
            noise_sigma: 0.05,
            r_max_factor: 1.2,
            max_dim: 3,
            primes: vec![2, 3],
            persistence_ratio: 3.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimeSignature {
    pub prime: u64,
    pub counts: Vec<usize>,
    pub noise_floor: f64,
    pub expected: Vec<usize>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub shape: Shape,
    pub params: WitnessParams,
    pub cover_radius: f64,
    pub r_max: f64,
    pub simplex_counts: Vec<usize>,
    pub signatures: Vec<PrimeSignature>,
    pub passed: bool,
}

/// Expected `(β₀, β₁, β₂)` for the synthetic shapes: the torus is orientable,
/// the Klein bottle loses a loop and its top class away from characteristic 2.
pub fn expected_signature(shape: Shape, prime: u64) -> Option<Vec<usize>> {
    match (shape, prime) {
        (Shape::FlowTorus, _) => Some(vec![1, 2, 1]),
        (Shape::KleinControl, 2) => Some(vec![1, 2, 1]),
        (Shape::KleinControl, _) => Some(vec![1, 1, 0]),
        (Shape::Circle | Shape::HorizontalCircle, _) => Some(vec![1, 1]),
    }
}

pub fn witness_signature(
    shape: Shape,
    params: &WitnessParams,
    basis: &FlowBasis,
) -> Result<WitnessReport, ExperimentError> {
    let cloud = sample_cloud(
        &SampleSpec {
            shape,
            count: params.witnesses,
            noise_sigma: params.noise_sigma,
            layout: Layout::Random,
            seed: params.seed,
        },
        basis,
    );
    let lm = maxmin_sample_cloud(&cloud, params.landmarks, 0)?;
    let w2l = cross_distances(&cloud, &cloud.select(&lm))?;
    let cover_radius = w2l
        .iter()
        .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let r_max = params.r_max_factor * cover_radius;
    let filt = lazy_witness_filtration(&w2l, lm.len(), params.nu, r_max, params.max_dim)?;
    let mut signatures = Vec::new();
    for &p in &params.primes {
        let bc = persistent_homology(&filt, p)?;
        let sig = betti_signature(&bc, params.persistence_ratio);
        let expected = expected_signature(shape, p).unwrap_or_default();
        signatures.push(PrimeSignature {
            prime: p,
            passed: sig.counts == expected,
            counts: sig.counts,
            noise_floor: sig.noise_floor,
            expected,
        });
    }
    Ok(WitnessReport {
        shape,
        params: params.clone(),
        cover_radius,
        r_max,
        simplex_counts: filt.count_by_dim(),
        passed: signatures.iter().all(|s| s.passed),
        signatures,
    })
}

// ---------------------------------------------------------------------------
// Noisy circle calibration

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleParams {
    pub points: usize,
    pub noise_sigma: f64,
    pub prime: u64,
    pub min_window: f64,
    pub seed: u64,
}

impl Default for CircleParams {
    fn default() -> Self {
        Self {
            points: 21,
            noise_sigma: 0.1,
            prime: 2,
            min_window: 0.5,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircleReport {
    pub params: CircleParams,
    /// Longest `[start, end)` on which `(β₀, β₁) = (1, 1)`.
    pub window: Option<(f64, f64)>,
    pub width: f64,
    pub passed: bool,
}

/// Longest run of consecutive critical scales on which the first Betti
/// numbers equal `target`, as `[start, end)`.
pub fn betti_window(bc: &Barcode, critical: &[f64], target: &[usize]) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    let mut start: Option<f64> = None;
    for (i, &s) in critical.iter().enumerate() {
        let betti = bc.betti_at(s);
        let hit = betti.len() >= target.len() && betti[..target.len()] == *target;
        let next = critical.get(i + 1).copied().unwrap_or(bc.r_max);
        match (hit, start) {
            (true, None) => start = Some(s),
            (false, Some(_)) => start = None,
            _ => {}
        }
        if let Some(a) = start.filter(|_| hit) {
            if best.is_none_or(|(x, y)| next - a > y - x) {
                best = Some((a, next));
            }
        }
    }
    best
}

pub fn circle_calibration(params: &CircleParams, basis: &FlowBasis) -> Result<CircleReport, ExperimentError> {
    let cloud = sample_cloud(
        &SampleSpec {
            shape: Shape::Circle,
            count: params.points,
            noise_sigma: params.noise_sigma,
            layout: Layout::Grid,
            seed: params.seed,
        },
        basis,
    );
    let dm = distance_matrix(&cloud);
    let filt = vr_filtration(&dm, dm.diameter(), 2)?;
    let bc = persistent_homology(&filt, params.prime)?;
    let window = betti_window(&bc, &filt.critical_scales(), &[1, 1]);
    let width = window.map_or(0.0, |(a, b)| b - a);
    Ok(CircleReport {
        params: params.clone(),
        window,
        width,
        passed: width >= params.min_window,
    })
}

// ---------------------------------------------------------------------------
// Horizontal flow circle

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizontalParams {
    pub synth: SyntheticFlowParams,
    pub pipeline: PipelineParams,
    /// Maxmin subsample of the core used for the VR barcode.
    pub vr_points: usize,
    pub tolerance: f64,
    pub prime: u64,
    pub persistence_ratio: f64,
}

impl Default for HorizontalParams {
    fn default() -> Self {
        Self {
            synth: SyntheticFlowParams {
                count: 20_000,
                translation: Translation::Horizontal,
                ..SyntheticFlowParams::default()
            },
            pipeline: PipelineParams {
                bins: 1,
                ..PipelineParams::default()
            },
            vr_points: 100,
            tolerance: 0.05,
            prime: 2,
            persistence_ratio: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizontalReport {
    pub params: HorizontalParams,
    pub bin: BinSummary,
    pub max_radius_error: f64,
    pub signature: Vec<usize>,
    pub passed: bool,
}

pub fn horizontal_circle(
    params: &HorizontalParams,
    d: &GridLaplacian,
    basis: &FlowBasis,
) -> Result<HorizontalReport, ExperimentError> {
    let patches = synthetic_flow_patches(&params.synth, basis);
    let out = run_pipeline(&patches, &params.pipeline, d, basis)?;
    let bin = &out.bins[0];
    let max_radius_error = bin
        .core
        .points()
        .iter()
        .map(|c| (c[0] * c[0] + c[1] * c[1] - 1.0).abs())
        .fold(0.0, f64::max);
    let m = params.vr_points.min(bin.core.len());
    let sub = bin.core.select(&maxmin_sample_cloud(&bin.core, m, 0)?);
    let bc = full_vr_barcode(&sub, 2, params.prime)?;
    let signature = betti_signature(&bc, params.persistence_ratio).counts;
    Ok(HorizontalReport {
        params: params.clone(),
        bin: bin.summary.clone(),
        passed: max_radius_error <= params.tolerance && signature.get(1) == Some(&1),
        max_radius_error,
        signature,
    })
}

// ---------------------------------------------------------------------------
// Angle-bin fibers and the zigzag across them

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusBinParams {
    pub synth: SyntheticFlowParams,
    pub pipeline: PipelineParams,
    pub prime: u64,
    pub persistence_ratio: f64,
    /// Zigzag scale; chosen from the bins' barcodes when absent.
    pub scale: Option<f64>,
}

impl Default for TorusBinParams {
    fn default() -> Self {
        Self {
            synth: SyntheticFlowParams { count: 240_000, ..SyntheticFlowParams::default() },
            pipeline: PipelineParams::default(),
            prime: 2,
            persistence_ratio: 3.0,
            scale: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberResult {
    pub bin: BinSummary,
    pub signature: Vec<usize>,
    pub dominant_loop: Option<(f64, Option<f64>)>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberReport {
    pub params: TorusBinParams,
    pub bins: Vec<FiberResult>,
    pub passing_bins: usize,
    pub passed: bool,
}

/// Synthetic torus patches through the pipeline; the per-bin landmark sets.
pub fn torus_bins(
    params: &TorusBinParams,
    d: &GridLaplacian,
    basis: &FlowBasis,
) -> Result<PipelineOutput, ExperimentError> {
    run_pipeline(&synthetic_flow_patches(&params.synth, basis), &params.pipeline, d, basis)
}

/// Each bin's landmark set should carry exactly one long loop.
pub fn fiber_check(params: &TorusBinParams, out: &PipelineOutput) -> Result<FiberReport, ExperimentError> {
    let mut bins = Vec::with_capacity(out.bins.len());
    for b in &out.bins {
        let bc = full_vr_barcode(&b.landmarks, 2, params.prime)?;
        let signature = betti_signature(&bc, params.persistence_ratio).counts;
        bins.push(FiberResult {
            bin: b.summary.clone(),
            passed: signature.get(1) == Some(&1),
            dominant_loop: bc.dominant(1).map(|iv| (iv.birth, iv.death)),
            signature,
        });
    }
    let passing_bins = bins.iter().filter(|b| b.passed).count();
    Ok(FiberReport {
        params: params.clone(),
        passed: passing_bins == bins.len(),
        passing_bins,
        bins,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZigzagReport {
    pub params: TorusBinParams,
    pub scale: f64,
    pub scale_window: Option<(f64, f64)>,
    pub barcode: ZigzagBarcode,
    pub full_length: usize,
    pub longest_other: usize,
    pub passed: bool,
}

/// The `2m`-node union zigzag over the bins' landmark sets in dimension 1.
pub fn angle_zigzag(params: &TorusBinParams, out: &PipelineOutput) -> Result<ZigzagReport, ExperimentError> {
    let clouds: Vec<PointCloud> = out.bins.iter().map(|b| b.landmarks.clone()).collect();
    let (scale, scale_window) = match params.scale {
        Some(s) => (s, None),
        None => {
            let c = auto_scale(&clouds, params.prime)?;
            (c.scale, Some((c.window_start, c.window_end)))
        }
    };
    let diagram = build_angle_zigzag(&clouds, scale, 2)?;
    let barcode = zigzag_intervals(&diagram, 1, params.prime)?;
    let n = barcode.node_count();
    let full_length = barcode.full_length();
    let longest_other = barcode
        .intervals
        .iter()
        .filter(|iv| iv.span() < n)
        .map(|iv| iv.span())
        .max()
        .unwrap_or(0);
    Ok(ZigzagReport {
        params: params.clone(),
        scale,
        scale_window,
        passed: full_length == 1,
        full_length,
        longest_other,
        barcode,
    })
}

// ---------------------------------------------------------------------------
// Exact checks

pub fn identification(grid: usize, d: &GridLaplacian, basis: &FlowBasis) -> IdentificationReport {
    quotient_identification_check(grid, basis, d)
}

fn random_cloud(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> PointCloud {
    let pts = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    PointCloud::new(pts).expect("finite points")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub clouds: usize,
    pub max_points: usize,
    pub primes: Vec<u64>,
    pub seed: u64,
    pub comparisons: usize,
    pub mismatches: Vec<String>,
    pub passed: bool,
}

/// Betti numbers from barcodes against the dense oracle at every critical
/// scale of random small VR filtrations.
pub fn oracle_equivalence(
    clouds: usize,
    max_points: usize,
    primes: &[u64],
    seed: u64,
) -> Result<OracleReport, ExperimentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut comparisons = 0;
    let mut mismatches = Vec::new();
    for c in 0..clouds {
        let n = rng.random_range(2..=max_points.max(2));
        let dim = rng.random_range(2..=5);
        let cloud = random_cloud(&mut rng, n, dim);
        let dm = distance_matrix(&cloud);
        let filt = vr_filtration(&dm, dm.diameter().max(f64::MIN_POSITIVE), 3)?;
        for &p in primes {
            let bc = persistent_homology(&filt, p)?;
            for r in filt.critical_scales() {
                comparisons += 1;
                let got = bc.betti_at(r);
                let want = oracle_betti(&filt, r, p)?;
                if got != want {
                    mismatches.push(format!("cloud {c}, p={p}, r={r}: {got:?} vs {want:?}"));
                }
            }
        }
    }
    Ok(OracleReport {
        clouds,
        max_points,
        primes: primes.to_vec(),
        seed,
        comparisons,
        passed: mismatches.is_empty(),
        mismatches,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferentialReport {
    pub filtrations: usize,
    pub seed: u64,
    pub intervals_compared: usize,
    pub mismatches: Vec<usize>,
    pub passed: bool,
}

/// Standard against clearing reduction on random VR and witness filtrations.
pub fn differential_reduction(filtrations: usize, seed: u64) -> Result<DifferentialReport, ExperimentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = Vec::new();
    let mut intervals_compared = 0;
    for i in 0..filtrations {
        let n = rng.random_range(8..=18);
        let dim = rng.random_range(2..=4);
        let cloud = random_cloud(&mut rng, n, dim);
        let p = if i % 2 == 0 { 2 } else { 3 };
        let filt = if i % 3 == 2 {
            // witnesses are the cloud, landmarks its first third
            let m = (n / 3).max(2);
            let w2l = cross_distances(&cloud, &cloud.select(&(0..m).collect::<Vec<_>>()))?;
            lazy_witness_filtration(&w2l, m, 1, 2.0, 3)?
        } else {
            let dm = distance_matrix(&cloud);
            vr_filtration(&dm, rng.random_range(0.3..1.0) * dm.diameter(), 3)?
        };
        let a = persistent_homology_with(&filt, p, Algorithm::Standard)?;
        let b = persistent_homology_with(&filt, p, Algorithm::Clearing)?;
        intervals_compared += a.intervals.len();
        if a != b {
            mismatches.push(i);
        }
    }
    Ok(DifferentialReport {
        filtrations,
        seed,
        intervals_compared,
        passed: mismatches.is_empty(),
        mismatches,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundTripReport {
    pub fields: usize,
    pub seed: u64,
    pub failures: Vec<usize>,
    pub passed: bool,
}

/// Random fields through `write_flo` then `read_flo`, compared bit for bit.
pub fn flo_roundtrip(fields: usize, seed: u64) -> Result<RoundTripReport, ExperimentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    for i in 0..fields {
        let w = rng.random_range(1..=48);
        let h = rng.random_range(1..=48);
        let data: Vec<[f32; 2]> = (0..w * h)
            .map(|_| {
                let mut v = [0f32; 2];
                for x in &mut v {
                    // finite values spread over many exponents, sign included
                    *x = loop {
                        let c = f32::from_bits(rng.random::<u32>());
                        if c.is_finite() && c.abs() < 1e9 {
                            break c;
                        }
                    };
                }
                v
            })
            .collect();
        let field = FlowField::new(w, h, data)?;
        let back = read_flo(&write_flo(&field))?;
        let same = back.width() == w
            && back.height() == h
            && back
                .data()
                .iter()
                .zip(field.data())
                .all(|(a, b)| a[0].to_bits() == b[0].to_bits() && a[1].to_bits() == b[1].to_bits());
        if !same {
            failures.push(i);
        }
    }
    Ok(RoundTripReport {
        fields,
        seed,
        passed: failures.is_empty(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patch_pipeline::{dct_flow_basis, grid_laplacian};
    use crate::persistence::Interval;

    #[test]
    fn betti_window_on_a_hand_barcode() {
        let bc = Barcode {
            intervals: vec![
                Interval { dim: 0, birth: 0.0, death: None },
                Interval { dim: 0, birth: 0.0, death: Some(0.5) },
                Interval { dim: 1, birth: 0.6, death: Some(1.5) },
            ],
            prime: 2,
            max_dim: 2,
            r_max: 3.0,
        };
        let w = betti_window(&bc, &[0.0, 0.5, 0.6, 1.5, 2.0], &[1, 1]).unwrap();
        assert_eq!(w, (0.6, 1.5));
        assert!(betti_window(&bc, &[0.0, 0.5], &[1, 1]).is_none());
    }

    #[test]
    fn synthetic_patches_are_reproducible() {
        let b = dct_flow_basis(&grid_laplacian());
        let p = SyntheticFlowParams { count: 50, ..Default::default() };
        let a: Vec<[f64; 18]> = synthetic_flow_patches(&p, &b).iter().map(|x| x.vec).collect();
        let c: Vec<[f64; 18]> = synthetic_flow_patches(&p, &b).iter().map(|x| x.vec).collect();
        assert_eq!(a, c);
    }

    #[test]
    fn horizontal_patches_point_horizontally() {
        let d = grid_laplacian();
        let b = dct_flow_basis(&d);
        let p = SyntheticFlowParams {
            count: 200,
            translation: Translation::Horizontal,
            clutter_fraction: 0.0,
            noise: 0.0,
            ..Default::default()
        };
        for patch in synthetic_flow_patches(&p, &b) {
            let n = normalize(&patch, &d).unwrap();
            let a = predominant_direction(&n).unwrap().angle().unwrap();
            assert!(crate::patch_pipeline::projective_distance(a, 0.0) < 1e-9);
        }
    }
}
