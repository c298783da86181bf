use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use flowtopo::experiments::{
    angle_zigzag, expected_signature, fiber_check, identification, oracle_equivalence, run_pipeline,
    synthetic_flow_patches, witness_signature, ExperimentError, PipelineParams, SyntheticFlowParams,
    TorusBinParams, WitnessParams,
};
use flowtopo::flow_io::{read_flo, sample_patches_with_cutoff, FlowField, Provenance, RawPatch};
use flowtopo::geometry::{cross_distances, distance_matrix, maxmin_sample_cloud, PointCloud};
use flowtopo::model_synth::{sample_cloud, SampleSpec, Shape};
use flowtopo::patch_pipeline::{dct_flow_basis, grid_laplacian, FlowBasis, GridLaplacian};
use flowtopo::persistence::{
    barcode_to_json, betti_signature, diagram_csv, diagram_svg, lazy_witness_filtration,
    persistent_homology, vr_filtration, Filtration,
};
use flowtopo::tables::{cloud_from_csv, cloud_to_csv, coefficients_to_csv, patches_from_csv, patches_to_csv, CloudDocument};

use crate::config::{ComplexKind, ConfigError, ExperimentConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Sample a model cloud
    Synth,
    /// Sample patches from a directory of .flo files into a patch CSV
    Ingest,
    /// Patch pipeline: cores and landmarks per angle bin, with fiber check
    Pipeline,
    /// Filtration, barcodes and persistence diagrams of one cloud
    Ph,
    /// Angle-bin zigzag barcode
    Zigzag,
    /// Identification, torus/Klein signatures and oracle equivalence
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Synth => "synth",
            Self::Ingest => "ingest",
            Self::Pipeline => "pipeline",
            Self::Ph => "ph",
            Self::Zigzag => "zigzag",
            Self::Verify => "verify",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("input {path}: {reason}")]
    Input { path: String, reason: String },
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
    #[error("{stage} failed: {message}")]
    Stage { stage: &'static str, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Input { .. } => 2,
            Self::Output { .. } | Self::Stage { .. } => 1,
        }
    }
}

fn stage<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError::Stage { stage, message: e.to_string() }
}

/// Result of one command: the verdict and the report path.
#[derive(Debug)]
pub struct Outcome {
    pub passed: bool,
    pub report: PathBuf,
    pub summary: String,
}

#[derive(Serialize)]
struct Report<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    config: &'a ExperimentConfig,
    passed: bool,
    results: Value,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    out: PathBuf,
    d: GridLaplacian,
    basis: FlowBasis,
    written: Vec<String>,
}

impl Ctx<'_> {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|source| CliError::Output {
            path: path.display().to_string(),
            source,
        })?;
        self.written.push(name.to_string());
        Ok(())
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable report");
    s.push('\n');
    s
}

pub fn execute(command: Command, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let out = PathBuf::from(&cfg.out_dir);
    fs::create_dir_all(&out).map_err(|source| CliError::Output {
        path: out.display().to_string(),
        source,
    })?;
    let d = grid_laplacian();
    let basis = dct_flow_basis(&d);
    let mut ctx = Ctx { cfg, out, d, basis, written: Vec::new() };
    let (passed, results, summary) = match command {
        Command::Synth => synth(&mut ctx)?,
        Command::Ingest => ingest(&mut ctx)?,
        Command::Pipeline => pipeline(&mut ctx)?,
        Command::Ph => ph(&mut ctx)?,
        Command::Zigzag => zigzag(&mut ctx)?,
        Command::Verify => verify(&mut ctx)?,
    };
    let mut results = results;
    results["files"] = json!(ctx.written);
    let report = Report {
        tool: "flowtopo",
        version: flowtopo::VERSION,
        command: command.name(),
        seed: cfg.seed,
        config: cfg,
        passed,
        results,
    };
    let name = format!("{}_report.json", command.name());
    ctx.write(&name, &pretty(&report))?;
    Ok(Outcome { passed, report: ctx.out.join(name), summary })
}

type Step = Result<(bool, Value, String), CliError>;

fn spec(cfg: &ExperimentConfig) -> SampleSpec {
    SampleSpec {
        shape: cfg.shape,
        count: cfg.points,
        noise_sigma: cfg.noise_sigma,
        layout: cfg.layout,
        seed: cfg.seed,
    }
}

fn shape_name(shape: Shape) -> String {
    serde_json::to_value(shape).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn synth(ctx: &mut Ctx) -> Step {
    let cloud = sample_cloud(&spec(ctx.cfg), &ctx.basis);
    let shape = shape_name(ctx.cfg.shape);
    ctx.write("cloud.csv", &cloud_to_csv(&cloud))?;
    ctx.write("cloud.json", &pretty(&CloudDocument::new(&shape, &cloud)))?;
    let summary = format!("{} points of {shape} in R^{}", cloud.len(), cloud.dim());
    Ok((true, json!({ "shape": shape, "points": cloud.len(), "dim": cloud.dim() }), summary))
}

fn read_input(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Input { path: path.display().to_string(), reason: e.to_string() })
}

fn flo_files(dir: &str) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Input { path: dir.into(), reason: e.to_string() })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "flo"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Input { path: dir.into(), reason: "no .flo files".into() });
    }
    Ok(files)
}

fn load_fields(dir: &str) -> Result<(Vec<String>, Vec<FlowField>), CliError> {
    let mut names = Vec::new();
    let mut fields = Vec::new();
    for path in flo_files(dir)? {
        let field = read_flo(&read_input(&path)?).map_err(|e| CliError::Input {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        names.push(path.file_name().unwrap_or_default().to_string_lossy().into_owned());
        fields.push(field);
    }
    Ok((names, fields))
}

fn ingest(ctx: &mut Ctx) -> Step {
    let cfg = ctx.cfg;
    let dir = cfg.input_dir.as_deref().ok_or(ConfigError::Invalid {
        key: "input_dir",
        reason: "ingest needs a directory of .flo files".into(),
    })?;
    let (names, fields) = load_fields(dir)?;
    let patches = sample_patches_with_cutoff(&fields, cfg.ingest_patches, cfg.seed, cfg.sentinel_cutoff as f32)
        .map_err(stage("ingest"))?;
    let vecs: Vec<[f64; 18]> = patches.iter().map(|p| p.vec).collect();
    ctx.write("patches.csv", &patches_to_csv(&vecs))?;
    let sizes: Vec<Value> = names
        .iter()
        .zip(&fields)
        .map(|(n, f)| json!({ "file": n, "width": f.width(), "height": f.height() }))
        .collect();
    let summary = format!("{} patches from {} fields", vecs.len(), fields.len());
    Ok((true, json!({ "fields": sizes, "patches": vecs.len() }), summary))
}

fn synth_params(cfg: &ExperimentConfig) -> SyntheticFlowParams {
    SyntheticFlowParams {
        count: cfg.patches,
        translation: cfg.translation,
        clutter_fraction: cfg.clutter_fraction,
        noise: cfg.flow_noise,
        noise_spread: cfg.flow_noise_spread,
        gain_min: cfg.gain_min,
        gain_max: cfg.gain_max,
        drift_sigma: cfg.drift_sigma,
        clutter_sigma: cfg.clutter_sigma,
        seed: cfg.seed,
    }
}

fn torus_params(cfg: &ExperimentConfig) -> TorusBinParams {
    TorusBinParams {
        synth: synth_params(cfg),
        pipeline: PipelineParams {
            q: cfg.q,
            k: cfg.k,
            p: cfg.p,
            bins: cfg.bins,
            halfwidth: cfg.halfwidth,
            subsample_cap: cfg.subsample_cap,
            landmarks: cfg.landmarks,
            maxmin_start: cfg.maxmin_start,
            seed: cfg.seed,
        },
        prime: cfg.zigzag_prime,
        persistence_ratio: cfg.persistence_ratio,
        scale: cfg.zigzag_scale,
    }
}

/// Patches from `patch_csv`, else `input_dir`, else the synthetic scene.
fn load_patches(ctx: &Ctx) -> Result<(Vec<RawPatch>, Value), CliError> {
    let cfg = ctx.cfg;
    if let Some(path) = &cfg.patch_csv {
        let text = String::from_utf8(read_input(Path::new(path))?)
            .map_err(|e| CliError::Input { path: path.clone(), reason: e.to_string() })?;
        let vecs = patches_from_csv(&text).map_err(|e| CliError::Input { path: path.clone(), reason: e.to_string() })?;
        let patches = vecs
            .into_iter()
            .enumerate()
            .map(|(i, v)| RawPatch::new(v, Provenance::Synthetic(format!("csv:{i}"))))
            .collect();
        return Ok((patches, json!({ "patch_csv": path })));
    }
    if let Some(dir) = &cfg.input_dir {
        let (names, fields) = load_fields(dir)?;
        let patches = sample_patches_with_cutoff(&fields, cfg.ingest_patches, cfg.seed, cfg.sentinel_cutoff as f32)
            .map_err(stage("ingest"))?;
        return Ok((patches, json!({ "input_dir": dir, "files": names })));
    }
    let params = synth_params(cfg);
    Ok((synthetic_flow_patches(&params, &ctx.basis), json!({ "synthetic": params })))
}

fn pipeline(ctx: &mut Ctx) -> Step {
    let params = torus_params(ctx.cfg);
    let (patches, source) = load_patches(ctx)?;
    let out = run_pipeline(&patches, &params.pipeline, &ctx.d, &ctx.basis).map_err(stage("pipeline"))?;
    let coeffs: Vec<[f64; 16]> = out
        .coordinates
        .points()
        .iter()
        .map(|p| p.as_slice().try_into().expect("16 coordinates"))
        .collect();
    ctx.write("coefficients.csv", &coefficients_to_csv(&coeffs))?;
    for (b, bin) in out.bins.iter().enumerate() {
        ctx.write(&format!("bin{b:02}_core.csv"), &cloud_to_csv(&bin.core))?;
        ctx.write(&format!("bin{b:02}_landmarks.csv"), &cloud_to_csv(&bin.landmarks))?;
    }
    let fibers = fiber_check(&params, &out).map_err(stage("fiber check"))?;
    let summary = format!("{}/{} bins carry one long loop", fibers.passing_bins, fibers.bins.len());
    let results = json!({
        "source": source,
        "input": out.input,
        "selected": out.selected,
        "zero_contrast": out.zero_contrast,
        "subsampled": out.coordinates.len(),
        "fibers": fibers,
    });
    Ok((fibers.passed, results, summary))
}

fn ph_cloud(ctx: &Ctx) -> Result<(PointCloud, Option<Shape>), CliError> {
    match &ctx.cfg.cloud_csv {
        Some(path) => {
            let text = String::from_utf8(read_input(Path::new(path))?)
                .map_err(|e| CliError::Input { path: path.clone(), reason: e.to_string() })?;
            let cloud = cloud_from_csv(&text).map_err(|e| CliError::Input { path: path.clone(), reason: e.to_string() })?;
            Ok((cloud, None))
        }
        None => Ok((sample_cloud(&spec(ctx.cfg), &ctx.basis), Some(ctx.cfg.shape))),
    }
}

fn ph(ctx: &mut Ctx) -> Step {
    let cfg = ctx.cfg;
    let (cloud, shape) = ph_cloud(ctx)?;
    let (filt, detail): (Filtration, Value) = match cfg.complex {
        ComplexKind::Vr => {
            let cloud = if cloud.len() > cfg.vr_points {
                let idx = maxmin_sample_cloud(&cloud, cfg.vr_points, cfg.maxmin_start).map_err(stage("maxmin"))?;
                cloud.select(&idx)
            } else {
                cloud
            };
            let dm = distance_matrix(&cloud);
            let r_max = cfg.r_max.unwrap_or_else(|| dm.diameter().max(f64::MIN_POSITIVE));
            let filt = vr_filtration(&dm, r_max, cfg.max_dim).map_err(stage("filtration"))?;
            (filt, json!({ "complex": "vr", "points": cloud.len(), "r_max": r_max }))
        }
        ComplexKind::Witness => {
            let m = cfg.witness_landmarks.min(cloud.len());
            let lm = maxmin_sample_cloud(&cloud, m, cfg.maxmin_start).map_err(stage("maxmin"))?;
            let w2l = cross_distances(&cloud, &cloud.select(&lm)).map_err(stage("witness distances"))?;
            let cover = w2l
                .iter()
                .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max);
            let r_max = cfg.r_max.unwrap_or(cfg.r_max_factor * cover);
            let filt =
                lazy_witness_filtration(&w2l, lm.len(), cfg.nu, r_max, cfg.max_dim).map_err(stage("filtration"))?;
            let detail = json!({
                "complex": "witness",
                "witnesses": cloud.len(),
                "landmarks": lm.len(),
                "cover_radius": cover,
                "r_max": r_max,
            });
            (filt, detail)
        }
    };
    let mut passed = true;
    let mut per_prime = Vec::new();
    let mut lines = Vec::new();
    for &p in &cfg.primes {
        let bc = persistent_homology(&filt, p).map_err(stage("persistence"))?;
        ctx.write(&format!("barcode_z{p}.json"), &pretty(&barcode_to_json(&bc)))?;
        ctx.write(&format!("diagram_z{p}.csv"), &diagram_csv(&bc))?;
        ctx.write(&format!("diagram_z{p}.svg"), &diagram_svg(&bc))?;
        let sig = betti_signature(&bc, cfg.persistence_ratio);
        let expected = shape
            .and_then(|s| expected_signature(s, p))
            .filter(|e| e.len() == sig.counts.len());
        let ok = expected.as_ref().is_none_or(|e| *e == sig.counts);
        passed &= ok;
        lines.push(format!("Z/{p} {:?}", sig.counts));
        per_prime.push(json!({
            "prime": p,
            "signature": sig.counts,
            "noise_floor": sig.noise_floor,
            "expected": expected,
            "passed": ok,
        }));
    }
    let results = json!({
        "filtration": detail,
        "simplex_counts": filt.count_by_dim(),
        "signatures": per_prime,
    });
    Ok((passed, results, lines.join(", ")))
}

fn zigzag(ctx: &mut Ctx) -> Step {
    let params = torus_params(ctx.cfg);
    let (patches, source) = load_patches(ctx)?;
    let out = run_pipeline(&patches, &params.pipeline, &ctx.d, &ctx.basis).map_err(stage("pipeline"))?;
    let z = angle_zigzag(&params, &out).map_err(|e: ExperimentError| CliError::Stage {
        stage: "zigzag",
        message: e.to_string(),
    })?;
    ctx.write("zigzag_barcode.json", &pretty(&z.barcode.to_json()))?;
    ctx.write("zigzag.txt", &z.barcode.render_text())?;
    let summary = format!(
        "scale {:.4}: {} full-length interval(s) over {} nodes",
        z.scale,
        z.full_length,
        z.barcode.node_count()
    );
    let results = json!({
        "source": source,
        "scale": z.scale,
        "scale_window": z.scale_window,
        "node_ranks": z.barcode.node_ranks,
        "full_length": z.full_length,
        "longest_other": z.longest_other,
        "wrap": z.barcode.wrap,
    });
    Ok((z.passed, results, summary))
}

fn verify(ctx: &mut Ctx) -> Step {
    let cfg = ctx.cfg;
    let ident = identification(cfg.identification_grid, &ctx.d, &ctx.basis);
    let ident_ok = ident.max_shift_violation <= 1e-12;
    let witness = WitnessParams {
        witnesses: cfg.verify_witnesses,
        landmarks: cfg.witness_landmarks,
        nu: cfg.nu,
        noise_sigma: cfg.noise_sigma,
        r_max_factor: cfg.r_max_factor,
        max_dim: cfg.max_dim,
        primes: cfg.primes.clone(),
        persistence_ratio: cfg.persistence_ratio,
        seed: cfg.seed,
    };
    let torus = witness_signature(Shape::FlowTorus, &witness, &ctx.basis).map_err(stage("torus signature"))?;
    let klein = witness_signature(Shape::KleinControl, &witness, &ctx.basis).map_err(stage("klein signature"))?;
    let oracle = oracle_equivalence(cfg.oracle_clouds, cfg.oracle_max_points, &cfg.primes, cfg.seed)
        .map_err(stage("oracle equivalence"))?;
    let checks = [
        ("identification", ident_ok),
        ("torus", torus.passed),
        ("klein", klein.passed),
        ("oracle", oracle.passed),
    ];
    let passed = checks.iter().all(|c| c.1);
    let summary = checks
        .iter()
        .map(|(n, ok)| format!("{n} {}", if *ok { "pass" } else { "FAIL" }))
        .collect::<Vec<_>>()
        .join(", ");
    let results = json!({
        "identification": { "report": ident, "passed": ident_ok },
        "torus": torus,
        "klein": klein,
        "oracle": oracle,
    });
    Ok((passed, results, summary))
}
