//! Angle-bin zigzag diagrams at a fixed scale and their interval
//! decompositions over Z/p.

mod complex;
mod module;

use serde::Serialize;
use thiserror::Error;

use crate::field::{FieldError, FpMatrix, PrimeField};
use crate::geometry::{distance_matrix, GeometryError, PointCloud};
use crate::persistence::{persistent_homology, vr_filtration, PersistenceError};

pub use complex::{homology_basis, induced_map, union_cloud, Chain, Complex, HomologyBasis};
pub use module::{pointwise_dims, Arrow, ArrowDirection, NodeInterval, ZigzagModule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ZigzagError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Persistence(#[from] PersistenceError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("bin {0} is empty")]
    EmptyBin(usize),
    #[error("a zigzag needs at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("bins have ambient dimensions {0} and {1}")]
    AmbientMismatch(usize, usize),
    #[error("simplex {0:?} is not in the target complex")]
    NotASubcomplex(Vec<u32>),
    #[error("chain is not a cycle")]
    NotACycle,
    #[error("homology bases differ in dimension or prime")]
    IncompatibleBases,
    #[error("H_k needs simplices up to dimension {needed}, complex built to {built}")]
    DimensionTooLow { needed: usize, built: usize },
    #[error("invalid complex: {0}")]
    InvalidComplex(String),
    #[error("invalid module: {0}")]
    InvalidModule(String),
    #[error("point id {0} does not fit a 32-bit vertex label")]
    IdOverflow(usize),
    #[error("point id {0} appears with two different coordinates")]
    IdConflict(usize),
    #[error("negative multiplicity {value} for [{start}, {end}]")]
    NegativeMultiplicity { start: usize, end: usize, value: i64 },
    #[error("bin {0} has no dimension-1 interval")]
    NoLoop(usize),
    #[error("dominant loops share no common scale: latest birth {lo}, earliest death {hi}")]
    EmptyScaleWindow { lo: f64, hi: f64 },
}

/// What a node of an angle-bin zigzag holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeLabel {
    Bin { bin: usize },
    Union { left: usize, right: usize },
}

/// Complexes `K₀ … K_{n-1}` on shared vertex ids, arrow `t` joining
/// `K_t` and `K_{t+1}` by an inclusion in its stated direction.
#[derive(Debug, Clone)]
pub struct ZigzagDiagram {
    pub scale: f64,
    pub max_dim: usize,
    pub nodes: Vec<Complex>,
    pub labels: Vec<NodeLabel>,
    pub directions: Vec<ArrowDirection>,
}

impl ZigzagDiagram {
    /// Checks that every arrow is an inclusion of complexes.
    pub fn validate(&self) -> Result<(), ZigzagError> {
        if self.directions.len() + 1 != self.nodes.len() {
            return Err(ZigzagError::InvalidModule("arrow count".into()));
        }
        for (t, d) in self.directions.iter().enumerate() {
            let (src, dst) = match d {
                ArrowDirection::Forward => (t, t + 1),
                ArrowDirection::Backward => (t + 1, t),
            };
            if let Some(s) = self.nodes[src].first_missing_from(&self.nodes[dst]) {
                return Err(ZigzagError::NotASubcomplex(s.to_vec()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `X₁ ↪ X₁∪X₂ ↩ X₂ ↪ … ↩ X_m ↪ X_m∪X₁`: 2m nodes, VR complexes at scale `r`.
///
/// The path is not closed; the last union has no arrow back to `X₁`.
pub fn build_angle_zigzag(
    bins: &[PointCloud],
    r: f64,
    max_dim: usize,
) -> Result<ZigzagDiagram, ZigzagError> {
    if bins.len() < 2 {
        return Err(ZigzagError::TooFewBins(bins.len()));
    }
    if let Some(i) = bins.iter().position(PointCloud::is_empty) {
        return Err(ZigzagError::EmptyBin(i));
    }
    let ambient = bins[0].dim();
    if let Some(b) = bins.iter().find(|b| b.dim() != ambient) {
        return Err(ZigzagError::AmbientMismatch(ambient, b.dim()));
    }
    let m = bins.len();
    let mut nodes = Vec::with_capacity(2 * m);
    let mut labels = Vec::with_capacity(2 * m);
    let mut directions = Vec::with_capacity(2 * m - 1);
    for t in 0..m {
        let next = (t + 1) % m;
        nodes.push(Complex::vietoris_rips(&bins[t], r, max_dim)?);
        labels.push(NodeLabel::Bin { bin: t });
        let union = union_cloud(&[&bins[t], &bins[next]])?;
        nodes.push(Complex::vietoris_rips(&union, r, max_dim)?);
        labels.push(NodeLabel::Union { left: t, right: next });
        directions.push(ArrowDirection::Forward);
        if t + 1 < m {
            directions.push(ArrowDirection::Backward);
        }
    }
    let diagram = ZigzagDiagram {
        scale: r,
        max_dim,
        nodes,
        labels,
        directions,
    };
    diagram.validate()?;
    Ok(diagram)
}

/// Closing the path: how `H_k(K₀)` sits inside the last union, which also
/// contains `K₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WrapReport {
    /// Rank of `H_k(K₀) → H_k(K_{n-1})` induced by the inclusion.
    pub inclusion_rank: usize,
    /// Dimension of the compatible families of the whole path whose last
    /// component is the image of the first, i.e. those that close up.
    pub closed_families: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZigzagBarcode {
    pub dim: usize,
    pub prime: u32,
    pub scale: f64,
    pub node_ranks: Vec<usize>,
    pub intervals: Vec<NodeInterval>,
    /// Present for angle-bin diagrams, whose last node contains the first.
    pub wrap: Option<WrapReport>,
}

#[derive(Serialize)]
struct JsonInterval {
    dim: usize,
    start_node: usize,
    end_node: usize,
    multiplicity: usize,
}

impl ZigzagBarcode {
    pub fn node_count(&self) -> usize {
        self.node_ranks.len()
    }

    /// Intervals covering every node.
    pub fn full_length(&self) -> usize {
        self.intervals
            .iter()
            .filter(|iv| iv.start == 0 && iv.end + 1 == self.node_count())
            .map(|iv| iv.multiplicity)
            .sum()
    }

    /// `[{dim, start_node, end_node, multiplicity}, ...]`.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<JsonInterval> = self
            .intervals
            .iter()
            .map(|iv| JsonInterval {
                dim: self.dim,
                start_node: iv.start,
                end_node: iv.end,
                multiplicity: iv.multiplicity,
            })
            .collect();
        serde_json::to_value(rows).expect("intervals serialize")
    }

    /// One row per interval over a ruler of node indices; longest first.
    pub fn render_text(&self) -> String {
        let n = self.node_count();
        let mut out = format!(
            "H{} zigzag over Z/{} at scale {:.6}, {} nodes\n",
            self.dim, self.prime, self.scale, n
        );
        let tens: String = (0..n).map(|i| char::from(b'0' + (i / 10 % 10) as u8)).collect();
        let ones: String = (0..n).map(|i| char::from(b'0' + (i % 10) as u8)).collect();
        out.push_str(&format!("{:>8}{tens}\n{:>8}{ones}\n", "", ""));
        let ranks: String = self
            .node_ranks
            .iter()
            .map(|&r| std::char::from_digit(r.min(35) as u32, 36).unwrap_or('+'))
            .collect();
        out.push_str(&format!("{:>8}{ranks}\n", "rank "));
        let mut ivs = self.intervals.clone();
        ivs.sort_by(|a, b| b.span().cmp(&a.span()).then(a.start.cmp(&b.start)));
        for iv in ivs {
            let bar: String = (0..n)
                .map(|i| if iv.contains(i) { '=' } else { ' ' })
                .collect();
            out.push_str(&format!("{:>8}{}\n", format!("x{} ", iv.multiplicity), bar.trim_end()));
        }
        out
    }
}

/// Interval decomposition of `H_k` along the diagram.
pub fn zigzag_intervals(diagram: &ZigzagDiagram, k: usize, p: u64) -> Result<ZigzagBarcode, ZigzagError> {
    let field = PrimeField::new(p)?;
    let bases: Vec<HomologyBasis<'_>> = diagram
        .nodes
        .iter()
        .map(|c| homology_basis(c, k, p))
        .collect::<Result<_, _>>()?;
    let arrows: Vec<Arrow> = diagram
        .directions
        .iter()
        .enumerate()
        .map(|(t, &direction)| {
            let matrix = match direction {
                ArrowDirection::Forward => induced_map(&bases[t], &bases[t + 1])?,
                ArrowDirection::Backward => induced_map(&bases[t + 1], &bases[t])?,
            };
            Ok(Arrow { direction, matrix })
        })
        .collect::<Result<_, ZigzagError>>()?;
    let node_ranks: Vec<usize> = bases.iter().map(HomologyBasis::rank).collect();
    let module = ZigzagModule::new(p, node_ranks.clone(), arrows)?;
    let intervals = module.decompose()?;

    let last = bases.len() - 1;
    let wrap = if diagram.nodes[0].is_subcomplex_of(&diagram.nodes[last]) && last > 0 {
        let closing = induced_map(&bases[0], &bases[last])?;
        Some(WrapReport {
            inclusion_rank: closing.rank(&field),
            closed_families: closed_families(&module, &closing, &field),
        })
    } else {
        None
    };
    Ok(ZigzagBarcode {
        dim: k,
        prime: field.prime(),
        scale: diagram.scale,
        node_ranks,
        intervals,
        wrap,
    })
}

/// Dimension of the families `(x_t)` compatible with every arrow and with the
/// extra constraint `closing · x₀ = x_last`.
fn closed_families(module: &ZigzagModule, closing: &FpMatrix, f: &PrimeField) -> usize {
    let dims = module.dims();
    let n = dims.len();
    let offsets: Vec<usize> = dims
        .iter()
        .scan(0, |acc, &d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();
    let total: usize = dims.iter().sum();
    let mut rows: Vec<Vec<u32>> = Vec::new();
    let mut push = |src: usize, dst: usize, a: &FpMatrix| {
        for r in 0..dims[dst] {
            let mut row = vec![0u32; total];
            for c in 0..dims[src] {
                row[offsets[src] + c] = f.add(row[offsets[src] + c], a.get(r, c));
            }
            row[offsets[dst] + r] = f.sub(row[offsets[dst] + r], 1);
            rows.push(row);
        }
    };
    for (t, a) in module.arrows().iter().enumerate() {
        match a.direction {
            ArrowDirection::Forward => push(t, t + 1, &a.matrix),
            ArrowDirection::Backward => push(t + 1, t, &a.matrix),
        }
    }
    push(0, n - 1, closing);
    if rows.is_empty() {
        return total;
    }
    total - FpMatrix::from_rows(&rows).rank(f)
}

/// Scale picked from the bins' own barcodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleChoice {
    pub scale: f64,
    /// Latest birth among the bins' dominant loops.
    pub window_start: f64,
    /// Earliest death among them (truncated at each bin's diameter).
    pub window_end: f64,
}

/// Midpoint of the intersection of each bin's longest dimension-1 VR
/// interval over Z/p. Each bin is filtered up to its own diameter.
pub fn auto_scale(bins: &[PointCloud], p: u64) -> Result<ScaleChoice, ZigzagError> {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (i, bin) in bins.iter().enumerate() {
        if bin.is_empty() {
            return Err(ZigzagError::EmptyBin(i));
        }
        let dm = distance_matrix(bin);
        let diameter = (0..dm.len())
            .flat_map(|a| dm.row(a).iter().copied())
            .fold(0.0, f64::max);
        if !(diameter > 0.0) {
            return Err(ZigzagError::NoLoop(i));
        }
        let bc = persistent_homology(&vr_filtration(&dm, diameter, 2)?, p)?;
        let iv = bc.dominant(1).ok_or(ZigzagError::NoLoop(i))?;
        lo = lo.max(iv.birth);
        hi = hi.min(iv.death.unwrap_or(diameter));
    }
    if !(lo < hi) {
        return Err(ZigzagError::EmptyScaleWindow { lo, hi });
    }
    Ok(ScaleChoice {
        scale: 0.5 * (lo + hi),
        window_start: lo,
        window_end: hi,
    })
}
