use serde::{Deserialize, Serialize};

use super::ZigzagError;
use crate::field::{FpMatrix, PrimeField};

/// Orientation of the arrow between nodes `t` and `t + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrowDirection {
    /// `t → t+1`
    Forward,
    /// `t ← t+1`
    Backward,
}

impl ArrowDirection {
    pub fn flipped(self) -> Self {
        match self {
            Self::Forward => Self::Backward,
            Self::Backward => Self::Forward,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arrow {
    pub direction: ArrowDirection,
    /// `dim(target) × dim(source)`.
    pub matrix: FpMatrix,
}

/// A zigzag (type `A_n`) representation over Z/p.
#[derive(Debug, Clone, PartialEq)]
pub struct ZigzagModule {
    field: PrimeField,
    dims: Vec<usize>,
    arrows: Vec<Arrow>,
}

/// `[start, end]` over node indices, both inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeInterval {
    pub start: usize,
    pub end: usize,
    pub multiplicity: usize,
}

impl NodeInterval {
    /// Number of nodes covered.
    pub fn span(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn contains(&self, node: usize) -> bool {
        self.start <= node && node <= self.end
    }
}

impl ZigzagModule {
    pub fn new(p: u64, dims: Vec<usize>, arrows: Vec<Arrow>) -> Result<Self, ZigzagError> {
        let field = PrimeField::new(p)?;
        if dims.is_empty() {
            return Err(ZigzagError::InvalidModule("no nodes".into()));
        }
        if arrows.len() + 1 != dims.len() {
            return Err(ZigzagError::InvalidModule(format!(
                "{} nodes need {} arrows, got {}",
                dims.len(),
                dims.len() - 1,
                arrows.len()
            )));
        }
        for (t, a) in arrows.iter().enumerate() {
            let (src, dst) = match a.direction {
                ArrowDirection::Forward => (t, t + 1),
                ArrowDirection::Backward => (t + 1, t),
            };
            if a.matrix.rows() != dims[dst] || a.matrix.cols() != dims[src] {
                return Err(ZigzagError::InvalidModule(format!(
                    "arrow {t} is {}×{}, expected {}×{}",
                    a.matrix.rows(),
                    a.matrix.cols(),
                    dims[dst],
                    dims[src]
                )));
            }
        }
        Ok(Self { field, dims, arrows })
    }

    pub fn prime(&self) -> u32 {
        self.field.prime()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    /// The same module read from the last node to the first.
    pub fn reversed(&self) -> Self {
        Self {
            field: self.field,
            dims: self.dims.iter().rev().copied().collect(),
            arrows: self
                .arrows
                .iter()
                .rev()
                .map(|a| Arrow {
                    direction: a.direction.flipped(),
                    matrix: a.matrix.clone(),
                })
                .collect(),
        }
    }

    /// Rank of the canonical map from the limit to the colimit of the module
    /// restricted to nodes `i..=j`.
    ///
    /// The limit is the kernel of the consistency constraints `A x_s = x_t`
    /// over all arrows `s → t`; the colimit is `⊕ V_t` modulo the relations
    /// `ι_t(A x) − ι_s(x)`. The map sends a compatible family to the class of
    /// its `i`-th component.
    pub fn generalized_rank(&self, i: usize, j: usize) -> usize {
        assert!(i <= j && j < self.len(), "bad range {i}..={j}");
        let f = &self.field;
        let offsets: Vec<usize> = self.dims[i..=j]
            .iter()
            .scan(0, |acc, &d| {
                let o = *acc;
                *acc += d;
                Some(o)
            })
            .collect();
        let total: usize = self.dims[i..=j].iter().sum();
        let off = |node: usize| offsets[node - i];

        let constraint_rows: usize = (i..j)
            .map(|t| match self.arrows[t].direction {
                ArrowDirection::Forward => self.dims[t + 1],
                ArrowDirection::Backward => self.dims[t],
            })
            .sum();
        let mut constraints = FpMatrix::zeros(constraint_rows, total);
        let relation_cols: usize = (i..j)
            .map(|t| match self.arrows[t].direction {
                ArrowDirection::Forward => self.dims[t],
                ArrowDirection::Backward => self.dims[t + 1],
            })
            .sum();
        let mut relations = FpMatrix::zeros(total, relation_cols);

        let (mut row, mut col) = (0, 0);
        for t in i..j {
            let a = &self.arrows[t];
            let (src, dst) = match a.direction {
                ArrowDirection::Forward => (t, t + 1),
                ArrowDirection::Backward => (t + 1, t),
            };
            // A x_src − x_dst = 0
            for r in 0..self.dims[dst] {
                for c in 0..self.dims[src] {
                    constraints.set(row + r, off(src) + c, a.matrix.get(r, c));
                }
                constraints.set(row + r, off(dst) + r, f.neg(1));
            }
            row += self.dims[dst];
            // ι_dst(A e_c) − ι_src(e_c)
            for c in 0..self.dims[src] {
                for r in 0..self.dims[dst] {
                    relations.set(off(dst) + r, col + c, a.matrix.get(r, c));
                }
                relations.set(off(src) + c, col + c, f.neg(1));
            }
            col += self.dims[src];
        }

        let limit = constraints.kernel(f);
        if limit.cols() == 0 {
            return 0;
        }
        let mut image = FpMatrix::zeros(total, limit.cols());
        for c in 0..limit.cols() {
            for r in 0..self.dims[i] {
                image.set(off(i) + r, c, limit.get(off(i) + r, c));
            }
        }
        relations.hstack(&image).rank(f) - relations.rank(f)
    }

    /// Interval decomposition by Möbius inversion of the generalized ranks:
    /// `μ[i,j] = r[i,j] − r[i−1,j] − r[i,j+1] + r[i−1,j+1]`, with
    /// out-of-range terms zero.
    pub fn decompose(&self) -> Result<Vec<NodeInterval>, ZigzagError> {
        let n = self.len();
        let mut rank = vec![vec![0usize; n]; n];
        for i in 0..n {
            for j in i..n {
                rank[i][j] = self.generalized_rank(i, j);
            }
        }
        let r = |i: Option<usize>, j: usize| -> i64 {
            match i {
                Some(i) if j < n && i <= j => rank[i][j] as i64,
                _ => 0,
            }
        };
        let mut out = Vec::new();
        for i in 0..n {
            for j in i..n {
                let mu = r(Some(i), j) - r(i.checked_sub(1), j) - r(Some(i), j + 1)
                    + r(i.checked_sub(1), j + 1);
                if mu < 0 {
                    return Err(ZigzagError::NegativeMultiplicity { start: i, end: j, value: mu });
                }
                if mu > 0 {
                    out.push(NodeInterval {
                        start: i,
                        end: j,
                        multiplicity: mu as usize,
                    });
                }
            }
        }
        Ok(out)
    }
}

/// `Σ multiplicity` over intervals containing each node.
pub fn pointwise_dims(intervals: &[NodeInterval], nodes: usize) -> Vec<usize> {
    let mut out = vec![0; nodes];
    for iv in intervals {
        for d in &mut out[iv.start..=iv.end] {
            *d += iv.multiplicity;
        }
    }
    out
}
