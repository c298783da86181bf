use serde::Serialize;

use super::{Barcode, Interval};

pub const DEFAULT_PERSISTENCE_RATIO: f64 = 3.0;

/// Long-bar counts per homological dimension with the intervals that support them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignatureReport {
    pub counts: Vec<usize>,
    pub supporting: Vec<Vec<Interval>>,
    pub persistence_ratio: f64,
    /// Longest bar, in any reported dimension, not selected by its dimension's gap.
    pub noise_floor: f64,
}

/// Counts the "long" bars of each dimension.
///
/// Within a dimension, with lengths sorted `L₁ ≥ L₂ ≥ …` (infinite bars
/// truncated at `r_max`), the first index `j` with `L_j ≥ ratio · L_{j+1}`
/// (taking `L_{n+1} = 0`) marks the gap, and the bars within 10% of `L_j` or
/// longer are candidates. Candidates must also be `ratio` times longer than
/// the noise floor, the longest non-candidate bar of any reported dimension.
/// Without it a dimension holding only short bars would still report its own
/// leader.
///
/// The filtration's top dimension is not reported because its cycles are
/// never filled in. A barcode with `max_dim = 0` reports dimension 0.
pub fn betti_signature(barcode: &Barcode, persistence_ratio: f64) -> SignatureReport {
    assert!(persistence_ratio > 1.0, "ratio must exceed 1");
    let reported = barcode.max_dim.max(1);
    let r_max = barcode.r_max;

    let mut candidates = Vec::with_capacity(reported);
    let mut noise_floor = 0.0f64;
    for dim in 0..reported {
        let mut bars: Vec<Interval> = barcode.in_dim(dim).copied().collect();
        bars.sort_by(|a, b| b.length(r_max).total_cmp(&a.length(r_max)));
        let lengths: Vec<f64> = bars.iter().map(|iv| iv.length(r_max)).collect();
        let gap = (0..lengths.len()).find(|&j| {
            let next = lengths.get(j + 1).copied().unwrap_or(0.0);
            lengths[j] >= persistence_ratio * next
        });
        let cut = gap.map_or(0, |j| lengths.iter().filter(|&&l| l >= 0.9 * lengths[j]).count());
        if let Some(&l) = lengths.get(cut) {
            noise_floor = noise_floor.max(l);
        }
        bars.truncate(cut);
        candidates.push(bars);
    }

    let supporting: Vec<Vec<Interval>> = candidates
        .into_iter()
        .map(|bars| {
            bars.into_iter()
                .filter(|iv| iv.length(r_max) >= persistence_ratio * noise_floor)
                .collect()
        })
        .collect();
    SignatureReport {
        counts: supporting.iter().map(Vec::len).collect(),
        supporting,
        persistence_ratio,
        noise_floor,
    }
}
