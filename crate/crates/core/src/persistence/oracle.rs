use std::collections::HashMap;

use super::{Filtration, PersistenceError};
use crate::field::FieldError;

/// Betti numbers of the subcomplex `{σ : scale(σ) ≤ r}` over Z/p, computed
/// from scratch as `dim ker ∂_k − rank ∂_{k+1}` by dense elimination.
///
/// Deliberately self-contained: it shares no boundary or reduction code with
/// the persistence algorithm so that it can serve as an independent check.
pub fn oracle_betti(filt: &Filtration, r: f64, p: u64) -> Result<Vec<usize>, PersistenceError> {
    if !(2..1 << 31).contains(&p) || !(2..).take_while(|d: &u64| d * d <= p).all(|d| !p.is_multiple_of(d)) {
        return Err(FieldError::InvalidPrime(p).into());
    }
    let top = filt.max_dim();
    let mut by_dim: Vec<Vec<&[u32]>> = vec![Vec::new(); top + 1];
    for s in filt.simplices().iter().filter(|s| s.scale <= r) {
        by_dim[s.vertices.len() - 1].push(&s.vertices);
    }
    // rank[k] = rank of ∂_k : C_k → C_{k-1}
    let mut rank = vec![0usize; top + 2];
    for k in 1..=top {
        let rows: HashMap<&[u32], usize> = by_dim[k - 1]
            .iter()
            .enumerate()
            .map(|(i, s)| (*s, i))
            .collect();
        let mut m = vec![vec![0i64; by_dim[k].len()]; by_dim[k - 1].len()];
        for (c, s) in by_dim[k].iter().enumerate() {
            for skip in 0..s.len() {
                let face: Vec<u32> = s
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                let sign = if skip % 2 == 0 { 1 } else { p as i64 - 1 };
                m[rows[face.as_slice()]][c] = sign;
            }
        }
        rank[k] = dense_rank(m, p as i64);
    }
    Ok((0..=top)
        .map(|k| by_dim[k].len() - rank[k] - rank[k + 1])
        .collect())
}

fn dense_rank(mut m: Vec<Vec<i64>>, p: i64) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let inv = |a: i64| {
        // Fermat: a^(p-2)
        let (mut base, mut e, mut acc) = (a.rem_euclid(p), p - 2, 1i64);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % p;
            }
            base = base * base % p;
            e >>= 1;
        }
        acc
    };
    let mut rank = 0;
    for c in 0..cols {
        let Some(pr) = (rank..rows).find(|&r| m[r][c] % p != 0) else {
            continue;
        };
        m.swap(rank, pr);
        let pinv = inv(m[rank][c]);
        for r in rank + 1..rows {
            let f = m[r][c].rem_euclid(p) * pinv % p;
            if f != 0 {
                for x in c..cols {
                    m[r][x] = (m[r][x] - f * m[rank][x]).rem_euclid(p);
                }
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}
