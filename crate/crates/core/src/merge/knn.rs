use rayon::prelude::*;
use serde::Serialize;

use super::MergeError;
use crate::dataset::Cell;
use crate::Dataset;

/// Nearest-neighbour imputation.
///
/// Columns are min-max normalized over their observed cells (a constant
/// column normalizes to 0). The distance between two rows is the Euclidean
/// distance over the coordinates observed in both; donors sharing no
/// observed coordinate with the row rank after all others. A missing cell is
/// the mean of the `k` nearest donors observed in that column, ties broken by
/// lower row index. Donors are always original rows, never imputed values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct KnnConfig {
    pub k: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig { k: 2 }
    }
}

fn normalized(d: &Dataset) -> Result<Vec<Vec<Cell>>, MergeError> {
    let n = d.n_columns();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for row in d.rows() {
        for (j, c) in row.iter().enumerate() {
            if let Some(x) = c {
                lo[j] = lo[j].min(*x);
                hi[j] = hi[j].max(*x);
            }
        }
    }
    if let Some(j) = (0..n).find(|&j| lo[j] > hi[j]) {
        return Err(MergeError::AllMissingColumn(d.columns()[j].clone()));
    }
    Ok(d.rows()
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, c)| {
                    c.map(|x| {
                        let span = hi[j] - lo[j];
                        if span > 0.0 {
                            (x - lo[j]) / span
                        } else {
                            0.0
                        }
                    })
                })
                .collect()
        })
        .collect())
}

/// `None` when the rows share no observed coordinate.
fn distance(a: &[Cell], b: &[Cell]) -> Option<f64> {
    let mut sum = 0.0;
    let mut shared = false;
    for (x, y) in a.iter().zip(b) {
        if let (Some(x), Some(y)) = (x, y) {
            sum += (x - y) * (x - y);
            shared = true;
        }
    }
    shared.then(|| sum.sqrt())
}

/// Fills every missing cell; observed cells are copied unchanged.
pub fn knn_impute(d: &Dataset, cfg: &KnnConfig) -> Result<Dataset, MergeError> {
    if let Some(r) = d
        .rows()
        .iter()
        .position(|row| row.iter().all(Option::is_none))
    {
        return Err(MergeError::AllMissingRow(r));
    }
    let norm = normalized(d)?;
    let donors: Vec<Vec<usize>> = (0..d.n_columns())
        .map(|j| {
            (0..d.n_rows())
                .filter(|&r| d.rows()[r][j].is_some())
                .collect()
        })
        .collect();
    for (j, list) in donors.iter().enumerate() {
        let missing = list.len() < d.n_rows();
        if cfg.k == 0 || (missing && list.len() < cfg.k) {
            return Err(MergeError::InvalidK {
                k: cfg.k,
                column: d.columns()[j].clone(),
                donors: list.len(),
            });
        }
    }
    let rows: Vec<Vec<Cell>> = d
        .rows()
        .par_iter()
        .enumerate()
        .map(|(r, row)| {
            let mut out = row.clone();
            for (j, cell) in out.iter_mut().enumerate() {
                if cell.is_some() {
                    continue;
                }
                // (rank key, row index); a shared-nothing donor ranks at +inf.
                let mut best: Vec<(f64, usize)> = Vec::with_capacity(cfg.k + 1);
                for &s in &donors[j] {
                    let dist = distance(&norm[r], &norm[s]).unwrap_or(f64::INFINITY);
                    if best.len() == cfg.k && dist >= best[cfg.k - 1].0 {
                        continue;
                    }
                    let at = best.partition_point(|&(bd, _)| bd <= dist);
                    best.insert(at, (dist, s));
                    best.truncate(cfg.k);
                }
                let total: f64 = best.iter().map(|&(_, s)| d.rows()[s][j].unwrap()).sum();
                *cell = Some(total / best.len() as f64);
            }
            out
        })
        .collect();
    let out = Dataset::new(d.columns().to_vec(), rows)?;
    Ok(match d.sources() {
        Some(s) => out.with_sources(s.to_vec())?,
        None => out,
    })
}
