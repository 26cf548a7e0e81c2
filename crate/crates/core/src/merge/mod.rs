//! Merging datasets recorded at different resolutions.
//!
//! Each dataset is mapped into the shared high-level schema through its
//! embedding's range maps, the parts are stacked with missing cells where a
//! part lacks a column, and the gaps are filled by nearest-neighbour
//! imputation. Histogram estimates and their KL divergence compare the
//! result against reference data.

mod knn;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

pub use knn::{knn_impute, KnnConfig};

use crate::dataset::{Cell, DatasetError};
use crate::distribution::DistributionError;
use crate::{Dataset, DiscreteDistribution, Embedding, RangeMap, Value, VariableId};

/// Histogram bin width used when none is given, in the data's units.
pub const DEFAULT_BIN_WIDTH: f64 = 8.0;

/// Added to empty reference cells on the estimate's support.
pub const KL_SMOOTHING: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum MergeError {
    #[error("dataset lacks preimage columns {0:?}")]
    SchemaMismatch(Vec<VariableId>),
    #[error("column {0} is not in the target schema")]
    UnknownColumn(VariableId),
    #[error("column {0} has no observed cell")]
    AllMissingColumn(VariableId),
    #[error("row {0} has no observed cell")]
    AllMissingRow(usize),
    #[error("k = {k} but column {column} has {donors} donor rows")]
    InvalidK {
        k: usize,
        column: VariableId,
        donors: usize,
    },
    #[error("range map for {target} is undefined on row {row}")]
    Unmapped { target: VariableId, row: usize },
    #[error("column {0} has missing cells")]
    MissingCells(VariableId),
    #[error("bin width for {0} must be positive and finite")]
    InvalidBin(VariableId),
    #[error("distributions are over {left:?} and {right:?}")]
    StructureMismatch {
        left: Vec<VariableId>,
        right: Vec<VariableId>,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

/// Maps every row through the range maps of `e`.
///
/// Output columns are the embedding's high-level variables, ordered by the
/// first dataset column among their preimages. A row with a missing preimage
/// cell gets a missing output cell. Provenance is kept.
pub fn transform_dataset(d: &Dataset, e: &Embedding) -> Result<Dataset, MergeError> {
    let missing: Vec<VariableId> = e
        .relevant_low()
        .into_iter()
        .filter(|v| d.column_index(v).is_err())
        .collect();
    if !missing.is_empty() {
        return Err(MergeError::SchemaMismatch(missing));
    }
    let mut targets: Vec<(usize, &RangeMap)> = e
        .alphas()
        .values()
        .map(|a| {
            let first = a
                .preimage()
                .iter()
                .map(|v| d.column_index(v).unwrap())
                .min()
                .unwrap_or(0);
            (first, a)
        })
        .collect();
    targets.sort_by_key(|(first, a)| (*first, a.target().clone()));
    let plan: Vec<(&RangeMap, Vec<usize>)> = targets
        .iter()
        .map(|(_, a)| {
            (
                *a,
                a.preimage()
                    .iter()
                    .map(|v| d.column_index(v).unwrap())
                    .collect(),
            )
        })
        .collect();
    let rows: Result<Vec<Vec<Cell>>, MergeError> = d
        .rows()
        .par_iter()
        .enumerate()
        .map(|(r, row)| {
            plan.iter()
                .map(|(a, idx)| {
                    let input: Option<Vec<f64>> = idx.iter().map(|&j| row[j]).collect();
                    match input {
                        None => Ok(None),
                        Some(x) => a
                            .apply_real(&x)
                            .map(Some)
                            .ok_or_else(|| MergeError::Unmapped {
                                target: a.target().clone(),
                                row: r,
                            }),
                    }
                })
                .collect()
        })
        .collect();
    let columns = plan.iter().map(|(a, _)| a.target().clone()).collect();
    let out = Dataset::new(columns, rows?)?;
    Ok(match d.sources() {
        Some(s) => out.with_sources(s.to_vec())?,
        None => out,
    })
}

/// Stacks `parts` over `schema`, filling absent columns with missing cells.
/// Row `r` of the result records the index of the part it came from.
pub fn concat_with_missing(
    parts: &[Dataset],
    schema: &[VariableId],
) -> Result<Dataset, MergeError> {
    let mut rows = Vec::new();
    let mut sources = Vec::new();
    for (i, p) in parts.iter().enumerate() {
        let mut at = Vec::with_capacity(p.n_columns());
        for c in p.columns() {
            at.push(
                schema
                    .iter()
                    .position(|s| s == c)
                    .ok_or_else(|| MergeError::UnknownColumn(c.clone()))?,
            );
        }
        for row in p.rows() {
            let mut out = vec![None; schema.len()];
            for (j, cell) in row.iter().enumerate() {
                out[at[j]] = *cell;
            }
            rows.push(out);
            sources.push(i);
        }
    }
    Ok(Dataset::new(schema.to_vec(), rows)?.with_sources(sources)?)
}

#[derive(Clone, Debug)]
pub struct MergePlan {
    pub inputs: Vec<(Dataset, Embedding)>,
    pub target_schema: Vec<VariableId>,
    pub imputer: KnnConfig,
}

/// Transform, concatenate, impute.
pub fn merge(plan: &MergePlan) -> Result<Dataset, MergeError> {
    let stacked = stack(plan)?;
    knn_impute(&stacked, &plan.imputer)
}

/// The merge pipeline up to, but excluding, imputation.
pub fn stack(plan: &MergePlan) -> Result<Dataset, MergeError> {
    for (_, e) in &plan.inputs {
        if let Some(v) = e
            .relevant_high()
            .iter()
            .find(|v| !plan.target_schema.contains(v))
        {
            return Err(MergeError::UnknownColumn(v.clone()));
        }
    }
    let parts = plan
        .inputs
        .iter()
        .map(|(d, e)| transform_dataset(d, e))
        .collect::<Result<Vec<_>, _>>()?;
    concat_with_missing(&parts, &plan.target_schema)
}

/// Distinct missingness patterns (`true` = observed, in column order) and
/// their row counts, most frequent first.
pub fn missingness_pattern(d: &Dataset) -> Vec<(Vec<bool>, usize)> {
    let mut counts: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
    for row in d.rows() {
        *counts
            .entry(row.iter().map(Option::is_some).collect())
            .or_default() += 1;
    }
    let mut out: Vec<_> = counts.into_iter().collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| b.0.cmp(&a.0)));
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bin {
    pub width: f64,
    pub origin: f64,
}

impl Bin {
    /// Index of the half-open bin `[origin + i w, origin + (i + 1) w)` holding `x`.
    pub fn index(&self, x: f64) -> Value {
        ((x - self.origin) / self.width).floor() as Value
    }
}

/// Fixed-width bins, one width and origin per variable with a shared default.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BinSpec {
    pub default: Bin,
    pub per_variable: BTreeMap<VariableId, Bin>,
}

impl BinSpec {
    pub fn uniform(width: f64) -> Self {
        BinSpec {
            default: Bin { width, origin: 0.0 },
            per_variable: BTreeMap::new(),
        }
    }

    pub fn with(mut self, v: VariableId, bin: Bin) -> Self {
        self.per_variable.insert(v, bin);
        self
    }

    pub fn bin(&self, v: &VariableId) -> Bin {
        self.per_variable.get(v).copied().unwrap_or(self.default)
    }
}

impl Default for BinSpec {
    fn default() -> Self {
        BinSpec::uniform(DEFAULT_BIN_WIDTH)
    }
}

/// Normalized histogram of `vars`; outcomes are bin indices.
pub fn empirical_distribution(
    d: &Dataset,
    vars: &[VariableId],
    bins: &BinSpec,
) -> Result<DiscreteDistribution, MergeError> {
    let mut idx = Vec::new();
    let mut spec = Vec::new();
    for v in vars {
        let b = bins.bin(v);
        if !(b.width.is_finite() && b.width > 0.0 && b.origin.is_finite()) {
            return Err(MergeError::InvalidBin(v.clone()));
        }
        idx.push(d.column_index(v)?);
        spec.push(b);
    }
    let mut counts: BTreeMap<Vec<Value>, f64> = BTreeMap::new();
    for row in d.rows() {
        let mut key = Vec::with_capacity(idx.len());
        for (k, &j) in idx.iter().enumerate() {
            let x = row[j].ok_or_else(|| MergeError::MissingCells(vars[k].clone()))?;
            key.push(spec[k].index(x));
        }
        *counts.entry(key).or_default() += 1.0;
    }
    Ok(DiscreteDistribution::from_weights(vars.to_vec(), counts)?)
}

/// `Σ p ln(p / q)` over the support of `p`, where a cell that `q` leaves empty
/// counts as [`KL_SMOOTHING`]. Both distributions must be over the same
/// variable list.
pub fn kl_divergence(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
) -> Result<f64, MergeError> {
    if p.variables() != q.variables() {
        return Err(MergeError::StructureMismatch {
            left: p.variables().to_vec(),
            right: q.variables().to_vec(),
        });
    }
    Ok(p.pmf()
        .iter()
        .map(|(a, pa)| {
            let qa = q.prob(a);
            let qa = if qa > 0.0 { qa } else { KL_SMOOTHING };
            pa * (pa / qa).ln()
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{alpha2, generate_ecosystem_datasets};

    fn ds(cols: &[&str], rows: Vec<Vec<Cell>>) -> Dataset {
        Dataset::new(cols.iter().map(|c| VariableId::new(*c)).collect(), rows).unwrap()
    }

    #[test]
    fn sum_aggregation_of_a_row() {
        let d = ds(
            &["Wolves", "Eagles", "RedDeer", "FallowDeer", "Squirrels"],
            vec![vec![
                Some(90.0),
                Some(12.0),
                Some(80.0),
                Some(120.0),
                Some(33.0),
            ]],
        );
        let t = transform_dataset(&d, &alpha2()).unwrap();
        let names: Vec<&str> = t.columns().iter().map(|c| c.as_str()).collect();
        assert_eq!(names, ["Predators", "Deer", "Squirrels"]);
        assert_eq!(t.rows()[0], vec![Some(102.0), Some(200.0), Some(33.0)]);
        let partial = ds(&["Wolves"], vec![vec![Some(1.0)]]);
        assert!(matches!(
            transform_dataset(&partial, &alpha2()),
            Err(MergeError::SchemaMismatch(_))
        ));
    }

    #[test]
    fn missing_preimage_gives_missing_output() {
        let d = ds(
            &["Wolves", "Eagles", "RedDeer", "FallowDeer", "Squirrels"],
            vec![vec![Some(90.0), None, Some(80.0), Some(120.0), Some(33.0)]],
        );
        let t = transform_dataset(&d, &alpha2()).unwrap();
        assert_eq!(t.rows()[0], vec![None, Some(200.0), Some(33.0)]);
    }

    #[test]
    fn identity_transform_selects_columns() {
        let d = ds(
            &["A", "B"],
            vec![vec![Some(1.0), Some(2.0)], vec![None, Some(4.0)]],
        );
        let e = Embedding::identity([VariableId::new("B")]);
        let t = transform_dataset(&d, &e).unwrap();
        assert_eq!(t, d.select(&["B".into()]).unwrap());
    }

    #[test]
    fn concat_blocks() {
        let a = ds(&["A"], vec![vec![Some(1.0)], vec![Some(2.0)]]);
        let b = ds(
            &["B"],
            vec![vec![Some(3.0)], vec![Some(4.0)], vec![Some(5.0)]],
        );
        let schema = vec![VariableId::new("A"), VariableId::new("B")];
        let c = concat_with_missing(&[a.clone(), b], &schema).unwrap();
        assert_eq!(c.n_rows(), 5);
        assert_eq!(c.sources().unwrap(), &[0, 0, 1, 1, 1]);
        assert_eq!(c.rows()[1], vec![Some(2.0), None]);
        assert_eq!(c.rows()[4], vec![None, Some(5.0)]);
        assert_eq!(
            missingness_pattern(&c),
            vec![(vec![false, true], 3), (vec![true, false], 2)]
        );
        let same = concat_with_missing(std::slice::from_ref(&a), &[VariableId::new("A")]).unwrap();
        assert_eq!(same.rows(), a.rows());
        assert!(matches!(
            concat_with_missing(&[a], &[VariableId::new("B")]),
            Err(MergeError::UnknownColumn(_))
        ));
    }

    #[test]
    fn histograms() {
        let d = ds(
            &["A"],
            vec![
                vec![Some(0.0)],
                vec![Some(0.0)],
                vec![Some(1.0)],
                vec![Some(1.0)],
            ],
        );
        let h = empirical_distribution(&d, &["A".into()], &BinSpec::uniform(1.0)).unwrap();
        assert_eq!(h.prob(&[0]), 0.5);
        assert_eq!(h.prob(&[1]), 0.5);
        let c = ds(&["A"], vec![vec![Some(7.0)]; 5]);
        let h = empirical_distribution(&c, &["A".into()], &BinSpec::uniform(3.0)).unwrap();
        assert_eq!(h.support_len(), 1);
        let m = ds(&["A"], vec![vec![None]]);
        assert!(matches!(
            empirical_distribution(&m, &["A".into()], &BinSpec::default()),
            Err(MergeError::MissingCells(_))
        ));
    }

    #[test]
    fn kl_closed_forms() {
        let v = vec![VariableId::new("A")];
        let p = DiscreteDistribution::point_mass(v.clone(), vec![0]);
        let q =
            DiscreteDistribution::from_weights(v.clone(), [(vec![0], 1.0), (vec![1], 1.0)].into())
                .unwrap();
        assert!((kl_divergence(&p, &q).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(kl_divergence(&q, &q).unwrap(), 0.0);
        let far = DiscreteDistribution::point_mass(v.clone(), vec![1]);
        assert!((kl_divergence(&p, &far).unwrap() - (1.0 / KL_SMOOTHING).ln()).abs() < 1e-9);
        let other = DiscreteDistribution::point_mass(vec!["B".into()], vec![0]);
        assert!(matches!(
            kl_divergence(&p, &other),
            Err(MergeError::StructureMismatch { .. })
        ));
    }

    #[test]
    fn ecosystem_second_dataset_transforms() {
        let data = generate_ecosystem_datasets(3);
        let t = transform_dataset(&data.x2, &data.x2_embedding()).unwrap();
        assert_eq!(t.n_rows(), 4000);
        let names: Vec<&str> = t.columns().iter().map(|c| c.as_str()).collect();
        assert_eq!(names, ["Predators", "Deer", "Squirrels"]);
    }
}
