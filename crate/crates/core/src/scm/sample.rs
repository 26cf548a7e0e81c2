//! Seeded, counter-based sampling.
//!
//! The generator is ChaCha20 (`rand_chacha::ChaCha20Rng`) keyed by
//! `seed_from_u64(seed)`. One ChaCha stream id is used per dataset, and row
//! `r` reads its words starting at word position `r * block`, where `block`
//! is the smallest power of two that is at least 16 and at least four words
//! per exogenous variable. Rows are therefore independent of each other and
//! of evaluation order. Within a row the exogenous variables consume draws in
//! declaration order:
//!
//! - a uniform is `(next_u64 >> 11) * 2^-53`, in `[0, 1)`;
//! - a tabular law takes one uniform `u` and returns the first support value
//!   whose cumulative probability exceeds `u`;
//! - a normal law takes two uniforms `a`, `b` and returns
//!   `mean + std * sqrt(-2 ln(1 - a)) * cos(2 pi b)` (Box-Muller, cosine branch).

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use super::{ExogenousLaw, Scm, ScmError};
use crate::Dataset;

/// Stream used by [`sample`].
pub const DEFAULT_STREAM: u64 = 0;

/// Per-row random source positioned at the row's block.
pub struct RowRng(ChaCha20Rng);

impl RowRng {
    pub fn new(base: &ChaCha20Rng, row: u64, block: u64) -> Self {
        let mut rng = base.clone();
        rng.set_word_pos(row as u128 * block as u128);
        RowRng(rng)
    }

    pub fn uniform(&mut self) -> f64 {
        uniform_open01(self.0.next_u64())
    }
}

/// Maps 64 random bits to `[0, 1)` using the top 53 bits.
pub fn uniform_open01(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Box-Muller cosine branch from two `[0, 1)` uniforms.
pub fn standard_normal(a: f64, b: f64) -> f64 {
    let r = (-2.0 * (1.0 - a).ln()).sqrt();
    r * (std::f64::consts::TAU * b).cos()
}

fn block_words(n_exogenous: usize) -> u64 {
    ((4 * n_exogenous).max(16)).next_power_of_two() as u64
}

fn draw(law: &ExogenousLaw, rng: &mut RowRng) -> f64 {
    match law {
        ExogenousLaw::Tabular(cells) => {
            let u = rng.uniform();
            let mut acc = 0.0;
            for (v, p) in cells {
                acc += p;
                if u < acc {
                    return *v as f64;
                }
            }
            // Rounding can leave the total a hair below one.
            cells
                .iter()
                .rev()
                .find(|(_, p)| *p > 0.0)
                .map(|(v, _)| *v as f64)
                .unwrap()
        }
        ExogenousLaw::Normal { mean, std } => {
            let a = rng.uniform();
            let b = rng.uniform();
            mean + std * standard_normal(a, b)
        }
    }
}

/// `n` i.i.d. rows over all endogenous variables, on stream [`DEFAULT_STREAM`].
pub fn sample(scm: &Scm, n: usize, seed: u64) -> Result<Dataset, ScmError> {
    sample_stream(scm, n, seed, DEFAULT_STREAM)
}

/// As [`sample`], on an explicit ChaCha stream so that several datasets drawn
/// with the same seed stay independent.
pub fn sample_stream(scm: &Scm, n: usize, seed: u64, stream: u64) -> Result<Dataset, ScmError> {
    let mut base = ChaCha20Rng::seed_from_u64(seed);
    base.set_stream(stream);
    let block = block_words(scm.exogenous.len());
    let rows: Result<Vec<Vec<Option<f64>>>, ScmError> = (0..n)
        .into_par_iter()
        .map(|r| {
            let mut rng = RowRng::new(&base, r as u64, block);
            let u: Vec<f64> = scm
                .exogenous
                .iter()
                .map(|e| draw(&e.law, &mut rng))
                .collect();
            let mut values = vec![0.0; scm.endogenous.len()];
            let mut endo = Vec::new();
            let mut exo = Vec::new();
            for &i in scm.topo() {
                values[i] = match scm.intervened_value(i) {
                    Some(x) => x as f64,
                    None => {
                        endo.clear();
                        endo.extend(scm.node_parents(i).iter().map(|&p| values[p]));
                        exo.clear();
                        exo.extend(scm.node_exogenous(i).iter().map(|&k| u[k]));
                        scm.eval_real(i, &endo, &exo)?
                    }
                };
            }
            Ok(values.into_iter().map(Some).collect())
        })
        .collect();
    Ok(Dataset::new(scm.variables(), rows?).expect("rows match the model's columns"))
}

impl Scm {
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset, ScmError> {
        sample(self, n, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::{ScmBuilder, StructuralFunction};

    #[test]
    fn uniform_bounds() {
        assert_eq!(uniform_open01(0), 0.0);
        assert!(uniform_open01(u64::MAX) < 1.0);
    }

    #[test]
    fn empty_and_point_mass() {
        let m = ScmBuilder::new()
            .variable("A", &[3])
            .exogenous("U", ExogenousLaw::point(3))
            .function(StructuralFunction::expr("A", &[], &["U"], "U"))
            .build()
            .unwrap();
        let empty = sample(&m, 0, 1).unwrap();
        assert_eq!(empty.n_rows(), 0);
        assert_eq!(empty.columns(), &["A".into()]);
        let five = sample(&m, 5, 1).unwrap();
        assert!(five.rows().iter().all(|r| r == &vec![Some(3.0)]));
    }

    #[test]
    fn rows_do_not_depend_on_n() {
        let m = ScmBuilder::new()
            .continuous("A")
            .exogenous(
                "U",
                ExogenousLaw::Normal {
                    mean: 0.0,
                    std: 1.0,
                },
            )
            .function(StructuralFunction::expr("A", &[], &["U"], "U"))
            .build()
            .unwrap();
        let short = sample(&m, 10, 7).unwrap();
        let long = sample(&m, 100, 7).unwrap();
        assert_eq!(short.rows(), &long.rows()[..10]);
        let other = sample_stream(&m, 10, 7, 5).unwrap();
        assert_ne!(short.rows(), other.rows());
    }
}
