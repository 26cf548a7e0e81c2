//! The L1/L2 embedding error.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use super::{pushforward, validate_structure, Embedding, EmbeddingError, RangeMap, Violation};
use crate::distribution::DistributionError;
use crate::variable::cartesian;
use crate::{DiscreteDistribution, Distance, Layer, Scm, Value, VariableId};

/// One evaluated `(X′, x, Y′)` cell of the error grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryCell {
    pub x_prime: Vec<VariableId>,
    /// Low-level assignment over the concatenated preimage of `x_prime`.
    pub x_low: Vec<Value>,
    /// Its image under the range maps.
    pub x_high: Vec<Value>,
    pub y_prime: Vec<VariableId>,
    pub distance: f64,
    /// The high-level conditioning event had probability zero although the
    /// low-level one did not; the cell then carries the largest distance.
    pub high_undefined: bool,
}

/// An L1 query dropped because its low-level conditioning event has probability zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkippedQuery {
    pub x_prime: Vec<VariableId>,
    pub x_low: Vec<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorReport {
    pub layer: Layer,
    pub distance: Distance,
    pub error: f64,
    pub witness: Option<QueryCell>,
    pub per_query: Vec<QueryCell>,
    pub skipped: Vec<SkippedQuery>,
}

impl ErrorReport {
    pub fn is_consistent(&self) -> bool {
        self.error <= crate::PROB_TOLERANCE
    }
}

fn worst(distance: Distance) -> f64 {
    match distance {
        Distance::TotalVariation => 1.0,
        Distance::KullbackLeibler => f64::INFINITY,
    }
}

fn subset(vars: &[VariableId], mask: usize) -> Vec<VariableId> {
    vars.iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, v)| v.clone())
        .collect()
}

/// Joint conditioned on (L1) or intervened at (L2) `vars = vals`; `None` when
/// an L1 event has probability zero.
fn evaluate(
    m: &Scm,
    base: &DiscreteDistribution,
    layer: Layer,
    vars: &[VariableId],
    vals: &[Value],
) -> Result<Option<DiscreteDistribution>, EmbeddingError> {
    if vars.is_empty() {
        return Ok(Some(base.clone()));
    }
    match layer {
        Layer::L1 => match base.condition(vars, vals) {
            Ok(d) => Ok(Some(d)),
            Err(DistributionError::ZeroProbability) => Ok(None),
            Err(e) => Err(e.into()),
        },
        Layer::L2 => {
            let assignment: BTreeMap<VariableId, Value> =
                vars.iter().cloned().zip(vals.iter().copied()).collect();
            Ok(Some(
                m.apply_intervention(&assignment)?.joint_distribution()?,
            ))
        }
    }
}

/// `max D(P_high(Y′ | L(x′)), α_{Y′}[P_low(φ⁻¹(Y′) | L(x))])` over all
/// `X′, Y′ ⊆ R′` (the empty set and overlapping pairs included) and every
/// low-level assignment `x` of `φ⁻¹(X′)`, with `x′ = α_{X′}(x)`.
///
/// L1 cells whose low-level event has probability zero are skipped and
/// listed in the report. The witness is the first cell attaining the maximum
/// in enumeration order.
pub fn embedding_error(
    e: &Embedding,
    low: &Scm,
    high: &Scm,
    layer: Layer,
    distance: Distance,
) -> Result<ErrorReport, EmbeddingError> {
    let violations = validate_structure(e, low, high);
    if !violations.is_empty() {
        return Err(EmbeddingError::StructureInvalid(violations));
    }
    let r_high = e.ordered_high(high);
    let n = r_high.len();
    let low_joint = low.joint_distribution()?;
    let high_joint = high.joint_distribution()?;

    let mut tasks: Vec<(usize, Vec<Value>)> = Vec::new();
    for mask in 0..(1usize << n) {
        let xs = subset(&r_high, mask);
        let pre = e.preimage_of(&xs);
        let ranges = pre
            .iter()
            .map(|v| low.range(v).map(|r| r.values()))
            .collect::<Result<Vec<_>, _>>()?;
        for x in cartesian(&ranges) {
            tasks.push((mask, x));
        }
    }

    // High-level evaluations depend only on (X′, x′); share them.
    let mut high_keys: Vec<(usize, Vec<Value>)> = tasks
        .iter()
        .map(|(mask, x)| {
            let xs = subset(&r_high, *mask);
            (
                *mask,
                e.image_of(&xs, x).expect("validated range maps are total"),
            )
        })
        .collect();
    high_keys.sort();
    high_keys.dedup();
    let high_evals: HashMap<(usize, Vec<Value>), Option<DiscreteDistribution>> = high_keys
        .into_par_iter()
        .map(|(mask, xh)| {
            let xs = subset(&r_high, mask);
            let d = evaluate(high, &high_joint, layer, &xs, &xh)?;
            Ok(((mask, xh), d))
        })
        .collect::<Result<_, EmbeddingError>>()?;

    let y_sets: Vec<Vec<VariableId>> = (0..(1usize << n)).map(|m| subset(&r_high, m)).collect();
    let results: Vec<Result<Result<Vec<QueryCell>, SkippedQuery>, EmbeddingError>> = tasks
        .par_iter()
        .map(|(mask, x)| {
            let xs = subset(&r_high, *mask);
            let pre = e.preimage_of(&xs);
            let Some(low_d) = evaluate(low, &low_joint, layer, &pre, x)? else {
                return Ok(Err(SkippedQuery {
                    x_prime: xs,
                    x_low: x.clone(),
                }));
            };
            let xh = e.image_of(&xs, x).expect("validated range maps are total");
            let high_d = &high_evals[&(*mask, xh.clone())];
            let mut cells = Vec::with_capacity(y_sets.len());
            for ys in &y_sets {
                let (d, undefined) = match high_d {
                    None => (worst(distance), true),
                    Some(hd) => {
                        let alphas: Vec<&RangeMap> = ys.iter().map(|y| &e.alphas[y]).collect();
                        let low_m = low_d.marginal(&e.preimage_of(ys))?;
                        let pushed = pushforward(&alphas, &low_m)?;
                        let high_m = hd.marginal(ys)?;
                        (distance.compute(&high_m, &pushed)?, false)
                    }
                };
                cells.push(QueryCell {
                    x_prime: xs.clone(),
                    x_low: x.clone(),
                    x_high: xh.clone(),
                    y_prime: ys.clone(),
                    distance: d,
                    high_undefined: undefined,
                });
            }
            Ok(Ok(cells))
        })
        .collect();

    let mut per_query = Vec::new();
    let mut skipped = Vec::new();
    for r in results {
        match r? {
            Ok(cells) => per_query.extend(cells),
            Err(s) => {
                log::debug!(
                    "skipping L1 query on {:?} = {:?}: zero probability",
                    s.x_prime,
                    s.x_low
                );
                skipped.push(s);
            }
        }
    }
    if !skipped.is_empty() {
        log::info!("{} zero-probability L1 queries skipped", skipped.len());
    }
    let mut witness: Option<&QueryCell> = None;
    for c in &per_query {
        if witness.is_none_or(|w| c.distance > w.distance) {
            witness = Some(c);
        }
    }
    Ok(ErrorReport {
        layer,
        distance,
        error: witness.map(|w| w.distance).unwrap_or(0.0),
        witness: witness.cloned(),
        per_query,
        skipped,
    })
}

/// The abstraction error of a surjective α-abstraction (`R′` = all high-level
/// variables), evaluated query by query through [`Scm::query`].
///
/// Zero-probability L1 cells are skipped; an undefined high-level cell counts
/// as the largest distance.
pub fn abstraction_error(
    e: &Embedding,
    low: &Scm,
    high: &Scm,
    layer: Layer,
    distance: Distance,
) -> Result<f64, EmbeddingError> {
    let mut violations = validate_structure(e, low, high);
    for v in high.variables() {
        if !e.relevant_high().contains(&v) {
            violations.push(Violation::MissingRangeMap { target: v });
        }
    }
    if !violations.is_empty() {
        return Err(EmbeddingError::StructureInvalid(violations));
    }
    let vars = high.variables();
    let mut max: f64 = 0.0;
    for xmask in 0..(1usize << vars.len()) {
        let xs = subset(&vars, xmask);
        let pre_x = e.preimage_of(&xs);
        let ranges = pre_x
            .iter()
            .map(|v| low.range(v).map(|r| r.values()))
            .collect::<Result<Vec<_>, _>>()?;
        for x in cartesian(&ranges) {
            let xh = e.image_of(&xs, &x).expect("validated range maps are total");
            let low_given: BTreeMap<VariableId, Value> =
                pre_x.iter().cloned().zip(x.iter().copied()).collect();
            let high_given: BTreeMap<VariableId, Value> =
                xs.iter().cloned().zip(xh.iter().copied()).collect();
            for ymask in 0..(1usize << vars.len()) {
                let ys = subset(&vars, ymask);
                let pre_y = e.preimage_of(&ys);
                let low_d = match low.query(&pre_y, layer, &low_given) {
                    Ok(d) => d,
                    Err(crate::scm::ScmError::ZeroProbabilityCondition) => continue,
                    Err(err) => return Err(err.into()),
                };
                let alphas: Vec<&RangeMap> = ys.iter().map(|y| &e.alphas[y]).collect();
                let pushed = pushforward(&alphas, &low_d)?;
                let d = match high.query(&ys, layer, &high_given) {
                    Ok(h) => distance.compute(&h, &pushed)?,
                    Err(crate::scm::ScmError::ZeroProbabilityCondition) => worst(distance),
                    Err(err) => return Err(err.into()),
                };
                max = max.max(d);
            }
        }
    }
    Ok(max)
}
