//! The multi-resolution causal marginal problem.
//!
//! A [`MarginalProblem`] holds marginal models, one embedding per model into
//! a shared high-level variable set and, optionally, a candidate joint model
//! over that set. [`reduce`] pushes every marginal model's query table
//! through its embedding so that all marginals speak the high-level
//! vocabulary; [`certify_solution`] checks a candidate.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::distribution::DistributionError;
use crate::embedding::{
    embedding_error, is_embedding, pushforward, validate_against, validate_structure,
    EmbeddingError, Method, RangeMap, Violation,
};
use crate::variable::cartesian;
use crate::{DiscreteDistribution, Distance, Embedding, Layer, Scm, Value, VariableId};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MarginalError {
    #[error("{models} models but {embeddings} embeddings")]
    LengthMismatch { models: usize, embeddings: usize },
    #[error("embedding {index} targets {variable}, which the candidate does not declare")]
    NotInCandidate { index: usize, variable: VariableId },
    #[error("the problem has no candidate model")]
    MissingCandidate,
    #[error("embedding {index}: {source}")]
    Embedding {
        index: usize,
        #[source]
        source: EmbeddingError,
    },
}

#[derive(Clone, Debug)]
pub struct MarginalProblem {
    pub models: Vec<Scm>,
    pub embeddings: Vec<Embedding>,
    pub candidate: Option<Scm>,
}

impl MarginalProblem {
    pub fn new(
        models: Vec<Scm>,
        embeddings: Vec<Embedding>,
        candidate: Option<Scm>,
    ) -> Result<Self, MarginalError> {
        if models.len() != embeddings.len() {
            return Err(MarginalError::LengthMismatch {
                models: models.len(),
                embeddings: embeddings.len(),
            });
        }
        if let Some(c) = &candidate {
            for (index, e) in embeddings.iter().enumerate() {
                if let Some(v) = e.relevant_high().iter().find(|v| !c.contains(v)) {
                    return Err(MarginalError::NotInCandidate {
                        index,
                        variable: v.clone(),
                    });
                }
            }
        }
        Ok(MarginalProblem {
            models,
            embeddings,
            candidate,
        })
    }

    /// Union of the embeddings' high-level relevant sets.
    pub fn universe(&self) -> BTreeSet<VariableId> {
        self.embeddings
            .iter()
            .flat_map(|e| e.relevant_high().iter().cloned())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryVariable {
    pub name: VariableId,
    /// Image of the range map over the preimage's ranges.
    pub range: Vec<Value>,
}

/// One pushed query `α_{Y′}[P(φ⁻¹(Y′) | L(x))]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryQuery {
    pub layer: Layer,
    pub x_prime: Vec<VariableId>,
    pub x_low: Vec<Value>,
    pub x_high: Vec<Value>,
    pub y_prime: Vec<VariableId>,
    pub distribution: DiscreteDistribution,
}

/// The image model `α_i(M_i)` in high-level vocabulary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub index: usize,
    pub variables: Vec<SummaryVariable>,
    pub queries: Vec<SummaryQuery>,
}

/// A distribution `P(targets | given)` (L1) or `P(targets | do(given))` (L2)
/// that some marginal fixes for any solution.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct FixedDistribution {
    pub layer: Layer,
    pub targets: Vec<VariableId>,
    pub given: Vec<VariableId>,
}

impl std::fmt::Display for FixedDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names = |v: &[VariableId]| {
            v.iter()
                .map(VariableId::as_str)
                .collect::<Vec<_>>()
                .join(",")
        };
        match (self.given.is_empty(), self.layer) {
            (true, _) => write!(f, "P({})", names(&self.targets)),
            (false, Layer::L1) => write!(f, "P({}|{})", names(&self.targets), names(&self.given)),
            (false, Layer::L2) => {
                write!(f, "P({}|do({}))", names(&self.targets), names(&self.given))
            }
        }
    }
}

/// Layer, conditioning set, its assignment and the targets of a query.
pub type OverlapWitness = (Layer, Vec<VariableId>, Vec<Value>, Vec<VariableId>);

/// Largest disagreement between two summaries on a shared query.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Overlap {
    pub first: usize,
    pub second: usize,
    pub shared: Vec<VariableId>,
    pub compared: usize,
    pub max_tv: f64,
    pub witness: Option<OverlapWitness>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Reduction {
    pub summaries: Vec<Summary>,
    /// Distinct `(layer, targets, given)` triples fixed by some summary.
    pub fixed: Vec<FixedDistribution>,
    pub overlaps: Vec<Overlap>,
}

impl Reduction {
    pub fn fixed_at(&self, layer: Layer) -> Vec<&FixedDistribution> {
        self.fixed.iter().filter(|f| f.layer == layer).collect()
    }
}

fn subsets(vars: &[VariableId]) -> Vec<Vec<VariableId>> {
    (0..1usize << vars.len())
        .map(|m| {
            vars.iter()
                .enumerate()
                .filter(|(i, _)| m >> i & 1 == 1)
                .map(|(_, v)| v.clone())
                .collect()
        })
        .collect()
}

fn summarize(index: usize, m: &Scm, e: &Embedding) -> Result<Summary, EmbeddingError> {
    // R′ ordered by first appearance of the preimage in the model.
    let mut r_high: Vec<VariableId> = Vec::new();
    for v in m.variables() {
        if let Some(t) = e.phi().get(&v) {
            if !r_high.contains(t) {
                r_high.push(t.clone());
            }
        }
    }
    let mut variables = Vec::new();
    for t in &r_high {
        let a = e.alpha(t).expect("validated");
        let ranges = a
            .preimage()
            .iter()
            .map(|v| m.range(v).map(|r| r.values()))
            .collect::<Result<Vec<_>, _>>()?;
        let image: BTreeSet<Value> = cartesian(&ranges)
            .iter()
            .filter_map(|x| a.apply(x))
            .collect();
        variables.push(SummaryVariable {
            name: t.clone(),
            range: image.into_iter().collect(),
        });
    }
    let joint = m.joint_distribution()?;
    let mut queries = Vec::new();
    for layer in [Layer::L1, Layer::L2] {
        for xs in subsets(&r_high) {
            let pre_x = e.preimage_of(&xs);
            let ranges = pre_x
                .iter()
                .map(|v| m.range(v).map(|r| r.values()))
                .collect::<Result<Vec<_>, _>>()?;
            for x in cartesian(&ranges) {
                let d = if xs.is_empty() {
                    joint.clone()
                } else {
                    match layer {
                        Layer::L1 => match joint.condition(&pre_x, &x) {
                            Ok(d) => d,
                            Err(DistributionError::ZeroProbability) => continue,
                            Err(err) => return Err(err.into()),
                        },
                        Layer::L2 => {
                            let given: BTreeMap<VariableId, Value> =
                                pre_x.iter().cloned().zip(x.iter().copied()).collect();
                            m.apply_intervention(&given)?.joint_distribution()?
                        }
                    }
                };
                let xh = e.image_of(&xs, &x).expect("validated");
                let rest: Vec<VariableId> =
                    r_high.iter().filter(|v| !xs.contains(v)).cloned().collect();
                for ys in subsets(&rest).into_iter().skip(1) {
                    let alphas: Vec<&RangeMap> = ys.iter().map(|y| e.alpha(y).unwrap()).collect();
                    let pushed = pushforward(&alphas, &d.marginal(&e.preimage_of(&ys))?)?;
                    queries.push(SummaryQuery {
                        layer,
                        x_prime: xs.clone(),
                        x_low: x.clone(),
                        x_high: xh.clone(),
                        y_prime: ys,
                        distribution: pushed,
                    });
                }
            }
        }
    }
    Ok(Summary {
        index,
        variables,
        queries,
    })
}

fn overlap(a: &Summary, b: &Summary) -> Option<Overlap> {
    let names = |s: &Summary| {
        s.variables
            .iter()
            .map(|v| v.name.clone())
            .collect::<BTreeSet<_>>()
    };
    let shared: BTreeSet<VariableId> = names(a).intersection(&names(b)).cloned().collect();
    if shared.is_empty() {
        return None;
    }
    let within = |q: &SummaryQuery| {
        q.x_prime
            .iter()
            .chain(&q.y_prime)
            .all(|v| shared.contains(v))
    };
    let key = |q: &SummaryQuery| {
        let mut x: Vec<(VariableId, Value)> = q
            .x_prime
            .iter()
            .cloned()
            .zip(q.x_high.iter().copied())
            .collect();
        x.sort();
        let mut y = q.y_prime.clone();
        y.sort();
        (q.layer, x, y)
    };
    let mut index: BTreeMap<_, Vec<&SummaryQuery>> = BTreeMap::new();
    for q in b.queries.iter().filter(|q| within(q)) {
        index.entry(key(q)).or_default().push(q);
    }
    let mut out = Overlap {
        first: a.index,
        second: b.index,
        shared: shared.iter().cloned().collect(),
        compared: 0,
        max_tv: 0.0,
        witness: None,
    };
    for q in a.queries.iter().filter(|q| within(q)) {
        let Some(others) = index.get(&key(q)) else {
            continue;
        };
        for o in others {
            let aligned = match o.distribution.marginal(q.distribution.variables()) {
                Ok(d) => d,
                Err(_) => continue,
            };
            let tv = q.distribution.total_variation(&aligned).unwrap_or(1.0);
            out.compared += 1;
            if tv > out.max_tv {
                out.max_tv = tv;
                out.witness = Some((
                    q.layer,
                    q.x_prime.clone(),
                    q.x_high.clone(),
                    q.y_prime.clone(),
                ));
            }
        }
    }
    Some(out)
}

/// Pushes every marginal model through its embedding.
///
/// Summaries list, per layer, every `X′ ⊆ R′_i` (the empty set included),
/// every low-level assignment of its preimage (zero-probability L1 events
/// dropped) and every non-empty `Y′` disjoint from `X′`.
pub fn reduce(p: &MarginalProblem) -> Result<Reduction, MarginalError> {
    let mut summaries = Vec::new();
    for (index, (m, e)) in p.models.iter().zip(&p.embeddings).enumerate() {
        let wrap = |source| MarginalError::Embedding { index, source };
        let violations = validate_against(e, m, p.candidate.as_ref());
        if !violations.is_empty() {
            return Err(wrap(EmbeddingError::StructureInvalid(violations)));
        }
        summaries.push(summarize(index, m, e).map_err(wrap)?);
    }
    let mut fixed = BTreeSet::new();
    for s in &summaries {
        for q in &s.queries {
            let mut targets = q.y_prime.clone();
            targets.sort();
            let mut given = q.x_prime.clone();
            given.sort();
            fixed.insert(FixedDistribution {
                layer: q.layer,
                targets,
                given,
            });
        }
    }
    let mut overlaps = Vec::new();
    for (i, a) in summaries.iter().enumerate() {
        for b in &summaries[i + 1..] {
            overlaps.extend(overlap(a, b));
        }
    }
    Ok(Reduction {
        summaries,
        fixed: fixed.into_iter().collect(),
        overlaps,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmbeddingCheck {
    pub index: usize,
    pub structure: Vec<Violation>,
    pub error: Option<f64>,
    pub covers_all_variables: bool,
    /// Graphical embedding verdict; reported, not required.
    pub graphical_embedding: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateViolation {
    pub embedding: usize,
    pub condition: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub layer: Layer,
    pub holds: bool,
    pub checks: Vec<EmbeddingCheck>,
    pub violations: Vec<CertificateViolation>,
}

/// Certifies the candidate as a solution at `layer`: every embedding must be
/// structurally valid, have TV embedding error at most the probability
/// tolerance, and cover all of its model's variables.
pub fn certify_solution(p: &MarginalProblem, layer: Layer) -> Result<Certificate, MarginalError> {
    let candidate = p
        .candidate
        .as_ref()
        .ok_or(MarginalError::MissingCandidate)?;
    let mut checks = Vec::new();
    let mut violations = Vec::new();
    for (index, (m, e)) in p.models.iter().zip(&p.embeddings).enumerate() {
        let structure = validate_structure(e, m, candidate);
        let covers = e.relevant_low().len() == m.variables().len();
        let mut check = EmbeddingCheck {
            index,
            structure: structure.clone(),
            error: None,
            covers_all_variables: covers,
            graphical_embedding: None,
        };
        if !structure.is_empty() {
            violations.push(CertificateViolation {
                embedding: index,
                condition: "structure".into(),
                detail: structure
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join("; "),
            });
        } else {
            let report = embedding_error(e, m, candidate, layer, Distance::TotalVariation)
                .map_err(|source| MarginalError::Embedding { index, source })?;
            if !report.is_consistent() {
                let w = report
                    .witness
                    .as_ref()
                    .expect("non-zero error has a witness");
                violations.push(CertificateViolation {
                    embedding: index,
                    condition: "error".into(),
                    detail: format!(
                        "{layer} error {} at do/given {:?}={:?}, targets {:?}",
                        report.error, w.x_prime, w.x_high, w.y_prime
                    ),
                });
            }
            check.error = Some(report.error);
            check.graphical_embedding = is_embedding(e, m, candidate, Method::Projection)
                .ok()
                .map(|r| r.holds);
        }
        if !covers {
            let missing: Vec<String> = m
                .variables()
                .into_iter()
                .filter(|v| !e.relevant_low().contains(v))
                .map(|v| v.to_string())
                .collect();
            violations.push(CertificateViolation {
                embedding: index,
                condition: "coverage".into(),
                detail: format!("not relevant: {}", missing.join(", ")),
            });
        }
        checks.push(check);
    }
    Ok(Certificate {
        layer,
        holds: violations.is_empty(),
        checks,
        violations,
    })
}

/// Whether `φ` and every range map are identities and `R` is all of `m`.
pub fn is_identity_embedding(e: &Embedding, m: &Scm) -> bool {
    e.phi().is_identity()
        && e.alphas().values().all(RangeMap::is_identity)
        && e.relevant_low() == m.variables().into_iter().collect::<BTreeSet<_>>()
}
