//! α-embeddings between a low-level and a high-level model.
//!
//! An [`Embedding`] pairs a surjective variable map `φ: R → R′` with one
//! [`RangeMap`] per high-level relevant variable. Structural validity is
//! model-dependent and checked by [`validate_structure`]; graphical validity
//! by [`is_embedding`]; functional consistency by [`embedding_error`].

mod construct;
mod error;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::distribution::DistributionError;
use crate::graph::{
    self, latent_project, mediated_adjacencies, mediated_confounders, CausalGraph, CdagReport,
    GraphError, VariableMap,
};
use crate::scm::{Domain, ScmError};
use crate::variable::cartesian;
use crate::{DiscreteDistribution, Scm, Value, VariableId};

pub use construct::construct_consistent_high_level;
pub use error::{abstraction_error, embedding_error, ErrorReport, QueryCell, SkippedQuery};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbeddingError {
    #[error("embedding is structurally invalid ({} violations, first: {})", .0.len(), .0[0])]
    StructureInvalid(Vec<Violation>),
    #[error("the map is not graphically consistent ({} edge violations)", .0.violations.len())]
    NotGraphicallyConsistent(CdagReport),
    #[error("exogenous {exogenous} confounds {clusters:?} jointly, which the high-level graph cannot realize")]
    UnrealizableConfounding {
        exogenous: VariableId,
        clusters: Vec<VariableId>,
    },
    #[error("encoding for {variable} needs {size} table rows")]
    EncodingTooLarge { variable: VariableId, size: usize },
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("range map for {0} is given twice")]
    DuplicateAlpha(VariableId),
    #[error("distribution variables {got:?} do not match the preimage {expected:?}")]
    VariableMismatch {
        expected: Vec<VariableId>,
        got: Vec<VariableId>,
    },
    #[error("range map for {target} is undefined on {input:?}")]
    Undefined {
        target: VariableId,
        input: Vec<Value>,
    },
    #[error(transparent)]
    Scm(#[from] ScmError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeMapKind {
    /// One preimage variable, value passed through.
    Identity,
    /// Sum of the preimage values.
    Sum,
    /// Explicit rows.
    Table,
}

/// `α_{V′}`: maps assignments of `φ⁻¹(V′)` (in `preimage` order) to values of `V′`.
#[derive(Clone, Debug, PartialEq)]
pub struct RangeMap {
    target: VariableId,
    preimage: Vec<VariableId>,
    kind: RangeMapKind,
    table: BTreeMap<Vec<Value>, Value>,
}

impl RangeMap {
    pub fn identity(target: impl Into<VariableId>, source: impl Into<VariableId>) -> Self {
        RangeMap {
            target: target.into(),
            preimage: vec![source.into()],
            kind: RangeMapKind::Identity,
            table: BTreeMap::new(),
        }
    }

    pub fn sum(target: impl Into<VariableId>, preimage: Vec<VariableId>) -> Self {
        RangeMap {
            target: target.into(),
            preimage,
            kind: RangeMapKind::Sum,
            table: BTreeMap::new(),
        }
    }

    pub fn table(
        target: impl Into<VariableId>,
        preimage: Vec<VariableId>,
        rows: impl IntoIterator<Item = (Vec<Value>, Value)>,
    ) -> Self {
        RangeMap {
            target: target.into(),
            preimage,
            kind: RangeMapKind::Table,
            table: rows.into_iter().collect(),
        }
    }

    pub fn target(&self) -> &VariableId {
        &self.target
    }

    pub fn preimage(&self) -> &[VariableId] {
        &self.preimage
    }

    pub fn kind(&self) -> RangeMapKind {
        self.kind
    }

    pub fn rows(&self) -> &BTreeMap<Vec<Value>, Value> {
        &self.table
    }

    /// Removes a table row; used to build deliberately partial maps.
    pub fn without_row(mut self, input: &[Value]) -> Self {
        self.table.remove(input);
        self
    }

    pub fn apply(&self, input: &[Value]) -> Option<Value> {
        if input.len() != self.preimage.len() {
            return None;
        }
        match self.kind {
            RangeMapKind::Identity => input.first().copied().filter(|_| input.len() == 1),
            RangeMapKind::Sum => Some(input.iter().sum()),
            RangeMapKind::Table => self.table.get(input).copied(),
        }
    }

    /// Real-valued application for dataset cells. Tables need integral inputs.
    pub fn apply_real(&self, input: &[f64]) -> Option<f64> {
        if input.len() != self.preimage.len() {
            return None;
        }
        match self.kind {
            RangeMapKind::Identity => input.first().copied().filter(|_| input.len() == 1),
            RangeMapKind::Sum => Some(input.iter().sum()),
            RangeMapKind::Table => {
                let key = input
                    .iter()
                    .map(|x| (x.fract() == 0.0).then_some(*x as Value))
                    .collect::<Option<Vec<_>>>()?;
                self.table.get(&key).map(|v| *v as f64)
            }
        }
    }

    pub fn is_identity(&self) -> bool {
        match self.kind {
            RangeMapKind::Identity => self.preimage.len() == 1,
            RangeMapKind::Sum => self.preimage.len() == 1,
            RangeMapKind::Table => {
                self.preimage.len() == 1 && self.table.iter().all(|(k, v)| k[0] == *v)
            }
        }
    }
}

/// A non-surjective α-abstraction: `φ: R → R′` plus the range maps.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    phi: VariableMap,
    alphas: BTreeMap<VariableId, RangeMap>,
}

impl Embedding {
    pub fn new(
        phi: VariableMap,
        alphas: impl IntoIterator<Item = RangeMap>,
    ) -> Result<Self, EmbeddingError> {
        let mut map = BTreeMap::new();
        for a in alphas {
            let t = a.target.clone();
            if map.insert(t.clone(), a).is_some() {
                return Err(EmbeddingError::DuplicateAlpha(t));
            }
        }
        Ok(Embedding { phi, alphas: map })
    }

    /// `φ = id` and identity range maps on `vars`.
    pub fn identity(vars: impl IntoIterator<Item = VariableId>) -> Self {
        let vars: Vec<VariableId> = vars.into_iter().collect();
        Embedding {
            phi: VariableMap::identity(vars.iter().cloned()),
            alphas: vars
                .iter()
                .map(|v| (v.clone(), RangeMap::identity(v.clone(), v.clone())))
                .collect(),
        }
    }

    pub fn phi(&self) -> &VariableMap {
        &self.phi
    }

    pub fn relevant_low(&self) -> BTreeSet<VariableId> {
        self.phi.domain_set()
    }

    pub fn relevant_high(&self) -> &BTreeSet<VariableId> {
        self.phi.codomain()
    }

    pub fn alphas(&self) -> &BTreeMap<VariableId, RangeMap> {
        &self.alphas
    }

    pub fn alpha(&self, target: &VariableId) -> Option<&RangeMap> {
        self.alphas.get(target)
    }

    pub fn replace_alpha(&mut self, a: RangeMap) {
        self.alphas.insert(a.target.clone(), a);
    }

    /// `R′` in the high model's declaration order.
    pub(crate) fn ordered_high(&self, high: &Scm) -> Vec<VariableId> {
        high.variables()
            .into_iter()
            .filter(|v| self.relevant_high().contains(v))
            .collect()
    }

    /// Concatenated preimage of `targets`, in range-map order.
    pub(crate) fn preimage_of(&self, targets: &[VariableId]) -> Vec<VariableId> {
        targets
            .iter()
            .flat_map(|t| self.alphas[t].preimage.iter().cloned())
            .collect()
    }

    /// Images of a concatenated low assignment, one per target.
    pub(crate) fn image_of(&self, targets: &[VariableId], low: &[Value]) -> Option<Vec<Value>> {
        let mut out = Vec::with_capacity(targets.len());
        let mut at = 0;
        for t in targets {
            let a = &self.alphas[t];
            let k = a.preimage.len();
            out.push(a.apply(&low[at..at + k])?);
            at += k;
        }
        Some(out)
    }
}

/// One failed structural condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    RelevantNotInLow {
        variable: VariableId,
    },
    RelevantNotInHigh {
        variable: VariableId,
    },
    MissingRangeMap {
        target: VariableId,
    },
    ExtraRangeMap {
        target: VariableId,
    },
    PreimageMismatch {
        target: VariableId,
        expected: Vec<VariableId>,
        got: Vec<VariableId>,
    },
    IdentityArity {
        target: VariableId,
        arity: usize,
    },
    ContinuousRange {
        variable: VariableId,
    },
    NotTotal {
        target: VariableId,
        input: Vec<Value>,
    },
    OutOfRange {
        target: VariableId,
        input: Vec<Value>,
        output: Value,
    },
    NotSurjective {
        target: VariableId,
        value: Value,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::RelevantNotInLow { variable } => {
                write!(f, "{variable} is not a low-level variable")
            }
            Violation::RelevantNotInHigh { variable } => {
                write!(f, "{variable} is not a high-level variable")
            }
            Violation::MissingRangeMap { target } => write!(f, "no range map for {target}"),
            Violation::ExtraRangeMap { target } => {
                write!(f, "range map for {target}, which is not relevant")
            }
            Violation::PreimageMismatch {
                target,
                expected,
                got,
            } => {
                write!(
                    f,
                    "range map for {target} reads {got:?}, preimage is {expected:?}"
                )
            }
            Violation::IdentityArity { target, arity } => {
                write!(f, "identity map for {target} has {arity} inputs")
            }
            Violation::ContinuousRange { variable } => write!(f, "{variable} has no finite range"),
            Violation::NotTotal { target, input } => {
                write!(f, "range map for {target} is undefined on {input:?}")
            }
            Violation::OutOfRange {
                target,
                input,
                output,
            } => {
                write!(
                    f,
                    "range map for {target} sends {input:?} to {output}, outside the range"
                )
            }
            Violation::NotSurjective { target, value } => {
                write!(f, "value {value} of {target} is never hit")
            }
        }
    }
}

/// Checks relevant sets, preimage alignment, totality and surjectivity of
/// every range map. An empty list means the embedding is structurally valid.
pub fn validate_structure(e: &Embedding, low: &Scm, high: &Scm) -> Vec<Violation> {
    validate_against(e, low, Some(high))
}

/// Structural checks that need only the low-level model; high-level ranges
/// are then taken to be the images of the range maps.
pub(crate) fn validate_against(e: &Embedding, low: &Scm, high: Option<&Scm>) -> Vec<Violation> {
    let mut out = Vec::new();
    for v in e.phi.domain() {
        if !low.contains(v) {
            out.push(Violation::RelevantNotInLow {
                variable: v.clone(),
            });
        }
    }
    for v in e.relevant_high() {
        if high.is_some_and(|h| !h.contains(v)) {
            out.push(Violation::RelevantNotInHigh {
                variable: v.clone(),
            });
        }
        if !e.alphas.contains_key(v) {
            out.push(Violation::MissingRangeMap { target: v.clone() });
        }
    }
    for t in e.alphas.keys() {
        if !e.relevant_high().contains(t) {
            out.push(Violation::ExtraRangeMap { target: t.clone() });
        }
    }
    if !out.is_empty() {
        return out;
    }
    for (t, a) in &e.alphas {
        let expected = e.phi.preimage(t);
        let got_set: BTreeSet<&VariableId> = a.preimage.iter().collect();
        if got_set.len() != a.preimage.len() || got_set != expected.iter().collect::<BTreeSet<_>>()
        {
            out.push(Violation::PreimageMismatch {
                target: t.clone(),
                expected,
                got: a.preimage.clone(),
            });
            continue;
        }
        if a.kind == RangeMapKind::Identity && a.preimage.len() != 1 {
            out.push(Violation::IdentityArity {
                target: t.clone(),
                arity: a.preimage.len(),
            });
            continue;
        }
        let high_range = match high.map(|h| h.domain(t)) {
            None => None,
            Some(Some(Domain::Finite(r))) => Some(r),
            Some(_) => {
                out.push(Violation::ContinuousRange {
                    variable: t.clone(),
                });
                continue;
            }
        };
        let mut factors = Vec::new();
        for v in &a.preimage {
            match low.domain(v) {
                Some(Domain::Finite(r)) => factors.push(r.values()),
                _ => out.push(Violation::ContinuousRange {
                    variable: v.clone(),
                }),
            }
        }
        if factors.len() != a.preimage.len() {
            continue;
        }
        let mut hit = BTreeSet::new();
        for input in cartesian(&factors) {
            match a.apply(&input) {
                None => out.push(Violation::NotTotal {
                    target: t.clone(),
                    input,
                }),
                Some(y) if high_range.is_some_and(|r| !r.contains(y)) => {
                    out.push(Violation::OutOfRange {
                        target: t.clone(),
                        input,
                        output: y,
                    })
                }
                Some(y) => {
                    hit.insert(y);
                }
            }
        }
        for &y in high_range.map(|r| r.values()).unwrap_or_default() {
            if !hit.contains(&y) {
                out.push(Violation::NotSurjective {
                    target: t.clone(),
                    value: y,
                });
            }
        }
    }
    out
}

/// How [`is_embedding`] decides graphical validity. Both give the same verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Project both graphs, then check the cluster-DAG conditions.
    Projection,
    /// Compare mediated adjacencies and confounders on the unprojected graphs.
    Mediated,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "projection" => Ok(Method::Projection),
            "mediated" => Ok(Method::Mediated),
            other => Err(format!(
                "unknown method {other:?} (expected projection or mediated)"
            )),
        }
    }
}

/// Graph-level embedding check, independent of any model.
///
/// `phi` maps the relevant low vertices onto the relevant high vertices. The
/// report lists, in high-level names, each mediated edge present on one side
/// only; edges within one cluster are ignored.
pub fn check_graphs(
    low: &CausalGraph,
    high: &CausalGraph,
    phi: &VariableMap,
    method: Method,
) -> Result<CdagReport, GraphError> {
    let r = phi.domain_set();
    let r_high = phi.codomain().clone();
    match method {
        Method::Projection => {
            let pl = latent_project(low, &r)?;
            let ph = latent_project(high, &r_high)?;
            graph::is_cdag(&pl, &ph, phi)
        }
        Method::Mediated => {
            let (d, bi) = graph::cluster_edges(
                phi,
                mediated_adjacencies(low, &r)?,
                mediated_confounders(low, &r)?,
            );
            Ok(CdagReport::from_sets(
                &d,
                &mediated_adjacencies(high, &r_high)?,
                &bi,
                &mediated_confounders(high, &r_high)?,
            ))
        }
    }
}

/// Whether `e` is an α-embedding of `low` into `high`.
pub fn is_embedding(
    e: &Embedding,
    low: &Scm,
    high: &Scm,
    method: Method,
) -> Result<CdagReport, EmbeddingError> {
    let violations = validate_structure(e, low, high);
    if !violations.is_empty() {
        return Err(EmbeddingError::StructureInvalid(violations));
    }
    Ok(check_graphs(
        &low.induced_graph(),
        &high.induced_graph(),
        &e.phi,
        method,
    )?)
}

/// Image of `dist` under the range maps `alphas`.
///
/// `dist` must range over exactly the union of the maps' preimages; the
/// result ranges over the maps' targets in the given order.
pub fn pushforward(
    alphas: &[&RangeMap],
    dist: &DiscreteDistribution,
) -> Result<DiscreteDistribution, EmbeddingError> {
    let wanted: Vec<VariableId> = alphas
        .iter()
        .flat_map(|a| a.preimage.iter().cloned())
        .collect();
    let have: BTreeSet<&VariableId> = dist.variables().iter().collect();
    if wanted.len() != have.len() || wanted.iter().collect::<BTreeSet<_>>() != have {
        return Err(EmbeddingError::VariableMismatch {
            expected: wanted,
            got: dist.variables().to_vec(),
        });
    }
    let pos: Vec<usize> = wanted
        .iter()
        .map(|v| dist.variables().iter().position(|w| w == v).unwrap())
        .collect();
    let mut pmf: BTreeMap<Vec<Value>, f64> = BTreeMap::new();
    let mut input = Vec::new();
    for (cell, p) in dist.pmf() {
        let mut image = Vec::with_capacity(alphas.len());
        let mut at = 0;
        for a in alphas {
            input.clear();
            input.extend(pos[at..at + a.preimage.len()].iter().map(|&i| cell[i]));
            at += a.preimage.len();
            image.push(a.apply(&input).ok_or_else(|| EmbeddingError::Undefined {
                target: a.target.clone(),
                input: input.clone(),
            })?);
        }
        *pmf.entry(image).or_insert(0.0) += p;
    }
    let targets: Vec<VariableId> = alphas.iter().map(|a| a.target.clone()).collect();
    Ok(DiscreteDistribution::new(targets, pmf)?)
}
