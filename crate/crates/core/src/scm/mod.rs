//! Structural causal models over finite-range endogenous variables.
//!
//! An [`Scm`] holds endogenous variables in declaration order, independent
//! exogenous variables, one [`StructuralFunction`] per endogenous variable and
//! an (initially empty) set of hard interventions. The declaration order is
//! the canonical column order of every distribution and dataset the model
//! produces.

mod exact;
mod expr;
mod sample;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::CausalGraph;
use crate::{Value, ValueRange, VariableId};

pub use expr::{Expr, ParseError};
pub use sample::{sample, sample_stream, standard_normal, uniform_open01, RowRng, DEFAULT_STREAM};

/// Query layer of the causal hierarchy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Layer {
    /// Observational: condition on the given values.
    L1,
    /// Interventional: apply `do(given)` first.
    L2,
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Layer::L1 => f.write_str("L1"),
            Layer::L2 => f.write_str("L2"),
        }
    }
}

impl std::str::FromStr for Layer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "L1" => Ok(Layer::L1),
            "L2" => Ok(Layer::L2),
            other => Err(format!("unknown layer {other:?} (expected L1 or L2)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScmError {
    #[error("unknown variable {0}")]
    UnknownVariable(VariableId),
    #[error("value {value} is outside the range of {variable}")]
    ValueOutOfRange { variable: VariableId, value: Value },
    #[error("the model's directed graph has a cycle through {0}")]
    CyclicModel(VariableId),
    #[error("exogenous variable {0} has a parametric law; use the sampler")]
    ContinuousExogenous(VariableId),
    #[error("variable {0} has a continuous domain; the exact engine needs finite ranges")]
    ContinuousDomain(VariableId),
    #[error("conditioning event has zero probability")]
    ZeroProbabilityCondition,
    #[error("variable {0} is declared more than once")]
    DuplicateVariable(VariableId),
    #[error("endogenous variable {0} has no structural function")]
    MissingFunction(VariableId),
    #[error("function for {0} is declared more than once")]
    DuplicateFunction(VariableId),
    #[error("function for {target} references undeclared {reference}")]
    UndeclaredReference {
        target: VariableId,
        reference: VariableId,
    },
    #[error("tabular function for {target} has no row for inputs {inputs:?}")]
    NonTotalFunction {
        target: VariableId,
        inputs: Vec<Value>,
    },
    #[error("function for {target} produced {value}, outside its range")]
    OutputOutOfRange { target: VariableId, value: f64 },
    #[error("function for {target} produced non-integral {value}")]
    NonIntegralOutput { target: VariableId, value: f64 },
    #[error("invalid law for {id}: {reason}")]
    InvalidLaw { id: VariableId, reason: String },
    #[error("tabular function for {target} has rows of arity {got}, expected {expected}")]
    TableArity {
        target: VariableId,
        expected: usize,
        got: usize,
    },
}

/// Domain of an endogenous variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Finite(ValueRange),
    /// Real- or integer-valued without a finite enumeration; sampling only.
    Continuous,
}

impl Domain {
    pub fn range(&self) -> Option<&ValueRange> {
        match self {
            Domain::Finite(r) => Some(r),
            Domain::Continuous => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Endogenous {
    pub id: VariableId,
    pub domain: Domain,
}

/// Law of one exogenous variable. Exogenous variables are mutually independent.
#[derive(Clone, Debug, PartialEq)]
pub enum ExogenousLaw {
    /// `(value, probability)` in support order.
    Tabular(Vec<(Value, f64)>),
    Normal {
        mean: f64,
        std: f64,
    },
}

impl ExogenousLaw {
    pub fn uniform(values: &[Value]) -> Self {
        let p = 1.0 / values.len() as f64;
        ExogenousLaw::Tabular(values.iter().map(|v| (*v, p)).collect())
    }

    /// `B(p)` on `{0, 1}`.
    pub fn bernoulli(p: f64) -> Self {
        ExogenousLaw::Tabular(vec![(0, 1.0 - p), (1, p)])
    }

    pub fn point(v: Value) -> Self {
        ExogenousLaw::Tabular(vec![(v, 1.0)])
    }

    pub fn is_tabular(&self) -> bool {
        matches!(self, ExogenousLaw::Tabular(_))
    }

    fn validate(&self, id: &VariableId) -> Result<(), ScmError> {
        let bad = |reason: String| ScmError::InvalidLaw {
            id: id.clone(),
            reason,
        };
        match self {
            ExogenousLaw::Tabular(cells) => {
                if cells.is_empty() {
                    return Err(bad("empty support".into()));
                }
                let mut seen = BTreeSet::new();
                let mut total = 0.0;
                for (v, p) in cells {
                    if !seen.insert(*v) {
                        return Err(bad(format!("duplicate value {v}")));
                    }
                    if !p.is_finite() || *p < 0.0 {
                        return Err(bad(format!("negative or non-finite probability {p}")));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(bad(format!("probabilities sum to {total}")));
                }
                Ok(())
            }
            ExogenousLaw::Normal { mean, std } => {
                if !mean.is_finite() || !std.is_finite() || *std <= 0.0 {
                    return Err(bad(format!("normal({mean}, {std}) is not a valid law")));
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExogenousSpec {
    pub id: VariableId,
    pub law: ExogenousLaw,
}

impl ExogenousSpec {
    pub fn new(id: impl Into<VariableId>, law: ExogenousLaw) -> Self {
        ExogenousSpec { id: id.into(), law }
    }
}

/// How a structural function maps its inputs to the target.
#[derive(Clone, Debug, PartialEq)]
pub enum Body {
    /// Keys list endogenous parent values then exogenous parent values, in
    /// the declared parent order. Must be total over the input product.
    Table(BTreeMap<Vec<Value>, Value>),
    Expr(Expr),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructuralFunction {
    pub target: VariableId,
    pub endogenous_parents: Vec<VariableId>,
    pub exogenous_parents: Vec<VariableId>,
    pub body: Body,
    /// Round expression outputs up to the next integer.
    pub integer: bool,
}

impl StructuralFunction {
    pub fn table(
        target: impl Into<VariableId>,
        endogenous_parents: &[&str],
        exogenous_parents: &[&str],
        rows: impl IntoIterator<Item = (Vec<Value>, Value)>,
    ) -> Self {
        StructuralFunction {
            target: target.into(),
            endogenous_parents: endogenous_parents
                .iter()
                .map(|s| VariableId::new(*s))
                .collect(),
            exogenous_parents: exogenous_parents
                .iter()
                .map(|s| VariableId::new(*s))
                .collect(),
            body: Body::Table(rows.into_iter().collect()),
            integer: false,
        }
    }

    /// Panics on a malformed expression; intended for literals in code.
    pub fn expr(
        target: impl Into<VariableId>,
        endogenous_parents: &[&str],
        exogenous_parents: &[&str],
        src: &str,
    ) -> Self {
        StructuralFunction {
            target: target.into(),
            endogenous_parents: endogenous_parents
                .iter()
                .map(|s| VariableId::new(*s))
                .collect(),
            exogenous_parents: exogenous_parents
                .iter()
                .map(|s| VariableId::new(*s))
                .collect(),
            body: Body::Expr(Expr::parse(src).expect("invalid expression literal")),
            integer: false,
        }
    }

    pub fn integer(mut self, on: bool) -> Self {
        self.integer = on;
        self
    }

    pub fn arity(&self) -> usize {
        self.endogenous_parents.len() + self.exogenous_parents.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Node {
    parents: Vec<usize>,
    exo: Vec<usize>,
}

/// A validated structural causal model.
#[derive(Clone, Debug, PartialEq)]
pub struct Scm {
    endogenous: Vec<Endogenous>,
    exogenous: Vec<ExogenousSpec>,
    functions: Vec<StructuralFunction>,
    interventions: BTreeMap<VariableId, Value>,
    index: HashMap<VariableId, usize>,
    exo_index: HashMap<VariableId, usize>,
    nodes: Vec<Node>,
    topo: Vec<usize>,
}

impl Scm {
    /// Validates and assembles a model. Functions may be given in any order.
    pub fn new(
        endogenous: Vec<Endogenous>,
        exogenous: Vec<ExogenousSpec>,
        functions: Vec<StructuralFunction>,
    ) -> Result<Self, ScmError> {
        let mut index = HashMap::new();
        for (i, e) in endogenous.iter().enumerate() {
            if index.insert(e.id.clone(), i).is_some() {
                return Err(ScmError::DuplicateVariable(e.id.clone()));
            }
        }
        let mut exo_index = HashMap::new();
        for (i, u) in exogenous.iter().enumerate() {
            if index.contains_key(&u.id) || exo_index.insert(u.id.clone(), i).is_some() {
                return Err(ScmError::DuplicateVariable(u.id.clone()));
            }
            u.law.validate(&u.id)?;
        }

        let mut slots: Vec<Option<StructuralFunction>> = vec![None; endogenous.len()];
        for f in functions {
            let i = *index
                .get(&f.target)
                .ok_or_else(|| ScmError::UnknownVariable(f.target.clone()))?;
            if slots[i].is_some() {
                return Err(ScmError::DuplicateFunction(f.target.clone()));
            }
            slots[i] = Some(f);
        }
        let mut funcs = Vec::with_capacity(endogenous.len());
        let mut nodes = Vec::with_capacity(endogenous.len());
        for (i, slot) in slots.into_iter().enumerate() {
            let f = slot.ok_or_else(|| ScmError::MissingFunction(endogenous[i].id.clone()))?;
            let undeclared = |r: &VariableId| ScmError::UndeclaredReference {
                target: f.target.clone(),
                reference: r.clone(),
            };
            let parents = f
                .endogenous_parents
                .iter()
                .map(|p| {
                    if *p == f.target {
                        return Err(ScmError::CyclicModel(p.clone()));
                    }
                    index.get(p).copied().ok_or_else(|| undeclared(p))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let exo = f
                .exogenous_parents
                .iter()
                .map(|u| exo_index.get(u).copied().ok_or_else(|| undeclared(u)))
                .collect::<Result<Vec<_>, _>>()?;
            let distinct: BTreeSet<_> = f
                .endogenous_parents
                .iter()
                .chain(&f.exogenous_parents)
                .collect();
            if distinct.len() != f.arity() {
                let dup = f
                    .endogenous_parents
                    .iter()
                    .chain(&f.exogenous_parents)
                    .find(|v| {
                        f.endogenous_parents
                            .iter()
                            .chain(&f.exogenous_parents)
                            .filter(|w| w == v)
                            .count()
                            > 1
                    })
                    .unwrap();
                return Err(ScmError::DuplicateVariable(dup.clone()));
            }
            if let Body::Expr(e) = &f.body {
                for r in e.variables() {
                    if !distinct.contains(&r) {
                        return Err(undeclared(&r));
                    }
                }
            }
            nodes.push(Node { parents, exo });
            funcs.push(f);
        }

        let topo = topological_order(&nodes)
            .map_err(|i| ScmError::CyclicModel(endogenous[i].id.clone()))?;
        let scm = Scm {
            endogenous,
            exogenous,
            functions: funcs,
            interventions: BTreeMap::new(),
            index,
            exo_index,
            nodes,
            topo,
        };
        for i in 0..scm.endogenous.len() {
            scm.validate_function(i)?;
        }
        Ok(scm)
    }

    /// Checks table totality and, when the input product is small and finite,
    /// that every output lies in the target's range.
    fn validate_function(&self, i: usize) -> Result<(), ScmError> {
        const EAGER_LIMIT: usize = 200_000;
        let f = &self.functions[i];
        let Some(inputs) = self.input_supports(i) else {
            if let Body::Table(rows) = &f.body {
                // Tables need enumerable inputs.
                let bad = f
                    .endogenous_parents
                    .iter()
                    .find(|p| self.domain(p).and_then(Domain::range).is_none())
                    .cloned()
                    .or_else(|| {
                        f.exogenous_parents
                            .iter()
                            .find(|u| !self.exogenous[self.exo_index[*u]].law.is_tabular())
                            .cloned()
                    });
                let _ = rows;
                return Err(match bad {
                    Some(v) if self.index.contains_key(&v) => ScmError::ContinuousDomain(v),
                    Some(v) => ScmError::ContinuousExogenous(v),
                    None => unreachable!(),
                });
            }
            return Ok(());
        };
        let size: usize = inputs.iter().map(|s| s.len()).product();
        if let Body::Table(rows) = &f.body {
            if let Some(k) = rows.keys().find(|k| k.len() != f.arity()) {
                return Err(ScmError::TableArity {
                    target: f.target.clone(),
                    expected: f.arity(),
                    got: k.len(),
                });
            }
        }
        let must_enumerate = matches!(f.body, Body::Table(_)) || size <= EAGER_LIMIT;
        if !must_enumerate {
            return Ok(());
        }
        let refs: Vec<&[Value]> = inputs.iter().map(Vec::as_slice).collect();
        let mut odo = Odometer::new(refs.iter().map(|r| r.len()).collect());
        let mut key = vec![0; refs.len()];
        loop {
            for (slot, (r, &j)) in key.iter_mut().zip(refs.iter().zip(odo.digits())) {
                *slot = r[j];
            }
            let (ep, xp) = key.split_at(f.endogenous_parents.len());
            self.eval_exact(i, ep, xp)?;
            if !odo.advance() {
                break;
            }
        }
        Ok(())
    }

    /// Per-input enumerations, or `None` when some input is not enumerable.
    fn input_supports(&self, i: usize) -> Option<Vec<Vec<Value>>> {
        let node = &self.nodes[i];
        let mut out = Vec::new();
        for &p in &node.parents {
            out.push(self.endogenous[p].domain.range()?.values().to_vec());
        }
        for &u in &node.exo {
            match &self.exogenous[u].law {
                ExogenousLaw::Tabular(cells) => out.push(cells.iter().map(|(v, _)| *v).collect()),
                ExogenousLaw::Normal { .. } => return None,
            }
        }
        Some(out)
    }

    /// Evaluates function `i` on integer inputs, honouring the integer flag and
    /// the target range.
    pub(crate) fn eval_exact(
        &self,
        i: usize,
        endo: &[Value],
        exo: &[Value],
    ) -> Result<Value, ScmError> {
        let f = &self.functions[i];
        let v = match &f.body {
            Body::Table(rows) => {
                let key: Vec<Value> = endo.iter().chain(exo).copied().collect();
                *rows.get(&key).ok_or_else(|| ScmError::NonTotalFunction {
                    target: f.target.clone(),
                    inputs: key.clone(),
                })?
            }
            Body::Expr(e) => {
                let mut r = e.eval(&|name| {
                    if let Some(k) = f.endogenous_parents.iter().position(|p| p == name) {
                        Some(endo[k] as f64)
                    } else {
                        f.exogenous_parents
                            .iter()
                            .position(|u| u == name)
                            .map(|k| exo[k] as f64)
                    }
                });
                if f.integer {
                    r = r.ceil();
                }
                let rounded = r.round();
                if !r.is_finite() || (r - rounded).abs() > 1e-9 {
                    return Err(ScmError::NonIntegralOutput {
                        target: f.target.clone(),
                        value: r,
                    });
                }
                rounded as Value
            }
        };
        if let Domain::Finite(range) = &self.endogenous[i].domain {
            if !range.contains(v) {
                return Err(ScmError::OutputOutOfRange {
                    target: f.target.clone(),
                    value: v as f64,
                });
            }
        }
        Ok(v)
    }

    /// Evaluates function `i` on real-valued inputs (sampling path).
    pub(crate) fn eval_real(&self, i: usize, endo: &[f64], exo: &[f64]) -> Result<f64, ScmError> {
        let f = &self.functions[i];
        match &f.body {
            Body::Table(rows) => {
                let mut key = Vec::with_capacity(f.arity());
                for x in endo.iter().chain(exo) {
                    let r = x.round();
                    if (x - r).abs() > 1e-9 {
                        return Err(ScmError::NonIntegralOutput {
                            target: f.target.clone(),
                            value: *x,
                        });
                    }
                    key.push(r as Value);
                }
                rows.get(&key)
                    .map(|v| *v as f64)
                    .ok_or_else(|| ScmError::NonTotalFunction {
                        target: f.target.clone(),
                        inputs: key,
                    })
            }
            Body::Expr(e) => {
                let r = e.eval(&|name| {
                    if let Some(k) = f.endogenous_parents.iter().position(|p| p == name) {
                        Some(endo[k])
                    } else {
                        f.exogenous_parents
                            .iter()
                            .position(|u| u == name)
                            .map(|k| exo[k])
                    }
                });
                Ok(if f.integer { r.ceil() } else { r })
            }
        }
    }

    pub fn endogenous(&self) -> &[Endogenous] {
        &self.endogenous
    }

    pub fn exogenous(&self) -> &[ExogenousSpec] {
        &self.exogenous
    }

    pub fn functions(&self) -> &[StructuralFunction] {
        &self.functions
    }

    pub fn interventions(&self) -> &BTreeMap<VariableId, Value> {
        &self.interventions
    }

    /// Endogenous variable names in declaration order.
    pub fn variables(&self) -> Vec<VariableId> {
        self.endogenous.iter().map(|e| e.id.clone()).collect()
    }

    pub fn contains(&self, v: &VariableId) -> bool {
        self.index.contains_key(v)
    }

    pub fn position(&self, v: &VariableId) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn domain(&self, v: &VariableId) -> Option<&Domain> {
        self.index.get(v).map(|&i| &self.endogenous[i].domain)
    }

    /// Finite range of `v`; errors for unknown or continuous variables.
    pub fn range(&self, v: &VariableId) -> Result<&ValueRange, ScmError> {
        match self.domain(v) {
            None => Err(ScmError::UnknownVariable(v.clone())),
            Some(Domain::Continuous) => Err(ScmError::ContinuousDomain(v.clone())),
            Some(Domain::Finite(r)) => Ok(r),
        }
    }

    pub fn function(&self, v: &VariableId) -> Option<&StructuralFunction> {
        self.index.get(v).map(|&i| &self.functions[i])
    }

    pub(crate) fn topo(&self) -> &[usize] {
        &self.topo
    }

    pub(crate) fn node_parents(&self, i: usize) -> &[usize] {
        &self.nodes[i].parents
    }

    pub(crate) fn node_exogenous(&self, i: usize) -> &[usize] {
        &self.nodes[i].exo
    }

    pub(crate) fn intervened_value(&self, i: usize) -> Option<Value> {
        self.interventions.get(&self.endogenous[i].id).copied()
    }

    /// Sorts `vars` by declaration order and drops duplicates.
    pub fn canonical_order(&self, vars: &[VariableId]) -> Result<Vec<VariableId>, ScmError> {
        let mut idx = vars
            .iter()
            .map(|v| {
                self.position(v)
                    .ok_or_else(|| ScmError::UnknownVariable(v.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        idx.sort_unstable();
        idx.dedup();
        Ok(idx
            .into_iter()
            .map(|i| self.endogenous[i].id.clone())
            .collect())
    }

    /// The ADMG entailed by the model: `A → B` when `A` is a parent of `f_B`,
    /// `A ↔ B` when they share an exogenous parent. Intervened variables lose
    /// all incoming incidences.
    pub fn induced_graph(&self) -> CausalGraph {
        let mut g = CausalGraph::with_vertices(self.variables());
        let mut sharers: Vec<Vec<usize>> = vec![Vec::new(); self.exogenous.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            if self.intervened_value(i).is_some() {
                continue;
            }
            for &p in &node.parents {
                g.add_directed(self.endogenous[p].id.clone(), self.endogenous[i].id.clone())
                    .expect("validated model");
            }
            for &u in &node.exo {
                sharers[u].push(i);
            }
        }
        for group in sharers {
            for (a, &i) in group.iter().enumerate() {
                for &j in &group[a + 1..] {
                    g.add_bidirected(self.endogenous[i].id.clone(), self.endogenous[j].id.clone())
                        .expect("validated model");
                }
            }
        }
        g
    }

    /// `do(assignment)`: replaces each assigned variable's function with a
    /// constant. Re-assigning an already intervened variable overrides it.
    pub fn apply_intervention(
        &self,
        assignment: &BTreeMap<VariableId, Value>,
    ) -> Result<Scm, ScmError> {
        let mut out = self.clone();
        for (v, x) in assignment {
            let i = self
                .position(v)
                .ok_or_else(|| ScmError::UnknownVariable(v.clone()))?;
            if let Domain::Finite(r) = &self.endogenous[i].domain {
                if !r.contains(*x) {
                    return Err(ScmError::ValueOutOfRange {
                        variable: v.clone(),
                        value: *x,
                    });
                }
            }
            out.interventions.insert(v.clone(), *x);
        }
        Ok(out)
    }
}

/// Kahn's algorithm; on a cycle returns some vertex on it.
fn topological_order(nodes: &[Node]) -> Result<Vec<usize>, usize> {
    let n = nodes.len();
    let mut indeg = vec![0usize; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, node) in nodes.iter().enumerate() {
        indeg[i] = node.parents.len();
        for &p in &node.parents {
            children[p].push(i);
        }
    }
    let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop_first() {
        order.push(i);
        for &c in &children[i] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).find(|&i| indeg[i] > 0).unwrap())
    }
}

/// Mixed-radix counter over `0..radix[k]` digits, last digit fastest.
pub(crate) struct Odometer {
    radix: Vec<usize>,
    digits: Vec<usize>,
}

impl Odometer {
    pub(crate) fn new(radix: Vec<usize>) -> Self {
        let digits = vec![0; radix.len()];
        Odometer { radix, digits }
    }

    pub(crate) fn digits(&self) -> &[usize] {
        &self.digits
    }

    /// Steps to the next tuple; `false` once wrapped around.
    pub(crate) fn advance(&mut self) -> bool {
        for k in (0..self.digits.len()).rev() {
            self.digits[k] += 1;
            if self.digits[k] < self.radix[k] {
                return true;
            }
            self.digits[k] = 0;
        }
        false
    }
}

/// A parent assignment and its `(value, probability)` list.
pub type CptRow = (Vec<Value>, Vec<(Value, f64)>);

/// Incremental construction of an [`Scm`].
#[derive(Default)]
pub struct ScmBuilder {
    endogenous: Vec<Endogenous>,
    exogenous: Vec<ExogenousSpec>,
    functions: Vec<StructuralFunction>,
    conditional_error: Option<ScmError>,
}

impl ScmBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a finite-range endogenous variable. Panics on an invalid range literal.
    pub fn variable(mut self, name: &str, values: &[Value]) -> Self {
        let range = ValueRange::new(values.to_vec()).expect("invalid range literal");
        self.endogenous.push(Endogenous {
            id: VariableId::new(name),
            domain: Domain::Finite(range),
        });
        self
    }

    pub fn variable_with_range(mut self, id: VariableId, range: ValueRange) -> Self {
        self.endogenous.push(Endogenous {
            id,
            domain: Domain::Finite(range),
        });
        self
    }

    pub fn continuous(mut self, name: &str) -> Self {
        self.endogenous.push(Endogenous {
            id: VariableId::new(name),
            domain: Domain::Continuous,
        });
        self
    }

    pub fn exogenous(mut self, name: &str, law: ExogenousLaw) -> Self {
        self.exogenous.push(ExogenousSpec::new(name, law));
        self
    }

    pub fn function(mut self, f: StructuralFunction) -> Self {
        self.functions.push(f);
        self
    }

    /// Realizes a conditional probability table as a structural function with
    /// a dedicated exogenous variable `U_<target>`.
    ///
    /// The construction couples all conditionals through one quantile:
    /// every cumulative breakpoint of every row partitions `[0, 1]`, the
    /// exogenous variable picks a cell with probability equal to its length,
    /// and each row maps the cell to the value whose cumulative interval
    /// contains it. `cpt` maps parent assignments (in `parents` order) to
    /// `(value, probability)` lists.
    pub fn conditional(mut self, target: &str, parents: &[&str], cpt: &[CptRow]) -> Self {
        let exo_name = format!("U_{target}");
        let mut cuts: Vec<f64> = vec![0.0, 1.0];
        for (_, pmf) in cpt {
            let mut acc = 0.0;
            for (_, p) in pmf {
                acc += p;
                if acc > 0.0 && acc < 1.0 {
                    cuts.push(acc);
                }
            }
            if (acc - 1.0).abs() > 1e-12 && self.conditional_error.is_none() {
                self.conditional_error = Some(ScmError::InvalidLaw {
                    id: VariableId::new(target),
                    reason: format!("conditional row sums to {acc}"),
                });
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        let cells: Vec<(f64, f64)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();
        let law = ExogenousLaw::Tabular(
            cells
                .iter()
                .enumerate()
                .map(|(j, (lo, hi))| (j as Value, hi - lo))
                .collect(),
        );
        let mut rows = Vec::new();
        for (pa, pmf) in cpt {
            for (j, (lo, hi)) in cells.iter().enumerate() {
                let mid = 0.5 * (lo + hi);
                let mut acc = 0.0;
                let mut chosen = pmf.last().map(|(v, _)| *v).unwrap_or(0);
                for (v, p) in pmf {
                    acc += p;
                    if mid < acc {
                        chosen = *v;
                        break;
                    }
                }
                let mut key = pa.clone();
                key.push(j as Value);
                rows.push((key, chosen));
            }
        }
        self.exogenous
            .push(ExogenousSpec::new(exo_name.as_str(), law));
        self.functions.push(StructuralFunction::table(
            target,
            parents,
            &[exo_name.as_str()],
            rows,
        ));
        self
    }

    pub fn build(self) -> Result<Scm, ScmError> {
        if let Some(e) = self.conditional_error {
            return Err(e);
        }
        Scm::new(self.endogenous, self.exogenous, self.functions)
    }
}
