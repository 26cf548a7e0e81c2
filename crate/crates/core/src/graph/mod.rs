//! Acyclic directed mixed graphs, latent projection and cluster-DAG checks.
//!
//! Text form:
//!
//! ```text
//! vertices A B C
//! A -> B
//! B <-> C
//! ```
//!
//! Blank lines and `#` comments are ignored. Vertices named in edges must be
//! declared.

mod cdag;
mod projection;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::VariableId;

pub(crate) use cdag::cluster_edges;
pub use cdag::{is_cdag, CdagReport, EdgeKind, EdgeViolation, Problem};
pub use projection::{latent_project, mediated_adjacencies, mediated_confounders, mediated_reach};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("unknown variable {0}")]
    UnknownVariable(VariableId),
    #[error("vertex {0} declared twice")]
    DuplicateVertex(VariableId),
    #[error("self-loop on {0}")]
    SelfLoop(VariableId),
    #[error("edge {from} -> {to} closes a directed cycle")]
    Cycle { from: VariableId, to: VariableId },
    #[error("variable map does not match the graphs: {0}")]
    MapMismatch(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// An ADMG: directed edges forming a DAG plus unordered bidirected edges.
///
/// Vertices keep their insertion order, which fixes the order of every
/// listing derived from the graph.
#[derive(Clone, Debug, Default)]
pub struct CausalGraph {
    vertices: Vec<VariableId>,
    index: HashMap<VariableId, usize>,
    children: Vec<BTreeSet<usize>>,
    parents: Vec<BTreeSet<usize>>,
    spouses: Vec<BTreeSet<usize>>,
}

impl PartialEq for CausalGraph {
    fn eq(&self, other: &Self) -> bool {
        let vs = |g: &CausalGraph| g.vertices.iter().cloned().collect::<BTreeSet<_>>();
        vs(self) == vs(other)
            && self.directed_set() == other.directed_set()
            && self.bidirected_set() == other.bidirected_set()
    }
}

impl Eq for CausalGraph {}

impl CausalGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Panics on duplicate names.
    pub fn with_vertices(vertices: impl IntoIterator<Item = VariableId>) -> Self {
        let mut g = CausalGraph::new();
        for v in vertices {
            g.add_vertex(v).expect("duplicate vertex");
        }
        g
    }

    pub fn add_vertex(&mut self, v: VariableId) -> Result<(), GraphError> {
        if self.index.contains_key(&v) {
            return Err(GraphError::DuplicateVertex(v));
        }
        self.index.insert(v.clone(), self.vertices.len());
        self.vertices.push(v);
        self.children.push(BTreeSet::new());
        self.parents.push(BTreeSet::new());
        self.spouses.push(BTreeSet::new());
        Ok(())
    }

    fn idx(&self, v: &VariableId) -> Result<usize, GraphError> {
        self.index
            .get(v)
            .copied()
            .ok_or_else(|| GraphError::UnknownVariable(v.clone()))
    }

    pub fn add_directed(&mut self, from: VariableId, to: VariableId) -> Result<(), GraphError> {
        let a = self.idx(&from)?;
        let b = self.idx(&to)?;
        if a == b {
            return Err(GraphError::SelfLoop(from));
        }
        if self.children[a].contains(&b) {
            return Ok(());
        }
        if self.reaches(b, a) {
            return Err(GraphError::Cycle { from, to });
        }
        self.children[a].insert(b);
        self.parents[b].insert(a);
        Ok(())
    }

    pub fn add_bidirected(&mut self, a: VariableId, b: VariableId) -> Result<(), GraphError> {
        let i = self.idx(&a)?;
        let j = self.idx(&b)?;
        if i == j {
            return Err(GraphError::SelfLoop(a));
        }
        self.spouses[i].insert(j);
        self.spouses[j].insert(i);
        Ok(())
    }

    pub fn remove_vertex(&mut self, v: &VariableId) -> Result<(), GraphError> {
        self.idx(v)?;
        let keep: Vec<VariableId> = self.vertices.iter().filter(|w| *w != v).cloned().collect();
        let mut g = CausalGraph::with_vertices(keep);
        for (a, b) in self.directed_edges() {
            if a != v && b != v {
                g.add_directed(a.clone(), b.clone())?;
            }
        }
        for (a, b) in self.bidirected_edges() {
            if a != v && b != v {
                g.add_bidirected(a.clone(), b.clone())?;
            }
        }
        *self = g;
        Ok(())
    }

    /// Directed reachability `from ⤳ to` (a vertex reaches itself).
    fn reaches(&self, from: usize, to: usize) -> bool {
        let mut seen = vec![false; self.vertices.len()];
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            stack.extend(self.children[v].iter().copied());
        }
        false
    }

    pub fn vertices(&self) -> &[VariableId] {
        &self.vertices
    }

    pub fn contains(&self, v: &VariableId) -> bool {
        self.index.contains_key(v)
    }

    pub fn has_directed(&self, a: &VariableId, b: &VariableId) -> bool {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&i), Some(&j)) => self.children[i].contains(&j),
            _ => false,
        }
    }

    pub fn has_bidirected(&self, a: &VariableId, b: &VariableId) -> bool {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&i), Some(&j)) => self.spouses[i].contains(&j),
            _ => false,
        }
    }

    /// Directed edges, ordered by vertex insertion order.
    pub fn directed_edges(&self) -> impl Iterator<Item = (&VariableId, &VariableId)> + '_ {
        self.children.iter().enumerate().flat_map(move |(i, cs)| {
            cs.iter()
                .map(move |&j| (&self.vertices[i], &self.vertices[j]))
        })
    }

    /// Bidirected edges, each listed once with the earlier vertex first.
    pub fn bidirected_edges(&self) -> impl Iterator<Item = (&VariableId, &VariableId)> + '_ {
        self.spouses.iter().enumerate().flat_map(move |(i, ss)| {
            ss.iter()
                .filter(move |&&j| j > i)
                .map(move |&j| (&self.vertices[i], &self.vertices[j]))
        })
    }

    pub fn directed_set(&self) -> BTreeSet<(VariableId, VariableId)> {
        self.directed_edges()
            .map(|(a, b)| (a.clone(), b.clone()))
            .collect()
    }

    /// Bidirected edges as name-sorted pairs.
    pub fn bidirected_set(&self) -> BTreeSet<(VariableId, VariableId)> {
        self.bidirected_edges()
            .map(|(a, b)| unordered(a, b))
            .collect()
    }

    pub fn parents(&self, v: &VariableId) -> Result<Vec<VariableId>, GraphError> {
        let i = self.idx(v)?;
        Ok(self.parents[i]
            .iter()
            .map(|&j| self.vertices[j].clone())
            .collect())
    }

    pub fn children(&self, v: &VariableId) -> Result<Vec<VariableId>, GraphError> {
        let i = self.idx(v)?;
        Ok(self.children[i]
            .iter()
            .map(|&j| self.vertices[j].clone())
            .collect())
    }

    pub fn spouses(&self, v: &VariableId) -> Result<Vec<VariableId>, GraphError> {
        let i = self.idx(v)?;
        Ok(self.spouses[i]
            .iter()
            .map(|&j| self.vertices[j].clone())
            .collect())
    }

    /// Ancestors of `targets`, including the targets themselves.
    pub fn ancestors(&self, targets: &[VariableId]) -> Result<BTreeSet<VariableId>, GraphError> {
        let mut seen = vec![false; self.vertices.len()];
        let mut queue: VecDeque<usize> = targets
            .iter()
            .map(|t| self.idx(t))
            .collect::<Result<_, _>>()?;
        while let Some(v) = queue.pop_front() {
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            queue.extend(self.parents[v].iter().copied());
        }
        Ok(seen
            .iter()
            .enumerate()
            .filter(|(_, s)| **s)
            .map(|(i, _)| self.vertices[i].clone())
            .collect())
    }

    /// A topological order of the directed part; ties broken by insertion order.
    pub fn topological_order(&self) -> Vec<VariableId> {
        let mut indeg: Vec<usize> = self.parents.iter().map(BTreeSet::len).collect();
        let mut ready: BTreeSet<usize> = (0..self.vertices.len())
            .filter(|&i| indeg[i] == 0)
            .collect();
        let mut out = Vec::with_capacity(self.vertices.len());
        while let Some(i) = ready.pop_first() {
            out.push(self.vertices[i].clone());
            for &c in &self.children[i] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        out
    }

    pub fn parse(src: &str) -> Result<CausalGraph, GraphError> {
        let mut g = CausalGraph::new();
        let mut declared = false;
        for (n, raw) in src.lines().enumerate() {
            let line = n + 1;
            let text = raw.split('#').next().unwrap().trim();
            if text.is_empty() {
                continue;
            }
            let err = |msg: String| GraphError::Parse { line, msg };
            if let Some(rest) = text.strip_prefix("vertices") {
                if !rest.is_empty() && !rest.starts_with(char::is_whitespace) {
                    return Err(err(format!("unrecognised line {text:?}")));
                }
                for name in rest.split_whitespace() {
                    g.add_vertex(VariableId::new(name))
                        .map_err(|e| err(e.to_string()))?;
                }
                declared = true;
                continue;
            }
            let (a, b, bi) = if let Some((a, b)) = text.split_once("<->") {
                (a, b, true)
            } else if let Some((a, b)) = text.split_once("->") {
                (a, b, false)
            } else {
                return Err(err(format!("unrecognised line {text:?}")));
            };
            let (a, b) = (a.trim(), b.trim());
            if a.is_empty()
                || b.is_empty()
                || a.contains(char::is_whitespace)
                || b.contains(char::is_whitespace)
            {
                return Err(err(format!("malformed edge {text:?}")));
            }
            if !declared {
                return Err(err("edges must follow a vertices line".into()));
            }
            let r = if bi {
                g.add_bidirected(a.into(), b.into())
            } else {
                g.add_directed(a.into(), b.into())
            };
            r.map_err(|e| err(e.to_string()))?;
        }
        Ok(g)
    }
}

impl fmt::Display for CausalGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "vertices")?;
        for v in &self.vertices {
            write!(f, " {v}")?;
        }
        writeln!(f)?;
        for (a, b) in self.directed_edges() {
            writeln!(f, "{a} -> {b}")?;
        }
        for (a, b) in self.bidirected_edges() {
            writeln!(f, "{a} <-> {b}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for CausalGraph {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CausalGraph::parse(s)
    }
}

pub(crate) fn unordered(a: &VariableId, b: &VariableId) -> (VariableId, VariableId) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// A total, surjective map `φ: R → R′` between relevant variable sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableMap {
    map: BTreeMap<VariableId, VariableId>,
    codomain: BTreeSet<VariableId>,
}

impl VariableMap {
    /// The codomain is the image of `pairs`, so the map is surjective by
    /// construction. Errors when a source is mapped twice.
    pub fn new(
        pairs: impl IntoIterator<Item = (VariableId, VariableId)>,
    ) -> Result<Self, GraphError> {
        let mut map = BTreeMap::new();
        for (a, b) in pairs {
            if let Some(prev) = map.insert(a.clone(), b.clone()) {
                if prev != b {
                    return Err(GraphError::MapMismatch(format!(
                        "{a} is mapped to both {prev} and {b}"
                    )));
                }
            }
        }
        let codomain = map.values().cloned().collect();
        Ok(VariableMap { map, codomain })
    }

    /// Like [`VariableMap::new`] but checks surjectivity onto a declared codomain.
    pub fn with_codomain(
        pairs: impl IntoIterator<Item = (VariableId, VariableId)>,
        codomain: impl IntoIterator<Item = VariableId>,
    ) -> Result<Self, GraphError> {
        let m = Self::new(pairs)?;
        let declared: BTreeSet<VariableId> = codomain.into_iter().collect();
        if let Some(v) = declared.difference(&m.codomain).next() {
            return Err(GraphError::MapMismatch(format!(
                "{v} has an empty preimage"
            )));
        }
        if let Some(v) = m.codomain.difference(&declared).next() {
            return Err(GraphError::MapMismatch(format!(
                "{v} is outside the declared codomain"
            )));
        }
        Ok(m)
    }

    pub fn identity(vars: impl IntoIterator<Item = VariableId>) -> Self {
        Self::new(vars.into_iter().map(|v| (v.clone(), v))).expect("identity is a function")
    }

    pub fn domain(&self) -> impl Iterator<Item = &VariableId> + '_ {
        self.map.keys()
    }

    pub fn domain_set(&self) -> BTreeSet<VariableId> {
        self.map.keys().cloned().collect()
    }

    pub fn codomain(&self) -> &BTreeSet<VariableId> {
        &self.codomain
    }

    pub fn get(&self, v: &VariableId) -> Option<&VariableId> {
        self.map.get(v)
    }

    /// Preimage of `target`, sorted by name.
    pub fn preimage(&self, target: &VariableId) -> Vec<VariableId> {
        self.map
            .iter()
            .filter(|(_, b)| *b == target)
            .map(|(a, _)| a.clone())
            .collect()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&VariableId, &VariableId)> + '_ {
        self.map.iter()
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().all(|(a, b)| a == b)
    }
}
