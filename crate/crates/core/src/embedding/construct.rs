//! Completion of a high-level model that reproduces a low-level one on the
//! relevant variables.
//!
//! Given `φ: R → R′` and a high-level graph whose projection onto `R′` is
//! the cluster DAG of the low-level projection onto `R`, the high-level
//! vertices fall into three classes:
//!
//! - non-ancestors of `R′` are the constant `0` on range `{0}`;
//! - off-`R′` ancestors ("carriers") encode all their inputs, endogenous
//!   parents first then exogenous, as one mixed-radix code;
//! - each `V′ ∈ R′` takes the tuple of `φ⁻¹(V′)` (declaration order, first
//!   component most significant) as its value and recomputes every member
//!   from decoded parent values with the low-level mechanisms, unrolled
//!   through the off-`R` vertices that mediate into it.
//!
//! Each low-level exogenous variable feeding the clusters `S` is copied once
//! and attached to a set of high-level vertices that jointly reach all of
//! `S` and are pairwise bidirected in the high-level graph, so no bidirected
//! edge outside that graph is created. Bidirected edges not realized this way
//! get a point-mass exogenous variable.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{Embedding, EmbeddingError, RangeMap};
use crate::graph::{is_cdag, latent_project, mediated_reach, CausalGraph, VariableMap};
use crate::scm::{
    Body, Domain, Endogenous, ExogenousLaw, ExogenousSpec, Expr, ScmError, StructuralFunction,
};
use crate::variable::cartesian;
use crate::{Scm, Value, ValueRange, VariableId};

const MAX_RANGE: usize = 1 << 20;
const MAX_TABLE: usize = 1 << 21;

/// What one high-level exogenous variable stands for.
#[derive(Clone, Copy)]
enum Source {
    /// Copy of the low-level exogenous variable with this index.
    Copy(usize),
    Dummy,
}

struct HighExo {
    name: VariableId,
    source: Source,
    size: usize,
}

enum Class {
    Constant,
    Carrier,
    Cluster(usize),
}

struct Cluster {
    id: VariableId,
    /// Low indices in declaration order (encoding order).
    members: Vec<usize>,
    /// Same members in a low topological order (evaluation order).
    eval_order: Vec<usize>,
    radix: Vec<usize>,
}

impl Cluster {
    fn size(&self) -> usize {
        self.radix.iter().product()
    }
}

fn encode(digits: &[usize], radix: &[usize]) -> usize {
    digits.iter().zip(radix).fold(0, |acc, (d, r)| acc * r + d)
}

fn decode(mut code: usize, radix: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radix.len()];
    for k in (0..radix.len()).rev() {
        out[k] = code % radix[k];
        code /= radix[k];
    }
    out
}

fn construction(msg: String) -> EmbeddingError {
    EmbeddingError::Construction(msg)
}

/// Builds a high-level model on `high_graph` and the tuple-encoding
/// embedding under which it has zero L2 error against `low`.
pub fn construct_consistent_high_level(
    low: &Scm,
    phi: &VariableMap,
    high_graph: &CausalGraph,
) -> Result<(Scm, Embedding), EmbeddingError> {
    let r_set = phi.domain_set();
    let rh_set = phi.codomain().clone();
    let g_low = low.induced_graph();
    let report = is_cdag(
        &latent_project(&g_low, &r_set)?,
        &latent_project(high_graph, &rh_set)?,
        phi,
    )?;
    if !report.holds {
        return Err(EmbeddingError::NotGraphicallyConsistent(report));
    }

    let low_vars = low.variables();
    let pos = |v: &VariableId| low.position(v).expect("relevant vertex of the low model");
    let in_r: Vec<bool> = low_vars.iter().map(|v| r_set.contains(v)).collect();
    let mut topo_rank = vec![0usize; low_vars.len()];
    for (k, &i) in low.topo().iter().enumerate() {
        topo_rank[i] = k;
    }

    // Exogenous inputs each relevant vertex needs once off-R mediators are unrolled.
    let mut needs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); low_vars.len()];
    for v in (0..low_vars.len()).filter(|&i| in_r[i]) {
        let mut stack = vec![v];
        let mut seen = BTreeSet::new();
        while let Some(w) = stack.pop() {
            if !seen.insert(w) {
                continue;
            }
            if low.intervened_value(w).is_none() {
                needs[v].extend(low.node_exogenous(w).iter().copied());
                stack.extend(low.node_parents(w).iter().copied().filter(|&p| !in_r[p]));
            }
        }
    }
    for (i, e) in low.exogenous().iter().enumerate() {
        if !e.law.is_tabular() && needs.iter().any(|n| n.contains(&i)) {
            return Err(ScmError::ContinuousExogenous(e.id.clone()).into());
        }
    }

    // Clusters in high vertex order.
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut cluster_of: HashMap<VariableId, usize> = HashMap::new();
    for h in high_graph.vertices() {
        if !rh_set.contains(h) {
            continue;
        }
        let mut members: Vec<usize> = phi.preimage(h).iter().map(pos).collect();
        members.sort_unstable();
        let mut eval_order = members.clone();
        eval_order.sort_by_key(|&i| topo_rank[i]);
        let radix = members
            .iter()
            .map(|&i| low.range(&low_vars[i]).map(ValueRange::len))
            .collect::<Result<Vec<_>, _>>()?;
        cluster_of.insert(h.clone(), clusters.len());
        clusters.push(Cluster {
            id: h.clone(),
            members,
            eval_order,
            radix,
        });
    }
    let cluster_by_low: HashMap<usize, usize> = clusters
        .iter()
        .enumerate()
        .flat_map(|(c, cl)| cl.members.iter().map(move |&m| (m, c)))
        .collect();

    let ancestors = high_graph.ancestors(&rh_set.iter().cloned().collect::<Vec<_>>())?;
    let class = |h: &VariableId| {
        if let Some(&c) = cluster_of.get(h) {
            Class::Cluster(c)
        } else if ancestors.contains(h) {
            Class::Carrier
        } else {
            Class::Constant
        }
    };
    let cover: HashMap<VariableId, BTreeSet<VariableId>> = high_graph
        .vertices()
        .iter()
        .map(|h| {
            let c = match class(h) {
                Class::Cluster(_) => BTreeSet::from([h.clone()]),
                Class::Carrier => mediated_reach(high_graph, h, &rh_set)?,
                Class::Constant => BTreeSet::new(),
            };
            Ok((h.clone(), c))
        })
        .collect::<Result<_, EmbeddingError>>()?;

    let taken: BTreeSet<VariableId> = high_graph.vertices().iter().cloned().collect();
    let mut used_names = taken.clone();
    let mut fresh = |base: String| {
        let mut name = base;
        while used_names.contains(name.as_str()) {
            name.push('\'');
        }
        let id = VariableId::new(name);
        used_names.insert(id.clone());
        id
    };

    let mut high_exo: Vec<HighExo> = Vec::new();
    let mut attached: HashMap<VariableId, Vec<usize>> = HashMap::new();
    let mut realized: BTreeSet<(VariableId, VariableId)> = BTreeSet::new();
    for (u, spec) in low.exogenous().iter().enumerate() {
        let s: BTreeSet<VariableId> = (0..low_vars.len())
            .filter(|&v| needs[v].contains(&u))
            .map(|v| clusters[cluster_by_low[&v]].id.clone())
            .collect();
        if s.is_empty() {
            continue;
        }
        let q = find_source(high_graph, &cover, &s).ok_or_else(|| {
            EmbeddingError::UnrealizableConfounding {
                exogenous: spec.id.clone(),
                clusters: s.iter().cloned().collect(),
            }
        })?;
        let size = match &spec.law {
            ExogenousLaw::Tabular(cells) => cells.len(),
            ExogenousLaw::Normal { .. } => unreachable!("checked above"),
        };
        let k = high_exo.len();
        high_exo.push(HighExo {
            name: fresh(format!("N_{}", spec.id)),
            source: Source::Copy(u),
            size,
        });
        for (a, h) in q.iter().enumerate() {
            attached.entry(h.clone()).or_default().push(k);
            for b in &q[a + 1..] {
                realized.insert(crate::graph::unordered(h, b));
            }
        }
    }
    for (a, b) in high_graph.bidirected_edges() {
        if realized.contains(&crate::graph::unordered(a, b)) {
            continue;
        }
        let k = high_exo.len();
        high_exo.push(HighExo {
            name: fresh(format!("C_{a}_{b}")),
            source: Source::Dummy,
            size: 1,
        });
        attached.entry(a.clone()).or_default().push(k);
        attached.entry(b.clone()).or_default().push(k);
    }

    // Range sizes and input radices, in topological order of the high graph.
    let order = high_graph.topological_order();
    let mut size: HashMap<VariableId, usize> = HashMap::new();
    let mut inputs: HashMap<VariableId, (Vec<VariableId>, Vec<usize>)> = HashMap::new();
    for h in &order {
        let parents = high_graph.parents(h)?;
        let exo = attached.get(h).cloned().unwrap_or_default();
        let s = match class(h) {
            Class::Constant => 1,
            Class::Cluster(c) => clusters[c].size(),
            Class::Carrier => {
                let mut n: usize = 1;
                for r in parents
                    .iter()
                    .map(|p| size[p])
                    .chain(exo.iter().map(|&k| high_exo[k].size))
                {
                    n = n.saturating_mul(r);
                }
                if n > MAX_RANGE {
                    return Err(EmbeddingError::EncodingTooLarge {
                        variable: h.clone(),
                        size: n,
                    });
                }
                n
            }
        };
        size.insert(h.clone(), s);
        inputs.insert(h.clone(), (parents, exo));
    }

    let ctx = Ctx {
        low,
        in_r: &in_r,
        clusters: &clusters,
        cluster_of: &cluster_of,
        cluster_by_low: &cluster_by_low,
        high_exo: &high_exo,
        inputs: &inputs,
        size: &size,
        ancestors: &ancestors,
    };

    let mut endogenous = Vec::new();
    let mut functions = Vec::new();
    for h in high_graph.vertices() {
        let (parents, exo) = &inputs[h];
        let exo_names: Vec<VariableId> = exo.iter().map(|&k| high_exo[k].name.clone()).collect();
        endogenous.push(Endogenous {
            id: h.clone(),
            domain: Domain::Finite(ValueRange::codes(size[h])),
        });
        let body = match class(h) {
            Class::Constant => Body::Expr(Expr::Const(0.0)),
            Class::Carrier => Body::Expr(mixed_radix_expr(parents, &exo_names, &ctx.radix_of(h))),
            Class::Cluster(c) => Body::Table(ctx.cluster_table(c, h)?),
        };
        functions.push(StructuralFunction {
            target: h.clone(),
            endogenous_parents: parents.clone(),
            exogenous_parents: exo_names,
            body,
            integer: false,
        });
    }
    let exogenous = high_exo
        .iter()
        .map(|x| {
            let law = match x.source {
                Source::Dummy => ExogenousLaw::point(0),
                Source::Copy(u) => match &low.exogenous()[u].law {
                    ExogenousLaw::Tabular(cells) => ExogenousLaw::Tabular(
                        cells
                            .iter()
                            .enumerate()
                            .map(|(j, (_, p))| (j as Value, *p))
                            .collect(),
                    ),
                    ExogenousLaw::Normal { .. } => unreachable!("checked above"),
                },
            };
            ExogenousSpec::new(x.name.clone(), law)
        })
        .collect();
    let high = Scm::new(endogenous, exogenous, functions)?;

    let alphas = clusters.iter().map(|cl| {
        let ranges: Vec<&[Value]> = cl
            .members
            .iter()
            .map(|&i| low.range(&low_vars[i]).expect("finite").values())
            .collect();
        let rows = cartesian(&ranges).into_iter().map(|tuple| {
            let digits: Vec<usize> = tuple
                .iter()
                .zip(&ranges)
                .map(|(v, r)| r.iter().position(|x| x == v).unwrap())
                .collect();
            (tuple, encode(&digits, &cl.radix) as Value)
        });
        RangeMap::table(
            cl.id.clone(),
            cl.members.iter().map(|&i| low_vars[i].clone()).collect(),
            rows,
        )
    });
    let embedding = Embedding::new(phi.clone(), alphas.collect::<Vec<_>>())?;
    Ok((high, embedding))
}

/// Smallest set of pairwise-bidirected vertices whose mediated reach covers `s`.
fn find_source(
    g: &CausalGraph,
    cover: &HashMap<VariableId, BTreeSet<VariableId>>,
    s: &BTreeSet<VariableId>,
) -> Option<Vec<VariableId>> {
    let candidates: Vec<&VariableId> = g
        .vertices()
        .iter()
        .filter(|h| !cover[*h].is_disjoint(s))
        .collect();
    let n = candidates.len();
    if n > 20 {
        return None;
    }
    let mut masks: Vec<u32> = (1..(1u32 << n)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    'outer: for m in masks {
        let chosen: Vec<&VariableId> = (0..n)
            .filter(|i| m >> i & 1 == 1)
            .map(|i| candidates[i])
            .collect();
        for (a, x) in chosen.iter().enumerate() {
            for y in &chosen[a + 1..] {
                if !g.has_bidirected(x, y) {
                    continue 'outer;
                }
            }
        }
        let covered: BTreeSet<&VariableId> = chosen.iter().flat_map(|h| cover[*h].iter()).collect();
        if s.iter().all(|v| covered.contains(v)) {
            return Some(chosen.into_iter().cloned().collect());
        }
    }
    None
}

fn mixed_radix_expr(parents: &[VariableId], exo: &[VariableId], radix: &[usize]) -> Expr {
    let names: Vec<&VariableId> = parents.iter().chain(exo).collect();
    let mut stride = 1usize;
    let mut terms = Vec::new();
    for (k, name) in names.iter().enumerate().rev() {
        if radix[k] > 1 {
            let var = Expr::Var((*name).clone());
            terms.push(if stride == 1 {
                var
            } else {
                Expr::Mul(Box::new(Expr::Const(stride as f64)), Box::new(var))
            });
        }
        stride *= radix[k];
    }
    terms.reverse();
    terms
        .into_iter()
        .reduce(|a, b| Expr::Add(Box::new(a), Box::new(b)))
        .unwrap_or(Expr::Const(0.0))
}

struct Ctx<'a> {
    low: &'a Scm,
    in_r: &'a [bool],
    clusters: &'a [Cluster],
    cluster_of: &'a HashMap<VariableId, usize>,
    cluster_by_low: &'a HashMap<usize, usize>,
    high_exo: &'a [HighExo],
    inputs: &'a HashMap<VariableId, (Vec<VariableId>, Vec<usize>)>,
    size: &'a HashMap<VariableId, usize>,
    ancestors: &'a BTreeSet<VariableId>,
}

/// Values recovered from a vertex's inputs.
#[derive(Default)]
struct Known {
    clusters: HashMap<usize, usize>,
    exo: HashMap<usize, usize>,
}

impl Ctx<'_> {
    fn radix_of(&self, h: &VariableId) -> Vec<usize> {
        let (parents, exo) = &self.inputs[h];
        parents
            .iter()
            .map(|p| self.size[p])
            .chain(exo.iter().map(|&k| self.high_exo[k].size))
            .collect()
    }

    fn absorb_exo(&self, k: usize, digit: usize, known: &mut Known) {
        if let Source::Copy(u) = self.high_exo[k].source {
            known.exo.insert(u, digit);
        }
    }

    fn absorb(&self, h: &VariableId, code: usize, known: &mut Known) {
        if let Some(&c) = self.cluster_of.get(h) {
            known.clusters.insert(c, code);
            return;
        }
        if !self.ancestors.contains(h) {
            return;
        }
        let (parents, exo) = &self.inputs[h];
        let digits = decode(code, &self.radix_of(h));
        for (p, &d) in parents.iter().zip(&digits) {
            self.absorb(p, d, known);
        }
        for (&k, &d) in exo.iter().zip(&digits[parents.len()..]) {
            self.absorb_exo(k, d, known);
        }
    }

    fn cluster_table(
        &self,
        c: usize,
        h: &VariableId,
    ) -> Result<BTreeMap<Vec<Value>, Value>, EmbeddingError> {
        let radix = self.radix_of(h);
        let rows: usize = radix
            .iter()
            .try_fold(1usize, |a, &r| a.checked_mul(r))
            .unwrap_or(usize::MAX);
        if rows > MAX_TABLE {
            return Err(EmbeddingError::EncodingTooLarge {
                variable: h.clone(),
                size: rows,
            });
        }
        let (parents, exo) = &self.inputs[h];
        let mut table = BTreeMap::new();
        for code in 0..rows {
            let digits = decode(code, &radix);
            let mut known = Known::default();
            for (p, &d) in parents.iter().zip(&digits) {
                self.absorb(p, d, &mut known);
            }
            for (&k, &d) in exo.iter().zip(&digits[parents.len()..]) {
                self.absorb_exo(k, d, &mut known);
            }
            let value = self.evaluate_cluster(c, &known)?;
            table.insert(digits.iter().map(|&d| d as Value).collect(), value as Value);
        }
        Ok(table)
    }

    fn exo_value(&self, u: usize, digit: usize) -> Value {
        match &self.low.exogenous()[u].law {
            ExogenousLaw::Tabular(cells) => cells[digit].0,
            ExogenousLaw::Normal { .. } => unreachable!(),
        }
    }

    /// Member values of cluster `c` given decoded inputs, as a tuple code.
    fn evaluate_cluster(&self, c: usize, known: &Known) -> Result<usize, EmbeddingError> {
        let cl = &self.clusters[c];
        let mut values: HashMap<usize, Value> = HashMap::new();
        for &v in &cl.eval_order {
            let mut memo: HashMap<usize, Value> = HashMap::new();
            let x = self.unrolled(v, v, c, known, &values, &mut memo)?;
            values.insert(v, x);
        }
        let digits: Vec<usize> = cl
            .members
            .iter()
            .map(|&m| {
                let r = self.low.range(&self.low.variables()[m]).expect("finite");
                r.index_of(values[&m]).expect("validated output")
            })
            .collect();
        Ok(encode(&digits, &cl.radix))
    }

    /// Value of low vertex `w` while computing relevant vertex `target` of cluster `c`.
    fn unrolled(
        &self,
        w: usize,
        target: usize,
        c: usize,
        known: &Known,
        own: &HashMap<usize, Value>,
        memo: &mut HashMap<usize, Value>,
    ) -> Result<Value, EmbeddingError> {
        if let Some(&x) = memo.get(&w) {
            return Ok(x);
        }
        let low = self.low;
        let vars = low.variables();
        let x = if w != target && self.in_r[w] {
            let wc = self.cluster_by_low[&w];
            if wc == c {
                *own.get(&w).ok_or_else(|| {
                    construction(format!("{} is needed before it is computed", vars[w]))
                })?
            } else {
                let code = *known.clusters.get(&wc).ok_or_else(|| {
                    construction(format!(
                        "{} cannot see {}",
                        self.clusters[c].id, self.clusters[wc].id
                    ))
                })?;
                let cl = &self.clusters[wc];
                let digits = decode(code, &cl.radix);
                let k = cl.members.iter().position(|&m| m == w).unwrap();
                low.range(&vars[w])?.values()[digits[k]]
            }
        } else if let Some(x) = low.intervened_value(w) {
            x
        } else {
            let mut endo = Vec::new();
            for &p in low.node_parents(w) {
                endo.push(self.unrolled(p, target, c, known, own, memo)?);
            }
            let mut exo = Vec::new();
            for &u in low.node_exogenous(w) {
                let d = *known.exo.get(&u).ok_or_else(|| {
                    construction(format!(
                        "{} has no copy of {}",
                        self.clusters[c].id,
                        low.exogenous()[u].id
                    ))
                })?;
                exo.push(self.exo_value(u, d));
            }
            low.eval_exact(w, &endo, &exo)?
        };
        memo.insert(w, x);
        Ok(x)
    }
}
