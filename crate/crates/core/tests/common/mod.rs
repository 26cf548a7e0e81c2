//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

pub mod invariants;

use std::collections::{BTreeMap, BTreeSet};

use causal_embed::scm::{ExogenousLaw, ScmBuilder, StructuralFunction};
use causal_embed::{CausalGraph, Scm, Value, VariableId, VariableMap};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ids(prefix: &str, n: usize) -> Vec<VariableId> {
    (0..n)
        .map(|i| VariableId::new(format!("{prefix}{i}")))
        .collect()
}

/// An ADMG on `names`; directed edges follow the list order, so it is acyclic.
pub fn random_admg(rng: &mut impl Rng, names: &[VariableId], p_dir: f64, p_bi: f64) -> CausalGraph {
    let mut g = CausalGraph::with_vertices(names.iter().cloned());
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            if rng.gen_bool(p_dir) {
                g.add_directed(names[i].clone(), names[j].clone()).unwrap();
            }
            if rng.gen_bool(p_bi) {
                g.add_bidirected(names[i].clone(), names[j].clone())
                    .unwrap();
            }
        }
    }
    g
}

/// A non-empty random subset, in the order of `all`.
pub fn random_subset(rng: &mut impl Rng, all: &[VariableId]) -> Vec<VariableId> {
    loop {
        let s: Vec<VariableId> = all.iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
        if !s.is_empty() {
            return s;
        }
    }
}

/// A random surjection of `domain` onto `H0'..H{k-1}'` for a random `k`.
pub fn random_surjection(rng: &mut impl Rng, domain: &[VariableId]) -> VariableMap {
    let k = rng.gen_range(1..=domain.len());
    let mut labels: Vec<usize> = (0..domain.len())
        .map(|i| if i < k { i } else { rng.gen_range(0..k) })
        .collect();
    labels.shuffle(rng);
    VariableMap::new(
        domain
            .iter()
            .zip(labels)
            .map(|(v, c)| (v.clone(), VariableId::new(format!("H{c}'")))),
    )
    .unwrap()
}

/// The cluster graph of `g` under `phi`: vertices are the codomain, edges
/// are images of edges between distinct clusters. `None` if it is cyclic.
pub fn cluster_graph(g: &CausalGraph, phi: &VariableMap) -> Option<CausalGraph> {
    let mut h = CausalGraph::with_vertices(phi.codomain().iter().cloned());
    for (a, b) in g.directed_edges() {
        let (x, y) = (phi.get(a)?.clone(), phi.get(b)?.clone());
        if x != y && !h.has_directed(&x, &y) {
            h.add_directed(x, y).ok()?;
        }
    }
    for (a, b) in g.bidirected_edges() {
        let (x, y) = (phi.get(a)?.clone(), phi.get(b)?.clone());
        if x != y && !h.has_bidirected(&x, &y) {
            h.add_bidirected(x, y).unwrap();
        }
    }
    Some(h)
}

/// Whether `a ↔ b` lies on a bidirected triangle of `g`.
fn in_triangle(g: &CausalGraph, a: &VariableId, b: &VariableId) -> bool {
    g.vertices()
        .iter()
        .any(|c| c != a && c != b && g.has_bidirected(a, c) && g.has_bidirected(b, c))
}

/// Rebuilds `h` with some directed edges routed through a fresh mediator
/// and some bidirected edges replaced by a fresh common parent. Neither
/// change alters the projection onto `h`'s original vertices. Bidirected
/// edges on a triangle stay as they are.
pub fn elaborate(rng: &mut impl Rng, h: &CausalGraph, p_route: f64) -> CausalGraph {
    let mut g = CausalGraph::with_vertices(h.vertices().iter().cloned());
    let mut fresh = 0;
    let mut next = |prefix: &str| {
        fresh += 1;
        VariableId::new(format!("{prefix}{fresh}"))
    };
    for (a, b) in h.directed_edges() {
        if rng.gen_bool(p_route) {
            let m = next("M");
            g.add_vertex(m.clone()).unwrap();
            g.add_directed(a.clone(), m.clone()).unwrap();
            g.add_directed(m, b.clone()).unwrap();
        } else {
            g.add_directed(a.clone(), b.clone()).unwrap();
        }
    }
    for (a, b) in h.bidirected_edges() {
        if !in_triangle(h, a, b) && rng.gen_bool(p_route) {
            let n = next("N");
            g.add_vertex(n.clone()).unwrap();
            g.add_directed(n.clone(), a.clone()).unwrap();
            g.add_directed(n, b.clone()).unwrap();
        } else {
            g.add_bidirected(a.clone(), b.clone()).unwrap();
        }
    }
    g
}

/// Random weights on `0..n` summing to one.
pub fn random_law(rng: &mut impl Rng, n: usize) -> ExogenousLaw {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut cells: Vec<(Value, f64)> = w
        .iter()
        .enumerate()
        .map(|(i, x)| (i as Value, x / total))
        .collect();
    // Put the rounding residue on the last cell so the mass is exactly one.
    let head: f64 = cells[..n - 1].iter().map(|c| c.1).sum();
    cells[n - 1].1 = 1.0 - head;
    ExogenousLaw::Tabular(cells)
}

/// A tabular SCM on `V0..V{n-1}` (declaration order is topological), with
/// ranges of size at most `max_range`, one private exogenous variable per
/// endogenous one and possibly a few shared ones.
pub fn random_scm(rng: &mut impl Rng, max_vars: usize, max_range: usize) -> Scm {
    let n = rng.gen_range(1..=max_vars);
    let names = ids("V", n);
    let sizes: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=max_range)).collect();
    let mut exo_of: Vec<Vec<(String, usize)>> = (0..n)
        .map(|i| vec![(format!("U{i}"), rng.gen_range(1..=2))])
        .collect();
    let mut b = ScmBuilder::new();
    for i in 0..n {
        let values: Vec<Value> = (0..sizes[i] as Value).collect();
        b = b.variable(names[i].as_str(), &values);
        b = b.exogenous(&exo_of[i][0].0, random_law(rng, exo_of[i][0].1));
    }
    for s in 0..n.saturating_sub(1) {
        if rng.gen_bool(0.4) {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if i != j {
                let name = format!("S{s}");
                b = b.exogenous(&name, random_law(rng, 2));
                exo_of[i].push((name.clone(), 2));
                exo_of[j].push((name, 2));
            }
        }
    }
    for i in 0..n {
        let parents: Vec<usize> = (0..i).filter(|_| rng.gen_bool(0.5)).collect();
        let mut radix: Vec<usize> = parents.iter().map(|&p| sizes[p]).collect();
        radix.extend(exo_of[i].iter().map(|(_, k)| *k));
        let rows: BTreeMap<Vec<Value>, Value> = product(&radix)
            .into_iter()
            .map(|key| (key, rng.gen_range(0..sizes[i]) as Value))
            .collect();
        let pnames: Vec<&str> = parents.iter().map(|&p| names[p].as_str()).collect();
        let enames: Vec<&str> = exo_of[i].iter().map(|(s, _)| s.as_str()).collect();
        b = b.function(StructuralFunction::table(
            names[i].clone(),
            &pnames,
            &enames,
            rows,
        ));
    }
    b.build().expect("generated model is well formed")
}

/// All tuples over `0..radix[k]`, last coordinate fastest.
pub fn product(radix: &[usize]) -> Vec<Vec<Value>> {
    let mut out = vec![Vec::new()];
    for &r in radix {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..r as Value).map(move |v| {
                    let mut t = t.clone();
                    t.push(v);
                    t
                })
            })
            .collect();
    }
    out
}

pub fn set(vs: &[VariableId]) -> BTreeSet<VariableId> {
    vs.iter().cloned().collect()
}

/// A low graph on at most seven vertices, a relevant set with a random
/// surjection onto clusters, and a high graph. About half the high graphs
/// are built to be consistent (possibly then perturbed by one edge), the
/// rest are random.
pub fn graph_check_instance(seed: u64) -> (CausalGraph, CausalGraph, VariableMap) {
    let mut r = rng(seed);
    let n = r.gen_range(1..=7);
    let low = random_admg(&mut r, &ids("V", n), 0.35, 0.2);
    let relevant = random_subset(&mut r, low.vertices());
    let phi = random_surjection(&mut r, &relevant);
    if r.gen_bool(0.5) {
        let projected = causal_embed::graph::latent_project(&low, &set(&relevant)).unwrap();
        if let Some(h) = cluster_graph(&projected, &phi) {
            let mut high = elaborate(&mut r, &h, 0.4);
            if r.gen_bool(0.3) {
                let cod: Vec<VariableId> = phi.codomain().iter().cloned().collect();
                let a = cod[r.gen_range(0..cod.len())].clone();
                let b = cod[r.gen_range(0..cod.len())].clone();
                if a != b {
                    if r.gen_bool(0.5) {
                        let _ = high.add_directed(a, b);
                    } else {
                        let _ = high.add_bidirected(a, b);
                    }
                }
            }
            return (low, high, phi);
        }
    }
    let mut names: Vec<VariableId> = phi.codomain().iter().cloned().collect();
    names.extend(ids("X", r.gen_range(0..=3)));
    names.shuffle(&mut r);
    let high = random_admg(&mut r, &names, 0.35, 0.2);
    (low, high, phi)
}
