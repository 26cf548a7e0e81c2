//! Latent projection onto a relevant subset.
//!
//! [`latent_project`] eliminates the off-set vertices one at a time: removing
//! `v` connects each parent of `v` to each child, links every pair of
//! children bidirectionally, and links each bidirected neighbour of `v` to
//! each child. The path-based [`mediated_adjacencies`] and
//! [`mediated_confounders`] compute the same edge sets by search and serve as
//! an independent route.

use std::collections::BTreeSet;

use super::{unordered, CausalGraph, GraphError};
use crate::VariableId;

fn check_subset(g: &CausalGraph, relevant: &BTreeSet<VariableId>) -> Result<(), GraphError> {
    match relevant.iter().find(|v| !g.contains(v)) {
        Some(v) => Err(GraphError::UnknownVariable(v.clone())),
        None => Ok(()),
    }
}

/// Projection of `g` onto `relevant` by vertex elimination.
pub fn latent_project(
    g: &CausalGraph,
    relevant: &BTreeSet<VariableId>,
) -> Result<CausalGraph, GraphError> {
    check_subset(g, relevant)?;
    let n = g.vertices.len();
    let mut children = g.children.clone();
    let mut parents = g.parents.clone();
    let mut spouses = g.spouses.clone();
    let mut alive = vec![true; n];
    for v in 0..n {
        if relevant.contains(&g.vertices[v]) {
            continue;
        }
        let pa: Vec<usize> = parents[v].iter().copied().collect();
        let ch: Vec<usize> = children[v].iter().copied().collect();
        let sp: Vec<usize> = spouses[v].iter().copied().collect();
        for &p in &pa {
            for &c in &ch {
                children[p].insert(c);
                parents[c].insert(p);
            }
        }
        for (k, &a) in ch.iter().enumerate() {
            for &b in &ch[k + 1..] {
                spouses[a].insert(b);
                spouses[b].insert(a);
            }
            for &s in &sp {
                if s != a {
                    spouses[a].insert(s);
                    spouses[s].insert(a);
                }
            }
        }
        for &p in &pa {
            children[p].remove(&v);
        }
        for &c in &ch {
            parents[c].remove(&v);
        }
        for &s in &sp {
            spouses[s].remove(&v);
        }
        alive[v] = false;
    }
    let mut out =
        CausalGraph::with_vertices((0..n).filter(|&i| alive[i]).map(|i| g.vertices[i].clone()));
    for i in (0..n).filter(|&i| alive[i]) {
        for &j in &children[i] {
            out.add_directed(g.vertices[i].clone(), g.vertices[j].clone())?;
        }
        for &j in spouses[i].iter().filter(|&&j| j > i) {
            out.add_bidirected(g.vertices[i].clone(), g.vertices[j].clone())?;
        }
    }
    Ok(out)
}

/// Relevant vertices reachable from `start` by a directed path of length at
/// least one whose intermediate vertices all lie outside `relevant`.
pub fn mediated_reach(
    g: &CausalGraph,
    start: &VariableId,
    relevant: &BTreeSet<VariableId>,
) -> Result<BTreeSet<VariableId>, GraphError> {
    let s = g.idx(start)?;
    let mut found = BTreeSet::new();
    let mut seen = vec![false; g.vertices.len()];
    let mut stack: Vec<usize> = g.children[s].iter().copied().collect();
    while let Some(v) = stack.pop() {
        if std::mem::replace(&mut seen[v], true) {
            continue;
        }
        if relevant.contains(&g.vertices[v]) {
            found.insert(g.vertices[v].clone());
        } else {
            stack.extend(g.children[v].iter().copied());
        }
    }
    Ok(found)
}

/// Ordered pairs `(X, Y)` of relevant vertices joined by a mediated directed path.
pub fn mediated_adjacencies(
    g: &CausalGraph,
    relevant: &BTreeSet<VariableId>,
) -> Result<BTreeSet<(VariableId, VariableId)>, GraphError> {
    check_subset(g, relevant)?;
    let mut out = BTreeSet::new();
    for x in relevant {
        for y in mediated_reach(g, x, relevant)? {
            out.insert((x.clone(), y));
        }
    }
    Ok(out)
}

/// Unordered pairs `{X, Y}` (name-sorted) of relevant vertices sharing a
/// mediated confounder.
///
/// A pair qualifies when some off-set `Z` reaches both through mediated
/// paths, or when a bidirected edge `A ↔ B` has `A` equal to `X` or reaching
/// it through a mediated path from off the set, and likewise `B` for `Y`.
pub fn mediated_confounders(
    g: &CausalGraph,
    relevant: &BTreeSet<VariableId>,
) -> Result<BTreeSet<(VariableId, VariableId)>, GraphError> {
    check_subset(g, relevant)?;
    let mut out = BTreeSet::new();
    // src[v]: relevant vertices that v stands in for at a bidirected endpoint.
    let mut src: Vec<BTreeSet<VariableId>> = Vec::with_capacity(g.vertices.len());
    for v in &g.vertices {
        if relevant.contains(v) {
            src.push(BTreeSet::from([v.clone()]));
        } else {
            let reach = mediated_reach(g, v, relevant)?;
            let list: Vec<&VariableId> = reach.iter().collect();
            for (k, a) in list.iter().enumerate() {
                for b in &list[k + 1..] {
                    out.insert(unordered(a, b));
                }
            }
            src.push(reach);
        }
    }
    for (a, b) in g.bidirected_edges() {
        let (i, j) = (g.index[a], g.index[b]);
        for x in &src[i] {
            for y in &src[j] {
                if x != y {
                    out.insert(unordered(x, y));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(names: &[&str]) -> BTreeSet<VariableId> {
        names.iter().map(|n| VariableId::new(*n)).collect()
    }

    fn pair(a: &str, b: &str) -> (VariableId, VariableId) {
        (a.into(), b.into())
    }

    #[test]
    fn chain_projects_to_edge() {
        let g = CausalGraph::parse("vertices A B C\nA -> B\nB -> C\n").unwrap();
        let r = set(&["A", "C"]);
        let p = latent_project(&g, &r).unwrap();
        assert_eq!(p, CausalGraph::parse("vertices A C\nA -> C\n").unwrap());
        assert_eq!(
            mediated_adjacencies(&g, &r).unwrap(),
            BTreeSet::from([pair("A", "C")])
        );
    }

    #[test]
    fn fork_and_collider() {
        let fork = CausalGraph::parse("vertices A Z B\nZ -> A\nZ -> B\n").unwrap();
        let r = set(&["A", "B"]);
        assert_eq!(
            mediated_confounders(&fork, &r).unwrap(),
            BTreeSet::from([pair("A", "B")])
        );
        assert!(latent_project(&fork, &r)
            .unwrap()
            .has_bidirected(&"A".into(), &"B".into()));
        let collider = CausalGraph::parse("vertices A Z B\nA -> Z\nB -> Z\n").unwrap();
        assert!(mediated_confounders(&collider, &r).unwrap().is_empty());
        assert_eq!(
            latent_project(&collider, &r)
                .unwrap()
                .bidirected_edges()
                .count(),
            0
        );
    }

    #[test]
    fn bidirected_then_chain() {
        let g = CausalGraph::parse("vertices X M Y\nX <-> M\nM -> Y\n").unwrap();
        let r = set(&["X", "Y"]);
        assert_eq!(
            mediated_confounders(&g, &r).unwrap(),
            BTreeSet::from([pair("X", "Y")])
        );
        // Two bidirected edges in a row meet at a collider.
        let g = CausalGraph::parse("vertices X M Y\nX <-> M\nM <-> Y\n").unwrap();
        assert!(mediated_confounders(&g, &r).unwrap().is_empty());
    }

    #[test]
    fn full_relevant_set_is_identity() {
        let g = CausalGraph::parse("vertices A B C\nA -> B\nA -> C\nB <-> C\n").unwrap();
        let all = set(&["A", "B", "C"]);
        assert_eq!(latent_project(&g, &all).unwrap(), g);
        assert_eq!(mediated_adjacencies(&g, &all).unwrap(), g.directed_set());
        assert!(matches!(
            latent_project(&g, &set(&["Q"])),
            Err(GraphError::UnknownVariable(_))
        ));
    }

    #[test]
    fn relevant_vertex_blocks_mediation() {
        // W is relevant, so X -> W -> Y does not mediate X to Y.
        let g = CausalGraph::parse("vertices X W Y\nX -> W\nW -> Y\n").unwrap();
        let adj = mediated_adjacencies(&g, &set(&["X", "W", "Y"])).unwrap();
        assert!(!adj.contains(&pair("X", "Y")));
    }
}
