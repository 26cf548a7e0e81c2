use std::collections::BTreeSet;

use serde::Serialize;

use super::{unordered, CausalGraph, GraphError, VariableMap};
use crate::VariableId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Directed,
    Bidirected,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    /// Induced by the low-level graph but absent from the high-level graph.
    Missing,
    /// Present in the high-level graph without a low-level witness.
    Extra,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct EdgeViolation {
    pub kind: EdgeKind,
    pub problem: Problem,
    pub from: VariableId,
    pub to: VariableId,
}

impl std::fmt::Display for EdgeViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let arrow = match self.kind {
            EdgeKind::Directed => "->",
            EdgeKind::Bidirected => "<->",
        };
        let what = match self.problem {
            Problem::Missing => "missing",
            Problem::Extra => "extra",
        };
        write!(f, "{what} {} {arrow} {}", self.from, self.to)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CdagReport {
    pub holds: bool,
    pub violations: Vec<EdgeViolation>,
}

impl CdagReport {
    pub(crate) fn from_sets(
        induced_directed: &BTreeSet<(VariableId, VariableId)>,
        high_directed: &BTreeSet<(VariableId, VariableId)>,
        induced_bidirected: &BTreeSet<(VariableId, VariableId)>,
        high_bidirected: &BTreeSet<(VariableId, VariableId)>,
    ) -> Self {
        let mut violations = Vec::new();
        let mut diff = |kind,
                        want: &BTreeSet<(VariableId, VariableId)>,
                        have: &BTreeSet<(VariableId, VariableId)>| {
            for (a, b) in want.difference(have) {
                violations.push(EdgeViolation {
                    kind,
                    problem: Problem::Missing,
                    from: a.clone(),
                    to: b.clone(),
                });
            }
            for (a, b) in have.difference(want) {
                violations.push(EdgeViolation {
                    kind,
                    problem: Problem::Extra,
                    from: a.clone(),
                    to: b.clone(),
                });
            }
        };
        diff(EdgeKind::Directed, induced_directed, high_directed);
        diff(EdgeKind::Bidirected, induced_bidirected, high_bidirected);
        CdagReport {
            holds: violations.is_empty(),
            violations,
        }
    }
}

type EdgeSet = BTreeSet<(VariableId, VariableId)>;

/// Images under `phi` of directed and bidirected low-level edge sets,
/// dropping edges that fall inside one cluster.
pub(crate) fn cluster_edges(
    phi: &VariableMap,
    directed: impl IntoIterator<Item = (VariableId, VariableId)>,
    bidirected: impl IntoIterator<Item = (VariableId, VariableId)>,
) -> (EdgeSet, EdgeSet) {
    let image = |v: &VariableId| phi.get(v).expect("edge endpoint in phi's domain").clone();
    let d = directed
        .into_iter()
        .map(|(a, b)| (image(&a), image(&b)))
        .filter(|(a, b)| a != b)
        .collect();
    let bi = bidirected
        .into_iter()
        .map(|(a, b)| unordered(&image(&a), &image(&b)))
        .filter(|(a, b)| a != b)
        .collect();
    (d, bi)
}

/// Whether `high` is the cluster DAG of `low` under `phi`.
///
/// `phi` must map exactly `low`'s vertices onto exactly `high`'s vertices.
pub fn is_cdag(
    low: &CausalGraph,
    high: &CausalGraph,
    phi: &VariableMap,
) -> Result<CdagReport, GraphError> {
    let low_v: BTreeSet<VariableId> = low.vertices().iter().cloned().collect();
    let high_v: BTreeSet<VariableId> = high.vertices().iter().cloned().collect();
    if phi.domain_set() != low_v {
        return Err(GraphError::MapMismatch(
            "map domain differs from the low-level vertex set".into(),
        ));
    }
    if *phi.codomain() != high_v {
        return Err(GraphError::MapMismatch(
            "map codomain differs from the high-level vertex set".into(),
        ));
    }
    let (d, bi) = cluster_edges(phi, low.directed_set(), low.bidirected_set());
    Ok(CdagReport::from_sets(
        &d,
        &high.directed_set(),
        &bi,
        &high.bidirected_set(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_on_identical_graphs() {
        let g = CausalGraph::parse("vertices A B C\nA -> B\nB <-> C\n").unwrap();
        let phi = VariableMap::identity(g.vertices().iter().cloned());
        assert!(is_cdag(&g, &g, &phi).unwrap().holds);
    }

    #[test]
    fn reports_missing_and_extra() {
        let low = CausalGraph::parse("vertices X Y Z\nX -> Z\nY -> Z\n").unwrap();
        let high = CausalGraph::parse("vertices X' Y' Z'\nY' -> Z'\nX' <-> Y'\n").unwrap();
        let phi = VariableMap::new([
            ("X".into(), "X'".into()),
            ("Y".into(), "Y'".into()),
            ("Z".into(), "Z'".into()),
        ])
        .unwrap();
        let r = is_cdag(&low, &high, &phi).unwrap();
        assert!(!r.holds);
        assert_eq!(r.violations.len(), 2);
        assert_eq!(r.violations[0].to_string(), "missing X' -> Z'");
        assert_eq!(r.violations[1].to_string(), "extra X' <-> Y'");
    }

    #[test]
    fn intra_cluster_edges_are_exempt() {
        let low = CausalGraph::parse("vertices A B C\nA -> B\nB -> C\nA <-> B\n").unwrap();
        let high = CausalGraph::parse("vertices AB C\nAB -> C\n").unwrap();
        let phi = VariableMap::new([
            ("A".into(), "AB".into()),
            ("B".into(), "AB".into()),
            ("C".into(), "C".into()),
        ])
        .unwrap();
        assert!(is_cdag(&low, &high, &phi).unwrap().holds);
        let narrow = VariableMap::new([("A".into(), "AB".into())]).unwrap();
        assert!(is_cdag(&low, &high, &narrow).is_err());
    }
}
