//! Executable fixtures: models, embeddings and graphs from the worked
//! examples, each bundle carrying machine-checkable expectations.

mod ecosystem;
mod examples;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use ecosystem::{
    alpha1, alpha2, generate_ecosystem_datasets, generate_with_layout,
    ground_truth as ecosystem_ground_truth, high_level as ecosystem_high_level, m1 as ecosystem_m1,
    m2 as ecosystem_m2, schema as ecosystem_schema, truth_embedding, EcosystemData,
    EcosystemLayout, EVAL_ROWS, EVAL_STREAM, X1_ROWS, X1_STREAM, X2_ROWS, X2_STREAM,
};
pub use examples::*;

use crate::embedding::{check_graphs, embedding_error, is_embedding, Method};
use crate::format::{embedding_to_toml, problem_to_toml, scm_to_toml};
use crate::marginal::{certify_solution, MarginalProblem};
use crate::variable::cartesian;
use crate::{CausalGraph, Distance, Embedding, Layer, Scm, Value, VariableId};

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("bundle {bundle}: unknown {kind} {name:?}")]
    UnknownReference {
        bundle: String,
        kind: &'static str,
        name: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A machine-checkable statement about a bundle's fixtures.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum Expectation {
    /// Verdict of [`is_embedding`].
    EmbeddingVerdict {
        embedding: String,
        low: String,
        high: String,
        method: Method,
        holds: bool,
    },
    /// Verdict of [`check_graphs`] on named graphs with the embedding's `φ`.
    GraphVerdict {
        embedding: String,
        low: String,
        high: String,
        method: Method,
        holds: bool,
    },
    /// `embedding_error ≤ bound`.
    ErrorAtMost {
        embedding: String,
        low: String,
        high: String,
        layer: Layer,
        distance: Distance,
        bound: f64,
    },
    /// Verdict of [`certify_solution`].
    Certifies {
        models: Vec<String>,
        embeddings: Vec<String>,
        candidate: String,
        layer: Layer,
        holds: bool,
    },
    /// Observational marginal of `targets` equals `table` within `tol`.
    Marginal {
        model: String,
        targets: Vec<VariableId>,
        table: Vec<(Vec<Value>, f64)>,
        tol: f64,
    },
    /// The largest TV between the two models' `P(targets | given = g)`, over
    /// all assignments `g`, is at least `min_tv`.
    Differ {
        first: String,
        second: String,
        targets: Vec<VariableId>,
        given: Vec<VariableId>,
        min_tv: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Outcome {
    pub expectation: Expectation,
    pub passed: bool,
    pub observed: String,
}

#[derive(Clone, Debug)]
pub struct FixtureBundle {
    pub name: String,
    pub models: BTreeMap<String, Scm>,
    pub embeddings: BTreeMap<String, Embedding>,
    pub graphs: BTreeMap<String, CausalGraph>,
    pub expected: Vec<Expectation>,
}

impl FixtureBundle {
    fn require<'a, T>(
        &self,
        map: &'a BTreeMap<String, T>,
        kind: &'static str,
        name: &str,
    ) -> Result<&'a T, FixtureError> {
        map.get(name).ok_or_else(|| FixtureError::UnknownReference {
            bundle: self.name.clone(),
            kind,
            name: name.to_string(),
        })
    }

    /// Every expectation names existing fixtures.
    pub fn validate(&self) -> Result<(), FixtureError> {
        for x in &self.expected {
            match x {
                Expectation::EmbeddingVerdict {
                    embedding,
                    low,
                    high,
                    ..
                }
                | Expectation::ErrorAtMost {
                    embedding,
                    low,
                    high,
                    ..
                } => {
                    self.require(&self.embeddings, "embedding", embedding)?;
                    self.require(&self.models, "model", low)?;
                    self.require(&self.models, "model", high)?;
                }
                Expectation::GraphVerdict {
                    embedding,
                    low,
                    high,
                    ..
                } => {
                    self.require(&self.embeddings, "embedding", embedding)?;
                    self.require(&self.graphs, "graph", low)?;
                    self.require(&self.graphs, "graph", high)?;
                }
                Expectation::Certifies {
                    models,
                    embeddings,
                    candidate,
                    ..
                } => {
                    for m in models.iter().chain([candidate]) {
                        self.require(&self.models, "model", m)?;
                    }
                    for e in embeddings {
                        self.require(&self.embeddings, "embedding", e)?;
                    }
                }
                Expectation::Marginal { model, .. } => {
                    self.require(&self.models, "model", model)?;
                }
                Expectation::Differ { first, second, .. } => {
                    self.require(&self.models, "model", first)?;
                    self.require(&self.models, "model", second)?;
                }
            }
        }
        Ok(())
    }

    /// Replays every expectation through the library's checkers.
    pub fn check(&self) -> Result<Vec<Outcome>, FixtureError> {
        self.validate()?;
        Ok(self.expected.iter().map(|x| self.check_one(x)).collect())
    }

    fn check_one(&self, x: &Expectation) -> Outcome {
        let (passed, observed) = match x {
            Expectation::EmbeddingVerdict {
                embedding,
                low,
                high,
                method,
                holds,
            } => match is_embedding(
                &self.embeddings[embedding],
                &self.models[low],
                &self.models[high],
                *method,
            ) {
                Ok(r) => (r.holds == *holds, verdict_text(r.holds, &r.violations)),
                Err(e) => (false, format!("error: {e}")),
            },
            Expectation::GraphVerdict {
                embedding,
                low,
                high,
                method,
                holds,
            } => match check_graphs(
                &self.graphs[low],
                &self.graphs[high],
                self.embeddings[embedding].phi(),
                *method,
            ) {
                Ok(r) => (r.holds == *holds, verdict_text(r.holds, &r.violations)),
                Err(e) => (false, format!("error: {e}")),
            },
            Expectation::ErrorAtMost {
                embedding,
                low,
                high,
                layer,
                distance,
                bound,
            } => match embedding_error(
                &self.embeddings[embedding],
                &self.models[low],
                &self.models[high],
                *layer,
                *distance,
            ) {
                Ok(r) => (r.error <= *bound, format!("error {:e}", r.error)),
                Err(e) => (false, format!("error: {e}")),
            },
            Expectation::Certifies {
                models,
                embeddings,
                candidate,
                layer,
                holds,
            } => {
                let p = MarginalProblem::new(
                    models.iter().map(|m| self.models[m].clone()).collect(),
                    embeddings
                        .iter()
                        .map(|e| self.embeddings[e].clone())
                        .collect(),
                    Some(self.models[candidate].clone()),
                );
                match p.and_then(|p| certify_solution(&p, *layer)) {
                    Ok(c) => {
                        let errors: Vec<String> = c
                            .checks
                            .iter()
                            .map(|k| k.error.map_or("n/a".to_string(), |e| format!("{e:e}")))
                            .collect();
                        (
                            c.holds == *holds,
                            format!("certified {}, errors [{}]", c.holds, errors.join(", ")),
                        )
                    }
                    Err(e) => (false, format!("error: {e}")),
                }
            }
            Expectation::Marginal {
                model,
                targets,
                table,
                tol,
            } => match self.models[model].query(targets, Layer::L1, &BTreeMap::new()) {
                Ok(d) => {
                    let dev = table
                        .iter()
                        .map(|(a, p)| (d.prob(a) - p).abs())
                        .fold(0.0, f64::max);
                    let cells: Vec<String> = table
                        .iter()
                        .map(|(a, _)| format!("{}", d.prob(a)))
                        .collect();
                    (
                        dev <= *tol,
                        format!("[{}], max deviation {dev:e}", cells.join(", ")),
                    )
                }
                Err(e) => (false, format!("error: {e}")),
            },
            Expectation::Differ {
                first,
                second,
                targets,
                given,
                min_tv,
            } => {
                match max_conditional_tv(&self.models[first], &self.models[second], targets, given)
                {
                    Ok(tv) => (tv >= *min_tv, format!("max TV {tv}")),
                    Err(e) => (false, format!("error: {e}")),
                }
            }
        };
        Outcome {
            expectation: x.clone(),
            passed,
            observed,
        }
    }
}

fn verdict_text(holds: bool, violations: &[crate::graph::EdgeViolation]) -> String {
    if holds {
        "holds".into()
    } else {
        let v: Vec<String> = violations.iter().map(ToString::to_string).collect();
        format!("fails: {}", v.join("; "))
    }
}

/// Largest TV between `P_a(targets | given = g)` and `P_b(targets | given = g)`
/// over assignments `g` with positive probability under both models.
pub fn max_conditional_tv(
    a: &Scm,
    b: &Scm,
    targets: &[VariableId],
    given: &[VariableId],
) -> Result<f64, crate::scm::ScmError> {
    let ranges = given
        .iter()
        .map(|v| a.range(v).map(|r| r.values()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut max: f64 = 0.0;
    for g in cartesian(&ranges) {
        let assignment: BTreeMap<VariableId, Value> = given.iter().cloned().zip(g).collect();
        let (pa, pb) = match (
            a.query(targets, Layer::L1, &assignment),
            b.query(targets, Layer::L1, &assignment),
        ) {
            (Ok(x), Ok(y)) => (x, y),
            (Err(crate::scm::ScmError::ZeroProbabilityCondition), _)
            | (_, Err(crate::scm::ScmError::ZeroProbabilityCondition)) => continue,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        max = max.max(pa.total_variation(&pb).expect("same targets"));
    }
    Ok(max)
}

fn named<T>(items: impl IntoIterator<Item = (&'static str, T)>) -> BTreeMap<String, T> {
    items.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// The two sub-system models, the shared high-level model and both embeddings.
pub fn ecosystem() -> FixtureBundle {
    let mut expected = Vec::new();
    for (e, low) in [("a1", "m1"), ("a2", "m2")] {
        for method in [Method::Projection, Method::Mediated] {
            expected.push(Expectation::EmbeddingVerdict {
                embedding: e.into(),
                low: low.into(),
                high: "mp".into(),
                method,
                holds: true,
            });
        }
    }
    FixtureBundle {
        name: "ecosystem".into(),
        models: named([
            ("m1", ecosystem_m1()),
            ("m2", ecosystem_m2()),
            ("mp", ecosystem_high_level()),
        ]),
        embeddings: named([("a1", alpha1()), ("a2", alpha2())]),
        graphs: BTreeMap::new(),
        expected,
    }
}

/// Functionally L2-consistent but not an embedding.
pub fn counterexample_b3() -> FixtureBundle {
    let mut expected = vec![Expectation::ErrorAtMost {
        embedding: "alpha".into(),
        low: "m".into(),
        high: "mp".into(),
        layer: Layer::L2,
        distance: Distance::TotalVariation,
        bound: 1e-12,
    }];
    for method in [Method::Projection, Method::Mediated] {
        expected.push(Expectation::EmbeddingVerdict {
            embedding: "alpha".into(),
            low: "m".into(),
            high: "mp".into(),
            method,
            holds: false,
        });
    }
    let uniform = cartesian(&[&[0, 2, 4], &[0, 1]])
        .into_iter()
        .map(|a| (a, 1.0 / 6.0))
        .collect();
    expected.push(Expectation::Marginal {
        model: "mp".into(),
        targets: vec!["X'".into(), "Y'".into()],
        table: uniform,
        tol: 1e-12,
    });
    FixtureBundle {
        name: "b3".into(),
        models: named([("m", b3_low()), ("mp", b3_high())]),
        embeddings: named([("alpha", b3_alpha())]),
        graphs: BTreeMap::new(),
        expected,
    }
}

/// Two marginals `X → Y`, `Y → Z` and candidate joints built from the two
/// reference `P(Z | Y, X)` tables, plus a table that mixes correctly under
/// `P(X | Y)` (`mp2_mixed`).
pub fn nonuniqueness_c1() -> FixtureBundle {
    let mut expected = Vec::new();
    for mp in ["mp1", "mp2", "mp2_mixed"] {
        expected.push(Expectation::Certifies {
            models: vec!["m1".into(), "m2".into()],
            embeddings: vec!["a1".into(), "a2".into()],
            candidate: mp.into(),
            layer: Layer::L1,
            holds: true,
        });
        expected.push(Expectation::Marginal {
            model: mp.into(),
            targets: vec!["Y".into()],
            table: vec![(vec![0], C1_PY[0]), (vec![1], C1_PY[1])],
            tol: 1e-12,
        });
        expected.push(Expectation::Marginal {
            model: mp.into(),
            targets: vec!["Z".into()],
            table: vec![(vec![0], C1_PZ[0]), (vec![1], C1_PZ[1])],
            tol: 1e-12,
        });
    }
    for second in ["mp2", "mp2_mixed"] {
        expected.push(Expectation::Differ {
            first: "mp1".into(),
            second: second.into(),
            targets: vec!["Z".into()],
            given: vec!["X".into(), "Y".into()],
            min_tv: 0.1,
        });
    }
    FixtureBundle {
        name: "c1".into(),
        models: named([
            ("m1", c1_m1()),
            ("m2", c1_m2()),
            ("mp1", c1_candidate(&C1_P1)),
            ("mp2", c1_candidate(&C1_P2)),
            ("mp2_mixed", c1_candidate(&C1_P2_MIXED_UNDER_CONDITIONAL)),
        ]),
        embeddings: named([("a1", c1_alpha1()), ("a2", c1_alpha2())]),
        graphs: BTreeMap::new(),
        expected,
    }
}

/// The annotated embedding diagram, as graphs only.
pub fn diagram() -> FixtureBundle {
    FixtureBundle {
        name: "diagram".into(),
        models: BTreeMap::new(),
        embeddings: named([("alpha", diagram_alpha())]),
        graphs: named([("low", diagram_low()), ("high", diagram_high())]),
        expected: [Method::Projection, Method::Mediated]
            .into_iter()
            .map(|method| Expectation::GraphVerdict {
                embedding: "alpha".into(),
                low: "low".into(),
                high: "high".into(),
                method,
                holds: true,
            })
            .collect(),
    }
}

pub fn all_bundles() -> Vec<FixtureBundle> {
    vec![
        ecosystem(),
        counterexample_b3(),
        nonuniqueness_c1(),
        diagram(),
    ]
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf, FixtureError> {
    std::fs::write(&path, text).map_err(|source| FixtureError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

#[derive(Serialize)]
struct ExpectedFile<'a> {
    expected: &'a [Expectation],
}

/// Writes `dir/<bundle>/`: one `.toml` per model and embedding, one `.graph`
/// per graph, a problem file per certification expectation and
/// `expected.toml`. Returns the written paths.
pub fn export_bundle(bundle: &FixtureBundle, dir: &Path) -> Result<Vec<PathBuf>, FixtureError> {
    bundle.validate()?;
    let root = dir.join(&bundle.name);
    std::fs::create_dir_all(&root).map_err(|source| FixtureError::Io {
        path: root.clone(),
        source,
    })?;
    let mut out = Vec::new();
    for (name, m) in &bundle.models {
        out.push(write(root.join(format!("{name}.toml")), &scm_to_toml(m))?);
    }
    let pair: BTreeMap<&str, (&str, &str)> = bundle
        .expected
        .iter()
        .filter_map(|x| match x {
            Expectation::EmbeddingVerdict {
                embedding,
                low,
                high,
                ..
            }
            | Expectation::ErrorAtMost {
                embedding,
                low,
                high,
                ..
            } => Some((embedding.as_str(), (low.as_str(), high.as_str()))),
            _ => None,
        })
        .collect();
    for (name, e) in &bundle.embeddings {
        let (low, high) = pair.get(name.as_str()).copied().unzip();
        out.push(write(
            root.join(format!("{name}.toml")),
            &embedding_to_toml(e, low, high),
        )?);
    }
    for (name, g) in &bundle.graphs {
        out.push(write(root.join(format!("{name}.graph")), &g.to_string())?);
    }
    for x in &bundle.expected {
        if let Expectation::Certifies {
            models,
            embeddings,
            candidate,
            ..
        } = x
        {
            let paths = |v: &[String]| {
                v.iter()
                    .map(|n| PathBuf::from(format!("{n}.toml")))
                    .collect::<Vec<_>>()
            };
            let text = problem_to_toml(
                &paths(models),
                &paths(embeddings),
                Some(Path::new(&format!("{candidate}.toml"))),
            );
            out.push(write(
                root.join(format!("problem_{candidate}.toml")),
                &text,
            )?);
        }
    }
    let expected = toml::to_string(&ExpectedFile {
        expected: &bundle.expected,
    })
    .expect("expectations serialize");
    out.push(write(root.join("expected.toml"), &expected)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fallow_deer_at_unit_noise() {
        let m = ecosystem_ground_truth();
        let mut values: BTreeMap<VariableId, f64> = BTreeMap::new();
        for u in ["U_Wolves", "U_Eagles", "U_Humans", "U_Berries"] {
            values.insert(u.into(), 1.0);
        }
        for v in ["Wolves", "Eagles", "Humans", "Berries", "FallowDeer"] {
            let f = m.function(&v.into()).unwrap();
            let crate::scm::Body::Expr(e) = &f.body else {
                panic!()
            };
            let x = e.eval(&|id| values.get(id).copied()).ceil();
            values.insert(v.into(), x);
        }
        assert_eq!(values[&VariableId::new("FallowDeer")], 135.0);
    }

    #[test]
    fn ground_truth_graph() {
        let g = ecosystem_ground_truth().induced_graph();
        assert_eq!(g.vertices().len(), 7);
        assert_eq!(g.directed_edges().count(), 11);
        assert_eq!(g.bidirected_edges().count(), 0);
    }

    #[test]
    fn discrete_graphs_follow_the_figures() {
        let g2 = ecosystem_m2().induced_graph();
        for (a, b) in [
            ("RedDeer", "FallowDeer"),
            ("FallowDeer", "Squirrels"),
            ("RedDeer", "Squirrels"),
        ] {
            assert!(g2.has_bidirected(&a.into(), &b.into()));
        }
        assert_eq!(g2.directed_edges().count(), 5);
        let g1 = ecosystem_m1().induced_graph();
        assert_eq!(g1.directed_edges().count(), 5);
        assert_eq!(g1.bidirected_edges().count(), 0);
        let gp = ecosystem_high_level().induced_graph();
        assert_eq!(gp.directed_edges().count(), 5);
        assert!(gp.has_bidirected(&"Deer".into(), &"Squirrels".into()));
    }

    #[test]
    fn bundles_reference_existing_fixtures() {
        for b in all_bundles() {
            b.validate().unwrap();
        }
        let mut b = diagram();
        b.expected.push(Expectation::Marginal {
            model: "nope".into(),
            targets: vec![],
            table: vec![],
            tol: 0.0,
        });
        assert!(matches!(
            b.validate(),
            Err(FixtureError::UnknownReference { .. })
        ));
    }

    #[test]
    fn generator_shapes() {
        let d = generate_ecosystem_datasets(7);
        assert_eq!(d.x1.n_rows(), X1_ROWS);
        assert_eq!(d.x2.n_rows(), X2_ROWS);
        assert_eq!(d.eval.n_rows(), EVAL_ROWS);
        let names = |ds: &crate::Dataset| {
            ds.columns()
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
        };
        assert_eq!(names(&d.x1), ["Humans", "Berries", "Deer", "Squirrels"]);
        assert_eq!(
            names(&d.x2),
            ["Wolves", "Eagles", "RedDeer", "FallowDeer", "Squirrels"]
        );
        let p = generate_with_layout(7, EcosystemLayout::Prose);
        assert_eq!(
            names(&p.x1),
            ["Wolves", "Eagles", "RedDeer", "FallowDeer", "Squirrels"]
        );
        assert_eq!(p.x1.n_rows(), X1_ROWS);
    }

    #[test]
    fn export_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let files = export_bundle(&nonuniqueness_c1(), dir.path()).unwrap();
        assert!(files.iter().any(|p| p.ends_with("c1/problem_mp1.toml")));
        let p = crate::format::read_problem(&dir.path().join("c1/problem_mp1.toml")).unwrap();
        assert_eq!(p.models.len(), 2);
        let m = crate::format::read_scm(&dir.path().join("c1/mp1.toml")).unwrap();
        assert_eq!(m.functions(), nonuniqueness_c1().models["mp1"].functions());
    }
}
