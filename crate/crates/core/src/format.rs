//! TOML file formats for models, embeddings and marginal problems.
//!
//! Model file:
//!
//! ```toml
//! [[endogenous]]
//! name = "X"
//! range = [0, 2, 4]          # or: continuous = true
//!
//! [[exogenous]]
//! name = "U_X"
//! values = [0, 2, 4]
//! probs = [0.3333333333333333, 0.3333333333333333, 0.3333333333333334]
//!
//! [[exogenous]]
//! name = "U_W"
//! normal = { mean = 1.0, std = 0.2 }
//!
//! [[function]]
//! target = "Z"
//! parents = ["X", "Y"]
//! exogenous = []
//! expr = "X + Y"             # or: rows = [[x, y, z], ...], inputs then output
//! integer = false            # round expression outputs up
//! ```
//!
//! Embedding file:
//!
//! ```toml
//! low = "m1"                 # informational model names
//! high = "mp"
//! relevant_low = ["X", "Y"]  # optional; must match phi
//! relevant_high = ["X'", "Y'"]
//!
//! [phi]
//! X = "X'"
//! Y = "Y'"
//!
//! [alpha."X'"]
//! kind = "table"             # identity | sum | table
//! preimage = ["X"]
//! rows = [[0, 0], [2, 0], [4, 1]]
//! ```
//!
//! Problem file: `models` and `embeddings` are equally long path lists,
//! `candidate` an optional path; relative paths resolve against the problem
//! file's directory.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingError;
use crate::graph::GraphError;
use crate::marginal::{MarginalError, MarginalProblem};
use crate::scm::{
    Body, Domain, Endogenous, ExogenousLaw, ExogenousSpec, Expr, ScmError, StructuralFunction,
};
use crate::{Embedding, RangeMap, RangeMapKind, Scm, Value, ValueRange, VariableId, VariableMap};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ScmError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Marginal(#[from] MarginalError),
}

#[derive(Serialize, Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    #[serde(default)]
    endogenous: Vec<EndogenousEntry>,
    #[serde(default)]
    exogenous: Vec<ExogenousEntry>,
    #[serde(default)]
    function: Vec<FunctionEntry>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct EndogenousEntry {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    range: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    continuous: bool,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct NormalEntry {
    mean: f64,
    std: f64,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct ExogenousEntry {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    normal: Option<NormalEntry>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct FunctionEntry {
    target: String,
    #[serde(default)]
    parents: Vec<String>,
    #[serde(default)]
    exogenous: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    expr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rows: Option<Vec<Vec<Value>>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    integer: bool,
}

fn invalid(msg: impl Into<String>) -> FormatError {
    FormatError::Invalid(msg.into())
}

fn id(name: &str) -> Result<VariableId, FormatError> {
    VariableId::try_new(name).ok_or_else(|| invalid(format!("invalid variable name {name:?}")))
}

fn ids(names: &[String]) -> Result<Vec<VariableId>, FormatError> {
    names.iter().map(|n| id(n)).collect()
}

pub fn scm_from_toml(src: &str) -> Result<Scm, FormatError> {
    let file: ModelFile = toml::from_str(src)?;
    let mut endo = Vec::new();
    for e in &file.endogenous {
        let domain = match (&e.range, e.continuous) {
            (Some(r), false) => Domain::Finite(
                ValueRange::new(r.clone())
                    .map_err(|m| invalid(format!("range of {}: {m}", e.name)))?,
            ),
            (None, true) => Domain::Continuous,
            _ => {
                return Err(invalid(format!(
                    "{}: give exactly one of range and continuous",
                    e.name
                )))
            }
        };
        endo.push(Endogenous {
            id: id(&e.name)?,
            domain,
        });
    }
    let mut exo = Vec::new();
    for u in &file.exogenous {
        let law = match (&u.values, &u.probs, &u.normal) {
            (Some(v), Some(p), None) => {
                if v.len() != p.len() {
                    return Err(invalid(format!(
                        "{}: {} values but {} probs",
                        u.name,
                        v.len(),
                        p.len()
                    )));
                }
                ExogenousLaw::Tabular(v.iter().copied().zip(p.iter().copied()).collect())
            }
            (None, None, Some(n)) => ExogenousLaw::Normal {
                mean: n.mean,
                std: n.std,
            },
            _ => {
                return Err(invalid(format!(
                    "{}: give values and probs, or normal",
                    u.name
                )))
            }
        };
        exo.push(ExogenousSpec::new(id(&u.name)?, law));
    }
    let mut funcs = Vec::new();
    for f in &file.function {
        let endogenous_parents = ids(&f.parents)?;
        let exogenous_parents = ids(&f.exogenous)?;
        let arity = endogenous_parents.len() + exogenous_parents.len();
        let body = match (&f.expr, &f.rows) {
            (Some(src), None) => Body::Expr(
                Expr::parse(src).map_err(|e| invalid(format!("function for {}: {e}", f.target)))?,
            ),
            (None, Some(rows)) => {
                let mut table = BTreeMap::new();
                for r in rows {
                    if r.len() != arity + 1 {
                        return Err(invalid(format!(
                            "function for {}: row {r:?} has {} entries, expected {}",
                            f.target,
                            r.len(),
                            arity + 1
                        )));
                    }
                    table.insert(r[..arity].to_vec(), r[arity]);
                }
                Body::Table(table)
            }
            _ => {
                return Err(invalid(format!(
                    "function for {}: give exactly one of expr and rows",
                    f.target
                )))
            }
        };
        funcs.push(StructuralFunction {
            target: id(&f.target)?,
            endogenous_parents,
            exogenous_parents,
            body,
            integer: f.integer,
        });
    }
    Ok(Scm::new(endo, exo, funcs)?)
}

/// Writes the model's declared mechanisms; interventions are not recorded,
/// intervened functions appear as constants.
pub fn scm_to_toml(m: &Scm) -> String {
    let names = |v: &[VariableId]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let file = ModelFile {
        endogenous: m
            .endogenous()
            .iter()
            .map(|e| EndogenousEntry {
                name: e.id.to_string(),
                range: e.domain.range().map(|r| r.values().to_vec()),
                continuous: matches!(e.domain, Domain::Continuous),
            })
            .collect(),
        exogenous: m
            .exogenous()
            .iter()
            .map(|u| match &u.law {
                ExogenousLaw::Tabular(cells) => ExogenousEntry {
                    name: u.id.to_string(),
                    values: Some(cells.iter().map(|c| c.0).collect()),
                    probs: Some(cells.iter().map(|c| c.1).collect()),
                    normal: None,
                },
                ExogenousLaw::Normal { mean, std } => ExogenousEntry {
                    name: u.id.to_string(),
                    values: None,
                    probs: None,
                    normal: Some(NormalEntry {
                        mean: *mean,
                        std: *std,
                    }),
                },
            })
            .collect(),
        function: m
            .functions()
            .iter()
            .map(|f| {
                if let Some(v) = m.interventions().get(&f.target) {
                    return FunctionEntry {
                        target: f.target.to_string(),
                        parents: vec![],
                        exogenous: vec![],
                        expr: Some(v.to_string()),
                        rows: None,
                        integer: false,
                    };
                }
                let (expr, rows) = match &f.body {
                    Body::Expr(e) => (Some(e.to_string()), None),
                    Body::Table(t) => (
                        None,
                        Some(
                            t.iter()
                                .map(|(k, v)| k.iter().copied().chain([*v]).collect())
                                .collect(),
                        ),
                    ),
                };
                FunctionEntry {
                    target: f.target.to_string(),
                    parents: names(&f.endogenous_parents),
                    exogenous: names(&f.exogenous_parents),
                    expr,
                    rows,
                    integer: f.integer,
                }
            })
            .collect(),
    };
    toml::to_string(&file).expect("model files serialize")
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct AlphaEntry {
    kind: RangeMapKind,
    preimage: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rows: Option<Vec<Vec<Value>>>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct EmbeddingFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    low: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    high: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    relevant_low: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    relevant_high: Option<Vec<String>>,
    phi: BTreeMap<String, String>,
    #[serde(default)]
    alpha: BTreeMap<String, AlphaEntry>,
}

/// An embedding together with the model names its file mentions.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSpec {
    pub low: Option<String>,
    pub high: Option<String>,
    pub embedding: Embedding,
}

pub fn embedding_from_toml(src: &str) -> Result<EmbeddingSpec, FormatError> {
    let file: EmbeddingFile = toml::from_str(src)?;
    let pairs = file
        .phi
        .iter()
        .map(|(a, b)| Ok((id(a)?, id(b)?)))
        .collect::<Result<Vec<_>, FormatError>>()?;
    let phi = VariableMap::new(pairs)?;
    if let Some(r) = &file.relevant_low {
        if ids(r)?.into_iter().collect::<BTreeSet<_>>() != phi.domain_set() {
            return Err(invalid("relevant_low differs from the domain of phi"));
        }
    }
    if let Some(r) = &file.relevant_high {
        if ids(r)?.into_iter().collect::<BTreeSet<_>>() != *phi.codomain() {
            return Err(invalid("relevant_high differs from the image of phi"));
        }
    }
    let mut alphas = Vec::new();
    for (target, a) in &file.alpha {
        let preimage = ids(&a.preimage)?;
        let map = match (a.kind, &a.rows) {
            (RangeMapKind::Identity, None) => {
                if preimage.len() != 1 {
                    return Err(invalid(format!(
                        "identity map for {target} needs one preimage variable"
                    )));
                }
                RangeMap::identity(id(target)?, preimage[0].clone())
            }
            (RangeMapKind::Sum, None) => RangeMap::sum(id(target)?, preimage),
            (RangeMapKind::Table, Some(rows)) => {
                let n = preimage.len();
                let mut table = Vec::new();
                for r in rows {
                    if r.len() != n + 1 {
                        return Err(invalid(format!(
                            "map for {target}: row {r:?} needs {} entries",
                            n + 1
                        )));
                    }
                    table.push((r[..n].to_vec(), r[n]));
                }
                RangeMap::table(id(target)?, preimage, table)
            }
            (RangeMapKind::Table, None) => {
                return Err(invalid(format!("table map for {target} has no rows")))
            }
            (_, Some(_)) => return Err(invalid(format!("only table maps for {target} take rows"))),
        };
        alphas.push(map);
    }
    Ok(EmbeddingSpec {
        low: file.low,
        high: file.high,
        embedding: Embedding::new(phi, alphas)?,
    })
}

pub fn embedding_to_toml(e: &Embedding, low: Option<&str>, high: Option<&str>) -> String {
    let file = EmbeddingFile {
        low: low.map(str::to_string),
        high: high.map(str::to_string),
        relevant_low: Some(e.relevant_low().iter().map(|v| v.to_string()).collect()),
        relevant_high: Some(e.relevant_high().iter().map(|v| v.to_string()).collect()),
        phi: e
            .phi()
            .pairs()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect(),
        alpha: e
            .alphas()
            .iter()
            .map(|(t, a)| {
                let rows = (a.kind() == RangeMapKind::Table).then(|| {
                    a.rows()
                        .iter()
                        .map(|(k, v)| k.iter().copied().chain([*v]).collect())
                        .collect()
                });
                (
                    t.to_string(),
                    AlphaEntry {
                        kind: a.kind(),
                        preimage: a.preimage().iter().map(|v| v.to_string()).collect(),
                        rows,
                    },
                )
            })
            .collect(),
    };
    toml::to_string(&file).expect("embedding files serialize")
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    models: Vec<PathBuf>,
    embeddings: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    candidate: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_scm(path: &Path) -> Result<Scm, FormatError> {
    scm_from_toml(&read(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

pub fn read_embedding(path: &Path) -> Result<EmbeddingSpec, FormatError> {
    embedding_from_toml(&read(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

pub fn read_problem(path: &Path) -> Result<MarginalProblem, FormatError> {
    let file: ProblemFile = toml::from_str(&read(path)?)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let models = file
        .models
        .iter()
        .map(|p| read_scm(&base.join(p)))
        .collect::<Result<Vec<_>, _>>()?;
    let embeddings = file
        .embeddings
        .iter()
        .map(|p| read_embedding(&base.join(p)).map(|s| s.embedding))
        .collect::<Result<Vec<_>, _>>()?;
    let candidate = file
        .candidate
        .as_ref()
        .map(|p| read_scm(&base.join(p)))
        .transpose()?;
    Ok(MarginalProblem::new(models, embeddings, candidate)?)
}

/// Problem file text referencing the given paths.
pub fn problem_to_toml(
    models: &[PathBuf],
    embeddings: &[PathBuf],
    candidate: Option<&Path>,
) -> String {
    toml::to_string(&ProblemFile {
        models: models.to_vec(),
        embeddings: embeddings.to_vec(),
        candidate: candidate.map(Path::to_path_buf),
    })
    .expect("problem files serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::ScmBuilder;

    #[test]
    fn model_round_trip() {
        let m = ScmBuilder::new()
            .variable("X", &[0, 2, 4])
            .variable("Y", &[0, 1])
            .variable("Z", &[0, 1, 2, 3, 4, 5])
            .continuous("W")
            .exogenous("U_X", ExogenousLaw::uniform(&[0, 2, 4]))
            .exogenous("U_Y", ExogenousLaw::bernoulli(0.5))
            .exogenous(
                "U_W",
                ExogenousLaw::Normal {
                    mean: 1.0,
                    std: 0.2,
                },
            )
            .function(StructuralFunction::expr("X", &[], &["U_X"], "U_X"))
            .function(StructuralFunction::table(
                "Y",
                &[],
                &["U_Y"],
                [(vec![0], 1), (vec![1], 0)],
            ))
            .function(StructuralFunction::expr("Z", &["X", "Y"], &[], "X + Y"))
            .function(
                StructuralFunction::expr("W", &[], &["U_W"], "100 * max(U_W, 0.1)").integer(true),
            )
            .build()
            .unwrap();
        let text = scm_to_toml(&m);
        let back = scm_from_toml(&text).unwrap();
        assert_eq!(back.endogenous(), m.endogenous());
        assert_eq!(back.exogenous(), m.exogenous());
        assert_eq!(back.functions(), m.functions());
    }

    #[test]
    fn model_file_errors() {
        let missing_body =
            "[[endogenous]]\nname = \"X\"\nrange = [0, 1]\n[[function]]\ntarget = \"X\"\n";
        assert!(matches!(
            scm_from_toml(missing_body),
            Err(FormatError::Invalid(_))
        ));
        let both = "[[endogenous]]\nname = \"X\"\nrange = [0]\ncontinuous = true\n";
        assert!(scm_from_toml(both).is_err());
        let unknown = "[[endogenous]]\nname = \"X\"\nrange = [0]\nlabel = 3\n";
        assert!(matches!(scm_from_toml(unknown), Err(FormatError::Toml(_))));
    }

    #[test]
    fn embedding_round_trip() {
        let src = r#"
low = "m2"
high = "mp"

[phi]
Wolves = "Predators"
Eagles = "Predators"
Squirrels = "Squirrels"

[alpha.Predators]
kind = "sum"
preimage = ["Wolves", "Eagles"]

[alpha.Squirrels]
kind = "identity"
preimage = ["Squirrels"]
"#;
        let spec = embedding_from_toml(src).unwrap();
        assert_eq!(spec.low.as_deref(), Some("m2"));
        let a = spec.embedding.alpha(&"Predators".into()).unwrap();
        assert_eq!(a.apply(&[3, 4]), Some(7));
        let text = embedding_to_toml(&spec.embedding, Some("m2"), Some("mp"));
        assert_eq!(embedding_from_toml(&text).unwrap(), spec);
    }

    #[test]
    fn table_embedding_round_trip() {
        let e = Embedding::new(
            VariableMap::new([("Z".into(), "Z'".into())]).unwrap(),
            [RangeMap::table(
                "Z'",
                vec!["Z".into()],
                (0..6).map(|z| (vec![z], z % 2)),
            )],
        )
        .unwrap();
        let back = embedding_from_toml(&embedding_to_toml(&e, None, None)).unwrap();
        assert_eq!(back.embedding, e);
        let bad = "relevant_high = [\"Q\"]\n[phi]\nZ = \"Z'\"\n";
        assert!(embedding_from_toml(bad).is_err());
    }
}
