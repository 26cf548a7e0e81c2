//! The deer-and-squirrels ecosystem.
//!
//! [`ground_truth`] is the seven-variable continuous simulator used to
//! generate data. [`m1`], [`m2`] and [`high_level`] are small discrete models
//! with the graphs of the two sub-system models and of the shared high-level
//! model; they exist for the exact checkers.

use crate::scm::{sample_stream, ExogenousLaw, ScmBuilder, StructuralFunction};
use crate::{Dataset, Embedding, RangeMap, Scm, VariableId, VariableMap};

pub const X1_ROWS: usize = 2000;
pub const X2_ROWS: usize = 4000;
pub const EVAL_ROWS: usize = 100_000;

/// ChaCha stream ids of the three generated datasets.
pub const X1_STREAM: u64 = 1;
pub const X2_STREAM: u64 = 2;
pub const EVAL_STREAM: u64 = 3;

/// High-level schema of the merged dataset.
pub fn schema() -> Vec<VariableId> {
    ["Humans", "Predators", "Deer", "Squirrels"]
        .map(VariableId::new)
        .to_vec()
}

/// Seven-variable simulator with normal exogenous noise. Every output is
/// rounded up to an integer.
pub fn ground_truth() -> Scm {
    let f = |t: &str, parents: &[&str], exo: &[&str], src: &str| {
        StructuralFunction::expr(t, parents, exo, src).integer(true)
    };
    ScmBuilder::new()
        .continuous("Wolves")
        .continuous("Eagles")
        .continuous("FallowDeer")
        .continuous("RedDeer")
        .continuous("Squirrels")
        .continuous("Humans")
        .continuous("Berries")
        .exogenous(
            "U_Wolves",
            ExogenousLaw::Normal {
                mean: 1.0,
                std: 0.20,
            },
        )
        .exogenous(
            "U_Eagles",
            ExogenousLaw::Normal {
                mean: 1.0,
                std: 0.15,
            },
        )
        .exogenous(
            "U_Humans",
            ExogenousLaw::Normal {
                mean: 1.0,
                std: 0.25,
            },
        )
        .exogenous(
            "U_Berries",
            ExogenousLaw::Normal {
                mean: 1.0,
                std: 0.25,
            },
        )
        .function(f("Wolves", &[], &["U_Wolves"], "100 * max(U_Wolves, 0.1)"))
        .function(f("Eagles", &[], &["U_Eagles"], "10 * max(U_Eagles, 0.1)"))
        .function(f("Humans", &[], &["U_Humans"], "15 * max(U_Humans, 0.1)"))
        .function(f("Berries", &[], &["U_Berries"], "max(U_Berries, 0.1)"))
        .function(f(
            "FallowDeer",
            &["Berries", "Wolves", "Eagles", "Humans"],
            &[],
            "max(300 * Berries - Wolves - 2 * Eagles - 3 * Humans, 0)",
        ))
        .function(f(
            "RedDeer",
            &["Berries", "Wolves", "Humans"],
            &[],
            "max(200 * Berries - Wolves - 3 * Humans, 0)",
        ))
        .function(f(
            "Squirrels",
            &["Berries", "Eagles", "FallowDeer", "Humans"],
            &[],
            "max(200 * Berries - 5 * Eagles - 4 * Humans - 0.5 * FallowDeer, 0)",
        ))
        .build()
        .expect("ecosystem model is well formed")
}

/// Which variables the first generated dataset keeps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EcosystemLayout {
    /// X1 (2000 rows) carries Humans, Berries, Deer and Squirrels with
    /// `Deer = FallowDeer + RedDeer`; X2 (4000 rows) carries Wolves, Eagles,
    /// RedDeer, FallowDeer and Squirrels.
    #[default]
    Figure,
    /// The swapped assignment: X1 (2000 rows) drops Berries and Humans, X2
    /// (4000 rows) aggregates Deer and drops Wolves and Eagles.
    Prose,
}

impl std::str::FromStr for EcosystemLayout {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "figure" => Ok(EcosystemLayout::Figure),
            "prose" => Ok(EcosystemLayout::Prose),
            _ => Err(format!("unknown layout {s:?}, expected figure or prose")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EcosystemData {
    pub layout: EcosystemLayout,
    pub x1: Dataset,
    pub x2: Dataset,
    pub eval: Dataset,
}

impl EcosystemData {
    pub fn x1_embedding(&self) -> Embedding {
        match self.layout {
            EcosystemLayout::Figure => alpha1(),
            EcosystemLayout::Prose => alpha2(),
        }
    }

    pub fn x2_embedding(&self) -> Embedding {
        match self.layout {
            EcosystemLayout::Figure => alpha2(),
            EcosystemLayout::Prose => alpha1(),
        }
    }
}

fn aggregated_view(full: &Dataset) -> Dataset {
    let cols: Vec<VariableId> = ["Humans", "Berries", "FallowDeer", "RedDeer", "Squirrels"]
        .map(VariableId::new)
        .to_vec();
    let idx: Vec<usize> = cols
        .iter()
        .map(|c| full.column_index(c).expect("ground-truth column"))
        .collect();
    let rows = full
        .rows()
        .iter()
        .map(|r| {
            let deer = match (r[idx[2]], r[idx[3]]) {
                (Some(a), Some(b)) => Some(a + b),
                _ => None,
            };
            vec![r[idx[0]], r[idx[1]], deer, r[idx[4]]]
        })
        .collect();
    Dataset::new(
        ["Humans", "Berries", "Deer", "Squirrels"]
            .map(VariableId::new)
            .to_vec(),
        rows,
    )
    .expect("fixed arity")
}

fn detailed_view(full: &Dataset) -> Dataset {
    full.select(&["Wolves", "Eagles", "RedDeer", "FallowDeer", "Squirrels"].map(VariableId::new))
        .expect("ground-truth columns")
}

pub fn generate_ecosystem_datasets(seed: u64) -> EcosystemData {
    generate_with_layout(seed, EcosystemLayout::Figure)
}

pub fn generate_with_layout(seed: u64, layout: EcosystemLayout) -> EcosystemData {
    let m = ground_truth();
    let draw = |n, stream| sample_stream(&m, n, seed, stream).expect("ecosystem model samples");
    let first = draw(X1_ROWS, X1_STREAM);
    let second = draw(X2_ROWS, X2_STREAM);
    let (x1, x2) = match layout {
        EcosystemLayout::Figure => (aggregated_view(&first), detailed_view(&second)),
        EcosystemLayout::Prose => (detailed_view(&first), aggregated_view(&second)),
    };
    EcosystemData {
        layout,
        x1,
        x2,
        eval: draw(EVAL_ROWS, EVAL_STREAM),
    }
}

/// `φ₁`: Humans, Deer and Squirrels map to themselves.
pub fn alpha1() -> Embedding {
    let vars = ["Humans", "Deer", "Squirrels"].map(VariableId::new);
    Embedding::identity(vars)
}

/// `φ₂`: Wolves and Eagles to Predators, both deer species to Deer, by sums.
pub fn alpha2() -> Embedding {
    let phi = VariableMap::new(
        [
            ("Wolves", "Predators"),
            ("Eagles", "Predators"),
            ("RedDeer", "Deer"),
            ("FallowDeer", "Deer"),
            ("Squirrels", "Squirrels"),
        ]
        .map(|(a, b)| (VariableId::new(a), VariableId::new(b))),
    )
    .expect("distinct sources");
    Embedding::new(
        phi,
        [
            RangeMap::sum("Predators", vec!["Wolves".into(), "Eagles".into()]),
            RangeMap::sum("Deer", vec!["RedDeer".into(), "FallowDeer".into()]),
            RangeMap::identity("Squirrels", "Squirrels"),
        ],
    )
    .expect("one map per target")
}

/// Maps the full ground-truth schema onto the high-level schema; used to
/// bring the evaluation dataset into the merged representation.
pub fn truth_embedding() -> Embedding {
    let phi = VariableMap::new(
        [
            ("Humans", "Humans"),
            ("Wolves", "Predators"),
            ("Eagles", "Predators"),
            ("RedDeer", "Deer"),
            ("FallowDeer", "Deer"),
            ("Squirrels", "Squirrels"),
        ]
        .map(|(a, b)| (VariableId::new(a), VariableId::new(b))),
    )
    .expect("distinct sources");
    Embedding::new(
        phi,
        [
            RangeMap::identity("Humans", "Humans"),
            RangeMap::sum("Predators", vec!["Wolves".into(), "Eagles".into()]),
            RangeMap::sum("Deer", vec!["RedDeer".into(), "FallowDeer".into()]),
            RangeMap::identity("Squirrels", "Squirrels"),
        ],
    )
    .expect("one map per target")
}

fn clamp(src: &str, hi: i64) -> String {
    format!("min({hi}, max(0, {src}))")
}

/// Discrete first sub-system: Humans and Berries drive Deer and Squirrels.
pub fn m1() -> Scm {
    ScmBuilder::new()
        .variable("Humans", &[0, 1])
        .variable("Berries", &[0, 1])
        .variable("Deer", &[0, 1, 2])
        .variable("Squirrels", &[0, 1])
        .exogenous("U_Humans", ExogenousLaw::bernoulli(0.5))
        .exogenous("U_Berries", ExogenousLaw::bernoulli(0.6))
        .exogenous("U_Deer", ExogenousLaw::bernoulli(0.5))
        .exogenous("U_Squirrels", ExogenousLaw::bernoulli(0.5))
        .function(StructuralFunction::expr(
            "Humans",
            &[],
            &["U_Humans"],
            "U_Humans",
        ))
        .function(StructuralFunction::expr(
            "Berries",
            &[],
            &["U_Berries"],
            "U_Berries",
        ))
        .function(StructuralFunction::expr(
            "Deer",
            &["Humans", "Berries"],
            &["U_Deer"],
            &clamp("1 + Berries + U_Deer - 2 * Humans", 2),
        ))
        .function(StructuralFunction::expr(
            "Squirrels",
            &["Humans", "Berries", "Deer"],
            &["U_Squirrels"],
            &clamp("Berries + U_Squirrels - Humans - floor(Deer / 2)", 1),
        ))
        .build()
        .expect("well formed")
}

/// Discrete second sub-system. The hidden berry and hunting conditions are
/// exogenous and shared by RedDeer, FallowDeer and Squirrels.
pub fn m2() -> Scm {
    let shared = ["U_Berries", "U_Humans"];
    ScmBuilder::new()
        .variable("Wolves", &[0, 1])
        .variable("Eagles", &[0, 1])
        .variable("RedDeer", &[0, 1])
        .variable("FallowDeer", &[0, 1])
        .variable("Squirrels", &[0, 1])
        .exogenous("U_Wolves", ExogenousLaw::bernoulli(0.5))
        .exogenous("U_Eagles", ExogenousLaw::bernoulli(0.4))
        .exogenous("U_Berries", ExogenousLaw::bernoulli(0.6))
        .exogenous("U_Humans", ExogenousLaw::bernoulli(0.5))
        .function(StructuralFunction::expr(
            "Wolves",
            &[],
            &["U_Wolves"],
            "U_Wolves",
        ))
        .function(StructuralFunction::expr(
            "Eagles",
            &[],
            &["U_Eagles"],
            "U_Eagles",
        ))
        .function(StructuralFunction::expr(
            "RedDeer",
            &["Wolves"],
            &shared,
            &clamp("1 + U_Berries - Wolves - U_Humans", 1),
        ))
        .function(StructuralFunction::expr(
            "FallowDeer",
            &["Wolves", "Eagles"],
            &shared,
            &clamp("1 + U_Berries - Wolves * Eagles - U_Humans", 1),
        ))
        .function(StructuralFunction::expr(
            "Squirrels",
            &["Eagles", "FallowDeer"],
            &shared,
            &clamp("U_Berries + 1 - Eagles - FallowDeer * U_Humans", 1),
        ))
        .build()
        .expect("well formed")
}

/// Discrete high-level model over Humans, Predators, Deer and Squirrels, with
/// Deer and Squirrels confounded by a shared exogenous term.
pub fn high_level() -> Scm {
    ScmBuilder::new()
        .variable("Humans", &[0, 1])
        .variable("Predators", &[0, 1, 2])
        .variable("Deer", &[0, 1, 2])
        .variable("Squirrels", &[0, 1])
        .exogenous("U_Humans", ExogenousLaw::bernoulli(0.5))
        .exogenous(
            "U_Predators",
            ExogenousLaw::Tabular(vec![(0, 0.3), (1, 0.5), (2, 0.2)]),
        )
        .exogenous("U_Food", ExogenousLaw::bernoulli(0.6))
        .exogenous("U_Deer", ExogenousLaw::bernoulli(0.5))
        .function(StructuralFunction::expr(
            "Humans",
            &[],
            &["U_Humans"],
            "U_Humans",
        ))
        .function(StructuralFunction::expr(
            "Predators",
            &[],
            &["U_Predators"],
            "U_Predators",
        ))
        .function(StructuralFunction::expr(
            "Deer",
            &["Humans", "Predators"],
            &["U_Food", "U_Deer"],
            &clamp("1 + U_Food + U_Deer - Humans - floor(Predators / 2)", 2),
        ))
        .function(StructuralFunction::expr(
            "Squirrels",
            &["Humans", "Predators", "Deer"],
            &["U_Food"],
            &clamp("U_Food + 1 - Humans * Predators - floor(Deer / 2)", 1),
        ))
        .build()
        .expect("well formed")
}
