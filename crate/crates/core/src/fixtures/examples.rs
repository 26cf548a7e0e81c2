use crate::scm::{CptRow, ExogenousLaw, ScmBuilder, StructuralFunction};
use crate::{CausalGraph, Embedding, RangeMap, Scm, Value, VariableId, VariableMap};

/// Low-level model of the sum counterexample: `Z = X + Y`.
pub fn b3_low() -> Scm {
    ScmBuilder::new()
        .variable("X", &[0, 2, 4])
        .variable("Y", &[0, 1])
        .variable("Z", &[0, 1, 2, 3, 4, 5])
        .exogenous("U_X", ExogenousLaw::uniform(&[0, 2, 4]))
        .exogenous("U_Y", ExogenousLaw::bernoulli(0.5))
        .function(StructuralFunction::expr("X", &[], &["U_X"], "U_X"))
        .function(StructuralFunction::expr("Y", &[], &["U_Y"], "U_Y"))
        .function(StructuralFunction::expr("Z", &["X", "Y"], &[], "X + Y"))
        .build()
        .expect("well formed")
}

/// High-level model of the counterexample: `Z′ = Y′`, no edge from `X′`.
pub fn b3_high() -> Scm {
    ScmBuilder::new()
        .variable("X'", &[0, 2, 4])
        .variable("Y'", &[0, 1])
        .variable("Z'", &[0, 1])
        .exogenous("U_X'", ExogenousLaw::uniform(&[0, 2, 4]))
        .exogenous("U_Y'", ExogenousLaw::bernoulli(0.5))
        .function(StructuralFunction::expr("X'", &[], &["U_X'"], "U_X'"))
        .function(StructuralFunction::expr("Y'", &[], &["U_Y'"], "U_Y'"))
        .function(StructuralFunction::expr("Z'", &["Y'"], &[], "Y'"))
        .build()
        .expect("well formed")
}

/// Identity on X and Y, parity on Z.
pub fn b3_alpha() -> Embedding {
    let phi = VariableMap::new(
        [("X", "X'"), ("Y", "Y'"), ("Z", "Z'")].map(|(a, b)| (a.into(), b.into())),
    )
    .expect("distinct sources");
    Embedding::new(
        phi,
        [
            RangeMap::table("X'", vec!["X".into()], [0, 2, 4].map(|x| (vec![x], x))),
            RangeMap::table("Y'", vec!["Y".into()], [0, 1].map(|y| (vec![y], y))),
            RangeMap::table("Z'", vec!["Z".into()], (0..6).map(|z| (vec![z], z % 2))),
        ],
    )
    .expect("one map per target")
}

pub const C1_PX: [f64; 2] = [0.4, 0.6];
/// `P(Y | X = x)` rows, `x = 0, 1`.
pub const C1_PY_GIVEN_X: [[f64; 2]; 2] = [[0.7, 0.3], [0.4, 0.6]];
/// `P(Z | Y = y)` rows, `y = 0, 1`.
pub const C1_PZ_GIVEN_Y: [[f64; 2]; 2] = [[0.6, 0.4], [0.3, 0.7]];
pub const C1_PY: [f64; 2] = [0.52, 0.48];
pub const C1_PZ: [f64; 2] = [0.456, 0.544];

/// `P(Z | Y = y, X = x)` indexed `[y][x]`.
pub type ZTable = [[[f64; 2]; 2]; 2];

/// Each `P₁(Z | Y, X)` row equals `P(Z | Y)`.
pub const C1_P1: ZTable = [[[0.6, 0.4], [0.6, 0.4]], [[0.3, 0.7], [0.3, 0.7]]];

/// The second reference table.
pub const C1_P2: ZTable = [
    [[0.4, 0.6], [11.0 / 15.0, 4.0 / 15.0]],
    [[0.2, 0.8], [11.0 / 30.0, 19.0 / 30.0]],
];

/// A second table that mixes into `P(Z | Y)` under `P(X | Y)`, the weights a
/// joint model actually imposes. Rows with `X = 0` agree with the second
/// reference table.
pub const C1_P2_MIXED_UNDER_CONDITIONAL: ZTable = [
    [[0.4, 0.6], [5.0 / 6.0, 1.0 / 6.0]],
    [[0.2, 0.8], [1.0 / 3.0, 2.0 / 3.0]],
];

fn row(p: [f64; 2]) -> Vec<(Value, f64)> {
    vec![(0, p[0]), (1, p[1])]
}

/// Marginal model `X → Y`.
pub fn c1_m1() -> Scm {
    ScmBuilder::new()
        .variable("X", &[0, 1])
        .variable("Y", &[0, 1])
        .conditional("X", &[], &[(vec![], row(C1_PX))])
        .conditional(
            "Y",
            &["X"],
            &[
                (vec![0], row(C1_PY_GIVEN_X[0])),
                (vec![1], row(C1_PY_GIVEN_X[1])),
            ],
        )
        .build()
        .expect("well formed")
}

/// Marginal model `Y → Z`.
pub fn c1_m2() -> Scm {
    ScmBuilder::new()
        .variable("Y", &[0, 1])
        .variable("Z", &[0, 1])
        .conditional("Y", &[], &[(vec![], row(C1_PY))])
        .conditional(
            "Z",
            &["Y"],
            &[
                (vec![0], row(C1_PZ_GIVEN_Y[0])),
                (vec![1], row(C1_PZ_GIVEN_Y[1])),
            ],
        )
        .build()
        .expect("well formed")
}

/// Candidate joint model `X → Y`, `X → Z`, `Y → Z` with the given `P(Z | Y, X)`.
pub fn c1_candidate(z: &ZTable) -> Scm {
    let rows: Vec<CptRow> = [(0, 0), (0, 1), (1, 0), (1, 1)]
        .into_iter()
        .map(|(y, x)| (vec![y, x], row(z[y as usize][x as usize])))
        .collect();
    ScmBuilder::new()
        .variable("X", &[0, 1])
        .variable("Y", &[0, 1])
        .variable("Z", &[0, 1])
        .conditional("X", &[], &[(vec![], row(C1_PX))])
        .conditional(
            "Y",
            &["X"],
            &[
                (vec![0], row(C1_PY_GIVEN_X[0])),
                (vec![1], row(C1_PY_GIVEN_X[1])),
            ],
        )
        .conditional("Z", &["Y", "X"], &rows)
        .build()
        .expect("well formed")
}

pub fn c1_alpha1() -> Embedding {
    Embedding::identity(["X", "Y"].map(VariableId::new))
}

pub fn c1_alpha2() -> Embedding {
    Embedding::identity(["Y", "Z"].map(VariableId::new))
}

/// Low-level graph of the annotated embedding diagram.
pub fn diagram_low() -> CausalGraph {
    CausalGraph::parse(
        "vertices X1 X2 Y W Z\n\
         X1 -> X2\nX2 -> W\nW -> Z\nX1 -> Y\nY <-> W\n",
    )
    .expect("valid graph")
}

/// High-level graph of the diagram; `N1`..`N7` are the irrelevant vertices.
pub fn diagram_high() -> CausalGraph {
    CausalGraph::parse(
        "vertices X' Y' W' N1 N2 N3 N4 N5 N6 N7\n\
         N1 -> X'\nX' -> N2\nN2 -> W'\nX' -> Y'\nX' -> N3\nN3 -> N4\nN4 -> Y'\n\
         N5 -> Y'\nN5 -> W'\nY' -> N6\nX' -> N7\nW' -> N7\nN2 -> N7\n",
    )
    .expect("valid graph")
}

pub fn diagram_alpha() -> Embedding {
    let phi = VariableMap::new(
        [("X1", "X'"), ("X2", "X'"), ("Y", "Y'"), ("W", "W'")].map(|(a, b)| (a.into(), b.into())),
    )
    .expect("distinct sources");
    Embedding::new(
        phi,
        [
            RangeMap::sum("X'", vec!["X1".into(), "X2".into()]),
            RangeMap::identity("Y'", "Y"),
            RangeMap::identity("W'", "W"),
        ],
    )
    .expect("one map per target")
}
