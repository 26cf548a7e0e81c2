//! Engine invariants as seed-driven checks, shared by the property tests and
//! the acceptance report.

use std::collections::BTreeMap;

use causal_embed::embedding::pushforward;
use causal_embed::graph::latent_project;
use causal_embed::merge::{merge, stack, KnnConfig, MergePlan};
use causal_embed::{Dataset, Embedding, Layer, RangeMap, Value, VariableId};
use rand::Rng;

use super::*;

pub type Check = Result<(), String>;
pub type Invariant = (&'static str, fn(u64) -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {{
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    }};
}

/// Joint and conditional distributions have unit mass.
pub fn joint_normalizes(seed: u64) -> Check {
    let mut r = rng(seed);
    let m = random_scm(&mut r, 4, 3);
    let joint = m.joint_distribution().map_err(|e| e.to_string())?;
    ensure!(
        (joint.total_mass() - 1.0).abs() <= 1e-9,
        "joint mass {}",
        joint.total_mass()
    );
    let vars = m.variables();
    let target = vars[r.gen_range(0..vars.len())].clone();
    for layer in [Layer::L1, Layer::L2] {
        let mut given: BTreeMap<VariableId, Value> = BTreeMap::new();
        for v in vars.iter().filter(|v| **v != target) {
            if r.gen_bool(0.3) {
                given.insert(
                    v.clone(),
                    r.gen_range(0..m.range(v).unwrap().len()) as Value,
                );
            }
        }
        match m.query(std::slice::from_ref(&target), layer, &given) {
            Ok(d) => ensure!(
                (d.total_mass() - 1.0).abs() <= 1e-9,
                "{layer} query mass {}",
                d.total_mass()
            ),
            // An L1 event of probability zero has no conditional; L2 always does.
            Err(e) => ensure!(layer == Layer::L1, "L2 query failed: {e}"),
        }
    }
    Ok(())
}

/// After `do(a)`, every intervened variable is a point mass at its value.
pub fn intervention_is_point_mass(seed: u64) -> Check {
    let mut r = rng(seed);
    let m = random_scm(&mut r, 4, 3);
    let vars = random_subset(&mut r, &m.variables());
    let a: BTreeMap<VariableId, Value> = vars
        .iter()
        .map(|v| {
            (
                v.clone(),
                r.gen_range(0..m.range(v).unwrap().len()) as Value,
            )
        })
        .collect();
    let joint = m
        .apply_intervention(&a)
        .and_then(|x| x.joint_distribution())
        .map_err(|e| e.to_string())?;
    let marg = joint.marginal(&vars).map_err(|e| e.to_string())?;
    let cell: Vec<Value> = vars.iter().map(|v| a[v]).collect();
    ensure!(
        (marg.prob(&cell) - 1.0).abs() <= 1e-12,
        "P(do-values) = {}",
        marg.prob(&cell)
    );
    let q = m.query(&vars, Layer::L2, &a).map_err(|e| e.to_string())?;
    ensure!(
        (q.prob(&cell) - 1.0).abs() <= 1e-12,
        "L2 query puts {} on do-values",
        q.prob(&cell)
    );
    Ok(())
}

fn random_graph_and_sets(seed: u64) -> (CausalGraph, Vec<VariableId>, Vec<VariableId>) {
    let mut r = rng(seed);
    let n = r.gen_range(1..=7);
    let g = random_admg(&mut r, &ids("V", n), 0.35, 0.2);
    let outer = random_subset(&mut r, g.vertices());
    let inner = random_subset(&mut r, &outer);
    (g, outer, inner)
}

/// Projecting twice onto the same set changes nothing.
pub fn projection_is_idempotent(seed: u64) -> Check {
    let (g, s, _) = random_graph_and_sets(seed);
    let p = latent_project(&g, &set(&s)).map_err(|e| e.to_string())?;
    let pp = latent_project(&p, &set(&s)).map_err(|e| e.to_string())?;
    ensure!(p == pp, "projection not idempotent:\n{p}\nvs\n{pp}");
    Ok(())
}

/// Projecting onto `R` and then onto `S ⊆ R` equals projecting onto `S`.
pub fn projection_composes(seed: u64) -> Check {
    let (g, outer, inner) = random_graph_and_sets(seed);
    let two = latent_project(
        &latent_project(&g, &set(&outer)).map_err(|e| e.to_string())?,
        &set(&inner),
    )
    .map_err(|e| e.to_string())?;
    let one = latent_project(&g, &set(&inner)).map_err(|e| e.to_string())?;
    ensure!(one == two, "stepwise projection differs:\n{two}\nvs\n{one}");
    Ok(())
}

/// Pushforward under random total range maps keeps unit mass.
pub fn pushforward_preserves_mass(seed: u64) -> Check {
    let mut r = rng(seed);
    let m = random_scm(&mut r, 4, 3);
    let vars = random_subset(&mut r, &m.variables());
    let phi = random_surjection(&mut r, &vars);
    let mut alphas = Vec::new();
    for t in phi.codomain() {
        let pre = phi.preimage(t);
        let radix: Vec<usize> = pre.iter().map(|v| m.range(v).unwrap().len()).collect();
        let out = r.gen_range(1..=3);
        let rows: Vec<(Vec<Value>, Value)> = product(&radix)
            .into_iter()
            .map(|k| (k, r.gen_range(0..out) as Value))
            .collect();
        alphas.push(RangeMap::table(t.clone(), pre, rows));
    }
    let refs: Vec<&RangeMap> = alphas.iter().collect();
    let pre: Vec<VariableId> = refs
        .iter()
        .flat_map(|a| a.preimage().iter().cloned())
        .collect();
    let joint = m.joint_distribution().map_err(|e| e.to_string())?;
    let low = joint.marginal(&pre).map_err(|e| e.to_string())?;
    let pushed = pushforward(&refs, &low).map_err(|e| e.to_string())?;
    ensure!(
        (pushed.total_mass() - 1.0).abs() <= 1e-12,
        "pushed mass {}",
        pushed.total_mass()
    );
    ensure!(
        (pushed.total_mass() - low.total_mass()).abs() <= 1e-12,
        "mass changed"
    );
    Ok(())
}

/// Merging random parts leaves no gaps and keeps observed cells bit for bit.
pub fn merge_fills_without_touching(seed: u64) -> Check {
    let mut r = rng(seed);
    let schema = ids("C", r.gen_range(1..=4));
    let parts = r.gen_range(1..=3);
    let mut inputs = Vec::new();
    for _ in 0..parts {
        let cols = random_subset(&mut r, &schema);
        let n = r.gen_range(2..=12);
        let rows: Vec<Vec<Option<f64>>> = (0..n)
            .map(|_| {
                cols.iter()
                    .map(|_| Some(r.gen_range(-50..50) as f64 / 4.0))
                    .collect()
            })
            .collect();
        let d = Dataset::new(cols.clone(), rows).unwrap();
        inputs.push((d, Embedding::identity(cols)));
    }
    // Columns that no part observes cannot be imputed; keep the schema to the union.
    let schema: Vec<VariableId> = schema
        .into_iter()
        .filter(|c| inputs.iter().any(|(d, _)| d.columns().contains(c)))
        .collect();
    let plan = MergePlan {
        inputs,
        target_schema: schema,
        imputer: KnnConfig {
            k: r.gen_range(1..=2),
        },
    };
    let stacked = stack(&plan).map_err(|e| e.to_string())?;
    let merged = merge(&plan).map_err(|e| e.to_string())?;
    let total: usize = plan.inputs.iter().map(|(d, _)| d.n_rows()).sum();
    ensure!(
        merged.n_rows() == total,
        "{} rows, expected {total}",
        merged.n_rows()
    );
    ensure!(
        merged.missing_count() == 0,
        "{} cells still missing",
        merged.missing_count()
    );
    for (a, b) in stacked.rows().iter().zip(merged.rows()) {
        for (x, y) in a.iter().zip(b) {
            if let Some(x) = x {
                ensure!(
                    y.map(f64::to_bits) == Some(x.to_bits()),
                    "observed cell {x} became {y:?}"
                );
            }
        }
    }
    ensure!(merged.sources() == stacked.sources(), "row sources changed");
    Ok(())
}

pub const ALL: &[Invariant] = &[
    ("joint distributions normalize", joint_normalizes),
    ("interventions are point masses", intervention_is_point_mass),
    ("projection is idempotent", projection_is_idempotent),
    ("projection composes", projection_composes),
    ("pushforward preserves mass", pushforward_preserves_mass),
    (
        "merge fills without touching observed cells",
        merge_fills_without_touching,
    ),
];
