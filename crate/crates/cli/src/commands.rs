use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use causal_embed::embedding::{
    check_graphs, construct_consistent_high_level, embedding_error, is_embedding, pushforward,
    validate_structure, EmbeddingError, Method,
};
use causal_embed::fixtures::{
    all_bundles, ecosystem_ground_truth, export_bundle, generate_ecosystem_datasets,
    generate_with_layout, EcosystemLayout,
};
use causal_embed::format::{self, embedding_to_toml, scm_to_toml, FormatError};
use causal_embed::graph::{is_cdag, latent_project, mediated_adjacencies, mediated_confounders};
use causal_embed::marginal::{certify_solution, is_identity_embedding, reduce, MarginalError};
use causal_embed::merge::{
    empirical_distribution, kl_divergence, merge, missingness_pattern, stack, transform_dataset,
    BinSpec, KnnConfig, MergePlan,
};
use causal_embed::scm::sample;
use causal_embed::{
    CausalGraph, Dataset, DiscreteDistribution, Embedding, Layer, RangeMap, Scm, VariableId,
};
use serde_json::{json, Value as Json};

use crate::args::*;
use crate::parse;

/// Outcome of one subcommand: the JSON report, the human summary and whether
/// the verdict was positive.
pub struct Report {
    pub json: Json,
    pub summary: String,
    pub ok: bool,
}

impl Report {
    fn new(json: Json, summary: String, ok: bool) -> Self {
        Report { json, summary, ok }
    }
}

fn read_text(p: &Path) -> Result<String> {
    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn write_text(p: &Path, text: &str) -> Result<()> {
    if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(p, text).with_context(|| format!("writing {}", p.display()))
}

fn read_model(p: &Path) -> Result<Scm> {
    Ok(format::read_scm(&parse::resolve(p))?)
}

fn read_embedding(p: &Path) -> Result<Embedding> {
    Ok(format::read_embedding(&parse::resolve(p))?.embedding)
}

fn read_dataset(p: &Path) -> Result<Dataset> {
    let f = fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
    Dataset::read_csv(f).with_context(|| format!("reading {}", p.display()))
}

fn write_dataset(p: &Path, d: &Dataset) -> Result<()> {
    let mut buf = Vec::new();
    d.write_csv(&mut buf)?;
    write_text(p, std::str::from_utf8(&buf).expect("csv output is utf-8"))
}

fn names(vs: impl IntoIterator<Item = impl AsRef<str>>) -> String {
    vs.into_iter()
        .map(|v| v.as_ref().to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn pairs(set: &BTreeSet<(VariableId, VariableId)>) -> Json {
    json!(set
        .iter()
        .map(|(a, b)| [a.as_str(), b.as_str()])
        .collect::<Vec<_>>())
}

fn graph_json(g: &CausalGraph) -> Json {
    json!({
        "vertices": g.vertices(),
        "directed": pairs(&g.directed_set()),
        "bidirected": pairs(&g.bidirected_set()),
    })
}

fn dist_json(d: &DiscreteDistribution) -> Json {
    json!({
        "variables": d.variables(),
        "cells": d.pmf().iter().map(|(k, p)| json!([k, p])).collect::<Vec<_>>(),
    })
}

const SHOWN_CELLS: usize = 32;

fn show_dist(out: &mut String, d: &DiscreteDistribution) {
    let _ = writeln!(out, "  {}  p", names(d.variables()));
    for (k, p) in d.pmf().iter().take(SHOWN_CELLS) {
        let _ = writeln!(out, "  {}  {p}", names(k.iter().map(|v| v.to_string())));
    }
    if d.support_len() > SHOWN_CELLS {
        let _ = writeln!(out, "  ... {} more cells", d.support_len() - SHOWN_CELLS);
    }
}

pub fn validate(a: &ValidateArgs) -> Result<Report> {
    let path = parse::resolve(&a.model);
    let m = match format::read_scm(&path) {
        Ok(m) => m,
        Err(e @ (FormatError::Model(_) | FormatError::Invalid(_))) => {
            let json = json!({ "valid": false, "error": e.to_string() });
            return Ok(Report::new(
                json,
                format!("invalid model: {e}\nvalid=false\n"),
                false,
            ));
        }
        Err(e) => return Err(e.into()),
    };
    let m = match &a.intervene {
        Some(s) => m.apply_intervention(&parse::assignment(s)?)?,
        None => m,
    };
    let g = m.induced_graph();
    if let Some(p) = &a.graph_out {
        write_text(p, &g.to_string())?;
    }
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} endogenous, {} exogenous",
        m.endogenous().len(),
        m.exogenous().len()
    );
    let variables: Vec<Json> = m
        .endogenous()
        .iter()
        .map(|v| json!({ "name": v.id, "range": v.domain.range().map(|r| r.values()) }))
        .collect();
    s.push_str(&g.to_string());

    let (joint, joint_error) = match m.joint_distribution() {
        Ok(d) => {
            let _ = writeln!(s, "joint distribution ({} cells):", d.support_len());
            show_dist(&mut s, &d);
            (dist_json(&d), Json::Null)
        }
        Err(e) => {
            let _ = writeln!(s, "no exact joint: {e}");
            (Json::Null, json!(e.to_string()))
        }
    };

    let query = match &a.query {
        Some(q) => {
            let targets = parse::variables(q)?;
            let layer: Layer = a
                .layer
                .ok_or_else(|| anyhow!("--query needs --layer"))?
                .into();
            let given = a
                .given
                .as_deref()
                .map(parse::assignment)
                .transpose()?
                .unwrap_or_default();
            let d = m.query(&targets, layer, &given)?;
            let cond = match (given.is_empty(), layer) {
                (true, _) => String::new(),
                (false, Layer::L1) => format!(" | {}", a.given.as_deref().unwrap_or_default()),
                (false, Layer::L2) => format!(" | do({})", a.given.as_deref().unwrap_or_default()),
            };
            let _ = writeln!(s, "query {layer} P({}{cond}):", names(d.variables()));
            show_dist(&mut s, &d);
            json!({ "layer": layer, "targets": targets, "given": given, "distribution": dist_json(&d) })
        }
        None => Json::Null,
    };
    s.push_str("valid=true\n");
    let json = json!({
        "valid": true,
        "variables": variables,
        "interventions": m.interventions(),
        "graph": graph_json(&g),
        "joint": joint,
        "joint_error": joint_error,
        "query": query,
    });
    Ok(Report::new(json, s, true))
}

fn input_graph(a: &ProjectArgs) -> Result<CausalGraph> {
    match (&a.graph, &a.low) {
        (Some(p), _) => Ok(CausalGraph::parse(&read_text(p)?)?),
        (None, Some(p)) => Ok(read_model(p)?.induced_graph()),
        (None, None) => bail!("project needs --graph or --low"),
    }
}

pub fn project(a: &ProjectArgs) -> Result<Report> {
    if a.complete {
        return complete(a);
    }
    let g = input_graph(a)?;
    let relevant: BTreeSet<VariableId> =
        parse::variables(a.relevant.as_deref().expect("required by clap"))?
            .into_iter()
            .collect();
    let p = latent_project(&g, &relevant)?;
    let adj = mediated_adjacencies(&g, &relevant)?;
    let conf = mediated_confounders(&g, &relevant)?;
    if let Some(out) = &a.graph_out {
        write_text(out, &p.to_string())?;
    }
    let mut s = p.to_string();
    let _ = writeln!(
        s,
        "{} mediated adjacencies, {} mediated confounders",
        adj.len(),
        conf.len()
    );
    let json = json!({
        "relevant": relevant,
        "projection": graph_json(&p),
        "mediated_adjacencies": pairs(&adj),
        "mediated_confounders": pairs(&conf),
    });
    Ok(Report::new(json, s, true))
}

fn complete(a: &ProjectArgs) -> Result<Report> {
    let low = read_model(a.low.as_deref().expect("required by clap"))?;
    let phi = parse::variable_map(a.phi.as_deref().expect("required by clap"))?;
    let hg = CausalGraph::parse(&read_text(
        a.high_graph.as_deref().expect("required by clap"),
    )?)?;
    let dir = a.dir.as_deref().expect("required by clap");
    match construct_consistent_high_level(&low, &phi, &hg) {
        Ok((high, e)) => {
            write_text(&dir.join("high.toml"), &scm_to_toml(&high))?;
            write_text(
                &dir.join("embedding.toml"),
                &embedding_to_toml(&e, None, Some("high")),
            )?;
            let ranges: Vec<Json> = high
                .endogenous()
                .iter()
                .map(|v| json!({ "name": v.id, "size": v.domain.range().map(|r| r.len()) }))
                .collect();
            let s = format!(
                "completed a {}-variable high-level model: high.toml, embedding.toml\ncompleted=true\n",
                high.endogenous().len()
            );
            let json = json!({ "completed": true, "files": ["high.toml", "embedding.toml"], "variables": ranges });
            Ok(Report::new(json, s, true))
        }
        Err(
            e @ (EmbeddingError::NotGraphicallyConsistent(_)
            | EmbeddingError::UnrealizableConfounding { .. }
            | EmbeddingError::EncodingTooLarge { .. }),
        ) => {
            let detail = match &e {
                EmbeddingError::NotGraphicallyConsistent(r) => serde_json::to_value(r)?,
                _ => Json::Null,
            };
            let json = json!({ "completed": false, "error": e.to_string(), "violations": detail });
            Ok(Report::new(json, format!("{e}\ncompleted=false\n"), false))
        }
        Err(e) => Err(e.into()),
    }
}

fn structure_failure(violations: &[causal_embed::embedding::Violation]) -> Report {
    let mut s = String::from("structure: invalid\n");
    for v in violations {
        let _ = writeln!(s, "  {v}");
    }
    s.push_str("embedding=false\n");
    let json = json!({ "structure": violations, "embedding": false });
    Report::new(json, s, false)
}

pub fn check_embedding(a: &CheckArgs) -> Result<Report> {
    let low = read_model(&a.low)?;
    let high = read_model(&a.high)?;
    let e = read_embedding(&a.embedding)?;
    let identity = is_identity_embedding(&e, &low);
    let violations = validate_structure(&e, &low, &high);
    if !violations.is_empty() {
        let mut r = structure_failure(&violations);
        r.json["identity"] = json!(identity);
        return Ok(r);
    }
    let mut s = String::from("structure: ok\n");
    let mut ok = true;
    let mut verdicts = serde_json::Map::new();
    for method in a.method.methods() {
        let r = is_embedding(&e, &low, &high, method)?;
        let name = match method {
            Method::Projection => "projection",
            Method::Mediated => "mediated",
        };
        let _ = writeln!(s, "{name}: {}", if r.holds { "holds" } else { "fails" });
        for v in &r.violations {
            let _ = writeln!(s, "  {v}");
        }
        ok &= r.holds;
        verdicts.insert(name.into(), serde_json::to_value(&r)?);
    }
    let pl = latent_project(&low.induced_graph(), &e.relevant_low())?;
    let ph = latent_project(&high.induced_graph(), e.relevant_high())?;
    let cdag = is_cdag(&pl, &ph, e.phi())?;
    let _ = writeln!(s, "identity: {identity}\nembedding={ok}");
    let json = json!({
        "structure": [],
        "methods": verdicts,
        "projected_low": graph_json(&pl),
        "projected_high": graph_json(&ph),
        "cdag": cdag,
        "identity": identity,
        "embedding": ok,
    });
    Ok(Report::new(json, s, ok))
}

/// Image of the low joint over `R` against the high joint over `R′`.
fn pushed_joint(e: &Embedding, low: &Scm, high: &Scm) -> Result<Json> {
    let targets = high.canonical_order(&e.relevant_high().iter().cloned().collect::<Vec<_>>())?;
    let alphas: Vec<&RangeMap> = targets
        .iter()
        .map(|t| e.alpha(t).ok_or_else(|| anyhow!("no range map for {t}")))
        .collect::<Result<_>>()?;
    let pre: Vec<VariableId> = alphas
        .iter()
        .flat_map(|a| a.preimage().iter().cloned())
        .collect();
    let pushed = pushforward(&alphas, &low.joint_distribution()?.marginal(&pre)?)?;
    let target = high.joint_distribution()?.marginal(&targets)?;
    Ok(json!({
        "tv": pushed.total_variation(&target)?,
        "mass": pushed.total_mass(),
        "distribution": dist_json(&pushed),
    }))
}

pub fn embed_error(a: &ErrorArgs) -> Result<Report> {
    let low = read_model(&a.low)?;
    let high = read_model(&a.high)?;
    let e = read_embedding(&a.embedding)?;
    let layer: Layer = a.layer.into();
    let report = match embedding_error(&e, &low, &high, layer, a.distance.into()) {
        Ok(r) => r,
        Err(EmbeddingError::StructureInvalid(v)) => return Ok(structure_failure(&v)),
        Err(err) => return Err(err.into()),
    };
    let graphical = check_graphs(
        &low.induced_graph(),
        &high.induced_graph(),
        e.phi(),
        Method::Projection,
    )?;
    let consistent = report.is_consistent();
    let mut s = format!(
        "layer={layer} distance={}\nerror={:?}\nconsistent={consistent}\n",
        report.distance, report.error
    );
    if let Some(w) = report.witness.as_ref().filter(|_| !consistent) {
        let _ = writeln!(
            s,
            "  worst: P({} | {}={:?}) distance {}",
            names(&w.y_prime),
            names(&w.x_prime),
            w.x_high,
            w.distance
        );
    }
    if !report.skipped.is_empty() {
        let _ = writeln!(
            s,
            "  {} zero-probability queries skipped",
            report.skipped.len()
        );
    }
    let _ = writeln!(s, "embedding={}", graphical.holds);
    for v in &graphical.violations {
        let _ = writeln!(s, "  {v}");
    }
    let json = json!({
        "layer": layer,
        "distance": report.distance,
        "error": report.error,
        "consistent": consistent,
        "witness": report.witness,
        "queries": report.per_query.len(),
        "cells": if a.cells { serde_json::to_value(&report.per_query)? } else { Json::Null },
        "skipped": report.skipped,
        "embedding": graphical.holds,
        "graph_violations": graphical.violations,
        "pushforward": pushed_joint(&e, &low, &high)?,
    });
    Ok(Report::new(json, s, consistent && graphical.holds))
}

pub fn certify(a: &CertifyArgs) -> Result<Report> {
    let p = format::read_problem(&parse::resolve(&a.problem))?;
    let layer: Layer = a.layer.into();
    let red = match reduce(&p) {
        Ok(r) => r,
        Err(e @ MarginalError::Embedding { .. }) => {
            let json = json!({ "holds": false, "error": e.to_string() });
            return Ok(Report::new(json, format!("{e}\nholds=false\n"), false));
        }
        Err(e) => return Err(e.into()),
    };
    let mut s = String::new();
    let fixed: Vec<String> = red.fixed_at(layer).iter().map(|f| f.to_string()).collect();
    let _ = writeln!(s, "fixed at {layer}: {}", fixed.join(" "));
    let mut compatible = true;
    for o in &red.overlaps {
        let _ = writeln!(
            s,
            "overlap {}-{} on {}: max TV {} over {} queries",
            o.first,
            o.second,
            names(&o.shared),
            o.max_tv,
            o.compared
        );
        compatible &= o.max_tv <= causal_embed::PROB_TOLERANCE;
    }
    let certificate = match &p.candidate {
        Some(_) => Some(certify_solution(&p, layer)?),
        None => None,
    };
    let holds = match &certificate {
        Some(c) => {
            let _ = writeln!(
                s,
                "certificate: {}",
                if c.holds { "holds" } else { "fails" }
            );
            for v in &c.violations {
                let _ = writeln!(
                    s,
                    "  embedding {} {}: {}",
                    v.embedding, v.condition, v.detail
                );
            }
            c.holds
        }
        None => {
            let _ = writeln!(
                s,
                "no candidate; marginals {}",
                if compatible { "agree" } else { "disagree" }
            );
            compatible
        }
    };
    let _ = writeln!(s, "holds={holds}");
    let json = json!({
        "layer": layer,
        "fixed": fixed,
        "overlaps": red.overlaps,
        "summaries": if a.summaries { serde_json::to_value(&red.summaries)? } else { Json::Null },
        "certificate": certificate,
        "holds": holds,
    });
    Ok(Report::new(json, s, holds))
}

fn file_entry(name: &str, d: &Dataset) -> Json {
    json!({ "file": name, "rows": d.n_rows(), "columns": d.columns() })
}

pub fn gen_ecosystem(a: &GenArgs) -> Result<Report> {
    fs::create_dir_all(&a.dir).with_context(|| format!("creating {}", a.dir.display()))?;
    let mut files = Vec::new();
    let mut s = String::new();
    if let Some(model) = &a.model {
        let m = read_model(model)?;
        let d = sample(&m, a.rows.expect("required by clap"), a.seed)?;
        write_dataset(&a.dir.join("sample.csv"), &d)?;
        files.push(file_entry("sample.csv", &d));
        let _ = writeln!(s, "sample.csv: {} rows", d.n_rows());
    } else {
        let data = match EcosystemLayout::from(a.layout) {
            EcosystemLayout::Figure => generate_ecosystem_datasets(a.seed),
            layout => generate_with_layout(a.seed, layout),
        };
        for (name, d) in [
            ("x1.csv", &data.x1),
            ("x2.csv", &data.x2),
            ("eval.csv", &data.eval),
        ] {
            write_dataset(&a.dir.join(name), d)?;
            files.push(file_entry(name, d));
            let _ = writeln!(s, "{name}: {} rows over {}", d.n_rows(), names(d.columns()));
        }
        let embeddings = [
            ("x1_embedding.toml", data.x1_embedding()),
            ("x2_embedding.toml", data.x2_embedding()),
            (
                "truth_embedding.toml",
                causal_embed::fixtures::truth_embedding(),
            ),
        ];
        for (name, e) in &embeddings {
            write_text(&a.dir.join(name), &embedding_to_toml(e, None, None))?;
            files.push(json!({ "file": name }));
        }
        write_text(
            &a.dir.join("ground_truth.toml"),
            &scm_to_toml(&ecosystem_ground_truth()),
        )?;
        files.push(json!({ "file": "ground_truth.toml" }));
        let _ = writeln!(
            s,
            "embeddings: x1_embedding.toml x2_embedding.toml truth_embedding.toml"
        );
    }
    let layout = match a.layout {
        LayoutArg::Figure => "figure",
        LayoutArg::Prose => "prose",
    };
    let json = json!({
        "seed": a.seed,
        "layout": if a.model.is_some() { Json::Null } else { json!(layout) },
        "files": files,
    });
    Ok(Report::new(json, s, true))
}

/// A dataset reference restricted to `vars`, transformed first when it names
/// an embedding.
fn load_view(spec: &str, vars: &[VariableId]) -> Result<Dataset> {
    let (data, emb) = parse::data_ref(spec);
    let mut d = read_dataset(&data)?;
    if let Some(e) = emb {
        d = transform_dataset(&d, &read_embedding(&e)?)?;
    }
    Ok(d.select(vars)?)
}

struct KlRow {
    label: String,
    rows: usize,
    kl: Option<f64>,
}

fn kl_table(
    reference: &Dataset,
    estimates: &[(String, Option<Dataset>, usize)],
    vars: &[VariableId],
    bins: &BinSpec,
) -> Result<Vec<KlRow>> {
    let p = empirical_distribution(reference, vars, bins)?;
    estimates
        .iter()
        .map(|(label, d, rows)| {
            let kl = match d {
                Some(d) => Some(kl_divergence(&p, &empirical_distribution(d, vars, bins)?)?),
                None => None,
            };
            Ok(KlRow {
                label: label.clone(),
                rows: *rows,
                kl,
            })
        })
        .collect()
}

fn kl_report(
    reference: &str,
    ref_rows: usize,
    vars: &[VariableId],
    bins: &BinSpec,
    rows: &[KlRow],
    s: &mut String,
) -> Json {
    let _ = writeln!(
        s,
        "KL(reference || estimate) for P̂({}), reference {reference} ({ref_rows} rows)",
        names(vars)
    );
    let width = rows.iter().map(|r| r.label.len()).max().unwrap_or(0);
    for r in rows {
        let kl = r.kl.map_or("n/a".to_string(), |k| format!("{k:.6}"));
        let _ = writeln!(s, "  {:<width$}  {:>7}  {kl}", r.label, r.rows);
    }
    json!({
        "reference": reference,
        "reference_rows": ref_rows,
        "variables": vars,
        "bins": bins,
        "estimates": rows.iter().map(|r| json!({ "label": r.label, "rows": r.rows, "kl": r.kl })).collect::<Vec<_>>(),
    })
}

pub fn merge_cmd(a: &MergeArgs) -> Result<Report> {
    let mut inputs = Vec::new();
    for spec in &a.inputs {
        let (data, emb) = parse::data_ref(spec);
        let emb = emb.ok_or_else(|| anyhow!("merge input {spec:?} needs @EMBEDDING"))?;
        inputs.push((read_dataset(&data)?, read_embedding(&emb)?));
    }
    let schema = match &a.schema {
        Some(s) => parse::variables(s)?,
        None => {
            let mut out: Vec<VariableId> = Vec::new();
            for v in inputs.iter().flat_map(|(_, e)| e.relevant_high().iter()) {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            out
        }
    };
    let plan = MergePlan {
        inputs,
        target_schema: schema.clone(),
        imputer: KnnConfig { k: a.k },
    };
    let stacked = stack(&plan)?;
    let pattern = missingness_pattern(&stacked);
    let merged = merge(&plan)?;
    write_dataset(&a.csv, &merged)?;

    let mut s = format!("merged {} rows over {}\n", merged.n_rows(), names(&schema));
    let per_input: Vec<Json> = a
        .inputs
        .iter()
        .zip(&plan.inputs)
        .map(|(spec, (d, e))| json!({ "input": spec, "rows": d.n_rows(), "columns": e.relevant_high() }))
        .collect();
    for (spec, (d, _)) in a.inputs.iter().zip(&plan.inputs) {
        let _ = writeln!(s, "  {spec}: {} rows", d.n_rows());
    }
    let _ = writeln!(s, "missingness pattern:");
    let pattern_json: Vec<Json> = pattern
        .iter()
        .map(|(observed, n)| {
            let cols: Vec<&str> = schema
                .iter()
                .zip(observed)
                .filter(|(_, o)| **o)
                .map(|(c, _)| c.as_str())
                .collect();
            let _ = writeln!(s, "  {n:>7}  {}", cols.join(","));
            json!({ "observed": cols, "rows": n })
        })
        .collect();
    let _ = writeln!(
        s,
        "imputed {} cells with k={}",
        stacked.missing_count(),
        a.k
    );

    let kl = match (&a.reference, &a.vars) {
        (Some(reference), Some(vars)) => {
            let vars = parse::variables(vars)?;
            let bins = parse::bins(&a.bins)?;
            let ref_data = load_view(reference, &vars)?;
            let mut estimates = Vec::new();
            for (spec, (d, e)) in a.inputs.iter().zip(&plan.inputs) {
                let view = transform_dataset(d, e)?.select(&vars).ok();
                estimates.push((spec.clone(), view, d.n_rows()));
            }
            estimates.push((
                "merged".to_string(),
                Some(merged.select(&vars)?),
                merged.n_rows(),
            ));
            let rows = kl_table(&ref_data, &estimates, &vars, &bins)?;
            kl_report(reference, ref_data.n_rows(), &vars, &bins, &rows, &mut s)
        }
        _ => Json::Null,
    };
    let json = json!({
        "schema": schema,
        "k": a.k,
        "inputs": per_input,
        "rows": merged.n_rows(),
        "missing_before": stacked.missing_count(),
        "missing_after": merged.missing_count(),
        "pattern": pattern_json,
        "kl": kl,
    });
    Ok(Report::new(json, s, true))
}

pub fn kl(a: &KlArgs) -> Result<Report> {
    let vars = parse::variables(&a.vars)?;
    let bins = parse::bins(&a.bins)?;
    let reference = load_view(&a.reference, &vars)?;
    let mut estimates = Vec::new();
    for spec in &a.estimates {
        let d = load_view(spec, &vars)?;
        let n = d.n_rows();
        estimates.push((spec.clone(), Some(d), n));
    }
    let rows = kl_table(&reference, &estimates, &vars, &bins)?;
    let mut s = String::new();
    let json = kl_report(
        &a.reference,
        reference.n_rows(),
        &vars,
        &bins,
        &rows,
        &mut s,
    );
    Ok(Report::new(json, s, true))
}

fn bundles(only: Option<&str>) -> Result<Vec<causal_embed::fixtures::FixtureBundle>> {
    let all = all_bundles();
    match only {
        None => Ok(all),
        Some(name) => {
            let known = names(all.iter().map(|b| b.name.as_str()));
            let picked: Vec<_> = all.into_iter().filter(|b| b.name == name).collect();
            if picked.is_empty() {
                bail!("unknown bundle {name:?} (known: {known})");
            }
            Ok(picked)
        }
    }
}

pub fn fixtures(a: &FixturesArgs) -> Result<Report> {
    match &a.action {
        FixturesAction::Export { dir, bundle } => {
            let mut written = Vec::new();
            for b in bundles(bundle.as_deref())? {
                for p in export_bundle(&b, dir)? {
                    let rel: PathBuf = p.strip_prefix(dir).map(Path::to_path_buf).unwrap_or(p);
                    written.push(rel.to_string_lossy().replace('\\', "/"));
                }
            }
            let s = format!("wrote {} files under {}\n", written.len(), dir.display());
            Ok(Report::new(json!({ "files": written }), s, true))
        }
        FixturesAction::Check { bundle } => {
            let mut s = String::new();
            let mut results = Vec::new();
            let mut ok = true;
            for b in bundles(bundle.as_deref())? {
                for o in b.check()? {
                    let check = serde_json::to_value(&o.expectation)?;
                    let tag = check["check"].as_str().unwrap_or("?").to_string();
                    let _ = writeln!(
                        s,
                        "{} {}/{tag}: {}",
                        if o.passed { "pass" } else { "FAIL" },
                        b.name,
                        o.observed
                    );
                    ok &= o.passed;
                    results.push(json!({ "bundle": b.name, "passed": o.passed, "observed": o.observed, "expectation": check }));
                }
            }
            let failed = results
                .iter()
                .filter(|r| r["passed"] == json!(false))
                .count();
            let _ = writeln!(s, "{} checks, {failed} failed", results.len());
            Ok(Report::new(
                json!({ "results": results, "failed": failed }),
                s,
                ok,
            ))
        }
    }
}
