//! Acceptance report: one PASS/FAIL line per criterion, non-zero exit if any
//! line fails. Run with `cargo test -p causal-embed --test acceptance`.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use causal_embed::embedding::{
    check_graphs, construct_consistent_high_level, embedding_error, is_embedding, EmbeddingError,
    Method,
};
use causal_embed::fixtures::{
    alpha1, alpha2, b3_alpha, b3_high, b3_low, c1_alpha1, c1_alpha2, c1_candidate, c1_m1, c1_m2,
    ecosystem_high_level, ecosystem_m1, ecosystem_m2, ecosystem_schema,
    generate_ecosystem_datasets, max_conditional_tv, truth_embedding, ZTable, C1_P1, C1_P2,
    C1_P2_MIXED_UNDER_CONDITIONAL,
};
use causal_embed::graph::latent_project;
use causal_embed::marginal::{certify_solution, MarginalProblem};
use causal_embed::merge::{
    empirical_distribution, kl_divergence, merge, transform_dataset, BinSpec, KnnConfig, MergePlan,
};
use causal_embed::{Dataset, DiscreteDistribution, Distance, Layer, Scm, VariableId};
use common::invariants;

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: &str, pass: bool, detail: impl AsRef<str>) {
        if !pass {
            self.failed += 1;
        }
        println!(
            "[{}] {id}: {}",
            if pass { "PASS" } else { "FAIL" },
            detail.as_ref()
        );
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn graph_checks_agree(rep: &mut Report) {
    let start = Instant::now();
    let (mut yes, mut no, mut disagree) = (0, 0, Vec::new());
    for seed in 0..1000u64 {
        let (low, high, phi) = common::graph_check_instance(seed);
        let a = check_graphs(&low, &high, &phi, Method::Projection).expect("projection check");
        let b = check_graphs(&low, &high, &phi, Method::Mediated).expect("mediated check");
        if a.holds != b.holds {
            disagree.push(seed);
        }
        if a.holds {
            yes += 1;
        } else {
            no += 1;
        }
    }
    let t = start.elapsed();
    rep.line(
        "1 graph checks agree",
        disagree.is_empty() && t < Duration::from_secs(10),
        format!(
            "1000 instances, {yes} hold / {no} fail, {} disagreements {:?}, {}",
            disagree.len(),
            disagree,
            secs(t)
        ),
    );
}

fn counterexample(rep: &mut Report) {
    let (low, high, e) = (b3_low(), b3_high(), b3_alpha());
    let err =
        embedding_error(&e, &low, &high, Layer::L2, Distance::TotalVariation).expect("b3 error");
    let verdicts: Vec<bool> = [Method::Projection, Method::Mediated]
        .into_iter()
        .map(|m| is_embedding(&e, &low, &high, m).expect("b3 verdict").holds)
        .collect();
    rep.line(
        "2 consistent but not an embedding",
        err.error <= 1e-12 && verdicts.iter().all(|h| !h),
        format!(
            "L2 TV error {:e}, is_embedding projection={} mediated={}",
            err.error, verdicts[0], verdicts[1]
        ),
    );
}

fn construction(rep: &mut Report) {
    let start = Instant::now();
    let mut r = common::rng(0x7e57);
    let (mut done, mut worst, mut cyclic, mut unrealizable, mut too_large) = (0, 0.0f64, 0, 0, 0);
    let mut failures = Vec::new();
    while done < 100 && start.elapsed() < Duration::from_secs(60) {
        let low = common::random_scm(&mut r, 4, 3);
        let relevant = common::random_subset(&mut r, &low.variables());
        let phi = common::random_surjection(&mut r, &relevant);
        let projected =
            latent_project(&low.induced_graph(), &common::set(&relevant)).expect("projection");
        let Some(h) = common::cluster_graph(&projected, &phi) else {
            cyclic += 1;
            continue;
        };
        let high_graph = common::elaborate(&mut r, &h, 0.4);
        match construct_consistent_high_level(&low, &phi, &high_graph) {
            Ok((high, e)) => {
                done += 1;
                match embedding_error(&e, &low, &high, Layer::L2, Distance::TotalVariation) {
                    Ok(x) => {
                        worst = worst.max(x.error);
                        if x.error > 1e-9 {
                            failures.push(format!("error {:e}", x.error));
                        }
                    }
                    Err(x) => failures.push(x.to_string()),
                }
            }
            Err(EmbeddingError::UnrealizableConfounding { .. }) => unrealizable += 1,
            Err(EmbeddingError::EncodingTooLarge { .. }) => too_large += 1,
            Err(x) => {
                done += 1;
                failures.push(x.to_string());
            }
        }
    }
    let t = start.elapsed();
    rep.line(
        "3 constructed models are L2-consistent",
        done == 100 && failures.is_empty() && t < Duration::from_secs(60),
        format!(
            "{done} models, max L2 TV error {worst:e}, {} failures {:?}; redrawn: {cyclic} cyclic, {unrealizable} unrealizable, {too_large} too large; {}",
            failures.len(),
            failures.iter().take(3).collect::<Vec<_>>(),
            secs(t)
        ),
    );
}

fn observational(m: &Scm, v: &str) -> Vec<f64> {
    let d = m
        .query(&[VariableId::new(v)], Layer::L1, &BTreeMap::new())
        .expect("marginal");
    vec![d.prob(&[0]), d.prob(&[1])]
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn nonuniqueness(rep: &mut Report) {
    let candidates: [(&str, &ZTable); 3] = [
        ("P1", &C1_P1),
        ("P2", &C1_P2),
        ("P2 mixed under P(X|Y)", &C1_P2_MIXED_UNDER_CONDITIONAL),
    ];
    let models: Vec<Scm> = candidates.iter().map(|(_, z)| c1_candidate(z)).collect();
    for ((name, _), mp) in candidates.iter().zip(&models) {
        let p = MarginalProblem::new(
            vec![c1_m1(), c1_m2()],
            vec![c1_alpha1(), c1_alpha2()],
            Some(mp.clone()),
        )
        .expect("c1 problem");
        let cert = certify_solution(&p, Layer::L1).expect("certificate");
        let errors: Vec<String> = cert
            .checks
            .iter()
            .map(|c| format!("{:e}", c.error.unwrap_or(f64::NAN)))
            .collect();
        let max = cert
            .checks
            .iter()
            .filter_map(|c| c.error)
            .fold(0.0, f64::max);
        let py = observational(mp, "Y");
        let pz = observational(mp, "Z");
        rep.line(
            &format!("4 {name}: identity embeddings certify at L1"),
            cert.holds && max <= 1e-9,
            format!("holds={}, L1 errors [{}]", cert.holds, errors.join(", ")),
        );
        rep.line(
            &format!("4 {name}: P(Y) = (0.52, 0.48)"),
            close(&py, &[0.52, 0.48], 1e-12),
            format!("P(Y) = ({:.15}, {:.15})", py[0], py[1]),
        );
        rep.line(
            &format!("4 {name}: P(Z) = (0.456, 0.544)"),
            close(&pz, &[0.456, 0.544], 1e-12),
            format!("P(Z) = ({:.15}, {:.15})", pz[0], pz[1]),
        );
    }
    let (z, xy) = (["Z"].map(VariableId::new), ["X", "Y"].map(VariableId::new));
    for (k, name) in [(1, "P2"), (2, "P2 mixed under P(X|Y)")] {
        let tv = max_conditional_tv(&models[0], &models[k], &z, &xy).expect("conditional tv");
        rep.line(
            &format!("4 P1 vs {name}: P(Z|X,Y) differ"),
            tv >= 0.1,
            format!("max TV over cells {tv:.6}"),
        );
    }
}

fn deer_squirrels(d: &Dataset) -> DiscreteDistribution {
    let vars = ["Deer", "Squirrels"].map(VariableId::new);
    empirical_distribution(d, &vars, &BinSpec::default()).expect("histogram")
}

fn merging(rep: &mut Report) {
    let start = Instant::now();
    let target = [0.34, 0.77, 0.22];
    let (mut ordered, mut banded) = (0, 0);
    let mut rows = Vec::new();
    for seed in 0..10u64 {
        let data = generate_ecosystem_datasets(seed);
        let v1 = transform_dataset(&data.x1, &data.x1_embedding()).expect("x1 view");
        let v2 = transform_dataset(&data.x2, &data.x2_embedding()).expect("x2 view");
        let plan = MergePlan {
            inputs: vec![
                (data.x1.clone(), data.x1_embedding()),
                (data.x2.clone(), data.x2_embedding()),
            ],
            target_schema: ecosystem_schema(),
            imputer: KnnConfig { k: 2 },
        };
        let merged = merge(&plan).expect("merge");
        let reference =
            deer_squirrels(&transform_dataset(&data.eval, &truth_embedding()).expect("eval view"));
        let kl: Vec<f64> = [&v1, &v2, &merged]
            .iter()
            .map(|d| kl_divergence(&reference, &deer_squirrels(d)).expect("kl"))
            .collect();
        if kl[2] < kl[0].min(kl[1]) {
            ordered += 1;
        }
        if kl
            .iter()
            .zip(target)
            .all(|(k, p)| *k >= p / 3.0 && *k <= p * 3.0)
        {
            banded += 1;
        }
        rows.push(format!(
            "seed {seed}: {:.3}/{:.3}/{:.3}",
            kl[0], kl[1], kl[2]
        ));
    }
    let t = start.elapsed();
    rep.line(
        "5 merged KL below both inputs",
        ordered >= 9 && t < Duration::from_secs(120),
        format!("{ordered}/10 seeds, {}", secs(t)),
    );
    rep.line(
        "5 KL within a factor of 3 of 0.34/0.77/0.22",
        banded == 10,
        format!("{banded}/10 seeds; X1/X2/merged {}", rows.join(", ")),
    );
}

fn ecosystem_embeddings(rep: &mut Report) {
    let high = ecosystem_high_level();
    for (name, e, low) in [
        ("alpha1", alpha1(), ecosystem_m1()),
        ("alpha2", alpha2(), ecosystem_m2()),
    ] {
        for method in [Method::Projection, Method::Mediated] {
            let got = is_embedding(&e, &low, &high, method);
            let detail = match &got {
                Ok(r) if r.holds => "holds".to_string(),
                Ok(r) => format!("{} violations", r.violations.len()),
                Err(x) => x.to_string(),
            };
            rep.line(
                &format!("6 {name} is an embedding ({method:?})"),
                matches!(got, Ok(ref r) if r.holds),
                detail,
            );
        }
    }
}

fn engine_invariants(rep: &mut Report) {
    const SEEDS: u64 = 500;
    for (name, check) in invariants::ALL {
        let failures: Vec<(u64, String)> = (0..SEEDS)
            .filter_map(|s| check(s).err().map(|e| (s, e)))
            .collect();
        let detail = match failures.first() {
            None => format!("{SEEDS} seeds"),
            Some((s, e)) => format!(
                "{} of {SEEDS} seeds fail, first seed {s}: {e}",
                failures.len()
            ),
        };
        rep.line(&format!("7 {name}"), failures.is_empty(), detail);
    }
}

fn main() {
    let mut rep = Report { failed: 0 };
    graph_checks_agree(&mut rep);
    counterexample(&mut rep);
    construction(&mut rep);
    nonuniqueness(&mut rep);
    merging(&mut rep);
    ecosystem_embeddings(&mut rep);
    engine_invariants(&mut rep);
    if rep.failed > 0 {
        println!("{} acceptance lines failed", rep.failed);
        std::process::exit(1);
    }
    println!("all acceptance lines passed");
}
