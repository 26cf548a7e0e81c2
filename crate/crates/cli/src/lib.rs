//! The `causal-embed` command line.
//!
//! Every subcommand writes a JSON report to `--out` (if given) and a short
//! human summary to standard output. Exit status is 0 for a positive verdict,
//! 1 for a negative one (invalid embedding, failed certificate, ...) and 2 for
//! usage or I/O errors. `CAUSAL_EMBED_THREADS` caps the worker pool.

pub mod args;
mod commands;
mod parse;

use std::ffi::OsString;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use clap::Parser;
use serde_json::json;

use args::{Cli, Command};
pub use commands::Report;

pub const THREADS_VAR: &str = "CAUSAL_EMBED_THREADS";

/// Library operations reachable from each subcommand.
pub const COMMAND_TABLE: &[(&str, &[&str])] = &[
    (
        "validate",
        &[
            "induced_graph",
            "apply_intervention",
            "joint_distribution",
            "query",
        ],
    ),
    (
        "project",
        &[
            "latent_project",
            "mediated_adjacencies",
            "mediated_confounders",
            "construct_consistent_high_level",
        ],
    ),
    (
        "check-embedding",
        &[
            "validate_structure",
            "is_embedding",
            "is_cdag",
            "is_identity_embedding",
        ],
    ),
    ("embed-error", &["embedding_error", "pushforward"]),
    ("certify", &["reduce", "certify_solution"]),
    (
        "gen-ecosystem",
        &[
            "ecosystem_ground_truth",
            "generate_ecosystem_datasets",
            "sample",
        ],
    ),
    (
        "merge",
        &[
            "transform_dataset",
            "concat_with_missing",
            "knn_impute",
            "merge",
        ],
    ),
    ("kl", &["empirical_distribution", "kl_divergence"]),
    ("fixtures", &["counterexample_b3", "nonuniqueness_c1"]),
];

fn name(c: &Command) -> &'static str {
    match c {
        Command::Validate(_) => "validate",
        Command::Project(_) => "project",
        Command::CheckEmbedding(_) => "check-embedding",
        Command::EmbedError(_) => "embed-error",
        Command::Certify(_) => "certify",
        Command::GenEcosystem(_) => "gen-ecosystem",
        Command::Merge(_) => "merge",
        Command::Kl(_) => "kl",
        Command::Fixtures(_) => "fixtures",
    }
}

pub fn execute(c: &Command) -> Result<Report> {
    let mut r = match c {
        Command::Validate(a) => commands::validate(a),
        Command::Project(a) => commands::project(a),
        Command::CheckEmbedding(a) => commands::check_embedding(a),
        Command::EmbedError(a) => commands::embed_error(a),
        Command::Certify(a) => commands::certify(a),
        Command::GenEcosystem(a) => commands::gen_ecosystem(a),
        Command::Merge(a) => commands::merge_cmd(a),
        Command::Kl(a) => commands::kl(a),
        Command::Fixtures(a) => commands::fixtures(a),
    }?;
    if let Some(obj) = r.json.as_object_mut() {
        obj.insert("command".into(), json!(name(c)));
        obj.insert("ok".into(), json!(r.ok));
    }
    Ok(r)
}

fn configure_threads() -> Result<()> {
    let Ok(s) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = s
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| anyhow!("{THREADS_VAR} must be a positive integer, got {s:?}"))?;
    // A pool may already exist when `run` is called twice in one process.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn write_report(path: &Path, json: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(json)?;
    text.push('\n');
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = configure_threads()
        .and_then(|_| execute(&cli.command))
        .and_then(|r| {
            if let Some(out) = &cli.out {
                write_report(out, &r.json)?;
            }
            Ok(r)
        });
    match outcome {
        Ok(r) => {
            print!("{}", r.summary);
            i32::from(!r.ok)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}
