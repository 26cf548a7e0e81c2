use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use causal_embed::merge::{Bin, BinSpec, DEFAULT_BIN_WIDTH};
use causal_embed::{Value, VariableId, VariableMap};

use crate::args::BinArgs;

pub fn variable(s: &str) -> Result<VariableId> {
    VariableId::try_new(s.trim()).ok_or_else(|| anyhow!("invalid variable name {s:?}"))
}

/// `A,B,C`.
pub fn variables(s: &str) -> Result<Vec<VariableId>> {
    let vars: Vec<VariableId> = s.split(',').map(variable).collect::<Result<_>>()?;
    let mut seen = std::collections::BTreeSet::new();
    for v in &vars {
        if !seen.insert(v) {
            bail!("{v} listed twice in {s:?}");
        }
    }
    Ok(vars)
}

/// `X=1,Y=0`.
pub fn assignment(s: &str) -> Result<BTreeMap<VariableId, Value>> {
    let mut out = BTreeMap::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| anyhow!("expected VAR=VALUE, got {part:?}"))?;
        let v: Value = v
            .trim()
            .parse()
            .with_context(|| format!("value of {k:?}"))?;
        if out.insert(variable(k)?, v).is_some() {
            bail!("{k} assigned twice");
        }
    }
    Ok(out)
}

/// `X1=X',X2=X'`.
pub fn variable_map(s: &str) -> Result<VariableMap> {
    let mut pairs = Vec::new();
    for part in s.split(',') {
        let (a, b) = part
            .split_once('=')
            .ok_or_else(|| anyhow!("expected LOW=HIGH, got {part:?}"))?;
        pairs.push((variable(a)?, variable(b)?));
    }
    Ok(VariableMap::new(pairs)?)
}

/// An existing path, or the same path with `.toml` appended.
pub fn resolve(p: &Path) -> PathBuf {
    if !p.exists() && p.extension().is_none() {
        let t = p.with_extension("toml");
        if t.exists() {
            return t;
        }
    }
    p.to_path_buf()
}

/// `DATA@EMBEDDING` or a bare `DATA`.
pub fn data_ref(s: &str) -> (PathBuf, Option<PathBuf>) {
    match s.rsplit_once('@') {
        Some((d, e)) => (PathBuf::from(d), Some(resolve(Path::new(e)))),
        None => (PathBuf::from(s), None),
    }
}

pub fn bins(a: &BinArgs) -> Result<BinSpec> {
    let mut spec = BinSpec::uniform(a.bins.unwrap_or(DEFAULT_BIN_WIDTH));
    for s in &a.per_variable {
        let (v, rest) = s
            .split_once('=')
            .ok_or_else(|| anyhow!("expected VAR=WIDTH[:ORIGIN], got {s:?}"))?;
        let (w, o) = rest.split_once(':').unwrap_or((rest, "0"));
        let bin = Bin {
            width: w
                .trim()
                .parse()
                .with_context(|| format!("bin width in {s:?}"))?,
            origin: o
                .trim()
                .parse()
                .with_context(|| format!("bin origin in {s:?}"))?,
        };
        spec = spec.with(variable(v)?, bin);
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignments() {
        let a = assignment("X=1, Y=-2").unwrap();
        assert_eq!(a[&VariableId::new("Y")], -2);
        assert!(assignment("X=1,X=2").is_err());
        assert!(assignment("X").is_err());
    }

    #[test]
    fn data_refs() {
        assert_eq!(data_ref("a.csv"), (PathBuf::from("a.csv"), None));
        assert_eq!(data_ref("a.csv@e.toml").1, Some(PathBuf::from("e.toml")));
    }

    #[test]
    fn bin_specs() {
        let a = BinArgs {
            bins: Some(25.0),
            per_variable: vec!["Deer=10:5".into()],
        };
        let b = bins(&a).unwrap();
        assert_eq!(
            b.bin(&VariableId::new("Deer")),
            Bin {
                width: 10.0,
                origin: 5.0
            }
        );
        assert_eq!(b.bin(&VariableId::new("Other")).width, 25.0);
    }
}
