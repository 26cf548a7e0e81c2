//! Tabular probability mass functions over joint assignments.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Value, VariableId};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistributionError {
    #[error("variable lists differ: {left:?} vs {right:?}")]
    VariableMismatch {
        left: Vec<VariableId>,
        right: Vec<VariableId>,
    },
    #[error("variable {0} is not part of the distribution")]
    UnknownVariable(VariableId),
    #[error("assignment {0:?} has the wrong arity")]
    Arity(Vec<Value>),
    #[error("invalid probability {0}")]
    InvalidProbability(f64),
    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("conditioning event has zero probability")]
    ZeroProbability,
    #[error("duplicate variable {0}")]
    DuplicateVariable(VariableId),
}

/// A normalized pmf over the joint assignments of an ordered variable list.
///
/// Only cells with positive mass are stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    variables: Vec<VariableId>,
    #[serde(with = "cells")]
    pmf: BTreeMap<Vec<Value>, f64>,
}

/// Serializes the pmf as a list of `[assignment, probability]` pairs, since
/// most formats only allow string map keys.
mod cells {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::Value;

    pub fn serialize<S: Serializer>(
        pmf: &BTreeMap<Vec<Value>, f64>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let cells: Vec<(&Vec<Value>, &f64)> = pmf.iter().collect();
        cells.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<Vec<Value>, f64>, D::Error> {
        Ok(Vec::<(Vec<Value>, f64)>::deserialize(d)?
            .into_iter()
            .collect())
    }
}

/// Divergence used to compare two distributions over the same variables.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    /// Total variation, `½ Σ |p − q|`.
    #[default]
    #[serde(rename = "tv")]
    TotalVariation,
    /// Kullback-Leibler `Σ p ln(p/q)`; `+∞` when `q` misses part of `p`'s support.
    #[serde(rename = "kl")]
    KullbackLeibler,
}

impl Distance {
    pub fn compute(
        self,
        p: &DiscreteDistribution,
        q: &DiscreteDistribution,
    ) -> Result<f64, DistributionError> {
        match self {
            Distance::TotalVariation => p.total_variation(q),
            Distance::KullbackLeibler => p.kl_divergence(q),
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::TotalVariation => f.write_str("tv"),
            Distance::KullbackLeibler => f.write_str("kl"),
        }
    }
}

impl std::str::FromStr for Distance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tv" => Ok(Distance::TotalVariation),
            "kl" => Ok(Distance::KullbackLeibler),
            other => Err(format!("unknown distance {other:?} (expected tv or kl)")),
        }
    }
}

fn check_unique(vars: &[VariableId]) -> Result<(), DistributionError> {
    for (i, v) in vars.iter().enumerate() {
        if vars[..i].contains(v) {
            return Err(DistributionError::DuplicateVariable(v.clone()));
        }
    }
    Ok(())
}

impl DiscreteDistribution {
    /// Validates arity, non-negativity and normalization to within 1e-9.
    pub fn new(
        variables: Vec<VariableId>,
        pmf: BTreeMap<Vec<Value>, f64>,
    ) -> Result<Self, DistributionError> {
        check_unique(&variables)?;
        let mut total = 0.0;
        for (k, p) in &pmf {
            if k.len() != variables.len() {
                return Err(DistributionError::Arity(k.clone()));
            }
            if !p.is_finite() || *p < 0.0 {
                return Err(DistributionError::InvalidProbability(*p));
            }
            total += p;
        }
        if (total - 1.0).abs() > crate::PROB_TOLERANCE {
            return Err(DistributionError::NotNormalized(total));
        }
        let pmf = pmf.into_iter().filter(|(_, p)| *p > 0.0).collect();
        Ok(DiscreteDistribution { variables, pmf })
    }

    /// Normalizes non-negative weights. Fails when the total weight is zero.
    pub fn from_weights(
        variables: Vec<VariableId>,
        weights: BTreeMap<Vec<Value>, f64>,
    ) -> Result<Self, DistributionError> {
        check_unique(&variables)?;
        let total: f64 = weights.values().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(DistributionError::ZeroProbability);
        }
        let mut pmf = BTreeMap::new();
        for (k, w) in weights {
            if k.len() != variables.len() {
                return Err(DistributionError::Arity(k));
            }
            if w < 0.0 {
                return Err(DistributionError::InvalidProbability(w));
            }
            if w > 0.0 {
                pmf.insert(k, w / total);
            }
        }
        Ok(DiscreteDistribution { variables, pmf })
    }

    pub fn point_mass(variables: Vec<VariableId>, assignment: Vec<Value>) -> Self {
        assert_eq!(variables.len(), assignment.len());
        let mut pmf = BTreeMap::new();
        pmf.insert(assignment, 1.0);
        DiscreteDistribution { variables, pmf }
    }

    /// Distribution over no variables: mass 1 on the empty tuple.
    pub fn unit() -> Self {
        Self::point_mass(Vec::new(), Vec::new())
    }

    pub fn variables(&self) -> &[VariableId] {
        &self.variables
    }

    pub fn pmf(&self) -> &BTreeMap<Vec<Value>, f64> {
        &self.pmf
    }

    pub fn prob(&self, assignment: &[Value]) -> f64 {
        self.pmf.get(assignment).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.pmf.values().sum()
    }

    pub fn support_len(&self) -> usize {
        self.pmf.len()
    }

    fn positions(&self, vars: &[VariableId]) -> Result<Vec<usize>, DistributionError> {
        vars.iter()
            .map(|v| {
                self.variables
                    .iter()
                    .position(|w| w == v)
                    .ok_or_else(|| DistributionError::UnknownVariable(v.clone()))
            })
            .collect()
    }

    /// Marginal over `vars`, in the order given.
    pub fn marginal(&self, vars: &[VariableId]) -> Result<Self, DistributionError> {
        check_unique(vars)?;
        let idx = self.positions(vars)?;
        if idx.is_empty() {
            return Ok(Self::unit());
        }
        let mut pmf: BTreeMap<Vec<Value>, f64> = BTreeMap::new();
        for (k, p) in &self.pmf {
            let key: Vec<Value> = idx.iter().map(|&i| k[i]).collect();
            *pmf.entry(key).or_insert(0.0) += p;
        }
        Ok(DiscreteDistribution {
            variables: vars.to_vec(),
            pmf,
        })
    }

    /// Probability of the event `vars = values`.
    pub fn event_probability(
        &self,
        vars: &[VariableId],
        values: &[Value],
    ) -> Result<f64, DistributionError> {
        let idx = self.positions(vars)?;
        Ok(self
            .pmf
            .iter()
            .filter(|(k, _)| idx.iter().zip(values).all(|(&i, v)| k[i] == *v))
            .map(|(_, p)| p)
            .sum())
    }

    /// Conditional on `vars = values`, keeping every variable.
    pub fn condition(
        &self,
        vars: &[VariableId],
        values: &[Value],
    ) -> Result<Self, DistributionError> {
        let idx = self.positions(vars)?;
        let kept: BTreeMap<Vec<Value>, f64> = self
            .pmf
            .iter()
            .filter(|(k, _)| idx.iter().zip(values).all(|(&i, v)| k[i] == *v))
            .map(|(k, p)| (k.clone(), *p))
            .collect();
        Self::from_weights(self.variables.clone(), kept)
    }

    fn aligned(&self, other: &Self) -> Result<(), DistributionError> {
        if self.variables != other.variables {
            return Err(DistributionError::VariableMismatch {
                left: self.variables.clone(),
                right: other.variables.clone(),
            });
        }
        Ok(())
    }

    pub fn total_variation(&self, other: &Self) -> Result<f64, DistributionError> {
        self.aligned(other)?;
        let mut sum = 0.0;
        for (k, p) in &self.pmf {
            sum += (p - other.prob(k)).abs();
        }
        for (k, q) in &other.pmf {
            if !self.pmf.contains_key(k) {
                sum += q;
            }
        }
        Ok(0.5 * sum)
    }

    /// `KL(self ‖ other)`, infinite when `other` is zero somewhere on `self`'s support.
    pub fn kl_divergence(&self, other: &Self) -> Result<f64, DistributionError> {
        self.aligned(other)?;
        let mut sum = 0.0;
        for (k, p) in &self.pmf {
            let q = other.prob(k);
            if q <= 0.0 {
                return Ok(f64::INFINITY);
            }
            sum += p * (p / q).ln();
        }
        Ok(sum.max(0.0))
    }

    /// Cellwise equality within `tol`, over the union of supports.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.variables == other.variables
            && self
                .pmf
                .keys()
                .chain(other.pmf.keys())
                .all(|k| (self.prob(k) - other.prob(k)).abs() <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(vars: &[&str], cells: &[(&[Value], f64)]) -> DiscreteDistribution {
        DiscreteDistribution::new(
            vars.iter().map(|v| VariableId::new(*v)).collect(),
            cells.iter().map(|(k, p)| (k.to_vec(), *p)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn rejects_unnormalized() {
        let r = DiscreteDistribution::new(
            vec!["X".into()],
            [(vec![0], 0.5), (vec![1], 0.4)].into_iter().collect(),
        );
        assert!(matches!(r, Err(DistributionError::NotNormalized(_))));
    }

    #[test]
    fn marginal_and_condition() {
        let j = d(
            &["X", "Y"],
            &[
                (&[0, 0], 0.28),
                (&[0, 1], 0.12),
                (&[1, 0], 0.24),
                (&[1, 1], 0.36),
            ],
        );
        let y = j.marginal(&["Y".into()]).unwrap();
        assert!((y.prob(&[0]) - 0.52).abs() < 1e-12);
        let c = j
            .condition(&["X".into()], &[1])
            .unwrap()
            .marginal(&["Y".into()])
            .unwrap();
        assert!((c.prob(&[1]) - 0.6).abs() < 1e-12);
        let z = j.condition(&["X".into()], &[7]);
        assert_eq!(z, Err(DistributionError::ZeroProbability));
    }

    #[test]
    fn distances() {
        let p = d(&["X"], &[(&[0], 1.0)]);
        let q = d(&["X"], &[(&[0], 0.5), (&[1], 0.5)]);
        assert!((p.total_variation(&q).unwrap() - 0.5).abs() < 1e-15);
        assert!((p.kl_divergence(&q).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(q.kl_divergence(&p).unwrap(), f64::INFINITY);
        assert_eq!(p.kl_divergence(&p).unwrap(), 0.0);
        let other = d(&["Y"], &[(&[0], 1.0)]);
        assert!(p.total_variation(&other).is_err());
    }

    #[test]
    fn marginal_over_nothing_is_unit() {
        let p = d(&["X"], &[(&[0], 0.3), (&[1], 0.7)]);
        let u = p.marginal(&[]).unwrap();
        assert_eq!(u, DiscreteDistribution::unit());
    }
}
