//! Exact L1/L2 evaluation by enumerating the exogenous grid.

use std::collections::{BTreeMap, BTreeSet};

use super::{Domain, ExogenousLaw, Layer, Odometer, Scm, ScmError};
use crate::distribution::DistributionError;
use crate::{DiscreteDistribution, Value, VariableId};

impl Scm {
    /// Exogenous variables feeding at least one non-intervened function.
    fn active_exogenous(&self) -> Vec<usize> {
        let mut used = BTreeSet::new();
        for i in 0..self.endogenous.len() {
            if self.intervened_value(i).is_none() {
                used.extend(self.node_exogenous(i).iter().copied());
            }
        }
        used.into_iter().collect()
    }

    /// Exact joint over all endogenous variables in declaration order,
    /// honouring the model's interventions.
    pub fn joint_distribution(&self) -> Result<DiscreteDistribution, ScmError> {
        for e in &self.endogenous {
            if matches!(e.domain, Domain::Continuous) {
                return Err(ScmError::ContinuousDomain(e.id.clone()));
            }
        }
        let active = self.active_exogenous();
        let mut cells: Vec<&[(Value, f64)]> = Vec::with_capacity(active.len());
        for &u in &active {
            match &self.exogenous[u].law {
                ExogenousLaw::Tabular(c) => cells.push(c.as_slice()),
                ExogenousLaw::Normal { .. } => {
                    return Err(ScmError::ContinuousExogenous(self.exogenous[u].id.clone()))
                }
            }
        }
        // Slot of each exogenous variable within the grid point, if active.
        let mut slot = vec![usize::MAX; self.exogenous.len()];
        for (k, &u) in active.iter().enumerate() {
            slot[u] = k;
        }

        let n = self.endogenous.len();
        let mut values: Vec<Value> = vec![0; n];
        let mut u_vals: Vec<Value> = vec![0; active.len()];
        let mut endo_buf: Vec<Value> = Vec::new();
        let mut exo_buf: Vec<Value> = Vec::new();
        let mut pmf: BTreeMap<Vec<Value>, f64> = BTreeMap::new();
        let mut odo = Odometer::new(cells.iter().map(|c| c.len()).collect());
        loop {
            let mut weight = 1.0;
            for (k, &j) in odo.digits().iter().enumerate() {
                let (v, p) = cells[k][j];
                u_vals[k] = v;
                weight *= p;
            }
            if weight > 0.0 {
                for &i in self.topo() {
                    values[i] = match self.intervened_value(i) {
                        Some(x) => x,
                        None => {
                            endo_buf.clear();
                            endo_buf.extend(self.node_parents(i).iter().map(|&p| values[p]));
                            exo_buf.clear();
                            exo_buf.extend(self.node_exogenous(i).iter().map(|&u| u_vals[slot[u]]));
                            self.eval_exact(i, &endo_buf, &exo_buf)?
                        }
                    };
                }
                *pmf.entry(values.clone()).or_insert(0.0) += weight;
            }
            if !odo.advance() {
                break;
            }
        }
        Ok(DiscreteDistribution::from_weights(self.variables(), pmf)
            .expect("exogenous grid carries positive mass"))
    }

    /// `P(targets | given)` at L1 or `P(targets | do(given))` at L2.
    ///
    /// Targets are returned in declaration order regardless of the order
    /// passed in.
    pub fn query(
        &self,
        targets: &[VariableId],
        layer: Layer,
        given: &BTreeMap<VariableId, Value>,
    ) -> Result<DiscreteDistribution, ScmError> {
        let targets = self.canonical_order(targets)?;
        for (v, x) in given {
            let r = self.range(v)?;
            if !r.contains(*x) {
                return Err(ScmError::ValueOutOfRange {
                    variable: v.clone(),
                    value: *x,
                });
            }
        }
        let joint = match layer {
            Layer::L1 => {
                let joint = self.joint_distribution()?;
                if given.is_empty() {
                    joint
                } else {
                    let vars: Vec<VariableId> = given.keys().cloned().collect();
                    let vals: Vec<Value> = given.values().copied().collect();
                    joint.condition(&vars, &vals).map_err(|e| match e {
                        DistributionError::ZeroProbability => ScmError::ZeroProbabilityCondition,
                        other => unreachable!("conditioning on declared variables: {other}"),
                    })?
                }
            }
            Layer::L2 => self.apply_intervention(given)?.joint_distribution()?,
        };
        Ok(joint
            .marginal(&targets)
            .expect("targets are model variables"))
    }
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use crate::{Layer, VariableId};

    fn b3_low() -> Scm {
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
            .unwrap()
    }

    fn given(pairs: &[(&str, Value)]) -> BTreeMap<VariableId, Value> {
        pairs
            .iter()
            .map(|(k, v)| (VariableId::new(*k), *v))
            .collect()
    }

    #[test]
    fn sum_model_is_uniform_on_z() {
        let z = b3_low()
            .query(&["Z".into()], Layer::L1, &given(&[]))
            .unwrap();
        for v in 0..6 {
            assert!((z.prob(&[v]) - 1.0 / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn intervention_on_x() {
        let m = b3_low();
        let z = m
            .query(&["Z".into()], Layer::L2, &given(&[("X", 2)]))
            .unwrap();
        assert!((z.prob(&[2]) - 0.5).abs() < 1e-12);
        assert!((z.prob(&[3]) - 0.5).abs() < 1e-12);
        let z = m
            .query(&["Z".into()], Layer::L2, &given(&[("X", 4)]))
            .unwrap();
        assert!((z.prob(&[4]) - 0.5).abs() < 1e-12);
        assert!((z.prob(&[5]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn chain_intervention_keeps_upstream_law() {
        let m = ScmBuilder::new()
            .variable("X", &[0, 1])
            .variable("Y", &[0, 1])
            .exogenous("U", ExogenousLaw::bernoulli(0.3))
            .function(StructuralFunction::expr("X", &[], &["U"], "U"))
            .function(StructuralFunction::expr("Y", &["X"], &[], "X"))
            .build()
            .unwrap();
        let d = m
            .query(&["X".into(), "Y".into()], Layer::L2, &given(&[("Y", 1)]))
            .unwrap();
        assert!((d.prob(&[1, 1]) - 0.3).abs() < 1e-12);
        assert!((d.prob(&[0, 1]) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn conditional_tables_reproduce_their_rows() {
        let m = ScmBuilder::new()
            .variable("X", &[0, 1])
            .variable("Y", &[0, 1])
            .conditional("X", &[], &[(vec![], vec![(0, 0.4), (1, 0.6)])])
            .conditional(
                "Y",
                &["X"],
                &[
                    (vec![0], vec![(0, 0.7), (1, 0.3)]),
                    (vec![1], vec![(0, 0.4), (1, 0.6)]),
                ],
            )
            .build()
            .unwrap();
        let y = m.query(&["Y".into()], Layer::L1, &given(&[])).unwrap();
        assert!((y.prob(&[0]) - 0.52).abs() < 1e-12);
        let y1 = m
            .query(&["Y".into()], Layer::L1, &given(&[("X", 1)]))
            .unwrap();
        assert!((y1.prob(&[1]) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn empty_targets_and_zero_probability() {
        let m = b3_low();
        let unit = m.query(&[], Layer::L1, &given(&[])).unwrap();
        assert_eq!(unit, crate::DiscreteDistribution::unit());
        let r = m.query(&["X".into()], Layer::L1, &given(&[("Z", 5), ("Y", 0)]));
        assert_eq!(r, Err(ScmError::ZeroProbabilityCondition));
    }

    #[test]
    fn point_mass_model_is_deterministic() {
        let m = ScmBuilder::new()
            .variable("A", &[0, 1, 2])
            .variable("B", &[0, 1, 2, 3])
            .exogenous("U", ExogenousLaw::point(1))
            .function(StructuralFunction::expr("A", &[], &["U"], "U + 1"))
            .function(StructuralFunction::expr("B", &["A"], &[], "A + 1"))
            .build()
            .unwrap();
        let j = m.joint_distribution().unwrap();
        assert_eq!(j.support_len(), 1);
        assert_eq!(j.prob(&[2, 3]), 1.0);
    }

    #[test]
    fn normal_law_is_rejected() {
        let m = ScmBuilder::new()
            .variable("A", &[0, 1])
            .exogenous(
                "U",
                ExogenousLaw::Normal {
                    mean: 0.0,
                    std: 1.0,
                },
            )
            .function(StructuralFunction::expr(
                "A",
                &[],
                &["U"],
                "max(min(ceil(U), 1), 0)",
            ))
            .build()
            .unwrap();
        assert!(matches!(
            m.joint_distribution(),
            Err(ScmError::ContinuousExogenous(_))
        ));
    }
}
