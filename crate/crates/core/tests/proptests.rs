mod common;

use std::collections::BTreeMap;

use causal_embed::embedding::{check_graphs, embedding_error, Method};
use causal_embed::merge::{kl_divergence, Bin};
use causal_embed::{Dataset, DiscreteDistribution, Distance, Embedding, Layer, Value, VariableId};
use common::invariants;
use proptest::prelude::*;

fn run(check: invariants::Check) -> Result<(), TestCaseError> {
    check.map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn joint_distributions_normalize(seed in any::<u64>()) {
        run(invariants::joint_normalizes(seed))?;
    }

    #[test]
    fn interventions_are_point_masses(seed in any::<u64>()) {
        run(invariants::intervention_is_point_mass(seed))?;
    }

    #[test]
    fn projection_is_idempotent(seed in any::<u64>()) {
        run(invariants::projection_is_idempotent(seed))?;
    }

    #[test]
    fn projection_composes(seed in any::<u64>()) {
        run(invariants::projection_composes(seed))?;
    }

    #[test]
    fn pushforward_preserves_mass(seed in any::<u64>()) {
        run(invariants::pushforward_preserves_mass(seed))?;
    }

    #[test]
    fn merge_fills_without_touching_observed_cells(seed in any::<u64>()) {
        run(invariants::merge_fills_without_touching(seed))?;
    }

    #[test]
    fn both_graph_checks_agree(seed in any::<u64>()) {
        let (low, high, phi) = common::graph_check_instance(seed);
        let a = check_graphs(&low, &high, &phi, Method::Projection).unwrap();
        let b = check_graphs(&low, &high, &phi, Method::Mediated).unwrap();
        prop_assert_eq!(a.holds, b.holds);
        prop_assert_eq!(a.violations, b.violations);
    }

    #[test]
    fn identity_embedding_has_zero_error(seed in any::<u64>()) {
        let m = common::random_scm(&mut common::rng(seed), 3, 3);
        let e = Embedding::identity(m.variables());
        for layer in [Layer::L1, Layer::L2] {
            let r = embedding_error(&e, &m, &m, layer, Distance::TotalVariation).unwrap();
            prop_assert!(r.error <= 1e-12, "{} error {}", layer, r.error);
        }
    }

    #[test]
    fn kl_is_nonnegative_and_zero_on_itself(
        p in prop::collection::vec(0.0f64..1.0, 1..8),
        q in prop::collection::vec(0.0f64..1.0, 1..8),
    ) {
        let v = vec![VariableId::new("A")];
        let dist = |w: &[f64]| {
            let cells: BTreeMap<Vec<Value>, f64> = w.iter().enumerate().map(|(i, x)| (vec![i as Value], *x)).collect();
            DiscreteDistribution::from_weights(v.clone(), cells)
        };
        if let (Ok(p), Ok(q)) = (dist(&p), dist(&q)) {
            prop_assert!(kl_divergence(&p, &q).unwrap() >= 0.0);
            prop_assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn bins_are_half_open(x in -1e4f64..1e4, width in 0.5f64..50.0, origin in -10.0f64..10.0) {
        let b = Bin { width, origin };
        let i = b.index(x) as f64;
        prop_assert!(origin + i * width <= x + 1e-9);
        prop_assert!(x < origin + (i + 1.0) * width + 1e-9);
    }

    #[test]
    fn csv_round_trip(rows in prop::collection::vec(prop::collection::vec(prop::option::of(-1e6f64..1e6), 3), 0..20)) {
        let cols = common::ids("C", 3);
        let d = Dataset::new(cols, rows).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.columns(), d.columns());
        prop_assert_eq!(back.n_rows(), d.n_rows());
        for (a, b) in d.rows().iter().zip(back.rows()) {
            for (x, y) in a.iter().zip(b) {
                match (x, y) {
                    (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0)),
                    (None, None) => {}
                    _ => prop_assert!(false, "missingness changed"),
                }
            }
        }
    }
}
