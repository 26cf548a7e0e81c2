use causal_embed::fixtures::{all_bundles, ecosystem_ground_truth, Expectation};
use causal_embed::scm::sample;
use causal_embed::VariableId;
use statrs::distribution::{ContinuousCDF, Normal};

/// `E[ceil(scale * max(U, floor))]` for `U ~ N(mean, sd)`, summing tail
/// probabilities `P(ceil(X) >= k) = P(X > k - 1)`.
fn rounded_mean(mean: f64, sd: f64, scale: f64, floor: f64) -> f64 {
    let u = Normal::new(mean, sd).unwrap();
    let low = (scale * floor).ceil();
    let mut total = low;
    let mut k = low + 1.0;
    loop {
        let tail = u.sf((k - 1.0) / scale);
        if tail < 1e-15 {
            return total;
        }
        total += tail;
        k += 1.0;
    }
}

#[test]
fn root_node_means_match_their_noise() {
    let n = 100_000;
    let d = sample(&ecosystem_ground_truth(), n, 11).unwrap();
    for (var, sd, scale) in [
        ("Wolves", 0.20, 100.0),
        ("Eagles", 0.15, 10.0),
        ("Humans", 0.25, 15.0),
    ] {
        let xs: Vec<f64> = d
            .column(&VariableId::new(var))
            .unwrap()
            .map(Option::unwrap)
            .collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let var_hat = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var_hat / n as f64).sqrt();
        let want = rounded_mean(1.0, sd, scale, 0.1);
        assert!(
            (m - want).abs() <= 4.0 * se,
            "{var}: sample mean {m}, expected {want} (se {se})"
        );
        assert!(
            xs.iter().all(|x| x.fract() == 0.0 && *x >= scale * 0.1),
            "{var} not rounded up"
        );
    }
}

fn known_conflict(x: &Expectation) -> bool {
    match x {
        Expectation::Certifies { candidate, .. } => candidate == "mp2",
        Expectation::Marginal { model, targets, .. } => {
            model == "mp2" && targets == &[VariableId::new("Z")]
        }
        _ => false,
    }
}

#[test]
fn bundles_check_themselves() {
    let mut conflicts = 0;
    for b in all_bundles() {
        for o in b.check().unwrap() {
            if known_conflict(&o.expectation) {
                // The second reference table only mixes into P(Z | Y) under
                // the marginal P(X), not the P(X | Y) a joint model imposes.
                assert!(
                    !o.passed,
                    "{}: {:?} unexpectedly passed",
                    b.name, o.expectation
                );
                conflicts += 1;
            } else {
                assert!(
                    o.passed,
                    "{}: {:?} failed: {}",
                    b.name, o.expectation, o.observed
                );
            }
        }
    }
    assert_eq!(conflicts, 2);
}
