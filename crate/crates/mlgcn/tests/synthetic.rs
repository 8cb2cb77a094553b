use mlgcn::synth::{generate, planted_conditional, planted_pairs, SynthConfig};

fn config(samples: usize, strength: f64, noise: f64, seed: u64) -> SynthConfig {
    SynthConfig { labels: 6, dim: 12, samples, strength, base_rate: 0.2, noise, seed }
}

fn conditional(data: &mlgcn::dataset::FeatureDataset, given: usize, target: usize) -> (f64, usize) {
    let with_given: Vec<_> = data.samples.iter().filter(|s| s.labels.contains(&given)).collect();
    let both = with_given.iter().filter(|s| s.labels.contains(&target)).count();
    (both as f64 / with_given.len() as f64, with_given.len())
}

#[test]
fn full_strength_pairs_co_occur() {
    let data = generate(&config(10_000, 1.0, 0.1, 4)).unwrap();
    let (p, _) = conditional(&data, 0, 1);
    assert!(p > 0.9, "P(L1|L0) = {p}");
}

#[test]
fn empirical_conditionals_match_planted_values() {
    let (q, s) = (0.2, 0.6);
    let data = generate(&config(20_000, s, 0.1, 8)).unwrap();
    let planted = planted_conditional(q, s);
    for (a, b) in planted_pairs(6) {
        for (given, target) in [(a, b), (b, a)] {
            let (p, n) = conditional(&data, given, target);
            let se = (planted * (1.0 - planted) / n as f64).sqrt();
            assert!((p - planted).abs() < 3.0 * se, "pair ({given},{target}): {p} vs {planted}");
        }
    }
    // labels from different pairs stay independent
    let marginal = q + (1.0 - q) * q * s;
    let (p, n) = conditional(&data, 0, 2);
    let se = (marginal * (1.0 - marginal) / n as f64).sqrt();
    assert!((p - marginal).abs() < 3.0 * se);
}

#[test]
fn noiseless_features_depend_only_on_labels() {
    let data = generate(&config(300, 0.5, 0.0, 1)).unwrap();
    for i in 0..data.len() {
        for j in 0..i {
            if data.samples[i].labels == data.samples[j].labels {
                assert_eq!(data.features.row(i), data.features.row(j));
            }
        }
    }
}

#[test]
fn seed_fixes_the_dataset() {
    assert_eq!(generate(&config(50, 0.7, 0.3, 2)).unwrap(), generate(&config(50, 0.7, 0.3, 2)).unwrap());
    assert_ne!(generate(&config(50, 0.7, 0.3, 2)).unwrap(), generate(&config(50, 0.7, 0.3, 3)).unwrap());
}

#[test]
fn invalid_configurations() {
    assert!(generate(&SynthConfig { labels: 1, ..config(10, 0.5, 0.1, 0) }).is_err());
    assert!(generate(&SynthConfig { dim: 3, ..config(10, 0.5, 0.1, 0) }).is_err());
    assert!(generate(&config(10, 1.5, 0.1, 0)).is_err());
    assert!(generate(&config(10, 0.5, -1.0, 0)).is_err());
}
