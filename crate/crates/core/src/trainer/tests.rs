use super::*;
use crate::datagen::{generate_paired_dataset, split, PairedConfig};

fn toy_data(
    samples: usize,
) -> (
    Vec<MultimodalSequence>,
    Vec<MultimodalSequence>,
    ModelConfig,
) {
    let task = PairedConfig {
        samples,
        words: 3,
        max_generic: 2,
        max_specific: 1,
        grid: 4,
        patch: 2,
        ..PairedConfig::default()
    };
    let data = generate_paired_dataset(&task).unwrap();
    let (tr, va) = split(&data, 0.25, 1).unwrap();
    let model = ModelConfig {
        head_hidden: 16,
        ..ModelConfig::for_paired(&task, 8, 2, 4)
    };
    (tr, va, model)
}

fn quick(objective: Method) -> TrainConfig {
    TrainConfig {
        objective,
        batch_size: 16,
        learning_rate: 1e-2,
        epochs: 2,
        seed: 3,
        ..TrainConfig::default()
    }
}

#[test]
fn zero_learning_rate_changes_nothing() {
    let (tr, va, mc) = toy_data(60);
    let cfg = TrainConfig {
        learning_rate: 0.0,
        epochs: 3,
        ..quick(Method::Cis)
    };
    let out = train(&tr, &va, &mc, &cfg).unwrap();
    let fresh = SpatialTemporalModel::new(mc, cfg.seed).unwrap();
    for ((_, a), (_, b)) in out.model.params().iter().zip(fresh.params().iter()) {
        assert_eq!(a.value, b.value, "{}", a.name);
    }
    assert!(out.log.windows(2).all(|w| w[0].step_ce == w[1].step_ce));
}

#[test]
fn training_is_deterministic() {
    let (tr, va, mc) = toy_data(60);
    for method in [Method::Cis, Method::Larm] {
        let a = train(&tr, &va, &mc, &quick(method)).unwrap();
        let b = train(&tr, &va, &mc, &quick(method)).unwrap();
        assert_eq!(a.log, b.log);
        assert_eq!(a.points, b.points);
    }
}

/// Class given by the sign of the first embedding coordinate.
fn separable(n: usize, seed: u64) -> Vec<MultimodalSequence> {
    use crate::datagen::{Element, Payload};
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let class = i % 2;
            let sign = if class == 0 { 1.0 } else { -1.0 };
            let elements = (0..3)
                .map(|_| {
                    let v = vec![
                        sign * rng.random_range(0.2..1.0),
                        rng.random_range(-1.0..1.0),
                    ];
                    Element::new("embedding", Payload::Embedding(v), 1)
                })
                .collect();
            MultimodalSequence::new(elements, MultimodalSequence::one_hot(class, 2)).unwrap()
        })
        .collect()
}

#[test]
fn cis_without_policy_term_lowers_step_ce() {
    let (tr, va) = (separable(128, 0), separable(64, 1));
    let cfg = TrainConfig {
        lambda: 0.0,
        epochs: 5,
        learning_rate: 3e-3,
        d_model: 8,
        heads: 2,
        head_dim: 4,
        head_hidden: 16,
        ..quick(Method::Cis)
    };
    let mc = cfg.model_config(&tr).unwrap();
    let out = train(&tr, &va, &mc, &cfg).unwrap();
    let ce: Vec<f64> = out.log.iter().map(|r| r.step_ce).collect();
    assert!(ce.windows(2).all(|w| w[1] < w[0]), "{ce:?}");
}

#[test]
fn eval_cadence_and_point_tags() {
    let (tr, va, mc) = toy_data(40);
    let cfg = TrainConfig {
        epochs: 5,
        eval_every: 2,
        mu: 0.05,
        ..quick(Method::Larm)
    };
    let out = train(&tr, &va, &mc, &cfg).unwrap();
    let epochs: Vec<usize> = out.points.iter().map(|p| p.epoch).collect();
    assert_eq!(epochs, vec![2, 4, 5]);
    assert!(out
        .points
        .iter()
        .all(|p| p.mu == 0.05 && (1.0..=4.0).contains(&p.mean_t)));
}

#[test]
fn divergence_names_epoch_and_batch() {
    let (tr, va, mc) = toy_data(40);
    let cfg = TrainConfig {
        mu: f64::MAX,
        ..quick(Method::Larm)
    };
    match train(&tr, &va, &mc, &cfg) {
        Err(Error::Diverged {
            epoch: 1, batch: 1, ..
        }) => {}
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn config_from_toml() {
    let cfg = TrainConfig::from_toml_str("objective = \"larm\"\nmu = 0.1\nepochs = 3\n").unwrap();
    assert_eq!(
        (cfg.objective, cfg.mu, cfg.epochs, cfg.batch_size),
        (Method::Larm, 0.1, 3, 128)
    );
    let err = TrainConfig::from_toml_str("learning_rte = 0.1\n")
        .unwrap_err()
        .to_string();
    assert!(err.contains("learning_rte"), "{err}");
    assert!(TrainConfig::from_toml_str("batch_size = 0\n").is_err());
}

#[test]
fn sweep_cells_and_counts() {
    let (tr, va, mc) = toy_data(40);
    let base = TrainConfig {
        epochs: 2,
        ..quick(Method::Cis)
    };
    let cells = sweep(&tr, &va, &mc, &base, &[1e-3, 1e-1], 2, 2).unwrap();
    assert_eq!(cells.len(), 4);
    let seeds: std::collections::HashSet<u64> = cells.iter().map(|c| c.seed).collect();
    assert_eq!(seeds.len(), 4);
    let points: usize = cells
        .iter()
        .map(|c| c.result.as_ref().unwrap().points.len())
        .sum();
    assert_eq!(points, 4 * 2);

    let serial = sweep(&tr, &va, &mc, &base, &[1e-3, 1e-1], 2, 1).unwrap();
    for (a, b) in cells.iter().zip(&serial) {
        assert_eq!(
            a.result.as_ref().unwrap().log,
            b.result.as_ref().unwrap().log
        );
    }

    let single = sweep(&tr, &va, &mc, &base, &[1e-3], 1, 1).unwrap();
    let direct = train(
        &tr,
        &va,
        &mc,
        &TrainConfig {
            mu: 1e-3,
            seed: single[0].seed,
            ..base.clone()
        },
    )
    .unwrap();
    assert_eq!(single[0].result.as_ref().unwrap().log, direct.log);
    assert!(sweep(&tr, &va, &mc, &base, &[], 1, 1).is_err());
}

#[test]
fn failing_cells_do_not_abort_the_sweep() {
    let (tr, va, mc) = toy_data(40);
    let base = TrainConfig {
        epochs: 1,
        ..quick(Method::Larm)
    };
    let cells = sweep(&tr, &va, &mc, &base, &[1e-2, f64::MAX], 1, 1).unwrap();
    assert!(cells[0].result.is_ok());
    assert!(matches!(cells[1].result, Err(Error::Diverged { .. })));
}
