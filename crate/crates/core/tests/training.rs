use std::path::PathBuf;

use facemotion::clips::Clip;
use facemotion::dataset::{ClipRecord, DatasetManifest, Split};
use facemotion::landmarks::normalize;
use facemotion::mesh::graphs_for_clip;
use facemotion::model::{init_params_with, ModelShape};
use facemotion::rng;
use facemotion::synth::{generate_identity_with, render_clip, RenderOptions, SignatureConfig};
use facemotion::train::{
    adam_update, evaluate_loss, sample_from, sample_triplets, train_clips, triplet_loss, AdamConfig, AdamState, TrainConfig,
    Triplet,
};
use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn record(clip: &str, driver: &str, target: &str, frames: usize) -> ClipRecord {
    ClipRecord {
        clip_id: clip.into(),
        driver_id: driver.into(),
        target_id: target.into(),
        split: Split::Train,
        source_path: PathBuf::from(format!("{clip}.lmk")),
        frame_count: frames,
    }
}

/// `clips` genuine clips for each of `drivers` clearly distinct identities,
/// rendered without nuisance.
fn genuine_clips(drivers: usize, clips: usize, frames: usize) -> Vec<Clip> {
    let distinct = SignatureConfig {
        appearance_spread: 1.0,
        resting_offset: 0.5,
        oscillation_amplitude: [0.2, 1.0],
        ..SignatureConfig::default()
    };
    let mut out = Vec::new();
    for d in 0..drivers {
        let sig = generate_identity_with(100 + d as u64, &distinct);
        for c in 0..clips {
            let mut stream = rng::stream(5, &["render".into(), (d * clips + c).into()]);
            let seq = render_clip(&sig, &sig, c * 37, frames, &RenderOptions::exact(), &mut stream).unwrap();
            let graphs = graphs_for_clip(&normalize(&seq).unwrap()).unwrap();
            let id = format!("d{d}_c{c}");
            let name = format!("d{d}");
            out.push(Clip {
                record: record(&id, &name, &name, frames),
                graphs,
            });
        }
    }
    out
}

fn all_triplets(clips: &[Clip]) -> Vec<Triplet> {
    let mut out = Vec::new();
    for a in clips {
        for p in clips {
            for n in clips {
                if a.id() != p.id() && a.record.driver_id == p.record.driver_id && n.record.driver_id != a.record.driver_id {
                    out.push(Triplet {
                        anchor: a.id().into(),
                        positive: p.id().into(),
                        negative: n.id().into(),
                    });
                }
            }
        }
    }
    out
}

#[test]
fn small_model_overfits_four_drivers() {
    let clips = genuine_clips(4, 3, 10);
    let config = TrainConfig {
        epochs: 200,
        batch_size: 4,
        learning_rate: 5e-3,
        seed: 3,
        clip_length: 10,
        ..TrainConfig::default()
    };
    let shape = ModelShape {
        input_dim: 3,
        layer_dims: vec![16, 16, 32],
    };
    let initial = init_params_with(&shape, 3);
    let triplets = all_triplets(&clips);
    let before = evaluate_loss(&clips, &triplets, &initial, config.margin).unwrap();
    let outcome = train_clips(&clips, &clips, &config, initial, |_, _| Ok(())).unwrap();
    let after = evaluate_loss(&clips, &triplets, &outcome.final_params, config.margin).unwrap();
    assert_eq!(outcome.log.len(), 200);
    assert!(after < 0.05 * before, "loss {before} -> {after}");
}

#[test]
fn training_is_reproducible_and_independent_of_workers() {
    let clips = genuine_clips(3, 2, 6);
    let shape = ModelShape {
        input_dim: 3,
        layer_dims: vec![8, 8, 8],
    };
    let run = |workers| {
        let config = TrainConfig {
            epochs: 3,
            batch_size: 2,
            learning_rate: 1e-2,
            seed: 9,
            clip_length: 6,
            workers,
            ..TrainConfig::default()
        };
        facemotion::par::with_workers(workers, || {
            train_clips(&clips, &clips, &config, init_params_with(&shape, 9), |_, _| Ok(())).unwrap()
        })
    };
    let a = run(1);
    let b = run(1);
    let c = run(2);
    let bytes = |o: &facemotion::train::TrainOutcome| facemotion::checkpoint::to_bytes(&o.best.params);
    assert_eq!(bytes(&a), bytes(&b));
    assert_eq!(bytes(&a), bytes(&c));
    assert_eq!(a.final_params, c.final_params);
}

#[test]
fn sampled_triplets_respect_driver_constraints() {
    let clips = [("a1", "a"), ("a2", "a"), ("b1", "b"), ("b2", "b")];
    let mut stream = rng::stream(1, &["audit".into()]);
    let triplets = sample_from(&clips, 100, &mut stream).unwrap();
    assert_eq!(triplets.len(), 100);
    let driver = |id: &str| clips.iter().find(|c| c.0 == id).unwrap().1;
    for t in &triplets {
        assert_ne!(t.anchor, t.positive);
        assert_eq!(driver(&t.anchor), driver(&t.positive));
        assert_ne!(driver(&t.anchor), driver(&t.negative));
    }
}

#[test]
fn impostor_clips_can_anchor_and_single_clip_drivers_only_appear_as_negatives() {
    let records = vec![
        record("i_g1", "i", "i", 50),
        record("i_g2", "i", "i", 50),
        record("i_by_j", "j", "i", 50),
        record("j_g1", "j", "j", 50),
        record("k_g1", "k", "k", 50),
    ];
    let manifest = DatasetManifest::from_records(records, "/").unwrap();
    let mut stream = rng::stream(2, &["audit".into()]);
    let triplets = sample_triplets(&manifest, Split::Train, 500, &mut stream).unwrap();
    assert!(triplets.iter().any(|t| t.anchor == "i_by_j"));
    assert!(triplets.iter().all(|t| t.anchor != "k_g1" && t.positive != "k_g1"));
    assert!(triplets.iter().any(|t| t.negative == "k_g1"));
}

#[test]
fn triplet_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let step = 1e-6;
    let mut checked = 0;
    while checked < 20 {
        let d = rng.random_range(2..10);
        let mut v: Vec<Array1<f64>> = (0..3).map(|_| Array1::from_shape_fn(d, |_| rng.random_range(-1.0..1.0))).collect();
        let margin = rng.random_range(0.1..1.0);
        let loss = |v: &[Array1<f64>]| triplet_loss(v[0].view(), v[1].view(), v[2].view(), margin).unwrap().loss;
        let base = triplet_loss(v[0].view(), v[1].view(), v[2].view(), margin).unwrap();
        // stay away from the hinge
        if base.loss < 1e-3 {
            continue;
        }
        checked += 1;
        let grads = [&base.grad_anchor, &base.grad_positive, &base.grad_negative];
        for k in 0..3 {
            for i in 0..d {
                let orig = v[k][i];
                v[k][i] = orig + step;
                let plus = loss(&v);
                v[k][i] = orig - step;
                let minus = loss(&v);
                v[k][i] = orig;
                let numeric = (plus - minus) / (2.0 * step);
                let analytic = grads[k][i];
                let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-4);
                assert!(rel < 1e-6, "vector {k} component {i}: {analytic} vs {numeric}");
            }
        }
    }
}

#[test]
fn adam_minimizes_a_quadratic() {
    let target: f64 = 3.0;
    let config = AdamConfig {
        learning_rate: 1e-2,
        beta1: 0.9,
        beta2: 0.999,
        epsilon: 1e-8,
    };
    let mut x = [-2.0f64];
    let mut state = AdamState::for_sizes([1]);
    let mut steps = 0;
    while (x[0] - target).abs() >= 1e-3 && steps < 5000 {
        let g = [2.0 * (x[0] - target)];
        adam_update(&mut [&mut x[..]], &[&g[..]], &mut state, &config).unwrap();
        steps += 1;
    }
    assert!((x[0] - target).abs() < 1e-3, "x = {} after {steps} steps", x[0]);
}

#[test]
fn first_adam_step_matches_closed_form() {
    let config = AdamConfig {
        learning_rate: 0.1,
        beta1: 0.9,
        beta2: 0.999,
        epsilon: 1e-8,
    };
    let g = [0.5, -2.0, 1e-3];
    let mut x = [1.0, 1.0, 1.0];
    let mut state = AdamState::for_sizes([3]);
    adam_update(&mut [&mut x[..]], &[&g[..]], &mut state, &config).unwrap();
    for (xi, gi) in x.iter().zip(g) {
        // bias-corrected moments are g and g², so the step is lr·g/(|g|+ε)
        let expected = 1.0 - 0.1 * gi / (gi.abs() + 1e-8);
        assert!((xi - expected).abs() < 1e-15, "{xi} vs {expected}");
    }
    assert_eq!(state.step, 1);
}
