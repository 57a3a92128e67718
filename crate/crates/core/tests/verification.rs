use facemotion::dataset::{PairLabel, Split};
use facemotion::mesh::build_frame_graph;
use facemotion::model::{encode_clip, init_params, Dropout};
use facemotion::synth::{build_synthetic_manifest, RenderOptions, SynthSpec};
use facemotion::verify::{compute_auc, export_attention, parse_report_scores, roc_points, run_protocol, trapezoid_auc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_scores(rng: &mut ChaCha8Rng, max_len: usize, shift: f64) -> Vec<f64> {
    let n = rng.random_range(1..max_len);
    (0..n).map(|_| rng.random_range(-1.0..1.0) + shift).collect()
}

#[test]
fn strictly_increasing_transforms_leave_roc_and_auc_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let g = random_scores(&mut rng, 40, 0.3);
        let i = random_scores(&mut rng, 40, 0.0);
        let f = |x: &f64| (3.0 * x).exp() + 2.0 * x;
        let (g2, i2): (Vec<f64>, Vec<f64>) = (g.iter().map(f).collect(), i.iter().map(f).collect());
        assert_eq!(compute_auc(&g, &i).unwrap(), compute_auc(&g2, &i2).unwrap());
        let rates = |g: &[f64], i: &[f64]| {
            roc_points(g, i)
                .unwrap()
                .iter()
                .map(|p| (p.false_match_rate, p.true_match_rate))
                .collect::<Vec<_>>()
        };
        assert_eq!(rates(&g, &i), rates(&g2, &i2));
    }
}

#[test]
fn swapping_labels_complements_the_auc() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for k in 0..200 {
        let quantize = |x: f64| if k % 2 == 0 { (x * 4.0).round() / 4.0 } else { x };
        let g: Vec<f64> = random_scores(&mut rng, 30, 0.2).into_iter().map(quantize).collect();
        let i: Vec<f64> = random_scores(&mut rng, 30, 0.0).into_iter().map(quantize).collect();
        let a = compute_auc(&g, &i).unwrap();
        let b = compute_auc(&i, &g).unwrap();
        assert!((a + b - 1.0).abs() < 1e-12);
    }
}

#[test]
fn roc_is_monotone_and_integrates_to_the_auc() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let g = random_scores(&mut rng, 50, 0.1);
        let i = random_scores(&mut rng, 50, 0.0);
        let roc = roc_points(&g, &i).unwrap();
        for w in roc.windows(2) {
            assert!(w[1].false_match_rate >= w[0].false_match_rate);
            assert!(w[1].true_match_rate >= w[0].true_match_rate);
            assert!(w[1].threshold < w[0].threshold);
        }
        assert!((trapezoid_auc(&roc) - compute_auc(&g, &i).unwrap()).abs() <= 1e-12);
    }
}

#[test]
fn attention_of_identical_frames_is_flat() {
    let frame: Vec<f64> = (0..30).map(|k| ((k * 7919) % 13) as f64 / 13.0).collect();
    let graph = build_frame_graph(&frame).unwrap();
    let graphs = vec![graph; 12];
    let out = encode_clip(&graphs, &init_params(4), Dropout::Off).unwrap();
    for a in out.attention.iter() {
        assert!((a - 1.0 / 12.0).abs() < 1e-15);
    }
    assert_eq!(out.t_max, 0);
}

/// Synthetic identities rendered without pose, noise or depth error are told
/// apart even by an untrained encoder, and the exported traces are softmaxes.
#[test]
fn separable_identities_are_verified() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = SynthSpec::new(10, 3, 2, 50, 21);
    spec.render = RenderOptions::exact();
    let data = build_synthetic_manifest(&spec, dir.path()).unwrap();
    let params = init_params(5);
    let report = run_protocol(&data.manifest, Split::Test, &params, 50).unwrap();
    assert_eq!(report.genuine_count, 2 * 3 * 2);
    assert_eq!(report.impostor_count, 2 * 3 * 2);
    assert!(report.auc > 0.99, "AUC {}", report.auc);

    let rows = parse_report_scores(&report.to_text()).unwrap();
    assert_eq!(rows.len(), 24);
    assert_eq!(rows.iter().filter(|r| r.0 == PairLabel::Genuine).count(), 12);

    let ids: Vec<String> = data.manifest.records_in(Split::Test).map(|r| r.clip_id.clone()).collect();
    let traces = export_attention(&data.manifest, &ids, &params, 50).unwrap();
    assert_eq!(traces.len(), ids.len());
    for tr in &traces {
        assert_eq!(tr.alpha.len(), 50);
        assert!((tr.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        assert!(tr.alpha.iter().all(|&a| a <= tr.alpha[tr.t_max]));
    }
}

#[test]
fn records_shorter_than_a_clip_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = build_synthetic_manifest(&SynthSpec::new(10, 2, 1, 20, 1), dir.path()).unwrap();
    assert!(run_protocol(&data.manifest, Split::Test, &init_params(1), 50).is_err());
}
