use facemotion::checkpoint;
use facemotion::landmarks::{normalize, LandmarkSequence, RoleIndices};
use facemotion::mesh::{build_frame_graph, delaunay_edges, NormAdjacency};
use facemotion::model::{init_params_with, ModelShape};
use proptest::prelude::*;

const ROLES: RoleIndices = RoleIndices {
    nose_tip: 0,
    left_inner_canthus: 1,
    right_inner_canthus: 2,
};

/// Sequences whose canthi are well apart so normalization is defined.
fn sequences() -> impl Strategy<Value = LandmarkSequence> {
    (1usize..6, 3usize..12).prop_flat_map(|(frames, count)| {
        prop::collection::vec(-100.0f64..100.0, frames * count * 3).prop_map(move |mut coords| {
            for t in 0..frames {
                let base = t * count * 3;
                coords[base + 3] = coords[base + 6] + 1.0 + coords[base + 3].abs();
            }
            LandmarkSequence::new(coords, frames, count, ROLES).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn landmark_bytes_round_trip_at_stored_precision(seq in sequences()) {
        let back = LandmarkSequence::from_bytes(&seq.to_bytes().unwrap(), "prop").unwrap();
        prop_assert_eq!(back.frame_count(), seq.frame_count());
        prop_assert_eq!(back.landmark_count(), seq.landmark_count());
        for (a, b) in seq.coords().iter().zip(back.coords()) {
            prop_assert_eq!(*a as f32 as f64, *b);
        }
        let again = LandmarkSequence::from_bytes(&back.to_bytes().unwrap(), "prop").unwrap();
        prop_assert_eq!(again, back);
    }

    #[test]
    fn normalization_pins_nose_and_canthi(seq in sequences()) {
        let n = normalize(&seq).unwrap();
        for t in 0..n.frame_count() {
            prop_assert_eq!(n.point(t, 0), [0.0, 0.0, 0.0]);
            prop_assert!((n.intercanthal_distance(t) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn planar_graph_edge_count_is_bounded(points in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..40)) {
        let pts: Vec<[f64; 2]> = points.iter().map(|&(x, y)| [x, y]).collect();
        if let Ok(edges) = delaunay_edges(&pts) {
            prop_assert!(edges.len() <= 3 * pts.len() - 3);
            prop_assert!(edges.iter().all(|&(i, j)| i < j && j < pts.len()));
            let mut sorted = edges.clone();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), edges.len());
        }
    }

    #[test]
    fn normalized_adjacency_is_symmetric_and_degree_scaled(
        n in 2usize..12,
        raw in prop::collection::vec((0usize..12, 0usize..12), 0..40),
    ) {
        let edges: Vec<(usize, usize)> = raw.into_iter().map(|(i, j)| (i % n, j % n)).filter(|(i, j)| i != j).collect();
        let a = NormAdjacency::from_edges(n, &edges).to_dense();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((a[[i, j]] - a[[j, i]]).abs() < 1e-15);
            }
            // rows of D^-1/2 (A+I) D^-1/2 weighted by sqrt(deg) sum to sqrt(deg)
            let deg = (0..n).filter(|&j| a[[i, j]] > 0.0).count() as f64;
            let weighted: f64 = (0..n).filter(|&j| a[[i, j]] > 0.0).map(|j| a[[i, j]] / a[[j, j]].sqrt()).sum();
            prop_assert!((weighted - deg.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn frame_graphs_cover_every_landmark(coords in prop::collection::vec(-5.0f64..5.0, 30..90)) {
        let usable = coords.len() / 3 * 3;
        if let Ok(graph) = build_frame_graph(&coords[..usable]) {
            prop_assert_eq!(graph.node_count(), usable / 3);
            prop_assert!(graph.degrees().iter().all(|&d| d > 0));
        }
    }

    #[test]
    fn checkpoints_round_trip_exactly(dims in prop::collection::vec(1usize..9, 1..4), seed in any::<u64>()) {
        let params = init_params_with(&ModelShape { input_dim: 3, layer_dims: dims }, seed);
        let bytes = checkpoint::to_bytes(&params);
        prop_assert_eq!(checkpoint::from_bytes(&bytes).unwrap(), params);
        prop_assert!(checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }
}
