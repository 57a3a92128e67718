use facemotion_demo::{attention, attention_json, face_mesh_json, roc, roc_json};

#[test]
fn face_mesh_has_every_landmark_and_a_planar_edge_count() {
    let mesh = face_mesh_json(3, 0).unwrap();
    let points = mesh["points"].as_array().unwrap();
    let edges = mesh["edges"].as_array().unwrap();
    assert_eq!(points.len(), 109);
    assert!(edges.len() >= points.len() - 1 && edges.len() <= 3 * points.len() - 3);
}

#[test]
fn roc_reports_auc_and_a_monotone_curve() {
    let out = roc_json("0.9 0.8, 0.7", "0.1,0.75 0.2").unwrap();
    assert!((out["auc"].as_f64().unwrap() - 8.0 / 9.0).abs() < 1e-12);
    let curve = out["points"].as_array().unwrap();
    assert_eq!(curve.first().unwrap()[0].as_f64(), Some(0.0));
    assert_eq!(curve.last().unwrap()[1].as_f64(), Some(1.0));
}

#[test]
fn bad_input_becomes_an_error_object() {
    assert!(roc("1 two", "0").contains("\"error\""));
    assert!(roc("", "0").contains("\"error\""));
    assert!(attention(1, 5).contains("\"error\""));
}

#[test]
fn attention_trace_covers_the_clip_and_shows_the_burst() {
    let out = attention_json(4, 50).unwrap();
    let alpha: Vec<f64> = out["attention"].as_array().unwrap().iter().map(|a| a.as_f64().unwrap()).collect();
    assert_eq!(alpha.len(), 50);
    assert!((alpha.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert_eq!(out["energy"].as_array().unwrap().len(), 50);
    assert_eq!(out["bursts"].as_array().unwrap().len(), 1);
}
