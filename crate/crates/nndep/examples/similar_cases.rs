//! Case-based evidence: for a query input, retrieve the nearest training
//! cases by activation-pattern Hamming distance. A reviewer can compare the
//! query against these cases to accept or reject the model's prediction —
//! useful exactly where the confidence score is deceptive.
//!
//! ```text
//! cargo run --example similar_cases
//! ```

use nndep::data::{synth_dataset, trace_dataset};
use nndep::evidence::nearest_cases;
use nndep::model::{fine_tune, Model};
use nndep::monitor::build_database;
use nndep::nap::binarize_f32;

fn main() -> nndep::Result<()> {
    let train = synth_dataset(200, 0.07, 8)?;
    let model = Model::init_random(&[2, 32, 16, 2], 1, train.class_names.clone(), 8)?;
    let model = fine_tune(&model, &train, 40, 0.15, 8)?;
    let traces = trace_dataset(&model, &train)?;
    let db = build_database(&traces, 0.0)?;

    // a borderline query between the clusters
    let query_point = vec![0.47, 0.52];
    let (predicted, conf) = model.predict(&query_point)?;
    let acts = model.forward_capture(&query_point)?;
    let pattern = binarize_f32(
        &acts.per_layer[model.monitored_layer]
            .iter()
            .map(|&a| a as f32)
            .collect::<Vec<_>>(),
        0.0,
    )?;

    println!(
        "query {:?} predicted {} with confidence {conf:.3}",
        query_point, model.class_names[predicted]
    );
    println!("\nnearest training cases (all classes):");
    let result = nearest_cases(&db, &pattern, 7, None)?;
    for (rank, n) in result.neighbors.iter().enumerate() {
        println!(
            "  #{:<2} {:<10} class {:<8} distance {:<3} stored confidence {:.3}",
            rank + 1,
            n.sample_id,
            n.class,
            n.distance,
            n.confidence
        );
    }

    // same retrieval restricted to the predicted class
    let same_class = nearest_cases(&db, &pattern, 3, Some(predicted))?;
    println!("\nnearest {} cases only:", model.class_names[predicted]);
    for n in &same_class.neighbors {
        println!("  {:<10} distance {}", n.sample_id, n.distance);
    }
    Ok(())
}
