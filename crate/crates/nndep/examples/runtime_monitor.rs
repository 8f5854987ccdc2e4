//! Runtime monitoring: build the pattern database from training traces,
//! confirm the training set supports itself, then stream out-of-distribution
//! inputs through the monitor and watch the warnings.
//!
//! ```text
//! cargo run --example runtime_monitor
//! ```

use nndep::data::{synth_dataset, trace_dataset};
use nndep::model::{fine_tune, Model};
use nndep::monitor::{build_database, monitor_report, query};
use nndep::nap::binarize_f32;
use nndep::rng::Rng;

fn main() -> nndep::Result<()> {
    let train = synth_dataset(300, 0.07, 5)?;
    let model = Model::init_random(&[2, 32, 16, 2], 1, train.class_names.clone(), 5)?;
    let model = fine_tune(&model, &train, 40, 0.15, 5)?;
    let traces = trace_dataset(&model, &train)?;

    let db = build_database(&traces, 0.0)?;
    println!(
        "database: {} distinct patterns from {} records over {} neurons",
        db.pattern_count(),
        traces.records.len(),
        db.neurons()
    );

    // the training data must support itself at d=0
    let table = monitor_report(&db, &traces, 0)?;
    println!("self-check warnings at d=0: {}", table.warnings);
    println!("\nreal,predicted,category,count,mean_conf");
    for row in table.rows.iter().filter(|r| r.count > 0) {
        println!(
            "{},{},{},{},{:.3}",
            row.real,
            row.predicted,
            row.category.name(),
            row.count,
            row.mean_confidence.unwrap()
        );
    }

    // in-distribution and out-of-distribution queries
    let mut rng = Rng::new(99);
    println!("\nstreaming queries (d=0):");
    for (name, point) in [
        ("near class0 center", vec![0.26, 0.24]),
        ("near class1 center", vec![0.74, 0.76]),
        ("between clusters", vec![0.5, 0.5]),
        ("far off-manifold", vec![-0.45 + 0.01 * rng.next_normal(), 0.95]),
    ] {
        let acts = model.forward_capture(&point)?;
        let monitored: Vec<f32> = acts.per_layer[model.monitored_layer]
            .iter()
            .map(|&a| a as f32)
            .collect();
        let pattern = binarize_f32(&monitored, 0.0)?;
        let (predicted, conf) = model.predict(&point)?;
        let verdict = query(&db, &pattern, predicted, 0)?;
        println!(
            "  {name:<20} pred {} ({conf:.3}) -> {} (nearest pattern at distance {})",
            model.class_names[predicted],
            verdict.category.name(),
            verdict.min_distance.unwrap()
        );
        if verdict.warning {
            println!("    warning: output not supported by the training data");
        }
    }
    Ok(())
}
