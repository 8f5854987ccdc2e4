//! Neuron k-projection coverage: how much of the monitored layer's on/off
//! behaviour the dataset actually exercises. Low coverage on a trained model
//! is a pruning hint — most neuron combinations never occur.
//!
//! Also demonstrates counting at production layer widths: 3000 random
//! patterns of width 2048 at k=2 (8.4M cells) take well under a second.
//!
//! ```text
//! cargo run --example neuron_coverage
//! ```

use std::time::Instant;

use nndep::coverage::neuron_kproj_coverage;
use nndep::data::{synth_dataset, trace_dataset};
use nndep::model::{fine_tune, Model};
use nndep::nap::{binarize_f32, Pattern};
use nndep::rng::Rng;

fn main() -> nndep::Result<()> {
    // coverage of a trained desk-scale model, per class and pooled
    let data = synth_dataset(300, 0.07, 7)?;
    let model = Model::init_random(&[2, 32, 16, 2], 1, data.class_names.clone(), 7)?;
    let model = fine_tune(&model, &data, 40, 0.15, 7)?;
    let traces = trace_dataset(&model, &data)?;

    for k in [1, 2] {
        let mut per_class = vec![Vec::new(); data.class_names.len()];
        for r in &traces.records {
            per_class[r.true_label].push(binarize_f32(&r.activations, 0.0)?);
        }
        for (class, patterns) in per_class.iter().enumerate() {
            let mut report = neuron_kproj_coverage(patterns, k)?;
            report.group_label = data.class_names[class].clone();
            println!(
                "k={k} {:>7}: {:>6} / {:<6} = {} ({}%)",
                report.group_label,
                report.covered,
                report.total,
                report.display_ratio(),
                report.display_percent()
            );
        }
    }

    // production-width timing demonstration
    let mut rng = Rng::new(1);
    let patterns: Vec<Pattern> = (0..3000)
        .map(|_| Pattern::from_bits(&(0..2048).map(|_| rng.next_f64() < 0.5).collect::<Vec<_>>()))
        .collect();
    let start = Instant::now();
    let report = neuron_kproj_coverage(&patterns, 2)?;
    println!(
        "width 2048, k=2, 3000 patterns: {} / {} cells in {:?}",
        report.covered,
        report.total,
        start.elapsed()
    );
    Ok(())
}
