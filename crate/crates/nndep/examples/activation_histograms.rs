//! Per-class histograms of activation counts at the monitored layer, before
//! and after training. A settled model concentrates each class around its
//! own activation count; watching the histogram narrow is a cheap training
//! sanity check.
//!
//! ```text
//! cargo run --example activation_histograms
//! ```

use nndep::data::{synth_dataset, trace_dataset};
use nndep::model::{fine_tune, Model};
use nndep::nap::{class_histogram, LabelKind};

fn main() -> nndep::Result<()> {
    let data = synth_dataset(300, 0.07, 3)?;
    let raw = Model::init_random(&[2, 32, 16, 2], 1, data.class_names.clone(), 3)?;
    let trained = fine_tune(&raw, &data, 40, 0.15, 3)?;

    for (stage, model) in [("before training", &raw), ("after training", &trained)] {
        println!("== {stage} ==");
        let traces = trace_dataset(model, &data)?;
        for class in 0..data.class_names.len() {
            let h = class_histogram(&traces, class, LabelKind::True, 0.0, 1)?;
            println!(
                "class {}: {} samples, count spread {:.3}",
                h.class_label,
                h.total(),
                h.spread()
            );
            for (&start, &count) in &h.bins {
                println!("  {start:>3} active | {}", "#".repeat(count.min(60)));
            }
        }
    }
    Ok(())
}
