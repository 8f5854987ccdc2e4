//! APoZ-driven pruning: score a hidden layer's neurons by how often they are
//! zero, then iteratively delete the deadest 2% and fine-tune, printing the
//! schedule of accuracy against FLOPs.
//!
//! ```text
//! cargo run --example pruning
//! ```

use nndep::apoz::{apoz_scores, prune_loop, PruneLoopConfig};
use nndep::data::synth_dataset;
use nndep::model::{evaluate, fine_tune, Model};

fn main() -> nndep::Result<()> {
    let train = synth_dataset(300, 0.07, 4)?;
    let eval = synth_dataset(150, 0.07, 5)?;
    let model = Model::init_random(&[2, 32, 16, 2], 1, train.class_names.clone(), 4)?;
    let model = fine_tune(&model, &train, 40, 0.15, 4)?;
    let (baseline, _) = evaluate(&model, &eval)?;
    println!("baseline: eval accuracy {baseline}, {} flops", model.flop_count());

    let report = apoz_scores(&model, &train, 0, 0.0)?;
    let mut dead = 0;
    for score in &report.scores {
        if *score == 1.0 {
            dead += 1;
        }
    }
    println!(
        "layer 0 APoZ over {} samples: {dead} fully dead of {} neurons",
        report.samples,
        report.scores.len()
    );

    let mut config = PruneLoopConfig::new(0, 0.5, 4);
    config.epochs_between = 10;
    let (pruned, schedule) = prune_loop(&model, &train, &eval, &config)?;

    println!("\niter  pruned%  acc_class0  acc_class1  acc     flops");
    for it in &schedule.iterations {
        println!(
            "{:>4}  {:>6.1}  {:>10.3}  {:>10.3}  {:.3}  {:>6}",
            it.iteration,
            it.cumulative_fraction * 100.0,
            it.class_accuracy[0],
            it.class_accuracy[1],
            it.accuracy,
            it.flops
        );
    }
    let (final_acc, _) = evaluate(&pruned, &eval)?;
    println!(
        "\npruned to 50%: accuracy {baseline} -> {final_acc}, flops {} -> {} ({:.1}% cut)",
        model.flop_count(),
        pruned.flop_count(),
        (1.0 - pruned.flop_count() as f64 / model.flop_count() as f64) * 100.0
    );
    Ok(())
}
