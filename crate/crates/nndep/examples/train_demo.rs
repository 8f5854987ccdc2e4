//! Train a small classifier on the synthetic two-cluster task and save the
//! model plus its datasets — the starting point for every other example.
//!
//! ```text
//! cargo run --example train_demo [out_dir]
//! ```

use nndep::data::{synth_dataset, write_dataset};
use nndep::model::{evaluate, fine_tune, save_model, Model};

fn main() -> nndep::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/demo".into());
    std::fs::create_dir_all(&out).expect("create output dir");

    let seed = 0;
    let train = synth_dataset(400, 0.07, seed)?;
    let eval = synth_dataset(200, 0.07, seed + 1)?;

    // 2 -> 32 -> 16 -> 2 with the 16-wide penultimate layer monitored
    let model = Model::init_random(&[2, 32, 16, 2], 1, train.class_names.clone(), seed)?;
    println!("initial flops per prediction: {}", model.flop_count());

    let model = fine_tune(&model, &train, 40, 0.15, seed)?;
    let (train_acc, train_per_class) = evaluate(&model, &train)?;
    let (eval_acc, _) = evaluate(&model, &eval)?;
    println!("train accuracy {train_acc} (per class {train_per_class:?})");
    println!("eval accuracy  {eval_acc}");

    save_model(format!("{out}/model.json"), &model)?;
    write_dataset(format!("{out}/train.jsonl"), &train)?;
    write_dataset(format!("{out}/eval.jsonl"), &eval)?;
    println!("wrote model.json, train.jsonl, eval.jsonl to {out}/");
    Ok(())
}
