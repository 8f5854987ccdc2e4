//! Boxed-domain verification: propagate interval bounds from the input (or
//! any layer) to the softmax output and check linear risk properties,
//! demonstrating all three verdicts — HOLDS from the bound alone, VIOLATED
//! with a concrete witness, and the honest UNKNOWN in between.
//!
//! ```text
//! cargo run --example interval_verify
//! ```

use nndep::data::synth_dataset;
use nndep::model::{fine_tune, Model};
use nndep::verify::{check_property, propagate_box, IntervalBox, RiskProperty, VerifyStatus};

fn main() -> nndep::Result<()> {
    let train = synth_dataset(300, 0.07, 6)?;
    let model = Model::init_random(&[2, 32, 16, 2], 1, train.class_names.clone(), 6)?;
    let model = fine_tune(&model, &train, 40, 0.15, 6)?;

    // bounds over the whole input square
    let unit_square = IntervalBox::new(vec![0.0, 0.0], vec![1.0, 1.0])?;
    let out = propagate_box(&model, 0, &unit_square)?;
    println!("output bounds over the unit square:");
    for (i, name) in model.class_names.iter().enumerate() {
        println!("  p({name}) in [{:.6}, {:.6}]", out.lower[i], out.upper[i]);
    }

    // a tight box around the class-0 cluster: the model should never assign
    // class 1 more than class 0 there
    let cluster0 = IntervalBox::new(vec![0.1, 0.1], vec![0.4, 0.4])?;
    let properties = [
        RiskProperty {
            coefficients: vec![1.0, 1.0],
            bound: 1.1,
            description: "probabilities sum below 1.1 (sanity)".into(),
        },
        RiskProperty {
            coefficients: vec![-1.0, 1.0],
            bound: 0.0,
            description: "class1 never outweighs class0 on the class0 cluster".into(),
        },
        RiskProperty {
            coefficients: vec![1.0, -1.0],
            bound: 0.0,
            description: "class0 never outweighs class1 on the class0 cluster (should fail)".into(),
        },
    ];
    for prop in &properties {
        let result = check_property(&model, 0, &cluster0, prop, 2000, 0)?;
        println!("\n{} -> {}", prop.description, result.status.name());
        match result.status {
            VerifyStatus::Holds => {
                println!("  proven from the interval bound alone");
            }
            VerifyStatus::Violated => {
                let w = result.witness.unwrap();
                let out = model.forward_from(0, &w)?;
                println!("  witness {w:?} gives outputs {out:?}");
            }
            VerifyStatus::Unknown => {
                println!("  bound inconclusive and no sampled counterexample");
            }
        }
    }
    Ok(())
}
