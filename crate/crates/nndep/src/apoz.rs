//! Average-Percentage-of-Zeros scoring and the iterative prune/fine-tune
//! loop: score a hidden layer over a dataset, delete the highest-APoZ
//! neurons in small steps, retrain a few epochs between steps, and record
//! accuracy and FLOPs at every iteration.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{evaluate, fine_tune, Model};
use crate::rng::indexed_seed;

/// Per-neuron fraction of samples on which the activation was (near-)zero.
#[derive(Debug, Clone)]
pub struct ApozReport {
    pub layer: usize,
    pub scores: Vec<f64>,
    pub samples: usize,
    pub epsilon: f64,
}

/// Scores one hidden layer: `score[j]` is the fraction of samples with
/// `|activation_j| <= epsilon`. Epsilon 0 counts exact zeros, the natural
/// choice post-relu.
pub fn apoz_scores(model: &Model, data: &Dataset, layer: usize, epsilon: f64) -> Result<ApozReport> {
    if layer + 1 >= model.layers.len() {
        return Err(Error::InvalidParam(format!(
            "layer {layer} is not a hidden layer"
        )));
    }
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::InvalidParam(format!("epsilon {epsilon} must be >= 0")));
    }
    let width = model.layers[layer].out_dim;
    let mut zero_counts = vec![0usize; width];
    for sample in &data.samples {
        let acts = model.forward_capture(&sample.features.to_vec())?;
        for (count, &a) in zero_counts.iter_mut().zip(&acts.per_layer[layer]) {
            if a.abs() <= epsilon {
                *count += 1;
            }
        }
    }
    let n = data.len();
    Ok(ApozReport {
        layer,
        scores: zero_counts.iter().map(|&c| c as f64 / n as f64).collect(),
        samples: n,
        epsilon,
    })
}

/// The `count` highest-APoZ neurons, ties resolved to the lower index.
fn select_top(report: &ApozReport, count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..report.scores.len()).collect();
    order.sort_by(|&a, &b| {
        report.scores[b]
            .partial_cmp(&report.scores[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut chosen: Vec<usize> = order.into_iter().take(count).collect();
    chosen.sort_unstable();
    chosen
}

/// The `ceil(fraction * n)` neurons with the highest APoZ.
pub fn select_prune_set(report: &ApozReport, fraction: f64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParam(format!(
            "prune fraction {fraction} must be in (0,1)"
        )));
    }
    let n = report.scores.len();
    let count = (fraction * n as f64).ceil() as usize;
    if count >= n {
        return Err(Error::InvalidParam(format!(
            "pruning {count} of {n} neurons would empty the layer"
        )));
    }
    Ok(select_top(report, count))
}

/// Whether each step removes a fraction of the original width or of the
/// width remaining at that iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepBase {
    Original,
    Remaining,
}

/// Knobs for [`prune_loop`].
#[derive(Debug, Clone)]
pub struct PruneLoopConfig {
    pub layer: usize,
    pub step_fraction: f64,
    pub epochs_between: usize,
    pub target_fraction: f64,
    pub learning_rate: f64,
    pub epsilon: f64,
    pub step_base: StepBase,
    pub seed: u64,
}

impl PruneLoopConfig {
    pub fn new(layer: usize, target_fraction: f64, seed: u64) -> PruneLoopConfig {
        PruneLoopConfig {
            layer,
            step_fraction: 0.02,
            epochs_between: 10,
            target_fraction,
            learning_rate: 0.1,
            epsilon: 0.0,
            step_base: StepBase::Original,
            seed,
        }
    }
}

/// One recorded prune step.
#[derive(Debug, Clone)]
pub struct PruneIteration {
    pub iteration: usize,
    pub pruned_neurons: Vec<usize>,
    pub cumulative_fraction: f64,
    pub class_accuracy: Vec<f64>,
    pub accuracy: f64,
    pub flops: u64,
}

/// The full schedule; `iterations` is empty when the target is already met.
#[derive(Debug, Clone, Default)]
pub struct PruneSchedule {
    pub iterations: Vec<PruneIteration>,
}

impl PruneSchedule {
    /// CSV `iteration,cum_fraction,acc_class0,...,acc,flops`.
    pub fn to_csv(&self, class_count: usize) -> String {
        let mut header = String::from("iteration,cum_fraction");
        for c in 0..class_count {
            header.push_str(&format!(",acc_class{c}"));
        }
        header.push_str(",acc,flops\n");
        let mut out = header;
        for it in &self.iterations {
            out.push_str(&format!("{},{}", it.iteration, it.cumulative_fraction));
            for acc in &it.class_accuracy {
                out.push_str(&format!(",{acc}"));
            }
            out.push_str(&format!(",{},{}\n", it.accuracy, it.flops));
        }
        out
    }
}

/// Repeats {score, select, prune, fine-tune} on one hidden layer until the
/// cumulative pruned fraction reaches the target, scoring on `train` and
/// reporting accuracy on `eval` each iteration. Deterministic per seed.
pub fn prune_loop(
    model: &Model,
    train: &Dataset,
    eval: &Dataset,
    config: &PruneLoopConfig,
) -> Result<(Model, PruneSchedule)> {
    if config.target_fraction.is_nan() || config.target_fraction >= 1.0 {
        return Err(Error::InvalidParam(format!(
            "target fraction {} must be < 1",
            config.target_fraction
        )));
    }
    if !(config.step_fraction > 0.0 && config.step_fraction < 1.0) {
        return Err(Error::InvalidParam(format!(
            "step fraction {} must be in (0,1)",
            config.step_fraction
        )));
    }
    if config.layer + 1 >= model.layers.len() {
        return Err(Error::InvalidParam(format!(
            "layer {} is not a hidden layer",
            config.layer
        )));
    }

    let original_width = model.layers[config.layer].out_dim;
    let mut current = model.clone();
    let mut schedule = PruneSchedule::default();
    let mut pruned_total = 0usize;
    let mut iteration = 0usize;

    while (pruned_total as f64) < config.target_fraction * original_width as f64 {
        let remaining = current.layers[config.layer].out_dim;
        let base = match config.step_base {
            StepBase::Original => original_width,
            StepBase::Remaining => remaining,
        };
        let step = ((config.step_fraction * base as f64).ceil() as usize).max(1);
        if step >= remaining {
            return Err(Error::InvalidParam(format!(
                "iteration {iteration}: step of {step} would empty the remaining {remaining} neurons"
            )));
        }

        let report = apoz_scores(&current, train, config.layer, config.epsilon)?;
        let chosen = select_top(&report, step);
        current = current.prune_neurons(config.layer, &chosen)?;
        current = fine_tune(
            &current,
            train,
            config.epochs_between,
            config.learning_rate,
            indexed_seed(config.seed, iteration as u64),
        )
        .map_err(|e| match e {
            Error::Diverged { epoch, .. } => Error::Diverged {
                epoch,
                iteration: Some(iteration),
            },
            other => other,
        })?;

        pruned_total += step;
        let (accuracy, class_accuracy) = evaluate(&current, eval)?;
        schedule.iterations.push(PruneIteration {
            iteration,
            pruned_neurons: chosen,
            cumulative_fraction: pruned_total as f64 / original_width as f64,
            class_accuracy,
            accuracy,
            flops: current.flop_count(),
        });
        iteration += 1;
    }
    Ok((current, schedule))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_dataset, Features, Sample};
    use crate::model::{Activation, DenseLayer};

    fn fixture_model() -> Model {
        // 2 -> 4 relu -> 2 softmax, weights chosen so neuron 3 is dead
        Model {
            class_names: vec!["class0".into(), "class1".into()],
            monitored_layer: 0,
            layers: vec![
                DenseLayer {
                    in_dim: 2,
                    out_dim: 4,
                    activation: Activation::Relu,
                    weights: vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0, -1.0, -1.0],
                    bias: vec![0.0, 0.0, 0.0, -0.5],
                },
                DenseLayer {
                    in_dim: 4,
                    out_dim: 2,
                    activation: Activation::Softmax,
                    weights: vec![1.0, 0.0, 0.5, 0.2, 0.0, 1.0, 0.5, 0.1],
                    bias: vec![0.0, 0.0],
                },
            ],
        }
    }

    fn positive_dataset() -> Dataset {
        // all features positive, so neuron 3 (negative weights, negative bias) never fires
        let samples = (0..10)
            .map(|i| Sample {
                id: format!("s{i}"),
                features: Features::Vector(vec![0.1 + 0.05 * i as f64, 0.2 + 0.03 * i as f64]),
                label: i % 2,
            })
            .collect();
        Dataset::new(samples, vec!["class0".into(), "class1".into()]).unwrap()
    }

    #[test]
    fn apoz_counting_examples() {
        // activations [0, 1] over two samples -> 0.5; [0, 0] -> 1.0
        let model = fixture_model();
        let data = positive_dataset();
        let report = apoz_scores(&model, &data, 0, 0.0).unwrap();
        assert_eq!(report.scores.len(), 4);
        assert_eq!(report.scores[3], 1.0, "dead neuron scores 1.0");
        assert!(report.scores[0] < 1.0);
    }

    #[test]
    fn apoz_half_zero_is_half_score() {
        // identity hidden layer: activations are the raw features, so the
        // two samples [0] and [1] give APoZ exactly 0.5
        let model = Model {
            class_names: vec!["only".into()],
            monitored_layer: 0,
            layers: vec![
                DenseLayer {
                    in_dim: 1,
                    out_dim: 1,
                    activation: Activation::Linear,
                    weights: vec![1.0],
                    bias: vec![0.0],
                },
                DenseLayer {
                    in_dim: 1,
                    out_dim: 1,
                    activation: Activation::Softmax,
                    weights: vec![1.0],
                    bias: vec![0.0],
                },
            ],
        };
        let samples = vec![
            Sample {
                id: "a".into(),
                features: Features::Vector(vec![0.0]),
                label: 0,
            },
            Sample {
                id: "b".into(),
                features: Features::Vector(vec![1.0]),
                label: 0,
            },
        ];
        let data = Dataset::new(samples, vec!["only".into()]).unwrap();
        let report = apoz_scores(&model, &data, 0, 0.0).unwrap();
        assert_eq!(report.scores, vec![0.5]);
    }

    #[test]
    fn apoz_matches_per_sample_recomputation() {
        let model = fixture_model();
        let data = positive_dataset();
        let report = apoz_scores(&model, &data, 0, 0.0).unwrap();
        for j in 0..4 {
            let mut zeros = 0usize;
            for s in &data.samples {
                let acts = model.forward_capture(&s.features.to_vec()).unwrap();
                if acts.per_layer[0][j].abs() <= 0.0 {
                    zeros += 1;
                }
            }
            assert_eq!(report.scores[j], zeros as f64 / data.len() as f64);
        }
    }

    #[test]
    fn apoz_rejects_output_layer() {
        let model = fixture_model();
        let data = positive_dataset();
        assert!(apoz_scores(&model, &data, 1, 0.0).is_err());
    }

    #[test]
    fn select_ceiling_arithmetic() {
        let report = ApozReport {
            layer: 0,
            scores: vec![0.0; 512],
            samples: 1,
            epsilon: 0.0,
        };
        assert_eq!(select_prune_set(&report, 0.02).unwrap().len(), 11);
    }

    #[test]
    fn select_all_equal_takes_lowest_indices() {
        let report = ApozReport {
            layer: 0,
            scores: vec![0.5; 8],
            samples: 1,
            epsilon: 0.0,
        };
        assert_eq!(select_prune_set(&report, 0.3).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn select_matches_sort_oracle() {
        let scores = vec![0.1, 0.9, 0.4, 0.9, 0.2, 0.7];
        let report = ApozReport {
            layer: 0,
            scores: scores.clone(),
            samples: 1,
            epsilon: 0.0,
        };
        let got = select_prune_set(&report, 0.5).unwrap();
        // oracle: stable sort by descending score
        let mut idx: Vec<usize> = (0..scores.len()).collect();
        idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
        let mut want: Vec<usize> = idx.into_iter().take(3).collect();
        want.sort_unstable();
        assert_eq!(got, want);
    }

    #[test]
    fn select_rejects_emptying_fraction() {
        let report = ApozReport {
            layer: 0,
            scores: vec![0.5; 3],
            samples: 1,
            epsilon: 0.0,
        };
        assert!(select_prune_set(&report, 0.9).is_err());
    }

    #[test]
    fn pruning_fully_dead_neurons_changes_nothing() {
        let model = fixture_model();
        let data = positive_dataset();
        let report = apoz_scores(&model, &data, 0, 0.0).unwrap();
        let dead: Vec<usize> = (0..4).filter(|&j| report.scores[j] == 1.0).collect();
        assert!(!dead.is_empty());
        let pruned = model.prune_neurons(0, &dead).unwrap();
        for s in &data.samples {
            let a = model.forward_capture(&s.features.to_vec()).unwrap().output;
            let b = pruned.forward_capture(&s.features.to_vec()).unwrap().output;
            assert_eq!(a, b, "outputs must be bitwise identical");
        }
    }

    #[test]
    fn zero_target_yields_empty_schedule() {
        let model = fixture_model();
        let data = positive_dataset();
        let config = PruneLoopConfig::new(0, 0.0, 1);
        let (out, schedule) = prune_loop(&model, &data, &data, &config).unwrap();
        assert!(schedule.iterations.is_empty());
        assert_eq!(out.flop_count(), model.flop_count());
        assert_eq!(out.layers[0].weights, model.layers[0].weights);
    }

    #[test]
    fn flops_strictly_decrease_and_fractions_grow() {
        let train = synth_dataset(40, 0.07, 3).unwrap();
        let eval = synth_dataset(20, 0.07, 4).unwrap();
        let model = Model::init_random(&[2, 16, 8, 2], 1, train.class_names.clone(), 2).unwrap();
        let model = fine_tune(&model, &train, 20, 0.15, 5).unwrap();
        let mut config = PruneLoopConfig::new(0, 0.5, 7);
        config.epochs_between = 3;
        let (_, schedule) = prune_loop(&model, &train, &eval, &config).unwrap();
        assert!(!schedule.iterations.is_empty());
        let mut last_flops = model.flop_count();
        let mut last_frac = 0.0;
        for it in &schedule.iterations {
            assert!(it.flops < last_flops, "flops must strictly decrease");
            assert!(it.cumulative_fraction > last_frac);
            last_flops = it.flops;
            last_frac = it.cumulative_fraction;
        }
    }

    #[test]
    fn schedule_accuracy_matches_standalone_evaluation() {
        let train = synth_dataset(30, 0.07, 9).unwrap();
        let eval = synth_dataset(15, 0.07, 10).unwrap();
        let model = Model::init_random(&[2, 8, 4, 2], 1, train.class_names.clone(), 6).unwrap();
        let model = fine_tune(&model, &train, 15, 0.15, 2).unwrap();
        let mut config = PruneLoopConfig::new(0, 0.3, 11);
        config.epochs_between = 2;
        let (final_model, schedule) = prune_loop(&model, &train, &eval, &config).unwrap();
        let last = schedule.iterations.last().unwrap();
        let (acc, per_class) = evaluate(&final_model, &eval).unwrap();
        assert_eq!(last.accuracy, acc);
        assert_eq!(last.class_accuracy, per_class);
    }

    #[test]
    fn loop_is_deterministic_per_seed() {
        let train = synth_dataset(25, 0.07, 13).unwrap();
        let eval = synth_dataset(10, 0.07, 14).unwrap();
        let model = Model::init_random(&[2, 8, 2], 0, train.class_names.clone(), 1).unwrap();
        let mut config = PruneLoopConfig::new(0, 0.4, 21);
        config.epochs_between = 2;
        let (a, sa) = prune_loop(&model, &train, &eval, &config).unwrap();
        let (b, sb) = prune_loop(&model, &train, &eval, &config).unwrap();
        assert_eq!(a.layers[0].weights, b.layers[0].weights);
        assert_eq!(sa.to_csv(2), sb.to_csv(2));
    }
}
