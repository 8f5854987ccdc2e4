//! Batch CLI over the `nndep` library. Every subcommand is a thin wrapper:
//! load inputs, call the library, write `<subcommand>.<ext>` reports into
//! the output directory.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 dependability
//! signal (monitor warnings present, or a property VIOLATED).

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nndep::apoz::{apoz_scores, prune_loop, PruneLoopConfig, StepBase};
use nndep::coverage::{
    neuron_kproj_coverage, scenario_kproj_coverage, suggest_scenario, CoverageReport,
    ScenarioCatalog,
};
use nndep::data::{
    read_dataset, read_image_manifest, read_traces, synth_dataset, trace_dataset, write_dataset,
    write_traces, Dataset, Features, TraceSet,
};
use nndep::error::{Error, Result};
use nndep::evidence::nearest_cases;
use nndep::image::write_image;
use nndep::model::{evaluate, fine_tune, load_model, save_model, Model};
use nndep::monitor::{build_database, load_db, monitor_report, save_db};
use nndep::nap::{binarize_f32, class_histogram, histograms_to_csv, Histogram, LabelKind};
use nndep::perturb::{
    apply_noise_features, augment_dataset, perturbation_loss, reports_to_csv, NoiseSpec,
};
use nndep::verify::{check_property, PropertySpec, VerifyStatus};

#[derive(Parser)]
#[command(name = "nndep", version, about = "Dependability metrics for NN classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutArg {
    /// Output directory for report files (created if missing)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Train a small classifier on a synthetic two-cluster task and save
    /// model plus train/eval datasets
    TrainDemo {
        #[command(flatten)]
        out: OutArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 400)]
        samples_per_class: usize,
        #[arg(long, default_value_t = 0.07)]
        spread: f64,
        #[arg(long, default_value_t = 40)]
        epochs: usize,
        #[arg(long, default_value_t = 0.15)]
        lr: f64,
    },
    /// Run a model over a dataset and write the activation trace file
    Trace {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Per-class histograms of activation counts at the monitored layer
    NapHist {
        #[arg(long)]
        traces: PathBuf,
        #[command(flatten)]
        out: OutArg,
        #[arg(long, default_value_t = 0.0)]
        threshold: f64,
        #[arg(long, default_value_t = 16)]
        bin_width: usize,
        /// Group by predicted label instead of true label
        #[arg(long)]
        by_pred: bool,
        /// Keep only records with at least this confidence
        #[arg(long)]
        min_conf: Option<f64>,
    },
    /// k-projection coverage
    Coverage {
        #[command(subcommand)]
        target: CoverageTarget,
    },
    /// Suggest the scenario whose labeling most improves coverage
    Suggest {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Write one noisy copy of each sample per noise spec
    Perturb {
        #[arg(long)]
        data: PathBuf,
        /// Noise spec `kind` or `kind=param:value,...`; repeatable
        #[arg(long, required = true)]
        noise: Vec<String>,
        #[command(flatten)]
        out: OutArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Perturbation loss: relative confidence drop under each noise spec
    Ploss {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, required = true)]
        noise: Vec<String>,
        #[command(flatten)]
        out: OutArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Average only over correctly classified samples
        #[arg(long)]
        correct_only: bool,
    },
    /// Augment a dataset with noisy copies (originals preserved)
    Augment {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, required = true)]
        noise: Vec<String>,
        #[command(flatten)]
        out: OutArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Runtime monitoring database operations
    Monitor {
        #[command(subcommand)]
        action: MonitorAction,
    },
    /// Retrieve the nearest training cases for one query record
    Retrieve {
        #[arg(long)]
        db: PathBuf,
        /// Trace file holding the query record(s)
        #[arg(long)]
        traces: PathBuf,
        /// Query record id (default: first record)
        #[arg(long)]
        id: Option<String>,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Restrict retrieval to one class name
        #[arg(long)]
        class: Option<String>,
        /// CSV `id,path` map used to attach image paths to neighbors
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Average-Percentage-of-Zeros scores for one hidden layer
    Apoz {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Hidden layer index (default: the model's monitored layer)
        #[arg(long)]
        layer: Option<usize>,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Iterative APoZ prune / fine-tune loop
    Prune {
        #[arg(long)]
        model: PathBuf,
        /// Training dataset (scored and fine-tuned on)
        #[arg(long)]
        data: PathBuf,
        /// Held-out dataset for the per-iteration accuracy columns
        #[arg(long)]
        eval: PathBuf,
        #[arg(long)]
        layer: Option<usize>,
        /// Stop once this cumulative fraction of the layer is pruned
        #[arg(long)]
        target: f64,
        /// Fraction pruned per iteration
        #[arg(long, default_value_t = 0.02)]
        fraction: f64,
        /// Fine-tuning epochs between iterations
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        /// Take each step as a fraction of the remaining width instead of
        /// the original width
        #[arg(long)]
        of_remaining: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Check a linear risk property on a boxed neuron domain
    Verify {
        #[arg(long)]
        model: PathBuf,
        /// Property file: {"c":[..],"b":..,"desc":..,"box":{"lo":[..],"hi":[..]},"from_layer":..}
        #[arg(long)]
        property: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Subcommand)]
enum CoverageTarget {
    /// Neuron k-projection coverage over binarized trace patterns
    Neurons {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 0.0)]
        threshold: f64,
        #[arg(long)]
        min_conf: Option<f64>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Scenario k-projection coverage of a catalog
    Scenarios {
        #[arg(long)]
        catalog: PathBuf,
        /// CSV of value names, one scenario per line
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Subcommand)]
enum MonitorAction {
    /// Build the pattern database from training traces
    Build {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        threshold: f64,
        /// Database path (default: <out>/monitor.napdb)
        #[arg(long)]
        db: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Query traces against a database and tabulate the verdicts
    Run {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        db: PathBuf,
        #[arg(long, default_value_t = 0)]
        d: usize,
        #[command(flatten)]
        out: OutArg,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn ensure_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_report(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// `.csv` loads as an image manifest, anything else as a JSON-lines dataset.
fn load_dataset(path: &Path) -> Result<Dataset> {
    if path.extension().is_some_and(|e| e == "csv") {
        read_image_manifest(path)
    } else {
        read_dataset(path)
    }
}

fn parse_specs(texts: &[String], seed: u64) -> Result<Vec<NoiseSpec>> {
    texts.iter().map(|t| NoiseSpec::parse(t, seed)).collect()
}

fn coverage_csv(reports: &[CoverageReport]) -> String {
    let mut out = String::from("class,k,covered,total,ratio\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.group_label,
            r.k,
            r.covered,
            r.total,
            r.display_ratio()
        ));
    }
    out
}

fn class_patterns(traces: &TraceSet, threshold: f64) -> Result<Vec<Vec<nndep::nap::Pattern>>> {
    let mut per_class = vec![Vec::new(); traces.class_names.len()];
    for r in &traces.records {
        per_class[r.true_label].push(binarize_f32(&r.activations, threshold)?);
    }
    Ok(per_class)
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::TrainDemo {
            out,
            seed,
            samples_per_class,
            spread,
            epochs,
            lr,
        } => {
            ensure_out(&out.out)?;
            let train = synth_dataset(samples_per_class, spread, seed)?;
            let eval = synth_dataset(samples_per_class / 2, spread, seed.wrapping_add(1))?;
            let model = Model::init_random(&[2, 32, 16, 2], 1, train.class_names.clone(), seed)?;
            let model = fine_tune(&model, &train, epochs, lr, seed)?;
            let (train_acc, _) = evaluate(&model, &train)?;
            let (eval_acc, _) = evaluate(&model, &eval)?;
            save_model(out.out.join("model.json"), &model)?;
            write_dataset(out.out.join("train.jsonl"), &train)?;
            write_dataset(out.out.join("eval.jsonl"), &eval)?;
            let summary = serde_json::json!({
                "seed": seed,
                "samples_per_class": samples_per_class,
                "spread": spread,
                "epochs": epochs,
                "layers": [2, 32, 16, 2],
                "monitored_layer": 1,
                "train_accuracy": train_acc,
                "eval_accuracy": eval_acc,
            });
            write_report(
                &out.out.join("train-demo.json"),
                &serde_json::to_string_pretty(&summary).unwrap(),
            )?;
            println!("train accuracy {train_acc}, eval accuracy {eval_acc}");
            Ok(ExitCode::SUCCESS)
        }

        Command::Trace { model, data, out } => {
            ensure_out(&out.out)?;
            let model = load_model(&model)?;
            let data = load_dataset(&data)?;
            let traces = trace_dataset(&model, &data)?;
            write_traces(out.out.join("trace.jsonl"), &traces)?;
            println!("traced {} samples at width {}", traces.records.len(), traces.neurons);
            Ok(ExitCode::SUCCESS)
        }

        Command::NapHist {
            traces,
            out,
            threshold,
            bin_width,
            by_pred,
            min_conf,
        } => {
            ensure_out(&out.out)?;
            let mut traces = read_traces(&traces)?;
            if let Some(min_conf) = min_conf {
                traces = traces.filter_min_confidence(min_conf)?;
            }
            let by = if by_pred { LabelKind::Predicted } else { LabelKind::True };
            let mut histograms: Vec<Histogram> = Vec::new();
            for class in 0..traces.class_names.len() {
                match class_histogram(&traces, class, by, threshold, bin_width) {
                    Ok(h) => histograms.push(h),
                    Err(Error::EmptyClass(name)) => {
                        eprintln!("note: class {name} has no records, skipped");
                    }
                    Err(other) => return Err(other),
                }
            }
            for h in &histograms {
                println!(
                    "class {}: {} samples, activation-count spread {:.3}",
                    h.class_label,
                    h.total(),
                    h.spread()
                );
            }
            write_report(&out.out.join("nap-hist.csv"), &histograms_to_csv(&histograms))?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Coverage { target } => match target {
            CoverageTarget::Neurons {
                traces,
                k,
                threshold,
                min_conf,
                out,
            } => {
                ensure_out(&out.out)?;
                let mut traces = read_traces(&traces)?;
                if let Some(min_conf) = min_conf {
                    traces = traces.filter_min_confidence(min_conf)?;
                }
                let per_class = class_patterns(&traces, threshold)?;
                let mut reports = Vec::new();
                for (class, patterns) in per_class.iter().enumerate() {
                    if patterns.is_empty() {
                        continue;
                    }
                    let mut report = neuron_kproj_coverage(patterns, k)?;
                    report.group_label = traces.class_names[class].clone();
                    reports.push(report);
                }
                let pooled: Vec<nndep::nap::Pattern> =
                    per_class.into_iter().flatten().collect();
                reports.push(neuron_kproj_coverage(&pooled, k)?);
                for r in &reports {
                    println!(
                        "{}: {} / {} = {} ({}%)",
                        r.group_label,
                        r.covered,
                        r.total,
                        r.display_ratio(),
                        r.display_percent()
                    );
                }
                write_report(&out.out.join("coverage.csv"), &coverage_csv(&reports))?;
                Ok(ExitCode::SUCCESS)
            }
            CoverageTarget::Scenarios {
                catalog,
                scenarios,
                k,
                out,
            } => {
                ensure_out(&out.out)?;
                let catalog = ScenarioCatalog::load(&catalog)?;
                let scenario_list = load_scenarios(&catalog, &scenarios)?;
                let report = scenario_kproj_coverage(&catalog, &scenario_list, k)?;
                println!(
                    "{} / {} = {} ({}%)",
                    report.covered,
                    report.total,
                    report.display_ratio(),
                    report.display_percent()
                );
                write_report(&out.out.join("coverage.csv"), &coverage_csv(&[report]))?;
                Ok(ExitCode::SUCCESS)
            }
        },

        Command::Suggest {
            catalog,
            scenarios,
            k,
            out,
        } => {
            ensure_out(&out.out)?;
            let catalog = ScenarioCatalog::load(&catalog)?;
            let scenario_list = load_scenarios(&catalog, &scenarios)?;
            let (suggestion, gain) = suggest_scenario(&catalog, &scenario_list, k)?;
            let named = catalog.scenario_names(&suggestion);
            let json = serde_json::json!({
                "scenario": named
                    .iter()
                    .map(|(d, v)| serde_json::json!({"dimension": d, "value": v}))
                    .collect::<Vec<_>>(),
                "gain": gain,
            });
            write_report(
                &out.out.join("suggest.json"),
                &serde_json::to_string_pretty(&json).unwrap(),
            )?;
            println!(
                "suggest {:?} (+{} cells)",
                named.iter().map(|(_, v)| v.as_str()).collect::<Vec<_>>(),
                gain
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Perturb {
            data,
            noise,
            out,
            seed,
        } => {
            ensure_out(&out.out)?;
            let dataset = load_dataset(&data)?;
            let specs = parse_specs(&noise, seed)?;
            let image_input = matches!(dataset.samples[0].features, Features::Image(_));
            if image_input {
                let mut manifest = String::from("# classes: ");
                manifest.push_str(&dataset.class_names.join(","));
                manifest.push('\n');
                for spec in &specs {
                    for sample in &dataset.samples {
                        let noisy = apply_noise_features(&sample.features, spec, &sample.id)?;
                        let Features::Image(img) = noisy else { unreachable!() };
                        let ext = if img.channels == 1 { "pgm" } else { "ppm" };
                        let name = format!(
                            "{}_{}.{ext}",
                            sample.id.replace('/', "_"),
                            spec.kind.name()
                        );
                        write_image(out.out.join(&name), &img)?;
                        manifest.push_str(&format!(
                            "{}_{},{name},{}\n",
                            sample.id,
                            spec.kind.name(),
                            sample.label
                        ));
                    }
                }
                write_report(&out.out.join("perturb.csv"), &manifest)?;
            } else {
                let mut noisy_samples = Vec::new();
                for spec in &specs {
                    for sample in &dataset.samples {
                        noisy_samples.push(nndep::data::Sample {
                            id: format!("{}_{}", sample.id, spec.kind.name()),
                            features: apply_noise_features(&sample.features, spec, &sample.id)?,
                            label: sample.label,
                        });
                    }
                }
                let noisy = Dataset::new(noisy_samples, dataset.class_names.clone())?;
                write_dataset(out.out.join("perturb.jsonl"), &noisy)?;
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Ploss {
            model,
            data,
            noise,
            out,
            seed,
            correct_only,
        } => {
            ensure_out(&out.out)?;
            let model = load_model(&model)?;
            let dataset = load_dataset(&data)?;
            let specs = parse_specs(&noise, seed)?;
            let reports = specs
                .iter()
                .map(|spec| perturbation_loss(&model, &dataset, spec, correct_only))
                .collect::<Result<Vec<_>>>()?;
            for r in &reports {
                println!(
                    "{}: overall loss {:.4} over {} samples",
                    r.kind.name(),
                    r.overall,
                    r.evaluated
                );
            }
            write_report(&out.out.join("ploss.csv"), &reports_to_csv(&reports))?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Augment {
            data,
            noise,
            out,
            seed,
        } => {
            ensure_out(&out.out)?;
            let dataset = load_dataset(&data)?;
            let specs = parse_specs(&noise, seed)?;
            let augmented = augment_dataset(&dataset, &specs)?;
            let image_input = matches!(dataset.samples[0].features, Features::Image(_));
            if image_input {
                let mut manifest = String::from("# classes: ");
                manifest.push_str(&augmented.class_names.join(","));
                manifest.push('\n');
                for sample in &augmented.samples {
                    let Features::Image(img) = &sample.features else { unreachable!() };
                    let ext = if img.channels == 1 { "pgm" } else { "ppm" };
                    let name = format!("{}.{ext}", sample.id.replace('/', "_"));
                    write_image(out.out.join(&name), img)?;
                    manifest.push_str(&format!("{},{name},{}\n", sample.id, sample.label));
                }
                write_report(&out.out.join("augment.csv"), &manifest)?;
            } else {
                write_dataset(out.out.join("augment.jsonl"), &augmented)?;
            }
            println!("{} samples ({} originals)", augmented.len(), dataset.len());
            Ok(ExitCode::SUCCESS)
        }

        Command::Monitor { action } => match action {
            MonitorAction::Build {
                traces,
                threshold,
                db,
                out,
            } => {
                ensure_out(&out.out)?;
                let traces = read_traces(&traces)?;
                let database = build_database(&traces, threshold)?;
                let db_path = db.unwrap_or_else(|| out.out.join("monitor.napdb"));
                save_db(&db_path, &database)?;
                let summary = serde_json::json!({
                    "neurons": database.neurons(),
                    "threshold": database.threshold(),
                    "classes": database.class_names(),
                    "patterns": database.pattern_count(),
                    "records": traces.records.len(),
                });
                write_report(
                    &out.out.join("monitor-build.json"),
                    &serde_json::to_string_pretty(&summary).unwrap(),
                )?;
                println!(
                    "stored {} distinct patterns from {} records",
                    database.pattern_count(),
                    traces.records.len()
                );
                Ok(ExitCode::SUCCESS)
            }
            MonitorAction::Run {
                traces,
                db,
                d,
                out,
            } => {
                ensure_out(&out.out)?;
                let traces = read_traces(&traces)?;
                let database = load_db(&db)?;
                let table = monitor_report(&database, &traces, d)?;
                write_report(&out.out.join("monitor-run.csv"), &table.to_csv())?;
                println!(
                    "{} records, {} not supported by training data",
                    traces.records.len(),
                    table.warnings
                );
                if table.warnings > 0 {
                    return Ok(ExitCode::from(3));
                }
                Ok(ExitCode::SUCCESS)
            }
        },

        Command::Retrieve {
            db,
            traces,
            id,
            k,
            class,
            manifest,
            out,
        } => {
            ensure_out(&out.out)?;
            let database = load_db(&db)?;
            let traces = read_traces(&traces)?;
            let record = match &id {
                Some(id) => traces
                    .records
                    .iter()
                    .find(|r| &r.sample_id == id)
                    .ok_or_else(|| Error::InvalidData(format!("no record with id {id}")))?,
                None => &traces.records[0],
            };
            let class_filter = match &class {
                Some(name) => Some(
                    database
                        .class_names()
                        .iter()
                        .position(|c| c == name)
                        .ok_or_else(|| Error::InvalidParam(format!("unknown class {name}")))?,
                ),
                None => None,
            };
            let paths = manifest.as_deref().map(load_path_manifest).transpose()?;
            let pattern = binarize_f32(&record.activations, database.threshold())?;
            let result = nearest_cases(&database, &pattern, k, class_filter)?;
            let neighbors: Vec<serde_json::Value> = result
                .neighbors
                .iter()
                .map(|n| {
                    let mut obj = serde_json::json!({
                        "id": n.sample_id,
                        "class": n.class,
                        "distance": n.distance,
                        "conf": n.confidence,
                    });
                    if let Some(paths) = &paths {
                        if let Some(path) = paths.get(&n.sample_id) {
                            obj["path"] = serde_json::json!(path);
                        }
                    }
                    obj
                })
                .collect();
            let json = serde_json::json!({
                "query_id": record.sample_id,
                "predicted": traces.class_names[record.predicted_label],
                "neighbors": neighbors,
            });
            write_report(
                &out.out.join("retrieve.json"),
                &serde_json::to_string_pretty(&json).unwrap(),
            )?;
            println!(
                "{} neighbors for {} (nearest at distance {})",
                result.neighbors.len(),
                record.sample_id,
                result.neighbors.first().map(|n| n.distance).unwrap_or(0)
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Apoz {
            model,
            data,
            layer,
            epsilon,
            out,
        } => {
            ensure_out(&out.out)?;
            let model = load_model(&model)?;
            let dataset = load_dataset(&data)?;
            let layer = layer.unwrap_or(model.monitored_layer);
            let report = apoz_scores(&model, &dataset, layer, epsilon)?;
            let mut csv = String::from("neuron,apoz\n");
            for (j, score) in report.scores.iter().enumerate() {
                csv.push_str(&format!("{j},{score}\n"));
            }
            write_report(&out.out.join("apoz.csv"), &csv)?;
            println!(
                "layer {layer}: {} neurons over {} samples (epsilon {})",
                report.scores.len(),
                report.samples,
                report.epsilon
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Prune {
            model,
            data,
            eval,
            layer,
            target,
            fraction,
            epochs,
            lr,
            of_remaining,
            seed,
            out,
        } => {
            ensure_out(&out.out)?;
            let model = load_model(&model)?;
            let train = load_dataset(&data)?;
            let eval = load_dataset(&eval)?;
            let mut config =
                PruneLoopConfig::new(layer.unwrap_or(model.monitored_layer), target, seed);
            config.step_fraction = fraction;
            config.epochs_between = epochs;
            config.learning_rate = lr;
            if of_remaining {
                config.step_base = StepBase::Remaining;
            }
            let (pruned, schedule) = prune_loop(&model, &train, &eval, &config)?;
            write_report(
                &out.out.join("prune.csv"),
                &schedule.to_csv(model.class_names.len()),
            )?;
            save_model(out.out.join("pruned-model.json"), &pruned)?;
            println!(
                "{} iterations, flops {} -> {}",
                schedule.iterations.len(),
                model.flop_count(),
                pruned.flop_count()
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Verify {
            model,
            property,
            samples,
            seed,
            out,
        } => {
            ensure_out(&out.out)?;
            let model = load_model(&model)?;
            let spec = PropertySpec::load(&property)?;
            let input = spec.interval_box()?;
            let result =
                check_property(&model, spec.from_layer, &input, &spec.property, samples, seed)?;
            let json = serde_json::json!({
                "status": result.status.name(),
                "desc": spec.property.description,
                "witness": result.witness,
                "output_box": {
                    "lo": result.output_box.lower,
                    "hi": result.output_box.upper,
                },
            });
            write_report(
                &out.out.join("verify.json"),
                &serde_json::to_string_pretty(&json).unwrap(),
            )?;
            println!("{}: {}", spec.property.description, result.status.name());
            if result.status == VerifyStatus::Violated {
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load_scenarios(catalog: &ScenarioCatalog, path: &Path) -> Result<Vec<nndep::coverage::Scenario>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let display = path.display().to_string();
    let mut scenarios = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let scenario = catalog
            .parse_scenario(line)
            .map_err(|e| Error::parse(&display, idx + 1, e.to_string()))?;
        scenarios.push(scenario);
    }
    Ok(scenarios)
}

/// CSV `id,path` map for resolving sample ids to image files.
fn load_path_manifest(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let display = path.display().to_string();
    let mut map = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, p) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(&display, idx + 1, "expected id,path"))?;
        map.insert(id.trim().to_string(), p.trim().to_string());
    }
    Ok(map)
}
