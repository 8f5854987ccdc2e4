//! Dependability analysis for neural-network classifiers.
//!
//! `nndep` measures how much you can trust a classifier beyond its accuracy
//! number, at every phase of its life cycle:
//!
//! - **Data preparation** — [`coverage`]: scenario k-projection coverage of a
//!   labeled catalog, with greedy suggestion of the next scenario to label.
//! - **Training and validation** — [`nap`]: per-class histograms of neuron
//!   activation counts at a monitored layer; [`verify`]: interval
//!   propagation of a boxed neuron domain and linear risk-property checks.
//! - **Testing and generalization** — [`coverage`]: neuron k-projection
//!   coverage over binarized activation patterns; [`perturb`]: nine noise
//!   kinds, a relative confidence-loss metric, and dataset augmentation.
//! - **Operation** — [`monitor`]: a per-class pattern database queried by
//!   Hamming distance, warning when a prediction has no support in the
//!   training data; [`evidence`]: the nearest training cases as
//!   human-checkable support for a prediction.
//! - **Optimization** — [`apoz`]: Average-Percentage-of-Zeros scoring and an
//!   iterative prune/fine-tune loop.
//!
//! The [`model`] module provides a small dense-network engine (forward pass
//! with activation capture, SGD trainer, pruning) so everything runs
//! end-to-end at desk scale; [`data`] ingests activation traces exported
//! from external frameworks, which is the interchange point for real models.
//!
//! # Runnable examples
//!
//! Each major capability has one example under `examples/`:
//!
//! ```text
//! cargo run --example train_demo          # synthesize data, train, save a model
//! cargo run --example activation_histograms
//! cargo run --example neuron_coverage
//! cargo run --example scenario_coverage
//! cargo run --example noise_robustness
//! cargo run --example runtime_monitor
//! cargo run --example similar_cases
//! cargo run --example pruning
//! cargo run --example interval_verify
//! ```
//!
//! A thin batch CLI (`nndep`) wraps the same calls for shell pipelines; see
//! the README.
//!
//! # Determinism
//!
//! Every random choice flows from explicit seeds through the fixed generator
//! in [`rng`], so identical inputs and seeds give byte-identical outputs,
//! including across the per-sample noise streams of [`perturb`].

pub mod apoz;
pub mod coverage;
pub mod data;
pub mod error;
pub mod evidence;
pub mod image;
pub mod model;
pub mod monitor;
pub mod nap;
pub mod perturb;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
