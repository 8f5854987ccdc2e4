//! Boxed-domain layer-wise verification: propagate an axis-aligned box of
//! neuron values through the remaining layers with interval arithmetic and
//! check a linear risk property against the output bounds.
//!
//! The affine step splits weights by sign and accumulates in exactly the same
//! order as the concrete forward pass, so (floating-point rounding being
//! monotone) every reachable output stays inside the bounds, and a degenerate
//! box propagates to exactly the concrete forward result. Softmax is bounded
//! per coordinate from its extreme logit corners; those corner evaluations
//! use a different max-shift than a concrete pass, so non-degenerate softmax
//! bounds are widened by a relative 1e-12 to absorb the rounding asymmetry.
//!
//! The check never reports a violation from the abstraction alone: HOLDS
//! comes from the bound, VIOLATED only from a concrete witness, and UNKNOWN
//! is the honest remainder.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sigmoid, softmax, Activation, Model};
use crate::rng::{indexed_seed, Rng};

/// Axis-aligned bounds on a layer's values.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl IntervalBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<IntervalBox> {
        if lower.len() != upper.len() {
            return Err(Error::Dimension(format!(
                "bound lengths differ: {} vs {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::NonFinite(format!("bound {i}")));
            }
            if lo > hi {
                return Err(Error::InvalidData(format!("bound {i}: lower {lo} > upper {hi}")));
            }
        }
        Ok(IntervalBox { lower, upper })
    }

    /// The degenerate box around one point.
    pub fn point(values: &[f64]) -> IntervalBox {
        IntervalBox {
            lower: values.to_vec(),
            upper: values.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn is_degenerate(&self) -> bool {
        self.lower.iter().zip(&self.upper).all(|(l, u)| l == u)
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.len()
            && point
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| lo <= x && x <= hi)
    }

    /// Componentwise inclusion.
    pub fn is_subset_of(&self, other: &IntervalBox) -> bool {
        self.len() == other.len()
            && self
                .lower
                .iter()
                .zip(&self.upper)
                .zip(other.lower.iter().zip(&other.upper))
                .all(|((lo, hi), (olo, ohi))| olo <= lo && hi <= ohi)
    }
}

/// A linear constraint `c . y <= b` over the model outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiskProperty {
    #[serde(rename = "c")]
    pub coefficients: Vec<f64>,
    #[serde(rename = "b")]
    pub bound: f64,
    #[serde(rename = "desc", default)]
    pub description: String,
}

/// Outcome of a property check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyStatus {
    Holds,
    Violated,
    Unknown,
}

impl VerifyStatus {
    pub fn name(self) -> &'static str {
        match self {
            VerifyStatus::Holds => "HOLDS",
            VerifyStatus::Violated => "VIOLATED",
            VerifyStatus::Unknown => "UNKNOWN",
        }
    }
}

/// Check result; `witness` is a concrete violating input (VIOLATED only).
#[derive(Debug, Clone)]
pub struct VerifyResult {
    pub status: VerifyStatus,
    pub witness: Option<Vec<f64>>,
    pub output_box: IntervalBox,
}

fn affine_bounds(
    weights: &[f64],
    bias: &[f64],
    in_dim: usize,
    out_dim: usize,
    input: &IntervalBox,
) -> (Vec<f64>, Vec<f64>) {
    let mut lower = Vec::with_capacity(out_dim);
    let mut upper = Vec::with_capacity(out_dim);
    for row in 0..out_dim {
        let w = &weights[row * in_dim..(row + 1) * in_dim];
        let mut lo = bias[row];
        let mut hi = bias[row];
        for (i, &wi) in w.iter().enumerate() {
            if wi >= 0.0 {
                lo += wi * input.lower[i];
                hi += wi * input.upper[i];
            } else {
                lo += wi * input.upper[i];
                hi += wi * input.lower[i];
            }
        }
        lower.push(lo);
        upper.push(hi);
    }
    (lower, upper)
}

/// Per-coordinate softmax bounds from the extreme logit corners: the upper
/// bound of output j uses (own logit high, all others low), the lower bound
/// the reverse.
fn softmax_bounds(pre: &IntervalBox) -> (Vec<f64>, Vec<f64>) {
    let n = pre.len();
    let degenerate = pre.is_degenerate();
    if degenerate {
        let exact = softmax(&pre.lower);
        return (exact.clone(), exact);
    }
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    let mut corner = vec![0.0; n];
    for j in 0..n {
        corner.copy_from_slice(&pre.upper);
        corner[j] = pre.lower[j];
        let lo = softmax(&corner)[j];
        corner.copy_from_slice(&pre.lower);
        corner[j] = pre.upper[j];
        let hi = softmax(&corner)[j];
        // absorb rounding asymmetry between corner and concrete evaluations
        lower.push((lo * (1.0 - 1e-12)).max(0.0));
        upper.push((hi * (1.0 + 1e-12)).min(1.0));
    }
    (lower, upper)
}

/// Sound output bounds for a box of inputs to layer `from_layer`, propagated
/// through every remaining layer.
pub fn propagate_box(model: &Model, from_layer: usize, input: &IntervalBox) -> Result<IntervalBox> {
    if from_layer >= model.layers.len() {
        return Err(Error::InvalidParam(format!(
            "from_layer {} out of range for {} layers",
            from_layer,
            model.layers.len()
        )));
    }
    if input.len() != model.layers[from_layer].in_dim {
        return Err(Error::Dimension(format!(
            "box length {} != layer {} in dim {}",
            input.len(),
            from_layer,
            model.layers[from_layer].in_dim
        )));
    }
    let mut current = input.clone();
    for layer in &model.layers[from_layer..] {
        let (pre_lo, pre_hi) =
            affine_bounds(&layer.weights, &layer.bias, layer.in_dim, layer.out_dim, &current);
        let pre = IntervalBox {
            lower: pre_lo,
            upper: pre_hi,
        };
        current = match layer.activation {
            Activation::Relu => IntervalBox {
                lower: pre.lower.iter().map(|&z| z.max(0.0)).collect(),
                upper: pre.upper.iter().map(|&z| z.max(0.0)).collect(),
            },
            Activation::Linear => pre,
            Activation::Sigmoid => IntervalBox {
                lower: pre.lower.iter().map(|&z| sigmoid(z)).collect(),
                upper: pre.upper.iter().map(|&z| sigmoid(z)).collect(),
            },
            Activation::Softmax => {
                let (lower, upper) = softmax_bounds(&pre);
                IntervalBox { lower, upper }
            }
        };
    }
    Ok(current)
}

/// Largest value `c . y` can take over the output box.
pub fn worst_case(prop: &RiskProperty, output: &IntervalBox) -> f64 {
    prop.coefficients
        .iter()
        .zip(output.lower.iter().zip(&output.upper))
        .map(|(&c, (lo, hi))| if c >= 0.0 { c * hi } else { c * lo })
        .sum()
}

/// Proves the property from the interval bound, or hunts for a concrete
/// counterexample by sampling `samples` points uniformly in the box, each
/// from its own derived seed. The witness, if any, violates the property
/// under the exact forward pass.
pub fn check_property(
    model: &Model,
    from_layer: usize,
    input: &IntervalBox,
    prop: &RiskProperty,
    samples: usize,
    seed: u64,
) -> Result<VerifyResult> {
    if prop.coefficients.len() != model.output_dim() {
        return Err(Error::Dimension(format!(
            "property has {} coefficients for {} outputs",
            prop.coefficients.len(),
            model.output_dim()
        )));
    }
    let output_box = propagate_box(model, from_layer, input)?;
    if worst_case(prop, &output_box) <= prop.bound {
        return Ok(VerifyResult {
            status: VerifyStatus::Holds,
            witness: None,
            output_box,
        });
    }
    for point_idx in 0..samples {
        let mut rng = Rng::new(indexed_seed(seed, point_idx as u64));
        let point: Vec<f64> = input
            .lower
            .iter()
            .zip(&input.upper)
            .map(|(&lo, &hi)| lo + rng.next_f64() * (hi - lo))
            .collect();
        let out = model.forward_from(from_layer, &point)?;
        let value: f64 = prop.coefficients.iter().zip(&out).map(|(c, y)| c * y).sum();
        if value > prop.bound {
            return Ok(VerifyResult {
                status: VerifyStatus::Violated,
                witness: Some(point),
                output_box,
            });
        }
    }
    Ok(VerifyResult {
        status: VerifyStatus::Unknown,
        witness: None,
        output_box,
    })
}

/// A property file: the constraint plus the box it must hold on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropertySpec {
    #[serde(flatten)]
    pub property: RiskProperty,
    #[serde(rename = "box")]
    pub bounds: BoxSpec,
    pub from_layer: usize,
}

/// Serialized form of an [`IntervalBox`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl PropertySpec {
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<PropertySpec> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: PropertySpec = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), e.line(), e.to_string()))?;
        Ok(spec)
    }

    pub fn interval_box(&self) -> Result<IntervalBox> {
        IntervalBox::new(self.bounds.lo.clone(), self.bounds.hi.clone())
    }
}
