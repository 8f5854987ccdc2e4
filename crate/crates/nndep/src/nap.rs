//! Neuron activation patterns: binarization, conv-map reduction, per-class
//! activation-count histograms, and Hamming distance.
//!
//! A pattern is the on-off snapshot of a layer: bit i is set when neuron i's
//! activation is strictly above the threshold (default 0, the natural "on"
//! for post-relu values).

use std::collections::BTreeMap;

use crate::data::TraceSet;
use crate::error::{Error, Result};

/// Which label a per-class operation groups by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    True,
    Predicted,
}

/// Fixed-length bit vector with cheap popcount and XOR.
///
/// Bits are packed LSB-first into u64 words internally; the byte and hex
/// serializations are MSB-first (neuron 0 is the top bit of the first byte).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern {
    len: usize,
    words: Vec<u64>,
}

impl Pattern {
    pub fn zeros(len: usize) -> Pattern {
        Pattern {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bits(bits: &[bool]) -> Pattern {
        let mut p = Pattern::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                p.set(i, true);
            }
        }
        p
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        if value {
            self.words[i >> 6] |= 1u64 << (i & 63);
        } else {
            self.words[i >> 6] &= !(1u64 << (i & 63));
        }
    }

    /// Number of set bits.
    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// popcount(self XOR other); both patterns must share a length.
    pub fn xor_count(&self, other: &Pattern) -> Result<usize> {
        if self.len != other.len {
            return Err(Error::Dimension(format!(
                "pattern lengths differ: {} vs {}",
                self.len, other.len
            )));
        }
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    /// Like [`Pattern::xor_count`], but gives up once the running count
    /// exceeds `cap` and returns None. Lets distance scans skip patterns
    /// that can neither match nor improve the current minimum.
    pub fn xor_count_capped(&self, other: &Pattern, cap: usize) -> Result<Option<usize>> {
        if self.len != other.len {
            return Err(Error::Dimension(format!(
                "pattern lengths differ: {} vs {}",
                self.len, other.len
            )));
        }
        let mut count = 0usize;
        for (a, b) in self.words.iter().zip(&other.words) {
            count += (a ^ b).count_ones() as usize;
            if count > cap {
                return Ok(None);
            }
        }
        Ok(Some(count))
    }

    /// MSB-first packed bytes: neuron 8k is the top bit of byte k.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = vec![0u8; self.len.div_ceil(8)];
        for i in 0..self.len {
            if self.get(i) {
                bytes[i / 8] |= 0x80 >> (i % 8);
            }
        }
        bytes
    }

    pub fn from_bytes(len: usize, bytes: &[u8]) -> Result<Pattern> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::Dimension(format!(
                "{} bytes cannot hold a {len}-bit pattern",
                bytes.len()
            )));
        }
        let mut p = Pattern::zeros(len);
        for i in 0..len {
            if bytes[i / 8] & (0x80 >> (i % 8)) != 0 {
                p.set(i, true);
            }
        }
        // trailing bits past len must be zero
        if !len.is_multiple_of(8) {
            let tail = bytes[len / 8] & (0xFFu8 >> (len % 8));
            if tail != 0 {
                return Err(Error::InvalidData("set bits past pattern length".into()));
            }
        }
        Ok(p)
    }

    /// Hex rendering of [`Pattern::to_bytes`].
    pub fn to_hex(&self) -> String {
        self.to_bytes().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(len: usize, hex: &str) -> Result<Pattern> {
        if !hex.len().is_multiple_of(2) {
            return Err(Error::InvalidData("odd-length hex pattern".into()));
        }
        let bytes: Vec<u8> = (0..hex.len() / 2)
            .map(|i| {
                u8::from_str_radix(&hex[2 * i..2 * i + 2], 16)
                    .map_err(|_| Error::InvalidData(format!("bad hex in pattern: {hex}")))
            })
            .collect::<Result<_>>()?;
        Pattern::from_bytes(len, &bytes)
    }
}

/// Bit i is set iff `activations[i] > threshold` (strict).
pub fn binarize(activations: &[f64], threshold: f64) -> Result<Pattern> {
    if let Some(pos) = activations.iter().position(|a| !a.is_finite()) {
        return Err(Error::NonFinite(format!("activation {pos}")));
    }
    let mut p = Pattern::zeros(activations.len());
    for (i, &a) in activations.iter().enumerate() {
        if a > threshold {
            p.set(i, true);
        }
    }
    Ok(p)
}

/// Binarizes a trace record's f32 activations.
pub fn binarize_f32(activations: &[f32], threshold: f64) -> Result<Pattern> {
    let as_f64: Vec<f64> = activations.iter().map(|&a| f64::from(a)).collect();
    binarize(&as_f64, threshold)
}

/// Reduces a C x H x W feature map to one mean per channel, the standard
/// conv-trace reduction before binarization.
pub fn spatial_average(map: &[f64], channels: usize, height: usize, width: usize) -> Result<Vec<f64>> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidParam("empty spatial dimensions".into()));
    }
    if map.len() != channels * height * width {
        return Err(Error::Dimension(format!(
            "map length {} != {channels}x{height}x{width}",
            map.len()
        )));
    }
    let area = height * width;
    Ok((0..channels)
        .map(|c| map[c * area..(c + 1) * area].iter().sum::<f64>() / area as f64)
        .collect())
}

/// Popcount of a pattern.
pub fn activation_count(p: &Pattern) -> usize {
    p.count_ones()
}

/// Hamming distance between two equal-length patterns.
pub fn hamming(a: &Pattern, b: &Pattern) -> Result<usize> {
    a.xor_count(b)
}

/// Distribution of activation counts for one class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub class_label: String,
    pub bin_width: usize,
    /// bin start (a multiple of `bin_width`) -> sample count
    pub bins: BTreeMap<usize, usize>,
}

impl Histogram {
    /// Total mass across bins.
    pub fn total(&self) -> usize {
        self.bins.values().sum()
    }

    /// Standard deviation of the underlying activation counts, bin-start
    /// approximated. Narrow histograms are the hallmark of a settled model.
    pub fn spread(&self) -> f64 {
        let n = self.total() as f64;
        if n == 0.0 {
            return 0.0;
        }
        let mean: f64 = self
            .bins
            .iter()
            .map(|(&start, &count)| start as f64 * count as f64)
            .sum::<f64>()
            / n;
        let var: f64 = self
            .bins
            .iter()
            .map(|(&start, &count)| (start as f64 - mean).powi(2) * count as f64)
            .sum::<f64>()
            / n;
        var.sqrt()
    }
}

/// Histogram of `activation_count(binarize(act))` over records of one class.
pub fn class_histogram(
    traces: &TraceSet,
    class: usize,
    by: LabelKind,
    threshold: f64,
    bin_width: usize,
) -> Result<Histogram> {
    if bin_width == 0 {
        return Err(Error::InvalidParam("bin width must be >= 1".into()));
    }
    if class >= traces.class_names.len() {
        return Err(Error::InvalidParam(format!(
            "class {class} out of range for {} classes",
            traces.class_names.len()
        )));
    }
    let mut bins: BTreeMap<usize, usize> = BTreeMap::new();
    let mut seen = 0usize;
    for r in &traces.records {
        let label = match by {
            LabelKind::True => r.true_label,
            LabelKind::Predicted => r.predicted_label,
        };
        if label != class {
            continue;
        }
        seen += 1;
        let count = binarize_f32(&r.activations, threshold)?.count_ones();
        *bins.entry((count / bin_width) * bin_width).or_insert(0) += 1;
    }
    if seen == 0 {
        return Err(Error::EmptyClass(traces.class_names[class].clone()));
    }
    Ok(Histogram {
        class_label: traces.class_names[class].clone(),
        bin_width,
        bins,
    })
}

/// CSV rows `class,bin_start,count` for a set of histograms.
pub fn histograms_to_csv(histograms: &[Histogram]) -> String {
    let mut out = String::from("class,bin_start,count\n");
    for h in histograms {
        for (&start, &count) in &h.bins {
            out.push_str(&format!("{},{},{}\n", h.class_label, start, count));
        }
    }
    out
}
