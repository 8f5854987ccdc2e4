//! Case-based evidence: the k nearest training cases to a query pattern,
//! presented as support for (or against) a prediction.
//!
//! Retrieval spans all classes by default so that neighbors from a competing
//! class are visible too; a class filter narrows it when only same-class
//! cases are wanted.

use crate::error::{Error, Result};
use crate::monitor::PatternDatabase;
use crate::nap::Pattern;

/// One retrieved training case.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub sample_id: String,
    pub class: String,
    pub distance: usize,
    pub confidence: f64,
}

/// Nearest cases in non-decreasing distance order; ties break by
/// (class name, sample id).
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceResult {
    pub neighbors: Vec<Neighbor>,
}

/// The k globally nearest stored cases by Hamming distance. Returns fewer
/// than k when the database holds fewer samples; `class_filter` restricts the
/// search to one class.
pub fn nearest_cases(
    db: &PatternDatabase,
    pattern: &Pattern,
    k: usize,
    class_filter: Option<usize>,
) -> Result<EvidenceResult> {
    if k == 0 {
        return Err(Error::InvalidParam("k must be >= 1".into()));
    }
    if pattern.len() != db.neurons() {
        return Err(Error::Dimension(format!(
            "query pattern length {} != database width {}",
            pattern.len(),
            db.neurons()
        )));
    }
    if let Some(class) = class_filter {
        if class >= db.class_names().len() {
            return Err(Error::InvalidParam(format!("unknown class filter {class}")));
        }
    }
    if db.is_empty() {
        return Err(Error::InvalidData("pattern database is empty".into()));
    }

    let mut candidates: Vec<Neighbor> = Vec::new();
    for (class_idx, class_name) in db.class_names().iter().enumerate() {
        if class_filter.is_some_and(|f| f != class_idx) {
            continue;
        }
        for (stored, entries) in db.class_patterns(class_idx) {
            let distance = stored.xor_count(pattern)?;
            for e in entries {
                candidates.push(Neighbor {
                    sample_id: e.sample_id.clone(),
                    class: class_name.clone(),
                    distance,
                    confidence: e.confidence,
                });
            }
        }
    }
    candidates.sort_by(|a, b| {
        a.distance
            .cmp(&b.distance)
            .then_with(|| a.class.cmp(&b.class))
            .then_with(|| a.sample_id.cmp(&b.sample_id))
    });
    candidates.truncate(k);
    Ok(EvidenceResult {
        neighbors: candidates,
    })
}
