//! Runtime monitoring: a per-class database of training-time activation
//! patterns, Hamming-distance queries with a four-way verdict, and the
//! (real, predicted, verdict) distribution table.
//!
//! A query pattern is SUPPORTED_SAME when only the predicted class holds a
//! pattern within distance d, SUPPORTED_OTHER when exactly one other class
//! does, AMBIGUOUS when two or more classes do, and NOT_FOUND — the warning
//! case — when no class does: the prediction is not supported by anything
//! seen in training.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use crate::data::TraceSet;
use crate::error::{Error, Result};
use crate::nap::{binarize_f32, Pattern};

const DB_MAGIC: &[u8; 4] = b"NAPD";
const DB_VERSION: u16 = 1;

/// One training sample behind a stored pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct DbEntry {
    pub sample_id: String,
    pub confidence: f64,
}

/// Per-class sets of distinct patterns with the samples that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternDatabase {
    neurons: usize,
    threshold: f64,
    class_names: Vec<String>,
    /// class index -> pattern -> contributing samples (insertion order)
    classes: Vec<BTreeMap<Pattern, Vec<DbEntry>>>,
}

impl PatternDatabase {
    pub fn neurons(&self) -> usize {
        self.neurons
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Distinct patterns stored for one class.
    pub fn class_patterns(&self, class: usize) -> &BTreeMap<Pattern, Vec<DbEntry>> {
        &self.classes[class]
    }

    pub fn pattern_count(&self) -> usize {
        self.classes.iter().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.pattern_count() == 0
    }
}

/// Builds the database from training traces, grouped by true label.
/// Duplicate patterns within a class merge their sample lists.
pub fn build_database(traces: &TraceSet, threshold: f64) -> Result<PatternDatabase> {
    let mut classes: Vec<BTreeMap<Pattern, Vec<DbEntry>>> =
        vec![BTreeMap::new(); traces.class_names.len()];
    for r in &traces.records {
        let pattern = binarize_f32(&r.activations, threshold)?;
        classes[r.true_label]
            .entry(pattern)
            .or_default()
            .push(DbEntry {
                sample_id: r.sample_id.clone(),
                confidence: r.confidence,
            });
    }
    Ok(PatternDatabase {
        neurons: traces.neurons,
        threshold,
        class_names: traces.class_names.clone(),
        classes,
    })
}

/// The four-way outcome of a monitoring query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum VerdictCategory {
    SupportedSame,
    SupportedOther,
    Ambiguous,
    NotFound,
}

impl VerdictCategory {
    pub fn name(self) -> &'static str {
        match self {
            VerdictCategory::SupportedSame => "SUPPORTED_SAME",
            VerdictCategory::SupportedOther => "SUPPORTED_OTHER",
            VerdictCategory::Ambiguous => "AMBIGUOUS",
            VerdictCategory::NotFound => "NOT_FOUND",
        }
    }

    pub const ALL: [VerdictCategory; 4] = [
        VerdictCategory::SupportedSame,
        VerdictCategory::SupportedOther,
        VerdictCategory::Ambiguous,
        VerdictCategory::NotFound,
    ];
}

/// Query result: which classes matched within d, the distance to the nearest
/// stored pattern overall (None only for an empty database), the verdict, and
/// whether a not-supported warning fired.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonitorVerdict {
    pub matched_classes: BTreeSet<usize>,
    pub min_distance: Option<usize>,
    pub category: VerdictCategory,
    pub warning: bool,
}

/// Compares a pattern against the database within Hamming distance `d`.
///
/// d=0 uses exact lookup; d>=1 is a linear popcount scan that stops early
/// once the global minimum cannot improve.
pub fn query(
    db: &PatternDatabase,
    pattern: &Pattern,
    predicted: usize,
    d: usize,
) -> Result<MonitorVerdict> {
    if pattern.len() != db.neurons {
        return Err(Error::Dimension(format!(
            "query pattern length {} != database width {}",
            pattern.len(),
            db.neurons
        )));
    }
    if predicted >= db.class_names.len() {
        return Err(Error::InvalidParam(format!(
            "predicted class {predicted} unknown to the database"
        )));
    }

    let mut matched = BTreeSet::new();
    let mut min_distance: Option<usize> = None;

    if d == 0 {
        for (class, patterns) in db.classes.iter().enumerate() {
            if patterns.contains_key(pattern) {
                matched.insert(class);
                min_distance = Some(0);
            }
        }
    }
    if min_distance != Some(0) {
        for (class, patterns) in db.classes.iter().enumerate() {
            for stored in patterns.keys() {
                // a pattern past this cap can neither match within d nor
                // improve the running minimum, so the count may stop early
                let cap = match min_distance {
                    Some(m) => d.max(m.saturating_sub(1)),
                    None => usize::MAX,
                };
                let Some(dist) = stored.xor_count_capped(pattern, cap)? else {
                    continue;
                };
                if dist <= d {
                    matched.insert(class);
                }
                if min_distance.is_none_or(|m| dist < m) {
                    min_distance = Some(dist);
                }
            }
        }
    }

    let category = match matched.len() {
        0 => VerdictCategory::NotFound,
        1 if matched.contains(&predicted) => VerdictCategory::SupportedSame,
        1 => VerdictCategory::SupportedOther,
        _ => VerdictCategory::Ambiguous,
    };
    Ok(MonitorVerdict {
        warning: category == VerdictCategory::NotFound,
        matched_classes: matched,
        min_distance,
        category,
    })
}

/// One row of the monitoring distribution table.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorRow {
    pub real: String,
    pub predicted: String,
    pub category: VerdictCategory,
    pub count: usize,
    /// Mean confidence of the counted records; None when the row is empty.
    pub mean_confidence: Option<f64>,
}

/// Distribution of records over (real class, predicted class, verdict).
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorTable {
    pub d: usize,
    pub rows: Vec<MonitorRow>,
    pub warnings: usize,
}

impl MonitorTable {
    /// CSV rows `real,predicted,category,count,mean_conf`; empty rows keep
    /// the count at 0 with a blank confidence.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("real,predicted,category,count,mean_conf\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.real,
                row.predicted,
                row.category.name(),
                row.count,
                row.mean_confidence.map(|c| c.to_string()).unwrap_or_default()
            ));
        }
        out
    }
}

/// Queries every record of `traces` against `db` and tabulates the verdicts.
/// Emits the full (real x predicted x category) cross product so zero cells
/// are visible.
pub fn monitor_report(db: &PatternDatabase, traces: &TraceSet, d: usize) -> Result<MonitorTable> {
    if traces.neurons != db.neurons {
        return Err(Error::Dimension(format!(
            "trace width {} != database width {}",
            traces.neurons, db.neurons
        )));
    }
    let classes = db.class_names.len();
    let mut counts = vec![0usize; classes * classes * 4];
    let mut conf_sums = vec![0.0f64; classes * classes * 4];
    let mut warnings = 0usize;
    for r in &traces.records {
        let pattern = binarize_f32(&r.activations, db.threshold)?;
        let verdict = query(db, &pattern, r.predicted_label, d)?;
        if verdict.warning {
            warnings += 1;
        }
        let cat_idx = VerdictCategory::ALL
            .iter()
            .position(|&c| c == verdict.category)
            .unwrap();
        let idx = (r.true_label * classes + r.predicted_label) * 4 + cat_idx;
        counts[idx] += 1;
        conf_sums[idx] += r.confidence;
    }
    let mut rows = Vec::with_capacity(classes * classes * 4);
    for real in 0..classes {
        for predicted in 0..classes {
            for (cat_idx, &category) in VerdictCategory::ALL.iter().enumerate() {
                let idx = (real * classes + predicted) * 4 + cat_idx;
                rows.push(MonitorRow {
                    real: db.class_names[real].clone(),
                    predicted: db.class_names[predicted].clone(),
                    category,
                    count: counts[idx],
                    mean_confidence: (counts[idx] > 0)
                        .then(|| conf_sums[idx] / counts[idx] as f64),
                });
            }
        }
    }
    Ok(MonitorTable { d, rows, warnings })
}

// === binary persistence ===

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn str16(&mut self, s: &str) -> Result<()> {
        let len = u16::try_from(s.len())
            .map_err(|_| Error::InvalidData(format!("string too long for db: {s}")))?;
        self.u16(len);
        self.buf.extend_from_slice(s.as_bytes());
        Ok(())
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::UnsupportedFormat(format!(
                "truncated database: needed {n} bytes at offset {}",
                self.pos
            )));
        }
        let slice = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn str16(&mut self) -> Result<String> {
        let len = self.u16()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| Error::UnsupportedFormat("invalid utf-8 in database".into()))
    }
}

/// Serializes the database: magic "NAPD", version, width, threshold, then per
/// class its name and (pattern bytes, sample entries) list. Byte-stable for a
/// given database.
pub fn save_db(path: impl AsRef<Path>, db: &PatternDatabase) -> Result<()> {
    let path = path.as_ref();
    let mut w = Writer { buf: Vec::new() };
    w.buf.extend_from_slice(DB_MAGIC);
    w.u16(DB_VERSION);
    w.u32(u32::try_from(db.neurons).map_err(|_| Error::Overflow("db width".into()))?);
    w.f64(db.threshold);
    w.u16(
        u16::try_from(db.class_names.len())
            .map_err(|_| Error::Overflow("db class count".into()))?,
    );
    for (class, patterns) in db.class_names.iter().zip(&db.classes) {
        w.str16(class)?;
        w.u32(u32::try_from(patterns.len()).map_err(|_| Error::Overflow("pattern count".into()))?);
        for (pattern, entries) in patterns {
            w.buf.extend_from_slice(&pattern.to_bytes());
            w.u32(
                u32::try_from(entries.len()).map_err(|_| Error::Overflow("entry count".into()))?,
            );
            for e in entries {
                w.str16(&e.sample_id)?;
                w.f64(e.confidence);
            }
        }
    }
    std::fs::write(path, w.buf).map_err(|e| Error::io(path, e))
}

/// Reads a database written by [`save_db`]; round-trips bit-exactly.
pub fn load_db(path: impl AsRef<Path>) -> Result<PatternDatabase> {
    let path = path.as_ref();
    let mut data = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut data))
        .map_err(|e| Error::io(path, e))?;
    let mut r = Reader { data: &data, pos: 0 };
    let magic = r.take(4)?;
    if magic != DB_MAGIC {
        return Err(Error::UnsupportedFormat(format!(
            "{}: bad magic {:02x?}, expected \"NAPD\"",
            path.display(),
            magic
        )));
    }
    let version = r.u16()?;
    if version != DB_VERSION {
        return Err(Error::UnsupportedFormat(format!(
            "{}: database version {version}, expected {DB_VERSION}",
            path.display()
        )));
    }
    let neurons = r.u32()? as usize;
    let threshold = r.f64()?;
    let class_count = r.u16()? as usize;
    let mut class_names = Vec::with_capacity(class_count);
    let mut classes = Vec::with_capacity(class_count);
    let pattern_bytes = neurons.div_ceil(8);
    for _ in 0..class_count {
        class_names.push(r.str16()?);
        let pattern_count = r.u32()? as usize;
        let mut patterns = BTreeMap::new();
        for _ in 0..pattern_count {
            let pattern = Pattern::from_bytes(neurons, r.take(pattern_bytes)?)?;
            let entry_count = r.u32()? as usize;
            let mut entries = Vec::with_capacity(entry_count);
            for _ in 0..entry_count {
                let sample_id = r.str16()?;
                let confidence = r.f64()?;
                entries.push(DbEntry {
                    sample_id,
                    confidence,
                });
            }
            patterns.insert(pattern, entries);
        }
        classes.push(patterns);
    }
    if r.pos != data.len() {
        return Err(Error::UnsupportedFormat(format!(
            "{}: {} trailing bytes",
            path.display(),
            data.len() - r.pos
        )));
    }
    Ok(PatternDatabase {
        neurons,
        threshold,
        class_names,
        classes,
    })
}
