//! Samples, datasets, and activation traces.
//!
//! The trace file is the interchange point with external frameworks: a
//! JSON-lines file whose first line is a header `{"neurons":N,"classes":[..]}`
//! followed by one record per line,
//! `{"id":"...","label":0,"pred":1,"conf":0.9,"act":[...]}`.
//! Activations are 32-bit floats, mimicking framework exports.
//!
//! Vector datasets use the same shape: header `{"classes":[..],"features":N}`,
//! records `{"id":"...","label":0,"x":[...]}`. Image datasets are a CSV
//! manifest `id,path,label` next to PGM/PPM files.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{read_image, Image};
use crate::model::Model;
use crate::rng::Rng;

/// Feature payload of a sample: a plain vector or a raster image.
#[derive(Debug, Clone, PartialEq)]
pub enum Features {
    Vector(Vec<f64>),
    Image(Image),
}

impl Features {
    pub fn dim(&self) -> usize {
        match self {
            Features::Vector(v) => v.len(),
            Features::Image(img) => img.pixels.len(),
        }
    }

    /// Flattened view used as model input.
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            Features::Vector(v) => v.clone(),
            Features::Image(img) => img.pixels.clone(),
        }
    }
}

/// One labeled sample.
#[derive(Debug, Clone)]
pub struct Sample {
    pub id: String,
    pub features: Features,
    pub label: usize,
}

/// An ordered, immutable collection of samples with class metadata.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, class_names: Vec<String>) -> Result<Dataset> {
        if samples.is_empty() {
            return Err(Error::InvalidData("dataset is empty".into()));
        }
        let dim = samples[0].features.dim();
        let mut ids = HashSet::new();
        for s in &samples {
            if s.id.is_empty() {
                return Err(Error::InvalidData("empty sample id".into()));
            }
            if !ids.insert(s.id.as_str()) {
                return Err(Error::InvalidData(format!("duplicate sample id {}", s.id)));
            }
            if s.features.dim() != dim {
                return Err(Error::Dimension(format!(
                    "sample {}: feature dim {} != {}",
                    s.id,
                    s.features.dim(),
                    dim
                )));
            }
            if s.label >= class_names.len() {
                return Err(Error::InvalidData(format!(
                    "sample {}: label {} out of range for {} classes",
                    s.id,
                    s.label,
                    class_names.len()
                )));
            }
        }
        Ok(Dataset {
            samples,
            class_names,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.samples[0].features.dim()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// One sample's activations at the monitored layer, with labels attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    #[serde(rename = "id")]
    pub sample_id: String,
    #[serde(rename = "label")]
    pub true_label: usize,
    #[serde(rename = "pred")]
    pub predicted_label: usize,
    #[serde(rename = "conf")]
    pub confidence: f64,
    #[serde(rename = "act")]
    pub activations: Vec<f32>,
}

/// A homogeneous set of trace records.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    pub neurons: usize,
    pub class_names: Vec<String>,
    pub records: Vec<TraceRecord>,
}

#[derive(Serialize, Deserialize)]
struct TraceHeader {
    neurons: usize,
    classes: Vec<String>,
}

impl TraceSet {
    pub fn new(neurons: usize, class_names: Vec<String>, records: Vec<TraceRecord>) -> Result<TraceSet> {
        if records.is_empty() {
            return Err(Error::InvalidData("trace set is empty".into()));
        }
        for (i, r) in records.iter().enumerate() {
            validate_record(r, neurons, class_names.len(), i + 2, "<memory>")?;
        }
        Ok(TraceSet {
            neurons,
            class_names,
            records,
        })
    }

    /// Records whose confidence is at least `min_conf`.
    pub fn filter_min_confidence(&self, min_conf: f64) -> Result<TraceSet> {
        let records: Vec<TraceRecord> = self
            .records
            .iter()
            .filter(|r| r.confidence >= min_conf)
            .cloned()
            .collect();
        if records.is_empty() {
            return Err(Error::InvalidData(format!(
                "no records with confidence >= {min_conf}"
            )));
        }
        Ok(TraceSet {
            neurons: self.neurons,
            class_names: self.class_names.clone(),
            records,
        })
    }
}

fn validate_record(
    r: &TraceRecord,
    neurons: usize,
    classes: usize,
    line: usize,
    path: &str,
) -> Result<()> {
    if r.activations.len() != neurons {
        return Err(Error::parse(
            path,
            line,
            format!(
                "record {}: {} activations, header says {neurons}",
                r.sample_id,
                r.activations.len()
            ),
        ));
    }
    if !(0.0..=1.0).contains(&r.confidence) {
        return Err(Error::parse(
            path,
            line,
            format!("record {}: confidence {} outside [0,1]", r.sample_id, r.confidence),
        ));
    }
    if r.true_label >= classes || r.predicted_label >= classes {
        return Err(Error::parse(
            path,
            line,
            format!("record {}: label out of range for {classes} classes", r.sample_id),
        ));
    }
    if r.activations.iter().any(|a| !a.is_finite()) {
        return Err(Error::parse(
            path,
            line,
            format!("record {}: non-finite activation", r.sample_id),
        ));
    }
    Ok(())
}

/// Reads a JSON-lines trace file.
pub fn read_traces(path: impl AsRef<Path>) -> Result<TraceSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let display = path.display().to_string();
    let mut lines = text.lines().enumerate();
    let (_, header_line) = lines
        .next()
        .ok_or_else(|| Error::parse(&display, 1, "missing header line"))?;
    let header: TraceHeader = serde_json::from_str(header_line)
        .map_err(|e| Error::parse(&display, 1, format!("bad header: {e}")))?;
    if header.neurons == 0 {
        return Err(Error::parse(&display, 1, "header declares zero neurons"));
    }

    let mut records = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let record: TraceRecord = serde_json::from_str(line)
            .map_err(|e| Error::parse(&display, idx + 1, e.to_string()))?;
        validate_record(&record, header.neurons, header.classes.len(), idx + 1, &display)?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::InvalidData(format!("{display}: no records after header")));
    }
    Ok(TraceSet {
        neurons: header.neurons,
        class_names: header.classes,
        records,
    })
}

/// Writes a trace set as JSON-lines; round-trips exactly.
pub fn write_traces(path: impl AsRef<Path>, traces: &TraceSet) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    let header = TraceHeader {
        neurons: traces.neurons,
        classes: traces.class_names.clone(),
    };
    out.push_str(&serde_json::to_string(&header).expect("header serializes"));
    out.push('\n');
    for r in &traces.records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Two well-separated 2-D Gaussian clusters, one per class, clamped to the
/// unit square so image-style noise applies unchanged. Deterministic per seed.
pub fn synth_dataset(n_per_class: usize, spread: f64, seed: u64) -> Result<Dataset> {
    if n_per_class == 0 {
        return Err(Error::InvalidParam("n_per_class must be >= 1".into()));
    }
    if !spread.is_finite() || spread < 0.0 {
        return Err(Error::InvalidParam(format!("spread {spread} must be >= 0")));
    }
    let centers = [[0.25, 0.25], [0.75, 0.75]];
    let mut rng = Rng::new(seed);
    let mut samples = Vec::with_capacity(2 * n_per_class);
    for (label, center) in centers.iter().enumerate() {
        for i in 0..n_per_class {
            let features = vec![
                (center[0] + spread * rng.next_normal()).clamp(0.0, 1.0),
                (center[1] + spread * rng.next_normal()).clamp(0.0, 1.0),
            ];
            samples.push(Sample {
                id: format!("c{label}-{i:04}"),
                features: Features::Vector(features),
                label,
            });
        }
    }
    Dataset::new(samples, vec!["class0".into(), "class1".into()])
}

/// Runs the model over a dataset and records the monitored layer's
/// activations plus prediction and confidence, one record per sample.
pub fn trace_dataset(model: &Model, data: &Dataset) -> Result<TraceSet> {
    if data.feature_dim() != model.input_dim() {
        return Err(Error::Dimension(format!(
            "dataset feature dim {} != model input dim {}",
            data.feature_dim(),
            model.input_dim()
        )));
    }
    if data.class_names.len() != model.class_names.len() {
        return Err(Error::InvalidData(format!(
            "dataset has {} classes, model {}",
            data.class_names.len(),
            model.class_names.len()
        )));
    }
    let mut records = Vec::with_capacity(data.len());
    for sample in &data.samples {
        let input = sample.features.to_vec();
        let acts = model.forward_capture(&input)?;
        let (pred, conf) = crate::model::argmax(&acts.output);
        records.push(TraceRecord {
            sample_id: sample.id.clone(),
            true_label: sample.label,
            predicted_label: pred,
            confidence: conf,
            activations: acts.per_layer[model.monitored_layer]
                .iter()
                .map(|&a| a as f32)
                .collect(),
        });
    }
    TraceSet::new(model.monitored_width(), model.class_names.clone(), records)
}

// === dataset persistence ===

#[derive(Serialize, Deserialize)]
struct DatasetHeader {
    classes: Vec<String>,
    features: usize,
}

#[derive(Serialize, Deserialize)]
struct VectorRecord {
    id: String,
    label: usize,
    x: Vec<f64>,
}

/// Writes a vector-feature dataset as JSON-lines. Image datasets belong in a
/// manifest plus image files instead.
pub fn write_dataset(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    let header = DatasetHeader {
        classes: data.class_names.clone(),
        features: data.feature_dim(),
    };
    out.push_str(&serde_json::to_string(&header).expect("header serializes"));
    out.push('\n');
    for s in &data.samples {
        let x = match &s.features {
            Features::Vector(v) => v.clone(),
            Features::Image(_) => {
                return Err(Error::InvalidData(format!(
                    "sample {} has image features; write a manifest instead",
                    s.id
                )))
            }
        };
        let record = VectorRecord {
            id: s.id.clone(),
            label: s.label,
            x,
        };
        out.push_str(&serde_json::to_string(&record).expect("record serializes"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a JSON-lines vector dataset.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let display = path.display().to_string();
    let mut lines = text.lines().enumerate();
    let (_, header_line) = lines
        .next()
        .ok_or_else(|| Error::parse(&display, 1, "missing header line"))?;
    let header: DatasetHeader = serde_json::from_str(header_line)
        .map_err(|e| Error::parse(&display, 1, format!("bad header: {e}")))?;
    let mut samples = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let record: VectorRecord = serde_json::from_str(line)
            .map_err(|e| Error::parse(&display, idx + 1, e.to_string()))?;
        if record.x.len() != header.features {
            return Err(Error::parse(
                &display,
                idx + 1,
                format!(
                    "record {}: {} features, header says {}",
                    record.id,
                    record.x.len(),
                    header.features
                ),
            ));
        }
        samples.push(Sample {
            id: record.id,
            features: Features::Vector(record.x),
            label: record.label,
        });
    }
    Dataset::new(samples, header.classes)
}

/// Reads an image dataset from a CSV manifest `id,path,label`. Paths are
/// resolved relative to the manifest's directory. Class names are taken from
/// an optional first line `# classes: a,b,...`; otherwise `class<i>` names
/// cover the highest label seen.
pub fn read_image_manifest(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let display = path.display().to_string();
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut class_names: Option<Vec<String>> = None;
    let mut samples = Vec::new();
    let mut max_label = 0usize;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("# classes:") {
            class_names = Some(rest.split(',').map(|s| s.trim().to_string()).collect());
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                &display,
                idx + 1,
                format!("expected id,path,label; found {} fields", fields.len()),
            ));
        }
        let label: usize = fields[2]
            .parse()
            .map_err(|_| Error::parse(&display, idx + 1, format!("bad label {}", fields[2])))?;
        max_label = max_label.max(label);
        let image = read_image(base.join(fields[1]))?;
        samples.push(Sample {
            id: fields[0].to_string(),
            features: Features::Image(image),
            label,
        });
    }
    let class_names =
        class_names.unwrap_or_else(|| (0..=max_label).map(|i| format!("class{i}")).collect());
    Dataset::new(samples, class_names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_model, Model};

    fn tiny_model() -> Model {
        Model::init_random(&[2, 4, 2], 0, vec!["class0".into(), "class1".into()], 9).unwrap()
    }

    #[test]
    fn synth_counts_and_labels() {
        let data = synth_dataset(1, 0.1, 0).unwrap();
        assert_eq!(data.len(), 2);
        let labels: Vec<usize> = data.samples.iter().map(|s| s.label).collect();
        assert_eq!(labels, vec![0, 1]);
    }

    #[test]
    fn synth_same_seed_identical() {
        let a = synth_dataset(25, 0.2, 7).unwrap();
        let b = synth_dataset(25, 0.2, 7).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert_eq!(x.id, y.id);
            assert_eq!(x.features, y.features);
        }
        let c = synth_dataset(25, 0.2, 8).unwrap();
        assert!(a.samples[0].features != c.samples[0].features);
    }

    #[test]
    fn synth_zero_spread_collapses_to_centers() {
        let data = synth_dataset(5, 0.0, 3).unwrap();
        for s in &data.samples {
            let want = if s.label == 0 { vec![0.25, 0.25] } else { vec![0.75, 0.75] };
            assert_eq!(s.features, Features::Vector(want));
        }
    }

    #[test]
    fn trace_single_sample_keeps_id() {
        let model = tiny_model();
        let data = synth_dataset(1, 0.05, 2).unwrap();
        let traces = trace_dataset(&model, &data).unwrap();
        assert_eq!(traces.records.len(), 2);
        assert_eq!(traces.records[0].sample_id, data.samples[0].id);
    }

    #[test]
    fn trace_fields_cross_check_forward_and_predict() {
        let model = tiny_model();
        let data = synth_dataset(20, 0.1, 4).unwrap();
        let traces = trace_dataset(&model, &data).unwrap();
        for (r, s) in traces.records.iter().zip(&data.samples) {
            let input = s.features.to_vec();
            let (pred, conf) = model.predict(&input).unwrap();
            assert_eq!(r.predicted_label, pred);
            assert_eq!(r.confidence, conf);
            let acts = model.forward_capture(&input).unwrap();
            let want: Vec<f32> = acts.per_layer[model.monitored_layer]
                .iter()
                .map(|&a| a as f32)
                .collect();
            assert_eq!(r.activations, want);
        }
    }

    #[test]
    fn trace_subset_records_are_identical() {
        let model = tiny_model();
        let data = synth_dataset(10, 0.1, 6).unwrap();
        let full = trace_dataset(&model, &data).unwrap();
        let subset = Dataset::new(data.samples[3..7].to_vec(), data.class_names.clone()).unwrap();
        let partial = trace_dataset(&model, &subset).unwrap();
        for (i, r) in partial.records.iter().enumerate() {
            assert_eq!(r, &full.records[3 + i]);
        }
    }

    #[test]
    fn traces_round_trip_preserves_everything() {
        let model = tiny_model();
        let data = synth_dataset(500, 0.1, 11).unwrap();
        let traces = trace_dataset(&model, &data).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        write_traces(&path, &traces).unwrap();
        let loaded = read_traces(&path).unwrap();
        assert_eq!(traces, loaded);
    }

    #[test]
    fn trace_dimension_drift_is_located() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        std::fs::write(
            &path,
            "{\"neurons\":4,\"classes\":[\"a\",\"b\"]}\n{\"id\":\"s1\",\"label\":0,\"pred\":0,\"conf\":0.5,\"act\":[1.0,2.0,3.0]}\n",
        )
        .unwrap();
        let err = read_traces(&path).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn trace_empty_body_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        std::fs::write(&path, "{\"neurons\":4,\"classes\":[\"a\"]}\n").unwrap();
        let err = read_traces(&path).unwrap_err();
        assert!(err.to_string().contains("no records"), "{err}");
    }

    #[test]
    fn trace_confidence_out_of_range_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        std::fs::write(
            &path,
            "{\"neurons\":1,\"classes\":[\"a\",\"b\"]}\n{\"id\":\"s1\",\"label\":0,\"pred\":0,\"conf\":1.5,\"act\":[1.0]}\n",
        )
        .unwrap();
        assert!(read_traces(&path).is_err());
    }

    #[test]
    fn dataset_round_trip() {
        let data = synth_dataset(40, 0.15, 13).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        write_dataset(&path, &data).unwrap();
        let loaded = read_dataset(&path).unwrap();
        assert_eq!(data.class_names, loaded.class_names);
        for (a, b) in data.samples.iter().zip(&loaded.samples) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.label, b.label);
            assert_eq!(a.features, b.features);
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut data = synth_dataset(2, 0.1, 0).unwrap();
        let dup = data.samples[0].clone();
        data.samples.push(dup);
        assert!(Dataset::new(data.samples, data.class_names).is_err());
    }

    #[test]
    fn model_file_and_dataset_work_together() {
        // exercise the documented end-to-end: save, reload, trace
        let dir = tempfile::tempdir().unwrap();
        let model = tiny_model();
        let mpath = dir.path().join("m.json");
        crate::model::save_model(&mpath, &model).unwrap();
        let reloaded = load_model(&mpath).unwrap();
        let data = synth_dataset(5, 0.1, 1).unwrap();
        let a = trace_dataset(&model, &data).unwrap();
        let b = trace_dataset(&reloaded, &data).unwrap();
        assert_eq!(a, b);
    }
}
