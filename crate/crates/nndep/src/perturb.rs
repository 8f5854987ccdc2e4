//! Synthetic noise, perturbation-loss measurement, and dataset augmentation.
//!
//! Nine noise kinds are supported: gaussian, salt_pepper, poisson, blur,
//! brightness, gain, snow, haze, fog. All of them clamp output pixels to
//! [0, 1] and draw from a per-sample stream derived from the spec seed and
//! the sample id (see [`crate::rng`]), so results are reproducible and
//! removing one sample never changes another's noise.
//!
//! Vector features are treated as a one-row grayscale image, which makes the
//! pixel-wise kinds apply unchanged and gives blur/snow a defined (if
//! degenerate) meaning.

use std::collections::BTreeMap;
use std::collections::HashSet;

use crate::data::{Dataset, Features, Sample};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::model::{argmax, Model};
use crate::rng::{stream_seed, Rng};

/// The noise families, named after their physical source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NoiseKind {
    Gaussian,
    SaltPepper,
    Poisson,
    Blur,
    Brightness,
    Gain,
    Snow,
    Haze,
    Fog,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::SaltPepper => "salt_pepper",
            NoiseKind::Poisson => "poisson",
            NoiseKind::Blur => "blur",
            NoiseKind::Brightness => "brightness",
            NoiseKind::Gain => "gain",
            NoiseKind::Snow => "snow",
            NoiseKind::Haze => "haze",
            NoiseKind::Fog => "fog",
        }
    }

    pub fn from_name(name: &str) -> Result<NoiseKind> {
        Ok(match name {
            "gaussian" => NoiseKind::Gaussian,
            "salt_pepper" => NoiseKind::SaltPepper,
            "poisson" => NoiseKind::Poisson,
            "blur" => NoiseKind::Blur,
            "brightness" => NoiseKind::Brightness,
            "gain" => NoiseKind::Gain,
            "snow" => NoiseKind::Snow,
            "haze" => NoiseKind::Haze,
            "fog" => NoiseKind::Fog,
            other => return Err(Error::InvalidParam(format!("unknown noise kind {other}"))),
        })
    }

    /// Parameter names and defaults, in canonical order.
    fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            NoiseKind::Gaussian => &[("sigma", 0.1)],
            NoiseKind::SaltPepper => &[("rho", 0.05)],
            NoiseKind::Poisson => &[("scale", 255.0)],
            NoiseKind::Blur => &[("radius", 1.0)],
            NoiseKind::Brightness => &[("delta", 0.2)],
            NoiseKind::Gain => &[("g", 1.5)],
            NoiseKind::Snow => &[("rho", 0.02)],
            NoiseKind::Haze => &[("t", 0.4)],
            NoiseKind::Fog => &[("t", 0.6)],
        }
    }
}

/// A fully specified noise: kind, parameters (defaults applied), and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
}

impl NoiseSpec {
    /// A spec with all defaults for `kind`.
    pub fn new(kind: NoiseKind, seed: u64) -> NoiseSpec {
        let params = kind
            .defaults()
            .iter()
            .map(|&(name, value)| (name.to_string(), value))
            .collect();
        NoiseSpec { kind, params, seed }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Result<NoiseSpec> {
        if !self.params.contains_key(name) {
            return Err(Error::InvalidParam(format!(
                "noise {} has no parameter {name}",
                self.kind.name()
            )));
        }
        self.params.insert(name.to_string(), value);
        self.validate()?;
        Ok(self)
    }

    pub fn param(&self, name: &str) -> f64 {
        self.params[name]
    }

    /// Parses `kind` or `kind=param:value,param:value`. A `seed` entry
    /// overrides the default seed.
    pub fn parse(text: &str, default_seed: u64) -> Result<NoiseSpec> {
        let (kind_name, rest) = match text.split_once('=') {
            Some((k, r)) => (k.trim(), Some(r)),
            None => (text.trim(), None),
        };
        let mut spec = NoiseSpec::new(NoiseKind::from_name(kind_name)?, default_seed);
        if let Some(rest) = rest {
            for part in rest.split(',') {
                let (name, value) = part.split_once(':').ok_or_else(|| {
                    Error::InvalidParam(format!("expected param:value, found {part}"))
                })?;
                let value: f64 = value.trim().parse().map_err(|_| {
                    Error::InvalidParam(format!("bad numeric value {value} for {name}"))
                })?;
                if name.trim() == "seed" {
                    if value < 0.0 || value.fract() != 0.0 {
                        return Err(Error::InvalidParam(format!("seed {value} must be a non-negative integer")));
                    }
                    spec.seed = value as u64;
                } else {
                    spec.params.insert(name.trim().to_string(), value);
                    if !spec.kind.defaults().iter().any(|&(n, _)| n == name.trim()) {
                        return Err(Error::InvalidParam(format!(
                            "noise {} has no parameter {}",
                            spec.kind.name(),
                            name.trim()
                        )));
                    }
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Documented range check per kind.
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, ok: bool, range: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParam(format!(
                    "{} {name}={} outside {range}",
                    self.kind.name(),
                    self.params[name]
                )))
            }
        };
        for (name, &v) in &self.params {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("noise parameter {name}")));
            }
        }
        match self.kind {
            NoiseKind::Gaussian => check("sigma", self.param("sigma") >= 0.0, "[0,inf)"),
            NoiseKind::SaltPepper | NoiseKind::Snow => {
                check("rho", (0.0..=1.0).contains(&self.param("rho")), "[0,1]")
            }
            NoiseKind::Poisson => check("scale", self.param("scale") > 0.0, "(0,inf)"),
            NoiseKind::Blur => check(
                "radius",
                self.param("radius") >= 0.0 && self.param("radius").fract() == 0.0,
                "non-negative integers",
            ),
            NoiseKind::Brightness => {
                check("delta", (-1.0..=1.0).contains(&self.param("delta")), "[-1,1]")
            }
            NoiseKind::Gain => check("g", self.param("g") >= 0.0, "[0,inf)"),
            NoiseKind::Haze | NoiseKind::Fog => {
                check("t", (0.0..=1.0).contains(&self.param("t")), "[0,1]")
            }
        }
    }

    /// Canonical `name:value` list, stable across runs.
    pub fn params_string(&self) -> String {
        self.params
            .iter()
            .map(|(k, v)| format!("{k}:{v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Applies `spec` to an image. Deterministic in (spec.seed, sample_id).
pub fn apply_noise(image: &Image, spec: &NoiseSpec, sample_id: &str) -> Result<Image> {
    spec.validate()?;
    if image.pixels.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidData("input pixels outside [0,1]".into()));
    }
    let mut rng = Rng::new(stream_seed(spec.seed, sample_id));
    let mut out = image.clone();
    match spec.kind {
        NoiseKind::Gaussian => {
            let sigma = spec.param("sigma");
            for p in &mut out.pixels {
                *p = (*p + sigma * rng.next_normal()).clamp(0.0, 1.0);
            }
        }
        NoiseKind::SaltPepper => {
            let rho = spec.param("rho");
            let (w, h, c) = (out.width, out.height, out.channels);
            for px in 0..w * h {
                if rng.next_f64() < rho {
                    let value = if rng.next_f64() >= 0.5 { 1.0 } else { 0.0 };
                    for ch in 0..c {
                        out.pixels[px * c + ch] = value;
                    }
                }
            }
        }
        NoiseKind::Poisson => {
            let scale = spec.param("scale");
            for p in &mut out.pixels {
                let lambda = *p * scale;
                *p = (poisson_draw(&mut rng, lambda) / scale).clamp(0.0, 1.0);
            }
        }
        NoiseKind::Blur => {
            let radius = spec.param("radius") as usize;
            if radius > 0 {
                out = box_blur(image, radius);
            }
        }
        NoiseKind::Brightness => {
            let delta = spec.param("delta");
            for p in &mut out.pixels {
                *p = (*p + delta).clamp(0.0, 1.0);
            }
        }
        NoiseKind::Gain => {
            let g = spec.param("g");
            for p in &mut out.pixels {
                *p = (*p * g).clamp(0.0, 1.0);
            }
        }
        NoiseKind::Snow => {
            let rho = spec.param("rho");
            let (w, h, c) = (out.width, out.height, out.channels);
            let streak_len = 3usize;
            let streaks = ((rho * (w * h) as f64) / streak_len as f64).ceil() as usize;
            if rho > 0.0 {
                for _ in 0..streaks {
                    let x = rng.next_index(w);
                    let y0 = rng.next_index(h);
                    for dy in 0..streak_len {
                        let y = y0 + dy;
                        if y >= h {
                            break;
                        }
                        for ch in 0..c {
                            out.pixels[(y * w + x) * c + ch] = 1.0;
                        }
                    }
                }
            }
        }
        NoiseKind::Haze => {
            let t = spec.param("t");
            for p in &mut out.pixels {
                *p = ((1.0 - t) * *p + t).clamp(0.0, 1.0);
            }
        }
        NoiseKind::Fog => {
            let t = spec.param("t");
            for p in &mut out.pixels {
                *p = ((1.0 - t) * *p + t * 0.8).clamp(0.0, 1.0);
            }
        }
    }
    Ok(out)
}

/// Knuth's product method for small rates; a clamped normal approximation
/// keeps very large rates cheap without underflowing exp.
fn poisson_draw(rng: &mut Rng, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    if lambda > 500.0 {
        return (lambda + lambda.sqrt() * rng.next_normal()).round().max(0.0);
    }
    let limit = (-lambda).exp();
    let mut product = rng.next_f64();
    let mut count = 0u64;
    while product > limit {
        count += 1;
        product *= rng.next_f64();
    }
    count as f64
}

/// Box blur with edge clamping; radius 0 is the identity.
fn box_blur(image: &Image, radius: usize) -> Image {
    let (w, h, c) = (image.width, image.height, image.channels);
    let mut pixels = vec![0.0; image.pixels.len()];
    let r = radius as isize;
    for y in 0..h as isize {
        for x in 0..w as isize {
            for ch in 0..c {
                let mut sum = 0.0;
                for dy in -r..=r {
                    for dx in -r..=r {
                        let yy = (y + dy).clamp(0, h as isize - 1) as usize;
                        let xx = (x + dx).clamp(0, w as isize - 1) as usize;
                        sum += image.pixels[(yy * w + xx) * c + ch];
                    }
                }
                let window = (2 * radius + 1) * (2 * radius + 1);
                pixels[(y as usize * w + x as usize) * c + ch] = sum / window as f64;
            }
        }
    }
    Image {
        width: w,
        height: h,
        channels: c,
        pixels,
    }
}

/// Applies noise to either feature representation. Vectors are treated as a
/// 1 x len grayscale image.
pub fn apply_noise_features(features: &Features, spec: &NoiseSpec, sample_id: &str) -> Result<Features> {
    match features {
        Features::Image(img) => Ok(Features::Image(apply_noise(img, spec, sample_id)?)),
        Features::Vector(v) => {
            if v.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidData(
                    "vector features outside [0,1]; noise is defined on unit range".into(),
                ));
            }
            let img = Image {
                width: v.len(),
                height: 1,
                channels: 1,
                pixels: v.clone(),
            };
            Ok(Features::Vector(apply_noise(&img, spec, sample_id)?.pixels))
        }
    }
}

/// Mean relative confidence loss per class for one noise spec.
#[derive(Debug, Clone)]
pub struct PerturbReport {
    pub kind: NoiseKind,
    pub params: String,
    pub seed: u64,
    /// (class name, mean loss, sample count), one row per class.
    pub per_class: Vec<(String, f64, usize)>,
    pub overall: f64,
    pub evaluated: usize,
}

/// Measures how much of the clean predicted class's confidence survives the
/// noise: per sample, `loss = max(0, (c0 - c1) / c0)` where `c0` is the clean
/// confidence of the predicted class and `c1` that same class's confidence on
/// the noisy input. With `correct_only`, misclassified samples are skipped.
pub fn perturbation_loss(
    model: &Model,
    data: &Dataset,
    spec: &NoiseSpec,
    correct_only: bool,
) -> Result<PerturbReport> {
    let classes = data.class_names.len();
    let mut sums = vec![0.0f64; classes];
    let mut counts = vec![0usize; classes];
    let mut overall_sum = 0.0;
    let mut evaluated = 0usize;
    for sample in &data.samples {
        let clean = sample.features.to_vec();
        let out = model.forward_capture(&clean)?.output;
        let (pred, c0) = argmax(&out);
        if correct_only && pred != sample.label {
            continue;
        }
        let noisy = apply_noise_features(&sample.features, spec, &sample.id)?;
        let out_noisy = model.forward_capture(&noisy.to_vec())?.output;
        let c1 = out_noisy[pred];
        let loss = ((c0 - c1) / c0).max(0.0);
        sums[sample.label] += loss;
        counts[sample.label] += 1;
        overall_sum += loss;
        evaluated += 1;
    }
    if evaluated == 0 {
        return Err(Error::InvalidData("no samples left to evaluate".into()));
    }
    let per_class = data
        .class_names
        .iter()
        .enumerate()
        .filter(|&(c, _)| counts[c] > 0)
        .map(|(c, name)| (name.clone(), sums[c] / counts[c] as f64, counts[c]))
        .collect();
    Ok(PerturbReport {
        kind: spec.kind,
        params: spec.params_string(),
        seed: spec.seed,
        per_class,
        overall: overall_sum / evaluated as f64,
        evaluated,
    })
}

/// CSV rows `class,kind,params,seed,mean_loss,count` plus an overall row.
pub fn reports_to_csv(reports: &[PerturbReport]) -> String {
    let mut out = String::from("class,kind,params,seed,mean_loss,count\n");
    for r in reports {
        for (class, loss, count) in &r.per_class {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                class,
                r.kind.name(),
                r.params,
                r.seed,
                loss,
                count
            ));
        }
        out.push_str(&format!(
            "overall,{},{},{},{},{}\n",
            r.kind.name(),
            r.params,
            r.seed,
            r.overall,
            r.evaluated
        ));
    }
    out
}

/// Originals plus one noisy copy per (sample, spec); copies keep their label
/// and get the spec's kind name as an id suffix.
pub fn augment_dataset(data: &Dataset, specs: &[NoiseSpec]) -> Result<Dataset> {
    if specs.is_empty() {
        return Err(Error::InvalidParam("no noise specs given".into()));
    }
    let mut samples = data.samples.clone();
    let mut ids: HashSet<String> = samples.iter().map(|s| s.id.clone()).collect();
    for spec in specs {
        for sample in &data.samples {
            let id = format!("{}_{}", sample.id, spec.kind.name());
            if !ids.insert(id.clone()) {
                return Err(Error::InvalidData(format!("augmented id collision: {id}")));
            }
            samples.push(Sample {
                id,
                features: apply_noise_features(&sample.features, spec, &sample.id)?,
                label: sample.label,
            });
        }
    }
    Dataset::new(samples, data.class_names.clone())
}
