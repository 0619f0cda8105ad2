//! Evaluation-time perturbations and the evaluation loop.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::augment::{gaussian_blur, gaussian_noise, jpeg_compress, resize};
use crate::corpus::LabeledDataset;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::metrics::{MetricsReport, ScoredSet};
use crate::model::Model;
use crate::rng::Rng;

/// One fixed-parameter perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Step {
    JpegCompress {
        qf: u8,
    },
    GaussianBlur {
        sigma: f64,
    },
    /// Standard deviation on the 0..255 scale.
    GaussianNoise {
        sigma: f64,
    },
    Resize {
        target: usize,
    },
}

impl Step {
    fn validate(&self) -> Result<()> {
        match *self {
            Step::JpegCompress { qf } if !(1..=100).contains(&qf) => {
                Err(Error::param(alloc::format!("scenario JPEG quality {qf} outside 1..=100")))
            }
            Step::GaussianBlur { sigma } | Step::GaussianNoise { sigma } if !(sigma >= 0.0) || !sigma.is_finite() => {
                Err(Error::param(alloc::format!("scenario sigma {sigma} must be finite and >= 0")))
            }
            Step::Resize { target } if target < 8 => {
                Err(Error::param(alloc::format!("scenario resize target {target} below 8")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub steps: Vec<Step>,
    #[serde(default)]
    pub seed_salt: u64,
}

impl Scenario {
    pub fn new(name: impl Into<String>, steps: Vec<Step>, seed_salt: u64) -> Self {
        Self { name: name.into(), steps, seed_salt }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::param("scenario name is empty"));
        }
        self.steps.iter().try_for_each(Step::validate)
    }

    /// The built-in scenario with this name, if any.
    pub fn builtin(name: &str) -> Option<Scenario> {
        builtin_scenarios().into_iter().find(|s| s.name == name)
    }
}

/// `clean`, `jpeg`, `blur`, `noise`, `combined` and `resize`, in that order.
pub fn builtin_scenarios() -> Vec<Scenario> {
    const JPEG: Step = Step::JpegCompress { qf: 65 };
    const BLUR: Step = Step::GaussianBlur { sigma: 1.0 };
    const NOISE: Step = Step::GaussianNoise { sigma: 1.0 };
    vec![
        Scenario::new("clean", vec![], 0),
        Scenario::new("jpeg", vec![JPEG], 0),
        Scenario::new("blur", vec![BLUR], 0),
        Scenario::new("noise", vec![NOISE], 0x006e_6f69_7365),
        Scenario::new("combined", vec![BLUR, NOISE, JPEG], 0x636f_6d62_696e_6564),
        Scenario::new("resize", vec![Step::Resize { target: 64 }], 0),
    ]
}

/// Apply the steps in order. Noise draws come from a generator keyed by
/// `(seed_salt, image_index)` only.
pub fn apply_scenario(s: &Scenario, image: &Image, image_index: u64) -> Result<Image> {
    let mut rng = Rng::new(s.seed_salt).split(image_index);
    let mut out = image.clone();
    for step in &s.steps {
        out = match *step {
            Step::JpegCompress { qf } => jpeg_compress(&out, qf)?,
            Step::GaussianBlur { sigma } => gaussian_blur(&out, sigma)?,
            Step::GaussianNoise { sigma } => gaussian_noise(&out, sigma, &mut rng)?,
            Step::Resize { target } => resize(&out, target)?,
        };
    }
    Ok(out)
}

/// What a scorer may know about the item it scores.
#[derive(Debug, Clone, Copy)]
pub struct ItemContext<'a> {
    pub dataset: &'a str,
    pub index: usize,
    pub label: u8,
}

/// Perturb every image (keyed by its index within its dataset), score it
/// with `scorer` (a probability), and assemble the report.
pub fn evaluate_with<F>(eval_sets: &[LabeledDataset], s: &Scenario, mut scorer: F) -> Result<MetricsReport>
where
    F: FnMut(&Image, ItemContext<'_>) -> Result<f64>,
{
    s.validate()?;
    let mut scored = Vec::with_capacity(eval_sets.len());
    for ds in eval_sets {
        let mut scores = Vec::with_capacity(ds.len());
        for (i, (img, &label)) in ds.images().iter().zip(ds.labels()).enumerate() {
            let perturbed = apply_scenario(s, img, i as u64)?;
            scores.push(scorer(&perturbed, ItemContext { dataset: &ds.name, index: i, label })?);
        }
        scored.push(ScoredSet::new(ds.name.clone(), scores, ds.labels().to_vec())?);
    }
    MetricsReport::from_scored(s.name.clone(), &scored)
}

pub fn evaluate_model(model: &Model, eval_sets: &[LabeledDataset], s: &Scenario) -> Result<MetricsReport> {
    evaluate_with(eval_sets, s, |img, _| Ok(model.forward(img)?.probability()))
}

/// Mean feature loss between each clean eval image and its perturbed version.
pub fn mean_feature_loss(
    model: &Model,
    eval_sets: &[LabeledDataset],
    s: &Scenario,
    kind: crate::model::FtKind,
) -> Result<f64> {
    let mut total = 0.0;
    let mut n = 0usize;
    for ds in eval_sets {
        for (i, img) in ds.images().iter().enumerate() {
            let a = model.forward(img)?;
            let b = model.forward(&apply_scenario(s, img, i as u64)?)?;
            total += crate::model::feature_loss(&a.features, &b.features, kind)?;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::param("no evaluation images"));
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_corpus, CorpusConfig};

    fn textured() -> Image {
        Image::from_fn(40, 40, 3, |x, y, c| ((x * 7 + y * 13 + c * 3) % 23) as f32 / 22.0).unwrap()
    }

    #[test]
    fn builtins_are_stable() {
        let a = builtin_scenarios();
        assert_eq!(a, builtin_scenarios());
        let names: Vec<&str> = a.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["clean", "jpeg", "blur", "noise", "combined", "resize"]);
        assert!(a.iter().all(|s| s.validate().is_ok()));
    }

    #[test]
    fn clean_is_identity_and_repeatable() {
        let img = textured();
        let clean = Scenario::builtin("clean").unwrap();
        assert_eq!(apply_scenario(&clean, &img, 3).unwrap(), img);
        let noise = Scenario::builtin("noise").unwrap();
        assert_eq!(apply_scenario(&noise, &img, 3).unwrap(), apply_scenario(&noise, &img, 3).unwrap());
        assert_ne!(apply_scenario(&noise, &img, 3).unwrap(), apply_scenario(&noise, &img, 4).unwrap());
    }

    #[test]
    fn combined_is_manual_composition() {
        let img = textured();
        let s = Scenario::builtin("combined").unwrap();
        let mut rng = Rng::new(s.seed_salt).split(9);
        let manual =
            jpeg_compress(&gaussian_noise(&gaussian_blur(&img, 1.0).unwrap(), 1.0, &mut rng).unwrap(), 65).unwrap();
        assert_eq!(apply_scenario(&s, &img, 9).unwrap(), manual);
    }

    #[test]
    fn noise_scenario_level() {
        let gray = Image::filled(256, 256, 1, 0.5).unwrap();
        let out = apply_scenario(&Scenario::builtin("noise").unwrap(), &gray, 0).unwrap();
        let diffs: Vec<f64> = out.samples().iter().map(|&s| (s as f64 - 0.5) * 255.0).collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (diffs.len() - 1) as f64;
        let sd = libm::sqrt(var);
        assert!((0.94..=1.06).contains(&sd), "{sd}");
    }

    #[test]
    fn invalid_steps_rejected() {
        assert!(Scenario::new("x", vec![Step::JpegCompress { qf: 0 }], 0).validate().is_err());
        assert!(Scenario::new("x", vec![Step::GaussianBlur { sigma: -1.0 }], 0).validate().is_err());
        assert!(Scenario::new("x", vec![Step::Resize { target: 4 }], 0).validate().is_err());
        assert!(Scenario::new("", vec![], 0).validate().is_err());
    }

    fn small_corpus() -> crate::corpus::Corpus {
        let cfg = CorpusConfig { n_train_per_class: 4, n_eval_per_class: 10, seed: 5, ..CorpusConfig::default() };
        generate_corpus(&cfg).unwrap()
    }

    #[test]
    fn zero_model_and_oracle_scorer() {
        let corpus = small_corpus();
        let clean = Scenario::builtin("clean").unwrap();
        let r = evaluate_model(&Model::zeros(), &corpus.eval_sets, &clean).unwrap();
        for ds in &corpus.eval_sets {
            let zeros = ds.labels().iter().filter(|&&l| l == 0).count() as f64 / ds.len() as f64;
            assert_eq!(r.accuracy_per_dataset[&ds.name], zeros);
        }
        let oracle = evaluate_with(&corpus.eval_sets, &clean, |_, ctx| Ok(ctx.label as f64)).unwrap();
        assert_eq!(oracle.map, 1.0);
    }

    #[test]
    fn dataset_order_does_not_matter() {
        let corpus = small_corpus();
        let model = Model::init(&mut Rng::new(1));
        let s = Scenario::builtin("combined").unwrap();
        let forward = evaluate_model(&model, &corpus.eval_sets, &s).unwrap();
        let mut reversed = corpus.eval_sets.clone();
        reversed.reverse();
        assert_eq!(forward, evaluate_model(&model, &reversed, &s).unwrap());
        assert_eq!(forward, evaluate_model(&model, &corpus.eval_sets, &s).unwrap());
    }
}
