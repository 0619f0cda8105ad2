//! Ranking metrics: average precision, mAP, mAP gain and accuracy.
//!
//! Scores are "higher means more synthetic". Accuracy expects probabilities
//! and predicts the positive class only when the probability is strictly
//! above the threshold, so an exact 0.5 counts as negative.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scores and binary labels for one evaluation dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSet {
    pub dataset_name: String,
    scores: Vec<f64>,
    labels: Vec<u8>,
}

impl ScoredSet {
    pub fn new(dataset_name: impl Into<String>, scores: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::shape(alloc::format!("{} scores but {} labels", scores.len(), labels.len())));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::param("labels must be 0 or 1"));
        }
        if scores.iter().any(|s| s.is_nan()) {
            return Err(Error::param("scores must not be NaN"));
        }
        Ok(Self { dataset_name: dataset_name.into(), scores, labels })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Mean over positives of the precision at each positive's rank.
///
/// Items are ranked by descending score with a stable sort, so tied scores
/// keep their original relative order.
pub fn average_precision(set: &ScoredSet) -> Result<f64> {
    let positives = set.labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 {
        return Err(Error::UndefinedMetric(alloc::format!("AP of {} has no positives", set.dataset_name)));
    }
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by(|&a, &b| set.scores[b].total_cmp(&set.scores[a]));
    // compensated (double-double) accumulation, so simple fractions such as
    // 5/6 come out correctly rounded
    let (mut hi, mut lo) = (0.0f64, 0.0f64);
    let mut hits = 0usize;
    for (rank, &i) in order.iter().enumerate() {
        if set.labels[i] == 1 {
            hits += 1;
            let (num, den) = (hits as f64, (rank + 1) as f64);
            let q = num / den;
            let q_lo = libm::fma(-q, den, num) / den;
            let s = hi + q;
            let v = s - hi;
            lo += (hi - (s - v)) + (q - v) + q_lo;
            hi = s;
        }
    }
    Ok((hi + lo) / positives as f64)
}

pub fn mean_average_precision(aps: &[f64]) -> Result<f64> {
    if aps.is_empty() {
        return Err(Error::param("mAP of zero datasets"));
    }
    Ok(aps.iter().sum::<f64>() / aps.len() as f64)
}

/// Relative improvement over the baseline, in percent.
pub fn map_gain(map: f64, map_baseline: f64) -> Result<f64> {
    if !(map_baseline > 0.0) {
        return Err(Error::param(alloc::format!("baseline mAP {map_baseline} must be > 0")));
    }
    Ok((map - map_baseline) / map_baseline * 100.0)
}

/// Fraction of correct decisions; positive iff probability > `threshold`.
pub fn accuracy(set: &ScoredSet, threshold: f64) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::param("accuracy of an empty set"));
    }
    let correct = set.scores.iter().zip(&set.labels).filter(|&(&p, &l)| (p > threshold) == (l == 1)).count();
    Ok(correct as f64 / set.len() as f64)
}

/// Per-dataset AP and accuracy under one scenario, keyed by dataset name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario_name: String,
    pub per_dataset_ap: BTreeMap<String, f64>,
    pub accuracy_per_dataset: BTreeMap<String, f64>,
    pub map: f64,
}

impl MetricsReport {
    /// Build from probability-scored datasets. Dataset names must be unique.
    pub fn from_scored(scenario_name: impl Into<String>, sets: &[ScoredSet]) -> Result<Self> {
        let mut per_dataset_ap = BTreeMap::new();
        let mut accuracy_per_dataset = BTreeMap::new();
        for set in sets {
            if per_dataset_ap.contains_key(&set.dataset_name) {
                return Err(Error::param(alloc::format!("duplicate dataset name {}", set.dataset_name)));
            }
            per_dataset_ap.insert(set.dataset_name.clone(), average_precision(set)?);
            accuracy_per_dataset.insert(set.dataset_name.clone(), accuracy(set, 0.5)?);
        }
        let aps: Vec<f64> = per_dataset_ap.values().copied().collect();
        let map = mean_average_precision(&aps)?;
        Ok(Self { scenario_name: scenario_name.into(), per_dataset_ap, accuracy_per_dataset, map })
    }

    /// Unweighted mean of the per-dataset accuracies.
    pub fn mean_accuracy(&self) -> f64 {
        let n = self.accuracy_per_dataset.len().max(1);
        self.accuracy_per_dataset.values().sum::<f64>() / n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub map: f64,
    pub map_baseline: f64,
    pub gain_percent: f64,
}

impl GainReport {
    pub fn new(map: f64, map_baseline: f64) -> Result<Self> {
        Ok(Self { map, map_baseline, gain_percent: map_gain(map, map_baseline)? })
    }
}
