use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricFlag {
    /// Precision or recall had a zero denominator; F1 reported as 0.
    F1Undefined,
    /// A factor of the MCC denominator was zero; MCC reported as 0.
    MccUndefined,
}

/// Confusion counts of a selection against ground-truth labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionStats {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub f1: f64,
    pub mcc: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<MetricFlag>,
}

impl ConfusionStats {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        let mut flags = Vec::new();
        let (tpf, fpf, fnf, tnf) = (tp as f64, fp as f64, fn_ as f64, tn as f64);

        let f1 = if tp + fp == 0 || tp + fn_ == 0 || tp == 0 {
            if tp + fp == 0 || tp + fn_ == 0 {
                flags.push(MetricFlag::F1Undefined);
            }
            0.0
        } else {
            let precision = tpf / (tpf + fpf);
            let recall = tpf / (tpf + fnf);
            2.0 * precision * recall / (precision + recall)
        };

        let denom = (tpf + fpf) * (tpf + fnf) * (tnf + fpf) * (tnf + fnf);
        let mcc = if denom == 0.0 {
            flags.push(MetricFlag::MccUndefined);
            0.0
        } else {
            (tpf * tnf - fpf * fnf) / denom.sqrt()
        };

        Self {
            tp,
            fp,
            fn_,
            tn,
            f1,
            mcc,
            flags,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Scores a selected index set against per-particle target labels.
/// Duplicate indices count once.
pub fn confusion_stats(selected: &[usize], labels: &[bool]) -> Result<ConfusionStats> {
    let mut chosen = vec![false; labels.len()];
    for &i in selected {
        *chosen.get_mut(i).ok_or_else(|| {
            Error::invalid(format!(
                "selected index {i} out of range for {} particles",
                labels.len()
            ))
        })? = true;
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&sel, &target) in chosen.iter().zip(labels) {
        match (sel, target) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(ConfusionStats::from_counts(tp, fp, fn_, tn))
}
