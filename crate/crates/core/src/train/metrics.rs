use crate::error::{Error, Result};

/// Area under the ROC curve as the Mann-Whitney statistic: the fraction of
/// (positive, negative) pairs ranked correctly, ties counting one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Metric(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Metric("NaN score".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Metric("ROC AUC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Twice the positive rank sum, using 1-based average ranks within ties.
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let tied_pos = order[i..j].iter().filter(|&&k| labels[k]).count() as u64;
        twice_rank_sum += tied_pos * (i as u64 + 1 + j as u64);
        i = j;
    }
    let twice_u = twice_rank_sum - pos * (pos + 1);
    Ok(twice_u as f64 / (2 * pos * neg) as f64)
}

/// Fraction of exact matches.
pub fn accuracy(pred: &[usize], labels: &[usize]) -> Result<f64> {
    if pred.len() != labels.len() {
        return Err(Error::Metric(format!(
            "{} predictions for {} labels",
            pred.len(),
            labels.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Metric("accuracy of an empty set".into()));
    }
    let hits = pred.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Arg-max per row; the first maximum wins.
pub fn argmax_rows(data: &[f64], cols: usize) -> Vec<usize> {
    data.chunks(cols)
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Per-trial values with their mean and sample standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSummary {
    /// Values in trial order.
    pub values: Vec<f64>,
    pub mean: f64,
    /// Uses the `n - 1` denominator; 0 for a single trial.
    pub std: f64,
    pub n_trials: usize,
}

impl MetricSummary {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Metric("summary of zero trials".into()));
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mean = sorted.iter().sum::<f64>() / n;
        let std = if sorted.len() < 2 {
            0.0
        } else {
            (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Ok(Self {
            n_trials: values.len(),
            values,
            mean,
            std,
        })
    }
}
