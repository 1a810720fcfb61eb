//! Link decoder and numerically stable losses.

use crate::error::{Error, Result};
use crate::nn::Tensor2;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn softmax(row: &[f64]) -> Vec<f64> {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / s).collect()
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Dot-product scores `⟨z_u, z_v⟩` for each pair.
pub fn link_logits(z: &Tensor2, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    pairs
        .iter()
        .map(|&(u, v)| {
            if u >= z.rows || v >= z.rows {
                return Err(Error::param(format!(
                    "pair ({u},{v}) outside embedding rows 0..{}",
                    z.rows
                )));
            }
            Ok(z.row(u).iter().zip(z.row(v)).map(|(a, b)| a * b).sum())
        })
        .collect()
}

/// Mean of `softplus(x) - x·y`.
pub fn bce_with_logits(logits: &[f64], targets: &[f64]) -> Result<f64> {
    if logits.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} logits for {} targets",
            logits.len(),
            targets.len()
        )));
    }
    if logits.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    if let Some(y) = targets.iter().find(|&&y| y != 0.0 && y != 1.0) {
        return Err(Error::param(format!("binary target {y} is not 0 or 1")));
    }
    let total: f64 = logits
        .iter()
        .zip(targets)
        .map(|(&x, &y)| softplus(x) - x * y)
        .sum();
    Ok(total / logits.len() as f64)
}

/// Mean softmax cross-entropy over all rows of `logits`.
pub fn softmax_cross_entropy(logits: &Tensor2, labels: &[usize]) -> Result<f64> {
    let rows: Vec<usize> = (0..logits.rows).collect();
    softmax_cross_entropy_rows(logits, &rows, labels)
}

/// Mean softmax cross-entropy over `rows`, where `labels[k]` is the class of
/// `rows[k]`.
pub fn softmax_cross_entropy_rows(logits: &Tensor2, rows: &[usize], labels: &[usize]) -> Result<f64> {
    if rows.len() != labels.len() {
        return Err(Error::Shape(format!("{} rows for {} labels", rows.len(), labels.len())));
    }
    if rows.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    let mut total = 0.0;
    for (&r, &y) in rows.iter().zip(labels) {
        if r >= logits.rows {
            return Err(Error::param(format!("row {r} outside 0..{}", logits.rows)));
        }
        if y >= logits.cols {
            return Err(Error::param(format!("label {y} outside 0..{}", logits.cols)));
        }
        let row = logits.row(r);
        total += log_sum_exp(row) - row[y];
    }
    Ok(total / rows.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bce_at_zero_is_ln2() {
        assert!((bce_with_logits(&[0.0], &[1.0]).unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn bce_extreme_logits_stay_finite() {
        let l = bce_with_logits(&[1e4, -1e4, 1e4, -1e4], &[1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((l - 1e4 / 2.0).abs() < 1e-9);
        assert_eq!(bce_with_logits(&[1e4, -1e4], &[1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn uniform_logits_give_ln_c() {
        let t = Tensor2::zeros(3, 7);
        let l = softmax_cross_entropy(&t, &[0, 3, 6]).unwrap();
        assert!((l - 7f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn xent_extreme_logits_stay_finite() {
        let t = Tensor2::from_vec(1, 2, vec![1e4, -1e4]).unwrap();
        assert_eq!(softmax_cross_entropy(&t, &[0]).unwrap(), 0.0);
        assert!((softmax_cross_entropy(&t, &[1]).unwrap() - 2e4).abs() < 1e-9);
    }

    #[test]
    fn label_errors() {
        assert!(bce_with_logits(&[0.0], &[2.0]).is_err());
        assert!(softmax_cross_entropy(&Tensor2::zeros(1, 2), &[2]).is_err());
        assert!(bce_with_logits(&[0.0, 1.0], &[1.0]).is_err());
    }

    #[test]
    fn logits_are_dot_products() {
        let z = Tensor2::from_vec(3, 2, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(link_logits(&z, &[(0, 1), (0, 2), (2, 0)]).unwrap(), vec![1.0, 0.0, 0.0]);
        assert!(link_logits(&z, &[(0, 3)]).is_err());
    }
}
