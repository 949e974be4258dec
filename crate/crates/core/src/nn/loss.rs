use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut p = logits.to_owned();
    for mut row in p.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row /= s;
    }
    p
}

/// Mean cross-entropy over the batch and its gradient `(softmax - onehot) / B`.
pub fn cross_entropy_loss(logits: ArrayView2<'_, f64>, labels: &[usize]) -> Result<(f64, Array2<f64>)> {
    let b = logits.nrows();
    if b == 0 {
        return Err(Error::EmptyBatch);
    }
    if labels.len() != b {
        return Err(Error::Dimension(format!("{b} logit rows, {} labels", labels.len())));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalBlowUp("logits".into()));
    }
    let c = logits.ncols();
    let mut loss = 0.0;
    for (row, &y) in logits.rows().into_iter().zip(labels) {
        if y >= c {
            return Err(Error::Dimension(format!("label {y} for {c} classes")));
        }
        let m = row.fold(f64::NEG_INFINITY, |a, &v| a.max(v));
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        loss += lse - row[y];
    }
    let mut grad = softmax_rows(logits);
    for (mut row, &y) in grad.rows_mut().into_iter().zip(labels) {
        row[y] -= 1.0;
    }
    grad /= b as f64;
    Ok((loss / b as f64, grad))
}
