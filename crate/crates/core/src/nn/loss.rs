use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

fn masked_rows(
    logits: &DenseMatrix,
    labels: &[Option<usize>],
    mask: &[bool],
) -> Result<Vec<(usize, usize)>> {
    let n = logits.rows();
    if labels.len() != n || mask.len() != n {
        return Err(Error::shape("masked rows", n, labels.len().min(mask.len())));
    }
    let mut rows = Vec::new();
    for i in (0..n).filter(|&i| mask[i]) {
        let l = labels[i]
            .ok_or_else(|| Error::InvalidConfig(format!("masked node {i} has no label")))?;
        if l >= logits.cols() {
            return Err(Error::InvalidConfig(format!(
                "label {l} of node {i} exceeds {} classes",
                logits.cols()
            )));
        }
        rows.push((i, l));
    }
    if rows.is_empty() {
        return Err(Error::EmptyMask);
    }
    Ok(rows)
}

/// Mean softmax cross-entropy over the masked rows and its gradient with
/// respect to the logits (zero outside the mask).
pub fn cross_entropy_masked(
    logits: &DenseMatrix,
    labels: &[Option<usize>],
    mask: &[bool],
) -> Result<(f64, DenseMatrix)> {
    let rows = masked_rows(logits, labels, mask)?;
    let inv = 1.0 / rows.len() as f64;
    let mut grad = DenseMatrix::zeros(logits.rows(), logits.cols());
    let mut loss = 0.0;
    for &(i, l) in &rows {
        let z = logits.row(i);
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let g = grad.row_mut(i);
        let mut sum = 0.0;
        for (gj, &zj) in g.iter_mut().zip(z) {
            *gj = (zj - max).exp();
            sum += *gj;
        }
        loss += sum.ln() - (z[l] - max);
        for gj in g.iter_mut() {
            *gj *= inv / sum;
        }
        g[l] -= inv;
    }
    Ok((loss * inv, grad))
}

/// Fraction of masked rows whose arg-max (lowest index on ties) is the label.
pub fn accuracy(logits: &DenseMatrix, labels: &[Option<usize>], mask: &[bool]) -> Result<f64> {
    let rows = masked_rows(logits, labels, mask)?;
    let hits = rows
        .iter()
        .filter(|&&(i, l)| {
            let z = logits.row(i);
            let mut best = 0;
            for j in 1..z.len() {
                if z[j] > z[best] {
                    best = j;
                }
            }
            best == l
        })
        .count();
    Ok(hits as f64 / rows.len() as f64)
}
