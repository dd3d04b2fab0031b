use crate::autograd::record;
use crate::error::{shape_err, Error, Result};
use crate::shape::Shape;
use crate::tensor::Tensor;

/// Mean negative log-likelihood of `labels` (0-based) under `softmax(logits)`.
///
/// Rows are shifted by their maximum before exponentiation, so logits of any
/// finite magnitude give a finite loss. The pullback is `(softmax − onehot)/b`.
pub fn cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<Tensor> {
    if logits.rank() != 2 {
        return Err(Error::Rank {
            op: "cross_entropy",
            expected: 2,
            got: logits.rank(),
        });
    }
    let (b, c) = (logits.dims()[0], logits.dims()[1]);
    if labels.len() != b {
        return Err(shape_err(
            "cross_entropy",
            format!("{} labels for {b} rows", labels.len()),
        ));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= c) {
        return Err(Error::Label { label, classes: c });
    }
    let z = logits.to_vec();
    let mut probs = vec![0.0f32; b * c];
    let mut total = 0.0f64;
    for (i, &label) in labels.iter().enumerate() {
        let row = &z[i * c..(i + 1) * c];
        let m = row.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
        let denom: f64 = row.iter().map(|&v| (v as f64 - m).exp()).sum();
        let lse = m + denom.ln();
        total += lse - row[label] as f64;
        for (p, &v) in probs[i * c..(i + 1) * c].iter_mut().zip(row) {
            *p = ((v as f64 - m).exp() / denom) as f32;
        }
    }
    let loss = if b == 0 { f32::NAN } else { (total / b as f64) as f32 };
    let labels = labels.to_vec();
    let out = Tensor::from_parts(vec![loss], Shape::scalar());
    Ok(record("cross_entropy", &[logits], out, move |g| {
        let scale = g.item()? / b as f32;
        let mut grad = probs.clone();
        for (i, &label) in labels.iter().enumerate() {
            grad[i * c + label] -= 1.0;
        }
        grad.iter_mut().for_each(|v| *v *= scale);
        Ok(vec![Some(Tensor::from_parts(grad, Shape::new(vec![b, c])))])
    }))
}

/// `(1/N) Σ (x − target)²` over all elements.
pub fn mse(x: &Tensor, target: &Tensor) -> Result<Tensor> {
    if x.shape() != target.shape() {
        return Err(shape_err(
            "mse",
            format!("prediction {} vs target {}", x.shape(), target.shape()),
        ));
    }
    let diff = x.sub(target)?;
    diff.mul(&diff)?.mean_all()
}
