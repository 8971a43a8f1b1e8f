//! Softmax negative log-likelihood and the multi-class Dice score.

use crate::error::{LossError, ShapeError};
use crate::tensor::Tensor2;

/// Guards Dice denominators of regions absent from both inputs.
pub const DICE_EPSILON: f64 = 1e-7;

const ROW_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct NllOutput {
    pub loss: f64,
    pub probs: Tensor2,
    /// Gradient of `loss` wrt the logits.
    pub grad: Tensor2,
}

#[derive(Debug, Clone)]
pub struct DiceOutput {
    pub value: f64,
    /// Gradient of `value` wrt the prediction matrix.
    pub grad: Tensor2,
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: &Tensor2) -> Tensor2 {
    let mut p = logits.clone();
    for i in 0..p.rows() {
        let row = p.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    p
}

/// Pulls a gradient wrt softmax probabilities back to the logits.
pub fn softmax_backward(probs: &Tensor2, grad_probs: &Tensor2) -> Tensor2 {
    let mut out = Tensor2::zeros(probs.rows(), probs.cols());
    for i in 0..probs.rows() {
        let (p, g) = (probs.row(i), grad_probs.row(i));
        let dot: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
        for ((o, &pv), &gv) in out.row_mut(i).iter_mut().zip(p).zip(g) {
            *o = pv * (gv - dot);
        }
    }
    out
}

pub fn one_hot(labels: &[usize], classes: usize) -> Tensor2 {
    let mut t = Tensor2::zeros(labels.len(), classes);
    for (i, &l) in labels.iter().enumerate() {
        t.set(i, l, 1.0);
    }
    t
}

/// Mean negative log-likelihood of `labels` under `softmax(logits)`.
pub fn softmax_nll(logits: &Tensor2, labels: &[usize]) -> Result<NllOutput, LossError> {
    let (n, classes) = logits.shape();
    if labels.len() != n {
        return Err(ShapeError::new(format!("{} labels for {n} rows", labels.len())).into());
    }
    if let Some((row, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
        return Err(LossError::LabelOutOfRange { row, label, classes });
    }
    let probs = softmax_rows(logits);
    let mut loss = 0.0;
    let mut grad = probs.clone();
    let inv_n = 1.0 / n.max(1) as f64;
    for (i, &l) in labels.iter().enumerate() {
        // log-softmax directly from logits keeps saturated rows exact
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss -= row[l] - lse;
        let g = grad.row_mut(i);
        g[l] -= 1.0;
        g.iter_mut().for_each(|v| *v *= inv_n);
    }
    Ok(NllOutput { loss: loss * inv_n, probs, grad })
}

/// `D = (1/|L|) Σ_l 2 Σ_i g_l^i p_l^i / (Σ_i (g_l^i + p_l^i) + ε)` and its
/// gradient wrt `pred`. No normalization checks.
pub fn dice_value_and_grad(truth: &Tensor2, pred: &Tensor2) -> Result<DiceOutput, ShapeError> {
    if truth.shape() != pred.shape() {
        return Err(ShapeError::new(format!(
            "dice: truth {:?} vs prediction {:?}",
            truth.shape(),
            pred.shape()
        )));
    }
    let classes = truth.cols();
    let mut inter = vec![0.0; classes];
    let mut total = vec![0.0; classes];
    for i in 0..truth.rows() {
        for (l, (&g, &p)) in truth.row(i).iter().zip(pred.row(i)).enumerate() {
            inter[l] += g * p;
            total[l] += g + p;
        }
    }
    let inv_l = 1.0 / classes.max(1) as f64;
    let value = inter
        .iter()
        .zip(&total)
        .map(|(&a, &s)| 2.0 * a / (s + DICE_EPSILON))
        .sum::<f64>()
        * inv_l;
    let mut grad = Tensor2::zeros(truth.rows(), classes);
    for i in 0..truth.rows() {
        for (l, (o, &g)) in grad.row_mut(i).iter_mut().zip(truth.row(i)).enumerate() {
            let denom = total[l] + DICE_EPSILON;
            *o = inv_l * (2.0 * g / denom - 2.0 * inter[l] / (denom * denom));
        }
    }
    Ok(DiceOutput { value, grad })
}

fn check_rows(which: &'static str, t: &Tensor2) -> Result<(), LossError> {
    for row in 0..t.rows() {
        let sum: f64 = t.row(row).iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE || t.row(row).iter().any(|&v| v < 0.0) {
            return Err(LossError::NotNormalized { which, row, sum });
        }
    }
    Ok(())
}

/// Multi-class Dice between probability matrices; rows must be distributions.
pub fn dice_score(truth: &Tensor2, pred: &Tensor2) -> Result<DiceOutput, LossError> {
    check_rows("ground-truth", truth)?;
    check_rows("prediction", pred)?;
    Ok(dice_value_and_grad(truth, pred)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::glorot_uniform;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_logits(rng: &mut ChaCha8Rng, n: usize, l: usize) -> Tensor2 {
        let mut t = glorot_uniform(n, l, rng);
        t.scale(3.0);
        t
    }

    #[test]
    fn uniform_logits_give_log_classes() {
        let out = softmax_nll(&Tensor2::zeros(7, 5), &[0, 1, 2, 3, 4, 0, 1]).unwrap();
        assert!((out.loss - 5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn saturated_margin_has_negligible_loss() {
        let mut logits = Tensor2::zeros(2, 3);
        logits.set(0, 1, 50.0);
        logits.set(1, 2, 50.0);
        let out = softmax_nll(&logits, &[1, 2]).unwrap();
        assert!(out.loss < 1e-20, "{}", out.loss);
    }

    #[test]
    fn label_range_checked() {
        assert!(matches!(
            softmax_nll(&Tensor2::zeros(2, 3), &[0, 3]),
            Err(LossError::LabelOutOfRange { row: 1, label: 3, classes: 3 })
        ));
    }

    #[test]
    fn softmax_rows_normalized_and_shift_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let logits = random_logits(&mut rng, 10, 6);
        let p = softmax_rows(&logits);
        let mut shifted = logits.clone();
        for i in 0..10 {
            let s = rng.gen_range(-20.0..20.0);
            shifted.row_mut(i).iter_mut().for_each(|v| *v += s);
        }
        let q = softmax_rows(&shifted);
        for i in 0..10 {
            assert!((p.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(p.max_abs_diff(&q) < 1e-12);
        let g = softmax_nll(&logits, &[0, 1, 2, 3, 4, 5, 0, 1, 2, 3]).unwrap().grad;
        for i in 0..10 {
            assert!(g.row(i).iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn nll_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let labels: Vec<usize> = (0..6).map(|_| rng.gen_range(0..4)).collect();
        let logits = random_logits(&mut rng, 6, 4);
        let an = softmax_nll(&logits, &labels).unwrap().grad;
        let h = 1e-5;
        for k in 0..logits.as_slice().len() {
            let mut plus = logits.clone();
            plus.as_mut_slice()[k] += h;
            let mut minus = logits.clone();
            minus.as_mut_slice()[k] -= h;
            let fd = (softmax_nll(&plus, &labels).unwrap().loss
                - softmax_nll(&minus, &labels).unwrap().loss)
                / (2.0 * h);
            let a = an.as_slice()[k];
            assert!((fd - a).abs() <= 1e-6 * a.abs().max(1e-3), "{k}: {fd} vs {a}");
        }
    }

    #[test]
    fn perfect_prediction_has_unit_dice() {
        let labels = [0, 1, 2, 3, 0, 1, 2, 3];
        let g = one_hot(&labels, 4);
        let d = dice_score(&g, &g).unwrap().value;
        assert!((d - 1.0).abs() < 1e-5);
    }

    #[test]
    fn uniform_prediction_on_balanced_truth_is_one_over_l() {
        // per region: 2·(N/L)(1/L) / (2N/L + ε); ε shifts it by about ε/(2N)
        for l in [2usize, 3, 8] {
            let n = l * 100;
            let labels: Vec<usize> = (0..n).map(|i| i % l).collect();
            let g = one_hot(&labels, l);
            let p = Tensor2::filled(n, l, 1.0 / l as f64);
            let d = dice_score(&g, &p).unwrap().value;
            let share = n as f64 / l as f64;
            let exact = 2.0 * share / l as f64 / (2.0 * share + DICE_EPSILON);
            assert!((d - exact).abs() < 1e-14, "{l}: {d} vs {exact}");
            assert!((d - 1.0 / l as f64).abs() < 1e-9, "{l}: {d}");
        }
    }

    #[test]
    fn dice_checks_rows() {
        let g = one_hot(&[0, 1], 2);
        let bad = Tensor2::from_rows(&[[0.5, 0.6], [0.0, 1.0]]);
        assert!(matches!(dice_score(&g, &bad), Err(LossError::NotNormalized { row: 0, .. })));
    }

    #[test]
    fn dice_symmetric_bounded_and_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = softmax_rows(&random_logits(&mut rng, 12, 3));
        let b = softmax_rows(&random_logits(&mut rng, 12, 3));
        let ab = dice_score(&a, &b).unwrap().value;
        let ba = dice_score(&b, &a).unwrap().value;
        assert!((ab - ba).abs() < 1e-15);
        assert!(ab > 0.0 && ab <= 1.0);

        // mass moving off the true class lowers Dice
        let labels: Vec<usize> = (0..12).map(|i| i % 3).collect();
        let g = one_hot(&labels, 3);
        let mut prev = f64::INFINITY;
        for step in 0..=10 {
            let t = step as f64 / 10.0;
            let mut p = Tensor2::zeros(12, 3);
            for (i, &l) in labels.iter().enumerate() {
                p.set(i, l, 1.0 - t);
                p.set(i, (l + 1) % 3, t);
            }
            let d = dice_score(&g, &p).unwrap().value;
            assert!(d < prev);
            prev = d;
        }
    }

    #[test]
    fn dice_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let labels: Vec<usize> = (0..9).map(|_| rng.gen_range(0..3)).collect();
        let g = one_hot(&labels, 3);
        let p = softmax_rows(&random_logits(&mut rng, 9, 3));
        let an = dice_value_and_grad(&g, &p).unwrap().grad;
        let h = 1e-6;
        for k in 0..p.as_slice().len() {
            let mut plus = p.clone();
            plus.as_mut_slice()[k] += h;
            let mut minus = p.clone();
            minus.as_mut_slice()[k] -= h;
            let fd = (dice_value_and_grad(&g, &plus).unwrap().value
                - dice_value_and_grad(&g, &minus).unwrap().value)
                / (2.0 * h);
            let a = an.as_slice()[k];
            assert!((fd - a).abs() <= 1e-5 * a.abs().max(1e-3), "{k}: {fd} vs {a}");
        }
    }
}
