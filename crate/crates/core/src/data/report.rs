use serde::Serialize;

use crate::diff::DICE_EPSILON;
use crate::error::ShapeError;

/// Hard Dice of one labeled subject.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubjectScore {
    pub id: String,
    /// Mean of `regions`.
    pub dice: f64,
    pub regions: Vec<f64>,
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub classes: usize,
    /// Sorted by id.
    pub subjects: Vec<SubjectScore>,
    pub dice: Summary,
    pub regions: Vec<Summary>,
    /// `confusion[truth][predicted]` vertex counts over all subjects.
    pub confusion: Vec<Vec<u64>>,
}

/// Per-region hard Dice `2|A∩B| / (|A| + |B| + ε)`.
pub fn hard_dice(truth: &[usize], pred: &[usize], classes: usize) -> Result<Vec<f64>, ShapeError> {
    if truth.len() != pred.len() {
        return Err(ShapeError::new(format!("{} truth labels vs {} predicted", truth.len(), pred.len())));
    }
    let mut inter = vec![0usize; classes];
    let mut total = vec![0usize; classes];
    for (&t, &p) in truth.iter().zip(pred) {
        if t >= classes || p >= classes {
            return Err(ShapeError::new(format!("label outside [0, {classes})")));
        }
        total[t] += 1;
        total[p] += 1;
        if t == p {
            inter[t] += 1;
        }
    }
    Ok(inter.iter().zip(&total).map(|(&a, &s)| 2.0 * a as f64 / (s as f64 + DICE_EPSILON)).collect())
}

impl EvaluationReport {
    /// `items` are `(id, truth, predicted)`; their order does not matter.
    pub fn new<'a, I>(classes: usize, items: I) -> Result<Self, ShapeError>
    where
        I: IntoIterator<Item = (&'a str, &'a [usize], &'a [usize])>,
    {
        let mut confusion = vec![vec![0u64; classes]; classes];
        let mut subjects = Vec::new();
        for (id, truth, pred) in items {
            let regions = hard_dice(truth, pred, classes)?;
            for (&t, &p) in truth.iter().zip(pred) {
                confusion[t][p] += 1;
            }
            let dice = regions.iter().sum::<f64>() / classes as f64;
            subjects.push(SubjectScore { id: id.to_string(), dice, regions });
        }
        subjects.sort_by(|a, b| a.id.cmp(&b.id));
        let dice = Summary::of(&subjects.iter().map(|s| s.dice).collect::<Vec<_>>());
        let regions = (0..classes)
            .map(|l| Summary::of(&subjects.iter().map(|s| s.regions[l]).collect::<Vec<_>>()))
            .collect();
        Ok(Self { classes, subjects, dice, regions, confusion })
    }

    pub fn to_json(&self) -> String {
        // NaN (empty report) is not valid JSON, serde_json writes it as null
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Most frequent label, ties to the lowest.
pub fn majority_label(labels: &[usize], classes: usize) -> usize {
    let mut counts = vec![0usize; classes];
    for &l in labels {
        counts[l] += 1;
    }
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::{dice_score, one_hot};

    #[test]
    fn perfect_prediction_scores_one() {
        let t = [0, 1, 2, 2, 1, 0, 3];
        let r = EvaluationReport::new(4, [("a", &t[..], &t[..])]).unwrap();
        assert!((r.dice.mean - 1.0).abs() < 1e-6);
        assert_eq!(r.dice.std, 0.0);
        assert_eq!(r.confusion[2][2], 2);
    }

    #[test]
    fn single_class_prediction_on_balanced_labels() {
        let (l, per) = (8, 50);
        let truth: Vec<usize> = (0..l * per).map(|i| i % l).collect();
        let pred = vec![0; truth.len()];
        let d = hard_dice(&truth, &pred, l).unwrap();
        let n = truth.len() as f64;
        let exact = 2.0 * per as f64 / (per as f64 + n + DICE_EPSILON) / l as f64;
        assert!((d.iter().sum::<f64>() / l as f64 - exact).abs() < 1e-15);
        assert!((exact - 1.0 / 36.0).abs() < 1e-9);
        // the soft Dice on one-hot matrices is the same quantity
        let soft = dice_score(&one_hot(&truth, l), &one_hot(&pred, l)).unwrap().value;
        assert!((soft - exact).abs() < 1e-15);
    }

    #[test]
    fn report_ignores_subject_order() {
        let a = (vec![0, 1, 1, 0], vec![0, 1, 0, 0]);
        let b = (vec![1, 1, 0, 0], vec![1, 1, 1, 1]);
        let r1 = EvaluationReport::new(2, [("a", &a.0[..], &a.1[..]), ("b", &b.0[..], &b.1[..])]).unwrap();
        let r2 = EvaluationReport::new(2, [("b", &b.0[..], &b.1[..]), ("a", &a.0[..], &a.1[..])]).unwrap();
        assert_eq!(r1.to_json(), r2.to_json());
        assert_eq!(r1.confusion, vec![vec![2, 2], vec![1, 3]]);
    }

    #[test]
    fn majority() {
        assert_eq!(majority_label(&[2, 1, 2, 1], 3), 1);
        assert_eq!(majority_label(&[2, 2, 0], 3), 2);
    }
}
