use std::time::Instant;

use serde::Serialize;

use super::report::{majority_label, EvaluationReport};
use super::{LoadedSubject, RunConfig};
use crate::error::{DataError, Error, Result};
use crate::network::{train_stage, EpochMetrics, ModelConfig, ParcellationModel, PreparedSubject, Stage};

/// Prepares every subject with the same pooling seed. Mesh problems are
/// reported against the subject they came from.
pub fn prepare_subjects(subjects: &[LoadedSubject], config: &ModelConfig, seed: u64) -> Result<Vec<PreparedSubject>> {
    subjects
        .iter()
        .map(|s| {
            s.prepare(config, seed).map_err(|e| match e {
                Error::Mesh(source) => DataError::Mesh { subject: s.id.clone(), source }.into(),
                other => other,
            })
        })
        .collect()
}

fn require_labels(subjects: &[PreparedSubject]) -> Result<()> {
    match subjects.iter().find(|s| s.labels().is_none()) {
        Some(s) => Err(DataError::Invalid(format!("subject {} has no labels", s.id())).into()),
        None => Ok(()),
    }
}

/// Model snapshots after each stage.
#[derive(Debug, Clone)]
pub struct TrainedModels {
    pub coarse: ParcellationModel,
    pub refined: ParcellationModel,
    pub history: Vec<EpochMetrics>,
}

pub fn train_models(
    run: &RunConfig,
    subjects: &[PreparedSubject],
    on_epoch: &mut dyn FnMut(&EpochMetrics),
) -> Result<TrainedModels> {
    require_labels(subjects)?;
    let mut model = ParcellationModel::new(run.model.clone(), run.seed)?;
    let mut history = train_stage(&mut model, subjects, Stage::Coarse, &run.schedule, run.seed, on_epoch)?;
    let coarse = model.clone();
    history.extend(train_stage(&mut model, subjects, Stage::Refine, &run.schedule, run.seed, on_epoch)?);
    Ok(TrainedModels { coarse, refined: model, history })
}

/// Hard-Dice reports of the coarse output and, after refinement training,
/// the refined output.
pub fn evaluate_model(
    model: &ParcellationModel,
    subjects: &[PreparedSubject],
) -> Result<(EvaluationReport, Option<EvaluationReport>)> {
    require_labels(subjects)?;
    let mut coarse = Vec::new();
    let mut refined = Vec::new();
    for s in subjects {
        let (c, r) = model.predict_both(s)?;
        coarse.push(c.labels);
        if let Some(r) = r {
            refined.push(r.labels);
        }
    }
    let report = |preds: &[Vec<usize>]| {
        EvaluationReport::new(
            model.classes(),
            subjects.iter().zip(preds).map(|(s, p)| (s.id(), s.labels().expect("checked"), &p[..])),
        )
    };
    let c = report(&coarse)?;
    let r = if refined.is_empty() { None } else { Some(report(&refined)?) };
    Ok((c, r))
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub test: Vec<String>,
    pub coarse: EvaluationReport,
    pub refined: EvaluationReport,
    /// Every test vertex assigned the most frequent training label.
    pub baseline: EvaluationReport,
    #[serde(skip)]
    pub seconds: f64,
}

/// Trains on all folds but one and scores the held-out fold, for each fold
/// id in `folds` (one per subject). `on_fold` also sees the fold's models.
pub fn cross_validate(
    run: &RunConfig,
    subjects: &[PreparedSubject],
    folds: &[usize],
    on_fold: &mut dyn FnMut(&FoldResult, &TrainedModels),
) -> Result<Vec<FoldResult>> {
    if folds.len() != subjects.len() {
        return Err(DataError::Invalid(format!("{} fold ids for {} subjects", folds.len(), subjects.len())).into());
    }
    require_labels(subjects)?;
    let mut ids: Vec<usize> = folds.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let mut results = Vec::with_capacity(ids.len());
    for fold in ids {
        let start = Instant::now();
        let (test, train): (Vec<_>, Vec<_>) =
            subjects.iter().zip(folds).partition(|(_, &f)| f == fold);
        let test: Vec<PreparedSubject> = test.into_iter().map(|(s, _)| s.clone()).collect();
        let train: Vec<PreparedSubject> = train.into_iter().map(|(s, _)| s.clone()).collect();
        if train.is_empty() {
            return Err(DataError::Invalid(format!("fold {fold} leaves no training subjects")).into());
        }
        let trained = train_models(run, &train, &mut |_| {})?;
        let (coarse, _) = evaluate_model(&trained.coarse, &test)?;
        let (_, refined) = evaluate_model(&trained.refined, &test)?;
        let all_train: Vec<usize> = train.iter().flat_map(|s| s.labels().expect("checked").to_vec()).collect();
        let majority = majority_label(&all_train, run.model.classes);
        let constant: Vec<Vec<usize>> = test.iter().map(|s| vec![majority; s.vertex_count()]).collect();
        let baseline = EvaluationReport::new(
            run.model.classes,
            test.iter().zip(&constant).map(|(s, p)| (s.id(), s.labels().expect("checked"), &p[..])),
        )?;
        let result = FoldResult {
            fold,
            test: test.iter().map(|s| s.id().to_string()).collect(),
            coarse,
            refined: refined.expect("refined model"),
            baseline,
            seconds: start.elapsed().as_secs_f64(),
        };
        on_fold(&result, &trained);
        results.push(result);
    }
    Ok(results)
}
