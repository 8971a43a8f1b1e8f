use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ParcellationModel, PreparedSubject, Schedule, Stage};
use crate::diff::{Parameterized, SgdState};
use crate::error::{DataError, Error, Result};

/// One metrics-log record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub stage: Stage,
    /// Mean training objective over subjects.
    pub loss: f64,
    /// Mean soft Dice over subjects.
    pub dice: f64,
}

impl std::fmt::Display for EpochMetrics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {} {:.12e} {:.12e}", self.epoch, self.stage, self.loss, self.dice)
    }
}

fn apply_group(model: &mut ParcellationModel, stage: Stage, state: &SgdState, scale: f64) {
    model.visit_group(stage, &mut |p| {
        if scale != 1.0 {
            p.grad.iter_mut().for_each(|g| *g *= scale);
        }
        state.apply(p.value, p.grad);
    });
}

/// Runs one training stage. Subjects are visited in a seeded order each
/// epoch; gradients of `batch_size` subjects are averaged per update.
/// Learning rates decay once per `decay_interval` epochs.
pub fn train_stage(
    model: &mut ParcellationModel,
    subjects: &[PreparedSubject],
    stage: Stage,
    schedule: &Schedule,
    seed: u64,
    on_epoch: &mut dyn FnMut(&EpochMetrics),
) -> Result<Vec<EpochMetrics>> {
    schedule.validate()?;
    if subjects.is_empty() {
        return Err(DataError::Invalid("training set is empty".into()).into());
    }
    let lambda = model.config().refine.lambda;
    let (epochs, tag) = match stage {
        Stage::Coarse => {
            model.optimizer.coarse = Some(SgdState::new(
                schedule.coarse_rate,
                schedule.decay_factor,
                schedule.decay_interval,
            ));
            (schedule.coarse_epochs, 0x0c0a_75e0u64)
        }
        Stage::Refine => {
            model.optimizer.coarse = Some(SgdState::new(
                schedule.finetune_rate,
                schedule.decay_factor,
                schedule.decay_interval,
            ));
            model.optimizer.refine = Some(SgdState::new(
                schedule.refine_rate,
                schedule.decay_factor,
                schedule.decay_interval,
            ));
            model.stage = Stage::Refine;
            (schedule.refine_epochs, 0x2ef1_0e00u64)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tag);
    let mut history = Vec::with_capacity(epochs);
    let mut order: Vec<usize> = (0..subjects.len()).collect();
    for epoch in 0..epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut dice_sum) = (0.0, 0.0);
        for batch in order.chunks(schedule.batch_size) {
            model.zero_grad();
            for &s in batch {
                let subject = &subjects[s];
                let stats = match stage {
                    Stage::Coarse => model.coarse_step(subject)?,
                    Stage::Refine => model.refine_step(subject, lambda)?,
                };
                if !stats.loss.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "{stage} stage, epoch {epoch}, subject {}: loss {}",
                        subject.id(),
                        stats.loss
                    )));
                }
                loss_sum += stats.loss;
                dice_sum += stats.dice;
            }
            let scale = 1.0 / batch.len() as f64;
            let coarse = model.optimizer.coarse.expect("set above");
            apply_group(model, Stage::Coarse, &coarse, scale);
            if stage == Stage::Refine {
                let refine = model.optimizer.refine.expect("set above");
                apply_group(model, Stage::Refine, &refine, scale);
            }
        }
        if !model.params_finite() {
            return Err(Error::NonFinite(format!("{stage} stage, epoch {epoch}: parameters diverged")));
        }
        for state in [&mut model.optimizer.coarse, &mut model.optimizer.refine].into_iter().flatten() {
            state.advance();
        }
        let m = EpochMetrics {
            epoch,
            stage,
            loss: loss_sum / subjects.len() as f64,
            dice: dice_sum / subjects.len() as f64,
        };
        on_epoch(&m);
        history.push(m);
    }
    Ok(history)
}

/// Stage 1 on the coarse objective, then joint stage 2.
pub fn train_two_stage(
    model: &mut ParcellationModel,
    subjects: &[PreparedSubject],
    schedule: &Schedule,
    seed: u64,
    on_epoch: &mut dyn FnMut(&EpochMetrics),
) -> Result<Vec<EpochMetrics>> {
    let mut history = train_stage(model, subjects, Stage::Coarse, schedule, seed, on_epoch)?;
    history.extend(train_stage(model, subjects, Stage::Refine, schedule, seed, on_epoch)?);
    Ok(history)
}
