use surfparc::data::{
    cross_validate, load_checkpoint, prepare_subjects, save_checkpoint, train_models, write_synthetic_dataset,
    DatasetManifest, RunConfig,
};
use surfparc::data::{hard_dice, load_dataset};
use surfparc::mesh::{make_icosphere, synth_labels_voronoi};
use surfparc::network::{
    train_stage, CoarseNetConfig, ModelConfig, ParcellationModel, PreparedSubject, RefineNetConfig, Schedule, Stage,
};

fn narrow(classes: usize, w: usize) -> ModelConfig {
    ModelConfig {
        classes,
        coarse: CoarseNetConfig {
            intrinsic_widths: vec![w, w, w],
            extrinsic_encoder: vec![w, w],
            extrinsic_bottleneck: 2 * w,
            mlp_hidden: vec![2 * w, w],
            ..CoarseNetConfig::default()
        },
        refine: RefineNetConfig { conv_widths: vec![w, w, w], mlp_hidden: vec![w], lambda: 10.0 },
        ..ModelConfig::default()
    }
}

fn mean_dice(s: &PreparedSubject, labels: &[usize], classes: usize) -> f64 {
    let d = hard_dice(s.labels().unwrap(), labels, classes).unwrap();
    d.iter().sum::<f64>() / classes as f64
}

/// Capacity check on the default model. Decay is switched off: with one
/// subject an epoch is a single update and the default halving every 20
/// epochs stalls training well short of the target.
#[test]
fn single_subject_overfits_in_stage_one() {
    let config = ModelConfig { classes: 8, ..ModelConfig::default() };
    let mesh = make_icosphere(3).unwrap();
    let (labels, features) = synth_labels_voronoi(&mesh, 8, 77).unwrap();
    let subject = PreparedSubject::new("one", &mesh, features, Some(labels), &config, 3).unwrap();
    let mut model = ParcellationModel::new(config, 5).unwrap();
    let schedule = Schedule { coarse_epochs: 200, decay_factor: 1.0, ..Schedule::default() };
    let subjects = [subject];
    let history = train_stage(&mut model, &subjects, Stage::Coarse, &schedule, 5, &mut |_| {}).unwrap();
    assert_eq!(history.len(), 200);
    assert!(history[199].loss < history[0].loss);
    let pred = model.predict(&subjects[0]).unwrap();
    let dice = mean_dice(&subjects[0], &pred.labels, 8);
    assert!(dice > 0.95, "training Dice {dice}");
}

#[test]
fn held_out_dice_beats_majority_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let run = RunConfig {
        model: narrow(6, 8),
        schedule: Schedule { coarse_epochs: 15, refine_epochs: 5, ..Schedule::default() },
        seed: 8,
        folds: 3,
        ..RunConfig::default()
    };
    let manifest = write_synthetic_dataset(dir.path(), 3, 6, 6, 3, 8).unwrap();
    let manifest = DatasetManifest::read(&manifest).unwrap();
    let prepared =
        prepare_subjects(&load_dataset(&manifest, 6).unwrap(), &run.model, run.seed).unwrap();
    let folds = manifest.folds().unwrap();
    let results = cross_validate(&run, &prepared, &folds[..], &mut |_, _| {}).unwrap();
    assert_eq!(results.len(), 3);
    for r in &results {
        assert!(r.refined.dice.mean > r.baseline.dice.mean, "fold {}: {} vs {}", r.fold, r.refined.dice.mean, r.baseline.dice.mean);
        assert!(r.coarse.dice.mean > r.baseline.dice.mean);
        for s in &r.refined.subjects {
            assert!((0.0..=1.0).contains(&s.dice));
        }
    }
}

#[test]
fn checkpoint_files_reload_to_the_same_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let run = RunConfig {
        model: narrow(4, 6),
        schedule: Schedule { coarse_epochs: 2, refine_epochs: 2, ..Schedule::default() },
        ..RunConfig::default()
    };
    let mesh = make_icosphere(2).unwrap();
    let (labels, features) = synth_labels_voronoi(&mesh, 4, 1).unwrap();
    let s = PreparedSubject::new("s", &mesh, features, Some(labels), &run.model, run.seed).unwrap();
    let mut trained = train_models(&run, std::slice::from_ref(&s), &mut |_| {}).unwrap();
    let path = dir.path().join("refined.ckpt");
    save_checkpoint(&path, &mut trained.refined).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(back.stage, Stage::Refine);
    assert_eq!(back.predict(&s).unwrap(), trained.refined.predict(&s).unwrap());

    let mut bytes = std::fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes.truncate(last);
    std::fs::write(&path, &bytes).unwrap();
    let err = load_checkpoint(&path).unwrap_err();
    assert!(err.to_string().contains("refined.ckpt"), "{err}");
}
