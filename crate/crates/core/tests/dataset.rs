use std::path::Path;

use surfparc::data::{kfold_split, load_dataset, save_dataset, write_synthetic_dataset, DatasetManifest};
use surfparc::error::DataError;
use surfparc::network::ModelConfig;

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn load_save_load_is_bit_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let manifest = write_synthetic_dataset(a.path(), 2, 6, 5, 5, 12).unwrap();
    let loaded = load_dataset(&DatasetManifest::read(&manifest).unwrap(), 6).unwrap();
    assert_eq!(loaded.len(), 5);
    save_dataset(&loaded, &b.path().join("manifest.txt")).unwrap();
    assert_eq!(files(a.path()), files(b.path()));
    let again = load_dataset(&DatasetManifest::read(&b.path().join("manifest.txt")).unwrap(), 6).unwrap();
    assert_eq!(again, loaded);
}

#[test]
fn prepared_graphs_hash_identically_across_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_synthetic_dataset(dir.path(), 2, 4, 3, 3, 1).unwrap();
    let config = ModelConfig { classes: 4, ..ModelConfig::default() };
    let hashes = || {
        load_dataset(&DatasetManifest::read(&manifest).unwrap(), 4)
            .unwrap()
            .iter()
            .map(|s| s.prepare(&config, 7).unwrap().fingerprint())
            .collect::<Vec<_>>()
    };
    let first = hashes();
    assert_eq!(first.len(), 3);
    assert_eq!(first, hashes());
}

fn tiny_manifest(dir: &Path, features: &str, labels: &str) -> DatasetManifest {
    std::fs::write(dir.join("t.off"), "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
    std::fs::write(dir.join("t.f"), features).unwrap();
    std::fs::write(dir.join("t.l"), labels).unwrap();
    std::fs::write(dir.join("m.txt"), "tiny t.off t.f t.l\n").unwrap();
    DatasetManifest::read(&dir.join("m.txt")).unwrap()
}

#[test]
fn feature_count_mismatch_reports_subject_and_counts() {
    let dir = tempfile::tempdir().unwrap();
    let m = tiny_manifest(dir.path(), &"1 2 3\n".repeat(4), "0\n1\n0\n");
    let err = load_dataset(&m, 2).unwrap_err();
    assert!(matches!(err, DataError::CountMismatch { expected: 3, found: 4, .. }), "{err}");
    let msg = err.to_string();
    assert!(msg.contains("tiny") && msg.contains("expected 3") && msg.contains("found 4"), "{msg}");
}

#[test]
fn label_equal_to_class_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let m = tiny_manifest(dir.path(), &"1 2 3\n".repeat(3), "0\n8\n1\n");
    assert!(matches!(load_dataset(&m, 8), Err(DataError::LabelOutOfRange { label: 8, classes: 8, .. })));
    assert!(load_dataset(&m, 9).is_ok());
}

#[test]
fn failures_are_aggregated_per_subject() {
    let dir = tempfile::tempdir().unwrap();
    tiny_manifest(dir.path(), &"1 2 3\n".repeat(2), "0\n1\n0\n");
    std::fs::write(dir.path().join("m.txt"), "a t.off t.f t.l\nb t.off missing.f t.l\n").unwrap();
    let err = load_dataset(&DatasetManifest::read(&dir.path().join("m.txt")).unwrap(), 2).unwrap_err();
    match err {
        DataError::Many(list) => assert_eq!(list.len(), 2),
        other => panic!("expected two failures, got {other}"),
    }
}

#[test]
fn every_subject_is_tested_exactly_once() {
    for (n, k) in [(20, 5), (101, 5), (7, 3), (5, 5)] {
        let folds = kfold_split(n, k, 42).unwrap();
        let mut sizes = vec![0; k];
        for &f in &folds {
            assert!((1..=k).contains(&f));
            sizes[f - 1] += 1;
        }
        assert_eq!(sizes.iter().sum::<usize>(), n);
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }
}
