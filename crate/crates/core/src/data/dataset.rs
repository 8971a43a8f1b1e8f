use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DatasetManifest, SubjectRecord};
use crate::error::{DataError, Result};
use crate::mesh::io::{read_features, read_labels, read_mesh, write_features, write_labels, write_mesh};
use crate::mesh::{make_icosphere, synth_labels_voronoi, TriangleMesh};
use crate::network::{ModelConfig, PreparedSubject};
use crate::tensor::Tensor2;

/// A subject as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSubject {
    pub id: String,
    pub mesh: TriangleMesh,
    pub features: Tensor2,
    pub labels: Option<Vec<usize>>,
    pub fold: Option<usize>,
}

impl LoadedSubject {
    pub fn prepare(&self, config: &ModelConfig, pool_seed: u64) -> Result<PreparedSubject> {
        PreparedSubject::new(
            self.id.clone(),
            &self.mesh,
            self.features.clone(),
            self.labels.clone(),
            config,
            pool_seed,
        )
    }
}

fn load_one(manifest: &DatasetManifest, r: &SubjectRecord, classes: usize) -> Result<LoadedSubject, DataError> {
    let mesh_path = manifest.resolve(&r.mesh);
    let mesh = read_mesh(&mesh_path)?;
    let n = mesh.vertex_count();
    let feat_path = manifest.resolve(&r.features);
    let features = read_features(&feat_path)?;
    if features.rows() != n {
        return Err(DataError::CountMismatch {
            subject: r.id.clone(),
            file: feat_path,
            expected: n,
            found: features.rows(),
        });
    }
    let labels = match &r.labels {
        Some(p) => {
            let label_path = manifest.resolve(p);
            let labels = read_labels(&label_path)?;
            if labels.len() != n {
                return Err(DataError::CountMismatch {
                    subject: r.id.clone(),
                    file: label_path,
                    expected: n,
                    found: labels.len(),
                });
            }
            if let Some(v) = labels.iter().position(|&l| l >= classes) {
                return Err(DataError::LabelOutOfRange {
                    subject: r.id.clone(),
                    vertex: v,
                    label: labels[v],
                    classes,
                });
            }
            Some(labels)
        }
        None => None,
    };
    Ok(LoadedSubject { id: r.id.clone(), mesh, features, labels, fold: r.fold })
}

/// Reads every subject (labels where the manifest names them), collecting all per-subject failures into one error.
pub fn load_dataset(manifest: &DatasetManifest, classes: usize) -> Result<Vec<LoadedSubject>, DataError> {
    if manifest.subjects.is_empty() {
        return Err(DataError::Invalid("manifest lists no subjects".into()));
    }
    let mut ok = Vec::with_capacity(manifest.subjects.len());
    let mut failed = Vec::new();
    for r in &manifest.subjects {
        match load_one(manifest, r, classes) {
            Ok(s) => ok.push(s),
            Err(e) => failed.push(e),
        }
    }
    match failed.len() {
        0 => Ok(ok),
        1 => Err(failed.pop().expect("one error")),
        _ => Err(DataError::Many(failed)),
    }
}

/// Writes `subjects` next to `manifest_path` in the formats `load_dataset` reads.
pub fn save_dataset(subjects: &[LoadedSubject], manifest_path: &Path) -> Result<DatasetManifest, DataError> {
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let io_err = |source| DataError::Io { path: dir.to_path_buf(), source };
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let mut records = Vec::with_capacity(subjects.len());
    for s in subjects {
        let rec = SubjectRecord {
            id: s.id.clone(),
            mesh: PathBuf::from(format!("{}.off", s.id)),
            features: PathBuf::from(format!("{}.features.txt", s.id)),
            labels: s.labels.as_ref().map(|_| PathBuf::from(format!("{}.labels.txt", s.id))),
            fold: s.fold,
        };
        write_mesh(&dir.join(&rec.mesh), &s.mesh)?;
        write_features(&dir.join(&rec.features), &s.features)?;
        if let (Some(p), Some(l)) = (&rec.labels, &s.labels) {
            write_labels(&dir.join(p), l)?;
        }
        records.push(rec);
    }
    let manifest = DatasetManifest { base: dir.to_path_buf(), subjects: records };
    manifest.write(manifest_path)?;
    Ok(manifest)
}

/// Test-fold id in `1..=k` for each of `n` subjects: a seeded shuffle cut
/// into contiguous chunks, the first `n mod k` chunks one larger.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<usize>, DataError> {
    if k == 0 || k > n {
        return Err(DataError::Invalid(format!("cannot split {n} subjects into {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = vec![0; n];
    let mut pos = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        for &s in &order[pos..pos + size] {
            folds[s] = f + 1;
        }
        pos += size;
    }
    Ok(folds)
}

/// Icosphere subjects with geodesic-Voronoi labels, written with a manifest
/// that assigns `folds` seeded test folds.
pub fn write_synthetic_dataset(
    dir: &Path,
    level: u32,
    regions: usize,
    subjects: usize,
    folds: usize,
    seed: u64,
) -> Result<PathBuf> {
    let mesh = make_icosphere(level)?;
    let fold_ids = kfold_split(subjects, folds, seed)?;
    let loaded = (0..subjects)
        .map(|k| {
            let (labels, features) = synth_labels_voronoi(&mesh, regions, subject_seed(seed, k))?;
            Ok(LoadedSubject {
                id: format!("subject{k:03}"),
                mesh: mesh.clone(),
                features,
                labels: Some(labels),
                fold: Some(fold_ids[k]),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let path = dir.join("manifest.txt");
    save_dataset(&loaded, &path)?;
    Ok(path)
}

fn subject_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(k as u64 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_sizes() {
        let sizes = |n, k| {
            let f = kfold_split(n, k, 3).unwrap();
            (1..=k).map(|i| f.iter().filter(|&&x| x == i).count()).collect::<Vec<_>>()
        };
        assert_eq!(sizes(10, 5), vec![2; 5]);
        assert_eq!(sizes(101, 5), vec![21, 20, 20, 20, 20]);
        assert_eq!(sizes(20, 5), vec![4; 5]);
        assert_eq!(kfold_split(12, 4, 9).unwrap(), kfold_split(12, 4, 9).unwrap());
        assert_ne!(kfold_split(12, 4, 9).unwrap(), kfold_split(12, 4, 10).unwrap());
        assert!(kfold_split(3, 4, 0).is_err());
        assert!(kfold_split(3, 0, 0).is_err());
    }
}
