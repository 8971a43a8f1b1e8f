use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::DataError;
use crate::mesh::io::{format_vtk_labeled, write_atomic, write_features, write_labels};
use crate::mesh::TriangleMesh;
use crate::network::{EpochMetrics, Prediction};

/// Files written for one predicted subject.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionFiles {
    pub labels: PathBuf,
    pub probs: PathBuf,
    pub vtk: PathBuf,
}

/// Writes `{id}.labels.txt`, `{id}.probs.txt` and `{id}.vtk` into `dir`.
pub fn write_prediction(
    dir: &Path,
    id: &str,
    mesh: &TriangleMesh,
    pred: &Prediction,
) -> Result<PredictionFiles, DataError> {
    std::fs::create_dir_all(dir).map_err(|source| DataError::Io { path: dir.to_path_buf(), source })?;
    let files = PredictionFiles {
        labels: dir.join(format!("{id}.labels.txt")),
        probs: dir.join(format!("{id}.probs.txt")),
        vtk: dir.join(format!("{id}.vtk")),
    };
    write_labels(&files.labels, &pred.labels)?;
    write_features(&files.probs, &pred.probs)?;
    write_atomic(&files.vtk, format_vtk_labeled(mesh, &pred.labels).as_bytes())?;
    Ok(files)
}

pub fn format_metrics_log(history: &[EpochMetrics]) -> String {
    let mut s = String::from("# epoch stage loss dice\n");
    for m in history {
        let _ = writeln!(s, "{m}");
    }
    s
}

pub fn write_metrics_log(path: &Path, history: &[EpochMetrics]) -> Result<(), DataError> {
    write_atomic(path, format_metrics_log(history).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::softmax_rows;
    use crate::mesh::io::{read_features, read_labels};
    use crate::mesh::make_icosphere;
    use crate::network::{argmax_rows, Stage};
    use crate::tensor::Tensor2;

    #[test]
    fn prediction_files_reload() {
        let mesh = make_icosphere(1).unwrap();
        let n = mesh.vertex_count();
        let logits =
            Tensor2::from_vec(n, 4, (0..n * 4).map(|k| ((k * 7 + k / 4) % 5) as f64 * 0.37 - 1.0).collect())
                .unwrap();
        let probs = softmax_rows(&logits);
        let pred = Prediction { labels: argmax_rows(&probs), probs };
        let dir = tempfile::tempdir().unwrap();
        let files = write_prediction(dir.path(), "s", &mesh, &pred).unwrap();
        assert_eq!(read_labels(&files.labels).unwrap(), pred.labels);
        let back = read_features(&files.probs).unwrap();
        assert_eq!(back, pred.probs);
        for i in 0..n {
            assert!((back.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let vtk = std::fs::read_to_string(&files.vtk).unwrap();
        assert!(vtk.contains(&format!("POINT_DATA {n}")));
    }

    #[test]
    fn metrics_log_has_one_line_per_epoch() {
        let h: Vec<_> = (0..3)
            .map(|e| EpochMetrics { epoch: e, stage: Stage::Coarse, loss: 1.0 / (e + 1) as f64, dice: 0.5 })
            .collect();
        let text = format_metrics_log(&h);
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().nth(2).unwrap().starts_with("1 coarse 5.000000000000e-1"));
    }
}
