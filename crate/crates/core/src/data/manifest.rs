use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::DataError;
use crate::mesh::io::write_atomic;

/// One manifest line: `id mesh features labels [fold]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubjectRecord {
    pub id: String,
    pub mesh: PathBuf,
    pub features: PathBuf,
    /// `None` for unlabeled subjects, written as `-`.
    pub labels: Option<PathBuf>,
    /// Test fold in `1..=k`.
    pub fold: Option<usize>,
}

/// Subject list; relative paths resolve against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub base: PathBuf,
    pub subjects: Vec<SubjectRecord>,
}

impl DatasetManifest {
    pub fn parse(text: &str, base: &Path, source: &Path) -> Result<Self, DataError> {
        let err = |line: usize, msg: String| DataError::Parse { path: source.to_path_buf(), line, msg };
        let mut subjects: Vec<SubjectRecord> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if !(4..=5).contains(&toks.len()) {
                return Err(err(i + 1, format!("expected `id mesh features labels [fold]`, found {} fields", toks.len())));
            }
            let fold = match toks.get(4) {
                Some(t) => match t.parse::<usize>() {
                    Ok(f) if f >= 1 => Some(f),
                    _ => return Err(err(i + 1, format!("fold id must be a positive integer, got `{t}`"))),
                },
                None => None,
            };
            if subjects.iter().any(|s| s.id == toks[0]) {
                return Err(err(i + 1, format!("duplicate subject id `{}`", toks[0])));
            }
            subjects.push(SubjectRecord {
                id: toks[0].to_string(),
                mesh: toks[1].into(),
                features: toks[2].into(),
                labels: (toks[3] != "-").then(|| toks[3].into()),
                fold,
            });
        }
        let with_fold = subjects.iter().filter(|s| s.fold.is_some()).count();
        if with_fold != 0 && with_fold != subjects.len() {
            return Err(err(0, "fold ids must be given for every subject or for none".into()));
        }
        Ok(Self { base: base.to_path_buf(), subjects })
    }

    pub fn read(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base, path)
    }

    pub fn format(&self) -> String {
        let mut s = String::new();
        for r in &self.subjects {
            let labels = r.labels.as_ref().map_or("-".into(), |p| p.display().to_string());
            let _ = write!(s, "{} {} {} {labels}", r.id, r.mesh.display(), r.features.display());
            if let Some(f) = r.fold {
                let _ = write!(s, " {f}");
            }
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), DataError> {
        write_atomic(path, self.format().as_bytes())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    /// Fold ids, if the manifest carries them.
    pub fn folds(&self) -> Option<Vec<usize>> {
        self.subjects.iter().map(|s| s.fold).collect()
    }
}
