//! JSON manifests that tie clip ids to npy arrays on disk.
//!
//! A corpus manifest maps `clip_id` to an entry:
//!
//! ```json
//! {
//!   "clip_0001": {
//!     "prompt_id": "p17", "baseline_id": "MDM", "fps": 20,
//!     "joints": "joints/clip_0001.npy",
//!     "features": "feats/clip_0001.npy", "normalized": true,
//!     "vertices": "mesh/clip_0001.npy", "faces": "mesh/faces.npy",
//!     "pose_distances": "pq/clip_0001.npy",
//!     "prompt_type": "dynamics_long", "prompt_text": "a person jumps",
//!     "strip": "strips/clip_0001.png", "stride": 3
//!   }
//! }
//! ```
//!
//! Relative paths resolve against the manifest's directory. Iteration order is
//! always lexicographic by clip id.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::motion::{
    EmbeddingSet, FeatureClip, MeshSequence, MotionClip, PoseDistanceSeries, DEFAULT_FPS,
};
use crate::npy::{self, NpyError};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },
    #[error("clip {clip_id}: missing file {path}")]
    MissingFile { clip_id: String, path: PathBuf },
    #[error("clip {clip_id}: {reason}")]
    InvariantViolation { clip_id: String, reason: String },
}

impl CorpusError {
    /// The record the error refers to, if it is record-level.
    pub fn clip_id(&self) -> Option<&str> {
        match self {
            CorpusError::Manifest { .. } => None,
            CorpusError::MissingFile { clip_id, .. }
            | CorpusError::InvariantViolation { clip_id, .. } => Some(clip_id),
        }
    }
}

/// One manifest record as written on disk.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ClipEntry {
    pub prompt_id: String,
    pub baseline_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joints: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalized: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub faces: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose_distances: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strip: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<u32>,
}

/// A fully validated clip record.
#[derive(Debug, Clone)]
pub struct ClipRecord {
    pub clip_id: String,
    pub prompt_id: String,
    pub baseline_id: String,
    pub prompt_type: Option<String>,
    pub prompt_text: Option<String>,
    pub fps: f64,
    pub motion: Option<MotionClip>,
    pub features: Option<FeatureClip>,
    pub mesh: Option<MeshSequence>,
    pub pose_distances: Option<PoseDistanceSeries>,
    pub strip: Option<PathBuf>,
    pub stride: Option<u32>,
}

/// Clips keyed (and therefore ordered) by clip id.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    clips: BTreeMap<String, ClipRecord>,
}

impl Corpus {
    pub fn from_records(records: impl IntoIterator<Item = ClipRecord>) -> Self {
        Self {
            clips: records.into_iter().map(|r| (r.clip_id.clone(), r)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    pub fn get(&self, clip_id: &str) -> Option<&ClipRecord> {
        self.clips.get(clip_id)
    }

    /// Records in clip-id order.
    pub fn iter(&self) -> impl Iterator<Item = &ClipRecord> {
        self.clips.values()
    }

    /// Clip ids grouped by prompt id, both levels sorted.
    pub fn by_prompt(&self) -> BTreeMap<&str, Vec<&ClipRecord>> {
        let mut groups: BTreeMap<&str, Vec<&ClipRecord>> = BTreeMap::new();
        for rec in self.clips.values() {
            groups.entry(rec.prompt_id.as_str()).or_default().push(rec);
        }
        groups
    }

    pub fn baselines(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.clips.values().map(|r| r.baseline_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn read_manifest<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CorpusError> {
    let text = fs::read_to_string(path).map_err(|e| CorpusError::Manifest {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| CorpusError::Manifest {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn npy_error(clip_id: &str, path: &Path, err: NpyError) -> CorpusError {
    match err {
        NpyError::Io(e) if e.kind() == std::io::ErrorKind::NotFound => CorpusError::MissingFile {
            clip_id: clip_id.to_string(),
            path: path.to_path_buf(),
        },
        other => CorpusError::InvariantViolation {
            clip_id: clip_id.to_string(),
            reason: format!("{}: {other}", path.display()),
        },
    }
}

fn violation(clip_id: &str, reason: impl std::fmt::Display) -> CorpusError {
    CorpusError::InvariantViolation {
        clip_id: clip_id.to_string(),
        reason: reason.to_string(),
    }
}

/// Loads and validates a single manifest entry.
pub fn load_entry(base: &Path, clip_id: &str, entry: &ClipEntry) -> Result<ClipRecord, CorpusError> {
    let fps = entry.fps.unwrap_or(DEFAULT_FPS);
    if !(fps.is_finite() && fps > 0.0) {
        return Err(violation(clip_id, format!("fps must be positive, got {fps}")));
    }

    let read = |p: &Path| {
        let full = resolve(base, p);
        npy::read_npy(&full).map_err(|e| npy_error(clip_id, &full, e))
    };

    let motion = match &entry.joints {
        Some(p) => {
            let arr = read(p)?;
            let shape = arr.shape.clone();
            let clip = MotionClip::from_shape(&shape, arr.into_f64(), fps)
                .map_err(|e| violation(clip_id, format!("joints: {e}")))?
                .with_ids(clip_id, &entry.prompt_id, &entry.baseline_id);
            Some(clip)
        }
        None => None,
    };

    let features = match &entry.features {
        Some(p) => {
            let arr = read(p)?;
            let shape = arr.shape.clone();
            let normalized = entry.normalized.unwrap_or(true);
            Some(
                FeatureClip::from_shape(&shape, arr.into_f64(), normalized)
                    .map_err(|e| violation(clip_id, format!("features: {e}")))?,
            )
        }
        None => None,
    };

    let mesh = match (&entry.vertices, &entry.faces) {
        (Some(v), Some(f)) => {
            let verts = read(v)?;
            let faces_path = resolve(base, f);
            let (face_shape, face_idx) = npy::read_npy_indices(&faces_path)
                .map_err(|e| npy_error(clip_id, &faces_path, e))?;
            let vshape = verts.shape.clone();
            Some(
                MeshSequence::from_shapes(&vshape, verts.into_f64(), &face_shape, face_idx)
                    .map_err(|e| violation(clip_id, format!("mesh: {e}")))?,
            )
        }
        (None, None) => None,
        _ => return Err(violation(clip_id, "vertices and faces must be given together")),
    };

    let pose_distances = match &entry.pose_distances {
        Some(p) => {
            let arr = read(p)?;
            if arr.shape.len() != 1 {
                return Err(violation(clip_id, format!("pose_distances must be 1-d, got {:?}", arr.shape)));
            }
            let series = PoseDistanceSeries::new(arr.into_f64())
                .map_err(|e| violation(clip_id, format!("pose_distances: {e}")))?;
            if let Some(m) = &motion {
                if series.distances().len() != m.num_frames() {
                    return Err(violation(
                        clip_id,
                        format!(
                            "pose_distances has {} entries for a {}-frame clip",
                            series.distances().len(),
                            m.num_frames()
                        ),
                    ));
                }
            }
            Some(series)
        }
        None => None,
    };

    if entry.stride == Some(0) {
        return Err(violation(clip_id, "stride must be at least 1"));
    }
    let strip = entry.strip.as_ref().map(|p| resolve(base, p));
    if let Some(p) = &strip {
        if !p.exists() {
            return Err(CorpusError::MissingFile {
                clip_id: clip_id.to_string(),
                path: p.clone(),
            });
        }
    }

    Ok(ClipRecord {
        clip_id: clip_id.to_string(),
        prompt_id: entry.prompt_id.clone(),
        baseline_id: entry.baseline_id.clone(),
        prompt_type: entry.prompt_type.clone(),
        prompt_text: entry.prompt_text.clone(),
        fps,
        motion,
        features,
        mesh,
        pose_distances,
        strip,
        stride: entry.stride,
    })
}

/// Loads every record, failing on the first invalid one.
pub fn load_corpus(manifest: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let (corpus, mut errors) = load_corpus_lenient(manifest)?;
    match errors.is_empty() {
        true => Ok(corpus),
        false => Err(errors.remove(0)),
    }
}

/// Loads every valid record and returns the invalid ones as errors, in clip-id
/// order. Only a manifest that cannot be read at all is a hard error.
pub fn load_corpus_lenient(
    manifest: impl AsRef<Path>,
) -> Result<(Corpus, Vec<CorpusError>), CorpusError> {
    let path = manifest.as_ref();
    let entries: BTreeMap<String, ClipEntry> = read_manifest(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut records = Vec::with_capacity(entries.len());
    let mut errors = Vec::new();
    for (clip_id, entry) in &entries {
        match load_entry(base, clip_id, entry) {
            Ok(rec) => records.push(rec),
            Err(e) => errors.push(e),
        }
    }
    Ok((Corpus::from_records(records), errors))
}

/// Embedding manifest: `{"text": {prompt_id: path}, "motion": {clip_id: path},
/// "atomic_pairs": {clip_id: path}}`. Vectors are `(D,)` or `(1, D)` arrays;
/// atomic pairs are `(N, 2, D)`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EmbeddingManifest {
    #[serde(default)]
    pub text: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub motion: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub atomic_pairs: BTreeMap<String, PathBuf>,
}

fn load_vector(id: &str, path: &Path) -> Result<Vec<f64>, CorpusError> {
    let arr = npy::read_npy(path).map_err(|e| npy_error(id, path, e))?;
    match arr.shape.as_slice() {
        [_] | [1, _] => Ok(arr.into_f64()),
        other => Err(violation(id, format!("embedding must be (D,) or (1, D), got {other:?}"))),
    }
}

pub fn load_embeddings(manifest: impl AsRef<Path>) -> Result<EmbeddingSet, CorpusError> {
    let path = manifest.as_ref();
    let m: EmbeddingManifest = read_manifest(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut set = EmbeddingSet::default();
    for (id, p) in &m.text {
        set.text.insert(id.clone(), load_vector(id, &resolve(base, p))?);
    }
    for (id, p) in &m.motion {
        set.motion.insert(id.clone(), load_vector(id, &resolve(base, p))?);
    }
    for (id, p) in &m.atomic_pairs {
        let full = resolve(base, p);
        let arr = npy::read_npy(&full).map_err(|e| npy_error(id, &full, e))?;
        let (n, d) = match arr.shape.as_slice() {
            [n, 2, d] => (*n, *d),
            other => return Err(violation(id, format!("atomic pairs must be (N, 2, D), got {other:?}"))),
        };
        let values = arr.into_f64();
        let pairs = (0..n)
            .map(|i| {
                let a = values[(2 * i) * d..(2 * i + 1) * d].to_vec();
                let b = values[(2 * i + 1) * d..(2 * i + 2) * d].to_vec();
                (a, b)
            })
            .collect();
        set.atomic_pairs.insert(id.clone(), pairs);
    }
    set.validate()
        .map_err(|e| violation("<embeddings>", e))?;
    Ok(set)
}
