//! In-memory containers for clips, features, meshes, embeddings and pose distances.
//!
//! Every constructor validates its invariants, so a value of one of these types
//! is always well formed. Axis convention: +Y is up and the ground is `y = 0`.

use nalgebra::Vector3;
use thiserror::Error;

/// Number of joints in the HumanML skeleton.
pub const NUM_JOINTS: usize = 22;
/// Width of a HumanML/MDM feature row.
pub const FEATURE_DIM: usize = 263;
/// Frame rate assumed when a manifest does not give one.
pub const DEFAULT_FPS: f64 = 20.0;

pub const ROOT_JOINT: usize = 0;
pub const LEFT_HIP: usize = 1;
pub const RIGHT_HIP: usize = 2;
pub const LEFT_FOOT: usize = 10;
pub const RIGHT_FOOT: usize = 11;
pub const LEFT_SHOULDER: usize = 16;
pub const RIGHT_SHOULDER: usize = 17;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShapeError {
    #[error("expected shape {expected}, got {got:?}")]
    Shape { expected: String, got: Vec<usize> },
    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),
    #[error("{0}")]
    Invalid(String),
}

fn check_finite(values: &[f64]) -> Result<(), ShapeError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(ShapeError::NonFinite(i)),
        None => Ok(()),
    }
}

/// Per-frame 3D joint positions, stored frame-major as `T × J × 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionClip {
    pub clip_id: String,
    pub prompt_id: String,
    pub baseline_id: String,
    pub fps: f64,
    frames: usize,
    joints: usize,
    positions: Vec<f64>,
}

impl MotionClip {
    /// Builds a clip from a flat `T × J × 3` buffer.
    pub fn new(
        positions: Vec<f64>,
        frames: usize,
        joints: usize,
        fps: f64,
    ) -> Result<Self, ShapeError> {
        if frames == 0 || joints == 0 || positions.len() != frames * joints * 3 {
            return Err(ShapeError::Shape {
                expected: format!("({frames}, {joints}, 3) with T, J > 0"),
                got: vec![positions.len()],
            });
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(ShapeError::Invalid(format!("fps must be positive, got {fps}")));
        }
        check_finite(&positions)?;
        Ok(Self {
            clip_id: String::new(),
            prompt_id: String::new(),
            baseline_id: String::new(),
            fps,
            frames,
            joints,
            positions,
        })
    }

    /// Builds a clip from an npy-shaped buffer; the skeleton must have 22 joints.
    pub fn from_shape(shape: &[usize], positions: Vec<f64>, fps: f64) -> Result<Self, ShapeError> {
        match shape {
            [t, j, 3] if *j == NUM_JOINTS => Self::new(positions, *t, *j, fps),
            _ => Err(ShapeError::Shape {
                expected: format!("(T, {NUM_JOINTS}, 3)"),
                got: shape.to_vec(),
            }),
        }
    }

    /// Builds a clip from per-frame joint lists.
    pub fn from_frames(frames: &[Vec<Vector3<f64>>], fps: f64) -> Result<Self, ShapeError> {
        let joints = frames.first().map_or(0, Vec::len);
        if frames.iter().any(|f| f.len() != joints) {
            return Err(ShapeError::Invalid("frames have differing joint counts".into()));
        }
        let positions = frames
            .iter()
            .flat_map(|f| f.iter().flat_map(|p| [p.x, p.y, p.z]))
            .collect();
        Self::new(positions, frames.len(), joints, fps)
    }

    pub fn with_ids(
        mut self,
        clip_id: impl Into<String>,
        prompt_id: impl Into<String>,
        baseline_id: impl Into<String>,
    ) -> Self {
        self.clip_id = clip_id.into();
        self.prompt_id = prompt_id.into();
        self.baseline_id = baseline_id.into();
        self
    }

    pub fn num_frames(&self) -> usize {
        self.frames
    }

    pub fn num_joints(&self) -> usize {
        self.joints
    }

    #[inline]
    pub fn joint(&self, t: usize, j: usize) -> Vector3<f64> {
        let i = (t * self.joints + j) * 3;
        Vector3::new(self.positions[i], self.positions[i + 1], self.positions[i + 2])
    }

    /// Joint position relative to the root at the same frame.
    #[inline]
    pub fn local_joint(&self, t: usize, j: usize) -> Vector3<f64> {
        self.joint(t, j) - self.joint(t, ROOT_JOINT)
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.frames, self.joints, 3]
    }
}

/// Per-frame 263-dim feature rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureClip {
    rows: Vec<f64>,
    frames: usize,
    pub normalized: bool,
}

impl FeatureClip {
    pub fn new(rows: Vec<f64>, frames: usize, normalized: bool) -> Result<Self, ShapeError> {
        if frames == 0 || rows.len() != frames * FEATURE_DIM {
            return Err(ShapeError::Shape {
                expected: format!("(T, {FEATURE_DIM}) with T > 0"),
                got: vec![rows.len()],
            });
        }
        check_finite(&rows)?;
        Ok(Self {
            rows,
            frames,
            normalized,
        })
    }

    pub fn from_shape(shape: &[usize], rows: Vec<f64>, normalized: bool) -> Result<Self, ShapeError> {
        match shape {
            [t, d] if *d == FEATURE_DIM => Self::new(rows, *t, normalized),
            _ => Err(ShapeError::Shape {
                expected: format!("(T, {FEATURE_DIM})"),
                got: shape.to_vec(),
            }),
        }
    }

    pub fn num_frames(&self) -> usize {
        self.frames
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.rows[t * FEATURE_DIM..(t + 1) * FEATURE_DIM]
    }

    pub fn values(&self) -> &[f64] {
        &self.rows
    }
}

/// Per-channel normalization statistics for feature rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl FeatureStats {
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self, ShapeError> {
        if mean.len() != FEATURE_DIM || std.len() != FEATURE_DIM {
            return Err(ShapeError::Shape {
                expected: format!("({FEATURE_DIM},)"),
                got: vec![mean.len(), std.len()],
            });
        }
        check_finite(&mean)?;
        check_finite(&std)?;
        if let Some(i) = std.iter().position(|s| *s <= 0.0) {
            return Err(ShapeError::Invalid(format!(
                "std channel {i} is {}, must be positive",
                std[i]
            )));
        }
        Ok(Self { mean, std })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }
}

/// Per-frame vertex positions over a fixed triangle topology.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshSequence {
    frames: usize,
    num_vertices: usize,
    vertices: Vec<f64>,
    faces: Vec<[usize; 3]>,
}

impl MeshSequence {
    pub fn new(
        vertices: Vec<f64>,
        frames: usize,
        num_vertices: usize,
        faces: Vec<[usize; 3]>,
    ) -> Result<Self, ShapeError> {
        if frames == 0 || num_vertices == 0 || vertices.len() != frames * num_vertices * 3 {
            return Err(ShapeError::Shape {
                expected: format!("({frames}, {num_vertices}, 3)"),
                got: vec![vertices.len()],
            });
        }
        if faces.is_empty() {
            return Err(ShapeError::Invalid("mesh has no faces".into()));
        }
        if let Some(f) = faces.iter().find(|f| f.iter().any(|&v| v >= num_vertices)) {
            return Err(ShapeError::Invalid(format!(
                "face {f:?} references a vertex outside 0..{num_vertices}"
            )));
        }
        check_finite(&vertices)?;
        Ok(Self {
            frames,
            num_vertices,
            vertices,
            faces,
        })
    }

    pub fn from_shapes(
        vertex_shape: &[usize],
        vertices: Vec<f64>,
        face_shape: &[usize],
        face_indices: Vec<usize>,
    ) -> Result<Self, ShapeError> {
        let (t, v) = match vertex_shape {
            [t, v, 3] => (*t, *v),
            _ => {
                return Err(ShapeError::Shape {
                    expected: "(T, V, 3)".into(),
                    got: vertex_shape.to_vec(),
                })
            }
        };
        if !matches!(face_shape, [_, 3]) {
            return Err(ShapeError::Shape {
                expected: "(F, 3)".into(),
                got: face_shape.to_vec(),
            });
        }
        let faces = face_indices.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Self::new(vertices, t, v, faces)
    }

    pub fn num_frames(&self) -> usize {
        self.frames
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Vertex positions of frame `t`.
    pub fn frame(&self, t: usize) -> Vec<Vector3<f64>> {
        let start = t * self.num_vertices * 3;
        self.vertices[start..start + self.num_vertices * 3]
            .chunks_exact(3)
            .map(|c| Vector3::new(c[0], c[1], c[2]))
            .collect()
    }

    /// Copy of the mesh holding only frame `t`.
    pub fn single_frame(&self, t: usize) -> Self {
        let start = t * self.num_vertices * 3;
        Self {
            frames: 1,
            num_vertices: self.num_vertices,
            vertices: self.vertices[start..start + self.num_vertices * 3].to_vec(),
            faces: self.faces.clone(),
        }
    }
}

/// Precomputed pose-manifold distances, one per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseDistanceSeries {
    distances: Vec<f64>,
}

impl PoseDistanceSeries {
    pub fn new(distances: Vec<f64>) -> Result<Self, ShapeError> {
        check_finite(&distances)?;
        if let Some(i) = distances.iter().position(|d| *d < 0.0) {
            return Err(ShapeError::Invalid(format!("distance {i} is negative")));
        }
        Ok(Self { distances })
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }
}

/// Text, motion and atomic-action vectors sharing one latent space.
///
/// Atomic pairs are keyed by clip: each generated clip carries its own list of
/// (ground-truth action, recovered action) vectors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingSet {
    pub text: std::collections::BTreeMap<String, Vec<f64>>,
    pub motion: std::collections::BTreeMap<String, Vec<f64>>,
    pub atomic_pairs: std::collections::BTreeMap<String, Vec<(Vec<f64>, Vec<f64>)>>,
}

impl EmbeddingSet {
    /// Shared vector dimension, or `None` for an empty set.
    pub fn dim(&self) -> Option<usize> {
        self.text
            .values()
            .chain(self.motion.values())
            .map(Vec::len)
            .chain(self.atomic_pairs.values().flatten().map(|(a, _)| a.len()))
            .next()
    }

    pub fn validate(&self) -> Result<(), ShapeError> {
        let Some(dim) = self.dim() else {
            return Ok(());
        };
        let vectors = self
            .text
            .values()
            .chain(self.motion.values())
            .chain(self.atomic_pairs.values().flatten().flat_map(|(a, b)| [a, b]));
        for v in vectors {
            if v.len() != dim {
                return Err(ShapeError::Invalid(format!(
                    "embedding of length {} in a set of dimension {dim}",
                    v.len()
                )));
            }
            check_finite(v)?;
        }
        Ok(())
    }
}
