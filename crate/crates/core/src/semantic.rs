//! Embedding-space alignment and generalizability metrics.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::motion::MotionClip;
use crate::stats::{bootstrap, rng_for, StatSummary, StatsError};

pub const DEFAULT_POOL_SIZE: usize = 32;
pub const DEFAULT_ASR_THRESHOLD: f64 = 0.6;
/// Norm under which a vector has no direction.
pub const ZERO_NORM: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemanticError {
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("k = {k} is outside 1..={pool_size}")]
    BadK { k: usize, pool_size: usize },
    #[error("zero-length vector in pair {0}")]
    ZeroVector(usize),
    #[error("threshold {0} must lie in (0, 1)")]
    BadThreshold(f64),
    #[error("no pairs to evaluate")]
    NoPairs,
    #[error("prompt {0} has fewer than two outputs")]
    InsufficientOutputs(String),
    #[error("no motion vectors")]
    EmptyCorpus,
    #[error("missing embedding for {0}")]
    MissingEmbedding(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn same_dim(a: &[f64], b: &[f64]) -> Result<(), SemanticError> {
    match a.len() == b.len() {
        true => Ok(()),
        false => Err(SemanticError::DimensionMismatch(a.len(), b.len())),
    }
}

/// Euclidean distance between a text and a motion embedding.
pub fn matching_score(text: &[f64], motion: &[f64]) -> Result<f64, SemanticError> {
    same_dim(text, motion)?;
    Ok(euclidean(text, motion))
}

/// One retrieval trial: a text anchor against motion candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalPool {
    pub anchor: Vec<f64>,
    pub candidates: Vec<(String, Vec<f64>)>,
    pub ground_truth: usize,
}

impl RetrievalPool {
    /// Zero-based rank of the ground truth under a stable ascending sort by distance.
    pub fn ground_truth_rank(&self) -> Result<usize, SemanticError> {
        let dists = self
            .candidates
            .iter()
            .map(|(_, v)| matching_score(&self.anchor, v))
            .collect::<Result<Vec<_>, _>>()?;
        let gt = dists[self.ground_truth];
        Ok(dists
            .iter()
            .enumerate()
            .filter(|(i, d)| **d < gt || (**d == gt && *i < self.ground_truth))
            .count())
    }

    pub fn hit_at(&self, k: usize) -> Result<bool, SemanticError> {
        if k == 0 || k > self.candidates.len() {
            return Err(SemanticError::BadK {
                k,
                pool_size: self.candidates.len(),
            });
        }
        Ok(self.ground_truth_rank()? < k)
    }
}

/// Fraction of pools whose ground truth ranks in the top `k`.
pub fn r_precision(pools: &[RetrievalPool], k: usize) -> Result<f64, SemanticError> {
    if pools.is_empty() {
        return Err(SemanticError::NoPairs);
    }
    let hits = pools
        .iter()
        .map(|p| p.hit_at(k))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|h| *h)
        .count();
    Ok(hits as f64 / pools.len() as f64)
}

/// A generated clip as seen by retrieval: its id, prompt and motion embedding.
#[derive(Debug, Clone)]
pub struct RetrievalItem<'a> {
    pub clip_id: &'a str,
    pub prompt_id: &'a str,
    pub motion: &'a [f64],
}

/// One pool per item: the item's own motion plus up to `pool_size − 1`
/// distractors from items with a different prompt, drawn without replacement.
/// The ground truth sits at a seeded random position.
pub fn build_pools(
    items: &[RetrievalItem<'_>],
    text: &BTreeMap<String, Vec<f64>>,
    pool_size: usize,
    seed: u64,
) -> Result<Vec<RetrievalPool>, SemanticError> {
    items
        .iter()
        .map(|item| {
            let anchor = text
                .get(item.prompt_id)
                .ok_or_else(|| SemanticError::MissingEmbedding(item.prompt_id.to_string()))?
                .clone();
            let others: Vec<&RetrievalItem> = items.iter().filter(|o| o.prompt_id != item.prompt_id).collect();
            let mut rng = rng_for(seed, &format!("pool/{}", item.clip_id));
            let take = others.len().min(pool_size.saturating_sub(1));
            let mut picked: Vec<usize> = index::sample(&mut rng, others.len(), take).into_vec();
            picked.sort_unstable();
            let mut candidates: Vec<(String, Vec<f64>)> = picked
                .into_iter()
                .map(|i| (others[i].clip_id.to_string(), others[i].motion.to_vec()))
                .collect();
            let ground_truth = rng.random_range(0..=candidates.len());
            candidates.insert(ground_truth, (item.clip_id.to_string(), item.motion.to_vec()));
            Ok(RetrievalPool {
                anchor,
                candidates,
                ground_truth,
            })
        })
        .collect()
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Option<f64> {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na < ZERO_NORM || nb < ZERO_NORM {
        return None;
    }
    Some(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb))
}

/// Fraction of (ground truth, output) atomic-action pairs whose cosine
/// similarity exceeds `threshold`.
pub fn asr(pairs: &[(Vec<f64>, Vec<f64>)], threshold: f64) -> Result<f64, SemanticError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(SemanticError::BadThreshold(threshold));
    }
    if pairs.is_empty() {
        return Err(SemanticError::NoPairs);
    }
    let mut hits = 0;
    for (i, (gt, out)) in pairs.iter().enumerate() {
        same_dim(gt, out)?;
        let cos = cosine_similarity(gt, out).ok_or(SemanticError::ZeroVector(i))?;
        hits += (cos > threshold) as usize;
    }
    Ok(hits as f64 / pairs.len() as f64)
}

/// Seed and replicate count for a randomized statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resampling {
    pub seed: u64,
    pub replicates: usize,
}

/// Mean distance between `pairs` random distinct outputs per prompt, averaged
/// over prompts. The interval is bootstrapped over per-prompt means.
pub fn multimodality(
    per_prompt: &BTreeMap<String, Vec<Vec<f64>>>,
    pairs: usize,
    resampling: Resampling,
) -> Result<StatSummary, SemanticError> {
    if per_prompt.is_empty() || pairs == 0 {
        return Err(SemanticError::EmptyCorpus);
    }
    let mut prompt_means = Vec::with_capacity(per_prompt.len());
    for (prompt_id, outputs) in per_prompt {
        if outputs.len() < 2 {
            return Err(SemanticError::InsufficientOutputs(prompt_id.clone()));
        }
        let mut rng = rng_for(resampling.seed, &format!("mm/{prompt_id}"));
        let mut total = 0.0;
        for _ in 0..pairs {
            let i = rng.random_range(0..outputs.len());
            let mut j = rng.random_range(0..outputs.len() - 1);
            if j >= i {
                j += 1;
            }
            same_dim(&outputs[i], &outputs[j])?;
            total += euclidean(&outputs[i], &outputs[j]);
        }
        prompt_means.push(total / pairs as f64);
    }
    let mut s = bootstrap(&prompt_means, resampling.replicates, resampling.seed)?;
    s.seed = resampling.seed;
    Ok(s)
}

/// Mean distance between two groups of `m` randomly chosen outputs. With at
/// least `2m` outputs the groups are disjoint draws without replacement;
/// otherwise each group is drawn independently with replacement. The interval
/// is bootstrapped over the `m` pair distances.
pub fn diversity(outputs: &[Vec<f64>], m: usize, resampling: Resampling) -> Result<StatSummary, SemanticError> {
    if outputs.is_empty() || m == 0 {
        return Err(SemanticError::EmptyCorpus);
    }
    let mut rng = rng_for(resampling.seed, "diversity");
    let (first, second): (Vec<usize>, Vec<usize>) = if outputs.len() >= 2 * m {
        let idx = index::sample(&mut rng, outputs.len(), 2 * m).into_vec();
        (idx[..m].to_vec(), idx[m..].to_vec())
    } else {
        let mut draw = || (0..m).map(|_| rng.random_range(0..outputs.len())).collect::<Vec<_>>();
        let a = draw();
        let b = draw();
        (a, b)
    };
    let distances = first
        .iter()
        .zip(&second)
        .map(|(&i, &j)| {
            same_dim(&outputs[i], &outputs[j])?;
            Ok(euclidean(&outputs[i], &outputs[j]))
        })
        .collect::<Result<Vec<f64>, SemanticError>>()?;
    Ok(bootstrap(&distances, resampling.replicates, resampling.seed)?)
}

/// Row-concatenated joint coordinates over exactly `frames` frames; shorter
/// clips repeat their last frame.
pub fn flatten_joints(clip: &MotionClip, frames: usize) -> Vec<f64> {
    let per_frame = clip.num_joints() * 3;
    let mut out = Vec::with_capacity(frames * per_frame);
    for t in 0..frames {
        let src = t.min(clip.num_frames() - 1);
        out.extend_from_slice(&clip.positions()[src * per_frame..(src + 1) * per_frame]);
    }
    out
}
