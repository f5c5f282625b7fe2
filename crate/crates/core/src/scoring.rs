//! Metric normalization, attribute scores and best-per-prompt selection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Added inside the logarithm of the geometric mean.
pub const LOG_EPSILON: f64 = 1e-6;
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;
pub const LLM_SCORE_MAX: f64 = 10.0;
pub const LLM_COMPLETENESS_MAX: f64 = 20.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("degenerate range [{lo}, {hi}]")]
    DegenerateRange { lo: f64, hi: f64 },
    #[error("no values")]
    Empty,
    #[error("metric '{0}' is missing")]
    MissingMetric(String),
    #[error("weights sum to {0}, expected 1")]
    BadWeights(f64),
    #[error("prompt {0} has no scoreable candidate")]
    NoCandidates(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    LowerBetter,
    HigherBetter,
}

fn clip01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Min-max normalization clipped to `[0, 1]`; `reversed` maps `hi` to 0.
pub fn minmax_norm(v: f64, lo: f64, hi: f64, reversed: bool) -> Result<f64, ScoringError> {
    if !(hi > lo) {
        return Err(ScoringError::DegenerateRange { lo, hi });
    }
    let x = if reversed { hi - v } else { v - lo };
    Ok(clip01(x / (hi - lo)))
}

/// `(floor(min), ceil(max))`, widened to unit length when both coincide.
pub fn integer_bounded_range(values: &[f64]) -> Result<(f64, f64), ScoringError> {
    if values.is_empty() {
        return Err(ScoringError::Empty);
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min).floor();
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max).ceil();
    Ok(if lo == hi { (lo, lo + 1.0) } else { (lo, hi) })
}

/// Linear-interpolation percentile: index `(n−1)·q/100` into the sorted values.
pub fn percentile(values: &[f64], q: f64) -> Result<f64, ScoringError> {
    if values.is_empty() {
        return Err(ScoringError::Empty);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = (sorted.len() - 1) as f64 * q.clamp(0.0, 100.0) / 100.0;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

/// Clip normalization between the 5th and 95th percentiles.
pub fn percentile_clip_norm(x: f64, p5: f64, p95: f64, direction: Direction) -> Result<f64, ScoringError> {
    if !(p95 > p5) {
        return Err(ScoringError::DegenerateRange { lo: p5, hi: p95 });
    }
    let num = match direction {
        Direction::LowerBetter => p95 - x,
        Direction::HigherBetter => x - p5,
    };
    Ok(clip01(num / (p95 - p5)))
}

/// How a raw metric becomes a score in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Clip between the population's 5th and 95th percentiles.
    PercentileClip(Direction),
    /// Divide by a fixed maximum, then clip.
    ScaleMax(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub name: String,
    pub weight: f64,
    pub normalization: Normalization,
}

/// Metric weights, validated to sum to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightTable {
    specs: Vec<MetricSpec>,
}

pub mod names {
    pub const JITTER_DEGREE: &str = "jitter_degree";
    pub const GROUND_PENETRATION: &str = "ground_penetration";
    pub const FOOT_FLOATING: &str = "foot_floating";
    pub const FOOT_SLIDING: &str = "foot_sliding";
    pub const DYNAMIC_DEGREE: &str = "dynamic_degree";
    pub const POSE_QUALITY: &str = "pose_quality";
    pub const BODY_PENETRATION: &str = "body_penetration";
    pub const PHYSICAL_PLAUSIBILITY: &str = "physical_plausibility";
    pub const EXTRA_NON_INSTRUCTION_ACTIONS: &str = "extra_non_instruction_actions";
    pub const ACTION_COMPLETENESS: &str = "action_completeness";
    pub const MULTI_STAGE_ORDER: &str = "multi_stage_order_correctness";
    pub const BODY_PART_UNDERSTANDING: &str = "body_part_understanding";
    pub const MATCHING_SCORE: &str = "matching_score";
    pub const R_PRECISION_1: &str = "r_precision_1";
    pub const R_PRECISION_2: &str = "r_precision_2";
    pub const R_PRECISION_3: &str = "r_precision_3";
    pub const ASR: &str = "asr";
}

impl WeightTable {
    pub fn new(specs: Vec<MetricSpec>) -> Result<Self, ScoringError> {
        let sum: f64 = specs.iter().map(|s| s.weight).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE || specs.iter().any(|s| !(s.weight >= 0.0)) {
            return Err(ScoringError::BadWeights(sum));
        }
        Ok(Self { specs })
    }

    pub fn specs(&self) -> &[MetricSpec] {
        &self.specs
    }

    pub fn weight(&self, name: &str) -> Option<f64> {
        self.specs.iter().find(|s| s.name == name).map(|s| s.weight)
    }

    pub fn physical() -> Self {
        use names::*;
        use Direction::*;
        use Normalization::*;
        let table = [
            (GROUND_PENETRATION, 0.15, PercentileClip(LowerBetter)),
            (FOOT_SLIDING, 0.15, PercentileClip(LowerBetter)),
            (BODY_PENETRATION, 0.15, PercentileClip(LowerBetter)),
            (JITTER_DEGREE, 0.15, PercentileClip(LowerBetter)),
            (FOOT_FLOATING, 0.10, PercentileClip(LowerBetter)),
            (POSE_QUALITY, 0.10, PercentileClip(HigherBetter)),
            (DYNAMIC_DEGREE, 0.10, PercentileClip(HigherBetter)),
            (PHYSICAL_PLAUSIBILITY, 0.10, ScaleMax(LLM_SCORE_MAX)),
        ];
        Self::from_table(&table)
    }

    pub fn semantic() -> Self {
        use names::*;
        use Direction::*;
        use Normalization::*;
        let table = [
            (EXTRA_NON_INSTRUCTION_ACTIONS, 0.1, ScaleMax(LLM_SCORE_MAX)),
            (ACTION_COMPLETENESS, 0.1, ScaleMax(LLM_COMPLETENESS_MAX)),
            (MULTI_STAGE_ORDER, 0.1, ScaleMax(LLM_SCORE_MAX)),
            (BODY_PART_UNDERSTANDING, 0.1, ScaleMax(LLM_SCORE_MAX)),
            (MATCHING_SCORE, 0.1, PercentileClip(LowerBetter)),
            (R_PRECISION_1, 0.1, PercentileClip(HigherBetter)),
            (R_PRECISION_2, 0.1, PercentileClip(HigherBetter)),
            (R_PRECISION_3, 0.1, PercentileClip(HigherBetter)),
            (ASR, 0.2, PercentileClip(HigherBetter)),
        ];
        Self::from_table(&table)
    }

    fn from_table(table: &[(&str, f64, Normalization)]) -> Self {
        Self::new(
            table
                .iter()
                .map(|(name, weight, normalization)| MetricSpec {
                    name: name.to_string(),
                    weight: *weight,
                    normalization: *normalization,
                })
                .collect(),
        )
        .expect("built-in weights sum to one")
    }
}

fn weighted<'a>(g: &'a BTreeMap<String, f64>, w: &'a WeightTable) -> impl Iterator<Item = Result<(f64, f64), ScoringError>> + 'a {
    w.specs.iter().map(move |s| {
        g.get(&s.name)
            .map(|v| (s.weight, *v))
            .ok_or_else(|| ScoringError::MissingMetric(s.name.clone()))
    })
}

/// Weighted geometric mean `exp(Σ w·ln(g + ε))` of normalized values.
pub fn physical_score(g: &BTreeMap<String, f64>, w: &WeightTable) -> Result<f64, ScoringError> {
    let mut log_sum = 0.0;
    for pair in weighted(g, w) {
        let (weight, value) = pair?;
        log_sum += weight * (value + LOG_EPSILON).ln();
    }
    Ok(log_sum.exp())
}

/// Weighted arithmetic mean of normalized values.
pub fn semantic_score(g: &BTreeMap<String, f64>, w: &WeightTable) -> Result<f64, ScoringError> {
    let mut sum = 0.0;
    for pair in weighted(g, w) {
        let (weight, value) = pair?;
        sum += weight * value;
    }
    Ok(sum)
}

/// One candidate output for a prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub clip_id: String,
    pub baseline_id: String,
    pub values: BTreeMap<String, f64>,
}

/// Candidates for one prompt. The percentile population of each metric is the
/// set of candidates that report it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricMatrix {
    pub candidates: Vec<Candidate>,
}

impl MetricMatrix {
    fn population(&self, metric: &str) -> Vec<f64> {
        self.candidates.iter().filter_map(|c| c.values.get(metric).copied()).collect()
    }

    /// Normalized values per candidate, or the first missing metric.
    pub fn normalize(&self, w: &WeightTable) -> Result<Vec<Result<BTreeMap<String, f64>, ScoringError>>, ScoringError> {
        let mut bounds = BTreeMap::new();
        for spec in w.specs() {
            if let Normalization::PercentileClip(_) = spec.normalization {
                let pop = self.population(&spec.name);
                if !pop.is_empty() {
                    bounds.insert(spec.name.as_str(), (percentile(&pop, 5.0)?, percentile(&pop, 95.0)?));
                }
            }
        }
        Ok(self
            .candidates
            .iter()
            .map(|c| {
                w.specs()
                    .iter()
                    .map(|spec| {
                        let x = *c.values.get(&spec.name).ok_or_else(|| ScoringError::MissingMetric(spec.name.clone()))?;
                        let g = match spec.normalization {
                            Normalization::ScaleMax(max) => clip01(x / max),
                            Normalization::PercentileClip(dir) => {
                                let (p5, p95) = bounds[spec.name.as_str()];
                                // every candidate ties: none is worse than another
                                if p95 > p5 {
                                    percentile_clip_norm(x, p5, p95, dir)?
                                } else {
                                    1.0
                                }
                            }
                        };
                        Ok((spec.name.clone(), g))
                    })
                    .collect()
            })
            .collect())
    }
}

/// Turns a candidate matrix into one score per candidate; `Err` excludes a
/// candidate from selection.
pub trait AttributeScorer {
    fn score(&self, matrix: &MetricMatrix) -> Result<Vec<Result<f64, ScoringError>>, ScoringError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    GeometricMean,
    WeightedSum,
}

#[derive(Debug, Clone)]
pub struct WeightedScorer {
    pub weights: WeightTable,
    pub aggregate: Aggregate,
}

impl WeightedScorer {
    pub fn physical() -> Self {
        Self {
            weights: WeightTable::physical(),
            aggregate: Aggregate::GeometricMean,
        }
    }

    pub fn semantic() -> Self {
        Self {
            weights: WeightTable::semantic(),
            aggregate: Aggregate::WeightedSum,
        }
    }
}

impl AttributeScorer for WeightedScorer {
    fn score(&self, matrix: &MetricMatrix) -> Result<Vec<Result<f64, ScoringError>>, ScoringError> {
        Ok(matrix
            .normalize(&self.weights)?
            .into_iter()
            .map(|g| {
                let g = g?;
                match self.aggregate {
                    Aggregate::GeometricMean => physical_score(&g, &self.weights),
                    Aggregate::WeightedSum => semantic_score(&g, &self.weights),
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub clip_id: String,
    pub baseline_id: String,
    pub score: f64,
    /// Candidates left out, with the reason.
    pub excluded: Vec<(String, String)>,
}

/// Highest-scoring candidate of one matrix. Ties go to the smallest
/// baseline id, then the smallest clip id.
pub fn select_one(prompt_id: &str, matrix: &MetricMatrix, scorer: &dyn AttributeScorer) -> Result<Selection, ScoringError> {
    let scores = scorer.score(matrix)?;
    let mut best: Option<(&Candidate, f64)> = None;
    let mut excluded = Vec::new();
    for (cand, score) in matrix.candidates.iter().zip(scores) {
        let score = match score {
            Ok(s) if s.is_finite() => s,
            Ok(s) => {
                excluded.push((cand.clip_id.clone(), format!("non-finite score {s}")));
                continue;
            }
            Err(e) => {
                excluded.push((cand.clip_id.clone(), e.to_string()));
                continue;
            }
        };
        let better = match best {
            None => true,
            Some((b, bs)) => {
                score > bs
                    || (score == bs
                        && (cand.baseline_id.as_str(), cand.clip_id.as_str()) < (b.baseline_id.as_str(), b.clip_id.as_str()))
            }
        };
        if better {
            best = Some((cand, score));
        }
    }
    excluded.sort();
    let (cand, score) = best.ok_or_else(|| ScoringError::NoCandidates(prompt_id.to_string()))?;
    Ok(Selection {
        clip_id: cand.clip_id.clone(),
        baseline_id: cand.baseline_id.clone(),
        score,
        excluded,
    })
}

/// [`select_one`] for every prompt, keyed by prompt id.
pub fn select_best(
    per_prompt: &BTreeMap<String, MetricMatrix>,
    scorer: &dyn AttributeScorer,
) -> Result<BTreeMap<String, Selection>, ScoringError> {
    per_prompt
        .iter()
        .map(|(p, m)| Ok((p.clone(), select_one(p, m, scorer)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadarRow {
    pub metric: String,
    pub baseline_id: String,
    pub value: f64,
}

/// Per-metric min-max normalization of baseline-level values over the
/// integer-bounded range of that metric; lower-better metrics are reversed so
/// that larger always reads as better.
pub fn radar_table(
    per_baseline: &BTreeMap<String, BTreeMap<String, f64>>,
    directions: &BTreeMap<String, Direction>,
) -> Result<Vec<RadarRow>, ScoringError> {
    let mut rows = Vec::new();
    for (metric, dir) in directions {
        let values: Vec<(&String, f64)> = per_baseline
            .iter()
            .filter_map(|(b, m)| m.get(metric).map(|v| (b, *v)))
            .collect();
        if values.is_empty() {
            continue;
        }
        let raw: Vec<f64> = values.iter().map(|(_, v)| *v).collect();
        let (lo, hi) = integer_bounded_range(&raw)?;
        for (baseline, v) in values {
            rows.push(RadarRow {
                metric: metric.clone(),
                baseline_id: baseline.clone(),
                value: minmax_norm(v, lo, hi, *dir == Direction::LowerBetter)?,
            });
        }
    }
    Ok(rows)
}
