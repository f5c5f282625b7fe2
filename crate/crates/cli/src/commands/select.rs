use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::json;
use t2m_core::report::{format_opt, format_sig};
use t2m_core::scoring::{
    radar_table, select_one, AttributeScorer, Candidate, Direction, MetricMatrix, Normalization, WeightedScorer,
};

use super::Context;
use crate::config::SelectBy;
use crate::error::{CliError, Outcome};
use crate::output::{csv_string, ensure_dir, envelope, read_clip_metrics, write_json, write_text, ClipMetrics};

#[derive(Debug, Clone, Serialize)]
struct SelectedRow {
    prompt_id: String,
    clip_id: String,
    baseline_id: String,
    physical_score: Option<f64>,
    semantic_score: Option<f64>,
    excluded: Vec<(String, String)>,
}

/// Merges per-clip metric maps from several reports, keyed by clip id.
pub fn merge_reports(reports: &[Vec<ClipMetrics>]) -> Result<BTreeMap<String, ClipMetrics>, CliError> {
    let mut merged: BTreeMap<String, ClipMetrics> = BTreeMap::new();
    for clips in reports {
        for c in clips {
            match merged.get_mut(&c.clip_id) {
                None => {
                    merged.insert(c.clip_id.clone(), c.clone());
                }
                Some(m) => {
                    if m.prompt_id != c.prompt_id || m.baseline_id != c.baseline_id {
                        return Err(CliError::Data(format!("clip {} has conflicting prompt or baseline", c.clip_id)));
                    }
                    m.metrics.extend(c.metrics.iter().map(|(k, v)| (k.clone(), *v)));
                }
            }
        }
    }
    Ok(merged)
}

/// One matrix per prompt id.
pub fn matrices(clips: &BTreeMap<String, ClipMetrics>) -> BTreeMap<String, MetricMatrix> {
    let mut out: BTreeMap<String, MetricMatrix> = BTreeMap::new();
    for c in clips.values() {
        out.entry(c.prompt_id.clone()).or_default().candidates.push(Candidate {
            clip_id: c.clip_id.clone(),
            baseline_id: c.baseline_id.clone(),
            values: c.metrics.clone(),
        });
    }
    out
}

fn scores_by_clip(matrix: &MetricMatrix, scorer: &dyn AttributeScorer) -> BTreeMap<String, f64> {
    match scorer.score(matrix) {
        Ok(all) => matrix
            .candidates
            .iter()
            .zip(all)
            .filter_map(|(c, s)| s.ok().map(|s| (c.clip_id.clone(), s)))
            .collect(),
        Err(_) => BTreeMap::new(),
    }
}

pub fn score_select(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = &ctx.config;
    if cfg.metric_reports.is_empty() {
        return Err(CliError::Config("no metric reports configured".into()));
    }
    let mut reports = Vec::new();
    for p in &cfg.metric_reports {
        crate::config::require_file(p)?;
        reports.push(read_clip_metrics(p)?);
    }
    let merged = merge_reports(&reports)?;
    if merged.is_empty() {
        return Err(CliError::Config("no clips".into()));
    }
    let per_prompt = matrices(&merged);
    let physical = WeightedScorer::physical();
    let semantic = WeightedScorer::semantic();
    let chooser: &dyn AttributeScorer = match cfg.select_by {
        SelectBy::Physical => &physical,
        SelectBy::Semantic => &semantic,
    };

    let mut selected = Vec::new();
    let mut failures = Vec::new();
    for (prompt_id, matrix) in &per_prompt {
        match select_one(prompt_id, matrix, chooser) {
            Ok(sel) => {
                let p = scores_by_clip(matrix, &physical);
                let s = scores_by_clip(matrix, &semantic);
                selected.push(SelectedRow {
                    prompt_id: prompt_id.clone(),
                    physical_score: p.get(&sel.clip_id).copied(),
                    semantic_score: s.get(&sel.clip_id).copied(),
                    clip_id: sel.clip_id,
                    baseline_id: sel.baseline_id,
                    excluded: sel.excluded,
                });
            }
            Err(e) => failures.push(e.to_string()),
        }
    }

    // radar data: baseline means of every weighted metric
    let mut directions = BTreeMap::new();
    for spec in physical.weights.specs().iter().chain(semantic.weights.specs()) {
        let dir = match spec.normalization {
            Normalization::PercentileClip(d) => d,
            Normalization::ScaleMax(_) => Direction::HigherBetter,
        };
        directions.insert(spec.name.clone(), dir);
    }
    let mut sums: BTreeMap<String, BTreeMap<String, (f64, usize)>> = BTreeMap::new();
    for c in merged.values() {
        for (k, v) in &c.metrics {
            if directions.contains_key(k) {
                let e = sums.entry(c.baseline_id.clone()).or_default().entry(k.clone()).or_default();
                e.0 += v;
                e.1 += 1;
            }
        }
    }
    let means: BTreeMap<String, BTreeMap<String, f64>> = sums
        .into_iter()
        .map(|(b, m)| (b, m.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()))
        .collect();
    let radar = radar_table(&means, &directions).map_err(|e| CliError::Data(e.to_string()))?;

    ensure_dir(&cfg.output_dir)?;
    let rows: Vec<Vec<String>> = selected
        .iter()
        .map(|r| {
            vec![
                r.prompt_id.clone(),
                r.clip_id.clone(),
                r.baseline_id.clone(),
                format_opt(r.physical_score),
                format_opt(r.semantic_score),
            ]
        })
        .collect();
    write_text(
        &cfg.output_dir.join("selection.csv"),
        &csv_string(&["prompt_id", "clip_id", "baseline_id", "physical_score", "semantic_score"], &rows)?,
    )?;
    let radar_rows: Vec<Vec<String>> = radar
        .iter()
        .map(|r| vec![r.metric.clone(), r.baseline_id.clone(), format_sig(r.value)])
        .collect();
    write_text(&cfg.output_dir.join("radar.csv"), &csv_string(&["metric", "baseline_id", "value"], &radar_rows)?)?;
    let report = envelope(
        "score-select",
        cfg,
        json!({"selection": selected, "radar": radar, "errors": failures}),
    )?;
    write_json(&cfg.output_dir.join("selection.json"), &report)?;
    Ok(Outcome {
        rows: selected.len(),
        failures,
        network_failures: 0,
    })
}
