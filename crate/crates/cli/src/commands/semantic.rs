use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use t2m_core::corpus::{load_embeddings, ClipRecord};
use t2m_core::motion::EmbeddingSet;
use t2m_core::report::format_sig;
use t2m_core::scoring::names;
use t2m_core::semantic::{
    asr, build_pools, diversity, flatten_joints, matching_score, multimodality, Resampling, RetrievalItem,
};
use t2m_core::stats::{bootstrap, derive_seed, StatSummary};

use super::Context;
use crate::config::RunConfig;
use crate::error::{CliError, Outcome};
use crate::output::{csv_string, ensure_dir, envelope, write_json, write_text, ClipMetrics, ErrorRow};

pub const MULTIMODALITY: &str = "multimodality";
pub const DIVERSITY: &str = "diversity";

#[derive(Debug, Clone, Serialize)]
struct BaselineResult {
    summaries: BTreeMap<String, StatSummary>,
    notes: Vec<String>,
}

struct Evaluated {
    clips: Vec<ClipMetrics>,
    errors: Vec<ErrorRow>,
    result: BaselineResult,
}

fn resampling(cfg: &RunConfig, metric: &str, baseline: &str) -> Resampling {
    Resampling {
        seed: derive_seed(cfg.seed, &format!("{metric}/{baseline}")),
        replicates: cfg.replicates,
    }
}

fn evaluate_baseline(cfg: &RunConfig, baseline: &str, records: &[&ClipRecord], emb: Option<&EmbeddingSet>) -> Evaluated {
    let mut errors = Vec::new();
    let mut notes = Vec::new();
    let mut fail = |clip: &str, msg: String| {
        errors.push(ErrorRow {
            clip_id: Some(clip.to_string()),
            message: msg,
        })
    };
    let mut metrics: BTreeMap<&str, BTreeMap<String, f64>> = records.iter().map(|r| (r.clip_id.as_str(), BTreeMap::new())).collect();

    // motion vectors: embedding if available, flattened joints otherwise
    let mut vectors: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in records {
        match (emb.and_then(|e| e.motion.get(&r.clip_id)), &r.motion) {
            (Some(v), _) => {
                vectors.insert(&r.clip_id, v.clone());
            }
            (None, Some(m)) if emb.is_none() || emb.is_some_and(|e| e.motion.is_empty()) => {
                vectors.insert(&r.clip_id, flatten_joints(m, cfg.semantic.motion_frames));
            }
            _ => fail(&r.clip_id, "no motion embedding".into()),
        }
    }

    if let Some(e) = emb.filter(|e| !e.motion.is_empty() && !e.text.is_empty()) {
        let items: Vec<RetrievalItem> = records
            .iter()
            .filter(|r| e.motion.contains_key(&r.clip_id) && e.text.contains_key(&r.prompt_id))
            .map(|r| RetrievalItem {
                clip_id: &r.clip_id,
                prompt_id: &r.prompt_id,
                motion: &e.motion[&r.clip_id],
            })
            .collect();
        for r in records {
            if e.motion.contains_key(&r.clip_id) && !e.text.contains_key(&r.prompt_id) {
                fail(&r.clip_id, format!("no text embedding for prompt {}", r.prompt_id));
            }
        }
        for item in &items {
            match matching_score(&e.text[item.prompt_id], item.motion) {
                Ok(v) => {
                    metrics.get_mut(item.clip_id).unwrap().insert(names::MATCHING_SCORE.into(), v);
                }
                Err(err) => fail(item.clip_id, err.to_string()),
            }
        }
        match build_pools(&items, &e.text, cfg.semantic.pool_size, derive_seed(cfg.seed, &format!("pools/{baseline}"))) {
            Ok(pools) => {
                for (item, pool) in items.iter().zip(&pools) {
                    match pool.ground_truth_rank() {
                        Ok(rank) => {
                            let m = metrics.get_mut(item.clip_id).unwrap();
                            for (k, name) in [names::R_PRECISION_1, names::R_PRECISION_2, names::R_PRECISION_3].iter().enumerate() {
                                m.insert(name.to_string(), (rank <= k) as u8 as f64);
                            }
                        }
                        Err(err) => fail(item.clip_id, err.to_string()),
                    }
                }
                if pools.first().is_some_and(|p| p.candidates.len() < cfg.semantic.pool_size) {
                    notes.push(format!(
                        "retrieval pools hold {} candidates, fewer than {}",
                        pools[0].candidates.len(),
                        cfg.semantic.pool_size
                    ));
                }
            }
            Err(err) => notes.push(format!("retrieval skipped: {err}")),
        }
    }

    if let Some(e) = emb {
        for r in records {
            if let Some(pairs) = e.atomic_pairs.get(&r.clip_id) {
                match asr(pairs, cfg.semantic.asr_threshold) {
                    Ok(v) => {
                        metrics.get_mut(r.clip_id.as_str()).unwrap().insert(names::ASR.into(), v);
                    }
                    Err(err) => fail(&r.clip_id, format!("asr: {err}")),
                }
            }
        }
    }

    let mut summaries = BTreeMap::new();
    for name in [names::MATCHING_SCORE, names::R_PRECISION_1, names::R_PRECISION_2, names::R_PRECISION_3, names::ASR] {
        let vals: Vec<f64> = metrics.values().filter_map(|m| m.get(name).copied()).collect();
        if vals.is_empty() {
            continue;
        }
        let rs = resampling(cfg, name, baseline);
        match bootstrap(&vals, rs.replicates, rs.seed) {
            Ok(s) => {
                summaries.insert(name.to_string(), s);
            }
            Err(err) => notes.push(format!("{name}: {err}")),
        }
    }

    let mut per_prompt: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    for r in records {
        if let Some(v) = vectors.get(r.clip_id.as_str()) {
            per_prompt.entry(r.prompt_id.clone()).or_default().push(v.clone());
        }
    }
    let singles = per_prompt.values().filter(|v| v.len() < 2).count();
    per_prompt.retain(|_, v| v.len() >= 2);
    if singles > 0 {
        notes.push(format!("{singles} prompts with a single output excluded from multimodality"));
    }
    if !per_prompt.is_empty() {
        match multimodality(&per_prompt, cfg.semantic.multimodality_pairs, resampling(cfg, MULTIMODALITY, baseline)) {
            Ok(s) => {
                summaries.insert(MULTIMODALITY.into(), s);
            }
            Err(err) => notes.push(format!("{MULTIMODALITY}: {err}")),
        }
    }
    let all: Vec<Vec<f64>> = vectors.values().cloned().collect();
    if !all.is_empty() {
        match diversity(&all, cfg.semantic.diversity_pairs, resampling(cfg, DIVERSITY, baseline)) {
            Ok(s) => {
                summaries.insert(DIVERSITY.into(), s);
            }
            Err(err) => notes.push(format!("{DIVERSITY}: {err}")),
        }
    }

    let clips = records
        .iter()
        .map(|r| ClipMetrics {
            clip_id: r.clip_id.clone(),
            prompt_id: r.prompt_id.clone(),
            baseline_id: r.baseline_id.clone(),
            metrics: metrics.remove(r.clip_id.as_str()).unwrap_or_default(),
        })
        .collect();
    Evaluated {
        clips,
        errors,
        result: BaselineResult { summaries, notes },
    }
}

pub fn eval_semantic(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = &ctx.config;
    let (corpus, mut errors) = ctx.corpus()?;
    let emb = match &cfg.embeddings {
        Some(p) => {
            crate::config::require_file(p)?;
            Some(load_embeddings(p).map_err(|e| CliError::Data(e.to_string()))?)
        }
        None => None,
    };
    let mut groups: BTreeMap<&str, Vec<&ClipRecord>> = BTreeMap::new();
    for r in corpus.iter() {
        groups.entry(r.baseline_id.as_str()).or_default().push(r);
    }
    let groups: Vec<(&str, Vec<&ClipRecord>)> = groups.into_iter().collect();
    let evaluated: Vec<Evaluated> = ctx.pool()?.install(|| {
        groups
            .par_iter()
            .map(|(b, recs)| evaluate_baseline(cfg, b, recs, emb.as_ref()))
            .collect()
    });

    let mut clips = Vec::new();
    let mut baselines = BTreeMap::new();
    let mut summary_rows = Vec::new();
    for ((b, _), ev) in groups.iter().zip(evaluated) {
        for (metric, s) in &ev.result.summaries {
            summary_rows.push(vec![
                b.to_string(),
                metric.clone(),
                format_sig(s.mean),
                format_sig(s.half_width),
                s.replicates.to_string(),
            ]);
        }
        clips.extend(ev.clips);
        errors.extend(ev.errors);
        baselines.insert(b.to_string(), ev.result);
    }
    clips.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));
    errors.sort_by(|a, b| (&a.clip_id, &a.message).cmp(&(&b.clip_id, &b.message)));

    ensure_dir(&cfg.output_dir)?;
    write_text(
        &cfg.output_dir.join("semantic_summary.csv"),
        &csv_string(&["baseline_id", "metric", "mean", "half_width", "replicates"], &summary_rows)?,
    )?;
    let clip_names = [names::MATCHING_SCORE, names::R_PRECISION_1, names::R_PRECISION_2, names::R_PRECISION_3, names::ASR];
    let mut header = vec!["clip_id", "prompt_id", "baseline_id"];
    header.extend(clip_names);
    let clip_rows: Vec<Vec<String>> = clips
        .iter()
        .map(|c| {
            let mut r = vec![c.clip_id.clone(), c.prompt_id.clone(), c.baseline_id.clone()];
            r.extend(clip_names.iter().map(|n| c.metrics.get(*n).map(|v| format_sig(*v)).unwrap_or_default()));
            r
        })
        .collect();
    write_text(&cfg.output_dir.join("semantic_report.csv"), &csv_string(&header, &clip_rows)?)?;
    let report = envelope(
        "eval-semantic",
        cfg,
        json!({"clips": clips, "baselines": baselines, "errors": errors}),
    )?;
    write_json(&cfg.output_dir.join("semantic_report.json"), &report)?;
    Ok(Outcome {
        rows: clips.len(),
        failures: errors.iter().map(|e| e.message.clone()).collect(),
        network_failures: 0,
    })
}
