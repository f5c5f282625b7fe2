use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::json;
use t2m_core::report::format_sig;
use t2m_judge::schema::SCORE_FIELDS;
use t2m_judge::{JudgeClient, JudgeError, JudgeRequest, JudgeResult, API_KEY_ENV};

use super::Context;
use crate::error::{CliError, Outcome};
use crate::output::{csv_string, ensure_dir, envelope, write_json, write_text, ClipMetrics, ErrorRow};

pub const OVERALL: &str = "overall_score";

fn media_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("webp") => "image/webp",
        Some("gif") => "image/gif",
        _ => "application/octet-stream",
    }
}

pub fn judge(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = &ctx.config;
    let (corpus, mut errors) = ctx.corpus()?;
    let mut jcfg = cfg.judge.clone();
    jcfg.strict |= cfg.strict;
    if jcfg.api_key.is_none() {
        jcfg.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
    }

    let mut requests = Vec::new();
    for rec in corpus.iter() {
        let (Some(strip), Some(text)) = (&rec.strip, &rec.prompt_text) else {
            errors.push(ErrorRow {
                clip_id: Some(rec.clip_id.clone()),
                message: "judging needs a strip image and prompt text".into(),
            });
            continue;
        };
        match fs::read(strip) {
            Ok(image) => requests.push(JudgeRequest {
                clip_id: rec.clip_id.clone(),
                video_name: rec.clip_id.clone(),
                prompt_id: rec.prompt_id.clone(),
                prompt_text: text.clone(),
                image,
                media_type: media_type(strip).into(),
            }),
            Err(e) => errors.push(ErrorRow {
                clip_id: Some(rec.clip_id.clone()),
                message: format!("{}: {e}", strip.display()),
            }),
        }
    }

    let client = JudgeClient::new(jcfg);
    let results = client.submit_all(&requests);

    let mut accepted: Vec<(String, JudgeResult)> = Vec::new();
    let mut quarantined = Vec::new();
    let mut network = 0;
    for (clip_id, r) in results {
        match r {
            Ok(res) => accepted.push((clip_id, res)),
            Err(JudgeError::BandMismatch { expected, result }) => {
                quarantined.push(json!({"clip_id": clip_id, "expected_verdict": expected, "result": result}));
                errors.push(ErrorRow {
                    clip_id: Some(clip_id),
                    message: "verdict inconsistent with overall score; quarantined".into(),
                });
            }
            Err(e) => {
                network += e.is_network() as usize;
                errors.push(ErrorRow {
                    clip_id: Some(clip_id),
                    message: e.to_string(),
                });
            }
        }
    }

    let mut clips = Vec::new();
    let mut groups: BTreeMap<(String, String), Vec<i64>> = BTreeMap::new();
    for (clip_id, res) in &accepted {
        let rec = corpus.get(clip_id).expect("judged clips come from the corpus");
        let mut metrics: BTreeMap<String, f64> = SCORE_FIELDS
            .iter()
            .zip(res.scores.to_array())
            .map(|((n, _), v)| (n.to_string(), v as f64))
            .collect();
        metrics.insert(OVERALL.into(), res.overall_score as f64);
        clips.push(ClipMetrics {
            clip_id: clip_id.clone(),
            prompt_id: rec.prompt_id.clone(),
            baseline_id: rec.baseline_id.clone(),
            metrics,
        });
        let prompt_type = rec.prompt_type.clone().unwrap_or_default();
        groups.entry((rec.baseline_id.clone(), prompt_type)).or_default().push(res.overall_score);
    }
    let summary_rows: Vec<Vec<String>> = groups
        .iter()
        .map(|((b, t), v)| {
            let mean = v.iter().sum::<i64>() as f64 / v.len() as f64;
            vec![b.clone(), t.clone(), v.len().to_string(), format_sig(mean)]
        })
        .collect();

    ensure_dir(&cfg.output_dir)?;
    write_text(
        &cfg.output_dir.join("judge_summary.csv"),
        &csv_string(&["baseline_id", "prompt_type", "clips", "mean_overall_score"], &summary_rows)?,
    )?;
    let results: Vec<_> = accepted.iter().map(|(c, r)| json!({"clip_id": c, "result": r})).collect();
    errors.sort_by(|a, b| (&a.clip_id, &a.message).cmp(&(&b.clip_id, &b.message)));
    let report = envelope(
        "judge",
        cfg,
        json!({"clips": clips, "results": results, "errors": errors}),
    )?;
    write_json(&cfg.output_dir.join("judge_results.json"), &report)?;
    write_json(
        &cfg.output_dir.join("judge_quarantine.json"),
        &envelope("judge", cfg, json!({"quarantined": quarantined}))?,
    )?;
    Ok(Outcome {
        rows: clips.len(),
        failures: errors.iter().map(|e| e.message.clone()).collect(),
        network_failures: network,
    })
}
