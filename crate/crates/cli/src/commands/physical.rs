use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::json;
use t2m_core::physical::{evaluate_clip, PhysicalOptions, PhysicalReport};
use t2m_core::report::format_opt;
use t2m_core::scoring::names;

use super::Context;
use crate::error::{CliError, Outcome};
use crate::output::{csv_string, ensure_dir, envelope, write_json, write_text, ClipMetrics, ErrorRow};

pub const COLUMNS: [&str; 7] = [
    names::JITTER_DEGREE,
    names::GROUND_PENETRATION,
    names::FOOT_FLOATING,
    names::FOOT_SLIDING,
    names::DYNAMIC_DEGREE,
    names::POSE_QUALITY,
    names::BODY_PENETRATION,
];

fn values(r: &PhysicalReport) -> [Option<f64>; 7] {
    [r.jd, r.gp, r.ff, r.fs, r.dd, r.pq, r.bp]
}

pub fn eval_physical(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = &ctx.config;
    let (corpus, mut errors) = ctx.corpus()?;
    let opts = PhysicalOptions {
        contact: cfg.contact,
        strict_ground: cfg.strict_ground,
        max_degenerate_fraction: cfg.max_degenerate_fraction,
    };
    let records: Vec<_> = corpus.iter().collect();
    let evaluated: Vec<(PhysicalReport, Vec<String>)> = ctx.pool()?.install(|| {
        records
            .par_iter()
            .map(|rec| {
                let (report, errs) = evaluate_clip(rec.motion.as_ref(), rec.mesh.as_ref(), rec.pose_distances.as_ref(), &opts);
                (report, errs.into_iter().map(|(m, e)| format!("{m}: {e}")).collect())
            })
            .collect()
    });

    let mut clips = Vec::new();
    let mut rows: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut sums: BTreeMap<&str, BTreeMap<&str, (f64, usize)>> = BTreeMap::new();
    for (rec, (report, errs)) in records.iter().zip(&evaluated) {
        let vals = values(report);
        let metrics: BTreeMap<String, f64> = COLUMNS
            .iter()
            .zip(vals)
            .filter_map(|(n, v)| v.map(|v| (n.to_string(), v)))
            .collect();
        for (n, v) in COLUMNS.iter().zip(vals) {
            if let Some(v) = v {
                let s = sums.entry(rec.baseline_id.as_str()).or_default().entry(n).or_default();
                s.0 += v;
                s.1 += 1;
            }
        }
        for e in errs {
            errors.push(ErrorRow {
                clip_id: Some(rec.clip_id.clone()),
                message: e.clone(),
            });
        }
        let mut row = vec![rec.clip_id.clone(), rec.prompt_id.clone(), rec.baseline_id.clone()];
        row.extend(vals.iter().map(|v| format_opt(*v)));
        row.push(errs.join("; "));
        rows.insert(rec.clip_id.clone(), row);
        clips.push(ClipMetrics {
            clip_id: rec.clip_id.clone(),
            prompt_id: rec.prompt_id.clone(),
            baseline_id: rec.baseline_id.clone(),
            metrics,
        });
    }
    for e in &errors {
        if let Some(id) = &e.clip_id {
            rows.entry(id.clone()).or_insert_with(|| {
                let mut r = vec![id.clone(), String::new(), String::new()];
                r.extend(COLUMNS.iter().map(|_| String::new()));
                r.push(e.message.clone());
                r
            });
        }
    }

    let baselines: BTreeMap<&str, BTreeMap<&str, f64>> = sums
        .iter()
        .map(|(b, m)| (*b, m.iter().map(|(n, (s, c))| (*n, s / *c as f64)).collect()))
        .collect();

    ensure_dir(&cfg.output_dir)?;
    let mut header = vec!["clip_id", "prompt_id", "baseline_id"];
    header.extend(COLUMNS);
    header.push("error");
    let rows: Vec<Vec<String>> = rows.into_values().collect();
    write_text(&cfg.output_dir.join("physical_report.csv"), &csv_string(&header, &rows)?)?;

    let mut summary_header = vec!["baseline_id"];
    summary_header.extend(COLUMNS);
    let summary_rows: Vec<Vec<String>> = baselines
        .iter()
        .map(|(b, m)| {
            let mut r = vec![b.to_string()];
            r.extend(COLUMNS.iter().map(|n| format_opt(m.get(n).copied())));
            r
        })
        .collect();
    write_text(&cfg.output_dir.join("physical_summary.csv"), &csv_string(&summary_header, &summary_rows)?)?;

    errors.sort_by(|a, b| (&a.clip_id, &a.message).cmp(&(&b.clip_id, &b.message)));
    let report = envelope(
        "eval-physical",
        cfg,
        json!({"clips": clips, "baselines": baselines, "errors": errors}),
    )?;
    write_json(&cfg.output_dir.join("physical_report.json"), &report)?;
    Ok(Outcome {
        rows: clips.len(),
        failures: errors.iter().map(|e| e.message.clone()).collect(),
        network_failures: 0,
    })
}
