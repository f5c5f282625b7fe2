use serde_json::json;
use t2m_core::finegrained::{evaluate_targets, format_accuracy_csv};
use t2m_core::motion::FeatureStats;
use t2m_core::npy::read_npy;
use t2m_core::targets::load_targets;

use super::Context;
use crate::config::{require_file, StatsPaths};
use crate::error::{CliError, Outcome};
use crate::output::{ensure_dir, envelope, write_json, write_text};

fn load_stats(paths: &StatsPaths) -> Result<FeatureStats, CliError> {
    let read = |p: &std::path::Path| {
        require_file(p)?;
        read_npy(p)
            .map(|a| a.into_f64())
            .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
    };
    FeatureStats::new(read(&paths.mean)?, read(&paths.std)?).map_err(|e| CliError::Config(e.to_string()))
}

pub fn eval_finegrained(ctx: &Context) -> Result<Outcome, CliError> {
    let cfg = &ctx.config;
    if cfg.targets.is_empty() {
        return Err(CliError::Config("no target files configured".into()));
    }
    let mut targets = Vec::new();
    for p in &cfg.targets {
        require_file(p)?;
        targets.extend(load_targets(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?);
    }
    let stats = cfg.feature_stats.as_ref().map(load_stats).transpose()?;
    let (corpus, errors) = ctx.corpus()?;
    let table = ctx
        .pool()?
        .install(|| evaluate_targets(&corpus, &targets, stats.as_ref(), cfg.window))
        .map_err(|e| CliError::Data(e.to_string()))?;

    let warnings: Vec<String> = table
        .cases
        .iter()
        .filter(|c| c.degenerate_window)
        .map(|c| format!("{}: window shorter than {} frames, displacement measured over one frame", c.clip_id, cfg.window))
        .collect();

    ensure_dir(&cfg.output_dir)?;
    write_text(&cfg.output_dir.join("finegrained.csv"), &format_accuracy_csv(&table.rows))?;
    let report = envelope(
        "eval-finegrained",
        cfg,
        json!({"rows": table.rows, "cases": table.cases, "warnings": warnings, "errors": errors}),
    )?;
    write_json(&cfg.output_dir.join("finegrained.json"), &report)?;
    Ok(Outcome {
        rows: table.rows.len(),
        failures: errors.iter().map(|e| e.message.clone()).collect(),
        network_failures: 0,
    })
}
