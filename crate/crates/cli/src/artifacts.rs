//! Files written for a single run.

use crate::CODE_VERSION;
use doall::config::RunConfig;
use doall::runner::{run, RunOutput};
use doall::Result;
use serde_json::json;
use std::io::Write;
use std::path::Path;

/// Runs `config` and writes `config.json`, `trace.ndjson` and
/// `metrics.json` into `dir`. Each file carries the configuration and the
/// code version.
pub fn simulate_to(config: &RunConfig, dir: &Path) -> Result<RunOutput> {
    let out = run(config, json!({ "code_version": CODE_VERSION }))?;
    std::fs::create_dir_all(dir)?;
    let echo = json!({ "code_version": CODE_VERSION, "config": config });
    std::fs::write(dir.join("config.json"), pretty(&echo)?)?;
    let mut trace = std::io::BufWriter::new(std::fs::File::create(dir.join("trace.ndjson"))?);
    out.trace.write_ndjson(&mut trace)?;
    trace.flush()?;
    let metrics = json!({
        "code_version": CODE_VERSION,
        "config": config,
        "metrics": out.metrics,
        "overlay_degree": out.overlay.max_degree(),
        "effort": out.effort,
    });
    std::fs::write(dir.join("metrics.json"), pretty(&metrics)?)?;
    Ok(out)
}

fn pretty(v: &serde_json::Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}
