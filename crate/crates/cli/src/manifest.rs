//! `run_manifest.toml`: what ran, with which resolved config and seed.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;

use crate::config::ExperimentConfig;

pub fn write(
    dir: &Path,
    command: &str,
    cfg: &ExperimentConfig,
    outputs: &[String],
    deterministic: bool,
) -> anyhow::Result<()> {
    let mut run = toml::Table::new();
    run.insert("command".into(), command.into());
    run.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    run.insert("seed".into(), cfg.seed.to_string().into());
    if !deterministic {
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        run.insert("timestamp_unix".into(), toml::Value::Integer(now as i64));
    }
    run.insert(
        "outputs".into(),
        toml::Value::Array(outputs.iter().map(|o| toml::Value::String(o.clone())).collect()),
    );
    let mut doc = toml::Table::new();
    doc.insert("run".into(), toml::Value::Table(run));
    let config: toml::Table = cfg.to_toml().parse().expect("config round-trips through toml");
    doc.insert("config".into(), toml::Value::Table(config));
    let path = dir.join("run_manifest.toml");
    std::fs::write(&path, toml::to_string(&doc)?).with_context(|| format!("writing `{}`", path.display()))
}
