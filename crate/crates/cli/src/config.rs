use std::path::Path;

use anyhow::{anyhow, bail, Context};
use artinv_core::corpus::SyntheticSpec;
use artinv_core::train::ExperimentConfig;
use serde::{Deserialize, Serialize};

/// Everything a run can be configured with. Each subcommand reads its section.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub synth: SyntheticSpec,
    pub experiment: ExperimentConfig,
}

/// Parse the right-hand side of `--set`. Anything that is not a TOML value
/// is taken as a bare string.
fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn apply_override(root: &mut toml::Table, assignment: &str) -> anyhow::Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| anyhow!("override `{assignment}` is not of the form key=value"))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        bail!("override `{assignment}` has an empty key");
    }
    let (last, parents) = keys.split_last().expect("non-empty path");
    let mut table = root;
    for k in parents {
        let entry = table
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| anyhow!("`{k}` in `{path}` is not a table"))?;
    }
    table.insert(last.to_string(), parse_value(raw.trim()));
    Ok(())
}

/// Defaults, then the config file, then `--set` overrides, then `--seed`.
pub fn resolve(file: Option<&Path>, overrides: &[String], seed: Option<u64>) -> anyhow::Result<CliConfig> {
    let base = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str::<CliConfig>(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => CliConfig::default(),
    };
    let mut table = toml::Table::try_from(&base).context("serializing configuration")?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let mut cfg: CliConfig = table.try_into().context("applying overrides")?;
    if let Some(s) = seed {
        cfg.synth.seed = s;
        cfg.experiment.seed = s;
    }
    Ok(cfg)
}
