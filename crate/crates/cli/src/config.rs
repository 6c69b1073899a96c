use std::path::Path;

use anyhow::{bail, Context, Result};
use bagdet::Limits;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    #[serde(flatten)]
    pub limits: Limits,
    pub output_format: OutputFormat,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            limits: Limits::default(),
            output_format: OutputFormat::Json,
            seed: 0,
        }
    }
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file `{}`", path.display()))?;
        let cfg: Config = serde_json::from_str(&text)
            .with_context(|| format!("invalid config file `{}`", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let l = &self.limits;
        for (name, v) in [
            ("max_search_nodes", l.max_search_nodes),
            ("max_domain_size", l.max_domain_size),
            ("max_materialized_size", l.max_materialized_size),
            ("max_distinguisher_candidates", l.max_distinguisher_candidates),
        ] {
            if v == 0 {
                bail!("config: {name} must be positive");
            }
        }
        Ok(())
    }
}
