//! Optional TOML defaults. Command-line flags win over the file, the file
//! wins over `LEMURKIT_PROVIDER`, and that wins over built-in defaults.

use std::fs;
use std::path::Path;

use lemurkit::corpus::SplitRatios;
use lemurkit::embedclient::ProviderSpec;
use lemurkit::EvalSetting;
use serde::Deserialize;

use crate::args::EmbedArgs;
use crate::UsageError;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_MODEL: &str = "mock";
pub const DEFAULT_LIMIT: usize = 2048;
pub const DEFAULT_BATCH: usize = 32;
pub const PROVIDER_ENV: &str = "LEMURKIT_PROVIDER";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub ratios: Option<SplitRatios>,
    pub caps: Option<Vec<usize>>,
    pub temperature: Option<f64>,
    pub provider: Option<String>,
    pub model: Option<String>,
    pub limit: Option<usize>,
    pub batch: Option<usize>,
    pub setting: Option<EvalSetting>,
    pub k: Option<Vec<usize>>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = fs::read_to_string(path).map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        Ok(toml::from_str(&text).map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())))?)
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or(DEFAULT_SEED)
    }

    pub fn ratios(&self, flag: Option<SplitRatios>) -> SplitRatios {
        flag.or(self.ratios).unwrap_or_default()
    }

    pub fn embedding(&self, flags: &EmbedArgs) -> anyhow::Result<EmbedSettings> {
        let provider = match &flags.provider {
            Some(p) => p.clone(),
            None => {
                let (text, origin) = match (&self.provider, std::env::var(PROVIDER_ENV)) {
                    (Some(p), _) => (p.clone(), "config"),
                    (None, Ok(p)) if !p.is_empty() => (p, PROVIDER_ENV),
                    _ => ("mock".to_owned(), "default"),
                };
                text.parse().map_err(|e| UsageError(format!("{origin}: {e}")))?
            }
        };
        let caps = flags.caps.clone().or_else(|| self.caps.clone()).unwrap_or_else(|| vec![2048, 1024, 512]);
        let policy = caps.try_into().map_err(|e| UsageError(format!("--caps: {e}")))?;
        let batch = flags.batch.or(self.batch).unwrap_or(DEFAULT_BATCH);
        if batch == 0 {
            return Err(UsageError("--batch must be positive".into()).into());
        }
        Ok(EmbedSettings {
            provider,
            model: flags.model.clone().or_else(|| self.model.clone()).unwrap_or_else(|| DEFAULT_MODEL.into()),
            limit: flags.limit.or(self.limit).unwrap_or(DEFAULT_LIMIT),
            policy,
            batch,
        })
    }
}

#[derive(Debug, Clone)]
pub struct EmbedSettings {
    pub provider: ProviderSpec,
    pub model: String,
    pub limit: usize,
    pub policy: lemurkit::TruncationPolicy,
    pub batch: usize,
}
