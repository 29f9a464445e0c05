//! Run configuration file: TOML with documented defaults for every key.
//! Unknown keys are a hard error so typos cannot silently fall back.

use std::path::Path;

use anyhow::Context;
use diqss::bitcore::Partition;
use diqss::noise::NoiseParams;
use diqss::protocol::ProtocolConfig;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfigFile {
    pub rounds: u64,
    pub gamma: f64,
    pub abort_threshold: f64,
    pub fidelity: f64,
    pub efficiency: f64,
    pub seed: u64,
    pub partition: Vec<usize>,
}

impl Default for RunConfigFile {
    fn default() -> Self {
        Self {
            rounds: 100_000,
            gamma: 0.2,
            abort_threshold: 0.02,
            fidelity: 1.0,
            efficiency: 1.0,
            seed: 42,
            partition: vec![1, 3, 3],
        }
    }
}

impl RunConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Validates and assembles the protocol configuration, with an optional
    /// seed override from the command line.
    pub fn into_protocol_config(self, seed_override: Option<u64>) -> anyhow::Result<ProtocolConfig> {
        let noise = NoiseParams::new(self.fidelity, self.efficiency)
            .context("invalid noise parameters")?;
        let partition = Partition::new(self.partition).context("invalid partition")?;
        ProtocolConfig::new(
            self.rounds,
            self.gamma,
            self.abort_threshold,
            partition,
            noise,
            seed_override.unwrap_or(self.seed),
        )
        .context("invalid protocol configuration")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_apply_to_missing_keys() {
        let cfg: RunConfigFile = toml::from_str("rounds = 500").unwrap();
        assert_eq!(cfg.rounds, 500);
        assert_eq!(cfg.gamma, 0.2);
        assert_eq!(cfg.abort_threshold, 0.02);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.partition, vec![1, 3, 3]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<RunConfigFile>("roundz = 500").unwrap_err();
        assert!(err.to_string().contains("roundz"));
    }

    #[test]
    fn seed_override_wins() {
        let cfg: RunConfigFile = toml::from_str("seed = 7").unwrap();
        let protocol = cfg.into_protocol_config(Some(99)).unwrap();
        assert_eq!(protocol.master_seed(), 99);
    }
}
