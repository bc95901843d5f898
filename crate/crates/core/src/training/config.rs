use std::path::Path;

use serde::{Deserialize, Serialize};

use super::OptimizerConfig;
use crate::augment::AugmentConfig;
use crate::error::{Error, Result};
use crate::imaging::{Expert, SplitPolicy};
use crate::lut::{DEFAULT_BASIS_COUNT, DEFAULT_LUT_SIZE};
use crate::metrics::{ChannelSet, HcWeights};
use crate::model::config_hash;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub expert: Expert,
    pub lut_size: usize,
    pub num_basis: usize,
    /// Weight of the group-consistency loss.
    pub lambda: f64,
    /// Training mask weights: subject and background.
    pub human_weight: f64,
    pub alpha: f64,
    pub optimizer: OptimizerConfig,
    pub batch_size: usize,
    pub epochs: usize,
    /// Short side of the training renders; 0 keeps the stored size.
    pub train_short_side: usize,
    /// Uniform noise on predictor columns 1..N at initialization.
    pub predictor_init_noise: f64,
    pub augment: AugmentConfig,
    pub seed: u64,
    /// Split used when manifest lines carry no `split` field.
    pub test_fraction: f64,
    /// Weights and channels for the per-epoch metric columns.
    pub eval_weights: HcWeights,
    pub channels: ChannelSet,
    pub log_metrics: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            expert: Expert::A,
            lut_size: DEFAULT_LUT_SIZE,
            num_basis: DEFAULT_BASIS_COUNT,
            lambda: 1.0,
            human_weight: 5.0,
            alpha: 1.0,
            optimizer: OptimizerConfig::default(),
            batch_size: 16,
            epochs: 100,
            train_short_side: 360,
            predictor_init_noise: 1e-2,
            augment: AugmentConfig::default(),
            seed: 0,
            test_fraction: 0.2,
            eval_weights: HcWeights::default(),
            channels: ChannelSet::default(),
            log_metrics: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            bad.push(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if !(self.human_weight > 0.0 && self.alpha > 0.0) {
            bad.push("human_weight and alpha must be > 0".to_string());
        }
        if self.lut_size < 2 {
            bad.push(format!("lut_size must be >= 2, got {}", self.lut_size));
        }
        if self.num_basis == 0 {
            bad.push("num_basis must be >= 1".to_string());
        }
        if self.batch_size == 0 {
            bad.push("batch_size must be >= 1".to_string());
        }
        if !(0.0..=1.0).contains(&self.test_fraction) {
            bad.push(format!("test_fraction must be in [0,1], got {}", self.test_fraction));
        }
        if self.predictor_init_noise.is_nan() || self.predictor_init_noise < 0.0 {
            bad.push("predictor_init_noise must be >= 0".to_string());
        }
        for r in [self.optimizer.validate(), self.augment.validate()] {
            if let Err(e) = r {
                bad.push(e.to_string());
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }

    /// Reads TOML (`.toml`) or JSON (anything else).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml")) {
            toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?
        } else {
            serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes to JSON")
    }

    pub fn hash(&self) -> String {
        config_hash(self.canonical_json().as_bytes())
    }

    pub fn split_policy(&self) -> SplitPolicy {
        SplitPolicy {
            test_fraction: self.test_fraction,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_round_trips() {
        let c = TrainConfig::default();
        c.validate().unwrap();
        assert_eq!(c.lambda, 1.0);
        assert_eq!(c.human_weight, 5.0);
        assert_eq!(c.alpha, 1.0);
        let back: TrainConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        let back: TrainConfig = serde_json::from_str(&c.canonical_json()).unwrap();
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn partial_files_and_errors() {
        let c: TrainConfig = toml::from_str("lambda = 0.0\nepochs = 3\n[optimizer]\nlr_lut = 0.5\n").unwrap();
        assert_eq!(c.lambda, 0.0);
        assert_eq!(c.optimizer.lr_lut, 0.5);
        assert_eq!(c.batch_size, 16);
        assert!(toml::from_str::<TrainConfig>("lamda = 1").is_err());
        let bad = TrainConfig {
            lambda: -1.0,
            batch_size: 0,
            ..TrainConfig::default()
        };
        let e = bad.validate().unwrap_err().to_string();
        assert!(e.contains("lambda") && e.contains("batch_size"));
    }
}
