//! JSON run configuration.
//!
//! Every field is optional in the file; missing fields take the defaults below and unknown
//! keys are rejected. Command-line flags override the file.
//!
//! ```json
//! {
//!   "seed": 0,
//!   "profile": [16, 8, 8, 8, 8, 16, 1],
//!   "data": { "images": "data/mnist/train-images-idx3-ubyte", "labels": null, "limit": null },
//!   "noise": { "sigma": 0.3, "clip_lo": 0.0, "clip_hi": 1.0 },
//!   "split": { "train_fraction": 0.8 },
//!   "train": { "epochs": 20, "batch_size": 32, "learning_rate": 0.15,
//!              "optimizer": "sgd_momentum", "momentum": 0.9, "l1_lambda": 0.0 },
//!   "accel": { "clock_hz": 1e8, "num_channels": 8, "macs_per_channel": 16, "fifo_depth": 512,
//!              "total_bits": 16, "frac_bits": 8, "power_watts": 5.93, "backpressure": true }
//! }
//! ```

use std::path::{Path, PathBuf};

use cae_core::accel::AccelConfig;
use cae_core::dataset::{NoiseConfig, SplitConfig};
use cae_core::fixed::FixedPointFormat;
use cae_core::model::{Optimizer, TrainConfig, DEFAULT_PROFILE};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Drives noise, split, initialization and shuffling, each from its own stream.
    pub seed: u64,
    pub profile: Vec<usize>,
    pub data: DataSection,
    pub noise: NoiseSection,
    pub split: SplitSection,
    pub train: TrainSection,
    pub accel: AccelSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub images: PathBuf,
    pub labels: Option<PathBuf>,
    /// Use only the first `limit` images.
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub sigma: f64,
    pub clip_lo: f64,
    pub clip_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerName {
    Sgd,
    SgdMomentum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerName,
    pub momentum: f64,
    pub l1_lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AccelSection {
    pub clock_hz: f64,
    pub num_channels: usize,
    pub macs_per_channel: usize,
    pub fifo_depth: usize,
    pub total_bits: u32,
    pub frac_bits: u32,
    pub power_watts: f64,
    pub backpressure: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            profile: DEFAULT_PROFILE.to_vec(),
            data: DataSection::default(),
            noise: NoiseSection::default(),
            split: SplitSection::default(),
            train: TrainSection::default(),
            accel: AccelSection::default(),
        }
    }
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            images: PathBuf::from("data/mnist/train-images-idx3-ubyte"),
            labels: None,
            limit: None,
        }
    }
}

impl Default for NoiseSection {
    fn default() -> Self {
        let n = NoiseConfig::new(NoiseConfig::DEFAULT_SIGMA, 0);
        NoiseSection {
            sigma: n.sigma,
            clip_lo: n.clip_lo,
            clip_hi: n.clip_hi,
        }
    }
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            train_fraction: SplitConfig::default().train_fraction,
        }
    }
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            optimizer: match t.optimizer {
                Optimizer::Sgd => OptimizerName::Sgd,
                Optimizer::SgdMomentum => OptimizerName::SgdMomentum,
            },
            momentum: t.momentum,
            l1_lambda: t.l1_lambda,
        }
    }
}

impl Default for AccelSection {
    fn default() -> Self {
        let a = AccelConfig::default();
        AccelSection {
            clock_hz: a.clock_hz,
            num_channels: a.num_channels,
            macs_per_channel: a.macs_per_channel,
            fifo_depth: a.fifo_depth,
            total_bits: a.fixed_format.total_bits(),
            frac_bits: a.fixed_format.frac_bits(),
            power_watts: a.power_watts,
            backpressure: a.backpressure,
        }
    }
}

/// Values given on the command line. `None` keeps the file or default value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub images: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub limit: Option<usize>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub profile: Option<Vec<usize>>,
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate().map_err(|e| Error::Config {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    /// Defaults, then the file if given, then the overrides.
    pub fn resolve(file: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
                Self::from_json(&text, path)?
            }
            None => RunConfig::default(),
        };
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.images {
            self.data.images = v.clone();
        }
        if let Some(v) = &o.labels {
            self.data.labels = Some(v.clone());
        }
        if let Some(v) = o.limit {
            self.data.limit = Some(v);
        }
        if let Some(v) = o.epochs {
            self.train.epochs = v;
        }
        if let Some(v) = o.learning_rate {
            self.train.learning_rate = v;
        }
        if let Some(v) = &o.profile {
            self.profile = v.clone();
        }
    }

    /// Checks every section by building the core configurations from it.
    pub fn validate(&self) -> Result<()> {
        self.noise_config().validate()?;
        self.split_config().validate()?;
        self.train_config().validate()?;
        self.accel_config()?.validate()?;
        cae_core::model::build_table1_network(&self.profile)?;
        Ok(())
    }

    pub fn noise_config(&self) -> NoiseConfig {
        NoiseConfig {
            sigma: self.noise.sigma,
            clip_lo: self.noise.clip_lo,
            clip_hi: self.noise.clip_hi,
            seed: self.seed,
        }
    }

    pub fn split_config(&self) -> SplitConfig {
        SplitConfig {
            train_fraction: self.split.train_fraction,
            seed: self.seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            optimizer: match t.optimizer {
                OptimizerName::Sgd => Optimizer::Sgd,
                OptimizerName::SgdMomentum => Optimizer::SgdMomentum,
            },
            momentum: t.momentum,
            seed: self.seed,
            l1_lambda: t.l1_lambda,
        }
    }

    pub fn accel_config(&self) -> Result<AccelConfig> {
        let a = &self.accel;
        Ok(AccelConfig {
            clock_hz: a.clock_hz,
            num_channels: a.num_channels,
            macs_per_channel: a.macs_per_channel,
            fifo_depth: a.fifo_depth,
            fixed_format: FixedPointFormat::new(a.total_bits, a.frac_bits, true)?,
            power_watts: a.power_watts,
            backpressure: a.backpressure,
            trace: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_all_defaults() {
        let cfg = RunConfig::from_json("{}", Path::new("x.json")).unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(
            cfg.train_config(),
            TrainConfig {
                seed: 0,
                ..TrainConfig::default()
            }
        );
        assert_eq!(cfg.accel_config().unwrap(), AccelConfig::default());
    }

    #[test]
    fn unknown_key_names_field_and_line() {
        let err = RunConfig::from_json("{\n  \"train\": {\"epochz\": 3}\n}", Path::new("run.json"))
            .unwrap_err()
            .to_string();
        assert!(
            err.contains("run.json") && err.contains("epochz") && err.contains("line 2"),
            "{err}"
        );
    }

    #[test]
    fn flags_beat_file_beats_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"seed": 5, "train": {"epochs": 3, "learning_rate": 0.2}}"#).unwrap();
        let o = Overrides {
            epochs: Some(7),
            ..Overrides::default()
        };
        let cfg = RunConfig::resolve(Some(&path), &o).unwrap();
        assert_eq!((cfg.seed, cfg.train.epochs, cfg.train.learning_rate), (5, 7, 0.2));
        assert_eq!(cfg.train.batch_size, 32);
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(RunConfig::from_json(r#"{"profile": [1, 2]}"#, Path::new("p")).is_err());
        assert!(RunConfig::from_json(r#"{"train": {"l1_lambda": 0.5}}"#, Path::new("p")).is_err());
        assert!(RunConfig::from_json(r#"{"train": {"optimizer": "adam"}}"#, Path::new("p")).is_err());
        assert!(RunConfig::from_json(r#"{"accel": {"fifo_depth": 0}}"#, Path::new("p")).is_err());
        let missing = RunConfig::resolve(Some(Path::new("/nonexistent/cfg.json")), &Overrides::default());
        assert!(missing.unwrap_err().to_string().contains("/nonexistent/cfg.json"));
    }

    #[test]
    fn defaults_serialize_back() {
        let text = serde_json::to_string(&RunConfig::default()).unwrap();
        assert_eq!(
            RunConfig::from_json(&text, Path::new("d")).unwrap(),
            RunConfig::default()
        );
    }
}
