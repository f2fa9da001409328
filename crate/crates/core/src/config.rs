//! Run configuration.
//!
//! A TOML document with sections `env`, `ppo`, `estimator`, `segmentation`,
//! `bias_lab` and `analysis`, plus top-level `seed`, `threads` and `out_dir`.
//! Every key has a default, so an empty file is a valid configuration.
//! Unknown keys are rejected with their full dotted path.
//!
//! ```toml
//! seed = 7
//!
//! [env]
//! junctions = 6
//! corridor_len = 20
//! choices = 4
//!
//! [estimator]
//! kind = "sae"
//! lambda = 0.95
//!
//! [segmentation]
//! method = "probability"
//! p = 0.5
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::StudyConfig;
use crate::bias_lab::BiasGrid;
use crate::env::EnvConfig;
use crate::segmentation::SegmentationConfig;
use crate::trainer::PpoConfig;
use crate::traj::{EstimatorKind, EstimatorSpec, ADAPTIVE_COEFF};
use crate::{Error, Result};

/// Environment variable consulted when no output directory is configured.
pub const OUT_DIR_ENV: &str = "SEGADV_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorSection {
    pub kind: EstimatorKind,
    pub lambda: f64,
    pub adaptive_coeff: f64,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        Self {
            kind: EstimatorKind::Sae,
            lambda: 0.95,
            adaptive_coeff: ADAPTIVE_COEFF,
        }
    }
}

/// PPO hyperparameters; the estimator and seed come from their own sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoSection {
    pub clip_epsilon: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub rollouts_per_update: usize,
    pub group_size: usize,
    pub epochs_per_batch: usize,
    pub value_warmup_updates: usize,
    pub max_updates: usize,
    pub value_bucket: usize,
    pub value_mistake_flag: bool,
    pub stop_at_success: f64,
}

impl Default for PpoSection {
    fn default() -> Self {
        let d = PpoConfig::default();
        Self {
            clip_epsilon: d.clip_epsilon,
            actor_lr: d.actor_lr,
            critic_lr: d.critic_lr,
            rollouts_per_update: d.rollouts_per_update,
            group_size: d.group_size,
            epochs_per_batch: d.epochs_per_batch,
            value_warmup_updates: d.value_warmup_updates,
            max_updates: d.max_updates,
            value_bucket: d.value_bucket,
            value_mistake_flag: d.value_mistake_flag,
            stop_at_success: d.stop_at_success,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Root seed; every component derives its own stream from it.
    pub seed: u64,
    /// Worker threads; 1 is the reproducibility reference.
    pub threads: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub env: EnvConfig,
    pub ppo: PpoSection,
    pub estimator: EstimatorSection,
    pub segmentation: SegmentationConfig,
    pub bias_lab: BiasGrid,
    pub analysis: StudyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: 1,
            out_dir: None,
            env: EnvConfig::default(),
            ppo: PpoSection::default(),
            estimator: EstimatorSection::default(),
            segmentation: SegmentationConfig::default(),
            bias_lab: BiasGrid::default(),
            analysis: StudyConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let value: toml::Value = text
            .parse::<toml::Table>()
            .map(toml::Value::Table)
            .map_err(|e| Error::Config(e.to_string()))?;
        let mut unknown = Vec::new();
        let cfg: RunConfig =
            serde_ignored::deserialize(value, |path| unknown.push(path.to_string()))
                .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if !unknown.is_empty() {
            return Err(Error::Config(format!(
                "unknown key(s): {}",
                unknown.join(", ")
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Canonical TOML serialization.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Estimator spec from the `estimator` and `segmentation` sections.
    pub fn estimator_spec(&self) -> EstimatorSpec {
        EstimatorSpec {
            kind: self.estimator.kind,
            lambda: self.estimator.lambda,
            segmentation: (self.estimator.kind == EstimatorKind::Sae)
                .then(|| self.segmentation.clone()),
            adaptive_coeff: self.estimator.adaptive_coeff,
        }
    }

    pub fn ppo_config(&self) -> PpoConfig {
        let p = &self.ppo;
        PpoConfig {
            clip_epsilon: p.clip_epsilon,
            actor_lr: p.actor_lr,
            critic_lr: p.critic_lr,
            rollouts_per_update: p.rollouts_per_update,
            group_size: p.group_size,
            epochs_per_batch: p.epochs_per_batch,
            value_warmup_updates: p.value_warmup_updates,
            estimator: self.estimator_spec(),
            seed: self.seed,
            max_updates: p.max_updates,
            value_bucket: p.value_bucket,
            value_mistake_flag: p.value_mistake_flag,
            stop_at_success: p.stop_at_success,
        }
    }

    /// Output directory: explicit config, then `SEGADV_OUT_DIR`, then the working directory.
    pub fn resolve_out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn validate(&self) -> Result<()> {
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        self.env.build()?;
        self.ppo_config().validate()?;
        self.segmentation.validate()?;
        self.analysis.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_default() {
        assert_eq!(RunConfig::from_toml_str("").unwrap(), RunConfig::default());
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn unknown_keys_named() {
        let err =
            RunConfig::from_toml_str("[ppo]\nclip_epsilon = 0.1\nclip_eps = 0.2\n").unwrap_err();
        assert!(err.to_string().contains("ppo.clip_eps"), "{err}");
        let err = RunConfig::from_toml_str("[analysis.sampler]\nwidth = 3\n").unwrap_err();
        assert!(err.to_string().contains("analysis.sampler.width"), "{err}");
        let err = RunConfig::from_toml_str("bogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn canonical_round_trip() {
        let text = r#"
            seed = 11
            out_dir = "runs/a"
            [env]
            junctions = 3
            [segmentation]
            method = "uniform"
            M = 12
            [bias_lab]
            lambdas = [0.25, 0.9]
            patterns = ["worst_case"]
            [analysis]
            oracle = "mc"
            gae_lambdas = [0.0, 0.1, 0.7]
        "#;
        let cfg = RunConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.segmentation.segment_len, 12);
        let canon = cfg.to_toml_string().unwrap();
        let again = RunConfig::from_toml_str(&canon).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(canon, again.to_toml_string().unwrap());
    }

    #[test]
    fn estimator_spec_wiring() {
        let cfg = RunConfig::from_toml_str("[estimator]\nkind = \"gae\"\nlambda = 0.5\n").unwrap();
        let spec = cfg.estimator_spec();
        assert_eq!(spec, EstimatorSpec::gae(0.5));
        let cfg = RunConfig::default();
        assert!(cfg.estimator_spec().segmentation.is_some());
        assert_eq!(cfg.ppo_config().estimator, cfg.estimator_spec());
    }

    #[test]
    fn invalid_values_rejected() {
        let cfg = RunConfig::from_toml_str("[ppo]\nclip_epsilon = 1.5\n").unwrap();
        assert!(cfg.validate().is_err());
        assert!(RunConfig::from_toml_str("seed = \"x\"\n").is_err());
    }
}
