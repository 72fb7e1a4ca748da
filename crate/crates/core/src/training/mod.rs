//! Weight training for the window decoder.
//!
//! Plain and damped sets are trained on the first window configuration with
//! mini-batches of channel realizations the current decoder fails on, and
//! selected by a validation score that divides each SNR point's error count
//! by that of the untrained decoder. Breakwater sets are trained on
//! error-propagation samples taken from full chain decodes.

mod adam;
mod collect;
mod loss;
mod train;

pub use adam::{Adam, AdamConfig};
pub use collect::{
    collect_ep_samples, collect_error_samples, draw_samples, validation_errors, Collection,
    EpCollection,
};
pub use loss::{hard_bler_loss, soft_bler_loss, soft_bler_loss_grad};
pub use train::{
    batch_gradient, records_to_csv, train_breakwater, train_damped, train_plain, BatchGradient,
    TrainingOutcome, WindowTrainer,
};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::decoder::WeightSet;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    /// Eb/N0 points (dB) used for collection and validation.
    pub snr_points: Vec<f64>,
    pub errors_per_point: usize,
    pub sessions_per_stage: usize,
    pub stages: usize,
    pub validation_samples_per_point: usize,
    pub optimizer: AdamConfig,
    /// `beta` of the soft loss.
    pub sharpness: f64,
    /// L1 pull of the damping factors toward 1 (damped training only).
    pub l1: f64,
    pub seed: u64,
    /// Build mini-batches from decoding failures only.
    pub active_collection: bool,
    /// Select by the per-point normalized score instead of the raw sum.
    pub normalized_scoring: bool,
    /// Abort collection when the failure rate falls below this.
    pub acceptance_floor: f64,
    pub initial_weight: f64,
    /// Breakwater training passes over the sample set.
    pub epochs: usize,
    pub batch_size: usize,
    pub ep_samples: usize,
    pub ep_snr: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            snr_points: vec![1.2, 1.4, 1.6, 1.8, 2.0],
            errors_per_point: 20,
            sessions_per_stage: 10,
            stages: 1000,
            validation_samples_per_point: 10_000,
            optimizer: AdamConfig::default(),
            sharpness: 1.0,
            l1: 0.1,
            seed: 0,
            active_collection: true,
            normalized_scoring: true,
            acceptance_floor: 1e-6,
            initial_weight: 1.0,
            epochs: 500,
            batch_size: 100,
            ep_samples: 5000,
            ep_snr: 2.0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.snr_points.is_empty() {
            return bad("snr_points must not be empty".into());
        }
        if self.errors_per_point == 0 {
            return bad("errors_per_point must be >= 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if !(self.sharpness > 0.0) {
            return bad(format!("sharpness {} must be > 0", self.sharpness));
        }
        if !(self.l1 >= 0.0) {
            return bad(format!("l1 {} must be >= 0", self.l1));
        }
        if !(self.acceptance_floor > 0.0 && self.acceptance_floor <= 1.0) {
            return bad(format!("acceptance_floor {} outside (0, 1]", self.acceptance_floor));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> std::result::Result<Self, String> {
        let cfg: Self = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|msg| Error::parse(path, msg))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// One window input: channel LLRs of every window VN plus the frozen
/// decision LLRs of its boundary VNs (empty on the first window).
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSample {
    pub channel: Vec<f64>,
    pub boundary: Vec<f64>,
    pub ebno_db: f64,
    /// 1-based stage whose window this sample feeds.
    pub stage: usize,
    /// Hard loss of the decoder that produced the sample.
    pub label: u8,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageRecord {
    pub stage: usize,
    /// Validation error counts per SNR point.
    pub losses: Vec<u64>,
    /// Sum of per-point losses over the stage-0 losses.
    pub normalized: f64,
    /// Value used for selection (normalized or raw sum).
    pub score: f64,
    pub is_best: bool,
    /// Mean acceptance rate of the stage's collections per point (empty
    /// for stage 0).
    pub acceptance: Vec<f64>,
    pub snapshot: Option<WeightSet>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedLoss {
    pub value: f64,
    /// Points skipped because their baseline is zero.
    pub excluded: Vec<usize>,
}

/// `sum_i losses[i] / baselines[i]` over points with a positive baseline.
pub fn normalized_loss(losses: &[u64], baselines: &[u64]) -> Result<NormalizedLoss> {
    if losses.len() != baselines.len() {
        return Err(Error::Dimension(format!(
            "{} losses for {} baselines",
            losses.len(),
            baselines.len()
        )));
    }
    let excluded: Vec<usize> = (0..baselines.len()).filter(|&i| baselines[i] == 0).collect();
    if excluded.len() == baselines.len() {
        return Err(Error::InvalidInput(
            "every baseline loss is zero; nothing to normalize".into(),
        ));
    }
    let value = losses
        .iter()
        .zip(baselines)
        .filter(|(_, &b)| b > 0)
        .map(|(&l, &b)| l as f64 / b as f64)
        .sum();
    Ok(NormalizedLoss { value, excluded })
}
