//! Experiment configuration, Monte Carlo evaluation and file plumbing.
//!
//! An [`ExperimentConfig`] names the code, decoder, weight files and SNR
//! sweep. [`simulate`] measures BLER and FER and [`estimate_ep`] the
//! probability that a stage fails given that the previous one did. Frames
//! are decoded in fixed-size batches on a pool of `workers` threads; each
//! frame draws from its own random stream, so counters do not depend on the
//! number of workers.

mod ep_file;
mod pipeline;
mod sim;

pub use ep_file::{read_ep_samples, write_ep_samples};
pub use pipeline::{
    collect_ep, derive_schedule, run_training, train_breakwater_set, DerivedSchedule,
};
pub use sim::{estimate_ep, fmt_g6, simulate, wald_half_width, SimPoint, SimResult, Simulator, StopOn};

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::code_graph::{CodeSpec, LiftedTannerGraph};
use crate::decoder::io::{load_schedule, load_weights};
use crate::decoder::{BoundaryMode, ChainDecoder, DecoderConfig, Detector, ScheduleMask, WeightSet};
use crate::error::{Error, Result};
use crate::training::TrainingConfig;

/// How simulation frames are formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    /// Full chains of `L` stages with frozen decisions carried forward.
    #[default]
    Chain,
    /// One window per frame at `window_stage`, with correct boundary values.
    Window,
    /// `L` stages per frame, each with its own noise and correct boundary
    /// values, so that stage outcomes are independent.
    Independent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StopRule {
    /// Error events per SNR point (block errors, or conditioning events for
    /// EP estimation).
    pub min_errors: u64,
    pub max_frames: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_errors: 200,
            max_frames: 1_000_000,
        }
    }
}

/// Weight-set inputs. The plain set is read from `plain`, or is the
/// constant `fixed` when no file is given.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightSources {
    pub plain: Option<PathBuf>,
    pub fixed: Option<f64>,
    pub breakwater: Option<PathBuf>,
    pub damped: Option<PathBuf>,
}

/// Output file names, joined onto `dir`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputPaths {
    pub dir: PathBuf,
    pub code_dump: PathBuf,
    pub plain_weights: PathBuf,
    pub damped_weights: PathBuf,
    pub breakwater_weights: PathBuf,
    pub schedule: PathBuf,
    pub ep_samples: PathBuf,
    pub training_log: PathBuf,
    pub simulation_csv: PathBuf,
    pub ep_csv: PathBuf,
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("."),
            code_dump: "code.txt".into(),
            plain_weights: "plain.json".into(),
            damped_weights: "damped.json".into(),
            breakwater_weights: "breakwater.json".into(),
            schedule: "schedule.json".into(),
            ep_samples: "ep_samples.bin".into(),
            training_log: "training.csv".into(),
            simulation_csv: "simulation.csv".into(),
            ep_csv: "ep.csv".into(),
        }
    }
}

impl OutputPaths {
    pub fn resolve(&self, name: &Path) -> PathBuf {
        self.dir.join(name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub code: CodeSpec,
    pub decoder: DecoderConfig,
    #[serde(default)]
    pub weights: WeightSources,
    #[serde(default)]
    pub schedule: Option<PathBuf>,
    #[serde(default)]
    pub detector: Detector,
    #[serde(default)]
    pub boundary: BoundaryMode,
    #[serde(default)]
    pub mode: SimMode,
    #[serde(default = "default_stage")]
    pub window_stage: usize,
    #[serde(default = "default_snr")]
    pub snr: Vec<f64>,
    #[serde(default)]
    pub stop: StopRule,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub output: OutputPaths,
}

fn default_stage() -> usize {
    1
}

fn default_snr() -> Vec<f64> {
    vec![1.2, 1.4, 1.6, 1.8, 2.0]
}

impl ExperimentConfig {
    /// A config with every optional section at its default.
    pub fn new(code: CodeSpec, decoder: DecoderConfig) -> Self {
        Self {
            code,
            decoder,
            weights: WeightSources::default(),
            schedule: None,
            detector: Detector::None,
            boundary: BoundaryMode::Decoded,
            mode: SimMode::Chain,
            window_stage: 1,
            snr: default_snr(),
            stop: StopRule::default(),
            workers: 0,
            seed: 0,
            training: TrainingConfig::default(),
            output: OutputPaths::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        self.decoder.validate()?;
        self.training.validate()?;
        if self.stop.min_errors == 0 {
            return bad("stop.min_errors must be >= 1".into());
        }
        if self.stop.max_frames == 0 {
            return bad("stop.max_frames must be >= 1".into());
        }
        if self.snr.iter().any(|s| !s.is_finite()) {
            return bad(format!("snr {:?} has a non-finite point", self.snr));
        }
        if self.window_stage == 0 || self.window_stage > self.code.length {
            return bad(format!(
                "window_stage {} outside 1..={}",
                self.window_stage, self.code.length
            ));
        }
        if self.weights.plain.is_some() && self.weights.fixed.is_some() {
            return bad("weights.plain and weights.fixed are mutually exclusive".into());
        }
        if self.weights.breakwater.is_some() && self.detector == Detector::None {
            return bad("a breakwater weight set needs detector = \"ucn\" or \"genie\"".into());
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

    pub fn graph(&self) -> Result<Arc<LiftedTannerGraph>> {
        Ok(Arc::new(self.code.build()?))
    }

    /// The plain set from file, or a fixed-value set, or an error when
    /// neither is configured.
    pub fn plain_weights(&self) -> Result<WeightSet> {
        let ws = match (&self.weights.plain, self.weights.fixed) {
            (Some(path), _) => load_weights(path)?,
            (None, Some(v)) => {
                let n_c = self.code.components()?.n_c();
                WeightSet::fixed(self.decoder.max_iters, self.decoder.window, n_c, v)
            }
            (None, None) => {
                return Err(Error::Config(
                    "no plain weights: set weights.plain or weights.fixed".into(),
                ))
            }
        };
        Ok(ws)
    }

    pub fn breakwater_weights(&self) -> Result<Option<WeightSet>> {
        self.weights.breakwater.as_deref().map(load_weights).transpose()
    }

    pub fn damped_weights(&self) -> Result<WeightSet> {
        let path = self
            .weights
            .damped
            .as_deref()
            .ok_or_else(|| Error::Config("weights.damped is not set".into()))?;
        load_weights(path)
    }

    pub fn schedule_mask(&self) -> Result<Option<ScheduleMask>> {
        self.schedule.as_deref().map(load_schedule).transpose()
    }
}

/// Everything a simulation needs, loaded and dimension-checked.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub decoder: ChainDecoder,
    pub plain: WeightSet,
    pub breakwater: Option<WeightSet>,
    pub schedule: Option<ScheduleMask>,
}

impl Experiment {
    pub fn load(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let decoder = ChainDecoder::new(config.graph()?, config.decoder)?;
        let plain = config.plain_weights()?;
        let breakwater = config.breakwater_weights()?;
        let schedule = config.schedule_mask()?;
        let exp = Self {
            config,
            decoder,
            plain,
            breakwater,
            schedule,
        };
        exp.decoder.check_plan(&exp.simulator().plan)?;
        Ok(exp)
    }

    pub fn simulator(&self) -> Simulator<'_> {
        Simulator {
            decoder: &self.decoder,
            plan: crate::decoder::ChainPlan {
                plain: &self.plain,
                breakwater: self.breakwater.as_ref(),
                detector: self.config.detector,
                schedule: self.schedule.as_ref(),
                boundary: self.config.boundary,
            },
            mode: self.config.mode,
            window_stage: self.config.window_stage,
            seed: self.config.seed,
            workers: self.config.workers,
        }
    }
}

/// Runs `f` on a pool of `workers` threads (0: the global pool size).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 7
snr = [2.0]

[code]
dv = 3
dc = 6
w = 2
length = 12
z = 8

[decoder]
window = 4
max_iters = 3

[weights]
fixed = 0.75
"#;

    #[test]
    fn minimal_config_defaults() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.stop, StopRule::default());
        assert_eq!(cfg.mode, SimMode::Chain);
        assert_eq!(cfg.decoder.target, 1);
        assert_eq!(cfg.training, TrainingConfig::default());
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
        let ws = cfg.plain_weights().unwrap();
        assert_eq!(ws.weights(), &[0.75; 12][..]);
    }

    #[test]
    fn rejects_bad_configs() {
        for (from, to) in [
            ("seed = 7", "sead = 7"),
            ("[weights]", "[weight]"),
            ("max_iters = 3", "max_iters = 3\nmax_iter = 3"),
            ("snr = [2.0]", "snr = [2.0]\n[stop]\nmin_errors = 0"),
            ("fixed = 0.75", "fixed = 0.75\nbreakwater = \"bw.json\""),
            ("fixed = 0.75", "fixed = 0.75\nplain = \"p.json\""),
        ] {
            let text = MINIMAL.replace(from, to);
            assert!(ExperimentConfig::from_toml_str(&text).is_err(), "{to}");
        }
        let text = MINIMAL.replace("snr = [2.0]", "snr = [2.0]\ndetector = \"bogus\"");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
        let text = MINIMAL.replace("snr = [2.0]", "snr = [2.0]\nboundary = \"genie\"\nmode = \"independent\"");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!((cfg.boundary, cfg.mode), (BoundaryMode::Genie, SimMode::Independent));
    }
}
