use super::{with_workers, ExperimentConfig};
use crate::code_graph::window_view;
use crate::decoder::{ChainDecoder, ScheduleMask, WeightSet};
use crate::error::{Error, Result};
use crate::scheduling::{greedy_deactivate, insignificance, omission_fraction, InsignificanceTable};
use crate::training::{
    collect_ep_samples, train_breakwater, train_damped, train_plain, EpCollection, StageRecord,
    TrainingOutcome, TrainingSample, WindowTrainer,
};
use crate::unrolled_net::{normalize_counts, reach_counts};

/// Trains a plain (or damped) set on the first window of the configured code.
pub fn run_training(
    cfg: &ExperimentConfig,
    damped: bool,
    on_stage: impl FnMut(&StageRecord) + Send,
) -> Result<TrainingOutcome> {
    cfg.validate()?;
    let tr = WindowTrainer::new(cfg.graph()?, cfg.decoder, cfg.code.code_id())?;
    with_workers(cfg.workers, || {
        if damped {
            train_damped(&tr, &cfg.training, on_stage)
        } else {
            train_plain(&tr, &cfg.training, on_stage)
        }
    })?
}

#[derive(Clone, Debug)]
pub struct DerivedSchedule {
    pub mask: ScheduleMask,
    pub table: InsignificanceTable,
    pub omission: f64,
}

/// Greedy schedule with `k` deactivations beyond the unreachable cells,
/// scored from the damped set `damped`.
pub fn derive_schedule(cfg: &ExperimentConfig, damped: &WeightSet, k: usize) -> Result<DerivedSchedule> {
    let base = cfg.code.base()?;
    damped.check_dims(&cfg.decoder, base.n_c())?;
    let view = window_view(base.length(), base.w(), 1, cfg.decoder.window)?;
    let counts = reach_counts(&base, &view, cfg.decoder.max_iters, cfg.decoder.target)?;
    let table = insignificance(damped, &normalize_counts(&counts))?;
    let mask = greedy_deactivate(&table, k)?;
    let omission = omission_fraction(&mask);
    Ok(DerivedSchedule {
        mask,
        table,
        omission,
    })
}

/// EP samples at `training.ep_snr` from chains decoded with the plain set,
/// searching at most `stop.max_frames` frames.
pub fn collect_ep(cfg: &ExperimentConfig) -> Result<EpCollection> {
    cfg.validate()?;
    let decoder = ChainDecoder::new(cfg.graph()?, cfg.decoder)?;
    let plain = cfg.plain_weights()?;
    let t = &cfg.training;
    with_workers(cfg.workers, || {
        collect_ep_samples(&decoder, &plain, t.ep_snr, t.ep_samples, t.seed, cfg.stop.max_frames)
    })?
}

pub fn train_breakwater_set(
    cfg: &ExperimentConfig,
    samples: &[TrainingSample],
    on_epoch: impl FnMut(usize, f64) + Send,
) -> Result<WeightSet> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::InvalidInput("the EP sample file is empty".into()));
    }
    let graph = cfg.graph()?;
    let plain = cfg.plain_weights()?;
    with_workers(cfg.workers, || {
        train_breakwater(&graph, &cfg.decoder, samples, &plain, &cfg.training, on_epoch)
    })?
}
