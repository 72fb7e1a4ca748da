use rayon::prelude::*;

use super::{TrainingSample, WindowTrainer};
use crate::channel::{domain, llr_vector, stream_rng, ChannelParams};
use crate::decoder::{decode_window_with, ChainDecoder, ChainPlan, Scratch, WeightSet};
use crate::error::{Error, Result};

/// Draws are decoded in fixed-size batches so that the outcome does not
/// depend on the number of threads.
const DRAW_BATCH: u64 = 64;
const FRAME_BATCH: u64 = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct Collection {
    pub samples: Vec<TrainingSample>,
    pub draws: u64,
}

impl Collection {
    pub fn acceptance_rate(&self) -> f64 {
        if self.draws == 0 {
            0.0
        } else {
            self.samples.len() as f64 / self.draws as f64
        }
    }
}

fn key_with(key: &[u64], idx: u64) -> Vec<u64> {
    let mut k = key.to_vec();
    k.push(idx);
    k
}

/// Decodes draws `first..first + n` of stream `key` and returns
/// `(draw index, channel LLRs, hard loss)` in draw order.
fn decode_draws(
    tr: &WindowTrainer,
    weights: &WeightSet,
    params: &ChannelParams,
    seed: u64,
    key: &[u64],
    first: u64,
    n: u64,
) -> Result<Vec<(Vec<f64>, u8)>> {
    let wg = tr.window();
    (first..first + n)
        .into_par_iter()
        .map_init(Scratch::default, |scratch, idx| {
            let mut rng = stream_rng(seed, &key_with(key, idx));
            let ch = llr_vector(wg.num_vns(), params, &mut rng);
            let res = decode_window_with(wg, &ch, &[], weights, None, tr.config(), scratch)?;
            Ok((ch, u8::from(res.block_error)))
        })
        .collect()
}

/// Keeps only realizations the decoder fails on, until `count` are found.
///
/// Fails once at least `1 / floor` draws were made and the failure rate is
/// still below `floor`.
pub fn collect_error_samples(
    tr: &WindowTrainer,
    weights: &WeightSet,
    ebno_db: f64,
    count: usize,
    seed: u64,
    key: &[u64],
    floor: f64,
) -> Result<Collection> {
    let params = ChannelParams::new(ebno_db, tr.rate())?;
    let mut samples = Vec::with_capacity(count);
    let mut draws = 0u64;
    let min_draws = (1.0 / floor).ceil() as u64;
    while samples.len() < count {
        for (i, (ch, loss)) in decode_draws(tr, weights, &params, seed, key, draws, DRAW_BATCH)?
            .into_iter()
            .enumerate()
        {
            if loss == 1 && samples.len() < count {
                samples.push(TrainingSample {
                    channel: ch,
                    boundary: Vec::new(),
                    ebno_db,
                    stage: 1,
                    label: 1,
                });
                if samples.len() == count {
                    draws += i as u64 + 1;
                    return Ok(Collection { samples, draws });
                }
            }
        }
        draws += DRAW_BATCH;
        let rate = samples.len() as f64 / draws as f64;
        if draws >= min_draws && rate < floor {
            return Err(Error::AcceptanceTooLow {
                ebno_db,
                draws,
                rate,
                floor,
            });
        }
    }
    Ok(Collection { samples, draws })
}

/// `count` unfiltered realizations, labeled with the decoder's hard loss.
pub fn draw_samples(
    tr: &WindowTrainer,
    weights: &WeightSet,
    ebno_db: f64,
    count: usize,
    seed: u64,
    key: &[u64],
) -> Result<Collection> {
    let params = ChannelParams::new(ebno_db, tr.rate())?;
    let samples = decode_draws(tr, weights, &params, seed, key, 0, count as u64)?
        .into_iter()
        .map(|(channel, label)| TrainingSample {
            channel,
            boundary: Vec::new(),
            ebno_db,
            stage: 1,
            label,
        })
        .collect();
    Ok(Collection {
        samples,
        draws: count as u64,
    })
}

/// Hard-loss sum over `count` fresh realizations.
pub fn validation_errors(
    tr: &WindowTrainer,
    weights: &WeightSet,
    ebno_db: f64,
    count: usize,
    seed: u64,
    key: &[u64],
) -> Result<u64> {
    let params = ChannelParams::new(ebno_db, tr.rate())?;
    let mut errors = 0u64;
    let mut first = 0u64;
    while first < count as u64 {
        let n = DRAW_BATCH.min(count as u64 - first);
        let wg = tr.window();
        errors += (first..first + n)
            .into_par_iter()
            .map_init(Scratch::default, |scratch, idx| {
                let mut rng = stream_rng(seed, &key_with(key, idx));
                let ch = llr_vector(wg.num_vns(), &params, &mut rng);
                decode_window_with(wg, &ch, &[], weights, None, tr.config(), scratch)
                    .map(|r| u64::from(r.block_error))
            })
            .collect::<Result<Vec<u64>>>()?
            .into_iter()
            .sum::<u64>();
        first += n;
    }
    Ok(errors)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpCollection {
    pub samples: Vec<TrainingSample>,
    pub frames: u64,
}

/// Chain-decodes random frames with `plain` and, for every failed stage `t`
/// whose successor `t + 1` has a full window with a full boundary, stores
/// the input of stage `t + 1`: its channel LLRs and the frozen decisions of
/// its `w` boundary positions.
///
/// `max_frames` bounds the search; fewer than `count` samples may return.
pub fn collect_ep_samples(
    decoder: &ChainDecoder,
    plain: &WeightSet,
    ebno_db: f64,
    count: usize,
    seed: u64,
    max_frames: u64,
) -> Result<EpCollection> {
    let g = decoder.graph();
    let base = g.base();
    let params = ChannelParams::new(ebno_db, base.design_rate())?;
    let plan = ChainPlan::plain(plain);
    let (length, w, window) = (base.length(), base.w(), decoder.config().window);
    let eligible = |next: usize| next > w && next + window <= length + 1;

    let mut samples = Vec::new();
    let mut frames = 0u64;
    while samples.len() < count && frames < max_frames {
        let n = FRAME_BATCH.min(max_frames - frames);
        let batch: Vec<Vec<TrainingSample>> = (frames..frames + n)
            .into_par_iter()
            .map_init(Scratch::default, |scratch, frame| {
                let mut rng = stream_rng(seed, &[domain::EP_COLLECTION, frame]);
                let ch = llr_vector(g.num_vns(), &params, &mut rng);
                let res = decoder.decode_with(&ch, &plan, scratch)?;
                let mut found = Vec::new();
                for t in 1..length {
                    let next = t + 1;
                    if !res.stage_errors[t - 1] || !eligible(next) {
                        continue;
                    }
                    let wg = decoder.window(next);
                    found.push(TrainingSample {
                        channel: ch[wg.vn_range()].to_vec(),
                        boundary: res.decisions[wg.boundary_range()].to_vec(),
                        ebno_db,
                        stage: next,
                        label: u8::from(res.stage_errors[next - 1]),
                    });
                }
                Ok(found)
            })
            .collect::<Result<_>>()?;
        frames += n;
        for s in batch.into_iter().flatten() {
            if samples.len() < count {
                samples.push(s);
            }
        }
    }
    Ok(EpCollection { samples, frames })
}
