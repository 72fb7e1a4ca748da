use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use super::{with_workers, Experiment, ExperimentConfig, SimMode, StopRule};
use crate::channel::{domain, llr_vector, stream_rng, ChannelParams};
use crate::decoder::{decode_window_with, ChainDecoder, ChainPlan, Scratch};
use crate::error::{Error, Result};

/// Frames per batch. Stopping is checked between batches only, and batch
/// boundaries do not depend on the worker count.
const CHAIN_BATCH: u64 = 8;
const WINDOW_BATCH: u64 = 256;

/// Which counter the stopping rule watches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopOn {
    BlockErrors,
    /// Stages whose predecessor failed.
    EpEvents,
}

/// Integer counters of one SNR point.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimPoint {
    pub ebno_db: f64,
    pub frames: u64,
    /// Stage decodings (window mode: one per frame).
    pub stages: u64,
    pub block_err: u64,
    pub frame_err: u64,
    /// Stages `t >= 2` whose stage `t - 1` failed.
    pub q1_events: u64,
    /// Of those, stages that failed as well.
    pub q1_pairs: u64,
    /// Block errors by stage index (`t - 1`).
    pub stage_err: Vec<u64>,
}

impl SimPoint {
    fn empty(ebno_db: f64, stages_per_frame: usize) -> Self {
        Self {
            ebno_db,
            stage_err: vec![0; stages_per_frame],
            ..Self::default()
        }
    }

    fn merge(&mut self, f: &FrameOutcome) {
        self.frames += 1;
        self.stages += f.errors.len() as u64;
        let errs = f.errors.iter().filter(|&&e| e).count() as u64;
        self.block_err += errs;
        self.frame_err += u64::from(errs > 0);
        for (c, &e) in self.stage_err.iter_mut().zip(&f.errors) {
            *c += u64::from(e);
        }
        if f.chained {
            for pair in f.errors.windows(2) {
                if pair[0] {
                    self.q1_events += 1;
                    self.q1_pairs += u64::from(pair[1]);
                }
            }
        }
    }

    pub fn bler(&self) -> f64 {
        ratio(self.block_err, self.stages)
    }

    pub fn fer(&self) -> f64 {
        ratio(self.frame_err, self.frames)
    }

    pub fn bler_ci(&self) -> f64 {
        wald_half_width(self.block_err, self.stages)
    }

    pub fn fer_ci(&self) -> f64 {
        wald_half_width(self.frame_err, self.frames)
    }

    /// Empirical EP probability; `None` without conditioning events.
    pub fn q1(&self) -> Option<f64> {
        (self.q1_events > 0).then(|| self.q1_pairs as f64 / self.q1_events as f64)
    }

    pub fn q1_ci(&self) -> f64 {
        wald_half_width(self.q1_pairs, self.q1_events)
    }
}

fn ratio(k: u64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        k as f64 / n as f64
    }
}

/// Normal-approximation 95% half-width `1.96 sqrt(p (1 - p) / n)`.
pub fn wald_half_width(successes: u64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let p = successes as f64 / trials as f64;
    1.96 * (p * (1.0 - p) / trials as f64).sqrt()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimResult {
    pub points: Vec<SimPoint>,
}

pub const CSV_HEADER: &str =
    "ebno_db,frames,stages,block_err,frame_err,bler,fer,bler_ci,fer_ci,q1,q1_events";

impl SimResult {
    /// Header plus one row per point; `q1` is `nan` without events.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for p in &self.points {
            let q1 = p.q1().map_or_else(|| "nan".to_string(), fmt_g6);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                fmt_g6(p.ebno_db),
                p.frames,
                p.stages,
                p.block_err,
                p.frame_err,
                fmt_g6(p.bler()),
                fmt_g6(p.fer()),
                fmt_g6(p.bler_ci()),
                fmt_g6(p.fer_ci()),
                q1,
                p.q1_events
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Six significant digits, printed like C's `%g`.
pub fn fmt_g6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Error flags of one frame.
struct FrameOutcome {
    errors: Vec<bool>,
    /// Whether consecutive stages count as EP pairs.
    chained: bool,
}

/// A configured Monte Carlo run over one decoder.
#[derive(Clone, Copy, Debug)]
pub struct Simulator<'a> {
    pub decoder: &'a ChainDecoder,
    pub plan: ChainPlan<'a>,
    pub mode: SimMode,
    pub window_stage: usize,
    pub seed: u64,
    pub workers: usize,
}

impl Simulator<'_> {
    fn stages_per_frame(&self) -> usize {
        match self.mode {
            SimMode::Window => 1,
            SimMode::Chain | SimMode::Independent => self.decoder.stages(),
        }
    }

    fn frame(&self, params: &ChannelParams, frame: u64, scratch: &mut Scratch) -> Result<FrameOutcome> {
        let snr_key = params.ebno_db.to_bits();
        let cfg = self.decoder.config();
        match self.mode {
            SimMode::Chain => {
                let g = self.decoder.graph();
                let mut rng = stream_rng(self.seed, &[domain::SIMULATION, snr_key, frame]);
                let ch = llr_vector(g.num_vns(), params, &mut rng);
                let res = self.decoder.decode_with(&ch, &self.plan, scratch)?;
                Ok(FrameOutcome {
                    errors: res.stage_errors,
                    chained: true,
                })
            }
            SimMode::Window => {
                let wg = self.decoder.window(self.window_stage);
                let mut rng = stream_rng(self.seed, &[domain::SIMULATION, snr_key, frame]);
                let ch = llr_vector(wg.num_vns(), params, &mut rng);
                let boundary = vec![cfg.llr_clip; wg.num_boundary()];
                let res = decode_window_with(wg, &ch, &boundary, self.plan.plain, self.plan.schedule, cfg, scratch)?;
                Ok(FrameOutcome {
                    errors: vec![res.block_error],
                    chained: false,
                })
            }
            SimMode::Independent => {
                let mut errors = Vec::with_capacity(self.decoder.stages());
                for t in 1..=self.decoder.stages() {
                    let wg = self.decoder.window(t);
                    let key = [domain::SIMULATION, snr_key, frame, t as u64];
                    let ch = llr_vector(wg.num_vns(), params, &mut stream_rng(self.seed, &key));
                    let boundary = vec![cfg.llr_clip; wg.num_boundary()];
                    let res = decode_window_with(wg, &ch, &boundary, self.plan.plain, self.plan.schedule, cfg, scratch)?;
                    // only the committed position counts, as in chain mode
                    let first = wg.first_vn();
                    let err = self.decoder.graph().vns_at(t).any(|v| res.decisions[v - first] <= 0.0);
                    errors.push(err);
                }
                Ok(FrameOutcome {
                    errors,
                    chained: true,
                })
            }
        }
    }

    /// Decodes frames at one SNR until `stop` is met.
    pub fn run_point(&self, ebno_db: f64, stop: &StopRule, on: StopOn) -> Result<SimPoint> {
        self.decoder.check_plan(&self.plan)?;
        let params = ChannelParams::new(ebno_db, self.decoder.graph().base().design_rate())?;
        let batch = match self.mode {
            SimMode::Window => WINDOW_BATCH,
            _ => CHAIN_BATCH,
        };
        let mut point = SimPoint::empty(ebno_db, self.stages_per_frame());
        with_workers(self.workers, || -> Result<()> {
            loop {
                let watched = match on {
                    StopOn::BlockErrors => point.block_err,
                    StopOn::EpEvents => point.q1_events,
                };
                if watched >= stop.min_errors || point.frames >= stop.max_frames {
                    return Ok(());
                }
                let first = point.frames;
                let n = batch.min(stop.max_frames - first);
                let outcomes: Vec<FrameOutcome> = (first..first + n)
                    .into_par_iter()
                    .map_init(Scratch::default, |scratch, frame| self.frame(&params, frame, scratch))
                    .collect::<Result<_>>()?;
                for f in &outcomes {
                    point.merge(f);
                }
            }
        })??;
        Ok(point)
    }

    pub fn run(&self, snr: &[f64], stop: &StopRule, on: StopOn) -> Result<SimResult> {
        let points = snr
            .iter()
            .map(|&s| self.run_point(s, stop, on))
            .collect::<Result<_>>()?;
        Ok(SimResult { points })
    }
}

/// BLER/FER sweep of the configured decoder, stopping on block errors.
pub fn simulate(config: &ExperimentConfig) -> Result<SimResult> {
    let exp = Experiment::load(config.clone())?;
    exp.simulator().run(&config.snr, &config.stop, StopOn::BlockErrors)
}

/// EP probability sweep: whole chains are decoded and every stage that
/// follows a failed stage is counted, stopping once `stop.min_errors`
/// such events are seen.
pub fn estimate_ep(config: &ExperimentConfig) -> Result<SimResult> {
    if config.mode == SimMode::Window {
        return Err(Error::Config(
            "EP estimation needs mode = \"chain\" or \"independent\"".into(),
        ));
    }
    let exp = Experiment::load(config.clone())?;
    exp.simulator().run(&config.snr, &config.stop, StopOn::EpEvents)
}
