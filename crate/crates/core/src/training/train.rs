use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::loss::{logistic, soft_bler_loss_grad};
use super::{
    collect_error_samples, draw_samples, normalized_loss, validation_errors, Adam, StageRecord,
    TrainingConfig, TrainingSample,
};
use crate::channel::{domain, stream_rng};
use crate::code_graph::{window_view, LiftedTannerGraph};
use crate::decoder::{DecoderConfig, Role, WeightSet, WindowGraph};
use crate::error::{Error, Result};
use crate::unrolled_net::{backward, forward, prune_to_targets, unroll, UnrolledGraph};

/// The first window configuration of a code, ready for training.
#[derive(Clone, Debug)]
pub struct WindowTrainer {
    graph: Arc<LiftedTannerGraph>,
    config: DecoderConfig,
    rate: f64,
    code_id: String,
    window: WindowGraph,
    net: UnrolledGraph,
}

impl WindowTrainer {
    pub fn new(
        graph: Arc<LiftedTannerGraph>,
        config: DecoderConfig,
        code_id: impl Into<String>,
    ) -> Result<Self> {
        config.validate()?;
        let base = graph.base();
        let view = window_view(base.length(), base.w(), 1, config.window)?;
        let full = unroll(&graph, &view, &config, false)?;
        let (net, _) = prune_to_targets(&full, config.target)?;
        Ok(Self {
            rate: base.design_rate(),
            window: WindowGraph::new(&graph, &view, config.target),
            graph,
            config,
            code_id: code_id.into(),
            net,
        })
    }

    pub fn graph(&self) -> &Arc<LiftedTannerGraph> {
        &self.graph
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn code_id(&self) -> &str {
        &self.code_id
    }

    pub fn window(&self) -> &WindowGraph {
        &self.window
    }

    /// The pruned unrolled network of the first window.
    pub fn network(&self) -> &UnrolledGraph {
        &self.net
    }

    pub fn initial_weights(&self, value: f64, damped: bool) -> WeightSet {
        let slots = self.window.num_slots();
        let n = self.config.max_iters * slots;
        let damping = damped.then(|| vec![0.5; n]);
        let mut ws = WeightSet::from_parts(
            self.config.max_iters,
            self.config.window,
            self.graph.base().n_c(),
            vec![value; n],
            damping,
            Role::Plain,
        )
        .expect("dimensions are consistent");
        ws.code_id = self.code_id.clone();
        ws
    }
}

/// Mean soft loss of a batch and its mean gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchGradient {
    pub loss: f64,
    pub weights: Vec<f64>,
    /// With respect to the damping logits.
    pub damping_raw: Option<Vec<f64>>,
}

/// Forward and backward over every sample (in parallel), reduced in sample
/// order so the result is independent of scheduling.
pub fn batch_gradient<'a, F>(
    weights: &WeightSet,
    samples: &[TrainingSample],
    beta: f64,
    net_for: F,
) -> Result<BatchGradient>
where
    F: Fn(&TrainingSample) -> &'a UnrolledGraph + Sync,
{
    if samples.is_empty() {
        return Err(Error::InvalidInput("empty training batch".into()));
    }
    let per_sample: Vec<(f64, Vec<f64>, Option<Vec<f64>>)> = samples
        .par_iter()
        .map(|s| {
            let net = net_for(s);
            let (dec, tape) = forward(net, weights, None, &s.channel, &s.boundary)?;
            let n_target = net.loss_targets().len();
            let (loss, upstream) = soft_bler_loss_grad(&dec, n_target, beta);
            let g = backward(net, &tape, &upstream)?;
            Ok((loss, g.weights, g.damping_raw))
        })
        .collect::<Result<_>>()?;
    let n = samples.len() as f64;
    let mut out = BatchGradient {
        loss: 0.0,
        weights: vec![0.0; weights.weights().len()],
        damping_raw: weights.damping().map(|d| vec![0.0; d.len()]),
    };
    for (loss, gw, gd) in &per_sample {
        out.loss += loss;
        for (a, b) in out.weights.iter_mut().zip(gw) {
            *a += b;
        }
        if let (Some(a), Some(b)) = (out.damping_raw.as_mut(), gd.as_ref()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
    out.loss /= n;
    out.weights.iter_mut().for_each(|x| *x /= n);
    if let Some(d) = out.damping_raw.as_mut() {
        d.iter_mut().for_each(|x| *x /= n);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct TrainingOutcome {
    pub weights: WeightSet,
    pub records: Vec<StageRecord>,
    pub best_stage: usize,
}

/// Trains CN weights on the first window. Returns the best set by
/// validation score (stage 0 is the initial set).
pub fn train_plain(
    tr: &WindowTrainer,
    cfg: &TrainingConfig,
    on_stage: impl FnMut(&StageRecord),
) -> Result<TrainingOutcome> {
    train_stages(tr, cfg, false, on_stage)
}

/// Trains CN weights and damping factors `sigmoid(raw)` jointly, with an L1
/// pull `l1 * sum |1 - gamma|` toward 1.
pub fn train_damped(
    tr: &WindowTrainer,
    cfg: &TrainingConfig,
    on_stage: impl FnMut(&StageRecord),
) -> Result<TrainingOutcome> {
    train_stages(tr, cfg, true, on_stage)
}

fn weights_from_params(template: &WeightSet, params: &[f64], damped: bool) -> WeightSet {
    let n = template.weights().len();
    let mut ws = template.clone();
    ws.weights_mut().copy_from_slice(&params[..n]);
    if damped {
        for (d, &raw) in ws.damping_mut().expect("damped set").iter_mut().zip(&params[n..]) {
            *d = logistic(raw);
        }
    }
    ws
}

fn validate_all(tr: &WindowTrainer, ws: &WeightSet, cfg: &TrainingConfig, stage: usize) -> Result<Vec<u64>> {
    cfg.snr_points
        .iter()
        .enumerate()
        .map(|(i, &snr)| {
            validation_errors(
                tr,
                ws,
                snr,
                cfg.validation_samples_per_point,
                cfg.seed,
                &[domain::VALIDATION, stage as u64, i as u64],
            )
        })
        .collect()
}

fn train_stages(
    tr: &WindowTrainer,
    cfg: &TrainingConfig,
    damped: bool,
    mut on_stage: impl FnMut(&StageRecord),
) -> Result<TrainingOutcome> {
    cfg.validate()?;
    let mut template = tr.initial_weights(cfg.initial_weight, damped);
    template.provenance = format!(
        "{} seed={} stages={} sessions={} errors_per_point={} snr={:?}",
        if damped { "train-damped" } else { "train" },
        cfg.seed,
        cfg.stages,
        cfg.sessions_per_stage,
        cfg.errors_per_point,
        cfg.snr_points
    );
    if cfg.stages == 0 {
        return Ok(TrainingOutcome {
            weights: template,
            records: Vec::new(),
            best_stage: 0,
        });
    }
    let n = template.weights().len();
    let mut params = template.weights().to_vec();
    if damped {
        params.extend(std::iter::repeat_n(0.0, n));
    }
    let mut opt = Adam::new(cfg.optimizer, params.len());

    let baselines = validate_all(tr, &template, cfg, 0)?;
    let p = cfg.snr_points.len();
    let score_of = |losses: &[u64]| -> Result<(f64, f64)> {
        let norm = normalized_loss(losses, &baselines).map(|x| x.value);
        if cfg.normalized_scoring {
            let v = norm?;
            Ok((v, v))
        } else {
            Ok((norm.unwrap_or(f64::NAN), losses.iter().sum::<u64>() as f64))
        }
    };
    let (norm0, score0) = score_of(&baselines)?;
    let mut best = template.clone();
    let mut best_score = score0;
    let mut best_stage = 0;
    let first = StageRecord {
        stage: 0,
        losses: baselines.clone(),
        normalized: norm0,
        score: score0,
        is_best: true,
        acceptance: Vec::new(),
        snapshot: Some(template.clone()),
    };
    on_stage(&first);
    let mut records = vec![first];

    for stage in 1..=cfg.stages {
        let mut accepted = vec![0.0; p];
        for session in 0..cfg.sessions_per_stage {
            let ws = weights_from_params(&template, &params, damped);
            let mut batch = Vec::with_capacity(p * cfg.errors_per_point);
            for (i, &snr) in cfg.snr_points.iter().enumerate() {
                let key = |d: u64| [d, stage as u64, session as u64, i as u64];
                let col = if cfg.active_collection {
                    collect_error_samples(
                        tr,
                        &ws,
                        snr,
                        cfg.errors_per_point,
                        cfg.seed,
                        &key(domain::ACTIVE_COLLECTION),
                        cfg.acceptance_floor,
                    )?
                } else {
                    draw_samples(tr, &ws, snr, cfg.errors_per_point, cfg.seed, &key(domain::TRAINING_BATCH))?
                };
                accepted[i] += col.acceptance_rate() / cfg.sessions_per_stage as f64;
                batch.extend(col.samples);
            }
            let g = batch_gradient(&ws, &batch, cfg.sharpness, |_| tr.network())?;
            let mut grad = g.weights;
            if let Some(mut gd) = g.damping_raw {
                for (d, &raw) in gd.iter_mut().zip(&params[n..]) {
                    let gamma = logistic(raw);
                    // d/draw of l1 * (1 - gamma)
                    *d -= cfg.l1 * gamma * (1.0 - gamma);
                }
                grad.extend(gd);
            }
            opt.step(&mut params, &grad);
        }

        let ws = weights_from_params(&template, &params, damped);
        let losses = validate_all(tr, &ws, cfg, stage)?;
        let (normalized, score) = score_of(&losses)?;
        let is_best = score < best_score;
        if is_best {
            best = ws.clone();
            best_score = score;
            best_stage = stage;
        }
        let rec = StageRecord {
            stage,
            losses,
            normalized,
            score,
            is_best,
            acceptance: accepted,
            snapshot: is_best.then_some(ws),
        };
        on_stage(&rec);
        records.push(rec);
    }
    best.provenance = format!("{} best_stage={best_stage}", template.provenance);
    Ok(TrainingOutcome {
        weights: best,
        records,
        best_stage,
    })
}

/// CSV log with columns `stage, loss_<snr>..., normalized, is_best`.
pub fn records_to_csv(records: &[StageRecord], snr_points: &[f64]) -> String {
    let mut out = String::from("stage");
    for s in snr_points {
        let _ = write!(out, ",loss_{s}");
    }
    out.push_str(",normalized,is_best\n");
    for r in records {
        let _ = write!(out, "{}", r.stage);
        for l in &r.losses {
            let _ = write!(out, ",{l}");
        }
        let _ = writeln!(out, ",{:.6},{}", r.normalized, u8::from(r.is_best));
    }
    out
}

/// Fine-tunes `plain` on error-propagation samples for `cfg.epochs` passes
/// of shuffled mini-batches. Each sample is evaluated on the pruned network
/// of the window it came from.
pub fn train_breakwater(
    graph: &Arc<LiftedTannerGraph>,
    config: &DecoderConfig,
    samples: &[TrainingSample],
    plain: &WeightSet,
    cfg: &TrainingConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<WeightSet> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::InvalidInput("no breakwater samples".into()));
    }
    if plain.damping().is_some() {
        return Err(Error::Config(
            "breakwater training starts from an undamped plain set".into(),
        ));
    }
    plain.check_dims(config, graph.base().n_c())?;
    let base = graph.base();
    let mut nets: BTreeMap<usize, UnrolledGraph> = BTreeMap::new();
    for s in samples {
        if nets.contains_key(&s.stage) {
            continue;
        }
        let view = window_view(base.length(), base.w(), s.stage, config.window)?;
        let full = unroll(graph, &view, config, s.stage > 1)?;
        let (net, _) = prune_to_targets(&full, config.target)?;
        if s.channel.len() != net.window().num_vns() || s.boundary.len() != net.window().num_boundary() {
            return Err(Error::Dimension(format!(
                "sample for stage {} has {} + {} inputs, window needs {} + {}",
                s.stage,
                s.channel.len(),
                s.boundary.len(),
                net.window().num_vns(),
                net.window().num_boundary()
            )));
        }
        nets.insert(s.stage, net);
    }

    let mut ws = plain.clone();
    ws.role = Role::Breakwater;
    ws.provenance = format!(
        "train-breakwater seed={} epochs={} samples={} batch={}",
        cfg.seed,
        cfg.epochs,
        samples.len(),
        cfg.batch_size
    );
    let mut params = ws.weights().to_vec();
    let mut opt = Adam::new(cfg.optimizer, params.len());
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for epoch in 0..cfg.epochs {
        let mut rng = stream_rng(cfg.seed, &[domain::SHUFFLE, epoch as u64]);
        order.sort_unstable();
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            ws.weights_mut().copy_from_slice(&params);
            let batch: Vec<TrainingSample> = chunk.iter().map(|&i| samples[i].clone()).collect();
            let g = batch_gradient(&ws, &batch, cfg.sharpness, |s| &nets[&s.stage])?;
            epoch_loss += g.loss * batch.len() as f64;
            opt.step(&mut params, &g.weights);
        }
        on_epoch(epoch + 1, epoch_loss / samples.len() as f64);
    }
    ws.weights_mut().copy_from_slice(&params);
    Ok(ws)
}
