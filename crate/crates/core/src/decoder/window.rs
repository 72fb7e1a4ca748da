use super::{DecoderConfig, ScheduleMask, WeightSet, WindowGraph};
use crate::error::{Error, Result};

/// Outcome of one window stage.
#[derive(Clone, Debug, PartialEq)]
pub struct StageResult {
    /// Decision LLRs of all in-window VNs (local order).
    pub decisions: Vec<f64>,
    /// Any target decision `<= 0`.
    pub block_error: bool,
    pub iterations: usize,
}

impl StageResult {
    /// Hard decisions of the target VNs (`1` where the decision LLR is `<= 0`).
    pub fn target_bits(&self, graph: &WindowGraph) -> Vec<u8> {
        graph
            .targets()
            .iter()
            .map(|&v| u8::from(self.decisions[v] <= 0.0))
            .collect()
    }
}

/// Reusable message buffers for [`decode_window_with`].
#[derive(Clone, Debug, Default)]
pub struct Scratch {
    v2c: Vec<f64>,
    c2v: Vec<f64>,
}

/// Runs the (optionally damped) neural min-sum decoder on one window.
///
/// `channel` holds the LLRs of the in-window VNs and `boundary` the frozen
/// decision LLRs of the boundary VNs, both in local order. `schedule = None`
/// means every cell is active.
pub fn decode_window(
    graph: &WindowGraph,
    channel: &[f64],
    boundary: &[f64],
    weights: &WeightSet,
    schedule: Option<&ScheduleMask>,
    config: &DecoderConfig,
) -> Result<StageResult> {
    decode_window_with(graph, channel, boundary, weights, schedule, config, &mut Scratch::default())
}

pub fn decode_window_with(
    graph: &WindowGraph,
    channel: &[f64],
    boundary: &[f64],
    weights: &WeightSet,
    schedule: Option<&ScheduleMask>,
    config: &DecoderConfig,
    scratch: &mut Scratch,
) -> Result<StageResult> {
    check_inputs(graph, channel, boundary, weights, schedule, config)?;
    let clip = config.llr_clip;
    let n_edges = graph.num_edges();
    let slots = graph.num_slots();
    scratch.v2c.clear();
    scratch.v2c.resize(n_edges, 0.0);
    scratch.c2v.clear();
    scratch.c2v.resize(n_edges, 0.0);
    let (v2c, c2v) = (&mut scratch.v2c, &mut scratch.c2v);
    let damping = weights.damping();

    for iter in 0..config.max_iters {
        for v in 0..graph.num_vns() {
            let edges = graph.vn_edges(v);
            for (i, &e) in edges.iter().enumerate() {
                let mut sum = channel[v];
                for (j, &other) in edges.iter().enumerate() {
                    if j != i {
                        sum += c2v[other as usize];
                    }
                }
                v2c[e as usize] = sum.clamp(-clip, clip);
            }
        }

        for c in 0..graph.num_cns() {
            let slot = graph.cn_slot(c);
            if let Some(mask) = schedule {
                if !mask.is_active(iter, slot) {
                    continue;
                }
            }
            let weight = weights.weight(iter, slot);
            let gamma = damping.map(|d| d[iter * slots + slot]);
            let range = graph.cn_edge_range(c);
            let bnd = graph.cn_boundary(c);

            let mut min1 = f64::INFINITY;
            let mut min2 = f64::INFINITY;
            let mut idx1 = usize::MAX;
            let mut negative = false;
            let inputs = range
                .clone()
                .map(|e| v2c[e])
                .chain(bnd.iter().map(|&b| boundary[b as usize]));
            for (k, x) in inputs.enumerate() {
                let a = x.abs();
                negative ^= x < 0.0;
                if a < min1 {
                    min2 = min1;
                    min1 = a;
                    idx1 = k;
                } else if a < min2 {
                    min2 = a;
                }
            }

            for (k, e) in range.enumerate() {
                let x = v2c[e];
                let mag = if k == idx1 {
                    if min2.is_finite() { min2 } else { 0.0 }
                } else {
                    min1
                };
                let sign = if negative ^ (x < 0.0) { -1.0 } else { 1.0 };
                let out = (weight * sign * mag).clamp(-clip, clip);
                c2v[e] = match gamma {
                    Some(g) => g * c2v[e] + (1.0 - g) * out,
                    None => out,
                };
            }
        }
    }

    let mut decisions = Vec::with_capacity(graph.num_vns());
    for v in 0..graph.num_vns() {
        let mut sum = channel[v];
        for &e in graph.vn_edges(v) {
            sum += c2v[e as usize];
        }
        decisions.push(sum.clamp(-clip, clip));
    }
    let block_error = graph.targets().iter().any(|&v| decisions[v] <= 0.0);
    Ok(StageResult {
        decisions,
        block_error,
        iterations: config.max_iters,
    })
}

fn check_inputs(
    graph: &WindowGraph,
    channel: &[f64],
    boundary: &[f64],
    weights: &WeightSet,
    schedule: Option<&ScheduleMask>,
    config: &DecoderConfig,
) -> Result<()> {
    weights.check_dims(config, graph.n_c())?;
    if weights.window() != graph.view().window {
        return Err(Error::Dimension(format!(
            "weight set window {} vs view window {}",
            weights.window(),
            graph.view().window
        )));
    }
    if let Some(mask) = schedule {
        mask.check_dims(config, graph.n_c())?;
    }
    if channel.len() != graph.num_vns() {
        return Err(Error::Dimension(format!(
            "{} channel LLRs for {} window VNs",
            channel.len(),
            graph.num_vns()
        )));
    }
    if boundary.len() != graph.num_boundary() {
        return Err(Error::Dimension(format!(
            "{} boundary LLRs for {} boundary VNs",
            boundary.len(),
            graph.num_boundary()
        )));
    }
    Ok(())
}
