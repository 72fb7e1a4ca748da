use super::UnrolledGraph;
use crate::decoder::{ScheduleMask, WeightSet};
use crate::error::{Error, Result};

/// Values recorded by [`forward`], indexed `[iter * edges + edge]` for
/// messages and `[iter * cns + cn]` for check-node summaries.
#[derive(Clone, Debug)]
pub struct Tape {
    graph_id: u64,
    iterations: usize,
    num_edges: usize,
    num_cns: usize,
    weights: Vec<f64>,
    damping: Option<Vec<f64>>,
    active: Option<Vec<bool>>,
    boundary: Vec<f64>,
    v2c: Vec<f64>,
    v2c_saturated: Vec<bool>,
    cn_min1: Vec<f64>,
    cn_min2: Vec<f64>,
    cn_arg1: Vec<u32>,
    cn_arg2: Vec<u32>,
    cn_negative: Vec<bool>,
    /// Weighted, clipped CN output before damping.
    c2v_new: Vec<f64>,
    c2v_saturated: Vec<bool>,
    /// CN output after damping / hold.
    c2v: Vec<f64>,
    decisions: Vec<f64>,
    decision_saturated: Vec<bool>,
}

impl Tape {
    pub fn decisions(&self) -> &[f64] {
        &self.decisions
    }

    pub fn graph_id(&self) -> u64 {
        self.graph_id
    }

    /// Summary of CN `c` at iteration `iter`: (min, second min, argmin input
    /// index, second argmin index, odd number of negative inputs).
    pub fn cn_record(&self, iter: usize, c: usize) -> (f64, f64, u32, u32, bool) {
        let i = iter * self.num_cns + c;
        (
            self.cn_min1[i],
            self.cn_min2[i],
            self.cn_arg1[i],
            self.cn_arg2[i],
            self.cn_negative[i],
        )
    }

    /// CN-to-VN message of `edge` after iteration `iter` (0-based).
    pub fn c2v(&self, iter: usize, edge: usize) -> f64 {
        self.c2v[iter * self.num_edges + edge]
    }

    pub fn v2c(&self, iter: usize, edge: usize) -> f64 {
        self.v2c[iter * self.num_edges + edge]
    }
}

/// Derivatives of a scalar loss, laid out like [`WeightSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet {
    pub weights: Vec<f64>,
    /// With respect to the damping factors themselves.
    pub damping: Option<Vec<f64>>,
    /// With respect to the logit of each damping factor.
    pub damping_raw: Option<Vec<f64>>,
    pub channel: Vec<f64>,
    pub boundary: Vec<f64>,
}

impl GradientSet {
    pub fn zeros_like(other: &GradientSet) -> Self {
        Self {
            weights: vec![0.0; other.weights.len()],
            damping: other.damping.as_ref().map(|d| vec![0.0; d.len()]),
            damping_raw: other.damping_raw.as_ref().map(|d| vec![0.0; d.len()]),
            channel: vec![0.0; other.channel.len()],
            boundary: vec![0.0; other.boundary.len()],
        }
    }

    /// Element-wise `self += other` over the parameter gradients.
    pub fn accumulate(&mut self, other: &GradientSet) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (mine, theirs) in [
            (&mut self.damping, &other.damping),
            (&mut self.damping_raw, &other.damping_raw),
        ] {
            if let (Some(a), Some(b)) = (mine.as_mut(), theirs.as_ref()) {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
            }
        }
    }
}

#[inline]
fn sgn(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Evaluates the network. Pruned nodes are skipped; decisions of pruned
/// VNs are `NaN`.
pub fn forward(
    g: &UnrolledGraph,
    weights: &WeightSet,
    schedule: Option<&ScheduleMask>,
    channel: &[f64],
    boundary: &[f64],
) -> Result<(Vec<f64>, Tape)> {
    let wg = g.window();
    let slots = wg.num_slots();
    if weights.iterations() != g.iterations() || weights.slots() != slots {
        return Err(Error::Dimension(format!(
            "weight set {} x {} for a {} x {slots} network",
            weights.iterations(),
            weights.slots(),
            g.iterations()
        )));
    }
    if let Some(mask) = schedule {
        if mask.iterations() != g.iterations() || mask.slots() != slots {
            return Err(Error::Dimension("schedule does not match the network".into()));
        }
    }
    if channel.len() != wg.num_vns() || boundary.len() != wg.num_boundary() {
        return Err(Error::Dimension(format!(
            "inputs {} + {} for {} VNs + {} boundary VNs",
            channel.len(),
            boundary.len(),
            wg.num_vns(),
            wg.num_boundary()
        )));
    }

    let clip = g.llr_clip();
    let (l, e_count, c_count) = (g.iterations(), wg.num_edges(), wg.num_cns());
    let mut tape = Tape {
        graph_id: g.id(),
        iterations: l,
        num_edges: e_count,
        num_cns: c_count,
        weights: weights.weights().to_vec(),
        damping: weights.damping().map(<[f64]>::to_vec),
        active: schedule.map(|m| m.cells().to_vec()),
        boundary: boundary.to_vec(),
        v2c: vec![0.0; l * e_count],
        v2c_saturated: vec![false; l * e_count],
        cn_min1: vec![f64::INFINITY; l * c_count],
        cn_min2: vec![f64::INFINITY; l * c_count],
        cn_arg1: vec![u32::MAX; l * c_count],
        cn_arg2: vec![u32::MAX; l * c_count],
        cn_negative: vec![false; l * c_count],
        c2v_new: vec![0.0; l * e_count],
        c2v_saturated: vec![false; l * e_count],
        c2v: vec![0.0; l * e_count],
        decisions: vec![f64::NAN; wg.num_vns()],
        decision_saturated: vec![false; wg.num_vns()],
    };

    for it in 0..l {
        let base = it * e_count;
        for v in 0..wg.num_vns() {
            let edges = wg.vn_edges(v);
            for (i, &e) in edges.iter().enumerate() {
                let e = e as usize;
                if !g.v2c_live(it, e) {
                    continue;
                }
                let mut sum = channel[v];
                if it > 0 {
                    for (j, &other) in edges.iter().enumerate() {
                        if j != i {
                            sum += tape.c2v[base - e_count + other as usize];
                        }
                    }
                }
                tape.v2c[base + e] = sum.clamp(-clip, clip);
                tape.v2c_saturated[base + e] = sum.abs() > clip;
            }
        }

        for c in 0..c_count {
            let range = wg.cn_edge_range(c);
            if !range.clone().any(|e| g.c2v_live(it, e)) {
                continue;
            }
            let slot = wg.cn_slot(c);
            let cell = it * slots + slot;
            let active = schedule.is_none_or(|m| m.is_active(it, slot));
            let ci = it * c_count + c;

            let (mut min1, mut min2) = (f64::INFINITY, f64::INFINITY);
            let (mut arg1, mut arg2) = (u32::MAX, u32::MAX);
            let mut negative = false;
            let inputs = range
                .clone()
                .map(|e| g.v2c_live(it, e).then(|| tape.v2c[base + e]))
                .chain(wg.cn_boundary(c).iter().map(|&b| Some(boundary[b as usize])));
            for (k, x) in inputs.enumerate() {
                // a pruned input feeds only the output excluding it
                let Some(x) = x else { continue };
                let a = x.abs();
                negative ^= x < 0.0;
                if a < min1 {
                    (min2, arg2) = (min1, arg1);
                    (min1, arg1) = (a, k as u32);
                } else if a < min2 {
                    (min2, arg2) = (a, k as u32);
                }
            }
            tape.cn_min1[ci] = min1;
            tape.cn_min2[ci] = min2;
            tape.cn_arg1[ci] = arg1;
            tape.cn_arg2[ci] = arg2;
            tape.cn_negative[ci] = negative;

            let w = weights.weight(it, slot);
            for (k, e) in range.enumerate() {
                let idx = base + e;
                if !g.c2v_live(it, e) {
                    continue;
                }
                let prev = if it > 0 { tape.c2v[idx - e_count] } else { 0.0 };
                if !active {
                    tape.c2v[idx] = prev;
                    continue;
                }
                let x = if g.v2c_live(it, e) { tape.v2c[idx] } else { 0.0 };
                let mag = if k as u32 == arg1 { min2 } else { min1 };
                // no other input: constant zero
                let mag = if mag.is_finite() { mag } else { 0.0 };
                let sign = if negative ^ (x < 0.0) { -1.0 } else { 1.0 };
                let raw = w * sign * mag;
                let out = raw.clamp(-clip, clip);
                tape.c2v_new[idx] = out;
                tape.c2v_saturated[idx] = raw.abs() > clip;
                tape.c2v[idx] = match weights.damping() {
                    Some(d) => {
                        let gamma = d[cell];
                        gamma * prev + (1.0 - gamma) * out
                    }
                    None => out,
                };
            }
        }
    }

    let last = (l - 1) * e_count;
    for v in 0..wg.num_vns() {
        if !g.decision_live(v) {
            continue;
        }
        let mut sum = channel[v];
        for &e in wg.vn_edges(v) {
            sum += tape.c2v[last + e as usize];
        }
        tape.decisions[v] = sum.clamp(-clip, clip);
        tape.decision_saturated[v] = sum.abs() > clip;
    }
    Ok((tape.decisions.clone(), tape))
}

/// Reverse pass. `upstream[v]` is d(loss)/d(decision of local VN `v`);
/// entries for pruned decisions are ignored.
///
/// The CN minimum routes its gradient to the recorded argmin among the
/// other inputs; sign factors are constants; saturated clips pass zero.
pub fn backward(g: &UnrolledGraph, tape: &Tape, upstream: &[f64]) -> Result<GradientSet> {
    if tape.graph_id != g.id() {
        return Err(Error::StaleTape(format!(
            "tape recorded on graph {} replayed on graph {}",
            tape.graph_id,
            g.id()
        )));
    }
    let wg = g.window();
    if upstream.len() != wg.num_vns() {
        return Err(Error::Dimension(format!(
            "{} upstream gradients for {} decisions",
            upstream.len(),
            wg.num_vns()
        )));
    }
    let (l, e_count, c_count) = (tape.iterations, tape.num_edges, tape.num_cns);
    let slots = wg.num_slots();
    let mut grad = GradientSet {
        weights: vec![0.0; l * slots],
        damping: tape.damping.as_ref().map(|_| vec![0.0; l * slots]),
        damping_raw: None,
        channel: vec![0.0; wg.num_vns()],
        boundary: vec![0.0; wg.num_boundary()],
    };

    // d loss / d c2v(it, e), for the iteration being processed
    let mut g_c2v = vec![0.0; e_count];
    for v in 0..wg.num_vns() {
        if !g.decision_live(v) || tape.decision_saturated[v] {
            continue;
        }
        let gd = upstream[v];
        grad.channel[v] += gd;
        for &e in wg.vn_edges(v) {
            g_c2v[e as usize] += gd;
        }
    }

    let mut g_v2c = vec![0.0; e_count];
    let mut g_prev = vec![0.0; e_count];
    for it in (0..l).rev() {
        let base = it * e_count;
        g_v2c.iter_mut().for_each(|x| *x = 0.0);
        g_prev.iter_mut().for_each(|x| *x = 0.0);

        for c in 0..c_count {
            let range = wg.cn_edge_range(c);
            let slot = wg.cn_slot(c);
            let cell = it * slots + slot;
            let active = tape.active.as_ref().is_none_or(|a| a[cell]);
            let ci = it * c_count + c;
            let n_internal = range.len();
            let w = tape.weights[cell];
            for (k, e) in range.clone().enumerate() {
                let gy = g_c2v[e];
                if gy == 0.0 || !g.c2v_live(it, e) {
                    continue;
                }
                let idx = base + e;
                if !active {
                    g_prev[e] += gy;
                    continue;
                }
                let g_out = match &tape.damping {
                    Some(d) => {
                        let gamma = d[cell];
                        let prev = if it > 0 { tape.c2v[idx - e_count] } else { 0.0 };
                        g_prev[e] += gamma * gy;
                        if let Some(gd) = grad.damping.as_mut() {
                            gd[cell] += (prev - tape.c2v_new[idx]) * gy;
                        }
                        (1.0 - gamma) * gy
                    }
                    None => gy,
                };
                if tape.c2v_saturated[idx] {
                    continue;
                }
                let (arg1, arg2) = (tape.cn_arg1[ci], tape.cn_arg2[ci]);
                let src = if k as u32 == arg1 { arg2 } else { arg1 };
                if src == u32::MAX {
                    // no other input: constant zero output
                    continue;
                }
                let x_self = if g.v2c_live(it, e) { tape.v2c[idx] } else { 0.0 };
                let sign = if tape.cn_negative[ci] ^ (x_self < 0.0) { -1.0 } else { 1.0 };
                let mag = if k as u32 == arg1 { tape.cn_min2[ci] } else { tape.cn_min1[ci] };
                grad.weights[cell] += g_out * sign * mag;
                let g_mag = g_out * w * sign;
                let src = src as usize;
                if src < n_internal {
                    let e_src = range.start + src;
                    g_v2c[e_src] += g_mag * sgn(tape.v2c[base + e_src]);
                } else {
                    let b = wg.cn_boundary(c)[src - n_internal] as usize;
                    grad.boundary[b] += g_mag * sgn(tape.boundary[b]);
                }
            }
        }

        for v in 0..wg.num_vns() {
            let edges = wg.vn_edges(v);
            for (i, &e) in edges.iter().enumerate() {
                let e = e as usize;
                let gv = g_v2c[e];
                if gv == 0.0 || tape.v2c_saturated[base + e] {
                    continue;
                }
                grad.channel[v] += gv;
                if it > 0 {
                    for (j, &other) in edges.iter().enumerate() {
                        if j != i {
                            g_prev[other as usize] += gv;
                        }
                    }
                }
            }
        }
        std::mem::swap(&mut g_c2v, &mut g_prev);
    }

    if let (Some(gd), Some(d)) = (grad.damping.as_ref(), tape.damping.as_ref()) {
        grad.damping_raw = Some(
            gd.iter()
                .zip(d)
                .map(|(g, gamma)| g * gamma * (1.0 - gamma))
                .collect(),
        );
    }
    Ok(grad)
}
