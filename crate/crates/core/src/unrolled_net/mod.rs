//! The iteration-unrolled message graph of one window configuration.
//!
//! Each iteration contributes one layer of VN-to-CN message nodes and one
//! layer of CN-to-VN message nodes (one node per internal window edge),
//! followed by a decision node per VN. Nodes that cannot reach a target
//! decision are pruned; a weight slot survives while any CN-to-VN node
//! referencing it is live. [`forward`] records a [`Tape`] from which
//! [`backward`] computes exact subgradients with respect to the check-node
//! weights and damping factors.

mod reach;
mod tape;
#[cfg(test)]
mod net_tests;

pub use reach::{dump_counts, normalize_counts, reach_counts, NormalizedCounts, ReachCounts};
pub use tape::{backward, forward, GradientSet, Tape};

use std::sync::atomic::{AtomicU64, Ordering};

use crate::code_graph::{LiftedTannerGraph, WindowView};
use crate::decoder::{DecoderConfig, WindowGraph};
use crate::error::{Error, Result};

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

fn next_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    Input,
    BoundaryInput,
    VariableToCheck,
    CheckToVariable,
    Decision,
}

#[derive(Clone, Debug)]
pub struct UnrolledGraph {
    id: u64,
    window: WindowGraph,
    iterations: usize,
    llr_clip: f64,
    with_boundary: bool,
    /// `None` until pruned: every VN is a decision target.
    target_size: Option<usize>,
    v2c_live: Vec<bool>,
    c2v_live: Vec<bool>,
    decision_live: Vec<bool>,
    input_live: Vec<bool>,
    boundary_live: Vec<bool>,
}

/// Builds the unrolled network of `view`. `with_boundary` must agree with the
/// view: the first window configuration (stage 1) has no boundary inputs;
/// later stages carry `w` positions of frozen-LLR inputs.
pub fn unroll(
    graph: &LiftedTannerGraph,
    view: &WindowView,
    config: &DecoderConfig,
    with_boundary: bool,
) -> Result<UnrolledGraph> {
    config.validate()?;
    if view.window != config.window {
        return Err(Error::Dimension(format!(
            "view window {} vs decoder window {}",
            view.window, config.window
        )));
    }
    let has_boundary = !view.boundary_positions().is_empty();
    if has_boundary != with_boundary {
        return Err(Error::Config(format!(
            "stage {} {} boundary inputs but with_boundary = {with_boundary}",
            view.stage,
            if has_boundary { "has" } else { "has no" }
        )));
    }
    let window = WindowGraph::new(graph, view, config.target);
    let e = window.num_edges();
    let l = config.max_iters;
    let mut g = UnrolledGraph {
        id: next_id(),
        iterations: l,
        llr_clip: config.llr_clip,
        with_boundary,
        target_size: None,
        v2c_live: vec![true; l * e],
        c2v_live: vec![true; l * e],
        decision_live: vec![true; window.num_vns()],
        input_live: vec![true; window.num_vns()],
        boundary_live: vec![true; window.num_boundary()],
        window,
    };
    let all: Vec<bool> = vec![true; g.window.num_vns()];
    g.mark_live(&all);
    Ok(g)
}

/// Prunes every node without a path to a decision of the first `t_size`
/// positions. Returns the pruned graph (with a fresh identity, so tapes of
/// the unpruned graph are rejected) and its surviving weight-slot count.
pub fn prune_to_targets(g: &UnrolledGraph, t_size: usize) -> Result<(UnrolledGraph, usize)> {
    if t_size == 0 || t_size > g.window.view().window {
        return Err(Error::InvalidInput(format!(
            "target size {t_size} outside 1..={}",
            g.window.view().window
        )));
    }
    let mut out = g.clone();
    out.id = next_id();
    out.target_size = Some(t_size);
    let targets = out.window.view().target_positions(t_size);
    let is_target: Vec<bool> = (0..out.window.num_vns())
        .map(|v| targets.contains(&out.window.vn_position(v)))
        .collect();
    out.mark_live(&is_target);
    let surviving = out.surviving_slots().iter().filter(|&&s| s).count();
    Ok((out, surviving))
}

impl UnrolledGraph {
    /// Backward reachability from the decision nodes flagged in `targets`.
    ///
    /// A CN-to-VN node also depends on its own previous-iteration value
    /// (damping and inactive cells), so that edge is part of the closure.
    fn mark_live(&mut self, targets: &[bool]) {
        let wg = &self.window;
        let e_count = wg.num_edges();
        let l = self.iterations;
        self.v2c_live.iter_mut().for_each(|x| *x = false);
        self.c2v_live.iter_mut().for_each(|x| *x = false);
        self.input_live.iter_mut().for_each(|x| *x = false);
        self.boundary_live.iter_mut().for_each(|x| *x = false);
        self.decision_live.copy_from_slice(targets);

        for v in 0..wg.num_vns() {
            if targets[v] {
                self.input_live[v] = true;
                for &e in wg.vn_edges(v) {
                    self.c2v_live[(l - 1) * e_count + e as usize] = true;
                }
            }
        }
        for it in (0..l).rev() {
            let base = it * e_count;
            // c2v(it) -> v2c(it) of the other inputs of the CN, boundary, c2v(it - 1)
            for c in 0..wg.num_cns() {
                let range = wg.cn_edge_range(c);
                let live_out: Vec<usize> = range.clone().filter(|&e| self.c2v_live[base + e]).collect();
                if live_out.is_empty() {
                    continue;
                }
                for &e in &live_out {
                    if it > 0 {
                        self.c2v_live[base - e_count + e] = true;
                    }
                }
                for e in range {
                    if live_out.iter().any(|&o| o != e) {
                        self.v2c_live[base + e] = true;
                    }
                }
                for &b in wg.cn_boundary(c) {
                    self.boundary_live[b as usize] = true;
                }
            }
            // v2c(it) -> channel input, c2v(it - 1) of the other edges of the VN
            for v in 0..wg.num_vns() {
                let edges = wg.vn_edges(v);
                for (i, &e) in edges.iter().enumerate() {
                    if !self.v2c_live[base + e as usize] {
                        continue;
                    }
                    self.input_live[v] = true;
                    if it > 0 {
                        for (j, &other) in edges.iter().enumerate() {
                            if j != i {
                                self.c2v_live[base - e_count + other as usize] = true;
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn window(&self) -> &WindowGraph {
        &self.window
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn llr_clip(&self) -> f64 {
        self.llr_clip
    }

    pub fn with_boundary(&self) -> bool {
        self.with_boundary
    }

    pub fn target_size(&self) -> Option<usize> {
        self.target_size
    }

    pub fn num_slots(&self) -> usize {
        self.window.num_slots()
    }

    #[inline]
    pub fn v2c_live(&self, iter: usize, edge: usize) -> bool {
        self.v2c_live[iter * self.window.num_edges() + edge]
    }

    #[inline]
    pub fn c2v_live(&self, iter: usize, edge: usize) -> bool {
        self.c2v_live[iter * self.window.num_edges() + edge]
    }

    pub fn decision_live(&self, v: usize) -> bool {
        self.decision_live[v]
    }

    /// Local VN indices whose decisions are part of the loss.
    pub fn loss_targets(&self) -> Vec<usize> {
        (0..self.window.num_vns()).filter(|&v| self.decision_live[v]).collect()
    }

    /// Row-major `iterations x slots` survival map.
    pub fn surviving_slots(&self) -> Vec<bool> {
        let wg = &self.window;
        let slots = wg.num_slots();
        let mut out = vec![false; self.iterations * slots];
        for it in 0..self.iterations {
            for c in 0..wg.num_cns() {
                if wg.cn_edge_range(c).any(|e| self.c2v_live(it, e)) {
                    out[it * slots + wg.cn_slot(c)] = true;
                }
            }
        }
        out
    }

    /// Node counts per layer in topological order.
    pub fn layer_sizes(&self) -> Vec<(LayerKind, usize)> {
        let wg = &self.window;
        let mut out = vec![(LayerKind::Input, wg.num_vns())];
        if self.with_boundary {
            out.push((LayerKind::BoundaryInput, wg.num_boundary()));
        }
        for _ in 0..self.iterations {
            out.push((LayerKind::VariableToCheck, wg.num_edges()));
            out.push((LayerKind::CheckToVariable, wg.num_edges()));
        }
        out.push((LayerKind::Decision, wg.num_vns()));
        out
    }

    /// Live node counts per layer, same order as [`Self::layer_sizes`].
    pub fn live_layer_sizes(&self) -> Vec<(LayerKind, usize)> {
        let count = |v: &[bool]| v.iter().filter(|&&x| x).count();
        let e = self.window.num_edges();
        let mut out = vec![(LayerKind::Input, count(&self.input_live))];
        if self.with_boundary {
            out.push((LayerKind::BoundaryInput, count(&self.boundary_live)));
        }
        for it in 0..self.iterations {
            out.push((LayerKind::VariableToCheck, count(&self.v2c_live[it * e..(it + 1) * e])));
            out.push((LayerKind::CheckToVariable, count(&self.c2v_live[it * e..(it + 1) * e])));
        }
        out.push((LayerKind::Decision, count(&self.decision_live)));
        out
    }

    /// Text bitmap of surviving slots (`#` survives, `.` pruned), one line
    /// per iteration.
    pub fn slot_bitmap(&self) -> String {
        let slots = self.num_slots();
        let surv = self.surviving_slots();
        let mut out = String::new();
        for row in surv.chunks(slots) {
            out.extend(row.iter().map(|&s| if s { '#' } else { '.' }));
            out.push('\n');
        }
        out
    }
}
