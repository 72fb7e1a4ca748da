use std::fmt::Write as _;

use crate::code_graph::{lift, CoupledBaseMatrix, WindowView};
use crate::decoder::WindowGraph;
use crate::error::{Error, Result};

/// Walk counts `N[l][C]` from each CN slot at iteration `l` to the target
/// decisions, row-major `iterations x slots`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReachCounts {
    pub iterations: usize,
    pub slots: usize,
    pub counts: Vec<u128>,
}

impl ReachCounts {
    /// Count of slot `slot` at 1-based iteration `iter`.
    pub fn get(&self, iter: usize, slot: usize) -> u128 {
        self.counts[(iter - 1) * self.slots + slot]
    }

    pub fn row(&self, iter: usize) -> &[u128] {
        &self.counts[(iter - 1) * self.slots..iter * self.slots]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedCounts {
    pub iterations: usize,
    pub slots: usize,
    pub values: Vec<f64>,
    /// Rows with no walk at all (left as zeros).
    pub zero_rows: Vec<bool>,
}

impl NormalizedCounts {
    pub fn get(&self, iter: usize, slot: usize) -> f64 {
        self.values[(iter - 1) * self.slots + slot]
    }
}

/// Counts walks in the unrolled protograph of `view` (lifting factor 1).
///
/// A message leaving a CN excludes the edge it arrived on; a VN forwards to
/// every one of its CNs, including the one it heard from. Parallel edges
/// count separately.
pub fn reach_counts(
    base: &CoupledBaseMatrix,
    view: &WindowView,
    iterations: usize,
    target_size: usize,
) -> Result<ReachCounts> {
    if iterations == 0 {
        return Err(Error::InvalidInput("at least one iteration is needed".into()));
    }
    if target_size == 0 || target_size > view.window {
        return Err(Error::InvalidInput(format!(
            "target size {target_size} outside 1..={}",
            view.window
        )));
    }
    let proto = lift(base, 1, 0)?;
    let wg = WindowGraph::new(&proto, view, target_size);
    let e_count = wg.num_edges();
    let slots = wg.num_slots();
    let is_target: Vec<u128> = {
        let pos = view.target_positions(target_size);
        (0..wg.num_vns())
            .map(|v| u128::from(pos.contains(&wg.vn_position(v))))
            .collect()
    };

    // reach[e]: walks of the message on edge e (VN -> CN) at the current
    // iteration; vn_out[v]: sum of reach over the edges of v.
    let mut counts = vec![0u128; iterations * slots];
    let mut vn_out = vec![0u128; wg.num_vns()];
    let mut reach = vec![0u128; e_count];
    for it in (1..=iterations).rev() {
        let row = &mut counts[(it - 1) * slots..it * slots];
        for c in 0..wg.num_cns() {
            let n: u128 = wg
                .cn_edge_range(c)
                .map(|e| {
                    let v = wg.edge_vn(e);
                    if it == iterations { is_target[v] } else { vn_out[v] }
                })
                .sum();
            row[wg.cn_slot(c)] += n;
        }
        if it == 1 {
            break;
        }
        // messages into iteration `it - 1`'s CN layer
        for c in 0..wg.num_cns() {
            let range = wg.cn_edge_range(c);
            let per_edge: Vec<u128> = range
                .clone()
                .map(|e| {
                    let v = wg.edge_vn(e);
                    if it == iterations { is_target[v] } else { vn_out[v] }
                })
                .collect();
            let total: u128 = per_edge.iter().sum();
            for (k, e) in range.enumerate() {
                reach[e] = total - per_edge[k];
            }
        }
        for (v, out) in vn_out.iter_mut().enumerate() {
            *out = wg.vn_edges(v).iter().map(|&e| reach[e as usize]).sum();
        }
    }
    Ok(ReachCounts {
        iterations,
        slots,
        counts,
    })
}

/// Scales each iteration's counts to sum to one.
pub fn normalize_counts(n: &ReachCounts) -> NormalizedCounts {
    let mut values = vec![0.0; n.counts.len()];
    let mut zero_rows = vec![false; n.iterations];
    for (it, (row, out)) in n
        .counts
        .chunks(n.slots)
        .zip(values.chunks_mut(n.slots))
        .enumerate()
    {
        let total: u128 = row.iter().sum();
        if total == 0 {
            zero_rows[it] = true;
            continue;
        }
        for (o, &c) in out.iter_mut().zip(row) {
            *o = c as f64 / total as f64;
        }
    }
    NormalizedCounts {
        iterations: n.iterations,
        slots: n.slots,
        values,
        zero_rows,
    }
}

/// Text dump of raw counts, normalized counts and a survival bitmap
/// (`#` for a positive count), one iteration per line in each section.
pub fn dump_counts(n: &ReachCounts) -> String {
    let norm = normalize_counts(n);
    let mut out = String::from("# reach counts\n");
    for it in 1..=n.iterations {
        let cells: Vec<String> = n.row(it).iter().map(u128::to_string).collect();
        let _ = writeln!(out, "{it:>3} {}", cells.join(" "));
    }
    out.push_str("# normalized\n");
    for it in 1..=n.iterations {
        let cells: Vec<String> = (0..n.slots).map(|c| format!("{:.6}", norm.get(it, c))).collect();
        let _ = writeln!(out, "{it:>3} {}", cells.join(" "));
    }
    out.push_str("# reachable\n");
    for it in 1..=n.iterations {
        let cells: String = n.row(it).iter().map(|&c| if c > 0 { '#' } else { '.' }).collect();
        let _ = writeln!(out, "{it:>3} {cells}");
    }
    out
}
