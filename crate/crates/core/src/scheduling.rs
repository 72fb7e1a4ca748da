//! Check-node update schedules for a window decoder.
//!
//! A schedule marks each (iteration, slot) cell active or inactive. The
//! insignificance of a cell is its trained damping factor divided by its
//! normalized target-reach count; [`greedy_deactivate`] repeatedly switches
//! off the most insignificant cell among each slot's last active iteration.

use crate::decoder::{ScheduleMask, WeightSet};
use crate::error::{Error, Result};
use crate::unrolled_net::NormalizedCounts;

#[derive(Clone, Debug, PartialEq)]
pub struct InsignificanceTable {
    iterations: usize,
    window: usize,
    n_c: usize,
    /// Row-major scores; `None` where the reach count is zero.
    scores: Vec<Option<f64>>,
}

impl InsignificanceTable {
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn slots(&self) -> usize {
        self.window * self.n_c
    }

    /// Score of a cell (0-based iteration and slot).
    pub fn score(&self, iter: usize, slot: usize) -> Option<f64> {
        self.scores[iter * self.slots() + slot]
    }

    pub fn scores(&self) -> &[Option<f64>] {
        &self.scores
    }

    /// Cells with a defined score, all others inactive.
    pub fn reachable_mask(&self) -> ScheduleMask {
        let active = self.scores.iter().map(Option::is_some).collect();
        ScheduleMask::from_parts(self.iterations, self.window, self.n_c, active)
            .expect("dimensions are consistent")
    }

    /// Number of cells [`greedy_deactivate`] can switch off: every reachable
    /// cell except the first iteration of each slot.
    pub fn capacity(&self) -> usize {
        let slots = self.slots();
        (slots..self.scores.len()).filter(|&i| self.scores[i].is_some()).count()
    }

    /// Fixed-width text table, one iteration per line, `-` for undefined.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (l, row) in self.scores.chunks(self.slots()).enumerate() {
            let cells: Vec<String> = row
                .iter()
                .map(|s| match s {
                    Some(x) => format!("{x:>10.4}"),
                    None => format!("{:>10}", "-"),
                })
                .collect();
            out.push_str(&format!("{:>3} {}\n", l + 1, cells.join("")));
        }
        out
    }
}

/// Element-wise `gamma / normalized reach count`.
pub fn insignificance(weights: &WeightSet, reach: &NormalizedCounts) -> Result<InsignificanceTable> {
    let Some(gamma) = weights.damping() else {
        return Err(Error::InvalidInput(
            "insignificance scores need a damped weight set".into(),
        ));
    };
    if reach.iterations != weights.iterations() || reach.slots != weights.slots() {
        return Err(Error::Dimension(format!(
            "reach counts {} x {} vs weight set {} x {}",
            reach.iterations,
            reach.slots,
            weights.iterations(),
            weights.slots()
        )));
    }
    let scores = gamma
        .iter()
        .zip(&reach.values)
        .map(|(&g, &n)| (n > 0.0).then(|| g / n))
        .collect();
    Ok(InsignificanceTable {
        iterations: weights.iterations(),
        window: weights.window(),
        n_c: weights.n_c(),
        scores,
    })
}

/// Deactivates `k` cells one at a time, starting from the reachable-only
/// mask. Each step ranks the last active iteration (beyond the first) of
/// every slot and switches off the largest score; ties go to the larger slot
/// index, then the later iteration.
pub fn greedy_deactivate(table: &InsignificanceTable, k: usize) -> Result<ScheduleMask> {
    let capacity = table.capacity();
    if k > capacity {
        return Err(Error::Capacity {
            requested: k,
            capacity,
        });
    }
    let slots = table.slots();
    let mut mask = table.reachable_mask();
    // last active iteration per slot (0-based), None if never active
    let mut last: Vec<Option<usize>> = (0..slots)
        .map(|c| (0..table.iterations).rev().find(|&l| mask.is_active(l, c)))
        .collect();
    for _ in 0..k {
        let mut best: Option<(f64, usize, usize)> = None;
        for (c, l) in last.iter().enumerate() {
            let Some(l) = *l else { continue };
            if l == 0 {
                continue;
            }
            let s = table.score(l, c).expect("active cells have scores");
            let better = match best {
                None => true,
                Some((bs, bc, bl)) => s > bs || (s == bs && (c, l) > (bc, bl)),
            };
            if better {
                best = Some((s, c, l));
            }
        }
        let (_, c, l) = best.expect("capacity checked above");
        mask.set(l, c, false);
        last[c] = Some(l - 1);
    }
    Ok(mask)
}

/// Deactivates, at iteration `j`, the `(j - 1) mod W` rear-most positions
/// of the window (every proto CN of each).
pub fn pragmatic_schedule(window: usize, iterations: usize, n_c: usize) -> ScheduleMask {
    let mut mask = ScheduleMask::full(iterations, window, n_c);
    for l in 0..iterations {
        let off = l % window;
        for pos in window - off..window {
            for k in 0..n_c {
                mask.set(l, pos * n_c + k, false);
            }
        }
    }
    mask
}

/// Inactive cells over all cells.
pub fn omission_fraction(mask: &ScheduleMask) -> f64 {
    mask.inactive_count() as f64 / mask.cells().len() as f64
}
