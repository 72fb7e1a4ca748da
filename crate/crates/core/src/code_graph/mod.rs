//! Protograph-based spatially coupled LDPC code construction.
//!
//! A coupled code is described by component base matrices `B_0 .. B_w`
//! (each `n_c x n_v`, entries are edge multiplicities) tiled along a chain
//! of `L` variable-node positions and `L + w` check-node positions:
//!
//! ```text
//!  B_0
//!  B_1 B_0
//!  ..  B_1 ..
//!  B_w ..  ..  B_0
//!      B_w ..  B_1
//!          ..  ..
//!              B_w
//! ```
//!
//! The coupled matrix is lifted by circulant permutations into a Tanner
//! graph ([`LiftedTannerGraph`]); [`WindowView`] selects the sub-chain seen
//! by one stage of a window decoder. Positions are 1-based everywhere in the
//! public API.

mod code_file;
mod lift;
mod window;

pub use code_file::CodeSpec;
pub use lift::{lift, lift_with, LiftOptions, LiftedEdge, LiftedTannerGraph, ProtoEdge};
pub use window::{window_view, WindowView};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of edge multiplicities.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self> {
        let n_rows = rows.len();
        if n_rows == 0 {
            return Err(Error::InvalidInput("matrix has no rows".into()));
        }
        let n_cols = rows[0].len();
        if n_cols == 0 {
            return Err(Error::InvalidInput("matrix has no columns".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != n_cols) {
            return Err(Error::Dimension(format!(
                "row {bad} has {} entries, expected {n_cols}",
                rows[bad].len()
            )));
        }
        Ok(Self {
            rows: n_rows,
            cols: n_cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u32) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row_sum(&self, r: usize) -> u32 {
        self.data[r * self.cols..(r + 1) * self.cols].iter().sum()
    }

    pub fn col_sum(&self, c: usize) -> u32 {
        (0..self.rows).map(|r| self.get(r, c)).sum()
    }

    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        self.data.chunks(self.cols).map(<[u32]>::to_vec).collect()
    }
}

impl fmt::Display for IntMatrix {
    /// One line per row, entries separated by single spaces.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.data.chunks(self.cols) {
            let line: Vec<String> = row.iter().map(u32::to_string).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// The component matrices `B_0 .. B_w` of a coupled protograph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentBases {
    matrices: Vec<IntMatrix>,
}

impl ComponentBases {
    pub fn new(matrices: Vec<IntMatrix>) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::InvalidInput("at least one component matrix required".into()))?;
        let (n_c, n_v) = (first.rows(), first.cols());
        for (i, m) in matrices.iter().enumerate() {
            if m.rows() != n_c || m.cols() != n_v {
                return Err(Error::Dimension(format!(
                    "B_{i} is {}x{}, expected {n_c}x{n_v}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        Ok(Self { matrices })
    }

    /// Coupling width.
    pub fn w(&self) -> usize {
        self.matrices.len() - 1
    }

    pub fn n_c(&self) -> usize {
        self.matrices[0].rows()
    }

    pub fn n_v(&self) -> usize {
        self.matrices[0].cols()
    }

    pub fn component(&self, i: usize) -> &IntMatrix {
        &self.matrices[i]
    }

    pub fn matrices(&self) -> &[IntMatrix] {
        &self.matrices
    }

    /// Element-wise sum of all components, i.e. the uncoupled block base.
    pub fn block_base(&self) -> IntMatrix {
        let mut sum = IntMatrix::zeros(self.n_c(), self.n_v());
        for m in &self.matrices {
            for r in 0..m.rows() {
                for c in 0..m.cols() {
                    sum.set(r, c, sum.get(r, c) + m.get(r, c));
                }
            }
        }
        sum
    }
}

/// Block base of a `(dv, dc)`-regular code: a `dv/g x dc/g` matrix with every
/// entry equal to `g = gcd(dv, dc)`. For `(3, 6)` this is `[3 3]`.
pub fn regular_block_base(dv: u32, dc: u32) -> Result<IntMatrix> {
    if dv == 0 || dc == 0 || dv > dc {
        return Err(Error::InvalidInput(format!(
            "({dv}, {dc}) is not a valid regular degree pair"
        )));
    }
    let g = gcd(dv, dc);
    let (n_c, n_v) = ((dv / g) as usize, (dc / g) as usize);
    Ok(IntMatrix {
        rows: n_c,
        cols: n_v,
        data: vec![g; n_c * n_v],
    })
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Uniform edge spreading: splits every entry of `block_base` evenly over
/// `w + 1` component matrices.
pub fn uniform_edge_spread(block_base: &IntMatrix, w: usize) -> Result<ComponentBases> {
    let parts = (w + 1) as u32;
    let mut spread = IntMatrix::zeros(block_base.rows(), block_base.cols());
    for r in 0..block_base.rows() {
        for c in 0..block_base.cols() {
            let value = block_base.get(r, c);
            if value % parts != 0 {
                return Err(Error::NotDivisible {
                    row: r,
                    col: c,
                    value,
                    divisor: parts,
                });
            }
            spread.set(r, c, value / parts);
        }
    }
    ComponentBases::new(vec![spread; w + 1])
}

/// The coupled base matrix of `L` positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoupledBaseMatrix {
    components: ComponentBases,
    length: usize,
}

pub fn build_coupled_base(components: ComponentBases, length: usize) -> Result<CoupledBaseMatrix> {
    if length == 0 {
        return Err(Error::InvalidInput("chain length L must be >= 1".into()));
    }
    Ok(CoupledBaseMatrix { components, length })
}

impl CoupledBaseMatrix {
    pub fn components(&self) -> &ComponentBases {
        &self.components
    }

    /// Chain length `L`.
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn w(&self) -> usize {
        self.components.w()
    }

    pub fn n_c(&self) -> usize {
        self.components.n_c()
    }

    pub fn n_v(&self) -> usize {
        self.components.n_v()
    }

    /// Number of check-node positions, `L + w`.
    pub fn cn_positions(&self) -> usize {
        self.length + self.w()
    }

    pub fn rows(&self) -> usize {
        self.cn_positions() * self.n_c()
    }

    pub fn cols(&self) -> usize {
        self.length * self.n_v()
    }

    /// The component index `r - u` of block `(r, u)` (0-based block indices),
    /// or `None` for a zero block.
    pub fn block_index(&self, block_row: usize, block_col: usize) -> Option<usize> {
        if block_row >= block_col && block_row - block_col <= self.w() {
            Some(block_row - block_col)
        } else {
            None
        }
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> u32 {
        let (n_c, n_v) = (self.n_c(), self.n_v());
        match self.block_index(row / n_c, col / n_v) {
            Some(i) => self.components.component(i).get(row % n_c, col % n_v),
            None => 0,
        }
    }

    pub fn to_matrix(&self) -> IntMatrix {
        let mut m = IntMatrix::zeros(self.rows(), self.cols());
        for r in 0..self.rows() {
            for c in 0..self.cols() {
                m.set(r, c, self.entry(r, c));
            }
        }
        m
    }

    /// Design rate `(1 - n_c/n_v) - (n_c/n_v)(w/L)`.
    pub fn design_rate(&self) -> f64 {
        let ratio = self.n_c() as f64 / self.n_v() as f64;
        (1.0 - ratio) - ratio * (self.w() as f64 / self.length as f64)
    }

    /// Total proto edge count (with multiplicity) of the check nodes at a
    /// 1-based CN position.
    pub fn cn_position_degree(&self, position: usize) -> u32 {
        let n_c = self.n_c();
        ((position - 1) * n_c..position * n_c)
            .map(|r| (0..self.cols()).map(|c| self.entry(r, c)).sum::<u32>())
            .sum()
    }

    /// Canonical text dump: one row of integers per line.
    pub fn dump(&self) -> String {
        self.to_matrix().to_string()
    }
}
