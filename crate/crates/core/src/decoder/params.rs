use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Window decoder parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoderConfig {
    /// Window size `W` in positions.
    pub window: usize,
    /// Target size `T` in positions.
    #[serde(default = "default_target")]
    pub target: usize,
    /// Iterations per window stage.
    pub max_iters: usize,
    #[serde(default = "default_clip")]
    pub llr_clip: f64,
}

fn default_target() -> usize {
    1
}

fn default_clip() -> f64 {
    64.0
}

impl DecoderConfig {
    pub fn new(window: usize, target: usize, max_iters: usize) -> Result<Self> {
        let cfg = Self {
            window,
            target,
            max_iters,
            llr_clip: default_clip(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.target == 0 || self.target > self.window {
            return Err(Error::Config(format!(
                "target size {} outside 1..={}",
                self.target, self.window
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be >= 1".into()));
        }
        if !(self.llr_clip > 0.0) {
            return Err(Error::Config(format!("llr_clip {} must be > 0", self.llr_clip)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Plain,
    Breakwater,
    Fixed,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Plain => "plain",
            Role::Breakwater => "breakwater",
            Role::Fixed => "fixed",
        })
    }
}

impl std::str::FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Role::Plain),
            "breakwater" => Ok(Role::Breakwater),
            "fixed" => Ok(Role::Fixed),
            other => Err(Error::InvalidInput(format!("unknown weight-set role {other:?}"))),
        }
    }
}

/// Per-(iteration, proto-CN slot) check-node weights and optional damping
/// factors. Arrays are row-major with iteration index `0..iterations`
/// (iteration `l` of the decoder is row `l - 1`) and slot index
/// `0..slots`, where slot `(p - t) * n_c + k` is proto CN `k` at the `p - t`-th
/// position of the window.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSet {
    iterations: usize,
    window: usize,
    n_c: usize,
    cn_weights: Vec<f64>,
    damping: Option<Vec<f64>>,
    pub code_id: String,
    pub provenance: String,
    pub role: Role,
}

pub const SHARING_MODE: &str = "protograph+cn-wise";

impl WeightSet {
    pub fn uniform(iterations: usize, window: usize, n_c: usize, value: f64, role: Role) -> Self {
        Self {
            iterations,
            window,
            n_c,
            cn_weights: vec![value; iterations * window * n_c],
            damping: None,
            code_id: String::new(),
            provenance: String::new(),
            role,
        }
    }

    /// The single-weight conventional window decoder.
    pub fn fixed(iterations: usize, window: usize, n_c: usize, value: f64) -> Self {
        let mut ws = Self::uniform(iterations, window, n_c, value, Role::Fixed);
        ws.provenance = format!("fixed weight {value}");
        ws
    }

    pub fn from_parts(
        iterations: usize,
        window: usize,
        n_c: usize,
        cn_weights: Vec<f64>,
        damping: Option<Vec<f64>>,
        role: Role,
    ) -> Result<Self> {
        let n = iterations * window * n_c;
        if cn_weights.len() != n {
            return Err(Error::Dimension(format!(
                "{} weights for {iterations} x {} slots",
                cn_weights.len(),
                window * n_c
            )));
        }
        if let Some(d) = &damping {
            if d.len() != n {
                return Err(Error::Dimension(format!("{} damping factors, expected {n}", d.len())));
            }
            if let Some(bad) = d.iter().find(|g| !(0.0..=1.0).contains(*g)) {
                return Err(Error::InvalidInput(format!("damping factor {bad} outside [0, 1]")));
            }
            if role == Role::Fixed {
                return Err(Error::InvalidInput("a fixed weight set carries no damping".into()));
            }
        }
        if role == Role::Fixed && cn_weights.windows(2).any(|p| p[0] != p[1]) {
            return Err(Error::InvalidInput("a fixed weight set must be uniform".into()));
        }
        Ok(Self {
            iterations,
            window,
            n_c,
            cn_weights,
            damping,
            code_id: String::new(),
            provenance: String::new(),
            role,
        })
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn n_c(&self) -> usize {
        self.n_c
    }

    pub fn slots(&self) -> usize {
        self.window * self.n_c
    }

    #[inline]
    pub fn weight(&self, iter: usize, slot: usize) -> f64 {
        self.cn_weights[iter * self.slots() + slot]
    }

    pub fn weights(&self) -> &[f64] {
        &self.cn_weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.cn_weights
    }

    pub fn damping(&self) -> Option<&[f64]> {
        self.damping.as_deref()
    }

    pub fn damping_mut(&mut self) -> Option<&mut [f64]> {
        self.damping.as_deref_mut()
    }

    pub fn set_damping(&mut self, damping: Option<Vec<f64>>) -> Result<()> {
        if let Some(d) = &damping {
            if d.len() != self.cn_weights.len() {
                return Err(Error::Dimension(format!(
                    "{} damping factors, expected {}",
                    d.len(),
                    self.cn_weights.len()
                )));
            }
        }
        self.damping = damping;
        Ok(())
    }

    /// Checks the set against a decoder configuration and CN count.
    pub fn check_dims(&self, config: &DecoderConfig, n_c: usize) -> Result<()> {
        if self.iterations != config.max_iters || self.window != config.window || self.n_c != n_c {
            return Err(Error::Dimension(format!(
                "weight set is {} iterations x W={} x n_c={}, decoder expects {} x W={} x n_c={n_c}",
                self.iterations, self.window, self.n_c, config.max_iters, config.window
            )));
        }
        Ok(())
    }
}

/// Activity of each (iteration, slot) cell. Same indexing as [`WeightSet`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduleMask {
    iterations: usize,
    window: usize,
    n_c: usize,
    active: Vec<bool>,
}

impl ScheduleMask {
    pub fn full(iterations: usize, window: usize, n_c: usize) -> Self {
        Self {
            iterations,
            window,
            n_c,
            active: vec![true; iterations * window * n_c],
        }
    }

    pub fn from_parts(iterations: usize, window: usize, n_c: usize, active: Vec<bool>) -> Result<Self> {
        if active.len() != iterations * window * n_c {
            return Err(Error::Dimension(format!(
                "{} mask cells for {iterations} x {} slots",
                active.len(),
                window * n_c
            )));
        }
        Ok(Self {
            iterations,
            window,
            n_c,
            active,
        })
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn n_c(&self) -> usize {
        self.n_c
    }

    pub fn slots(&self) -> usize {
        self.window * self.n_c
    }

    #[inline]
    pub fn is_active(&self, iter: usize, slot: usize) -> bool {
        self.active[iter * self.slots() + slot]
    }

    pub fn set(&mut self, iter: usize, slot: usize, active: bool) {
        let s = self.slots();
        self.active[iter * s + slot] = active;
    }

    pub fn cells(&self) -> &[bool] {
        &self.active
    }

    pub fn inactive_count(&self) -> usize {
        self.active.iter().filter(|a| !**a).count()
    }

    pub fn check_dims(&self, config: &DecoderConfig, n_c: usize) -> Result<()> {
        if self.iterations != config.max_iters || self.window != config.window || self.n_c != n_c {
            return Err(Error::Dimension(format!(
                "schedule is {} iterations x W={} x n_c={}, decoder expects {} x W={} x n_c={n_c}",
                self.iterations, self.window, self.n_c, config.max_iters, config.window
            )));
        }
        Ok(())
    }

    /// Grid with one line per iteration and one column per slot;
    /// active cells print as `■`, inactive as `·`.
    pub fn grid(&self) -> String {
        let mut out = String::new();
        for l in 0..self.iterations {
            out.push_str(&format!("{:>3} ", l + 1));
            for c in 0..self.slots() {
                out.push(if self.is_active(l, c) { '■' } else { '·' });
            }
            out.push('\n');
        }
        out
    }
}
