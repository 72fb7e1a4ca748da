//! Windowed neural min-sum decoding.
//!
//! One window stage runs `max_iters` flooding iterations of
//!
//! ```text
//! v->c:  m = ch(v) + sum of the other incoming c->v messages
//! c->v:  m = w[l][C] * prod(sign) * min|.| over the other inputs
//!        m = gamma[l][C] * m_prev + (1 - gamma[l][C]) * m      (damped sets only)
//! ```
//!
//! with every message clipped to `+-llr_clip`. Boundary VNs contribute their
//! frozen decision LLRs as constant CN inputs; inactive schedule cells
//! re-emit their previous messages.

mod chain;
pub mod io;
mod params;
mod window;
mod window_graph;

pub use chain::{
    decode_chain, genie_detect, ucn_detect, BoundaryMode, ChainDecoder, ChainPlan, ChainResult,
    Detector,
};
pub use params::{DecoderConfig, Role, ScheduleMask, WeightSet, SHARING_MODE};
pub use window::{decode_window, decode_window_with, Scratch, StageResult};
pub use window_graph::WindowGraph;
