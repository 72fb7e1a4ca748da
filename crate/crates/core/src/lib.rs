//! Spatially coupled LDPC codes with a trainable windowed min-sum decoder.
//!
//! The crate covers the whole pipeline: protograph construction and lifting
//! ([`code_graph`]), AWGN channel sampling ([`channel`]), window decoding
//! with per-iteration check-node weights ([`decoder`]), the unrolled network
//! with reverse-mode gradients ([`unrolled_net`]), training ([`training`]),
//! schedule derivation ([`scheduling`]) and Monte Carlo evaluation
//! ([`harness`]).

pub mod channel;
pub mod code_graph;
pub mod decoder;
pub mod harness;
pub mod scheduling;
pub mod training;
mod error;
pub mod unrolled_net;

pub use error::{Error, Result};
