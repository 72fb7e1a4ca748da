use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::window::{decode_window_with, Scratch};
use super::{DecoderConfig, Role, ScheduleMask, WeightSet, WindowGraph};
use crate::code_graph::{window_view, LiftedTannerGraph};
use crate::error::{Error, Result};

/// Previous-stage error detector used to switch to the breakwater set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detector {
    #[default]
    None,
    Ucn,
    Genie,
}

impl std::str::FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Detector::None),
            "ucn" => Ok(Detector::Ucn),
            "genie" => Ok(Detector::Genie),
            other => Err(Error::InvalidInput(format!("unknown detector {other:?}"))),
        }
    }
}

/// Where boundary decision LLRs come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// Frozen decisions of earlier stages (normal operation).
    #[default]
    Decoded,
    /// The transmitted all-zero values at full clip magnitude, which makes
    /// stages independent of earlier decisions.
    Genie,
}

/// Weight sets and switching policy for a chain decode.
#[derive(Clone, Copy, Debug)]
pub struct ChainPlan<'a> {
    pub plain: &'a WeightSet,
    pub breakwater: Option<&'a WeightSet>,
    pub detector: Detector,
    pub schedule: Option<&'a ScheduleMask>,
    pub boundary: BoundaryMode,
}

impl<'a> ChainPlan<'a> {
    pub fn plain(weights: &'a WeightSet) -> Self {
        Self {
            plain: weights,
            breakwater: None,
            detector: Detector::None,
            schedule: None,
            boundary: BoundaryMode::Decoded,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainResult {
    /// Error flag of the committed position of each stage (index `t - 1`).
    pub stage_errors: Vec<bool>,
    pub frame_error: bool,
    /// Detector verdict on each stage after it was committed.
    pub detections: Vec<bool>,
    pub roles: Vec<Role>,
    /// Frozen decision LLRs of every VN of the frame.
    pub decisions: Vec<f64>,
}

/// A window decoder bound to one lifted code, with every stage's window
/// subgraph prepared up front. Shareable across threads.
#[derive(Clone, Debug)]
pub struct ChainDecoder {
    graph: Arc<LiftedTannerGraph>,
    config: DecoderConfig,
    windows: Vec<WindowGraph>,
}

impl ChainDecoder {
    pub fn new(graph: Arc<LiftedTannerGraph>, config: DecoderConfig) -> Result<Self> {
        config.validate()?;
        let base = graph.base();
        let windows = (1..=base.length())
            .map(|t| {
                let view = window_view(base.length(), base.w(), t, config.window)?;
                Ok(WindowGraph::new(&graph, &view, config.target))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            graph,
            config,
            windows,
        })
    }

    pub fn graph(&self) -> &LiftedTannerGraph {
        &self.graph
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    /// Window subgraph of a 1-based stage.
    pub fn window(&self, stage: usize) -> &WindowGraph {
        &self.windows[stage - 1]
    }

    pub fn stages(&self) -> usize {
        self.windows.len()
    }

    pub fn check_plan(&self, plan: &ChainPlan<'_>) -> Result<()> {
        let n_c = self.graph.base().n_c();
        plan.plain.check_dims(&self.config, n_c)?;
        if let Some(bw) = plan.breakwater {
            bw.check_dims(&self.config, n_c)?;
            if plan.detector == Detector::None {
                return Err(Error::Config(
                    "a breakwater weight set needs a detector (ucn or genie)".into(),
                ));
            }
        }
        if let Some(mask) = plan.schedule {
            mask.check_dims(&self.config, n_c)?;
        }
        Ok(())
    }

    pub fn decode(&self, channel: &[f64], plan: &ChainPlan<'_>) -> Result<ChainResult> {
        self.decode_with(channel, plan, &mut Scratch::default())
    }

    /// Decodes a full frame stage by stage. Messages are re-initialized at
    /// every stage; only frozen decision LLRs carry over.
    pub fn decode_with(
        &self,
        channel: &[f64],
        plan: &ChainPlan<'_>,
        scratch: &mut Scratch,
    ) -> Result<ChainResult> {
        self.check_plan(plan)?;
        let g = &*self.graph;
        if channel.len() != g.num_vns() {
            return Err(Error::Dimension(format!(
                "{} channel LLRs for a {}-VN frame",
                channel.len(),
                g.num_vns()
            )));
        }
        let stages = self.stages();
        let per_pos = g.vns_per_position();
        let clip = self.config.llr_clip;
        let mut frozen = vec![0.0; g.num_vns()];
        let mut bits = vec![0u8; g.num_vns()];
        let mut stage_errors = Vec::with_capacity(stages);
        let mut detections = Vec::with_capacity(stages);
        let mut roles = Vec::with_capacity(stages);
        let mut genie_boundary = Vec::new();
        let mut flagged = false;

        for t in 1..=stages {
            let wg = &self.windows[t - 1];
            let weights = match (flagged, plan.breakwater) {
                (true, Some(bw)) => bw,
                _ => plan.plain,
            };
            roles.push(weights.role);
            let boundary: &[f64] = match plan.boundary {
                BoundaryMode::Decoded => &frozen[wg.boundary_range()],
                BoundaryMode::Genie => {
                    genie_boundary.clear();
                    genie_boundary.resize(wg.num_boundary(), clip);
                    &genie_boundary
                }
            };
            let res = decode_window_with(
                wg,
                &channel[wg.vn_range()],
                boundary,
                weights,
                plan.schedule,
                &self.config,
                scratch,
            )?;
            let committed = g.vns_at(t);
            let first = wg.first_vn();
            let mut err = false;
            for v in committed {
                let llr = res.decisions[v - first];
                frozen[v] = llr;
                bits[v] = u8::from(llr <= 0.0);
                err |= llr <= 0.0;
            }
            debug_assert_eq!(g.vns_at(t).len(), per_pos);
            stage_errors.push(err);
            let verdict = match plan.detector {
                Detector::None => false,
                Detector::Ucn => ucn_detect(g, &bits, t)?,
                Detector::Genie => genie_detect(g, &bits, t),
            };
            detections.push(verdict);
            flagged = verdict;
        }
        let frame_error = stage_errors.iter().any(|&e| e);
        Ok(ChainResult {
            stage_errors,
            frame_error,
            detections,
            roles,
            decisions: frozen,
        })
    }
}

/// Decodes one frame; builds the per-stage windows on every call, so prefer
/// [`ChainDecoder`] for repeated use.
pub fn decode_chain(
    graph: Arc<LiftedTannerGraph>,
    channel: &[f64],
    plan: &ChainPlan<'_>,
    config: DecoderConfig,
) -> Result<ChainResult> {
    ChainDecoder::new(graph, config)?.decode(channel, plan)
}

/// Unsatisfied-check detection after stage `t`: parity of every CN at
/// position `t`, all of whose neighbors (positions `t - w ..= t`) are decided.
/// `bits` holds hard decisions of the whole frame; only positions `<= t` are
/// read.
pub fn ucn_detect(graph: &LiftedTannerGraph, bits: &[u8], t: usize) -> Result<bool> {
    if t < 1 || t > graph.base().length() {
        return Err(Error::InvalidInput(format!(
            "ucn check needs a decided stage in 1..={}, got {t}",
            graph.base().length()
        )));
    }
    for cn in graph.cns_at(t) {
        let parity = graph
            .cn_edges(cn)
            .iter()
            .fold(0u8, |acc, e| acc ^ (bits[e.vn] & 1));
        if parity == 1 {
            return Ok(true);
        }
    }
    Ok(false)
}

/// True iff any decided bit at position `t` differs from the all-zero
/// codeword.
pub fn genie_detect(graph: &LiftedTannerGraph, bits: &[u8], t: usize) -> bool {
    graph.vns_at(t).any(|v| bits[v] != 0)
}
