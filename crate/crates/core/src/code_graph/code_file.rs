use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    build_coupled_base, lift_with, regular_block_base, uniform_edge_spread, ComponentBases,
    CoupledBaseMatrix, IntMatrix, LiftOptions, LiftedTannerGraph,
};
use crate::error::{Error, Result};

/// Text description of a lifted code.
///
/// The block base comes from exactly one of `dv`/`dc` (regular),
/// `block_base` (explicit rows), or `components` (explicit `B_0 .. B_w`, in
/// which case `w` must match). The first two are spread uniformly.
///
/// ```toml
/// id = "sc36-l100"
/// dv = 3
/// dc = 6
/// w = 2
/// length = 100
/// z = 100
/// seed = 1
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSpec {
    #[serde(default)]
    pub id: String,
    pub dv: Option<u32>,
    pub dc: Option<u32>,
    pub block_base: Option<Vec<Vec<u32>>>,
    pub components: Option<Vec<Vec<Vec<u32>>>>,
    pub w: usize,
    pub length: usize,
    pub z: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub reject_four_cycles: bool,
}

impl CodeSpec {
    pub fn regular(dv: u32, dc: u32, w: usize, length: usize, z: usize, seed: u64) -> Self {
        Self {
            id: String::new(),
            dv: Some(dv),
            dc: Some(dc),
            block_base: None,
            components: None,
            w,
            length,
            z,
            seed,
            reject_four_cycles: false,
        }
    }

    /// `id` if set, otherwise a name built from the parameters.
    pub fn code_id(&self) -> String {
        if !self.id.is_empty() {
            return self.id.clone();
        }
        let kind = match (self.dv, self.dc) {
            (Some(dv), Some(dc)) => format!("r{dv}{dc}"),
            _ => "custom".to_string(),
        };
        format!(
            "{kind}-w{}-l{}-z{}-s{}",
            self.w, self.length, self.z, self.seed
        )
    }

    pub fn components(&self) -> Result<ComponentBases> {
        let regular = self.dv.is_some() || self.dc.is_some();
        let given = [regular, self.block_base.is_some(), self.components.is_some()];
        if given.iter().filter(|&&g| g).count() != 1 {
            return Err(Error::Config(
                "give exactly one of dv/dc, block_base or components".into(),
            ));
        }
        if let Some(mats) = &self.components {
            let mats = mats
                .iter()
                .map(|rows| IntMatrix::from_rows(rows))
                .collect::<Result<Vec<_>>>()?;
            let comps = ComponentBases::new(mats)?;
            if comps.w() != self.w {
                return Err(Error::Config(format!(
                    "{} component matrices imply w = {}, but w = {}",
                    comps.matrices().len(),
                    comps.w(),
                    self.w
                )));
            }
            return Ok(comps);
        }
        let block = match (&self.block_base, self.dv, self.dc) {
            (Some(rows), _, _) => IntMatrix::from_rows(rows)?,
            (None, Some(dv), Some(dc)) => regular_block_base(dv, dc)?,
            _ => return Err(Error::Config("dv and dc must be given together".into())),
        };
        uniform_edge_spread(&block, self.w)
    }

    pub fn base(&self) -> Result<CoupledBaseMatrix> {
        build_coupled_base(self.components()?, self.length)
    }

    pub fn build(&self) -> Result<LiftedTannerGraph> {
        let options = LiftOptions {
            reject_four_cycles: self.reject_four_cycles,
            ..LiftOptions::default()
        };
        lift_with(&self.base()?, self.z, self.seed, options)
    }

    pub fn from_toml_str(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|msg| Error::parse(path, msg))
    }
}
