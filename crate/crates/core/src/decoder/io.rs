//! Weight-set and schedule files.
//!
//! Both are JSON documents with keys in sorted order and floats printed with
//! nine significant digits, so identical contents always serialize to
//! identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::{Role, ScheduleMask, WeightSet, SHARING_MODE};
use crate::error::{Error, Result};

pub const WEIGHT_FILE_VERSION: u32 = 1;
pub const SCHEDULE_FILE_VERSION: u32 = 1;

/// Nine significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.8e}")
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization is infallible")
}

fn float_rows(values: &[f64], cols: usize) -> String {
    let rows: Vec<String> = values
        .chunks(cols)
        .map(|row| {
            let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
            format!("    [{}]", cells.join(", "))
        })
        .collect();
    format!("[\n{}\n  ]", rows.join(",\n"))
}

pub fn weights_to_string(ws: &WeightSet) -> String {
    let mut out = String::from("{\n");
    let slots = ws.slots();
    let _ = writeln!(out, "  \"cn_weights\": {},", float_rows(ws.weights(), slots));
    let _ = writeln!(out, "  \"code_id\": {},", json_string(&ws.code_id));
    match ws.damping() {
        Some(d) => {
            let _ = writeln!(out, "  \"damping\": {},", float_rows(d, slots));
        }
        None => out.push_str("  \"damping\": null,\n"),
    }
    let _ = writeln!(out, "  \"iterations\": {},", ws.iterations());
    let _ = writeln!(out, "  \"n_c\": {},", ws.n_c());
    let _ = writeln!(out, "  \"provenance\": {},", json_string(&ws.provenance));
    let _ = writeln!(out, "  \"role\": {},", json_string(&ws.role.to_string()));
    let _ = writeln!(out, "  \"sharing\": {},", json_string(SHARING_MODE));
    let _ = writeln!(out, "  \"version\": {WEIGHT_FILE_VERSION},");
    let _ = writeln!(out, "  \"window\": {}", ws.window());
    out.push_str("}\n");
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightDoc {
    cn_weights: Vec<Vec<f64>>,
    code_id: String,
    damping: Option<Vec<Vec<f64>>>,
    iterations: usize,
    n_c: usize,
    provenance: String,
    role: Role,
    sharing: String,
    version: u32,
    window: usize,
}

pub fn weights_from_str(text: &str) -> std::result::Result<WeightSet, String> {
    let doc: WeightDoc = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if doc.version != WEIGHT_FILE_VERSION {
        return Err(format!("unsupported weight file version {}", doc.version));
    }
    if doc.sharing != SHARING_MODE {
        return Err(format!("unsupported sharing mode {:?}", doc.sharing));
    }
    let slots = doc.window * doc.n_c;
    let flatten = |rows: Vec<Vec<f64>>, what: &str| -> std::result::Result<Vec<f64>, String> {
        if rows.len() != doc.iterations || rows.iter().any(|r| r.len() != slots) {
            return Err(format!("{what} must be {} rows of {slots}", doc.iterations));
        }
        Ok(rows.concat())
    };
    let weights = flatten(doc.cn_weights, "cn_weights")?;
    let damping = doc.damping.map(|d| flatten(d, "damping")).transpose()?;
    let mut ws = WeightSet::from_parts(doc.iterations, doc.window, doc.n_c, weights, damping, doc.role)
        .map_err(|e| e.to_string())?;
    ws.code_id = doc.code_id;
    ws.provenance = doc.provenance;
    Ok(ws)
}

pub fn save_weights(path: &Path, ws: &WeightSet) -> Result<()> {
    std::fs::write(path, weights_to_string(ws)).map_err(|e| Error::io(path, e))
}

pub fn load_weights(path: &Path) -> Result<WeightSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    weights_from_str(&text).map_err(|msg| Error::parse(path, msg))
}

pub fn schedule_to_string(mask: &ScheduleMask) -> String {
    let slots = mask.slots();
    let rows: Vec<String> = mask
        .cells()
        .chunks(slots)
        .map(|r| {
            let cells: Vec<&str> = r.iter().map(|&a| if a { "true" } else { "false" }).collect();
            format!("    [{}]", cells.join(", "))
        })
        .collect();
    format!(
        "{{\n  \"active\": [\n{}\n  ],\n  \"iterations\": {},\n  \"n_c\": {},\n  \"version\": {},\n  \"window\": {}\n}}\n",
        rows.join(",\n"),
        mask.iterations(),
        mask.n_c(),
        SCHEDULE_FILE_VERSION,
        mask.window()
    )
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleDoc {
    active: Vec<Vec<bool>>,
    iterations: usize,
    n_c: usize,
    version: u32,
    window: usize,
}

pub fn schedule_from_str(text: &str) -> std::result::Result<ScheduleMask, String> {
    let doc: ScheduleDoc = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if doc.version != SCHEDULE_FILE_VERSION {
        return Err(format!("unsupported schedule file version {}", doc.version));
    }
    let slots = doc.window * doc.n_c;
    if doc.active.len() != doc.iterations || doc.active.iter().any(|r| r.len() != slots) {
        return Err(format!("active must be {} rows of {slots}", doc.iterations));
    }
    ScheduleMask::from_parts(doc.iterations, doc.window, doc.n_c, doc.active.concat())
        .map_err(|e| e.to_string())
}

pub fn save_schedule(path: &Path, mask: &ScheduleMask) -> Result<()> {
    std::fs::write(path, schedule_to_string(mask)).map_err(|e| Error::io(path, e))
}

pub fn load_schedule(path: &Path) -> Result<ScheduleMask> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    schedule_from_str(&text).map_err(|msg| Error::parse(path, msg))
}
