//! WebAssembly bindings: each export takes a comma separated target and a
//! rank and returns a JSON string for the page to render.

use frametop::admissibility::classify_admissibility;
use frametop::builder::build_ntf;
use frametop::hypersimplex::parse_vector;
use frametop::polygon::{frame_to_polygon, km_disconnected};
use frametop::strata::{enumerate_feasible_strata, verify_no_codim_one};
use frametop::DiagonalTarget;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn target(d: &str, k: usize) -> Result<DiagonalTarget, String> {
    let v = parse_vector(d).map_err(|e| e.to_string())?;
    DiagonalTarget::new(k, v).map_err(|e| e.to_string())
}

pub fn check_inner(d: &str, k: usize) -> Result<String, String> {
    let t = target(d, k)?;
    if !t.in_hypersimplex() {
        return Ok(json!({ "hypersimplex": false, "sum": t.sum() }).to_string());
    }
    let v = classify_admissibility(&t).map_err(|e| e.to_string())?;
    Ok(json!({
        "hypersimplex": true,
        "hypothesis": t.satisfies_hypothesis().map_err(|e| e.to_string())?,
        "verdict": v.status,
        "rule": v.rule,
        "witness": v.witness,
    })
    .to_string())
}

/// Builds a rank-two frame for `d` and returns its closed polygon.
pub fn polygon_inner(d: &str) -> Result<String, String> {
    let t = target(d, 2)?;
    let f = build_ntf(&t).map_err(|e| e.to_string())?;
    let p = frame_to_polygon(&f).map_err(|e| e.to_string())?;
    let km = km_disconnected(&p.r).map_err(|e| e.to_string())?;
    Ok(json!({
        "edges": p.edges,
        "r": p.r,
        "closure_residual": p.closure_residual(),
        "km_disconnected": km,
    })
    .to_string())
}

pub fn strata_inner(d: &str, k: usize) -> Result<String, String> {
    let t = target(d, k)?;
    let rows = enumerate_feasible_strata(&t, t.n).map_err(|e| e.to_string())?;
    let (clean, witness) = verify_no_codim_one(&t).map_err(|e| e.to_string())?;
    let rows: Vec<_> = rows
        .iter()
        .map(|s| {
            json!({
                "blocks": s.block_entries(&t),
                "c": s.c,
                "b": s.b,
                "level_codims": s.level_codims,
                "codim_one": s.witness_r.is_some(),
            })
        })
        .collect();
    Ok(json!({ "no_codim_one": clean, "witness": witness, "rows": rows }).to_string())
}

#[wasm_bindgen]
pub fn check(d: &str, k: usize) -> Result<String, JsError> {
    check_inner(d, k).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn polygon(d: &str) -> Result<String, JsError> {
    polygon_inner(d).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn strata(d: &str, k: usize) -> Result<String, JsError> {
    strata_inner(d, k).map_err(|e| JsError::new(&e))
}
