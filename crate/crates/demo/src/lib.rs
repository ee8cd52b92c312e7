//! WebAssembly bindings for the browser demo. Every export returns a JSON
//! string; failures surface as JavaScript exceptions carrying the message.
//!
//! The plain functions are the testable surface; the `wasm_*` wrappers only
//! convert errors.

use pivotbsp::oracle::random::{random_graph, random_hypotheses, GraphShape};
use pivotbsp::oracle::total_affected;
use pivotbsp::simworld::{candidate_paths, run_scenario, ScenarioConfig, TacticSummary, World};
use pivotbsp::{SqrtBelief, StateOrder, SuffixPolicy, Tactic};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest lattice the page will draw.
pub const MAX_SIDE: i32 = 60;
/// Largest random graph for the ordering lab.
pub const MAX_LAB_VARS: usize = 40;

#[derive(Serialize)]
struct WorldView {
    width: i32,
    height: i32,
    /// Row-major, `true` for free cells, row 0 first.
    free: Vec<bool>,
    start: (i32, i32),
    goal: (i32, i32),
    paths: Vec<Vec<(i32, i32)>>,
}

/// Pillar lattice and up to `k` diverse paths from the origin to `goal`.
pub fn world_paths(width: i32, height: i32, density: f64, seed: u64, goal: (i32, i32), k: usize) -> Result<String, String> {
    if !(1..=MAX_SIDE).contains(&width) || !(1..=MAX_SIDE).contains(&height) {
        return Err(format!("grid sides must lie in 1..={MAX_SIDE}"));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err("density must lie in [0, 1]".into());
    }
    let world = World::generate(width, height, density, seed);
    let paths = candidate_paths(&world, (0, 0), goal, k.max(1)).map_err(|e| e.to_string())?;
    let free = (0..height)
        .flat_map(|y| (0..width).map(move |x| (x, y)))
        .map(|c| world.is_free(c))
        .collect();
    let view = WorldView {
        width,
        height,
        free,
        start: (0, 0),
        goal,
        paths,
    };
    Ok(serde_json::to_string(&view).expect("view serializes"))
}

#[derive(Serialize)]
struct Comparison<'a> {
    poses: usize,
    planning_sessions: usize,
    decisions_agree: bool,
    tactics: &'a [TacticSummary],
    table: String,
}

/// Runs a scenario given as `key = value` text and returns per-tactic totals.
pub fn compare_tactics(config: &str) -> Result<String, String> {
    let cfg = ScenarioConfig::from_kv(config).map_err(|e| e.to_string())?;
    if cfg.record_wall_clock {
        return Err("record_wall_clock is unavailable in the browser".into());
    }
    if cfg.width > MAX_SIDE || cfg.height > MAX_SIDE {
        return Err(format!("grid sides must be at most {MAX_SIDE}"));
    }
    let run = run_scenario(&cfg).map_err(|e| e.to_string())?;
    let s = &run.summary;
    let out = Comparison {
        poses: s.poses,
        planning_sessions: s.planning_sessions,
        decisions_agree: s.decisions_agree,
        tactics: &s.tactics,
        table: run.table(),
    };
    Ok(serde_json::to_string(&out).expect("comparison serializes"))
}

#[derive(Serialize)]
struct LabRow {
    tactic: String,
    order: Vec<u32>,
    /// Sum over hypotheses of the variables from the first involved one on.
    total_affected: usize,
    /// Recomputed scalars per hypothesis under this order.
    affected_scalars: Vec<usize>,
    nnz: usize,
}

#[derive(Serialize)]
struct Lab {
    variables: usize,
    hypotheses: Vec<Vec<u32>>,
    rows: Vec<LabRow>,
}

/// Random belief and hypothesis set; reports each tactic's order and the
/// resulting update extents.
pub fn ordering_lab(n_vars: usize, n_hyps: usize, seed: u64) -> Result<String, String> {
    if !(2..=MAX_LAB_VARS).contains(&n_vars) {
        return Err(format!("variable count must lie in 2..={MAX_LAB_VARS}"));
    }
    if !(1..=8).contains(&n_hyps) {
        return Err("hypothesis count must lie in 1..=8".into());
    }
    let err = |e: pivotbsp::Error| e.to_string();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = GraphShape {
        n_vars,
        max_dim: 1,
        extra_factors: n_vars / 2,
        max_arity: 3,
    };
    let g = random_graph(&mut rng, shape);
    let hyps = random_hypotheses(&mut rng, &g, n_hyps, 3);
    let b = SqrtBelief::build(&g, StateOrder::new(g.variables().to_vec()).map_err(err)?).map_err(err)?;
    let mut rows = Vec::new();
    for tactic in Tactic::standard_set() {
        let reordered = match tactic.compute_order(&b, &hyps).map_err(err)? {
            Some(order) => b.apply_order(&order).map_err(err)?.0,
            None => b.clone(),
        };
        let affected_scalars = hyps
            .iter()
            .map(|h| reordered.incremental_update(h, SuffixPolicy::Keep).map(|(_, r)| r.affected_scalars))
            .collect::<Result<_, _>>()
            .map_err(err)?;
        rows.push(LabRow {
            tactic: tactic.to_string(),
            order: reordered.order().variables().iter().map(|v| v.id).collect(),
            total_affected: total_affected(reordered.order(), &hyps),
            affected_scalars,
            nnz: reordered.nnz(),
        });
    }
    let hypotheses = hyps
        .iter()
        .map(|h| pivotbsp::factorgraph::involved_variables(h).iter().map(|v| v.id).collect())
        .collect();
    let lab = Lab {
        variables: n_vars,
        hypotheses,
        rows,
    };
    Ok(serde_json::to_string(&lab).expect("lab serializes"))
}

#[wasm_bindgen(js_name = worldPaths)]
pub fn wasm_world_paths(
    width: i32,
    height: i32,
    density: f64,
    seed: u32,
    goal_x: i32,
    goal_y: i32,
    k: u32,
) -> Result<String, JsError> {
    world_paths(width, height, density, u64::from(seed), (goal_x, goal_y), k as usize).map_err(|m| JsError::new(&m))
}

#[wasm_bindgen(js_name = compareTactics)]
pub fn wasm_compare_tactics(config: &str) -> Result<String, JsError> {
    compare_tactics(config).map_err(|m| JsError::new(&m))
}

#[wasm_bindgen(js_name = orderingLab)]
pub fn wasm_ordering_lab(n_vars: u32, n_hyps: u32, seed: u32) -> Result<String, JsError> {
    ordering_lab(n_vars as usize, n_hyps as usize, u64::from(seed)).map_err(|m| JsError::new(&m))
}
