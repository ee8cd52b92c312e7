//! Lattice active-SLAM scenario driver.
//!
//! A robot visits a sequence of goals on a pillar lattice. Before each leg
//! it plans over candidate paths; it then follows the chosen path one cell
//! per inference session, adding odometry and loop closures. One belief per
//! ordering tactic is advanced on the identical factor stream so that costs
//! can be compared side by side.

pub mod config;
mod report;
pub mod world;

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::belief::{SqrtBelief, StateOrder, SuffixPolicy};
use crate::error::{Error, Result};
use crate::factorgraph::g2o::ANCHOR_SIGMAS;
use crate::factorgraph::se2::{between_factor, prior_factor, sqrt_information_diag, Mat3, Pose2};
use crate::factorgraph::{FactorGraph, UpdateGraph, VariableId};
use crate::linalg::FlopCounter;
use crate::ordering::Tactic;
use crate::planner::{
    plan_ml, plan_multi, Candidate, MlPredictor, MotionModels, MultiConfig, ObservationModel, PlanResult,
    PlanningContext, TacticConfig,
};

pub use config::{parse_tactics, ScenarioConfig};
pub use report::{stream_digest, CSV_HEADER};
pub use world::{candidate_paths, Cell, World};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "PIVOTBSP_THREADS";

pub fn threads_from_env() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .unwrap_or(0)
}

/// Cost of one session for one tactic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct MetricsRecord {
    pub affected_scalars: usize,
    pub flops: FlopCounter,
    pub nnz_r: usize,
    pub reorder_flops: FlopCounter,
    pub backsub_flops: u64,
    pub wall_nanos: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionKind {
    Inference,
    Planning,
}

/// One session: a record and, for planning, a decision per tactic.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SessionLog {
    pub index: usize,
    pub kind: SessionKind,
    pub records: Vec<MetricsRecord>,
    pub chosen: Vec<Option<usize>>,
}

/// Per-tactic totals over a run.
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct TacticSummary {
    pub tactic: String,
    pub planning_update_fma: u64,
    pub planning_update_rotations: u64,
    pub planning_affected_scalars: u64,
    pub reorder_fma: u64,
    pub inference_update_fma: u64,
    pub inference_update_rotations: u64,
    pub inference_affected_scalars: u64,
    pub backsub_fma: u64,
    pub final_nnz: usize,
    pub planning_wall_nanos: u64,
    pub inference_wall_nanos: u64,
    /// FNV-1a digest of every factor folded into this tactic's belief.
    pub stream_digest: String,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ScenarioSummary {
    pub poses: usize,
    pub planning_sessions: usize,
    pub inference_sessions: usize,
    pub goals: Vec<Cell>,
    /// Whether every tactic chose the same candidate in every session.
    pub decisions_agree: bool,
    /// Largest per-scalar MAP disagreement with the first tactic.
    pub max_estimate_spread: f64,
    pub tactics: Vec<TacticSummary>,
}

#[derive(Clone, Debug)]
pub struct ScenarioRun {
    pub tactics: Vec<Tactic>,
    pub logs: Vec<SessionLog>,
    pub summary: ScenarioSummary,
    /// Final belief of every tactic.
    pub beliefs: Vec<SqrtBelief>,
}

fn noise(rng: &mut ChaCha8Rng, sigmas: [f64; 3]) -> [f64; 3] {
    sigmas.map(|s| s * rng.sample::<f64, _>(StandardNormal))
}

fn perturb(p: Pose2, e: [f64; 3]) -> Pose2 {
    Pose2::new(p.x + e[0], p.y + e[1], p.theta + e[2])
}

fn elapsed(start: Option<Instant>) -> u64 {
    start.map_or(0, |t| t.elapsed().as_nanos() as u64)
}

struct Driver<'a> {
    cfg: &'a ScenarioConfig,
    /// `None` where threads are unavailable; work then runs on the caller.
    pool: Option<rayon::ThreadPool>,
    rng: ChaCha8Rng,
    odom_info: Mat3,
    lc_info: Mat3,
    truth: Vec<Pose2>,
    trajectory: Vec<VariableId>,
    beliefs: Vec<SqrtBelief>,
    logs: Vec<SessionLog>,
    spread: f64,
    since_closure: usize,
}

impl Driver<'_> {
    fn models(&self) -> MotionModels {
        MotionModels {
            odom_sigmas: self.cfg.odom_sigmas,
            lc_sigmas: self.cfg.lc_sigmas,
            lc_radius: self.cfg.lc_radius,
            lc_min_gap: self.cfg.lc_min_gap,
            lc_spacing: self.cfg.lc_spacing,
        }
    }

    fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match &self.pool {
            Some(p) => p.install(f),
            None => f(),
        }
    }

    fn clock(&self) -> Option<Instant> {
        self.cfg.record_wall_clock.then(Instant::now)
    }

    /// Folds `u` into every belief and recovers each MAP estimate.
    fn inference(&mut self, u: &UpdateGraph) -> Result<()> {
        let outcomes = self.install(|| {
            self.beliefs
                .par_iter()
                .map(|b| {
                    let t0 = self.clock();
                    let (b2, rep) = b.incremental_update(u, SuffixPolicy::Baseline)?;
                    let (est, bs) = b2.map_estimate_counted()?;
                    let record = MetricsRecord {
                        affected_scalars: rep.affected_scalars,
                        flops: rep.flops,
                        nnz_r: b2.nnz(),
                        reorder_flops: FlopCounter::default(),
                        backsub_flops: bs.fma,
                        wall_nanos: elapsed(t0),
                    };
                    Ok((b2, est, record))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let mut records = Vec::with_capacity(outcomes.len());
        let mut estimates: Vec<BTreeMap<VariableId, Vec<f64>>> = Vec::new();
        self.beliefs.clear();
        for (b, est, rec) in outcomes {
            self.beliefs.push(b);
            estimates.push(est);
            records.push(rec);
        }
        for other in &estimates[1..] {
            for (v, x) in &estimates[0] {
                for (a, b) in x.iter().zip(&other[v]) {
                    self.spread = self.spread.max((a - b).abs());
                }
            }
        }
        self.logs.push(SessionLog {
            index: self.logs.len(),
            kind: SessionKind::Inference,
            chosen: vec![None; records.len()],
            records,
        });
        Ok(())
    }

    fn bootstrap(&mut self) -> Result<()> {
        let x0 = VariableId::new(0, 3);
        let p0 = Pose2::new(0.0, 0.0, 0.0);
        let prior = prior_factor(x0, p0, p0, &sqrt_information_diag(ANCHOR_SIGMAS))?;
        self.truth.push(p0);
        self.trajectory.push(x0);
        let u = UpdateGraph {
            new_variables: vec![x0],
            new_factors: vec![prior],
            new_values: BTreeMap::from([(x0, p0.to_vec())]),
        };
        self.inference(&u)
    }

    fn world_point(&self, c: Cell) -> (f64, f64) {
        (c.0 as f64 * self.cfg.step_length, c.1 as f64 * self.cfg.step_length)
    }

    /// Moves the robot one cell and runs the resulting inference session.
    fn step_to(&mut self, from: Cell, to: Cell) -> Result<()> {
        let prev = *self.truth.last().expect("bootstrapped");
        let prev_var = *self.trajectory.last().expect("bootstrapped");
        let (fx, fy) = self.world_point(from);
        let (tx, ty) = self.world_point(to);
        let gt = Pose2::new(tx, ty, (ty - fy).atan2(tx - fx));
        let var = VariableId::new(self.trajectory.len() as u32, 3);
        let z = perturb(prev.between(gt), noise(&mut self.rng, self.cfg.odom_sigmas));
        let mut factors = vec![between_factor(prev_var, var, prev, gt, z, &self.odom_info)?];

        let eligible = if self.since_closure >= self.cfg.lc_spacing.max(1) {
            self.trajectory.len().saturating_sub(self.cfg.lc_min_gap)
        } else {
            0
        };
        let partner = (0..eligible)
            .map(|k| (k, self.truth[k].distance(gt)))
            .filter(|&(_, d)| d <= self.cfg.lc_radius)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((k, _)) = partner {
            let z = perturb(self.truth[k].between(gt), noise(&mut self.rng, self.cfg.lc_sigmas));
            factors.push(between_factor(self.trajectory[k], var, self.truth[k], gt, z, &self.lc_info)?);
            self.since_closure = 1;
        } else {
            self.since_closure = self.since_closure.saturating_add(1);
        }
        self.truth.push(gt);
        self.trajectory.push(var);
        let u = UpdateGraph {
            new_variables: vec![var],
            new_factors: factors,
            new_values: BTreeMap::from([(var, gt.to_vec())]),
        };
        self.inference(&u)
    }

    /// Plans one leg and returns the chosen path.
    fn planning(&mut self, paths: &[Vec<Cell>]) -> Result<Vec<Cell>> {
        let ctx = PlanningContext {
            trajectory: self.trajectory.clone(),
            next_id: self.trajectory.len() as u32,
            models: self.models(),
        };
        let candidates: Vec<Candidate> = {
            let predictor = MlPredictor::new(&self.beliefs[0], &ctx)?;
            paths
                .iter()
                .enumerate()
                .map(|(id, p)| {
                    let path: Vec<(f64, f64)> = p.iter().map(|&c| self.world_point(c)).collect();
                    Ok(Candidate {
                        id,
                        chain: predictor.predict(&path)?,
                        path,
                    })
                })
                .collect::<Result<_>>()?
        };
        let multi = self.cfg.multi_hyp.then(|| MultiConfig {
            obs: ObservationModel {
                p_detect: self.cfg.p_detect,
                residuals: vec![(1.0, 0.0)],
            },
            horizon: self.cfg.horizon,
            branch_k: self.cfg.branch_k,
            node_cap: self.cfg.node_cap,
        });
        let tactics = &self.cfg.tactics;
        let outcomes: Vec<(PlanResult, SqrtBelief, u64)> = self.install(|| {
            self.beliefs
                .par_iter()
                .zip(tactics)
                .map(|(b, &tactic)| {
                    let tc = TacticConfig {
                        tactic,
                        keep_order: self.cfg.keep_order,
                    };
                    let t0 = self.clock();
                    let (res, nb) = match &multi {
                        Some(m) => plan_multi(b, &candidates, m, &tc)?,
                        None => plan_ml(b, &candidates, &tc)?,
                    };
                    Ok((res, nb, elapsed(t0)))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let chosen = outcomes[0].0.chosen;
        let mut records = Vec::new();
        let mut decisions = Vec::new();
        self.beliefs.clear();
        for (res, b, wall) in outcomes {
            records.push(MetricsRecord {
                affected_scalars: res.affected_scalars(),
                flops: res.planning_flops(),
                nnz_r: b.nnz(),
                reorder_flops: res.reorder_report.flops,
                backsub_flops: 0,
                wall_nanos: wall,
            });
            decisions.push(Some(res.chosen));
            self.beliefs.push(b);
        }
        self.logs.push(SessionLog {
            index: self.logs.len(),
            kind: SessionKind::Planning,
            records,
            chosen: decisions,
        });
        Ok(paths[chosen].clone())
    }
}

/// Runs the full scenario for every configured tactic.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun> {
    cfg.validate()?;
    let world = World::generate(cfg.width, cfg.height, cfg.obstacle_density, cfg.obstacle_seed);
    let start: Cell = (0, 0);
    let goals = if cfg.goals.is_empty() {
        world.draw_goals(start, cfg.n_goals, cfg.goal_spacing, cfg.obstacle_seed)
    } else {
        let reach = world.reachable(start);
        if let Some(&g) = cfg.goals.iter().find(|g| !reach.contains(g)) {
            return Err(Error::GoalUnreachable(g));
        }
        cfg.goals.clone()
    };
    let pool = if cfg!(target_family = "wasm") {
        None
    } else {
        let p = rayon::ThreadPoolBuilder::new()
            .num_threads(threads_from_env())
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        Some(p)
    };
    let empty = SqrtBelief::build(&FactorGraph::new(), StateOrder::new(Vec::new())?)?;
    let mut d = Driver {
        cfg,
        pool,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        odom_info: sqrt_information_diag(cfg.odom_sigmas),
        lc_info: sqrt_information_diag(cfg.lc_sigmas),
        truth: Vec::new(),
        trajectory: Vec::new(),
        beliefs: vec![empty; cfg.tactics.len()],
        logs: Vec::new(),
        spread: 0.0,
        since_closure: usize::MAX,
    };
    d.bootstrap()?;
    let mut here = start;
    for &goal in &goals {
        let paths = candidate_paths(&world, here, goal, cfg.k)?;
        if paths[0].len() < 2 {
            continue;
        }
        let path = d.planning(&paths)?;
        for w in path.windows(2) {
            d.step_to(w[0], w[1])?;
        }
        here = goal;
    }
    let summary = report::summarize(cfg, &goals, &d.logs, &d.beliefs, d.trajectory.len(), d.spread);
    Ok(ScenarioRun {
        tactics: cfg.tactics.clone(),
        logs: d.logs,
        summary,
        beliefs: d.beliefs,
    })
}

#[cfg(test)]
mod tests;
