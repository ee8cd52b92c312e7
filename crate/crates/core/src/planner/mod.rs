//! Candidate evaluation and selection.
//!
//! Each candidate path is turned into a predicted chain of poses with
//! maximum-likelihood measurements. A candidate's value is the entropy drop
//! of the belief after folding in its hypothesis. Ordering tactics reorder
//! the belief once before the candidates are evaluated, so they change the
//! cost of each evaluation but never its value.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use itertools::Itertools;
use rayon::prelude::*;

use crate::belief::{AffectedReport, SqrtBelief, StateOrder, SuffixPolicy, HALF_LN_2PI_E};
use crate::error::{Error, Result};
use crate::factorgraph::se2::{between_factor, sqrt_information_diag, Mat3, Pose2};
use crate::factorgraph::{LinearFactor, UpdateGraph, VariableId};
use crate::linalg::FlopCounter;
use crate::ordering::{classify, involvement_levels, pivot, ClassAssignment, ClassCount, Tactic};

/// Two values closer than this are a tie in the argmax.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Noise models used to predict measurements along a path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotionModels {
    pub odom_sigmas: [f64; 3],
    pub lc_sigmas: [f64; 3],
    /// A predicted pose closes a loop with a past pose whose estimate lies
    /// within this distance.
    pub lc_radius: f64,
    /// The most recent `lc_min_gap` trajectory poses are never closure
    /// partners.
    pub lc_min_gap: usize,
    /// Consecutive closures along a path are at least this many poses apart.
    pub lc_spacing: usize,
}

impl Default for MotionModels {
    fn default() -> Self {
        MotionModels {
            odom_sigmas: [0.05, 0.05, 0.02],
            lc_sigmas: [0.1, 0.1, 0.05],
            lc_radius: 1.5,
            lc_min_gap: 10,
            lc_spacing: 1,
        }
    }
}

/// What the planner needs to know about the robot beyond its belief.
#[derive(Clone, Debug)]
pub struct PlanningContext {
    /// Pose variables in time order; the last one is the current pose.
    pub trajectory: Vec<VariableId>,
    /// First id free for predicted variables.
    pub next_id: u32,
    pub models: MotionModels,
}

/// One predicted step: variables and factors that always occur, plus
/// loop closures that may or may not be observed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChainStep {
    pub new_variables: Vec<VariableId>,
    pub new_values: BTreeMap<VariableId, Vec<f64>>,
    pub factors: Vec<LinearFactor>,
    pub closures: Vec<LinearFactor>,
}

impl ChainStep {
    fn append(&mut self, other: &ChainStep) {
        self.new_variables.extend_from_slice(&other.new_variables);
        self.new_values
            .extend(other.new_values.iter().map(|(k, v)| (*k, v.clone())));
        self.factors.extend_from_slice(&other.factors);
        self.closures.extend_from_slice(&other.closures);
    }

    /// The update with exactly the flagged closures present.
    pub fn realize(&self, present: &[bool], residual_offset: f64) -> Result<UpdateGraph> {
        let mut factors = self.factors.clone();
        for (f, _) in self.closures.iter().zip(present).filter(|(_, &p)| p) {
            if residual_offset == 0.0 {
                factors.push(f.clone());
            } else {
                factors.push(f.with_rhs(f.rhs().iter().map(|z| z + residual_offset).collect())?);
            }
        }
        Ok(UpdateGraph {
            new_variables: self.new_variables.clone(),
            new_factors: factors,
            new_values: self.new_values.clone(),
        })
    }
}

/// A predicted measurement chain, one step per predicted pose.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MlChain {
    pub steps: Vec<ChainStep>,
}

impl MlChain {
    /// A single step whose factors are all certain.
    pub fn from_update(u: &UpdateGraph) -> Self {
        MlChain {
            steps: vec![ChainStep {
                new_variables: u.new_variables.clone(),
                new_values: u.new_values.clone(),
                factors: u.new_factors.clone(),
                closures: Vec::new(),
            }],
        }
    }

    /// The ML hypothesis: every step with every closure present.
    pub fn to_update(&self) -> UpdateGraph {
        let mut all = ChainStep::default();
        for s in &self.steps {
            all.append(s);
        }
        all.factors.append(&mut all.closures);
        UpdateGraph {
            new_variables: all.new_variables,
            new_factors: all.factors,
            new_values: all.new_values,
        }
    }

    /// Groups consecutive steps into at most `horizon` tree levels of
    /// near-equal length, longer groups first.
    pub fn split(&self, horizon: usize) -> Vec<ChainStep> {
        let levels = horizon.max(1).min(self.steps.len());
        let mut out = Vec::with_capacity(levels);
        let mut rest = self.steps.as_slice();
        for k in 0..levels {
            let take = rest.len().div_ceil(levels - k);
            let mut merged = ChainStep::default();
            for s in &rest[..take] {
                merged.append(s);
            }
            out.push(merged);
            rest = &rest[take..];
        }
        out
    }

    pub fn closure_count(&self) -> usize {
        self.steps.iter().map(|s| s.closures.len()).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub id: usize,
    /// Waypoints in world coordinates, starting at the current cell.
    pub path: Vec<(f64, f64)>,
    pub chain: MlChain,
}

impl Candidate {
    pub fn from_update(id: usize, u: &UpdateGraph) -> Self {
        Candidate {
            id,
            path: Vec::new(),
            chain: MlChain::from_update(u),
        }
    }

    pub fn hypothesis(&self) -> UpdateGraph {
        self.chain.to_update()
    }
}

fn mat_vec(block: &[f64], x: &[f64]) -> Vec<f64> {
    let cols = x.len();
    block
        .chunks(cols)
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// Builds ML chains from one belief: the MAP estimate is recovered once and
/// shared by every predicted path.
pub struct MlPredictor<'a> {
    belief: &'a SqrtBelief,
    ctx: &'a PlanningContext,
    map: BTreeMap<VariableId, Vec<f64>>,
    delta: BTreeMap<VariableId, Vec<f64>>,
    odom_info: Mat3,
    lc_info: Mat3,
}

impl<'a> MlPredictor<'a> {
    pub fn new(belief: &'a SqrtBelief, ctx: &'a PlanningContext) -> Result<Self> {
        let (delta, _) = belief.solve_delta()?;
        let mut map = delta.clone();
        for (v, x) in map.iter_mut() {
            for (a, b) in x.iter_mut().zip(belief.graph().value(*v).expect("valued")) {
                *a += b;
            }
        }
        Ok(MlPredictor {
            belief,
            ctx,
            map,
            delta,
            odom_info: sqrt_information_diag(ctx.models.odom_sigmas),
            lc_info: sqrt_information_diag(ctx.models.lc_sigmas),
        })
    }

    pub fn map_pose(&self, v: VariableId) -> Option<Pose2> {
        self.map.get(&v).map(|x| Pose2::from_slice(x))
    }

    fn lin_pose(&self, v: VariableId) -> Pose2 {
        Pose2::from_slice(self.belief.graph().value(v).expect("valued"))
    }

    /// Between factor whose right-hand side vanishes at the MAP estimate,
    /// so that folding it in leaves `Δ*` unchanged.
    fn ml_between(&self, a: VariableId, lin_a: Pose2, b: VariableId, lin_b: Pose2, info: &Mat3) -> Result<LinearFactor> {
        let f = between_factor(a, b, lin_a, lin_b, lin_a.between(lin_b), info)?;
        let mut rhs = vec![0.0; f.factor_dim()];
        for (v, block) in f.involved().iter().zip(f.blocks()) {
            if let Some(dx) = self.delta.get(v) {
                for (r, y) in rhs.iter_mut().zip(mat_vec(block, dx)) {
                    *r += y;
                }
            }
        }
        f.with_rhs(rhs)
    }

    fn closure_partner(&self, p: Pose2) -> Option<VariableId> {
        let traj = &self.ctx.trajectory;
        let eligible = traj.len().saturating_sub(self.ctx.models.lc_min_gap);
        traj[..eligible]
            .iter()
            .map(|&v| (v, self.map_pose(v).expect("trajectory pose in belief").distance(p)))
            .filter(|&(_, d)| d <= self.ctx.models.lc_radius)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(v, _)| v)
    }

    /// Predicted chain along `path`. `path[0]` is the current cell and
    /// yields no new pose.
    pub fn predict(&self, path: &[(f64, f64)]) -> Result<MlChain> {
        if path.is_empty() {
            return Err(Error::EmptyPath);
        }
        let current = *self.ctx.trajectory.last().ok_or(Error::EmptyPath)?;
        let mut prev_var = current;
        let mut prev_lin = self.lin_pose(current);
        let mut prev_map = self.map_pose(current).expect("current pose in belief");
        let mut steps = Vec::with_capacity(path.len() - 1);
        let spacing = self.ctx.models.lc_spacing.max(1);
        let mut since_closure = spacing;
        for (k, w) in path.windows(2).enumerate() {
            let heading = (w[1].1 - w[0].1).atan2(w[1].0 - w[0].0);
            let target = Pose2::new(w[1].0, w[1].1, heading);
            let x_hat = prev_map.compose(prev_map.between(target));
            let var = VariableId::new(self.ctx.next_id + k as u32, 3);
            let odom = self.ml_between(prev_var, prev_lin, var, x_hat, &self.odom_info)?;
            let mut closures = Vec::new();
            let partner = (since_closure >= spacing).then(|| self.closure_partner(x_hat)).flatten();
            match partner {
                Some(old) => {
                    closures.push(self.ml_between(old, self.lin_pose(old), var, x_hat, &self.lc_info)?);
                    since_closure = 1;
                }
                None => since_closure += 1,
            }
            steps.push(ChainStep {
                new_variables: vec![var],
                new_values: BTreeMap::from([(var, x_hat.to_vec())]),
                factors: vec![odom],
                closures,
            });
            prev_var = var;
            prev_lin = x_hat;
            prev_map = x_hat;
        }
        Ok(MlChain { steps })
    }
}

/// ML hypothesis of a single path; see [`MlPredictor::predict`].
pub fn ml_hypothesis(b: &SqrtBelief, ctx: &PlanningContext, path: &[(f64, f64)]) -> Result<UpdateGraph> {
    Ok(MlPredictor::new(b, ctx)?.predict(path)?.to_update())
}

/// Entropy drop between a belief and its update. Rows before `j_scalar`
/// are shared, so only the suffix diagonals enter.
pub fn information_gain(before: &SqrtBelief, after: &SqrtBelief, report: &AffectedReport) -> f64 {
    let added = (after.scalar_dim() - before.scalar_dim()) as f64;
    after.log_abs_det_from(report.j_scalar) - before.log_abs_det_from(report.j_scalar) - added * HALF_LN_2PI_E
}

fn evaluate_full(b: &SqrtBelief, h: &UpdateGraph, policy: SuffixPolicy) -> Result<(f64, SqrtBelief, AffectedReport)> {
    if h.is_empty() {
        let report = AffectedReport {
            j_scalar: b.scalar_dim(),
            nnz_after: b.nnz(),
            ..AffectedReport::default()
        };
        return Ok((0.0, b.clone(), report));
    }
    let (after, report) = b.incremental_update(h, policy)?;
    Ok((information_gain(b, &after, &report), after, report))
}

/// `entropy(b) − entropy(b ⊕ h)`, computed on a copy.
pub fn evaluate(b: &SqrtBelief, h: &UpdateGraph, policy: SuffixPolicy) -> Result<(f64, AffectedReport)> {
    evaluate_full(b, h, policy).map(|(v, _, r)| (v, r))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TacticConfig {
    pub tactic: Tactic,
    /// Continue the session with the reordered belief.
    pub keep_order: bool,
}

impl Default for TacticConfig {
    fn default() -> Self {
        TacticConfig {
            tactic: Tactic::Baseline,
            keep_order: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PlanResult {
    pub chosen: usize,
    pub values: Vec<f64>,
    pub reports: Vec<AffectedReport>,
    pub reorder_report: AffectedReport,
}

impl PlanResult {
    /// Summed cost of every candidate update.
    pub fn planning_flops(&self) -> FlopCounter {
        self.reports.iter().fold(FlopCounter::default(), |a, r| a + r.flops)
    }

    pub fn affected_scalars(&self) -> usize {
        self.reports.iter().map(|r| r.affected_scalars).sum()
    }
}

/// Highest value, with near-ties resolved towards the lowest id.
fn argmax(candidates: &[Candidate], values: &[f64]) -> usize {
    let mut best = 0;
    for k in 1..values.len() {
        let better = values[k] > values[best] + TIE_TOLERANCE;
        let tie = (values[k] - values[best]).abs() <= TIE_TOLERANCE;
        if better || (tie && candidates[k].id < candidates[best].id) {
            best = k;
        }
    }
    candidates[best].id
}

/// Evaluates every candidate after re-expressing `b` under `order`.
pub fn plan_with_order(
    b: &SqrtBelief,
    candidates: &[Candidate],
    order: Option<&StateOrder>,
    keep_order: bool,
) -> Result<(PlanResult, SqrtBelief)> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    let (work, reorder_report) = match order {
        Some(o) => b.apply_order(o)?,
        None => (b.clone(), AffectedReport::default()),
    };
    let evaluated = candidates
        .par_iter()
        .map(|c| evaluate(&work, &c.hypothesis(), SuffixPolicy::Baseline))
        .collect::<Result<Vec<_>>>()?;
    let (values, reports): (Vec<f64>, Vec<AffectedReport>) = evaluated.into_iter().unzip();
    let result = PlanResult {
        chosen: argmax(candidates, &values),
        values,
        reports,
        reorder_report,
    };
    Ok((result, if keep_order { work } else { b.clone() }))
}

/// Single-hypothesis planning: one reorder from all candidates' ML
/// hypotheses, then one evaluation per candidate.
pub fn plan_ml(b: &SqrtBelief, candidates: &[Candidate], cfg: &TacticConfig) -> Result<(PlanResult, SqrtBelief)> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    let hyps: Vec<UpdateGraph> = candidates.iter().map(Candidate::hypothesis).collect();
    let order = cfg.tactic.compute_order(b, &hyps)?;
    plan_with_order(b, candidates, order.as_ref(), cfg.keep_order)
}

/// Finite observation model for multi-hypothesis planning: each predicted
/// closure is detected independently with probability `p_detect`, and
/// detected closures share one discretized residual shift.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationModel {
    pub p_detect: f64,
    /// `(weight, offset)` pairs; offsets shift whitened closure residuals.
    pub residuals: Vec<(f64, f64)>,
}

impl Default for ObservationModel {
    fn default() -> Self {
        ObservationModel {
            p_detect: 0.8,
            residuals: vec![(1.0, 0.0)],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiConfig {
    pub obs: ObservationModel,
    pub horizon: usize,
    pub branch_k: usize,
    /// Upper bound on hypothesis-tree nodes over all candidates.
    pub node_cap: usize,
}

impl Default for MultiConfig {
    fn default() -> Self {
        MultiConfig {
            obs: ObservationModel::default(),
            horizon: 2,
            branch_k: 2,
            node_cap: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub weight: f64,
    pub update: UpdateGraph,
}

/// The `branch_k` most likely realizations of a step, renormalized. The
/// all-detected realization comes first; the rest follow by weight.
pub fn step_branches(step: &ChainStep, obs: &ObservationModel, branch_k: usize) -> Result<Vec<Branch>> {
    let m = step.closures.len();
    let p = obs.p_detect;
    let weight_of = |absent: usize| p.powi((m - absent) as i32) * (1.0 - p).powi(absent as i32);
    let mut subsets: Vec<(f64, Vec<bool>)> = vec![(weight_of(0), vec![true; m])];
    let mut counts: Vec<usize> = (1..=m).collect();
    counts.sort_by(|&a, &b| weight_of(b).total_cmp(&weight_of(a)));
    'outer: for a in counts {
        for absent in (0..m).combinations(a) {
            if subsets.len() >= branch_k.max(1) {
                break 'outer;
            }
            let mut present = vec![true; m];
            for i in absent {
                present[i] = false;
            }
            subsets.push((weight_of(a), present));
        }
    }
    let mut entries: Vec<(f64, usize, usize)> = Vec::new();
    for (s, (w, _)) in subsets.iter().enumerate() {
        for (r, &(rw, _)) in obs.residuals.iter().enumerate() {
            entries.push((w * rw, s, r));
        }
    }
    let rest = &mut entries[1..];
    rest.sort_by(|a, b| b.0.total_cmp(&a.0));
    let kept: Vec<_> = entries
        .into_iter()
        .filter(|e| e.0 > 0.0)
        .take(branch_k.max(1))
        .collect();
    let total: f64 = kept.iter().map(|e| e.0).sum();
    kept.into_iter()
        .map(|(w, s, r)| {
            let offset = if m == 0 { 0.0 } else { obs.residuals[r].1 };
            Ok(Branch {
                weight: w / total,
                update: step.realize(&subsets[s].1, offset)?,
            })
        })
        .collect()
}

struct TreeWalk<'a> {
    tactic: Tactic,
    cfg: &'a MultiConfig,
    nodes: &'a AtomicUsize,
}

impl TreeWalk<'_> {
    fn visit(&self) -> Result<()> {
        if self.nodes.fetch_add(1, AtomicOrdering::Relaxed) + 1 > self.cfg.node_cap {
            return Err(Error::BranchExplosion { cap: self.cfg.node_cap });
        }
        Ok(())
    }

    /// Weighted gain of the subtree below a node whose branches are given.
    fn expand(
        &self,
        node: &SqrtBelief,
        branches: &[Branch],
        steps: &[ChainStep],
        weight: f64,
        report: &mut AffectedReport,
    ) -> Result<f64> {
        let mut value = 0.0;
        for br in branches {
            self.visit()?;
            let (gain, child, rep) = evaluate_full(node, &br.update, SuffixPolicy::Baseline)?;
            accumulate(report, &rep);
            let w = weight * br.weight;
            value += w * gain;
            if let Some((next, deeper)) = steps.split_first() {
                let next_branches = step_branches(next, &self.cfg.obs, self.cfg.branch_k)?;
                let hyps: Vec<UpdateGraph> = next_branches.iter().map(|b| b.update.clone()).collect();
                let child = match self.tactic.compute_order(&child, &hyps)? {
                    Some(order) => {
                        let (c, rep) = child.apply_order(&order)?;
                        report.flops.add(rep.flops);
                        c
                    }
                    None => child,
                };
                value += self.expand(&child, &next_branches, deeper, w, report)?;
            }
        }
        Ok(value)
    }
}

fn accumulate(acc: &mut AffectedReport, r: &AffectedReport) {
    acc.affected_vars += r.affected_vars;
    acc.affected_scalars += r.affected_scalars;
    acc.flops.add(r.flops);
    acc.nnz_after = r.nnz_after;
}

/// Multi-hypothesis planning over a hypothesis tree of depth `horizon`.
///
/// The root order is computed from every candidate's first-level branches;
/// below the root each node is reordered from its own branches before it
/// is expanded. A candidate's value is the likelihood-weighted entropy drop
/// at the leaves.
pub fn plan_multi(
    b: &SqrtBelief,
    candidates: &[Candidate],
    multi: &MultiConfig,
    cfg: &TacticConfig,
) -> Result<(PlanResult, SqrtBelief)> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    if multi.horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be at least 1".into()));
    }
    let steps: Vec<Vec<ChainStep>> = candidates.iter().map(|c| c.chain.split(multi.horizon)).collect();
    let roots: Vec<Vec<Branch>> = steps
        .iter()
        .map(|s| match s.first() {
            Some(first) => step_branches(first, &multi.obs, multi.branch_k),
            None => Ok(Vec::new()),
        })
        .collect::<Result<_>>()?;
    let hyps: Vec<UpdateGraph> = roots.iter().flatten().map(|br| br.update.clone()).collect();
    let (work, reorder_report) = match cfg.tactic.compute_order(b, &hyps)? {
        Some(order) => b.apply_order(&order)?,
        None => (b.clone(), AffectedReport::default()),
    };
    let nodes = AtomicUsize::new(1);
    let walk = TreeWalk {
        tactic: cfg.tactic,
        cfg: multi,
        nodes: &nodes,
    };
    let evaluated = steps
        .par_iter()
        .zip(&roots)
        .map(|(s, root)| {
            let mut report = AffectedReport::default();
            let deeper = s.get(1..).unwrap_or(&[]);
            let value = walk.expand(&work, root, deeper, 1.0, &mut report)?;
            Ok((value, report))
        })
        .collect::<Result<Vec<_>>>()?;
    let (values, reports): (Vec<f64>, Vec<AffectedReport>) = evaluated.into_iter().unzip();
    let result = PlanResult {
        chosen: argmax(candidates, &values),
        values,
        reports,
        reorder_report,
    };
    Ok((result, if cfg.keep_order { work } else { b.clone() }))
}

/// How involvement levels are estimated when the exact hypotheses are
/// unknown or too many.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HeuristicMode {
    /// Levels from the candidates' ML hypotheses.
    MlProxy,
    /// ML levels, with the listed variables pinned to level zero.
    NeverInvolved(BTreeSet<VariableId>),
}

pub fn heuristic_classification(
    b: &SqrtBelief,
    candidates: &[Candidate],
    mode: &HeuristicMode,
    c: ClassCount,
) -> ClassAssignment {
    let hyps: Vec<UpdateGraph> = candidates.iter().map(Candidate::hypothesis).collect();
    let mut levels = involvement_levels(b.order(), &hyps);
    if let HeuristicMode::NeverInvolved(set) = mode {
        for (p, v) in b.order().variables().iter().enumerate() {
            if set.contains(v) {
                levels[p] = 0;
            }
        }
    }
    classify(&levels, c)
}

/// Plain PIVOT order from a heuristic class assignment.
pub fn heuristic_order(b: &SqrtBelief, classes: &ClassAssignment) -> StateOrder {
    pivot(b.order(), classes)
}
