//! Random instance generators for property tests and the acceptance suite.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::belief::{SqrtBelief, StateOrder};
use crate::factorgraph::se2::{between_factor, prior_factor, sqrt_information_diag, Pose2};
use crate::factorgraph::{FactorGraph, LinearFactor, UpdateGraph, VariableId};
use crate::planner::Candidate;

/// Shape of a random factor graph.
#[derive(Clone, Copy, Debug)]
pub struct GraphShape {
    pub n_vars: usize,
    pub max_dim: u32,
    /// Factors beyond the spanning chain.
    pub extra_factors: usize,
    /// Maximum arity of an extra factor.
    pub max_arity: usize,
}

impl Default for GraphShape {
    fn default() -> Self {
        GraphShape {
            n_vars: 8,
            max_dim: 3,
            extra_factors: 6,
            max_arity: 3,
        }
    }
}

fn gaussian<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// Random factor over `vars` with `rows` rows; the first block is made
/// diagonally dominant when it is square so that chains stay well
/// conditioned.
pub fn random_factor<R: Rng>(rng: &mut R, vars: &[VariableId], rows: usize) -> LinearFactor {
    let blocks: Vec<Vec<f64>> = vars
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let mut b = gaussian(rng, rows * v.dim());
            if k + 1 == vars.len() && rows == v.dim() {
                for i in 0..rows {
                    b[i * rows + i] += 3.0 * b[i * rows + i].signum();
                }
            }
            b
        })
        .collect();
    LinearFactor::new(vars.to_vec(), blocks, gaussian(rng, rows)).expect("random blocks are valid")
}

fn pick_distinct<R: Rng>(rng: &mut R, pool: &[VariableId], k: usize) -> Vec<VariableId> {
    let k = k.min(pool.len());
    let mut idx: Vec<usize> = rand::seq::index::sample(rng, pool.len(), k).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| pool[i]).collect()
}

/// Full-rank random graph: a square prior on the first variable, a chain
/// factor into every later variable, and extra random factors.
pub fn random_graph<R: Rng>(rng: &mut R, shape: GraphShape) -> FactorGraph {
    let mut g = FactorGraph::new();
    let vars: Vec<VariableId> = (0..shape.n_vars)
        .map(|i| VariableId::new(i as u32, rng.random_range(1..=shape.max_dim)))
        .collect();
    for &v in &vars {
        let value = gaussian(rng, v.dim());
        g.add_variable(v, Some(value)).expect("fresh ids");
    }
    if let Some(&first) = vars.first() {
        g.add_factor(random_factor(rng, &[first], first.dim())).expect("known variable");
    }
    for w in vars.windows(2) {
        g.add_factor(random_factor(rng, w, w[1].dim())).expect("known variables");
    }
    for _ in 0..shape.extra_factors {
        if vars.len() < 2 {
            break;
        }
        let arity = rng.random_range(2..=shape.max_arity.max(2));
        let members = pick_distinct(rng, &vars, arity);
        let rows = rng.random_range(1..=3);
        g.add_factor(random_factor(rng, &members, rows)).expect("known variables");
    }
    g
}

/// Scalar dimension of a variable set.
pub fn scalar_dim(vars: &[VariableId]) -> usize {
    vars.iter().map(|v| v.dim()).sum()
}

/// Random update over `graph`: `n_new` chained new variables attached to a
/// random existing variable, plus `n_links` factors tying a new variable to
/// random existing ones.
pub fn random_update<R: Rng>(
    rng: &mut R,
    graph: &FactorGraph,
    n_new: usize,
    n_links: usize,
    max_dim: u32,
) -> UpdateGraph {
    let base = graph.variables();
    let next = base.iter().map(|v| v.id + 1).max().unwrap_or(0);
    let mut u = UpdateGraph::default();
    let mut prev = if base.is_empty() {
        None
    } else {
        Some(base[rng.random_range(0..base.len())])
    };
    for k in 0..n_new {
        let v = VariableId::new(next + k as u32, rng.random_range(1..=max_dim));
        u.new_variables.push(v);
        u.new_values.insert(v, gaussian(rng, v.dim()));
        let f = match prev {
            Some(p) => random_factor(rng, &[p, v], v.dim()),
            None => random_factor(rng, &[v], v.dim()),
        };
        u.new_factors.push(f);
        prev = Some(v);
    }
    for _ in 0..n_links {
        if base.is_empty() {
            break;
        }
        let anchor = base[rng.random_range(0..base.len())];
        let rows = rng.random_range(1..=3);
        let f = match u.new_variables.last() {
            Some(&v) => random_factor(rng, &[anchor, v], rows),
            None => random_factor(rng, &[anchor], rows),
        };
        u.new_factors.push(f);
    }
    u
}

/// A hypothesis touching exactly the base variables in `involved`, each via
/// its own factor to a single new variable.
pub fn hypothesis_touching<R: Rng>(rng: &mut R, graph: &FactorGraph, involved: &[VariableId]) -> UpdateGraph {
    let next = graph.variables().iter().map(|v| v.id + 1).max().unwrap_or(0);
    let v = VariableId::new(next, 1);
    let mut u = UpdateGraph::default();
    u.new_variables.push(v);
    u.new_values.insert(v, vec![0.0]);
    u.new_factors.push(random_factor(rng, &[v], 1));
    for &x in involved {
        u.new_factors.push(random_factor(rng, &[x, v], 1));
    }
    u
}

/// `count` hypotheses over `graph`, each involving a random non-empty
/// subset of at most `max_involved` base variables.
pub fn random_hypotheses<R: Rng>(
    rng: &mut R,
    graph: &FactorGraph,
    count: usize,
    max_involved: usize,
) -> Vec<UpdateGraph> {
    let vars = graph.variables();
    (0..count)
        .map(|_| {
            let k = rng.random_range(1..=max_involved.min(vars.len()).max(1));
            let involved = pick_distinct(rng, vars, k);
            hypothesis_touching(rng, graph, &involved)
        })
        .collect()
}

/// Pose chain along the x axis with unit spacing: an anchor prior, noisy
/// odometry, and linearization points perturbed away from the truth so
/// that `Δ*` is non-zero. Returns the graph and the pose ids in time order.
pub fn random_pose_chain<R: Rng>(rng: &mut R, n: usize) -> (FactorGraph, Vec<VariableId>) {
    let mut g = FactorGraph::new();
    let poses: Vec<VariableId> = (0..n as u32).map(|i| VariableId::new(i, 3)).collect();
    let truth: Vec<Pose2> = (0..n).map(|i| Pose2::new(i as f64, 0.0, 0.0)).collect();
    let lin: Vec<Pose2> = truth
        .iter()
        .map(|t| {
            let e = gaussian(rng, 3);
            Pose2::new(t.x + 0.05 * e[0], t.y + 0.05 * e[1], t.theta + 0.02 * e[2])
        })
        .collect();
    for (v, p) in poses.iter().zip(&lin) {
        g.add_variable(*v, Some(p.to_vec())).expect("fresh ids");
    }
    let odom = sqrt_information_diag([0.05, 0.05, 0.02]);
    if let Some(&first) = poses.first() {
        let anchor = sqrt_information_diag([0.1, 0.1, 0.05]);
        g.add_factor(prior_factor(first, lin[0], truth[0], &anchor).expect("valid prior"))
            .expect("known variable");
    }
    for k in 1..n {
        let e = gaussian(rng, 3);
        let t = truth[k - 1].between(truth[k]);
        let z = Pose2::new(t.x + 0.05 * e[0], t.y + 0.05 * e[1], t.theta + 0.02 * e[2]);
        let f = between_factor(poses[k - 1], poses[k], lin[k - 1], lin[k], z, &odom).expect("valid factor");
        g.add_factor(f).expect("known variables");
    }
    (g, poses)
}

/// A factorized random graph together with `n_candidates` random candidate
/// hypotheses, each extending the graph by a few variables and links.
pub fn random_planning_instance<R: Rng>(
    rng: &mut R,
    shape: GraphShape,
    n_candidates: usize,
) -> (SqrtBelief, Vec<Candidate>) {
    let g = random_graph(rng, shape);
    let order = StateOrder::new(g.variables().to_vec()).expect("distinct ids");
    let b = SqrtBelief::build(&g, order).expect("random graphs are full rank");
    let candidates = (0..n_candidates)
        .map(|id| {
            let n_new = rng.random_range(1..=3);
            let n_links = rng.random_range(1..=3);
            Candidate::from_update(id, &random_update(rng, &g, n_new, n_links, shape.max_dim))
        })
        .collect();
    (b, candidates)
}
