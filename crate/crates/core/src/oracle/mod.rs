//! Reference implementations used to cross-check the sparse kernels.
//!
//! Everything here is deliberately simple and slow: dense normal equations,
//! explicit symbolic elimination, and exhaustive permutation search.

pub mod fixtures;
pub mod random;

use std::collections::BTreeSet;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use crate::belief::{SqrtBelief, StateOrder};
use crate::error::{Error, Result};
use crate::factorgraph::{assemble, involved_variables, FactorGraph, UpdateGraph, VariableId};
use crate::linalg::SparseUpperTriangular;
use crate::ordering::PatternGraph;

/// Dense solution of a factor graph's normal equations.
#[derive(Clone, Debug)]
pub struct DenseReference {
    /// Upper Cholesky factor of `Λ`, with a positive diagonal.
    pub r: DMatrix<f64>,
    pub delta: Vec<f64>,
    pub log_abs_det: f64,
}

pub fn dense_gram(graph: &FactorGraph, order: &StateOrder) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (j, rhs) = assemble(graph, order)?;
    let n = j.n_cols();
    let mut a = DMatrix::zeros(j.n_rows(), n);
    for (i, row) in j.rows().iter().enumerate() {
        for &(c, v) in row {
            a[(i, c)] = v;
        }
    }
    let z = DVector::from_vec(rhs);
    Ok((a.transpose() * &a, a.transpose() * z))
}

pub fn dense_reference(graph: &FactorGraph, order: &StateOrder) -> Result<DenseReference> {
    let (lambda, eta) = dense_gram(graph, order)?;
    let chol = lambda
        .cholesky()
        .ok_or(Error::RankDeficient { column: 0 })?;
    let l = chol.l();
    let delta = chol.solve(&eta);
    let log_abs_det = l.diagonal().iter().map(|v| v.ln()).sum();
    Ok(DenseReference {
        r: l.transpose(),
        delta: delta.iter().copied().collect(),
        log_abs_det,
    })
}

pub fn to_dmatrix(r: &SparseUpperTriangular) -> DMatrix<f64> {
    let n = r.n();
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in r.rows().iter().enumerate() {
        for &(c, v) in row {
            m[(i, c)] = v;
        }
    }
    m
}

/// `‖RᵀR − Λ‖_F / ‖Λ‖_F` for a belief against its own retained factors.
pub fn gram_error(b: &SqrtBelief) -> Result<f64> {
    let (lambda, _) = dense_gram(b.graph(), b.order())?;
    let r = to_dmatrix(b.r());
    Ok((r.transpose() * &r - &lambda).norm() / lambda.norm())
}

/// Largest entrywise difference between two factors after normalizing
/// every row to a positive diagonal.
pub fn max_diff_up_to_sign(a: &SparseUpperTriangular, b: &SparseUpperTriangular) -> f64 {
    let a = to_dmatrix(&a.sign_normalized());
    let b = to_dmatrix(&b.sign_normalized());
    (a - b).amax()
}

/// Per-position dependency sets of a Bayes net: `deps[p]` lists the later
/// positions the variable at `p` is conditioned on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FillPattern {
    pub order: Vec<VariableId>,
    pub deps: Vec<BTreeSet<usize>>,
}

impl FillPattern {
    /// Number of dependency edges not present in the original pattern.
    pub fn fill_in(&self, pattern: &PatternGraph) -> usize {
        let mut fill = 0;
        for (p, deps) in self.deps.iter().enumerate() {
            let a = pattern.index_of(self.order[p]).expect("same variable set");
            for &q in deps {
                let b = pattern.index_of(self.order[q]).expect("same variable set");
                if !pattern.has_edge(a, b) {
                    fill += 1;
                }
            }
        }
        fill
    }

    pub fn edge_count(&self) -> usize {
        self.deps.iter().map(BTreeSet::len).sum()
    }
}

fn eliminate_from(adj: &mut [BTreeSet<usize>], start: usize, deps: &mut Vec<BTreeSet<usize>>) {
    for p in start..adj.len() {
        let nbrs: BTreeSet<usize> = adj[p].iter().copied().filter(|&q| q > p).collect();
        for &a in &nbrs {
            for &b in &nbrs {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
        deps.push(nbrs);
    }
}

/// Variable elimination in `order`: each eliminated variable's remaining
/// neighbours become its dependency set and are then connected pairwise.
pub fn symbolic_eliminate(graph: &FactorGraph, order: &StateOrder) -> Result<FillPattern> {
    let pattern = PatternGraph::from_factors(order.variables(), graph.factors())?;
    Ok(symbolic_eliminate_pattern(&pattern))
}

/// Elimination over a pattern in its own index order.
pub fn symbolic_eliminate_pattern(pattern: &PatternGraph) -> FillPattern {
    let mut adj: Vec<BTreeSet<usize>> = (0..pattern.len()).map(|i| pattern.neighbors(i).clone()).collect();
    let mut deps = Vec::with_capacity(pattern.len());
    eliminate_from(&mut adj, 0, &mut deps);
    FillPattern {
        order: pattern.vars().to_vec(),
        deps,
    }
}

/// Re-runs elimination on `graph` from position `j` of `order`, reusing
/// the dependency sets of the first `j` positions from `previous`.
///
/// Positions `0..j` of `order` must match `previous.order`, and no factor
/// of `graph` that is absent from the previous graph may touch them.
pub fn symbolic_eliminate_incremental(
    previous: &FillPattern,
    graph: &FactorGraph,
    order: &StateOrder,
    j: usize,
) -> Result<FillPattern> {
    assert_eq!(&previous.order[..j], &order.variables()[..j], "prefix mismatch");
    let pattern = PatternGraph::from_factors(order.variables(), graph.factors())?;
    let mut adj: Vec<BTreeSet<usize>> = (0..pattern.len()).map(|i| pattern.neighbors(i).clone()).collect();
    let mut deps = Vec::with_capacity(order.len());
    for p in 0..j {
        // marginal factor left behind by the eliminated prefix variable
        let members: BTreeSet<usize> = previous.deps[p]
            .iter()
            .map(|&q| order.position(previous.order[q]).expect("same variables"))
            .collect();
        for &a in &members {
            for &b in &members {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
        deps.push(members);
    }
    eliminate_from(&mut adj, j, &mut deps);
    Ok(FillPattern {
        order: order.variables().to_vec(),
        deps,
    })
}

/// Variable-block pattern of a belief's `R`, in the same shape as
/// [`FillPattern`].
pub fn block_pattern(b: &SqrtBelief) -> FillPattern {
    let order = b.order();
    let mut deps = vec![BTreeSet::new(); order.len()];
    for (i, row) in b.r().rows().iter().enumerate() {
        let p = order.var_at_scalar(i);
        for &(c, _) in row {
            let q = order.var_at_scalar(c);
            if q != p {
                deps[p].insert(q);
            }
        }
    }
    FillPattern {
        order: order.variables().to_vec(),
        deps,
    }
}

/// `Σ_H (number of positions at or after H's first involved variable)`.
pub fn total_affected(order: &StateOrder, hyps: &[UpdateGraph]) -> usize {
    let n = order.len();
    hyps.iter()
        .filter_map(|h| {
            involved_variables(h)
                .into_iter()
                .filter_map(|v| order.position(v))
                .min()
        })
        .map(|p| n - p)
        .sum()
}

/// Exhaustive minimum of [`total_affected`] over all orders of at most
/// eight variables. Returns the minimum and the first minimizing order in
/// lexicographic permutation order.
pub fn brute_force_total_affected(order: &StateOrder, hyps: &[UpdateGraph]) -> (usize, StateOrder) {
    let n = order.len();
    assert!(n <= 8, "exhaustive search is limited to 8 variables");
    let mut best = (usize::MAX, order.clone());
    for perm in (0..n).permutations(n) {
        let candidate = order.permuted(&perm);
        let total = total_affected(&candidate, hyps);
        if total < best.0 {
            best = (total, candidate);
        }
    }
    if n == 0 {
        best.0 = 0;
    }
    best
}

#[cfg(test)]
mod tests;
