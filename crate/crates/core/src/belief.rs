//! The factorized Gaussian belief.
//!
//! A [`SqrtBelief`] keeps the square-root information matrix `R` of the
//! linearized system together with its rotated right-hand side `d`, the
//! state order that fixes the column layout of `R`, and every factor folded
//! in so far. Beliefs are values: updates and reorders return new beliefs.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::factorgraph::{assemble, assemble_factors, involved_variables, FactorGraph, LinearFactor, UpdateGraph, VariableId};
use crate::linalg::{
    back_substitute, log_abs_det, partial_refactor, permute_and_refactor, qr_factorize,
    reorder_and_refactor_tail, DenseVector, FlopCounter, Permutation, SparseUpperTriangular,
};
use crate::ordering::{baseline_suffix_order, PatternGraph};

/// `½·ln(2πe)`, the entropy of a standard normal scalar.
pub const HALF_LN_2PI_E: f64 = 1.418_938_533_204_672_7;

/// Ordered state vector with scalar column offsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateOrder {
    seq: Vec<VariableId>,
    offsets: Vec<usize>,
    position: BTreeMap<VariableId, usize>,
    n: usize,
}

impl StateOrder {
    pub fn new(seq: Vec<VariableId>) -> Result<Self> {
        let mut order = StateOrder {
            seq: Vec::new(),
            offsets: Vec::new(),
            position: BTreeMap::new(),
            n: 0,
        };
        order.append(&seq)?;
        Ok(order)
    }

    /// Appends variables at the tail.
    pub fn append(&mut self, vars: &[VariableId]) -> Result<()> {
        let ids: BTreeSet<u32> = self.seq.iter().map(|v| v.id).collect();
        let mut fresh = BTreeSet::new();
        for v in vars {
            if ids.contains(&v.id) || !fresh.insert(v.id) {
                return Err(Error::InvalidUpdate(format!("variable {v} already in the order")));
            }
        }
        for &v in vars {
            self.position.insert(v, self.seq.len());
            self.seq.push(v);
            self.offsets.push(self.n);
            self.n += v.dim();
        }
        Ok(())
    }

    pub fn variables(&self) -> &[VariableId] {
        &self.seq
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    pub fn position(&self, v: VariableId) -> Option<usize> {
        self.position.get(&v).copied()
    }

    pub fn contains(&self, v: VariableId) -> bool {
        self.position.contains_key(&v)
    }

    pub fn offset_of(&self, v: VariableId) -> Option<usize> {
        self.position(v).map(|p| self.offsets[p])
    }

    /// Scalar offset of position `p`; `p == len()` gives the total dimension.
    pub fn offset(&self, p: usize) -> usize {
        if p == self.seq.len() {
            self.n
        } else {
            self.offsets[p]
        }
    }

    pub fn scalar_dim(&self) -> usize {
        self.n
    }

    /// Position of the variable owning scalar column `col`.
    pub fn var_at_scalar(&self, col: usize) -> usize {
        assert!(col < self.n, "column {col} out of range");
        self.offsets.partition_point(|&o| o <= col) - 1
    }

    /// Reordered copy: position `k` of the result holds `self[new_to_old[k]]`.
    pub fn permuted(&self, new_to_old: &[usize]) -> StateOrder {
        StateOrder::new(new_to_old.iter().map(|&p| self.seq[p]).collect())
            .expect("a permutation of a valid order is valid")
    }

    /// Scalar-level `new_to_old` map taking this order's columns to `new`'s.
    pub fn scalar_permutation_to(&self, new: &StateOrder) -> Result<Permutation> {
        if new.len() != self.len() {
            return Err(Error::NotAPermutation);
        }
        let mut map = Vec::with_capacity(self.n);
        for &v in &new.seq {
            let off = self.offset_of(v).ok_or(Error::NotAPermutation)?;
            map.extend(off..off + v.dim());
        }
        Permutation::from_new_to_old(map)
    }
}

/// How the affected suffix is ordered during an incremental update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SuffixPolicy {
    /// Suffix order preserved; new variables stay at the tail.
    Keep,
    /// Suffix reordered by minimum degree with involved and new variables
    /// constrained last.
    #[default]
    Baseline,
}

/// Extent and cost of one refactorization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct AffectedReport {
    /// First recomputed scalar column (0-based).
    pub j_scalar: usize,
    pub affected_vars: usize,
    /// Number of recomputed scalar rows.
    pub affected_scalars: usize,
    pub flops: FlopCounter,
    pub nnz_after: usize,
}

/// Gaussian belief in square-root information form.
///
/// Invariant: `RᵀR` is the Gram matrix of the retained factors assembled
/// under `order`, and `R·Δ = d` yields the MAP correction about the
/// linearization point.
#[derive(Clone, Debug)]
pub struct SqrtBelief {
    order: StateOrder,
    r: SparseUpperTriangular,
    d: DenseVector,
    graph: FactorGraph,
}

fn check_covers(graph: &FactorGraph, order: &StateOrder) -> Result<()> {
    if order.len() != graph.variables().len()
        || graph.variables().iter().any(|&v| !order.contains(v))
    {
        return Err(Error::NotAPermutation);
    }
    Ok(())
}

impl SqrtBelief {
    pub fn build(graph: &FactorGraph, order: StateOrder) -> Result<Self> {
        Self::build_counted(graph, order).map(|(b, _)| b)
    }

    /// Batch factorization, also returning its cost.
    pub fn build_counted(graph: &FactorGraph, order: StateOrder) -> Result<(Self, FlopCounter)> {
        check_covers(graph, &order)?;
        let (j, rhs) = assemble(graph, &order)?;
        let (r, d, flops) = qr_factorize(&j, &rhs)?;
        let belief = SqrtBelief {
            order,
            r,
            d,
            graph: graph.clone(),
        };
        Ok((belief, flops))
    }

    pub fn order(&self) -> &StateOrder {
        &self.order
    }

    pub fn r(&self) -> &SparseUpperTriangular {
        &self.r
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn factors(&self) -> &[LinearFactor] {
        self.graph.factors()
    }

    pub fn graph(&self) -> &FactorGraph {
        &self.graph
    }

    pub fn lin_point(&self) -> &BTreeMap<VariableId, Vec<f64>> {
        self.graph.values()
    }

    pub fn nnz(&self) -> usize {
        self.r.nnz()
    }

    pub fn scalar_dim(&self) -> usize {
        self.order.scalar_dim()
    }

    /// Folds an update into the belief, recomputing only the trailing block
    /// of `R` that starts at the first involved variable.
    pub fn incremental_update(&self, u: &UpdateGraph, policy: SuffixPolicy) -> Result<(SqrtBelief, AffectedReport)> {
        let involved = involved_variables(u);
        if let Some(&v) = involved.iter().find(|&&v| !self.order.contains(v)) {
            return Err(Error::UnknownVariable(v));
        }
        if u.is_empty() {
            let report = AffectedReport {
                j_scalar: self.scalar_dim(),
                nnz_after: self.nnz(),
                ..AffectedReport::default()
            };
            return Ok((self.clone(), report));
        }
        let mut graph = self.graph.clone();
        graph.merge(u)?;
        let mut order = self.order.clone();
        order.append(&u.new_variables)?;

        let n_old = self.scalar_dim();
        let n = order.scalar_dim();
        let j_pos = involved
            .iter()
            .filter_map(|&v| self.order.position(v))
            .min()
            .unwrap_or(self.order.len());
        let j = order.offset(j_pos);

        let mut r = self.r.clone();
        r.augment(n - n_old);
        let mut d = self.d.clone();
        d.resize(n, 0.0);

        let (r, d, flops) = match policy {
            SuffixPolicy::Keep => {
                let (rows, rhs) = assemble_factors(&u.new_factors, &order)?;
                partial_refactor(&r, &d, &rows, &rhs, j)?
            }
            SuffixPolicy::Baseline => {
                let suffix = order.variables()[j_pos..].to_vec();
                let mut pattern = PatternGraph::new(suffix.clone());
                for row in &self.r.rows()[j..n_old] {
                    let mut members: Vec<usize> =
                        row.iter().map(|&(c, _)| order.var_at_scalar(c) - j_pos).collect();
                    members.dedup();
                    pattern.add_clique(&members);
                }
                for f in &u.new_factors {
                    let members: Vec<usize> = f
                        .involved()
                        .iter()
                        .map(|&v| order.position(v).expect("merged above") - j_pos)
                        .collect();
                    pattern.add_clique(&members);
                }
                let fresh: BTreeSet<_> = u.new_variables.iter().collect();
                let last: Vec<bool> = suffix
                    .iter()
                    .map(|v| involved.contains(v) || fresh.contains(v))
                    .collect();
                let frag = baseline_suffix_order(&pattern, &last);
                let new_to_old: Vec<usize> = (0..j_pos).chain(frag.iter().map(|&k| k + j_pos)).collect();
                let reordered = order.permuted(&new_to_old);
                let old_to_new = order.scalar_permutation_to(&reordered)?.old_to_new();
                order = reordered;
                let (rows, rhs) = assemble_factors(&u.new_factors, &order)?;
                reorder_and_refactor_tail(&r, &d, &old_to_new, &rows, &rhs, j)?
            }
        };

        let report = AffectedReport {
            j_scalar: j,
            affected_vars: order.len() - j_pos,
            affected_scalars: n - j,
            flops,
            nnz_after: r.nnz(),
        };
        Ok((SqrtBelief { order, r, d, graph }, report))
    }

    /// Re-expresses the belief under `new_order`, refactorizing only the
    /// row band between the first and last moved scalar columns.
    pub fn apply_order(&self, new_order: &StateOrder) -> Result<(SqrtBelief, AffectedReport)> {
        let perm = self.order.scalar_permutation_to(new_order)?;
        let (r, d, flops) = permute_and_refactor(&self.r, &self.d, &perm)?;
        let report = match perm.moved_range() {
            None => AffectedReport {
                j_scalar: self.scalar_dim(),
                nnz_after: r.nnz(),
                ..AffectedReport::default()
            },
            Some((first, last)) => AffectedReport {
                j_scalar: first,
                affected_vars: new_order.var_at_scalar(last) - new_order.var_at_scalar(first) + 1,
                affected_scalars: last - first + 1,
                flops,
                nnz_after: r.nnz(),
            },
        };
        let belief = SqrtBelief {
            order: new_order.clone(),
            r,
            d,
            graph: self.graph.clone(),
        };
        Ok((belief, report))
    }

    /// MAP correction `Δ*` keyed by variable, with its back-substitution cost.
    pub fn solve_delta(&self) -> Result<(BTreeMap<VariableId, Vec<f64>>, FlopCounter)> {
        let (x, flops) = back_substitute(&self.r, &self.d)?;
        let delta = self
            .order
            .variables()
            .iter()
            .enumerate()
            .map(|(p, &v)| {
                let off = self.order.offset(p);
                (v, x[off..off + v.dim()].to_vec())
            })
            .collect();
        Ok((delta, flops))
    }

    /// Linearization point plus `Δ*`, keyed by variable.
    pub fn map_estimate(&self) -> Result<BTreeMap<VariableId, Vec<f64>>> {
        self.map_estimate_counted().map(|(m, _)| m)
    }

    pub fn map_estimate_counted(&self) -> Result<(BTreeMap<VariableId, Vec<f64>>, FlopCounter)> {
        let (mut delta, flops) = self.solve_delta()?;
        for (v, dx) in delta.iter_mut() {
            let lin = self.graph.value(*v).expect("every variable has a value");
            for (a, b) in dx.iter_mut().zip(lin) {
                *a += b;
            }
        }
        Ok((delta, flops))
    }

    pub fn log_abs_det(&self) -> Result<f64> {
        log_abs_det(&self.r)
    }

    /// `Σ_{i ≥ j} ln|R(i,i)|`.
    pub fn log_abs_det_from(&self, j: usize) -> f64 {
        (j..self.r.n()).map(|i| self.r.row(i)[0].1.abs().ln()).sum()
    }

    /// Differential entropy `(n/2)·ln(2πe) − ln|R|`.
    pub fn entropy(&self) -> Result<f64> {
        Ok(self.scalar_dim() as f64 * HALF_LN_2PI_E - self.log_abs_det()?)
    }
}
