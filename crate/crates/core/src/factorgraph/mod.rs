//! Variables, whitened linear factors and Jacobian assembly.

pub mod g2o;
pub mod se2;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::belief::StateOrder;
use crate::error::{Error, Result};
use crate::linalg::{DenseVector, SparseRowMatrix};

pub use g2o::{load_pose_graph, PoseGraphFile};

/// A state variable: an opaque id plus its scalar dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct VariableId {
    pub id: u32,
    pub dim: u32,
}

impl VariableId {
    pub fn new(id: u32, dim: u32) -> Self {
        assert!(dim >= 1, "variable dimension must be positive");
        VariableId { id, dim }
    }

    pub fn dim(self) -> usize {
        self.dim as usize
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.id)
    }
}

/// A linearized Gaussian constraint, already whitened by the square root
/// information of its noise model.
///
/// `blocks[k]` is the row-major `factor_dim × involved[k].dim` Jacobian
/// block for the `k`-th involved variable.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearFactor {
    involved: Vec<VariableId>,
    blocks: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

impl LinearFactor {
    pub fn new(involved: Vec<VariableId>, blocks: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self> {
        let rows = rhs.len();
        if rows == 0 {
            return Err(Error::InvalidFactor("factor dimension is zero".into()));
        }
        if involved.is_empty() || involved.len() != blocks.len() {
            return Err(Error::InvalidFactor(format!(
                "{} variables but {} blocks",
                involved.len(),
                blocks.len()
            )));
        }
        let distinct: BTreeSet<_> = involved.iter().collect();
        if distinct.len() != involved.len() {
            return Err(Error::InvalidFactor("variable listed twice".into()));
        }
        for (v, b) in involved.iter().zip(&blocks) {
            if b.len() != rows * v.dim() {
                return Err(Error::InvalidFactor(format!(
                    "block for {v} has {} entries, expected {}",
                    b.len(),
                    rows * v.dim()
                )));
            }
        }
        if blocks.iter().all(|b| b.iter().all(|&x| x == 0.0)) {
            return Err(Error::InvalidFactor("all blocks are zero".into()));
        }
        Ok(LinearFactor {
            involved,
            blocks,
            rhs,
        })
    }

    /// Unary factor `block · x = rhs`.
    pub fn unary(var: VariableId, block: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        Self::new(vec![var], vec![block], rhs)
    }

    pub fn involved(&self) -> &[VariableId] {
        &self.involved
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn factor_dim(&self) -> usize {
        self.rhs.len()
    }

    /// Same factor with a different right-hand side.
    pub fn with_rhs(&self, rhs: Vec<f64>) -> Result<Self> {
        Self::new(self.involved.clone(), self.blocks.clone(), rhs)
    }
}

/// Factor graph: a variable set plus the factors over it, and the fixed
/// linearization point of every variable.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FactorGraph {
    variables: Vec<VariableId>,
    known: BTreeSet<VariableId>,
    factors: Vec<LinearFactor>,
    values: BTreeMap<VariableId, Vec<f64>>,
}

impl FactorGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable with its linearization value (zeros if `None`).
    pub fn add_variable(&mut self, var: VariableId, value: Option<Vec<f64>>) -> Result<()> {
        if self.known.iter().any(|v| v.id == var.id) {
            return Err(Error::InvalidFactor(format!("variable {var} already present")));
        }
        let value = value.unwrap_or_else(|| vec![0.0; var.dim()]);
        if value.len() != var.dim() {
            return Err(Error::InvalidFactor(format!("value for {var} has wrong length")));
        }
        self.variables.push(var);
        self.known.insert(var);
        self.values.insert(var, value);
        Ok(())
    }

    pub fn add_factor(&mut self, factor: LinearFactor) -> Result<()> {
        if let Some(&v) = factor.involved().iter().find(|v| !self.known.contains(v)) {
            return Err(Error::UnknownVariable(v));
        }
        self.factors.push(factor);
        Ok(())
    }

    /// Merges an update graph into this graph.
    pub fn merge(&mut self, update: &UpdateGraph) -> Result<()> {
        for &v in &update.new_variables {
            self.add_variable(v, update.new_values.get(&v).cloned())?;
        }
        for f in &update.new_factors {
            self.add_factor(f.clone())?;
        }
        Ok(())
    }

    pub fn variables(&self) -> &[VariableId] {
        &self.variables
    }

    pub fn contains(&self, var: VariableId) -> bool {
        self.known.contains(&var)
    }

    pub fn factors(&self) -> &[LinearFactor] {
        &self.factors
    }

    pub fn values(&self) -> &BTreeMap<VariableId, Vec<f64>> {
        &self.values
    }

    pub fn value(&self, var: VariableId) -> Option<&[f64]> {
        self.values.get(&var).map(Vec::as_slice)
    }

    pub fn scalar_dim(&self) -> usize {
        self.variables.iter().map(|v| v.dim()).sum()
    }
}

/// New variables and factors hypothesized (or observed) for one update.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct UpdateGraph {
    pub new_variables: Vec<VariableId>,
    pub new_factors: Vec<LinearFactor>,
    /// Linearization values for new variables; missing entries mean zero.
    pub new_values: BTreeMap<VariableId, Vec<f64>>,
}

impl UpdateGraph {
    pub fn is_empty(&self) -> bool {
        self.new_variables.is_empty() && self.new_factors.is_empty()
    }

    /// Every variable referenced by a new factor, base or new.
    pub fn referenced(&self) -> BTreeSet<VariableId> {
        self.new_factors
            .iter()
            .flat_map(|f| f.involved().iter().copied())
            .collect()
    }
}

/// Base-graph variables touched by any new factor of `update`.
pub fn involved_variables(update: &UpdateGraph) -> BTreeSet<VariableId> {
    let fresh: BTreeSet<_> = update.new_variables.iter().collect();
    update
        .referenced()
        .into_iter()
        .filter(|v| !fresh.contains(v))
        .collect()
}

/// Stacks the Jacobian rows of `factors` with columns laid out by `order`.
pub fn assemble_factors(
    factors: &[LinearFactor],
    order: &StateOrder,
) -> Result<(SparseRowMatrix, DenseVector)> {
    let mut j = SparseRowMatrix::new(order.scalar_dim());
    let mut rhs = Vec::new();
    for f in factors {
        let offsets = f
            .involved()
            .iter()
            .map(|&v| order.offset_of(v).ok_or(Error::UnknownVariable(v)))
            .collect::<Result<Vec<_>>>()?;
        for r in 0..f.factor_dim() {
            let mut row = Vec::new();
            for ((v, block), &off) in f.involved().iter().zip(f.blocks()).zip(&offsets) {
                let dim = v.dim();
                for c in 0..dim {
                    let x = block[r * dim + c];
                    if x != 0.0 {
                        row.push((off + c, x));
                    }
                }
            }
            j.push_row(row);
            rhs.push(f.rhs()[r]);
        }
    }
    Ok((j, rhs))
}

/// Jacobian and right-hand side of `graph` under `order`.
pub fn assemble(graph: &FactorGraph, order: &StateOrder) -> Result<(SparseRowMatrix, DenseVector)> {
    assemble_factors(graph.factors(), order)
}
