use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::factorgraph::{LinearFactor, VariableId};

/// Variable-level nonzero pattern of `Λ = JᵀJ`: `i ~ k` iff some factor
/// touches both. Indices refer to positions in `vars`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternGraph {
    vars: Vec<VariableId>,
    index: BTreeMap<VariableId, usize>,
    adj: Vec<BTreeSet<usize>>,
}

impl PatternGraph {
    /// Edgeless pattern over `vars`.
    pub fn new(vars: Vec<VariableId>) -> Self {
        let index = vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let adj = vec![BTreeSet::new(); vars.len()];
        PatternGraph { vars, index, adj }
    }

    pub fn from_factors(vars: &[VariableId], factors: &[LinearFactor]) -> Result<Self> {
        let mut g = Self::new(vars.to_vec());
        for f in factors {
            let members = f
                .involved()
                .iter()
                .map(|v| g.index_of(*v).ok_or(Error::UnknownVariable(*v)))
                .collect::<Result<Vec<_>>>()?;
            g.add_clique(&members);
        }
        Ok(g)
    }

    /// Connects every pair in `members`.
    pub fn add_clique(&mut self, members: &[usize]) {
        for (k, &a) in members.iter().enumerate() {
            for &b in &members[k + 1..] {
                if a != b {
                    self.adj[a].insert(b);
                    self.adj[b].insert(a);
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn vars(&self) -> &[VariableId] {
        &self.vars
    }

    pub fn index_of(&self, v: VariableId) -> Option<usize> {
        self.index.get(&v).copied()
    }

    pub fn neighbors(&self, i: usize) -> &BTreeSet<usize> {
        &self.adj[i]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&b)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub(crate) fn adjacency(&self) -> &[BTreeSet<usize>] {
        &self.adj
    }
}
