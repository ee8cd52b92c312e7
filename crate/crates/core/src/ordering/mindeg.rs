//! Constrained minimum-degree ordering on the variable elimination graph.

use std::collections::BTreeSet;

use super::pattern::PatternGraph;

/// Per-variable elimination rank. Lower ranks are eliminated first; rank
/// `-1` marks a frozen prefix that keeps its original relative order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderingConstraint {
    ranks: Vec<i64>,
}

impl OrderingConstraint {
    /// Panics on a rank below `-1`.
    pub fn new(ranks: Vec<i64>) -> Self {
        assert!(ranks.iter().all(|&r| r >= -1), "ranks must be >= -1");
        OrderingConstraint { ranks }
    }

    pub fn uniform(n: usize) -> Self {
        OrderingConstraint { ranks: vec![0; n] }
    }

    pub fn ranks(&self) -> &[i64] {
        &self.ranks
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }
}

struct Elimination {
    adj: Vec<BTreeSet<usize>>,
    done: Vec<bool>,
    order: Vec<usize>,
}

impl Elimination {
    fn eliminate(&mut self, v: usize) {
        let nbrs = std::mem::take(&mut self.adj[v]);
        for &a in &nbrs {
            self.adj[a].remove(&v);
        }
        // the eliminated variable's neighbours become a clique
        for &a in &nbrs {
            for &b in &nbrs {
                if a != b {
                    self.adj[a].insert(b);
                }
            }
        }
        self.done[v] = true;
        self.order.push(v);
    }
}

/// Elimination order as a list of pattern indices.
///
/// All rank-`r` variables precede every rank-`r′ > r` variable. Within a
/// rank the variable of minimum current degree is eliminated next, ties
/// going to the smaller index.
pub fn constrained_min_degree(pattern: &PatternGraph, constraint: &OrderingConstraint) -> Vec<usize> {
    let n = pattern.len();
    assert_eq!(constraint.len(), n, "constraint size mismatch");
    let ranks = constraint.ranks();
    let mut e = Elimination {
        adj: pattern.adjacency().to_vec(),
        done: vec![false; n],
        order: Vec::with_capacity(n),
    };

    for v in 0..n {
        if ranks[v] == -1 {
            e.eliminate(v);
        }
    }
    let levels: BTreeSet<i64> = ranks.iter().copied().filter(|&r| r >= 0).collect();
    for level in levels {
        let mut pool: Vec<usize> = (0..n).filter(|&v| ranks[v] == level).collect();
        while !pool.is_empty() {
            let (k, _) = pool
                .iter()
                .enumerate()
                .min_by_key(|&(_, &v)| (e.adj[v].len(), v))
                .expect("pool is non-empty");
            let v = pool.remove(k);
            e.eliminate(v);
        }
    }
    debug_assert!(e.done.iter().all(|&d| d));
    e.order
}
