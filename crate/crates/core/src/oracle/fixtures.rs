//! A small hand-built landmark-SLAM instance used across the test suites.
//!
//! Three poses `x1..x3` and three landmarks `l1..l3`, all scalar:
//!
//! ```text
//! prior(x1)  m(x1,x2)  m(x2,x3)
//! o(x1,l1)  o(x2,l1)  o(x1,l2)  o(x2,l2)  o(x3,l2)  o(x3,l3)
//! ```
//!
//! Two planning hypotheses extend it by two poses `x4, x5` each: the right
//! path ends observing `l3`, the left path ends observing `l1`.

use crate::belief::StateOrder;
use crate::factorgraph::{FactorGraph, LinearFactor, UpdateGraph, VariableId};

pub const X1: VariableId = VariableId { id: 1, dim: 1 };
pub const X2: VariableId = VariableId { id: 2, dim: 1 };
pub const X3: VariableId = VariableId { id: 3, dim: 1 };
pub const X4: VariableId = VariableId { id: 4, dim: 1 };
pub const X5: VariableId = VariableId { id: 5, dim: 1 };
pub const L1: VariableId = VariableId { id: 11, dim: 1 };
pub const L2: VariableId = VariableId { id: 12, dim: 1 };
pub const L3: VariableId = VariableId { id: 13, dim: 1 };

fn unary(v: VariableId, a: f64, z: f64) -> LinearFactor {
    LinearFactor::unary(v, vec![a], vec![z]).expect("valid factor")
}

fn binary(a: VariableId, b: VariableId, ca: f64, cb: f64, z: f64) -> LinearFactor {
    LinearFactor::new(vec![a, b], vec![vec![ca], vec![cb]], vec![z]).expect("valid factor")
}

/// The base graph with its depicted order `[x1, l1, x2, l2, x3, l3]`.
pub fn base() -> (FactorGraph, StateOrder) {
    let mut g = FactorGraph::new();
    for v in [X1, L1, X2, L2, X3, L3] {
        g.add_variable(v, None).expect("fresh ids");
    }
    let factors = [
        unary(X1, 2.0, 0.3),
        binary(X1, X2, -1.3, 1.1, 0.9),
        binary(X2, X3, -0.8, 1.4, 1.2),
        binary(X1, L1, -0.7, 1.6, 0.4),
        binary(X2, L1, 0.9, -1.2, -0.5),
        binary(X1, L2, 1.1, 0.6, 0.8),
        binary(X2, L2, -1.5, 0.7, -0.2),
        binary(X3, L2, 0.5, -1.9, 0.6),
        binary(X3, L3, 1.7, 0.8, -1.1),
    ];
    for f in factors {
        g.add_factor(f).expect("known variables");
    }
    let order = StateOrder::new(vec![X1, L1, X2, L2, X3, L3]).expect("distinct");
    (g, order)
}

fn path_to(landmark: VariableId, z: f64) -> UpdateGraph {
    let mut u = UpdateGraph {
        new_variables: vec![X4, X5],
        ..UpdateGraph::default()
    };
    u.new_factors.push(binary(X3, X4, -1.0, 1.2, 0.7));
    u.new_factors.push(binary(X4, X5, -0.9, 1.3, -0.4));
    u.new_factors.push(binary(X5, landmark, 1.4, -0.6, z));
    u
}

/// Hypothesis of the right path; involves `{x3, l3}`.
pub fn right() -> UpdateGraph {
    path_to(L3, 0.25)
}

/// Hypothesis of the left path; involves `{x3, l1}`.
pub fn left() -> UpdateGraph {
    path_to(L1, -0.35)
}
