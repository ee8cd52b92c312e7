//! Predictive variable ordering.
//!
//! Variables predicted to be involved in upcoming updates are pushed towards
//! the end of the state, so that every candidate update touches only a short
//! trailing block of `R`. The plain variant stable-sorts by involvement
//! class; the fill-aware variant first bumps highly connected variables to
//! higher classes and then runs a constrained minimum-degree ordering.

mod mindeg;
mod pattern;

use std::fmt;
use std::str::FromStr;

use crate::belief::{SqrtBelief, StateOrder};
use crate::error::{Error, Result};
use crate::factorgraph::{involved_variables, UpdateGraph};

pub use mindeg::{constrained_min_degree, OrderingConstraint};
pub use pattern::PatternGraph;

/// Number of involvement classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClassCount {
    Count(u32),
    /// One class per distinct involvement level.
    Max,
}

/// Involvement levels and classes, indexed by position in a [`StateOrder`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassAssignment {
    pub level: Vec<u32>,
    /// `-1` marks the frozen prefix after fill-aware reclassification.
    pub class_of: Vec<i64>,
    pub c: ClassCount,
}

impl ClassAssignment {
    pub fn len(&self) -> usize {
        self.level.len()
    }

    pub fn is_empty(&self) -> bool {
        self.level.is_empty()
    }

    /// Position of the first variable with a positive level.
    pub fn first_involved(&self) -> Option<usize> {
        self.level.iter().position(|&l| l > 0)
    }
}

/// `level[p]`: how many hypotheses involve the variable at position `p`.
pub fn involvement_levels(order: &StateOrder, hyps: &[UpdateGraph]) -> Vec<u32> {
    let mut level = vec![0u32; order.len()];
    for h in hyps {
        for v in involved_variables(h) {
            if let Some(p) = order.position(v) {
                level[p] += 1;
            }
        }
    }
    level
}

/// Buckets levels into classes.
///
/// With one class, class 1 holds exactly the involved variables. With
/// [`ClassCount::Max`] the class is the level itself. Otherwise the class is
/// the smallest `i` with `level ≤ i·M/c`, where `M` is the maximum level.
pub fn classify(levels: &[u32], c: ClassCount) -> ClassAssignment {
    let class_of = match c {
        ClassCount::Count(0) => panic!("class count must be positive"),
        ClassCount::Count(1) => levels.iter().map(|&l| i64::from(l > 0)).collect(),
        ClassCount::Max => levels.iter().map(|&l| i64::from(l)).collect(),
        ClassCount::Count(c) => {
            let m = u64::from(levels.iter().copied().max().unwrap_or(0));
            levels
                .iter()
                .map(|&l| {
                    if m == 0 {
                        0
                    } else {
                        // smallest i with l·c ≤ i·m
                        (u64::from(l) * u64::from(c)).div_ceil(m) as i64
                    }
                })
                .collect()
        }
    };
    ClassAssignment {
        level: levels.to_vec(),
        class_of,
        c,
    }
}

/// Stable sort of `order` by ascending class.
pub fn pivot(order: &StateOrder, classes: &ClassAssignment) -> StateOrder {
    assert_eq!(order.len(), classes.len(), "class assignment size mismatch");
    let mut idx: Vec<usize> = (0..order.len()).collect();
    idx.sort_by_key(|&p| classes.class_of[p]);
    order.permuted(&idx)
}

/// Bumps each variable to a higher class while it has more connections to
/// higher classes than to its own class and below.
///
/// Variables are scanned in position order and connections are counted
/// against the running reclassified assignment. When `force_incremental`
/// is set, positions before the first involved variable become a frozen
/// prefix (class `-1`) that is neither scanned nor counted.
pub fn fill_aware_reclassify(
    pattern: &PatternGraph,
    classes: &ClassAssignment,
    force_incremental: bool,
) -> ClassAssignment {
    let n = classes.len();
    assert_eq!(pattern.len(), n, "pattern size mismatch");
    let mut star = classes.class_of.clone();
    let start = if force_incremental {
        classes.first_involved().unwrap_or(n)
    } else {
        0
    };
    for s in &mut star[..start] {
        *s = -1;
    }
    let top = classes.class_of.iter().copied().max().unwrap_or(0).max(0) as usize;
    let mut conn = vec![0u32; top + 1];
    for j in start..n {
        conn.iter_mut().for_each(|c| *c = 0);
        for &i in pattern.neighbors(j) {
            if star[i] >= 0 {
                conn[star[i] as usize] += 1;
            }
        }
        let mut current = classes.class_of[j] as usize;
        loop {
            let low: u32 = conn[..=current].iter().sum();
            let high: u32 = conn[current + 1..].iter().sum();
            if low < high {
                current += 1;
            } else {
                break;
            }
        }
        star[j] = current as i64;
    }
    ClassAssignment {
        level: classes.level.clone(),
        class_of: star,
        c: classes.c,
    }
}

/// Fill-aware ordering: classify, reclassify by connectivity, then order
/// each class by constrained minimum degree. With `force_incremental`,
/// every position before the first involved variable keeps its place.
pub fn pivot_star(
    belief: &SqrtBelief,
    hyps: &[UpdateGraph],
    c: ClassCount,
    force_incremental: bool,
) -> Result<StateOrder> {
    let order = belief.order();
    let classes = classify(&involvement_levels(order, hyps), c);
    let pattern = PatternGraph::from_factors(order.variables(), belief.factors())?;
    let star = fill_aware_reclassify(&pattern, &classes, force_incremental);
    let mut new_to_old =
        constrained_min_degree(&pattern, &OrderingConstraint::new(star.class_of.clone()));
    if force_incremental {
        let frozen = star.class_of.iter().take_while(|&&k| k == -1).count();
        let tail: Vec<usize> = new_to_old.into_iter().filter(|&p| p >= frozen).collect();
        new_to_old = (0..frozen).chain(tail).collect();
    }
    Ok(order.permuted(&new_to_old))
}

/// Suffix order used by the per-update baseline: minimum degree with the
/// flagged variables constrained to the end. Returns pattern indices.
pub fn baseline_suffix_order(pattern: &PatternGraph, constrained_last: &[bool]) -> Vec<usize> {
    let ranks = constrained_last.iter().map(|&f| i64::from(f)).collect();
    constrained_min_degree(pattern, &OrderingConstraint::new(ranks))
}

/// An ordering tactic applied once per planning session.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tactic {
    /// No standalone reorder; only the per-update suffix policy.
    Baseline,
    Pivot {
        classes: ClassCount,
        fill_aware: bool,
        force_incremental: bool,
    },
}

impl Tactic {
    pub fn pivot(c: ClassCount) -> Self {
        Tactic::Pivot {
            classes: c,
            fill_aware: false,
            force_incremental: false,
        }
    }

    pub fn pivot_star(c: ClassCount) -> Self {
        Tactic::Pivot {
            classes: c,
            fill_aware: true,
            force_incremental: false,
        }
    }

    /// The seven tactics of the standard comparison.
    pub fn standard_set() -> Vec<Tactic> {
        let cs = [ClassCount::Count(1), ClassCount::Count(5), ClassCount::Max];
        std::iter::once(Tactic::Baseline)
            .chain(cs.iter().map(|&c| Tactic::pivot(c)))
            .chain(cs.iter().map(|&c| Tactic::pivot_star(c)))
            .collect()
    }

    /// New order for `belief` given the candidate hypotheses, or `None`
    /// for the baseline.
    pub fn compute_order(&self, belief: &SqrtBelief, hyps: &[UpdateGraph]) -> Result<Option<StateOrder>> {
        match *self {
            Tactic::Baseline => Ok(None),
            Tactic::Pivot {
                classes,
                fill_aware: false,
                ..
            } => {
                let order = belief.order();
                let levels = involvement_levels(order, hyps);
                Ok(Some(pivot(order, &classify(&levels, classes))))
            }
            Tactic::Pivot {
                classes,
                fill_aware: true,
                force_incremental,
            } => pivot_star(belief, hyps, classes, force_incremental).map(Some),
        }
    }
}

impl fmt::Display for Tactic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Tactic::Baseline => f.write_str("baseline"),
            Tactic::Pivot {
                classes,
                fill_aware,
                force_incremental,
            } => {
                f.write_str("pivot")?;
                match classes {
                    ClassCount::Count(c) => write!(f, "{c}")?,
                    ClassCount::Max => f.write_str("max")?,
                }
                if fill_aware {
                    f.write_str("star")?;
                }
                if force_incremental {
                    f.write_str("-inc")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Tactic {
    type Err = Error;

    /// Accepts `baseline` and `pivot<N|max>[star][-inc]`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unknown tactic {s:?}"));
        if s == "baseline" {
            return Ok(Tactic::Baseline);
        }
        let mut rest = s.strip_prefix("pivot").ok_or_else(bad)?;
        let force_incremental = match rest.strip_suffix("-inc") {
            Some(r) => {
                rest = r;
                true
            }
            None => false,
        };
        let fill_aware = match rest.strip_suffix("star") {
            Some(r) => {
                rest = r;
                true
            }
            None => false,
        };
        if force_incremental && !fill_aware {
            return Err(bad());
        }
        let classes = if rest == "max" {
            ClassCount::Max
        } else {
            match rest.parse::<u32>() {
                Ok(c) if c >= 1 && !rest.starts_with('+') => ClassCount::Count(c),
                _ => return Err(bad()),
            }
        };
        Ok(Tactic::Pivot {
            classes,
            fill_aware,
            force_incremental,
        })
    }
}

impl serde::Serialize for Tactic {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
