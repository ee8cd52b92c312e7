//! Row-merge Givens QR.
//!
//! Rows are folded one at a time into a triangular slot array: an incoming
//! row whose leading column `k` hits an occupied slot is rotated against the
//! stored row until its leading entry vanishes, then continues with its next
//! leading column. The same kernel drives batch factorization, partial
//! refactorization of a trailing block, and band refactorization after a
//! column permutation.

use super::sparse::{
    DenseVector, FlopCounter, Permutation, SparseRow, SparseRowMatrix, SparseUpperTriangular,
};
use crate::config::Tolerances;
use crate::error::{Error, Result};

/// Output of every factorization kernel.
pub type Factorization = (SparseUpperTriangular, DenseVector, FlopCounter);

/// Applies one Givens rotation zeroing the leading entry of `v` against `r`.
///
/// Both rows must start at the same column. Returns the rotated pair.
fn rotate(
    r: &[(usize, f64)],
    rb: f64,
    v: &[(usize, f64)],
    vb: f64,
    drop: f64,
    flops: &mut FlopCounter,
) -> (SparseRow, f64, SparseRow, f64) {
    debug_assert_eq!(r[0].0, v[0].0);
    let (a, b) = (r[0].1, v[0].1);
    let rho = a.hypot(b);
    let (c, s) = (a / rho, b / rho);

    let mut nr = Vec::with_capacity(r.len() + v.len() - 1);
    let mut nv = Vec::with_capacity(r.len() + v.len() - 2);
    nr.push((r[0].0, rho));

    let (mut i, mut j) = (1, 1);
    let mut touched = 1u64;
    while i < r.len() || j < v.len() {
        let ci = r.get(i).map_or(usize::MAX, |e| e.0);
        let cj = v.get(j).map_or(usize::MAX, |e| e.0);
        let col = ci.min(cj);
        let x = if ci == col {
            i += 1;
            r[i - 1].1
        } else {
            0.0
        };
        let y = if cj == col {
            j += 1;
            v[j - 1].1
        } else {
            0.0
        };
        let rx = c * x + s * y;
        let vy = c * y - s * x;
        if rx.abs() >= drop {
            nr.push((col, rx));
        }
        if vy.abs() >= drop {
            nv.push((col, vy));
        }
        touched += 1;
    }
    flops.rotations += 1;
    // four multiplies per touched column, plus the right-hand side
    flops.fma += 4 * (touched + 1);
    (nr, c * rb + s * vb, nv, c * vb - s * rb)
}

/// Triangular slot array over columns `offset..offset + len`.
struct RowMerge {
    offset: usize,
    slots: Vec<SparseRow>,
    rhs: Vec<f64>,
    flops: FlopCounter,
    drop: f64,
}

impl RowMerge {
    fn new(offset: usize, len: usize, drop: f64) -> Self {
        RowMerge {
            offset,
            slots: vec![Vec::new(); len],
            rhs: vec![0.0; len],
            flops: FlopCounter::default(),
            drop,
        }
    }

    /// Stores a row already known to be triangular in place, at no cost.
    fn preplace(&mut self, row: SparseRow, beta: f64) {
        let slot = row[0].0 - self.offset;
        debug_assert!(self.slots[slot].is_empty());
        self.slots[slot] = row;
        self.rhs[slot] = beta;
    }

    fn insert(&mut self, mut v: SparseRow, mut beta: f64) {
        v.retain(|e| e.1.abs() >= self.drop);
        while let Some(&(k, _)) = v.first() {
            debug_assert!(k >= self.offset);
            let slot = k - self.offset;
            if self.slots[slot].is_empty() {
                self.slots[slot] = v;
                self.rhs[slot] = beta;
                return;
            }
            let stored = std::mem::take(&mut self.slots[slot]);
            let (nr, nrb, nv, nvb) =
                rotate(&stored, self.rhs[slot], &v, beta, self.drop, &mut self.flops);
            self.slots[slot] = nr;
            self.rhs[slot] = nrb;
            v = nv;
            beta = nvb;
        }
    }

    fn finish(self, tol: f64) -> Result<(Vec<SparseRow>, Vec<f64>, FlopCounter)> {
        for (slot, row) in self.slots.iter().enumerate() {
            match row.first() {
                Some(&(_, d)) if d.abs() > tol => {}
                _ => {
                    return Err(Error::RankDeficient {
                        column: self.offset + slot,
                    })
                }
            }
        }
        Ok((self.slots, self.rhs, self.flops))
    }
}

/// Factorizes `a` (with right-hand side `rhs`) into `R` and the rotated
/// right-hand side `d`, so that `R·x = d` is the least-squares solution of
/// `a·x = rhs`.
pub fn qr_factorize(a: &SparseRowMatrix, rhs: &[f64]) -> Result<Factorization> {
    qr_factorize_with(a, rhs, &Tolerances::DEFAULT)
}

pub fn qr_factorize_with(
    a: &SparseRowMatrix,
    rhs: &[f64],
    tol: &Tolerances,
) -> Result<Factorization> {
    assert_eq!(a.n_rows(), rhs.len(), "rhs length mismatch");
    let n = a.n_cols();
    let mut order: Vec<usize> = (0..a.n_rows()).filter(|&i| !a.row(i).is_empty()).collect();
    order.sort_by_key(|&i| a.row(i)[0].0);

    let mut merge = RowMerge::new(0, n, tol.drop);
    for i in order {
        merge.insert(a.row(i).to_vec(), rhs[i]);
    }
    let (rows, d, flops) = merge.finish(tol.rank_rel * a.max_abs())?;
    Ok((SparseUpperTriangular::from_rows(rows), d, flops))
}

/// Which rows of an existing factor are recomputed, and how columns move.
struct Band<'a> {
    first: usize,
    last: usize,
    relabel: Option<&'a [usize]>,
}

fn relabeled(row: &[(usize, f64)], relabel: Option<&[usize]>) -> SparseRow {
    match relabel {
        None => row.to_vec(),
        Some(map) => {
            let mut out: SparseRow = row.iter().map(|&(c, v)| (map[c], v)).collect();
            out.sort_by_key(|e| e.0);
            out
        }
    }
}

fn refactor_band(
    r: &SparseUpperTriangular,
    d: &[f64],
    band: Band<'_>,
    new_rows: &SparseRowMatrix,
    new_rhs: &[f64],
    tol: &Tolerances,
) -> Result<Factorization> {
    let n = r.n();
    assert_eq!(d.len(), n, "rhs length mismatch");
    assert_eq!(new_rows.n_rows(), new_rhs.len(), "update rhs length mismatch");
    let Band {
        first,
        last,
        relabel,
    } = band;

    let mut out_rows: Vec<SparseRow> = Vec::with_capacity(n);
    let mut out_d: Vec<f64> = Vec::with_capacity(n);
    for i in 0..first {
        out_rows.push(relabeled(r.row(i), relabel));
        out_d.push(d[i]);
    }

    let mut merge = RowMerge::new(first, n - first, tol.drop);
    for i in (last + 1)..n {
        if !r.row(i).is_empty() {
            merge.preplace(r.row(i).to_vec(), d[i]);
        }
    }

    let mut band_rows: Vec<(SparseRow, f64)> = (first..=last.min(n.saturating_sub(1)))
        .filter(|&i| !r.row(i).is_empty())
        .map(|i| (relabeled(r.row(i), relabel), d[i]))
        .collect();
    if relabel.is_some() {
        band_rows.sort_by_key(|(row, _)| row[0].0);
    }
    let mut scale = new_rows.max_abs();
    for (row, beta) in band_rows {
        scale = row.iter().fold(scale, |m, e| m.max(e.1.abs()));
        merge.insert(row, beta);
    }
    for (row, &beta) in new_rows.rows().iter().zip(new_rhs) {
        merge.insert(row.clone(), beta);
    }

    let (tail, tail_d, flops) = merge.finish(tol.rank_rel * scale.max(f64::MIN_POSITIVE))?;
    out_rows.extend(tail);
    out_d.extend(tail_d);
    Ok((SparseUpperTriangular::from_rows(out_rows), out_d, flops))
}

/// Folds `new_rows` into an existing factor, recomputing only rows `j..n`.
///
/// `r` must already be augmented to the post-update dimension, and every
/// entry of `new_rows` must lie in a column `>= j`. Rows `0..j` are copied
/// verbatim.
pub fn partial_refactor(
    r: &SparseUpperTriangular,
    d: &[f64],
    new_rows: &SparseRowMatrix,
    new_rhs: &[f64],
    j: usize,
) -> Result<Factorization> {
    partial_refactor_with(r, d, new_rows, new_rhs, j, &Tolerances::DEFAULT)
}

pub fn partial_refactor_with(
    r: &SparseUpperTriangular,
    d: &[f64],
    new_rows: &SparseRowMatrix,
    new_rhs: &[f64],
    j: usize,
    tol: &Tolerances,
) -> Result<Factorization> {
    check_columns(new_rows, j)?;
    if new_rows.n_rows() == 0 {
        return Ok((r.clone(), d.to_vec(), FlopCounter::default()));
    }
    let band = Band {
        first: j,
        last: r.n().saturating_sub(1),
        relabel: None,
    };
    refactor_band(r, d, band, new_rows, new_rhs, tol)
}

/// Like [`partial_refactor`], but first relabels columns with `old_to_new`,
/// which must fix every column below `j`. `new_rows` are given in the new
/// labelling.
pub fn reorder_and_refactor_tail(
    r: &SparseUpperTriangular,
    d: &[f64],
    old_to_new: &[usize],
    new_rows: &SparseRowMatrix,
    new_rhs: &[f64],
    j: usize,
) -> Result<Factorization> {
    check_columns(new_rows, j)?;
    debug_assert!(old_to_new[..j].iter().enumerate().all(|(i, &c)| i == c));
    let band = Band {
        first: j,
        last: r.n().saturating_sub(1),
        relabel: Some(old_to_new),
    };
    refactor_band(r, d, band, new_rows, new_rhs, &Tolerances::DEFAULT)
}

/// Applies a column permutation to a factor.
///
/// Only rows between the first and last moved positions are refactorized;
/// rows above are copied with their columns relabeled, rows below are kept.
pub fn permute_and_refactor(
    r: &SparseUpperTriangular,
    d: &[f64],
    perm: &Permutation,
) -> Result<Factorization> {
    assert_eq!(perm.len(), r.n(), "permutation size mismatch");
    let Some((first, last)) = perm.moved_range() else {
        return Ok((r.clone(), d.to_vec(), FlopCounter::default()));
    };
    let old_to_new = perm.old_to_new();
    let band = Band {
        first,
        last,
        relabel: Some(&old_to_new),
    };
    refactor_band(
        r,
        d,
        band,
        &SparseRowMatrix::new(r.n()),
        &[],
        &Tolerances::DEFAULT,
    )
}

fn check_columns(rows: &SparseRowMatrix, j: usize) -> Result<()> {
    for row in rows.rows() {
        if let Some(&(c, _)) = row.first() {
            if c < j {
                return Err(Error::InvolvedBeforeJ { column: c, j });
            }
        }
    }
    Ok(())
}
