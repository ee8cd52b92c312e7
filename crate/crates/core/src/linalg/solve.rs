use super::sparse::{FlopCounter, SparseUpperTriangular};
use crate::config::Tolerances;
use crate::error::{Error, Result};

fn check_rank(r: &SparseUpperTriangular) -> Result<()> {
    let tol = Tolerances::DEFAULT.rank_rel * r.max_abs();
    for i in 0..r.n() {
        match r.diagonal(i) {
            Some(v) if v.abs() > tol => {}
            _ => return Err(Error::RankDeficient { column: i }),
        }
    }
    Ok(())
}

/// Solves `R·x = d` by back substitution. One fma is counted per stored entry.
pub fn back_substitute(r: &SparseUpperTriangular, d: &[f64]) -> Result<(Vec<f64>, FlopCounter)> {
    assert_eq!(r.n(), d.len(), "rhs length mismatch");
    check_rank(r)?;
    let n = r.n();
    let mut x = vec![0.0; n];
    let mut flops = FlopCounter::default();
    for i in (0..n).rev() {
        let row = r.row(i);
        let mut acc = d[i];
        for &(c, v) in &row[1..] {
            acc -= v * x[c];
        }
        x[i] = acc / row[0].1;
        flops.fma += row.len() as u64;
    }
    Ok((x, flops))
}

/// `Σ ln|R(i,i)|`.
pub fn log_abs_det(r: &SparseUpperTriangular) -> Result<f64> {
    check_rank(r)?;
    Ok((0..r.n()).map(|i| r.row(i)[0].1.abs().ln()).sum())
}
