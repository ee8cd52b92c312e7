use crate::error::{Error, Result};

/// One sparse row: `(column, value)` pairs sorted by column.
pub type SparseRow = Vec<(usize, f64)>;

/// Dense right-hand side / solution vector.
pub type DenseVector = Vec<f64>;

/// Cost proxy accumulated by the factorization kernels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct FlopCounter {
    pub rotations: u64,
    pub fma: u64,
}

impl FlopCounter {
    pub fn add(&mut self, other: FlopCounter) {
        self.rotations += other.rotations;
        self.fma += other.fma;
    }
}

impl std::ops::Add for FlopCounter {
    type Output = FlopCounter;
    fn add(mut self, rhs: FlopCounter) -> FlopCounter {
        FlopCounter::add(&mut self, rhs);
        self
    }
}

/// Rectangular matrix stored as a list of sparse rows.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRowMatrix {
    n_cols: usize,
    rows: Vec<SparseRow>,
}

impl SparseRowMatrix {
    pub fn new(n_cols: usize) -> Self {
        SparseRowMatrix {
            n_cols,
            rows: Vec::new(),
        }
    }

    /// Appends a row given in any column order. Zeros are discarded.
    ///
    /// Panics on duplicate or out-of-range columns.
    pub fn push_row(&mut self, mut entries: SparseRow) {
        entries.retain(|&(_, v)| v != 0.0);
        entries.sort_by_key(|&(c, _)| c);
        for w in entries.windows(2) {
            assert!(w[0].0 != w[1].0, "duplicate column {} in row", w[0].0);
        }
        if let Some(&(c, _)) = entries.last() {
            assert!(c < self.n_cols, "column {c} out of range {}", self.n_cols);
        }
        self.rows.push(entries);
    }

    pub fn from_dense(rows: &[Vec<f64>], n_cols: usize) -> Self {
        let mut m = SparseRowMatrix::new(n_cols);
        for row in rows {
            m.push_row(row.iter().copied().enumerate().collect());
        }
        m
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.iter().map(|&(_, v)| v.abs()))
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                let mut dense = vec![0.0; self.n_cols];
                for &(c, v) in r {
                    dense[c] = v;
                }
                dense
            })
            .collect()
    }

    /// Sorted list of columns holding at least one entry.
    pub fn nonzero_columns(&self) -> Vec<usize> {
        let mut cols: Vec<usize> = self.rows.iter().flat_map(|r| r.iter().map(|e| e.0)).collect();
        cols.sort_unstable();
        cols.dedup();
        cols
    }
}

/// Square upper-triangular matrix stored by rows.
///
/// Row `i` is either empty (not yet eliminated) or starts with its diagonal
/// entry at column `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseUpperTriangular {
    rows: Vec<SparseRow>,
}

impl SparseUpperTriangular {
    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SparseUpperTriangular {
            rows: diag.iter().enumerate().map(|(i, &v)| vec![(i, v)]).collect(),
        }
    }

    /// Builds from a dense row-major square matrix; entries below the
    /// diagonal must be zero.
    pub fn from_dense(dense: &[Vec<f64>]) -> Result<Self> {
        let n = dense.len();
        let mut rows = Vec::with_capacity(n);
        for (i, row) in dense.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidFactor(format!("row {i} has length {}", row.len())));
            }
            if row[..i].iter().any(|&v| v != 0.0) {
                return Err(Error::InvalidFactor(format!("row {i} has entries below the diagonal")));
            }
            let r: SparseRow = row
                .iter()
                .copied()
                .enumerate()
                .skip(i)
                .filter(|&(_, v)| v != 0.0)
                .collect();
            if !r.is_empty() && r[0].0 != i {
                return Err(Error::RankDeficient { column: i });
            }
            rows.push(r);
        }
        Ok(SparseUpperTriangular { rows })
    }

    pub(crate) fn from_rows(rows: Vec<SparseRow>) -> Self {
        debug_assert!(rows
            .iter()
            .enumerate()
            .all(|(i, r)| r.is_empty() || r[0].0 == i));
        SparseUpperTriangular { rows }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn diagonal(&self, i: usize) -> Option<f64> {
        self.rows[i].first().filter(|e| e.0 == i).map(|e| e.1)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |e| e.0)
            .map(|k| self.rows[i][k].1)
            .unwrap_or(0.0)
    }

    /// Extends the matrix with `extra` empty trailing rows and columns.
    pub fn augment(&mut self, extra: usize) {
        self.rows.extend(std::iter::repeat_with(Vec::new).take(extra));
    }

    pub fn max_abs(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.iter().map(|&(_, v)| v.abs()))
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        self.rows
            .iter()
            .map(|r| {
                let mut dense = vec![0.0; n];
                for &(c, v) in r {
                    dense[c] = v;
                }
                dense
            })
            .collect()
    }

    /// `RᵀR` as a dense matrix.
    pub fn gram_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut g = vec![vec![0.0; n]; n];
        for row in &self.rows {
            for &(a, va) in row {
                for &(b, vb) in row {
                    g[a][b] += va * vb;
                }
            }
        }
        g
    }

    /// Multiplies every row by the sign of its diagonal, so two factors of the
    /// same Gram matrix can be compared entrywise.
    pub fn sign_normalized(&self) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|r| match r.first() {
                Some(&(_, d)) if d < 0.0 => r.iter().map(|&(c, v)| (c, -v)).collect(),
                _ => r.clone(),
            })
            .collect();
        SparseUpperTriangular { rows }
    }
}

/// Column permutation: `new_to_old[k]` is the old index placed at position `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    new_to_old: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            new_to_old: (0..n).collect(),
        }
    }

    pub fn from_new_to_old(new_to_old: Vec<usize>) -> Result<Self> {
        let n = new_to_old.len();
        let mut seen = vec![false; n];
        for &o in &new_to_old {
            if o >= n || seen[o] {
                return Err(Error::NotAPermutation);
            }
            seen[o] = true;
        }
        Ok(Permutation { new_to_old })
    }

    pub fn len(&self) -> usize {
        self.new_to_old.len()
    }

    pub fn is_empty(&self) -> bool {
        self.new_to_old.is_empty()
    }

    pub fn new_to_old(&self) -> &[usize] {
        &self.new_to_old
    }

    pub fn old_to_new(&self) -> Vec<usize> {
        let mut inv = vec![0; self.len()];
        for (new, &old) in self.new_to_old.iter().enumerate() {
            inv[old] = new;
        }
        inv
    }

    pub fn is_identity(&self) -> bool {
        self.new_to_old.iter().enumerate().all(|(i, &o)| i == o)
    }

    /// First and last moved positions, if any.
    pub fn moved_range(&self) -> Option<(usize, usize)> {
        let first = self.new_to_old.iter().enumerate().position(|(i, &o)| i != o)?;
        let last = self.new_to_old.iter().enumerate().rposition(|(i, &o)| i != o)?;
        Some((first, last))
    }
}
