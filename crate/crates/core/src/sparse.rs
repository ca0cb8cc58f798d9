//! Compressed sparse row storage for binary matrices.

use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Binary matrix in CSR form; stored entries are ones, column indices sorted per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryCsr {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
}

impl BinaryCsr {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            indptr: vec![0; n_rows + 1],
            indices: Vec::new(),
        }
    }

    /// Builds from per-row column lists; columns are sorted and deduplicated.
    pub fn from_rows<I>(n_cols: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<u32>>,
    {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        for mut row in rows {
            row.sort_unstable();
            row.dedup();
            if let Some(&last) = row.last() {
                if last as usize >= n_cols {
                    return Err(Error::DimensionMismatch {
                        expected: n_cols,
                        found: last as usize + 1,
                    });
                }
            }
            indices.extend_from_slice(&row);
            indptr.push(indices.len());
        }
        Ok(Self {
            n_rows: indptr.len() - 1,
            n_cols,
            indptr,
            indices,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.indices[self.indptr[r]..self.indptr[r + 1]]
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.row(r).binary_search(&(c as u32)).is_ok()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        for &r in rows {
            indices.extend_from_slice(self.row(r));
            indptr.push(indices.len());
        }
        Self {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            indptr,
            indices,
        }
    }

    /// True when every one in `self` is also a one in `other` (same shape required).
    pub fn is_subset_of(&self, other: &BinaryCsr) -> bool {
        if self.shape() != other.shape() {
            return false;
        }
        (0..self.n_rows).all(|r| {
            let big = other.row(r);
            self.row(r).iter().all(|c| big.binary_search(c).is_ok())
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<bool>> {
        (0..self.n_rows)
            .map(|r| {
                let mut row = vec![false; self.n_cols];
                for &c in self.row(r) {
                    row[c as usize] = true;
                }
                row
            })
            .collect()
    }

    /// `X w + b` for every row.
    pub fn linear<T: Scalar>(&self, weights: &[T], bias: T) -> Result<Vec<T>> {
        if weights.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols,
                found: weights.len(),
            });
        }
        Ok((0..self.n_rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .fold(bias, |acc, &c| acc + weights[c as usize])
            })
            .collect())
    }

    /// `X^T v`.
    pub fn transpose_mul<T: Scalar>(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows,
                found: v.len(),
            });
        }
        let mut out = vec![T::zero(); self.n_cols];
        for (r, &x) in v.iter().enumerate() {
            for &c in self.row(r) {
                out[c as usize] = out[c as usize] + x;
            }
        }
        Ok(out)
    }

    /// Sparse triplets `row,col,1`, one per stored entry.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for r in 0..self.n_rows {
            for &c in self.row(r) {
                writeln!(out, "{r},{c},1")?;
            }
        }
        Ok(())
    }
}
