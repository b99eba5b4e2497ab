use crate::error::{Error, Result};

/// Real square matrix in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseOperator {
    /// Rows must list their columns in increasing order without repeats.
    pub fn from_csr(dim: usize, row_ptr: Vec<usize>, cols: Vec<u32>, vals: Vec<f64>) -> Self {
        assert_eq!(row_ptr.len(), dim + 1);
        assert_eq!(cols.len(), vals.len());
        assert_eq!(*row_ptr.last().unwrap(), cols.len());
        SparseOperator {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .zip(&self.vals[span])
            .map(|(&c, &v)| (c as usize, v))
    }

    /// All stored `(row, col, value)` triples in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&(c as u32)) {
            Ok(i) => self.vals[span.start + i],
            Err(_) => 0.0,
        }
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[i] * x[self.cols[i] as usize];
            }
            *out = acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.dim];
        self.apply_into(x, &mut y);
        Ok(y)
    }

    /// `<x|H|x>` (not normalized).
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (r, &xr) in x.iter().enumerate() {
            for (c, v) in self.row(r) {
                acc += xr * v * x[c];
            }
        }
        acc
    }

    /// `||H x|| / ||x||`.
    pub fn residual(&self, x: &[f64]) -> Result<f64> {
        let y = self.apply(x)?;
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Domain("residual of the zero vector is undefined".into()));
        }
        Ok(y.iter().map(|v| v * v).sum::<f64>().sqrt() / norm)
    }

    /// `max |H_rc - H_cr|` over stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        self.entries()
            .map(|(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }

    /// Upper bound on the spectral radius (max absolute row sum).
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// The principal submatrix on `indices` (sorted, distinct), re-indexed `0..indices.len()`.
    pub fn restrict(&self, indices: &[usize]) -> SparseOperator {
        let mut local = vec![u32::MAX; self.dim];
        for (i, &g) in indices.iter().enumerate() {
            local[g] = i as u32;
        }
        let mut row_ptr = Vec::with_capacity(indices.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for &g in indices {
            for (c, v) in self.row(g) {
                let lc = local[c];
                if lc != u32::MAX {
                    cols.push(lc);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseOperator::from_csr(indices.len(), row_ptr, cols, vals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SparseOperator {
        // [[2, 1, 0], [1, 3, 0], [0, 0, 5]]
        SparseOperator::from_csr(
            3,
            vec![0, 2, 4, 5],
            vec![0, 1, 0, 1, 2],
            vec![2.0, 1.0, 1.0, 3.0, 5.0],
        )
    }

    #[test]
    fn matvec_and_lookup() {
        let a = small();
        assert_eq!(a.apply(&[1.0, 1.0, 1.0]).unwrap(), vec![3.0, 4.0, 5.0]);
        assert_eq!(a.get(0, 1), 1.0);
        assert_eq!(a.get(0, 2), 0.0);
        assert_eq!(a.quadratic_form(&[1.0, 0.0, 1.0]), 7.0);
        assert_eq!(a.max_asymmetry(), 0.0);
        assert_eq!(a.norm_bound(), 5.0);
        assert!(matches!(a.apply(&[1.0]), Err(Error::DimensionMismatch { .. })));
        assert!(a.residual(&[0.0; 3]).is_err());
    }

    #[test]
    fn restriction_keeps_block() {
        let b = small().restrict(&[0, 1]);
        assert_eq!(b.dim(), 2);
        assert_eq!(
            b.entries().collect::<Vec<_>>(),
            vec![(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)]
        );
    }
}
