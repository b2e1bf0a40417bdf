//! Compressed sparse row storage for the diffusion matrix and cached LU factors of I - cL.

use crate::error::{Error, Result};
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::MatMut;
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            row_ptr: vec![0; n + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a square matrix, summing duplicate entries.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by_key(|&(r, c, _)| (r, c));
        let mut m = Self::empty(n);
        let mut last = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *m.values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            m.col_idx.push(c);
            m.values.push(v);
            m.row_ptr[r + 1] += 1;
        }
        for r in 0..n {
            m.row_ptr[r + 1] += m.row_ptr[r];
        }
        m
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()]
            .iter()
            .position(|&x| x == c)
            .map_or(0.0, |k| self.values[range.start + k])
    }

    /// y += A x
    pub fn mul_add(&self, x: &[f64], y: &mut [f64]) {
        for (yr, w) in y.iter_mut().zip(self.row_ptr.windows(2)) {
            let (cols, vals) = (&self.col_idx[w[0]..w[1]], &self.values[w[0]..w[1]]);
            *yr += cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum::<f64>();
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_add(x, &mut y);
        y
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }
}

/// LU factorisations of I - cL keyed by the bit pattern of c.
pub struct ImplicitSolver {
    matrix: CsrMatrix,
    cache: HashMap<u64, Lu<usize, f64>>,
}

impl std::fmt::Debug for ImplicitSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ImplicitSolver")
            .field("n", &self.matrix.n)
            .field("cached", &self.cache.len())
            .finish()
    }
}

impl ImplicitSolver {
    pub fn new(matrix: CsrMatrix) -> Self {
        Self {
            matrix,
            cache: HashMap::new(),
        }
    }

    pub fn cached_factorizations(&self) -> usize {
        self.cache.len()
    }

    fn factor(&self, c: f64) -> Result<Lu<usize, f64>> {
        let n = self.matrix.n;
        let mut t: Vec<Triplet<usize, usize, f64>> = self
            .matrix
            .triplets()
            .map(|(r, col, v)| Triplet::new(r, col, -c * v))
            .collect();
        t.extend((0..n).map(|i| Triplet::new(i, i, 1.0)));
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &t)
            .map_err(|e| Error::Numeric(format!("sparse assembly failed: {e:?}")))?;
        a.sp_lu()
            .map_err(|e| Error::Numeric(format!("LU factorisation failed: {e:?}")))
    }

    /// Solves (I - cL) x = rhs in place and returns the relative residual.
    pub fn solve(&mut self, c: f64, rhs: &mut [f64]) -> Result<f64> {
        let key = c.to_bits();
        if !self.cache.contains_key(&key) {
            let lu = self.factor(c)?;
            self.cache.insert(key, lu);
        }
        let b = rhs.to_vec();
        let n = rhs.len();
        self.cache[&key].solve_in_place(MatMut::from_column_major_slice_mut(rhs, n, 1));
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite value in implicit solve".into()));
        }
        let mut r = self.matrix.mul(rhs);
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for i in 0..n {
            r[i] = rhs[i] - c * r[i] - b[i];
            num = num.max(r[i].abs());
            den = den.max(b[i].abs());
        }
        Ok(if den > 0.0 { num / den } else { num })
    }
}
