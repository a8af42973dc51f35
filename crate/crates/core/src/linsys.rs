//! Sparse global system, direct factorization and coordinate-format export.
//!
//! Unknowns are ordered `[u_0 .. u_{N-1}, v_0 .. v_{N-1}]`.
//!
//! A [`Factorization`] is immutable after construction; `solve` takes `&self`
//! and allocates its own workspace, so concurrent solves with distinct
//! right-hand sides are allowed.

use std::io::Write;
use std::path::Path;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

/// Square sparse matrix with a right-hand side.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseSystem {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
}

impl SparseSystem {
    pub fn new(dim: usize) -> Self {
        SparseSystem {
            dim,
            entries: Vec::new(),
            rhs: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Adds `value` to entry `(row, col)`; duplicates are summed.
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.dim && col < self.dim);
        self.entries.push((row, col, value));
    }

    /// Merged entries sorted by `(row, col)`.
    pub fn entries(&self) -> Vec<(usize, usize, f64)> {
        let mut sorted = self.entries.clone();
        sorted.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(sorted.len());
        for (r, c, v) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged
    }

    pub fn nnz(&self) -> usize {
        self.entries().len()
    }

    pub fn row_nnz(&self) -> Vec<usize> {
        let mut counts = vec![0; self.dim];
        for (r, _, _) in self.entries() {
            counts[r] += 1;
        }
        counts
    }

    /// Every row must have at least one entry.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::EmptyRow { row: 0 });
        }
        match self.row_nnz().iter().position(|&c| c == 0) {
            Some(row) => Err(Error::EmptyRow { row }),
            None => Ok(()),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    /// Matrix Market coordinate format, 1-based, ordered by `(row, col)`.
    pub fn export_matrix(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_matrix(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_matrix(&self, out: &mut impl Write) -> Result<()> {
        let entries = self.entries();
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.dim, self.dim, entries.len())?;
        for (r, c, v) in entries {
            writeln!(out, "{} {} {:?}", r + 1, c + 1, v)?;
        }
        Ok(())
    }

    /// Direct sparse LU with partial pivoting.
    pub fn factorize(&self) -> Result<Factorization> {
        self.validate()?;
        let triplets: Vec<Triplet<usize, usize, f64>> = self
            .entries()
            .into_iter()
            .map(|(row, col, val)| Triplet::new(row, col, val))
            .collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(self.dim, self.dim, &triplets)
            .map_err(|e| Error::SingularMatrix(format!("{e:?}")))?;
        let lu = mat.sp_lu().map_err(|e| match e {
            LuError::SymbolicSingular { index } => {
                Error::SingularMatrix(format!("structurally singular at pivot {index}"))
            }
            LuError::Generic(g) => Error::SingularMatrix(format!("{g:?}")),
        })?;
        let fact = Factorization { dim: self.dim, lu };
        // Zero or tiny pivots show up as non-finite solutions.
        let probe = fact.solve(&vec![1.0; self.dim])?;
        if probe.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularMatrix("numerically singular".into()));
        }
        Ok(fact)
    }
}

/// Reusable LU factors of a [`SparseSystem`].
pub struct Factorization {
    dim: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization").field("dim", &self.dim).finish()
    }
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: rhs.len(),
            });
        }
        let mut x = rhs.to_vec();
        self.lu
            .solve_in_place(faer::MatMut::from_column_major_slice_mut(&mut x, self.dim, 1));
        Ok(x)
    }

    /// Solves with the transposed matrix.
    pub fn solve_transpose(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: rhs.len(),
            });
        }
        let mut x = rhs.to_vec();
        self.lu
            .solve_transpose_in_place(faer::MatMut::from_column_major_slice_mut(&mut x, self.dim, 1));
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense(sys: &SparseSystem) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(sys.dim(), sys.dim());
        for (r, c, v) in sys.entries() {
            m[(r, c)] = v;
        }
        m
    }

    #[test]
    fn identity_solves_to_rhs() {
        let mut sys = SparseSystem::new(2);
        sys.add(0, 0, 1.0);
        sys.add(1, 1, 1.0);
        let f = sys.factorize().unwrap();
        assert_eq!(f.solve(&[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(f.solve(&[3.5, -2.0]).unwrap(), vec![3.5, -2.0]);
        assert!(matches!(f.solve(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn poisson_1d_matches_dense() {
        let n = 10;
        let mut sys = SparseSystem::new(n);
        sys.add(0, 0, 1.0);
        sys.add(n - 1, n - 1, 1.0);
        for i in 1..n - 1 {
            sys.add(i, i - 1, 1.0);
            sys.add(i, i, -2.0);
            sys.add(i, i + 1, 1.0);
        }
        let mut b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        b[0] = 1.0;
        b[n - 1] = 2.0;
        let x = sys.factorize().unwrap().solve(&b).unwrap();
        let oracle = dense(&sys).lu().solve(&DVector::from_vec(b)).unwrap();
        for i in 0..n {
            assert!((x[i] - oracle[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn random_spd_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 50;
        // A = B^T B + n I with sparse B.
        let mut b = DMatrix::<f64>::zeros(n, n);
        for _ in 0..150 {
            let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
            b[(i, j)] += rng.random::<f64>() - 0.5;
        }
        let a = b.transpose() * &b + DMatrix::identity(n, n) * n as f64;
        let mut sys = SparseSystem::new(n);
        for i in 0..n {
            for j in 0..n {
                if a[(i, j)] != 0.0 {
                    sys.add(i, j, a[(i, j)]);
                }
            }
        }
        let rhs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let x = sys.factorize().unwrap().solve(&rhs).unwrap();
        let oracle = a.clone().lu().solve(&DVector::from_vec(rhs.clone())).unwrap();
        for i in 0..n {
            assert!((x[i] - oracle[i]).abs() <= 1e-10);
        }
        let xt = sys.factorize().unwrap().solve_transpose(&rhs).unwrap();
        let oracle_t = a.transpose().lu().solve(&DVector::from_vec(rhs.clone())).unwrap();
        for i in 0..n {
            assert!((xt[i] - oracle_t[i]).abs() <= 1e-10);
        }
        let zero = sys.factorize().unwrap().solve(&vec![0.0; n]).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let mut sys = SparseSystem::new(2);
        sys.add(0, 0, 1.0);
        sys.add(0, 1, 1.0);
        sys.add(1, 0, 1.0);
        sys.add(1, 1, 1.0);
        assert!(matches!(sys.factorize(), Err(Error::SingularMatrix(_))));

        let mut empty_row = SparseSystem::new(2);
        empty_row.add(0, 0, 1.0);
        assert!(matches!(empty_row.factorize(), Err(Error::EmptyRow { row: 1 })));
    }

    #[test]
    fn duplicates_are_summed() {
        let mut sys = SparseSystem::new(1);
        sys.add(0, 0, 1.5);
        sys.add(0, 0, 0.5);
        assert_eq!(sys.entries(), vec![(0, 0, 2.0)]);
        assert_eq!(sys.factorize().unwrap().solve(&[4.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn export_identity_and_empty() {
        let mut sys = SparseSystem::new(2);
        sys.add(1, 1, 1.0);
        sys.add(0, 0, 1.0);
        let mut buf = Vec::new();
        sys.write_matrix(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "2 2 2");
        assert_eq!(&lines[2..], &["1 1 1.0", "2 2 1.0"]);

        let empty = SparseSystem::new(3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.mtx");
        empty.export_matrix(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(empty.validate().is_err());
    }
}
