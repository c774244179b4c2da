//! Compressed sparse row matrices.

use std::fmt::Write as _;

use crate::{par, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries. Duplicates are added in input order, so the
    /// result only depends on the order of `triplets`.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Self {
        debug_assert!(triplets.iter().all(|&(i, j, _)| i < nrows && j < ncols));
        par::stable_sort_by_key(&mut triplets, |&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let ncols = rows.first().map_or(0, Vec::len);
        let triplets = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| {
                r.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(move |(j, &v)| (i, j, v))
            })
            .collect();
        CsrMatrix::from_triplets(rows.len(), ncols, triplets)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`, columns increasing.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        par::map_range(self.nrows, |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum()
        })
    }

    /// `A^T x`, accumulated row by row in a fixed order.
    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                y[j] += a * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        CsrMatrix::from_triplets(
            self.ncols,
            self.nrows,
            self.triplets().map(|(i, j, v)| (j, i, v)).collect(),
        )
    }

    /// The submatrix with the given rows and columns, in the given order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (k, &j) in cols.iter().enumerate() {
            col_map[j] = k;
        }
        let mut triplets = Vec::new();
        for (r, &i) in rows.iter().enumerate() {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                if col_map[j] != usize::MAX {
                    triplets.push((r, col_map[j], a));
                }
            }
        }
        CsrMatrix::from_triplets(rows.len(), cols.len(), triplets)
    }

    /// `x^T A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - A^T|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, j, v) in self.triplets() {
            worst = worst.max((v - self.get(j, i)).abs());
        }
        worst
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.nrows == self.ncols && self.asymmetry() <= rel_tol * self.max_abs()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            d[i][j] = v;
        }
        d
    }

    /// Solves `U x = b` with `U` the upper triangle of `self` including the
    /// diagonal (backward substitution, last unknown first).
    pub fn solve_upper_triangular(&self, b: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(self.nrows, self.ncols);
        let n = self.nrows;
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let (c, v) = self.row(i);
            let mut s = b[i];
            let mut d = 0.0;
            for (&j, &a) in c.iter().zip(v) {
                if j > i {
                    s -= a * x[j];
                } else if j == i {
                    d = a;
                }
            }
            if d == 0.0 {
                return Err(Error::Singular(format!("zero diagonal in row {i}")));
            }
            x[i] = s / d;
        }
        Ok(x)
    }

    /// Solves `L x = b` with `L` the lower triangle including the diagonal
    /// (forward substitution).
    pub fn solve_lower_triangular(&self, b: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(self.nrows, self.ncols);
        let n = self.nrows;
        let mut x = vec![0.0; n];
        for i in 0..n {
            let (c, v) = self.row(i);
            let mut s = b[i];
            let mut d = 0.0;
            for (&j, &a) in c.iter().zip(v) {
                if j < i {
                    s -= a * x[j];
                } else if j == i {
                    d = a;
                }
            }
            if d == 0.0 {
                return Err(Error::Singular(format!("zero diagonal in row {i}")));
            }
            x[i] = s / d;
        }
        Ok(x)
    }

    /// MatrixMarket coordinate format, 1-based indices.
    pub fn to_matrix_market(&self) -> String {
        let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(s, "{} {} {}", self.nrows, self.ncols, self.nnz());
        for (i, j, v) in self.triplets() {
            let _ = writeln!(s, "{} {} {:e}", i + 1, j + 1, v);
        }
        s
    }

    pub fn from_matrix_market(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('%'));
        let bad = |m: &str| Error::InvalidInput(format!("MatrixMarket: {m}"));
        let header: Vec<usize> = lines
            .next()
            .ok_or_else(|| bad("missing size line"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad size line")))
            .collect::<Result<_>>()?;
        let [nrows, ncols, nnz] = header[..] else {
            return Err(bad("size line needs three integers"));
        };
        let mut triplets = Vec::with_capacity(nnz);
        for line in lines.take(nnz) {
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() < 3 {
                return Err(bad("entry needs row, column and value"));
            }
            let i: usize = t[0].parse().map_err(|_| bad("bad row"))?;
            let j: usize = t[1].parse().map_err(|_| bad("bad column"))?;
            let v: f64 = t[2].parse().map_err(|_| bad("bad value"))?;
            if i == 0 || j == 0 || i > nrows || j > ncols {
                return Err(bad("index out of range"));
            }
            triplets.push((i - 1, j - 1, v));
        }
        if triplets.len() != nnz {
            return Err(bad("fewer entries than declared"));
        }
        Ok(CsrMatrix::from_triplets(nrows, ncols, triplets))
    }
}

/// Dot product accumulated left to right.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}
