use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64, ZERO};

/// Entries smaller than this are dropped during assembly.
pub const DROP_TOL: f64 = 1e-15;

/// Compressed-row complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<C64>,
}

impl SparseOperator {
    /// Builds from unordered `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_offsets = vec![0usize; dim + 1];
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if let (Some(&lr), Some(&lc)) = (rows.last(), col_indices.last()) {
                if lr == r && lc == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            col_indices.push(c);
            values.push(v);
        }
        let mut keep_cols = Vec::with_capacity(col_indices.len());
        let mut keep_vals = Vec::with_capacity(values.len());
        for ((r, c), v) in rows.into_iter().zip(col_indices).zip(values) {
            if v.norm() > DROP_TOL {
                row_offsets[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for i in 0..dim {
            row_offsets[i + 1] += row_offsets[i];
        }
        SparseOperator { dim, row_offsets, col_indices: keep_cols, values: keep_vals }
    }

    /// Assembles column by column: `column(j, emit)` must call `emit(i, value)`
    /// for every nonzero `⟨i|A|j⟩`.
    pub fn from_columns<F>(dim: usize, column: F) -> Self
    where
        F: Fn(usize, &mut dyn FnMut(usize, C64)) + Sync,
    {
        let gen = |j: usize| {
            let mut out = Vec::new();
            column(j, &mut |i, v| out.push((i, j, v)));
            out
        };
        #[cfg(feature = "parallel")]
        let triplets: Vec<(usize, usize, C64)> = {
            use rayon::prelude::*;
            (0..dim).into_par_iter().flat_map_iter(gen).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let triplets: Vec<(usize, usize, C64)> = (0..dim).flat_map(gen).collect();
        Self::from_triplets(dim, triplets)
    }

    pub fn from_dense(m: &CMatrix) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != ZERO {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), t)
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let t = values.iter().enumerate().map(|(i, &v)| (i, i, C64::from(v))).collect();
        Self::from_triplets(values.len(), t)
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_triplets(dim, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.row(i).find(|&(c, _)| c == j).map(|(_, v)| v).unwrap_or(ZERO)
    }

    pub fn matvec(&self, x: &CVector) -> CVector {
        assert_eq!(x.len(), self.dim, "matvec dimension mismatch");
        let row = |i: usize| self.row(i).fold(ZERO, |acc, (j, v)| acc + v * x[j]);
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            if self.dim > 2048 {
                let out: Vec<C64> = (0..self.dim).into_par_iter().map(row).collect();
                return CVector::from_vec(out);
            }
        }
        CVector::from_fn(self.dim, |i, _| row(i))
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let t = self.triplets().map(|(i, j, v)| (j, i, v.conj())).collect();
        Self::from_triplets(self.dim, t)
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: C64, other: &Self, b: C64) -> Self {
        assert_eq!(self.dim, other.dim);
        let t = self
            .triplets()
            .map(|(i, j, v)| (i, j, v * a))
            .chain(other.triplets().map(|(i, j, v)| (i, j, v * b)))
            .collect();
        Self::from_triplets(self.dim, t)
    }

    pub fn scale(&self, a: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= a);
        out
    }

    pub fn add_identity(&self, s: f64) -> Self {
        self.combine(C64::from(1.0), &Self::diagonal(&vec![s; self.dim]), C64::from(1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut t = Vec::new();
        for i in 0..self.dim {
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    t.push((i, j, a * b));
                }
            }
        }
        Self::from_triplets(self.dim, t)
    }

    /// max |A_ij - conj(A_ji)|
    pub fn hermiticity_defect(&self) -> f64 {
        self.triplets().fold(0.0f64, |acc, (i, j, v)| acc.max((v - self.get(j, i).conj()).norm()))
    }

    /// Row-sum bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Matrix Market coordinate format, complex general, 1-based indices,
    /// values printed with 17 significant digits.
    pub fn to_matrix_market(&self) -> String {
        let mut s = String::new();
        s.push_str("%%MatrixMarket matrix coordinate complex general\n");
        let _ = writeln!(s, "{} {} {}", self.dim, self.dim, self.nnz());
        for (i, j, v) in self.triplets() {
            let _ = writeln!(s, "{} {} {:.16e} {:.16e}", i + 1, j + 1, v.re, v.im);
        }
        s
    }

    pub fn from_matrix_market(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty Matrix Market file".into()))?;
        let lower = header.to_ascii_lowercase();
        if !lower.starts_with("%%matrixmarket matrix coordinate") {
            return Err(Error::Parse(format!("unsupported header: {header}")));
        }
        let complex = lower.contains("complex");
        let mut lines = lines.filter(|l| !l.starts_with('%'));
        let size = lines.next().ok_or_else(|| Error::Parse("missing size line".into()))?;
        let dims: Vec<usize> = size
            .split_whitespace()
            .map(|x| x.parse().map_err(|_| Error::Parse(format!("bad size line: {size}"))))
            .collect::<Result<_>>()?;
        if dims.len() != 3 || dims[0] != dims[1] {
            return Err(Error::Parse(format!("expected square size line, got {size}")));
        }
        let mut t = Vec::with_capacity(dims[2]);
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            let want = if complex { 4 } else { 3 };
            if f.len() != want {
                return Err(Error::Parse(format!("bad entry line: {line}")));
            }
            let parse_i = |x: &str| x.parse::<usize>().map_err(|_| Error::Parse(format!("bad index in: {line}")));
            let parse_f = |x: &str| x.parse::<f64>().map_err(|_| Error::Parse(format!("bad value in: {line}")));
            let (i, j) = (parse_i(f[0])?, parse_i(f[1])?);
            if i == 0 || j == 0 || i > dims[0] || j > dims[0] {
                return Err(Error::Parse(format!("index out of range in: {line}")));
            }
            let im = if complex { parse_f(f[3])? } else { 0.0 };
            t.push((i - 1, j - 1, C64::new(parse_f(f[2])?, im)));
        }
        if t.len() != dims[2] {
            return Err(Error::Parse(format!("expected {} entries, found {}", dims[2], t.len())));
        }
        Ok(Self::from_triplets(dims[0], t))
    }
}
