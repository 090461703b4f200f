//! Triplet assembly into compressed sparse row storage.

use rayon::prelude::*;

#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    pub n_rows: usize,
    pub n_cols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl TripletBuilder {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            ..Default::default()
        }
    }

    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.n_rows && c < self.n_cols);
        self.rows.push(r);
        self.cols.push(c);
        self.vals.push(v);
    }

    /// Add a dense block stored row-major, `block[i * cols.len() + j]`.
    pub fn add_block(&mut self, rows: &[usize], cols: &[usize], block: &[f64]) {
        let nc = cols.len();
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                let v = block[i * nc + j];
                if v != 0.0 {
                    self.push(r, c, v);
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    /// Compress, summing duplicate entries.
    pub fn build(self) -> CsrMatrix {
        let mut counts = vec![0usize; self.n_rows + 1];
        for &r in &self.rows {
            counts[r + 1] += 1;
        }
        for i in 0..self.n_rows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; self.vals.len()];
        let mut vals = vec![0.0; self.vals.len()];
        for k in 0..self.vals.len() {
            let r = self.rows[k];
            cols[next[r]] = self.cols[k];
            vals[next[r]] = self.vals[k];
            next[r] += 1;
        }
        let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..self.n_rows)
            .into_par_iter()
            .map(|r| {
                let (a, b) = (counts[r], counts[r + 1]);
                let mut entries: Vec<(usize, f64)> = cols[a..b].iter().cloned().zip(vals[a..b].iter().cloned()).collect();
                entries.sort_by_key(|e| e.0);
                let mut c = Vec::with_capacity(entries.len());
                let mut v: Vec<f64> = Vec::with_capacity(entries.len());
                for (col, val) in entries {
                    if c.last() == Some(&col) {
                        *v.last_mut().unwrap() += val;
                    } else {
                        c.push(col);
                        v.push(val);
                    }
                }
                (c, v)
            })
            .collect();
        let mut row_ptr = Vec::with_capacity(self.n_rows + 1);
        row_ptr.push(0);
        let nnz: usize = rows.iter().map(|r| r.0.len()).sum();
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for (c, v) in rows {
            col_idx.extend(c);
            values.extend(v);
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col_idx[a..b].iter().cloned().zip(self.values[a..b].iter().cloned())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        match self.col_idx[a..b].binary_search(&c) {
            Ok(k) => self.values[a + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(r, yr)| {
            *yr = self.row(r).map(|(c, v)| v * x[c]).sum();
        });
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.matvec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut t = TripletBuilder::new(self.n_cols, self.n_rows);
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                t.push(c, r, v);
            }
        }
        t.build()
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &CsrMatrix, b: f64) -> CsrMatrix {
        let mut t = TripletBuilder::new(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                t.push(r, c, a * v);
            }
            for (c, v) in other.row(r) {
                t.push(r, c, b * v);
            }
        }
        t.build()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            for (c, v) in self.row(r) {
                d[(r, c)] += v;
            }
        }
        d
    }
}
