//! Compressed sparse row storage for superoperators.

use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<Complex64>,
}

impl CsrMatrix {
    /// Square matrix from (row, col, value) triplets; duplicates are summed
    /// and exact zeros dropped.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, Complex64)>) -> Self {
        t.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0; n + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut data: Vec<Complex64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                data.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            indptr[r + 1] += indptr[r];
        }
        let mut m = Self { n, indptr, indices, data };
        m.prune();
        m
    }

    fn prune(&mut self) {
        let mut indptr = vec![0; self.n + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut data = Vec::with_capacity(self.data.len());
        for r in 0..self.n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.data[k] != Complex64::new(0.0, 0.0) {
                    indices.push(self.indices[k]);
                    data.push(self.data[k]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.data = data;
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let s = self.indptr[r]..self.indptr[r + 1];
        self.indices[s.clone()].iter().copied().zip(self.data[s].iter().copied())
    }

    /// y = A·x
    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, out) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            *out = acc;
        }
    }

    /// y += A·x
    pub fn matvec_add(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, out) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            *out += acc;
        }
    }

    /// Aᴴ·x
    pub fn adjoint_matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.n];
        for (r, xr) in x.iter().enumerate().take(self.n) {
            for k in self.indptr[r]..self.indptr[r + 1] {
                y[self.indices[k]] += self.data[k].conj() * xr;
            }
        }
        y
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        let mut col = vec![0.0; self.n];
        for (c, v) in self.indices.iter().zip(&self.data) {
            col[*c] += v.norm();
        }
        col.into_iter().fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    /// Union sparsity pattern of `parts` with zero values, and for each part
    /// the position of each of its stored entries inside the union.
    pub fn union_pattern(parts: &[&CsrMatrix]) -> (CsrMatrix, Vec<Vec<usize>>) {
        let n = parts[0].n;
        let mut t = Vec::new();
        for m in parts {
            assert_eq!(m.n, n);
            for r in 0..n {
                t.extend(m.row(r).map(|(c, _)| (r, c, Complex64::new(1.0, 0.0))));
            }
        }
        let mut u = CsrMatrix::from_triplets(n, t);
        u.data.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        let pos = parts
            .iter()
            .map(|m| {
                let mut p = Vec::with_capacity(m.nnz());
                for r in 0..n {
                    let row = &u.indices[u.indptr[r]..u.indptr[r + 1]];
                    for (c, _) in m.row(r) {
                        p.push(u.indptr[r] + row.binary_search(&c).expect("entry in union"));
                    }
                }
                p
            })
            .collect();
        (u, pos)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.data
    }

    /// Same pattern, new values (explicit zeros kept).
    pub fn with_values(&self, data: Vec<Complex64>) -> CsrMatrix {
        assert_eq!(data.len(), self.data.len());
        CsrMatrix { n: self.n, indptr: self.indptr.clone(), indices: self.indices.clone(), data }
    }

    /// A + B with the same dimension.
    pub fn add(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.n, other.n);
        let mut t = Vec::with_capacity(self.nnz() + other.nnz());
        for m in [self, other] {
            for r in 0..m.n {
                t.extend(m.row(r).map(|(c, v)| (r, c, v)));
            }
        }
        CsrMatrix::from_triplets(self.n, t)
    }
}
