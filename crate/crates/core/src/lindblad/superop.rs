//! Liouvillian assembly in column-major vectorization, v = i + D·j for |i⟩⟨j|.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::sparse::CsrMatrix;
use crate::units::HBAR_MEV_PS;
use crate::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A collapse channel: ħ·rate in meV and its jump operator.
#[derive(Debug, Clone)]
pub struct Jump {
    pub rate_mev: f64,
    pub op: DMatrix<Complex64>,
}

/// Liouvillian split into a drive-free part and the coherent drive term,
/// both in ps⁻¹.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    dim: usize,
    pub(crate) drive_free: CsrMatrix,
    pub(crate) drive: CsrMatrix,
    /// Excitation number of each Hilbert basis state, when known.
    pub(crate) excitations: Option<Vec<usize>>,
}

fn nonzeros_by_column(m: &DMatrix<Complex64>) -> Vec<Vec<(usize, Complex64)>> {
    (0..m.ncols())
        .map(|c| {
            (0..m.nrows())
                .filter_map(|r| {
                    let v = m[(r, c)];
                    (v.norm() > 0.0).then_some((r, v))
                })
                .collect()
        })
        .collect()
}

/// Superoperator of ρ ↦ −i/ħ[H, ρ] + Σ (r/ħ)(CρC† − ½{C†C, ρ}).
pub fn superoperator(h_mev: &DMatrix<Complex64>, jumps: &[Jump]) -> CsrMatrix {
    let d = h_mev.nrows();
    let mut heff = h_mev.map(|v| v / HBAR_MEV_PS);
    for j in jumps {
        let r = j.rate_mev / HBAR_MEV_PS;
        heff -= (j.op.adjoint() * &j.op) * Complex64::new(0.0, 0.5 * r);
    }
    let hcols = nonzeros_by_column(&heff);
    let jcols: Vec<_> = jumps
        .iter()
        .filter(|j| j.rate_mev != 0.0)
        .map(|j| (j.rate_mev / HBAR_MEV_PS, nonzeros_by_column(&j.op)))
        .collect();
    let mut t = Vec::new();
    for jj in 0..d {
        for ii in 0..d {
            let col = ii + d * jj;
            for &(m, v) in &hcols[ii] {
                t.push((m + d * jj, col, -I * v));
            }
            for &(m, v) in &hcols[jj] {
                t.push((ii + d * m, col, I * v.conj()));
            }
            for (r, cols) in &jcols {
                for &(m, cm) in &cols[ii] {
                    for &(n, cn) in &cols[jj] {
                        t.push((m + d * n, col, cm * cn.conj() * *r));
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(d * d, t)
}

impl Liouvillian {
    /// Builds from a drive-free Hamiltonian, a drive Hamiltonian and jumps,
    /// refusing superoperators larger than `max_dim` (D² cap).
    pub fn from_parts(
        h0_mev: &DMatrix<Complex64>,
        h_drive_mev: Option<&DMatrix<Complex64>>,
        jumps: &[Jump],
        max_dim: usize,
    ) -> Result<Self> {
        let d = h0_mev.nrows();
        if h0_mev.ncols() != d {
            return Err(Error::Domain("Hamiltonian must be square".into()));
        }
        if d * d > max_dim {
            return Err(Error::Resource(format!(
                "superoperator dimension {} exceeds cap {max_dim}",
                d * d
            )));
        }
        for j in jumps {
            if !(j.rate_mev >= 0.0) || j.op.shape() != (d, d) {
                return Err(Error::Domain("jump operators need nonnegative rates and matching shape".into()));
            }
        }
        let drive_free = superoperator(h0_mev, jumps);
        let drive = match h_drive_mev {
            Some(h) => superoperator(h, &[]),
            None => CsrMatrix::from_triplets(d * d, Vec::new()),
        };
        Ok(Self { dim: d, drive_free, drive, excitations: None })
    }

    pub(crate) fn from_csr(dim: usize, drive_free: CsrMatrix, drive: CsrMatrix) -> Self {
        Self { dim, drive_free, drive, excitations: None }
    }

    pub(crate) fn with_excitations(mut self, n: Vec<usize>) -> Self {
        assert_eq!(n.len(), self.dim);
        self.excitations = Some(n);
        self
    }

    /// Hilbert space dimension D.
    pub fn hilbert_dim(&self) -> usize {
        self.dim
    }

    /// Superoperator dimension D².
    pub fn dim(&self) -> usize {
        self.dim * self.dim
    }

    pub fn nnz(&self) -> usize {
        self.drive_free.nnz() + self.drive.nnz()
    }

    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.drive_free.matvec(x, y);
        self.drive.matvec_add(x, y);
    }

    pub fn full(&self) -> CsrMatrix {
        self.drive_free.add(&self.drive)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        self.drive_free.to_dense() + self.drive.to_dense()
    }

    /// Upper bound on ‖L‖₁ from the two parts.
    pub fn norm1(&self) -> f64 {
        self.drive_free.norm1() + self.drive.norm1()
    }

    /// Column-major vectorization of ρ.
    pub fn vectorize(rho: &DMatrix<Complex64>) -> Vec<Complex64> {
        rho.as_slice().to_vec()
    }

    pub fn unvectorize(&self, v: &[Complex64]) -> DMatrix<Complex64> {
        DMatrix::from_column_slice(self.dim, self.dim, v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lower(n: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(n, n, |r, c| {
            if c == r + 1 { Complex64::new((c as f64).sqrt(), 0.0) } else { Complex64::new(0.0, 0.0) }
        })
    }

    #[test]
    fn matches_dense_kronecker_form() {
        let n = 4;
        let a = lower(n);
        let h = DMatrix::from_fn(n, n, |r, c| Complex64::new((r + c) as f64 * 0.3, (r as f64 - c as f64) * 0.2));
        let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
        let jumps = vec![Jump { rate_mev: 0.7, op: a.clone() }, Jump { rate_mev: 0.2, op: a.adjoint() * &a }];
        let l = superoperator(&h, &jumps).to_dense();
        let id = DMatrix::<Complex64>::identity(n, n);
        // vec(AXB) = (Bᵀ ⊗ A) vec(X)
        let hb = h.map(|v| v / HBAR_MEV_PS);
        let mut want = (id.kronecker(&hb) - hb.transpose().kronecker(&id)) * (-I);
        for j in &jumps {
            let r = j.rate_mev / HBAR_MEV_PS;
            let c = &j.op;
            let cdc = c.adjoint() * c;
            want += (c.conjugate().kronecker(c)
                - id.kronecker(&cdc) * Complex64::new(0.5, 0.0)
                - cdc.transpose().kronecker(&id) * Complex64::new(0.5, 0.0))
                * Complex64::new(r, 0.0);
        }
        assert!((l - want).norm() < 1e-10);
    }

    #[test]
    fn resource_guard() {
        let h = DMatrix::<Complex64>::zeros(10, 10);
        assert!(matches!(Liouvillian::from_parts(&h, None, &[], 99), Err(Error::Resource(_))));
        assert!(Liouvillian::from_parts(&h, None, &[], 100).is_ok());
    }
}
