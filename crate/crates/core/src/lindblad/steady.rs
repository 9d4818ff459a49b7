//! Steady state of a Liouvillian.
//!
//! With known excitation numbers the drive-free part is block triangular in
//! (N_i, N_j): it conserves both numbers or lowers both by one. That makes it
//! a cheap exact preconditioner for restarted GMRES on L with ρ₀₀ pinned to 1.
//! Small systems, and anything where the preconditioner cannot be formed, go
//! through a dense LU with one diagonal row replaced by the trace condition.

use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;
use serde::Serialize;

use super::superop::Liouvillian;
use crate::{Error, Result};

type C = Complex64;
const ZERO: C = C { re: 0.0, im: 0.0 };

/// Superoperator size up to which the dense solver is used directly.
pub const DENSE_LIMIT: usize = 400;
const RESTART: usize = 60;
const MAX_RESTARTS: usize = 20;
const PIVOT_RATIO: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SolverMethod {
    Gmres { iterations: usize },
    Dense,
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: DMatrix<C>,
    /// ‖L vec ρ‖₂ / (‖L‖₁ ‖vec ρ‖₂)
    pub residual: f64,
    pub method: SolverMethod,
}

struct Block {
    idx: Vec<usize>,
    lu: LU<C, Dyn, Dyn>,
    /// (local row, global column, value) couplings to blocks solved earlier.
    off: Vec<(usize, usize, C)>,
}

struct BlockPreconditioner {
    blocks: Vec<Block>,
}

impl BlockPreconditioner {
    fn new(l: &Liouvillian, exc: &[usize]) -> Option<Self> {
        let d = l.hilbert_dim();
        let n = d * d;
        let key = |v: usize| (exc[v % d], exc[v / d]);
        let mut keys: Vec<(usize, usize)> = (1..n).map(key).collect();
        keys.sort_unstable();
        keys.dedup();
        keys.sort_by_key(|&(a, b)| std::cmp::Reverse(a + b));
        let mut groups: std::collections::HashMap<(usize, usize), Vec<usize>> = Default::default();
        for v in 1..n {
            groups.entry(key(v)).or_default().push(v);
        }
        let mut local = vec![usize::MAX; n];
        let mut blocks = Vec::with_capacity(keys.len());
        for k in keys {
            let idx = groups.remove(&k)?;
            for (p, &v) in idx.iter().enumerate() {
                local[v] = p;
            }
            let mut m = DMatrix::<C>::zeros(idx.len(), idx.len());
            let mut off = Vec::new();
            for (r, &v) in idx.iter().enumerate() {
                for (c, val) in l.drive_free.row(v) {
                    let kc = key(c);
                    if kc == k {
                        m[(r, local[c])] += val;
                    } else if kc.0 + kc.1 > k.0 + k.1 && c != 0 {
                        off.push((r, c, val));
                    } else {
                        return None;
                    }
                }
            }
            let lu = m.lu();
            if pivot_ratio(&lu) < PIVOT_RATIO {
                return None;
            }
            blocks.push(Block { idx, lu, off });
        }
        Some(Self { blocks })
    }

    fn apply(&self, r: &[C], z: &mut [C]) {
        z.iter_mut().for_each(|x| *x = ZERO);
        for b in &self.blocks {
            let mut rhs = DVector::from_iterator(b.idx.len(), b.idx.iter().map(|&v| r[v]));
            for &(row, col, val) in &b.off {
                rhs[row] -= val * z[col];
            }
            b.lu.solve_mut(&mut rhs);
            for (k, &v) in b.idx.iter().enumerate() {
                z[v] = rhs[k];
            }
        }
    }
}

fn pivot_ratio(lu: &LU<C, Dyn, Dyn>) -> f64 {
    let u = lu.u();
    let d: Vec<f64> = (0..u.nrows().min(u.ncols())).map(|i| u[(i, i)].norm()).collect();
    let max = d.iter().copied().fold(0.0, f64::max);
    let min = d.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 { 0.0 } else { min / max }
}

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Restarted GMRES for A y = b. Returns (y, converged, iterations).
fn gmres(mut apply: impl FnMut(&[C], &mut [C]), b: &[C], tol: f64) -> (Vec<C>, bool, usize) {
    let n = b.len();
    let bnorm = norm(b);
    let mut y = vec![ZERO; n];
    if bnorm == 0.0 {
        return (y, true, 0);
    }
    let mut iters = 0;
    let mut w = vec![ZERO; n];
    for _ in 0..MAX_RESTARTS {
        apply(&y, &mut w);
        let r: Vec<C> = b.iter().zip(&w).map(|(b, w)| b - w).collect();
        let beta = norm(&r);
        if beta <= tol * bnorm {
            return (y, true, iters);
        }
        let m = RESTART.min(n);
        let mut v: Vec<Vec<C>> = vec![r.iter().map(|x| x / beta).collect()];
        let mut h = vec![vec![ZERO; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![ZERO; m];
        let mut g = vec![ZERO; m + 1];
        g[0] = C::new(beta, 0.0);
        let mut k = 0;
        for j in 0..m {
            iters += 1;
            apply(&v[j], &mut w);
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(vi, &w);
                h[i][j] = hij;
                w.iter_mut().zip(vi).for_each(|(w, v)| *w -= hij * v);
            }
            let hn = norm(&w);
            h[j + 1][j] = C::new(hn, 0.0);
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i].conj() * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let (a, bb) = (h[j][j], h[j + 1][j]);
            let nu = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if a.norm() == 0.0 {
                cs[j] = 0.0;
                sn[j] = C::new(1.0, 0.0);
                h[j][j] = bb;
            } else {
                let ph = a / a.norm();
                cs[j] = a.norm() / nu;
                sn[j] = ph * bb.conj() / nu;
                h[j][j] = ph * nu;
            }
            h[j + 1][j] = ZERO;
            g[j + 1] = -sn[j].conj() * g[j];
            g[j] *= cs[j];
            k = j + 1;
            if g[j + 1].norm() <= tol * bnorm || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|x| x / hn).collect());
        }
        let mut c = vec![ZERO; k];
        for i in (0..k).rev() {
            let s: C = (i + 1..k).map(|l| h[i][l] * c[l]).sum();
            c[i] = (g[i] - s) / h[i][i];
        }
        for (ci, vi) in c.iter().zip(&v) {
            y.iter_mut().zip(vi).for_each(|(y, v)| *y += ci * v);
        }
    }
    apply(&y, &mut w);
    let r: Vec<C> = b.iter().zip(&w).map(|(b, w)| b - w).collect();
    (y, norm(&r) <= tol * bnorm, iters)
}

fn finish(l: &Liouvillian, vec: &[C], method: SolverMethod) -> Result<SteadyState> {
    let mut rho = l.unvectorize(vec);
    let tr = rho.trace();
    if !(tr.norm() > 0.0) || !tr.re.is_finite() {
        return Err(Error::Singular("steady state has vanishing trace".into()));
    }
    rho /= tr;
    let v = Liouvillian::vectorize(&rho);
    let mut lv = vec![ZERO; v.len()];
    l.apply(&v, &mut lv);
    let residual = norm(&lv) / (l.norm1() * norm(&v)).max(f64::MIN_POSITIVE);
    Ok(SteadyState { rho, residual, method })
}

/// Dense LU with the first diagonal row replaced by Tr ρ = 1.
pub fn steady_state_dense(l: &Liouvillian) -> Result<SteadyState> {
    let d = l.hilbert_dim();
    let n = d * d;
    let mut a = l.to_dense();
    for c in 0..n {
        a[(0, c)] = ZERO;
    }
    for i in 0..d {
        a[(0, i + d * i)] = C::new(1.0, 0.0);
    }
    let lu = a.lu();
    if pivot_ratio(&lu) < PIVOT_RATIO {
        return Err(Error::Singular(
            "Liouvillian null space is not one-dimensional; steady state is not unique".into(),
        ));
    }
    let mut b = DVector::<C>::zeros(n);
    b[0] = C::new(1.0, 0.0);
    let x = lu.solve(&b).ok_or_else(|| Error::Singular("dense steady-state solve failed".into()))?;
    finish(l, x.as_slice(), SolverMethod::Dense)
}

/// Steady state to relative residual `tol`.
pub fn steady_state(l: &Liouvillian, tol: f64) -> Result<SteadyState> {
    if l.dim() <= DENSE_LIMIT {
        return steady_state_dense(l);
    }
    let Some(exc) = l.excitations.as_deref() else {
        return steady_state_dense(l);
    };
    let Some(pre) = BlockPreconditioner::new(l, exc) else {
        log::debug!("block preconditioner unavailable, using dense solve");
        return steady_state_dense(l);
    };
    let n = l.dim();
    // ρ₀₀ = 1; the vacuum column of L is pure drive.
    let mut e0 = vec![ZERO; n];
    e0[0] = C::new(1.0, 0.0);
    let mut b = vec![ZERO; n];
    l.apply(&e0, &mut b);
    b.iter_mut().for_each(|x| *x = -*x);
    b[0] = ZERO;
    let mut z = vec![ZERO; n];
    let op = |y: &[C], out: &mut [C]| {
        pre.apply(y, &mut z);
        l.apply(&z, out);
        out[0] = ZERO;
    };
    let (y, converged, iterations) = gmres(op, &b, tol);
    if !converged {
        log::warn!("GMRES did not reach {tol:e} after {iterations} iterations, using dense solve");
        return steady_state_dense(l);
    }
    let mut x = vec![ZERO; n];
    pre.apply(&y, &mut x);
    x[0] = C::new(1.0, 0.0);
    let ss = finish(l, &x, SolverMethod::Gmres { iterations })?;
    if ss.residual > tol.max(1e-10) * 1e2 {
        log::warn!("GMRES residual {:e} too large, using dense solve", ss.residual);
        return steady_state_dense(l);
    }
    Ok(ss)
}
