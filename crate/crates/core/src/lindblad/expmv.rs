//! Action of exp(tL) on a vector by restarted Arnoldi with local error control.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

type C = Complex64;

const DELTA: f64 = 1.2;
const GAMMA: f64 = 0.9;
const MAX_REJECTS: usize = 50;

fn round2(x: f64) -> f64 {
    if x <= 0.0 || !x.is_finite() {
        return x;
    }
    let s = 10f64.powf(x.log10().floor() - 1.0);
    (x / s).ceil() * s
}

fn norm(a: &[C]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// exp(t·A)·v with A given by `apply`, `anorm` ≈ ‖A‖, Krylov dimension `m`
/// and relative tolerance `tol`.
pub fn expmv(
    apply: impl Fn(&[C], &mut [C]),
    v: &[C],
    t: f64,
    anorm: f64,
    m: usize,
    tol: f64,
) -> Result<Vec<C>> {
    let n = v.len();
    let beta0 = norm(v);
    if beta0 == 0.0 || t == 0.0 {
        return Ok(v.to_vec());
    }
    let m = m.min(n).max(1);
    let anorm = anorm.max(f64::MIN_POSITIVE);
    let mut w: Vec<C> = v.iter().map(|x| x / beta0).collect();
    let btol = 1e-12 * anorm;
    let mf = m as f64;
    let fact = ((mf + 1.0) / std::f64::consts::E).powf(mf + 1.0) * (2.0 * std::f64::consts::PI * (mf + 1.0)).sqrt();
    let mut t_new = round2((1.0 / anorm) * (fact * tol / (4.0 * anorm)).powf(1.0 / mf));
    let mut t_now = 0.0;
    let mut p = vec![C::new(0.0, 0.0); n];
    while t_now < t {
        let mut t_step = (t - t_now).min(t_new);
        let beta = norm(&w);
        let mut vs: Vec<Vec<C>> = vec![w.iter().map(|x| x / beta).collect()];
        let mut h = DMatrix::<C>::zeros(m + 2, m + 2);
        let mut k1 = 2;
        let mut mb = m;
        for j in 0..m {
            apply(&vs[j], &mut p);
            for (i, vi) in vs.iter().enumerate() {
                let hij: C = vi.iter().zip(&p).map(|(a, b)| a.conj() * b).sum();
                h[(i, j)] = hij;
                p.iter_mut().zip(vi).for_each(|(p, v)| *p -= hij * v);
            }
            let s = norm(&p);
            if s < btol {
                k1 = 0;
                mb = j + 1;
                t_step = t - t_now;
                break;
            }
            h[(j + 1, j)] = C::new(s, 0.0);
            vs.push(p.iter().map(|x| x / s).collect());
        }
        let mut avnorm = 0.0;
        if k1 != 0 {
            h[(m + 1, m)] = C::new(1.0, 0.0);
            apply(&vs[m], &mut p);
            avnorm = norm(&p);
        }
        let mut rejects = 0;
        let (f, err_loc, xm) = loop {
            let mx = mb + k1;
            let hs = h.view((0, 0), (mx, mx)).map(|x| x * t_step);
            let f = hs.exp();
            if k1 == 0 {
                break (f, btol, 1.0 / mf);
            }
            let p1 = f[(m, 0)].norm() * beta;
            let p2 = f[(m + 1, 0)].norm() * beta * avnorm;
            let (err, xm) = if p1 > 10.0 * p2 {
                (p2, 1.0 / mf)
            } else if p1 > p2 {
                (p1 * p2 / (p1 - p2), 1.0 / mf)
            } else {
                (p1, 1.0 / (mf - 1.0).max(1.0))
            };
            if err <= DELTA * t_step * tol {
                break (f, err, xm);
            }
            rejects += 1;
            if rejects > MAX_REJECTS {
                return Err(Error::Propagation(format!(
                    "Krylov step rejected {MAX_REJECTS} times at t = {t_now:e}"
                )));
            }
            t_step = round2(GAMMA * t_step * (t_step * tol / err).powf(xm));
        };
        w.iter_mut().for_each(|x| *x = C::new(0.0, 0.0));
        for (k, vk) in vs.iter().take(mb).enumerate() {
            let c = f[(k, 0)] * beta;
            w.iter_mut().zip(vk).for_each(|(w, v)| *w += c * v);
        }
        if w.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::Propagation("non-finite state during propagation".into()));
        }
        t_now += t_step;
        let err = err_loc.max(f64::MIN_POSITIVE);
        t_new = round2(GAMMA * t_step * (t_step * tol / err).powf(xm));
    }
    Ok(w.into_iter().map(|x| x * beta0).collect())
}
