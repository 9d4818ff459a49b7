//! Driven-dissipative cavity + reaction-coordinate model in the frame of the
//! drive, truncated Fock basis |n_c, n_x⟩ with index n_c·(N_x+1) + n_x.

mod expmv;
mod sparse;
mod steady;
mod superop;

pub use expmv::expmv;
pub use sparse::CsrMatrix;
pub use steady::{steady_state, steady_state_dense, SolverMethod, SteadyState, DENSE_LIMIT};
pub use superop::{superoperator, Jump, Liouvillian};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::config::NumericsConfig;
use crate::{Error, Result};

type C = Complex64;

/// Population allowed in the highest retained Fock level of either mode.
pub const TRUNCATION_TOL: f64 = 1e-6;
/// Mean photon number below which g²(0) is reported as undefined.
pub const MIN_OCCUPATION: f64 = 1e-12;
const KRYLOV_DIM: usize = 30;
const KRYLOV_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FockSpace {
    pub nc: usize,
    pub nx: usize,
}

impl FockSpace {
    pub fn new(nc: usize, nx: usize) -> Self {
        Self { nc, nx }
    }

    pub fn dim(&self) -> usize {
        (self.nc + 1) * (self.nx + 1)
    }

    pub fn index(&self, n_c: usize, n_x: usize) -> usize {
        n_c * (self.nx + 1) + n_x
    }

    pub fn numbers(&self, idx: usize) -> (usize, usize) {
        (idx / (self.nx + 1), idx % (self.nx + 1))
    }

    fn lowering(&self, cavity: bool) -> DMatrix<C> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            let (c, x) = self.numbers(i);
            if cavity && c > 0 {
                m[(self.index(c - 1, x), i)] = C::new((c as f64).sqrt(), 0.0);
            } else if !cavity && x > 0 {
                m[(self.index(c, x - 1), i)] = C::new((x as f64).sqrt(), 0.0);
            }
        }
        m
    }

    /// Cavity annihilation operator a.
    pub fn a(&self) -> DMatrix<C> {
        self.lowering(true)
    }

    /// Reaction-coordinate annihilation operator b.
    pub fn b(&self) -> DMatrix<C> {
        self.lowering(false)
    }
}

/// Parameters of the two-mode model; all energies ħ·ω in meV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedSystem {
    pub wc_mev: f64,
    /// Reaction-coordinate energy ħΩ₀.
    pub omega0_mev: f64,
    pub g0_mev: f64,
    /// Kerr shift ħW₀′.
    pub w0p_mev: f64,
    /// Cavity amplitude decay ħγ_c.
    pub gamma_c_mev: f64,
    pub gamma_x_mev: f64,
    pub gamma_xp_mev: f64,
    pub gamma_res_mev: f64,
    pub f_mev: f64,
    pub wd_mev: f64,
}

impl ReducedSystem {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("gamma_c_mev", self.gamma_c_mev),
            ("gamma_x_mev", self.gamma_x_mev),
            ("gamma_xp_mev", self.gamma_xp_mev),
            ("gamma_res_mev", self.gamma_res_mev),
            ("G0_mev", self.g0_mev),
            ("F_mev", self.f_mev),
        ];
        for (k, v) in checks {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::validation(k, format!("must be finite and >= 0, got {v}")));
            }
        }
        for (k, v) in [("wc_mev", self.wc_mev), ("wd_mev", self.wd_mev), ("W0p", self.w0p_mev), ("Omega0", self.omega0_mev)] {
            if !v.is_finite() {
                return Err(Error::validation(k, format!("must be finite, got {v}")));
            }
        }
        Ok(())
    }

    pub fn with_frequencies(mut self, wc_mev: f64, wd_mev: f64) -> Self {
        self.wc_mev = wc_mev;
        self.wd_mev = wd_mev;
        self
    }

    pub fn hamiltonians(&self, fock: &FockSpace) -> (DMatrix<C>, DMatrix<C>) {
        let a = fock.a();
        let b = fock.b();
        let ad = a.adjoint();
        let bd = b.adjoint();
        let re = |x: f64| C::new(x, 0.0);
        let h0 = (&ad * &a) * re(self.wc_mev - self.wd_mev)
            + (&bd * &b) * re(self.omega0_mev - self.wd_mev)
            + (&ad * &b + &bd * &a) * re(self.g0_mev)
            + (&bd * &bd * &b * &b) * re(self.w0p_mev);
        let hf = (&a + &ad) * re(self.f_mev);
        (h0, hf)
    }

    pub fn jumps(&self, fock: &FockSpace) -> Vec<Jump> {
        let b = fock.b();
        vec![
            Jump { rate_mev: 2.0 * self.gamma_c_mev, op: fock.a() },
            Jump { rate_mev: 2.0 * self.gamma_x_mev + self.gamma_res_mev, op: b.clone() },
            Jump { rate_mev: 2.0 * self.gamma_xp_mev, op: b.adjoint() * &b },
        ]
    }
}

/// Liouvillian of the two-mode model in a given truncation.
pub fn build_liouvillian(sys: &ReducedSystem, fock: &FockSpace, max_dim: usize) -> Result<Liouvillian> {
    sys.validate()?;
    let d = fock.dim();
    if d * d > max_dim {
        return Err(Error::Resource(format!(
            "truncation (Nc={}, Nx={}) needs superoperator dimension {} > cap {max_dim}",
            fock.nc,
            fock.nx,
            d * d
        )));
    }
    let (h0, hf) = sys.hamiltonians(fock);
    let exc = (0..d).map(|i| {
        let (c, x) = fock.numbers(i);
        c + x
    });
    Ok(Liouvillian::from_parts(&h0, Some(&hf), &sys.jumps(fock), max_dim)?.with_excitations(exc.collect()))
}

/// Liouvillians of one system at varying ω_c, ω_d and Γ_res, assembled on a
/// fixed sparsity pattern.
#[derive(Debug, Clone)]
pub struct DetuningFamily {
    base: ReducedSystem,
    fock: FockSpace,
    pattern: CsrMatrix,
    rest: Vec<C>,
    /// Pattern positions and values of the a†a, b†b and D[b] parts.
    parts: [(Vec<usize>, Vec<C>); 3],
    drive: CsrMatrix,
    excitations: Vec<usize>,
}

impl DetuningFamily {
    pub fn new(base: &ReducedSystem, fock: FockSpace, max_dim: usize) -> Result<Self> {
        base.validate()?;
        let full = build_liouvillian(base, &fock, max_dim)?;
        let zeroed = ReducedSystem {
            wc_mev: 0.0,
            omega0_mev: 0.0,
            wd_mev: 0.0,
            gamma_x_mev: 0.0,
            gamma_res_mev: 0.0,
            ..*base
        };
        let rest = build_liouvillian(&zeroed, &fock, max_dim)?;
        let a = fock.a();
        let b = fock.b();
        let lc = superoperator(&(a.adjoint() * &a), &[]);
        let lx = superoperator(&(b.adjoint() * &b), &[]);
        let zero = DMatrix::<C>::zeros(fock.dim(), fock.dim());
        let lb = superoperator(&zero, &[Jump { rate_mev: 1.0, op: b }]);
        let (pattern, pos) = CsrMatrix::union_pattern(&[&rest.drive_free, &lc, &lx, &lb]);
        let mut rest_vals = vec![C::new(0.0, 0.0); pattern.nnz()];
        for (p, v) in pos[0].iter().zip(rest.drive_free.values()) {
            rest_vals[*p] += v;
        }
        let mut it = pos.into_iter().skip(1);
        let mut part = |m: &CsrMatrix| (it.next().unwrap(), m.values().to_vec());
        let parts = [part(&lc), part(&lx), part(&lb)];
        Ok(Self {
            base: *base,
            fock,
            pattern,
            rest: rest_vals,
            parts,
            drive: full.drive.clone(),
            excitations: full.excitations.clone().unwrap(),
        })
    }

    pub fn fock(&self) -> FockSpace {
        self.fock
    }

    pub fn base(&self) -> &ReducedSystem {
        &self.base
    }

    /// Liouvillian at the given resonator, drive and residual-decay values.
    pub fn at(&self, wc_mev: f64, wd_mev: f64, gamma_res_mev: f64) -> Liouvillian {
        let scale = [
            wc_mev - wd_mev,
            self.base.omega0_mev - wd_mev,
            2.0 * self.base.gamma_x_mev + gamma_res_mev,
        ];
        let mut vals = self.rest.clone();
        for ((pos, v), s) in self.parts.iter().zip(scale) {
            for (p, x) in pos.iter().zip(v) {
                vals[*p] += x * s;
            }
        }
        Liouvillian::from_csr(self.fock.dim(), self.pattern.with_values(vals), self.drive.clone())
            .with_excitations(self.excitations.clone())
    }

    /// Steady-state g²(0) at fixed truncation; also returns the top-level
    /// populations so callers can detect truncation failure.
    pub fn g2(&self, wc_mev: f64, wd_mev: f64, gamma_res_mev: f64, tol: f64) -> Result<(f64, (f64, f64))> {
        let l = self.at(wc_mev, wd_mev, gamma_res_mev);
        let ss = steady_state(&l, tol)?;
        Ok((g2_zero(&ss.rho, &self.fock)?, top_population(&ss.rho, &self.fock)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyOptions {
    pub nc: usize,
    pub nx: usize,
    pub adaptive: bool,
    pub max_fock: usize,
    pub max_dim: usize,
    pub tol: f64,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        (&NumericsConfig::default()).into()
    }
}

impl From<&NumericsConfig> for SteadyOptions {
    fn from(n: &NumericsConfig) -> Self {
        Self {
            nc: n.nc,
            nx: n.nx,
            adaptive: n.adaptive_truncation,
            max_fock: n.max_fock,
            max_dim: n.max_superop_dim,
            tol: n.steady_tol,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyResult {
    pub state: SteadyState,
    pub fock: FockSpace,
    /// Populations of the highest retained cavity and exciton levels.
    pub top_population: (f64, f64),
    pub truncation_converged: bool,
}

fn top_population(rho: &DMatrix<C>, fock: &FockSpace) -> (f64, f64) {
    let (mut pc, mut px) = (0.0, 0.0);
    for i in 0..fock.dim() {
        let (c, x) = fock.numbers(i);
        let p = rho[(i, i)].re;
        if c == fock.nc {
            pc += p;
        }
        if x == fock.nx {
            px += p;
        }
    }
    (pc, px)
}

/// Steady state, growing the truncation of each mode until its top level
/// holds less than [`TRUNCATION_TOL`] or `max_fock` is reached.
pub fn solve_steady(sys: &ReducedSystem, opts: &SteadyOptions) -> Result<SteadyResult> {
    if opts.nc == 0 || opts.nx == 0 {
        return Err(Error::validation("Nc", "Fock truncation must be >= 1 for both modes"));
    }
    let mut fock = FockSpace::new(opts.nc, opts.nx);
    loop {
        let l = build_liouvillian(sys, &fock, opts.max_dim)?;
        let state = steady_state(&l, opts.tol)?;
        let top = top_population(&state.rho, &fock);
        let grow_c = top.0 > TRUNCATION_TOL;
        let grow_x = top.1 > TRUNCATION_TOL;
        if !(grow_c || grow_x) {
            return Ok(SteadyResult { state, fock, top_population: top, truncation_converged: true });
        }
        let capped = |n: usize| n >= opts.max_fock;
        if !opts.adaptive || (grow_c && capped(fock.nc)) || (grow_x && capped(fock.nx)) {
            log::warn!(
                "Fock truncation (Nc={}, Nx={}) not converged: top populations {:.3e}, {:.3e}",
                fock.nc,
                fock.nx,
                top.0,
                top.1
            );
            return Ok(SteadyResult { state, fock, top_population: top, truncation_converged: false });
        }
        if grow_c {
            fock.nc += 1;
        }
        if grow_x {
            fock.nx += 1;
        }
    }
}

/// (⟨a†a⟩, ⟨b†b⟩)
pub fn occupations(rho: &DMatrix<C>, fock: &FockSpace) -> (f64, f64) {
    let (mut nc, mut nx) = (0.0, 0.0);
    for i in 0..fock.dim() {
        let (c, x) = fock.numbers(i);
        nc += c as f64 * rho[(i, i)].re;
        nx += x as f64 * rho[(i, i)].re;
    }
    (nc, nx)
}

/// ⟨a†a†aa⟩/⟨a†a⟩² from the diagonal of ρ.
pub fn g2_zero(rho: &DMatrix<C>, fock: &FockSpace) -> Result<f64> {
    let (mut n, mut n2) = (0.0, 0.0);
    for i in 0..fock.dim() {
        let c = fock.numbers(i).0 as f64;
        let p = rho[(i, i)].re;
        n += c * p;
        n2 += c * (c - 1.0) * p;
    }
    if !(n >= MIN_OCCUPATION) {
        return Err(Error::UndefinedCorrelation(format!(
            "cavity occupation {n:e} below {MIN_OCCUPATION:e}"
        )));
    }
    Ok(n2 / (n * n))
}

/// Steady-state observables and the checks made on ρ.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationResult {
    pub g2_zero: f64,
    pub n_cavity: f64,
    pub n_exciton: f64,
    pub nc: usize,
    pub nx: usize,
    pub top_population_c: f64,
    pub top_population_x: f64,
    pub truncation_converged: bool,
    pub residual: f64,
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
    pub solver: SolverMethod,
}

fn smallest_eigenvalue(rho: &DMatrix<C>) -> f64 {
    let h = (rho + rho.adjoint()) * C::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn correlation(res: &SteadyResult) -> Result<CorrelationResult> {
    let rho = &res.state.rho;
    let (n_cavity, n_exciton) = occupations(rho, &res.fock);
    Ok(CorrelationResult {
        g2_zero: g2_zero(rho, &res.fock)?,
        n_cavity,
        n_exciton,
        nc: res.fock.nc,
        nx: res.fock.nx,
        top_population_c: res.top_population.0,
        top_population_x: res.top_population.1,
        truncation_converged: res.truncation_converged,
        residual: res.state.residual,
        trace_error: (rho.trace() - C::new(1.0, 0.0)).norm(),
        hermiticity_error: (rho - rho.adjoint()).norm(),
        min_eigenvalue: smallest_eigenvalue(rho),
        solver: res.state.method,
    })
}

/// Steady state and g²(0) with diagnostics.
pub fn analyze(sys: &ReducedSystem, opts: &SteadyOptions) -> Result<CorrelationResult> {
    correlation(&solve_steady(sys, opts)?)
}

/// Steady-state g²(0) only; the inner call of the optimizer.
pub fn g2_steady(sys: &ReducedSystem, opts: &SteadyOptions) -> Result<f64> {
    let res = solve_steady(sys, opts)?;
    g2_zero(&res.state.rho, &res.fock)
}

/// ρ(t) at each of the increasing times `t_ps`, starting from ρ(0) = `rho0`.
pub fn propagate(l: &Liouvillian, rho0: &DMatrix<C>, t_ps: &[f64]) -> Result<Vec<DMatrix<C>>> {
    let anorm = l.norm1();
    let full = l.full();
    let apply = |x: &[C], y: &mut [C]| full.matvec(x, y);
    let mut v = Liouvillian::vectorize(rho0);
    let mut t_prev = 0.0;
    let mut out = Vec::with_capacity(t_ps.len());
    for &t in t_ps {
        if t < t_prev {
            return Err(Error::Domain("propagation times must be nondecreasing from 0".into()));
        }
        v = expmv(apply, &v, t - t_prev, anorm, KRYLOV_DIM, KRYLOV_TOL)?;
        t_prev = t;
        out.push(l.unvectorize(&v));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct G2Trace {
    pub tau_ps: Vec<f64>,
    pub g2: Vec<f64>,
    pub steady: CorrelationResult,
}

/// g²(τ) = Tr[a†a e^{Lτ}(aρa†)]/⟨a†a⟩² on a uniform grid of `n_tau` points.
pub fn g2_tau(sys: &ReducedSystem, opts: &SteadyOptions, tau_max_ps: f64, n_tau: usize) -> Result<G2Trace> {
    if !(tau_max_ps > 0.0) || n_tau < 2 {
        return Err(Error::validation("tau_max_ps", "need tau_max > 0 and at least 2 samples"));
    }
    let res = solve_steady(sys, opts)?;
    let steady = correlation(&res)?;
    let fock = res.fock;
    let l = build_liouvillian(sys, &fock, opts.max_dim)?;
    let a = fock.a();
    let sigma = &a * &res.state.rho * a.adjoint();
    let tau: Vec<f64> = (0..n_tau).map(|k| tau_max_ps * k as f64 / (n_tau - 1) as f64).collect();
    let states = propagate(&l, &sigma, &tau)?;
    let n = steady.n_cavity;
    let g2 = states.iter().map(|s| occupations(s, &fock).0 / (n * n)).collect();
    Ok(G2Trace { tau_ps: tau, g2, steady })
}

#[cfg(test)]
mod tests;
