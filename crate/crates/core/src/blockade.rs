//! Two-frequency minimization of g²(0) and lateral-confinement sweeps.
//!
//! The search runs over ħ(ω_c − ω₀) on a uniform axis and over ω_d through
//! ω_d = Ω₀ + s·sinh(u), which keeps the grid dense near the narrow dips next
//! to the exciton-like resonance while still reaching the box edges. The
//! best local minima of the coarse grid seed bounded Nelder-Mead runs.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{FrequencySetting, NumericsConfig, RunConfig, SpectralBackendKind};
use crate::field::{collective_coupling, cutoff_mev, kerr_shift, CouplingSummary, Profile};
use crate::lindblad::{correlation, solve_steady, DetuningFamily, FockSpace, ReducedSystem, SteadyOptions};
use crate::materials::MaterialParams;
use crate::spectral::SpectralModel;
use crate::{Error, Result};

/// Angular samples used when building J from a tabulated profile.
pub const PROFILE_THETA_SAMPLES: usize = 32;

/// Record of the dephasing calibration γ_x′(T) = ħW₀′(L).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DephasingCalibration {
    pub l_nm: f64,
    pub t_kelvin: f64,
    pub target_mev: f64,
    pub gxp_activated_mev: f64,
}

/// Material, profile and drive settings from which per-L systems are built.
#[derive(Debug, Clone)]
pub struct SystemTemplate {
    pub material: MaterialParams,
    pub profile: Profile,
    pub gamma_c_mev: f64,
    pub f_mev: f64,
    pub t_kelvin: f64,
    pub wc: FrequencySetting,
    pub g0_override_mev: Option<f64>,
    pub include_residual: bool,
    pub backend: SpectralBackendKind,
    pub x_max: f64,
    pub n_x: usize,
    pub calibration: Option<DephasingCalibration>,
}

impl SystemTemplate {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let mut t = Self {
            material: cfg.material.clone(),
            profile: cfg.profile.build()?,
            gamma_c_mev: cfg.system.gamma_c_mev,
            f_mev: cfg.system.f_mev,
            t_kelvin: cfg.system.t_kelvin,
            wc: cfg.system.wc,
            g0_override_mev: cfg.system.g0_override_mev,
            include_residual: cfg.system.include_residual,
            backend: cfg.numerics.spectral_backend,
            x_max: cfg.numerics.x_max,
            n_x: cfg.numerics.n_x,
            calibration: None,
        };
        if let Some(l) = cfg.system.calibrate_dephasing_l_nm {
            t.calibrate_dephasing(l)?;
        }
        Ok(t)
    }

    /// Re-solves the activated dephasing amplitude so that γ_x′(T) = ħW₀′(L).
    pub fn calibrate_dephasing(&mut self, l_nm: f64) -> Result<DephasingCalibration> {
        let target = kerr_shift(&self.profile_at(l_nm)?, &self.material)?;
        self.material.linewidth.calibrate_dephasing(self.t_kelvin, target)?;
        let c = DephasingCalibration {
            l_nm,
            t_kelvin: self.t_kelvin,
            target_mev: target,
            gxp_activated_mev: self.material.linewidth.gxp_activated_mev,
        };
        self.calibration = Some(c);
        Ok(c)
    }

    fn profile_at(&self, l_nm: f64) -> Result<Profile> {
        match &self.profile {
            Profile::Gaussian(g) => Ok(Profile::Gaussian(g.with_l(l_nm)?)),
            Profile::Tabulated(_) => Err(Error::Domain(
                "lateral confinement can only be varied for Gaussian profiles".into(),
            )),
        }
    }

    pub fn with_l(&self, l_nm: f64) -> Result<Self> {
        Ok(Self { profile: self.profile_at(l_nm)?, ..self.clone() })
    }

    /// Couplings, spectral density and linewidths of the current profile.
    pub fn point(&self) -> Result<SystemPoint> {
        let m = &self.material;
        let edge = m.exciton_energy_mev;
        // an optimized ω_c has no single value; the band edge keeps G₀ independent of L
        let wc_ref = match self.wc {
            FrequencySetting::Fixed(w) => w,
            FrequencySetting::Resonant => edge + cutoff_mev(&self.profile, m),
            FrequencySetting::Optimize => edge,
        };
        let coupling = collective_coupling(&self.profile, m, wc_ref)?;
        let mut spectral = match &self.profile {
            Profile::Gaussian(_) => {
                let s = SpectralModel::gaussian(edge, coupling.xi_mev, coupling.g0_mev)?;
                match self.backend {
                    SpectralBackendKind::Analytic => s,
                    SpectralBackendKind::Numeric => s.tabulate(self.x_max, self.n_x)?,
                }
            }
            Profile::Tabulated(t) => SpectralModel::from_profile(t, m, wc_ref, self.n_x, PROFILE_THETA_SAMPLES)?,
        };
        if let Some(g) = self.g0_override_mev {
            spectral = spectral.with_coupling(g)?;
        }
        let (gamma_x_mev, gamma_xp_mev) = m.linewidths_at(self.t_kelvin)?;
        let resonant = spectral.residual_rate(spectral.big_omega0_mev)?.gamma_res_mev;
        Ok(SystemPoint {
            l_nm: self.profile.lateral_nm(),
            g0_mev: spectral.g0_mev,
            omega0_mev: spectral.big_omega0_mev,
            w0p_mev: coupling.w0p_mev,
            coupling,
            gamma_c_mev: self.gamma_c_mev,
            gamma_x_mev,
            gamma_xp_mev,
            gamma_res_resonant_mev: resonant,
            f_mev: self.f_mev,
            include_residual: self.include_residual,
            spectral,
        })
    }
}

/// One lateral confinement: everything the two-mode model needs.
#[derive(Debug, Clone, Serialize)]
pub struct SystemPoint {
    pub l_nm: f64,
    /// ħG₀ used by the model (after any override).
    pub g0_mev: f64,
    /// ħΩ₀
    pub omega0_mev: f64,
    pub w0p_mev: f64,
    /// Profile-derived couplings before any override.
    pub coupling: CouplingSummary,
    pub gamma_c_mev: f64,
    pub gamma_x_mev: f64,
    pub gamma_xp_mev: f64,
    /// ħΓ_res at ω_c = Ω₀.
    pub gamma_res_resonant_mev: f64,
    pub f_mev: f64,
    pub include_residual: bool,
    #[serde(skip)]
    pub spectral: SpectralModel,
}

impl SystemPoint {
    pub fn problem(&self) -> BlockadeProblem {
        let base = ReducedSystem {
            wc_mev: self.omega0_mev,
            omega0_mev: self.omega0_mev,
            g0_mev: self.g0_mev,
            w0p_mev: self.w0p_mev,
            gamma_c_mev: self.gamma_c_mev,
            gamma_x_mev: self.gamma_x_mev,
            gamma_xp_mev: self.gamma_xp_mev,
            gamma_res_mev: 0.0,
            f_mev: self.f_mev,
            wd_mev: self.omega0_mev,
        };
        BlockadeProblem {
            base,
            edge_mev: self.spectral.omega0_mev,
            residual: self.include_residual.then(|| self.spectral.clone()),
        }
    }
}

/// The two-mode system with Γ_res re-evaluated at each resonator frequency.
#[derive(Debug, Clone)]
pub struct BlockadeProblem {
    /// Frequencies and Γ_res of `base` are ignored.
    pub base: ReducedSystem,
    /// Band edge ħω₀, the center of both search boxes.
    pub edge_mev: f64,
    pub residual: Option<SpectralModel>,
}

impl BlockadeProblem {
    pub fn gamma_res(&self, wc_mev: f64) -> Result<f64> {
        match &self.residual {
            Some(s) => Ok(s.residual_rate(wc_mev)?.gamma_res_mev),
            None => Ok(0.0),
        }
    }

    /// The full system at (ω_c, ω_d).
    pub fn system(&self, wc_mev: f64, wd_mev: f64) -> Result<ReducedSystem> {
        Ok(ReducedSystem {
            gamma_res_mev: self.gamma_res(wc_mev)?,
            ..self.base.with_frequencies(wc_mev, wd_mev)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizationSpec {
    /// Half-width of both boxes around ħω₀ (meV).
    pub box_mev: f64,
    /// Points per axis of the coarse grid.
    pub grid: usize,
    pub n_starts: usize,
    /// Relative spread of g²(0) over the simplex at convergence.
    pub rel_tol: f64,
    pub max_evals_per_start: usize,
    /// Scale s of the ω_d axis ω_d = Ω₀ + s·sinh(u) (meV).
    pub wd_scale_mev: f64,
    pub steady: SteadyOptions,
}

impl Default for OptimizationSpec {
    fn default() -> Self {
        (&NumericsConfig::default()).into()
    }
}

impl From<&NumericsConfig> for OptimizationSpec {
    fn from(n: &NumericsConfig) -> Self {
        Self {
            box_mev: n.box_mev,
            grid: n.grid,
            n_starts: n.n_starts,
            rel_tol: n.g2_tol,
            max_evals_per_start: 300,
            wd_scale_mev: 1.0,
            steady: n.into(),
        }
    }
}

impl OptimizationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.box_mev > 0.0) {
            return Err(Error::validation("box_mev", format!("must be > 0, got {}", self.box_mev)));
        }
        if self.grid < 3 {
            return Err(Error::validation("grid", "need at least 3 points per axis"));
        }
        if self.n_starts == 0 {
            return Err(Error::validation("n_starts", "need at least one start"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::validation("g2_tol", "must be > 0"));
        }
        if !(self.wd_scale_mev > 0.0) {
            return Err(Error::validation("wd_scale_mev", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Optimum {
    pub g2_min: f64,
    pub wc_mev: f64,
    pub wd_mev: f64,
    /// ħ(ω_c − ω₀)
    pub wc_detuning_mev: f64,
    /// ħ(ω_d − ω₀)
    pub wd_detuning_mev: f64,
    pub n_cav: f64,
    pub n_exc: f64,
    pub gamma_res_mev: f64,
    pub coarse_min: f64,
    pub evaluations: usize,
    pub nc: usize,
    pub nx: usize,
    pub truncation_converged: bool,
    pub residual: f64,
}

struct Objective<'a> {
    problem: &'a BlockadeProblem,
    family: DetuningFamily,
    omega0: f64,
    lo: [f64; 2],
    hi: [f64; 2],
    scale: f64,
    box_mev: f64,
    tol: f64,
}

impl Objective<'_> {
    fn frequencies(&self, p: [f64; 2]) -> (f64, f64) {
        let e = self.problem.edge_mev;
        let wd = (self.omega0 + self.scale * p[1].sinh()).clamp(e - self.box_mev, e + self.box_mev);
        (e + p[0], wd)
    }

    fn clamp(&self, p: [f64; 2]) -> [f64; 2] {
        [p[0].clamp(self.lo[0], self.hi[0]), p[1].clamp(self.lo[1], self.hi[1])]
    }

    /// g²(0), or +∞ where the cavity is empty.
    fn eval(&self, p: [f64; 2]) -> Result<f64> {
        let (wc, wd) = self.frequencies(p);
        match self.family.g2(wc, wd, self.problem.gamma_res(wc)?, self.tol) {
            Ok((g, _)) => Ok(g),
            Err(Error::UndefinedCorrelation(_)) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    }
}

struct Simplex {
    best: [f64; 2],
    value: f64,
    evals: usize,
}

/// Nelder-Mead in 2D with every trial point clamped to the box.
fn nelder_mead(obj: &Objective, start: [f64; 2], f0: f64, step: [f64; 2], spec: &OptimizationSpec) -> Result<Simplex> {
    let evals = std::cell::Cell::new(0);
    let f = |p: [f64; 2]| -> Result<f64> {
        evals.set(evals.get() + 1);
        obj.eval(p)
    };
    let lerp = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    let mut pts = vec![(start, f0)];
    for k in 0..2 {
        let mut p = start;
        p[k] += step[k];
        if obj.clamp(p) == start {
            p[k] = start[k] - step[k];
        }
        let p = obj.clamp(p);
        pts.push((p, f(p)?));
    }
    let size_tol = 0.02;
    loop {
        pts.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (fb, fw) = (pts[0].1, pts[2].1);
        let spread_ok = fw - fb <= spec.rel_tol * fb.abs();
        let size = pts[1..]
            .iter()
            .map(|(p, _)| ((p[0] - pts[0].0[0]) / step[0]).abs().max(((p[1] - pts[0].0[1]) / step[1]).abs()))
            .fold(0.0, f64::max);
        if (spread_ok && size < size_tol) || size < 1e-6 || evals.get() >= spec.max_evals_per_start {
            break;
        }
        let c = lerp(pts[0].0, pts[1].0, 0.5);
        let xw = pts[2].0;
        let xr = obj.clamp(lerp(c, xw, -1.0));
        let fr = f(xr)?;
        if fr < fb {
            let xe = obj.clamp(lerp(c, xw, -2.0));
            let fe = f(xe)?;
            pts[2] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < pts[1].1 {
            pts[2] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < fw {
            let xc = obj.clamp(lerp(c, xr, 0.5));
            (xc, f(xc)?)
        } else {
            let xc = lerp(c, xw, 0.5);
            (xc, f(xc)?)
        };
        if fc < fr.min(fw) {
            pts[2] = (xc, fc);
            continue;
        }
        let b = pts[0].0;
        for pt in &mut pts[1..] {
            let p = lerp(b, pt.0, 0.5);
            *pt = (p, f(p)?);
        }
    }
    pts.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(Simplex { best: pts[0].0, value: pts[0].1, evals: evals.get() })
}

/// Coarse-grid indices to refine: grid-local minima in order of value, then
/// the best remaining cells.
fn seeds(values: &[f64], n: usize, count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).filter(|&k| values[k].is_finite()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let is_local_min = |k: usize| {
        let (i, j) = ((k / n) as isize, (k % n) as isize);
        (-1..=1).all(|di| {
            (-1..=1).all(|dj| {
                let (a, b) = (i + di, j + dj);
                if a < 0 || b < 0 || a >= n as isize || b >= n as isize {
                    return true;
                }
                values[k] <= values[(a as usize) * n + b as usize]
            })
        })
    };
    let mut out: Vec<usize> = order.iter().copied().filter(|&k| is_local_min(k)).take(count).collect();
    for k in order {
        if out.len() >= count {
            break;
        }
        if !out.contains(&k) {
            out.push(k);
        }
    }
    out
}

/// Minimizes the steady-state g²(0) over ω_c and ω_d. Deterministic for a
/// given problem and spec.
pub fn optimize_g2(problem: &BlockadeProblem, spec: &OptimizationSpec) -> Result<Optimum> {
    spec.validate()?;
    let fock = FockSpace::new(spec.steady.nc, spec.steady.nx);
    let family = DetuningFamily::new(&problem.base, fock, spec.steady.max_dim)?;
    let omega0 = problem.base.omega0_mev;
    let e = problem.edge_mev;
    let b = spec.box_mev;
    let s = spec.wd_scale_mev;
    let lo = [-b, ((e - b - omega0) / s).asinh()];
    let hi = [b, ((e + b - omega0) / s).asinh()];
    if !(lo[1] < hi[1]) {
        return Err(Error::Domain("reaction-coordinate energy lies outside the drive search box".into()));
    }
    let obj = Objective {
        problem,
        family,
        omega0,
        lo,
        hi,
        scale: s,
        box_mev: b,
        tol: spec.steady.tol,
    };
    let n = spec.grid;
    let step = [(hi[0] - lo[0]) / (n - 1) as f64, (hi[1] - lo[1]) / (n - 1) as f64];
    let point = |k: usize| [lo[0] + (k / n) as f64 * step[0], lo[1] + (k % n) as f64 * step[1]];
    let values: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|k| obj.eval(point(k)))
        .collect::<Result<_>>()?;
    let starts = seeds(&values, n, spec.n_starts);
    let Some(&first) = starts.first() else {
        return Err(Error::Domain("g2(0) is undefined at every grid point".into()));
    };
    let coarse_min = values[first];
    let runs: Vec<Simplex> = starts
        .par_iter()
        .map(|&k| nelder_mead(&obj, point(k), values[k], step, spec))
        .collect::<Result<_>>()?;
    let mut evaluations = n * n;
    let mut best = Simplex { best: point(first), value: coarse_min, evals: 0 };
    for r in runs {
        evaluations += r.evals;
        if r.value < best.value {
            best = r;
        }
    }
    let (wc, wd) = obj.frequencies(best.best);
    let sys = problem.system(wc, wd)?;
    let check = correlation(&solve_steady(&sys, &spec.steady)?)?;
    if (check.nc, check.nx) != (fock.nc, fock.nx) {
        log::warn!(
            "optimum needed truncation ({}, {}); g2 there is {:.6} vs {:.6} at the search truncation",
            check.nc,
            check.nx,
            check.g2_zero,
            best.value
        );
    }
    Ok(Optimum {
        g2_min: best.value,
        wc_mev: wc,
        wd_mev: wd,
        wc_detuning_mev: wc - e,
        wd_detuning_mev: wd - e,
        n_cav: check.n_cavity,
        n_exc: check.n_exciton,
        gamma_res_mev: sys.gamma_res_mev,
        coarse_min,
        evaluations,
        nc: check.nc,
        nx: check.nx,
        truncation_converged: check.truncation_converged,
        residual: check.residual,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub l_nm: f64,
    pub g0_mev: f64,
    pub w0p_mev: f64,
    /// ħΓ_res at ω_c = Ω₀
    pub gamma_res_mev: f64,
    pub xi_mev: f64,
    pub gamma_xp_mev: f64,
    pub optimum: Optimum,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub t_kelvin: f64,
    pub calibration: Option<DephasingCalibration>,
    pub records: Vec<SweepRecord>,
}

impl SweepResult {
    /// Largest L below which every swept L has g²_min < 1.
    pub fn blockade_onset_nm(&self) -> Option<f64> {
        self.records
            .iter()
            .take_while(|r| r.optimum.g2_min < 1.0)
            .last()
            .map(|r| r.l_nm)
    }

    /// Largest swept L with ħW₀′ > ħγ_x′.
    pub fn kerr_crossover_nm(&self) -> Option<f64> {
        self.records.iter().rev().find(|r| r.w0p_mev > r.gamma_xp_mev).map(|r| r.l_nm)
    }
}

fn check_ascending(l_values: &[f64]) -> Result<()> {
    if l_values.is_empty() {
        return Err(Error::validation("L_nm", "need at least one L value"));
    }
    if l_values.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
        return Err(Error::validation("L_nm", "L values must be finite and > 0"));
    }
    if l_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation("L_nm", "L values must be strictly ascending"));
    }
    Ok(())
}

/// Optimal g²(0) for each L of an ascending list.
pub fn sweep_l(template: &SystemTemplate, l_values: &[f64], spec: &OptimizationSpec) -> Result<SweepResult> {
    check_ascending(l_values)?;
    let mut records = Vec::with_capacity(l_values.len());
    for &l in l_values {
        let p = template.with_l(l)?.point()?;
        let optimum = optimize_g2(&p.problem(), spec)?;
        log::info!("L = {l} nm: g2_min = {:.6}", optimum.g2_min);
        records.push(SweepRecord {
            l_nm: l,
            g0_mev: p.g0_mev,
            w0p_mev: p.w0p_mev,
            gamma_res_mev: p.gamma_res_resonant_mev,
            xi_mev: p.coupling.xi_mev,
            gamma_xp_mev: p.gamma_xp_mev,
            optimum,
        });
    }
    Ok(SweepResult { t_kelvin: template.t_kelvin, calibration: template.calibration, records })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    ResidualDominated,
    BlockadeWindow,
    Linear,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::ResidualDominated => "residual_dominated",
            Regime::BlockadeWindow => "blockade_window",
            Regime::Linear => "linear",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeRow {
    pub l_nm: f64,
    pub g0_mev: f64,
    pub w0p_mev: f64,
    /// ħΓ_res at ω_c = Ω₀
    pub gamma_res_mev: f64,
    pub gamma_xp_mev: f64,
    pub xi_mev: f64,
    pub regime: Regime,
}

/// ħG₀, ħW₀′, ħΓ_res and ħγ_x′ versus L. Γ_res counts as non-negligible
/// above `residual_fraction`·G₀.
pub fn regime_map(template: &SystemTemplate, l_values: &[f64], residual_fraction: f64) -> Result<Vec<RegimeRow>> {
    check_ascending(l_values)?;
    if !(residual_fraction > 0.0) {
        return Err(Error::validation("residual_fraction", "must be > 0"));
    }
    l_values
        .iter()
        .map(|&l| {
            let p = template.with_l(l)?.point()?;
            let regime = if p.gamma_res_resonant_mev > residual_fraction * p.g0_mev {
                Regime::ResidualDominated
            } else if p.w0p_mev > p.gamma_xp_mev {
                Regime::BlockadeWindow
            } else {
                Regime::Linear
            };
            Ok(RegimeRow {
                l_nm: l,
                g0_mev: p.g0_mev,
                w0p_mev: p.w0p_mev,
                gamma_res_mev: p.gamma_res_resonant_mev,
                gamma_xp_mev: p.gamma_xp_mev,
                xi_mev: p.coupling.xi_mev,
                regime,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GaussianProfile;

    fn template(t_kelvin: f64, l_nm: f64) -> SystemTemplate {
        SystemTemplate {
            material: MaterialParams::ws2_defaults(),
            profile: Profile::Gaussian(GaussianProfile::new(l_nm, 50.0, 0.75, 1.0).unwrap()),
            gamma_c_mev: 25.0,
            f_mev: 1.5,
            t_kelvin,
            wc: FrequencySetting::Optimize,
            g0_override_mev: Some(57.5),
            include_residual: true,
            backend: SpectralBackendKind::Analytic,
            x_max: 20.0,
            n_x: 400,
            calibration: None,
        }
    }

    fn small_spec() -> OptimizationSpec {
        OptimizationSpec { grid: 15, n_starts: 3, ..OptimizationSpec::default() }
    }

    #[test]
    fn linear_system_has_no_antibunching() {
        let mut prob = template(300.0, 8.0).point().unwrap().problem();
        prob.base.w0p_mev = 0.0;
        prob.base.gamma_xp_mev = 0.0;
        let opt = optimize_g2(&prob, &small_spec()).unwrap();
        assert!((opt.g2_min - 1.0).abs() < 1e-3, "{}", opt.g2_min);
    }

    #[test]
    fn refinement_never_worsens_and_is_deterministic() {
        let prob = template(300.0, 6.0).point().unwrap().problem();
        let spec = small_spec();
        let a = optimize_g2(&prob, &spec).unwrap();
        let b = optimize_g2(&prob, &spec).unwrap();
        assert!(a.g2_min <= a.coarse_min);
        assert!(a.g2_min < 1.0);
        assert_eq!(a.g2_min.to_bits(), b.g2_min.to_bits());
        assert_eq!(a.wc_mev.to_bits(), b.wc_mev.to_bits());
        assert_eq!(a.wd_mev.to_bits(), b.wd_mev.to_bits());
    }

    #[test]
    fn only_detunings_matter() {
        let prob = template(300.0, 6.0).point().unwrap().problem();
        let spec = OptimizationSpec { grid: 9, n_starts: 2, ..OptimizationSpec::default() };
        let a = optimize_g2(&prob, &spec).unwrap();
        let shift = 37.0;
        let mut moved = prob.clone();
        moved.edge_mev += shift;
        moved.base.omega0_mev += shift;
        let s = prob.residual.as_ref().unwrap();
        moved.residual = Some(SpectralModel::gaussian(s.omega0_mev + shift, s.xi_mev, s.g0_mev).unwrap());
        let b = optimize_g2(&moved, &spec).unwrap();
        assert!((a.g2_min - b.g2_min).abs() < 1e-10, "{} vs {}", a.g2_min, b.g2_min);
    }

    #[test]
    fn more_dephasing_means_less_antibunching() {
        let prob = template(300.0, 6.0).point().unwrap().problem();
        let spec = small_spec();
        let mut last = 0.0;
        for gxp in [1.0, 4.0, 8.0] {
            let mut p = prob.clone();
            p.base.gamma_xp_mev = gxp;
            let g = optimize_g2(&p, &spec).unwrap().g2_min;
            assert!(g > last, "gamma_x' = {gxp}: {g} <= {last}");
            last = g;
        }
    }

    #[test]
    fn regime_map_columns() {
        let t = template(300.0, 6.0);
        let ls = [2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 14.0];
        let rows = regime_map(&t, &ls, 0.05).unwrap();
        for w in rows.windows(2) {
            assert_eq!(w[0].g0_mev, w[1].g0_mev);
            assert!(w[0].w0p_mev > w[1].w0p_mev);
            assert!(w[0].gamma_res_mev > w[1].gamma_res_mev);
            let r = (w[0].w0p_mev / w[1].w0p_mev) / (w[1].l_nm / w[0].l_nm).powi(2);
            assert!((r - 1.0).abs() < 1e-12);
        }
        assert_eq!(rows[0].regime, Regime::ResidualDominated);
        assert_eq!(rows.last().unwrap().regime, Regime::Linear);
        assert!(rows.iter().any(|r| r.regime == Regime::BlockadeWindow));
    }

    #[test]
    fn calibration_pins_crossover() {
        let mut t = template(300.0, 6.0);
        let c = t.calibrate_dephasing(9.0).unwrap();
        let p = t.with_l(9.0).unwrap().point().unwrap();
        assert!((p.gamma_xp_mev - c.target_mev).abs() < 1e-12);
        assert!((p.w0p_mev - p.gamma_xp_mev).abs() < 1e-12);
    }

    #[test]
    fn sweep_rejects_unsorted_lengths() {
        let t = template(300.0, 6.0);
        assert!(matches!(sweep_l(&t, &[6.0, 5.0], &small_spec()), Err(Error::Validation { .. })));
        assert!(matches!(regime_map(&t, &[-1.0], 0.05), Err(Error::Validation { .. })));
    }
}
