//! Linear dynamics of one resonator excitation.
//!
//! The exact amplitude obeys dφ_c/dt = −∫₀ᵗK(t−t′)φ_c(t′)dt′ − γ_cφ_c in the
//! frame rotating at ω_c. It is integrated with the implicit trapezoid rule
//! and a trapezoidal memory sum, which is linear in the new value and is
//! therefore solved exactly at each step. Two reduced models integrate the
//! cavity + reaction-coordinate amplitudes with and without the Markovian
//! residual decay.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::SpectralModel;
use crate::units::HBAR_MEV_PS;

/// Fraction of the fastest time scale allowed per step.
pub const STEP_FRACTION: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct LinearDynamicsProblem {
    pub spectral: SpectralModel,
    pub wc_mev: f64,
    /// Amplitude decay rate ħγ_c.
    pub gamma_c_mev: f64,
    pub t_max_ps: f64,
    /// Requested step; defaults to the largest admissible one.
    pub h_ps: Option<f64>,
}

impl LinearDynamicsProblem {
    pub fn new(spectral: SpectralModel, wc_mev: f64, gamma_c_mev: f64, t_max_ps: f64) -> Self {
        Self {
            spectral,
            wc_mev,
            gamma_c_mev,
            t_max_ps,
            h_ps: None,
        }
    }

    /// h_max = 0.05/max(G₀, ξ, γ_c) in ps.
    pub fn step_limit_ps(&self) -> f64 {
        let fastest = self
            .spectral
            .g0_mev
            .max(self.spectral.xi_mev)
            .max(self.gamma_c_mev)
            / HBAR_MEV_PS;
        if fastest > 0.0 {
            STEP_FRACTION / fastest
        } else {
            f64::INFINITY
        }
    }

    /// Step actually used: the requested or maximal step, shrunk to divide t_max.
    pub fn step_ps(&self) -> Result<f64> {
        if !(self.t_max_ps > 0.0) {
            return Err(Error::validation("t_max_ps", format!("must be > 0, got {}", self.t_max_ps)));
        }
        if !(self.gamma_c_mev >= 0.0) {
            return Err(Error::validation("gamma_c_mev", "must be >= 0"));
        }
        let limit = self.step_limit_ps();
        let h = match self.h_ps {
            Some(h) if h > limit * (1.0 + 1e-12) => {
                return Err(Error::validation(
                    "h_ps",
                    format!("step {h} ps exceeds 0.05/max(G0, xi, gamma_c) = {limit} ps"),
                ))
            }
            Some(h) if h > 0.0 => h,
            Some(h) => return Err(Error::validation("h_ps", format!("must be > 0, got {h}"))),
            None => limit.min(self.t_max_ps / 10.0),
        };
        let n = (self.t_max_ps / h - 1e-9).ceil().max(1.0);
        Ok(self.t_max_ps / n)
    }

    fn n_steps(&self, h: f64) -> usize {
        (self.t_max_ps / h).round() as usize
    }
}

/// Sampled |φ_c(t)|².
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub t_ps: Vec<f64>,
    pub population: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VolterraSolution {
    pub trajectory: Trajectory,
    #[serde(skip)]
    pub amplitude: Vec<Complex64>,
    /// Estimated max error of φ_c on the grid.
    pub error_estimate: f64,
    /// log₂ of the ratio of successive step-halving differences.
    pub observed_order: f64,
}

/// Integrates the Volterra equation with step `h` from 0 to `n·h`.
pub fn volterra_fixed_step(
    spectral: &SpectralModel,
    wc_mev: f64,
    gamma_c_mev: f64,
    h: f64,
    n: usize,
) -> Result<Vec<Complex64>> {
    let gamma = gamma_c_mev / HBAR_MEV_PS;
    let kernel = (0..=n)
        .map(|j| spectral.memory_kernel(wc_mev, j as f64 * h))
        .collect::<Result<Vec<_>>>()?;
    let mut phi = Vec::with_capacity(n + 1);
    phi.push(Complex64::new(1.0, 0.0));
    let denom = 1.0 + 0.5 * h * (gamma + 0.5 * h * kernel[0]);
    let mut f_n = -gamma * phi[0];
    for step in 0..n {
        let m = step + 1;
        // memory sum up to t_m without the (unknown) endpoint term
        let mut s = 0.5 * kernel[m] * phi[0];
        for j in 1..m {
            s += kernel[m - j] * phi[j];
        }
        s *= h;
        let next = (phi[step] + 0.5 * h * (f_n - s)) / denom;
        if !next.is_finite() {
            return Err(Error::NumericalInstability(format!("non-finite amplitude at step {m}")));
        }
        phi.push(next);
        f_n = -(s + 0.5 * h * kernel[0] * next) - gamma * next;
    }
    Ok(phi)
}

/// Exact Volterra solution on the grid of step h.
///
/// The scheme is run at h, h/2 and h/4. The returned amplitude is the
/// Richardson combination (4φ_{h/4} − φ_{h/2})/3; the error estimate is the
/// h/4 step-halving difference divided by 3, an upper bound for it.
pub fn solve_volterra(p: &LinearDynamicsProblem) -> Result<VolterraSolution> {
    let h = p.step_ps()?;
    let n = p.n_steps(h);
    let a = volterra_fixed_step(&p.spectral, p.wc_mev, p.gamma_c_mev, h, n)?;
    let b = volterra_fixed_step(&p.spectral, p.wc_mev, p.gamma_c_mev, h / 2.0, 2 * n)?;
    let c = volterra_fixed_step(&p.spectral, p.wc_mev, p.gamma_c_mev, h / 4.0, 4 * n)?;
    let e1 = (0..=n).map(|i| (a[i] - b[2 * i]).norm()).fold(0.0, f64::max);
    let e2 = (0..=n).map(|i| (b[2 * i] - c[4 * i]).norm()).fold(0.0, f64::max);
    let observed_order = (e1 / e2).log2();
    if e2 > 1e-12 && e1 / e2 < 2.0 {
        return Err(Error::NumericalInstability(format!(
            "step halving does not converge at second order (ratio {:.3})",
            e1 / e2
        )));
    }
    let amplitude: Vec<Complex64> = (0..=n).map(|i| (4.0 * c[4 * i] - b[2 * i]) / 3.0).collect();
    let trajectory = Trajectory {
        t_ps: (0..=n).map(|i| i as f64 * h).collect(),
        population: amplitude.iter().map(|z| z.norm_sqr()).collect(),
    };
    Ok(VolterraSolution {
        trajectory,
        amplitude,
        error_estimate: e2 / 3.0,
        observed_order,
    })
}

/// e^{At} for a complex 2×2 matrix.
fn expm2(a: [[Complex64; 2]; 2], t: f64) -> [[Complex64; 2]; 2] {
    let mu = 0.5 * (a[0][0] + a[1][1]);
    let half = 0.5 * (a[0][0] - a[1][1]);
    let s = (half * half + a[0][1] * a[1][0]).sqrt();
    let scale = mu.norm() + s.norm() + 1.0;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let am = [[a[0][0] - mu, a[0][1]], [a[1][0], a[1][1] - mu]];
    if s.norm() < 1e-10 * scale {
        let e = (mu * t).exp();
        return [
            [e * (one + t * am[0][0]), e * t * am[0][1]],
            [e * t * am[1][0], e * (one + t * am[1][1])],
        ];
    }
    // spectral projectors; both exponentials have non-positive real part here
    let (l1, l2) = (mu + s, mu - s);
    let (e1, e2) = ((l1 * t).exp(), (l2 * t).exp());
    let mut out = [[zero; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let id = if i == j { one } else { zero };
            let p1 = (a[i][j] - l2 * id) / (l1 - l2);
            let p2 = (a[i][j] - l1 * id) / (l2 - l1);
            out[i][j] = e1 * p1 + e2 * p2;
        }
    }
    out
}

/// |φ_c(t)|² of the cavity + reaction-coordinate amplitudes, frame at ω_c.
pub fn reduced_population(
    g0_mev: f64,
    detuning_b_mev: f64,
    gamma_c_mev: f64,
    gamma_res_mev: f64,
    t_ps: &[f64],
) -> Vec<f64> {
    let i = Complex64::i();
    let g = g0_mev / HBAR_MEV_PS;
    let a = [
        [Complex64::new(-gamma_c_mev / HBAR_MEV_PS, 0.0), -i * g],
        [
            -i * g,
            -i * detuning_b_mev / HBAR_MEV_PS - 0.5 * gamma_res_mev / HBAR_MEV_PS,
        ],
    ];
    t_ps.iter().map(|&t| expm2(a, t)[0][0].norm_sqr()).collect()
}

/// Two-mode model, optionally with the residual decay Γ_res at ω_c.
pub fn solve_reduced(p: &LinearDynamicsProblem, include_residual: bool) -> Result<Trajectory> {
    let h = p.step_ps()?;
    let n = p.n_steps(h);
    let t: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let gres = if include_residual {
        p.spectral.residual_rate(p.wc_mev)?.gamma_res_mev
    } else {
        0.0
    };
    let population = reduced_population(
        p.spectral.g0_mev,
        p.spectral.big_omega0_mev - p.wc_mev,
        p.gamma_c_mev,
        gres,
        &t,
    );
    Ok(Trajectory { t_ps: t, population })
}

/// L2 distance on [0, T] divided by √T (trapezoid rule on a uniform grid).
/// For populations this is the rms difference in units of one excitation.
pub fn rms_distance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let sq: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).collect();
    let inner: f64 = sq[1..n - 1].iter().sum();
    ((inner + 0.5 * (sq[0] + sq[n - 1])) / (n - 1) as f64).sqrt()
}

/// ‖a − b‖₂/‖reference‖₂ on a common uniform grid.
pub fn relative_l2(a: &[f64], b: &[f64], reference: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = reference.iter().map(|x| x * x).sum();
    (num / den).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelDistances {
    pub exact_markov: f64,
    pub exact_ignored: f64,
    pub markov_ignored: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearDynamicsResult {
    pub t_ps: Vec<f64>,
    pub exact: Vec<f64>,
    pub markov: Vec<f64>,
    pub ignored: Vec<f64>,
    /// rms distances over the window
    pub distances: ModelDistances,
    /// distances relative to the norm of the exact curve
    pub relative: ModelDistances,
    pub gamma_res_mev: f64,
    pub error_estimate: f64,
}

/// Runs all three models on the same grid and reports relative L2 distances.
pub fn compare_models(p: &LinearDynamicsProblem) -> Result<LinearDynamicsResult> {
    let exact = solve_volterra(p)?;
    let markov = solve_reduced(p, true)?;
    let ignored = solve_reduced(p, false)?;
    let ex = &exact.trajectory.population;
    let distances = ModelDistances {
        exact_markov: rms_distance(ex, &markov.population),
        exact_ignored: rms_distance(ex, &ignored.population),
        markov_ignored: rms_distance(&markov.population, &ignored.population),
    };
    let relative = ModelDistances {
        exact_markov: relative_l2(ex, &markov.population, ex),
        exact_ignored: relative_l2(ex, &ignored.population, ex),
        markov_ignored: relative_l2(&markov.population, &ignored.population, ex),
    };
    Ok(LinearDynamicsResult {
        t_ps: exact.trajectory.t_ps.clone(),
        exact: ex.clone(),
        markov: markov.population,
        ignored: ignored.population,
        distances,
        relative,
        gamma_res_mev: p.spectral.residual_rate(p.wc_mev)?.gamma_res_mev,
        error_estimate: exact.error_estimate,
    })
}
