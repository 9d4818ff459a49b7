//! Exciton spectral densities seen by the resonator.
//!
//! All densities are energy densities: `J(E)` is in meV with
//! ∫J dE = (ħG₀)², Φ and J_res are in meV, and ħΓ_res = 2π·J_res(ħω₊).
//! The memory kernel is returned in ps⁻².
//!
//! Two backends share one interface. The analytic one is the Gaussian
//! profile in closed form, J = J₀e^{−x}Θ(x) with x = (E − ħω₀)/ħξ. The
//! numeric one holds J on a uniform energy grid starting at the band edge,
//! interpolated by a monotone cubic (in log J when all samples are
//! positive), and evaluates the principal-value transform by singularity
//! subtraction.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{coupling_prefactor, kinetic_mev_nm2, TabulatedProfile};
use crate::materials::MaterialParams;
use crate::quad::GaussRule;
use crate::special::ei_scaled;
use crate::units::HBAR_MEV_PS;

const NODES_PER_CELL: usize = 8;
/// Relative level below which the spectrum beyond the grid end is treated as zero.
const TAIL_RELATIVE: f64 = 1e-12;

/// ħω₊ = [ħω_c + ħΩ₀ + √(4(ħG₀)² + (ħω_c − ħΩ₀)²)]/2.
pub fn upper_polariton(wc_mev: f64, big_omega0_mev: f64, g0_mev: f64) -> f64 {
    let d = wc_mev - big_omega0_mev;
    0.5 * (wc_mev + big_omega0_mev + (4.0 * g0_mev * g0_mev + d * d).sqrt())
}

/// Monotone piecewise-cubic Hermite interpolant on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Pchip {
    x0: f64,
    h: f64,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    fn new(x0: f64, h: f64, y: Vec<f64>) -> Self {
        let n = y.len();
        let delta: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        let mut d = vec![0.0; n];
        for k in 1..n - 1 {
            let (a, b) = (delta[k - 1], delta[k]);
            d[k] = if a * b <= 0.0 { 0.0 } else { 2.0 / (1.0 / a + 1.0 / b) };
        }
        let end = |d0: f64, d1: f64| {
            let s = 0.5 * (3.0 * d0 - d1);
            if s * d0 <= 0.0 {
                0.0
            } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
                3.0 * d0
            } else {
                s
            }
        };
        if n >= 3 {
            d[0] = end(delta[0], delta[1]);
            d[n - 1] = end(delta[n - 2], delta[n - 3]);
        } else {
            d[0] = delta[0];
            d[1] = delta[0];
        }
        Self { x0, h, y, d }
    }

    fn x_end(&self) -> f64 {
        self.x0 + self.h * (self.y.len() - 1) as f64
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.y.len();
        let u = ((x - self.x0) / self.h).clamp(0.0, (n - 1) as f64);
        let k = (u.floor() as usize).min(n - 2);
        let t = u - k as f64;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.y[k]
            + (t3 - 2.0 * t2 + t) * self.h * self.d[k]
            + (-2.0 * t3 + 3.0 * t2) * self.y[k + 1]
            + (t3 - t2) * self.h * self.d[k + 1]
    }
}

/// J tabulated on a uniform energy grid starting at the band edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericSpectrum {
    interp: Pchip,
    log_space: bool,
    tail_negligible: bool,
}

impl NumericSpectrum {
    fn new(e0_mev: f64, de_mev: f64, j: Vec<f64>) -> Result<Self> {
        if j.len() < 3 {
            return Err(Error::validation("J", "need at least 3 spectral samples"));
        }
        if !(de_mev > 0.0) {
            return Err(Error::validation("J", "energy step must be > 0"));
        }
        if j.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::validation("J", "spectral samples must be finite and >= 0"));
        }
        let peak = j.iter().cloned().fold(0.0, f64::max);
        if peak == 0.0 {
            return Err(Error::Domain("spectral density is identically zero".into()));
        }
        let tail_negligible = *j.last().unwrap() <= TAIL_RELATIVE * peak;
        let log_space = j.iter().all(|v| *v > 0.0);
        let y = if log_space { j.iter().map(|v| v.ln()).collect() } else { j };
        Ok(Self {
            interp: Pchip::new(e0_mev, de_mev, y),
            log_space,
            tail_negligible,
        })
    }

    fn a(&self) -> f64 {
        self.interp.x0
    }

    fn b(&self) -> f64 {
        self.interp.x_end()
    }

    /// Interpolated J inside [a, b].
    fn inside(&self, e: f64) -> f64 {
        let v = self.interp.eval(e);
        if self.log_space {
            v.exp()
        } else {
            v.max(0.0)
        }
    }

    fn cells(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.interp.y.len();
        (0..n - 1).map(move |k| {
            let lo = self.interp.x0 + k as f64 * self.interp.h;
            (lo, lo + self.interp.h)
        })
    }

    pub fn grid_len(&self) -> usize {
        self.interp.y.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    AnalyticGaussian,
    Numeric(NumericSpectrum),
}

/// Spectral density of the exciton continuum coupled to one resonator mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralModel {
    pub backend: Backend,
    /// Band edge ħω₀.
    pub omega0_mev: f64,
    /// ħξ; for the numeric backend the J-weighted mean offset ħΩ₀ − ħω₀.
    pub xi_mev: f64,
    pub g0_mev: f64,
    /// ħΩ₀, the J-weighted mean energy.
    pub big_omega0_mev: f64,
}

/// Markovian decay of the reaction coordinate into the residual modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualRate {
    pub gamma_res_mev: f64,
    pub omega_plus_mev: f64,
    pub backend: &'static str,
}

impl SpectralModel {
    /// Closed-form Gaussian-profile model.
    pub fn gaussian(omega0_mev: f64, xi_mev: f64, g0_mev: f64) -> Result<Self> {
        if !(xi_mev > 0.0) || !xi_mev.is_finite() {
            return Err(Error::validation("xi", format!("cutoff must be > 0, got {xi_mev}")));
        }
        if !(g0_mev >= 0.0) {
            return Err(Error::validation("G0", format!("coupling must be >= 0, got {g0_mev}")));
        }
        Ok(Self {
            backend: Backend::AnalyticGaussian,
            omega0_mev,
            xi_mev,
            g0_mev,
            big_omega0_mev: omega0_mev + xi_mev,
        })
    }

    /// Numeric model from J samples (meV) on E = `e0_mev + i·de_mev`.
    /// ħG₀ and ħΩ₀ follow from the moments of the interpolant.
    pub fn from_samples(e0_mev: f64, de_mev: f64, j: Vec<f64>) -> Result<Self> {
        let spec = NumericSpectrum::new(e0_mev, de_mev, j)?;
        let rule = GaussRule::new(NODES_PER_CELL);
        let (mut m0, mut m1) = (0.0, 0.0);
        for (lo, hi) in spec.cells() {
            for (e, w) in rule.points(lo, hi) {
                let v = spec.inside(e);
                m0 += w * v;
                m1 += w * v * (e - e0_mev);
            }
        }
        let xi = m1 / m0;
        Ok(Self {
            backend: Backend::Numeric(spec),
            omega0_mev: e0_mev,
            xi_mev: xi,
            g0_mev: m0.sqrt(),
            big_omega0_mev: e0_mev + xi,
        })
    }

    /// Samples this model's J on `n` points over x ∈ [0, x_max] into a numeric model.
    pub fn tabulate(&self, x_max: f64, n: usize) -> Result<Self> {
        let de = x_max * self.xi_mev / (n - 1) as f64;
        let j = (0..n)
            .map(|i| self.j_exciton(self.omega0_mev + i as f64 * de))
            .collect::<Result<Vec<_>>>()?;
        Self::from_samples(self.omega0_mev, de, j)
    }

    /// Numeric model from a tabulated field profile:
    /// J(E) = Q/(8π²κ)·∮dθ |F̂(k_E, θ)|², k_E = √((E − ħω₀)/κ).
    pub fn from_profile(
        profile: &TabulatedProfile,
        material: &MaterialParams,
        wc_mev: f64,
        n_e: usize,
        n_theta: usize,
    ) -> Result<Self> {
        if n_e < 3 || n_theta < 4 {
            return Err(Error::validation("n_e", "need n_e >= 3 and n_theta >= 4"));
        }
        let kappa = kinetic_mev_nm2(material);
        let q = coupling_prefactor(material, wc_mev);
        let xi_eff = kappa * profile.mean_k2();
        let k_cap = 0.9 * profile.nyquist();
        let e_span = (40.0 * xi_eff).min(kappa * k_cap * k_cap);
        let de = e_span / (n_e - 1) as f64;
        let j: Vec<f64> = (0..n_e)
            .into_par_iter()
            .map(|i| {
                let k = (i as f64 * de / kappa).sqrt();
                let s: f64 = (0..n_theta)
                    .map(|m| {
                        let th = 2.0 * PI * m as f64 / n_theta as f64;
                        profile.fourier_unchecked(k * th.cos(), k * th.sin()).norm_sqr()
                    })
                    .sum();
                q / (8.0 * PI * PI * kappa) * s * 2.0 * PI / n_theta as f64
            })
            .collect();
        Self::from_samples(material.exciton_energy_mev, de, j)
    }

    /// Same shape with ∫J rescaled to (ħG₀)² = `g0_mev`².
    pub fn with_coupling(&self, g0_mev: f64) -> Result<Self> {
        if !(g0_mev >= 0.0) || !g0_mev.is_finite() {
            return Err(Error::validation("G0", format!("coupling must be >= 0, got {g0_mev}")));
        }
        let mut out = self.clone();
        out.g0_mev = g0_mev;
        if let Backend::Numeric(spec) = &mut out.backend {
            if g0_mev == 0.0 {
                return Err(Error::Domain("numeric spectral density cannot be scaled to zero".into()));
            }
            let scale = (g0_mev / self.g0_mev).powi(2);
            if spec.log_space {
                spec.interp.y.iter_mut().for_each(|y| *y += scale.ln());
            } else {
                spec.interp.y.iter_mut().for_each(|y| *y *= scale);
                spec.interp.d.iter_mut().for_each(|d| *d *= scale);
            }
        }
        Ok(out)
    }

    pub fn backend_name(&self) -> &'static str {
        match self.backend {
            Backend::AnalyticGaussian => "analytic",
            Backend::Numeric(_) => "numeric",
        }
    }

    /// J₀ = (ħG₀)²/ħξ (meV).
    pub fn j0(&self) -> f64 {
        self.g0_mev * self.g0_mev / self.xi_mev
    }

    /// ħΩ₀.
    pub fn mean_frequency(&self) -> f64 {
        self.big_omega0_mev
    }

    fn x_of(&self, e_mev: f64) -> f64 {
        (e_mev - self.omega0_mev) / self.xi_mev
    }

    /// J(E) in meV.
    pub fn j_exciton(&self, e_mev: f64) -> Result<f64> {
        if e_mev < self.omega0_mev {
            return Ok(0.0);
        }
        match &self.backend {
            Backend::AnalyticGaussian => Ok(self.j0() * (-self.x_of(e_mev)).exp()),
            Backend::Numeric(s) => {
                if e_mev <= s.b() {
                    Ok(s.inside(e_mev))
                } else if s.tail_negligible {
                    Ok(0.0)
                } else {
                    Err(Error::Extrapolation(format!(
                        "E = {e_mev} meV lies beyond the tabulated range ending at {} meV",
                        s.b()
                    )))
                }
            }
        }
    }

    /// Φ(E) = PV∫ J(z)/(E − z) dz (meV). Diverges to −∞ at the band edge.
    pub fn phi_transform(&self, e_mev: f64) -> Result<f64> {
        match &self.backend {
            Backend::AnalyticGaussian => {
                let x = self.x_of(e_mev);
                Ok(self.j0() * ei_scaled(x))
            }
            Backend::Numeric(s) => {
                if e_mev > s.b() && !s.tail_negligible {
                    return Err(Error::Extrapolation(format!(
                        "principal value at {e_mev} meV needs J beyond {} meV",
                        s.b()
                    )));
                }
                Ok(numeric_phi(s, e_mev))
            }
        }
    }

    /// J_res(E) = (ħG₀)²J/(Φ² + π²J²) (meV).
    pub fn j_residual(&self, e_mev: f64) -> Result<f64> {
        match &self.backend {
            Backend::AnalyticGaussian => {
                let x = self.x_of(e_mev);
                if x <= 0.0 {
                    return Ok(0.0);
                }
                // ξe^{x}/(Ei² + π²) with Ei = e^{x}·ei_scaled
                let s = ei_scaled(x);
                let ex = x.exp();
                let denom = s * s * ex + PI * PI / ex;
                Ok(if denom.is_finite() { self.xi_mev / denom } else { 0.0 })
            }
            Backend::Numeric(_) => {
                let j = self.j_exciton(e_mev)?;
                if j == 0.0 {
                    return Ok(0.0);
                }
                let phi = self.phi_transform(e_mev)?;
                Ok(self.g0_mev * self.g0_mev * j / (phi * phi + PI * PI * j * j))
            }
        }
    }

    /// ħΓ_res = 2π·J_res(ħω₊) at resonator energy `wc_mev`.
    pub fn residual_rate(&self, wc_mev: f64) -> Result<ResidualRate> {
        let wp = upper_polariton(wc_mev, self.big_omega0_mev, self.g0_mev);
        Ok(ResidualRate {
            gamma_res_mev: 2.0 * PI * self.j_residual(wp)?,
            omega_plus_mev: wp,
            backend: self.backend_name(),
        })
    }

    /// K(τ) = ∫J(ω)e^{−i(ω−ω_c)τ}dω in ps⁻², τ in ps.
    pub fn memory_kernel(&self, wc_mev: f64, tau_ps: f64) -> Result<Complex64> {
        if !(tau_ps >= 0.0) {
            return Err(Error::Domain(format!("kernel needs tau >= 0, got {tau_ps}")));
        }
        let g2 = (self.g0_mev / HBAR_MEV_PS).powi(2);
        match &self.backend {
            Backend::AnalyticGaussian => {
                let phase = -(self.omega0_mev - wc_mev) / HBAR_MEV_PS * tau_ps;
                let xi_t = self.xi_mev / HBAR_MEV_PS * tau_ps;
                Ok(g2 * Complex64::from_polar(1.0, phase) / Complex64::new(1.0, xi_t))
            }
            Backend::Numeric(s) => Ok(numeric_kernel(s, wc_mev, tau_ps) / (HBAR_MEV_PS * HBAR_MEV_PS)),
        }
    }

    /// ∫J dE (meV²), by quadrature of the backend's J.
    pub fn sum_rule(&self) -> f64 {
        match &self.backend {
            Backend::AnalyticGaussian => self.g0_mev * self.g0_mev,
            Backend::Numeric(s) => {
                let rule = GaussRule::new(NODES_PER_CELL);
                s.cells().map(|(lo, hi)| rule.integrate(lo, hi, |e| s.inside(e))).sum()
            }
        }
    }
}

/// Singularity-subtracted principal value over the grid [a, b]:
/// ∫(J(z) − c)/(E − z)dz + c·ln|(E − a)/(E − b)| with c = J(clamp(E)).
fn numeric_phi(s: &NumericSpectrum, e: f64) -> f64 {
    let (a, b) = (s.a(), s.b());
    let c = s.inside(e.clamp(a, b));
    let rule = GaussRule::new(NODES_PER_CELL);
    let q = |z: f64| {
        let d = e - z;
        if d == 0.0 {
            0.0
        } else {
            (s.inside(z) - c) / d
        }
    };
    let mut total = 0.0;
    for (lo, hi) in s.cells() {
        if e > lo && e < hi {
            total += rule.integrate(lo, e, q) + rule.integrate(e, hi, q);
        } else {
            total += rule.integrate(lo, hi, q);
        }
    }
    if c != 0.0 {
        total += c * ((e - a).abs() / (e - b).abs()).ln();
    }
    total
}

/// ∫_a^b J(E)e^{−i(E − E_c)τ/ħ}dE (meV²) with the oscillation resolved per cell.
fn numeric_kernel(s: &NumericSpectrum, wc_mev: f64, tau_ps: f64) -> Complex64 {
    let rule = GaussRule::new(NODES_PER_CELL);
    let rate = tau_ps / HBAR_MEV_PS;
    let mut total = Complex64::new(0.0, 0.0);
    for (lo, hi) in s.cells() {
        // ≤ 2 rad of phase per sub-cell keeps the 8-point rule at round-off
        let m = ((hi - lo) * rate / 2.0).ceil().max(1.0) as usize;
        let w = (hi - lo) / m as f64;
        for k in 0..m {
            let (l, r) = (lo + k as f64 * w, lo + (k + 1) as f64 * w);
            for (e, wt) in rule.points(l, r) {
                total += wt * s.inside(e) * Complex64::from_polar(1.0, -(e - wc_mev) * rate);
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::ei;

    fn model() -> SpectralModel {
        SpectralModel::gaussian(2020.0, 3.9, 22.0).unwrap()
    }

    #[test]
    fn rescaled_coupling_scales_j() {
        let a = SpectralModel::gaussian(2020.0, 2.0, 10.0).unwrap();
        let n = a.tabulate(40.0, 401).unwrap();
        for m in [a, n] {
            let s = m.with_coupling(20.0).unwrap();
            assert_eq!(s.g0_mev, 20.0);
            let e = 2023.0;
            let r = s.j_exciton(e).unwrap() / m.j_exciton(e).unwrap();
            assert!((r - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn j_at_edge_and_efold() {
        let m = model();
        assert!((m.j_exciton(2020.0).unwrap() - m.j0()).abs() < 1e-12 * m.j0());
        let e = m.j_exciton(2020.0 + 3.9).unwrap();
        assert!((e - m.j0() / std::f64::consts::E).abs() < 1e-12 * m.j0());
        assert_eq!(m.j_exciton(2019.0).unwrap(), 0.0);
    }

    #[test]
    fn phi_at_x_one() {
        let m = model();
        let phi = m.phi_transform(2020.0 + 3.9).unwrap();
        assert!((phi / m.j0() - 0.69717).abs() < 1e-5, "{}", phi / m.j0());
        // direct PV quadrature oracle: ∫₀^∞ e^{−u}/(1 − u) du
        let pv = {
            let n = 200_000;
            let h = 2.0 / n as f64;
            // symmetric pairs around u = 1 cancel the pole
            let mut s = 0.0;
            for i in 0..n / 2 {
                let d = (i as f64 + 0.5) * h;
                s += ((-(1.0 - d)).exp() - (-(1.0 + d)).exp()) / d * h;
            }
            let rule = GaussRule::new(20);
            let tail: f64 = (0..60)
                .map(|k| rule.integrate(2.0 + k as f64, 3.0 + k as f64, |u| (-u).exp() / (1.0 - u)))
                .sum();
            s + tail
        };
        assert!((phi / m.j0() - pv).abs() < 1e-8, "{pv}");
    }

    #[test]
    fn phi_large_frequency_moment() {
        let m = model();
        for dx in [200.0, 1000.0] {
            let e = 2020.0 + dx * 3.9;
            let phi = m.phi_transform(e).unwrap();
            let lead = 22.0 * 22.0 / (e - m.big_omega0_mev);
            // next moment is O(ξ²/(E−Ω₀)²)
            assert!(((phi - lead) / lead).abs() < 2.0 / (dx * dx), "{phi} {lead}");
        }
    }

    #[test]
    fn j_residual_closed_form() {
        let m = model();
        let x = 1.0;
        let v = m.j_residual(2020.0 + x * 3.9).unwrap();
        let e1 = ei(1.0);
        let expect = 3.9 * 1f64.exp() / (e1 * e1 + PI * PI);
        assert!((v - expect).abs() < 1e-12 * expect);
        assert!((v / 3.9 - 0.2019).abs() < 1e-4);
        // composed from J and Φ
        let j = m.j_exciton(2020.0 + 3.9).unwrap();
        let phi = m.phi_transform(2020.0 + 3.9).unwrap();
        let composed = 22.0 * 22.0 * j / (phi * phi + PI * PI * j * j);
        assert!((composed - v).abs() < 1e-12 * v);
        // vanishes at the edge like ξ/((ln x + γ)² + π²)
        let mut prev = v;
        for k in [2, 4, 8, 12] {
            let x = 10f64.powi(-k);
            let r = m.j_residual(2020.0 + 3.9 * x).unwrap();
            assert!(r < prev);
            let lg = x.ln() + crate::special::EULER_GAMMA;
            let approx = 3.9 / (lg * lg + PI * PI);
            assert!((r / approx - 1.0).abs() < 0.05, "x={x}: {r} vs {approx}");
            prev = r;
        }
        assert_eq!(m.j_residual(2000.0).unwrap(), 0.0);
        assert_eq!(m.j_residual(2020.0 + 3.9 * 2000.0).unwrap(), 0.0);
    }

    #[test]
    fn j_residual_scales_with_xi() {
        let a = SpectralModel::gaussian(2020.0, 2.0, 22.0).unwrap();
        let b = SpectralModel::gaussian(2020.0, 8.0, 22.0).unwrap();
        for x in [0.3, 1.0, 4.0] {
            let ra = a.j_residual(2020.0 + 2.0 * x).unwrap();
            let rb = b.j_residual(2020.0 + 8.0 * x).unwrap();
            assert!((rb / ra - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn upper_polariton_cases() {
        assert_eq!(upper_polariton(2030.0, 2020.0, 0.0), 2030.0);
        assert_eq!(upper_polariton(2020.0, 2020.0, 22.0), 2042.0);
        let wp = upper_polariton(2030.0, 2020.0, 22.0);
        // largest eigenvalue of [[ω_c, G], [G, Ω₀]] via the characteristic polynomial
        let (tr, det): (f64, f64) = (2030.0 + 2020.0, 2030.0 * 2020.0 - 22.0 * 22.0);
        let lam = 0.5 * (tr + (tr * tr - 4.0 * det).sqrt());
        assert!((wp - lam).abs() < 1e-9);
        assert!((wp - 2020.0 - 27.56).abs() < 5e-3);
        assert!(wp >= 2030.0);
    }

    #[test]
    fn residual_rate_decreases_with_l() {
        let m = MaterialParams::ws2_defaults();
        let rate = |l: f64| {
            let xi = crate::field::xi_mev(&m, l);
            let s = SpectralModel::gaussian(2020.0, xi, 22.0).unwrap();
            s.residual_rate(s.big_omega0_mev).unwrap().gamma_res_mev
        };
        let mut prev = f64::INFINITY;
        for l in [1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
            let g = rate(l);
            assert!(g < prev && g >= 0.0);
            prev = g;
        }
        assert!(rate(1e4) < 1e-30);
    }

    #[test]
    fn kernel_closed_form() {
        let m = model();
        let g2 = (22.0 / HBAR_MEV_PS).powi(2);
        assert!((m.memory_kernel(2025.0, 0.0).unwrap() - g2).norm() < 1e-10 * g2);
        let xi = 3.9 / HBAR_MEV_PS;
        for t in [0.01, 0.1, 1.0] {
            let k = m.memory_kernel(2025.0, t).unwrap();
            assert!((k.norm() - g2 / (1.0 + xi * xi * t * t).sqrt()).abs() < 1e-12 * g2);
        }
        let narrow = SpectralModel::gaussian(2020.0, 1e-9, 22.0).unwrap();
        let k = narrow.memory_kernel(2020.0, 0.5).unwrap();
        assert!((k - g2).norm() < 1e-6 * g2);
    }

    #[test]
    fn numeric_backend_matches_analytic() {
        let m = model();
        let n = m.tabulate(40.0, 801).unwrap();
        assert!((n.sum_rule() / m.sum_rule() - 1.0).abs() < 1e-10);
        assert!((n.big_omega0_mev - m.big_omega0_mev).abs() < 1e-8 * 3.9);
        let mut worst = 0.0f64;
        for i in 0..200 {
            let x = 0.05 * (20.0f64 / 0.05).powf(i as f64 / 199.0);
            let e = 2020.0 + x * 3.9;
            let a = m.j_residual(e).unwrap();
            let b = n.j_residual(e).unwrap();
            worst = worst.max(((a - b) / a).abs());
            let pa = m.phi_transform(e).unwrap();
            let pb = n.phi_transform(e).unwrap();
            assert!(((pa - pb) / pa).abs() < 1e-5, "x={x}: {pa} {pb}");
        }
        assert!(worst < 1e-5, "{worst}");
        for t in [0.0, 0.05, 0.3] {
            let ka = m.memory_kernel(2030.0, t).unwrap();
            let kb = n.memory_kernel(2030.0, t).unwrap();
            assert!((ka - kb).norm() < 1e-6 * ka.norm(), "{ka} {kb}");
        }
    }

    #[test]
    fn kramers_kronig_consistency() {
        // ∫₀^∞ K(τ)e^{i(ω−ω_c)τ}dτ = (πJ + iΦ)/ħ, evaluated by brute-force
        // quadrature with an e^{−ετ} regulator and Richardson extrapolation ε → 0.
        let m = SpectralModel::gaussian(2020.0, 5.0, 10.0).unwrap();
        let wc = 2020.0;
        let xi = 5.0 / HBAR_MEV_PS;
        let eps = [0.02 * xi, 0.01 * xi, 0.005 * xi];
        let rule = GaussRule::new(16);
        for x in [1.0, 2.0, 3.0, 5.0, 8.0] {
            let e = 2020.0 + 5.0 * x;
            let w = (e - wc) / HBAR_MEV_PS;
            let t_end = 40.0 / eps[2];
            let dt = 0.02;
            let n_cells = (t_end / dt).ceil() as usize;
            let mut acc = [Complex64::new(0.0, 0.0); 3];
            for c in 0..n_cells {
                let (lo, hi) = (c as f64 * dt, (c + 1) as f64 * dt);
                for (t, wt) in rule.points(lo, hi) {
                    let f = wt * m.memory_kernel(wc, t).unwrap() * Complex64::from_polar(1.0, w * t);
                    for (a, ep) in acc.iter_mut().zip(eps) {
                        *a += f * (-ep * t).exp();
                    }
                }
            }
            let r1 = 2.0 * acc[1] - acc[0];
            let r2 = 2.0 * acc[2] - acc[1];
            let lim = (4.0 * r2 - r1) / 3.0 * HBAR_MEV_PS;
            let j = m.j_exciton(e).unwrap();
            let phi = m.phi_transform(e).unwrap();
            assert!((lim.re - PI * j).abs() < 1e-4 * PI * j, "x={x}: {} vs {}", lim.re, PI * j);
            assert!((lim.im - phi).abs() < 1e-4 * phi.abs(), "x={x}: {} vs {phi}", lim.im);
        }
    }

    #[test]
    fn numeric_from_sampled_profile() {
        use crate::field::{xi_mev, GaussianProfile};
        let mat = MaterialParams::ws2_defaults();
        let g = GaussianProfile::new(3.0, 150.0, 0.5, 1.0).unwrap();
        let t = TabulatedProfile::sample_gaussian(&g, 0.2, 18.0).unwrap();
        let wc = 2025.0;
        let num = SpectralModel::from_profile(&t, &mat, wc, 401, 32).unwrap();
        let g0 = crate::field::upper_bound_g0(&mat, wc, 150.0).unwrap() * 0.5;
        let ana = SpectralModel::gaussian(mat.exciton_energy_mev, xi_mev(&mat, 3.0), g0).unwrap();
        for i in 0..=50 {
            let e = ana.omega0_mev + 5.0 * ana.xi_mev * i as f64 / 50.0;
            let a = ana.j_exciton(e).unwrap();
            let b = num.j_exciton(e).unwrap();
            assert!(((a - b) / a).abs() < 1e-3, "E={e}: {a} {b}");
        }
        assert!((num.g0_mev / g0 - 1.0).abs() < 1e-4);
        assert!((num.big_omega0_mev - ana.big_omega0_mev).abs() < 1e-4 * ana.xi_mev);
    }
}
