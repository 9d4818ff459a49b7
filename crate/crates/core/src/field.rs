//! Resonator field profiles on the 2D sheet and the coupling quantities
//! derived from them: g_k, G₀, its upper bound, Ω₀ and the Kerr shift W₀′.
//!
//! The quantization area S of the sheet never leaves this module. For a
//! tabulated profile it is fixed to the grid area when g_k is evaluated; it
//! cancels in every other exported quantity.
//!
//! Profiles are normalized so that ∫|F̃_c·p̂_cv|² d²r = ρ²/L_z, i.e. L_z
//! carries the field strength and ρ the polarization projection.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::MaterialParams;
use crate::units::{hbar2_over_2m0_mev_nm2, si, MEV_IN_J, MOMENTUM_UNIT_SI};

/// Separable Gaussian profile, F_∥(r) = e^{−r²/(2L²)}/√(πL²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianProfile {
    /// Lateral confinement L (nm).
    pub l_nm: f64,
    /// Out-of-plane confinement L_z (nm).
    pub lz_nm: f64,
    /// ρ = |n·p_cv|/|p_cv|.
    pub rho: f64,
    /// Polarization factor η_n ∈ [1/2, 1].
    pub eta_n: f64,
}

fn validate_common(lz_nm: f64, rho: f64, eta_n: f64) -> Result<()> {
    if !(lz_nm > 0.0) || !lz_nm.is_finite() {
        return Err(Error::validation("Lz", format!("L_z must be > 0, got {lz_nm}")));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::validation("rho", format!("projection ratio must lie in [0, 1], got {rho}")));
    }
    if !(0.5..=1.0).contains(&eta_n) {
        return Err(Error::validation("eta_n", format!("eta_n must lie in [1/2, 1], got {eta_n}")));
    }
    Ok(())
}

impl GaussianProfile {
    pub fn new(l_nm: f64, lz_nm: f64, rho: f64, eta_n: f64) -> Result<Self> {
        if !(l_nm > 0.0) || !l_nm.is_finite() {
            return Err(Error::validation("L", format!("lateral confinement L must be > 0, got {l_nm}")));
        }
        validate_common(lz_nm, rho, eta_n)?;
        Ok(Self { l_nm, lz_nm, rho, eta_n })
    }

    /// Builds the profile from a (complex) polarization vector and the
    /// direction of the Bloch momentum matrix element.
    pub fn from_polarization(
        l_nm: f64,
        lz_nm: f64,
        n: [Complex64; 3],
        pcv_dir: [f64; 3],
        eta_n: f64,
    ) -> Result<Self> {
        let n_norm = n.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let p_norm = pcv_dir.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n_norm == 0.0 || p_norm == 0.0 {
            return Err(Error::Domain("polarization and p_cv direction must be nonzero".into()));
        }
        let proj: Complex64 = n.iter().zip(pcv_dir).map(|(a, b)| a * b).sum();
        let rho = (proj.norm() / (n_norm * p_norm)).min(1.0);
        Self::new(l_nm, lz_nm, rho, eta_n)
    }

    /// In-plane amplitude F_∥(r).
    pub fn in_plane(&self, x: f64, y: f64) -> f64 {
        let l2 = self.l_nm * self.l_nm;
        (-(x * x + y * y) / (2.0 * l2)).exp() / (PI * l2).sqrt()
    }

    /// Same profile with a different lateral confinement.
    pub fn with_l(&self, l_nm: f64) -> Result<Self> {
        Self::new(l_nm, self.lz_nm, self.rho, self.eta_n)
    }
}

/// Complex in-plane samples of F̃_c·p̂_cv on a uniform square grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedProfile {
    nx: usize,
    ny: usize,
    x0: f64,
    y0: f64,
    h: f64,
    /// Row-major samples, index `j * nx + i` for (x_i, y_j).
    samples: Vec<Complex64>,
    pub lz_nm: f64,
    pub rho: f64,
    pub eta_n: f64,
    norm2: f64,
}

impl TabulatedProfile {
    /// Builds a profile from grid samples. Amplitudes are arbitrary up to
    /// scale; normalization follows from `lz_nm` and `rho`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        nx: usize,
        ny: usize,
        x0: f64,
        y0: f64,
        h: f64,
        samples: Vec<Complex64>,
        lz_nm: f64,
        rho: f64,
        eta_n: f64,
    ) -> Result<Self> {
        validate_common(lz_nm, rho, eta_n)?;
        if nx < 3 || ny < 3 {
            return Err(Error::validation("csv", "grid needs at least 3 points per axis"));
        }
        if samples.len() != nx * ny {
            return Err(Error::validation(
                "csv",
                format!("expected {} samples, got {}", nx * ny, samples.len()),
            ));
        }
        if !(h > 0.0) {
            return Err(Error::validation("csv", format!("grid spacing must be > 0, got {h}")));
        }
        let mut p = Self {
            nx,
            ny,
            x0,
            y0,
            h,
            samples,
            lz_nm,
            rho,
            eta_n,
            norm2: 0.0,
        };
        p.norm2 = p.trapz(|z| z.norm_sqr());
        if !(p.norm2 > 0.0) {
            return Err(Error::Domain("profile is identically zero".into()));
        }
        Ok(p)
    }

    /// Samples a Gaussian profile on a square grid of half-width `half_width_nm`.
    pub fn sample_gaussian(g: &GaussianProfile, h: f64, half_width_nm: f64) -> Result<Self> {
        let n = (2.0 * half_width_nm / h).round() as usize + 1;
        let x0 = -h * (n - 1) as f64 / 2.0;
        let mut samples = Vec::with_capacity(n * n);
        for j in 0..n {
            let y = x0 + j as f64 * h;
            for i in 0..n {
                let x = x0 + i as f64 * h;
                samples.push(Complex64::new(g.in_plane(x, y), 0.0));
            }
        }
        Self::new(n, n, x0, x0, h, samples, g.lz_nm, g.rho, g.eta_n)
    }

    /// Parses the `x_nm,y_nm,re,im` CSV format. Rows may appear in any
    /// order but must fill a uniform grid with equal x and y spacing.
    pub fn from_csv_str(text: &str, lz_nm: f64, rho: f64, eta_n: f64) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse { line: 1, msg: "empty profile file".into() })?;
        let cols: Vec<_> = header.split(',').map(str::trim).collect();
        if cols != ["x_nm", "y_nm", "re", "im"] {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header `x_nm,y_nm,re,im`, got `{header}`"),
            });
        }
        let mut rows = Vec::new();
        for (idx, line) in lines {
            let vals: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|s| s.trim().parse::<f64>()).collect();
            match vals {
                Ok(v) if v.len() == 4 => rows.push(v),
                _ => {
                    return Err(Error::Parse {
                        line: idx + 1,
                        msg: format!("expected four numbers, got `{line}`"),
                    })
                }
            }
        }
        let axis = |k: usize| {
            let mut v: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * (1.0 + b.abs()));
            v
        };
        let xs = axis(0);
        let ys = axis(1);
        if xs.len() < 3 || ys.len() < 3 {
            return Err(Error::validation("csv", "grid needs at least 3 points per axis"));
        }
        let h = xs[1] - xs[0];
        let uniform = |v: &[f64]| {
            v.windows(2)
                .all(|w| ((w[1] - w[0]) - h).abs() < 1e-6 * h)
        };
        if !uniform(&xs) || !uniform(&ys) {
            return Err(Error::validation("csv", "profile grid must be uniform with equal x/y spacing"));
        }
        let (nx, ny) = (xs.len(), ys.len());
        if rows.len() != nx * ny {
            return Err(Error::validation(
                "csv",
                format!("grid {nx}x{ny} needs {} rows, got {}", nx * ny, rows.len()),
            ));
        }
        let mut samples = vec![Complex64::new(f64::NAN, 0.0); nx * ny];
        for r in &rows {
            let i = ((r[0] - xs[0]) / h).round() as usize;
            let j = ((r[1] - ys[0]) / h).round() as usize;
            samples[j * nx + i] = Complex64::new(r[2], r[3]);
        }
        if samples.iter().any(|z| z.re.is_nan()) {
            return Err(Error::validation("csv", "duplicate or missing grid points"));
        }
        Self::new(nx, ny, xs[0], ys[0], h, samples, lz_nm, rho, eta_n)
    }

    pub fn load(path: impl AsRef<Path>, lz_nm: f64, rho: f64, eta_n: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        Self::from_csv_str(&text, lz_nm, rho, eta_n)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("x_nm,y_nm,re,im\n");
        for j in 0..self.ny {
            for i in 0..self.nx {
                let z = self.samples[j * self.nx + i];
                out.push_str(&format!("{:?},{:?},{:?},{:?}\n", self.x(i), self.y(j), z.re, z.im));
            }
        }
        out
    }

    pub fn spacing_nm(&self) -> f64 {
        self.h
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.h
    }

    /// Grid area, used as the quantization area S.
    pub fn area_nm2(&self) -> f64 {
        self.nx as f64 * self.ny as f64 * self.h * self.h
    }

    /// Multiplies every sample by a global phase.
    pub fn with_phase(&self, theta: f64) -> Self {
        let ph = Complex64::from_polar(1.0, theta);
        let mut p = self.clone();
        p.samples.iter_mut().for_each(|z| *z *= ph);
        p
    }

    /// Trapezoid rule over the grid.
    fn trapz(&self, f: impl Fn(Complex64) -> f64) -> f64 {
        let mut s = 0.0;
        for j in 0..self.ny {
            let wy = if j == 0 || j == self.ny - 1 { 0.5 } else { 1.0 };
            for i in 0..self.nx {
                let wx = if i == 0 || i == self.nx - 1 { 0.5 } else { 1.0 };
                s += wx * wy * f(self.samples[j * self.nx + i]);
            }
        }
        s * self.h * self.h
    }

    /// Factor turning raw samples into F̃_c·p̂_cv (units nm^{-3/2}).
    fn scale(&self) -> f64 {
        self.rho / (self.lz_nm * self.norm2).sqrt()
    }

    /// rms lateral extent √(⟨r²⟩ − |⟨r⟩|²) of |F|².
    pub fn rms_extent_nm(&self) -> f64 {
        let (mut w, mut sx, mut sy, mut sr2) = (0.0, 0.0, 0.0, 0.0);
        for j in 0..self.ny {
            for i in 0..self.nx {
                let p = self.samples[j * self.nx + i].norm_sqr();
                let (x, y) = (self.x(i), self.y(j));
                w += p;
                sx += p * x;
                sy += p * y;
                sr2 += p * (x * x + y * y);
            }
        }
        let (mx, my) = (sx / w, sy / w);
        (sr2 / w - mx * mx - my * my).max(0.0).sqrt()
    }

    /// Checks truncation (boundary amplitude below 1e-4 of peak) and
    /// sampling (h ≤ min(a_B, L_est)/8).
    pub fn validate_sampling(&self, bohr_radius_nm: f64) -> Result<()> {
        let peak = self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut edge: f64 = 0.0;
        for i in 0..self.nx {
            edge = edge
                .max(self.samples[i].norm())
                .max(self.samples[(self.ny - 1) * self.nx + i].norm());
        }
        for j in 0..self.ny {
            edge = edge
                .max(self.samples[j * self.nx].norm())
                .max(self.samples[j * self.nx + self.nx - 1].norm());
        }
        if edge >= 1e-4 * peak {
            return Err(Error::Sampling(format!(
                "boundary amplitude {:.3e} of peak exceeds 1e-4; enlarge the grid",
                edge / peak
            )));
        }
        let l_est = self.rms_extent_nm();
        let limit = bohr_radius_nm.min(l_est) / 8.0;
        if self.h > limit * (1.0 + 1e-9) {
            return Err(Error::Sampling(format!(
                "grid spacing {} nm exceeds min(a_B, L_est)/8 = {limit} nm",
                self.h
            )));
        }
        Ok(())
    }

    /// Nyquist wavenumber π/h (1/nm).
    pub fn nyquist(&self) -> f64 {
        PI / self.h
    }

    /// ∫ e^{−ik·r} F̃_c·p̂_cv d²r by the trapezoid rule (nm^{1/2}).
    pub fn fourier(&self, kx: f64, ky: f64) -> Result<Complex64> {
        let kn = self.nyquist();
        if kx.abs() > kn * (1.0 + 1e-12) || ky.abs() > kn * (1.0 + 1e-12) {
            return Err(Error::Sampling(format!(
                "|k| component beyond Nyquist limit {kn} 1/nm (k = ({kx}, {ky}))"
            )));
        }
        Ok(self.fourier_unchecked(kx, ky))
    }

    pub(crate) fn fourier_unchecked(&self, kx: f64, ky: f64) -> Complex64 {
        let px: Vec<Complex64> = (0..self.nx)
            .map(|i| {
                let w = if i == 0 || i == self.nx - 1 { 0.5 } else { 1.0 };
                Complex64::from_polar(w, -kx * self.x(i))
            })
            .collect();
        let mut total = Complex64::new(0.0, 0.0);
        for j in 0..self.ny {
            let row = &self.samples[j * self.nx..(j + 1) * self.nx];
            let s: Complex64 = row.iter().zip(&px).map(|(a, b)| a * b).sum();
            let w = if j == 0 || j == self.ny - 1 { 0.5 } else { 1.0 };
            total += s * Complex64::from_polar(w, -ky * self.y(j));
        }
        total * self.scale() * self.h * self.h
    }

    /// ⟨k²⟩ of the profile (1/nm²), from the discrete Fourier spectrum.
    pub fn mean_k2(&self) -> f64 {
        let mut data = self.samples.clone();
        let mut planner = FftPlanner::<f64>::new();
        let fx = planner.plan_fft_forward(self.nx);
        for row in data.chunks_mut(self.nx) {
            fx.process(row);
        }
        let fy = planner.plan_fft_forward(self.ny);
        let mut col = vec![Complex64::new(0.0, 0.0); self.ny];
        for i in 0..self.nx {
            for j in 0..self.ny {
                col[j] = data[j * self.nx + i];
            }
            fy.process(&mut col);
            for j in 0..self.ny {
                data[j * self.nx + i] = col[j];
            }
        }
        let freq = |m: usize, n: usize| {
            let m = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
            2.0 * PI * m / (n as f64 * self.h)
        };
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..self.ny {
            let ky = freq(j, self.ny);
            for i in 0..self.nx {
                let kx = freq(i, self.nx);
                let p = data[j * self.nx + i].norm_sqr();
                num += (kx * kx + ky * ky) * p;
                den += p;
            }
        }
        num / den
    }

    /// ∫|F|⁴ / (∫|F|²)² (1/nm²), the inverse effective mode area.
    pub fn inverse_mode_area(&self) -> f64 {
        self.trapz(|z| z.norm_sqr() * z.norm_sqr()) / (self.norm2 * self.norm2)
    }
}

/// A resonator field profile.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Gaussian(GaussianProfile),
    Tabulated(TabulatedProfile),
}

impl Profile {
    pub fn lz_nm(&self) -> f64 {
        match self {
            Profile::Gaussian(g) => g.lz_nm,
            Profile::Tabulated(t) => t.lz_nm,
        }
    }

    pub fn rho(&self) -> f64 {
        match self {
            Profile::Gaussian(g) => g.rho,
            Profile::Tabulated(t) => t.rho,
        }
    }

    pub fn eta_n(&self) -> f64 {
        match self {
            Profile::Gaussian(g) => g.eta_n,
            Profile::Tabulated(t) => t.eta_n,
        }
    }

    /// Lateral length scale: L for a Gaussian, the rms extent otherwise.
    pub fn lateral_nm(&self) -> f64 {
        match self {
            Profile::Gaussian(g) => g.l_nm,
            Profile::Tabulated(t) => t.rms_extent_nm(),
        }
    }
}

/// Coupling quantities derived from a profile; all energies in meV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSummary {
    /// ħG₀
    pub g0_mev: f64,
    /// ħΩ₀, the reaction-coordinate energy
    pub omega0_mev: f64,
    pub lz_nm: f64,
    /// ħW₀′
    pub w0p_mev: f64,
    /// ħξ = ħΩ₀ − ħω₀
    pub xi_mev: f64,
    /// ħG₀^max
    pub g0_max_mev: f64,
}

/// ħ²/(2M) in meV·nm².
pub fn kinetic_mev_nm2(material: &MaterialParams) -> f64 {
    hbar2_over_2m0_mev_nm2() / material.mass_ratio
}

/// Cutoff ħξ = ħ²/(2ML²) for a Gaussian of lateral size `l_nm`.
pub fn xi_mev(material: &MaterialParams, l_nm: f64) -> f64 {
    kinetic_mev_nm2(material) / (l_nm * l_nm)
}

/// ħξ for any profile: ħ²⟨k²⟩/(2M).
pub fn cutoff_mev(profile: &Profile, material: &MaterialParams) -> f64 {
    match profile {
        Profile::Gaussian(g) => xi_mev(material, g.l_nm),
        Profile::Tabulated(t) => kinetic_mev_nm2(material) * t.mean_k2(),
    }
}

/// ħe₀²|p_cv|²/(πε₀m₀²ω_c a_B²) in meV²·nm. Multiplying by ∫|F̃_c·p̂_cv|²
/// gives (ħG₀)².
pub fn coupling_prefactor(material: &MaterialParams, wc_mev: f64) -> f64 {
    let p = material.pcv_mev_ps_per_nm * MOMENTUM_UNIT_SI;
    let a_b = material.bohr_radius_nm * 1e-9;
    let wc = wc_mev * MEV_IN_J / si::HBAR;
    let q_si = si::HBAR * si::E0 * si::E0 * p * p / (PI * si::EPS0 * si::M0 * si::M0 * wc * a_b * a_b);
    q_si / (MEV_IN_J * MEV_IN_J) * 1e9
}

/// ħG₀^max = √(e₀²ħ|p_cv|²/(πε₀m₀²ω_c a_B² L_z)) (meV).
pub fn upper_bound_g0(material: &MaterialParams, wc_mev: f64, lz_nm: f64) -> Result<f64> {
    if !(wc_mev > 0.0) || !(lz_nm > 0.0) {
        return Err(Error::Domain(format!(
            "upper bound needs positive frequency and L_z (got {wc_mev} meV, {lz_nm} nm)"
        )));
    }
    Ok((coupling_prefactor(material, wc_mev) / lz_nm).sqrt())
}

/// Complex ħg_k (meV) for a tabulated profile; S is the grid area.
pub fn coupling_gk(
    profile: &TabulatedProfile,
    kx: f64,
    ky: f64,
    material: &MaterialParams,
    wc_mev: f64,
) -> Result<Complex64> {
    if !(wc_mev > 0.0) {
        return Err(Error::Domain(format!("resonator energy must be > 0, got {wc_mev}")));
    }
    let ft = profile.fourier(kx, ky)?;
    let amp = (coupling_prefactor(material, wc_mev) / profile.area_nm2()).sqrt();
    Ok(-amp * ft)
}

/// G₀, Ω₀, W₀′, ξ and the G₀ bound for a profile at resonator energy `wc_mev`.
pub fn collective_coupling(
    profile: &Profile,
    material: &MaterialParams,
    wc_mev: f64,
) -> Result<CouplingSummary> {
    material.validate()?;
    let lz = profile.lz_nm();
    let g0_max = upper_bound_g0(material, wc_mev, lz)?;
    let g0 = g0_max * profile.rho();
    let xi = cutoff_mev(profile, material);
    Ok(CouplingSummary {
        g0_mev: g0,
        omega0_mev: material.exciton_energy_mev + xi,
        lz_nm: lz,
        w0p_mev: kerr_shift(profile, material)?,
        xi_mev: xi,
        g0_max_mev: g0_max,
    })
}

/// ħW₀′ = ħSW₀₀₀·η_n·∫|F|⁴/(∫|F|²)² (meV).
pub fn kerr_shift(profile: &Profile, material: &MaterialParams) -> Result<f64> {
    let l = profile.lateral_nm();
    if l < 5.0 * material.bohr_radius_nm {
        log::warn!(
            "lateral confinement {l:.3} nm is below 5 a_B; the zero-momentum Kerr estimate is unreliable"
        );
    }
    let inv_area = match profile {
        Profile::Gaussian(g) => 1.0 / (2.0 * PI * g.l_nm * g.l_nm),
        Profile::Tabulated(t) => t.inverse_mode_area(),
    };
    if !inv_area.is_finite() || inv_area <= 0.0 {
        return Err(Error::Domain("degenerate field profile".into()));
    }
    Ok(material.kerr_product_mev_nm2() * profile.eta_n() * inv_area)
}

/// Returns a copy of `material` whose |p_cv| gives ħG₀ = `target_g0_mev`
/// for the stated L_z, ρ and resonator energy.
pub fn calibrate_pcv(
    material: &MaterialParams,
    target_g0_mev: f64,
    lz_nm: f64,
    rho: f64,
    wc_mev: f64,
) -> Result<MaterialParams> {
    let current = upper_bound_g0(material, wc_mev, lz_nm)? * rho;
    if !(current > 0.0) || !(target_g0_mev > 0.0) {
        return Err(Error::Domain("cannot calibrate |p_cv| against a zero coupling".into()));
    }
    let mut m = material.clone();
    m.pcv_mev_ps_per_nm *= target_g0_mev / current;
    Ok(m)
}
