//! Unit conventions.
//!
//! Energies are in meV, times in ps and lengths in nm. Frequencies are
//! carried as energies `ħω` (meV) wherever possible; rates that enter
//! differential equations are converted to angular frequencies (rad/ps)
//! by dividing by [`HBAR_MEV_PS`].

/// ħ in meV·ps.
pub const HBAR_MEV_PS: f64 = 0.658_211_956_9;

/// Boltzmann constant in meV/K.
pub const KB_MEV_PER_K: f64 = 0.086_173_332_62;

/// SI constants used where a formula mixes electromagnetic quantities.
pub mod si {
    /// Elementary charge (C).
    pub const E0: f64 = 1.602_176_634e-19;
    /// Free electron mass (kg).
    pub const M0: f64 = 9.109_383_701_5e-31;
    /// Vacuum permittivity (F/m).
    pub const EPS0: f64 = 8.854_187_812_8e-12;
    /// Reduced Planck constant (J·s).
    pub const HBAR: f64 = 1.054_571_817e-34;
}

/// 1 meV in J.
pub const MEV_IN_J: f64 = si::E0 * 1e-3;

/// 1 meV·ps/nm in kg·m/s (the momentum unit of `|p_cv|`).
pub const MOMENTUM_UNIT_SI: f64 = MEV_IN_J * 1e-12 / 1e-9;

/// ħ²/(2m₀) in meV·nm².
pub fn hbar2_over_2m0_mev_nm2() -> f64 {
    si::HBAR * si::HBAR / (2.0 * si::M0) / MEV_IN_J * 1e18
}

/// The fixed meV / ps / nm unit system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    pub hbar_mev_ps: f64,
    pub e0_c: f64,
    pub m0_kg: f64,
    pub eps0_f_per_m: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self {
            hbar_mev_ps: HBAR_MEV_PS,
            e0_c: si::E0,
            m0_kg: si::M0,
            eps0_f_per_m: si::EPS0,
        }
    }
}

impl UnitSystem {
    /// ħω (meV) → ω (rad/ps).
    pub fn angular_from_mev(&self, e_mev: f64) -> f64 {
        e_mev / self.hbar_mev_ps
    }

    /// ω (rad/ps) → ħω (meV).
    pub fn mev_from_angular(&self, w: f64) -> f64 {
        w * self.hbar_mev_ps
    }
}

/// ħω (meV) → ω (rad/ps) in the default unit system.
#[inline]
pub fn rate(e_mev: f64) -> f64 {
    e_mev / HBAR_MEV_PS
}

/// Bose-Einstein occupation of a mode with energy `e_mev` at `t_kelvin`.
pub fn bose_occupation(e_mev: f64, t_kelvin: f64) -> f64 {
    if t_kelvin <= 0.0 {
        return 0.0;
    }
    let beta_e = e_mev / (KB_MEV_PER_K * t_kelvin);
    1.0 / beta_e.exp_m1()
}
