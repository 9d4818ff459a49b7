//! Material parameter records and temperature-dependent exciton linewidths.
//!
//! The WS₂ record returned by [`MaterialParams::ws2_defaults`] pins the
//! interaction constant α = 2.07 and the product ħSW₀₀₀ = α·E_b·a_B² =
//! 2040 meV·nm². The remaining values (mass, band-edge energy, |p_cv|,
//! ε_eff and the linewidth coefficients) are literature-sourced defaults
//! and should be treated as configuration, not ground truth.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{check_keys, line_of_span};
use crate::error::{Error, Result};
use crate::units::bose_occupation;

/// ħSW₀₀₀ for WS₂ in meV·nm².
pub const WS2_KERR_PRODUCT_MEV_NM2: f64 = 2040.0;
/// Interaction constant α for WS₂.
pub const WS2_ALPHA: f64 = 2.07;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinewidthKind {
    Constant,
    LinearPlusActivated,
}

/// γ_x(T) = γ_x⁰ + c₁′·T and γ_x′(T) = c₁·T + c₂·n_B(ħΩ_ph, T).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinewidthModel {
    pub kind: LinewidthKind,
    /// γ_x⁰ (meV)
    pub gx0_mev: f64,
    /// c₁′ (meV/K), slope of the nonradiative decay
    pub gx_slope_mev_per_k: f64,
    /// c₁ (meV/K), linear dephasing slope
    pub gxp_slope_mev_per_k: f64,
    /// c₂ (meV), amplitude of the phonon-activated dephasing
    pub gxp_activated_mev: f64,
    /// ħΩ_ph (meV)
    pub phonon_energy_mev: f64,
}

impl LinewidthModel {
    pub fn constant(gx0_mev: f64) -> Self {
        Self {
            kind: LinewidthKind::Constant,
            gx0_mev,
            gx_slope_mev_per_k: 0.0,
            gxp_slope_mev_per_k: 0.0,
            gxp_activated_mev: 0.0,
            phonon_energy_mev: 30.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("gx0_mev", self.gx0_mev),
            ("gx_slope_mev_per_K", self.gx_slope_mev_per_k),
            ("gxp_slope_mev_per_K", self.gxp_slope_mev_per_k),
            ("gxp_activated_mev", self.gxp_activated_mev),
        ];
        for (k, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::validation(k, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(self.phonon_energy_mev > 0.0) {
            return Err(Error::validation(
                "phonon_energy_mev",
                format!("must be > 0, got {}", self.phonon_energy_mev),
            ));
        }
        Ok(())
    }

    /// Returns `(γ_x, γ_x′)` in meV at temperature `t_kelvin`.
    pub fn linewidths_at(&self, t_kelvin: f64) -> Result<(f64, f64)> {
        if !(t_kelvin >= 0.0) {
            return Err(Error::Domain(format!(
                "temperature must be >= 0 K, got {t_kelvin}"
            )));
        }
        match self.kind {
            LinewidthKind::Constant => Ok((self.gx0_mev, 0.0)),
            LinewidthKind::LinearPlusActivated => {
                let gx = self.gx0_mev + self.gx_slope_mev_per_k * t_kelvin;
                let gxp = self.gxp_slope_mev_per_k * t_kelvin
                    + self.gxp_activated_mev * bose_occupation(self.phonon_energy_mev, t_kelvin);
                Ok((gx, gxp))
            }
        }
    }

    /// Total intrinsic exciton linewidth Γ_x = γ_x + γ_x′.
    pub fn total_linewidth(&self, t_kelvin: f64) -> Result<f64> {
        let (gx, gxp) = self.linewidths_at(t_kelvin)?;
        Ok(gx + gxp)
    }

    /// Re-solves the activated amplitude c₂ so that γ_x′(T) equals `target_mev`.
    ///
    /// Fails if the linear part alone already exceeds the target.
    pub fn calibrate_dephasing(&mut self, t_kelvin: f64, target_mev: f64) -> Result<()> {
        let nb = bose_occupation(self.phonon_energy_mev, t_kelvin);
        let linear = self.gxp_slope_mev_per_k * t_kelvin;
        if nb <= 0.0 || linear > target_mev {
            return Err(Error::Domain(format!(
                "cannot reach gamma_x' = {target_mev} meV at {t_kelvin} K: linear part {linear} meV, n_B = {nb}"
            )));
        }
        self.kind = LinewidthKind::LinearPlusActivated;
        self.gxp_activated_mev = (target_mev - linear) / nb;
        Ok(())
    }
}

/// Exciton material parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    /// Total exciton mass M = m_e + m_h in units of m₀.
    pub mass_ratio: f64,
    pub bohr_radius_nm: f64,
    pub binding_energy_mev: f64,
    /// Band-edge exciton energy ħω₀.
    pub exciton_energy_mev: f64,
    /// |p_cv| in meV·ps/nm.
    pub pcv_mev_ps_per_nm: f64,
    pub alpha: f64,
    pub eps_eff: f64,
    pub linewidth: LinewidthModel,
}

/// Keys accepted in a material file.
pub const MATERIAL_KEYS: [&str; 12] = [
    "mass_ratio",
    "bohr_radius_nm",
    "binding_energy_mev",
    "exciton_energy_mev",
    "pcv_mev_ps_per_nm",
    "alpha",
    "eps_eff",
    "gx0_mev",
    "gx_slope_mev_per_K",
    "gxp_slope_mev_per_K",
    "gxp_activated_mev",
    "phonon_energy_mev",
];

impl MaterialParams {
    /// Monolayer WS₂.
    ///
    /// α and the Kerr product are fixed; a_B = 1.7 nm with E_b chosen to
    /// preserve α·E_b·a_B² = 2040 meV·nm². |p_cv| is set so that
    /// ħG₀ = 22 meV for L_z = 150 nm, ρ = 0.5, ħω_c = ħω₀.
    pub fn ws2_defaults() -> Self {
        let a_b = 1.7;
        Self {
            mass_ratio: 0.61,
            bohr_radius_nm: a_b,
            binding_energy_mev: WS2_KERR_PRODUCT_MEV_NM2 / (WS2_ALPHA * a_b * a_b),
            exciton_energy_mev: 2020.0,
            pcv_mev_ps_per_nm: 4.686_297_456,
            alpha: WS2_ALPHA,
            eps_eff: 1.0,
            linewidth: LinewidthModel {
                kind: LinewidthKind::LinearPlusActivated,
                gx0_mev: 1.0,
                gx_slope_mev_per_k: 0.01,
                gxp_slope_mev_per_k: 0.002,
                // makes γ_x′(300 K) = ħW₀′(L = 9 nm) ≈ 4.008 meV
                gxp_activated_mev: 7.468_965_279,
                phonon_energy_mev: 30.0,
            },
        }
    }

    /// Overrides a_B and recomputes E_b so the Kerr product is preserved.
    pub fn with_bohr_radius(mut self, a_b_nm: f64) -> Self {
        let product = self.kerr_product_mev_nm2();
        self.bohr_radius_nm = a_b_nm;
        self.binding_energy_mev = product / (self.alpha * a_b_nm * a_b_nm);
        self
    }

    /// Sets both a_B and E_b; the Kerr product follows.
    pub fn with_pinned_exciton(mut self, a_b_nm: f64, e_b_mev: f64) -> Self {
        self.bohr_radius_nm = a_b_nm;
        self.binding_energy_mev = e_b_mev;
        self
    }

    /// ħSW₀₀₀ = α·E_b·a_B² in meV·nm².
    pub fn kerr_product_mev_nm2(&self) -> f64 {
        self.alpha * self.binding_energy_mev * self.bohr_radius_nm * self.bohr_radius_nm
    }

    /// Checks the Kerr product against a reference value to within 1%.
    pub fn check_kerr_product(&self, expected_mev_nm2: f64) -> Result<()> {
        let got = self.kerr_product_mev_nm2();
        if ((got - expected_mev_nm2) / expected_mev_nm2).abs() > 0.01 {
            return Err(Error::validation(
                "alpha",
                format!("alpha*E_b*a_B^2 = {got} meV nm^2 differs from {expected_mev_nm2} by more than 1%"),
            ));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass_ratio", self.mass_ratio),
            ("bohr_radius_nm", self.bohr_radius_nm),
            ("binding_energy_mev", self.binding_energy_mev),
            ("exciton_energy_mev", self.exciton_energy_mev),
            ("pcv_mev_ps_per_nm", self.pcv_mev_ps_per_nm),
            ("alpha", self.alpha),
        ];
        for (k, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(k, format!("must be finite and > 0, got {v}")));
            }
        }
        if !(self.eps_eff >= 1.0) {
            return Err(Error::validation("eps_eff", format!("must be >= 1, got {}", self.eps_eff)));
        }
        self.linewidth.validate()
    }

    /// `(γ_x, γ_x′)` at temperature `t_kelvin`.
    pub fn linewidths_at(&self, t_kelvin: f64) -> Result<(f64, f64)> {
        self.linewidth.linewidths_at(t_kelvin)
    }

    /// Parses a flat `key = value` material file.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse {
            line: e.span().map(|s| line_of_span(text, s.start)).unwrap_or(0),
            msg: e.message().to_string(),
        })?;
        check_keys(table.keys().map(String::as_str), &MATERIAL_KEYS, "material file")?;
        let mut vals = BTreeMap::new();
        for key in MATERIAL_KEYS {
            let v = table
                .get(key)
                .ok_or_else(|| Error::validation(key, "missing from material file"))?;
            let x = match v {
                toml::Value::Float(f) => *f,
                toml::Value::Integer(i) => *i as f64,
                other => {
                    return Err(Error::validation(key, format!("expected a number, got {other}")))
                }
            };
            vals.insert(key, x);
        }
        let m = Self {
            mass_ratio: vals["mass_ratio"],
            bohr_radius_nm: vals["bohr_radius_nm"],
            binding_energy_mev: vals["binding_energy_mev"],
            exciton_energy_mev: vals["exciton_energy_mev"],
            pcv_mev_ps_per_nm: vals["pcv_mev_ps_per_nm"],
            alpha: vals["alpha"],
            eps_eff: vals["eps_eff"],
            linewidth: LinewidthModel {
                kind: LinewidthKind::LinearPlusActivated,
                gx0_mev: vals["gx0_mev"],
                gx_slope_mev_per_k: vals["gx_slope_mev_per_K"],
                gxp_slope_mev_per_k: vals["gxp_slope_mev_per_K"],
                gxp_activated_mev: vals["gxp_activated_mev"],
                phonon_energy_mev: vals["phonon_energy_mev"],
            },
        };
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        Self::from_config_str(&text)
    }

    /// Serializes to the material file format.
    pub fn to_config_string(&self) -> String {
        let lw = &self.linewidth;
        let rows = [
            ("mass_ratio", self.mass_ratio),
            ("bohr_radius_nm", self.bohr_radius_nm),
            ("binding_energy_mev", self.binding_energy_mev),
            ("exciton_energy_mev", self.exciton_energy_mev),
            ("pcv_mev_ps_per_nm", self.pcv_mev_ps_per_nm),
            ("alpha", self.alpha),
            ("eps_eff", self.eps_eff),
            ("gx0_mev", lw.gx0_mev),
            ("gx_slope_mev_per_K", lw.gx_slope_mev_per_k),
            ("gxp_slope_mev_per_K", lw.gxp_slope_mev_per_k),
            ("gxp_activated_mev", lw.gxp_activated_mev),
            ("phonon_energy_mev", lw.phonon_energy_mev),
        ];
        rows.iter()
            .map(|(k, v)| format!("{k} = {v:?}\n"))
            .collect()
    }
}
