//! Run configuration: a TOML file with top-level `material` / `out_dir` keys
//! and `[profile]`, `[system]`, `[numerics]`, `[sweep]` sections.
//!
//! Parsing is strict. Unknown keys are rejected with the closest known key
//! as a suggestion, and every physical value is validated at load time.
//!
//! ```toml
//! material = "ws2"            # builtin, or a path relative to this file
//! out_dir = "out"
//!
//! [profile]
//! kind = "gaussian"           # or "tabulated" with csv = "field.csv"
//! L = 10.0                    # nm
//! Lz = 50.0                   # nm
//! rho = 0.75
//! eta_n = 1.0
//!
//! [system]
//! gamma_c_mev = 25.0
//! F_mev = 1.5
//! T_K = 300.0
//! wc_mev = "optimize"         # number, "resonant" or "optimize"
//! wd_mev = "optimize"
//! ```

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{GaussianProfile, Profile, TabulatedProfile};
use crate::materials::MaterialParams;

/// Byte offset → 1-based line number.
pub fn line_of_span(text: &str, offset: usize) -> usize {
    let end = offset.min(text.len());
    text.as_bytes()[..end].iter().filter(|&&b| b == b'\n').count() + 1
}

/// Closest entry of `known` to `key`, if reasonably close.
pub fn suggest<'a>(key: &str, known: &[&'a str]) -> Option<&'a str> {
    let lower = key.to_ascii_lowercase();
    known
        .iter()
        .map(|k| (strsim::levenshtein(&lower, &k.to_ascii_lowercase()), *k))
        .min()
        .filter(|(d, _)| *d <= (key.len() / 2).max(2))
        .map(|(_, k)| k)
}

/// Rejects any key not listed in `known`.
pub fn check_keys<'a>(
    keys: impl IntoIterator<Item = &'a str>,
    known: &[&str],
    context: &str,
) -> Result<()> {
    for key in keys {
        if !known.contains(&key) {
            return Err(Error::UnknownKey {
                key: key.to_string(),
                context: context.to_string(),
                suggestion: suggest(key, known).map(str::to_string),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialSource {
    Builtin(String),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Gaussian,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileConfig {
    pub kind: ProfileKind,
    /// Lateral confinement (nm); required for Gaussian profiles.
    pub l_nm: Option<f64>,
    pub lz_nm: f64,
    pub rho: f64,
    pub eta_n: f64,
    pub csv: Option<PathBuf>,
}

impl ProfileConfig {
    /// Constructs the field profile, reading the CSV for tabulated kinds.
    pub fn build(&self) -> Result<Profile> {
        match self.kind {
            ProfileKind::Gaussian => {
                let l = self.l_nm.ok_or_else(|| Error::validation("L", "Gaussian profile needs L"))?;
                Ok(Profile::Gaussian(GaussianProfile::new(l, self.lz_nm, self.rho, self.eta_n)?))
            }
            ProfileKind::Tabulated => {
                let path = self.csv.as_ref().ok_or_else(|| Error::validation("csv", "tabulated profile needs csv"))?;
                Ok(Profile::Tabulated(TabulatedProfile::load(path, self.lz_nm, self.rho, self.eta_n)?))
            }
        }
    }
}

/// How a resonator or drive frequency is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencySetting {
    /// Absolute ħω in meV.
    Fixed(f64),
    /// ω_c = Ω₀ (resonator only).
    Resonant,
    /// Chosen by the g²(0) optimizer.
    Optimize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemConfig {
    pub gamma_c_mev: f64,
    pub f_mev: f64,
    pub t_kelvin: f64,
    pub wc: FrequencySetting,
    pub wd: FrequencySetting,
    /// Overrides the profile-derived ħG₀.
    pub g0_override_mev: Option<f64>,
    /// Re-solves the activated dephasing amplitude so that γ_x′(T) = W₀′ at this L.
    pub calibrate_dephasing_l_nm: Option<f64>,
    pub include_residual: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralBackendKind {
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericsConfig {
    pub nc: usize,
    pub nx: usize,
    pub adaptive_truncation: bool,
    pub max_fock: usize,
    pub max_superop_dim: usize,
    pub steady_tol: f64,
    pub h_ps: Option<f64>,
    pub t_max_ps: f64,
    pub grid: usize,
    pub n_starts: usize,
    pub box_mev: f64,
    pub g2_tol: f64,
    pub tau_max_ps: f64,
    pub n_tau: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub spectral_backend: SpectralBackendKind,
    pub residual_fraction: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            nc: 5,
            nx: 5,
            adaptive_truncation: true,
            max_fock: 12,
            max_superop_dim: 40_000,
            steady_tol: 1e-12,
            h_ps: None,
            t_max_ps: 1.0,
            grid: 41,
            n_starts: 5,
            box_mev: 400.0,
            g2_tol: 1e-4,
            tau_max_ps: 10.0,
            n_tau: 201,
            x_min: 0.05,
            x_max: 20.0,
            n_x: 400,
            spectral_backend: SpectralBackendKind::Analytic,
            residual_fraction: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    /// Lateral confinements (nm), ascending.
    pub l_values_nm: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub material_source: MaterialSource,
    pub material: MaterialParams,
    pub out_dir: PathBuf,
    pub profile: ProfileConfig,
    pub system: SystemConfig,
    pub numerics: NumericsConfig,
    pub sweep: SweepConfig,
}

const TOP_KEYS: [&str; 6] = ["material", "out_dir", "profile", "system", "numerics", "sweep"];
const PROFILE_KEYS: [&str; 6] = ["kind", "L", "Lz", "rho", "eta_n", "csv"];
const SYSTEM_KEYS: [&str; 8] = [
    "gamma_c_mev",
    "F_mev",
    "T_K",
    "wc_mev",
    "wd_mev",
    "G0_mev",
    "calibrate_dephasing_L_nm",
    "include_residual",
];
const NUMERICS_KEYS: [&str; 19] = [
    "Nc",
    "Nx",
    "adaptive_truncation",
    "max_fock",
    "max_superop_dim",
    "steady_tol",
    "h_ps",
    "t_max_ps",
    "grid",
    "n_starts",
    "box_mev",
    "g2_tol",
    "tau_max_ps",
    "n_tau",
    "x_min",
    "x_max",
    "n_x",
    "spectral_backend",
    "residual_fraction",
];
const SWEEP_KEYS: [&str; 1] = ["L_nm"];

/// Typed access to one TOML table.
struct Section<'a> {
    name: &'a str,
    table: Option<&'a toml::Table>,
}

impl<'a> Section<'a> {
    fn new(root: &'a toml::Table, name: &'a str, known: &[&str]) -> Result<Self> {
        let table = match root.get(name) {
            None => None,
            Some(toml::Value::Table(t)) => {
                check_keys(t.keys().map(String::as_str), known, &format!("[{name}]"))?;
                Some(t)
            }
            Some(_) => return Err(Error::validation(name, "expected a [section]")),
        };
        Ok(Self { name, table })
    }

    fn raw(&self, key: &str) -> Option<&'a toml::Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(toml::Value::Float(f)) => Ok(Some(*f)),
            Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(v) => Err(Error::validation(key, format!("[{}] expected a number, got {v}", self.name))),
        }
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            None => Ok(default),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
            Some(v) => Err(Error::validation(key, format!("expected a non-negative integer, got {v}"))),
        }
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some(toml::Value::Boolean(b)) => Ok(*b),
            Some(v) => Err(Error::validation(key, format!("expected true or false, got {v}"))),
        }
    }

    fn str(&self, key: &str) -> Result<Option<&'a str>> {
        match self.raw(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s.as_str())),
            Some(v) => Err(Error::validation(key, format!("expected a string, got {v}"))),
        }
    }

    fn frequency(&self, key: &str, default: FrequencySetting) -> Result<FrequencySetting> {
        match self.raw(key) {
            None => Ok(default),
            Some(toml::Value::String(s)) if s == "optimize" => Ok(FrequencySetting::Optimize),
            Some(toml::Value::String(s)) if s == "resonant" && key == "wc_mev" => {
                Ok(FrequencySetting::Resonant)
            }
            Some(_) => match self.f64(key) {
                Ok(Some(x)) if x > 0.0 => Ok(FrequencySetting::Fixed(x)),
                _ => Err(Error::validation(
                    key,
                    "expected a positive energy in meV, \"optimize\" or (for wc_mev) \"resonant\"",
                )),
            },
        }
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::validation(key, format!("must be > 0, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::validation(key, format!("must be >= 0, got {v}")))
    }
}

impl RunConfig {
    /// Parses a configuration; relative paths resolve against `base_dir`.
    pub fn from_str_with_base(text: &str, base_dir: &Path) -> Result<Self> {
        let root: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse {
            line: e.span().map(|s| line_of_span(text, s.start)).unwrap_or(0),
            msg: e.message().to_string(),
        })?;
        check_keys(root.keys().map(String::as_str), &TOP_KEYS, "top level")?;

        let top_str = |key: &str| -> Result<Option<&str>> {
            match root.get(key) {
                None => Ok(None),
                Some(toml::Value::String(s)) => Ok(Some(s.as_str())),
                Some(v) => Err(Error::validation(key, format!("expected a string, got {v}"))),
            }
        };
        let (material_source, material) = match top_str("material")?.unwrap_or("ws2") {
            "ws2" => (MaterialSource::Builtin("ws2".into()), MaterialParams::ws2_defaults()),
            p => {
                let path = base_dir.join(p);
                let m = MaterialParams::load(&path)?;
                (MaterialSource::File(path), m)
            }
        };
        let out_dir = base_dir.join(top_str("out_dir")?.unwrap_or("out"));

        let p = Section::new(&root, "profile", &PROFILE_KEYS)?;
        let kind = match p.str("kind")?.unwrap_or("gaussian") {
            "gaussian" => ProfileKind::Gaussian,
            "tabulated" => ProfileKind::Tabulated,
            other => {
                return Err(Error::validation(
                    "kind",
                    format!("profile kind must be \"gaussian\" or \"tabulated\", got \"{other}\""),
                ))
            }
        };
        let l_nm = p.f64("L")?.map(|l| positive("L", l)).transpose()?;
        let csv = p.str("csv")?.map(|c| base_dir.join(c));
        match kind {
            ProfileKind::Gaussian if l_nm.is_none() => {
                return Err(Error::validation("L", "required for a Gaussian profile"))
            }
            ProfileKind::Tabulated if csv.is_none() => {
                return Err(Error::validation("csv", "required for a tabulated profile"))
            }
            _ => {}
        }
        let rho = p.f64_or("rho", 1.0)?;
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::validation("rho", format!("must lie in [0, 1], got {rho}")));
        }
        let eta_n = p.f64_or("eta_n", 1.0)?;
        if !(0.5..=1.0).contains(&eta_n) {
            return Err(Error::validation("eta_n", format!("must lie in [1/2, 1], got {eta_n}")));
        }
        let profile = ProfileConfig {
            kind,
            l_nm,
            lz_nm: positive("Lz", p.f64("Lz")?.ok_or_else(|| Error::validation("Lz", "required"))?)?,
            rho,
            eta_n,
            csv,
        };

        let s = Section::new(&root, "system", &SYSTEM_KEYS)?;
        let system = SystemConfig {
            gamma_c_mev: non_negative("gamma_c_mev", s.f64_or("gamma_c_mev", 5.0)?)?,
            f_mev: non_negative("F_mev", s.f64_or("F_mev", 1.5)?)?,
            t_kelvin: non_negative("T_K", s.f64_or("T_K", 4.0)?)?,
            wc: s.frequency("wc_mev", FrequencySetting::Resonant)?,
            wd: s.frequency("wd_mev", FrequencySetting::Optimize)?,
            g0_override_mev: s.f64("G0_mev")?.map(|g| non_negative("G0_mev", g)).transpose()?,
            calibrate_dephasing_l_nm: s
                .f64("calibrate_dephasing_L_nm")?
                .map(|l| positive("calibrate_dephasing_L_nm", l))
                .transpose()?,
            include_residual: s.bool_or("include_residual", true)?,
        };

        let n = Section::new(&root, "numerics", &NUMERICS_KEYS)?;
        let d = NumericsConfig::default();
        let numerics = NumericsConfig {
            nc: n.usize_or("Nc", d.nc)?,
            nx: n.usize_or("Nx", d.nx)?,
            adaptive_truncation: n.bool_or("adaptive_truncation", d.adaptive_truncation)?,
            max_fock: n.usize_or("max_fock", d.max_fock)?,
            max_superop_dim: n.usize_or("max_superop_dim", d.max_superop_dim)?,
            steady_tol: positive("steady_tol", n.f64_or("steady_tol", d.steady_tol)?)?,
            h_ps: n.f64("h_ps")?.map(|h| positive("h_ps", h)).transpose()?,
            t_max_ps: positive("t_max_ps", n.f64_or("t_max_ps", d.t_max_ps)?)?,
            grid: n.usize_or("grid", d.grid)?,
            n_starts: n.usize_or("n_starts", d.n_starts)?,
            box_mev: positive("box_mev", n.f64_or("box_mev", d.box_mev)?)?,
            g2_tol: positive("g2_tol", n.f64_or("g2_tol", d.g2_tol)?)?,
            tau_max_ps: positive("tau_max_ps", n.f64_or("tau_max_ps", d.tau_max_ps)?)?,
            n_tau: n.usize_or("n_tau", d.n_tau)?,
            x_min: n.f64_or("x_min", d.x_min)?,
            x_max: n.f64_or("x_max", d.x_max)?,
            n_x: n.usize_or("n_x", d.n_x)?,
            spectral_backend: match n.str("spectral_backend")?.unwrap_or("analytic") {
                "analytic" => SpectralBackendKind::Analytic,
                "numeric" => SpectralBackendKind::Numeric,
                other => {
                    return Err(Error::validation(
                        "spectral_backend",
                        format!("must be \"analytic\" or \"numeric\", got \"{other}\""),
                    ))
                }
            },
            residual_fraction: positive(
                "residual_fraction",
                n.f64_or("residual_fraction", d.residual_fraction)?,
            )?,
        };
        if numerics.nc < 1 || numerics.nx < 1 {
            return Err(Error::validation("Nc", "Fock truncations must be >= 1"));
        }
        if numerics.grid < 2 || numerics.n_tau < 2 || numerics.n_x < 2 {
            return Err(Error::validation("grid", "grid sizes must be >= 2"));
        }
        if !(numerics.x_max > numerics.x_min) {
            return Err(Error::validation("x_max", "must exceed x_min"));
        }

        let w = Section::new(&root, "sweep", &SWEEP_KEYS)?;
        let l_values_nm = match w.raw("L_nm") {
            None => profile.l_nm.into_iter().collect(),
            Some(toml::Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    toml::Value::Float(f) => positive("L_nm", *f),
                    toml::Value::Integer(i) => positive("L_nm", *i as f64),
                    other => Err(Error::validation("L_nm", format!("expected numbers, got {other}"))),
                })
                .collect::<Result<Vec<_>>>()?,
            Some(v) => return Err(Error::validation("L_nm", format!("expected an array, got {v}"))),
        };
        if l_values_nm.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation("L_nm", "sweep values must be strictly ascending"));
        }

        Ok(Self {
            material_source,
            material,
            out_dir,
            profile,
            system,
            numerics,
            sweep: SweepConfig { l_values_nm },
        })
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        Self::from_str_with_base(text, Path::new("."))
    }
}

/// Loads and validates a run configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    RunConfig::from_str_with_base(&text, base)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[profile]\nL = 10.0\nLz = 50.0\n";

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::parse_str(MINIMAL).unwrap();
        assert_eq!(c.material_source, MaterialSource::Builtin("ws2".into()));
        assert_eq!(c.profile.kind, ProfileKind::Gaussian);
        assert_eq!(c.profile.rho, 1.0);
        assert_eq!(c.profile.eta_n, 1.0);
        assert_eq!(c.numerics, NumericsConfig::default());
        assert_eq!(c.system.wc, FrequencySetting::Resonant);
        assert_eq!(c.sweep.l_values_nm, vec![10.0]);
    }

    #[test]
    fn negative_l_names_key() {
        let err = RunConfig::parse_str("[profile]\nL = -3\nLz = 50.0\n").unwrap_err();
        assert!(matches!(err, Error::Validation { ref key, .. } if key == "L"), "{err}");
    }

    #[test]
    fn unknown_key_suggests_closest() {
        let text = format!("{MINIMAL}[system]\ngamma_cavity = 5.0\n");
        match RunConfig::parse_str(&text).unwrap_err() {
            Error::UnknownKey { key, suggestion, .. } => {
                assert_eq!(key, "gamma_cavity");
                assert_eq!(suggestion.as_deref(), Some("gamma_c_mev"));
            }
            other => panic!("{other:?}"),
        }
        let e = RunConfig::parse_str("bogus = 1\n").unwrap_err();
        assert!(matches!(e, Error::UnknownKey { .. }));
    }

    #[test]
    fn parse_error_has_line() {
        let text = "[profile]\nL = 10.0\nLz = = 3\n";
        match RunConfig::parse_str(text).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn frequency_settings() {
        let text = format!("{MINIMAL}[system]\nwc_mev = 2000.5\nwd_mev = \"optimize\"\n");
        let c = RunConfig::parse_str(&text).unwrap();
        assert_eq!(c.system.wc, FrequencySetting::Fixed(2000.5));
        assert_eq!(c.system.wd, FrequencySetting::Optimize);
        let bad = format!("{MINIMAL}[system]\nwd_mev = \"resonant\"\n");
        assert!(RunConfig::parse_str(&bad).is_err());
    }

    #[test]
    fn sweep_must_ascend() {
        let text = format!("{MINIMAL}[sweep]\nL_nm = [5, 4]\n");
        assert!(matches!(RunConfig::parse_str(&text), Err(Error::Validation { .. })));
        let ok = format!("{MINIMAL}[sweep]\nL_nm = [4, 5.5]\n");
        assert_eq!(RunConfig::parse_str(&ok).unwrap().sweep.l_values_nm, vec![4.0, 5.5]);
    }

    #[test]
    fn line_numbers() {
        let t = "a\nbc\nd";
        assert_eq!(line_of_span(t, 0), 1);
        assert_eq!(line_of_span(t, 2), 2);
        assert_eq!(line_of_span(t, 5), 3);
    }
}
