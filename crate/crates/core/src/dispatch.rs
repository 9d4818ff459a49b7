//! Subcommand execution: runs one stage of the pipeline from a [`RunConfig`],
//! writes its data files and then a manifest listing them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::blockade::{
    optimize_g2, regime_map, sweep_l, DephasingCalibration, SystemPoint, SystemTemplate,
};
use crate::config::{FrequencySetting, RunConfig};
use crate::lindblad::{analyze, g2_tau, SteadyOptions};
use crate::nonmarkovian::{compare_models, LinearDynamicsProblem};
use crate::{Error, Result};

/// Tolerance on ρ_ss checks before outputs are accepted.
const PSD_TOL: f64 = 1e-8;
const TRACE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Subcommand {
    #[serde(rename = "coupling")]
    Coupling,
    #[serde(rename = "spectral")]
    Spectral,
    #[serde(rename = "lineardyn")]
    Lineardyn,
    #[serde(rename = "g2ss")]
    G2ss,
    #[serde(rename = "g2tau")]
    G2tau,
    #[serde(rename = "optimize")]
    Optimize,
    #[serde(rename = "sweep-L")]
    SweepL,
    #[serde(rename = "regime-map")]
    RegimeMap,
}

impl Subcommand {
    pub const ALL: [Subcommand; 8] = [
        Subcommand::Coupling,
        Subcommand::Spectral,
        Subcommand::Lineardyn,
        Subcommand::G2ss,
        Subcommand::G2tau,
        Subcommand::Optimize,
        Subcommand::SweepL,
        Subcommand::RegimeMap,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::Coupling => "coupling",
            Subcommand::Spectral => "spectral",
            Subcommand::Lineardyn => "lineardyn",
            Subcommand::G2ss => "g2ss",
            Subcommand::G2tau => "g2tau",
            Subcommand::Optimize => "optimize",
            Subcommand::SweepL => "sweep-L",
            Subcommand::RegimeMap => "regime-map",
        }
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subcommand::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Subcommand::ALL.iter().map(|c| c.name()).collect();
            Error::UnknownKey {
                key: s.to_string(),
                context: "subcommands".into(),
                suggestion: crate::config::suggest(s, &names).map(str::to_string),
            }
        })
    }
}

/// An error tagged with the module it came from.
#[derive(Debug, thiserror::Error)]
#[error("[{module}] {error}")]
pub struct DispatchError {
    pub module: &'static str,
    #[source]
    pub error: Error,
}

impl DispatchError {
    pub fn new(module: &'static str, error: Error) -> Self {
        Self { module, error }
    }

    /// {"error": kind, "module": …, "message": …} plus the key for
    /// validation errors and the line for parse errors.
    pub fn to_json(&self) -> Value {
        let mut v = serde_json::json!({
            "error": self.error.kind(),
            "module": self.module,
            "message": self.error.to_string(),
        });
        match &self.error {
            Error::Validation { key, .. } => v["key"] = key.clone().into(),
            Error::Parse { line, .. } => v["line"] = (*line).into(),
            Error::UnknownKey { key, suggestion, .. } => {
                v["key"] = key.clone().into();
                if let Some(s) = suggestion {
                    v["suggestion"] = s.clone().into();
                }
            }
            _ => {}
        }
        v
    }
}

trait Tag<T> {
    fn tag(self, module: &'static str) -> std::result::Result<T, DispatchError>;
}

impl<T> Tag<T> for Result<T> {
    fn tag(self, module: &'static str) -> std::result::Result<T, DispatchError> {
        self.map_err(|e| DispatchError::new(module, e))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: Subcommand,
    pub config: RunConfig,
    /// Couplings and linewidths at the configured profile.
    pub derived: Option<SystemPoint>,
    pub calibration: Option<DephasingCalibration>,
    /// Data files, relative to the output directory.
    pub outputs: Vec<String>,
    pub timings_s: BTreeMap<String, f64>,
}

/// Formats with 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

fn round12(x: f64) -> f64 {
    if x.is_finite() {
        fmt_num(x).parse().unwrap_or(x)
    } else {
        x
    }
}

/// Rounds every float in a JSON tree to 12 significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round12(n.as_f64().unwrap());
            serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn to_json_string<T: Serialize>(v: &T) -> Result<String> {
    let value = serde_json::to_value(v).map_err(|e| Error::Domain(format!("serialization failed: {e}")))?;
    let mut s = serde_json::to_string_pretty(&round_json(value)).expect("JSON values always serialize");
    s.push('\n');
    Ok(s)
}

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{}", r.join(","));
    }
    s
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn l_values(cfg: &RunConfig, point: &SystemPoint) -> Vec<f64> {
    if cfg.sweep.l_values_nm.is_empty() {
        vec![point.l_nm]
    } else {
        cfg.sweep.l_values_nm.clone()
    }
}

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::NumericalInstability(what()))
    }
}

/// Resolved (ω_c, ω_d) for the fixed-frequency subcommands; `None` when the
/// optimizer has to pick them.
fn frequencies(cfg: &RunConfig, point: &SystemPoint) -> Option<(f64, f64)> {
    let wc = match cfg.system.wc {
        FrequencySetting::Fixed(w) => w,
        FrequencySetting::Resonant => point.omega0_mev,
        FrequencySetting::Optimize => return None,
    };
    let wd = match cfg.system.wd {
        FrequencySetting::Fixed(w) => w,
        FrequencySetting::Resonant => wc,
        FrequencySetting::Optimize => return None,
    };
    Some((wc, wd))
}

fn lindblad_frequencies(
    cfg: &RunConfig,
    point: &SystemPoint,
    timings: &mut BTreeMap<String, f64>,
) -> std::result::Result<(f64, f64), DispatchError> {
    match frequencies(cfg, point) {
        Some(f) => Ok(f),
        None => {
            let t = Instant::now();
            let opt = optimize_g2(&point.problem(), &(&cfg.numerics).into()).tag("blockade")?;
            timings.insert("optimize".into(), t.elapsed().as_secs_f64());
            Ok((opt.wc_mev, opt.wd_mev))
        }
    }
}

/// Runs `cmd`, writing data files and `manifest_<cmd>.json` (last) into
/// `out_dir`, or the configured directory if `None`.
pub fn dispatch(
    cfg: &RunConfig,
    cmd: Subcommand,
    out_dir: Option<&Path>,
) -> std::result::Result<RunManifest, DispatchError> {
    let start = Instant::now();
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| cfg.out_dir.clone());
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e)).tag("cli-config")?;
    let mut out = Outputs { dir, files: Vec::new() };
    let mut timings = BTreeMap::new();

    let template = SystemTemplate::from_config(cfg).tag("units-materials")?;
    let point = template.point().tag("field-profiles")?;
    let steady: SteadyOptions = (&cfg.numerics).into();

    match cmd {
        Subcommand::Coupling => {
            out.write("coupling.json", &to_json_string(&point).tag("cli-config")?).tag("cli-config")?;
        }
        Subcommand::Spectral => {
            let s = &point.spectral;
            let n = cfg.numerics.n_x;
            let (a, b) = (cfg.numerics.x_min, cfg.numerics.x_max);
            let rows = (0..n)
                .map(|i| {
                    let x = if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 };
                    let e = s.omega0_mev + x * s.xi_mev;
                    Ok(vec![
                        fmt_num(x),
                        fmt_num(s.j_exciton(e)? / s.j0()),
                        fmt_num(s.j_residual(e)? / s.xi_mev),
                    ])
                })
                .collect::<Result<Vec<_>>>()
                .tag("spectral")?;
            out.write("spectral.csv", &csv("x,J_over_J0,Jres_over_xi", rows)).tag("cli-config")?;
        }
        Subcommand::Lineardyn => {
            for l in l_values(cfg, &point) {
                let t = Instant::now();
                let p = if l == point.l_nm { point.clone() } else { template.with_l(l).and_then(|t| t.point()).tag("field-profiles")? };
                let wc = match cfg.system.wc {
                    FrequencySetting::Fixed(w) => w,
                    _ => p.omega0_mev,
                };
                let mut prob = LinearDynamicsProblem::new(p.spectral.clone(), wc, cfg.system.gamma_c_mev, cfg.numerics.t_max_ps);
                prob.h_ps = cfg.numerics.h_ps;
                let r = compare_models(&prob).tag("nonmarkovian")?;
                let rows = (0..r.t_ps.len()).map(|i| {
                    vec![fmt_num(r.t_ps[i]), fmt_num(r.exact[i]), fmt_num(r.markov[i]), fmt_num(r.ignored[i])]
                });
                out.write(&format!("lineardyn_L{l}nm.csv"), &csv("t_ps,exact,markov,ignored", rows))
                    .tag("cli-config")?;
                timings.insert(format!("lineardyn_L{l}nm"), t.elapsed().as_secs_f64());
            }
        }
        Subcommand::G2ss => {
            let (wc, wd) = lindblad_frequencies(cfg, &point, &mut timings)?;
            let sys = point.problem().system(wc, wd).tag("spectral")?;
            let r = analyze(&sys, &steady).tag("lindblad")?;
            check(r.trace_error < TRACE_TOL, || format!("steady-state trace error {:e}", r.trace_error)).tag("lindblad")?;
            check(r.min_eigenvalue > -PSD_TOL, || format!("steady state not PSD: {:e}", r.min_eigenvalue)).tag("lindblad")?;
            let v = serde_json::json!({
                "n_cav": r.n_cavity,
                "n_exc": r.n_exciton,
                "g2_0": r.g2_zero,
                "residual": r.residual,
                "Nc": r.nc,
                "Nx": r.nx,
                "wc_mev": wc,
                "wd_mev": wd,
                "gamma_res_mev": sys.gamma_res_mev,
                "trace_error": r.trace_error,
                "min_eigenvalue": r.min_eigenvalue,
                "truncation_converged": r.truncation_converged,
            });
            out.write("g2ss.json", &to_json_string(&v).tag("cli-config")?).tag("cli-config")?;
        }
        Subcommand::G2tau => {
            let (wc, wd) = lindblad_frequencies(cfg, &point, &mut timings)?;
            let sys = point.problem().system(wc, wd).tag("spectral")?;
            let tr = g2_tau(&sys, &steady, cfg.numerics.tau_max_ps, cfg.numerics.n_tau).tag("lindblad")?;
            check(tr.g2.iter().all(|g| *g >= -PSD_TOL), || "negative g2(tau)".into()).tag("lindblad")?;
            let rows = tr.tau_ps.iter().zip(&tr.g2).map(|(t, g)| vec![fmt_num(*t), fmt_num(*g)]);
            out.write("g2tau.csv", &csv("tau_ps,g2", rows)).tag("cli-config")?;
        }
        Subcommand::Optimize => {
            let opt = optimize_g2(&point.problem(), &(&cfg.numerics).into()).tag("blockade")?;
            check(opt.g2_min <= opt.coarse_min, || "refinement worsened the coarse minimum".into()).tag("blockade")?;
            let mut v = serde_json::to_value(&opt).expect("plain record");
            v["g2_min"] = opt.g2_min.into();
            v["n_cav"] = opt.n_cav.into();
            out.write("optimize.json", &to_json_string(&v).tag("cli-config")?).tag("cli-config")?;
        }
        Subcommand::SweepL => {
            let ls = l_values(cfg, &point);
            let res = sweep_l(&template, &ls, &(&cfg.numerics).into()).tag("blockade")?;
            let rows = res.records.iter().map(|r| {
                vec![
                    fmt_num(r.l_nm),
                    fmt_num(r.g0_mev),
                    fmt_num(r.w0p_mev),
                    fmt_num(r.gamma_res_mev),
                    fmt_num(r.gamma_xp_mev),
                    fmt_num(r.optimum.g2_min),
                    fmt_num(r.optimum.wc_mev),
                    fmt_num(r.optimum.wd_mev),
                ]
            });
            out.write("sweep_L.csv", &csv("L_nm,G0_meV,W0p_meV,Gres_meV,gxp_meV,g2min,wc_mev,wd_mev", rows))
                .tag("cli-config")?;
            out.write("sweep_L.json", &to_json_string(&res).tag("cli-config")?).tag("cli-config")?;
        }
        Subcommand::RegimeMap => {
            let ls = l_values(cfg, &point);
            let rows = regime_map(&template, &ls, cfg.numerics.residual_fraction).tag("blockade")?;
            let lines = rows.iter().map(|r| {
                vec![
                    fmt_num(r.l_nm),
                    fmt_num(r.g0_mev),
                    fmt_num(r.w0p_mev),
                    fmt_num(r.gamma_res_mev),
                    fmt_num(r.gamma_xp_mev),
                    r.regime.as_str().to_string(),
                ]
            });
            out.write("regime_map.csv", &csv("L_nm,G0_meV,W0p_meV,Gres_meV,gxp_meV,regime", lines))
                .tag("cli-config")?;
        }
    }

    timings.insert("total".into(), start.elapsed().as_secs_f64());
    let manifest = RunManifest {
        tool: "rcpolariton",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: cmd,
        config: cfg.clone(),
        derived: Some(point),
        calibration: template.calibration,
        outputs: out.files.clone(),
        timings_s: timings,
    };
    let name = format!("manifest_{}.json", cmd.name());
    let path = out.dir.join(&name);
    let text = to_json_string(&manifest).tag("cli-config")?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e)).tag("cli-config")?;
    Ok(manifest)
}
