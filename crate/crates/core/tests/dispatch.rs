use std::fs;
use std::path::Path;

use rcpolariton::config::{load_config, RunConfig};
use rcpolariton::dispatch::{dispatch, Subcommand};
use rcpolariton::Error;

fn config(name: &str) -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    load_config(path).unwrap()
}

fn column(csv: &str, idx: usize) -> Vec<String> {
    csv.lines().skip(1).map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn coupling_on_linear_dynamics_config_gives_22_mev() {
    let dir = tempfile::tempdir().unwrap();
    let m = dispatch(&config("linear_dynamics.toml"), Subcommand::Coupling, Some(dir.path())).unwrap();
    assert_eq!(m.outputs, vec!["coupling.json"]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("coupling.json")).unwrap()).unwrap();
    let g0 = v["g0_mev"].as_f64().unwrap();
    assert!((g0 / 22.0 - 1.0).abs() < 0.02, "{g0}");
    assert!(dir.path().join("manifest_coupling.json").exists());
}

#[test]
fn regime_map_has_constant_coupling_column() {
    let dir = tempfile::tempdir().unwrap();
    dispatch(&config("regime_map.toml"), Subcommand::RegimeMap, Some(dir.path())).unwrap();
    let text = fs::read_to_string(dir.path().join("regime_map.csv")).unwrap();
    assert!(text.starts_with("L_nm,G0_meV,W0p_meV,Gres_meV,gxp_meV,regime\n"));
    let g0 = column(&text, 1);
    assert_eq!(g0.len(), 16);
    assert!(g0.iter().all(|g| g == &g0[0]), "{g0:?}");
    let regimes = column(&text, 5);
    assert_eq!(regimes.first().map(String::as_str), Some("residual_dominated"));
    assert_eq!(regimes.last().map(String::as_str), Some("linear"));
    // W₀′ ∝ L⁻²
    let l: Vec<f64> = column(&text, 0).iter().map(|s| s.parse().unwrap()).collect();
    let w: Vec<f64> = column(&text, 2).iter().map(|s| s.parse().unwrap()).collect();
    for (li, wi) in l.iter().zip(&w) {
        assert!((wi * li * li / (w[0] * l[0] * l[0]) - 1.0).abs() < 1e-10);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = config("linear_dynamics.toml");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for cmd in [Subcommand::Coupling, Subcommand::Spectral, Subcommand::Lineardyn, Subcommand::RegimeMap] {
        let ma = dispatch(&cfg, cmd, Some(a.path())).unwrap();
        let mb = dispatch(&cfg, cmd, Some(b.path())).unwrap();
        assert_eq!(ma.outputs, mb.outputs);
        for f in &ma.outputs {
            assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
        }
    }
}

#[test]
fn every_output_is_listed_in_exactly_one_manifest() {
    let cfg = config("linear_dynamics.toml");
    let dir = tempfile::tempdir().unwrap();
    let mut listed = Vec::new();
    for cmd in [Subcommand::Coupling, Subcommand::Spectral, Subcommand::Lineardyn] {
        listed.extend(dispatch(&cfg, cmd, Some(dir.path())).unwrap().outputs);
    }
    let mut on_disk: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| !n.starts_with("manifest_"))
        .collect();
    on_disk.sort();
    listed.sort();
    assert_eq!(listed, on_disk);
    assert_eq!(listed.iter().filter(|f| f.starts_with("lineardyn_L")).count(), 4);
}

#[test]
fn lineardyn_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    dispatch(&config("linear_dynamics.toml"), Subcommand::Lineardyn, Some(dir.path())).unwrap();
    let text = fs::read_to_string(dir.path().join("lineardyn_L4nm.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t_ps,exact,markov,ignored"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(first, vec![0.0, 1.0, 1.0, 1.0]);
    // every number carries 12 significant digits
    assert!(text.lines().skip(1).flat_map(|l| l.split(',')).all(|s| s.split('e').next().unwrap().replace(['-', '.'], "").len() == 12));
}

#[test]
fn g2ss_at_fixed_frequencies() {
    let text = "[profile]\nL = 6.9\nLz = 50.0\nrho = 0.75\n[system]\ngamma_c_mev = 25.0\nF_mev = 1.5\nT_K = 4.0\n\
                G0_mev = 57.5\nwc_mev = 1785.0\nwd_mev = 2035.0\n";
    let cfg = RunConfig::parse_str(text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    dispatch(&cfg, Subcommand::G2ss, Some(dir.path())).unwrap();
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("g2ss.json")).unwrap()).unwrap();
    let g2 = v["g2_0"].as_f64().unwrap();
    assert!(g2 > 0.0 && g2 < 1.0, "{g2}");
    assert!(v["trace_error"].as_f64().unwrap() < 1e-10);
}

#[test]
fn resource_errors_carry_module_provenance() {
    let text = "[profile]\nL = 6.9\nLz = 50.0\n[system]\nwc_mev = 1900.0\nwd_mev = 2030.0\n\
                [numerics]\nmax_superop_dim = 100\n";
    let cfg = RunConfig::parse_str(text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = dispatch(&cfg, Subcommand::G2ss, Some(dir.path())).unwrap_err();
    assert_eq!(err.module, "lindblad");
    assert!(matches!(err.error, Error::Resource(_)));
    let json = err.to_json();
    assert_eq!(json["module"], "lindblad");
    assert_eq!(json["error"], "resource");
    assert!(!dir.path().join("manifest_g2ss.json").exists());
}

#[test]
fn load_config_reports_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    fs::write(&p, "[profile]\nL = -3\nLz = 50\n").unwrap();
    assert!(matches!(load_config(&p), Err(Error::Validation { key, .. }) if key == "L"));
    fs::write(&p, "[profile]\nL = 3\nLz = 50\n\n[system]\ngamma_cavity = 5\n").unwrap();
    assert!(matches!(load_config(&p), Err(Error::UnknownKey { suggestion: Some(s), .. }) if s == "gamma_c_mev"));
    fs::write(&p, "[profile]\nL = 3\nLz = [\n").unwrap();
    assert!(matches!(load_config(&p), Err(Error::Parse { .. })));
    assert!(matches!(load_config(dir.path().join("missing.toml")), Err(Error::Io { .. })));
}

#[test]
fn shipped_configs_load() {
    for name in ["regime_map.toml", "linear_dynamics.toml", "blockade_300K.toml", "blockade_4K.toml"] {
        config(name);
    }
}
