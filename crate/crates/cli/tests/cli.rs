use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn latdepth(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latdepth"))
        .args(args)
        .current_dir(dir)
        .env_remove("LATDEPTH_CONFIG")
        .env_remove("LATDEPTH_OUT")
        .env_remove("LATDEPTH_SEED")
        .env_remove("LATDEPTH_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Data rows of a CSV, header first, comment lines dropped.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(table: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = table[0].iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    table[1..].iter().map(|r| r[i].parse().unwrap()).collect()
}

fn write_config(dir: &TempDir, body: &str) -> String {
    let path = dir.path().join("run.toml");
    fs::write(&path, format!("config_version = 1\n{body}")).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL_PROPAGATOR: &str = "[propagator]\nsubsteps_per_2pi = 64\ncheck_convergence = false\n";

#[test]
fn steady_defaults_with_footer() {
    let dir = TempDir::new().unwrap();
    let text = stdout(&latdepth(dir.path(), &["steady"]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "rho,p0_steady,p0_steady_transferred");
    assert_eq!(lines.len(), 1 + 3 + 2);
    assert!(lines[4].starts_with("# units:"));
    assert!(lines[5].starts_with("# latdepth "));
    assert!(lines[5].contains("config_sha256="));
    assert!(lines[5].ends_with(" seed=0"));
    let t = rows(&text);
    for (p, q) in column(&t, "p0_steady").iter().zip(column(&t, "p0_steady_transferred")) {
        assert!(*p > 0.5 && *p < 1.0);
        assert!((p + q - 1.0).abs() < 1e-15);
    }
}

#[test]
fn empty_time_grid_gives_header_only() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, &format!("{SMALL_PROPAGATOR}[evolve]\nn_states = 64\ntau = {{ stop = 1.0, count = 0 }}\n"));
    let text = stdout(&latdepth(dir.path(), &["--config", &cfg, "evolve"]));
    assert_eq!(rows(&text).len(), 1);
    assert!(text.lines().next().unwrap().starts_with("v_eff,tau,phi,"));
}

#[test]
fn evolve_tracks_two_state_curve_and_betascan_slice_agrees() {
    let dir = TempDir::new().unwrap();
    let body = format!(
        "{SMALL_PROPAGATOR}[evolve]\nv_eff = [0.05]\nn_states = 64\ntau = {{ stop = 60.0, count = 31 }}\n\
         [betascan]\nv_eff = 0.05\nslices = [0.5, 0.25]\nn_states = 64\ntau = {{ stop = 60.0, count = 31 }}\n"
    );
    let cfg = write_config(&dir, &body);
    let ev = rows(&stdout(&latdepth(dir.path(), &["--config", &cfg, "evolve"])));
    let p0 = column(&ev, "p_0");
    let two = column(&ev, "p0_two_state");
    let pm1 = column(&ev, "p_m1");
    for i in 0..p0.len() {
        assert!((p0[i] - two[i]).abs() < 0.01, "row {i}");
        assert!(p0[i] + pm1[i] <= 1.0 + 1e-12);
    }
    let scan = rows(&stdout(&latdepth(dir.path(), &["--config", &cfg, "betascan"])));
    let betas = column(&scan, "beta");
    let sp0 = column(&scan, "p0");
    let at_half: Vec<f64> = betas.iter().zip(&sp0).filter(|(b, _)| **b == 0.5).map(|(_, p)| *p).collect();
    assert_eq!(at_half.len(), p0.len());
    for (a, b) in at_half.iter().zip(&p0) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn thermal_without_ensemble() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "[thermal]\nv_eff = [0.1]\nw = [0.0125]\nensemble = false\nphi = { stop = 12.0, count = 25 }\n",
    );
    let text = stdout(&latdepth(dir.path(), &["--config", &cfg, "thermal"]));
    let t = rows(&text);
    assert_eq!(t.len(), 26);
    let ens = t[0].iter().position(|h| h == "p0_ensemble").unwrap();
    assert!(t[1..].iter().all(|r| r[ens].is_empty()));
    let steady = column(&t, "p0_steady");
    assert!(steady.iter().all(|s| *s == steady[0]));
    let quad = column(&t, "p0_quadrature");
    assert!((quad[0] - 1.0).abs() < 1e-12);
    assert!(quad.iter().all(|p| (0.0..=1.0).contains(p)));
}

#[test]
fn synth_then_fit_recovers_parameters() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "seed = 11\n[synth]\nv_eff = 0.05\nw = 0.01\nnoise = \"gaussian\"\nnoise_scale = 1e-12\n\
         tau = { stop = 4000.0, count = 400 }\n[fit]\ndata = \"data.csv\"\n",
    );
    stdout(&latdepth(dir.path(), &["--config", &cfg, "--out", "data.csv", "synth"]));
    let text = stdout(&latdepth(dir.path(), &["--config", &cfg, "fit"]));
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    let v = json["result"]["v_eff_hat"].as_f64().unwrap();
    let w = json["result"]["w_hat"].as_f64().unwrap();
    assert!((v / 0.05 - 1.0).abs() < 1e-5, "{v}");
    assert!((w / 0.01 - 1.0).abs() < 1e-5, "{w}");
    assert_eq!(json["seed"].as_u64(), Some(11));
    assert_eq!(json["result"]["model_inadequate"].as_bool(), Some(false));
    assert_eq!(json["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn seeded_synth_is_bit_exact_and_seed_sensitive() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "[synth]\nnoise = \"shot_noise\"\nnoise_scale = 500.0\n");
    let a = stdout(&latdepth(dir.path(), &["--config", &cfg, "--seed", "5", "synth"]));
    let b = stdout(&latdepth(dir.path(), &["--config", &cfg, "--seed", "5", "synth"]));
    let c = stdout(&latdepth(dir.path(), &["--config", &cfg, "--seed", "6", "synth"]));
    assert_eq!(a, b);
    assert_ne!(rows(&a), rows(&c));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        &format!(
            "{SMALL_PROPAGATOR}[thermal]\nv_eff = [0.1]\nw = [0.0125]\nn_beta = 41\nn_states = 64\n\
             phi = {{ stop = 6.0, count = 7 }}\n"
        ),
    );
    let one = stdout(&latdepth(dir.path(), &["--config", &cfg, "--threads", "1", "thermal"]));
    let three = stdout(&latdepth(dir.path(), &["--config", &cfg, "--threads", "3", "thermal"]));
    assert_eq!(one, three);
}

#[test]
fn environment_overrides_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "[steady]\nrho = [0.5]\n");
    let out = Command::new(env!("CARGO_BIN_EXE_latdepth"))
        .arg("steady")
        .current_dir(dir.path())
        .env("LATDEPTH_CONFIG", &cfg)
        .env("LATDEPTH_OUT", "steady.csv")
        .env("LATDEPTH_SEED", "42")
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("steady.csv")).unwrap();
    assert_eq!(rows(&text).len(), 2);
    assert!(text.trim_end().ends_with("seed=42"));
}

#[test]
fn config_hash_tracks_effective_config() {
    let dir = TempDir::new().unwrap();
    let footer = |args: &[&str]| stdout(&latdepth(dir.path(), args)).lines().last().unwrap().to_string();
    let plain = footer(&["steady"]);
    let cfg = write_config(&dir, "");
    assert_eq!(footer(&["--config", &cfg, "steady"]), plain);
    assert_ne!(footer(&["--seed", "3", "steady"]), plain);
}

#[test]
fn bad_configuration_exits_2() {
    let dir = TempDir::new().unwrap();
    for body in [
        "[steady]\nrho = [-1.0]\n",
        "[steady]\nunknown_key = 1\n",
        "config_version = 2\n",
    ] {
        let path = dir.path().join("bad.toml");
        let text = if body.starts_with("config_version") {
            body.to_string()
        } else {
            format!("config_version = 1\n{body}")
        };
        fs::write(&path, text).unwrap();
        let out = latdepth(dir.path(), &["--config", path.to_str().unwrap(), "steady"]);
        assert_eq!(out.status.code(), Some(2), "{body}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = latdepth(dir.path(), &["--config", "missing.toml", "steady"]);
    assert_eq!(out.status.code(), Some(2));
    let out = latdepth(dir.path(), &["fit"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_and_unphysical_data() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "[fit]\ndata = \"data.csv\"\n");
    fs::write(dir.path().join("data.csv"), "tau,p0\n0,1\n").unwrap();
    assert_eq!(latdepth(dir.path(), &["--config", &cfg, "fit"]).status.code(), Some(2));
    fs::write(dir.path().join("data.csv"), "tau,p0,sigma\n0,abc,0.1\n").unwrap();
    assert_eq!(latdepth(dir.path(), &["--config", &cfg, "fit"]).status.code(), Some(2));
    fs::write(dir.path().join("data.csv"), "tau,p0,sigma\n0,1.5,0.1\n1,0.5,0.1\n").unwrap();
    assert_eq!(latdepth(dir.path(), &["--config", &cfg, "fit"]).status.code(), Some(4));
}
