use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use catqutrit_cli::emit::{sha256_hex, Manifest};
use catqutrit_cli::{ExperimentConfig, Kind};
use serde_json::Value;
use tempfile::TempDir;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn catqutrit(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_catqutrit"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn run_kind(kind: &str, cfg: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = config(cfg);
    let mut args = vec![kind, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    catqutrit(&args, &[])
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_ok(o: &Output) {
    assert!(o.status.success(), "status {:?}\nstdout:\n{}\nstderr:\n{}", o.status, String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn fig3_writes_fidelity_tables_and_steady_values() {
    let dir = TempDir::new().unwrap();
    let o = run_kind("fig3", "fig3.toml", dir.path(), &[]);
    assert_ok(&o);
    for name in ["fidelity_from_0.csv", "fidelity_from_1.csv"] {
        let (header, rows) = read_csv(&dir.path().join(name));
        assert_eq!(header, ["t", "F0", "F1", "trace", "min_eig"]);
        assert_eq!(rows.len(), 201);
        assert_eq!(rows[0][0], 0.0);
        assert_eq!(rows[200][0], 2000.0);
        for r in &rows {
            assert!((r[3] - 1.0).abs() < 1e-8);
            assert!(r[1] * r[1] + r[2] * r[2] <= 1.0 + 1e-9);
        }
    }
    let (_, from0) = read_csv(&dir.path().join("fidelity_from_0.csv"));
    assert_eq!(from0[0][1], 1.0);
    let report = json(&dir.path().join("fig3.json"));
    let f0 = report["steady_fidelities"]["F0"].as_f64().unwrap();
    let f1 = report["steady_fidelities"]["F1"].as_f64().unwrap();
    assert!((f0 - 0.0157).abs() < 5e-3 && (f1 - 0.5166).abs() < 5e-3, "{report}");
    // The last grid row has relaxed onto the reported steady state.
    assert!((from0[200][1] - f0).abs() < 1e-6 && (from0[200][2] - f1).abs() < 1e-6);
}

#[test]
fn steady_kernel_dimension_is_n_plus_3() {
    let dir = TempDir::new().unwrap();
    let o = run_kind("steady", "steady.toml", dir.path(), &[]);
    assert_ok(&o);
    let report = json(&dir.path().join("steady.json"));
    assert_eq!(report["dimension"].as_u64(), Some(6), "{report}");
    let o = run_kind("steady", "steady.toml", dir.path(), &["--set", "n=4"]);
    assert_ok(&o);
    assert_eq!(json(&dir.path().join("steady.json"))["dimension"].as_u64(), Some(7));
}

#[test]
fn params_map_without_drive_has_zero_alpha0() {
    let dir = TempDir::new().unwrap();
    let o = run_kind("params-map", "params_map.toml", dir.path(), &["--set", "physical.drive=0"]);
    assert_ok(&o);
    let report = json(&dir.path().join("params_map.json"));
    let a = &report["effective"]["alpha0"];
    assert_eq!((a["re"].as_f64(), a["im"].as_f64()), (Some(0.0), Some(0.0)), "{report}");
}

#[test]
fn rerun_is_byte_identical_apart_from_wall_time() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        assert_ok(&run_kind("gates", "gates.toml", d.path(), &[]));
    }
    let ma: Manifest = serde_json::from_value(json(&a.path().join("manifest.json"))).unwrap();
    let mb: Manifest = serde_json::from_value(json(&b.path().join("manifest.json"))).unwrap();
    assert_eq!(ma.files.len(), mb.files.len());
    for (x, y) in ma.files.iter().zip(&mb.files) {
        assert_eq!(x.path, y.path);
        if x.path != "metadata.json" {
            assert_eq!(x.sha256, y.sha256, "{} differs between runs", x.path);
        }
    }
}

#[test]
fn manifest_lists_every_file_with_its_hash() {
    let dir = TempDir::new().unwrap();
    assert_ok(&run_kind("evolve", "evolve.toml", dir.path(), &[]));
    let m: Manifest = serde_json::from_value(json(&dir.path().join("manifest.json"))).unwrap();
    assert_eq!(m.kind, "evolve");
    assert!(m.passed);
    let mut listed: Vec<_> = m.files.iter().map(|f| f.path.clone()).collect();
    for f in &m.files {
        let bytes = fs::read(dir.path().join(&f.path)).unwrap();
        assert!(!bytes.is_empty());
        assert_eq!(bytes.len() as u64, f.bytes);
        assert_eq!(sha256_hex(&bytes), f.sha256);
    }
    listed.push("manifest.json".into());
    listed.sort();
    let mut on_disk: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    on_disk.sort();
    assert_eq!(listed, on_disk);
}

#[test]
fn metadata_config_round_trips() {
    let dir = TempDir::new().unwrap();
    assert_ok(&run_kind("evolve", "evolve.toml", dir.path(), &["--seed", "11", "--set", "effective.kappa1=2.5"]));
    let meta = json(&dir.path().join("metadata.json"));
    let cfg: ExperimentConfig = serde_json::from_value(meta["config"].clone()).unwrap();
    assert_eq!(cfg.kind, Kind::Evolve);
    assert_eq!(cfg.seed, Some(11));
    assert_eq!(cfg.effective.unwrap().kappa1, 2.5);
    let again = catqutrit_cli::config::parse_config(&toml::to_string(&cfg).unwrap(), Some(Kind::Evolve), &[], None).unwrap();
    assert_eq!(again, cfg);
    assert_eq!(meta["config_hash"].as_str().unwrap(), catqutrit_cli::emit::config_hash(&cfg));
}

#[test]
fn failed_check_gives_exit_code_1_and_still_writes_outputs() {
    let dir = TempDir::new().unwrap();
    // A reference far from the true steady fidelities.
    let o = run_kind("fig3", "fig3.toml", dir.path(), &["--set", "time.t_max=400", "--set", "fig3.reference_tol=1e-9"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL steady_F0_vs_reference"));
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["passed"], Value::Bool(false));
}

#[test]
fn config_errors_give_exit_code_2_and_name_the_field() {
    let dir = TempDir::new().unwrap();
    let o = run_kind("steady", "steady.toml", dir.path(), &["--set", "effective.kappa1=-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kappa1"));
    // Kind in the file disagrees with the subcommand.
    assert_eq!(run_kind("evolve", "steady.toml", dir.path(), &[]).status.code(), Some(2));
    assert_eq!(run_kind("steady", "missing.toml", dir.path(), &[]).status.code(), Some(2));
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none(), "nothing written on config errors");
}

#[test]
fn thread_limit_does_not_change_results() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let cfg = config("fig3.toml");
    let args = |d: &TempDir| -> Vec<String> {
        ["fig3", "--config", cfg.to_str().unwrap(), "--out", d.path().to_str().unwrap(), "--set", "time.t_max=200", "--set", "time.n_points=21"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    };
    let aa = args(&a);
    let bb = args(&b);
    // The short horizon fails the convergence check; only the outputs are compared.
    let oa = catqutrit(&aa.iter().map(String::as_str).collect::<Vec<_>>(), &[("CATQUTRIT_THREADS", "1")]);
    let ob = catqutrit(&bb.iter().map(String::as_str).collect::<Vec<_>>(), &[("CATQUTRIT_THREADS", "4")]);
    assert_eq!(oa.status.code(), ob.status.code());
    assert!(matches!(oa.status.code(), Some(0 | 1)));
    for name in ["fidelity_from_0.csv", "fidelity_from_1.csv", "fig3.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn remaining_kinds_run_from_their_example_configs() {
    let cases: [(&str, &str, &[&str]); 3] = [
        ("two-qutrit-noise", "two_qutrit_noise.toml", &[]),
        ("prepare", "prepare.toml", &[]),
        ("physical-validate", "physical_validate.toml", &["--set", "validation.trajectory=false"]),
    ];
    for (kind, cfg, extra) in cases {
        let dir = TempDir::new().unwrap();
        let o = run_kind(kind, cfg, dir.path(), extra);
        assert_ok(&o);
        assert!(dir.path().join("manifest.json").exists(), "{kind}");
    }
}
