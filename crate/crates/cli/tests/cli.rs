use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_noisy-clifford"));
    c.env_remove("NOISY_CLIFFORD_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn value(out: &Output) -> f64 {
    let s = String::from_utf8_lossy(&out.stdout);
    s.trim().parse().unwrap_or_else(|_| panic!("not a number: {s:?}"))
}

#[test]
fn avg_aotoc_rz_half_pi() {
    let out = run(&["avg-aotoc", "--noise", "rz", "--theta", "1.5708", "--k", "1"]);
    assert!(out.status.success());
    assert!((value(&out) - 0.5).abs() < 1e-9);
    let exact = run(&["avg-aotoc", "--noise", "rz", "--theta", &std::f64::consts::FRAC_PI_2.to_string()]);
    assert_eq!(String::from_utf8_lossy(&exact.stdout).trim(), "0.5");
}

#[test]
fn avg_apep_zero_angle() {
    let out = run(&["avg-apep", "--noise", "rz", "--theta", "0", "--k", "3"]);
    assert!(out.status.success());
    assert_eq!(value(&out), 0.0);
}

#[test]
fn clifford_capacity_is_one() {
    let out = run(&["capacity", "--gate", "clifford-s"]);
    assert!(out.status.success());
    assert!((value(&out) - 1.0).abs() < 1e-9);
}

#[test]
fn finite_l_and_haar() {
    let out = run(&["avg-aotoc", "--noise", "depolarizing", "--p", "0.5", "--k", "2", "--L", "4"]);
    assert!(value(&out).abs() < 1e-10);
    let out = run(&["haar-avg", "--noise", "depolarizing", "--p", "1"]);
    assert!((value(&out) - 0.1875).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["avg-aotoc", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["avg-aotoc", "--L", "5"]).status.code(), Some(2));
    assert_eq!(run(&["avg-aotoc", "--noise", "depolarizing", "--p", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["avg-apep", "--noise", "depolarizing", "--p", "0.5"]).status.code(), Some(2));
    let capped = run(&["aotoc", "--L", "9"]);
    assert_eq!(capped.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&capped.stderr).contains("cap_exceeded"));
}

#[test]
fn kraus_file_noise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("amp.txt");
    let g: f64 = 0.3;
    let text = format!(
        "dims 2\n1,0 0,0\n0,0 {},0\n\ndims 2\n0,0 {},0\n0,0 0,0\n",
        (1.0 - g).sqrt(),
        g.sqrt()
    );
    std::fs::write(&path, text).unwrap();
    let out = run(&["haar-avg", "--noise", "kraus-file", "--kraus-file", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(value(&out) > 0.0);
}

#[test]
fn out_dir_gets_result_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .env("NOISY_CLIFFORD_OUT", dir.path())
        .args(["apep", "--noise", "rz", "--theta", "0.4", "--L", "4", "--seed", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "apep");
    assert!(dir.path().join("result.json").exists());
}

#[test]
fn sweep_fit_is_reproducible() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    for d in [&d1, &d2] {
        let out = run(&[
            "sweep-fit",
            "--n-unitaries",
            "12",
            "--k-max",
            "4",
            "--resamples",
            "10",
            "--seed",
            "5",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["sweep.csv", "fit.json", "bootstrap.csv", "plot_sweep.csv"] {
        let a = std::fs::read(d1.path().join(f)).unwrap();
        let b = std::fs::read(d2.path().join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
    let sweep = std::fs::read_to_string(d1.path().join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 1 + 12 * 4);
}

#[test]
fn typicality_with_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"seed": 3, "typicality_apep": {"l_min": 3, "l_max": 4, "n_u": 2, "n_c": 3, "k_max": 1},
            "typicality_aotoc": {"l_min": 4, "l_max": 5, "n_psi": 2, "n_c": 3, "n_v": 2, "k_max": 1}}"#,
    )
    .unwrap();
    let out = run(&["typicality", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let apep = std::fs::read_to_string(dir.path().join("typicality_apep.csv")).unwrap();
    assert!(apep.starts_with("L,k,mean_variance,stderr,n_unitaries,variances\n"));
    assert_eq!(apep.lines().count(), 3);
    assert!(dir.path().join("typicality_aotoc.csv").exists());
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"sede": 1}"#).unwrap();
    assert_ne!(run(&["typicality", "--config", bad.to_str().unwrap()]).status.code(), Some(0));
}

#[test]
fn selftest_passes() {
    let out = run(&["selftest"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(!String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}
