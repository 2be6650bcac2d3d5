use std::path::Path;
use std::process::{Command, Output};

fn specshare(args: &[&str], config: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_specshare"));
    for (k, _) in std::env::vars() {
        if k.starts_with("SPECSHARE_") {
            cmd.env_remove(k);
        }
    }
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn rate_preset_writes_csv_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = specshare(&["--experiment", "fig4", "--replications", "50", "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("pathloss_alpha = 4.0"), "effective config is echoed");
    let csv = std::fs::read_to_string(out.join("fig4.csv")).unwrap();
    assert!(csv.starts_with("sweep_param,sweep_value,metric,mean,stderr,n\n"));
    assert!(csv.contains("interference_threshold_dbm,-110,buyer_rate,"));
    assert!(out.join("fig4_buyer_rate.svg").exists());
    assert!(out.join("fig4_config.toml").exists());
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str, seed: &str| {
        let out = dir.path().join(sub);
        let o = specshare(&["--experiment", "fig10", "--replications", "40", "--seed", seed, "--out", out.to_str().unwrap()], None);
        assert!(o.status.success());
        std::fs::read(out.join("fig10.csv")).unwrap()
    };
    let a = run("a", "3");
    assert_eq!(a, run("b", "3"));
    assert_ne!(a, run("c", "4"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[network]\npathloss_alpha = 2.0\n");
    let o = specshare(&["--experiment", "fig4"], Some(&cfg));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("pathloss_alpha must exceed 2"));

    let o = specshare(&["--experiment", "fig99"], None);
    assert_eq!(o.status.code(), Some(2));

    let o = specshare(&["--replications", "0"], None);
    assert_eq!(o.status.code(), Some(2));

    let o = specshare(&["--experiment", "fig4"], Some(&dir.path().join("missing.toml")));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn infeasible_everywhere_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[cssca]\niterations = 30\ntrace_samples = 0\n\
         [experiment]\nname = \"custom\"\nsweep = \"max_seller_power_dbm\"\ngrid = [-60.0]\nvalidation_samples = 200\n",
    );
    let out = dir.path().join("out");
    let o = specshare(&["--replications", "1", "--out", out.to_str().unwrap()], Some(&cfg));
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("custom.csv")).unwrap();
    assert!(csv.contains("max_seller_power_dbm,-60,infeasible,1,0,1"), "{csv}");
}

#[test]
fn environment_overrides_config_and_flags_override_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_specshare"))
        .env("SPECSHARE_EXPERIMENT", "fig10")
        .env("SPECSHARE_REPLICATIONS", "500")
        .env("SPECSHARE_SEED", "11")
        .args(["--replications", "30", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("name = \"fig10\""));
    assert!(stdout.contains("seed = 11"));
    assert!(stdout.contains("replications = 30"));
    let csv = std::fs::read_to_string(out.join("fig10.csv")).unwrap();
    assert!(csv.lines().any(|l| l.ends_with(",30")));
}

#[test]
fn fast_flag_uses_one_hundred_replications() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = specshare(&["--experiment", "fig10", "--fast", "--out", out.to_str().unwrap()], None);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("replications = 100"));
}
