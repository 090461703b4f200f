use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_curl-dg"))
}

fn write_config(dir: &std::path::Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn eoc_writes_csv_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"exp2\"\neps = [1e-9]\nlevels = [4, 8]\n");
    let out = dir.path().join("out");
    let status = bin()
        .args(["eoc", "--config"])
        .arg(&cfg)
        .args(["--seed", "17", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let stdout = String::from_utf8(status.stdout).unwrap();
    assert!(stdout.contains("eoc_energy"));
    let csv = fs::read_to_string(out.join("eoc_exp2_eps1e-9.csv")).unwrap();
    assert!(csv.starts_with("h,dofs,energy,energy_d,energy_rc,l2,eoc_energy,eoc_l2"));
    assert!(fs::read_to_string(out.join("run.txt")).unwrap().contains("seed=17"));
}

#[test]
fn run_dumps_fields_without_exact_solution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"exp5\"\neps = [1e-9]\nlevels = [4]\n[output]\nvtk = true\ngrid = 4\n");
    let out = dir.path().join("out");
    let status = bin().arg("run").arg("--config").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    assert!(out.join("field_exp5_eps1e-9.csv").exists());
    assert!(out.join("field_exp5_eps1e-9.vtk").exists());
    let stats = fs::read_to_string(out.join("stats_exp5_eps1e-9.csv")).unwrap();
    assert!(stats.starts_with("h,dofs,linf,jump_norm,tv_beta"));
}

#[test]
fn verify_passes_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = \"exp2\"\neps = [1e-9]\nlevels = [4]\n[verify]\ntrials = 50\ninf_sup_trials = 5\ninf_sup_levels = [2, 4]\n",
    );
    let mut reports = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("v{run}"));
        let status = bin().arg("verify").arg("--config").arg(&cfg).args(["--seed", "5", "--out"]).arg(&out).status().unwrap();
        assert!(status.success());
        reports.push(fs::read_to_string(out.join("verify.txt")).unwrap());
    }
    assert!(reports[0].contains("identities=pass"));
    let identity_lines = |r: &str| r.lines().filter(|l| l.starts_with("identity.")).map(String::from).collect::<Vec<_>>();
    assert_eq!(identity_lines(&reports[0]), identity_lines(&reports[1]));
}

#[test]
fn bad_config_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"exp7\"\neps = [1.0]\nlevels = [2]\n");
    let out = bin().arg("run").arg("--config").arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown experiment"));
}
