use std::path::Path;
use std::process::{Command, Output};

fn efqse(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_efqse"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn fixtures_then_pipeline_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = efqse(&["fixtures", "--out", "fx"], d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(d.join("fx/butadiene_pt2.toml").exists());

    let run = |out: &str| {
        let o = efqse(&["--jobs", "1", "run", "-c", "fx/butadiene_pt2.toml", "--samples", "3", "--out", out], d);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        stdout(&o)
    };
    let (a, b) = (run("o1"), run("o2"));
    assert_eq!(a, b);
    let first = std::fs::read(d.join("o1/report.json")).unwrap();
    assert_eq!(first, std::fs::read(d.join("o2/report.json")).unwrap());
    for f in ["timings.json", "vqe_trace.csv"] {
        assert!(d.join("o1").join(f).exists(), "{f}");
    }
    let report: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert!(report["energies"]["ef_qse_pt2"].as_f64().unwrap() < report["energies"]["ef_qse"].as_f64().unwrap());
}

#[test]
fn resources_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = efqse(&["resources", "--qubits", "2,4,6,8"], dir.path());
    assert!(o.status.success());
    let rows: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let circuits: Vec<u64> = rows.as_array().unwrap().iter().map(|r| r["n_tomography_circuits"].as_u64().unwrap()).collect();
    assert_eq!(circuits, [54, 486, 4374, 39366]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(efqse(&["run", "--fixture", "no_such_system"], d).status.code(), Some(2));
    assert_eq!(efqse(&["run"], d).status.code(), Some(2));
    assert_eq!(efqse(&["bogus-subcommand"], d).status.code(), Some(2));
    assert_eq!(efqse(&["pt2", "--fixture", "ethylene_2e2o"], d).status.code(), Some(2));
    std::fs::write(d.join("bad.toml"), "[system]\nfixture = \"ethylene_2e2o\"\nunknown_key = 1\n").unwrap();
    assert_eq!(efqse(&["run", "-c", "bad.toml"], d).status.code(), Some(2));
    std::fs::write(d.join("broken.fcidump"), "&FCI NORB=2,NELEC=2,MS2=0,\n&END\n 1.0 1 1 0 0\n").unwrap();
    assert_ne!(efqse(&["run", "--fcidump", "broken.fcidump"], d).status.code(), Some(0));
}

#[test]
fn exact_qse_reaches_fci_on_two_orbitals() {
    let dir = tempfile::tempdir().unwrap();
    let o = efqse(&["qse", "--fixture", "ethylene_2e2o", "--exact"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let e = &r["energies"];
    assert!((e["ef_qse"].as_f64().unwrap() - e["fci"].as_f64().unwrap()).abs() < 1e-8);
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = efqse(
        &["sweep", "--fixture", "ethylene_2e2o", "--shot-grid", "64,256,1024", "--seeds", "3", "--out", "sw"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    assert!(csv.starts_with("prep_label,shots,seed,r_weighted"));
    // 6 preparations x 3 shot counts x 3 seeds
    assert_eq!(csv.lines().count(), 1 + 6 * 3 * 3);
    assert!(dir.path().join("sw/sweep_summary.json").exists());
}
