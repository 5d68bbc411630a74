use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/desk")
        .join(name)
}

/// A small scenario on the desk network, written into `dir`.
fn small_config(dir: &Path, extra: &str) -> PathBuf {
    let text = format!(
        "network_nodes = {}\nnetwork_links = {}\nbackground_volumes = {}\n\
         passenger_profile = {}\nparcel_profile = {}\ndepots = {}\n\
         strategy = SHR_IDL\nfleet_size = 20\npassenger_total = 300\nparcel_total = 40\n\
         seeds = 1,2,3\niterations = 1\n{extra}",
        fixture("nodes.csv").display(),
        fixture("links.csv").display(),
        fixture("background.csv").display(),
        fixture("passenger_profile.csv").display(),
        fixture("parcel_profile.csv").display(),
        fixture("depots.csv").display(),
    );
    let path = dir.join("small.conf");
    fs::write(&path, text).unwrap();
    path
}

fn cargohitch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cargohitch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn manifest(dir: &Path) -> Vec<(String, String, u64)> {
    let mut rdr = csv::Reader::from_path(dir.join("manifest.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["path", "sha256", "bytes"]);
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_owned(), r[1].to_owned(), r[2].parse().unwrap())
        })
        .collect()
}

#[test]
fn validate_summarises_the_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = small_config(tmp.path(), "");
    let out = cargohitch(&["validate", s(&conf)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.starts_with("ok: 100 nodes, 360 links, 300 passenger and 40 parcel requests, 2 depot(s)"),
        "{text}"
    );
}

#[test]
fn missing_network_fails_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = small_config(tmp.path(), "");
    let text = fs::read_to_string(&conf)
        .unwrap()
        .replace(s(&fixture("links.csv")), "/nonexistent/links.csv");
    fs::write(&conf, text).unwrap();
    let target = tmp.path().join("out");
    let out = cargohitch(&["simulate", s(&conf), "--out", s(&target)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
    assert!(!target.exists());
    assert!(!tmp.path().join("out.partial").exists());
}

#[test]
fn unknown_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = small_config(tmp.path(), "fleet_sise = 3\n");
    let out = cargohitch(&["validate", s(&conf)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("fleet_sise"));
}

#[test]
fn simulate_writes_checksummed_seed_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = small_config(tmp.path(), "");
    let target = tmp.path().join("run");
    let out = cargohitch(&["simulate", s(&conf), "--out", s(&target)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    for d in ["seed_1", "seed_2", "seed_3", "average"] {
        assert!(target.join(d).join("metrics.json").is_file(), "{d}");
    }
    assert!(target.join("seed_2/events.csv").is_file());
    assert!(!target.join("seed_4").exists());

    let entries = manifest(&target);
    assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
    for (path, sum, bytes) in &entries {
        let data = fs::read(target.join(path)).unwrap();
        assert_eq!(data.len() as u64, *bytes, "{path}");
        assert_eq!(hex::encode(Sha256::digest(&data)), *sum, "{path}");
    }

    // a second run needs --force, and --force replaces the old results
    let again = cargohitch(&["simulate", s(&conf), "--out", s(&target), "--seed-list", "5"]);
    assert!(!again.status.success());
    assert!(target.join("seed_1").exists());
    let forced = cargohitch(&["simulate", s(&conf), "--out", s(&target), "--seed-list", "5", "--force"]);
    assert!(forced.status.success());
    assert!(target.join("seed_5").exists());
    assert!(!target.join("seed_1").exists());
}

#[test]
fn force_leaves_foreign_directories_alone() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = small_config(tmp.path(), "");
    let target = tmp.path().join("precious");
    fs::create_dir(&target).unwrap();
    fs::write(target.join("thesis.tex"), "do not delete").unwrap();
    let out = cargohitch(&["simulate", s(&conf), "--out", s(&target), "--force"]);
    assert!(!out.status.success());
    assert!(target.join("thesis.tex").exists());
}

#[test]
fn compare_tabulates_every_strategy() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = small_config(tmp.path(), "");
    let target = tmp.path().join("cmp");
    let args = [
        "compare",
        s(&conf),
        "--out",
        s(&target),
        "--seed-list",
        "1",
        "--strategies",
        "BASE,SHR_RIDL",
    ];
    let out = cargohitch(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(target.join("BASE/seed_1/metrics.json").is_file());
    assert!(target.join("SHR_RIDL/average/metrics.json").is_file());
    assert!(!target.join("SHR").exists());
    for t in 1..=4 {
        let table = fs::read_to_string(target.join(format!("compare/table{t}.csv"))).unwrap();
        let header = table.lines().next().unwrap();
        assert!(header.contains("BASE") && header.contains("SHR_RIDL"), "{header}");
        assert!(table.lines().count() > 1);
    }
}

#[test]
fn gen_demand_writes_every_request() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = small_config(tmp.path(), "");
    let file = tmp.path().join("demand/requests.csv");
    let out = cargohitch(&["gen-demand", s(&conf), "--out", s(&file)]);
    assert!(out.status.success());
    let rows = csv::Reader::from_path(&file).unwrap().records().count();
    assert_eq!(rows, 340);
    assert!(!cargohitch(&["gen-demand", s(&conf), "--out", s(&file)])
        .status
        .success());
    assert!(cargohitch(&["gen-demand", s(&conf), "--out", s(&file), "--force"])
        .status
        .success());
}
