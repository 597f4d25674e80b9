use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn rklfd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rklfd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let (h, rows) = csv_rows(text);
    let k = h.iter().position(|c| c == name).unwrap();
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

#[test]
fn price_fixed_space_rkl() {
    let cfg = config("american_put_fixed_space.json");
    let out = stdout(&rklfd(&["price", "--config", cfg.to_str().unwrap()]));
    let v: Value = serde_json::from_str(&out).unwrap();
    let p = v["prices"][0]["price"].as_f64().unwrap();
    assert!((p - 6.08750997).abs() < 1e-6, "{p}");
    assert!(v["stages_used"].as_array().unwrap().iter().all(|s| s == 9));
    assert!(v["dt_explicit"].as_f64().unwrap() > 0.0);

    let out = stdout(&rklfd(&["price", "--config", cfg.to_str().unwrap(), "--set", "time.steps=20"]));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["stages_used"][0], 47);
}

#[test]
fn price_writes_csv_and_surface() {
    let dir = tempfile::tempdir().unwrap();
    let surface = dir.path().join("surface.csv");
    let out = dir.path().join("price.csv");
    let cfg = config("heston_feller_violated.json");
    stdout(&rklfd(&[
        "price",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
        "--surface",
        surface.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(column(&text, "spot"), vec![90.0, 100.0, 110.0]);
    let surf = std::fs::read_to_string(surface).unwrap();
    assert_eq!(csv_rows(&surf).1.len(), 76 * 39);
}

#[test]
fn converge_single_level_has_empty_derived_columns() {
    let cfg = config("american_put_ladder.json");
    let out = stdout(&rklfd(&["converge", "--config", cfg.to_str().unwrap(), "--levels", "1"]));
    let (h, rows) = csv_rows(&out);
    assert_eq!(h, ["spacesteps", "timesteps", "value", "change", "ratio", "error", "time_s"]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "68");
    assert_eq!(rows[0][3], "");
    assert_eq!(rows[0][4], "");
}

#[test]
fn rannacher_ladder_changes() {
    let cfg = config("american_put_ladder.json");
    let out = stdout(&rklfd(&[
        "converge",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "scheme.scheme=RAN",
    ]));
    let (_, rows) = csv_rows(&out);
    let changes: Vec<f64> = rows[1..].iter().map(|r| r[3].parse().unwrap()).collect();
    for (c, expected) in changes.iter().zip([3.20e-2, 9.23e-3, 2.75e-3, 8.48e-4]) {
        assert!((c / expected - 1.0).abs() < 0.02, "{c} vs {expected}");
    }
}

#[test]
fn config_errors_exit_2() {
    let cfg = config("american_put_fixed_space.json");
    let o = rklfd(&["price", "--config", cfg.to_str().unwrap(), "--set", "grid.m=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid.m"));

    let o = rklfd(&["price", "--config", "/nonexistent.json"]);
    assert_eq!(o.status.code(), Some(2));

    let o = rklfd(&["price", "--config", cfg.to_str().unwrap(), "--set", "model.sigam=0.3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_3() {
    let cfg = config("american_put_fixed_space.json");
    let o = rklfd(&[
        "price",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "scheme.scheme=RAN",
        "--set",
        "scheme.lcp.kind=psor",
        "--set",
        "scheme.lcp.max_iterations=1",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("PSOR"));
}

#[test]
fn stability_stats_and_raster() {
    let dir = tempfile::tempdir().unwrap();
    let raster = dir.path().join("r.csv");
    let out = stdout(&rklfd(&[
        "stability",
        "--scheme",
        "rkl",
        "--stages",
        "21",
        "--nx",
        "400",
        "--ny",
        "200",
        "--raster",
        raster.to_str().unwrap(),
    ]));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!((v["avg_damping"].as_f64().unwrap() - 0.55).abs() < 0.02);
    let text = std::fs::read_to_string(raster).unwrap();
    assert_eq!(csv_rows(&text).1.len(), 400 * 200);

    let o = rklfd(&["stability", "--scheme", "rkl", "--stages", "21", "--window", "-5,1,-1,1"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn gamma_profiles() {
    let cfg = config("gamma_k160.json");
    let rkl = stdout(&rklfd(&["gamma", "--config", cfg.to_str().unwrap()]));
    let g = column(&rkl, "gamma");
    assert!(g.iter().cloned().fold(f64::INFINITY, f64::min) >= -1e-6);
    let cn = stdout(&rklfd(&["gamma", "--config", cfg.to_str().unwrap(), "--set", "scheme.scheme=CN"]));
    let g = column(&cn, "gamma");
    assert!(g.iter().cloned().fold(f64::INFINITY, f64::min) < -1e-3);
}

#[test]
fn cmp_digital_columns() {
    let out = stdout(&rklfd(&["cmp-digital"]));
    let (h, _) = csv_rows(&out);
    assert_eq!(h, ["x", "RKL-0", "RKL-20", "RKC-0.1", "RKC-2", "analytic"]);
    let drops = |c: Vec<f64>| c.windows(2).filter(|w| w[1] < w[0] - 1e-12).count();
    assert_eq!(drops(column(&out, "RKL-0")), 0);
    assert!(drops(column(&out, "RKC-0.1")) > 0);

    let out = stdout(&rklfd(&["cmp-digital", "--set", "k=0", "--set", "space_steps=100"]));
    let x = column(&out, "x");
    assert_eq!(x.len(), 101);
}

#[test]
fn runs_are_deterministic() {
    let cfg = config("uvm_butterfly.json");
    let a = stdout(&rklfd(&["converge", "--config", cfg.to_str().unwrap(), "--levels", "3"]));
    let b = stdout(&rklfd(&["converge", "--config", cfg.to_str().unwrap(), "--levels", "3"]));
    assert_eq!(column(&a, "value"), column(&b, "value"));
}

#[test]
fn shipped_configs_round_trip() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let text = std::fs::read_to_string(&path).unwrap();
            let p = rklfd_core::PricingProblem::from_json(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(rklfd_core::PricingProblem::from_json(&p.to_json()).unwrap(), p);
            n += 1;
        }
    }
    assert!(n >= 5);
}
