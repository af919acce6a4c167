use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn data(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel).to_string_lossy().into_owned()
}

fn sto3g() -> String {
    data("basis/sto-3g.gbs")
}

fn h2_geometry() -> Value {
    json!({ "path": data("geom/h2.xyz") })
}

/// Writes `cfg` to `<dir>/<name>.json` and returns the path.
fn config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let p = dir.join(format!("{name}.json"));
    std::fs::write(&p, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    p
}

fn basisopt(args: &[&str], cfg: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_basisopt"))
        .args(args)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn h2_hf() -> Value {
    json!({
        "geometry": h2_geometry(),
        "basis": { "kind": "ao-file", "path": sto3g() },
        "scf": { "conv": 1e-10 }
    })
}

fn h2_alpha_d(max_steps: usize) -> Value {
    json!({
        "geometry": h2_geometry(),
        "basis": { "kind": "ao-file", "path": sto3g(), "share_by_element": true },
        "scf": { "conv": 1e-10 },
        "optimize": { "free": ["alpha", "d"], "method": "lbfgs-hz", "max_steps": max_steps }
    })
}

#[test]
fn hf_reports_h2_energy() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "h2", &h2_hf());
    let o = basisopt(&["hf"], &cfg, &dir.path().join("out"));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("E_elec     -1.831000039"), "{stdout}");
    let r = read_json(&dir.path().join("out/hf.json"));
    assert!((r["e_elec"].as_f64().unwrap() + 1.8310000393).abs() < 1e-9);
    assert!((r["e_total"].as_f64().unwrap() - r["e_elec"].as_f64().unwrap() - 1.0 / 1.4).abs() < 1e-12);
    assert_eq!(r["converged"], json!(true));
}

#[test]
fn validation_errors_exit_1() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    // odd electron count
    let h3 = json!({
        "geometry": { "chain": { "element": "H", "n": 3, "spacing": 1.0 } },
        "basis": { "kind": "ao-file", "path": sto3g() }
    });
    let o = basisopt(&["hf"], &config(dir.path(), "h3", &h3), &out);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("even electron count"));
    // unknown key
    let mut typo = h2_hf();
    typo["charg"] = json!(0);
    assert_eq!(code(&basisopt(&["hf"], &config(dir.path(), "typo", &typo), &out)), 1);
    // missing file
    assert_eq!(code(&basisopt(&["hf"], &dir.path().join("absent.json"), &out)), 1);
    // optimize without an optimize block
    assert_eq!(code(&basisopt(&["optimize"], &config(dir.path(), "h2", &h2_hf()), &out)), 1);
    // two geometry sources
    let mut both = h2_hf();
    both["geometry"]["chain"] = json!({ "element": "H", "n": 2, "spacing": 1.4 });
    assert_eq!(code(&basisopt(&["hf"], &config(dir.path(), "both", &both), &out)), 1);
    // invalid optimizer settings
    let mut bad = h2_alpha_d(0);
    bad["optimize"]["max_steps"] = json!(0);
    assert_eq!(code(&basisopt(&["optimize"], &config(dir.path(), "bad", &bad), &out)), 1);
}

#[test]
fn unconverged_scf_exits_2() {
    let dir = TempDir::new().unwrap();
    let lih = json!({
        "geometry": { "path": data("geom/lih.xyz") },
        "basis": { "kind": "ao-file", "path": sto3g() },
        "scf": { "conv": 1e-12, "max_iter": 2 }
    });
    let out = dir.path().join("out");
    let o = basisopt(&["hf"], &config(dir.path(), "lih", &lih), &out);
    assert_eq!(code(&o), 2);
    assert_eq!(read_json(&out.join("hf.json"))["converged"], json!(false));
}

#[test]
fn optimizer_without_convergence_exits_3_and_keeps_outputs() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let o = basisopt(&["optimize"], &config(dir.path(), "h2", &h2_alpha_d(2)), &out);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out.join("optimize.json"));
    assert_eq!(r["status"], json!("max-steps"));
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3);
    assert!(out.join("basis.json").exists());
}

#[test]
fn optimized_basis_reloads_to_the_same_energy() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("opt");
    let o = basisopt(&["optimize"], &config(dir.path(), "h2", &h2_alpha_d(500)), &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let opt = read_json(&out.join("optimize.json"));
    assert_eq!(opt["status"], json!("converged"));
    let e_opt = opt["e_elec"].as_f64().unwrap();
    assert!(e_opt <= -1.837306, "{e_opt}");
    let saved = read_json(&out.join("basis.json"));
    assert!(saved["slots"]["H1.s0.a0"].as_f64().unwrap() > 0.0);

    let again = json!({
        "geometry": h2_geometry(),
        "basis": { "kind": "explicit", "path": out.join("basis.json") },
        "scf": { "conv": 1e-10 }
    });
    let o = basisopt(&["hf"], &config(dir.path(), "again", &again), &dir.path().join("hf"));
    assert_eq!(code(&o), 0);
    let e = read_json(&dir.path().join("hf/hf.json"))["e_elec"].as_f64().unwrap();
    assert!((e - e_opt).abs() < 1e-9, "{e} vs {e_opt}");

    // an inline spec works the same way
    let inline = json!({
        "geometry": h2_geometry(),
        "basis": { "kind": "explicit", "spec": saved["spec"] },
        "scf": { "conv": 1e-10 }
    });
    let o = basisopt(&["hf"], &config(dir.path(), "inline", &inline), &dir.path().join("hf2"));
    assert_eq!(code(&o), 0);
    let e2 = read_json(&dir.path().join("hf2/hf.json"))["e_elec"].as_f64().unwrap();
    assert_eq!(e.to_bits(), e2.to_bits());
}

#[test]
fn gradcheck_with_nothing_free_is_empty() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let o = basisopt(&["gradcheck"], &config(dir.path(), "h2", &h2_hf()), &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("gradcheck.csv")).unwrap();
    assert_eq!(csv, "theta,analytic,finite_difference,rel_err\n");
}

#[test]
fn gradcheck_agrees_and_flags_bad_steps() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let mut cfg = h2_alpha_d(500);
    cfg["optimize"]["free"] = json!(["alpha", "d", "center"]);
    let cfg = config(dir.path(), "h2", &cfg);
    let o = basisopt(&["gradcheck"], &cfg, &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("gradcheck.csv")).unwrap();
    // 3 exponents, 3 coefficients, 2 centers x 3 axes
    assert_eq!(csv.lines().count(), 1 + 12);
    for line in csv.lines().skip(1) {
        let err: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(err < 1e-4, "{line}");
    }
    assert_eq!(code(&basisopt(&["gradcheck", "--step", "0"], &cfg, &out)), 1);
    assert_eq!(code(&basisopt(&["gradcheck", "--step=-1e-5"], &cfg, &out)), 1);
    // a grossly truncated difference on the centers is reported as a mismatch
    let mut centers = h2_alpha_d(500);
    centers["optimize"]["free"] = json!(["center"]);
    let centers = config(dir.path(), "centers", &centers);
    assert_eq!(code(&basisopt(&["gradcheck", "--step", "0.5"], &centers, &out)), 4);
}

#[test]
fn single_function_integrals() {
    let dir = TempDir::new().unwrap();
    let he = json!({
        "geometry": { "atoms": [{ "symbol": "He", "position": [0.0, 0.0, 0.0] }] },
        "basis": { "kind": "ao-file", "path": sto3g() }
    });
    let out = dir.path().join("out");
    let o = basisopt(&["integrals"], &config(dir.path(), "he", &he), &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["S.txt", "A.txt", "B.txt"] {
        let text = std::fs::read_to_string(out.join(name)).unwrap();
        assert_eq!(text.lines().count(), 1, "{name}");
    }
    let s = std::fs::read_to_string(out.join("S.txt")).unwrap();
    let v: f64 = s.split_whitespace().last().unwrap().parse().unwrap();
    assert!((v - 1.0).abs() < 1e-10);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let hf = config(dir.path(), "h2", &h2_hf());
    let opt = config(dir.path(), "opt", &h2_alpha_d(500));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(code(&basisopt(&["integrals"], &hf, out)), 0);
        assert_eq!(code(&basisopt(&["hf"], &hf, out)), 0);
        assert_eq!(code(&basisopt(&["optimize"], &opt, out)), 0);
    }
    for name in ["S.txt", "A.txt", "B.txt", "hf.json", "basis.json", "optimize.json"] {
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn thread_count_and_units_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "h2", &h2_hf());
    let energy = |args: &[&str], out: &str| {
        let o = basisopt(args, &cfg, &dir.path().join(out));
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        read_json(&dir.path().join(out).join("hf.json"))["e_elec"].as_f64().unwrap()
    };
    let one = energy(&["hf", "--threads", "1"], "t1");
    let four = energy(&["hf", "--threads", "4"], "t4");
    assert_eq!(one.to_bits(), four.to_bits());
    // the same file read as angstrom is a shorter bond
    let ang = energy(&["hf", "--units", "angstrom"], "ang");
    assert!((ang - one).abs() > 1e-3);
    assert_eq!(code(&basisopt(&["hf", "--threads", "0"], &cfg, &dir.path().join("t0"))), 1);
    assert_eq!(code(&basisopt(&["hf", "--units", "furlong"], &cfg, &dir.path().join("u"))), 1);
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let (cfg, base) = basisopt_cli::RunConfig::from_file(&path).unwrap();
            cfg.load(&base, None).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 8);
}
