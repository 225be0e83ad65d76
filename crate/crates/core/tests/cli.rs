use std::fs;
use std::path::PathBuf;

use sis_wagner::cli::run;

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn call(args: &[&str], stdin: &str) -> Out {
    let argv: Vec<String> = std::iter::once("sis-wagner").chain(args.iter().copied()).map(String::from).collect();
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let code = run(&argv, &mut stdin.as_bytes(), &mut o, &mut e);
    Out { code, stdout: String::from_utf8(o).unwrap(), stderr: String::from_utf8(e).unwrap() }
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sis-wagner-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn estimate_preset_json() {
    let r = call(&["estimate", "--preset", "dilithium2", "--variant", "quantization", "--json"], "");
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    assert!((v["log2N"].as_f64().unwrap() - 269.9).abs() <= 2.0);
    assert_eq!(v["r_prime"], 40);
}

#[test]
fn estimate_csv() {
    let path = tmp("est.csv");
    let r = call(&["estimate", "--preset", "dilithium5", "--csv-out", path.to_str().unwrap()], "");
    assert_eq!(r.code, 0);
    let csv = fs::read_to_string(&path).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "log2N,w,sigma0,r_prime,sigma_rprime,ell,variant");
    assert!(csv.lines().nth(1).unwrap().starts_with("450.2,61,"));
    assert_eq!(r.stdout, csv);
}

#[test]
fn estimate_flags_override_preset() {
    let r = call(&["estimate", "--n", "500", "--m", "600", "--q", "1000", "--beta", "250", "--variant", "rounding"], "");
    assert_eq!(r.code, 0);
    assert!(r.stdout.lines().nth(1).unwrap().ends_with(",rounding"));
    assert_eq!(call(&["estimate", "--n", "500"], "").code, 2);
    assert_eq!(call(&["estimate", "--n", "10", "--m", "20", "--q", "100", "--beta", "60"], "").code, 3);
}

#[test]
fn usage_errors() {
    assert_eq!(call(&[], "").code, 2);
    assert_eq!(call(&["frobnicate"], "").code, 2);
    assert_eq!(call(&["estimate", "--preset", "dilithium4"], "").code, 2);
    assert_eq!(call(&["gen", "--n", "x", "--m", "2", "--q", "3"], "").code, 2);
    assert_eq!(call(&["solve"], "not json").code, 2);
    assert_eq!(call(&["--help"], "").code, 0);
}

#[test]
fn gen_solve_pipeline() {
    let mut ok = 0;
    for seed in 0..10 {
        let s = seed.to_string();
        let g = call(&["gen", "--n", "8", "--m", "20", "--q", "257", "--seed", &s], "");
        assert_eq!(g.code, 0);
        let r = call(&["solve", "--mode", "heuristic", "--f", "4", "--seed", &s], &g.stdout);
        if r.code == 0 {
            let path = tmp(&format!("inst{seed}.json"));
            fs::write(&path, &g.stdout).unwrap();
            let v = call(&["verify", "--instance", path.to_str().unwrap()], &r.stdout);
            assert_eq!((v.code, v.stdout.trim()), (0, "Valid"));
            ok += 1;
        } else {
            assert_eq!(r.code, 1, "{}", r.stderr);
        }
    }
    assert!(ok >= 5, "{ok}/10");
}

#[test]
fn verify_zero_vector() {
    let g = call(&["gen", "--n", "2", "--m", "5", "--q", "7"], "");
    let path = tmp("zero.json");
    fs::write(&path, &g.stdout).unwrap();
    let v = call(&["verify", "--instance", path.to_str().unwrap(), "--json"], r#"{"x":[0,0,0,0,0]}"#);
    assert_eq!(v.code, 1);
    let j: serde_json::Value = serde_json::from_str(&v.stdout).unwrap();
    assert_eq!(j["verdict"], "ZeroVector");
    let short = call(&["verify", "--instance", path.to_str().unwrap()], r#"{"x":[0,0]}"#);
    assert_eq!(short.code, 3);
}

#[test]
fn solve_is_deterministic() {
    let g = call(&["gen", "--n", "8", "--m", "20", "--q", "257", "--seed", "3"], "");
    let a = call(&["solve", "--json", "--seed", "9"], &g.stdout);
    let b = call(&["solve", "--json", "--seed", "9"], &g.stdout);
    let c = call(&["solve", "--json", "--seed", "9", "--threads", "4"], &g.stdout);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let s1 = call(&["sample", "--s", "2.5", "--center", "0.5,-1", "--count", "50", "--seed", "1"], "");
    let s2 = call(&["sample", "--s", "2.5", "--center", "0.5,-1", "--count", "50", "--seed", "1"], "");
    assert_eq!(s1.stdout, s2.stdout);
    assert_eq!(s1.stdout.lines().count(), 50);
    assert!(s1.stdout.lines().all(|l| l.split(' ').count() == 2));
}

#[test]
fn stats_out() {
    let g = call(&["gen", "--n", "8", "--m", "20", "--q", "257", "--seed", "4"], "");
    let path = tmp("stats.json");
    let r = call(&["solve", "--stats-out", path.to_str().unwrap(), "--attempts", "2"], &g.stdout);
    assert!(r.code == 0 || r.code == 1);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let runs = v.as_array().unwrap();
    assert!(!runs.is_empty());
    assert!(runs[0]["stage_sizes"].as_array().unwrap().len() >= 2);
}

#[test]
fn provable_preconditions_exit_3() {
    let g = call(&["gen", "--n", "2", "--m", "6", "--q", "16"], "");
    let r = call(&["solve", "--mode", "provable"], &g.stdout);
    assert_eq!(r.code, 3);
    assert!(r.stderr.contains("prime"));
}

#[test]
fn sample_json() {
    let r = call(&["sample", "--s", "3", "--dim", "4", "--count", "5", "--json"], "");
    let v: serde_json::Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["samples"].as_array().unwrap().len(), 5);
    assert_eq!(call(&["sample", "--s", "-1"], "").code, 3);
}

#[test]
fn selftest_passes() {
    let r = call(&["selftest", "--samples", "100000", "--seed", "5"], "");
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert_eq!(r.stdout.lines().count(), 4);
}
