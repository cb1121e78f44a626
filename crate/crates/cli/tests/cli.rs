use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::{json, Value};
use tempfile::TempDir;

fn schottky(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_schottky")).args(args).output().expect("binary runs")
}

fn schottky_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_schottky"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Disks at -2, 2 and -2i, 2i, paired by `w -> z + 1/(w - e)` for first
/// center `e` and partner `z`, i.e. `[[z, 1 - z e], [1, -e]]`.
fn template_json(radius: f64) -> Value {
    let pairs = [((-2.0, 0.0), (2.0, 0.0)), ((0.0, -2.0), (0.0, 2.0))];
    let mut gens = Vec::new();
    let mut disks = Vec::new();
    for ((er, ei), (zr, zi)) in pairs {
        // -z e
        let (pr, pi) = (-(zr * er - zi * ei), -(zr * ei + zi * er));
        gens.push(json!([[zr, zi], [1.0 + pr, pi], [1.0, 0.0], [-er, -ei]]));
        disks.push(json!({"center": [er, ei], "radius": radius, "side": "in"}));
        disks.push(json!({"center": [zr, zi], "radius": radius, "side": "in"}));
    }
    json!({"version": 1, "generators": gens, "disks": disks})
}

#[test]
fn template_verifies_and_inflated_radii_fail() {
    let dir = TempDir::new().unwrap();
    let good = write(&dir, "good.json", &template_json(1.0).to_string());
    let out = schottky(&["verify", s(&good), "--json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["verified"], true);
    let margin = report["min_margin"].as_f64().unwrap();
    assert!((margin - (8f64.sqrt() - 2.0)).abs() < 1e-12, "{margin}");

    let bad = write(&dir, "bad.json", &template_json(1.5).to_string());
    let out = schottky(&["verify", s(&bad), "--json"]);
    assert_eq!(code(&out), 1);
    assert_eq!(stdout_json(&out)["verified"], false);
}

#[test]
fn malformed_input_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "broken.json", "{\"version\": 1, \"generators\": [");
    for cmd in ["verify", "dim", "certify-pair", "search-classical", "limit-set"] {
        let out = schottky(&[cmd, s(&p)]);
        assert_eq!(code(&out), 2, "{cmd}");
        assert!(out.stdout.is_empty(), "{cmd}");
    }
    let out = schottky(&["verify", s(&dir.path().join("missing.json"))]);
    assert_eq!(code(&out), 2);
    let wrong_version =
        write(&dir, "v2.json", &json!({"version": 2, "generators": [[[2,0],[3,0],[1,0],[2,0]]]}).to_string());
    assert_eq!(code(&schottky(&["dim", s(&wrong_version)])), 2);
    let no_disks =
        write(&dir, "nodisks.json", &json!({"version": 1, "generators": [[[2,0],[3,0],[1,0],[2,0]]]}).to_string());
    assert_eq!(code(&schottky(&["verify", s(&no_disks)])), 2);
}

#[test]
fn stdin_is_read_for_dash() {
    let out = schottky_stdin(&["verify", "-", "--json"], &template_json(1.0).to_string());
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["verified"], true);
    let out = schottky_stdin(&["verify", "-"], "not json");
    assert_eq!(code(&out), 2);
}

#[test]
fn quiet_prints_nothing() {
    let out = schottky_stdin(&["verify", "-", "--quiet"], &template_json(1.0).to_string());
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let out = schottky_stdin(&["verify", "-", "--quiet"], &template_json(1.5).to_string());
    assert_eq!(code(&out), 1);
    assert!(out.stdout.is_empty());
}

#[test]
fn gen_random_output_verifies() {
    let dir = TempDir::new().unwrap();
    for (rank, seed) in [(2, 7), (3, 1), (5, 11)] {
        let out = schottky(&["gen-random", "--rank", &rank.to_string(), "--seed", &seed.to_string()]);
        assert_eq!(code(&out), 0);
        let file: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(file["generators"].as_array().unwrap().len(), rank);
        let disks = file["disks"].as_array().unwrap();
        assert_eq!(disks.len(), 2 * rank);
        // pairwise disjoint, checked from the raw circle data
        for i in 0..disks.len() {
            for j in i + 1..disks.len() {
                let (a, b) = (&disks[i], &disks[j]);
                let dx = a["center"][0].as_f64().unwrap() - b["center"][0].as_f64().unwrap();
                let dy = a["center"][1].as_f64().unwrap() - b["center"][1].as_f64().unwrap();
                let gap = dx.hypot(dy) - a["radius"].as_f64().unwrap() - b["radius"].as_f64().unwrap();
                assert!(gap > 0.0, "rank {rank}: disks {i} and {j} overlap");
            }
        }
        let p = write(&dir, &format!("r{rank}.json"), std::str::from_utf8(&out.stdout).unwrap());
        let v = schottky(&["verify", s(&p), "--tol", "1e-9"]);
        assert_eq!(code(&v), 0, "rank {rank}: {}", String::from_utf8_lossy(&v.stdout));
    }
    assert_eq!(code(&schottky(&["gen-random", "--rank", "0"])), 2);
    assert_eq!(code(&schottky(&["gen-random", "--rank", "2", "--radius", "-1"])), 2);
}

#[test]
fn gen_random_writes_file() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("m.json");
    let out = schottky(&["gen-random", "--rank", "3", "--seed", "4", "--out-file", s(&p), "--quiet"]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    assert_eq!(code(&schottky(&["verify", s(&p), "-q"])), 0);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let a = schottky(&["gen-random", "--rank", "3", "--seed", "9"]);
    let b = schottky(&["gen-random", "--rank", "3", "--seed", "9"]);
    assert_eq!(a.stdout, b.stdout);
    let p = write(&dir, "m.json", std::str::from_utf8(&a.stdout).unwrap());
    for args in [
        vec!["dim", s(&p), "--max-len", "5", "--json"],
        vec!["limit-set", s(&p), "--max-len", "4"],
        vec!["certify-pair", s(&p), "--index", "2", "--json"],
        vec!["search-classical", s(&p), "--json"],
        vec!["verify", s(&p), "--json"],
    ] {
        let x = schottky(&args);
        let y = schottky(&args);
        assert_eq!(code(&x), 0, "{args:?}");
        assert_eq!(x.stdout, y.stdout, "{args:?}");
    }
}

#[test]
fn dim_reports_bounds_and_shell_csv() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "t.json", &template_json(1.0).to_string());
    let csv = dir.path().join("shells.csv");
    let out = schottky(&["dim", s(&p), "--max-len", "6", "--csv", s(&csv), "--json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = stdout_json(&out);
    let (low, series) = (r["D_low"].as_f64().unwrap(), r["D_series"].as_f64().unwrap());
    assert!(low > 0.0 && low < 2.0);
    assert!(series > 0.0 && series < 2.0);
    assert_eq!(r["shells"], 6);
    assert_eq!(r["diagnostics"]["series"]["shell_sums"].as_array().unwrap().len(), 6);

    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,words,shell_sum");
    assert_eq!(lines.len(), 7);
    // 4 * 3^(n-1) reduced words of length n in rank 2
    for (n, line) in lines[1..].iter().enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0], (n + 1).to_string());
        assert_eq!(cols[1], (4 * 3u64.pow(n as u32)).to_string());
        assert!(cols[2].parse::<f64>().unwrap() > 0.0);
    }
}

#[test]
fn dim_rank_one_flags_zero() {
    let file = json!({"version": 1, "generators": [[[2, 0], [0, 0], [0, 0], [0.5, 0]]]});
    let out = schottky_stdin(&["dim", "-", "--max-len", "4", "--json"], &file.to_string());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = stdout_json(&out);
    assert_eq!(r["D_low"].as_f64().unwrap(), 0.0);
    assert_eq!(r["diagnostics"]["lower"]["rank_too_small"], true);
}

#[test]
fn dim_equal_displacements_log3_give_one() {
    // diag(sqrt 3) and its conjugate by the rotation about j through pi/4
    // both move j by 2 log sqrt 3 = log 3.
    let mu = 3f64.sqrt();
    let (p, m) = ((mu + 1.0 / mu) / 2.0, (mu - 1.0 / mu) / 2.0);
    let file = json!({
        "version": 1,
        "generators": [
            [[mu, 0], [0, 0], [0, 0], [1.0 / mu, 0]],
            [[p, 0], [m, 0], [m, 0], [p, 0]]
        ]
    });
    let out = schottky_stdin(&["dim", "-", "--max-len", "4", "--json"], &file.to_string());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = stdout_json(&out);
    let d = r["diagnostics"]["lower"]["displacements"].as_array().unwrap();
    for x in d {
        assert!((x.as_f64().unwrap() - 3f64.ln()).abs() < 1e-12);
    }
    assert!((r["D_low"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn dim_budget_and_basepoint_flags() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "t.json", &template_json(1.0).to_string());
    let out = schottky(&["dim", s(&p), "--max-len", "20", "--budget", "500", "--json"]);
    assert_eq!(code(&out), 0);
    let r = stdout_json(&out);
    // 4 + 12 + 36 + 108 + 324 = 484 words fit, the next shell does not
    assert_eq!(r["shells"], 5);
    assert_eq!(r["diagnostics"]["series"]["requested_max_len"], 20);
    assert_eq!(code(&schottky(&["dim", s(&p), "--max-len", "20", "--budget", "100"])), 1);

    let out = schottky(&["dim", s(&p), "--max-len", "4", "--basepoint", "0.5,0.25,2", "--json"]);
    assert_eq!(code(&out), 0);
    let r = stdout_json(&out);
    assert_eq!(r["diagnostics"]["basepoint"]["z"], json!([0.5, 0.25]));
    assert_eq!(r["diagnostics"]["basepoint"]["t"], 2.0);
    assert_eq!(code(&schottky(&["dim", s(&p), "--basepoint", "0,0,-1"])), 2);
}

#[test]
fn certify_pair_reports_circles() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "t.json", &template_json(1.0).to_string());
    let out = schottky(&["certify-pair", s(&p), "--index", "0", "--json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let cert = stdout_json(&out);
    assert_eq!(cert["margins"]["verified"], true);
    // r + r' = |z_+ - z_-| 2|l| / (|l|^2 - 1)
    let r1 = cert["repelling"]["radius"].as_f64().unwrap();
    let r2 = cert["attracting"]["radius"].as_f64().unwrap();
    let zp = cert["z_plus"].as_array().unwrap();
    let zm = cert["z_minus"].as_array().unwrap();
    let sep =
        (zp[0].as_f64().unwrap() - zm[0].as_f64().unwrap()).hypot(zp[1].as_f64().unwrap() - zm[1].as_f64().unwrap());
    let l = cert["multiplier"][0].as_f64().unwrap().hypot(cert["multiplier"][1].as_f64().unwrap());
    assert!(((r1 + r2) - sep * 2.0 * l / (l * l - 1.0)).abs() < 1e-9);

    assert_eq!(code(&schottky(&["certify-pair", s(&p), "--index", "5"])), 2);
    let parabolic = json!({"version": 1, "generators": [[[1, 0], [1, 0], [0, 0], [1, 0]]]});
    let out = schottky_stdin(&["certify-pair", "-"], &parabolic.to_string());
    assert_eq!(code(&out), 1);
}

#[test]
fn search_recovers_template_and_writes_trace() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "t.json", &template_json(1.0).to_string());
    let trace = dir.path().join("trace.json");
    let marking = dir.path().join("marking.json");
    let out = schottky(&[
        "search-classical",
        s(&p),
        "--budget",
        "50",
        "--annulus",
        "sec6",
        "--trace-out",
        s(&trace),
        "--marking-out",
        s(&marking),
        "--json",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let o = stdout_json(&out);
    assert_eq!(o["status"], "classical_found");
    let t: Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(t, o["trace"]);
    assert_eq!(code(&schottky(&["verify", s(&marking)])), 0);
    assert_eq!(code(&schottky(&["search-classical", s(&p), "--annulus", "sec8"])), 2);
}

#[test]
fn limit_set_rows_match_word_count() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "t.json", &template_json(1.0).to_string());
    let svg = dir.path().join("ls.svg");
    let out = schottky(&["limit-set", s(&p), "--max-len", "5", "--svg", s(&svg)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("re,im,word_len"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4 + 12 + 36 + 108 + 324);
    for row in &rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 3);
        let (x, y) = (cols[0].parse::<f64>().unwrap(), cols[1].parse::<f64>().unwrap());
        // every limit point lies in one of the four unit disks
        let inside = [(-2.0, 0.0), (2.0, 0.0), (0.0, -2.0), (0.0, 2.0)]
            .iter()
            .any(|(cx, cy)| (x - cx).hypot(y - cy) <= 1.0 + 1e-9);
        assert!(inside, "{row}");
    }
    let svg = std::fs::read_to_string(&svg).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<circle").count(), rows.len() + 4);
}
