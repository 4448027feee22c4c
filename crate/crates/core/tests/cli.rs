use std::fs;
use std::path::{Path, PathBuf};

use unilift::cli::main_with_args;

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"))
        .join("cli")
        .join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> i32 {
    let mut all = vec!["unilift"];
    all.extend_from_slice(args);
    main_with_args(all)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_is_seed_deterministic() {
    let dir = scratch("simulate");
    for sub in ["a", "b"] {
        let out = dir.join(sub);
        assert_eq!(
            run(&[
                "--seed",
                "11",
                "--out",
                s(&out),
                "simulate",
                "--length",
                "500"
            ]),
            0
        );
    }
    let a = fs::read(dir.join("a/x_path.csv")).unwrap();
    let b = fs::read(dir.join("b/x_path.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x1"));
    for l in lines {
        let v: f64 = l.parse().unwrap();
        assert!(v == 0.0 || v == 1.0);
    }
    let out = dir.join("c");
    assert_eq!(
        run(&[
            "--seed",
            "12",
            "--out",
            s(&out),
            "simulate",
            "--length",
            "500"
        ]),
        0
    );
    assert_ne!(fs::read(out.join("x_path.csv")).unwrap(), b);
}

#[test]
fn zero_length_simulation_is_header_only() {
    let dir = scratch("empty");
    assert_eq!(run(&["--out", s(&dir), "simulate", "--length", "0"]), 0);
    assert_eq!(fs::read_to_string(dir.join("x_path.csv")).unwrap(), "x1\n");
}

#[test]
fn reducible_chain_is_rejected() {
    let dir = scratch("reducible");
    let spec = dir.join("p.json");
    fs::write(&spec, r#"{"states":2,"P":[[1.0,0.0],[0.0,1.0]]}"#).unwrap();
    assert_ne!(
        run(&["--out", s(&dir), "simulate", "--process", s(&spec)]),
        0
    );
    let spec = dir.join("q.json");
    fs::write(&spec, r#"{"states":2,"P":[[0.5,0.4],[0.0,1.0]]}"#).unwrap();
    assert_ne!(
        run(&["--out", s(&dir), "simulate", "--process", s(&spec)]),
        0
    );
}

#[test]
fn lift_roundtrip_is_exact_on_atoms() {
    let dir = scratch("lift");
    assert_eq!(
        run(&[
            "--seed",
            "3",
            "--out",
            s(&dir),
            "simulate",
            "--length",
            "200"
        ]),
        0
    );
    let input = dir.join("x_path.csv");
    assert_eq!(
        run(&[
            "--seed",
            "3",
            "--out",
            s(&dir),
            "lift",
            "--input",
            s(&input)
        ]),
        0
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("lift_report.json")).unwrap()).unwrap();
    assert_eq!(report["roundtrip"], "exact");
    assert_eq!(report["atom_draws"], 200);
    let u = fs::read_to_string(dir.join("u_path.csv")).unwrap();
    assert_eq!(u.lines().count(), 201);
    let log = fs::read_to_string(dir.join("draw_log.csv")).unwrap();
    assert!(log.starts_with("n,k,u\n"));
}

#[test]
fn continuous_marginal_leaves_draw_log_empty() {
    let dir = scratch("continuous");
    let m = dir.join("m.json");
    fs::write(&m, r#"{"atoms":[],"continuous":[[0.0,0.0],[2.0,1.0]]}"#).unwrap();
    let x = dir.join("x.csv");
    fs::write(&x, "x1\n0.5\n1.25\n1.999\n").unwrap();
    assert_eq!(
        run(&[
            "--out",
            s(&dir),
            "lift",
            "--input",
            s(&x),
            "--marginals",
            s(&m)
        ]),
        0
    );
    assert_eq!(
        fs::read_to_string(dir.join("draw_log.csv")).unwrap(),
        "n,k,u\n"
    );
    let u = fs::read_to_string(dir.join("u_path.csv")).unwrap();
    let vals: Vec<f64> = u.lines().skip(1).map(|l| l.parse().unwrap()).collect();
    assert_eq!(vals, vec![0.25, 0.625, 0.9995]);
}

#[test]
fn bad_value_for_bernoulli_marginal_names_the_row() {
    let dir = scratch("bad");
    let m = dir.join("m.json");
    fs::write(&m, r#"{"atoms":[{"a":0.0,"p":0.5},{"a":1.0,"p":0.5}]}"#).unwrap();
    let x = dir.join("x.csv");
    fs::write(&x, "x1\n0.0\n1.0\n2.5\n").unwrap();
    let marginals =
        vec![unilift::marginals::MixedMarginal::discrete(&[(0.0, 0.5), (1.0, 0.5)]).unwrap()];
    let path = vec![vec![0.0], vec![1.0], vec![2.5]];
    let err =
        unilift::lift::lift_path(&marginals, &path, &mut unilift::rng::stream(1, 0)).unwrap_err();
    assert!(err.to_string().contains("row 2"), "{err}");
    assert_eq!(
        run(&[
            "--out",
            s(&dir),
            "lift",
            "--input",
            s(&x),
            "--marginals",
            s(&m)
        ]),
        2
    );
}

#[test]
fn mixing_report_for_iid_process_is_zero_and_sorted() {
    let dir = scratch("mixing");
    let spec = dir.join("iid.json");
    fs::write(&spec, r#"{"states":3,"weights":[0.2,0.5,0.3]}"#).unwrap();
    let code = run(&[
        "--out",
        s(&dir),
        "mixing",
        "--process",
        s(&spec),
        "--lags",
        "3,1,2",
        "--block",
        "1,2",
        "--refine",
        "2,1",
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(dir.join("mixing.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        unilift::mixing::MIXING_CSV_HEADER.to_vec()
    );
    let mut keys = Vec::new();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let key: (usize, usize, usize) = (
            rec[0].parse().unwrap(),
            rec[1].parse().unwrap(),
            rec[2].parse().unwrap(),
        );
        keys.push(key);
        for col in 4..7 {
            let v: f64 = rec[col].parse().unwrap();
            assert!(v.abs() <= 1e-12, "{rec:?}");
        }
    }
    assert_eq!(keys.len(), 3 * 2 * 3);
    assert!(keys.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn mixing_lifted_rows_match_exact_rows() {
    let dir = scratch("mixing_default");
    assert_eq!(run(&["--out", s(&dir), "mixing"]), 0);
    let text = fs::read_to_string(dir.join("mixing.csv")).unwrap();
    let mut exact = std::collections::HashMap::new();
    let mut rows = Vec::new();
    for rec in csv::Reader::from_reader(text.as_bytes()).records() {
        let rec = rec.unwrap();
        let key = (rec[0].to_string(), rec[1].to_string());
        let vals: Vec<f64> = (4..7).map(|c| rec[c].parse().unwrap()).collect();
        if &rec[3] == "exact" {
            exact.insert(key, vals);
        } else {
            rows.push((key, vals));
        }
    }
    assert_eq!(rows.len(), 30);
    for (key, vals) in rows {
        for (a, b) in vals.iter().zip(&exact[&key]) {
            assert!((a - b).abs() <= 1e-10);
        }
    }
}

#[test]
fn empirical_outputs_are_symmetric_and_deterministic() {
    let dir = scratch("empirical");
    for sub in ["a", "b"] {
        let out = dir.join(sub);
        let code = run(&[
            "--seed",
            "5",
            "--out",
            s(&out),
            "empirical",
            "--s-grid",
            "0;0.5;1",
            "--t-grid",
            "0.5,1",
            "--replicates",
            "20",
        ]);
        assert_eq!(code, 0);
    }
    for f in [
        "gamma.csv",
        "kiefer_replicates.csv",
        "kiefer_sup.csv",
        "s_grid.csv",
    ] {
        assert_eq!(
            fs::read(dir.join("a").join(f)).unwrap(),
            fs::read(dir.join("b").join(f)).unwrap()
        );
    }
    let text = fs::read_to_string(dir.join("a/gamma.csv")).unwrap();
    let mut g = std::collections::HashMap::new();
    for rec in csv::Reader::from_reader(text.as_bytes()).records() {
        let rec = rec.unwrap();
        let tail: f64 = rec[3].parse().unwrap();
        assert!(tail <= 1e-10);
        g.insert(
            (rec[0].to_string(), rec[1].to_string()),
            rec[2].parse::<f64>().unwrap(),
        );
    }
    for ((i, j), v) in &g {
        assert!((v - g[&(j.clone(), i.clone())]).abs() <= 1e-12);
    }
}

#[test]
fn config_file_is_used_and_unknown_fields_fail() {
    let dir = scratch("config");
    fs::write(
        dir.join("proc.json"),
        r#"{"states":2,"P":[[0.5,0.5],[0.3,0.7]],"observe":[[2.0],[5.0]]}"#,
    )
    .unwrap();
    let cfg = dir.join("run.json");
    fs::write(
        &cfg,
        r#"{"process":"proc.json","seed":9,"out":"out","simulate":{"length":7}}"#,
    )
    .unwrap();
    assert_eq!(run(&["--config", s(&cfg), "simulate"]), 0);
    let text = fs::read_to_string(dir.join("out/x_path.csv")).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text
        .lines()
        .skip(1)
        .all(|l| l.starts_with("2.0") || l.starts_with("5.0")));

    let bad = dir.join("bad.json");
    fs::write(&bad, r#"{"seed":1,"sead":2}"#).unwrap();
    assert_eq!(run(&["--config", s(&bad), "simulate"]), 2);
}

#[test]
fn verify_detects_a_wrong_transition_matrix() {
    let dir = scratch("verify_wrong");
    let spec = dir.join("wrong.json");
    fs::write(
        &spec,
        r#"{"states":2,"P":[[0.8,0.2],[0.3,0.7]],"observe":[[0.0],[1.0]]}"#,
    )
    .unwrap();
    assert_eq!(run(&["--out", s(&dir), "verify", "--process", s(&spec)]), 1);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("verify_report.json")).unwrap()).unwrap();
    assert_eq!(report["schema"], "unilift.verify/1");
    assert_eq!(report["passed"], false);
    let ids: Vec<u64> = report["criteria"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["id"].as_u64().unwrap())
        .collect();
    assert_eq!(ids, (1..=12).collect::<Vec<_>>());
    assert_eq!(report["criteria"][4]["passed"], false);
}
