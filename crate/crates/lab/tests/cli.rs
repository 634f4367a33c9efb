use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simplex-lab"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn constants_table_as_json() {
    let o = lab(&["constants", "--q", "1,2,3", "--format", "json"]);
    assert!(o.status.success());
    let rows: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let mu1 = rows[0]["mu_q"].as_f64().unwrap();
    assert!((mu1 - 2.0 / std::f64::consts::E).abs() < 1e-15);
    assert_eq!(rows[1]["sigma_q_sq"].as_f64().unwrap(), 1.0);
    assert_eq!(rows.as_array().unwrap().len(), 3);
}

#[test]
fn repeated_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (out, workers) in [(&a, "1"), (&b, "2")] {
        let o = lab(&[
            "gumbel",
            "--n",
            "1000",
            "--replicates",
            "10000",
            "--seed",
            "42",
            "--workers",
            workers,
            "--out",
            path_str(out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("# simplex-lab "));
    assert!(text.contains("# seed 42"));
    assert!(text.contains("experiment,n,param,threshold,estimate,theory,std_error,pass"));
}

#[test]
fn lower_ldp_tail_reports_empty_or_infinite() {
    let o = lab(&[
        "ldp",
        "--n",
        "1000",
        "--z",
        "0.5",
        "--replicates",
        "20000",
        "--oracle-n",
        "1000",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let row = text
        .lines()
        .find(|l| l.starts_with("ldp,1000,rate:below"))
        .unwrap();
    assert!(
        row.ends_with(",empty_tail") || row.contains(",inf,"),
        "{row}"
    );
}

#[test]
fn csv_and_json_carry_the_same_content() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let args = [
        "--n",
        "30",
        "--replicates",
        "3000",
        "--seed",
        "3",
        "--z",
        "1.5,-1",
        "--sn",
        "1.5",
    ];
    let direct = lab(&[&["mdp"][..], &args, &["--oracle-n", "100000"]].concat());
    assert!(
        direct.status.success(),
        "{}",
        String::from_utf8_lossy(&direct.stderr)
    );
    let o = lab(&[
        &["mdp"][..],
        &args,
        &[
            "--oracle-n",
            "100000",
            "--format",
            "json",
            "--out",
            path_str(&json),
        ],
    ]
    .concat());
    assert!(o.status.success());
    let converted = lab(&["report", "--input", path_str(&json), "--format", "csv"]);
    assert!(converted.status.success());
    assert_eq!(stdout(&direct), stdout(&converted));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n": [5, 10], "replicates": 2000, "seed": 8}"#).unwrap();
    let o = lab(&["equivalence", "--config", path_str(&cfg), "--n", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("\"n_list\":[5]"));
    assert!(text.contains("# seed 8"));
    std::fs::write(&cfg, r#"{"bogus": 1}"#).unwrap();
    assert_eq!(
        lab(&["equivalence", "--config", path_str(&cfg)])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn oracle_queries() {
    let o = lab(&["oracle", "--n", "2", "--s", "0.6,0.5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,query,arg,value,error_bound,method");
    let v: f64 = lines[1].split(',').nth(3).unwrap().parse().unwrap();
    assert!((v - 0.2).abs() < 1e-15);
    assert!(lines[2].contains(",0.0,0.0,closed_form"));
    let g = lab(&[
        "oracle", "--n", "1000000", "--x", "-1,0", "--format", "json",
    ]);
    assert!(g.status.success());
}

#[test]
fn sample_points() {
    let o = lab(&["sample", "--n", "4", "--replicates", "3", "--p", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 4);
    for line in text.lines().skip(1) {
        let norm: f64 = line
            .split(',')
            .map(|v| v.parse::<f64>().unwrap().powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(norm <= 1.0);
    }
    let s = lab(&[
        "sample",
        "--n",
        "5",
        "--construction",
        "spacings",
        "--uncentered",
        "--format",
        "json",
    ]);
    let pts: Vec<Vec<f64>> = serde_json::from_str(&stdout(&s)).unwrap();
    assert!((pts[0].iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    assert_eq!(lab(&["clt", "--bogus"]).status.code(), Some(2));
    assert_eq!(lab(&["nonsense"]).status.code(), Some(2));
    assert_eq!(lab(&["clt", "--q", "0.5"]).status.code(), Some(2));
    assert_eq!(lab(&["mdp", "--sn", "fast"]).status.code(), Some(2));
    assert_eq!(lab(&["constants", "--q", "0"]).status.code(), Some(2));
    let bad = lab(&["constants", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("/nonexistent-dir/x.csv"));
    assert_eq!(
        lab(&["report", "--input", "/nonexistent.json"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(lab(&["--help"]).status.code(), Some(0));
}
