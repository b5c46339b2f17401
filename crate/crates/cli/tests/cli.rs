use std::path::Path;
use std::process::{Command, Output};

fn rkhs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rkhs"))
        .args(args)
        .output()
        .expect("spawn rkhs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|c| {
                    if c.is_empty() {
                        f64::NAN
                    } else {
                        c.parse().unwrap()
                    }
                })
                .collect()
        })
        .collect();
    (header, rows)
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const EX1_TOML: &str = r#"
name = "ex1"
k = 2
a = 0
T = 1
alpha = 0
beta = 0
rhs = "x^3 + x^2 + 12*x + 6 - u"
"#;

#[test]
fn solve_ex1_reproduces_table_layout() {
    let o = rkhs(&[
        "solve",
        "--problem",
        "ex1",
        "--n",
        "100",
        "--grid",
        "paper",
        "--format",
        "csv",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(
        header,
        [
            "x_i",
            "Exact solution",
            "Approximate solution",
            "Absolute Error",
            "Relative error"
        ]
    );
    let printed = [0.029696, 0.135168, 0.340992, 0.671744, 1.152000, 1.806336];
    assert_eq!(rows.len(), 6);
    for (row, want) in rows.iter().zip(printed) {
        assert!((row[1] - want).abs() < 5e-7);
        assert!(row[3] <= 1e-5);
    }
}

#[test]
fn solve_ex2_error_band() {
    let o = rkhs(&["solve", "--problem", "ex2", "--n", "100"]);
    assert!(o.status.success());
    let (_, rows) = csv_rows(&stdout(&o));
    let max = rows.iter().map(|r| r[3]).fold(0.0, f64::max);
    assert!(max <= 1e-5, "{max}");
}

#[test]
fn zero_points_is_a_config_error() {
    let o = rkhs(&["solve", "--problem", "ex1", "--n", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n must be ≥ 1"), "{}", stderr(&o));
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ex2.toml", &EX1_TOML.replace("ex1", "custom"));
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (out, extra) in [(&a, None), (&b, Some("--sequential"))] {
        let mut args = vec!["solve", "--config", &cfg, "--output", out.to_str().unwrap()];
        args.extend(extra);
        assert!(rkhs(&args).status.success());
    }
    let first = std::fs::read(&a).unwrap();
    assert!(!first.is_empty());
    assert_eq!(first, std::fs::read(&b).unwrap());
    let again = rkhs(&["solve", "--config", &cfg]);
    assert_eq!(again.stdout, first);
}

#[test]
fn config_file_matches_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "ex1.toml",
        &format!("{EX1_TOML}exact = \"x^3 + x^2\"\n"),
    );
    let from_file = rkhs(&["solve", "--config", &cfg, "--strict"]);
    assert!(from_file.status.success(), "{}", stderr(&from_file));
    let builtin = rkhs(&["solve", "--problem", "ex1"]);
    let (_, f) = csv_rows(&stdout(&from_file));
    let (_, b) = csv_rows(&stdout(&builtin));
    for (rf, rb) in f.iter().zip(&b) {
        assert_eq!(rf[0], rb[0]);
        assert!((rf[1] - rb[1]).abs() < 1e-12);
        assert!((rf[2] - rb[2]).abs() < 1e-12);
    }
}

#[test]
fn missing_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &EX1_TOML.replace("k = 2\n", ""));
    let o = rkhs(&["solve", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`k`"), "{}", stderr(&o));
}

#[test]
fn wrong_exact_solution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "w.toml",
        &format!("{EX1_TOML}exact = \"x^2\"\n"),
    );
    let strict = rkhs(&["solve", "--config", &cfg, "--strict"]);
    assert_eq!(strict.status.code(), Some(2));
    assert!(stderr(&strict).contains("residual"));
    let lenient = rkhs(&["solve", "--config", &cfg]);
    assert!(lenient.status.success());
    assert!(stderr(&lenient).contains("warning"));
}

#[test]
fn exit_codes_by_error_kind() {
    let parse = rkhs(&["solve", "--rhs", "x^3 +* u", "--k", "2"]);
    assert_eq!(parse.status.code(), Some(3));
    assert!(stderr(&parse).contains("offset 5"));

    let domain = rkhs(&["solve", "--rhs", "ln(u)", "--k", "2"]);
    assert_eq!(domain.status.code(), Some(5));

    let numeric = rkhs(&["solve", "--rhs", "exp(u)", "--k", "2", "--alpha", "800"]);
    assert_eq!(numeric.status.code(), Some(4));

    let unknown = rkhs(&["solve", "--problem", "ex9"]);
    assert_eq!(unknown.status.code(), Some(2));

    let outside = rkhs(&["solve", "--problem", "ex1", "--grid", "0.5,1.5"]);
    assert_eq!(outside.status.code(), Some(2));
}

#[test]
fn without_exact_solution_compares_to_reference() {
    let o = rkhs(&[
        "solve",
        "--rhs",
        "-4*(2*exp(u) + exp(u/2))",
        "--k",
        "2",
        "--name",
        "lane",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header[2], "Reference solution");
    assert!(rows.iter().all(|r| r[3] <= 1e-4));
}

#[test]
fn json_mirrors_csv() {
    let o = rkhs(&["solve", "--problem", "ex3", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["problem"], "ex3");
    assert_eq!(v["stats"]["method"], "nonlinear");
    assert_eq!(v["rows"].as_array().unwrap().len(), 6);
    assert!(v["max_absolute_error"].as_f64().unwrap() <= 1e-5);
}

#[test]
fn converge_trends() {
    let o = rkhs(&["converge", "--problem", "ex1", "--n-list", "25,50,100"]);
    assert!(o.status.success());
    let (_, rows) = csv_rows(&stdout(&o));
    assert_eq!(
        rows.iter().map(|r| r[0]).collect::<Vec<_>>(),
        [25.0, 50.0, 100.0]
    );
    assert!(rows.windows(2).all(|w| w[1][1] < w[0][1]));
    assert!(!stderr(&o).contains("NOT"));

    let o = rkhs(&[
        "converge",
        "--problem",
        "ex3",
        "--n-list",
        "50,100",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["residual_monotone"], true);

    let empty = rkhs(&["converge", "--problem", "ex1", "--n-list", ""]);
    assert_eq!(empty.status.code(), Some(2));
}

#[test]
fn kernel_dump_section() {
    let o = rkhs(&["kernel-dump", "--x", "0.5", "--resolution", "100"]);
    assert!(o.status.success());
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["y", "R", "dR_dy", "d2R_dy2", "symmetry_defect"]);
    assert_eq!(rows.len(), 101);
    assert!((rows[25][1] - 0.004_158_528_6).abs() < 1e-10);
    assert!(rows.iter().all(|r| r[4] <= 1e-10));

    let outside = rkhs(&["kernel-dump", "--x", "1.5"]);
    assert_eq!(outside.status.code(), Some(2));
}

#[test]
fn gram_dump_is_symmetric() {
    let o = rkhs(&["gram-dump", "--problem", "ex2", "--n", "4"]);
    assert!(o.status.success());
    let (_, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 16);
    let g = |i: usize, j: usize| rows[i * 4 + j][4];
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(g(i, j), g(j, i));
        }
    }
    assert!(stderr(&o).contains("orthonormality defect"));
}
