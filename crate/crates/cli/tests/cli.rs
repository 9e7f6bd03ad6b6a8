use std::path::Path;
use std::process::{Command, Output};

fn logsum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logsum"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn solve_is_deterministic() {
    let args = [
        "solve", "--solver", "amp", "--n", "120", "--trials", "1", "--seed", "42",
    ];
    let a = logsum(&args);
    let b = logsum(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn worker_count_does_not_change_results() {
    let base = [
        "solve", "--solver", "admm", "--n", "100", "--trials", "4", "--seed", "9",
    ];
    let one = logsum(&[&base[..], &["--jobs", "1"]].concat());
    let three = logsum(&[&base[..], &["--jobs", "3"]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, three.stdout);
}

#[test]
fn zero_signal_admm_has_zero_mse() {
    let out = logsum(&["solve", "--solver", "admmn", "--rho", "0", "--sigma2", "0", "--n", "80"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let mse_col = headers.iter().position(|h| h == "mse").unwrap();
    for rec in rdr.records() {
        assert_eq!(rec.unwrap()[mse_col].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn se_solve_emits_one_row_without_data() {
    let out = logsum(&["solve", "--solver", "se", "--penalty", "l1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("fixed_point,,,se,l1,,"));
}

#[test]
fn exit_codes() {
    assert_eq!(logsum(&["solve", "--alpha", "0.5,0.6"]).status.code(), Some(2));
    assert_eq!(logsum(&["mse-sweep", "--sigma2", "0"]).status.code(), Some(2));
    assert_eq!(logsum(&["solve", "--penalty", "l2"]).status.code(), Some(2));
    assert_eq!(logsum(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(
        logsum(&["solve", "--config", "/nonexistent/cfg.toml"]).status.code(),
        Some(2)
    );
    assert_eq!(
        logsum(&["solve", "--solver", "se", "--out", "/nonexistent/dir/out.csv"])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "alpha = [0.5, 0.9]\nrho = 0.2\nlambda = 0.05\npenalty = \"l1\"\n").unwrap();
    let out = logsum(&["se-fixed-point", "--config", cfg.to_str().unwrap(), "--rho", "0.3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("0.5,0.3,0.01,0.05,l1,"));
    assert!(rows[1].starts_with("0.9,0.3,0.01,0.05,l1,"));
}

#[test]
fn phase_diagram_writes_grid_boundary_and_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("pd.csv");
    let jsonl_path = dir.path().join("pd.jsonl");
    let out = logsum(&[
        "phase-diagram",
        "--alpha",
        "0.3,0.9",
        "--rho",
        "0.2",
        "--n",
        "100",
        "--trials",
        "2",
        "--out",
        out_path.to_str().unwrap(),
        "--jsonl",
        jsonl_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let grid = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(grid.lines().count(), 3);
    assert_eq!(std::fs::read_to_string(&jsonl_path).unwrap().lines().count(), 2);
    let success: Vec<&str> = grid.lines().skip(1).map(|l| l.split(',').nth(8).unwrap()).collect();
    assert_eq!(success, ["false", "true"]);

    let boundary = std::fs::read_to_string(dir.path().join("pd_boundary.csv")).unwrap();
    let mut lines = boundary.lines();
    assert_eq!(lines.next(), Some("rho,penalty,alpha_c,status"));
    let alpha_c: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(alpha_c.len(), 2);
    assert!(alpha_c[0] <= alpha_c[1]);
    assert!(Path::new(&dir.path().join("pd_boundary.jsonl")).exists());
}

#[test]
fn mse_sweep_rows_are_ordered_and_complete() {
    let out = logsum(&[
        "mse-sweep",
        "--n",
        "100",
        "--trials",
        "2",
        "--lambda",
        "0.01,100",
        "--solver",
        "se,admm",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let keys: Vec<String> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').take(3).collect::<Vec<_>>().join(","))
        .collect();
    assert_eq!(
        keys,
        [
            "0.01,se,logsum",
            "0.01,se,l1",
            "0.01,admm,logsum",
            "0.01,admm,l1",
            "100.0,se,logsum",
            "100.0,se,l1",
            "100.0,admm,logsum",
            "100.0,admm,l1"
        ]
    );
}

#[test]
fn help_documents_columns() {
    let out = logsum(&["best-mse-grid", "--help"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("alpha,rho,sigma2,lambda_logsum,mse_logsum,lambda_l1,mse_l1,d,status"));
}

#[test]
fn config_seeds_parse_or_fail_as_named() {
    use logsum_cli::{Command, ExperimentConfig, Overrides};
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/parse_config");
    for (name, command) in [
        ("sweep.toml", Command::MseSweep),
        ("phase.toml", Command::PhaseDiagram),
        ("scalar.toml", Command::Solve),
        ("grids.toml", Command::MseSweep),
    ] {
        let text = std::fs::read_to_string(dir.join(name)).unwrap();
        let o = Overrides::from_toml_str(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        ExperimentConfig::resolve(command, o).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    let zero = Overrides::from_toml_str(&std::fs::read_to_string(dir.join("zero_grid.toml")).unwrap()).unwrap();
    assert!(ExperimentConfig::resolve(Command::PhaseDiagram, zero).is_err());
    let unknown = std::fs::read_to_string(dir.join("unknown_key.toml")).unwrap();
    assert!(Overrides::from_toml_str(&unknown).is_err());
}
