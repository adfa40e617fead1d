use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use multipoint_cli::config::BITS_ENV;
use multipoint_cli::render::{compare_records, parse_records};

fn multipoint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multipoint"))
        .args(args)
        .env_remove(BITS_ENV)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn golden(table: u8) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("tests/golden/table{table}.records"))
}

fn line<'a>(text: &'a str, prefix: &str) -> &'a str {
    text.lines()
        .find(|l| l.starts_with(prefix))
        .unwrap_or_else(|| panic!("no {prefix:?} line in\n{text}"))
}

#[test]
fn solve_reports_error_and_coc() {
    let o = multipoint(&[
        "solve",
        "--method",
        "FD1-M2",
        "--function",
        "f9",
        "--x0",
        "4.4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(line(&text, "error:"), "error: 5.10e-662  exponent: -662");
    assert_eq!(line(&text, "coc:"), "coc: 7.0000");
    assert!(text.contains("x3 = 4.152590736757158274996989004767139785814e+0"));
}

#[test]
fn solve_expression_in_one_step() {
    let o = multipoint(&["solve", "--method", "NM", "--expr", "x", "--x0", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("x1 = 0"));
    assert_eq!(line(&text, "root:"), "root: 0");
    assert!(line(&text, "status:").starts_with("status: converged"));
}

#[test]
fn solve_uses_table_seed_by_default() {
    let o = multipoint(&["solve", "--method", "FD6", "--function", "f11"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(line(&stdout(&o), "error:").ends_with("exponent: -169"));
}

#[test]
fn solve_exit_codes() {
    let o = multipoint(&[
        "solve",
        "--method",
        "TS1",
        "--function",
        "f7",
        "--x0",
        "1.0",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("exponent: dgt"));

    let o = multipoint(&["solve", "--method", "NM", "--expr", "ln(x)", "--x0", "-1"]);
    assert_eq!(o.status.code(), Some(3));

    for bad in [
        &["solve", "--method", "NOPE", "--function", "f1"][..],
        &["solve", "--method", "NM", "--function", "f99"],
        &["solve", "--method", "NM", "--expr", "x^"],
        &["solve", "--method", "NM", "--expr", "x"],
        &[
            "solve",
            "--method",
            "NM",
            "--function",
            "f1",
            "--kappa",
            "0.1",
        ],
        &[
            "solve",
            "--method",
            "FD5",
            "--function",
            "f1",
            "--kappa",
            "0",
        ],
        &["solve", "--method", "NM", "--function", "f1", "--bits", "8"],
        &["solve", "--function", "f1"],
        &["frobnicate"],
    ] {
        let o = multipoint(bad);
        assert_eq!(o.status.code(), Some(64), "{bad:?}");
        assert!(!o.stderr.is_empty(), "{bad:?}");
    }
}

#[test]
fn kappa_override_changes_the_run() {
    let base = multipoint(&["solve", "--method", "FD5", "--function", "f4"]);
    let other = multipoint(&[
        "solve",
        "--method",
        "FD5",
        "--function",
        "f4",
        "--kappa",
        "-1/2",
    ]);
    assert_eq!(other.status.code(), Some(0));
    assert_ne!(
        line(&stdout(&base), "error:"),
        line(&stdout(&other), "error:")
    );
}

#[test]
fn bench_matches_golden_records() {
    for table in [2, 3, 4, 5, 6, 7] {
        let o = multipoint(&[
            "bench",
            "--table",
            &table.to_string(),
            "--format",
            "records",
        ]);
        assert_eq!(o.status.code(), Some(0));
        let want = fs::read_to_string(golden(table)).unwrap();
        assert_eq!(stdout(&o), want, "table {table}");
    }
}

#[test]
fn bench_is_byte_stable() {
    let a = multipoint(&[
        "bench", "--table", "5", "--format", "records", "--bits", "1024",
    ]);
    let b = multipoint(&[
        "bench", "--table", "5", "--format", "records", "--bits", "1024",
    ]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn bench_text_layout() {
    let o = multipoint(&["bench", "--table", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 14);
    assert!(lines[0].starts_with("Table 2:"));
    let header: Vec<&str> = lines[1].split_whitespace().collect();
    assert_eq!(
        header,
        ["function", "x0", "FD1-M1", "SG", "NT1", "NT2", "CH", "GR", "AL"]
    );
    let f2: Vec<&str> = lines[3].split_whitespace().collect();
    assert_eq!(&f2[..3], ["f2", "1.1", "-190"]);
    for row in &lines[2..] {
        assert_eq!(row.split_whitespace().count(), 9, "{row}");
    }
}

#[test]
fn bench_failure_cells() {
    let o = multipoint(&["bench", "--table", "6", "--format", "csv"]);
    let text = stdout(&o);
    let f2: Vec<&str> = line(&text, "f2,").split(',').collect();
    assert_eq!(f2[5], "-1.1470");
    let f7: Vec<&str> = line(&text, "f7,").split(',').collect();
    assert_eq!((f7[5], f7[6], f7[9]), ("X", "X", "X"));

    let o = multipoint(&[
        "bench",
        "--table",
        "7",
        "--format",
        "csv",
        "--methods",
        "FD7",
        "--functions",
        "f10",
    ]);
    assert_eq!(stdout(&o), "function,x0,FD7,FD7 COC\nf10,1.5,-262,7.0000\n");
}

#[test]
fn bench_rejects_unknown_tables_and_columns() {
    assert_eq!(
        multipoint(&["bench", "--table", "9"]).status.code(),
        Some(64)
    );
    assert_eq!(
        multipoint(&["bench", "--table", "2", "--methods", "FD7"])
            .status
            .code(),
        Some(64)
    );
    assert_eq!(
        multipoint(&["bench", "--table", "2", "--format", "xml"])
            .status
            .code(),
        Some(64)
    );
}

#[test]
fn bench_writes_and_checks_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t4.records");
    let o = multipoint(&[
        "bench",
        "--table",
        "4",
        "--format",
        "records",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert_eq!(
        fs::read_to_string(&out).unwrap(),
        fs::read_to_string(golden(4)).unwrap()
    );

    let o = multipoint(&[
        "bench",
        "--table",
        "4",
        "--format",
        "csv",
        "--check",
        golden(4).to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("check: 36 of 36 cells match\n"));

    // 512 bits cannot resolve the deepest errors, so the zero-slack check fails
    let o = multipoint(&[
        "bench",
        "--table",
        "4",
        "--format",
        "csv",
        "--bits",
        "512",
        "--check",
        golden(4).to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("mismatch: "));
}

#[test]
fn config_file_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# reduced run\nformat = csv\nmethods = FD4\nfunctions = f4, f9\n",
    )
    .unwrap();
    let o = multipoint(&["bench", "--table", "5", "--config", cfg.to_str().unwrap()]);
    assert_eq!(stdout(&o), "function,x0,FD4\nf4,-0.5,-220\nf9,4.4,-466\n");

    // flags beat the file
    let o = multipoint(&[
        "bench",
        "--table",
        "5",
        "--config",
        cfg.to_str().unwrap(),
        "--functions",
        "f9",
    ]);
    assert_eq!(stdout(&o), "function,x0,FD4\nf9,4.4,-466\n");

    let o = Command::new(env!("CARGO_BIN_EXE_multipoint"))
        .args(["solve", "--method", "NM", "--function", "f1"])
        .env(BITS_ENV, "256")
        .output()
        .unwrap();
    assert!(stdout(&o).contains("bits: 256 "));
    let o = Command::new(env!("CARGO_BIN_EXE_multipoint"))
        .args([
            "solve",
            "--method",
            "NM",
            "--function",
            "f1",
            "--bits",
            "512",
        ])
        .env(BITS_ENV, "256")
        .output()
        .unwrap();
    assert!(stdout(&o).contains("bits: 512 "));
    let o = Command::new(env!("CARGO_BIN_EXE_multipoint"))
        .args(["list", "methods"])
        .env(BITS_ENV, "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(64));

    fs::write(&cfg, "bits 512\n").unwrap();
    let o = multipoint(&["list", "methods", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn verify_order_exit_codes() {
    let o = multipoint(&["verify-order", "--family", "FD2", "--conditions", "seventh"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(line(&text, "certified order:"), "certified order: 7");
    assert_eq!(line(&text, "status:"), "status: certified");

    let o = multipoint(&["verify-order", "--family", "FD4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(line(&stdout(&o), "certified order:"), "certified order: 6");

    let o = multipoint(&["verify-order", "--family", "FD1", "--conditions", "none"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert_eq!(line(&text, "certified order:"), "certified order: 4");
    assert!(!line(&text, "leading coefficient").ends_with(": 0"));

    let o = multipoint(&["verify-order", "--method", "NM"]);
    assert_eq!(o.status.code(), Some(0));

    assert_eq!(
        multipoint(&["verify-order", "--family", "FD9"])
            .status
            .code(),
        Some(64)
    );
    let o = multipoint(&["verify-order", "--family", "FD2", "--conditions", "nope"]);
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown condition set \"nope\""));
    assert_eq!(
        multipoint(&["verify-order", "--family", "FD3", "--conditions", "seventh"])
            .status
            .code(),
        Some(64)
    );
}

#[test]
fn listings() {
    let o = multipoint(&["list", "methods"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let fd7: Vec<&str> = line(&text, "FD7 ").split_whitespace().collect();
    assert_eq!(&fd7[..5], ["FD7", "derivative-free", "7", "4", "1.6266"]);
    assert_eq!(
        text.lines().count(),
        1 + multipoint_core::schemes::BUILTIN_METHODS.len()
    );

    let o = multipoint(&["list", "functions", "--bits", "256"]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 13);
    assert!(line(&text, "f7 ").contains("10*exp(-x^2)-1"));
    assert!(line(&text, "f8 ").ends_with("1.41421356237309504880168872421e+0"));

    let o = multipoint(&["list", "methods", "--filter", "FD1"]);
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn golden_pairs_share_runs() {
    let strip = |t: u8| -> String {
        fs::read_to_string(golden(t))
            .unwrap()
            .lines()
            .map(|l| l.split_once(' ').unwrap().1.to_string() + "\n")
            .collect()
    };
    assert_eq!(strip(2), strip(3));
    assert_eq!(strip(5), strip(6));
}

#[test]
fn golden_records_parse_and_self_compare() {
    for t in [2, 3, 4, 5, 6, 7] {
        let recs = parse_records(&fs::read_to_string(golden(t)).unwrap()).unwrap();
        assert!(compare_records(&recs, &recs, 0, 0.0).is_empty());
        for r in &recs {
            for key in ["function", "column", "status", "class", "exponent", "coc"] {
                assert!(r.contains_key(key), "table {t}: {key}");
            }
        }
    }
}
