//! Table and record output.

use std::collections::BTreeMap;
use std::fmt::Write;

use multipoint_core::bigreal::format_scientific;
use multipoint_core::diagnostics::RunReport;
use multipoint_core::tables::{Metric, TableRun};

use crate::config::Format;

fn error_value(r: &RunReport) -> String {
    match &r.final_abs_error {
        Some(e) if e.is_finite() => format_scientific(e, 3),
        _ => "-".into(),
    }
}

/// Header and cell strings, one row per function.
fn grid(run: &TableRun) -> (Vec<String>, Vec<Vec<String>>) {
    let spec = &run.spec;
    let mut header = vec!["function".to_string(), "x0".to_string()];
    for col in &spec.columns {
        match spec.metric {
            Metric::Error | Metric::Coc => header.push(col.label.to_string()),
            Metric::Both => {
                header.push(col.label.to_string());
                header.push(format!("{} COC", col.label));
            }
        }
    }
    let width = spec.columns.len();
    let rows = spec
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut line = vec![row.function.to_string(), row.x0.to_string()];
            for cell in &run.cells[i * width..(i + 1) * width] {
                let r = &cell.report;
                match spec.metric {
                    Metric::Error => line.push(r.error_cell()),
                    Metric::Coc => line.push(r.coc_cell()),
                    Metric::Both => {
                        line.push(r.error_cell());
                        line.push(r.coc_cell());
                    }
                }
            }
            line
        })
        .collect();
    (header, rows)
}

pub fn render_table(run: &TableRun, format: Format) -> String {
    match format {
        Format::Text => text(run),
        Format::Csv => csv(run),
        Format::Records => records(run),
    }
}

fn text(run: &TableRun) -> String {
    let (header, rows) = grid(run);
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in &rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Table {}: {} (TNFE = {}, {} bits)",
        run.spec.id, run.spec.title, run.tnfe, run.bits
    );
    for line in std::iter::once(&header).chain(&rows) {
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| {
                if i < 2 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    let kappas: Vec<String> = run
        .cells
        .iter()
        .filter(|c| run.spec.columns[c.col].row_kappa)
        .map(|c| format!("{}: {}", run.spec.rows[c.row].function, c.method))
        .collect();
    if !kappas.is_empty() {
        let _ = writeln!(out, "per-row methods: {}", kappas.join(", "));
    }
    out
}

fn csv(run: &TableRun) -> String {
    let (header, rows) = grid(run);
    let mut out = String::new();
    for line in std::iter::once(&header).chain(&rows) {
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

fn records(run: &TableRun) -> String {
    let mut out = String::new();
    for cell in &run.cells {
        let r = &cell.report;
        let row = &run.spec.rows[cell.row];
        let _ = writeln!(
            out,
            "table={} bits={} tnfe={} function={} x0={} column={} method={} status={} class={} \
             error={} exponent={} coc={} evals={} iterations={}",
            run.spec.id,
            run.bits,
            run.tnfe,
            row.function,
            row.x0,
            run.spec.columns[cell.col].label,
            cell.method,
            r.status,
            r.class,
            error_value(r),
            r.error_cell(),
            r.coc_cell(),
            r.tnfe_used,
            r.iterations,
        );
    }
    out
}

/// One parsed record line.
pub type Record = BTreeMap<String, String>;

pub fn parse_records(text: &str) -> Result<Vec<Record>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            line.split_whitespace()
                .map(|tok| {
                    tok.split_once('=')
                        .map(|(k, v)| (k.to_string(), v.to_string()))
                        .ok_or_else(|| format!("line {}: token {tok:?} is not key=value", i + 1))
                })
                .collect()
        })
        .collect()
}

fn cell_key(r: &Record) -> (String, String, String) {
    let get = |k: &str| r.get(k).cloned().unwrap_or_default();
    (get("table"), get("function"), get("column"))
}

/// Differences between two record sets beyond the given slacks.
pub fn compare_records(
    expected: &[Record],
    actual: &[Record],
    exponent_slack: i64,
    coc_slack: f64,
) -> Vec<String> {
    let mut problems = Vec::new();
    let found: BTreeMap<_, _> = actual.iter().map(|r| (cell_key(r), r)).collect();
    for want in expected {
        let key = cell_key(want);
        let label = format!("table {} {}/{}", key.0, key.2, key.1);
        let Some(got) = found.get(&key) else {
            problems.push(format!("{label}: missing"));
            continue;
        };
        for field in ["status", "class"] {
            if want.get(field) != got.get(field) {
                problems.push(format!(
                    "{label}: {field} {:?} vs {:?}",
                    got.get(field),
                    want.get(field)
                ));
            }
        }
        let near = |field: &str, slack: f64| {
            let (a, b) = (want.get(field), got.get(field));
            match (
                a.and_then(|s| s.parse::<f64>().ok()),
                b.and_then(|s| s.parse::<f64>().ok()),
            ) {
                (Some(x), Some(y)) => (x - y).abs() <= slack,
                _ => a == b,
            }
        };
        if !near("exponent", exponent_slack as f64) {
            problems.push(format!(
                "{label}: exponent {:?} vs {:?}",
                got.get("exponent"),
                want.get("exponent")
            ));
        }
        if !near("coc", coc_slack) {
            problems.push(format!(
                "{label}: coc {:?} vs {:?}",
                got.get("coc"),
                want.get("coc")
            ));
        }
    }
    if actual.len() > expected.len() {
        problems.push(format!(
            "{} records beyond the {} expected",
            actual.len() - expected.len(),
            expected.len()
        ));
    }
    problems
}
