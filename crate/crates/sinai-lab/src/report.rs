//! Render a directory of suite results as one markdown report.
//!
//! The report is a pure function of the `*.json` files in the directory
//! (sorted by file name), so regenerating it is idempotent. Files that do
//! not parse as suite results are listed in their own section rather than
//! aborting the report; the exit code reflects only the parsed suites.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use serde::Deserialize;

use crate::suites::{Check, ReportRow};

/// The subset of a suite result the report needs. Extra fields are ignored
/// so the report stays compatible with older writers of the same schema.
#[derive(Debug, Deserialize)]
struct LooseResult {
    schema: u32,
    name: String,
    pass: bool,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    checks: Vec<Check>,
    #[serde(default)]
    table: Vec<ReportRow>,
}

/// A rendered report plus the verdict that drives the exit code.
pub struct Report {
    pub markdown: String,
    pub suites: usize,
    pub failures: usize,
    pub unreadable: usize,
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => "-".into(),
    }
}

/// Build the markdown report for `dir`. IO errors on the directory itself
/// are fatal; per-file problems are reported inside the document.
pub fn emit_report(dir: &Path) -> anyhow::Result<Report> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read results directory {}", dir.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.is_file())
        .collect();
    files.sort();

    let mut suites: Vec<(String, LooseResult)> = Vec::new();
    let mut unreadable: Vec<(String, String)> = Vec::new();
    for path in files {
        let fname = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let parsed = std::fs::read_to_string(&path)
            .map_err(|e| e.to_string())
            .and_then(|text| serde_json::from_str::<LooseResult>(&text).map_err(|e| e.to_string()))
            .and_then(|r| {
                if r.schema == 1 {
                    Ok(r)
                } else {
                    Err(format!("unsupported schema version {}", r.schema))
                }
            });
        match parsed {
            Ok(r) => suites.push((fname, r)),
            Err(e) => unreadable.push((fname, e)),
        }
    }

    let mut md = String::from("# sinai-lab report\n");
    if suites.is_empty() && unreadable.is_empty() {
        md.push_str("\nNo suite results found.\n");
    }

    let mut failures = 0usize;
    for (fname, r) in &suites {
        if !r.pass {
            failures += 1;
        }
        let verdict = if r.pass { "PASS" } else { "FAIL" };
        let _ = write!(md, "\n## {} - {verdict}\n\n", r.name);
        let _ = writeln!(md, "Source: `{fname}`");
        if let Some(seed) = r.seed {
            let _ = writeln!(md, "Seed: {seed}");
        }
        if !r.table.is_empty() {
            md.push_str("\n| quantity | estimate | stderr | prediction |\n");
            md.push_str("|---|---|---|---|\n");
            for row in &r.table {
                let _ = writeln!(
                    md,
                    "| {} | {} | {} | {} |",
                    row.label,
                    row.estimate,
                    fmt_opt(row.stderr),
                    fmt_opt(row.prediction)
                );
            }
        }
        if !r.checks.is_empty() {
            md.push_str("\n| check | status | observed |\n");
            md.push_str("|---|---|---|\n");
            for c in &r.checks {
                let _ = writeln!(
                    md,
                    "| {} | {} | {} |",
                    c.name,
                    if c.pass { "ok" } else { "FAIL" },
                    c.observed
                );
            }
        }
    }

    if !unreadable.is_empty() {
        md.push_str("\n## Unreadable files\n\n");
        for (fname, err) in &unreadable {
            let _ = writeln!(md, "- `{fname}`: {err}");
        }
    }

    let _ = write!(
        md,
        "\n---\n{} suite(s), {} failure(s), {} unreadable file(s)\n",
        suites.len(),
        failures,
        unreadable.len()
    );

    Ok(Report { markdown: md, suites: suites.len(), failures, unreadable: unreadable.len() })
}
