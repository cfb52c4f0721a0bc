//! `sinai-lab`: run the Sinai RWRE verification suites from a JSON config,
//! summarize result directories, and print density tables.
//!
//! Exit codes: 0 when every assertion of the invoked command passes, 2 when
//! a suite or report carries a failed assertion, 1 for config or runtime
//! errors (unreadable files, unknown keys, degenerate parameters).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sinai_lab::config::RunConfig;
use sinai_lab::report::emit_report;
use sinai_lab::suites::{expand_all, run_suite, summary_line};
use sinai_lab::write_atomic;

#[derive(Parser)]
#[command(name = "sinai-lab", version, about = "Sinai RWRE simulation suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the suite named by a JSON config and persist results.
    Run(RunArgs),
    /// Summarize a directory of suite results as markdown.
    Report {
        /// Directory containing `<suite>.json` result files.
        dir: PathBuf,
    },
    /// Evaluate the limit density without simulating anything.
    Density {
        #[command(subcommand)]
        what: DensityCommand,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON run configuration.
    config: PathBuf,
    /// Worker threads (default: the config's `threads`, else all cores).
    /// Results are identical for every choice.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory (default: the config's `out`, else `results`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DensityCommand {
    /// Print the density table as CSV on stdout.
    Table {
        #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        /// Certified truncation error per table entry.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap's own exit code for bad flags is 2, which this tool
            // reserves for failed assertions; remap usage errors to 1 and
            // keep 0 for --help / --version.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Run one command; `Ok(bool)` is "did every assertion pass".
fn dispatch(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run(args) => run(args),
        Command::Report { dir } => {
            let report = emit_report(&dir)?;
            print!("{}", report.markdown);
            write_atomic(&dir.join("report.md"), report.markdown.as_bytes())?;
            Ok(report.failures == 0)
        }
        Command::Density { what } => {
            let DensityCommand::Table { from, to, step, tol } = what;
            let rows = sinai_core::kesten::density_table(from, to, step, tol)
                .map_err(|e| anyhow::anyhow!("runtime error: {e}"))?;
            let mut out = String::from("x,phi,error_bound\n");
            for r in &rows {
                out.push_str(&format!("{},{},{}\n", r.x, r.value, r.error_bound));
            }
            print!("{out}");
            Ok(true)
        }
    }
}

fn run(args: RunArgs) -> anyhow::Result<bool> {
    let cfg = RunConfig::load(&args.config)?;
    let threads = args.threads.or(cfg.threads);
    if let Some(k) = threads {
        // Ignore the error from a pool that already exists (only possible
        // in-process, e.g. under tests); the CLI sets it once.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    let out_dir = args
        .out
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));
    std::fs::create_dir_all(&out_dir)?;

    let suites: Vec<&str> =
        if cfg.suite == "all" { expand_all(&cfg) } else { vec![cfg.suite.as_str()] };

    let mut all_pass = true;
    for name in suites {
        let out = run_suite(name, &cfg)?;
        let mut json = serde_json::to_string_pretty(&out.result)?;
        json.push('\n');
        write_atomic(&out_dir.join(format!("{name}.json")), json.as_bytes())?;
        for (fname, csv) in &out.csv {
            write_atomic(&out_dir.join(fname), csv.as_bytes())?;
        }
        println!("{}", summary_line(&out.result));
        all_pass &= out.result.pass;
    }
    Ok(all_pass)
}
