//! The suite registry: each suite validates its slice of the config, runs
//! the corresponding `sinai-core` experiment, and packages the outcome as a
//! result object (JSON), one or two CSV tables, and a list of named checks.
//!
//! Checks are the runner's assertions: `pass` is their conjunction and
//! drives the process exit code (0 pass / 2 fail). Tolerances are pinned
//! here as constants, not configurable, so a passing run cannot be produced
//! by loosening a knob in the config. Statistical checks compare Monte
//! Carlo identities at [`SE_MULT`] combined standard errors; fixed-precision
//! checks carry their own named constants below.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::anyhow;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use sinai_core::envgen::{EnvLaw, PotentialWindow};
use sinai_core::experiments::{
    check_renewal_identity, classify_events, coupling_experiment, estimate_bh_law,
    estimate_c_constants, estimate_slope_moments, verify_sinai_llt, LltMethod,
};
use sinai_core::kesten::{density_table, phi_cdf, phi_inf};
use sinai_core::rng::mix;

use crate::config::{LawSpec, RunConfig};

/// Width of the acceptance band for Monte Carlo identity checks, in combined
/// standard errors. Four sigma keeps the per-check false-alarm rate near
/// 6e-5, so a multi-point grid stays quiet under rerun with fresh seeds.
pub const SE_MULT: f64 = 4.0;
/// The density's central value is known in closed form; no excuse for more
/// slack than accumulated rounding.
pub const DENSITY_CENTER_TOL: f64 = 1e-12;
/// Total mass of the density by adaptive quadrature (an implementation
/// check, not an identity: the quadrature knows nothing about the series).
pub const DENSITY_INTEGRAL_TOL: f64 = 1e-8;
/// Integration endpoint beyond which the certified tail bound is far below
/// [`DENSITY_INTEGRAL_TOL`].
const DENSITY_CDF_SPAN: f64 = 40.0;
/// Coupling suite: required fraction of qualifying environments whose
/// quenched-vs-invariant discrepancy clears the theorem bound.
pub const COUPLING_PASS_FRACTION: f64 = 0.9;
/// Constants suite: admissible window for the sign probability
/// `P(b_h > 0)`, whose limit is 1/2.
pub const P_POSITIVE_RANGE: (f64, f64) = (0.45, 0.55);
/// Constants suite: max/min ratio allowed for the scaled persistence
/// probabilities `sqrt(x) P(G_x)` across the horizon grid (flat in the
/// limit).
pub const SPITZER_FLATNESS_RATIO: f64 = 2.0;
/// Scale-free default grid for the bottom law, in units of `h^2 / sigma^2`.
const U_GRID: [f64; 9] = [0.0, 0.125, 0.25, 0.375, 0.5, 0.75, 1.0, 1.5, 2.0];

/// One named assertion with a human-readable observation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub observed: String,
}

impl Check {
    fn new(name: &str, pass: bool, observed: String) -> Self {
        Check { name: name.to_string(), pass, observed }
    }
}

/// One line of the report table: a labeled estimate with optional error bar
/// and prediction, the common shape every suite can project into.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub estimate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<f64>,
}

impl ReportRow {
    fn new(label: String, estimate: f64, stderr: Option<f64>, prediction: Option<f64>) -> Self {
        ReportRow { label, estimate, stderr, prediction }
    }
}

/// The persisted result of one suite run. Serialization order is fixed and
/// every map is a `BTreeMap`, so the JSON bytes are a pure function of the
/// config (thread count included: it never appears here).
#[derive(Debug, Serialize)]
pub struct SuiteResult {
    pub schema: u32,
    pub name: String,
    pub law: LawSpec,
    pub seed: u64,
    pub params: BTreeMap<String, Value>,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub table: Vec<ReportRow>,
    pub rows: Value,
}

/// A suite's files: the JSON result and one or more named CSV tables.
#[derive(Debug)]
pub struct SuiteOutput {
    pub result: SuiteResult,
    pub csv: Vec<(String, String)>,
}

/// Run one suite by name. Errors are config or runtime problems (exit 1
/// territory); statistical failures come back as `pass = false`.
pub fn run_suite(name: &str, cfg: &RunConfig) -> anyhow::Result<SuiteOutput> {
    let law = cfg.law.build()?;
    match name {
        "density" => density_suite(cfg),
        "bh-llt" => bh_llt_suite(cfg, law),
        "renewal" => renewal_suite(cfg, law),
        "slopes" => slopes_suite(cfg, law),
        "constants" => constants_suite(cfg, law),
        "events" => events_suite(cfg, law),
        "coupling" => coupling_suite(cfg, law),
        "sinai-llt" => sinai_llt_suite(cfg, law),
        other => Err(anyhow!("config error: unknown suite '{other}'")),
    }
}

/// Expand `all` to the suites whose required keys are present, in a fixed
/// order. `density` needs nothing beyond the seed, so it always runs.
pub fn expand_all(cfg: &RunConfig) -> Vec<&'static str> {
    let mut out = vec!["density"];
    let have_h = cfg.h.is_some() || cfg.h_grid.is_some();
    if cfg.h.is_some() && cfg.n_envs.is_some() {
        out.extend(["bh-llt", "renewal", "slopes"]);
    }
    if have_h && cfg.n_envs.is_some() {
        out.push("constants");
    }
    if cfg.n.is_some() && cfg.n_envs.is_some() {
        out.extend(["events", "coupling", "sinai-llt"]);
    }
    out
}

fn core_err(e: sinai_core::Error) -> anyhow::Error {
    anyhow!("runtime error: {e}")
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn csv_table(header: &str, rows: impl Iterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

// ---------------------------------------------------------------------------
// density

fn density_suite(cfg: &RunConfig) -> anyhow::Result<SuiteOutput> {
    let p = cfg.density.unwrap_or_default();
    let table = density_table(p.from, p.to, p.step, p.tol).map_err(core_err)?;
    let center = phi_inf(0.0, p.tol);
    let total = phi_cdf(DENSITY_CDF_SPAN, DENSITY_INTEGRAL_TOL * 1e-1);

    let mut checks = Vec::new();
    checks.push(Check::new(
        "center value 1/2",
        (center.value - 0.5).abs() <= DENSITY_CENTER_TOL,
        format!("phi(0) = {}", fmt_f64(center.value)),
    ));
    checks.push(Check::new(
        "total mass 1",
        (total - 1.0).abs() <= DENSITY_INTEGRAL_TOL,
        format!("quadrature over |x| <= {DENSITY_CDF_SPAN} gives {}", fmt_f64(total)),
    ));
    let worst_bound = table.iter().map(|r| r.error_bound).fold(0.0, f64::max);
    checks.push(Check::new(
        "certified truncation error",
        worst_bound <= p.tol,
        format!("max error bound {} (tol {})", fmt_f64(worst_bound), fmt_f64(p.tol)),
    ));
    let symmetric = [0.25, 0.5, 1.5, 3.0, 4.75]
        .iter()
        .all(|&x| phi_inf(x, p.tol).value == phi_inf(-x, p.tol).value);
    checks.push(Check::new("even function", symmetric, "phi(x) == phi(-x) bitwise".into()));
    // Unimodality on the sampled grid; adjacent points may tie within the
    // certified bounds, hence the slack.
    let mut monotone = true;
    let mut prev: Option<(f64, f64)> = None;
    for r in &table {
        if r.x >= 0.0 {
            if let Some((_, pv)) = prev {
                if r.value > pv + 2.0 * p.tol {
                    monotone = false;
                }
            }
            prev = Some((r.x, r.value));
        }
    }
    checks.push(Check::new(
        "nonincreasing for x >= 0",
        monotone,
        format!("checked {} grid points", table.len()),
    ));

    let pass = checks.iter().all(|c| c.pass);
    let report = vec![
        ReportRow::new("phi(0)".into(), center.value, None, Some(0.5)),
        ReportRow::new("total mass".into(), total, None, Some(1.0)),
    ];
    let csv = csv_table(
        "x,phi,error_bound",
        table.iter().map(|r| format!("{},{},{}", fmt_f64(r.x), fmt_f64(r.value), fmt_f64(r.error_bound))),
    );
    let mut params = BTreeMap::new();
    params.insert("from".into(), json!(p.from));
    params.insert("to".into(), json!(p.to));
    params.insert("step".into(), json!(p.step));
    params.insert("tol".into(), json!(p.tol));
    Ok(SuiteOutput {
        result: SuiteResult {
            schema: 1,
            name: "density".into(),
            law: cfg.law,
            seed: cfg.seed,
            params,
            pass,
            checks,
            table: report,
            rows: serde_json::to_value(&table)?,
        },
        csv: vec![("density.csv".into(), csv)],
    })
}

// ---------------------------------------------------------------------------
// bh-llt

fn default_bottom_grid(h: f64, sigma: f64) -> Vec<i64> {
    let scale = h * h / (sigma * sigma);
    let mut grid: Vec<i64> = U_GRID
        .iter()
        .flat_map(|&u| [(u * scale).round() as i64, (-u * scale).round() as i64])
        .chain([0, 1])
        .collect();
    grid.sort_unstable();
    grid.dedup();
    grid
}

fn bh_llt_suite(cfg: &RunConfig, law: EnvLaw) -> anyhow::Result<SuiteOutput> {
    let h = cfg.require("bh-llt", "h", cfg.h)?;
    let n_envs = cfg.require("bh-llt", "n_envs", cfg.n_envs)?;
    let grid = cfg.x_grid.clone().unwrap_or_else(|| default_bottom_grid(h, law.sigma));
    let res = estimate_bh_law(law, h, n_envs, cfg.seed, &grid).map_err(core_err)?;

    let mut checks = Vec::new();
    let counted: u64 = res.counts.iter().sum::<u64>()
        + res.overflow_below
        + res.overflow_above
        + res.off_grid
        + res.excluded;
    checks.push(Check::new(
        "replicate accounting",
        counted == res.n,
        format!("{counted} of {} replicates partitioned ({} excluded)", res.n, res.excluded),
    ));
    let i0 = grid.iter().position(|&x| x == 0);
    let i1 = grid.iter().position(|&x| x == 1);
    if let (Some(i0), Some(i1)) = (i0, i1) {
        let (r0, r1) = (&res.rows[i0], &res.rows[i1]);
        let se = r0.stderr.hypot(r1.stderr);
        let diff = (r0.p_hat - r1.p_hat).abs();
        checks.push(Check::new(
            "P(b=0) = P(b=1)",
            diff <= SE_MULT * se,
            format!("|{} - {}| = {} vs {} se", fmt_f64(r0.p_hat), fmt_f64(r1.p_hat), fmt_f64(diff), SE_MULT),
        ));
    }
    let d = res.d_statistic();
    checks.push(Check::new(
        "D(h) finite",
        d.is_finite(),
        format!("D({h}) = {}", fmt_f64(d)),
    ));

    let pass = checks.iter().all(|c| c.pass);
    let report = res
        .rows
        .iter()
        .map(|r| {
            ReportRow::new(format!("P(b = {})", r.x), r.p_hat, Some(r.stderr), Some(r.prediction))
        })
        .collect();
    let csv = csv_table(
        "x,p_hat,stderr,prediction,abs_err",
        res.rows.iter().map(|r| {
            format!(
                "{},{},{},{},{}",
                r.x,
                fmt_f64(r.p_hat),
                fmt_f64(r.stderr),
                fmt_f64(r.prediction),
                fmt_f64(r.abs_err)
            )
        }),
    );
    let mut params = BTreeMap::new();
    params.insert("h".into(), json!(h));
    params.insert("n_envs".into(), json!(n_envs));
    params.insert("x_grid".into(), json!(grid));
    params.insert("excluded".into(), json!(res.excluded));
    params.insert("effective_n".into(), json!(res.effective_n()));
    params.insert("d_statistic".into(), json!(d));
    Ok(SuiteOutput {
        result: SuiteResult {
            schema: 1,
            name: "bh-llt".into(),
            law: cfg.law,
            seed: cfg.seed,
            params,
            pass,
            checks,
            table: report,
            rows: serde_json::to_value(&res.rows)?,
        },
        csv: vec![("bh-llt.csv".into(), csv)],
    })
}

// ---------------------------------------------------------------------------
// renewal

fn default_renewal_grid(h: f64) -> Vec<i64> {
    let mut grid: Vec<i64> = [0.0, 3.0, 6.0, 12.0]
        .iter()
        .flat_map(|&m| {
            let x = (m * h).round() as i64;
            [x, -x]
        })
        .collect();
    grid.sort_unstable();
    grid.dedup();
    grid
}

fn renewal_suite(cfg: &RunConfig, law: EnvLaw) -> anyhow::Result<SuiteOutput> {
    let h = cfg.require("renewal", "h", cfg.h)?;
    let n_envs = cfg.require("renewal", "n_envs", cfg.n_envs)?;
    let grid = cfg.x_grid.clone().unwrap_or_else(|| default_renewal_grid(h));
    let res = check_renewal_identity(law, h, n_envs, cfg.seed, &grid).map_err(core_err)?;

    let mut checks = Vec::new();
    let mut worst = 0.0f64;
    let mut worst_x = 0i64;
    let mut all_within = true;
    for r in &res.rows {
        let gap = (r.lhs - r.rhs).abs();
        let units = if r.combined_stderr > 0.0 { gap / r.combined_stderr } else if gap == 0.0 { 0.0 } else { f64::INFINITY };
        if units > worst {
            worst = units;
            worst_x = r.x;
        }
        if units > SE_MULT {
            all_within = false;
        }
    }
    checks.push(Check::new(
        "renewal identity on grid",
        all_within,
        format!("worst |LHS-RHS| = {} se at x = {worst_x} (allowed {})", fmt_f64(worst), SE_MULT),
    ));
    checks.push(Check::new(
        "renewal denominator positive",
        res.mean_len_sum > 0.0,
        format!("E[len up + len down] = {} +- {}", fmt_f64(res.mean_len_sum), fmt_f64(res.mean_len_sum_stderr)),
    ));

    let pass = checks.iter().all(|c| c.pass);
    let report = res
        .rows
        .iter()
        .map(|r| {
            ReportRow::new(
                format!("P(b = {})", r.x),
                r.lhs,
                Some(r.combined_stderr),
                Some(r.rhs),
            )
        })
        .collect();
    let csv = csv_table(
        "x,lhs,lhs_stderr,rhs,rhs_stderr,combined_stderr",
        res.rows.iter().map(|r| {
            format!(
                "{},{},{},{},{},{}",
                r.x,
                fmt_f64(r.lhs),
                fmt_f64(r.lhs_stderr),
                fmt_f64(r.rhs),
                fmt_f64(r.rhs_stderr),
                fmt_f64(r.combined_stderr)
            )
        }),
    );
    let mut params = BTreeMap::new();
    params.insert("h".into(), json!(h));
    params.insert("n_envs".into(), json!(n_envs));
    params.insert("x_grid".into(), json!(grid));
    params.insert("excluded_lhs".into(), json!(res.excluded_lhs));
    params.insert("excluded_rhs".into(), json!(res.excluded_rhs));
    params.insert("p_b0".into(), json!(res.p_b0));
    params.insert("mean_len_sum".into(), json!(res.mean_len_sum));
    Ok(SuiteOutput {
        result: SuiteResult {
            schema: 1,
            name: "renewal".into(),
            law: cfg.law,
            seed: cfg.seed,
            params,
            pass,
            checks,
            table: report,
            rows: serde_json::to_value(&res.rows)?,
        },
        csv: vec![("renewal.csv".into(), csv)],
    })
}

// ---------------------------------------------------------------------------
// slopes

fn slopes_suite(cfg: &RunConfig, law: EnvLaw) -> anyhow::Result<SuiteOutput> {
    let h = cfg.require("slopes", "h", cfg.h)?;
    let n_envs = cfg.require("slopes", "n_envs", cfg.n_envs)?;
    let deltas = cfg.delta_grid.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0, 4.0, 8.0]);
    let res = estimate_slope_moments(law, h, n_envs, cfg.seed, &deltas).map_err(core_err)?;

    let mut checks = Vec::new();
    let se = res.mean_len_up_stderr.hypot(res.mean_len_down_stderr);
    let gap = (res.mean_len_up - res.mean_len_down).abs();
    checks.push(Check::new(
        "up/down length symmetry",
        gap <= SE_MULT * se,
        format!(
            "E[len up] = {}, E[len down] = {}, gap {} vs {} se",
            fmt_f64(res.mean_len_up),
            fmt_f64(res.mean_len_down),
            fmt_f64(gap),
            SE_MULT
        ),
    ));
    // Both laws shipped here have symmetric log rho, so the excess CDFs of
    // the two directions estimate the same function.
    let mut dir_worst = 0.0f64;
    for r in &res.excess_rows {
        let s = r.p_up_stderr.hypot(r.p_down_stderr);
        let g = (r.p_up - r.p_down).abs();
        let units = if s > 0.0 { g / s } else if g == 0.0 { 0.0 } else { f64::INFINITY };
        dir_worst = dir_worst.max(units);
    }
    checks.push(Check::new(
        "excess CDF direction symmetry",
        dir_worst <= SE_MULT,
        format!("worst direction gap {} se (allowed {})", fmt_f64(dir_worst), SE_MULT),
    ));
    let monotone = res.excess_rows.windows(2).all(|w| {
        w[0].p_up <= w[1].p_up + 1e-15 && w[0].p_down <= w[1].p_down + 1e-15
    });
    checks.push(Check::new(
        "excess CDF monotone in delta",
        monotone,
        format!("{} thresholds", res.excess_rows.len()),
    ));

    let pass = checks.iter().all(|c| c.pass);
    let mut report = vec![
        ReportRow::new("E[len up]".into(), res.mean_len_up, Some(res.mean_len_up_stderr), None),
        ReportRow::new(
            "E[len down]".into(),
            res.mean_len_down,
            Some(res.mean_len_down_stderr),
            None,
        ),
    ];
    for r in &res.excess_rows {
        report.push(ReportRow::new(
            format!("P(excess <= {})", r.delta),
            r.p_up,
            Some(r.p_up_stderr),
            Some(r.p_down),
        ));
    }
    let csv = csv_table(
        "delta,p_up,p_up_stderr,p_down,p_down_stderr",
        res.excess_rows.iter().map(|r| {
            format!(
                "{},{},{},{},{}",
                fmt_f64(r.delta),
                fmt_f64(r.p_up),
                fmt_f64(r.p_up_stderr),
                fmt_f64(r.p_down),
                fmt_f64(r.p_down_stderr)
            )
        }),
    );
    let mut params = BTreeMap::new();
    params.insert("h".into(), json!(h));
    params.insert("n_envs".into(), json!(n_envs));
    params.insert("delta_grid".into(), json!(deltas));
    params.insert("excluded".into(), json!(res.excluded));
    params.insert("mean_len_up".into(), json!(res.mean_len_up));
    params.insert("mean_len_down".into(), json!(res.mean_len_down));
    Ok(SuiteOutput {
        result: SuiteResult {
            schema: 1,
            name: "slopes".into(),
            law: cfg.law,
            seed: cfg.seed,
            params,
            pass,
            checks,
            table: report,
            rows: serde_json::to_value(&res.excess_rows)?,
        },
        csv: vec![("slopes.csv".into(), csv)],
    })
}

// ---------------------------------------------------------------------------
// constants

fn constants_suite(cfg: &RunConfig, law: EnvLaw) -> anyhow::Result<SuiteOutput> {
    let h_grid = match (&cfg.h_grid, cfg.h) {
        (Some(g), _) => g.clone(),
        (None, Some(h)) => vec![h, 2.0 * h],
        (None, None) => {
            return Err(anyhow!("config error: suite 'constants' requires key 'h' or 'h_grid'"))
        }
    };
    let n_envs = cfg.require("constants", "n_envs", cfg.n_envs)?;
    let pers = cfg.persistence_grid.clone().unwrap_or_else(|| vec![100, 400, 1600]);
    let res = estimate_c_constants(law, &h_grid, &pers, n_envs, cfg.seed).map_err(core_err)?;

    let mut checks = Vec::new();
    // The product identity c6 = c1 c1* and the sign balance both hold in the
    // h -> infinity limit; test them at the largest h of the grid.
    let last = res.rows.last().expect("h grid is nonempty");
    let product = last.c1_hat * last.c1_star_hat;
    let prod_se = (last.c1_star_hat * last.c1_stderr).hypot(last.c1_hat * last.c1_star_stderr);
    let se = prod_se.hypot(last.c6_stderr);
    let gap = (last.c6_hat - product).abs();
    checks.push(Check::new(
        "c6 = c1 c1*",
        gap <= SE_MULT * se,
        format!(
            "at h = {}: c6 = {}, c1 c1* = {}, gap {} vs {} se",
            last.h,
            fmt_f64(last.c6_hat),
            fmt_f64(product),
            fmt_f64(gap),
            SE_MULT
        ),
    ));
    checks.push(Check::new(
        "sign balance of b_h",
        last.p_b_positive >= P_POSITIVE_RANGE.0 && last.p_b_positive <= P_POSITIVE_RANGE.1,
        format!(
            "P(b > 0) = {} at h = {} (allowed [{}, {}])",
            fmt_f64(last.p_b_positive),
            last.h,
            P_POSITIVE_RANGE.0,
            P_POSITIVE_RANGE.1
        ),
    ));
    if res.spitzer.len() >= 2 && res.spitzer.iter().all(|r| r.p_hat > 0.0) {
        let mx = res.spitzer.iter().map(|r| r.scaled).fold(f64::MIN, f64::max);
        let mn = res.spitzer.iter().map(|r| r.scaled).fold(f64::MAX, f64::min);
        checks.push(Check::new(
            "persistence sqrt(x) scaling",
            mx / mn <= SPITZER_FLATNESS_RATIO,
            format!(
                "scaled persistence in [{}, {}], ratio {} (allowed {})",
                fmt_f64(mn),
                fmt_f64(mx),
                fmt_f64(mx / mn),
                SPITZER_FLATNESS_RATIO
            ),
        ));
    }

    let pass = checks.iter().all(|c| c.pass);
    let mut report = Vec::new();
    for r in &res.rows {
        report.push(ReportRow::new(
            format!("c1 at h = {}", r.h),
            r.c1_hat,
            Some(r.c1_stderr),
            None,
        ));
        report.push(ReportRow::new(
            format!("c1* at h = {}", r.h),
            r.c1_star_hat,
            Some(r.c1_star_stderr),
            None,
        ));
        report.push(ReportRow::new(
            format!("c6 at h = {}", r.h),
            r.c6_hat,
            Some(r.c6_stderr),
            Some(r.c1_hat * r.c1_star_hat),
        ));
        report.push(ReportRow::new(
            format!("P(b > 0) at h = {}", r.h),
            r.p_b_positive,
            Some(r.p_b_positive_stderr),
            Some(0.5),
        ));
    }
    for r in &res.spitzer {
        report.push(ReportRow::new(
            format!("sqrt(x) P(G_x) at x = {}", r.x),
            r.scaled,
            Some(r.scaled_stderr),
            None,
        ));
    }
    let csv = csv_table(
        "h,c1_hat,c1_stderr,c1_star_hat,c1_star_stderr,c6_hat,c6_stderr,p_b_positive,p_b_positive_stderr,excluded",
        res.rows.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{},{}",
                fmt_f64(r.h),
                fmt_f64(r.c1_hat),
                fmt_f64(r.c1_stderr),
                fmt_f64(r.c1_star_hat),
                fmt_f64(r.c1_star_stderr),
                fmt_f64(r.c6_hat),
                fmt_f64(r.c6_stderr),
                fmt_f64(r.p_b_positive),
                fmt_f64(r.p_b_positive_stderr),
                r.excluded
            )
        }),
    );
    let spitzer_csv = csv_table(
        "x,p_hat,stderr,scaled,scaled_stderr",
        res.spitzer.iter().map(|r| {
            format!(
                "{},{},{},{},{}",
                r.x,
                fmt_f64(r.p_hat),
                fmt_f64(r.stderr),
                fmt_f64(r.scaled),
                fmt_f64(r.scaled_stderr)
            )
        }),
    );
    let mut params = BTreeMap::new();
    params.insert("h_grid".into(), json!(h_grid));
    params.insert("persistence_grid".into(), json!(pers));
    params.insert("n_envs".into(), json!(n_envs));
    Ok(SuiteOutput {
        result: SuiteResult {
            schema: 1,
            name: "constants".into(),
            law: cfg.law,
            seed: cfg.seed,
            params,
            pass,
            checks,
            table: report,
            rows: json!({ "constants": res.rows, "spitzer": res.spitzer }),
        },
        csv: vec![("constants.csv".into(), csv), ("constants_spitzer.csv".into(), spitzer_csv)],
    })
}

// ---------------------------------------------------------------------------
// events

fn events_suite(cfg: &RunConfig, law: EnvLaw) -> anyhow::Result<SuiteOutput> {
    let n = cfg.require("events", "n", cfg.n)?;
    let n_envs = cfg.require("events", "n_envs", cfg.n_envs)?;
    let z = cfg.z.unwrap_or((n % 2) as i64);
    let params = cfg.event_params.unwrap_or_default();
    // Surface degenerate thresholds (h~_n <= 0 at this n) as a runtime
    // error before spending any compute.
    params.thresholds(n).map_err(core_err)?;

    let profiles: Vec<Option<[bool; 8]>> = (0..n_envs)
        .into_par_iter()
        .map(|i| {
            let env_seed = mix(cfg.seed, i);
            let mut w = PotentialWindow::sample(law, env_seed, -64, 64).ok()?;
            let p = classify_events(&mut w, n, z, params).ok()?;
            Some([p.e_minus, p.e_plus, p.e3, p.e4, p.e5, p.e6, p.e7, p.e_c])
        })
        .collect();

    const FLAGS: [&str; 8] = ["E-", "E+", "E3", "E4", "E5", "E6", "E7", "EC"];
    let mut counts = [0u64; 8];
    let mut skipped = 0u64;
    for p in &profiles {
        match p {
            Some(flags) => {
                for (c, &f) in counts.iter_mut().zip(flags.iter()) {
                    *c += f as u64;
                }
            }
            None => skipped += 1,
        }
    }
    let classified = n_envs - skipped;

    let mut checks = Vec::new();
    checks.push(Check::new(
        "environments classified",
        classified > 0,
        format!("{classified} classified, {skipped} skipped on budget"),
    ));
    // E- and E+ partition the classified environments (b <= 0 or b > 0),
    // and EC is a conjunction, so its count cannot exceed any other.
    checks.push(Check::new(
        "E- and E+ partition",
        counts[0] + counts[1] == classified,
        format!("{} + {} vs {classified}", counts[0], counts[1]),
    ));
    let ec = counts[7];
    checks.push(Check::new(
        "EC below each factor",
        counts[..7].iter().all(|&c| ec <= c),
        format!("EC count {ec}"),
    ));

    let denom = classified.max(1) as f64;
    let freq_rows: Vec<Value> = FLAGS
        .iter()
        .zip(counts.iter())
        .map(|(f, &c)| {
            let freq = c as f64 / denom;
            let se = sinai_core::stats::binomial_stderr(c, classified.max(1));
            json!({ "event": f, "count": c, "freq": freq, "stderr": se })
        })
        .collect();

    let pass = checks.iter().all(|c| c.pass);
    let report = FLAGS
        .iter()
        .zip(counts.iter())
        .map(|(f, &c)| {
            ReportRow::new(
                format!("freq {f}"),
                c as f64 / denom,
                Some(sinai_core::stats::binomial_stderr(c, classified.max(1))),
                None,
            )
        })
        .collect();
    let csv = csv_table(
        "event,count,freq,stderr",
        FLAGS.iter().zip(counts.iter()).map(|(f, &c)| {
            format!(
                "{f},{c},{},{}",
                fmt_f64(c as f64 / denom),
                fmt_f64(sinai_core::stats::binomial_stderr(c, classified.max(1)))
            )
        }),
    );
    let th = params.thresholds(n).map_err(core_err)?;
    let mut pmap = BTreeMap::new();
    pmap.insert("n".into(), json!(n));
    pmap.insert("z".into(), json!(z));
    pmap.insert("n_envs".into(), json!(n_envs));
    pmap.insert("event_params".into(), serde_json::to_value(params)?);
    pmap.insert("h_n".into(), json!(th.h_n));
    pmap.insert("h_tilde_n".into(), json!(th.h_tilde_n));
    pmap.insert("gamma_n".into(), json!(th.gamma_n));
    pmap.insert("skipped".into(), json!(skipped));
    Ok(SuiteOutput {
        result: SuiteResult {
            schema: 1,
            name: "events".into(),
            law: cfg.law,
            seed: cfg.seed,
            params: pmap,
            pass,
            checks,
            table: report,
            rows: Value::Array(freq_rows),
        },
        csv: vec![("events.csv".into(), csv)],
    })
}

// ---------------------------------------------------------------------------
// coupling

fn coupling_suite(cfg: &RunConfig, law: EnvLaw) -> anyhow::Result<SuiteOutput> {
    let n = cfg.require("coupling", "n", cfg.n)?;
    let n_envs = cfg.require("coupling", "n_envs", cfg.n_envs)?;
    let z = cfg.z.unwrap_or((n % 2) as i64);
    let params = cfg.event_params.unwrap_or_default();
    let max_attempts = cfg.max_attempts.unwrap_or_else(|| n_envs.saturating_mul(1024));
    let res = coupling_experiment(law, n, z, n_envs, cfg.seed, params, max_attempts)
        .map_err(core_err)?;

    let mut checks = Vec::new();
    checks.push(Check::new(
        "qualifying quota reached",
        res.qualified == n_envs,
        format!(
            "{} of {n_envs} environments qualified after {} attempts ({} skipped)",
            res.qualified, res.attempts, res.skipped
        ),
    ));
    match res.frac_within_bound {
        Some(f) => checks.push(Check::new(
            "coupling discrepancy bound",
            f >= COUPLING_PASS_FRACTION,
            format!(
                "{} of environments within 5 (log n)^-3 = {} (need {})",
                fmt_f64(f),
                fmt_f64(res.coupling_bound),
                COUPLING_PASS_FRACTION
            ),
        )),
        None => checks.push(Check::new(
            "coupling discrepancy bound",
            false,
            "no qualifying environments".into(),
        )),
    }
    match (res.frac_meet_late, res.frac_meet_late_stderr) {
        (Some(f), Some(se)) => {
            let allowed = res.meet_bound + 3.0 * se;
            checks.push(Check::new(
                "meet-time tail bound",
                f <= allowed,
                format!(
                    "late-meet fraction {} vs 2 (log n)^-3 + 3 se = {}",
                    fmt_f64(f),
                    fmt_f64(allowed)
                ),
            ));
        }
        _ => checks.push(Check::new(
            "meet-time tail bound",
            false,
            "no qualifying environments".into(),
        )),
    }

    let pass = checks.iter().all(|c| c.pass);
    let mut report = Vec::new();
    if let Some(f) = res.frac_within_bound {
        report.push(ReportRow::new(
            "fraction within coupling bound".into(),
            f,
            None,
            Some(COUPLING_PASS_FRACTION),
        ));
    }
    if let (Some(f), Some(se)) = (res.frac_meet_late, res.frac_meet_late_stderr) {
        report.push(ReportRow::new(
            "late-meet fraction".into(),
            f,
            Some(se),
            Some(res.meet_bound),
        ));
    }
    if let (Some(f), Some(se)) = (res.frac_exit_within, res.frac_exit_within_stderr) {
        report.push(ReportRow::new(
            "exit-within-n fraction".into(),
            f,
            Some(se),
            Some(res.exit_bound),
        ));
    }
    let csv = csv_table(
        "env_seed,b,b_hat,nu_hat_z,p_dp,bracket,discrepancy,within_bound,tau_meet,tau_exit",
        res.rows.iter().map(|r| {
            let tm = r.tau_meet.map(|v| v.to_string()).unwrap_or_default();
            let te = r.tau_exit.map(|v| v.to_string()).unwrap_or_default();
            format!(
                "{},{},{},{},{},{},{},{},{tm},{te}",
                r.env_seed,
                r.b,
                r.b_hat,
                fmt_f64(r.nu_hat_z),
                fmt_f64(r.p_dp),
                fmt_f64(r.bracket),
                fmt_f64(r.discrepancy),
                r.within_bound
            )
        }),
    );
    let mut pmap = BTreeMap::new();
    pmap.insert("n".into(), json!(n));
    pmap.insert("z".into(), json!(z));
    pmap.insert("n_envs".into(), json!(n_envs));
    pmap.insert("max_attempts".into(), json!(max_attempts));
    pmap.insert("event_params".into(), serde_json::to_value(params)?);
    pmap.insert("attempts".into(), json!(res.attempts));
    pmap.insert("qualified".into(), json!(res.qualified));
    pmap.insert("coupling_bound".into(), json!(res.coupling_bound));
    pmap.insert("meet_bound".into(), json!(res.meet_bound));
    Ok(SuiteOutput {
        result: SuiteResult {
            schema: 1,
            name: "coupling".into(),
            law: cfg.law,
            seed: cfg.seed,
            params: pmap,
            pass,
            checks,
            table: report,
            rows: serde_json::to_value(&res.rows)?,
        },
        csv: vec![("coupling.csv".into(), csv)],
    })
}

// ---------------------------------------------------------------------------
// sinai-llt

fn default_walk_grid(n: u64) -> Vec<i64> {
    let par = (n % 2) as i64;
    (-5..=5).map(|k| 2 * k + par).collect()
}

fn sinai_llt_suite(cfg: &RunConfig, law: EnvLaw) -> anyhow::Result<SuiteOutput> {
    let n = cfg.require("sinai-llt", "n", cfg.n)?;
    let n_envs = cfg.require("sinai-llt", "n_envs", cfg.n_envs)?;
    let grid = cfg.z_grid.clone().unwrap_or_else(|| default_walk_grid(n));
    let method_name = cfg.method.clone().unwrap_or_else(|| "direct".to_string());
    let method = match method_name.as_str() {
        "direct" => LltMethod::Direct { walks_per_env: cfg.walks_per_env.unwrap_or(4) },
        "dp" => LltMethod::Dp,
        "proxy" => LltMethod::Proxy { params: cfg.event_params.unwrap_or_default() },
        other => return Err(anyhow!("config error: unknown method '{other}'")),
    };
    let res = verify_sinai_llt(law, n, &grid, n_envs, &method, cfg.seed).map_err(core_err)?;

    let mut checks = Vec::new();
    let finite = res.rows.iter().all(|r| r.estimate.is_finite() && r.stderr.is_finite());
    checks.push(Check::new(
        "estimates finite",
        finite,
        format!("{} grid points, {} environments skipped", res.rows.len(), res.skipped),
    ));
    let in_range = res.rows.iter().all(|r| (0.0..=1.0).contains(&r.estimate));
    checks.push(Check::new(
        "estimates are probabilities",
        in_range,
        "each estimate in [0, 1]".into(),
    ));

    let pass = checks.iter().all(|c| c.pass);
    let report = res
        .rows
        .iter()
        .map(|r| {
            ReportRow::new(format!("P(S_n = {})", r.z), r.estimate, Some(r.stderr), Some(r.prediction))
        })
        .collect();
    let csv = csv_table(
        "z,estimate,stderr,prediction,scaled_err",
        res.rows.iter().map(|r| {
            format!(
                "{},{},{},{},{}",
                r.z,
                fmt_f64(r.estimate),
                fmt_f64(r.stderr),
                fmt_f64(r.prediction),
                fmt_f64(r.scaled_err)
            )
        }),
    );
    let mut pmap = BTreeMap::new();
    pmap.insert("n".into(), json!(n));
    pmap.insert("n_envs".into(), json!(n_envs));
    pmap.insert("z_grid".into(), json!(grid));
    pmap.insert("method".into(), json!(res.method));
    pmap.insert("skipped".into(), json!(res.skipped));
    if let LltMethod::Direct { walks_per_env } = method {
        pmap.insert("walks_per_env".into(), json!(walks_per_env));
    }
    if let Some(ep) = cfg.event_params {
        if method_name == "proxy" {
            pmap.insert("event_params".into(), serde_json::to_value(ep)?);
        }
    }
    Ok(SuiteOutput {
        result: SuiteResult {
            schema: 1,
            name: "sinai-llt".into(),
            law: cfg.law,
            seed: cfg.seed,
            params: pmap,
            pass,
            checks,
            table: report,
            rows: serde_json::to_value(&res.rows)?,
        },
        csv: vec![("sinai-llt.csv".into(), csv)],
    })
}

// ---------------------------------------------------------------------------

/// Render a one-line console summary of a finished suite.
pub fn summary_line(r: &SuiteResult) -> String {
    let ok = r.checks.iter().filter(|c| c.pass).count();
    let mut s = String::new();
    let _ = write!(
        s,
        "suite {}: {} ({ok}/{} checks)",
        r.name,
        if r.pass { "PASS" } else { "FAIL" },
        r.checks.len()
    );
    s
}
