//! Browser bindings for the Sinai RWRE toolkit.
//!
//! Three operations, each returning a JSON string the page renders on a
//! canvas: the limit density table, a potential window with its certified
//! h-extrema, and the exact quenched law of the walk against the annealed
//! prediction. Everything is deterministic in (law, seed); there is no
//! entropy on the wasm side, and none of these paths touch the thread pool,
//! so the single-threaded wasm runtime is fine.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use sinai_core::decomp::{
    localization_b_h, scan_left_extrema, scan_left_extrema_fixed, ExtremumRecord,
};
use sinai_core::envgen::{make_env_law, EnvLaw, LawKind, PotentialWindow};
use sinai_core::kesten::{density_table, llt_prediction, LltMode};
use sinai_core::quenched::{quenched_dp, Boundary};

fn law_from(kind: &str, param: f64) -> Result<EnvLaw, String> {
    let k = match kind {
        "two-point" => LawKind::TwoPoint,
        "logistic-uniform" => LawKind::LogisticUniform,
        other => return Err(format!("unknown law kind '{other}'")),
    };
    make_env_law(k, param).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct DensityOut {
    x: Vec<f64>,
    phi: Vec<f64>,
    max_error_bound: f64,
}

/// Table of the limit density on `[from, to]` with certified truncation
/// error at most `tol` per point.
#[wasm_bindgen]
pub fn density_table_json(from: f64, to: f64, step: f64, tol: f64) -> Result<String, String> {
    let rows = density_table(from, to, step, tol).map_err(|e| e.to_string())?;
    let out = DensityOut {
        x: rows.iter().map(|r| r.x).collect(),
        phi: rows.iter().map(|r| r.value).collect(),
        max_error_bound: rows.iter().map(|r| r.error_bound).fold(0.0, f64::max),
    };
    to_json(&out)
}

#[derive(Serialize)]
struct PotentialOut {
    sites: Vec<i64>,
    v: Vec<f64>,
    extrema: Vec<ExtremumRecord>,
    /// Bottom of the central h-valley, when certifiable within the budget.
    b_h: Option<i64>,
    sigma: f64,
}

/// A potential window with its certified left h-extrema and the valley
/// bottom `b_h`. `seed` picks the environment; the same seed always
/// reproduces the same window.
#[wasm_bindgen]
pub fn potential_json(
    kind: &str,
    param: f64,
    seed: u32,
    lo: i32,
    hi: i32,
    h: f64,
) -> Result<String, String> {
    if !(-20_000..=0).contains(&lo) || !(0..=20_000).contains(&hi) || lo >= hi {
        return Err("window must satisfy -20000 <= lo <= 0 <= hi <= 20000, lo < hi".into());
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err("h must be positive".into());
    }
    let law = law_from(kind, param)?;
    let w = PotentialWindow::sample(law, seed as u64, lo as i64, hi as i64)
        .map_err(|e| e.to_string())?;
    let sites: Vec<i64> = (w.lo()..=w.hi()).collect();
    let v: Vec<f64> = sites.iter().map(|&x| w.v(x)).collect();
    let extrema = scan_left_extrema_fixed(&w, h);
    // The bottom needs flanking extrema that may lie outside the fixed
    // window; rebuild the same environment in an auto-extending window and
    // let the budget decide.
    let b_h = PotentialWindow::sample(law, seed as u64, lo as i64, hi as i64)
        .ok()
        .and_then(|mut grow| scan_left_extrema(&mut grow, h, 0, 1).ok().map(|d| localization_b_h(&d)));
    to_json(&PotentialOut { sites, v, extrema, b_h, sigma: law.sigma })
}

#[derive(Serialize)]
struct QuenchedOut {
    z: Vec<i64>,
    mass: Vec<f64>,
    prediction: Vec<f64>,
    b_log_n: Option<i64>,
    truncation_loss: f64,
    sigma: f64,
}

/// Exact quenched law of `S_n` under one sampled environment, next to the
/// annealed local-limit prediction and the valley bottom at height `log n`.
#[wasm_bindgen]
pub fn quenched_json(kind: &str, param: f64, seed: u32, n: u32) -> Result<String, String> {
    if !(10..=4000).contains(&n) {
        return Err("n must lie in [10, 4000]".into());
    }
    let law = law_from(kind, param)?;
    let mut w = PotentialWindow::sample(law, seed as u64, -4, 4).map_err(|e| e.to_string())?;
    let dist = quenched_dp(&mut w, 0, n as u64, Boundary::Full).map_err(|e| e.to_string())?;
    let mut z = Vec::new();
    let mut mass = Vec::new();
    let mut prediction = Vec::new();
    let mut s = dist.support_lo();
    while s <= dist.support_hi() {
        z.push(s);
        mass.push(dist.mass(s));
        prediction.push(llt_prediction(LltMode::Walk { n: n as u64 }, s as f64, law.sigma));
        s += 2;
    }
    let b_log_n = scan_left_extrema(&mut w, (n as f64).ln(), 0, 1)
        .ok()
        .map(|d| localization_b_h(&d));
    to_json(&QuenchedOut {
        z,
        mass,
        prediction,
        b_log_n,
        truncation_loss: dist.truncation_loss,
        sigma: law.sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_json_has_center_value() {
        let s = density_table_json(-1.0, 1.0, 0.5, 1e-10).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["x"].as_array().unwrap().len(), 5);
        assert_eq!(v["phi"][2], 0.5);
        assert!(v["max_error_bound"].as_f64().unwrap() <= 1e-10);
    }

    #[test]
    fn potential_json_is_deterministic_and_marks_extrema() {
        let a = potential_json("two-point", 0.3, 7, -300, 300, 5.0).unwrap();
        let b = potential_json("two-point", 0.3, 7, -300, 300, 5.0).unwrap();
        assert_eq!(a, b);
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["sites"].as_array().unwrap().len(), 601);
        assert!(!v["extrema"].as_array().unwrap().is_empty());
        assert!(v["b_h"].is_i64());
    }

    #[test]
    fn quenched_json_masses_sum_to_one() {
        let s = quenched_json("logistic-uniform", 1.0, 3, 200).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        let total: f64 =
            v["mass"].as_array().unwrap().iter().map(|m| m.as_f64().unwrap()).sum();
        let loss = v["truncation_loss"].as_f64().unwrap();
        assert!((total + loss - 1.0).abs() < 1e-12, "total {total} loss {loss}");
        assert!(v["b_log_n"].is_i64());
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(law_from("uniform", 0.5).is_err());
        assert!(potential_json("two-point", 0.3, 1, 5, 10, 4.0).is_err());
        assert!(quenched_json("two-point", 0.3, 1, 5).is_err());
        assert!(density_table_json(1.0, -1.0, 0.1, 1e-10).is_err());
    }
}
