//! Acceptance gate for the workspace: thirteen numbered criteria, one test
//! function each. Every test prints exactly one line of the form
//! `ACCEPTANCE NN <name>: PASS` (or `FAIL`) before asserting, so the log of
//! a full run always contains the complete verdict table (run with
//! `--nocapture` to see the lines for passing tests too).
//!
//! All tolerances, sample sizes and wall-clock budgets are pinned here as
//! constants; nothing is read from the code under test. Where a criterion
//! needs an oracle, the oracle is transcribed independently in this file or
//! taken from `sinai_core::reference`, never from the implementation being
//! checked.

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use sinai_core::decomp::{
    bruteforce_left_extrema, bruteforce_right_extrema, extract_canonical_slopes,
    scan_left_extrema_fixed, scan_right_extrema_fixed, zeta, ExtremumRecord, SlopeVariant,
    SlopeView,
};
use sinai_core::envgen::{injected_window, make_env_law, EnvLaw, LawKind, PotentialWindow};
use sinai_core::experiments::{
    check_renewal_identity, classify_events, conditioned_walk_sample, coupling_experiment,
    estimate_bh_law, estimate_c_constants, estimate_slope_moments, upward_prefix_length,
    verify_sinai_llt, EventParams, LltMethod, XiVariant,
};
use sinai_core::kesten::{density_table, phi_cdf, phi_inf};
use sinai_core::quenched::{
    hit_prob, quenched_dp, reflected_invariant, Boundary, Parity, SiteMeasure,
};
use sinai_core::reference::{exhaustive_walk_law, harmonic_hit_prob};
use sinai_core::rng::{mix, Stream};
use sinai_core::stats::{ks_critical_1pct, ks_statistic};
use sinai_core::walker::simulate_walk;
use sinai_core::Error;

fn two_point(p: f64) -> EnvLaw {
    make_env_law(LawKind::TwoPoint, p).expect("valid two-point parameter")
}

fn logistic(c: f64) -> EnvLaw {
    make_env_law(LawKind::LogisticUniform, c).expect("valid logistic parameter")
}

/// Print the single verdict line for a criterion (plus an indented detail
/// line so passing runs also leave their measured numbers in the log), then
/// assert.
fn verdict(idx: u32, name: &str, pass: bool, details: &str) {
    let v = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {idx:02} {name}: {v}");
    println!("  [{idx:02}] {details}");
    assert!(pass, "criterion {idx:02} ({name}) failed: {details}");
}

/// Sample a window of the given total width that contains the origin, using
/// `st` for the geometry and `seed` for the environment itself.
fn random_window(law: EnvLaw, seed: u64, width: i64, st: &mut Stream) -> PotentialWindow {
    let lo = -((st.next_u64() % (width as u64 + 1)) as i64);
    let hi = lo + width;
    PotentialWindow::sample(law, seed, lo, hi).expect("sampling a fresh window cannot fail")
}

// ---------------------------------------------------------------------------
// 1. Limit density: closed-form center, unit mass, fast tabulation.

const C1_CENTER_TOL: f64 = 1e-12;
const C1_MASS_TOL: f64 = 1e-8;
const C1_CDF_SPAN: f64 = 40.0;
const C1_TABLE_TOL: f64 = 1e-10;
const C1_TABLE_BUDGET: Duration = Duration::from_secs(1);

#[test]
fn criterion_01_kesten_density() {
    let center_err = (phi_inf(0.0, 1e-14).value - 0.5).abs();

    // Total mass through the independent quadrature route: the CDF is an
    // adaptive Simpson integral of the density, not a rearrangement of the
    // series identity used to evaluate it.
    let mass_err = (phi_cdf(C1_CDF_SPAN, 1e-9) - 1.0).abs();

    let t0 = Instant::now();
    let table = density_table(-5.0, 5.0, 0.01, C1_TABLE_TOL).expect("valid grid");
    let dt = t0.elapsed();
    let table_ok = table.len() == 1001
        && table
            .iter()
            .all(|r| r.value.is_finite() && r.value >= 0.0 && r.error_bound <= C1_TABLE_TOL);

    let pass = center_err <= C1_CENTER_TOL
        && mass_err <= C1_MASS_TOL
        && table_ok
        && dt <= C1_TABLE_BUDGET;
    verdict(
        1,
        "kesten-density",
        pass,
        &format!(
            "phi(0) error {center_err:.3e} (tol {C1_CENTER_TOL:.0e}), \
             total-mass error {mass_err:.3e} (tol {C1_MASS_TOL:.0e}), \
             table ok {table_ok}, tabulation took {dt:?} (budget {C1_TABLE_BUDGET:?})"
        ),
    );
}

// ---------------------------------------------------------------------------
// 2. Exact hitting probabilities against the dense linear-solve oracle.

const C2_TOL: f64 = 1e-10;
const C2_WINDOWS_PER_LAW: u64 = 500;
const C2_MAX_WIDTH: u64 = 200;
const C2_BUDGET: Duration = Duration::from_secs(5);

#[test]
fn criterion_02_hit_prob_oracle() {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for (li, law) in [two_point(0.3), logistic(1.0)].into_iter().enumerate() {
        let mut st = Stream::new(0xACC2 + li as u64);
        for i in 0..C2_WINDOWS_PER_LAW {
            let width = 3 + (st.next_u64() % (C2_MAX_WIDTH - 2)) as i64; // 3..=200 sites wide
            let w = random_window(law, mix(0x2B0B + li as u64, i), width, &mut st);
            let (a, c) = (w.lo(), w.hi());
            let b = a + 1 + (st.next_u64() % (width as u64 - 1)) as i64; // strictly interior
            let fast = hit_prob(&w, a, b, c).expect("well-formed triple");
            let slow = harmonic_hit_prob(&w, a, b, c);
            worst = worst.max((fast - slow).abs());
        }
    }
    let dt = t0.elapsed();
    let pass = worst <= C2_TOL && dt <= C2_BUDGET;
    verdict(
        2,
        "hit-prob-oracle",
        pass,
        &format!(
            "max |hit_prob - oracle| = {worst:.3e} over {} windows (tol {C2_TOL:.0e}), \
             elapsed {dt:?} (budget {C2_BUDGET:?})",
            2 * C2_WINDOWS_PER_LAW
        ),
    );
}

// ---------------------------------------------------------------------------
// 3. Linear-time left-extrema scan against the definitional enumeration.

const C3_WINDOWS: u64 = 10_000;
const C3_MAX_LEN: u64 = 400;
const C3_BUDGET: Duration = Duration::from_secs(60);

#[test]
fn criterion_03_extrema_scan_oracle() {
    let t0 = Instant::now();
    let laws = [two_point(0.3), two_point(0.45), logistic(1.0)];
    let mut st = Stream::new(0xACC3);
    let mut mismatches = 0u64;
    let mut first_bad = None;
    let mut records = 0u64;
    for i in 0..C3_WINDOWS {
        let law = laws[(i % laws.len() as u64) as usize];
        let len = 2 + (st.next_u64() % (C3_MAX_LEN - 1)) as i64; // 2..=400 sites
        let w = random_window(law, mix(0x3C0C, i), len, &mut st);
        // h from one to ten typical increments (sigma is exactly one lattice
        // step for the two-point law).
        let h = law.sigma * (1.0 + 9.0 * st.next_f64());
        let fast = scan_left_extrema_fixed(&w, h);
        let slow = bruteforce_left_extrema(&w, h);
        if fast != slow {
            mismatches += 1;
            first_bad.get_or_insert(i);
        }
        records += fast.len() as u64;
    }
    let dt = t0.elapsed();
    let pass = mismatches == 0 && dt <= C3_BUDGET;
    verdict(
        3,
        "extrema-scan-oracle",
        pass,
        &format!(
            "{mismatches} mismatch(es) over {C3_WINDOWS} windows (first at {first_bad:?}), \
             {records} records compared, elapsed {dt:?} (budget {C3_BUDGET:?})"
        ),
    );
}

// ---------------------------------------------------------------------------
// 4. Right/left reflection duality and the slope reversal involution.

const C4_WINDOWS: u64 = 10_000;
const C4_MAX_LEN: u64 = 240;
const C4_SLOPE_CASES: u64 = 300;

#[test]
fn criterion_04_reflection_duality() {
    let laws = [two_point(0.3), logistic(1.0)];
    let mut st = Stream::new(0xACC4);
    let mut dual_bad = 0u64;
    let mut first_bad = None;
    for i in 0..C4_WINDOWS {
        let law = laws[(i % 2) as usize];
        let len = 2 + (st.next_u64() % (C4_MAX_LEN - 1)) as i64;
        let w = random_window(law, mix(0x4D0D, i), len, &mut st);
        let h = law.sigma * (1.0 + 9.0 * st.next_f64());

        let right = scan_right_extrema_fixed(&w, h);
        let brute = bruteforce_right_extrema(&w, h);

        // The duality route, materialized: build the spatially reflected
        // potential as a fresh injected window, take its *left* extrema with
        // the definitional enumeration, and push them through
        // x_k'(v) = -x_{1-k}(v(-.)). Kind and value are preserved.
        let refl_vals: Vec<(i64, f64)> = (-w.hi()..=-w.lo()).map(|u| (u, w.v(-u))).collect();
        let refl = injected_window(&refl_vals).expect("consecutive sites around the origin");
        let mut mapped: Vec<ExtremumRecord> = bruteforce_left_extrema(&refl, h)
            .into_iter()
            .map(|r| ExtremumRecord {
                k: 1 - r.k,
                position: -r.position,
                kind: r.kind,
                value: r.value,
            })
            .collect();
        mapped.sort_by_key(|r| r.position);

        if right != brute || right != mapped {
            dual_bad += 1;
            first_bad.get_or_insert(i);
        }
    }

    // Slope reversal: zeta is an exact involution, and it flips direction
    // while preserving height and excess bit-for-bit.
    let mut zeta_bad = 0u64;
    for i in 0..C4_SLOPE_CASES {
        let law = laws[(i % 2) as usize];
        let mut w = PotentialWindow::sample(law, mix(0x4E0E, i), 0, 64).expect("sample");
        let h = law.sigma * 8.0;
        let s = extract_canonical_slopes(&mut w, h, SlopeVariant::Plain)
            .expect("extraction within budget");
        for t in [&s.up, &s.down] {
            let z = zeta(t);
            let zz = zeta(&z);
            let ok = zz == *t
                && z.direction == t.direction.flip()
                && z.height == t.height
                && z.excess == t.excess;
            if !ok {
                zeta_bad += 1;
            }
        }
        // Same check through the value-constructor route (no shared state
        // with the extraction above).
        let vals = s.up.values().to_vec();
        let t = SlopeView::from_values(vals, h);
        if zeta(&zeta(&t)) != t {
            zeta_bad += 1;
        }
    }

    let pass = dual_bad == 0 && zeta_bad == 0;
    verdict(
        4,
        "reflection-duality",
        pass,
        &format!(
            "{dual_bad} duality mismatch(es) over {C4_WINDOWS} windows (first at {first_bad:?}), \
             {zeta_bad} involution failure(s) over {C4_SLOPE_CASES} slope cases"
        ),
    );
}

// ---------------------------------------------------------------------------
// 5. Quenched DP against exhaustive enumeration and against simulation.

const C5_ENUM_TOL: f64 = 1e-14;
const C5_ENUM_STEPS: u64 = 12;
const C5_TV_TOL: f64 = 0.01;
const C5_WALKS: u64 = 1_000_000;
const C5_STEPS: u64 = 2000;
const C5_BUDGET: Duration = Duration::from_secs(120);

#[test]
fn criterion_05_quenched_dp() {
    let t0 = Instant::now();

    // Exact arm: 2^n enumeration of every path at n = 12.
    let mut worst_enum = 0.0f64;
    for (li, law) in [two_point(0.3), logistic(1.0)].into_iter().enumerate() {
        for j in 0..3u64 {
            let mut w = PotentialWindow::sample(law, mix(0x5E0E + li as u64, j), -16, 16)
                .expect("sample");
            let dist = quenched_dp(&mut w, 0, C5_ENUM_STEPS, Boundary::Full).expect("dp");
            let exact = exhaustive_walk_law(&w, 0, C5_ENUM_STEPS as u32);
            for (&z, &p) in &exact {
                worst_enum = worst_enum.max((dist.mass(z) - p).abs());
            }
            for (z, m) in dist.support() {
                let p = exact.get(&z).copied().unwrap_or(0.0);
                worst_enum = worst_enum.max((m - p).abs());
            }
        }
    }

    // Statistical arm: one fixed window, a million trajectories.
    let law = two_point(0.3);
    let mut w = PotentialWindow::sample(law, 0xF17ED, -64, 64).expect("sample");
    let dist = quenched_dp(&mut w, 0, C5_STEPS, Boundary::Full).expect("dp");
    let walk_seed = mix(0xF17ED, 1);
    let mut counts: HashMap<i64, u64> = HashMap::new();
    for i in 0..C5_WALKS {
        let rec =
            simulate_walk(&mut w, 0, C5_STEPS, mix(walk_seed, i), &[], false).expect("walk");
        *counts.entry(rec.endpoint).or_insert(0) += 1;
    }
    let tv = dist.tv_against_counts(&counts, C5_WALKS);

    let dt = t0.elapsed();
    let pass = worst_enum <= C5_ENUM_TOL && tv <= C5_TV_TOL && dt <= C5_BUDGET;
    verdict(
        5,
        "quenched-dp",
        pass,
        &format!(
            "max |dp - enumeration| = {worst_enum:.3e} at n = {C5_ENUM_STEPS} \
             (tol {C5_ENUM_TOL:.0e}), TV(dp, {C5_WALKS} walks) = {tv:.4} at n = {C5_STEPS} \
             (tol {C5_TV_TOL}), elapsed {dt:?} (budget {C5_BUDGET:?})"
        ),
    );
}

// ---------------------------------------------------------------------------
// 6. Stationarity of the reflected invariant measure under the two-step
//    kernel, with the kernel transcribed independently here.

const C6_TOL: f64 = 1e-12;
const C6_TRIPLES: u64 = 1000;
const C6_MAX_WIDTH: u64 = 120;

/// Apply the two-step reflected kernel to `nu` and return the worst
/// pointwise deviation from `nu` itself. The kernel is written from the
/// definition: reflecting barriers at the valley edges (always step right at
/// `m_minus`, always left at `m_plus`), environment probabilities strictly
/// inside.
fn two_step_deviation(
    w: &PotentialWindow,
    m_minus: i64,
    m_plus: i64,
    nu: &SiteMeasure,
) -> f64 {
    let omega_hat = |x: i64| -> f64 {
        if x == m_minus {
            1.0
        } else if x == m_plus {
            0.0
        } else {
            w.omega(x)
        }
    };
    let mut pushed: HashMap<i64, f64> = HashMap::new();
    for (x, mass) in nu.iter() {
        if mass == 0.0 {
            continue;
        }
        let p1 = omega_hat(x);
        for (x1, q1) in [(x + 1, p1), (x - 1, 1.0 - p1)] {
            if q1 == 0.0 {
                continue;
            }
            let p2 = omega_hat(x1);
            for (x2, q2) in [(x1 + 1, p2), (x1 - 1, 1.0 - p2)] {
                if q2 > 0.0 {
                    *pushed.entry(x2).or_insert(0.0) += mass * q1 * q2;
                }
            }
        }
    }
    let mut worst = 0.0f64;
    for (x, mass) in nu.iter() {
        worst = worst.max((pushed.remove(&x).unwrap_or(0.0) - mass).abs());
    }
    // Any leftover key would be mass created outside the support.
    for (_, m) in pushed {
        worst = worst.max(m.abs());
    }
    worst
}

#[test]
fn criterion_06_nu_stationarity() {
    let laws = [two_point(0.3), logistic(1.0)];
    let mut st = Stream::new(0xACC6);
    let mut worst = 0.0f64;
    for i in 0..C6_TRIPLES {
        let law = laws[(i % 2) as usize];
        let width = 4 + (st.next_u64() % (C6_MAX_WIDTH - 3)) as i64; // 4..=120 sites
        let w = random_window(law, mix(0x6F0F, i), width, &mut st);
        // Valley edges uniform in the window, span at least two steps.
        let span = 2 + (st.next_u64() % (width as u64 - 1)) as i64;
        let m_minus = w.lo() + (st.next_u64() % ((width - span + 1) as u64)) as i64;
        let m_plus = m_minus + span;
        let parity = if st.next_u64() % 2 == 0 { Parity::Even } else { Parity::Odd };
        let nu = reflected_invariant(&w, parity, m_minus, m_plus)
            .expect("well-formed valley span");
        worst = worst.max(two_step_deviation(&w, m_minus, m_plus, &nu));
    }
    let pass = worst <= C6_TOL;
    verdict(
        6,
        "nu-stationarity",
        pass,
        &format!(
            "max |nu P^2 - nu| = {worst:.3e} over {C6_TRIPLES} random valleys (tol {C6_TOL:.0e})"
        ),
    );
}

// ---------------------------------------------------------------------------
// 7. Renewal identity for the bottom law at h = 12, two-point p = 0.3.

const C7_H: f64 = 12.0;
const C7_N: u64 = 200_000;
const C7_SE_MULT: f64 = 3.0;
const C7_GRID: [i64; 7] = [-144, -72, -36, 0, 36, 72, 144];

#[test]
fn criterion_07_renewal_identity() {
    let t0 = Instant::now();
    let r = check_renewal_identity(two_point(0.3), C7_H, C7_N, 0xACC7, &C7_GRID)
        .expect("renewal run");
    let mut worst_units = 0.0f64;
    let mut degenerate = 0u64;
    for row in &r.rows {
        let diff = (row.lhs - row.rhs).abs();
        if row.combined_stderr > 0.0 {
            worst_units = worst_units.max(diff / row.combined_stderr);
        } else if diff > 0.0 {
            degenerate += 1;
        }
    }
    let dt = t0.elapsed();
    let pass = worst_units <= C7_SE_MULT && degenerate == 0;
    verdict(
        7,
        "renewal-identity",
        pass,
        &format!(
            "worst |LHS - RHS| = {worst_units:.2} combined stderr units over {} grid points \
             (limit {C7_SE_MULT}), {degenerate} degenerate row(s), N = {C7_N} per side, \
             elapsed {dt:?}",
            C7_GRID.len()
        ),
    );
}

// ---------------------------------------------------------------------------
// 8. Local limit theorem for the valley bottom: the scaled sup-error
//    D(h) = h^2 sup |P^ - prediction| shrinks in h and clears a cap.

const C8_N: u64 = 1_000_000;
const C8_H_SMALL: f64 = 8.0;
const C8_H_LARGE: f64 = 20.0;
const C8_CAP: f64 = 0.2;
const C8_BUDGET: Duration = Duration::from_secs(900);
const C8_U: [f64; 9] = [0.0, 0.125, 0.25, 0.375, 0.5, 0.75, 1.0, 1.5, 2.0];

/// Grid of sites covering the bulk of the limit law: x = round(u h^2/sigma^2)
/// for u in a fixed dimensionless set, symmetrized.
fn scale_free_grid(h: f64, sigma: f64) -> Vec<i64> {
    let mut g: Vec<i64> = C8_U
        .iter()
        .flat_map(|&u| {
            let x = (u * h * h / (sigma * sigma)).round() as i64;
            [x, -x]
        })
        .collect();
    g.sort_unstable();
    g.dedup();
    g
}

#[test]
fn criterion_08_bh_llt() {
    let t0 = Instant::now();
    let mut pass = true;
    let mut details = String::new();
    for (li, law) in [two_point(0.3), logistic(1.0)].into_iter().enumerate() {
        let seed = mix(0xACC8, li as u64);
        let small = estimate_bh_law(
            law,
            C8_H_SMALL,
            C8_N,
            mix(seed, 0),
            &scale_free_grid(C8_H_SMALL, law.sigma),
        )
        .expect("bottom-law run");
        let large = estimate_bh_law(
            law,
            C8_H_LARGE,
            C8_N,
            mix(seed, 1),
            &scale_free_grid(C8_H_LARGE, law.sigma),
        )
        .expect("bottom-law run");
        let (d_small, d_large) = (small.d_statistic(), large.d_statistic());
        let ok = d_large < d_small && d_large <= C8_CAP;
        pass &= ok;
        details.push_str(&format!(
            "[law {li}] D({C8_H_SMALL}) = {d_small:.4}, D({C8_H_LARGE}) = {d_large:.4} \
             (cap {C8_CAP}), excluded {}+{}; ",
            small.excluded, large.excluded
        ));
    }
    let dt = t0.elapsed();
    pass &= dt <= C8_BUDGET;
    details.push_str(&format!("elapsed {dt:?} (budget {C8_BUDGET:?})"));
    verdict(8, "bh-llt", pass, &details);
}

// ---------------------------------------------------------------------------
// 9. Named constants at h = 20: sign balance, the product identity
//    c6 = c1 c1*, up/down symmetry of slope lengths, and the h^2 growth law.

const C9_H: f64 = 20.0;
const C9_H_HALF: f64 = 10.0;
const C9_N: u64 = 1_000_000;
const C9_P_RANGE: (f64, f64) = (0.47, 0.53);
const C9_SE_MULT: f64 = 3.0;
const C9_RATIO_RANGE: (f64, f64) = (3.5, 4.5);

#[test]
fn criterion_09_constants() {
    let law = two_point(0.3);
    let t0 = Instant::now();

    let cc = estimate_c_constants(law, &[C9_H], &[], C9_N, 0xACC9).expect("constants run");
    let row = &cc.rows[0];
    let prod = row.c1_hat * row.c1_star_hat;
    let prod_se = ((row.c1_star_hat * row.c1_stderr).powi(2)
        + (row.c1_hat * row.c1_star_stderr).powi(2))
    .sqrt();
    let comb = (row.c6_stderr.powi(2) + prod_se.powi(2)).sqrt();
    let c6_units = (row.c6_hat - prod).abs() / comb;
    let ok_product = c6_units <= C9_SE_MULT;
    let ok_sign = row.p_b_positive >= C9_P_RANGE.0 && row.p_b_positive <= C9_P_RANGE.1;

    let s20 = estimate_slope_moments(law, C9_H, C9_N, mix(0xACC9, 7), &[1.0])
        .expect("slope moments at h");
    let s10 = estimate_slope_moments(law, C9_H_HALF, C9_N, mix(0xACC9, 8), &[1.0])
        .expect("slope moments at h/2");
    let len_comb = (s20.mean_len_up_stderr.powi(2) + s20.mean_len_down_stderr.powi(2)).sqrt();
    let len_units = (s20.mean_len_up - s20.mean_len_down).abs() / len_comb;
    let ok_updown = len_units <= C9_SE_MULT;
    let ratio = s20.mean_len_up / s10.mean_len_up;
    let ok_ratio = ratio >= C9_RATIO_RANGE.0 && ratio <= C9_RATIO_RANGE.1;

    let dt = t0.elapsed();
    let pass = ok_product && ok_sign && ok_updown && ok_ratio;
    verdict(
        9,
        "constants",
        pass,
        &format!(
            "P(b > 0) = {:.4} (range {:?}), |c6 - c1 c1*| = {c6_units:.2} se units \
             (c6 = {:.4}, c1 c1* = {prod:.4}), up/down length gap = {len_units:.2} se units, \
             E[len](20)/E[len](10) = {ratio:.3} (range {:?}), elapsed {dt:?}",
            row.p_b_positive, C9_P_RANGE, row.c6_hat, C9_RATIO_RANGE
        ),
    );
}

// ---------------------------------------------------------------------------
// 10. Conditioned-law check: hitting lengths of canonical upward-slope
//     prefixes match rejection-sampled conditioned walks in distribution.

const C10_N: u64 = 10_000;
const C10_H: f64 = 12.0;
const C10_MAX_ATTEMPTS: u64 = 100_000;

#[test]
fn criterion_10_conditioned_law() {
    let law = two_point(0.3);
    let t0 = Instant::now();
    let mut prefix: Vec<f64> = Vec::with_capacity(C10_N as usize);
    let mut cond: Vec<f64> = Vec::with_capacity(C10_N as usize);
    for i in 0..C10_N {
        let mut w = PotentialWindow::sample(law, mix(0xACCA, i), 0, 64).expect("sample");
        let s = extract_canonical_slopes(&mut w, C10_H, SlopeVariant::Plain)
            .expect("extraction within budget");
        prefix.push(upward_prefix_length(&s.up, C10_H) as f64);
        let p = conditioned_walk_sample(law, C10_H, XiVariant::Weak, mix(0xACCB, i),
            C10_MAX_ATTEMPTS)
        .expect("rejection sampler within budget");
        cond.push(p.len() as f64);
    }
    let ks = ks_statistic(&prefix, &cond);
    let crit = ks_critical_1pct(prefix.len(), cond.len());
    let dt = t0.elapsed();
    let pass = ks < crit;
    verdict(
        10,
        "conditioned-law",
        pass,
        &format!(
            "KS = {ks:.5} vs 1% critical {crit:.5} on {C10_N} + {C10_N} samples at \
             h = {C10_H}, elapsed {dt:?}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 11. Coupling with the stationary reflected walk at n = 2^20 on E_C
//     environments. The theorem-regime parameters are degenerate at any
//     reachable n (their scale h~_n turns positive only around n ~ e^260),
//     which the API reports as an error; the suite demonstrates that and
//     then runs the documented desk-scale relaxed parameters.

const C11_N: u64 = 1 << 20;
const C11_ENVS: u64 = 200;
const C11_WITHIN_FRAC: f64 = 0.90;
const C11_SE_MULT: f64 = 3.0;
const C11_PILOT: u64 = 20_000;
const C11_ATTEMPT_CAP: u64 = 4_000_000;
const C11_BUDGET: Duration = Duration::from_secs(1200);
const C11_RELAXED: EventParams =
    EventParams { c1: 0.1, c2: 0.1, delta1: 0.65, relaxed: true };

#[test]
fn criterion_11_coupling() {
    let t0 = Instant::now();
    let law = two_point(0.3);

    // Theorem-regime parameters must be rejected, not silently bent.
    let compliant = coupling_experiment(law, C11_N, 0, C11_ENVS, 0xACCB, EventParams::default(),
        1024);
    let msg = match compliant {
        Err(Error::InvalidParam(m)) => m,
        other => {
            verdict(
                11,
                "coupling",
                false,
                &format!("compliant parameters were not rejected: {other:?}"),
            );
            return;
        }
    };
    println!("  [11] compliant parameters rejected: {msg}");
    println!(
        "  [11] running relaxed desk-scale parameters c1 = {}, c2 = {}, delta1 = {}",
        C11_RELAXED.c1, C11_RELAXED.c2, C11_RELAXED.delta1
    );

    // Pilot: event frequencies at this n, and the E_C rate that sets the
    // attempt budget for the main run. A second pilot with a larger delta1
    // shows the opposite failure direction: widening the E5 range bound
    // inflates Gamma_n until E6/E7 collapse instead, so no single delta1
    // makes the conjunction non-negligible at desk scale.
    let pilot = |params: EventParams, tag: u64| -> (u64, [u64; 8]) {
        let mut flag_counts = [0u64; 8];
        let mut ok = 0u64;
        for i in 0..C11_PILOT {
            let mut w = match PotentialWindow::sample(law, mix(tag, i), -64, 64) {
                Ok(w) => w,
                Err(_) => continue,
            };
            let p = match classify_events(&mut w, C11_N, 0, params) {
                Ok(p) => p,
                Err(_) => continue,
            };
            ok += 1;
            for (j, f) in [p.e_minus, p.e_plus, p.e3, p.e4, p.e5, p.e6, p.e7, p.e_c]
                .into_iter()
                .enumerate()
            {
                if f {
                    flag_counts[j] += 1;
                }
            }
        }
        (ok, flag_counts)
    };
    let names = ["E-", "E+", "E3", "E4", "E5", "E6", "E7", "EC"];
    let (pilot_ok, flag_counts) = pilot(C11_RELAXED, 0xE11);
    for (name, c) in names.iter().zip(flag_counts) {
        println!("  [11] {name}: {c}/{pilot_ok} = {:.4}", c as f64 / pilot_ok.max(1) as f64);
    }
    let wide = EventParams { delta1: 1.5, ..C11_RELAXED };
    let (wide_ok, wide_counts) = pilot(wide, 0xE12);
    println!(
        "  [11] with delta1 = {} instead: {}",
        wide.delta1,
        names
            .iter()
            .zip(wide_counts)
            .map(|(n, c)| format!("{n} {:.4}", c as f64 / wide_ok.max(1) as f64))
            .collect::<Vec<_>>()
            .join(", ")
    );
    let ec = flag_counts[7].max(wide_counts[7]);
    let best = if wide_counts[7] > flag_counts[7] { wide } else { C11_RELAXED };
    if ec == 0 {
        verdict(
            11,
            "coupling",
            false,
            &format!("no E_C environment in a pilot of {pilot_ok}; nothing to couple against"),
        );
        return;
    }
    let rate = ec as f64 / pilot_ok.min(wide_ok) as f64;
    let attempts =
        (((C11_ENVS as f64) * 1.3 / rate).ceil() as u64).clamp(C11_PILOT, C11_ATTEMPT_CAP);
    println!("  [11] best E_C rate {rate:.2e}; scanning up to {attempts} environments");

    let res = coupling_experiment(law, C11_N, 0, C11_ENVS, 0xACCE, best, attempts)
        .expect("relaxed coupling run");
    let frac = res.frac_within_bound.unwrap_or(0.0);
    let meet = res.frac_meet_late.unwrap_or(1.0);
    let meet_se = res.frac_meet_late_stderr.unwrap_or(0.0);
    let ok_envs = res.qualified == C11_ENVS;
    let ok_within = frac >= C11_WITHIN_FRAC;
    let meet_limit = res.meet_bound + C11_SE_MULT * meet_se;
    let ok_meet = meet <= meet_limit;
    let dt = t0.elapsed();
    println!(
        "  [11] qualified {}/{} in {} attempts; within-bound fraction {frac:.3} \
         (needs >= {C11_WITHIN_FRAC}); coupling bound {:.3e}; late-meet fraction {meet:.4} \
         (limit {meet_limit:.3e})",
        res.qualified, C11_ENVS, res.attempts, res.coupling_bound
    );
    let pass = ok_envs && ok_within && ok_meet && dt <= C11_BUDGET;
    verdict(
        11,
        "coupling",
        pass,
        &format!(
            "qualified {}/{C11_ENVS}, within-bound fraction {frac:.3} (needs \
             {C11_WITHIN_FRAC}), late-meet fraction {meet:.4} vs limit {meet_limit:.3e}, \
             elapsed {dt:?} (budget {C11_BUDGET:?})",
            res.qualified
        ),
    );
}

// ---------------------------------------------------------------------------
// 12. Annealed local limit theorem: the proxy estimator's scaled central
//     value moves toward 1/2 as n grows, and the DP and direct estimators
//     agree pairwise on shared environments at walkable n.

const C12_N_SMALL: u64 = 1 << 14;
const C12_N_LARGE: u64 = 1 << 20;
const C12_PROXY_ENVS: u64 = 100_000;
const C12_DP_N: u64 = 2000;
const C12_DP_ENVS: u64 = 2000;
const C12_WPE: u64 = 20;
const C12_SE_MULT: f64 = 3.0;
const C12_GRID: [i64; 5] = [-64, -32, 0, 32, 64];

#[test]
fn criterion_12_sinai_llt() {
    let law = two_point(0.3);
    let t0 = Instant::now();

    // The theorem-regime parameters cannot run at these n; verify the API
    // says so, then use the relaxed desk-scale ones for the trend.
    let compliant = verify_sinai_llt(
        law,
        C12_N_SMALL,
        &[0],
        10,
        &LltMethod::Proxy { params: EventParams::default() },
        1,
    );
    let ok_rejected = matches!(compliant, Err(Error::InvalidParam(_)));

    let mut dist_to_half = Vec::new();
    for (k, n) in [C12_N_SMALL, C12_N_LARGE].into_iter().enumerate() {
        let r = verify_sinai_llt(
            law,
            n,
            &[0],
            C12_PROXY_ENVS,
            &LltMethod::Proxy { params: C11_RELAXED },
            mix(0xACCC, k as u64),
        )
        .expect("proxy run");
        let est = r.rows[0].estimate;
        let ln_n = (n as f64).ln();
        let scaled = ln_n * ln_n * est / (2.0 * law.sigma * law.sigma);
        println!(
            "  [12] n = 2^{}: proxy central estimate {est:.3e}, scaled value {scaled:.4}",
            n.trailing_zeros()
        );
        dist_to_half.push((scaled - 0.5).abs());
    }
    let ok_trend = dist_to_half[1] < dist_to_half[0];

    // Paired-environment agreement of the exact DP and the direct simulator.
    let dp = verify_sinai_llt(law, C12_DP_N, &C12_GRID, C12_DP_ENVS, &LltMethod::Dp, 0xD12)
        .expect("dp run");
    let direct = verify_sinai_llt(
        law,
        C12_DP_N,
        &C12_GRID,
        C12_DP_ENVS,
        &LltMethod::Direct { walks_per_env: C12_WPE },
        0xD12,
    )
    .expect("direct run");
    let mut worst_units = 0.0f64;
    let mut degenerate = 0u64;
    for (a, b) in dp.rows.iter().zip(&direct.rows) {
        let comb = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
        let diff = (a.estimate - b.estimate).abs();
        if comb > 0.0 {
            worst_units = worst_units.max(diff / comb);
        } else if diff > 0.0 {
            degenerate += 1;
        }
    }
    let ok_pairwise = worst_units <= C12_SE_MULT && degenerate == 0;

    let dt = t0.elapsed();
    let pass = ok_rejected && ok_trend && ok_pairwise;
    verdict(
        12,
        "sinai-llt",
        pass,
        &format!(
            "compliant rejected {ok_rejected}; scaled distance to 1/2: \
             {:.4} (n = 2^14) vs {:.4} (n = 2^20), trend ok {ok_trend}; dp vs direct worst \
             {worst_units:.2} se units over {} sites ({degenerate} degenerate), elapsed {dt:?}",
            dist_to_half[0],
            dist_to_half[1],
            C12_GRID.len()
        ),
    );
}

// ---------------------------------------------------------------------------
// 13. End-to-end determinism of the CLI across thread counts.

#[test]
fn criterion_13_determinism() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    let config = root.join("examples/renewal_h12.json");
    let exe = env!("CARGO_BIN_EXE_sinai-lab");

    let mut outputs: Vec<(Vec<u8>, Vec<u8>)> = Vec::new();
    let mut statuses_ok = true;
    for threads in ["1", "2"] {
        let dir = tempfile::tempdir().expect("tempdir");
        let status = Command::new(exe)
            .args(["run", config.to_str().unwrap(), "--threads", threads, "--out"])
            .arg(dir.path())
            .status()
            .expect("spawn CLI");
        statuses_ok &= status.success();
        let json = std::fs::read(dir.path().join("renewal.json")).expect("renewal.json");
        let csv = std::fs::read(dir.path().join("renewal.csv")).expect("renewal.csv");
        outputs.push((json, csv));
    }
    let json_equal = outputs[0].0 == outputs[1].0;
    let csv_equal = outputs[0].1 == outputs[1].1;
    let pass = statuses_ok && json_equal && csv_equal;
    verdict(
        13,
        "determinism",
        pass,
        &format!(
            "CLI exit ok {statuses_ok}, JSON byte-identical {json_equal}, \
             CSV byte-identical {csv_equal} across --threads 1 and 2"
        ),
    );
}
