//! Trajectory simulation under the quenched law, hitting times, and the
//! coupling between the walk and the reflected stationary walk.
//!
//! A walker at site `x` steps to `x + 1` with probability `omega_x` and to
//! `x - 1` otherwise, consuming exactly one uniform per step from its own
//! stream, so a trajectory is a deterministic function of `(window, seed)`.
//! Windows grow on demand when the walker leaves the sampled range.
//!
//! The coupling pairs the walk `S` started from the parity-adjusted valley
//! bottom with a walk `Shat` kept inside the central valley `[M-, M+]` by
//! reflecting boundaries (`omega_hat_{M-} = 1`, `omega_hat_{M+} = 0`) and
//! started from the invariant measure of the reflected two-step chain. The
//! two walks move independently until they first meet, move in lockstep until
//! `S` leaves the valley, and are independent again afterwards. Each walker
//! draws from its own sub-stream, so the pairing changes neither marginal
//! law.

use serde::Serialize;

use crate::decomp::{localization_b_h, scan_left_extrema};
use crate::envgen::PotentialWindow;
use crate::quenched::{reflected_invariant, Parity};
use crate::rng::{mix, Stream};
use crate::{Error, Result};

/// Outcome of one simulated trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkRecord {
    /// Position after the last step.
    pub endpoint: i64,
    /// For each requested target site, in request order, the first time
    /// `k >= 0` with `S_k` equal to it, or `None` if never hit.
    pub first_hits: Vec<(i64, Option<u64>)>,
    /// Packed step directions when requested: bit `k % 8` of byte `k / 8` is
    /// set iff step `k` went up. Debugging aid only.
    pub step_bits: Option<Vec<u8>>,
}

/// Run `n` steps from `start` under the window's transition probabilities.
///
/// `record_hits` lists target sites whose first hitting times (including
/// time 0) are recorded; `record_steps` additionally dumps one bit per step.
/// The window extends itself as the walker moves, failing with
/// `ExtensionBudgetExceeded` if it would outgrow its budget.
pub fn simulate_walk(
    w: &mut PotentialWindow,
    start: i64,
    n: u64,
    seed: u64,
    record_hits: &[i64],
    record_steps: bool,
) -> Result<WalkRecord> {
    let mut first_hits: Vec<(i64, Option<u64>)> =
        record_hits.iter().map(|&t| (t, None)).collect();
    let mut step_bits = record_steps.then(|| vec![0u8; n.div_ceil(8) as usize]);
    let mut stream = Stream::new(seed);
    let mut pos = start;
    for (t, h) in first_hits.iter_mut() {
        if *t == pos {
            *h = Some(0);
        }
    }
    for k in 0..n {
        w.ensure_site(pos)?;
        let up = stream.next_f64() < w.omega(pos);
        pos += if up { 1 } else { -1 };
        if up {
            if let Some(bits) = step_bits.as_mut() {
                bits[(k / 8) as usize] |= 1 << (k % 8);
            }
        }
        for (t, h) in first_hits.iter_mut() {
            if h.is_none() && *t == pos {
                *h = Some(k + 1);
            }
        }
    }
    Ok(WalkRecord {
        endpoint: pos,
        first_hits,
        step_bits,
    })
}

/// Which hitting time to measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HitVariant {
    /// First `k >= 0` with `S_k = target`; zero when starting on the target.
    Hit,
    /// First `k >= 1` with `S_k = target` (return time when `target = start`).
    Return,
}

/// A hitting time, with censoring reported as a value so Monte Carlo code can
/// count censored replicates instead of catching errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HitOutcome {
    Hit(u64),
    CapExceeded,
}

impl HitOutcome {
    pub fn time(self) -> Option<u64> {
        match self {
            HitOutcome::Hit(t) => Some(t),
            HitOutcome::CapExceeded => None,
        }
    }
}

/// First hitting time of `target` from `start`, censored at `cap` steps.
pub fn hitting_time(
    w: &mut PotentialWindow,
    start: i64,
    target: i64,
    cap: u64,
    seed: u64,
    variant: HitVariant,
) -> Result<HitOutcome> {
    if cap == 0 {
        return Err(Error::InvalidParam("hitting_time needs cap > 0".into()));
    }
    if variant == HitVariant::Hit && start == target {
        return Ok(HitOutcome::Hit(0));
    }
    let mut stream = Stream::new(seed);
    let mut pos = start;
    for k in 0..cap {
        w.ensure_site(pos)?;
        let up = stream.next_f64() < w.omega(pos);
        pos += if up { 1 } else { -1 };
        if pos == target {
            return Ok(HitOutcome::Hit(k + 1));
        }
    }
    Ok(HitOutcome::CapExceeded)
}

/// First `k >= 0` with `S_k` equal to `a` or `c` (the exit time
/// `tau(a) ∧ tau(c)`), censored at `cap`. Requires `a < start < c`.
pub fn interval_exit_time(
    w: &mut PotentialWindow,
    start: i64,
    a: i64,
    c: i64,
    cap: u64,
    seed: u64,
) -> Result<HitOutcome> {
    if !(a < start && start < c) {
        return Err(Error::InvalidParam(format!(
            "interval_exit_time needs a < start < c, got {a}, {start}, {c}"
        )));
    }
    if cap == 0 {
        return Err(Error::InvalidParam(
            "interval_exit_time needs cap > 0".into(),
        ));
    }
    let mut stream = Stream::new(seed);
    let mut pos = start;
    for k in 0..cap {
        w.ensure_site(pos)?;
        let up = stream.next_f64() < w.omega(pos);
        pos += if up { 1 } else { -1 };
        if pos == a || pos == c {
            return Ok(HitOutcome::Hit(k + 1));
        }
    }
    Ok(HitOutcome::CapExceeded)
}

/// One realization of the coupling between `S` and the reflected walk `Shat`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingRecord {
    /// Number of steps simulated.
    pub horizon: u64,
    /// Valley bottom `b` at height `log n`.
    pub b: i64,
    /// Start of `S`: `b` shifted to the parity class of `n`.
    pub bhat: i64,
    /// Left end of the central valley (a maximum of the decomposition).
    pub m_minus: i64,
    /// Right end of the central valley.
    pub m_plus: i64,
    /// First time the walks occupy the same site, if within the horizon.
    pub tau_meet: Option<u64>,
    /// First time after the meeting at which `S` leaves `[M-, M+]`, if any.
    pub tau_exit: Option<u64>,
    pub s_endpoint: i64,
    pub shat_endpoint: i64,
    /// Full trajectories (`S`, `Shat`) including time 0, when requested.
    pub paths: Option<(Vec<i64>, Vec<i64>)>,
}

/// Simulate the coupling for `n` steps.
///
/// The decomposition of the window at height `log n` defines the valley
/// bottom `b`, the surrounding maxima `M- < b < M+`, and the start
/// `bhat = 2 floor(b/2) + (n mod 2)`. `Shat` starts from a draw of the
/// reflected chain's invariant measure on the parity class of `n` and uses
/// the modified environment with `omega_{M-} = 1` and `omega_{M+} = 0`, so it
/// never leaves the valley. Sub-streams: `mix(seed, 1)` drives `S`,
/// `mix(seed, 2)` drives `Shat` while independent, `mix(seed, 3)` draws
/// `Shat_0`. While locked, both walks consume the single uniform of `S`; a
/// boundary move forced by the modified environment consumes none.
pub fn simulate_coupling(
    w: &mut PotentialWindow,
    n: u64,
    seed: u64,
    record_paths: bool,
) -> Result<CouplingRecord> {
    if n < 2 {
        return Err(Error::InvalidParam(format!(
            "simulate_coupling needs n >= 2 so that log n > 0, got {n}"
        )));
    }
    let h = (n as f64).ln();
    let d = scan_left_extrema(w, h, -1, 2)?;
    let b = localization_b_h(&d);
    let (m_minus, m_plus) = if b <= 0 {
        (d.x(-1), d.x(1))
    } else {
        (d.x(0), d.x(2))
    };
    debug_assert!(m_minus < b && b < m_plus);
    let parity = Parity::of(n as i64);
    let bhat = 2 * b.div_euclid(2) + (n % 2) as i64;
    debug_assert!(parity.matches(bhat));
    let nu = reflected_invariant(w, parity, m_minus, m_plus)?;

    let mut init = Stream::new(mix(seed, 3));
    let u0 = init.next_f64();
    let mut shat = nu.hi();
    let mut acc = 0.0;
    for (site, p) in nu.iter() {
        acc += p;
        if u0 < acc {
            shat = site;
            break;
        }
    }
    let mut s = bhat;
    let mut s_stream = Stream::new(mix(seed, 1));
    let mut shat_stream = Stream::new(mix(seed, 2));
    let mut tau_meet = if s == shat { Some(0) } else { None };
    let mut tau_exit: Option<u64> = None;
    let mut paths = record_paths.then(|| (vec![s], vec![shat]));

    for l in 0..n {
        let locked = tau_meet.is_some() && tau_exit.is_none();
        w.ensure_site(s)?;
        let up = s_stream.next_f64() < w.omega(s);
        s += if up { 1 } else { -1 };
        if locked {
            if s < m_minus || s > m_plus {
                // S stepped out of the valley; Shat takes the move the
                // modified environment forces at the boundary.
                tau_exit = Some(l + 1);
                shat = if s < m_minus { m_minus + 1 } else { m_plus - 1 };
            } else {
                shat = s;
            }
        } else {
            let up_hat = if shat == m_minus {
                true
            } else if shat == m_plus {
                false
            } else {
                shat_stream.next_f64() < w.omega(shat)
            };
            shat += if up_hat { 1 } else { -1 };
            if tau_meet.is_none() && s == shat {
                tau_meet = Some(l + 1);
            }
        }
        if let Some((ps, ph)) = paths.as_mut() {
            ps.push(s);
            ph.push(shat);
        }
    }

    Ok(CouplingRecord {
        horizon: n,
        b,
        bhat,
        m_minus,
        m_plus,
        tau_meet,
        tau_exit,
        s_endpoint: s,
        shat_endpoint: shat,
        paths,
    })
}
