//! Certified h-extrema decomposition of potential paths.
//!
//! A site `y` is a left h-minimum of `v` when there are witnesses
//! `alpha < y < beta` with
//!
//! ```text
//! min over [alpha, y-1] of v  >  v(y)      (strict on the left)
//! min over [y+1, beta] of v   >= v(y)      (weak on the right)
//! v(alpha) >= v(y) + h,   v(beta) >= v(y) + h
//! ```
//!
//! and a left h-maximum when the same holds for `-v`. Right h-extrema swap
//! the strict and weak sides. An extremum is *certified* once such witnesses
//! lie inside the materialized window, so every emitted record is a genuine
//! h-extremum of the full two-sided path regardless of later extension.
//!
//! Two implementations are kept deliberately independent:
//! [`bruteforce_left_extrema`] transcribes the definition site by site in
//! O(n^2) and serves as the oracle; the chain scans below find the same set in
//! linear time and are tested for exact agreement.
//!
//! All value comparisons are plain f64 comparisons. Lattice laws produce
//! exact ties and the strict/weak distinctions act on them literally;
//! non-lattice laws hit ties with probability zero and get no special casing.

use crate::envgen::PotentialWindow;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Min,
    Max,
}

impl ExtremumKind {
    pub fn opposite(self) -> Self {
        match self {
            ExtremumKind::Min => ExtremumKind::Max,
            ExtremumKind::Max => ExtremumKind::Min,
        }
    }
}

/// One certified h-extremum: `position = x_k(V, h)` with `V(position) = value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremumRecord {
    pub k: i64,
    pub position: i64,
    pub kind: ExtremumKind,
    pub value: f64,
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

/// Definitional O(n^2) enumeration of the left h-extrema certifiable inside
/// the window. Witness search is restricted to the window; sites whose
/// witnesses would fall outside are not emitted.
pub fn bruteforce_left_extrema(w: &PotentialWindow, h: f64) -> Vec<ExtremumRecord> {
    bruteforce_extrema(w, h, Side::Left)
}

/// Same transcription with the strict/weak sides swapped.
pub fn bruteforce_right_extrema(w: &PotentialWindow, h: f64) -> Vec<ExtremumRecord> {
    bruteforce_extrema(w, h, Side::Right)
}

fn bruteforce_extrema(w: &PotentialWindow, h: f64, side: Side) -> Vec<ExtremumRecord> {
    let mut found = Vec::new();
    for y in w.lo()..=w.hi() {
        let vy = w.v(y);
        if brute_arm(w, y, vy, h, side, ExtremumKind::Min) {
            found.push((y, vy, ExtremumKind::Min));
        } else if brute_arm(w, y, vy, h, side, ExtremumKind::Max) {
            found.push((y, vy, ExtremumKind::Max));
        }
    }
    assign_indices(found, side)
}

/// Check both witness arms for `y` as an h-extremum of the given kind.
fn brute_arm(w: &PotentialWindow, y: i64, vy: f64, h: f64, side: Side, kind: ExtremumKind) -> bool {
    // For a minimum the left arm is strict for left extrema and weak for
    // right extrema; arms and comparisons mirror for maxima.
    let strict_left = side == Side::Left;
    let mut ok = false;
    for t in (w.lo()..y).rev() {
        let vt = w.v(t);
        match kind {
            ExtremumKind::Min => {
                // The h-threshold is always tested on the difference, exactly
                // as the linear scan does, so lattice ties resolve the same
                // way in both implementations.
                if vt - vy >= h {
                    ok = true;
                    break;
                }
                if (strict_left && vt <= vy) || (!strict_left && vt < vy) {
                    return false;
                }
            }
            ExtremumKind::Max => {
                if vy - vt >= h {
                    ok = true;
                    break;
                }
                if (strict_left && vt >= vy) || (!strict_left && vt > vy) {
                    return false;
                }
            }
        }
    }
    if !ok {
        return false;
    }
    let strict_right = side == Side::Right;
    for t in (y + 1)..=w.hi() {
        let vt = w.v(t);
        match kind {
            ExtremumKind::Min => {
                if vt - vy >= h {
                    return true;
                }
                if (strict_right && vt <= vy) || (!strict_right && vt < vy) {
                    return false;
                }
            }
            ExtremumKind::Max => {
                if vy - vt >= h {
                    return true;
                }
                if (strict_right && vt >= vy) || (!strict_right && vt > vy) {
                    return false;
                }
            }
        }
    }
    false
}

/// Index normalization shared by every producer: the unique junction index
/// gets k = 0 so that x_0 <= 0 < x_1 (left) or x_0 < 0 <= x_1 (right).
fn assign_indices(found: Vec<(i64, f64, ExtremumKind)>, side: Side) -> Vec<ExtremumRecord> {
    let base = found
        .iter()
        .rposition(|&(pos, _, _)| match side {
            Side::Left => pos <= 0,
            Side::Right => pos < 0,
        })
        .map(|i| i as i64)
        .unwrap_or(-1);
    found
        .into_iter()
        .enumerate()
        .map(|(i, (position, value, kind))| ExtremumRecord {
            k: i as i64 - base,
            position,
            kind,
            value,
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Certified chain scan
// ---------------------------------------------------------------------------

/// Site access abstraction so the same scan runs on fixed windows (stop at
/// the edge), growing windows, and reflected views.
trait Pot {
    /// `Ok(None)` means the data ends there (fixed window); growing access
    /// never returns `None` but can fail with `ExtensionBudgetExceeded`.
    fn at(&mut self, x: i64) -> Result<Option<f64>>;
}

struct FixedPot<'a>(&'a PotentialWindow);
impl Pot for FixedPot<'_> {
    #[inline]
    fn at(&mut self, x: i64) -> Result<Option<f64>> {
        Ok(self.0.contains(x).then(|| self.0.v(x)))
    }
}

/// Fixed window read through the reflection u -> V(-u).
struct FixedReflPot<'a>(&'a PotentialWindow);
impl Pot for FixedReflPot<'_> {
    #[inline]
    fn at(&mut self, u: i64) -> Result<Option<f64>> {
        Ok(self.0.contains(-u).then(|| self.0.v(-u)))
    }
}

struct GrowPot<'a>(&'a mut PotentialWindow);
impl Pot for GrowPot<'_> {
    #[inline]
    fn at(&mut self, x: i64) -> Result<Option<f64>> {
        self.0.ensure_site(x)?;
        Ok(Some(self.0.v(x)))
    }
}

struct GrowReflPot<'a>(&'a mut PotentialWindow);
impl Pot for GrowReflPot<'_> {
    #[inline]
    fn at(&mut self, u: i64) -> Result<Option<f64>> {
        self.0.ensure_site(-u)?;
        Ok(Some(self.0.v(-u)))
    }
}

/// Two-phase search rightward from `start`: find the first h-rise over the
/// running minimum, then (if the minimum lacks in-data high ground on its
/// left) the first h-drop below the running maximum. Returns the first
/// extremum certifiable with witnesses inside the data, or `None` when the
/// data ends first, in which case no site at all is certifiable.
fn seed_right<P: Pot>(pot: &mut P, start: i64, h: f64) -> Result<Option<(i64, f64, ExtremumKind)>> {
    let Some(v0) = pot.at(start)? else {
        return Ok(None);
    };
    let mut rmin = v0;
    let mut m1 = start;
    // Max over [start, m1) and over [start, t]; the former decides whether m1
    // is itself certified (it needs an h-high witness on its left).
    let mut high_left = f64::NEG_INFINITY;
    let mut cur_max = v0;
    let mut t = start + 1;
    let (tau1, v_tau1) = loop {
        let Some(v) = pot.at(t)? else {
            return Ok(None);
        };
        if v < rmin {
            high_left = cur_max;
            rmin = v;
            m1 = t;
        }
        if v > cur_max {
            cur_max = v;
        }
        if v - rmin >= h {
            break (t, v);
        }
        t += 1;
    };
    if high_left - rmin >= h {
        return Ok(Some((m1, rmin, ExtremumKind::Min)));
    }
    // Phase two: running maximum from tau1.
    let mut rmax = v_tau1;
    let mut m2 = tau1;
    t = tau1 + 1;
    loop {
        let Some(v) = pot.at(t)? else {
            return Ok(None);
        };
        if v > rmax {
            rmax = v;
            m2 = t;
        }
        if rmax - v >= h {
            return Ok(Some((m2, rmax, ExtremumKind::Max)));
        }
        t += 1;
    }
}

/// One chain step: starting from a certified extremum at `from`, walk in
/// direction `dir` tracking the running extremum of the opposite kind and its
/// achiever, and certify that achiever as soon as the path moves h beyond it.
/// Tie rule: walking rightward the first achiever of the running extremum is
/// the candidate, walking leftward the most recent one (both equal "the
/// smallest position", matching the strict-left convention).
fn chain_step<P: Pot>(
    pot: &mut P,
    from: i64,
    from_kind: ExtremumKind,
    dir: i64,
    h: f64,
) -> Result<Option<(i64, f64, ExtremumKind)>> {
    let replace_on_tie = dir < 0;
    let mut t = from + dir;
    match from_kind {
        ExtremumKind::Min => {
            let mut best = f64::NEG_INFINITY;
            let mut cand = from;
            loop {
                let Some(v) = pot.at(t)? else {
                    return Ok(None);
                };
                if best - v >= h {
                    return Ok(Some((cand, best, ExtremumKind::Max)));
                }
                if v > best || (replace_on_tie && v == best) {
                    best = v;
                    cand = t;
                }
                t += dir;
            }
        }
        ExtremumKind::Max => {
            let mut best = f64::INFINITY;
            let mut cand = from;
            loop {
                let Some(v) = pot.at(t)? else {
                    return Ok(None);
                };
                if v - best >= h {
                    return Ok(Some((cand, best, ExtremumKind::Min)));
                }
                if v < best || (replace_on_tie && v == best) {
                    best = v;
                    cand = t;
                }
                t += dir;
            }
        }
    }
}

/// Full fixed-data scan: seed from the left edge, then chain to both edges.
/// Output is sorted by position; equals the brute-force set exactly.
fn scan_span<P: Pot>(pot: &mut P, start: i64, h: f64) -> Result<Vec<(i64, f64, ExtremumKind)>> {
    let Some(anchor) = seed_right(pot, start, h)? else {
        return Ok(Vec::new());
    };
    let mut out: VecDeque<(i64, f64, ExtremumKind)> = VecDeque::new();
    out.push_back(anchor);
    loop {
        let &(p, _, kind) = out.back().unwrap();
        match chain_step(pot, p, kind, 1, h)? {
            Some(next) => out.push_back(next),
            None => break,
        }
    }
    loop {
        let &(p, _, kind) = out.front().unwrap();
        match chain_step(pot, p, kind, -1, h)? {
            Some(prev) => out.push_front(prev),
            None => break,
        }
    }
    Ok(out.into_iter().collect())
}

/// Linear-time certified scan of the left h-extrema inside a fixed window.
/// Agrees exactly with [`bruteforce_left_extrema`].
pub fn scan_left_extrema_fixed(w: &PotentialWindow, h: f64) -> Vec<ExtremumRecord> {
    let mut pot = FixedPot(w);
    let found = scan_span(&mut pot, w.lo(), h).expect("fixed scans cannot fail");
    assign_indices(found, Side::Left)
}

/// Fixed-window right h-extrema via the reflection `x_i*(v) = -x_{1-i}(v(-.))`.
pub fn scan_right_extrema_fixed(w: &PotentialWindow, h: f64) -> Vec<ExtremumRecord> {
    let mut pot = FixedReflPot(w);
    let found = scan_span(&mut pot, -w.hi(), h).expect("fixed scans cannot fail");
    let mapped: Vec<(i64, f64, ExtremumKind)> = found
        .into_iter()
        .rev()
        .map(|(u, v, kind)| (-u, v, kind))
        .collect();
    assign_indices(mapped, Side::Right)
}

/// A certified decomposition: consecutive h-extrema `x_k` around the origin,
/// always covering at least `[k_min - 1, k_max + 1]` so that every slope
/// `T_k` for k in the requested range has both endpoints available.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub h: f64,
    pub side: Side,
    extrema: Vec<ExtremumRecord>,
    k_min: i64,
    k_max: i64,
}

impl Serialize for Decomposition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Out<'a> {
            h: f64,
            side: Side,
            extrema: &'a [ExtremumRecord],
        }
        Out { h: self.h, side: self.side, extrema: self.core() }.serialize(s)
    }
}

impl Decomposition {
    /// Wrap an externally produced record list (e.g. a fixed-window scan).
    /// Records must be consecutive in k, strictly increasing in position, and
    /// alternating in kind.
    pub fn from_records(h: f64, side: Side, extrema: Vec<ExtremumRecord>) -> Result<Self> {
        if extrema.is_empty() {
            return Err(Error::Range("decomposition needs at least one extremum".into()));
        }
        for pair in extrema.windows(2) {
            if pair[1].k != pair[0].k + 1
                || pair[1].position <= pair[0].position
                || pair[1].kind == pair[0].kind
            {
                return Err(Error::Range("records must alternate with consecutive k".into()));
            }
        }
        let (k_min, k_max) = (extrema[0].k, extrema[extrema.len() - 1].k);
        Ok(Decomposition { h, side, extrema, k_min, k_max })
    }

    /// All certified records, including the flank ones beyond the requested
    /// core range.
    pub fn records(&self) -> &[ExtremumRecord] {
        &self.extrema
    }

    /// The records for the requested `[k_min, k_max]`.
    pub fn core(&self) -> &[ExtremumRecord] {
        let first = self.extrema[0].k;
        let a = (self.k_min - first).max(0) as usize;
        let b = ((self.k_max - first) as usize).min(self.extrema.len() - 1);
        &self.extrema[a..=b]
    }

    pub fn get(&self, k: i64) -> Option<&ExtremumRecord> {
        let first = self.extrema[0].k;
        if k < first {
            return None;
        }
        self.extrema.get((k - first) as usize)
    }

    /// Position `x_k`; panics if `k` was not certified.
    pub fn x(&self, k: i64) -> i64 {
        self.get(k).unwrap_or_else(|| panic!("x_{k} not certified")).position
    }

    /// The slope `T_k` spanning `[x_k, x_{k+1}]`, read off the window.
    /// Both records and the covering sites must be present (they are, for any
    /// window the scan itself extended).
    pub fn slope(&self, w: &PotentialWindow, k: i64) -> Option<SlopeView> {
        let a = self.get(k)?;
        let b = self.get(k + 1)?;
        Some(SlopeView::from_window(w, a.position, b.position, self.h))
    }
}

/// Auto-extending scan for certified left h-extrema with `x_0 <= 0 < x_1`.
///
/// The window grows until every requested index plus one flank extremum on
/// each side is certified; the only failure mode is the extension budget.
pub fn scan_left_extrema(
    w: &mut PotentialWindow,
    h: f64,
    k_min: i64,
    k_max: i64,
) -> Result<Decomposition> {
    check_scan_params(h, k_min, k_max)?;
    let mut pot = GrowPot(w);
    let found = scan_auto(&mut pot, h, k_min.min(0) - 1, k_max.max(1) + 1, Side::Left)?;
    let extrema = assign_indices(found, Side::Left);
    Ok(Decomposition { h, side: Side::Left, extrema, k_min, k_max })
}

/// Auto-extending right h-extrema scan, computed as the reflected left scan
/// with the index map `x_i*(v, h) = -x_{1-i}(v(-.), h)` and normalized so
/// that `x_0* < 0 <= x_1*`.
pub fn right_extrema(
    w: &mut PotentialWindow,
    h: f64,
    k_min: i64,
    k_max: i64,
) -> Result<Decomposition> {
    check_scan_params(h, k_min, k_max)?;
    // Indices i in [k_min - 1, k_max + 1] pull back to 1 - i in u-space.
    let (u_kmin, u_kmax) = (-k_max, 2 - k_min);
    let mut pot = GrowReflPot(w);
    let found = scan_auto(&mut pot, h, u_kmin.min(0) - 1, u_kmax.max(1) + 1, Side::Left)?;
    let mapped: Vec<(i64, f64, ExtremumKind)> =
        found.into_iter().rev().map(|(u, v, kind)| (-u, v, kind)).collect();
    let extrema = assign_indices(mapped, Side::Right);
    Ok(Decomposition { h, side: Side::Right, extrema, k_min, k_max })
}

fn check_scan_params(h: f64, k_min: i64, k_max: i64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParam(format!("h = {h} must be positive")));
    }
    if k_min > k_max {
        return Err(Error::Range(format!("k range [{k_min}, {k_max}] is empty")));
    }
    Ok(())
}

/// Core of the growing scans: seed from 0, then chain outward until indices
/// `[lo_k, hi_k]` (in the junction-normalized labeling of `side`) exist.
fn scan_auto<P: Pot>(
    pot: &mut P,
    h: f64,
    lo_k: i64,
    hi_k: i64,
    side: Side,
) -> Result<Vec<(i64, f64, ExtremumKind)>> {
    // In the normalized labeling, k <= 0 records sit at positions <= 0 (left
    // side junction rule); we need 1 - lo_k of those and hi_k at positions > 0.
    debug_assert!(side == Side::Left);
    let _ = side;
    let need_le0 = (1 - lo_k) as usize;
    let need_gt0 = hi_k as usize;
    let anchor = seed_right(pot, 0, h)?.expect("growing scans never run out of data");
    let mut out: VecDeque<(i64, f64, ExtremumKind)> = VecDeque::new();
    out.push_back(anchor);
    let mut cnt_gt0 = usize::from(anchor.0 > 0);
    while cnt_gt0 < need_gt0 {
        let &(p, _, kind) = out.back().unwrap();
        let next = chain_step(pot, p, kind, 1, h)?.expect("growing scans never run out of data");
        if next.0 > 0 {
            cnt_gt0 += 1;
        }
        out.push_back(next);
    }
    let mut cnt_le0 = out.len() - cnt_gt0;
    while cnt_le0 < need_le0 {
        let &(p, _, kind) = out.front().unwrap();
        let prev = chain_step(pot, p, kind, -1, h)?.expect("growing scans never run out of data");
        if prev.0 <= 0 {
            cnt_le0 += 1;
        }
        out.push_front(prev);
    }
    Ok(out.into_iter().collect())
}

/// The paper's localization point: `x_0` if it is a left h-minimum, else
/// `x_1`. The result is always a left h-minimum.
pub fn localization_b_h(d: &Decomposition) -> i64 {
    assert_eq!(d.side, Side::Left, "b_h is defined from the left decomposition");
    let x0 = d.get(0).expect("x_0 must be certified");
    if x0.kind == ExtremumKind::Min {
        x0.position
    } else {
        let x1 = d.get(1).expect("x_1 must be certified when x_0 is a maximum");
        debug_assert_eq!(x1.kind, ExtremumKind::Min);
        x1.position
    }
}

/// The Kesten-style localization point built from the first h-oscillation
/// times of V and its reflection.
///
/// `d_Z(h)` is the first time the range process `sup (Z - running inf)`
/// reaches h; `b_V^+` takes the first argmin on `[0, d_V(h)]`, the reflected
/// `b_V^-` the last argmin, and the side with the lower running maximum at
/// its d-time wins.
pub fn kesten_b_h_k(w: &mut PotentialWindow, h: f64) -> Result<i64> {
    if !(h > 0.0) {
        return Err(Error::InvalidParam(format!("h = {h} must be positive")));
    }
    // (first argmin, max over [0, d]) on the forward path.
    let (b_plus, vbar_right) = {
        let mut pot = GrowPot(w);
        oscillation_scan(&mut pot, h, false)?
    };
    let (b_minus, vbar_left) = {
        let mut pot = GrowReflPot(w);
        oscillation_scan(&mut pot, h, true)?
    };
    Ok(if vbar_right < vbar_left { b_plus } else { -b_minus })
}

/// Walk right from 0 until the rise over the running minimum reaches h;
/// return the argmin (first or last achiever) and the running maximum at
/// that time.
fn oscillation_scan<P: Pot>(pot: &mut P, h: f64, last_argmin: bool) -> Result<(i64, f64)> {
    let v0 = pot.at(0)?.expect("site 0 always materialized");
    let mut rmin = v0;
    let mut argmin = 0i64;
    let mut rmax = v0;
    let mut t = 1i64;
    loop {
        let v = pot.at(t)?.expect("growing scans never run out of data");
        if v < rmin || (last_argmin && v == rmin) {
            rmin = v;
            argmin = t;
        }
        if v > rmax {
            rmax = v;
        }
        if v - rmin >= h {
            return Ok((argmin, rmax));
        }
        t += 1;
    }
}

// ---------------------------------------------------------------------------
// Slopes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlopeDirection {
    Upward,
    Downward,
}

impl SlopeDirection {
    pub fn flip(self) -> Self {
        match self {
            SlopeDirection::Upward => SlopeDirection::Downward,
            SlopeDirection::Downward => SlopeDirection::Upward,
        }
    }
}

/// A translated slope: values t(0) = 0, ..., t(l) with height H = |t(l)| and
/// excess e = H - h when cut at level h.
#[derive(Debug, Clone)]
pub struct SlopeView {
    values: Vec<f64>,
    pub direction: SlopeDirection,
    pub height: f64,
    pub excess: f64,
    /// Pre-image under `zeta`, kept so that the reversal is an exact
    /// involution in floating point: zeta(zeta(T)) returns T verbatim instead
    /// of re-rounding the algebraic identity.
    prev: Option<Box<SlopeView>>,
}

impl PartialEq for SlopeView {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values && self.direction == other.direction
    }
}

impl SlopeView {
    /// Slope of the window between sites `a < b`, rebased to V(a).
    pub fn from_window(w: &PotentialWindow, a: i64, b: i64, h: f64) -> Self {
        assert!(a < b, "slope needs a nonempty span");
        let va = w.v(a);
        let values: Vec<f64> = (a..=b).map(|j| w.v(j) - va).collect();
        Self::from_values(values, h)
    }

    /// Wrap explicit values (t(0) must be 0); direction and height are read
    /// off the endpoint.
    pub fn from_values(values: Vec<f64>, h: f64) -> Self {
        assert!(values.len() >= 2, "slope needs length >= 1");
        assert_eq!(values[0], 0.0, "slopes are rebased to t(0) = 0");
        let end = values[values.len() - 1];
        let direction =
            if end > 0.0 { SlopeDirection::Upward } else { SlopeDirection::Downward };
        let height = end.abs();
        SlopeView { values, direction, height, excess: height - h, prev: None }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of steps l (one less than the number of values).
    pub fn len(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false // a slope always has at least one step
    }
}

/// Slope reversal `zeta(T)(i) = T(l - i) - T(l)`; flips the direction and
/// preserves height and excess. Applying it twice returns the original view
/// bit for bit.
pub fn zeta(t: &SlopeView) -> SlopeView {
    if let Some(p) = &t.prev {
        return (**p).clone();
    }
    let l = t.values.len() - 1;
    let end = t.values[l];
    let values: Vec<f64> = (0..=l).map(|i| t.values[l - i] - end).collect();
    SlopeView {
        values,
        direction: t.direction.flip(),
        height: t.height,
        excess: t.excess,
        prev: Some(Box::new(t.clone())),
    }
}

/// Concatenate `g` after `f`, shifting `g` so its first value lands on `f`'s
/// last: `Glue(f, g)(i) = f(end) + g(j) - g(0)` past the junction.
pub fn glue(f: &[f64], g: &[f64]) -> Vec<f64> {
    assert!(!f.is_empty() && !g.is_empty(), "glue needs nonempty paths");
    let mut out = Vec::with_capacity(f.len() + g.len() - 1);
    out.extend_from_slice(f);
    let base = *f.last().unwrap();
    let g0 = g[0];
    for &x in &g[1..] {
        out.push(base + x - g0);
    }
    out
}

// ---------------------------------------------------------------------------
// Canonical slope samples
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlopeVariant {
    /// First-achiever argmin/argmax in the stopping-time recursion.
    Plain,
    /// Last-achiever variant.
    Starred,
}

/// The canonical upward/downward slope pair cut out of `(V(k), k >= 0)` by
/// the alternating stopping times.
#[derive(Debug, Clone)]
pub struct CanonicalSlopes {
    pub up: SlopeView,
    pub down: SlopeView,
    pub m1: i64,
    pub m2: i64,
    pub m3: i64,
}

/// Run the recursion: tau_1 is the first h-rise over the running minimum,
/// m_1 the argmin on [0, tau_1]; tau_2 the first h-drop below the running
/// maximum, m_2 the argmax on [tau_1, tau_2]; tau_3 and m_3 repeat the first
/// step. The upward slope spans [m_1, m_2], the downward one [m_2, m_3].
pub fn extract_canonical_slopes(
    w: &mut PotentialWindow,
    h: f64,
    variant: SlopeVariant,
) -> Result<CanonicalSlopes> {
    if !(h > 0.0) {
        return Err(Error::InvalidParam(format!("h = {h} must be positive")));
    }
    let last = variant == SlopeVariant::Starred;
    let (m1, m2, m3);
    {
        let mut pot = GrowPot(w);
        let (a, tau1) = phase_extremum(&mut pot, 0, h, ExtremumKind::Min, last)?;
        let (b, tau2) = phase_extremum(&mut pot, tau1, h, ExtremumKind::Max, last)?;
        let (c, _) = phase_extremum(&mut pot, tau2, h, ExtremumKind::Min, last)?;
        m1 = a;
        m2 = b;
        m3 = c;
    }
    Ok(CanonicalSlopes {
        up: SlopeView::from_window(w, m1, m2, h),
        down: SlopeView::from_window(w, m2, m3, h),
        m1,
        m2,
        m3,
    })
}

/// One leg of the recursion from `start`: track the running min (or max) and
/// its first/last achiever until the path moves h the other way; returns
/// (achiever, stopping time).
fn phase_extremum<P: Pot>(
    pot: &mut P,
    start: i64,
    h: f64,
    kind: ExtremumKind,
    last_achiever: bool,
) -> Result<(i64, i64)> {
    let v0 = pot.at(start)?.expect("start site present");
    let mut best = v0;
    let mut arg = start;
    let mut t = start + 1;
    loop {
        let v = pot.at(t)?.expect("growing scans never run out of data");
        match kind {
            ExtremumKind::Min => {
                if v < best || (last_achiever && v == best) {
                    best = v;
                    arg = t;
                }
                if v - best >= h {
                    return Ok((arg, t));
                }
            }
            ExtremumKind::Max => {
                if v > best || (last_achiever && v == best) {
                    best = v;
                    arg = t;
                }
                if best - v >= h {
                    return Ok((arg, t));
                }
            }
        }
        t += 1;
    }
}

// ---------------------------------------------------------------------------
// Ladder epochs
// ---------------------------------------------------------------------------

/// Weak descending ladder decomposition of `(V(k), k >= 0)` stopped at the
/// first excursion of height >= h.
#[derive(Debug, Clone)]
pub struct LadderEpochs {
    /// e_0 = 0, ..., e_{L+1} (one epoch past the qualifying excursion).
    pub epochs: Vec<i64>,
    /// H_i = max over [e_i, e_{i+1}] of V - V(e_i), for i = 0..=L.
    pub heights: Vec<f64>,
    /// L = min { i : H_i >= h }.
    pub l_index: usize,
    /// m_1^* = e_L.
    pub m1_star: i64,
}

pub fn ladder_epochs(w: &mut PotentialWindow, h: f64) -> Result<LadderEpochs> {
    if !(h > 0.0) {
        return Err(Error::InvalidParam(format!("h = {h} must be positive")));
    }
    let mut pot = GrowPot(w);
    let mut epochs = vec![0i64];
    let mut heights: Vec<f64> = Vec::new();
    loop {
        let e = *epochs.last().unwrap();
        let ve = pot.at(e)?.expect("epoch site present");
        let mut hmax = ve;
        let mut t = e + 1;
        let e_next = loop {
            let v = pot.at(t)?.expect("growing scans never run out of data");
            if v > hmax {
                hmax = v;
            }
            if v <= ve {
                break t;
            }
            t += 1;
        };
        epochs.push(e_next);
        heights.push(hmax - ve);
        if hmax - ve >= h {
            let l_index = heights.len() - 1;
            return Ok(LadderEpochs { epochs, heights, l_index, m1_star: e });
        }
    }
}
