//! Exact computations under a fixed environment: hitting probabilities,
//! reversible and reflected invariant measures, and the exact law of the walk
//! by forward dynamic programming.
//!
//! Everything here is deterministic in the window. Exponential sums are
//! max-shifted before accumulation because potentials reach hundreds and
//! `exp` would overflow; ratios of shifted sums are unchanged.

use crate::envgen::PotentialWindow;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io;

/// Parity class of a site or a time index, using the Euclidean remainder so
/// negative sites classify correctly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(k: i64) -> Parity {
        if k.rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn matches(self, x: i64) -> bool {
        Parity::of(x) == self
    }

    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

/// A nonnegative measure on an arithmetic grid of sites, stored as weights
/// relative to `exp(log_scale)` so huge potentials stay in range.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteMeasure {
    lo: i64,
    step: i64,
    weights: Vec<f64>,
    /// The stored weights are the true measure times `exp(-log_scale)`.
    pub log_scale: f64,
}

impl SiteMeasure {
    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.step * (self.weights.len() as i64 - 1)
    }

    pub fn step(&self) -> i64 {
        self.step
    }

    /// Weight at `x`; sites of the wrong residue carry zero. Panics outside
    /// the covered range.
    pub fn at(&self, x: i64) -> f64 {
        assert!(
            x >= self.lo && x <= self.hi(),
            "site {x} outside measure range [{}, {}]",
            self.lo,
            self.hi()
        );
        let d = x - self.lo;
        if d % self.step != 0 {
            return 0.0;
        }
        self.weights[(d / self.step) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.weights.iter().enumerate().map(move |(i, &w)| (self.lo + self.step * i as i64, w))
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// `P_ω^b[τ(c) < τ(a)]`: from `b`, hit `c` before `a`. The closed form is a
/// ratio of partial sums of `e^{V(j)}`, evaluated with the max of `V` over
/// `[a, c-1]` shifted out.
pub fn hit_prob(w: &PotentialWindow, a: i64, b: i64, c: i64) -> Result<f64> {
    if !(a < b && b < c) {
        return Err(Error::Range(format!("hit_prob needs a < b < c, got {a}, {b}, {c}")));
    }
    if !w.contains(a) || !w.contains(c) {
        return Err(Error::Range(format!(
            "[{a}, {c}] not inside window [{}, {}]",
            w.lo(),
            w.hi()
        )));
    }
    let m = (a..c).map(|j| w.v(j)).fold(f64::NEG_INFINITY, f64::max);
    let mut num = 0.0;
    let mut den = 0.0;
    for j in a..c {
        let t = (w.v(j) - m).exp();
        if j < b {
            num += t;
        }
        den += t;
    }
    Ok(num / den)
}

/// The reversible measure `μ_ω(x) = e^{-V(x)} + e^{-V(x-1)}` on
/// `[lo, hi]`, returned max-shifted (see [`SiteMeasure::log_scale`]).
pub fn reversible_measure(w: &PotentialWindow, lo: i64, hi: i64) -> Result<SiteMeasure> {
    if lo > hi {
        return Err(Error::Range(format!("empty range [{lo}, {hi}]")));
    }
    if !w.contains(lo - 1) || !w.contains(hi) {
        return Err(Error::Range(format!(
            "range [{lo}, {hi}] needs sites [{}, {hi}] inside window [{}, {}]",
            lo - 1,
            w.lo(),
            w.hi()
        )));
    }
    let m = (lo - 1..=hi).map(|x| -w.v(x)).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> =
        (lo..=hi).map(|x| (-w.v(x) - m).exp() + (-w.v(x - 1) - m).exp()).collect();
    Ok(SiteMeasure { lo, step: 1, weights, log_scale: m })
}

/// Invariant probability measure of the two-step reflected chain on
/// `[M⁻, M⁺]`, restricted to the parity class of the horizon.
///
/// The reflected chain uses `ω̂_{M⁻} = 1` and `ω̂_{M⁺} = 0`; its reversible
/// measure has boundary weights `e^{-V(M⁻)}` and `e^{-V(M⁺-1)}` and interior
/// weights `e^{-V(x)} + e^{-V(x-1)}`, and each parity class carries total
/// mass `Σ_{i=M⁻}^{M⁺-1} e^{-V(i)}`.
pub fn reflected_invariant(
    w: &PotentialWindow,
    n_parity: Parity,
    m_minus: i64,
    m_plus: i64,
) -> Result<SiteMeasure> {
    if m_minus >= m_plus {
        return Err(Error::Range(format!("need M- < M+, got {m_minus}, {m_plus}")));
    }
    if !w.contains(m_minus) || !w.contains(m_plus) {
        return Err(Error::Range(format!(
            "[{m_minus}, {m_plus}] not inside window [{}, {}]",
            w.lo(),
            w.hi()
        )));
    }
    let m = (m_minus..m_plus).map(|x| -w.v(x)).fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = (m_minus..m_plus).map(|x| (-w.v(x) - m).exp()).sum();
    let mu_hat = |x: i64| -> f64 {
        if x == m_minus {
            (-w.v(m_minus) - m).exp()
        } else if x == m_plus {
            (-w.v(m_plus - 1) - m).exp()
        } else {
            (-w.v(x) - m).exp() + (-w.v(x - 1) - m).exp()
        }
    };
    let lo = if n_parity.matches(m_minus) { m_minus } else { m_minus + 1 };
    let weights: Vec<f64> = (lo..=m_plus).step_by(2).map(|x| mu_hat(x) / z).collect();
    Ok(SiteMeasure { lo, step: 2, weights, log_scale: 0.0 })
}

/// Boundary handling for [`quenched_dp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Track the whole reachable range `[start - n, start + n]`; the window
    /// is extended as needed.
    Full,
    /// Absorb at `a` and `c`; absorbed mass is reported as
    /// `truncation_loss`, which brackets the error against the full law:
    /// `|P_full(z) - P_absorbing(z)| <= truncation_loss` for every site.
    Absorbing { a: i64, c: i64 },
}

/// The exact law of `S_n` under `P_ω^{start}`, supported on one parity class.
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchedDist {
    pub n: u64,
    pub start: i64,
    lo: i64,
    probs: Vec<f64>,
    pub truncation_loss: f64,
}

impl QuenchedDist {
    /// Probability of `S_n = z`; zero off the support or the parity class.
    pub fn mass(&self, z: i64) -> f64 {
        let d = z - self.lo;
        if z < self.lo || z > self.support_hi() || d.rem_euclid(2) != 0 {
            return 0.0;
        }
        self.probs[(d / 2) as usize]
    }

    pub fn support_lo(&self) -> i64 {
        self.lo
    }

    pub fn support_hi(&self) -> i64 {
        self.lo + 2 * (self.probs.len() as i64 - 1)
    }

    pub fn support(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs.iter().enumerate().map(move |(i, &p)| (self.lo + 2 * i as i64, p))
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    fn covers(&self, z: i64) -> bool {
        z >= self.lo && z <= self.support_hi() && (z - self.lo).rem_euclid(2) == 0
    }

    /// Total variation distance to another distribution on the integers.
    pub fn tv_distance(&self, other: &QuenchedDist) -> f64 {
        let mut s = 0.0;
        for (z, p) in self.support() {
            s += (p - if other.covers(z) { other.mass(z) } else { 0.0 }).abs();
        }
        for (z, q) in other.support() {
            if !self.covers(z) {
                s += q;
            }
        }
        0.5 * s
    }

    /// Total variation distance to an empirical law given as counts.
    pub fn tv_against_counts(&self, counts: &HashMap<i64, u64>, total: u64) -> f64 {
        let t = total as f64;
        let mut s = 0.0;
        for (z, p) in self.support() {
            let f = counts.get(&z).copied().unwrap_or(0) as f64 / t;
            s += (p - f).abs();
        }
        for (&z, &c) in counts {
            if !self.covers(z) {
                s += c as f64 / t;
            }
        }
        0.5 * s
    }

    /// CSV dump: a comment line naming n, start and the truncation loss,
    /// then `site,probability` rows.
    pub fn write_csv<W: io::Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "# n={} start={} truncation_loss={}",
            self.n, self.start, self.truncation_loss
        )?;
        writeln!(out, "site,probability")?;
        for (z, p) in self.support() {
            writeln!(out, "{z},{p}")?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

/// Exact forward recursion for the law of `S_n` on the parity lattice.
///
/// Cost is O(n · width / 2); the buffers are padded with one zero cell per
/// side so the inner loop has no edge branches.
pub fn quenched_dp(
    w: &mut PotentialWindow,
    start: i64,
    n: u64,
    boundary: Boundary,
) -> Result<QuenchedDist> {
    let n_i = n as i64;
    let (lo, hi, absorbing) = match boundary {
        Boundary::Full => {
            w.ensure((start - n_i).min(w.lo()), (start + n_i).max(w.hi()))?;
            (start - n_i, start + n_i, false)
        }
        Boundary::Absorbing { a, c } => {
            if !(a < start && start < c) {
                return Err(Error::Range(format!("need a < start < c, got {a}, {start}, {c}")));
            }
            if !w.contains(a) || !w.contains(c) {
                return Err(Error::Range(format!(
                    "absorbing span [{a}, {c}] not inside window [{}, {}]",
                    w.lo(),
                    w.hi()
                )));
            }
            (a, c, true)
        }
    };
    if n == 0 {
        return Ok(QuenchedDist { n, start, lo: start, probs: vec![1.0], truncation_loss: 0.0 });
    }
    let width = (hi - lo + 1) as usize;
    // Padded index i corresponds to site lo + i - 1; i = 0 and width + 1 are
    // permanent zeros.
    let mut om = vec![0.0f64; width + 2];
    let mut qm = vec![0.0f64; width + 2];
    for i in 1..=width {
        let o = w.omega(lo + i as i64 - 1);
        om[i] = o;
        qm[i] = 1.0 - o;
    }
    let mut cur = vec![0.0f64; width + 2];
    let mut nxt = vec![0.0f64; width + 2];
    let start_i = (start - lo + 1) as usize;
    cur[start_i] = 1.0;
    // Mass may only sit on these padded indices (interior for absorbing).
    let (int_lo, int_hi) = if absorbing { (2, width - 1) } else { (1, width) };
    let (mut occ_lo, mut occ_hi) = (start_i, start_i);
    let mut loss = 0.0f64;
    for _ in 0..n {
        if absorbing {
            loss += cur[2] * qm[2] + cur[width - 1] * om[width - 1];
        }
        let target_par = (occ_lo + 1) % 2;
        let base = (occ_lo - 1).max(int_lo);
        let new_lo = if base % 2 == target_par { base } else { base + 1 };
        let top = (occ_hi + 1).min(int_hi);
        let new_hi = if top % 2 == target_par { top } else { top - 1 };
        let mut i = new_lo;
        while i <= new_hi {
            nxt[i] = cur[i - 1] * om[i - 1] + cur[i + 1] * qm[i + 1];
            i += 2;
        }
        std::mem::swap(&mut cur, &mut nxt);
        occ_lo = new_lo;
        occ_hi = new_hi;
    }
    let probs: Vec<f64> = (occ_lo..=occ_hi).step_by(2).map(|i| cur[i]).collect();
    Ok(QuenchedDist {
        n,
        start,
        lo: lo + occ_lo as i64 - 1,
        probs,
        truncation_loss: loss,
    })
}
