//! Environment laws and seeded potential windows.
//!
//! An environment is an i.i.d. family `omega_x` in `(0, 1)`; the walk steps
//! right from `x` with probability `omega_x`. The potential is the two-sided
//! partial-sum process of `log rho_x = log((1 - omega_x)/omega_x)`:
//!
//! ```text
//! V(0) = 0,   V(x) = V(x-1) + log rho_x  (x >= 1),
//!             V(x) = V(x+1) - log rho_{x+1}  (x <= -1).
//! ```
//!
//! Both shipped laws satisfy `E[log rho] = 0` identically in their parameter,
//! so the walk is recurrent by construction and no numerical root-finding is
//! involved anywhere.

use crate::rng::{site_u64, u64_to_f64};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Default cap on how far a window may grow in either direction when an
/// operation auto-extends it.
pub const DEFAULT_EXTENSION_BUDGET: i64 = 10_000_000;

/// Lattice structure of the law of `log rho_0`, which decides how value ties
/// in the potential must be treated downstream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Lattice {
    /// Increment distribution has a density; exact ties have probability 0.
    NonLattice,
    /// Increments live on `shift + span * Z`; ties are exact and meaningful.
    Lattice { span: f64, shift: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LawKind {
    TwoPoint,
    LogisticUniform,
}

/// An admissible environment law with its derived constants.
///
/// * `sigma`: standard deviation of `log rho_0` (strictly positive).
/// * `epsilon0`: ellipticity floor, `omega_x` is always in
///   `[epsilon0, 1 - epsilon0]` with `epsilon0` in `(0, 1/2)`.
/// * `c0 = log((1 - epsilon0)/epsilon0)`: the largest possible potential
///   increment in absolute value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvLaw {
    pub kind: LawKind,
    pub param: f64,
    pub sigma: f64,
    pub epsilon0: f64,
    pub lattice: Lattice,
    pub c0: f64,
    /// Two-point only: the positive increment value, stored once so every
    /// realized increment is bit-identical to `+step` or `-step`.
    step: f64,
}

/// Build a law, computing `sigma`, `epsilon0` and the lattice descriptor in
/// closed form.
///
/// * `two-point(p)`: `omega` is `p` or `1 - p` with probability 1/2 each;
///   requires `p` in `(0, 1/2) U (1/2, 1)` (at `p = 1/2` the potential would
///   be identically zero).
/// * `logistic-uniform(c)`: `log rho` is uniform on `[-c, c]` and
///   `omega = 1/(1 + e^{log rho})`; requires `c > 0`.
pub fn make_env_law(kind: LawKind, param: f64) -> Result<EnvLaw> {
    match kind {
        LawKind::TwoPoint => {
            let p = param;
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidLaw(format!(
                    "two-point parameter p = {p} outside (0, 1)"
                )));
            }
            if p == 0.5 {
                return Err(Error::InvalidLaw(
                    "two-point p = 1/2 has sigma = 0 (degenerate simple random walk)".into(),
                ));
            }
            let eps = p.min(1.0 - p);
            // log rho takes the values +/- step equiprobably.
            let step = ((1.0 - eps) / eps).ln();
            Ok(EnvLaw {
                kind,
                param,
                sigma: step,
                epsilon0: eps,
                lattice: Lattice::Lattice { span: 2.0 * step, shift: step },
                c0: step,
                step,
            })
        }
        LawKind::LogisticUniform => {
            let c = param;
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::InvalidLaw(format!(
                    "logistic-uniform half-width c = {c} must be positive"
                )));
            }
            let eps = 1.0 / (1.0 + c.exp());
            Ok(EnvLaw {
                kind,
                param,
                sigma: c / 3f64.sqrt(),
                epsilon0: eps,
                lattice: Lattice::NonLattice,
                c0: c,
                step: 0.0,
            })
        }
    }
}

impl EnvLaw {
    /// `(omega_x, log rho_x)` as a pure function of `(master_seed, x)`.
    ///
    /// The pair is generated together so that `log rho` is exact for the
    /// lattice law (literally `+step` or `-step`) instead of being recomputed
    /// through `ln` per site.
    #[inline]
    pub fn site(&self, master_seed: u64, x: i64) -> (f64, f64) {
        let z = site_u64(master_seed, x);
        match self.kind {
            LawKind::TwoPoint => {
                let eps = self.epsilon0;
                if z >> 63 == 0 {
                    // omega small => walk drifts left here => log rho positive.
                    (eps, self.step)
                } else {
                    (1.0 - eps, -self.step)
                }
            }
            LawKind::LogisticUniform => {
                let u = u64_to_f64(z);
                let log_rho = (2.0 * u - 1.0) * self.param;
                (1.0 / (1.0 + log_rho.exp()), log_rho)
            }
        }
    }

    #[inline]
    pub fn omega_at(&self, master_seed: u64, x: i64) -> f64 {
        self.site(master_seed, x).0
    }

    /// Advance a running potential value by one increment.
    ///
    /// For the lattice law the sum is requantized to `fl(k * step)` with `k`
    /// the integer lattice level, so any two sites at equal level carry
    /// bit-identical `V` and lattice ties (revisits of the same level,
    /// equal-value minima) compare exactly instead of drifting apart by
    /// accumulated rounding. Non-lattice laws use the plain sum, where exact
    /// ties have probability zero anyway.
    #[inline]
    pub fn advance(&self, v: f64, inc: f64) -> f64 {
        match self.kind {
            LawKind::TwoPoint => ((v / self.step).round() + inc.signum()) * self.step,
            LawKind::LogisticUniform => v + inc,
        }
    }
}

/// A materialized realization of `(omega_x, V(x))` on `[lo, hi]`.
///
/// Windows are plain values: cloning is deep, sharing across threads is safe,
/// and the only mutation ever exposed grows the range. Because sites are
/// keyed by `(master_seed, x)`, any two windows with the same seed agree
/// bit-for-bit wherever they overlap.
#[derive(Debug, Clone)]
pub struct PotentialWindow {
    law: EnvLaw,
    master_seed: u64,
    lo: i64,
    hi: i64,
    budget: i64,
    /// omega[i] is omega_{lo + i}, for lo <= x <= hi.
    omega: Vec<f64>,
    /// v[i] is V(lo + i), for lo <= x <= hi.
    v: Vec<f64>,
}

impl PotentialWindow {
    /// Sample a fresh window on `[lo, hi]` (must straddle 0) with the default
    /// extension budget.
    pub fn sample(law: EnvLaw, master_seed: u64, lo: i64, hi: i64) -> Result<Self> {
        Self::sample_with_budget(law, master_seed, lo, hi, DEFAULT_EXTENSION_BUDGET)
    }

    pub fn sample_with_budget(
        law: EnvLaw,
        master_seed: u64,
        lo: i64,
        hi: i64,
        budget: i64,
    ) -> Result<Self> {
        if lo > 0 || hi < 0 {
            return Err(Error::Range(format!("window [{lo}, {hi}] must contain 0")));
        }
        let mut w = PotentialWindow {
            law,
            master_seed,
            lo: 0,
            hi: 0,
            budget,
            omega: vec![law.omega_at(master_seed, 0)],
            v: vec![0.0],
        };
        w.ensure(lo, hi)?;
        Ok(w)
    }

    pub fn law(&self) -> &EnvLaw {
        &self.law
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn budget(&self) -> i64 {
        self.budget
    }

    /// Number of materialized sites.
    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false // a window always contains site 0
    }

    #[inline]
    pub fn contains(&self, x: i64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// `omega_x`; panics if `x` is outside the materialized range.
    #[inline]
    pub fn omega(&self, x: i64) -> f64 {
        debug_assert!(self.contains(x), "omega({x}) outside [{}, {}]", self.lo, self.hi);
        self.omega[(x - self.lo) as usize]
    }

    /// `V(x)`; panics if `x` is outside the materialized range.
    #[inline]
    pub fn v(&self, x: i64) -> f64 {
        debug_assert!(self.contains(x), "V({x}) outside [{}, {}]", self.lo, self.hi);
        self.v[(x - self.lo) as usize]
    }

    /// Direct slice access for hot loops: `(values, lo)` with
    /// `values[i] = V(lo + i)`.
    pub fn v_slice(&self) -> (&[f64], i64) {
        (&self.v, self.lo)
    }

    pub fn omega_slice(&self) -> (&[f64], i64) {
        (&self.omega, self.lo)
    }

    /// Grow the window in place until it covers `[lo, hi]`. Values at already
    /// materialized sites are untouched; new ones continue the partial sums
    /// from the boundary, so the result is identical to sampling the larger
    /// window directly.
    pub fn ensure(&mut self, lo: i64, hi: i64) -> Result<()> {
        if lo < -self.budget {
            return Err(Error::ExtensionBudgetExceeded { site: lo, budget: self.budget });
        }
        if hi > self.budget {
            return Err(Error::ExtensionBudgetExceeded { site: hi, budget: self.budget });
        }
        if hi > self.hi {
            let extra = (hi - self.hi) as usize;
            self.omega.reserve(extra);
            self.v.reserve(extra);
            let mut acc = *self.v.last().unwrap();
            for x in (self.hi + 1)..=hi {
                let (om, inc) = self.law.site(self.master_seed, x);
                acc = self.law.advance(acc, inc);
                self.omega.push(om);
                self.v.push(acc);
            }
            self.hi = hi;
        }
        if lo < self.lo {
            let extra = (self.lo - lo) as usize;
            // Prepend by building the new head in leftward order, then splice.
            let mut head_omega = Vec::with_capacity(extra);
            let mut head_v = Vec::with_capacity(extra);
            let mut acc = self.v[0];
            for x in (lo..self.lo).rev() {
                // V(x) = V(x+1) - log rho_{x+1}; the increment at x+1 was
                // already used when the right neighbor got its value only if
                // x+1 > lo of that pass, so recompute from the site key.
                let (_, inc_right) = self.law.site(self.master_seed, x + 1);
                acc = self.law.advance(acc, -inc_right);
                let (om, _) = self.law.site(self.master_seed, x);
                head_omega.push(om);
                head_v.push(acc);
            }
            head_omega.reverse();
            head_v.reverse();
            head_omega.extend_from_slice(&self.omega);
            head_v.extend_from_slice(&self.v);
            self.omega = head_omega;
            self.v = head_v;
            self.lo = lo;
        }
        Ok(())
    }

    /// Grow the window (amortized doubling) until `x` is materialized. Used by
    /// scans that walk outward site by site.
    pub(crate) fn ensure_site(&mut self, x: i64) -> Result<()> {
        if self.contains(x) {
            return Ok(());
        }
        if x > self.budget || x < -self.budget {
            return Err(Error::ExtensionBudgetExceeded { site: x, budget: self.budget });
        }
        let span = (self.hi - self.lo).max(64);
        if x > self.hi {
            self.ensure(self.lo, x.saturating_add(span).min(self.budget))
        } else {
            self.ensure(x.saturating_sub(span).max(-self.budget), self.hi)
        }
    }

    /// Value-style extension: a new window covering at least `[new_lo, new_hi]`
    /// that agrees with `self` everywhere it was already materialized.
    pub fn extend_window(&self, new_lo: i64, new_hi: i64) -> Result<Self> {
        if new_lo > self.lo || new_hi < self.hi {
            return Err(Error::Range(format!(
                "extend_window [{new_lo}, {new_hi}] must contain the current range [{}, {}]",
                self.lo, self.hi
            )));
        }
        let mut out = self.clone();
        out.ensure(new_lo, new_hi)?;
        Ok(out)
    }

    /// Copy of the window restricted to `[lo, hi]` (both inside the current
    /// range, straddling 0). Mostly useful in tests for round-trip checks.
    pub fn restrict(&self, lo: i64, hi: i64) -> Result<Self> {
        if lo < self.lo || hi > self.hi || lo > 0 || hi < 0 {
            return Err(Error::Range(format!(
                "restrict [{lo}, {hi}] invalid for window [{}, {}]",
                self.lo, self.hi
            )));
        }
        let a = (lo - self.lo) as usize;
        let b = (hi - self.lo) as usize;
        Ok(PotentialWindow {
            law: self.law,
            master_seed: self.master_seed,
            lo,
            hi,
            budget: self.budget,
            omega: self.omega[a..=b].to_vec(),
            v: self.v[a..=b].to_vec(),
        })
    }
}

/// Windows with injected (non-generated) potentials, used by tests and by the
/// documented pathological examples. Walk probabilities are derived from the
/// increments, so quenched formulas remain consistent with the potential.
pub fn injected_window(values: &[(i64, f64)]) -> Result<PotentialWindow> {
    if values.is_empty() {
        return Err(Error::Range("injected window needs at least one site".into()));
    }
    let lo = values[0].0;
    let hi = values[values.len() - 1].0;
    for (i, pair) in values.iter().enumerate() {
        if pair.0 != lo + i as i64 {
            return Err(Error::Range("injected sites must be consecutive".into()));
        }
    }
    if lo > 0 || hi < 0 {
        return Err(Error::Range("injected window must contain 0".into()));
    }
    let v0 = values[(0 - lo) as usize].1;
    let v: Vec<f64> = values.iter().map(|&(_, val)| val - v0).collect();
    // omega_x from the increment into x: V(x) - V(x-1) = log((1-omega_x)/omega_x).
    let mut omega = Vec::with_capacity(v.len());
    for i in 0..v.len() {
        if i == 0 {
            omega.push(0.5);
        } else {
            let inc = v[i] - v[i - 1];
            omega.push(1.0 / (1.0 + inc.exp()));
        }
    }
    Ok(PotentialWindow {
        law: make_env_law(LawKind::LogisticUniform, 1.0)?,
        master_seed: 0,
        lo,
        hi,
        budget: hi.max(-lo),
        omega,
        v,
    })
}
