//! Slow reference implementations used to cross-check the fast paths.
//!
//! These deliberately take a different route to the same quantity: the
//! hitting probability is solved as a boundary-value linear system (never
//! touching `exp(V)`), and small-n walk laws are enumerated path by path.
//! Tests and the acceptance suite compare against them at tight tolerances.
//!
//! The linear solves run in double-double arithmetic. The tridiagonal system
//! for hitting probabilities has condition number of order `exp(range of V)`,
//! so a plain f64 elimination loses up to ~1e-9 on unlucky windows; with
//! ~106-bit arithmetic the solve stays far below the 1e-10 comparison
//! tolerance for any window this crate samples.

use crate::envgen::PotentialWindow;
use std::collections::HashMap;

/// Double-double value: the unevaluated sum `hi + lo` with `|lo|` below half
/// an ulp of `hi`. Classic error-free transforms (Dekker, Knuth, Bailey).
#[derive(Debug, Clone, Copy)]
struct DD {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Renormalize assuming `|s| >= |e|` up to rounding.
fn quick(s: f64, e: f64) -> DD {
    let hi = s + e;
    DD { hi, lo: e - (hi - s) }
}

impl DD {
    fn new(a: f64) -> DD {
        DD { hi: a, lo: 0.0 }
    }

    fn neg(self) -> DD {
        DD { hi: -self.hi, lo: -self.lo }
    }

    fn add(self, b: DD) -> DD {
        let (s, e) = two_sum(self.hi, b.hi);
        quick(s, e + self.lo + b.lo)
    }

    fn sub(self, b: DD) -> DD {
        self.add(b.neg())
    }

    fn mul(self, b: DD) -> DD {
        let p = self.hi * b.hi;
        // mul_add guarantees a single rounding, so this is the exact low
        // part of the product of the high words.
        let e = self.hi.mul_add(b.hi, -p);
        quick(p, e + (self.hi * b.lo + self.lo * b.hi))
    }

    fn div(self, b: DD) -> DD {
        let q1 = self.hi / b.hi;
        let r = self.sub(b.mul(DD::new(q1)));
        let q2 = (r.hi + r.lo) / (b.hi + b.lo);
        quick(q1, q2)
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Solve the boundary-value problem
/// `P(a) = 0, P(c) = 1, P(x) = ω_x P(x+1) + (1-ω_x) P(x-1)`
/// by tridiagonal elimination in double-double arithmetic and return `P(b)`,
/// which equals `P_ω^b[τ(c) < τ(a)]`.
pub fn harmonic_hit_prob(w: &PotentialWindow, a: i64, b: i64, c: i64) -> f64 {
    assert!(a < b && b < c, "need a < b < c");
    assert!(w.contains(a) && w.contains(c), "sites outside window");
    let m = (c - a - 1) as usize;
    let one = DD::new(1.0);
    let mut diag = vec![one; m];
    let sup: Vec<DD> = (a + 1..c).map(|x| DD::new(w.omega(x)).neg()).collect();
    let mut rhs = vec![DD::new(0.0); m];
    rhs[m - 1] = DD::new(w.omega(c - 1));
    for i in 1..m {
        let x = a + 1 + i as i64;
        // 1 - ω is kept exactly as a double-double, not rounded to f64.
        let sub = one.sub(DD::new(w.omega(x))).neg();
        let f = sub.div(diag[i - 1]);
        diag[i] = diag[i].sub(f.mul(sup[i - 1]));
        rhs[i] = rhs[i].sub(f.mul(rhs[i - 1]));
    }
    let mut sol = vec![DD::new(0.0); m];
    sol[m - 1] = rhs[m - 1].div(diag[m - 1]);
    for i in (0..m - 1).rev() {
        sol[i] = rhs[i].sub(sup[i].mul(sol[i + 1])).div(diag[i]);
    }
    sol[(b - a - 1) as usize].to_f64()
}

/// Solve `E(a) = E(c) = 0, E(x) = 1 + ω_x E(x+1) + (1-ω_x) E(x-1)` and
/// return `E(b)`, the expected time to exit `(a, c)` from `b`.
pub fn expected_exit_time(w: &PotentialWindow, a: i64, b: i64, c: i64) -> f64 {
    assert!(a < b && b < c, "need a < b < c");
    assert!(w.contains(a) && w.contains(c), "sites outside window");
    let m = (c - a - 1) as usize;
    let one = DD::new(1.0);
    let mut diag = vec![one; m];
    let sup: Vec<DD> = (a + 1..c).map(|x| DD::new(w.omega(x)).neg()).collect();
    let mut rhs = vec![one; m];
    for i in 1..m {
        let x = a + 1 + i as i64;
        let sub = one.sub(DD::new(w.omega(x))).neg();
        let f = sub.div(diag[i - 1]);
        diag[i] = diag[i].sub(f.mul(sup[i - 1]));
        rhs[i] = rhs[i].sub(f.mul(rhs[i - 1]));
    }
    let mut sol = vec![DD::new(0.0); m];
    sol[m - 1] = rhs[m - 1].div(diag[m - 1]);
    for i in (0..m - 1).rev() {
        sol[i] = rhs[i].sub(sup[i].mul(sol[i + 1])).div(diag[i]);
    }
    sol[(b - a - 1) as usize].to_f64()
}

/// The exact law of `S_n` from `start`, by summing the probability of every
/// one of the `2^n` step sequences. Only sensible for small n.
pub fn exhaustive_walk_law(w: &PotentialWindow, start: i64, n: u32) -> HashMap<i64, f64> {
    assert!(n <= 20, "path enumeration is 2^n");
    let mut law: HashMap<i64, f64> = HashMap::new();
    for mask in 0u32..(1u32 << n) {
        let mut pos = start;
        let mut wgt = 1.0f64;
        for bit in 0..n {
            if mask >> bit & 1 == 1 {
                wgt *= w.omega(pos);
                pos += 1;
            } else {
                wgt *= 1.0 - w.omega(pos);
                pos -= 1;
            }
        }
        *law.entry(pos).or_insert(0.0) += wgt;
    }
    law
}
