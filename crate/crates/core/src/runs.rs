//! Longest runs of failures in a row of independently failing sensors, and
//! the exact expected cost of the equispaced placement that they determine.

use serde::{Deserialize, Serialize};

use crate::numeric::powers;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Absolute error budget for truncated tail sums.
const TAIL_TOLERANCE: f64 = 1e-17;

/// Constants of the asymptotic expansion of the expected longest run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunLawParams {
    pub n: usize,
    pub p: f64,
    pub gamma: f64,
    pub theta: f64,
    /// Bound on the amplitude of the periodic fluctuation term.
    pub r_bound: f64,
}

impl RunLawParams {
    pub fn new(n: usize, p: f64) -> Self {
        let theta = std::f64::consts::PI.powi(2) / (1.0 / p).ln();
        let e = (-theta).exp();
        let r_bound = theta.sqrt() * e / (2.0 * std::f64::consts::PI * (1.0 - e).powi(2));
        Self {
            n,
            p,
            gamma: EULER_GAMMA,
            theta,
            r_bound,
        }
    }
}

/// Pr(R_n < ell) where R_n is the longest run of failures among n sensors.
///
/// Tracks the probability mass of failure strings whose runs are all shorter
/// than `ell`; `new_active[i]` is the mass of those ending in an active
/// sensor, kept in a ring buffer of length `ell`.
pub fn longest_run_cdf(n: usize, p: f64, ell: usize) -> f64 {
    if ell == 0 {
        return 0.0;
    }
    if ell > n {
        return 1.0;
    }
    let q = 1.0 - p;
    let p_ell = p.powi(ell as i32);
    let mut ring = vec![0.0; ell];
    ring[0] = 1.0;
    let mut total = 1.0;
    for i in 1..=n {
        let active = q * total;
        // mass that had ell-1 trailing failures and fails again
        let expired = if i >= ell { p_ell * ring[i % ell] } else { 0.0 };
        total = (active + p * total - expired).max(0.0);
        ring[i % ell] = active;
    }
    total.min(1.0)
}

/// E[R_n], summing survival probabilities until the union bound
/// n p^ell / (1 - p) on the remaining tail is negligible.
pub fn expected_longest_run(n: usize, p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return n as f64;
    }
    let mut total = 0.0;
    let mut p_ell = 1.0;
    for ell in 1..=n {
        p_ell *= p;
        total += 1.0 - longest_run_cdf(n, p, ell);
        if n as f64 * p_ell / (1.0 - p) < TAIL_TOLERANCE {
            break;
        }
    }
    total
}

/// Leading terms of the asymptotic expansion of E[R_n], without the periodic
/// fluctuation and the vanishing remainder.
pub fn longest_run_main_terms(n: usize, p: f64) -> f64 {
    let inv_log = 1.0 / (1.0 / p).ln();
    (n as f64).ln() * inv_log + (1.0 - p).ln() * inv_log + EULER_GAMMA * inv_log - 0.5
}

/// Exact E[C(x^eq)] under independent failures.
///
/// For a non-empty active set the cost of the equispaced placement is a
/// multiple u / (2n): interior runs of r failures cost (r + 1) / (2n) and a
/// border run of length L costs (2L + 1) / (2n). The cumulative law
/// G(u) = Pr(A non-empty, C0 <= u / (2n)) comes from a three-phase scan
/// (initial run, interior, final run), and the expectation is the sum of
/// survival probabilities over the grid. Thresholds beyond the point where
/// the union bound on the remaining mass drops below 1e-17 only carry the
/// empty-set atom, which is added in closed form.
pub fn expected_cost_equispaced(n: usize, p: f64) -> f64 {
    assert!(n >= 1, "need at least one sensor");
    if p >= 1.0 {
        return 1.0;
    }
    let q = 1.0 - p;
    let pw = powers(p, n);
    let empty = pw[n];
    let step = 1.0 / (2 * n) as f64;
    let mut h = vec![0.0; n];
    // u = 0 contributes a full step: no non-empty set costs 0
    let mut total = step;
    for u in 1..2 * n {
        let interior_cap = u - 1;
        let border_cap = (u - 1) / 2;
        let mut window = 0.0;
        let mut lo = 0;
        let mut g = 0.0;
        for i in 0..n {
            while lo + interior_cap + 1 < i {
                window -= h[lo] * pw[i - 1 - lo];
                lo += 1;
            }
            window = window.max(0.0);
            let border = if i <= border_cap { pw[i] } else { 0.0 };
            h[i] = q * (border + window);
            window = p * window + h[i];
            if n - 1 - i <= border_cap {
                g += h[i] * pw[n - 1 - i];
            }
        }
        total += step * (1.0 - g);
        let tail = step / q * (n as f64 * p.powi(u as i32 + 1) + 4.0 * p.powi(u as i32 / 2 + 1));
        if tail < TAIL_TOLERANCE {
            // remaining thresholds u+1 .. 2n-1 only see the empty set
            total += step * (2 * n - 1 - u) as f64 * empty;
            break;
        }
    }
    total
}

/// Mean of the initial failure run: a geometric variable truncated at n.
pub fn truncated_geometric_mean(n: usize, p: f64) -> f64 {
    let q = 1.0 - p;
    let mut total = 0.0;
    let mut pk = 1.0;
    for k in 0..n {
        total += k as f64 * pk * q;
        pk *= p;
    }
    total + n as f64 * pk
}
