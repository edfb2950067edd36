//! Coverage cost of a fixed active set and its expectation over failures.
//!
//! Two evaluators of the expectation are provided: brute-force enumeration
//! of all 2^n active sets, and a polynomial-time dynamic program over the
//! cumulative distribution `F(v) = Pr(C0 <= v)` evaluated at every value the
//! cost can take.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FailureModel, Geometry, Placement};
use crate::numeric::{binomial, powers, CompensatedSum};

/// Largest n accepted by [`expected_cost_enumeration`].
pub const MAX_ENUMERATION_N: usize = 25;
/// Largest n accepted by [`expected_subgradient`].
pub const MAX_SUBGRADIENT_N: usize = 20;

#[inline]
pub(crate) fn half_gap(left: f64, right: f64) -> f64 {
    0.5 * (right - left)
}

#[inline]
pub(crate) fn wrap_term(first: f64, last: f64) -> f64 {
    0.5 * (1.0 - last + first)
}

/// Worst-case distance to the nearest active sensor on the interval.
///
/// `active` must be sorted. An empty active set costs 1.
pub fn c0_line(active: &[f64]) -> f64 {
    let (Some(&first), Some(&last)) = (active.first(), active.last()) else {
        return 1.0;
    };
    let interior = active
        .windows(2)
        .map(|w| half_gap(w[0], w[1]))
        .fold(0.0, f64::max);
    first.max(1.0 - last).max(interior)
}

/// Worst-case distance on the circle of circumference one.
///
/// `active` must be sorted. An empty active set costs 1, like on the interval.
pub fn c0_circle(active: &[f64]) -> f64 {
    let (Some(&first), Some(&last)) = (active.first(), active.last()) else {
        return 1.0;
    };
    active
        .windows(2)
        .map(|w| half_gap(w[0], w[1]))
        .fold(wrap_term(first, last), f64::max)
}

pub fn c0(active: &[f64], geom: Geometry) -> f64 {
    match geom {
        Geometry::Interval => c0_line(active),
        Geometry::Circle => c0_circle(active),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostMethod {
    Enumeration,
    SurvivalDP,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub expected_cost: f64,
    pub empty_set_mass: f64,
    /// Number of distinct cost values at which the distribution was evaluated.
    pub threshold_count: usize,
    pub method: CostMethod,
}

/// Exact expected cost by summing over all 2^n active sets.
pub fn expected_cost_enumeration(
    x: &Placement,
    model: &FailureModel,
    geom: Geometry,
) -> Result<CostReport> {
    let n = x.len();
    if n > MAX_ENUMERATION_N {
        return Err(Error::TooLarge {
            what: "subset enumeration",
            n,
            max: MAX_ENUMERATION_N,
        });
    }
    model.check_size(n)?;
    let by_size: Vec<f64> = (0..=n).map(|m| model.probability_of_size(m, n)).collect();
    let xs = x.positions();
    let mut active = Vec::with_capacity(n);
    let mut total = CompensatedSum::new();
    for mask in 0u32..(1u32 << n) {
        let pr = by_size[mask.count_ones() as usize];
        if pr == 0.0 {
            continue;
        }
        active.clear();
        active.extend((0..n).filter(|i| mask >> i & 1 == 1).map(|i| xs[i]));
        total.add(pr * c0(&active, geom));
    }
    Ok(CostReport {
        expected_cost: total.value(),
        empty_set_mass: by_size[0],
        threshold_count: 0,
        method: CostMethod::Enumeration,
    })
}

/// Every value the cost of a non-empty active set can take, plus 1.
pub fn candidate_thresholds(xs: &[f64], geom: Geometry) -> Vec<f64> {
    let n = xs.len();
    let mut out = Vec::with_capacity(n * (n + 1) + 1);
    out.push(1.0);
    for i in 0..n {
        match geom {
            Geometry::Interval => {
                out.push(xs[i]);
                out.push(1.0 - xs[i]);
            }
            Geometry::Circle => out.push(wrap_term(xs[i], xs[i])),
        }
        for j in i + 1..n {
            out.push(half_gap(xs[i], xs[j]));
            if geom == Geometry::Circle {
                out.push(wrap_term(xs[i], xs[j]));
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Pr(C0 <= v, A non-empty) under independent failures on the interval.
///
/// `f_i` is the probability that sensor i is active, every earlier active
/// sensor is reachable within `v`, and i is the last active sensor seen so
/// far. Predecessors too far to the left of i are also too far from every
/// later sensor, so a sliding window carries the predecessor sum.
fn cdf_independent_interval(xs: &[f64], v: f64, p: f64, pw: &[f64]) -> f64 {
    let n = xs.len();
    let q = 1.0 - p;
    let mut f = vec![0.0; n];
    let mut window = 0.0;
    let mut lo = 0;
    let mut total = 0.0;
    for i in 0..n {
        while lo < i && half_gap(xs[lo], xs[i]) > v {
            window -= f[lo] * pw[i - 1 - lo];
            lo += 1;
        }
        window = window.max(0.0);
        let border = if xs[i] <= v { pw[i] } else { 0.0 };
        f[i] = q * (border + window);
        window = p * window + f[i];
        if 1.0 - xs[i] <= v {
            total += f[i] * pw[n - 1 - i];
        }
    }
    total
}

/// Same event on the circle, conditioning on the first active sensor.
fn cdf_independent_circle(xs: &[f64], v: f64, p: f64, pw: &[f64]) -> f64 {
    let n = xs.len();
    let q = 1.0 - p;
    let mut g = vec![0.0; n];
    let mut total = 0.0;
    for s in 0..n {
        let mut acc = 0.0;
        g[s] = 1.0;
        if wrap_term(xs[s], xs[s]) <= v {
            acc += pw[n - 1 - s];
        }
        let mut window = 1.0;
        let mut lo = s;
        for i in s + 1..n {
            while lo < i && half_gap(xs[lo], xs[i]) > v {
                window -= g[lo] * pw[i - 1 - lo];
                lo += 1;
            }
            window = window.max(0.0);
            g[i] = q * window;
            window = p * window + g[i];
            if wrap_term(xs[s], xs[i]) <= v {
                acc += g[i] * pw[n - 1 - i];
            }
        }
        total += pw[s] * q * acc;
    }
    total
}

/// Number of active sets of size `m` with C0 <= v on the interval.
fn count_interval(xs: &[f64], v: f64, m: usize) -> f64 {
    let n = xs.len();
    let width = m + 1;
    let mut f = vec![0.0; n * width];
    let mut window = vec![0.0; width];
    let mut lo = 0;
    let mut total = 0.0;
    for i in 0..n {
        while lo < i && half_gap(xs[lo], xs[i]) > v {
            for c in 1..=m {
                window[c] -= f[lo * width + c];
            }
            lo += 1;
        }
        let row = i * width;
        if xs[i] <= v {
            f[row + 1] = 1.0;
        }
        f[row + 2..=row + m].copy_from_slice(&window[1..m]);
        for c in 1..=m {
            window[c] += f[row + c];
        }
        if 1.0 - xs[i] <= v {
            total += f[row + m];
        }
    }
    total
}

fn count_circle(xs: &[f64], v: f64, m: usize) -> f64 {
    let n = xs.len();
    let width = m + 1;
    let mut g = vec![0.0; n * width];
    let mut total = 0.0;
    for s in 0..n {
        g[s * width..(s + 1) * width].fill(0.0);
        g[s * width + 1] = 1.0;
        if m == 1 && wrap_term(xs[s], xs[s]) <= v {
            total += 1.0;
        }
        let mut window = vec![0.0; width];
        window[1] = 1.0;
        let mut lo = s;
        for i in s + 1..n {
            while lo < i && half_gap(xs[lo], xs[i]) > v {
                for c in 1..=m {
                    window[c] -= g[lo * width + c];
                }
                lo += 1;
            }
            let row = i * width;
            g[row] = 0.0;
            g[row + 1] = 0.0;
            g[row + 2..=row + m].copy_from_slice(&window[1..m]);
            for c in 1..=m {
                window[c] += g[row + c];
            }
            if wrap_term(xs[s], xs[i]) <= v {
                total += g[row + m];
            }
        }
    }
    total
}

/// Cumulative distribution of the coverage cost.
///
/// Returns `(v, Pr(C0 <= v))` at every candidate value `v`, sorted; the last
/// entry is `v = 1` and includes the empty-set atom.
pub fn cost_distribution(
    x: &Placement,
    model: &FailureModel,
    geom: Geometry,
) -> Result<Vec<(f64, f64)>> {
    let n = x.len();
    model.check_size(n)?;
    let xs = x.positions();
    let thresholds = candidate_thresholds(xs, geom);
    let empty = model.empty_set_mass(n);
    let cdf: Vec<(f64, f64)> = match *model {
        FailureModel::Independent { p } => {
            let pw = powers(p, n);
            thresholds
                .iter()
                .map(|&v| {
                    let f = match geom {
                        Geometry::Interval => cdf_independent_interval(xs, v, p, &pw),
                        Geometry::Circle => cdf_independent_circle(xs, v, p, &pw),
                    };
                    (v, f)
                })
                .collect()
        }
        FailureModel::Cortes { k, .. } => {
            let m = n - k;
            let norm = 1.0 / binomial(n, k);
            thresholds
                .iter()
                .map(|&v| {
                    let count = match geom {
                        Geometry::Interval => count_interval(xs, v, m),
                        Geometry::Circle => count_circle(xs, v, m),
                    };
                    (v, count * norm)
                })
                .collect()
        }
    };
    let mut cdf = cdf;
    if let Some(last) = cdf.last_mut() {
        last.1 += empty;
    }
    Ok(cdf)
}

/// Exact expected cost in polynomial time.
pub fn expected_cost_dp(
    x: &Placement,
    model: &FailureModel,
    geom: Geometry,
) -> Result<CostReport> {
    let cdf = cost_distribution(x, model, geom)?;
    // E[C0] = integral over [0, 1] of Pr(C0 > v); the cdf is a step function
    // that is constant between consecutive candidate values.
    let mut total = CompensatedSum::new();
    let mut prev_v = 0.0;
    let mut prev_f = 0.0;
    for &(v, f) in &cdf {
        total.add((v - prev_v) * (1.0 - prev_f));
        prev_v = v;
        prev_f = f;
    }
    Ok(CostReport {
        expected_cost: total.value(),
        empty_set_mass: model.empty_set_mass(x.len()),
        threshold_count: cdf.len(),
        method: CostMethod::SurvivalDP,
    })
}

/// Expected cost using the cheapest exact evaluator.
pub fn expected_cost(x: &Placement, model: &FailureModel, geom: Geometry) -> Result<f64> {
    expected_cost_dp(x, model, geom).map(|r| r.expected_cost)
}

/// One affine term of the max defining C0 on an active set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Piece {
    LeftBorder(usize),
    Gap(usize, usize),
    RightBorder(usize),
    Wrap(usize, usize),
}

impl Piece {
    /// Adds `weight * gradient` into `grad`.
    pub(crate) fn add_gradient(self, weight: f64, grad: &mut [f64]) {
        match self {
            Piece::LeftBorder(i) => grad[i] += weight,
            Piece::RightBorder(i) => grad[i] -= weight,
            Piece::Gap(a, b) => {
                grad[a] -= 0.5 * weight;
                grad[b] += 0.5 * weight;
            }
            Piece::Wrap(first, last) => {
                grad[first] += 0.5 * weight;
                grad[last] -= 0.5 * weight;
            }
        }
    }

    /// Constant term of the affine function.
    pub(crate) fn offset(self) -> f64 {
        match self {
            Piece::RightBorder(_) => 1.0,
            Piece::Wrap(..) => 0.5,
            _ => 0.0,
        }
    }
}

/// Cost of the active set given by `members` (sorted sensor indices) together
/// with the tie-broken maximizing piece.
///
/// Interval ties go to the left border, then gaps left to right, then the
/// right border; circle ties go to the wrap-around term, then gaps.
pub(crate) fn argmax_piece(xs: &[f64], members: &[usize], geom: Geometry) -> (f64, Piece) {
    let first = members[0];
    let last = members[members.len() - 1];
    let (mut best, mut piece) = match geom {
        Geometry::Interval => (xs[first], Piece::LeftBorder(first)),
        Geometry::Circle => (wrap_term(xs[first], xs[last]), Piece::Wrap(first, last)),
    };
    for w in members.windows(2) {
        let value = half_gap(xs[w[0]], xs[w[1]]);
        if value > best {
            best = value;
            piece = Piece::Gap(w[0], w[1]);
        }
    }
    if geom == Geometry::Interval && 1.0 - xs[last] > best {
        best = 1.0 - xs[last];
        piece = Piece::RightBorder(last);
    }
    (best, piece)
}

/// Calls `visit(mask, probability, value, piece)` for every non-empty active
/// set with positive probability.
pub(crate) fn for_each_weighted_piece(
    xs: &[f64],
    model: &FailureModel,
    geom: Geometry,
    mut visit: impl FnMut(u32, f64, f64, Piece),
) {
    let n = xs.len();
    let by_size: Vec<f64> = (0..=n).map(|m| model.probability_of_size(m, n)).collect();
    let mut members = Vec::with_capacity(n);
    for mask in 1u32..(1u32 << n) {
        let pr = by_size[mask.count_ones() as usize];
        if pr == 0.0 {
            continue;
        }
        members.clear();
        members.extend((0..n).filter(|i| mask >> i & 1 == 1));
        let (value, piece) = argmax_piece(xs, &members, geom);
        visit(mask, pr, value, piece);
    }
}

/// A subgradient of the expected cost with respect to the sorted positions.
pub fn expected_subgradient(
    x: &Placement,
    model: &FailureModel,
    geom: Geometry,
) -> Result<Vec<f64>> {
    let n = x.len();
    if n > MAX_SUBGRADIENT_N {
        return Err(Error::TooLarge {
            what: "subgradient enumeration",
            n,
            max: MAX_SUBGRADIENT_N,
        });
    }
    model.check_size(n)?;
    let mut grad = vec![0.0; n];
    for_each_weighted_piece(x.positions(), model, geom, |_, pr, _, piece| {
        piece.add_gradient(pr, &mut grad);
    });
    Ok(grad)
}
