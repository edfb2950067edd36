//! Cost of placing sensors uniformly at random.
//!
//! With m active sensors at i.i.d. uniform positions the gaps V_1..V_{m+1}
//! are exchangeable spacings with joint survival
//! Pr(V_i1 > c_1, ..., V_ir > c_r) = (1 - sum c)_+^m. Integrating the
//! survival function of C0 by inclusion-exclusion gives
//!
//!   E[C0(m)] = sum_{(a, r) != (0, 0)} (-1)^{a+r+1} C(2, a) C(m-1, r) / ((a + 2r)(m + 1)),
//!
//! an alternating sum that loses all precision in floating point for
//! moderate m. It is evaluated exactly in rationals for m <= 60. Larger m use
//! the equivalent closed form
//!
//!   E[C0(m)] = (H_{m-1} / 2 + B(1/2, m) - 1 / (2m)) / (m + 1),
//!
//! where B(1/2, m) = 2 prod_{j<m} 2j / (2j + 1) is the beta function.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, Discrete};

use crate::catalog::{replicate_rng, sample_uniform_placement};
use crate::cost::{c0_line, expected_cost};
use crate::error::{Error, Result};
use crate::model::{FailureModel, Geometry};
use crate::numeric::{harmonic, CompensatedSum};
use crate::runs::expected_cost_equispaced;

/// Largest m evaluated through the exact rational sum.
pub const RATIONAL_MAX_M: usize = 60;

/// Largest n for which Monte Carlo replicates integrate failures exactly.
pub const MC_EXACT_MAX_N: usize = 200;

/// E[C0] for m uniform sensors as an exact fraction.
pub fn exact_ec0_random_rational(m: usize) -> BigRational {
    if m == 0 {
        return BigRational::one();
    }
    let mut total = BigRational::zero();
    let denom_m = BigInt::from(m + 1);
    let mut binom_r = BigInt::one();
    for r in 0..m {
        for a in 0..=2usize {
            if a == 0 && r == 0 {
                continue;
            }
            let binom_a = [1, 2, 1][a];
            let num = &binom_r * BigInt::from(binom_a);
            let den = BigInt::from(a + 2 * r) * &denom_m;
            let term = BigRational::new(num, den);
            if (a + r) % 2 == 0 {
                total -= term;
            } else {
                total += term;
            }
        }
        binom_r = binom_r * BigInt::from(m - 1 - r) / BigInt::from(r + 1);
    }
    total
}

/// Closed-form evaluation, stable for every m.
pub fn ec0_random_closed_form(m: usize) -> f64 {
    ec0_random_table(m, false)[m]
}

/// E[C0] for m = 0..=max_m. With `rational`, entries up to
/// [`RATIONAL_MAX_M`] come from the exact sum.
fn ec0_random_table(max_m: usize, rational: bool) -> Vec<f64> {
    let mut out = Vec::with_capacity(max_m + 1);
    out.push(1.0);
    let mut h = 0.0; // H_{m-1}
    let mut beta = 2.0; // B(1/2, m)
    for m in 1..=max_m {
        if m > 1 {
            h += 1.0 / (m - 1) as f64;
            let j = (m - 1) as f64;
            beta *= 2.0 * j / (2.0 * j + 1.0);
        }
        let value = if rational && m <= RATIONAL_MAX_M {
            exact_ec0_random_rational(m)
                .to_f64()
                .expect("finite rational")
        } else {
            (0.5 * h + beta - 0.5 / m as f64) / (m + 1) as f64
        };
        out.push(value);
    }
    out
}

/// E[C0(x_rand)] with m active sensors.
pub fn exact_ec0_random(m: usize) -> f64 {
    if m <= RATIONAL_MAX_M {
        exact_ec0_random_rational(m).to_f64().expect("finite rational")
    } else {
        ec0_random_closed_form(m)
    }
}

/// Harmonic bracket H_{m+1} / (2(m+1)) <= E[C0(m)] <= (H_{m-1} + 4) / (2(m+1)), m >= 1.
pub fn harmonic_bounds(m: usize) -> (f64, f64) {
    let d = 2.0 * (m + 1) as f64;
    (harmonic(m + 1) / d, (harmonic(m.saturating_sub(1)) + 4.0) / d)
}

fn active_count_law(n: usize, p: f64) -> Vec<f64> {
    let q = 1.0 - p;
    if q <= 0.0 {
        let mut law = vec![0.0; n + 1];
        law[0] = 1.0;
        return law;
    }
    if q >= 1.0 {
        let mut law = vec![0.0; n + 1];
        law[n] = 1.0;
        return law;
    }
    let dist = Binomial::new(q, n as u64).expect("q in (0, 1)");
    (0..=n).map(|m| dist.pmf(m as u64)).collect()
}

/// E[C(x_rand)] under independent failures: the binomial mixture over the
/// number of active sensors.
pub fn expected_cost_random(n: usize, p: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    FailureModel::independent(p)?;
    let table = ec0_random_table(n, true);
    let law = active_count_law(n, p);
    Ok(law
        .iter()
        .zip(&table)
        .map(|(w, v)| w * v)
        .collect::<CompensatedSum>()
        .value())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

impl Bracket {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

/// Bounds on E[C(x_rand)] from concentration of the active count: with
/// probability at least 1 - exp(-2 eps^2 n) it lies within n (1 - p +- eps).
pub fn hoeffding_sandwich(n: usize, p: f64, eps: f64) -> Result<Bracket> {
    FailureModel::independent(p)?;
    let hi = p.min(1.0 - p);
    if !(eps > 0.0 && eps < hi) {
        return Err(Error::BadEpsilon { eps, lo: 0.0, hi });
    }
    let tail = (-2.0 * eps * eps * n as f64).exp();
    let big = ((1.0 - p + eps) * n as f64).ceil() as usize;
    let small = (((1.0 - p - eps) * n as f64).ceil() as usize).max(1);
    Ok(Bracket {
        lower: (1.0 - tail) * harmonic(big) / (2 * big) as f64,
        upper: tail + (harmonic(small) + 4.0) / (2 * small + 2) as f64,
    })
}

/// log n / (2 (1 - p) n): leading behaviour of the random placement.
pub fn random_asymptote(n: usize, p: f64) -> f64 {
    let nf = n as f64;
    nf.ln() / (2.0 * (1.0 - p) * nf)
}

/// log n / (2 n log(1/p)): leading behaviour of the equispaced placement.
pub fn equispaced_asymptote(n: usize, p: f64) -> f64 {
    let nf = n as f64;
    nf.ln() / (2.0 * nf * (1.0 / p).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub reps: usize,
}

fn summarize(samples: &[f64]) -> McEstimate {
    let reps = samples.len();
    let mean = samples.iter().copied().collect::<CompensatedSum>().value() / reps as f64;
    let ss = samples
        .iter()
        .map(|v| (v - mean).powi(2))
        .collect::<CompensatedSum>()
        .value();
    McEstimate {
        estimate: mean,
        stderr: (ss / (reps - 1) as f64).sqrt() / (reps as f64).sqrt(),
        reps,
    }
}

fn check_reps(reps: usize) -> Result<()> {
    if reps < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 replicates, got {reps}"
        )));
    }
    Ok(())
}

/// Mean exact expected cost over `reps` random placements. Replicate i uses
/// stream (seed, i); failures are integrated exactly.
pub fn monte_carlo_expected_cost(n: usize, p: f64, reps: usize, seed: u64) -> Result<McEstimate> {
    check_reps(reps)?;
    let model = FailureModel::independent(p)?;
    let samples = (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let x = sample_uniform_placement(n, seed, i);
            expected_cost(&x, &model, Geometry::Interval)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(summarize(&samples))
}

/// Like [`monte_carlo_expected_cost`] but also samples which sensors fail,
/// after drawing the positions from the same stream. Linear time per
/// replicate, for sizes where the exact evaluator is too slow.
pub fn monte_carlo_sampled_failures(
    n: usize,
    p: f64,
    reps: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_reps(reps)?;
    FailureModel::independent(p)?;
    let samples: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(seed, i);
            let mut xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            xs.sort_by(f64::total_cmp);
            let active: Vec<f64> = xs.into_iter().filter(|_| !rng.random_bool(p)).collect();
            c0_line(&active)
        })
        .collect();
    Ok(summarize(&samples))
}

/// Pr(V_i > c_i for each (i, c_i)) for the m + 1 spacings of m uniforms.
/// Indices are 1-based and must be distinct.
pub fn spacing_joint_survival(m: usize, thresholds: &[(usize, f64)]) -> f64 {
    let total: f64 = thresholds.iter().map(|t| t.1).sum();
    (1.0 - total).max(0.0).powi(m as i32)
}

/// Simulated counterpart of [`spacing_joint_survival`].
pub fn simulate_spacing_survival(
    m: usize,
    thresholds: &[(usize, f64)],
    draws: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_reps(draws)?;
    if let Some(&(i, _)) = thresholds.iter().find(|t| t.0 == 0 || t.0 > m + 1) {
        return Err(Error::InvalidArgument(format!("spacing index {i} out of 1..={}", m + 1)));
    }
    const CHUNK: usize = 10_000;
    let chunks = draws.div_ceil(CHUNK);
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = replicate_rng(seed, c as u64);
            let len = CHUNK.min(draws - c * CHUNK);
            let mut ys = vec![0.0; m + 2];
            (0..len)
                .filter(|_| {
                    for y in ys[1..=m].iter_mut() {
                        *y = rng.random::<f64>();
                    }
                    ys[m + 1] = 1.0;
                    ys[1..=m].sort_by(f64::total_cmp);
                    thresholds.iter().all(|&(i, c)| ys[i] - ys[i - 1] > c)
                })
                .count()
        })
        .sum();
    let phat = hits as f64 / draws as f64;
    Ok(McEstimate {
        estimate: phat,
        stderr: (phat * (1.0 - phat) / draws as f64).sqrt(),
        reps: draws,
    })
}

/// One row of the random-versus-equispaced comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomStudyRow {
    pub n: usize,
    pub mc_estimate: f64,
    pub mc_stderr: f64,
    pub exact_mixture: f64,
    pub equispaced_cost: f64,
    pub equispaced_asymptote: f64,
    pub random_asymptote: f64,
}

pub fn random_study_row(n: usize, p: f64, reps: usize, seed: u64) -> Result<RandomStudyRow> {
    let mc = if n <= MC_EXACT_MAX_N {
        monte_carlo_expected_cost(n, p, reps, seed)?
    } else {
        monte_carlo_sampled_failures(n, p, reps, seed)?
    };
    Ok(RandomStudyRow {
        n,
        mc_estimate: mc.estimate,
        mc_stderr: mc.stderr,
        exact_mixture: expected_cost_random(n, p)?,
        equispaced_cost: expected_cost_equispaced(n, p),
        equispaced_asymptote: equispaced_asymptote(n, p),
        random_asymptote: random_asymptote(n, p),
    })
}

/// Exact per-count values and the bounds that bracket them for one n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomStudyReport {
    pub n: usize,
    pub p: f64,
    /// Entry m is E[C0] with m active sensors.
    pub exact_values: Vec<f64>,
    pub harmonic_lower: Vec<f64>,
    pub harmonic_upper: Vec<f64>,
    pub mixture_value: f64,
    pub mc_estimate: f64,
    pub mc_stderr: f64,
    pub asymptote: f64,
}

pub fn random_study_report(n: usize, p: f64, reps: usize, seed: u64) -> Result<RandomStudyReport> {
    let row = random_study_row(n, p, reps, seed)?;
    let exact_values = ec0_random_table(n, true);
    let (harmonic_lower, harmonic_upper) = (0..=n)
        .map(|m| if m == 0 { (1.0, 1.0) } else { harmonic_bounds(m) })
        .unzip();
    Ok(RandomStudyReport {
        n,
        p,
        exact_values,
        harmonic_lower,
        harmonic_upper,
        mixture_value: row.exact_mixture,
        mc_estimate: row.mc_estimate,
        mc_stderr: row.mc_stderr,
        asymptote: row.random_asymptote,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_counts() {
        assert_eq!(exact_ec0_random(0), 1.0);
        assert_eq!(exact_ec0_random_rational(1), BigRational::new(3.into(), 4.into()));
        assert_eq!(exact_ec0_random_rational(2), BigRational::new(19.into(), 36.into()));
        assert!((ec0_random_closed_form(1) - 0.75).abs() < 1e-15);
        assert!((ec0_random_closed_form(2) - 19.0 / 36.0).abs() < 1e-15);
        let v = exact_ec0_random(5);
        assert!((0.2041..=0.5139).contains(&v));
    }

    #[test]
    fn mixture_examples() {
        assert!((expected_cost_random(1, 0.3).unwrap() - 0.825).abs() < 1e-14);
        assert!((expected_cost_random(7, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(
            (expected_cost_random(9, 0.0).unwrap() - exact_ec0_random(9)).abs() < 1e-15
        );
    }

    #[test]
    fn sandwich_rejects_bad_eps() {
        assert!(hoeffding_sandwich(100, 0.3, 0.0).is_err());
        assert!(hoeffding_sandwich(100, 0.3, 0.3).is_err());
        assert!(hoeffding_sandwich(100, 0.8, 0.25).is_err());
        let tiny = hoeffding_sandwich(100, 0.3, 1e-9).unwrap();
        assert!(tiny.lower < 1e-12);
    }

    #[test]
    fn asymptote_values() {
        let e2 = std::f64::consts::E.powi(2);
        let nf = e2.round() as usize;
        let v = random_asymptote(nf, 0.5);
        assert!((v - (nf as f64).ln() / nf as f64).abs() < 1e-15);
        for i in 1..100 {
            let p = i as f64 / 100.0;
            assert!(random_asymptote(1000, p) > equispaced_asymptote(1000, p));
        }
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let a = monte_carlo_expected_cost(6, 0.3, 50, 11).unwrap();
        let b = monte_carlo_expected_cost(6, 0.3, 50, 11).unwrap();
        assert_eq!(a, b);
        assert!(monte_carlo_expected_cost(6, 0.3, 1, 11).is_err());
    }
}
