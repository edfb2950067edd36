//! Exactly k of n sensors fail, uniformly over which ones.

use serde::{Deserialize, Serialize};

use crate::cost::expected_cost;
use crate::error::{Error, Result};
use crate::model::{FailureModel, Geometry, Placement};
use crate::optimizer::{equispaced_positions, optimize_lp};
use crate::random::{exact_ec0_random, harmonic_bounds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CortesInstance {
    pub n: usize,
    pub k: usize,
}

impl CortesInstance {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        FailureModel::cortes(k, n)?;
        Ok(Self { n, k })
    }

    pub fn model(&self) -> FailureModel {
        FailureModel::Cortes {
            k: self.k,
            n: self.n,
        }
    }

    pub fn failure_rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }
}

pub fn cortes_expected_cost(x: &Placement, inst: &CortesInstance) -> Result<f64> {
    expected_cost(x, &inst.model(), Geometry::Interval)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSandwich {
    pub lower: f64,
    pub upper: f64,
    pub value: f64,
}

impl CouplingSandwich {
    pub fn holds(&self) -> bool {
        self.lower <= self.value && self.value <= self.upper
    }
}

/// Brackets the fixed-count cost between independent-failure costs at
/// rates k/n -+ eps, each corrected by the Hoeffding tail exp(-2 n eps^2).
pub fn coupling_sandwich(
    x: &Placement,
    inst: &CortesInstance,
    eps: f64,
) -> Result<CouplingSandwich> {
    let rate = inst.failure_rate();
    let hi = rate.min(1.0 - rate);
    if !(eps > 0.0 && eps < hi) {
        return Err(Error::BadEpsilon { eps, lo: 0.0, hi });
    }
    if x.len() != inst.n {
        return Err(Error::ModelMismatch {
            model_n: inst.n,
            placement_n: x.len(),
        });
    }
    let tail = (-2.0 * inst.n as f64 * eps * eps).exp();
    let below = FailureModel::independent(rate - eps)?;
    let above = FailureModel::independent(rate + eps)?;
    Ok(CouplingSandwich {
        lower: expected_cost(x, &below, Geometry::Interval)? - tail,
        upper: expected_cost(x, &above, Geometry::Interval)? + tail,
        value: cortes_expected_cost(x, inst)?,
    })
}

/// Verification summary for one (n, k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CortesReport {
    pub n: usize,
    pub k: usize,
    /// Optimal cost and its certified lower bound, when n is small enough to solve.
    pub optimum: Option<(f64, f64)>,
    pub optimal_positions: Option<Vec<f64>>,
    pub equispaced_cost: f64,
    /// Allowed excess (2/n) k/(n-k) of the equispaced cost over the optimum.
    pub excess_bound: f64,
    pub excess_holds: Option<bool>,
    /// Monitored lower trend log n / (2 n log(1/(k/n - eps))) with
    /// eps = min(k/n, 1 - k/n) / 2; absent when k = 0.
    pub trend_lower: Option<f64>,
    pub random_cost: f64,
    pub random_bounds: (f64, f64),
    pub random_within_bounds: bool,
}

/// Largest n for which the report includes an exact optimum.
pub const CORTES_OPTIMUM_MAX_N: usize = 10;

pub fn cortes_checks(n: usize, k: usize, slack: f64) -> Result<CortesReport> {
    let inst = CortesInstance::new(n, k)?;
    let eq = Placement::new(&equispaced_positions(n))?;
    let equispaced_cost = cortes_expected_cost(&eq, &inst)?;
    let excess_bound = 2.0 / n as f64 * k as f64 / (n - k) as f64;

    let (optimum, optimal_positions, excess_holds) = if n <= CORTES_OPTIMUM_MAX_N {
        let opt = optimize_lp(n, &inst.model(), Geometry::Interval)?;
        let holds = equispaced_cost <= opt.cost + excess_bound + slack
            && opt.cost <= equispaced_cost + slack;
        (
            Some((opt.cost, opt.lower_bound)),
            Some(opt.placement.positions().to_vec()),
            Some(holds),
        )
    } else {
        (None, None, None)
    };

    let trend_lower = (k > 0).then(|| {
        let rate = inst.failure_rate();
        let eps = rate.min(1.0 - rate) / 2.0;
        let nf = n as f64;
        nf.ln() / (2.0 * nf * (1.0 / (rate - eps)).ln())
    });

    let m = n - k;
    let random_cost = exact_ec0_random(m);
    let random_bounds = harmonic_bounds(m);
    let random_within_bounds =
        random_bounds.0 - slack <= random_cost && random_cost <= random_bounds.1 + slack;

    Ok(CortesReport {
        n,
        k,
        optimum,
        optimal_positions,
        equispaced_cost,
        excess_bound,
        excess_holds,
        trend_lower,
        random_cost,
        random_bounds,
        random_within_bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let inst = CortesInstance::new(2, 1).unwrap();
        let mid = Placement::new(&[0.5, 0.5]).unwrap();
        assert!((cortes_expected_cost(&mid, &inst).unwrap() - 0.5).abs() < 1e-15);
        let none = CortesInstance::new(2, 0).unwrap();
        let eq = Placement::new(&[0.25, 0.75]).unwrap();
        assert!((cortes_expected_cost(&eq, &none).unwrap() - 0.25).abs() < 1e-15);
        assert!(CortesInstance::new(3, 3).is_err());
    }

    #[test]
    fn sandwich_on_equispaced() {
        let inst = CortesInstance::new(12, 4).unwrap();
        let eq = Placement::new(&equispaced_positions(12)).unwrap();
        let s = coupling_sandwich(&eq, &inst, 0.1).unwrap();
        assert!(s.holds());
        assert!(coupling_sandwich(&eq, &CortesInstance::new(12, 0).unwrap(), 0.1).is_err());
    }

    #[test]
    fn report_for_six_two() {
        let r = cortes_checks(6, 2, 1e-9).unwrap();
        assert!((r.excess_bound - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(r.excess_holds, Some(true));
        assert!(r.random_within_bounds);
        assert!((r.random_cost - exact_ec0_random(4)).abs() < 1e-15);
    }

    #[test]
    fn no_failures_is_deterministic() {
        let r = cortes_checks(5, 0, 1e-9).unwrap();
        assert!((r.equispaced_cost - 0.1).abs() < 1e-15);
        let (opt, _) = r.optimum.unwrap();
        assert!((opt - 0.1).abs() < 1e-9);
        assert!(r.trend_lower.is_none());
    }
}
