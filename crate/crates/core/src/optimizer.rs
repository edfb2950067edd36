//! Optimal placements.
//!
//! Small instances solve the full linear program directly (through its dual,
//! which starts from a feasible slack basis). Larger ones minimize the same
//! convex piecewise-linear objective with Kelley's cutting-plane method: the
//! objective is split into groups of active sets, each group gets its own
//! epigraph variable, and the master problem is again solved through its
//! dual so that new cuts arrive as columns on a warm tableau.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{expected_cost, for_each_weighted_piece, MAX_SUBGRADIENT_N};
use crate::error::{Error, Result};
use crate::lp::build_lp;
use crate::model::{FailureModel, Geometry, Placement};
use crate::simplex::{solve_via_dual, ColumnTableau, SolveOptions, SolveStatus};

/// Largest n accepted by [`optimize_lp`].
pub const MAX_OPTIMIZE_LP_N: usize = 12;

/// Above this many active-set variables the exact route switches from the
/// explicit program to grouped cut generation.
const EXPLICIT_LP_MAX_SETS: usize = 511;

/// Gap at which the grouped cut generation counts as exact.
const EXACT_GAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimizeMethod {
    ExplicitLp,
    CutGeneration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub placement: Placement,
    /// Exact expected cost of `placement`.
    pub cost: f64,
    /// Proven lower bound on the optimal expected cost.
    pub lower_bound: f64,
    pub certified_gap: f64,
    pub method: OptimizeMethod,
    /// Simplex pivots for the explicit route, cutting-plane rounds otherwise.
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CuttingPlaneOptions {
    pub gap_tol: f64,
    pub max_rounds: usize,
}

impl Default for CuttingPlaneOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-6,
            max_rounds: 5_000,
        }
    }
}

/// x_i = (2i - 1) / (2n).
pub fn equispaced_positions(n: usize) -> Vec<f64> {
    (1..=n).map(|i| (2 * i - 1) as f64 / (2 * n) as f64).collect()
}

fn starting_point(n: usize, geom: Geometry) -> Vec<f64> {
    match geom {
        Geometry::Interval => equispaced_positions(n),
        Geometry::Circle => (0..n).map(|i| i as f64 / n as f64).collect(),
    }
}

/// Sorted, clamped copy of solver output; circle solutions are rotated so the
/// first sensor sits at 0.
fn tidy(raw: &[f64], geom: Geometry) -> Result<Placement> {
    let mut xs: Vec<f64> = raw.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    xs.sort_by(f64::total_cmp);
    let x = Placement::new(&xs)?;
    Ok(match geom {
        Geometry::Interval => x,
        Geometry::Circle => x.canonical_circle(),
    })
}

/// Exact optimum of the expected cost for n <= 12.
pub fn optimize_lp(n: usize, model: &FailureModel, geom: Geometry) -> Result<Optimum> {
    if n > MAX_OPTIMIZE_LP_N {
        return Err(Error::TooLarge {
            what: "exact optimization",
            n,
            max: MAX_OPTIMIZE_LP_N,
        });
    }
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    model.check_size(n)?;
    let sets = (0..=n)
        .filter(|&m| m > 0 && model.probability_of_size(m, n) > 0.0)
        .map(|m| crate::numeric::binomial(n, m) as usize)
        .sum::<usize>();
    if sets > EXPLICIT_LP_MAX_SETS {
        let opts = CuttingPlaneOptions {
            gap_tol: EXACT_GAP,
            max_rounds: 20_000,
        };
        return kelley(n, model, geom, Grouping::Ends, &opts);
    }

    let mut built = build_lp(n, model, geom)?;
    if geom == Geometry::Circle {
        // rotation invariance: pin the first sensor
        built.lp.bounds[0] = (0.0, 0.0);
    }
    let sol = solve_via_dual(&built.lp, &SolveOptions::default());
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Solver(sol.status));
    }
    let placement = tidy(&sol.primal_values[..n], geom)?;
    let cost = expected_cost(&placement, model, geom)?;
    let lower_bound = sol.objective_value + built.empty_set_mass;
    Ok(Optimum {
        placement,
        cost,
        lower_bound,
        certified_gap: (cost - lower_bound).max(0.0),
        method: OptimizeMethod::ExplicitLp,
        iterations: sol.iterations,
    })
}

/// Kelley's cutting-plane method with a single epigraph variable, started at
/// the equispaced placement.
pub fn optimize_cutting_plane(
    n: usize,
    model: &FailureModel,
    geom: Geometry,
    opts: &CuttingPlaneOptions,
) -> Result<Optimum> {
    if n > MAX_SUBGRADIENT_N {
        return Err(Error::TooLarge {
            what: "cutting-plane optimization",
            n,
            max: MAX_SUBGRADIENT_N,
        });
    }
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    model.check_size(n)?;
    kelley(n, model, geom, Grouping::Single, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Grouping {
    Single,
    /// One group per (first active, last active) pair.
    Ends,
}

/// Maps every active-set mask to its cut group.
fn group_table(n: usize, grouping: Grouping) -> (Vec<u32>, usize) {
    match grouping {
        Grouping::Single => (vec![0; 1 << n], 1),
        Grouping::Ends => {
            let mut id = vec![u32::MAX; n * n];
            let mut count = 0;
            for a in 0..n {
                for b in a..n {
                    id[a * n + b] = count;
                    count += 1;
                }
            }
            let table = (0u32..1 << n)
                .map(|mask| {
                    if mask == 0 {
                        return 0;
                    }
                    let a = mask.trailing_zeros() as usize;
                    let b = 31 - mask.leading_zeros() as usize;
                    id[a * n + b]
                })
                .collect();
            (table, count as usize)
        }
    }
}

/// The dual of the master problem
///
///   min sum_G t_G  s.t.  t_G - g.x >= c  (cuts),  x_{i+1} >= x_i,  x <= 1,  x, t >= 0,
///
/// kept as a tableau whose rows are the master variables and whose columns
/// are the master constraints.
struct Master {
    n: usize,
    tab: ColumnTableau,
}

impl Master {
    fn new(n: usize, groups: usize, geom: Geometry) -> Self {
        let mut rhs = vec![0.0; n];
        rhs.extend(std::iter::repeat_n(1.0, groups));
        let mut tab = ColumnTableau::with_slack_basis(rhs);
        for i in 0..n.saturating_sub(1) {
            tab.add_column(&[(i + 1, 1.0), (i, -1.0)], 0.0);
        }
        for i in 0..n {
            tab.add_column(&[(i, -1.0)], 1.0);
        }
        if geom == Geometry::Circle {
            tab.add_column(&[(0, -1.0)], 0.0);
        }
        Self { n, tab }
    }

    fn add_cut(&mut self, group: usize, grad: &[f64], constant: f64) {
        let mut coefs: Vec<(usize, f64)> = grad
            .iter()
            .enumerate()
            .filter(|(_, &g)| g != 0.0)
            .map(|(i, &g)| (i, -g))
            .collect();
        coefs.push((self.n + group, 1.0));
        self.tab.add_column(&coefs, -constant);
    }

    fn solve(&mut self) -> Result<()> {
        match self.tab.optimize(&SolveOptions::default()) {
            SolveStatus::Optimal => Ok(()),
            status => Err(Error::Solver(status)),
        }
    }

    fn lower_bound(&self) -> f64 {
        -self.tab.objective()
    }

    fn positions(&self) -> Vec<f64> {
        let mut xs: Vec<f64> = (0..self.n)
            .map(|i| (-self.tab.row_price(i)).clamp(0.0, 1.0))
            .collect();
        for i in 1..xs.len() {
            xs[i] = xs[i].max(xs[i - 1]);
        }
        xs
    }

    fn epigraph(&self, group: usize) -> f64 {
        -self.tab.row_price(self.n + group)
    }
}

/// Per-group value, gradient and constant of the supporting hyperplane at `xs`.
struct GroupCuts {
    value: Vec<f64>,
    grad: Vec<Vec<f64>>,
    constant: Vec<f64>,
}

fn evaluate_groups(
    xs: &[f64],
    model: &FailureModel,
    geom: Geometry,
    table: &[u32],
    groups: usize,
) -> GroupCuts {
    let n = xs.len();
    let mut cuts = GroupCuts {
        value: vec![0.0; groups],
        grad: vec![vec![0.0; n]; groups],
        constant: vec![0.0; groups],
    };
    for_each_weighted_piece(xs, model, geom, |mask, pr, value, piece| {
        let g = table[mask as usize] as usize;
        cuts.value[g] += pr * value;
        piece.add_gradient(pr, &mut cuts.grad[g]);
        cuts.constant[g] += pr * piece.offset();
    });
    cuts
}

fn kelley(
    n: usize,
    model: &FailureModel,
    geom: Geometry,
    grouping: Grouping,
    opts: &CuttingPlaneOptions,
) -> Result<Optimum> {
    let (table, groups) = group_table(n, grouping);
    let empty = model.empty_set_mass(n);
    let mut master = Master::new(n, groups, geom);
    let mut xs = starting_point(n, geom);
    let mut best_value = f64::INFINITY;
    let mut best_xs = xs.clone();
    let mut lower = f64::NEG_INFINITY;
    let mut first = true;

    for round in 1..=opts.max_rounds {
        let cuts = evaluate_groups(&xs, model, geom, &table, groups);
        let value: f64 = cuts.value.iter().sum();
        if value < best_value {
            best_value = value;
            best_xs = xs.clone();
        }
        if best_value - lower <= opts.gap_tol {
            return finish(best_xs, model, geom, lower + empty, round);
        }
        let mut added = 0;
        for g in 0..groups {
            if first || cuts.value[g] > master.epigraph(g) + 1e-13 {
                master.add_cut(g, &cuts.grad[g], cuts.constant[g]);
                added += 1;
            }
        }
        first = false;
        if added == 0 {
            // the master already matches the objective at its own minimizer
            return finish(best_xs, model, geom, lower + empty, round);
        }
        master.solve()?;
        lower = lower.max(master.lower_bound());
        xs = master.positions();
    }

    let placement = tidy(&best_xs, geom)?;
    let cost = expected_cost(&placement, model, geom)?;
    Err(Error::NoConvergence {
        rounds: opts.max_rounds,
        gap: best_value - lower,
        positions: placement.positions().to_vec(),
        cost,
    })
}

fn finish(
    xs: Vec<f64>,
    model: &FailureModel,
    geom: Geometry,
    lower_bound: f64,
    rounds: usize,
) -> Result<Optimum> {
    let placement = tidy(&xs, geom)?;
    let cost = expected_cost(&placement, model, geom)?;
    Ok(Optimum {
        placement,
        cost,
        lower_bound,
        certified_gap: (cost - lower_bound).max(0.0),
        method: OptimizeMethod::CutGeneration,
        iterations: rounds,
    })
}

/// Maximal run of grid points whose placements agree pairwise within the
/// matching tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub p_start: f64,
    pub p_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub p_grid: Vec<f64>,
    pub placements: Vec<Vec<f64>>,
    pub costs: Vec<f64>,
    pub breakpoints: Vec<Segment>,
}

fn max_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Splits consecutive placements into segments of pairwise distance at most `tol`.
pub fn segment_placements(p_grid: &[f64], placements: &[Vec<f64>], tol: f64) -> Vec<Segment> {
    let mut segments: Vec<Segment> = Vec::new();
    for (i, x) in placements.iter().enumerate() {
        let extend = segments.last().is_some_and(|s| {
            (s.start..i).all(|j| max_distance(&placements[j], x) <= tol)
        });
        if extend {
            let s = segments.last_mut().expect("checked above");
            s.end = i;
            s.p_end = p_grid[i];
        } else {
            segments.push(Segment {
                start: i,
                end: i,
                p_start: p_grid[i],
                p_end: p_grid[i],
            });
        }
    }
    segments
}

/// Optimal placement at every grid probability, solved independently.
pub fn sweep_p(n: usize, p_grid: &[f64], geom: Geometry, match_tol: f64) -> Result<SweepResult> {
    if p_grid.is_empty() {
        return Err(Error::EmptyInput);
    }
    if p_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("probability grid must be sorted".into()));
    }
    let models = p_grid
        .iter()
        .map(|&p| FailureModel::independent_open(p))
        .collect::<Result<Vec<_>>>()?;
    let optima = models
        .par_iter()
        .map(|model| {
            if n <= MAX_OPTIMIZE_LP_N {
                optimize_lp(n, model, geom)
            } else {
                optimize_cutting_plane(n, model, geom, &CuttingPlaneOptions::default())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let placements: Vec<Vec<f64>> = optima
        .iter()
        .map(|o| o.placement.positions().to_vec())
        .collect();
    let costs = optima.iter().map(|o| o.cost).collect();
    let breakpoints = segment_placements(p_grid, &placements, match_tol);
    Ok(SweepResult {
        p_grid: p_grid.to_vec(),
        placements,
        costs,
        breakpoints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ind(p: f64) -> FailureModel {
        FailureModel::independent(p).unwrap()
    }

    #[test]
    fn single_sensor_sits_in_the_middle() {
        let opt = optimize_lp(1, &ind(0.4), Geometry::Interval).unwrap();
        assert!((opt.placement.positions()[0] - 0.5).abs() < 1e-12);
        assert!((opt.cost - 0.7).abs() < 1e-12);
        let kp = optimize_cutting_plane(1, &ind(0.4), Geometry::Interval, &Default::default())
            .unwrap();
        assert!((kp.placement.positions()[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn two_sensor_endpoints() {
        let low = optimize_lp(2, &ind(0.01), Geometry::Interval).unwrap();
        assert!(low.placement.distance(&Placement::new(&[0.25, 0.75]).unwrap()) < 1e-4);
        let high = optimize_lp(2, &ind(0.99), Geometry::Interval).unwrap();
        assert!(high.placement.distance(&Placement::new(&[0.5, 0.5]).unwrap()) < 1e-4);
    }

    #[test]
    fn circle_equispaced_is_optimal_for_three() {
        for &p in &[0.1, 0.5, 0.9] {
            let opt = optimize_lp(3, &ind(p), Geometry::Circle).unwrap();
            let eq = Placement::new(&equispaced_positions(3)).unwrap();
            let c_eq = expected_cost(&eq, &ind(p), Geometry::Circle).unwrap();
            assert!((opt.cost - c_eq).abs() < 1e-7, "p={p}");
        }
    }

    #[test]
    fn size_guards() {
        assert!(matches!(
            optimize_lp(13, &ind(0.5), Geometry::Interval),
            Err(Error::TooLarge { .. })
        ));
        assert!(matches!(
            optimize_cutting_plane(21, &ind(0.5), Geometry::Interval, &Default::default()),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn single_point_sweep_has_one_segment() {
        let res = sweep_p(3, &[0.4], Geometry::Interval, 1e-5).unwrap();
        assert_eq!(res.breakpoints.len(), 1);
        assert!(sweep_p(3, &[0.5, 0.4], Geometry::Interval, 1e-5).is_err());
    }

    #[test]
    fn round_limit_reports_best_so_far() {
        let opts = CuttingPlaneOptions {
            gap_tol: 0.0,
            max_rounds: 2,
        };
        match optimize_cutting_plane(5, &ind(0.3), Geometry::Interval, &opts) {
            Err(Error::NoConvergence { positions, cost, .. }) => {
                assert_eq!(positions.len(), 5);
                assert!(cost > 0.0);
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }
}
