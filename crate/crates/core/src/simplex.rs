//! Dense primal simplex.
//!
//! The tableau is stored column by column: `cols[j]` holds B^-1 A_j. Every
//! row starts with a unit column (slack or artificial) in the basis, so the
//! current B^-1 can always be read off those columns, which lets columns be
//! appended to a solved tableau and re-optimized from the old basis.
//!
//! Pricing is Dantzig (most negative reduced cost). After a streak of
//! degenerate pivots the solver switches to Bland's rule for the rest of the
//! phase, which rules out cycling.

use serde::{Deserialize, Serialize};

use crate::lp::{LpProblem, Relation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    pub max_iterations: usize,
    /// Consecutive degenerate pivots tolerated before switching to Bland.
    pub degenerate_limit: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-9,
            optimality_tol: 1e-11,
            pivot_tol: 1e-11,
            max_iterations: 500_000,
            degenerate_limit: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: SolveStatus,
    pub primal_values: Vec<f64>,
    pub objective_value: f64,
    pub iterations: usize,
    /// One multiplier per row of the input problem, signed so that
    /// objective - sum(dual * row) is minimized at the optimum.
    pub row_duals: Vec<f64>,
}

impl LpSolution {
    fn failed(status: SolveStatus, lp: &LpProblem, iterations: usize) -> Self {
        Self {
            status,
            primal_values: vec![f64::NAN; lp.num_vars],
            objective_value: f64::NAN,
            iterations,
            row_duals: vec![f64::NAN; lp.rows.len()],
        }
    }
}

/// Minimization tableau `min c.z  s.t.  A z = b, z >= 0` with an initial
/// identity basis.
#[derive(Debug, Clone)]
pub struct ColumnTableau {
    m: usize,
    cols: Vec<Vec<f64>>,
    cost: Vec<f64>,
    reduced: Vec<f64>,
    rhs: Vec<f64>,
    objective: f64,
    basis: Vec<usize>,
    row_of: Vec<Option<usize>>,
    blocked: Vec<bool>,
    /// Column that was e_k in the initial tableau.
    unit: Vec<usize>,
    iterations: usize,
}

impl ColumnTableau {
    /// Tableau whose first `rhs.len()` columns are zero-cost slacks forming
    /// the starting basis. Requires `rhs >= 0`.
    pub fn with_slack_basis(rhs: Vec<f64>) -> Self {
        assert!(rhs.iter().all(|&b| b >= 0.0), "slack basis needs rhs >= 0");
        let m = rhs.len();
        let cols = (0..m)
            .map(|k| {
                let mut c = vec![0.0; m];
                c[k] = 1.0;
                c
            })
            .collect();
        Self {
            m,
            cols,
            cost: vec![0.0; m],
            reduced: vec![0.0; m],
            rhs,
            objective: 0.0,
            basis: (0..m).collect(),
            row_of: (0..m).map(Some).collect(),
            blocked: vec![false; m],
            unit: (0..m).collect(),
            iterations: 0,
        }
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    pub fn num_columns(&self) -> usize {
        self.cols.len()
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    /// Simplex multiplier of original row `k`.
    pub fn row_price(&self, k: usize) -> f64 {
        let s = self.unit[k];
        self.cost[s] - self.reduced[s]
    }

    pub fn value(&self, j: usize) -> f64 {
        match self.row_of[j] {
            Some(r) => self.rhs[r].max(0.0),
            None => 0.0,
        }
    }

    pub fn reduced_cost(&self, j: usize) -> f64 {
        self.reduced[j]
    }

    /// Appends the column with original entries `coefs` (sparse, row index
    /// and value) and cost `cost`, expressed in the current basis.
    pub fn add_column(&mut self, coefs: &[(usize, f64)], cost: f64) -> usize {
        let mut col = vec![0.0; self.m];
        let mut d = cost;
        for &(k, a) in coefs {
            if a == 0.0 {
                continue;
            }
            let unit = &self.cols[self.unit[k]];
            for (c, u) in col.iter_mut().zip(unit) {
                *c += a * u;
            }
            d -= a * self.row_price(k);
        }
        self.cols.push(col);
        self.cost.push(cost);
        self.reduced.push(d);
        self.row_of.push(None);
        self.blocked.push(false);
        self.cols.len() - 1
    }

    /// Replaces the cost vector and recomputes reduced costs and objective.
    fn set_costs(&mut self, cost: Vec<f64>) {
        self.cost = cost;
        for j in 0..self.cols.len() {
            let col = &self.cols[j];
            let z: f64 = self
                .basis
                .iter()
                .enumerate()
                .map(|(i, &b)| self.cost[b] * col[i])
                .sum();
            self.reduced[j] = if self.row_of[j].is_some() {
                0.0
            } else {
                self.cost[j] - z
            };
        }
        self.objective = self
            .basis
            .iter()
            .zip(&self.rhs)
            .map(|(&b, &v)| self.cost[b] * v)
            .sum();
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let pcol = std::mem::take(&mut self.cols[e]);
        let pe = pcol[r];
        for (j, col) in self.cols.iter_mut().enumerate() {
            if j == e {
                continue;
            }
            let a = col[r];
            if a == 0.0 {
                continue;
            }
            let f = a / pe;
            for (c, p) in col.iter_mut().zip(&pcol) {
                *c -= f * p;
            }
            col[r] = f;
            self.reduced[j] -= f * self.reduced[e];
        }
        let t = self.rhs[r] / pe;
        for (v, p) in self.rhs.iter_mut().zip(&pcol) {
            *v -= t * p;
        }
        self.rhs[r] = t;
        self.objective += self.reduced[e] * t;

        let mut unit = pcol;
        unit.iter_mut().for_each(|v| *v = 0.0);
        unit[r] = 1.0;
        self.cols[e] = unit;
        self.reduced[e] = 0.0;

        let leaving = self.basis[r];
        self.row_of[leaving] = None;
        self.row_of[e] = Some(r);
        self.basis[r] = e;
        self.iterations += 1;
    }

    fn entering(&self, bland: bool, tol: f64) -> Option<usize> {
        let candidates = (0..self.cols.len())
            .filter(|&j| self.row_of[j].is_none() && !self.blocked[j] && self.reduced[j] < -tol);
        if bland {
            candidates.into_iter().next()
        } else {
            candidates.min_by(|&a, &b| self.reduced[a].total_cmp(&self.reduced[b]))
        }
    }

    fn leaving(&self, e: usize, bland: bool, tol: f64) -> Option<(usize, f64)> {
        let col = &self.cols[e];
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let a = col[i];
            if a <= tol {
                continue;
            }
            let ratio = self.rhs[i].max(0.0) / a;
            best = match best {
                None => Some((i, ratio)),
                Some((bi, br)) => {
                    let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br);
                    let better = if tie {
                        if bland {
                            self.basis[i] < self.basis[bi]
                        } else {
                            a > col[bi]
                        }
                    } else {
                        ratio < br
                    };
                    if better {
                        Some((i, ratio))
                    } else {
                        Some((bi, br))
                    }
                }
            };
        }
        best
    }

    /// Runs primal simplex from the current (feasible) basis.
    pub fn optimize(&mut self, opts: &SolveOptions) -> SolveStatus {
        let mut bland = false;
        let mut streak = 0;
        let start = self.iterations;
        loop {
            if self.iterations - start >= opts.max_iterations {
                return SolveStatus::IterationLimit;
            }
            let Some(e) = self.entering(bland, opts.optimality_tol) else {
                return SolveStatus::Optimal;
            };
            let Some((r, ratio)) = self.leaving(e, bland, opts.pivot_tol) else {
                return SolveStatus::Unbounded;
            };
            if ratio <= 1e-13 {
                streak += 1;
                if streak > opts.degenerate_limit {
                    bland = true;
                }
            } else {
                streak = 0;
            }
            self.pivot(r, e);
        }
    }
}

/// How an input variable is expressed through non-negative tableau columns.
enum VarMap {
    /// x = offset + z
    Shift(usize, f64),
    /// x = offset - z
    Mirror(usize, f64),
    /// x = z+ - z-
    Split(usize, usize),
}

/// Two-phase primal simplex for a general problem with finite or infinite
/// bounds. Empty rows are dropped after checking them.
pub fn solve(lp: &LpProblem, opts: &SolveOptions) -> LpSolution {
    // structural columns
    let mut maps = Vec::with_capacity(lp.num_vars);
    let mut ncols = 0;
    let mut upper_rows: Vec<(usize, f64)> = Vec::new();
    for &(lo, hi) in &lp.bounds {
        if lo > hi {
            return LpSolution::failed(SolveStatus::Infeasible, lp, 0);
        }
        if lo.is_finite() {
            maps.push(VarMap::Shift(ncols, lo));
            if hi.is_finite() {
                upper_rows.push((ncols, hi - lo));
            }
            ncols += 1;
        } else if hi.is_finite() {
            maps.push(VarMap::Mirror(ncols, hi));
            ncols += 1;
        } else {
            maps.push(VarMap::Split(ncols, ncols + 1));
            ncols += 2;
        }
    }

    // rows as (structural coefs, relation, rhs, sign applied, source row)
    struct NormRow {
        coefs: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
        sign: f64,
        source: Option<usize>,
    }
    let mut rows: Vec<NormRow> = Vec::new();
    for (idx, row) in lp.rows.iter().enumerate() {
        let mut coefs = Vec::with_capacity(row.coefs.len() + 1);
        let mut rhs = row.rhs;
        for &(j, a) in &row.coefs {
            if a == 0.0 {
                continue;
            }
            match maps[j] {
                VarMap::Shift(z, off) => {
                    coefs.push((z, a));
                    rhs -= a * off;
                }
                VarMap::Mirror(z, off) => {
                    coefs.push((z, -a));
                    rhs -= a * off;
                }
                VarMap::Split(zp, zm) => {
                    coefs.push((zp, a));
                    coefs.push((zm, -a));
                }
            }
        }
        if coefs.is_empty() {
            let ok = match row.relation {
                Relation::Le => rhs >= -opts.feasibility_tol,
                Relation::Ge => rhs <= opts.feasibility_tol,
                Relation::Eq => rhs.abs() <= opts.feasibility_tol,
            };
            if !ok {
                return LpSolution::failed(SolveStatus::Infeasible, lp, 0);
            }
            continue;
        }
        rows.push(NormRow {
            coefs,
            relation: row.relation,
            rhs,
            sign: 1.0,
            source: Some(idx),
        });
    }
    for &(z, cap) in &upper_rows {
        rows.push(NormRow {
            coefs: vec![(z, 1.0)],
            relation: Relation::Le,
            rhs: cap,
            sign: 1.0,
            source: None,
        });
    }
    for row in &mut rows {
        // make rhs non-negative; a zero-rhs >= row becomes a <= row with a slack
        if row.rhs < 0.0 || (row.rhs == 0.0 && row.relation == Relation::Ge) {
            row.sign = -1.0;
            row.rhs = -row.rhs;
            row.coefs.iter_mut().for_each(|(_, a)| *a = -*a);
            row.relation = match row.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        row.rhs = row.rhs.max(0.0);
    }

    let m = rows.len();
    let mut tab = ColumnTableau::with_slack_basis(rows.iter().map(|r| r.rhs).collect());
    let mut artificial = vec![false; m];
    for (k, row) in rows.iter().enumerate() {
        artificial[k] = row.relation != Relation::Le;
    }

    // transpose row storage into columns
    let mut col_entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ncols];
    for (k, row) in rows.iter().enumerate() {
        for &(z, a) in &row.coefs {
            col_entries[z].push((k, a));
        }
    }
    let mut col_cost = vec![0.0; ncols];
    for (j, map) in maps.iter().enumerate() {
        let c = lp.objective[j];
        match *map {
            VarMap::Shift(z, _) => col_cost[z] += c,
            VarMap::Mirror(z, _) => col_cost[z] -= c,
            VarMap::Split(zp, zm) => {
                col_cost[zp] += c;
                col_cost[zm] -= c;
            }
        }
    }
    let first_structural = tab.num_columns();
    for (entries, &c) in col_entries.iter().zip(&col_cost) {
        tab.add_column(entries, c);
    }
    for (k, row) in rows.iter().enumerate() {
        if row.relation == Relation::Ge {
            tab.add_column(&[(k, -1.0)], 0.0);
        }
    }

    // phase 1
    if artificial.iter().any(|&a| a) {
        let mut cost = vec![0.0; tab.num_columns()];
        for k in 0..m {
            if artificial[k] {
                cost[k] = 1.0;
            }
        }
        tab.set_costs(cost);
        let status = tab.optimize(opts);
        if status == SolveStatus::IterationLimit {
            return LpSolution::failed(status, lp, tab.iterations());
        }
        let scale = 1.0 + rows.iter().map(|r| r.rhs).fold(0.0, f64::max);
        if tab.objective() > opts.feasibility_tol * scale {
            return LpSolution::failed(SolveStatus::Infeasible, lp, tab.iterations());
        }
        // pivot basic artificials out where possible
        for r in 0..m {
            let b = tab.basis[r];
            if b >= m || !artificial[b] {
                continue;
            }
            let replacement = (first_structural..tab.num_columns())
                .filter(|&j| tab.row_of[j].is_none())
                .max_by(|&a, &c| tab.cols[a][r].abs().total_cmp(&tab.cols[c][r].abs()))
                .filter(|&j| tab.cols[j][r].abs() > 1e-9);
            if let Some(j) = replacement {
                tab.pivot(r, j);
            }
        }
        for (blocked, &art) in tab.blocked.iter_mut().zip(&artificial) {
            *blocked |= art;
        }
    }

    // phase 2
    let mut cost = vec![0.0; tab.num_columns()];
    cost[first_structural..first_structural + ncols].copy_from_slice(&col_cost);
    tab.set_costs(cost);
    let status = tab.optimize(opts);
    if status != SolveStatus::Optimal {
        return LpSolution::failed(status, lp, tab.iterations());
    }

    let z: Vec<f64> = (0..ncols).map(|j| tab.value(first_structural + j)).collect();
    let primal_values: Vec<f64> = maps
        .iter()
        .zip(&lp.bounds)
        .map(|(map, &(lo, hi))| {
            let v = match *map {
                VarMap::Shift(j, off) => off + z[j],
                VarMap::Mirror(j, off) => off - z[j],
                VarMap::Split(p, q) => z[p] - z[q],
            };
            v.clamp(lo, hi)
        })
        .collect();
    let mut row_duals = vec![0.0; lp.rows.len()];
    for (k, row) in rows.iter().enumerate() {
        if let Some(src) = row.source {
            row_duals[src] = row.sign * tab.row_price(k);
        }
    }
    LpSolution {
        status,
        objective_value: lp.objective_value(&primal_values),
        primal_values,
        iterations: tab.iterations(),
        row_duals,
    }
}

/// Solves `lp` by running the primal simplex on its dual.
///
/// Applies when every lower bound is finite, no row is an equality and the
/// objective is non-negative: the dual then starts from a feasible slack
/// basis, and the primal solution is read off the dual's simplex
/// multipliers. Falls back to [`solve`] otherwise.
pub fn solve_via_dual(lp: &LpProblem, opts: &SolveOptions) -> LpSolution {
    let applicable = lp.bounds.iter().all(|b| b.0.is_finite())
        && lp.rows.iter().all(|r| r.relation != Relation::Eq)
        && lp.objective.iter().all(|&c| c >= 0.0);
    if !applicable {
        return solve(lp, opts);
    }

    let n = lp.num_vars;
    let mut tab = ColumnTableau::with_slack_basis(lp.objective.clone());
    // every primal row in the form a.x >= b
    let mut row_cols = Vec::with_capacity(lp.rows.len());
    for row in &lp.rows {
        let sign = if row.relation == Relation::Le { -1.0 } else { 1.0 };
        let mut rhs = row.rhs;
        let mut coefs = Vec::with_capacity(row.coefs.len());
        for &(j, a) in &row.coefs {
            rhs -= a * lp.bounds[j].0;
            coefs.push((j, sign * a));
        }
        row_cols.push(tab.add_column(&coefs, -sign * rhs));
    }
    for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
        if hi.is_finite() {
            tab.add_column(&[(j, -1.0)], hi - lo);
        }
    }

    match tab.optimize(opts) {
        SolveStatus::Optimal => {}
        SolveStatus::Unbounded => {
            return LpSolution::failed(SolveStatus::Infeasible, lp, tab.iterations())
        }
        status => return LpSolution::failed(status, lp, tab.iterations()),
    }

    let primal_values: Vec<f64> = (0..n)
        .map(|j| {
            let (lo, hi) = lp.bounds[j];
            (lo - tab.row_price(j)).clamp(lo, hi)
        })
        .collect();
    let row_duals = lp
        .rows
        .iter()
        .zip(&row_cols)
        .map(|(row, &c)| {
            let y = tab.value(c);
            if row.relation == Relation::Le {
                -y
            } else {
                y
            }
        })
        .collect();
    LpSolution {
        status: SolveStatus::Optimal,
        objective_value: lp.objective_value(&primal_values),
        primal_values,
        iterations: tab.iterations(),
        row_duals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::LpRow;

    fn one_var(rows: Vec<LpRow>, objective: f64) -> LpProblem {
        let mut lp = LpProblem::new(vec!["x".into()]);
        lp.objective[0] = objective;
        lp.rows = rows;
        lp
    }

    #[test]
    fn single_lower_bound_row() {
        let lp = one_var(vec![LpRow::new(vec![(0, 1.0)], Relation::Ge, 0.25)], 1.0);
        for sol in [solve(&lp, &SolveOptions::default()), solve_via_dual(&lp, &SolveOptions::default())] {
            assert_eq!(sol.status, SolveStatus::Optimal);
            assert!((sol.primal_values[0] - 0.25).abs() < 1e-12);
            assert!((sol.objective_value - 0.25).abs() < 1e-12);
            assert!((sol.row_duals[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let lp = one_var(
            vec![
                LpRow::new(vec![(0, 1.0)], Relation::Ge, 2.0),
                LpRow::new(vec![(0, 1.0)], Relation::Le, 1.0),
            ],
            1.0,
        );
        assert_eq!(solve(&lp, &SolveOptions::default()).status, SolveStatus::Infeasible);
        assert_eq!(
            solve_via_dual(&lp, &SolveOptions::default()).status,
            SolveStatus::Infeasible
        );
    }

    #[test]
    fn unbounded_direction_is_reported() {
        let lp = one_var(vec![LpRow::new(vec![(0, 1.0)], Relation::Ge, 1.0)], -1.0);
        assert_eq!(solve(&lp, &SolveOptions::default()).status, SolveStatus::Unbounded);
    }

    #[test]
    fn free_and_mirrored_variables() {
        // min x + y, x free with x >= -3 as a row, y <= 2 with no lower bound, y >= -1 as a row
        let mut lp = LpProblem::new(vec!["x".into(), "y".into()]);
        lp.objective = vec![1.0, 1.0];
        lp.bounds = vec![(f64::NEG_INFINITY, f64::INFINITY), (f64::NEG_INFINITY, 2.0)];
        lp.rows = vec![
            LpRow::new(vec![(0, 1.0)], Relation::Ge, -3.0),
            LpRow::new(vec![(1, 1.0)], Relation::Ge, -1.0),
        ];
        let sol = solve(&lp, &SolveOptions::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective_value + 4.0).abs() < 1e-12);
    }

    #[test]
    fn equality_rows() {
        let mut lp = LpProblem::new(vec!["x".into(), "y".into()]);
        lp.objective = vec![1.0, 2.0];
        lp.rows = vec![LpRow::new(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0)];
        lp.bounds = vec![(0.0, 0.4), (0.0, 1.0)];
        let sol = solve(&lp, &SolveOptions::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.primal_values[0] - 0.4).abs() < 1e-12);
        assert!((sol.objective_value - 1.6).abs() < 1e-12);
    }

    #[test]
    fn appended_columns_reoptimize_from_warm_basis() {
        // max x1 + x2 s.t. x1 <= 1, x2 <= 2, written as min of the negation
        let mut tab = ColumnTableau::with_slack_basis(vec![1.0, 2.0]);
        tab.add_column(&[(0, 1.0)], -1.0);
        assert_eq!(tab.optimize(&SolveOptions::default()), SolveStatus::Optimal);
        assert_eq!(tab.objective(), -1.0);
        let j = tab.add_column(&[(1, 1.0)], -1.0);
        assert!(tab.reduced_cost(j) < 0.0);
        assert_eq!(tab.optimize(&SolveOptions::default()), SolveStatus::Optimal);
        assert_eq!(tab.objective(), -3.0);
        assert_eq!(tab.row_price(1), -1.0);
    }
}
