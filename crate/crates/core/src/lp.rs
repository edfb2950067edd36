//! The exponential-size linear program whose optimal x-part is an optimal
//! placement, and a plain-text LP export/import in the CPLEX LP dialect.
//!
//! Variables are laid out as `x1..xn` followed by one `w_<mask>` per active
//! set, in increasing bitmask order (bit i set means sensor i + 1 is active).

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FailureModel, Geometry};

/// Largest n for which the full program is materialized.
pub const MAX_LP_N: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpRow {
    pub coefs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl LpRow {
    pub fn new(coefs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> Self {
        Self {
            coefs,
            relation,
            rhs,
        }
    }

    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coefs.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// Amount by which `values` violates the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A minimization problem in solver-neutral form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub bounds: Vec<(f64, f64)>,
    pub var_names: Vec<String>,
}

impl LpProblem {
    pub fn new(var_names: Vec<String>) -> Self {
        let num_vars = var_names.len();
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); num_vars],
            var_names,
        }
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().zip(values).map(|(c, v)| c * v).sum()
    }

    /// Largest row or bound violation at `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(values));
        let bounds = self
            .bounds
            .iter()
            .zip(values)
            .map(|(&(lo, hi), &v)| (lo - v).max(v - hi).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    /// Drop the variables and rows of active sets with zero probability.
    pub prune_zero_probability: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            prune_zero_probability: true,
        }
    }
}

/// The program built by [`build_lp`] together with the active set of every
/// `w` variable.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageLp {
    pub lp: LpProblem,
    pub n: usize,
    /// Bitmask of the active set behind variable `n + k`.
    pub w_masks: Vec<u32>,
    /// Probability that every sensor fails; constant, so not in the objective.
    pub empty_set_mass: f64,
}

pub fn build_lp(n: usize, model: &FailureModel, geom: Geometry) -> Result<CoverageLp> {
    build_lp_with(n, model, geom, BuildOptions::default())
}

pub fn build_lp_with(
    n: usize,
    model: &FailureModel,
    geom: Geometry,
    opts: BuildOptions,
) -> Result<CoverageLp> {
    if n > MAX_LP_N {
        return Err(Error::TooLarge {
            what: "LP formulation",
            n,
            max: MAX_LP_N,
        });
    }
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    model.check_size(n)?;

    let by_size: Vec<f64> = (0..=n).map(|m| model.probability_of_size(m, n)).collect();
    let w_masks: Vec<u32> = (1u32..1 << n)
        .filter(|&mask| !opts.prune_zero_probability || by_size[mask.count_ones() as usize] > 0.0)
        .collect();

    let mut names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    names.extend(w_masks.iter().map(|mask| format!("w_{mask:x}")));
    let mut lp = LpProblem::new(names);
    for i in 0..n {
        lp.bounds[i] = (0.0, 1.0);
    }
    for i in 0..n.saturating_sub(1) {
        lp.rows.push(LpRow::new(
            vec![(i + 1, 1.0), (i, -1.0)],
            Relation::Ge,
            0.0,
        ));
    }

    let mut members = Vec::with_capacity(n);
    for (k, &mask) in w_masks.iter().enumerate() {
        let w = n + k;
        lp.objective[w] = by_size[mask.count_ones() as usize];
        members.clear();
        members.extend((0..n).filter(|i| mask >> i & 1 == 1));
        let first = members[0];
        let last = members[members.len() - 1];
        if geom == Geometry::Interval {
            lp.rows
                .push(LpRow::new(vec![(w, 1.0), (first, -1.0)], Relation::Ge, 0.0));
        }
        for pair in members.windows(2) {
            lp.rows.push(LpRow::new(
                vec![(w, 1.0), (pair[1], -0.5), (pair[0], 0.5)],
                Relation::Ge,
                0.0,
            ));
        }
        match geom {
            Geometry::Interval => {
                lp.rows
                    .push(LpRow::new(vec![(w, 1.0), (last, 1.0)], Relation::Ge, 1.0));
            }
            Geometry::Circle if first == last => {
                lp.rows.push(LpRow::new(vec![(w, 1.0)], Relation::Ge, 0.5));
            }
            Geometry::Circle => {
                lp.rows.push(LpRow::new(
                    vec![(w, 1.0), (last, 0.5), (first, -0.5)],
                    Relation::Ge,
                    0.5,
                ));
            }
        }
    }

    Ok(CoverageLp {
        lp,
        n,
        w_masks,
        empty_set_mass: by_size[0],
    })
}

impl CoverageLp {
    /// Extends a placement with w_A := C0(x_A), which is feasible by construction.
    pub fn lift(&self, positions: &[f64], geom: Geometry) -> Vec<f64> {
        let mut values = positions.to_vec();
        let mut active = Vec::with_capacity(self.n);
        for &mask in &self.w_masks {
            active.clear();
            active.extend(
                (0..self.n)
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| positions[i]),
            );
            values.push(crate::cost::c0(&active, geom));
        }
        values
    }
}

fn write_number(out: &mut String, v: f64) {
    if v == f64::INFINITY {
        out.push_str("+inf");
    } else if v == f64::NEG_INFINITY {
        out.push_str("-inf");
    } else {
        // shortest representation that parses back to the same double
        let _ = write!(out, "{v}");
    }
}

fn write_terms(out: &mut String, terms: impl Iterator<Item = (usize, f64)>, names: &[String]) {
    let mut first = true;
    let mut on_line = 0;
    for (j, coef) in terms {
        if on_line == 8 {
            out.push_str("\n   ");
            on_line = 0;
        }
        let magnitude = coef.abs();
        match (first, coef < 0.0) {
            (true, true) => out.push('-'),
            (true, false) => {}
            (false, true) => out.push_str(" - "),
            (false, false) => out.push_str(" + "),
        }
        if magnitude != 1.0 {
            write_number(out, magnitude);
            out.push(' ');
        }
        out.push_str(&names[j]);
        first = false;
        on_line += 1;
    }
}

/// Renders the problem in CPLEX LP text format. Output is deterministic.
pub fn export_lp_text(lp: &LpProblem) -> String {
    let mut out = String::new();
    out.push_str("\\ expected coverage cost program\n");
    out.push_str("Minimize\n obj: ");
    write_terms(
        &mut out,
        lp.objective
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(j, &c)| (j, c)),
        &lp.var_names,
    );
    out.push_str("\nSubject To\n");
    for (r, row) in lp.rows.iter().enumerate() {
        let _ = write!(out, " c{}: ", r + 1);
        write_terms(
            &mut out,
            row.coefs.iter().copied(),
            &lp.var_names,
        );
        let _ = write!(out, " {} ", row.relation.symbol());
        write_number(&mut out, row.rhs);
        out.push('\n');
    }
    out.push_str("Bounds\n");
    for (name, &(lo, hi)) in lp.var_names.iter().zip(&lp.bounds) {
        out.push(' ');
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => {
                write_number(&mut out, lo);
                let _ = write!(out, " <= {name} <= ");
                write_number(&mut out, hi);
            }
            (true, false) => {
                let _ = write!(out, "{name} >= ");
                write_number(&mut out, lo);
            }
            (false, true) => {
                let _ = write!(out, "-inf <= {name} <= ");
                write_number(&mut out, hi);
            }
            (false, false) => {
                let _ = write!(out, "{name} free");
            }
        }
        out.push('\n');
    }
    out.push_str("End\n");
    out
}

#[derive(PartialEq, Clone, Copy)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Done,
}

fn parse_number(tok: &str, line: usize) -> Result<f64> {
    match tok.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => tok.parse().map_err(|_| Error::LpParse {
            line,
            msg: format!("expected a number, found `{tok}`"),
        }),
    }
}

fn is_number(tok: &str) -> bool {
    tok.parse::<f64>().is_ok()
}

/// Parses `[+-] [coef] name ...` into (name, coefficient) pairs.
fn parse_expression(text: &str, line: usize) -> Result<Vec<(String, f64)>> {
    let mut terms = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for raw in text.split_whitespace() {
        let mut tok = raw;
        if tok == "+" {
            continue;
        }
        if tok == "-" {
            sign = -sign;
            continue;
        }
        if let Some(rest) = tok.strip_prefix('-') {
            if !is_number(tok) {
                sign = -sign;
                tok = rest;
            }
        } else if let Some(rest) = tok.strip_prefix('+') {
            tok = rest;
        }
        if is_number(tok) {
            coef = Some(parse_number(tok, line)?);
            continue;
        }
        let c = sign * coef.take().unwrap_or(1.0);
        terms.push((tok.to_string(), c));
        sign = 1.0;
    }
    if coef.is_some() {
        return Err(Error::LpParse {
            line,
            msg: "dangling coefficient".into(),
        });
    }
    Ok(terms)
}

fn strip_label(text: &str) -> &str {
    match text.find(':') {
        Some(pos) => &text[pos + 1..],
        None => text,
    }
}

/// Reads back the LP text written by [`export_lp_text`].
/// Named terms, relation and rhs of one parsed row.
type RawRow = (Vec<(String, f64)>, Relation, f64);

pub fn parse_lp_text(text: &str) -> Result<LpProblem> {
    let mut section = Section::Preamble;
    let mut objective_text = String::new();
    let mut pending = String::new();
    let mut pending_line = 0;
    let mut raw_rows: Vec<RawRow> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut bounds: HashMap<usize, (f64, f64)> = HashMap::new();

    let mut intern = |name: &str, names: &mut Vec<String>| -> usize {
        *index.entry(name.to_string()).or_insert_with(|| {
            names.push(name.to_string());
            names.len() - 1
        })
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('\\') {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        match lower.as_str() {
            "minimize" | "minimise" | "min" => {
                section = Section::Objective;
                continue;
            }
            "subject to" | "st" | "s.t." | "such that" => {
                section = Section::Constraints;
                continue;
            }
            "bounds" => {
                section = Section::Bounds;
                continue;
            }
            "end" => {
                section = Section::Done;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Preamble | Section::Done => {
                return Err(Error::LpParse {
                    line: line_no,
                    msg: format!("unexpected content `{line}`"),
                })
            }
            Section::Objective => {
                objective_text.push(' ');
                objective_text.push_str(line);
            }
            Section::Constraints => {
                if pending.is_empty() {
                    pending_line = line_no;
                }
                pending.push(' ');
                pending.push_str(line);
                let body = strip_label(&pending).to_string();
                let relation = [(">=", Relation::Ge), ("<=", Relation::Le), ("=", Relation::Eq)]
                    .into_iter()
                    .find_map(|(sym, rel)| body.find(sym).map(|pos| (pos, sym.len(), rel)));
                if let Some((pos, len, rel)) = relation {
                    let terms = parse_expression(&body[..pos], pending_line)?;
                    let rhs = parse_number(body[pos + len..].trim(), pending_line)?;
                    raw_rows.push((terms, rel, rhs));
                    pending.clear();
                }
            }
            Section::Bounds => {
                let toks: Vec<&str> = line.split_whitespace().collect();
                match toks.as_slice() {
                    [lo, "<=", name, "<=", hi] => {
                        let j = intern(name, &mut names);
                        bounds.insert(j, (parse_number(lo, line_no)?, parse_number(hi, line_no)?));
                    }
                    [name, ">=", lo] => {
                        let j = intern(name, &mut names);
                        bounds.insert(j, (parse_number(lo, line_no)?, f64::INFINITY));
                    }
                    [name, "<=", hi] => {
                        let j = intern(name, &mut names);
                        bounds.insert(j, (0.0, parse_number(hi, line_no)?));
                    }
                    [name, "free"] => {
                        let j = intern(name, &mut names);
                        bounds.insert(j, (f64::NEG_INFINITY, f64::INFINITY));
                    }
                    _ => {
                        return Err(Error::LpParse {
                            line: line_no,
                            msg: format!("unrecognized bound `{line}`"),
                        })
                    }
                }
            }
        }
    }
    if !pending.trim().is_empty() {
        return Err(Error::LpParse {
            line: pending_line,
            msg: "constraint without a relation".into(),
        });
    }
    if section != Section::Done {
        return Err(Error::LpParse {
            line: text.lines().count(),
            msg: "missing End".into(),
        });
    }

    // Bounds list every variable in index order, so intern them first.
    let objective_terms = parse_expression(strip_label(&objective_text), 0)?;
    let mut rows = Vec::with_capacity(raw_rows.len());
    let mut objective_idx = Vec::with_capacity(objective_terms.len());
    for (name, c) in &objective_terms {
        objective_idx.push((intern(name, &mut names), *c));
    }
    for (terms, rel, rhs) in raw_rows {
        let coefs = terms
            .iter()
            .map(|(name, c)| (intern(name, &mut names), *c))
            .collect();
        rows.push(LpRow::new(coefs, rel, rhs));
    }

    let mut lp = LpProblem::new(names);
    for (j, c) in objective_idx {
        lp.objective[j] += c;
    }
    for (j, b) in bounds {
        lp.bounds[j] = b;
    }
    lp.rows = rows;
    Ok(lp)
}
