//! A dense two-phase simplex method over exact rationals, using Bland's rule
//! for both the entering and the leaving variable so it never cycles.

use std::fmt;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::quantale::Rat;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("malformed linear program: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Rat)>,
    pub relation: Relation,
    pub rhs: Rat,
}

/// `maximize objective · x` subject to linear constraints and per-variable
/// bounds. Variables default to `0 ≤ x` with no upper bound.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LpProblem {
    names: Vec<String>,
    lower: Vec<Option<Rat>>,
    upper: Vec<Option<Rat>>,
    objective: Vec<Rat>,
    constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpSolution {
    pub optimum: Rat,
    pub assignment: Vec<Rat>,
}

impl LpProblem {
    pub fn new() -> Self {
        LpProblem::default()
    }

    /// Adds a variable with bounds `lower ≤ x ≤ upper` (`None` = unbounded).
    pub fn add_var(&mut self, name: impl Into<String>, lower: Option<Rat>, upper: Option<Rat>) -> usize {
        self.names.push(name.into());
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.push(Rat::zero());
        self.names.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn set_objective(&mut self, var: usize, coeff: Rat) {
        self.objective[var] = coeff;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, Rat)>, relation: Relation, rhs: Rat) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn objective_value(&self, x: &[Rat]) -> Rat {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Checks every constraint and bound at `x`, returning the first violated one.
    pub fn violation(&self, x: &[Rat]) -> Option<String> {
        if x.len() != self.num_vars() {
            return Some("wrong number of variables".into());
        }
        for (i, v) in x.iter().enumerate() {
            if self.lower[i].as_ref().is_some_and(|l| v < l) || self.upper[i].as_ref().is_some_and(|u| v > u) {
                return Some(format!("bound on {}", self.names[i]));
            }
        }
        for (k, c) in self.constraints.iter().enumerate() {
            let lhs: Rat = c.coeffs.iter().map(|(i, a)| a * &x[*i]).sum();
            let ok = match c.relation {
                Relation::Le => lhs <= c.rhs,
                Relation::Ge => lhs >= c.rhs,
                Relation::Eq => lhs == c.rhs,
            };
            if !ok {
                return Some(format!("constraint #{}", k));
            }
        }
        None
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        for c in &self.constraints {
            if let Some((i, _)) = c.coeffs.iter().find(|(i, _)| *i >= self.num_vars()) {
                return Err(LpError::Malformed(format!("unknown variable index {}", i)));
            }
        }
        Standard::build(self).solve(self)
    }
}

impl fmt::Display for LpProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let term = |i: usize, a: &Rat| format!("{}·{}", a, self.names[i]);
        let obj: Vec<String> = self
            .objective
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_zero())
            .map(|(i, a)| term(i, a))
            .collect();
        writeln!(f, "maximize {}", if obj.is_empty() { "0".into() } else { obj.join(" + ") })?;
        for c in &self.constraints {
            let lhs: Vec<String> = c.coeffs.iter().map(|(i, a)| term(*i, a)).collect();
            let rel = match c.relation {
                Relation::Le => "<=",
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            writeln!(f, "  {} {} {}", lhs.join(" + "), rel, c.rhs)?;
        }
        for i in 0..self.num_vars() {
            let show = |b: &Option<Rat>| b.as_ref().map_or("*".to_string(), |r| r.to_string());
            writeln!(f, "  {} <= {} <= {}", show(&self.lower[i]), self.names[i], show(&self.upper[i]))?;
        }
        Ok(())
    }
}

/// How an original variable is expressed through non-negative columns:
/// `x = offset + Σ sign · y_col`.
struct VarMap {
    offset: Rat,
    cols: Vec<(usize, bool)>,
}

/// The problem in equality form `A y = b`, `y ≥ 0`, `b ≥ 0`, as a tableau.
struct Standard {
    vars: Vec<VarMap>,
    rows: Vec<Vec<Rat>>, // each row: columns followed by rhs
    basis: Vec<usize>,
    structural: usize,   // number of y columns
    first_artificial: usize,
    width: usize,
}

impl Standard {
    fn build(lp: &LpProblem) -> Standard {
        let mut vars = Vec::new();
        let mut ncols = 0;
        for i in 0..lp.num_vars() {
            match &lp.lower[i] {
                Some(l) => {
                    vars.push(VarMap { offset: l.clone(), cols: vec![(ncols, true)] });
                    ncols += 1;
                }
                None => {
                    vars.push(VarMap { offset: Rat::zero(), cols: vec![(ncols, true), (ncols + 1, false)] });
                    ncols += 2;
                }
            }
        }
        // Collect rows as (dense coeffs over y, relation, rhs).
        let mut raw: Vec<(Vec<Rat>, Relation, Rat)> = Vec::new();
        let push_row = |raw: &mut Vec<(Vec<Rat>, Relation, Rat)>, coeffs: &[(usize, Rat)], rel: Relation, rhs: &Rat| {
            let mut row = vec![Rat::zero(); ncols];
            let mut b = rhs.clone();
            for (i, a) in coeffs {
                b -= a * &vars[*i].offset;
                for &(col, pos) in &vars[*i].cols {
                    if pos {
                        row[col] += a;
                    } else {
                        row[col] -= a;
                    }
                }
            }
            raw.push((row, rel, b));
        };
        for c in &lp.constraints {
            push_row(&mut raw, &c.coeffs, c.relation, &c.rhs);
        }
        for i in 0..lp.num_vars() {
            if let Some(u) = &lp.upper[i] {
                push_row(&mut raw, &[(i, Rat::from_integer(1.into()))], Relation::Le, u);
            }
        }
        // Normalize to b ≥ 0.
        for (row, rel, b) in raw.iter_mut() {
            if b.is_negative() {
                for a in row.iter_mut() {
                    *a = -a.clone();
                }
                *b = -b.clone();
                *rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
        }
        let slacks = raw.iter().filter(|(_, r, _)| *r != Relation::Eq).count();
        let artificials = raw.iter().filter(|(_, r, _)| *r != Relation::Le).count();
        let first_artificial = ncols + slacks;
        let width = first_artificial + artificials;
        let mut rows = Vec::with_capacity(raw.len());
        let mut basis = Vec::with_capacity(raw.len());
        let (mut s, mut a) = (ncols, first_artificial);
        for (coeffs, rel, b) in raw {
            let mut row = coeffs;
            row.resize(width + 1, Rat::zero());
            match rel {
                Relation::Le => {
                    row[s] = Rat::from_integer(1.into());
                    basis.push(s);
                    s += 1;
                }
                Relation::Ge => {
                    row[s] = Rat::from_integer((-1).into());
                    s += 1;
                    row[a] = Rat::from_integer(1.into());
                    basis.push(a);
                    a += 1;
                }
                Relation::Eq => {
                    row[a] = Rat::from_integer(1.into());
                    basis.push(a);
                    a += 1;
                }
            }
            row[width] = b;
            rows.push(row);
        }
        Standard { vars, rows, basis, structural: ncols, first_artificial, width }
    }

    fn pivot(&mut self, obj: &mut [Rat], r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for a in self.rows[r].iter_mut() {
            *a /= &p;
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (a, b) in row.iter_mut().zip(&prow) {
                    *a -= &f * b;
                }
            }
        }
        if !obj[c].is_zero() {
            let f = obj[c].clone();
            for (a, b) in obj.iter_mut().zip(&prow) {
                *a -= &f * b;
            }
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations on the reduced-cost row `obj` (maximization:
    /// a negative entry improves). Columns `>= allowed` never enter.
    fn iterate(&mut self, obj: &mut [Rat], allowed: usize) -> Result<(), LpError> {
        loop {
            let Some(c) = (0..allowed).find(|&j| obj[j].is_negative()) else {
                return Ok(());
            };
            let mut best: Option<(usize, Rat)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c].is_positive() {
                    let ratio = &row[self.width] / &row[c];
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = best else {
                return Err(LpError::Unbounded);
            };
            self.pivot(obj, r, c);
        }
    }

    fn objective_row(&self, cost: &[Rat]) -> Vec<Rat> {
        let mut obj: Vec<Rat> = cost.iter().map(|c| -c.clone()).collect();
        obj.resize(self.width + 1, Rat::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            if !obj[b].is_zero() {
                let f = obj[b].clone();
                for (a, x) in obj.iter_mut().zip(&self.rows[i]) {
                    *a -= &f * x;
                }
            }
        }
        obj
    }

    fn solve(mut self, lp: &LpProblem) -> Result<LpSolution, LpError> {
        // Phase 1: maximize −Σ artificials.
        if self.first_artificial < self.width {
            let mut cost = vec![Rat::zero(); self.width];
            for c in cost.iter_mut().skip(self.first_artificial) {
                *c = Rat::from_integer((-1).into());
            }
            let mut obj = self.objective_row(&cost);
            self.iterate(&mut obj, self.width)?;
            if obj[self.width].is_negative() {
                return Err(LpError::Infeasible);
            }
            // Drive remaining (zero-valued) artificials out of the basis.
            let mut r = 0;
            while r < self.rows.len() {
                if self.basis[r] >= self.first_artificial {
                    match (0..self.first_artificial).find(|&j| !self.rows[r][j].is_zero()) {
                        Some(c) => self.pivot(&mut obj, r, c),
                        None => {
                            self.rows.remove(r);
                            self.basis.remove(r);
                            continue;
                        }
                    }
                }
                r += 1;
            }
        }
        // Phase 2.
        let mut cost = vec![Rat::zero(); self.width];
        for (i, vm) in self.vars.iter().enumerate() {
            for &(col, pos) in &vm.cols {
                cost[col] = if pos { lp.objective[i].clone() } else { -lp.objective[i].clone() };
            }
        }
        let mut obj = self.objective_row(&cost);
        self.iterate(&mut obj, self.first_artificial)?;
        let mut y = vec![Rat::zero(); self.structural];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.structural {
                y[b] = self.rows[i][self.width].clone();
            }
        }
        let assignment: Vec<Rat> = self
            .vars
            .iter()
            .map(|vm| {
                vm.cols.iter().fold(vm.offset.clone(), |acc, &(col, pos)| {
                    if pos {
                        acc + &y[col]
                    } else {
                        acc - &y[col]
                    }
                })
            })
            .collect();
        let optimum = lp.objective_value(&assignment);
        Ok(LpSolution { optimum, assignment })
    }
}
