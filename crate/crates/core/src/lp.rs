//! Dense two-phase simplex over exact rationals.
//!
//! Bland's rule is used for both entering and leaving choices, so the solver
//! never cycles and is fully deterministic. Finite upper bounds become extra
//! `<=` rows internally; their multipliers surface as reduced costs.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub sense: Sense,
    pub rhs: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bound {
    pub lo: Rational,
    pub hi: Option<Rational>,
}

impl Bound {
    pub fn non_negative() -> Self {
        Self {
            lo: Rational::zero(),
            hi: None,
        }
    }

    pub fn unit() -> Self {
        Self {
            lo: Rational::zero(),
            hi: Some(Rational::one()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("row {row} has {got} coefficients, expected {expected}")]
    RowLength { row: usize, got: usize, expected: usize },
    #[error("{got} bounds for {expected} variables")]
    BoundCount { got: usize, expected: usize },
    #[error("variable {0} has lower bound above upper bound")]
    EmptyBound(usize),
}

/// `maximize c·x` subject to rows and variable bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    objective: Vec<Rational>,
    constraints: Vec<Constraint>,
    bounds: Vec<Bound>,
}

impl LinearProgram {
    /// A program over `vars` variables, all `>= 0`, zero objective.
    pub fn new(vars: usize) -> Self {
        Self {
            objective: vec![Rational::zero(); vars],
            constraints: Vec::new(),
            bounds: vec![Bound::non_negative(); vars],
        }
    }

    pub fn from_parts(
        objective: Vec<Rational>,
        constraints: Vec<Constraint>,
        bounds: Vec<Bound>,
    ) -> Result<Self, LpError> {
        let n = objective.len();
        if bounds.len() != n {
            return Err(LpError::BoundCount {
                got: bounds.len(),
                expected: n,
            });
        }
        for (row, c) in constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(LpError::RowLength {
                    row,
                    got: c.coeffs.len(),
                    expected: n,
                });
            }
        }
        for (j, b) in bounds.iter().enumerate() {
            if matches!(&b.hi, Some(hi) if *hi < b.lo) {
                return Err(LpError::EmptyBound(j));
            }
        }
        Ok(Self {
            objective,
            constraints,
            bounds,
        })
    }

    pub fn vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[Rational] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn bounds(&self) -> &[Bound] {
        &self.bounds
    }

    pub fn set_objective(&mut self, objective: Vec<Rational>) {
        assert_eq!(objective.len(), self.vars(), "objective length");
        self.objective = objective;
    }

    pub fn set_bound(&mut self, var: usize, bound: Bound) {
        assert!(
            !matches!(&bound.hi, Some(hi) if *hi < bound.lo),
            "empty bound for variable {var}"
        );
        self.bounds[var] = bound;
    }

    /// Appends a row and returns its index.
    pub fn add_constraint(&mut self, coeffs: Vec<Rational>, sense: Sense, rhs: Rational) -> usize {
        assert_eq!(coeffs.len(), self.vars(), "constraint length");
        self.constraints.push(Constraint { coeffs, sense, rhs });
        self.constraints.len() - 1
    }

    /// Appends a row given as sparse `(var, coeff)` pairs.
    pub fn add_sparse(&mut self, terms: &[(usize, Rational)], sense: Sense, rhs: Rational) -> usize {
        let mut coeffs = vec![Rational::zero(); self.vars()];
        for (j, c) in terms {
            coeffs[*j] += c;
        }
        self.add_constraint(coeffs, sense, rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub status: Status,
    /// Primal values; empty unless optimal.
    pub primal: Vec<Rational>,
    /// One multiplier per row. For a maximization, `<=` rows get `y >= 0`
    /// and `>=` rows get `y <= 0`.
    pub duals: Vec<Rational>,
    /// `c_j - a_j·y` per variable.
    pub reduced_costs: Vec<Rational>,
    pub objective: Rational,
}

impl LpSolution {
    fn without_point(status: Status) -> Self {
        Self {
            status,
            primal: Vec::new(),
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            objective: Rational::zero(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

/// Dual objective `b·y + sum_j max_{x_j in [lo, hi]} d_j x_j`. Equals the
/// primal objective at an optimum.
pub fn dual_objective(lp: &LinearProgram, sol: &LpSolution) -> Option<Rational> {
    let mut total: Rational = lp
        .constraints
        .iter()
        .zip(&sol.duals)
        .map(|(c, y)| &c.rhs * y)
        .sum();
    for (d, b) in sol.reduced_costs.iter().zip(&lp.bounds) {
        if d.is_positive() {
            total += d * b.hi.as_ref()?;
        } else if d.is_negative() {
            total += d * &b.lo;
        }
    }
    Some(total)
}

/// Checks primal feasibility, dual sign conditions, complementary slackness
/// and strong duality exactly. Returns a description of the first violation.
pub fn certify(lp: &LinearProgram, sol: &LpSolution) -> Result<(), String> {
    if sol.status != Status::Optimal {
        return Err(format!("status {:?}", sol.status));
    }
    let x = &sol.primal;
    for (j, (xj, b)) in x.iter().zip(&lp.bounds).enumerate() {
        if *xj < b.lo || matches!(&b.hi, Some(hi) if xj > hi) {
            return Err(format!("x[{j}] violates its bounds"));
        }
    }
    for (r, (c, y)) in lp.constraints.iter().zip(&sol.duals).enumerate() {
        let lhs: Rational = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
        let slack = &lhs - &c.rhs;
        let ok = match c.sense {
            Sense::Le => !slack.is_positive() && !y.is_negative(),
            Sense::Ge => !slack.is_negative() && !y.is_positive(),
            Sense::Eq => slack.is_zero(),
        };
        if !ok {
            return Err(format!("row {r} infeasible or dual sign wrong"));
        }
        if !slack.is_zero() && !y.is_zero() {
            return Err(format!("row {r}: slack and dual both nonzero"));
        }
    }
    for (j, (d, (xj, b))) in sol.reduced_costs.iter().zip(x.iter().zip(&lp.bounds)).enumerate() {
        let expected: Rational = &lp.objective[j]
            - lp
                .constraints
                .iter()
                .zip(&sol.duals)
                .map(|(c, y)| &c.coeffs[j] * y)
                .sum::<Rational>();
        if *d != expected {
            return Err(format!("reduced cost of x[{j}] inconsistent with duals"));
        }
        let at_lo = *xj == b.lo;
        let at_hi = matches!(&b.hi, Some(hi) if xj == hi);
        if (d.is_positive() && !at_hi) || (d.is_negative() && !at_lo) {
            return Err(format!("x[{j}] violates complementary slackness"));
        }
    }
    let primal: Rational = lp.objective.iter().zip(x).map(|(c, v)| c * v).sum();
    if primal != sol.objective {
        return Err("reported objective differs from c·x".into());
    }
    match dual_objective(lp, sol) {
        Some(d) if d == primal => Ok(()),
        Some(_) => Err("strong duality fails".into()),
        None => Err("positive reduced cost on an unbounded-above variable".into()),
    }
}

/// Standard-form tableau: rows `T x = rhs`, `x >= 0`, one basic column per row.
struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    /// Column that formed the initial identity in each row (slack or artificial).
    initial: Vec<usize>,
    artificial_from: usize,
    columns: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col].clone();
        if !p.is_one() {
            let inv = p.recip();
            for v in self.rows[row].iter_mut() {
                if !v.is_zero() {
                    *v *= &inv;
                }
            }
            self.rhs[row] *= &inv;
        }
        let pivot_row = self.rows[row].clone();
        let pivot_rhs = self.rhs[row].clone();
        for r in 0..self.rows.len() {
            if r == row || self.rows[r][col].is_zero() {
                continue;
            }
            let factor = self.rows[r][col].clone();
            for (v, pv) in self.rows[r].iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &factor * pv;
                }
            }
            self.rhs[r] -= &factor * &pivot_rhs;
        }
        self.basis[row] = col;
    }

    fn reduced_costs(&self, cost: &[Rational]) -> Vec<Rational> {
        let mut d = cost.to_vec();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (dj, a) in d.iter_mut().zip(&self.rows[r]) {
                if !a.is_zero() {
                    *dj -= cb * a;
                }
            }
        }
        d
    }

    /// Maximizes `cost·x` over columns `< allowed` using Bland's rule.
    fn optimize(&mut self, cost: &[Rational], allowed: usize) -> Outcome {
        loop {
            let d = self.reduced_costs(cost);
            let Some(enter) = (0..allowed).find(|&j| d[j].is_positive()) else {
                return Outcome::Optimal;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][enter];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[r] / a;
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => {
                        ratio < *best || (ratio == *best && self.basis[r] < self.basis[*lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return Outcome::Unbounded,
            }
        }
    }
}

struct Prepared {
    tableau: Tableau,
    /// Per internal row: original row index (None for bound rows) and sign flip.
    row_origin: Vec<(Option<usize>, bool)>,
    vars: usize,
}

fn prepare(lp: &LinearProgram) -> Prepared {
    let n = lp.vars();
    // shift x = lo + x'
    let mut raw: Vec<(Vec<Rational>, Sense, Rational, Option<usize>)> = Vec::new();
    for (r, c) in lp.constraints.iter().enumerate() {
        let shift: Rational = c.coeffs.iter().zip(&lp.bounds).map(|(a, b)| a * &b.lo).sum();
        raw.push((c.coeffs.clone(), c.sense, &c.rhs - shift, Some(r)));
    }
    for (j, b) in lp.bounds.iter().enumerate() {
        if let Some(hi) = &b.hi {
            let mut row = vec![Rational::zero(); n];
            row[j] = Rational::one();
            raw.push((row, Sense::Le, hi - &b.lo, None));
        }
    }
    let mut row_origin = Vec::with_capacity(raw.len());
    for row in raw.iter_mut() {
        let flip = row.2.is_negative();
        if flip {
            for v in row.0.iter_mut() {
                *v = -v.clone();
            }
            row.2 = -row.2.clone();
            row.1 = match row.1 {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
        row_origin.push((row.3, flip));
    }
    let slack_count = raw.iter().filter(|r| r.1 != Sense::Eq).count();
    let artificial_count = raw.iter().filter(|r| r.1 != Sense::Le).count();
    let artificial_from = n + slack_count;
    let columns = artificial_from + artificial_count;
    let mut rows = Vec::with_capacity(raw.len());
    let mut rhs = Vec::with_capacity(raw.len());
    let mut basis = Vec::with_capacity(raw.len());
    let mut next_slack = n;
    let mut next_art = artificial_from;
    for (coeffs, sense, b, _) in raw {
        let mut row = coeffs;
        row.resize(columns, Rational::zero());
        match sense {
            Sense::Le => {
                row[next_slack] = Rational::one();
                basis.push(next_slack);
                next_slack += 1;
            }
            Sense::Ge => {
                row[next_slack] = -Rational::one();
                next_slack += 1;
                row[next_art] = Rational::one();
                basis.push(next_art);
                next_art += 1;
            }
            Sense::Eq => {
                row[next_art] = Rational::one();
                basis.push(next_art);
                next_art += 1;
            }
        }
        rows.push(row);
        rhs.push(b);
    }
    let initial = basis.clone();
    Prepared {
        tableau: Tableau {
            rows,
            rhs,
            basis,
            initial,
            artificial_from,
            columns,
        },
        row_origin,
        vars: n,
    }
}

/// Phase one. Returns false when the feasible region is empty.
fn phase_one(t: &mut Tableau) -> bool {
    if t.artificial_from == t.columns {
        return true;
    }
    let mut cost = vec![Rational::zero(); t.columns];
    for c in cost.iter_mut().skip(t.artificial_from) {
        *c = -Rational::one();
    }
    // bounded below by zero, so never unbounded
    let _ = t.optimize(&cost, t.columns);
    let infeasibility: Rational = t
        .basis
        .iter()
        .zip(&t.rhs)
        .filter(|(&b, _)| b >= t.artificial_from)
        .map(|(_, v)| v.clone())
        .sum();
    if infeasibility.is_positive() {
        return false;
    }
    // drive zero-level artificials out of the basis; rows with no other
    // nonzero entry are redundant and keep their artificial forever
    for r in 0..t.rows.len() {
        if t.basis[r] < t.artificial_from {
            continue;
        }
        if let Some(col) = (0..t.artificial_from).find(|&j| !t.rows[r][j].is_zero()) {
            t.pivot(r, col);
        }
    }
    true
}

/// Solves the program to optimality, returning a basic (vertex) solution with
/// exact duals.
pub fn solve(lp: &LinearProgram) -> LpSolution {
    let Prepared {
        mut tableau,
        row_origin,
        vars,
    } = prepare(lp);
    if !phase_one(&mut tableau) {
        return LpSolution::without_point(Status::Infeasible);
    }
    let mut cost = vec![Rational::zero(); tableau.columns];
    cost[..vars].clone_from_slice(&lp.objective);
    if let Outcome::Unbounded = tableau.optimize(&cost, tableau.artificial_from) {
        return LpSolution::without_point(Status::Unbounded);
    }

    let mut primal: Vec<Rational> = lp.bounds.iter().map(|b| b.lo.clone()).collect();
    for (r, &b) in tableau.basis.iter().enumerate() {
        if b < vars {
            primal[b] += &tableau.rhs[r];
        }
    }
    // y_r = c_B · (B^{-1} e_r); column `initial[r]` of the tableau is B^{-1} e_r
    let mut duals = vec![Rational::zero(); lp.constraints.len()];
    for (r, &(origin, flip)) in row_origin.iter().enumerate() {
        let Some(orig) = origin else { continue };
        let col = tableau.initial[r];
        let mut y: Rational = tableau
            .basis
            .iter()
            .enumerate()
            .map(|(k, &b)| &cost[b] * &tableau.rows[k][col])
            .sum();
        if flip {
            y = -y;
        }
        duals[orig] = y;
    }
    let reduced_costs = (0..vars)
        .map(|j| {
            &lp.objective[j]
                - lp
                    .constraints
                    .iter()
                    .zip(&duals)
                    .map(|(c, y)| &c.coeffs[j] * y)
                    .sum::<Rational>()
        })
        .collect();
    let objective = lp.objective.iter().zip(&primal).map(|(c, x)| c * x).sum();
    LpSolution {
        status: Status::Optimal,
        primal,
        duals,
        reduced_costs,
        objective,
    }
}

/// True iff the feasible region is nonempty (phase one only).
pub fn check_feasibility(lp: &LinearProgram) -> bool {
    let Prepared { mut tableau, .. } = prepare(lp);
    phase_one(&mut tableau)
}

/// Convenience for tests and examples: `sum_j coeffs_j x_j` as text.
pub fn describe_row(c: &Constraint) -> String {
    let terms: Vec<String> = c
        .coeffs
        .iter()
        .enumerate()
        .filter(|(_, a)| !a.is_zero())
        .map(|(j, a)| format!("{}·x{j}", rational::format(a)))
        .collect();
    let op = match c.sense {
        Sense::Le => "<=",
        Sense::Ge => ">=",
        Sense::Eq => "=",
    };
    format!("{} {op} {}", terms.join(" + "), rational::format(&c.rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn single_capacity_row() {
        let mut lp = LinearProgram::new(1);
        lp.set_objective(vec![int(1)]);
        lp.add_constraint(vec![int(1)], Sense::Le, int(5));
        let sol = solve(&lp);
        assert_eq!(sol.status, Status::Optimal);
        assert_eq!(sol.primal, vec![int(5)]);
        assert_eq!(sol.duals, vec![int(1)]);
        certify(&lp, &sol).unwrap();
    }

    #[test]
    fn returns_a_vertex() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![int(1), int(1)]);
        lp.set_bound(0, Bound::unit());
        lp.set_bound(1, Bound::unit());
        lp.add_constraint(vec![int(1), int(1)], Sense::Le, int(1));
        let sol = solve(&lp);
        assert_eq!(sol.objective, int(1));
        let mut xs = sol.primal.clone();
        xs.sort();
        assert_eq!(xs, vec![int(0), int(1)]);
        certify(&lp, &sol).unwrap();
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.add_constraint(vec![int(1)], Sense::Ge, int(2));
        lp.add_constraint(vec![int(1)], Sense::Le, int(1));
        assert!(!check_feasibility(&lp));
        assert_eq!(solve(&lp).status, Status::Infeasible);

        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![int(1), int(0)]);
        lp.add_constraint(vec![int(1), int(-1)], Sense::Le, int(1));
        assert_eq!(solve(&lp).status, Status::Unbounded);
    }

    #[test]
    fn empty_constraint_set_is_feasible() {
        assert!(check_feasibility(&LinearProgram::new(3)));
        assert!(check_feasibility(&LinearProgram::new(0)));
    }

    #[test]
    fn equality_ge_and_shifted_bounds() {
        // max 2x + 3y, x + y = 4, x - y >= -1, 1 <= x <= 3, y in [0, 2]
        let lp = LinearProgram::from_parts(
            vec![int(2), int(3)],
            vec![
                Constraint {
                    coeffs: vec![int(1), int(1)],
                    sense: Sense::Eq,
                    rhs: int(4),
                },
                Constraint {
                    coeffs: vec![int(1), int(-1)],
                    sense: Sense::Ge,
                    rhs: int(-1),
                },
            ],
            vec![
                Bound {
                    lo: int(1),
                    hi: Some(int(3)),
                },
                Bound {
                    lo: int(0),
                    hi: Some(int(2)),
                },
            ],
        )
        .unwrap();
        let sol = solve(&lp);
        assert_eq!(sol.primal, vec![int(2), int(2)]);
        assert_eq!(sol.objective, int(10));
        certify(&lp, &sol).unwrap();
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![int(1), int(2)]);
        lp.add_constraint(vec![int(1), int(1)], Sense::Eq, int(1));
        lp.add_constraint(vec![int(2), int(2)], Sense::Eq, int(2));
        let sol = solve(&lp);
        assert_eq!(sol.objective, int(2));
        certify(&lp, &sol).unwrap();
    }

    #[test]
    fn fractional_optimum() {
        // max x + y, 2x + y <= 2, x + 3y <= 3
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![int(1), int(1)]);
        lp.add_constraint(vec![int(2), int(1)], Sense::Le, int(2));
        lp.add_constraint(vec![int(1), int(3)], Sense::Le, int(3));
        let sol = solve(&lp);
        assert_eq!(sol.primal, vec![ratio(3, 5), ratio(4, 5)]);
        assert_eq!(sol.duals, vec![ratio(2, 5), ratio(1, 5)]);
        certify(&lp, &sol).unwrap();
    }

    #[test]
    fn rejects_ragged_rows() {
        let err = LinearProgram::from_parts(
            vec![int(1)],
            vec![Constraint {
                coeffs: vec![int(1), int(1)],
                sense: Sense::Le,
                rhs: int(1),
            }],
            vec![Bound::non_negative()],
        );
        assert!(matches!(err, Err(LpError::RowLength { row: 0, .. })));
    }
}
