//! Dense bounded-variable primal simplex.
//!
//! Two phases over a full tableau with Bland's rule for both the entering
//! and the leaving variable. Variables must have a finite lower bound; upper
//! bounds may be infinite. Sized for the small assignment relaxations used
//! in this crate, not for general LP workloads.

use thiserror::Error;

/// Feasibility and optimality tolerance.
pub const TOLERANCE: f64 = 1e-9;

const PIVOT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `minimize objective . x` subject to `constraints` and `bounds`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
    bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("coefficient vector has length {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("variable {var} has invalid bounds [{lower}, {upper}]")]
    Bounds { var: usize, lower: f64, upper: f64 },
    #[error("non-finite coefficient")]
    NonFinite,
    #[error("simplex exceeded its iteration cap of {0} pivots")]
    IterationLimit(usize),
}

impl LinearProgram {
    /// A program over `num_vars` variables in `[0, +inf)` with a zero objective.
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn set_objective(&mut self, objective: Vec<f64>) -> Result<(), LpError> {
        self.check_len(objective.len())?;
        if objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite);
        }
        self.objective = objective;
        Ok(())
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Result<(), LpError> {
        self.check_len(coeffs.len())?;
        if !rhs.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite);
        }
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        Ok(())
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> Result<(), LpError> {
        if var >= self.num_vars {
            return Err(LpError::Dimension {
                expected: self.num_vars,
                found: var + 1,
            });
        }
        if !lower.is_finite() || upper.is_nan() || lower > upper {
            return Err(LpError::Bounds { var, lower, upper });
        }
        self.bounds[var] = (lower, upper);
        Ok(())
    }

    fn check_len(&self, found: usize) -> Result<(), LpError> {
        if found == self.num_vars {
            Ok(())
        } else {
            Err(LpError::Dimension {
                expected: self.num_vars,
                found,
            })
        }
    }

    /// Largest violation of a constraint or bound by `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (&(lo, hi), &v) in self.bounds.iter().zip(x) {
            worst = worst.max(lo - v).max(v - hi);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Option<Vec<f64>>,
    pub objective_value: Option<f64>,
}

impl LpSolution {
    fn without_point(status: LpStatus) -> Self {
        Self {
            status,
            values: None,
            objective_value: None,
        }
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    /// Current value of the basic variable of each row.
    beta: Vec<f64>,
    basis: Vec<usize>,
    upper: Vec<f64>,
    at_upper: Vec<bool>,
    is_basic: Vec<bool>,
    /// Columns that may enter the basis.
    enterable: Vec<bool>,
    pivots: usize,
    pivot_cap: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

impl Tableau {
    fn step(&mut self, cost: &[f64]) -> Result<Step, LpError> {
        let ncols = self.upper.len();
        let mut entering = None;
        for j in 0..ncols {
            if self.is_basic[j] || !self.enterable[j] || self.upper[j] <= PIVOT_TOLERANCE {
                continue;
            }
            let mut d = cost[j];
            for (r, row) in self.rows.iter().enumerate() {
                let cb = cost[self.basis[r]];
                if cb != 0.0 {
                    d -= cb * row[j];
                }
            }
            if (!self.at_upper[j] && d < -TOLERANCE) || (self.at_upper[j] && d > TOLERANCE) {
                entering = Some(j);
                break;
            }
        }
        let Some(j) = entering else {
            return Ok(Step::Optimal);
        };
        if self.pivots >= self.pivot_cap {
            return Err(LpError::IterationLimit(self.pivot_cap));
        }
        self.pivots += 1;

        let dir = if self.at_upper[j] { -1.0 } else { 1.0 };
        let mut best: Option<(f64, usize, usize)> = None; // (theta, basic var, row)
        for (r, row) in self.rows.iter().enumerate() {
            let alpha = row[j] * dir;
            let b = self.basis[r];
            let theta = if alpha > PIVOT_TOLERANCE {
                self.beta[r].max(0.0) / alpha
            } else if alpha < -PIVOT_TOLERANCE && self.upper[b].is_finite() {
                (self.upper[b] - self.beta[r]).max(0.0) / -alpha
            } else {
                continue;
            };
            let better = match best {
                None => true,
                Some((t, bv, _)) => theta < t - TOLERANCE || (theta <= t + TOLERANCE && b < bv),
            };
            if better {
                best = Some((theta, b, r));
            }
        }

        let flip_len = self.upper[j];
        match best {
            None if flip_len.is_infinite() => return Ok(Step::Unbounded),
            Some((theta, _, _)) if theta < flip_len => {
                let (_, _, r) = best.expect("checked");
                self.pivot(r, j, dir, theta);
            }
            _ => {
                // bound flip: the entering variable reaches its other bound first
                for (r, row) in self.rows.iter().enumerate() {
                    self.beta[r] -= row[j] * dir * flip_len;
                }
                self.at_upper[j] = !self.at_upper[j];
            }
        }
        Ok(Step::Moved)
    }

    fn pivot(&mut self, r: usize, j: usize, dir: f64, theta: f64) {
        for (k, row) in self.rows.iter().enumerate() {
            self.beta[k] -= row[j] * dir * theta;
        }
        let leaving = self.basis[r];
        let alpha = self.rows[r][j] * dir;
        self.at_upper[leaving] = alpha < 0.0;
        self.is_basic[leaving] = false;
        self.beta[r] = if dir > 0.0 { theta } else { self.upper[j] - theta };
        self.basis[r] = j;
        self.is_basic[j] = true;
        self.at_upper[j] = false;

        let pivot = self.rows[r][j];
        for v in self.rows[r].iter_mut() {
            *v /= pivot;
        }
        let pivot_row = self.rows[r].clone();
        for (k, row) in self.rows.iter_mut().enumerate() {
            if k == r {
                continue;
            }
            let factor = row[j];
            if factor == 0.0 {
                continue;
            }
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
            row[j] = 0.0;
        }
        for v in self.beta.iter_mut() {
            if v.abs() < 1e-13 {
                *v = 0.0;
            }
        }
    }

    fn run(&mut self, cost: &[f64]) -> Result<Step, LpError> {
        loop {
            match self.step(cost)? {
                Step::Moved => continue,
                done => return Ok(done),
            }
        }
    }

    fn value(&self, col: usize) -> f64 {
        if self.is_basic[col] {
            let r = self.basis.iter().position(|&b| b == col).expect("basic column");
            self.beta[r]
        } else if self.at_upper[col] {
            self.upper[col]
        } else {
            0.0
        }
    }
}

/// Solves `lp` to optimality, or reports infeasibility/unboundedness.
///
/// Fails with [`LpError::IterationLimit`] after `50 * (vars + constraints)`
/// pivots.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let n = lp.num_vars;
    let m = lp.constraints.len();
    for (var, &(lower, upper)) in lp.bounds.iter().enumerate() {
        if !lower.is_finite() || lower > upper {
            return Err(LpError::Bounds { var, lower, upper });
        }
    }

    // Columns: shifted structurals, one slack per inequality, one artificial per row.
    let slack_of: Vec<Option<usize>> = {
        let mut next = n;
        lp.constraints
            .iter()
            .map(|c| {
                (c.relation != Relation::Eq).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    };
    let num_slack = slack_of.iter().flatten().count();
    let first_art = n + num_slack;
    let ncols = first_art + m;

    let mut rows = vec![vec![0.0; ncols]; m];
    let mut beta = vec![0.0; m];
    for (r, c) in lp.constraints.iter().enumerate() {
        let shift: f64 = c.coeffs.iter().zip(&lp.bounds).map(|(a, b)| a * b.0).sum();
        let mut rhs = c.rhs - shift;
        rows[r][..n].copy_from_slice(&c.coeffs);
        if let Some(s) = slack_of[r] {
            rows[r][s] = if c.relation == Relation::Le { 1.0 } else { -1.0 };
        }
        if rhs < 0.0 {
            rows[r].iter_mut().for_each(|v| *v = -*v);
            rhs = -rhs;
        }
        rows[r][first_art + r] = 1.0;
        beta[r] = rhs;
    }

    let mut upper = vec![f64::INFINITY; ncols];
    for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
        upper[j] = hi - lo;
    }
    let mut is_basic = vec![false; ncols];
    for r in 0..m {
        is_basic[first_art + r] = true;
    }
    let mut tab = Tableau {
        rows,
        beta,
        basis: (first_art..ncols).collect(),
        upper,
        at_upper: vec![false; ncols],
        is_basic,
        enterable: vec![true; ncols],
        pivots: 0,
        pivot_cap: 50 * (n + m).max(1),
    };

    let mut phase1 = vec![0.0; ncols];
    phase1[first_art..].iter_mut().for_each(|c| *c = 1.0);
    tab.run(&phase1)?;
    let infeasibility: f64 = (first_art..ncols).map(|c| tab.value(c)).sum();
    let scale = 1.0 + lp.constraints.iter().map(|c| c.rhs.abs()).fold(0.0, f64::max);
    if infeasibility > TOLERANCE * scale {
        return Ok(LpSolution::without_point(LpStatus::Infeasible));
    }

    for c in first_art..ncols {
        tab.enterable[c] = false;
        tab.upper[c] = 0.0;
    }
    let mut phase2 = vec![0.0; ncols];
    phase2[..n].copy_from_slice(&lp.objective);
    if let Step::Unbounded = tab.run(&phase2)? {
        return Ok(LpSolution::without_point(LpStatus::Unbounded));
    }

    let values: Vec<f64> = (0..n)
        .map(|j| {
            let (lo, hi) = lp.bounds[j];
            (lo + tab.value(j)).clamp(lo, hi)
        })
        .collect();
    let objective_value = values.iter().zip(&lp.objective).map(|(x, c)| x * c).sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        values: Some(values),
        objective_value: Some(objective_value),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_lower_bound_constraint() {
        let mut lp = LinearProgram::new(1);
        lp.set_objective(vec![1.0]).unwrap();
        lp.set_bounds(0, 0.0, 10.0).unwrap();
        lp.add_constraint(vec![1.0], Relation::Ge, 3.0).unwrap();
        let sol = lp_solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.values.unwrap()[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_equalities() {
        let mut lp = LinearProgram::new(1);
        lp.add_constraint(vec![1.0], Relation::Eq, 1.0).unwrap();
        lp.add_constraint(vec![1.0], Relation::Eq, 2.0).unwrap();
        assert_eq!(lp_solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    // Vertices of {x + 2y >= 4, 3x + y >= 6, x,y >= 0}: (0,6), (1.6,1.2), (4,0);
    // x + y evaluates to 6, 2.8 and 4 there.
    #[test]
    fn two_variable_covering_lp() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![1.0, 1.0]).unwrap();
        lp.add_constraint(vec![1.0, 2.0], Relation::Ge, 4.0).unwrap();
        lp.add_constraint(vec![3.0, 1.0], Relation::Ge, 6.0).unwrap();
        let sol = lp_solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        let x = sol.values.unwrap();
        assert!((sol.objective_value.unwrap() - 2.8).abs() < 1e-9);
        assert!((x[0] - 1.6).abs() < 1e-9 && (x[1] - 1.2).abs() < 1e-9);
    }

    #[test]
    fn unbounded_direction() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![-1.0, 0.0]).unwrap();
        lp.add_constraint(vec![1.0, -1.0], Relation::Le, 1.0).unwrap();
        assert_eq!(lp_solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn upper_bounds_and_shifted_lower_bounds() {
        // max x + y with x in [1, 2], y in [0.5, 3], x + y <= 4
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![-1.0, -1.0]).unwrap();
        lp.set_bounds(0, 1.0, 2.0).unwrap();
        lp.set_bounds(1, 0.5, 3.0).unwrap();
        lp.add_constraint(vec![1.0, 1.0], Relation::Le, 4.0).unwrap();
        let sol = lp_solve(&lp).unwrap();
        assert!((sol.objective_value.unwrap() + 4.0).abs() < 1e-9);
        let x = sol.values.unwrap();
        assert!(lp.max_violation(&x) <= 1e-9);
    }

    #[test]
    fn bad_input_is_rejected() {
        let mut lp = LinearProgram::new(2);
        assert!(matches!(
            lp.add_constraint(vec![1.0], Relation::Le, 1.0),
            Err(LpError::Dimension { expected: 2, found: 1 })
        ));
        assert!(lp.set_bounds(0, 2.0, 1.0).is_err());
        assert!(lp.add_constraint(vec![f64::NAN, 1.0], Relation::Le, 1.0).is_err());
    }

    #[test]
    fn redundant_equalities_are_fine() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![1.0, 2.0]).unwrap();
        lp.add_constraint(vec![1.0, 1.0], Relation::Eq, 1.0).unwrap();
        lp.add_constraint(vec![2.0, 2.0], Relation::Eq, 2.0).unwrap();
        let sol = lp_solve(&lp).unwrap();
        assert!((sol.objective_value.unwrap() - 1.0).abs() < 1e-9);
    }

    proptest! {
        // For min c.x s.t. Ax >= b, x >= 0 with c = A^T y + s (y, s >= 0), the
        // point y is dual feasible and b.y bounds the primal optimum from below.
        #[test]
        fn weak_duality_holds(
            m in 1usize..5,
            n in 1usize..5,
            seed in proptest::collection::vec(0u32..10, 64),
        ) {
            let at = |k: usize| seed[k % seed.len()] as f64;
            let a: Vec<Vec<f64>> = (0..m).map(|r| (0..n).map(|j| at(r * 7 + j * 3) / 3.0).collect()).collect();
            let x0: Vec<f64> = (0..n).map(|j| at(j + 40) / 2.0).collect();
            let y: Vec<f64> = (0..m).map(|r| at(r + 50) / 4.0).collect();
            let b: Vec<f64> = a.iter().enumerate()
                .map(|(r, row)| row.iter().zip(&x0).map(|(p, q)| p * q).sum::<f64>() - at(r + 20) / 5.0)
                .collect();
            let c: Vec<f64> = (0..n)
                .map(|j| (0..m).map(|r| a[r][j] * y[r]).sum::<f64>() + at(j + 30) / 6.0)
                .collect();

            let mut lp = LinearProgram::new(n);
            lp.set_objective(c.clone()).unwrap();
            for (row, &rhs) in a.iter().zip(&b) {
                lp.add_constraint(row.clone(), Relation::Ge, rhs).unwrap();
            }
            let sol = lp_solve(&lp).unwrap();
            prop_assert_eq!(sol.status, LpStatus::Optimal);
            let x = sol.values.unwrap();
            prop_assert!(lp.max_violation(&x) <= 1e-9);
            let primal = sol.objective_value.unwrap();
            let dual: f64 = b.iter().zip(&y).map(|(p, q)| p * q).sum();
            prop_assert!(primal >= dual - 1e-9, "primal {} < dual {}", primal, dual);
            let witness: f64 = c.iter().zip(&x0).map(|(p, q)| p * q).sum();
            prop_assert!(primal <= witness + 1e-9);

            let again = lp_solve(&lp).unwrap();
            prop_assert_eq!(again, LpSolution { status: LpStatus::Optimal, values: Some(x), objective_value: Some(primal) });
        }
    }
}
