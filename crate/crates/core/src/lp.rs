//! Exact-rational two-phase simplex with Bland's rule.
//!
//! Problems are `min cᵀx` subject to `Ax = b`, with each variable either
//! non-negative or free. Every optimum comes with a dual vector `y` and is
//! checked for primal feasibility, dual feasibility and `bᵀy = cᵀx` before it
//! is returned.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{self, Scalar};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpProblem {
    pub objective: Vec<Scalar>,
    pub constraints: Matrix,
    pub rhs: Vec<Scalar>,
    pub nonneg: Vec<bool>,
}

impl LpProblem {
    /// All variables non-negative.
    pub fn standard(objective: Vec<Scalar>, constraints: Matrix, rhs: Vec<Scalar>) -> Self {
        let n = objective.len();
        LpProblem { objective, constraints, rhs, nonneg: vec![true; n] }
    }

    fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if self.constraints.cols() != n && self.constraints.rows() > 0 {
            return Err(Error::Shape(format!(
                "{} objective coefficients but {} constraint columns",
                n,
                self.constraints.cols()
            )));
        }
        if self.constraints.rows() != self.rhs.len() {
            return Err(Error::Shape("constraint rows and right-hand side differ in length".into()));
        }
        if self.nonneg.len() != n {
            return Err(Error::Shape("one sign flag per variable is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LpSolution {
    #[serde(with = "scalar::serde_q")]
    pub objective: Scalar,
    #[serde(with = "scalar::serde_q_vec")]
    pub primal: Vec<Scalar>,
    #[serde(with = "scalar::serde_q_vec")]
    pub dual: Vec<Scalar>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<Scalar>>,
    basis: Vec<usize>,
    width: usize,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Scalar {
        &self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v /= &p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Bland's rule: lowest-index improving column enters; ties in the
    /// ratio test go to the lowest-index basic variable.
    fn optimize(&mut self, cost: &[Scalar], allowed: usize) -> Phase {
        loop {
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let mut d = cost[j].clone();
                for (i, &b) in self.basis.iter().enumerate() {
                    if !self.rows[i][j].is_zero() {
                        d -= &cost[b] * &self.rows[i][j];
                    }
                }
                d.is_negative()
            });
            let Some(e) = entering else {
                return Phase::Optimal;
            };
            let mut leave: Option<(usize, Scalar)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][e];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, e),
                None => return Phase::Unbounded,
            }
        }
    }
}

/// Solves the problem exactly. Infeasibility and unboundedness are verdicts,
/// not errors.
pub fn lp_solve(problem: &LpProblem) -> Result<LpOutcome> {
    problem.validate()?;
    let n = problem.objective.len();
    let m = problem.rhs.len();

    // split free variables into x⁺ − x⁻
    let mut columns: Vec<(usize, bool)> = Vec::new();
    for (j, &nn) in problem.nonneg.iter().enumerate() {
        columns.push((j, true));
        if !nn {
            columns.push((j, false));
        }
    }
    let ns = columns.len();
    let entry = |i: usize, k: usize| -> Scalar {
        let (j, pos) = columns[k];
        let v = problem.constraints[(i, j)].clone();
        if pos {
            v
        } else {
            -v
        }
    };
    let cost: Vec<Scalar> = columns
        .iter()
        .map(|&(j, pos)| if pos { problem.objective[j].clone() } else { -problem.objective[j].clone() })
        .collect();

    let width = ns + m;
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let flip = problem.rhs[i].is_negative();
        let mut row: Vec<Scalar> = (0..ns).map(|k| entry(i, k)).collect();
        row.extend((0..m).map(|a| if a == i { Scalar::from_integer(1.into()) } else { Scalar::zero() }));
        row.push(problem.rhs[i].clone());
        if flip {
            for (k, v) in row.iter_mut().enumerate() {
                if k < ns || k == width {
                    *v = -v.clone();
                }
            }
        }
        rows.push(row);
    }
    // a column that is +1 in row i and zero elsewhere can start in the basis
    // in place of row i's artificial
    let mut basis: Vec<usize> = (ns..ns + m).collect();
    for k in 0..ns {
        let nonzero: Vec<usize> = (0..m).filter(|&i| !rows[i][k].is_zero()).collect();
        if let [i] = nonzero[..] {
            if rows[i][k].is_one() && basis[i] >= ns {
                basis[i] = k;
            }
        }
    }
    let mut tab = Tableau { rows, basis, width };

    let mut phase1 = vec![Scalar::zero(); width];
    for c in phase1.iter_mut().skip(ns) {
        *c = Scalar::from_integer(1.into());
    }
    // artificials may leave but never re-enter
    tab.optimize(&phase1, ns);
    let infeasibility = tab
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= ns)
        .fold(Scalar::zero(), |acc, (i, _)| acc + tab.rhs(i));
    if infeasibility.is_positive() {
        return Ok(LpOutcome::Infeasible);
    }

    // drive zero-level artificials out; rows where that is impossible are redundant
    let mut redundant = vec![false; m];
    for i in 0..m {
        if tab.basis[i] < ns {
            continue;
        }
        match (0..ns).find(|&k| !tab.rows[i][k].is_zero() && !tab.basis.contains(&k)) {
            Some(k) => tab.pivot(i, k),
            None => redundant[i] = true,
        }
    }
    let kept: Vec<usize> = (0..m).filter(|&i| !redundant[i]).collect();
    tab.rows = kept.iter().map(|&i| tab.rows[i].clone()).collect();
    tab.basis = kept.iter().map(|&i| tab.basis[i]).collect();

    let mut phase2 = cost.clone();
    phase2.extend(std::iter::repeat_n(Scalar::zero(), m));
    if let Phase::Unbounded = tab.optimize(&phase2, ns) {
        return Ok(LpOutcome::Unbounded);
    }

    let mut xs = vec![Scalar::zero(); ns];
    for (i, &b) in tab.basis.iter().enumerate() {
        xs[b] = tab.rhs(i).clone();
    }
    let mut primal = vec![Scalar::zero(); n];
    for (k, &(j, pos)) in columns.iter().enumerate() {
        if pos {
            primal[j] += &xs[k];
        } else {
            primal[j] -= &xs[k];
        }
    }

    // dual from Bᵀy = c_B over the non-redundant rows
    let r = kept.len();
    let mut bt = Matrix::zeros(r, r);
    for (col, &b) in tab.basis.iter().enumerate() {
        for (row, &i) in kept.iter().enumerate() {
            bt[(col, row)] = entry(i, b);
        }
    }
    let cb: Vec<Scalar> = tab.basis.iter().map(|&b| cost[b].clone()).collect();
    let y_kept = if r == 0 { Vec::new() } else { bt.solve(&cb)? };
    let mut dual = vec![Scalar::zero(); m];
    for (v, &i) in y_kept.into_iter().zip(&kept) {
        dual[i] = v;
    }

    let objective = problem.objective.iter().zip(&primal).fold(Scalar::zero(), |acc, (c, x)| acc + c * x);
    let solution = LpSolution { objective, primal, dual };
    verify_optimality(problem, &solution)?;
    Ok(LpOutcome::Optimal(solution))
}

/// Exact KKT check: `Ax = b`, sign constraints, `Aᵀy ≤ c` (equality on free
/// columns) and `bᵀy = cᵀx`.
pub fn verify_optimality(problem: &LpProblem, s: &LpSolution) -> Result<()> {
    let m = problem.rhs.len();
    let n = problem.objective.len();
    for i in 0..m {
        let lhs = (0..n).fold(Scalar::zero(), |acc, j| acc + &problem.constraints[(i, j)] * &s.primal[j]);
        if lhs != problem.rhs[i] {
            return Err(Error::Internal(format!("primal row {i} violated")));
        }
    }
    for j in 0..n {
        if problem.nonneg[j] && s.primal[j].is_negative() {
            return Err(Error::Internal(format!("primal variable {j} is negative")));
        }
        let aty = (0..m).fold(Scalar::zero(), |acc, i| acc + &problem.constraints[(i, j)] * &s.dual[i]);
        let ok = if problem.nonneg[j] { aty <= problem.objective[j] } else { aty == problem.objective[j] };
        if !ok {
            return Err(Error::Internal(format!("dual constraint {j} violated")));
        }
    }
    let by = problem.rhs.iter().zip(&s.dual).fold(Scalar::zero(), |acc, (b, y)| acc + b * y);
    if by != s.objective {
        return Err(Error::Internal(format!("duality gap: primal {} dual {}", s.objective, by)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};

    fn mat(rows: Vec<Vec<Scalar>>) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn optimum(out: LpOutcome) -> LpSolution {
        match out {
            LpOutcome::Optimal(s) => s,
            other => panic!("expected an optimum, got {other:?}"),
        }
    }

    #[test]
    fn single_equality() {
        let p = LpProblem::standard(vec![int(1)], mat(vec![vec![int(1)]]), vec![int(1)]);
        let s = optimum(lp_solve(&p).unwrap());
        assert_eq!(s.objective, int(1));
        assert_eq!(s.primal, vec![int(1)]);
    }

    #[test]
    fn absolute_value_encoding() {
        // min p + q  s.t.  p − q = −1
        let p = LpProblem::standard(vec![int(1), int(1)], mat(vec![vec![int(1), int(-1)]]), vec![int(-1)]);
        let s = optimum(lp_solve(&p).unwrap());
        assert_eq!(s.objective, int(1));
        assert_eq!(s.primal, vec![int(0), int(1)]);
    }

    #[test]
    fn degenerate_cycling_instance_terminates() {
        // Chvátal's cycling example, written as a minimisation with slacks.
        let a = mat(vec![
            vec![ratio(1, 2), ratio(-11, 2), ratio(-5, 2), int(9), int(1), int(0), int(0)],
            vec![ratio(1, 2), ratio(-3, 2), ratio(-1, 2), int(1), int(0), int(1), int(0)],
            vec![int(1), int(0), int(0), int(0), int(0), int(0), int(1)],
        ]);
        let c = vec![int(-10), int(57), int(9), int(24), int(0), int(0), int(0)];
        let p = LpProblem::standard(c, a, vec![int(0), int(0), int(1)]);
        let s = optimum(lp_solve(&p).unwrap());
        assert_eq!(s.objective, int(-1));
    }

    #[test]
    fn verdicts() {
        let infeasible = LpProblem::standard(vec![int(1)], mat(vec![vec![int(1)]]), vec![int(-1)]);
        assert_eq!(lp_solve(&infeasible).unwrap(), LpOutcome::Infeasible);
        let unbounded = LpProblem::standard(vec![int(-1), int(0)], mat(vec![vec![int(1), int(-1)]]), vec![int(0)]);
        assert_eq!(lp_solve(&unbounded).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn free_variables_and_redundant_rows() {
        // min |x| written with a free x and t ≥ ±x; duplicate row on purpose
        let p = LpProblem {
            objective: vec![int(0), int(1)],
            constraints: mat(vec![vec![int(1), int(0)], vec![int(2), int(0)]]),
            rhs: vec![int(-3), int(-6)],
            nonneg: vec![false, true],
        };
        let s = optimum(lp_solve(&p).unwrap());
        assert_eq!(s.primal[0], int(-3));
        assert_eq!(s.objective, int(0));
    }

    #[test]
    fn shape_errors() {
        let p = LpProblem::standard(vec![int(1), int(1)], mat(vec![vec![int(1)]]), vec![int(1)]);
        assert!(matches!(lp_solve(&p), Err(Error::Shape(_))));
    }
}
