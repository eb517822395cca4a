//! Linear-programming lower bound on the expected number of fusion attempts
//! in the `R = 2` razor model.
//!
//! The primal minimises `(1,1,1)·x` subject to `xB ≤ (−N+1, 1)` and `x ≥ 0`,
//! where the rows of `B` are the mean moves of the three possible fusions.
//! It is solved through its dual, whose origin is feasible, with an exact
//! dense simplex; both the solver's pair and the closed-form pair are checked
//! as mutual certificates.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::value::{exact, exact_int, ExactValue, Scalar};

/// Outcome of [`maximize`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexSolution {
    pub objective: ExactValue,
    /// Optimal values of the decision variables.
    pub point: Vec<ExactValue>,
    /// Shadow prices of the constraints, an optimal solution of the dual.
    pub prices: Vec<ExactValue>,
}

/// Maximises `c·y` subject to `A y ≤ b`, `y ≥ 0`, for `b ≥ 0`, using a dense
/// tableau and Bland's rule. Returns `None` when the problem is unbounded.
pub fn maximize(c: &[ExactValue], a: &[Vec<ExactValue>], b: &[ExactValue]) -> Option<SimplexSolution> {
    let n = c.len();
    let m = b.len();
    assert_eq!(a.len(), m, "one row of A per constraint");
    assert!(b.iter().all(|v| !v.is_negative()), "origin must be feasible");
    let width = n + m + 1;
    let mut rows: Vec<Vec<ExactValue>> = (0..m)
        .map(|i| {
            let mut row = vec![ExactValue::zero(); width];
            row[..n].clone_from_slice(&a[i]);
            row[n + i] = ExactValue::one();
            row[width - 1] = b[i].clone();
            row
        })
        .collect();
    let mut obj = vec![ExactValue::zero(); width];
    for j in 0..n {
        obj[j] = -c[j].clone();
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    while let Some(enter) = (0..width - 1).find(|&j| obj[j].is_negative()) {
        let mut leave: Option<(usize, ExactValue)> = None;
        for (i, row) in rows.iter().enumerate() {
            if row[enter].is_positive() {
                let ratio = row[width - 1].clone() / row[enter].clone();
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let (pivot_row, _) = leave?;
        let pivot = rows[pivot_row][enter].clone();
        for v in rows[pivot_row].iter_mut() {
            *v = v.clone() / pivot.clone();
        }
        let pr = rows[pivot_row].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != pivot_row && !row[enter].is_zero() {
                let f = row[enter].clone();
                for (v, p) in row.iter_mut().zip(&pr) {
                    *v = v.clone() - f.clone() * p.clone();
                }
            }
        }
        let f = obj[enter].clone();
        for (v, p) in obj.iter_mut().zip(&pr) {
            *v = v.clone() - f.clone() * p.clone();
        }
        basis[pivot_row] = enter;
    }

    let mut point = vec![ExactValue::zero(); n];
    for (i, &var) in basis.iter().enumerate() {
        if var < n {
            point[var] = rows[i][width - 1].clone();
        }
    }
    Some(SimplexSolution {
        objective: obj[width - 1].clone(),
        point,
        prices: obj[n..n + m].to_vec(),
    })
}

/// The `R = 2` attempts program for `N` EPR pairs.
#[derive(Debug, Clone)]
pub struct LinearProgramInstance {
    pub n: u32,
}

/// Primal and dual optimum of a [`LinearProgramInstance`].
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub objective: ExactValue,
    pub x: [ExactValue; 3],
    pub y: [ExactValue; 2],
}

impl LinearProgramInstance {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("the attempts program needs N ≥ 1".into()));
        }
        Ok(Self { n })
    }

    /// Mean moves of the fusions `<1,1>`, `<1,2>` and `<2,2>` in the
    /// `(n_1, n_2)` plane.
    pub fn matrix() -> [[ExactValue; 2]; 3] {
        [
            [exact_int(-2), exact(1, 2)],
            [exact(-1, 2), exact(-1, 2)],
            [exact_int(1), exact(-3, 2)],
        ]
    }

    pub fn rhs(&self) -> [ExactValue; 2] {
        [exact_int(1) - ExactValue::from_u64(u64::from(self.n)), exact_int(1)]
    }

    pub fn primal_objective(x: &[ExactValue; 3]) -> ExactValue {
        x.iter().cloned().fold(ExactValue::zero(), |a, v| a + v)
    }

    pub fn dual_objective(&self, y: &[ExactValue; 2]) -> ExactValue {
        let rhs = self.rhs();
        -(rhs[0].clone() * y[0].clone() + rhs[1].clone() * y[1].clone())
    }

    pub fn primal_feasible(&self, x: &[ExactValue; 3]) -> bool {
        let b = Self::matrix();
        let rhs = self.rhs();
        x.iter().all(|v| !v.is_negative())
            && (0..2).all(|j| {
                let lhs = (0..3).fold(ExactValue::zero(), |acc, i| acc + x[i].clone() * b[i][j].clone());
                lhs <= rhs[j]
            })
    }

    pub fn dual_feasible(y: &[ExactValue; 2]) -> bool {
        let b = Self::matrix();
        y.iter().all(|v| !v.is_negative())
            && b.iter().all(|row| {
                let lhs = -(row[0].clone() * y[0].clone() + row[1].clone() * y[1].clone());
                lhs <= exact_int(1)
            })
    }

    /// The closed-form optimal primal/dual pair.
    pub fn closed_form_certificate(&self) -> ([ExactValue; 3], [ExactValue; 2]) {
        let n = ExactValue::from_u64(u64::from(self.n));
        match self.n {
            1 => ([exact_int(0), exact_int(0), exact_int(0)], [exact_int(0), exact_int(0)]),
            2..=5 => (
                [(n - exact_int(1)) / exact_int(2), exact_int(0), exact_int(0)],
                [exact(1, 2), exact_int(0)],
            ),
            _ => (
                [
                    exact(2, 5) * n.clone(),
                    exact_int(2) * (n / exact_int(5) - exact_int(1)),
                    exact_int(0),
                ],
                [exact(4, 5), exact(6, 5)],
            ),
        }
    }

    /// Closed-form optimum: `0`, `(N−1)/2` for `N ≤ 5`, `(4(N−1)−6)/5` beyond.
    pub fn closed_form_objective(&self) -> ExactValue {
        let n = ExactValue::from_u64(u64::from(self.n));
        match self.n {
            1 => exact_int(0),
            2..=5 => (n - exact_int(1)) / exact_int(2),
            _ => (exact_int(4) * (n - exact_int(1)) - exact_int(6)) / exact_int(5),
        }
    }

    /// Solves the program and cross-checks both certificates.
    pub fn solve(&self) -> Result<LpSolution> {
        let fail = |reason: String| Error::Certificate { n: self.n, reason };
        let rhs = self.rhs();
        let c = vec![-rhs[0].clone(), -rhs[1].clone()];
        let a: Vec<Vec<ExactValue>> = Self::matrix()
            .iter()
            .map(|row| vec![-row[0].clone(), -row[1].clone()])
            .collect();
        let b = vec![exact_int(1); 3];
        let sol = maximize(&c, &a, &b).ok_or_else(|| fail("dual program reported unbounded".into()))?;
        let y = [sol.point[0].clone(), sol.point[1].clone()];
        let x = [sol.prices[0].clone(), sol.prices[1].clone(), sol.prices[2].clone()];

        if !self.primal_feasible(&x) {
            return Err(fail(format!("solver primal point {x:?} infeasible")));
        }
        if !Self::dual_feasible(&y) {
            return Err(fail(format!("solver dual point {y:?} infeasible")));
        }
        let px = Self::primal_objective(&x);
        let dy = self.dual_objective(&y);
        if px != sol.objective || dy != sol.objective {
            return Err(fail(format!(
                "objectives disagree: primal {px}, dual {dy}, simplex {}",
                sol.objective
            )));
        }

        let (cx, cy) = self.closed_form_certificate();
        if !self.primal_feasible(&cx) || !Self::dual_feasible(&cy) {
            return Err(fail("closed-form pair infeasible".into()));
        }
        let expected = self.closed_form_objective();
        if Self::primal_objective(&cx) != expected || self.dual_objective(&cy) != expected {
            return Err(fail("closed-form pair objectives disagree".into()));
        }
        if sol.objective != expected {
            return Err(fail(format!(
                "simplex objective {} differs from closed form {expected}",
                sol.objective
            )));
        }
        Ok(LpSolution {
            objective: sol.objective,
            x,
            y,
        })
    }
}

/// Certified optimum of the attempts program for `N` EPR pairs.
pub fn lp_attempts_bound(n: u32) -> Result<ExactValue> {
    LinearProgramInstance::new(n)?.solve().map(|s| s.objective)
}
