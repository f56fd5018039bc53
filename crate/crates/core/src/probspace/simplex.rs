//! Dense-tableau simplex over exact rationals with Bland's anti-cycling rule.
//!
//! Problems have the standard equality form `A x = b, x >= 0`. The system is
//! first reduced by Gauss–Jordan elimination (dropping redundant rows and
//! detecting inconsistency), then a phase-one LP with artificial columns
//! finds a feasible basis for rows whose reduced right-hand side is negative.
//! The resulting [`FeasibleTableau`] is reused to optimize any number of
//! objectives.

use num_traits::{One, Signed, Zero};

use super::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { value: Rational, point: Vec<Rational> },
    Unbounded,
}

/// Tableau rows in basic form: `rows[i][basis[i]] == 1`, every other row has
/// zero in that column, and the last entry of each row is its right-hand side.
#[derive(Debug, Clone)]
struct Tableau {
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    num_cols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Rational {
        &self.rows[i][self.num_cols]
    }

    fn pivot(&mut self, row: usize, col: usize, costs: Option<&mut Vec<Rational>>) {
        let inv = self.rows[row][col].recip();
        for v in self.rows[row].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        let support: Vec<usize> = (0..=self.num_cols).filter(|&j| !self.rows[row][j].is_zero()).collect();
        let pivot_row = std::mem::take(&mut self.rows[row]);
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row || r[col].is_zero() {
                continue;
            }
            let factor = r[col].clone();
            for &j in &support {
                r[j] -= &factor * &pivot_row[j];
            }
        }
        if let Some(costs) = costs {
            if !costs[col].is_zero() {
                let factor = costs[col].clone();
                for &j in &support {
                    costs[j] -= &factor * &pivot_row[j];
                }
            }
        }
        self.rows[row] = pivot_row;
        self.basis[row] = col;
    }

    /// Reduced-cost row for minimizing `c . x` over the first `c.len()`
    /// columns (other columns cost zero). The last entry holds `-objective`.
    fn reduced_costs(&self, c: &[Rational]) -> Vec<Rational> {
        let mut costs: Vec<Rational> =
            (0..=self.num_cols).map(|j| c.get(j).cloned().unwrap_or_else(Rational::zero)).collect();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = c.get(b).cloned().unwrap_or_else(Rational::zero);
            if cb.is_zero() {
                continue;
            }
            for (j, v) in self.rows[i].iter().enumerate() {
                if !v.is_zero() {
                    costs[j] -= &cb * v;
                }
            }
        }
        costs
    }

    /// Runs simplex iterations with Bland's rule, restricted to entering
    /// columns below `allowed`. Returns `false` if the LP is unbounded.
    fn run(&mut self, costs: &mut Vec<Rational>, allowed: usize) -> bool {
        loop {
            let Some(enter) = (0..allowed).find(|&j| costs[j].is_negative()) else {
                return true;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][enter];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                let better = match &leave {
                    None => true,
                    Some((best, best_ratio)) => {
                        ratio < *best_ratio || (ratio == *best_ratio && self.basis[i] < self.basis[*best])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((row, _)) = leave else {
                return false;
            };
            self.pivot(row, enter, Some(costs));
        }
    }

    fn point(&self, num_vars: usize) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); num_vars];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < num_vars {
                x[b] = self.rhs(i).clone();
            }
        }
        x
    }
}

/// A basic feasible solution of `A x = b, x >= 0`, ready for phase two.
#[derive(Debug, Clone)]
pub struct FeasibleTableau {
    tableau: Tableau,
}

impl FeasibleTableau {
    /// Finds a feasible basis, or `None` if the system has no nonnegative
    /// solution.
    pub fn new(a: &[Vec<Rational>], b: &[Rational], num_vars: usize) -> Option<FeasibleTableau> {
        assert_eq!(a.len(), b.len());
        let mut rows: Vec<Vec<Rational>> = a
            .iter()
            .zip(b)
            .map(|(row, rhs)| {
                assert_eq!(row.len(), num_vars);
                let mut r = row.clone();
                r.push(rhs.clone());
                r
            })
            .collect();

        // Gauss-Jordan reduction.
        let mut basis = Vec::new();
        let mut rank = 0;
        for col in 0..num_vars {
            if rank == rows.len() {
                break;
            }
            let Some(p) = (rank..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
                continue;
            };
            rows.swap(rank, p);
            let mut t = Tableau { rows, basis: Vec::new(), num_cols: num_vars };
            t.basis = vec![usize::MAX; t.rows.len()];
            t.pivot(rank, col, None);
            rows = t.rows;
            basis.push(col);
            rank += 1;
        }
        if rows[rank..].iter().any(|r| !r[num_vars].is_zero()) {
            return None;
        }
        rows.truncate(rank);

        // Phase one: artificial columns for rows with negative right-hand side.
        let negative: Vec<usize> = (0..rank).filter(|&i| rows[i][num_vars].is_negative()).collect();
        if negative.is_empty() {
            return Some(FeasibleTableau { tableau: Tableau { rows, basis, num_cols: num_vars } });
        }
        let num_art = negative.len();
        let total = num_vars + num_art;
        for row in rows.iter_mut() {
            let rhs = row.pop().expect("row has a rhs entry");
            row.extend(std::iter::repeat_with(Rational::zero).take(num_art));
            row.push(rhs);
        }
        for (k, &i) in negative.iter().enumerate() {
            for v in rows[i].iter_mut() {
                *v = -v.clone();
            }
            rows[i][num_vars + k] = Rational::one();
            basis[i] = num_vars + k;
        }
        let mut tableau = Tableau { rows, basis, num_cols: total };
        let phase_one: Vec<Rational> =
            (0..total).map(|j| if j < num_vars { Rational::zero() } else { Rational::one() }).collect();
        let mut costs = tableau.reduced_costs(&phase_one);
        let bounded = tableau.run(&mut costs, total);
        debug_assert!(bounded, "phase one is bounded below by zero");
        if !costs[total].is_zero() {
            return None;
        }

        // Drive remaining (zero-level) artificials out of the basis. The rows
        // are linearly independent in the original columns, so a pivot exists.
        for i in 0..tableau.rows.len() {
            if tableau.basis[i] >= num_vars {
                let col = (0..num_vars)
                    .find(|&j| !tableau.rows[i][j].is_zero())
                    .expect("independent rows always have an original pivot column");
                tableau.pivot(i, col, None);
            }
        }
        for row in tableau.rows.iter_mut() {
            let rhs = row.pop().expect("row has a rhs entry");
            row.truncate(num_vars);
            row.push(rhs);
        }
        tableau.num_cols = num_vars;
        Some(FeasibleTableau { tableau })
    }

    pub fn num_vars(&self) -> usize {
        self.tableau.num_cols
    }

    /// The basic feasible solution this tableau represents.
    pub fn point(&self) -> Vec<Rational> {
        self.tableau.point(self.tableau.num_cols)
    }

    /// True when every column is basic, i.e. the equality system alone pins
    /// down a single point.
    pub fn is_fully_determined(&self) -> bool {
        self.tableau.basis.len() == self.tableau.num_cols
    }

    pub fn is_basic(&self, col: usize) -> bool {
        self.tableau.basis.contains(&col)
    }

    /// Minimizes `c . x` starting from this basis.
    pub fn minimize(&self, c: &[Rational]) -> LpOutcome {
        let mut tableau = self.tableau.clone();
        let mut costs = tableau.reduced_costs(c);
        if !tableau.run(&mut costs, tableau.num_cols) {
            return LpOutcome::Unbounded;
        }
        let point = tableau.point(tableau.num_cols);
        LpOutcome::Optimal { value: -costs[tableau.num_cols].clone(), point }
    }

    pub fn maximize(&self, c: &[Rational]) -> LpOutcome {
        let negated: Vec<Rational> = c.iter().map(|v| -v.clone()).collect();
        match self.minimize(&negated) {
            LpOutcome::Optimal { value, point } => LpOutcome::Optimal { value: -value, point },
            LpOutcome::Unbounded => LpOutcome::Unbounded,
        }
    }
}
