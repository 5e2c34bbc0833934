//! Dense two-phase primal simplex with Bland's anti-cycling rule.
//!
//! Problems are stated as `minimize c.x` subject to linear rows and `x >= 0`.
//! Instances here are small (tens of columns), so the full tableau is kept.

use crate::error::{Error, Result};

/// Reduced-cost optimality and phase-one feasibility tolerance.
pub const OPT_TOL: f64 = 1e-9;
/// Smallest tableau entry accepted as a pivot.
const PIVOT_TOL: f64 = 1e-11;
const MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LinearProgram {
    /// Minimize `objective . x` over `x >= 0`.
    pub fn minimize(objective: Vec<f64>) -> Self {
        Self {
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        assert_eq!(coeffs.len(), self.objective.len(), "constraint width");
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Tableau::build(self).solve(&self.objective)
    }
}

struct Tableau {
    n: usize,
    cols: usize,
    first_artificial: usize,
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    iterations: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let normalized: Vec<Constraint> = lp
            .constraints
            .iter()
            .map(|c| {
                if c.rhs < 0.0 {
                    Constraint {
                        coeffs: c.coeffs.iter().map(|v| -v).collect(),
                        relation: match c.relation {
                            Relation::Le => Relation::Ge,
                            Relation::Ge => Relation::Le,
                            Relation::Eq => Relation::Eq,
                        },
                        rhs: -c.rhs,
                    }
                } else {
                    c.clone()
                }
            })
            .collect();
        let slacks = normalized
            .iter()
            .filter(|c| c.relation != Relation::Eq)
            .count();
        let artificials = normalized
            .iter()
            .filter(|c| c.relation != Relation::Le)
            .count();
        let first_artificial = n + slacks;
        let cols = first_artificial + artificials;

        let mut rows = Vec::with_capacity(normalized.len());
        let mut basis = Vec::with_capacity(normalized.len());
        let (mut next_slack, mut next_art) = (n, first_artificial);
        for c in &normalized {
            let mut row = vec![0.0; cols + 1];
            row[..n].copy_from_slice(&c.coeffs);
            row[cols] = c.rhs;
            match c.relation {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    next_slack += 1;
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            rows.push(row);
        }
        Self {
            n,
            cols,
            first_artificial,
            rows,
            basis,
            iterations: 0,
        }
    }

    /// Reduced-cost row for `costs` given the current basis; the last entry
    /// holds `-z`.
    fn priced(&self, costs: &[f64]) -> Vec<f64> {
        let mut d = vec![0.0; self.cols + 1];
        d[..costs.len()].copy_from_slice(costs);
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = costs.get(b).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for (dj, rj) in d.iter_mut().zip(row) {
                    *dj -= cb * rj;
                }
            }
        }
        d
    }

    fn pivot(&mut self, d: &mut [f64], r: usize, col: usize) {
        let p = self.rows[r][col];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[col];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                    row[col] = 0.0;
                }
            }
        }
        let f = d[col];
        if f != 0.0 {
            for (v, pv) in d.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            d[col] = 0.0;
        }
        self.basis[r] = col;
    }

    /// Runs Bland's rule over columns `< allowed` until optimal.
    fn optimize(&mut self, d: &mut [f64], allowed: usize) -> Result<()> {
        loop {
            let Some(col) = (0..allowed).find(|&j| d[j] < -OPT_TOL) else {
                return Ok(());
            };
            let rhs = self.cols;
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[col];
                if a > PIVOT_TOL {
                    let ratio = row[rhs] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-12 * (1.0 + br.abs())
                                || (ratio <= br + 1e-12 * (1.0 + br.abs())
                                    && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::Unbounded(col));
            };
            self.iterations += 1;
            if self.iterations > MAX_ITERATIONS {
                return Err(Error::IterationLimit(MAX_ITERATIONS));
            }
            self.pivot(d, r, col);
        }
    }

    fn solve(mut self, objective: &[f64]) -> Result<LpSolution> {
        let rhs = self.cols;
        if self.first_artificial < self.cols {
            let mut phase_one = vec![0.0; self.cols];
            phase_one[self.first_artificial..].iter_mut().for_each(|v| *v = 1.0);
            let mut d = self.priced(&phase_one);
            self.optimize(&mut d, self.cols)?;
            let residual = -d[rhs];
            let scale = 1.0 + self.rows.iter().map(|r| r[rhs].abs()).fold(0.0, f64::max);
            if residual > OPT_TOL * scale {
                return Err(Error::Infeasible(residual));
            }
            // Drive remaining artificials out of the basis; rows with no
            // eligible pivot are redundant and are dropped.
            let mut i = 0;
            while i < self.rows.len() {
                if self.basis[i] >= self.first_artificial {
                    let col = (0..self.first_artificial).find(|&j| self.rows[i][j].abs() > PIVOT_TOL);
                    match col {
                        Some(j) => {
                            self.pivot(&mut d, i, j);
                            i += 1;
                        }
                        None => {
                            self.rows.remove(i);
                            self.basis.remove(i);
                        }
                    }
                } else {
                    i += 1;
                }
            }
        }
        let mut d = self.priced(objective);
        self.optimize(&mut d, self.first_artificial)?;

        let mut x = vec![0.0; self.n];
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if b < self.n {
                x[b] = row[rhs].max(0.0);
            }
        }
        let value = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution { x, objective: value })
    }
}
