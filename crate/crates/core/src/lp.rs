//! Dense two-phase simplex method for small linear programs.
//!
//! Solves `maximize cᵀx` subject to rows `aᵢᵀx {≤, =, ≥} bᵢ` and `x ≥ 0`, with
//! Bland's rule against cycling. Intended for programs of at most a few
//! hundred rows.

use crate::error::{Error, Result};

const EPS: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Relation, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self {
            objective,
            rows: Vec::new(),
        }
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.rows.push((coeffs, relation, rhs));
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn maximize(&self) -> Result<LpSolution> {
        let n = self.num_vars();
        for (coeffs, _, rhs) in &self.rows {
            if coeffs.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: coeffs.len(),
                });
            }
            if !rhs.is_finite() || coeffs.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("linear program row"));
            }
        }
        Tableau::build(self).solve(&self.objective)
    }
}

struct Tableau {
    /// Constraint rows; the last entry of each row is the right-hand side.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_structural: usize,
    /// Columns `[first_artificial, width)` are artificial.
    first_artificial: usize,
    width: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        // Normalize to nonnegative right-hand sides.
        let normalized: Vec<(Vec<f64>, Relation, f64)> = lp
            .rows
            .iter()
            .map(|(a, rel, b)| {
                if *b < 0.0 {
                    let flipped = match rel {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (a.iter().map(|v| -v).collect(), flipped, -b)
                } else {
                    (a.clone(), *rel, *b)
                }
            })
            .collect();

        let n_slack = normalized.iter().filter(|(_, r, _)| *r != Relation::Eq).count();
        let n_art = normalized.iter().filter(|(_, r, _)| *r != Relation::Le).count();
        let first_artificial = n + n_slack;
        let width = first_artificial + n_art;

        let mut rows = Vec::with_capacity(normalized.len());
        let mut basis = Vec::with_capacity(normalized.len());
        let mut slack = n;
        let mut art = first_artificial;
        for (a, rel, b) in normalized {
            let mut row = vec![0.0; width + 1];
            row[..n].copy_from_slice(&a);
            row[width] = b;
            match rel {
                Relation::Le => {
                    row[slack] = 1.0;
                    basis.push(slack);
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                    row[art] = 1.0;
                    basis.push(art);
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = 1.0;
                    basis.push(art);
                    art += 1;
                }
            }
            rows.push(row);
        }
        Self {
            rows,
            basis,
            n_structural: n,
            first_artificial,
            width,
        }
    }

    fn pivot(&mut self, cost: &mut [f64], r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r && row[c] != 0.0 {
                let f = row[c];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        let f = cost[c];
        if f != 0.0 {
            for (v, pv) in cost.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes the cost row over columns `< allowed`. Returns false when
    /// unbounded.
    fn run(&mut self, cost: &mut [f64], allowed: usize) -> bool {
        let rhs = self.width;
        loop {
            let Some(c) = (0..allowed).find(|&j| cost[j] < -EPS) else {
                return true;
            };
            let mut best: Option<(f64, usize, usize)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c] > EPS {
                    let ratio = row[rhs] / row[c];
                    let better = match best {
                        None => true,
                        Some((br, _, bb)) => {
                            ratio < br - EPS || (ratio <= br + EPS && self.basis[i] < bb)
                        }
                    };
                    if better {
                        best = Some((ratio, i, self.basis[i]));
                    }
                }
            }
            match best {
                Some((_, r, _)) => self.pivot(cost, r, c),
                None => return false,
            }
        }
    }

    fn reduced_costs(&self, d: &[f64]) -> Vec<f64> {
        let mut cost = vec![0.0; self.width + 1];
        cost[..d.len()].copy_from_slice(d);
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let db = if b < d.len() { d[b] } else { 0.0 };
            if db != 0.0 {
                for (v, rv) in cost.iter_mut().zip(row) {
                    *v -= db * rv;
                }
            }
        }
        cost
    }

    fn solve(mut self, objective: &[f64]) -> Result<LpSolution> {
        let rhs = self.width;
        if self.first_artificial < self.width {
            let mut d = vec![0.0; self.width];
            d[self.first_artificial..].iter_mut().for_each(|v| *v = 1.0);
            let mut cost = self.reduced_costs(&d);
            self.run(&mut cost, self.width);
            let infeasibility = -cost[rhs];
            let scale = 1.0 + self.rows.iter().fold(0.0f64, |m, r| m.max(r[rhs].abs()));
            if infeasibility > 1e-9 * scale {
                return Err(Error::LpInfeasible);
            }
            // Drive remaining artificials out of the basis, dropping redundant rows.
            let mut r = 0;
            while r < self.rows.len() {
                if self.basis[r] >= self.first_artificial {
                    match (0..self.first_artificial).find(|&j| self.rows[r][j].abs() > 1e-9) {
                        Some(c) => {
                            let mut dummy = vec![0.0; self.width + 1];
                            self.pivot(&mut dummy, r, c);
                            r += 1;
                        }
                        None => {
                            self.rows.remove(r);
                            self.basis.remove(r);
                        }
                    }
                } else {
                    r += 1;
                }
            }
        }

        let d: Vec<f64> = objective.iter().map(|c| -c).collect();
        let mut cost = self.reduced_costs(&d);
        if !self.run(&mut cost, self.first_artificial) {
            return Err(Error::LpUnbounded);
        }
        let mut x = vec![0.0; self.n_structural];
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if b < self.n_structural {
                x[b] = row[rhs].max(0.0);
            }
        }
        let value = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution { x, value })
    }
}
