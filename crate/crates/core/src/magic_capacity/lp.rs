//! Dense two-phase simplex for `min cᵀx, Ax = b, x ≥ 0` with Bland's rule,
//! followed by an LU re-solve on the final basis and a primal-dual check.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LpTolerances {
    /// Pivot and reduced-cost threshold inside the simplex.
    pub pivot: f64,
    /// Allowed `‖Ax − b‖∞` and negativity of `x`.
    pub feasibility: f64,
    /// Allowed negativity of reduced costs `c − Aᵀy`.
    pub optimality: f64,
    /// Allowed `|cᵀx − bᵀy|`.
    pub gap: f64,
}

impl Default for LpTolerances {
    fn default() -> Self {
        Self {
            pivot: 1e-11,
            feasibility: 1e-8,
            optimality: 1e-8,
            gap: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LpCertificate {
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub duality_gap: f64,
    pub primal_residual: f64,
    pub min_reduced_cost: f64,
    pub min_x: f64,
    pub iterations: usize,
}

impl LpCertificate {
    pub fn is_valid(&self, tol: &LpTolerances) -> bool {
        self.duality_gap < tol.gap
            && self.primal_residual < tol.feasibility
            && self.min_reduced_cost > -tol.optimality
            && self.min_x > -tol.feasibility
    }
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub objective: f64,
    pub basis: Vec<usize>,
    pub certificate: LpCertificate,
}

const MAX_ITERATIONS: usize = 200_000;

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[col];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = col;
    }

    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.width]
    }

    /// Runs Bland's rule on `cost` restricted to columns `< allowed`.
    fn optimize(&mut self, cost: &[f64], allowed: usize, eps: f64, iters: &mut usize) -> Result<()> {
        loop {
            *iters += 1;
            if *iters > MAX_ITERATIONS {
                return Err(Error::Numerical("simplex iteration limit".into()));
            }
            let mut entering = None;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let rc = cost[j]
                    - self
                        .basis
                        .iter()
                        .enumerate()
                        .map(|(i, &bj)| cost[bj] * self.rows[i][j])
                        .sum::<f64>();
                if rc < -eps {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a > eps {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - eps || (ratio <= lr + eps && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::Numerical("linear program is unbounded".into()));
            };
            self.pivot(r, col);
        }
    }
}

impl LinearProgram {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>) -> Result<Self> {
        if a.nrows() != b.len() || a.ncols() != c.len() {
            return Err(Error::DimensionMismatch("LP data shapes disagree".into()));
        }
        Ok(Self { a, b, c })
    }

    pub fn solve(&self) -> Result<LpSolution> {
        self.solve_with(&LpTolerances::default())
    }

    pub fn solve_with(&self, tol: &LpTolerances) -> Result<LpSolution> {
        let (m, n) = self.a.shape();
        let width = n + m;
        let mut rows = Vec::with_capacity(m);
        for i in 0..m {
            let sign = if self.b[i] < 0.0 { -1.0 } else { 1.0 };
            let mut row = vec![0.0; width + 1];
            for j in 0..n {
                row[j] = sign * self.a[(i, j)];
            }
            row[n + i] = 1.0;
            row[width] = sign * self.b[i];
            rows.push(row);
        }
        let mut t = Tableau {
            rows,
            basis: (n..n + m).collect(),
            width,
        };
        let mut iters = 0;
        let phase1: Vec<f64> = (0..width).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
        t.optimize(&phase1, width, tol.pivot, &mut iters)?;
        let infeas: f64 = (0..m).filter(|&i| t.basis[i] >= n).map(|i| t.rhs(i)).sum();
        if infeas > tol.feasibility {
            return Err(Error::Numerical(format!("linear program is infeasible ({infeas:.3e})")));
        }
        // Drive artificial variables out of the basis; drop redundant rows.
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= n {
                let col = (0..n)
                    .filter(|j| !t.basis.contains(j))
                    .max_by(|&a, &b| t.rows[i][a].abs().total_cmp(&t.rows[i][b].abs()));
                match col {
                    Some(j) if t.rows[i][j].abs() > 1e-9 => t.pivot(i, j),
                    _ => {
                        t.rows.remove(i);
                        t.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        let mut cost: Vec<f64> = self.c.iter().copied().collect();
        cost.resize(width, 0.0);
        t.optimize(&cost, n, tol.pivot, &mut iters)?;
        self.certify(&t.basis, iters)
    }

    /// Re-solves on `basis` from the original data and builds the certificate.
    fn certify(&self, basis: &[usize], iterations: usize) -> Result<LpSolution> {
        let (m, n) = self.a.shape();
        let kept_rows = self.independent_rows(basis);
        let bm = DMatrix::from_fn(kept_rows.len(), basis.len(), |i, j| self.a[(kept_rows[i], basis[j])]);
        let bb = DVector::from_fn(kept_rows.len(), |i, _| self.b[kept_rows[i]]);
        let cb = DVector::from_fn(basis.len(), |j, _| self.c[basis[j]]);
        let lu = bm.clone().lu();
        let xb = lu
            .solve(&bb)
            .ok_or_else(|| Error::Numerical("singular final basis".into()))?;
        let yk = bm
            .transpose()
            .lu()
            .solve(&cb)
            .ok_or_else(|| Error::Numerical("singular final basis".into()))?;
        let mut x = DVector::zeros(n);
        for (j, &bj) in basis.iter().enumerate() {
            x[bj] = xb[j];
        }
        let mut y = DVector::zeros(m);
        for (i, &r) in kept_rows.iter().enumerate() {
            y[r] = yk[i];
        }
        let reduced = &self.c - self.a.transpose() * &y;
        let primal = self.c.dot(&x);
        let dual = self.b.dot(&y);
        let residual = (&self.a * &x - &self.b).amax();
        let certificate = LpCertificate {
            primal_objective: primal,
            dual_objective: dual,
            duality_gap: (primal - dual).abs(),
            primal_residual: residual,
            min_reduced_cost: reduced.min(),
            min_x: x.min(),
            iterations,
        };
        Ok(LpSolution {
            x,
            y,
            objective: primal,
            basis: basis.to_vec(),
            certificate,
        })
    }

    /// Rows that, restricted to the basis columns, form a nonsingular block.
    fn independent_rows(&self, basis: &[usize]) -> Vec<usize> {
        let m = self.a.nrows();
        let mut kept: Vec<usize> = Vec::new();
        let mut echelon: Vec<Vec<f64>> = Vec::new();
        for i in 0..m {
            let mut row: Vec<f64> = basis.iter().map(|&j| self.a[(i, j)]).collect();
            for (prev, e) in echelon.iter().enumerate() {
                let lead = e.iter().position(|v| v.abs() > 1e-12).unwrap_or(prev);
                let f = row[lead] / e[lead];
                for (v, ev) in row.iter_mut().zip(e) {
                    *v -= f * ev;
                }
            }
            if row.iter().any(|v| v.abs() > 1e-9) {
                kept.push(i);
                echelon.push(row);
                if kept.len() == basis.len() {
                    break;
                }
            }
        }
        kept
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp() {
        // min -x0 - x1 s.t. x0 + 2x1 + s0 = 4, 3x0 + x1 + s1 = 6
        let a = DMatrix::from_row_slice(2, 4, &[1.0, 2.0, 1.0, 0.0, 3.0, 1.0, 0.0, 1.0]);
        let lp = LinearProgram::new(a, DVector::from_vec(vec![4.0, 6.0]), DVector::from_vec(vec![-1.0, -1.0, 0.0, 0.0]))
            .unwrap();
        let s = lp.solve().unwrap();
        assert!((s.objective + 2.8).abs() < 1e-12);
        assert!(s.certificate.is_valid(&LpTolerances::default()));
    }

    #[test]
    fn redundant_rows_and_negative_rhs() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 1.0, 2.0, 2.0, 2.0, -1.0, 0.0, 1.0]);
        let lp = LinearProgram::new(a, DVector::from_vec(vec![1.0, 2.0, -0.5]), DVector::from_vec(vec![1.0, 2.0, 3.0]))
            .unwrap();
        let s = lp.solve().unwrap();
        assert!(s.certificate.is_valid(&LpTolerances::default()), "{:?}", s.certificate);
        assert!((s.objective - 1.5).abs() < 1e-12);
    }

    #[test]
    fn infeasible_is_reported() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let lp = LinearProgram::new(a, DVector::from_vec(vec![-1.0]), DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert!(lp.solve().is_err());
    }
}
