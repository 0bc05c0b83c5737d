//! Dense two-phase primal simplex.
//!
//! Small and deterministic rather than fast: Bland's rule (no cycling),
//! reduced costs recomputed from the basis every iteration (no drift), and
//! row duals read back off the artificial columns at the optimum so callers
//! can verify certificates independently. Intended for the selection LPs
//! built in this crate — hundreds of rows, not millions.

use crate::{Error, Result};

/// Upper bound on dense tableau cells `solve` will allocate (400 MB of
/// f64). Larger models are refused up front instead of gambling on the
/// allocator.
pub const MAX_TABLEAU_CELLS: u128 = 50_000_000;

/// Dense tableau cells a model of this shape needs: one row per constraint,
/// with columns for the structurals, one surplus per ≥-row, one artificial
/// per row, and the rhs.
pub fn tableau_cells(num_vars: usize, num_ge_rows: usize, num_rows: usize) -> u128 {
    num_rows as u128 * (num_vars as u128 + num_ge_rows as u128 + num_rows as u128 + 1)
}

/// Constraint sense. `Ge` means coeffs·x ≥ rhs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowOp {
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct LpRow {
    /// Sparse (variable index, coefficient); duplicate indices are summed.
    pub coeffs: Vec<(usize, f64)>,
    pub op: RowOp,
    pub rhs: f64,
}

/// min c·x subject to the rows and x ≥ 0.
#[derive(Debug, Clone)]
pub struct LpModel {
    pub num_vars: usize,
    pub minimize: Vec<f64>,
    pub rows: Vec<LpRow>,
}

impl LpModel {
    fn validate(&self) -> Result<()> {
        if self.minimize.len() != self.num_vars {
            return Err(Error::LengthMismatch(self.minimize.len(), self.num_vars));
        }
        if !self.minimize.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidArgument("objective must be finite".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(Error::InvalidArgument(format!("row {i}: rhs must be finite")));
            }
            for &(j, v) in &row.coeffs {
                if j >= self.num_vars {
                    return Err(Error::InvalidArgument(format!(
                        "row {i}: variable index {j} out of range (n = {})",
                        self.num_vars
                    )));
                }
                if !v.is_finite() {
                    return Err(Error::InvalidArgument(format!("row {i}: coefficient must be finite")));
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.minimize.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    fn row_value(&self, row: &LpRow, x: &[f64]) -> f64 {
        row.coeffs.iter().map(|&(j, v)| v * x[j]).sum()
    }

    /// Largest constraint violation of x against the model: equality rows as
    /// |a·x − b|, inequality rows as max(0, b − a·x), plus any negativity of x.
    pub fn max_residual(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().fold(0.0f64, |acc, &v| acc.max(-v));
        for row in &self.rows {
            let ax = self.row_value(row, x);
            let r = match row.op {
                RowOp::Eq => (ax - row.rhs).abs(),
                RowOp::Ge => (row.rhs - ax).max(0.0),
            };
            worst = worst.max(r);
        }
        worst
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One dual per original row (zero for rows found redundant). For a
    /// minimization these satisfy Aᵀy ≤ c with y ≥ 0 on `Ge` rows, y free on
    /// `Eq` rows, and rhs·y = objective.
    pub row_duals: Vec<f64>,
    pub iterations: u64,
    pub max_residual: f64,
}

#[derive(Debug, Clone)]
pub enum SimplexOutcome {
    Optimal(LpSolution),
    Infeasible,
}

const ITERATION_LIMIT: u64 = 1_000_000;
const REDUCED_COST_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-11;
const PHASE1_TOL: f64 = 1e-8;
const RESIDUAL_LIMIT: f64 = 1e-9;

struct Tableau {
    /// m rows × (ncols + 1); the trailing entry is the rhs.
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Original model row index per tableau row (rows can be deleted).
    rowmap: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.a[r][self.ncols]
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let piv = self.a[r][j];
        for v in self.a[r].iter_mut() {
            *v /= piv;
        }
        for i in 0..self.a.len() {
            if i == r {
                continue;
            }
            let factor = self.a[i][j];
            if factor == 0.0 {
                continue;
            }
            for col in 0..=self.ncols {
                self.a[i][col] -= factor * self.a[r][col];
            }
            self.a[i][j] = 0.0; // exact, avoids residue
        }
        self.basis[r] = j;
    }

    /// Reduced cost of column j under the given column costs.
    fn reduced_cost(&self, cost: &[f64], j: usize) -> f64 {
        let mut rc = cost[j];
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                rc -= cb * self.a[r][j];
            }
        }
        rc
    }

    /// Runs Bland-rule simplex to optimality for the given costs. Columns
    /// with index ≥ enter_limit (the artificials) may never enter the basis.
    fn run(&mut self, cost: &[f64], enter_limit: usize, iterations: &mut u64) -> Result<()> {
        loop {
            *iterations += 1;
            if *iterations > ITERATION_LIMIT {
                return Err(Error::Solver(format!(
                    "simplex iteration limit ({ITERATION_LIMIT}) exceeded"
                )));
            }
            // Bland: smallest improving column index.
            let mut entering = None;
            for j in 0..enter_limit {
                if self.reduced_cost(cost, j) < -REDUCED_COST_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(j) = entering else { return Ok(()) };
            // Ratio test; ties broken by smallest basis variable (Bland).
            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.a.len() {
                let arj = self.a[r][j];
                if arj > PIVOT_TOL {
                    let ratio = self.rhs(r).max(0.0) / arj;
                    let better = match leaving {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - 1e-12
                                || (ratio < lratio + 1e-12 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leaving = Some((r, ratio));
                    }
                }
            }
            let Some((r, _)) = leaving else {
                return Err(Error::Solver("LP is unbounded".into()));
            };
            self.pivot(r, j);
        }
    }
}

/// Solves the model with a two-phase simplex. Returns `Infeasible` when no
/// point satisfies the rows, an `Error::Solver` on unboundedness or iteration
/// exhaustion, and otherwise an optimal basic solution with row duals.
pub fn solve(model: &LpModel) -> Result<SimplexOutcome> {
    model.validate()?;
    let m = model.rows.len();
    let ns = model.num_vars;
    let n_surplus = model.rows.iter().filter(|r| r.op == RowOp::Ge).count();
    let cells = tableau_cells(ns, n_surplus, m);
    if cells > MAX_TABLEAU_CELLS {
        return Err(Error::TooLarge {
            what: "dense simplex tableau cells",
            got: usize::try_from(cells).unwrap_or(usize::MAX),
            limit: MAX_TABLEAU_CELLS as usize,
        });
    }
    let art_start = ns + n_surplus;
    let ncols = art_start + m;

    let mut a = vec![vec![0.0f64; ncols + 1]; m];
    let mut flip = vec![1.0f64; m];
    let mut surplus = ns;
    for (i, row) in model.rows.iter().enumerate() {
        for &(j, v) in &row.coeffs {
            a[i][j] += v;
        }
        a[i][ncols] = row.rhs;
        if row.op == RowOp::Ge {
            a[i][surplus] = -1.0;
            surplus += 1;
        }
        if a[i][ncols] < 0.0 {
            for v in a[i].iter_mut() {
                *v = -*v;
            }
            flip[i] = -1.0;
        }
        a[i][art_start + i] = 1.0;
    }

    let mut t = Tableau {
        a,
        basis: (0..m).map(|i| art_start + i).collect(),
        rowmap: (0..m).collect(),
        ncols,
    };
    let mut iterations = 0u64;

    // Phase 1: minimize the sum of artificials.
    let mut phase1_like = vec![0.0f64; ncols];
    for c in phase1_like.iter_mut().skip(art_start) {
        *c = 1.0;
    }
    t.run(&phase1_like, art_start, &mut iterations)?;
    let infeasibility: f64 = t
        .basis
        .iter()
        .enumerate()
        .filter(|&(_, &b)| b >= art_start)
        .map(|(r, _)| t.rhs(r).max(0.0))
        .sum();
    if infeasibility > PHASE1_TOL {
        return Ok(SimplexOutcome::Infeasible);
    }

    // Drive remaining (degenerate) artificials out of the basis, deleting
    // rows that turn out redundant.
    let mut r = 0;
    while r < t.a.len() {
        if t.basis[r] >= art_start {
            let pivot_col = (0..art_start).find(|&j| t.a[r][j].abs() > 1e-9);
            match pivot_col {
                Some(j) => t.pivot(r, j),
                None => {
                    t.a.remove(r);
                    t.basis.remove(r);
                    t.rowmap.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    // Phase 2: the real objective (zero on surplus and artificial columns).
    let mut phase2 = vec![0.0f64; ncols];
    phase2[..ns].copy_from_slice(&model.minimize);
    t.run(&phase2, art_start, &mut iterations)?;

    let mut x = vec![0.0f64; ns];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < ns {
            x[b] = t.rhs(r).max(0.0);
        }
    }

    // Row duals y = c_B · B⁻¹: the artificial column for original row i holds
    // B⁻¹ e_i, so y_i is its inner product with the basic costs; undo any
    // rhs-normalization sign flip.
    let mut row_duals = vec![0.0f64; m];
    for (i, dual) in row_duals.iter_mut().enumerate() {
        if let Some(r_of_i) = t.rowmap.iter().position(|&orig| orig == i) {
            let mut y = 0.0;
            for (r, &b) in t.basis.iter().enumerate() {
                let cb = phase2[b];
                if cb != 0.0 {
                    y += cb * t.a[r][art_start + t.rowmap[r_of_i]];
                }
            }
            *dual = flip[i] * y;
        }
    }

    let max_residual = model.max_residual(&x);
    if max_residual > RESIDUAL_LIMIT {
        return Err(Error::Solver(format!(
            "simplex residual {max_residual:.3e} exceeds {RESIDUAL_LIMIT:.0e}"
        )));
    }
    Ok(SimplexOutcome::Optimal(LpSolution {
        objective: model.objective_value(&x),
        x,
        row_duals,
        iterations,
        max_residual,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ge(coeffs: &[(usize, f64)], rhs: f64) -> LpRow {
        LpRow { coeffs: coeffs.to_vec(), op: RowOp::Ge, rhs }
    }

    fn eq(coeffs: &[(usize, f64)], rhs: f64) -> LpRow {
        LpRow { coeffs: coeffs.to_vec(), op: RowOp::Eq, rhs }
    }

    fn solve_optimal(model: &LpModel) -> LpSolution {
        match solve(model).unwrap() {
            SimplexOutcome::Optimal(s) => s,
            SimplexOutcome::Infeasible => panic!("unexpectedly infeasible"),
        }
    }

    #[test]
    fn known_two_variable_optimum() {
        // min -x0 - 2 x1 s.t. x0 + x1 ≤ 4 (as -x0 - x1 ≥ -4), x1 ≤ 3, x ≥ 0.
        let model = LpModel {
            num_vars: 2,
            minimize: vec![-1.0, -2.0],
            rows: vec![
                ge(&[(0, -1.0), (1, -1.0)], -4.0),
                ge(&[(1, -1.0)], -3.0),
            ],
        };
        let s = solve_optimal(&model);
        assert!((s.x[0] - 1.0).abs() < 1e-9 && (s.x[1] - 3.0).abs() < 1e-9);
        assert!((s.objective + 7.0).abs() < 1e-9);
        assert!(s.max_residual <= 1e-9);
    }

    #[test]
    fn equality_and_inequality_mix() {
        // min x0 + x1 + x2 s.t. x0 + x1 + x2 = 1, x0 - x1 ≥ 0.2.
        let model = LpModel {
            num_vars: 3,
            minimize: vec![1.0, 1.0, 1.0],
            rows: vec![
                eq(&[(0, 1.0), (1, 1.0), (2, 1.0)], 1.0),
                ge(&[(0, 1.0), (1, -1.0)], 0.2),
            ],
        };
        let s = solve_optimal(&model);
        assert!((s.objective - 1.0).abs() < 1e-9);
        assert!(s.x[0] - s.x[1] >= 0.2 - 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let infeasible = LpModel {
            num_vars: 1,
            minimize: vec![0.0],
            rows: vec![eq(&[(0, 1.0)], 1.0), ge(&[(0, 1.0)], 2.0)],
        };
        assert!(matches!(solve(&infeasible).unwrap(), SimplexOutcome::Infeasible));

        let unbounded = LpModel {
            num_vars: 1,
            minimize: vec![-1.0],
            rows: vec![ge(&[(0, 1.0)], 1.0)],
        };
        assert!(matches!(solve(&unbounded), Err(Error::Solver(_))));
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        // The duplicated equality makes one artificial unremovable by pivots.
        let model = LpModel {
            num_vars: 2,
            minimize: vec![1.0, 2.0],
            rows: vec![
                eq(&[(0, 1.0), (1, 1.0)], 1.0),
                eq(&[(0, 1.0), (1, 1.0)], 1.0),
                ge(&[(1, 1.0)], 0.25),
            ],
        };
        let s = solve_optimal(&model);
        assert!((s.objective - (0.75 + 0.5)).abs() < 1e-9);
        assert!((s.x[0] - 0.75).abs() < 1e-9 && (s.x[1] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn duals_certify_the_optimum() {
        // min 3x0 + 2x1 s.t. x0 + x1 ≥ 2, x0 - x1 = 0.5.
        let model = LpModel {
            num_vars: 2,
            minimize: vec![3.0, 2.0],
            rows: vec![ge(&[(0, 1.0), (1, 1.0)], 2.0), eq(&[(0, 1.0), (1, -1.0)], 0.5)],
        };
        let s = solve_optimal(&model);
        // x = (1.25, 0.75), objective 5.25.
        assert!((s.objective - 5.25).abs() < 1e-9);

        // Strong duality: rhs·y = objective.
        let by: f64 = model
            .rows
            .iter()
            .zip(&s.row_duals)
            .map(|(row, y)| row.rhs * y)
            .sum();
        assert!((by - s.objective).abs() < 1e-9, "b·y = {by}");

        // Dual feasibility: Aᵀy ≤ c, y ≥ 0 on Ge rows.
        for j in 0..model.num_vars {
            let aty: f64 = model
                .rows
                .iter()
                .zip(&s.row_duals)
                .map(|(row, y)| {
                    row.coeffs
                        .iter()
                        .filter(|&&(col, _)| col == j)
                        .map(|&(_, v)| v * y)
                        .sum::<f64>()
                })
                .sum();
            assert!(aty <= model.minimize[j] + 1e-9);
        }
        assert!(s.row_duals[0] >= -1e-9);
    }

    #[test]
    fn degenerate_problems_terminate() {
        // Multiple rows active at the origin force degenerate pivots.
        let model = LpModel {
            num_vars: 3,
            minimize: vec![-0.75, 150.0, -0.02],
            rows: vec![
                ge(&[(0, -0.25), (1, 60.0), (2, 0.04)], 0.0),
                ge(&[(0, -0.5), (1, 90.0), (2, 0.02)], 0.0),
                ge(&[(2, -1.0)], -1.0),
            ],
        };
        // A classic cycling example (Beale); Bland's rule must terminate.
        let s = solve_optimal(&model);
        assert!((s.objective + 0.05).abs() < 1e-9, "objective {}", s.objective);
    }
}
