//! The symmetry-reduced selection LP: the least total expected error any
//! ε-differentially-private selection rule can achieve across a bounded
//! score lattice, with certificates that permute-and-flip attains it.
//!
//! One variable per (canonical vector, distinct level): the probability of
//! selecting *one particular* candidate at that level. Symmetric mechanisms
//! lose nothing by this reduction, and any feasible reduced solution
//! symmetrizes back to a full mechanism, so the reduced optimum equals the
//! unreduced one.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::exact::{pmf_exponential, pmf_pf_dp};
use crate::optimality::dual::{
    dual_feasibility_check, dual_solve, optimal_epsilon_threshold, pf_exactly_optimal,
    DualCertificate,
};
use crate::optimality::lattice::{enumerate_lattice, LatticeVector};
use crate::optimality::simplex::{
    solve, tableau_cells, LpModel, LpRow, RowOp, SimplexOutcome, MAX_TABLEAU_CELLS,
};
use crate::scores::PrivacyParams;
use crate::{Error, Mechanism, Result};

/// One LP variable: the selection probability of a single candidate sitting
/// at `level` in canonical vector `vector`.
#[derive(Debug, Clone, Serialize)]
pub struct LpVariable {
    pub vector: usize,
    pub level: u32,
    /// How many candidates of the vector share this level.
    pub count: u32,
}

#[derive(Debug, Clone)]
pub struct SelectionLp {
    pub n: usize,
    pub k: usize,
    pub params: PrivacyParams,
    pub vectors: Vec<LatticeVector>,
    pub vars: Vec<LpVariable>,
    /// Minimization model: rows 0..vectors.len() are the per-vector equality
    /// constraints, the rest the privacy inequalities; costs are
    /// multiplicity · count · (level gap), so the objective is the total
    /// expected error over all ordered lattice vectors.
    pub model: LpModel,
    var_of: BTreeMap<(usize, u32), usize>,
}

impl SelectionLp {
    /// Score distance of one lattice level (2Δ in general, Δ under the
    /// monotonic flag — either way one step changes each coin by e^{−ε}).
    pub fn step(&self) -> f64 {
        self.params.epsilon() / self.params.scale()
    }

    pub fn var_index(&self, vector: usize, level: u32) -> Option<usize> {
        self.var_of.get(&(vector, level)).copied()
    }

    pub fn num_privacy_rows(&self) -> usize {
        self.model.rows.len() - self.vectors.len()
    }

    /// The reduced solution vector induced by an exact mechanism pmf.
    pub fn mechanism_solution(&self, mechanism: Mechanism) -> Result<Vec<f64>> {
        let mut x = vec![0.0f64; self.vars.len()];
        for (vi, v) in self.vectors.iter().enumerate() {
            let scores = v.scores(self.step())?;
            let dist = match mechanism {
                Mechanism::PermuteAndFlip => pmf_pf_dp(&scores, &self.params),
                Mechanism::Exponential => pmf_exponential(&scores, &self.params),
                Mechanism::ReportNoisyMax => {
                    return Err(Error::InvalidArgument(
                        "the selection LP compares permute-and-flip and exponential".into(),
                    ))
                }
            };
            // Levels are ascending, so the first candidate at each level is
            // the class representative.
            let mut pos = 0usize;
            for (l, cnt) in v.classes() {
                x[self.var_of[&(vi, l)]] = dist.probs()[pos];
                pos += cnt as usize;
            }
        }
        Ok(x)
    }

    /// Total expected error (≥ 0) of a reduced solution.
    pub fn error_objective(&self, x: &[f64]) -> f64 {
        self.model.objective_value(x)
    }

    /// Expected error of a reduced solution on one vector (unweighted by
    /// multiplicity).
    pub fn vector_error(&self, x: &[f64], vector: usize) -> f64 {
        let h = self.step();
        self.vectors[vector]
            .classes()
            .iter()
            .map(|&(l, cnt)| cnt as f64 * h * l as f64 * x[self.var_of[&(vector, l)]])
            .sum()
    }

    /// CPLEX LP-format export of the model.
    pub fn to_lp_format(&self) -> String {
        let name = |j: usize| {
            let v = &self.vars[j];
            format!("x_v{}_l{}", v.vector, v.level)
        };
        let mut out = String::new();
        let _ = writeln!(
            out,
            "\\ selection LP: n={} k={} eps={} step={}",
            self.n,
            self.k,
            self.params.epsilon(),
            self.step()
        );
        out.push_str("Minimize\n obj:");
        let mut wrote = false;
        for (j, &c) in self.model.minimize.iter().enumerate() {
            if c != 0.0 {
                let _ = write!(out, " {} {} {}", if wrote { "+" } else { "" }, c, name(j));
                wrote = true;
            }
        }
        if !wrote {
            let _ = write!(out, " 0 {}", name(0));
        }
        out.push_str("\nSubject To\n");
        for (i, row) in self.model.rows.iter().enumerate() {
            let label = if i < self.vectors.len() {
                format!("eq_v{i}")
            } else {
                format!("priv_{}", i - self.vectors.len())
            };
            let _ = write!(out, " {label}:");
            for (t, &(j, c)) in row.coeffs.iter().enumerate() {
                let _ = write!(out, " {} {} {}", if t > 0 { "+" } else { "" }, c, name(j));
            }
            let op = match row.op {
                RowOp::Eq => "=",
                RowOp::Ge => ">=",
            };
            let _ = writeln!(out, " {op} {}", row.rhs);
        }
        out.push_str("End\n");
        // Collapse the double spaces introduced by empty sign slots.
        out.replace("  ", " ")
    }
}

/// Builds the reduced selection LP for n candidates and lattice depth k.
pub fn build_lp(n: usize, k: usize, params: &PrivacyParams) -> Result<SelectionLp> {
    let vectors = enumerate_lattice(n, k)?;

    // Predict the model shape before allocating any of it: the canonical
    // vector list can be modest while the dense tableau is hopeless.
    let projected_vars: usize = vectors.iter().map(|v| v.classes().len()).sum();
    let type_a = projected_vars - vectors.len();
    let type_b = if n >= 2 {
        vectors
            .iter()
            .filter(|v| v.levels().last().expect("non-empty") + 1 <= k as u32)
            .count()
    } else {
        0
    };
    let ge_rows = type_a + type_b;
    let cells = tableau_cells(projected_vars, ge_rows, vectors.len() + ge_rows);
    if cells > MAX_TABLEAU_CELLS {
        return Err(Error::TooLarge {
            what: "dense simplex tableau cells",
            got: usize::try_from(cells).unwrap_or(usize::MAX),
            limit: MAX_TABLEAU_CELLS as usize,
        });
    }

    let index: BTreeMap<Vec<u32>, usize> = vectors
        .iter()
        .enumerate()
        .map(|(i, v)| (v.levels().to_vec(), i))
        .collect();

    let mut vars = Vec::new();
    let mut var_of = BTreeMap::new();
    for (vi, v) in vectors.iter().enumerate() {
        for (l, cnt) in v.classes() {
            var_of.insert((vi, l), vars.len());
            vars.push(LpVariable { vector: vi, level: l, count: cnt });
        }
    }

    let h = params.epsilon() / params.scale();
    let decay = (-params.epsilon()).exp();
    let mut minimize = vec![0.0f64; vars.len()];
    for (j, var) in vars.iter().enumerate() {
        minimize[j] =
            vectors[var.vector].multiplicity() as f64 * var.count as f64 * h * var.level as f64;
    }

    let mut rows = Vec::new();
    for (vi, v) in vectors.iter().enumerate() {
        let coeffs = v
            .classes()
            .iter()
            .map(|&(l, cnt)| (var_of[&(vi, l)], cnt as f64))
            .collect();
        rows.push(LpRow { coeffs, op: RowOp::Eq, rhs: 1.0 });
    }
    for (vi, v) in vectors.iter().enumerate() {
        for (l, _) in v.classes() {
            if l > 0 {
                // Raise one candidate at level l by a step: it lands at
                // l − 1 in the neighboring vector (the minimum stays 0).
                let mut w = v.levels().to_vec();
                let pos = w.iter().position(|&x| x == l).expect("class present");
                w.remove(pos);
                let ins = w.partition_point(|&x| x < l - 1);
                w.insert(ins, l - 1);
                let vj = index[&w];
                rows.push(LpRow {
                    coeffs: vec![
                        (var_of[&(vi, l)], 1.0),
                        (var_of[&(vj, l - 1)], -decay),
                    ],
                    op: RowOp::Ge,
                    rhs: 0.0,
                });
            } else if n >= 2 {
                // The maximal class: the adversarial neighbor keeps this
                // candidate fixed and pushes every other candidate down one
                // step — on-lattice only if the deepest level stays ≤ k.
                let deepest = *v.levels().last().expect("non-empty");
                if deepest + 1 > k as u32 {
                    continue;
                }
                let mut w: Vec<u32> = v.levels().iter().skip(1).map(|&x| x + 1).collect();
                w.insert(0, 0);
                let vj = index[&w];
                rows.push(LpRow {
                    coeffs: vec![
                        (var_of[&(vi, 0)], 1.0),
                        (var_of[&(vj, 0)], -decay),
                    ],
                    op: RowOp::Ge,
                    rhs: 0.0,
                });
            }
        }
    }

    let num_vars = vars.len();
    Ok(SelectionLp {
        n,
        k,
        params: params.clone(),
        vectors,
        vars,
        model: LpModel { num_vars, minimize, rows },
        var_of,
    })
}

/// Everything the LP run establishes about one (n, k, ε) instance.
#[derive(Debug, Clone, Serialize)]
pub struct OptimalityReport {
    pub n: usize,
    pub k: usize,
    pub epsilon: f64,
    pub vectors: usize,
    pub variables: usize,
    pub privacy_rows: usize,
    /// Minimal total expected error over all private mechanisms (≥ 0).
    pub lp_error: f64,
    /// The same in utility convention (= −lp_error).
    pub lp_objective: f64,
    pub pf_error: f64,
    pub em_error: f64,
    /// pf_error / lp_error and em_error / lp_error (1 means optimal).
    pub pf_ratio: f64,
    pub em_ratio: f64,
    /// Feasibility of the exact permute-and-flip solution in the LP.
    pub pf_residual: f64,
    /// |rhs·y − lp_error| with y the simplex row duals — strong duality.
    pub strong_duality_gap: f64,
    pub simplex_iterations: u64,
    pub simplex_residual: f64,
    pub dual: DualCertificate,
    pub threshold: f64,
    /// ε at or above the threshold (the regime in which the dual certificate
    /// is guaranteed to hold for every lattice).
    pub pf_exactly_optimal: bool,
}

/// Builds and solves the LP, evaluates both mechanisms on it, and attaches
/// the recurrence dual certificate plus the solver's own duality check.
pub fn certify_optimality(n: usize, k: usize, params: &PrivacyParams) -> Result<OptimalityReport> {
    let lp = build_lp(n, k, params)?;
    let solution = match solve(&lp.model)? {
        SimplexOutcome::Optimal(s) => s,
        SimplexOutcome::Infeasible => {
            return Err(Error::Solver(
                "selection LP reported infeasible (it always has feasible points)".into(),
            ))
        }
    };
    let x_pf = lp.mechanism_solution(Mechanism::PermuteAndFlip)?;
    let x_em = lp.mechanism_solution(Mechanism::Exponential)?;
    let pf_error = lp.error_objective(&x_pf);
    let em_error = lp.error_objective(&x_em);
    let lp_error = solution.objective;

    let dual = dual_solve(&lp.vectors, k, params);
    let cert = dual_feasibility_check(&lp.vectors, k, params, &dual, lp_error);

    let by: f64 = lp
        .model
        .rows
        .iter()
        .zip(&solution.row_duals)
        .map(|(row, y)| row.rhs * y)
        .sum();

    Ok(OptimalityReport {
        n,
        k,
        epsilon: params.epsilon(),
        vectors: lp.vectors.len(),
        variables: lp.vars.len(),
        privacy_rows: lp.num_privacy_rows(),
        lp_error,
        lp_objective: -lp_error,
        pf_error,
        em_error,
        pf_ratio: crate::analysis::error_ratio(pf_error, lp_error),
        em_ratio: crate::analysis::error_ratio(em_error, lp_error),
        pf_residual: lp.model.max_residual(&x_pf),
        strong_duality_gap: (by - lp_error).abs(),
        simplex_iterations: solution.iterations,
        simplex_residual: solution.max_residual,
        dual: cert,
        threshold: optimal_epsilon_threshold(),
        pf_exactly_optimal: pf_exactly_optimal(params.epsilon()),
    })
}

/// Outcome of asking the LP to beat permute-and-flip on one coordinate.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum ParetoProbe {
    /// No private mechanism can exceed permute-and-flip there at all.
    Infeasible { target_value: f64 },
    /// The probe found a mechanism, but it pays for the improvement: on the
    /// witness vector its expected error strictly exceeds permute-and-flip's.
    Dominated {
        target_value: f64,
        objective: f64,
        witness: usize,
        witness_levels: Vec<u32>,
        pf_error: f64,
        probe_error: f64,
    },
    /// The probe found a mechanism and no per-vector error witness at this
    /// margin — nothing is claimed either way.
    NoWitness { target_value: f64, objective: f64 },
}

/// Adds the constraint x(vector, level) ≥ pf_value + margin to the LP and
/// reports what happens.
pub fn pareto_probe(
    n: usize,
    k: usize,
    params: &PrivacyParams,
    vector: usize,
    level: u32,
    margin: f64,
) -> Result<ParetoProbe> {
    if !(margin.is_finite() && margin > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "probe margin ({margin}) must be positive"
        )));
    }
    let lp = build_lp(n, k, params)?;
    let Some(target) = lp.var_index(vector, level) else {
        return Err(Error::InvalidArgument(format!(
            "no class at level {level} in lattice vector {vector}"
        )));
    };
    let x_pf = lp.mechanism_solution(Mechanism::PermuteAndFlip)?;
    let target_value = x_pf[target];

    let mut probed = lp.model.clone();
    probed.rows.push(LpRow {
        coeffs: vec![(target, 1.0)],
        op: RowOp::Ge,
        rhs: target_value + margin,
    });
    match solve(&probed)? {
        SimplexOutcome::Infeasible => Ok(ParetoProbe::Infeasible { target_value }),
        SimplexOutcome::Optimal(sol) => {
            let mut witness: Option<(usize, f64, f64)> = None;
            for vi in 0..lp.vectors.len() {
                let pf_err = lp.vector_error(&x_pf, vi);
                let probe_err = lp.vector_error(&sol.x, vi);
                let excess = probe_err - pf_err;
                if excess > 1e-9 && witness.map_or(true, |(_, _, best)| excess > best) {
                    witness = Some((vi, pf_err, excess));
                }
            }
            match witness {
                Some((vi, pf_err, excess)) => Ok(ParetoProbe::Dominated {
                    target_value,
                    objective: sol.objective,
                    witness: vi,
                    witness_levels: lp.vectors[vi].levels().to_vec(),
                    pf_error: pf_err,
                    probe_error: pf_err + excess,
                }),
                None => Ok(ParetoProbe::NoWitness {
                    target_value,
                    objective: sol.objective,
                }),
            }
        }
    }
}
