//! Optimality certification for permute-and-flip.
//!
//! The pipeline: enumerate a canonical score lattice ([`lattice`]), pose the
//! least-total-error selection problem as a linear program over symmetric
//! mechanisms ([`lp`]), solve it with an exact-arithmetic-spirited two-phase
//! simplex ([`simplex`]), and certify the optimum against a closed-form dual
//! candidate ([`dual`]). Above ε = ln((3+√5)/2) the certificate shows
//! permute-and-flip *is* the optimum; below it the gap is reported as-is.

pub mod dual;
pub mod lattice;
pub mod lp;
pub mod simplex;

pub use dual::{
    dual_feasibility_check, dual_solve, optimal_epsilon_threshold, pf_exactly_optimal,
    threshold_criterion, DualCertificate, DualSolution,
};
pub use lattice::{canonical_levels, enumerate_lattice, LatticeVector, LATTICE_LIMIT};
pub use lp::{
    build_lp, certify_optimality, pareto_probe, LpVariable, OptimalityReport, ParetoProbe,
    SelectionLp,
};
pub use simplex::{
    solve as solve_lp, tableau_cells, LpModel, LpRow, LpSolution, RowOp, SimplexOutcome,
    MAX_TABLEAU_CELLS,
};
