//! Small-scale LP and binary MILP solver.
//!
//! Problems are stored sparsely (one coefficient list per row) and handed to
//! a dense bounded-variable simplex after fixed columns and redundant rows
//! have been stripped. The MILP layer is a depth-first branch-and-bound with
//! bound propagation at every node.

mod bnb;
pub mod dump;
mod presolve;
mod simplex;

use thiserror::Error;

pub use bnb::solve_milp;

/// Constraint sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

/// One linear row `sum(coef * x[idx]) <sense> rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates this row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let act = self.activity(x);
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - act).max(0.0),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }
}

/// Minimisation LP with per-variable bounds. Infinite bounds are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<(f64, f64)>,
}

impl LpProblem {
    /// `num_vars` variables, zero objective, bounds `[0, inf)`.
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); num_vars],
        }
    }

    pub fn add_var(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        self.num_vars += 1;
        self.objective.push(cost);
        self.bounds.push((lower, upper));
        self.num_vars - 1
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint { coeffs, sense, rhs });
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.bounds[var] = (lower, upper);
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest row or bound violation at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|c| c.violation(x))
            .fold(0.0, f64::max);
        let bounds = self
            .bounds
            .iter()
            .zip(x)
            .map(|(&(lo, hi), &v)| (lo - v).max(v - hi).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if self.objective.len() != self.num_vars {
            return Err(SolverError::DimensionMismatch {
                what: "objective",
                expected: self.num_vars,
                found: self.objective.len(),
            });
        }
        if self.bounds.len() != self.num_vars {
            return Err(SolverError::DimensionMismatch {
                what: "bounds",
                expected: self.num_vars,
                found: self.bounds.len(),
            });
        }
        for (j, &c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(SolverError::NonFinite(format!("objective coefficient of x{j}")));
            }
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(SolverError::NonFinite(format!("bounds of x{j}")));
            }
            if lo > hi {
                return Err(SolverError::InvertedBounds { var: j, lower: lo, upper: hi });
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(SolverError::NonFinite(format!("right-hand side of row {i}")));
            }
            for &(j, a) in &row.coeffs {
                if j >= self.num_vars {
                    return Err(SolverError::IndexOutOfRange { row: i, index: j, num_vars: self.num_vars });
                }
                if !a.is_finite() {
                    return Err(SolverError::NonFinite(format!("coefficient of x{j} in row {i}")));
                }
            }
        }
        Ok(())
    }
}

/// An LP whose listed variables must take values in {0, 1}.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpProblem {
    pub base: LpProblem,
    pub binary_vars: Vec<usize>,
}

impl MilpProblem {
    /// Marks `binary_vars` as binary and clamps their bounds to `[0, 1]`.
    pub fn new(mut base: LpProblem, mut binary_vars: Vec<usize>) -> Self {
        binary_vars.sort_unstable();
        binary_vars.dedup();
        for &j in &binary_vars {
            if j < base.num_vars {
                base.bounds[j] = (0.0, 1.0);
            }
        }
        Self { base, binary_vars }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        self.base.validate()?;
        for &j in &self.binary_vars {
            if j >= self.base.num_vars {
                return Err(SolverError::BinaryOutOfRange { index: j, num_vars: self.base.num_vars });
            }
            let (lo, hi) = self.base.bounds[j];
            if lo < 0.0 || hi > 1.0 {
                return Err(SolverError::BinaryBounds { var: j, lower: lo, upper: hi });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Variable values; meaningful only when `status == Optimal`.
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    /// The LP relaxation is unbounded.
    Unbounded,
    /// Node budget ran out. The incumbent, if any, is reported.
    NodeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: MilpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub nodes_explored: usize,
    /// Incumbent objective minus best open bound (`inf` without incumbent).
    pub bound_gap: f64,
    pub lp_iterations: usize,
    /// Global lower bound after every processed node.
    pub bound_trace: Vec<f64>,
}

impl MilpSolution {
    pub fn has_incumbent(&self) -> bool {
        !self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotRule {
    /// Most-negative reduced cost, switching to Bland's rule after a stall.
    DantzigWithStallGuard,
    /// Bland's smallest-index rule throughout.
    Bland,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub int_tol: f64,
    pub pivot_tol: f64,
    pub node_limit: usize,
    pub gap_tol: f64,
    pub pivot_rule: PivotRule,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            int_tol: 1e-6,
            pivot_tol: 1e-9,
            node_limit: 1_000_000,
            gap_tol: 1e-9,
            pivot_rule: PivotRule::DantzigWithStallGuard,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), SolverError> {
        let ok = [self.feas_tol, self.int_tol, self.pivot_tol, self.gap_tol]
            .iter()
            .all(|t| t.is_finite() && *t > 0.0);
        if ok {
            Ok(())
        } else {
            Err(SolverError::InvalidOptions)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("row {row} references x{index} but the problem has {num_vars} variables")]
    IndexOutOfRange { row: usize, index: usize, num_vars: usize },
    #[error("binary variable x{index} out of range ({num_vars} variables)")]
    BinaryOutOfRange { index: usize, num_vars: usize },
    #[error("binary variable x{var} has bounds [{lower}, {upper}], expected within [0, 1]")]
    BinaryBounds { var: usize, lower: f64, upper: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("x{var} has lower bound {lower} above upper bound {upper}")]
    InvertedBounds { var: usize, lower: f64, upper: f64 },
    #[error("{what} has length {found}, expected {expected}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("solver tolerances must be finite and strictly positive")]
    InvalidOptions,
    #[error("simplex iteration limit reached ({0} iterations)")]
    IterationLimit(usize),
}

/// Solves `problem` to optimality, or classifies it as infeasible/unbounded.
pub fn solve_lp(problem: &LpProblem, opts: &SolverOptions) -> Result<LpSolution, SolverError> {
    opts.validate()?;
    problem.validate()?;
    solve_lp_with_bounds(problem, &problem.bounds, opts)
}

/// Solves `problem` with its variable bounds replaced by `bounds`.
/// Assumes the problem has already been validated.
pub(crate) fn solve_lp_with_bounds(
    problem: &LpProblem,
    bounds: &[(f64, f64)],
    opts: &SolverOptions,
) -> Result<LpSolution, SolverError> {
    let reduced = match presolve::reduce(problem, bounds, opts.feas_tol) {
        Some(r) => r,
        None => {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                values: Vec::new(),
                objective: f64::INFINITY,
                iterations: 0,
            })
        }
    };
    let outcome = simplex::solve(&reduced.dense, opts)?;
    let (status, values, iterations) = match outcome {
        simplex::Outcome::Optimal { x, iterations } => (LpStatus::Optimal, reduced.expand(&x), iterations),
        simplex::Outcome::Infeasible { iterations } => (LpStatus::Infeasible, Vec::new(), iterations),
        simplex::Outcome::Unbounded { iterations } => (LpStatus::Unbounded, Vec::new(), iterations),
    };
    let objective = match status {
        LpStatus::Optimal => problem.objective_value(&values),
        LpStatus::Infeasible => f64::INFINITY,
        LpStatus::Unbounded => f64::NEG_INFINITY,
    };
    Ok(LpSolution { status, values, objective, iterations })
}
