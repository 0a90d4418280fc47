//! Depth-first branch-and-bound over binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::presolve::propagate;
use super::{
    solve_lp_with_bounds, LpStatus, MilpProblem, MilpSolution, MilpStatus, SolverError, SolverOptions,
};

const PROPAGATION_PASSES: usize = 200;

struct Node {
    bounds: Vec<(f64, f64)>,
    depth: usize,
    /// Parent relaxation objective; a valid lower bound for this subtree.
    bound: f64,
    branch_value: u8,
    seq: usize,
}

// Deepest first, then best bound, then the 0-branch, then creation order.
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.depth
            .cmp(&other.depth)
            .then_with(|| other.bound.total_cmp(&self.bound))
            .then_with(|| other.branch_value.cmp(&self.branch_value))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

struct Incumbent {
    values: Vec<f64>,
    objective: f64,
}

/// Solves a binary MILP. Binaries are branched in index order, 0-branch
/// first; every node's bounds are propagated before its LP is solved.
pub fn solve_milp(problem: &MilpProblem, opts: &SolverOptions) -> Result<MilpSolution, SolverError> {
    opts.validate()?;
    problem.validate()?;
    let lp = &problem.base;
    let mut is_binary = vec![false; lp.num_vars];
    for &j in &problem.binary_vars {
        is_binary[j] = true;
    }

    let mut root = lp.bounds.clone();
    let mut nodes_explored = 0;
    let mut lp_iterations = 0;
    let mut bound_trace = Vec::new();
    let infeasible = |nodes_explored, lp_iterations, bound_trace| MilpSolution {
        status: MilpStatus::Infeasible,
        values: Vec::new(),
        objective: f64::INFINITY,
        nodes_explored,
        bound_gap: f64::INFINITY,
        lp_iterations,
        bound_trace,
    };
    if !propagate(lp, &mut root, &is_binary, opts.feas_tol, PROPAGATION_PASSES) {
        return Ok(infeasible(0, 0, bound_trace));
    }

    let mut open = BinaryHeap::new();
    let mut seq = 0;
    open.push(Node { bounds: root, depth: 0, bound: f64::NEG_INFINITY, branch_value: 0, seq });
    let mut incumbent: Option<Incumbent> = None;
    let mut hit_limit = false;

    let prune_at = |inc: &Option<Incumbent>| -> f64 {
        inc.as_ref()
            .map_or(f64::INFINITY, |i| i.objective - opts.gap_tol * (1.0 + i.objective.abs()))
    };

    while let Some(node) = open.pop() {
        if node.bound >= prune_at(&incumbent) {
            continue;
        }
        if nodes_explored >= opts.node_limit {
            open.push(node);
            hit_limit = true;
            break;
        }
        nodes_explored += 1;

        let relax = solve_lp_with_bounds(lp, &node.bounds, opts)?;
        lp_iterations += relax.iterations;
        match relax.status {
            LpStatus::Infeasible => {}
            LpStatus::Unbounded => {
                return Ok(MilpSolution {
                    status: MilpStatus::Unbounded,
                    values: Vec::new(),
                    objective: f64::NEG_INFINITY,
                    nodes_explored,
                    bound_gap: f64::INFINITY,
                    lp_iterations,
                    bound_trace,
                });
            }
            LpStatus::Optimal if relax.objective >= prune_at(&incumbent) => {}
            LpStatus::Optimal => {
                let x = relax.values;
                let frac = problem
                    .binary_vars
                    .iter()
                    .copied()
                    .find(|&j| (x[j] - x[j].round()).abs() > opts.int_tol);
                let branch_on = match frac {
                    Some(j) => Some(j),
                    None => match accept_integral(problem, &node.bounds, x, opts)? {
                        Accepted::Feasible(values, iters) => {
                            lp_iterations += iters;
                            let objective = lp.objective_value(&values);
                            if incumbent.as_ref().is_none_or(|i| objective < i.objective) {
                                incumbent = Some(Incumbent { values, objective });
                            }
                            None
                        }
                        Accepted::Branch(j, iters) => {
                            lp_iterations += iters;
                            j
                        }
                    },
                };
                if let Some(j) = branch_on {
                    for value in [0u8, 1u8] {
                        let mut bounds = node.bounds.clone();
                        bounds[j] = (value as f64, value as f64);
                        if propagate(lp, &mut bounds, &is_binary, opts.feas_tol, PROPAGATION_PASSES) {
                            seq += 1;
                            open.push(Node {
                                bounds,
                                depth: node.depth + 1,
                                bound: relax.objective,
                                branch_value: value,
                                seq,
                            });
                        }
                    }
                }
            }
        }

        let open_min = open.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
        let global = open_min.min(incumbent.as_ref().map_or(f64::INFINITY, |i| i.objective));
        bound_trace.push(global);
    }

    let best_open = open.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    Ok(match incumbent {
        Some(inc) => {
            let gap = if hit_limit { (inc.objective - best_open).max(0.0) } else { 0.0 };
            MilpSolution {
                status: if hit_limit { MilpStatus::NodeLimit } else { MilpStatus::Optimal },
                values: inc.values,
                objective: inc.objective,
                nodes_explored,
                bound_gap: gap,
                lp_iterations,
                bound_trace,
            }
        }
        None if hit_limit => MilpSolution {
            status: MilpStatus::NodeLimit,
            values: Vec::new(),
            objective: f64::INFINITY,
            nodes_explored,
            bound_gap: f64::INFINITY,
            lp_iterations,
            bound_trace,
        },
        None => infeasible(nodes_explored, lp_iterations, bound_trace),
    })
}

enum Accepted {
    Feasible(Vec<f64>, usize),
    /// Rounding did not survive re-verification; branch on this binary (or
    /// drop the node when `None`).
    Branch(Option<usize>, usize),
}

/// Rounds near-integral binaries and re-verifies every row at the rounded
/// point. When big-M rows amplify the rounding error beyond tolerance the LP
/// is re-solved with the binaries fixed.
fn accept_integral(
    problem: &MilpProblem,
    bounds: &[(f64, f64)],
    mut x: Vec<f64>,
    opts: &SolverOptions,
) -> Result<Accepted, SolverError> {
    let lp = &problem.base;
    let original = x.clone();
    for &j in &problem.binary_vars {
        x[j] = x[j].round();
    }
    if lp.max_violation(&x) <= opts.feas_tol {
        return Ok(Accepted::Feasible(x, 0));
    }
    let mut fixed = bounds.to_vec();
    for &j in &problem.binary_vars {
        fixed[j] = (x[j], x[j]);
    }
    let mut resolved = solve_lp_with_bounds(lp, &fixed, opts)?;
    let mut iterations = resolved.iterations;
    if resolved.status == LpStatus::Optimal && lp.max_violation(&resolved.values) > opts.feas_tol {
        // Propagated node bounds can leave the fixed LP feasible only up to
        // round-off; the root box avoids that.
        let mut root = lp.bounds.clone();
        for &j in &problem.binary_vars {
            root[j] = (x[j], x[j]);
        }
        resolved = solve_lp_with_bounds(lp, &root, opts)?;
        iterations += resolved.iterations;
    }
    if resolved.status == LpStatus::Optimal {
        let mut values = resolved.values;
        for &j in &problem.binary_vars {
            values[j] = values[j].round();
        }
        if lp.max_violation(&values) <= opts.feas_tol {
            return Ok(Accepted::Feasible(values, iterations));
        }
    }
    let j = problem
        .binary_vars
        .iter()
        .copied()
        .filter(|&j| (original[j] - original[j].round()).abs() > 0.0)
        .max_by(|&a, &b| {
            let fa = (original[a] - original[a].round()).abs();
            let fb = (original[b] - original[b].round()).abs();
            fa.total_cmp(&fb).then(b.cmp(&a))
        });
    Ok(Accepted::Branch(j, iterations))
}
