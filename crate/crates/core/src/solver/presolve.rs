//! Bound tightening and LP reduction ahead of the dense simplex.

use super::simplex::DenseLp;
use super::{LpProblem, Sense};

/// Magnitudes at or above this are treated as infinite.
const INF: f64 = 1e20;

fn finite(v: f64) -> bool {
    v.abs() < INF
}

/// Reduced LP plus the map back to the original variable space.
pub(crate) struct Reduced {
    pub dense: DenseLp,
    /// Original index of each dense column.
    cols: Vec<usize>,
    /// Values of every original variable; free columns are overwritten on expand.
    base_values: Vec<f64>,
}

impl Reduced {
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.base_values.clone();
        for (k, &j) in self.cols.iter().enumerate() {
            out[j] = x[k];
        }
        out
    }
}

/// Tightens `bounds` in place from singleton rows, substitutes fixed columns
/// and drops rows that the remaining bounds already satisfy. Returns `None`
/// when the bounds alone prove infeasibility.
pub(crate) fn reduce(problem: &LpProblem, bounds: &[(f64, f64)], feas_tol: f64) -> Option<Reduced> {
    let n = problem.num_vars;
    let mut lo: Vec<f64> = bounds.iter().map(|b| b.0).collect();
    let mut hi: Vec<f64> = bounds.iter().map(|b| b.1).collect();
    let fix_tol = 1e-12;
    let mut active = vec![true; problem.constraints.len()];

    loop {
        let mut changed = false;
        for (i, row) in problem.constraints.iter().enumerate() {
            if !active[i] {
                continue;
            }
            let mut rhs = row.rhs;
            let mut live: Option<(usize, f64)> = None;
            let mut n_live = 0;
            for &(j, a) in &row.coeffs {
                if a == 0.0 {
                    continue;
                }
                if hi[j] - lo[j] <= fix_tol {
                    rhs -= a * lo[j];
                } else {
                    n_live += 1;
                    live = Some((j, a));
                }
            }
            match (n_live, live) {
                (0, _) => {
                    let tol = feas_tol * (1.0 + row.rhs.abs());
                    let ok = match row.sense {
                        Sense::Le => rhs >= -tol,
                        Sense::Ge => rhs <= tol,
                        Sense::Eq => rhs.abs() <= tol,
                    };
                    if !ok {
                        return None;
                    }
                    active[i] = false;
                }
                (1, Some((j, a))) => {
                    let v = rhs / a;
                    let (upper, lower) = match (row.sense, a > 0.0) {
                        (Sense::Eq, _) => (Some(v), Some(v)),
                        (Sense::Le, true) | (Sense::Ge, false) => (Some(v), None),
                        (Sense::Le, false) | (Sense::Ge, true) => (None, Some(v)),
                    };
                    if let Some(u) = upper {
                        hi[j] = hi[j].min(u);
                    }
                    if let Some(l) = lower {
                        lo[j] = lo[j].max(l);
                    }
                    if lo[j] > hi[j] {
                        if lo[j] - hi[j] > feas_tol * (1.0 + lo[j].abs()) {
                            return None;
                        }
                        let mid = 0.5 * (lo[j] + hi[j]);
                        lo[j] = mid;
                        hi[j] = mid;
                    }
                    active[i] = false;
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            break;
        }
    }

    // Rows implied by the bounds.
    for (i, row) in problem.constraints.iter().enumerate() {
        if !active[i] || row.sense == Sense::Eq {
            continue;
        }
        let (min_act, max_act) = activity_range(&row.coeffs, &lo, &hi);
        let redundant = match row.sense {
            Sense::Le => max_act <= row.rhs,
            Sense::Ge => min_act >= row.rhs,
            Sense::Eq => false,
        };
        if redundant {
            active[i] = false;
        }
    }

    let mut col_of = vec![usize::MAX; n];
    let mut cols = Vec::new();
    let mut base_values = vec![0.0; n];
    for j in 0..n {
        if hi[j] - lo[j] <= fix_tol {
            base_values[j] = lo[j];
        } else {
            col_of[j] = cols.len();
            cols.push(j);
        }
    }

    let nc = cols.len();
    let kept: Vec<usize> = (0..problem.constraints.len()).filter(|&i| active[i]).collect();
    let mut a = vec![0.0; kept.len() * nc];
    let mut rhs = Vec::with_capacity(kept.len());
    let mut sense = Vec::with_capacity(kept.len());
    for (r, &i) in kept.iter().enumerate() {
        let row = &problem.constraints[i];
        let mut b = row.rhs;
        for &(j, c) in &row.coeffs {
            if col_of[j] == usize::MAX {
                b -= c * base_values[j];
            } else {
                a[r * nc + col_of[j]] += c;
            }
        }
        rhs.push(b);
        sense.push(row.sense);
    }
    let dense = DenseLp {
        rows: kept.len(),
        cols: nc,
        a,
        rhs,
        sense,
        lower: cols.iter().map(|&j| lo[j]).collect(),
        upper: cols.iter().map(|&j| hi[j]).collect(),
        cost: cols.iter().map(|&j| problem.objective[j]).collect(),
    };
    Some(Reduced { dense, cols, base_values })
}

fn activity_range(coeffs: &[(usize, f64)], lo: &[f64], hi: &[f64]) -> (f64, f64) {
    let mut min_act = 0.0;
    let mut max_act = 0.0;
    for &(j, a) in coeffs {
        if a > 0.0 {
            min_act += a * lo[j];
            max_act += a * hi[j];
        } else if a < 0.0 {
            min_act += a * hi[j];
            max_act += a * lo[j];
        }
    }
    (min_act, max_act)
}

/// Feasibility-based bound tightening over all rows, iterated to a fixpoint
/// (or `max_passes`). Binary bounds are rounded to integers. Returns `false`
/// when infeasibility is detected.
pub(crate) fn propagate(
    problem: &LpProblem,
    bounds: &mut [(f64, f64)],
    is_binary: &[bool],
    feas_tol: f64,
    max_passes: usize,
) -> bool {
    for _ in 0..max_passes {
        let mut changed = false;
        for row in &problem.constraints {
            // Minimum/maximum activity split into finite part and count of
            // infinite contributions.
            let (mut min_fin, mut min_inf, mut max_fin, mut max_inf) = (0.0, 0usize, 0.0, 0usize);
            for &(j, a) in &row.coeffs {
                let (l, h) = bounds[j];
                let (mn, mx) = if a > 0.0 { (a * l, a * h) } else { (a * h, a * l) };
                if a == 0.0 {
                    continue;
                }
                if finite(mn) {
                    min_fin += mn;
                } else {
                    min_inf += 1;
                }
                if finite(mx) {
                    max_fin += mx;
                } else {
                    max_inf += 1;
                }
            }
            let upper_rhs = matches!(row.sense, Sense::Le | Sense::Eq).then_some(row.rhs);
            let lower_rhs = matches!(row.sense, Sense::Ge | Sense::Eq).then_some(row.rhs);
            let row_tol = feas_tol * (1.0 + row.rhs.abs());
            if let Some(u) = upper_rhs {
                if min_inf == 0 && min_fin > u + row_tol {
                    return false;
                }
            }
            if let Some(l) = lower_rhs {
                if max_inf == 0 && max_fin < l - row_tol {
                    return false;
                }
            }
            for &(j, a) in &row.coeffs {
                if a.abs() < 1e-12 {
                    continue;
                }
                let (l, h) = bounds[j];
                let (mn, mx) = if a > 0.0 { (a * l, a * h) } else { (a * h, a * l) };
                let mut new_lo = l;
                let mut new_hi = h;
                if let Some(u) = upper_rhs {
                    // a x_j <= u - (min activity of the rest)
                    let rest = if finite(mn) {
                        (min_inf == 0).then_some(min_fin - mn)
                    } else {
                        (min_inf == 1).then_some(min_fin)
                    };
                    if let Some(rest) = rest {
                        let bound = (u - rest) / a;
                        if a > 0.0 {
                            new_hi = new_hi.min(bound);
                        } else {
                            new_lo = new_lo.max(bound);
                        }
                    }
                }
                if let Some(lr) = lower_rhs {
                    let rest = if finite(mx) {
                        (max_inf == 0).then_some(max_fin - mx)
                    } else {
                        (max_inf == 1).then_some(max_fin)
                    };
                    if let Some(rest) = rest {
                        let bound = (lr - rest) / a;
                        if a > 0.0 {
                            new_lo = new_lo.max(bound);
                        } else {
                            new_hi = new_hi.min(bound);
                        }
                    }
                }
                if is_binary[j] {
                    new_lo = (new_lo - 1e-6).ceil().max(0.0);
                    new_hi = (new_hi + 1e-6).floor().min(1.0);
                } else {
                    // Loosen slightly so rounding never cuts off feasible points.
                    new_lo -= 1e-9 * (1.0 + new_lo.abs());
                    new_hi += 1e-9 * (1.0 + new_hi.abs());
                }
                let improve_lo = new_lo > l && (!finite(l) || new_lo - l > 1e-7 * (1.0 + l.abs()));
                let improve_hi = new_hi < h && (!finite(h) || h - new_hi > 1e-7 * (1.0 + h.abs()));
                let mut nl = if improve_lo && finite(new_lo) { new_lo } else { l };
                let mut nh = if improve_hi && finite(new_hi) { new_hi } else { h };
                if nl > nh {
                    if nl - nh > feas_tol * (1.0 + nl.abs()) || is_binary[j] {
                        return false;
                    }
                    let mid = 0.5 * (nl + nh);
                    nl = mid;
                    nh = mid;
                }
                if nl != l || nh != h {
                    bounds[j] = (nl, nh);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    true
}
