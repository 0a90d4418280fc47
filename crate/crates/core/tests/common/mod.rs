#![allow(dead_code)]

use ctplan::model::PlanningConfig;
use ctplan::solver::{LpProblem, Sense};
use rand::Rng;

pub const TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exact {
    Optimal(f64),
    Infeasible,
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn for_each_subset(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), f);
}

/// Exhaustive vertex enumeration for an LP whose variables all have finite
/// bounds (so the feasible set is a polytope and an optimum sits on a
/// vertex).
pub fn vertex_enumeration(lp: &LpProblem) -> Exact {
    let n = lp.num_vars;
    assert!(lp.bounds.iter().all(|&(l, u)| l.is_finite() && u.is_finite()));
    // Half-spaces g x <= h.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in &lp.constraints {
        let mut g = vec![0.0; n];
        for &(j, a) in &c.coeffs {
            g[j] += a;
        }
        match c.sense {
            Sense::Le => rows.push((g, c.rhs)),
            Sense::Ge => rows.push((g.iter().map(|v| -v).collect(), -c.rhs)),
            Sense::Eq => {
                rows.push((g.clone(), c.rhs));
                rows.push((g.iter().map(|v| -v).collect(), -c.rhs));
            }
        }
    }
    for (j, &(l, u)) in lp.bounds.iter().enumerate() {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        rows.push((e.clone(), u));
        rows.push((e.iter().map(|v| -v).collect(), -l));
    }
    let mut best: Option<f64> = None;
    for_each_subset(rows.len(), n, &mut |idx| {
        let a = idx.iter().map(|&i| rows[i].0.clone()).collect();
        let b = idx.iter().map(|&i| rows[i].1).collect();
        if let Some(x) = solve_square(a, b) {
            let feasible = rows.iter().all(|(g, h)| {
                let s: f64 = g.iter().zip(&x).map(|(a, b)| a * b).sum();
                s <= h + 1e-9 * (1.0 + h.abs())
            });
            if feasible {
                let obj = lp.objective_value(&x);
                if best.is_none_or(|b| obj < b) {
                    best = Some(obj);
                }
            }
        }
    });
    best.map_or(Exact::Infeasible, Exact::Optimal)
}

fn sense(rng: &mut impl Rng) -> Sense {
    match rng.gen_range(0..5) {
        0 | 1 => Sense::Le,
        2 | 3 => Sense::Ge,
        _ => Sense::Eq,
    }
}

/// Integer-data LP with 1..=6 boxed variables and 1..=6 rows.
pub fn random_bounded_lp(rng: &mut impl Rng) -> LpProblem {
    let n = rng.gen_range(1..=6);
    let m = rng.gen_range(1..=6);
    let mut lp = LpProblem::new(n);
    for j in 0..n {
        let lo = rng.gen_range(-4..=2) as f64;
        let hi = lo + rng.gen_range(0..=6) as f64;
        lp.bounds[j] = (lo, hi);
        lp.objective[j] = rng.gen_range(-5..=5) as f64;
    }
    for _ in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.7) {
                coeffs.push((j, rng.gen_range(-5..=5) as f64));
            }
        }
        let rhs = rng.gen_range(-8..=8) as f64;
        lp.add_constraint(coeffs, sense(rng), rhs);
    }
    lp
}

/// Bounded LP plus rows that no point of the box can satisfy.
pub fn infeasible_lp(rng: &mut impl Rng) -> LpProblem {
    let mut lp = random_bounded_lp(rng);
    let j = rng.gen_range(0..lp.num_vars);
    let hi = lp.bounds[j].1;
    lp.add_constraint(vec![(j, 1.0)], Sense::Ge, hi + 1.0 + rng.gen_range(0..3) as f64);
    lp
}

/// Bounded LP plus a variable `y >= 0` with negative cost that only ever
/// loosens the rows it enters, so the LP is unbounded exactly when it is
/// feasible. Also returns a boxed probe with `y` pinned at 1000: row
/// activities over the box stay far below that, so the probe is feasible
/// exactly when the LP is.
pub fn ray_lp(rng: &mut impl Rng) -> (LpProblem, LpProblem) {
    let base = loop {
        let lp = random_bounded_lp(rng);
        if lp.num_vars < 6 {
            break lp;
        }
    };
    let mut lp = base.clone();
    let y = lp.add_var(0.0, f64::INFINITY, -(rng.gen_range(1..=4) as f64));
    for row in &mut lp.constraints {
        let mag = rng.gen_range(0..=3) as f64;
        match row.sense {
            Sense::Le => row.coeffs.push((y, -mag)),
            Sense::Ge => row.coeffs.push((y, mag)),
            Sense::Eq => {}
        }
    }
    let mut probe = lp.clone();
    probe.bounds[y] = (1000.0, 1000.0);
    (lp, probe)
}

/// Scenario drawn from the randomized-equivalence ranges, kept only when a
/// continuous-time route fits in 9 steps so that short horizons are
/// sometimes feasible.
pub fn random_scenario(rng: &mut impl Rng) -> PlanningConfig {
    use ctplan::planner::{analytic_min_time, Mode};
    loop {
        let a = rng.gen_range(2.0..=10.0);
        let dt = if rng.gen_bool(0.5) { 0.05 } else { 0.1 };
        let c = PlanningConfig {
            x_init: rng.gen_range(0.5..=5.0),
            x_goal: rng.gen_range(0.05..=1.0),
            dt,
            a_max: a,
            a_min: -a,
            restitution: if rng.gen_bool(0.3) { 0.5 } else { 0.0 },
            ..PlanningConfig::reference()
        };
        let fits = analytic_min_time(&c, Mode::CollisionTolerant).map_or(true, |t| t / dt <= 9.0);
        if fits {
            return c;
        }
    }
}
