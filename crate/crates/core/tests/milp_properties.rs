mod common;

use common::{random_bounded_lp, TOL};
use ctplan::oracle::pattern_lp;
use ctplan::planner::effort_milp;
use ctplan::solver::{solve_lp, solve_milp, LpStatus, MilpProblem, MilpStatus, SolverOptions};
use ctplan::PlanningConfig;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Best objective over every binary assignment, each solved as an LP.
fn enumerate_binaries(milp: &MilpProblem) -> Option<f64> {
    let k = milp.binary_vars.len();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << k) {
        let mut lp = milp.base.clone();
        for (b, &j) in milp.binary_vars.iter().enumerate() {
            let v = f64::from((mask >> b) & 1);
            lp.bounds[j] = (v, v);
        }
        let s = solve_lp(&lp, &SolverOptions::default()).unwrap();
        if s.status == LpStatus::Optimal && best.is_none_or(|z| s.objective < z) {
            best = Some(s.objective);
        }
    }
    best
}

fn random_milp(seed: u64) -> MilpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lp = random_bounded_lp(&mut rng);
    let extra = rng.gen_range(0..=6);
    for _ in 0..extra {
        let cost = rng.gen_range(-5..=5) as f64;
        lp.add_var(0.0, 1.0, cost);
    }
    // Couple the extra columns into the rows so they matter.
    let n = lp.num_vars;
    for row in &mut lp.constraints {
        for j in n - extra..n {
            if rng.gen_bool(0.5) {
                row.coeffs.push((j, rng.gen_range(-6..=6) as f64));
            }
        }
    }
    let binaries = (0..n).filter(|&j| j >= n - extra || rng.gen_bool(0.3)).collect();
    MilpProblem::new(lp, binaries)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn milp_matches_binary_enumeration(seed in any::<u64>()) {
        let milp = random_milp(seed);
        prop_assume!(milp.binary_vars.len() <= 12);
        let s = solve_milp(&milp, &SolverOptions::default()).unwrap();
        match enumerate_binaries(&milp) {
            Some(z) => {
                prop_assert_eq!(s.status, MilpStatus::Optimal);
                prop_assert!((s.objective - z).abs() <= TOL * (1.0 + z.abs()), "{} vs {}", s.objective, z);
                prop_assert!(milp.base.max_violation(&s.values) <= TOL);
                for &j in &milp.binary_vars {
                    prop_assert!(s.values[j] == 0.0 || s.values[j] == 1.0);
                }
            }
            None => prop_assert_eq!(s.status, MilpStatus::Infeasible),
        }
    }

    #[test]
    fn bound_trace_never_decreases(seed in any::<u64>()) {
        let milp = random_milp(seed);
        let s = solve_milp(&milp, &SolverOptions::default()).unwrap();
        for w in s.bound_trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9, "{:?}", s.bound_trace);
        }
    }
}

#[test]
fn fixed_contact_pattern_matches_pattern_lp() {
    let c = PlanningConfig { x_init: 1.0, x_goal: 0.05, dt: 0.1, ..PlanningConfig::reference() };
    let horizon = 10;
    let (milp, layout) = effort_milp(&c, horizon, 1.0).unwrap();
    let opts = SolverOptions::default();
    let mut contact_feasible = 0;
    for mask in 0u32..(1 << (horizon + 1)) {
        let pattern: Vec<bool> = (0..=horizon).map(|t| (mask >> t) & 1 == 1).collect();
        let mut fixed = milp.clone();
        for (t, &z) in pattern.iter().enumerate() {
            let j = layout.zeta(t).unwrap();
            let v = if z { 1.0 } else { 0.0 };
            fixed.base.bounds[j] = (v, v);
        }
        let m = solve_milp(&fixed, &opts).unwrap();
        let p = solve_lp(&pattern_lp(&c, &pattern), &opts).unwrap();
        assert_eq!(m.status == MilpStatus::Optimal, p.status == LpStatus::Optimal, "pattern {pattern:?}");
        if p.status == LpStatus::Optimal {
            assert!((m.objective - p.objective).abs() <= TOL, "pattern {pattern:?}: {} vs {}", m.objective, p.objective);
            if mask != 0 {
                contact_feasible += 1;
            }
        }
    }
    assert!(contact_feasible >= 3, "only {contact_feasible} feasible contact patterns");
}
