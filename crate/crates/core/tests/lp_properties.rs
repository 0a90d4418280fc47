mod common;

use common::{infeasible_lp, random_bounded_lp, ray_lp, vertex_enumeration, Exact, TOL};
use ctplan::solver::{solve_lp, LpStatus, PivotRule, SolverOptions};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn bounded_lp_matches_vertex_enumeration(seed in any::<u64>()) {
        let lp = random_bounded_lp(&mut rng(seed));
        let s = solve_lp(&lp, &SolverOptions::default()).unwrap();
        match vertex_enumeration(&lp) {
            Exact::Optimal(z) => {
                prop_assert_eq!(s.status, LpStatus::Optimal);
                prop_assert!((s.objective - z).abs() <= TOL * (1.0 + z.abs()), "{} vs {}", s.objective, z);
                prop_assert!(lp.max_violation(&s.values) <= TOL);
            }
            Exact::Infeasible => prop_assert_eq!(s.status, LpStatus::Infeasible),
        }
    }

    #[test]
    fn reported_objective_is_evaluated_at_values(seed in any::<u64>()) {
        let lp = random_bounded_lp(&mut rng(seed));
        let s = solve_lp(&lp, &SolverOptions::default()).unwrap();
        if s.status == LpStatus::Optimal {
            prop_assert!((lp.objective_value(&s.values) - s.objective).abs() <= 1e-9);
        }
    }

    #[test]
    fn bland_rule_agrees_with_default(seed in any::<u64>()) {
        let lp = random_bounded_lp(&mut rng(seed));
        let a = solve_lp(&lp, &SolverOptions::default()).unwrap();
        let b = solve_lp(&lp, &SolverOptions { pivot_rule: PivotRule::Bland, ..Default::default() }).unwrap();
        prop_assert_eq!(a.status, b.status);
        if a.status == LpStatus::Optimal {
            prop_assert!((a.objective - b.objective).abs() <= TOL * (1.0 + a.objective.abs()));
        }
    }

    #[test]
    fn positive_row_scaling_keeps_the_optimum(seed in any::<u64>(), scale in 0.01f64..100.0) {
        let lp = random_bounded_lp(&mut rng(seed));
        let mut scaled = lp.clone();
        for row in &mut scaled.constraints {
            row.rhs *= scale;
            row.coeffs.iter_mut().for_each(|c| c.1 *= scale);
        }
        let a = solve_lp(&lp, &SolverOptions::default()).unwrap();
        let b = solve_lp(&scaled, &SolverOptions::default()).unwrap();
        prop_assert_eq!(a.status, b.status);
        if a.status == LpStatus::Optimal {
            prop_assert!((a.objective - b.objective).abs() <= TOL * (1.0 + a.objective.abs()));
        }
    }

    #[test]
    fn contradictory_rows_are_infeasible(seed in any::<u64>()) {
        let lp = infeasible_lp(&mut rng(seed));
        let s = solve_lp(&lp, &SolverOptions::default()).unwrap();
        prop_assert_eq!(s.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_exactly_when_ray_is_feasible(seed in any::<u64>()) {
        let (lp, probe) = ray_lp(&mut rng(seed));
        let s = solve_lp(&lp, &SolverOptions::default()).unwrap();
        let expected = match vertex_enumeration(&probe) {
            Exact::Optimal(_) => LpStatus::Unbounded,
            Exact::Infeasible => LpStatus::Infeasible,
        };
        prop_assert_eq!(s.status, expected);
    }
}
