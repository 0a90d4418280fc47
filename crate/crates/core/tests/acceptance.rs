//! Acceptance criteria for the planner on the bundled scenario. Each test
//! prints one `criterion N: PASS|FAIL` line before asserting.

mod common;

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::{infeasible_lp, random_bounded_lp, random_scenario, ray_lp, vertex_enumeration, Exact, TOL};
use ctplan::model::PlanningConfig;
use ctplan::oracle::{brute_force_plan, replay};
use ctplan::planner::{
    analytic_min_time, effort_milp, goal_sweep, goal_sweep_plans, improvement_pct, min_time_search, Mode,
    PlanError, SearchOptions, TrajectoryPlan,
};
use ctplan::solver::{solve_lp, solve_milp, LpStatus, MilpStatus, SolverOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DAMAGE_CAPS: [f64; 6] = [0.0, 2.0, 4.0, 6.0, 8.0, 15.0];

fn scenario() -> PlanningConfig {
    let text = include_str!("../scenarios/paper_table1.cfg");
    ctplan::cli::parse_scenario(text).expect("bundled scenario parses").config.with_d_max(None)
}

fn verdict(n: usize, ok: bool, detail: String) {
    println!("criterion {n}: {} {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} failed: {detail}");
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

struct Fixture {
    free: TrajectoryPlan,
    free_time: Duration,
    tolerant: TrajectoryPlan,
    tolerant_time: Duration,
    damage: Vec<(f64, TrajectoryPlan)>,
    damage_time: Duration,
    sweep: Vec<(f64, Result<TrajectoryPlan, PlanError>)>,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let c = scenario();
        let opts = SearchOptions::default();
        let t = Instant::now();
        let free = min_time_search(&c, Mode::CollisionFree, &opts).expect("collision-free plan");
        let free_time = t.elapsed();
        let t = Instant::now();
        let tolerant = min_time_search(&c, Mode::CollisionTolerant, &opts).expect("collision-tolerant plan");
        let tolerant_time = t.elapsed();
        let t = Instant::now();
        let damage = DAMAGE_CAPS
            .iter()
            .map(|&d| {
                let p = min_time_search(&c.with_d_max(Some(d)), Mode::CollisionTolerant, &opts)
                    .expect("damage-capped plan");
                (d, p)
            })
            .collect();
        let damage_time = t.elapsed();
        let sweep = goal_sweep_plans(&c, 0.1, 1.0, 0.1, &opts).expect("sweep runs");
        Fixture { free, free_time, tolerant, tolerant_time, damage, damage_time, sweep }
    })
}

#[test]
fn criterion_1_collision_free_baseline() {
    let f = fixture();
    let c = scenario();
    let p = &f.free;
    let lower = analytic_min_time(&c, Mode::CollisionFree).unwrap();
    let ok = p.horizon.abs_diff(51) <= 1
        && close(p.min_time, p.horizon as f64 * 0.05)
        && !p.collided()
        && (lower - 2.5432).abs() < 5e-4
        && lower <= p.min_time + 1e-9
        && p.min_time <= lower + 2.0 * c.dt
        && f.free_time < Duration::from_secs(5);
    verdict(
        1,
        ok,
        format!(
            "steps {} time {:.2} s (continuous bound {lower:.4} s) in {:.2?}",
            p.horizon, p.min_time, f.free_time
        ),
    );
}

#[test]
fn criterion_2_collision_tolerant_speedup() {
    let f = fixture();
    let (p, base) = (&f.tolerant, &f.free);
    let gain = improvement_pct(base.min_time, p.min_time);
    let in_window = p.min_time >= 2.20 - 1e-9 && p.min_time <= 2.35 + 1e-9;
    let near_reference = (p.min_time - 2.245).abs() <= 0.1 + 1e-9 && (p.min_time - 2.25).abs() <= 0.1 + 1e-9;
    let ok = in_window
        && p.collided()
        && p.min_time < base.min_time
        && gain >= 8.0
        && near_reference
        && f.tolerant_time < Duration::from_secs(60);
    verdict(
        2,
        ok,
        format!(
            "steps {} time {:.2} s, contacts at {:?}, improvement {gain:.2}% (needs >= 8%), window {in_window}, in {:.2?}",
            p.horizon,
            p.min_time,
            p.contact_steps(),
            f.tolerant_time
        ),
    );
}

#[test]
fn criterion_3_damage_constrained_intermediate() {
    let f = fixture();
    let time = |d: f64| f.damage.iter().find(|(cap, _)| *cap == d).map(|(_, p)| p.min_time).unwrap();
    let t6 = time(6.0);
    let times: Vec<f64> = f.damage.iter().map(|(_, p)| p.min_time).collect();
    let monotone = times.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    let ok = (t6 - 2.39).abs() <= 0.10 + 1e-9
        && t6 > f.tolerant.min_time
        && t6 < f.free.min_time
        && time(15.0) == f.tolerant.min_time
        && monotone
        && f.damage_time < Duration::from_secs(300);
    let listing: Vec<String> = f.damage.iter().map(|(d, p)| format!("{d}->{:.2}", p.min_time)).collect();
    verdict(3, ok, format!("D_max->time [{}] in {:.2?}", listing.join(", "), f.damage_time));
}

#[test]
fn criterion_4_decision_sensitivity() {
    let f = fixture();
    let c = scenario();
    let opts = SearchOptions::default();
    let summary = goal_sweep(&c, 0.1, 1.0, 0.1, &opts).unwrap();
    let flags: Vec<Option<bool>> = summary.points.iter().map(|p| p.collided).collect();
    let all_ok = flags.iter().all(Option::is_some);
    let flips: Vec<usize> = (1..flags.len()).filter(|&k| flags[k - 1] != flags[k]).collect();
    let located = flips.len() == 1 && {
        let k = flips[0];
        let (before, after) = (summary.points[k - 1].x_goal, summary.points[k].x_goal);
        flags[k - 1] == Some(true) && before >= 0.5 - 1e-9 && after <= 0.8 + 1e-9
    };
    let mut agree = true;
    for (x_goal, outcome) in &f.sweep {
        let p = outcome.as_ref().unwrap();
        if !p.collided() {
            let free = min_time_search(&c.with_goal(*x_goal), Mode::CollisionFree, &opts).unwrap();
            agree &= free.horizon.abs_diff(p.horizon) <= 1;
        }
    }
    let ok = all_ok && located && agree && summary.transitions() == 1;
    let row: Vec<String> = summary
        .points
        .iter()
        .map(|p| format!("{:.1}:{}", p.x_goal, if p.collided == Some(true) { "hit" } else { "avoid" }))
        .collect();
    verdict(4, ok, format!("{} flip(s) [{}], avoided points match collision-free: {agree}", flips.len(), row.join(" ")));
}

#[test]
fn criterion_5_milp_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let opts = SolverOptions::default();
    let search = SearchOptions { tau_upper: Some(10), ..Default::default() };
    let (mut agree, mut feasible, mut with_contact_patterns) = (0, 0, 0);
    let mut mismatches = Vec::new();
    for case in 0..100 {
        let c = random_scenario(&mut rng);
        let tau = match min_time_search(&c, Mode::CollisionTolerant, &search) {
            Ok(p) => (p.horizon as i64 + rng.gen_range(-1..=1)).clamp(1, 10) as usize,
            Err(_) => rng.gen_range(6..=10),
        };
        let brute = brute_force_plan(&c, tau, &opts).unwrap();
        let (milp, _) = effort_milp(&c, tau, 1.0).unwrap();
        let s = solve_milp(&milp, &opts).unwrap();
        let same_status = (s.status == MilpStatus::Optimal) == brute.feasible
            && matches!(s.status, MilpStatus::Optimal | MilpStatus::Infeasible);
        let same_value = !brute.feasible || (s.objective - brute.objective).abs() <= TOL;
        if same_status && same_value {
            agree += 1;
        } else {
            mismatches.push(case);
        }
        if brute.feasible {
            feasible += 1;
            if brute.patterns_feasible > 1 {
                with_contact_patterns += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        5,
        agree == 100 && elapsed < Duration::from_secs(300),
        format!(
            "{agree}/100 agree ({feasible} feasible, {with_contact_patterns} with feasible contact patterns), mismatches {mismatches:?}, in {elapsed:.2?}"
        ),
    );
}

#[test]
fn criterion_6_lp_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let opts = SolverOptions::default();
    let mut correct = 0;
    let mut counts = [0usize; 3];
    for k in 0..200 {
        let (lp, expected) = match k % 8 {
            6 => {
                let lp = infeasible_lp(&mut rng);
                assert_eq!(vertex_enumeration(&lp), Exact::Infeasible);
                (lp, None)
            }
            7 => {
                let (lp, probe) = ray_lp(&mut rng);
                let unbounded = matches!(vertex_enumeration(&probe), Exact::Optimal(_));
                (lp, Some(unbounded))
            }
            _ => (random_bounded_lp(&mut rng), None),
        };
        let s = solve_lp(&lp, &opts).unwrap();
        let ok = match expected {
            Some(true) => s.status == LpStatus::Unbounded,
            Some(false) => s.status == LpStatus::Infeasible,
            None => match vertex_enumeration(&lp) {
                Exact::Infeasible => s.status == LpStatus::Infeasible,
                Exact::Optimal(v) => {
                    s.status == LpStatus::Optimal
                        && (s.objective - v).abs() <= TOL * (1.0 + v.abs())
                        && lp.max_violation(&s.values) <= TOL
                }
            },
        };
        counts[match s.status {
            LpStatus::Optimal => 0,
            LpStatus::Infeasible => 1,
            LpStatus::Unbounded => 2,
        }] += 1;
        correct += usize::from(ok);
    }
    verdict(
        6,
        correct == 200,
        format!("{correct}/200 correct (optimal {}, infeasible {}, unbounded {})", counts[0], counts[1], counts[2]),
    );
}

#[test]
fn criterion_7_replay_closure() {
    let f = fixture();
    let c = scenario();
    let mut checked = Vec::new();
    checked.push(("free".to_string(), replay(&f.free, &c).unwrap()));
    checked.push(("tolerant".to_string(), replay(&f.tolerant, &c).unwrap()));
    for (d, p) in &f.damage {
        checked.push((format!("d_max {d}"), replay(p, &c.with_d_max(Some(*d))).unwrap()));
    }
    for (g, p) in &f.sweep {
        checked.push((format!("goal {g}"), replay(p.as_ref().unwrap(), &c.with_goal(*g)).unwrap()));
    }
    let failing: Vec<&String> = checked.iter().filter(|(_, r)| !r.pass).map(|(l, _)| l).collect();
    let worst = checked.iter().map(|(_, r)| r.worst()).fold(0.0, f64::max);
    let bookkeeping = checked.iter().all(|(_, r)| r.damage <= TOL && r.indicator <= TOL && r.collision_law <= TOL);
    verdict(
        7,
        failing.is_empty() && bookkeeping,
        format!("{} plans replayed, worst residual {worst:.1e}, failing {failing:?}", checked.len()),
    );
}

#[test]
fn criterion_8_big_m_insensitivity() {
    let f = fixture();
    let c = scenario();
    let doubled = SearchOptions { big_m_scale: 2.0, ..Default::default() };
    let p = min_time_search(&c, Mode::CollisionTolerant, &doubled).unwrap();
    let base = &f.tolerant;
    let same_steps = p.horizon == base.horizon;
    let diff = if same_steps {
        [(&p.x, &base.x), (&p.v, &base.v), (&p.a, &base.a)]
            .iter()
            .flat_map(|(u, w)| u.iter().zip(w.iter()).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    verdict(
        8,
        same_steps && diff < 1e-5,
        format!("steps {} vs {}, largest trajectory difference {diff:.1e}", p.horizon, base.horizon),
    );
}
