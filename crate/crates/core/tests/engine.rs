//! Engine behaviour checked from the outside: root propagation on small
//! models, an independent constraint re-evaluator, and brute-force
//! comparisons on single-sequence problems.

use std::sync::Arc;
use std::time::Duration;

use fjspth::engine::{
    root_bounds, solve, Assignment, Constraint, IntervalId, IntervalVar, Model, PresenceRelation, SolveStatus,
    SolverConfig, TransitionMatrix,
};
use fjspth::formulations::{build_model, extract_schedule, warm_start_from_schedule, BuildOptions, Formulation};
use fjspth::io::{generate_instance, parse_flexible_jobshop, GenConfig, Scale};
use fjspth::model::Time;
use fjspth::verify::{brute_force_optimal, fixture_tiny1, random_tiny_instance, OracleLimits};
use proptest::prelude::*;

type Bounds = Vec<(Option<bool>, Time, Time, Time, Time)>;

fn root(m: &Model) -> Option<Bounds> {
    root_bounds(m).unwrap()
}

fn cfg() -> SolverConfig {
    SolverConfig { time_limit: Duration::from_secs(30), ..SolverConfig::default() }
}

/// Checks every recorded constraint against an assignment without using
/// any engine code. Returns the objective.
fn reevaluate(m: &Model, a: &Assignment) -> Result<Time, String> {
    let get = |i: IntervalId| a.intervals[i.0];
    for (k, v) in m.intervals().iter().enumerate() {
        match a.intervals[k] {
            None if !v.optional => return Err(format!("mandatory {} absent", v.name)),
            None => {}
            Some((s, e)) => {
                let len = e - s;
                if s < 0 || e > m.horizon() || len < v.length_min || len > v.length_max {
                    return Err(format!("{} = [{s},{e}) breaks its length or horizon", v.name));
                }
            }
        }
    }
    for c in m.constraints() {
        let ok = match c {
            Constraint::Alternative { master, options } => {
                let present: Vec<_> = options.iter().filter_map(|&o| get(o)).collect();
                match get(*master) {
                    None => present.is_empty(),
                    Some(t) => present.len() == 1 && present[0] == t,
                }
            }
            Constraint::Span { master, covered } => {
                let present: Vec<_> = covered.iter().filter_map(|&o| get(o)).collect();
                match get(*master) {
                    None => present.is_empty(),
                    Some((s, e)) => {
                        !present.is_empty()
                            && present.iter().map(|p| p.0).min() == Some(s)
                            && present.iter().map(|p| p.1).max() == Some(e)
                    }
                }
            }
            Constraint::EndBeforeStart { before, after } => match (get(*before), get(*after)) {
                (Some(b), Some(a)) => b.1 <= a.0,
                _ => true,
            },
            Constraint::PresenceAtMostOne { members } => members.iter().filter(|&&i| get(i).is_some()).count() <= 1,
            Constraint::PresenceBalance { lhs, rhs } => {
                lhs.iter().filter(|&&i| get(i).is_some()).count() == rhs.iter().filter(|&&i| get(i).is_some()).count()
            }
            Constraint::PresenceImplies { from, to } => get(*from).is_none() || get(*to).is_some(),
            Constraint::ConditionalPrecedence { guard, before, after } => match (get(*guard), get(*before), get(*after)) {
                (Some(_), Some(b), Some(a)) => b.1 <= a.0,
                _ => true,
            },
            Constraint::NoOverlap { sequence, transitions } => {
                let seq = &m.sequences()[sequence.0];
                let t = |x: usize, y: usize| match (transitions, &seq.types) {
                    (Some(tm), Some(ty)) => tm.get(ty[x], ty[y]),
                    _ => 0,
                };
                let mut ok = true;
                for x in 0..seq.members.len() {
                    for y in (x + 1)..seq.members.len() {
                        if let (Some(p), Some(q)) = (get(seq.members[x]), get(seq.members[y])) {
                            ok &= p.1 + t(x, y) <= q.0 || q.1 + t(y, x) <= p.0;
                        }
                    }
                }
                ok
            }
            Constraint::Forbidden(i) => get(*i).is_none(),
            Constraint::FixedStart(i, at) => get(*i).is_none_or(|(s, _)| s == *at),
        };
        if !ok {
            return Err(format!("violated: {c:?}"));
        }
    }
    Ok(m.objective().iter().filter_map(|&i| get(i)).map(|(_, e)| e).max().unwrap_or(0))
}

#[test]
fn alternative_elimination_and_sync() {
    let mut m = Model::new(50);
    let master = m.add_interval(IntervalVar::new("m", 4));
    let a = m.add_interval(IntervalVar::new("a", 4).optional());
    let b = m.add_interval(IntervalVar::new("b", 4).optional());
    m.add_alternative(master, vec![a, b]).unwrap();
    m.add_forbidden(a).unwrap();
    m.add_fixed_start(master, 3).unwrap();
    let r = root(&m).unwrap();
    assert_eq!(r[b.0], (Some(true), 3, 3, 7, 7));
}

#[test]
fn absent_master_empties_alternative() {
    let mut m = Model::new(50);
    let master = m.add_interval(IntervalVar::new("m", 4).optional());
    let a = m.add_interval(IntervalVar::new("a", 4).optional());
    let b = m.add_interval(IntervalVar::new("b", 4).optional());
    m.add_alternative(master, vec![a, b]).unwrap();
    m.add_forbidden(master).unwrap();
    let r = root(&m).unwrap();
    assert_eq!((r[a.0].0, r[b.0].0), (Some(false), Some(false)));
}

#[test]
fn alternative_without_options_fails() {
    let mut m = Model::new(50);
    let master = m.add_interval(IntervalVar::new("m", 4));
    let a = m.add_interval(IntervalVar::new("a", 4).optional());
    let b = m.add_interval(IntervalVar::new("b", 4).optional());
    m.add_alternative(master, vec![a, b]).unwrap();
    m.add_forbidden(a).unwrap();
    m.add_forbidden(b).unwrap();
    assert!(root(&m).is_none());
}

#[test]
fn span_of_two_handoff_legs() {
    let mut m = Model::new(50);
    let master = m.add_interval(IntervalVar::stretchable("x", 0));
    let l1 = m.add_interval(IntervalVar::new("l1", 3));
    let l2 = m.add_interval(IntervalVar::new("l2", 4));
    m.add_fixed_start(l1, 7).unwrap();
    m.add_fixed_start(l2, 10).unwrap();
    m.add_span(master, vec![l1, l2]).unwrap();
    let r = root(&m).unwrap();
    assert_eq!(r[master.0], (Some(true), 7, 7, 14, 14));
}

#[test]
fn span_of_one_and_of_none() {
    let mut m = Model::new(50);
    let master = m.add_interval(IntervalVar::stretchable("x", 0));
    let l = m.add_interval(IntervalVar::new("l", 2));
    m.add_fixed_start(l, 0).unwrap();
    m.add_span(master, vec![l]).unwrap();
    assert_eq!(root(&m).unwrap()[master.0], (Some(true), 0, 0, 2, 2));

    let mut m = Model::new(50);
    let master = m.add_interval(IntervalVar::stretchable("x", 0).optional());
    let c: Vec<_> = (0..2).map(|k| m.add_interval(IntervalVar::new(format!("c{k}"), 2).optional())).collect();
    for &i in &c {
        m.add_forbidden(i).unwrap();
    }
    m.add_span(master, c).unwrap();
    assert_eq!(root(&m).unwrap()[master.0].0, Some(false));
}

#[test]
fn end_before_start_cases() {
    let mut m = Model::new(50);
    let a = m.add_interval(IntervalVar::new("a", 5));
    let b = m.add_interval(IntervalVar::new("b", 1));
    m.add_fixed_start(a, 0).unwrap();
    m.add_end_before_start(a, b).unwrap();
    assert_eq!(root(&m).unwrap()[b.0].1, 5);

    let mut m = Model::new(50);
    let a = m.add_interval(IntervalVar::new("a", 5).optional());
    let b = m.add_interval(IntervalVar::new("b", 1));
    m.add_forbidden(a).unwrap();
    m.add_end_before_start(a, b).unwrap();
    assert_eq!(root(&m).unwrap()[b.0].1, 0);

    let mut m = Model::new(50);
    let a = m.add_interval(IntervalVar::new("a", 5));
    let b = m.add_interval(IntervalVar::new("b", 1));
    m.add_fixed_start(a, 0).unwrap();
    m.add_fixed_start(b, 3).unwrap();
    m.add_end_before_start(a, b).unwrap();
    assert!(root(&m).is_none());
}

#[test]
fn presence_sum_cases() {
    let mut m = Model::new(50);
    let lhs = m.add_interval(IntervalVar::new("l", 1));
    let r1 = m.add_interval(IntervalVar::new("r1", 1).optional());
    let r2 = m.add_interval(IntervalVar::new("r2", 1).optional());
    m.add_presence_sum(lhs, vec![r1, r2], PresenceRelation::Equal).unwrap();
    m.add_forbidden(r1).unwrap();
    assert_eq!(root(&m).unwrap()[r2.0].0, Some(true));

    let mut m = Model::new(50);
    let lhs = m.add_interval(IntervalVar::new("l", 1).optional());
    let r1 = m.add_interval(IntervalVar::new("r1", 1).optional());
    let r2 = m.add_interval(IntervalVar::new("r2", 1).optional());
    m.add_presence_sum(lhs, vec![r1, r2], PresenceRelation::Equal).unwrap();
    m.add_forbidden(lhs).unwrap();
    let r = root(&m).unwrap();
    assert_eq!((r[r1.0].0, r[r2.0].0), (Some(false), Some(false)));

    let mut m = Model::new(50);
    let lhs = m.add_interval(IntervalVar::new("l", 1));
    let r1 = m.add_interval(IntervalVar::new("r1", 1).optional());
    let r2 = m.add_interval(IntervalVar::new("r2", 1).optional());
    m.add_presence_implies(lhs, r1).unwrap();
    m.add_presence_implies(lhs, r2).unwrap();
    m.add_presence_sum(lhs, vec![r1, r2], PresenceRelation::AtMostOne).unwrap();
    assert!(root(&m).is_none());
}

#[test]
fn conditional_precedence_cases() {
    let build = |guard_absent: bool, b_at: Option<Time>| {
        let mut m = Model::new(50);
        let g = m.add_interval(IntervalVar::new("g", 1).optional());
        let a = m.add_interval(IntervalVar::new("a", 3));
        let b = m.add_interval(IntervalVar::new("b", 4));
        m.add_fixed_start(a, 7).unwrap();
        if guard_absent {
            m.add_forbidden(g).unwrap();
        } else {
            let on = m.add_interval(IntervalVar::new("on", 0));
            m.add_presence_implies(on, g).unwrap();
        }
        if let Some(t) = b_at {
            m.add_fixed_start(b, t).unwrap();
        }
        m.add_conditional_precedence(g, a, b).unwrap();
        (root(&m), b)
    };
    let (r, b) = build(false, None);
    assert_eq!(r.unwrap()[b.0].1, 10);
    let (r, b) = build(true, None);
    assert_eq!(r.unwrap()[b.0].1, 0);
    assert!(build(false, Some(8)).0.is_none());
}

#[test]
fn no_overlap_touching_and_transition() {
    let mut m = Model::new(50);
    let a = m.add_interval(IntervalVar::new("a", 5));
    let b = m.add_interval(IntervalVar::new("b", 4));
    m.add_fixed_start(a, 0).unwrap();
    m.add_fixed_start(b, 5).unwrap();
    let s = m.add_sequence("s", vec![a, b], None).unwrap();
    m.add_no_overlap(s, None).unwrap();
    assert!(root(&m).is_some());

    let mut m = Model::new(100);
    let a = m.add_interval(IntervalVar::new("a", 5));
    let b = m.add_interval(IntervalVar::new("b", 4));
    m.add_fixed_start(a, 0).unwrap();
    m.add_end_before_start(a, b).unwrap();
    let s = m.add_sequence("s", vec![a, b], Some(vec![0, 1])).unwrap();
    m.add_no_overlap(s, Some(Arc::new(TransitionMatrix::from_rows(&[vec![0, 25], vec![25, 0]])))).unwrap();
    assert_eq!(root(&m).unwrap()[b.0].1, 30);
}

#[test]
fn contradictory_precedences_are_infeasible() {
    let mut m = Model::new(50);
    let a = m.add_interval(IntervalVar::new("a", 2));
    let b = m.add_interval(IntervalVar::new("b", 2));
    m.add_end_before_start(a, b).unwrap();
    m.add_end_before_start(b, a).unwrap();
    m.minimize_max_end(vec![a, b]).unwrap();
    let r = solve(&m, &cfg()).unwrap();
    assert_eq!(r.status, SolveStatus::Infeasible);
    assert!(r.assignment.is_none());
}

/// Minimum makespan of one no-overlap sequence with all-pairs transitions,
/// by trying every order.
fn best_order(lens: &[Time], t: &[Vec<Time>]) -> Time {
    fn rec(lens: &[Time], t: &[Vec<Time>], placed: &mut Vec<(usize, Time)>, used: &mut [bool], best: &mut Time) {
        if placed.len() == lens.len() {
            let mk = placed.iter().map(|&(i, s)| s + lens[i]).max().unwrap_or(0);
            *best = (*best).min(mk);
            return;
        }
        for k in 0..lens.len() {
            if used[k] {
                continue;
            }
            let s = placed.iter().map(|&(i, s)| s + lens[i] + t[i][k]).max().unwrap_or(0);
            used[k] = true;
            placed.push((k, s));
            rec(lens, t, placed, used, best);
            placed.pop();
            used[k] = false;
        }
    }
    let mut best = Time::MAX;
    rec(lens, t, &mut Vec::new(), &mut vec![false; lens.len()], &mut best);
    best
}

fn sequence_model(lens: &[Time], t: &[Vec<Time>]) -> Model {
    let horizon = lens.iter().sum::<Time>() + t.iter().flatten().sum::<Time>() + 1;
    let mut m = Model::new(horizon);
    let ids: Vec<_> = lens.iter().enumerate().map(|(k, &l)| m.add_interval(IntervalVar::new(format!("i{k}"), l))).collect();
    let s = m.add_sequence("s", ids.clone(), Some((0..lens.len()).collect())).unwrap();
    m.add_no_overlap(s, Some(Arc::new(TransitionMatrix::from_rows(t)))).unwrap();
    m.minimize_max_end(ids).unwrap();
    m
}

#[test]
fn triangle_violating_matrix_matches_enumeration() {
    // adjacent-only transitions would allow 0 -> 1 -> 2 ending at 3
    let lens = [1, 1, 1];
    let t = vec![vec![0, 0, 10], vec![0, 0, 0], vec![10, 10, 0]];
    let m = sequence_model(&lens, &t);
    let r = solve(&m, &cfg()).unwrap();
    let expected = best_order(&lens, &t);
    assert_eq!(r.objective, Some(expected));
    assert!(expected > 3);
    assert_eq!(reevaluate(&m, r.assignment.as_ref().unwrap()), Ok(expected));
}

#[test]
fn warm_start_from_the_optimum_needs_no_more_nodes() {
    let inst = fixture_tiny1();
    let (m, vars) = build_model(&inst, Formulation::Arc, &BuildOptions::default()).unwrap();
    let cold = solve(&m, &cfg()).unwrap();
    let sched = extract_schedule(&inst, &vars, cold.assignment.as_ref().unwrap()).unwrap();
    let ws = warm_start_from_schedule(&inst, &vars, &sched);
    let warm = solve(&m, &SolverConfig { warm_start: Some(ws), ..cfg() }).unwrap();
    assert_eq!((warm.status, warm.objective), (SolveStatus::Optimal, Some(20)));
    assert!(warm.warm_start_used);
    assert!(warm.nodes <= cold.nodes, "warm {} cold {}", warm.nodes, cold.nodes);
}

#[test]
fn bound_is_valid_and_workers_agree() {
    for seed in 0..12u64 {
        let inst = random_tiny_instance(500 + seed, 4);
        let (_, opt) = brute_force_optimal(&inst, &OracleLimits::default()).unwrap();
        for f in [Formulation::Arc, Formulation::Embedded] {
            let (m, _) = build_model(&inst, f, &BuildOptions::default()).unwrap();
            for workers in [1, 2, 4] {
                let r = solve(&m, &SolverConfig { workers, seed, ..cfg() }).unwrap();
                assert!(r.bound <= opt, "seed {seed} {f}: bound {} above optimum {opt}", r.bound);
                assert_eq!(r.status, SolveStatus::Optimal, "seed {seed} {f} workers {workers}");
                assert_eq!(r.objective, Some(opt), "seed {seed} {f} workers {workers}");
                assert_eq!(reevaluate(&m, r.assignment.as_ref().unwrap()), Ok(opt));
            }
        }
    }
}

#[test]
fn node_limited_single_worker_runs_repeat_exactly() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/la01_sdata.fjs")).unwrap();
    let base = parse_flexible_jobshop(&text).unwrap();
    let inst = generate_instance(&GenConfig { seed: 3, ..GenConfig::new("la01", base, Scale::Medium) }).unwrap();
    let (m, _) = build_model(&inst, Formulation::Embedded, &BuildOptions::default()).unwrap();
    let c = SolverConfig { node_limit: Some(1500), seed: 9, time_limit: Duration::from_secs(300), ..cfg() };
    let a = solve(&m, &c).unwrap();
    let b = solve(&m, &c).unwrap();
    assert_eq!(a.status, SolveStatus::Feasible);
    assert_eq!((a.objective, a.nodes), (b.objective, b.nodes));
    assert_eq!(a.assignment, b.assignment);
    let trace_a: Vec<Time> = a.trace.iter().map(|&(_, c)| c).collect();
    let trace_b: Vec<Time> = b.trace.iter().map(|&(_, c)| c).collect();
    assert_eq!(trace_a, trace_b);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn single_sequence_optimum_matches_enumeration(
        lens in proptest::collection::vec(0i64..6, 1..5),
        raw in proptest::collection::vec(0i64..8, 16),
    ) {
        let n = lens.len();
        let t: Vec<Vec<Time>> = (0..n).map(|i| (0..n).map(|j| if i == j { 0 } else { raw[i * 4 + j] }).collect()).collect();
        let m = sequence_model(&lens, &t);
        let r = solve(&m, &cfg()).unwrap();
        prop_assert_eq!(r.status, SolveStatus::Optimal);
        let expected = best_order(&lens, &t);
        prop_assert_eq!(r.objective, Some(expected));
        prop_assert_eq!(reevaluate(&m, r.assignment.as_ref().unwrap()), Ok(expected));
    }

    #[test]
    fn formulation_assignments_satisfy_every_constraint(seed in 0u64..10_000) {
        let inst = random_tiny_instance(seed, 4);
        for f in [Formulation::Arc, Formulation::Embedded] {
            let (m, _) = build_model(&inst, f, &BuildOptions::default()).unwrap();
            let r = solve(&m, &cfg()).unwrap();
            let asg = r.assignment.as_ref().expect("tiny instances are feasible");
            prop_assert_eq!(reevaluate(&m, asg), Ok(r.objective.unwrap()));
        }
    }
}
