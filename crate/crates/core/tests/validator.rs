mod common;

use fjspth::formulations::Formulation;
use fjspth::model::Schedule;
use fjspth::verify::{brute_force_optimal, fixture_tiny1, random_tiny_instance, validate_schedule, OracleLimits, ViolationKind};
use proptest::prelude::*;

use common::{mutation_campaign, solver_schedule};

#[test]
fn every_mutation_is_reported_under_its_own_kind() {
    let outcomes = mutation_campaign(10);
    assert_eq!(outcomes.len(), 100);
    let missed: Vec<String> =
        outcomes.iter().filter(|o| !o.killed).map(|o| format!("{} seed {}", o.kind, o.seed)).collect();
    assert!(missed.is_empty(), "survivors: {missed:?}");
    assert!(outcomes.iter().all(|o| o.base_clean));
}

#[test]
fn tiny1_second_op_on_the_wrong_bot() {
    let inst = fixture_tiny1();
    let (mut s, _) = brute_force_optimal(&inst, &OracleLimits::default()).unwrap();
    // the stocker leg belongs to zone 0's bot; hand it to zone 1's
    let leg = s.transfer_assign[0].first_mut().unwrap();
    leg.transbot = inst.zone_transbots(fjspth::model::ZoneId(1))[0];
    let kinds: Vec<ViolationKind> = validate_schedule(&inst, &s).into_iter().map(|v| v.kind).collect();
    assert!(kinds.contains(&ViolationKind::ZoneMismatch), "{kinds:?}");
}

#[test]
fn missing_operation_is_a_link_failure() {
    let inst = fixture_tiny1();
    let (mut s, _): (Schedule, _) = brute_force_optimal(&inst, &OracleLimits::default()).unwrap();
    s.op_assign.pop();
    s.transfer_assign.pop();
    let kinds: Vec<ViolationKind> = validate_schedule(&inst, &s).into_iter().map(|v| v.kind).collect();
    assert!(kinds.contains(&ViolationKind::StationLink), "{kinds:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solver_schedules_are_accepted(seed in 0u64..10_000, arc in any::<bool>()) {
        let inst = random_tiny_instance(seed, 5);
        let f = if arc { Formulation::Arc } else { Formulation::Embedded };
        let s = solver_schedule(&inst, f);
        prop_assert_eq!(validate_schedule(&inst, &s), vec![]);
    }

    #[test]
    fn oracle_schedules_are_accepted(seed in 0u64..10_000) {
        let inst = random_tiny_instance(seed, 4);
        let (s, mk) = brute_force_optimal(&inst, &OracleLimits::default()).unwrap();
        prop_assert_eq!(s.makespan, mk);
        prop_assert_eq!(validate_schedule(&inst, &s), vec![]);
    }
}
