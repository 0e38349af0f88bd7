//! Single-field schedule mutations, one per violation kind, shared by the
//! validator tests and the acceptance run.

#![allow(dead_code)]

use std::time::Duration;

use fjspth::engine::{self, SolverConfig};
use fjspth::formulations::{build_model, extract_schedule, BuildOptions, Formulation};
use fjspth::model::{Instance, LegAssignment, MachineId, Schedule, Time};
use fjspth::routing::LegCatalog;
use fjspth::verify::{random_tiny_instance, validate_schedule, ViolationKind};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn solver_schedule(inst: &Instance, f: Formulation) -> Schedule {
    let (m, v) = build_model(inst, f, &BuildOptions::default()).unwrap();
    let r = engine::solve(&m, &SolverConfig { time_limit: Duration::from_secs(30), ..SolverConfig::default() }).unwrap();
    extract_schedule(inst, &v, r.assignment.as_ref().expect("tiny instances are feasible")).unwrap()
}

fn shift_leg(l: &mut LegAssignment, start: Time) {
    let d = l.end - l.start;
    l.start = start;
    l.end = start + d;
}

/// All (op, index) positions of legs in the schedule.
fn leg_slots(s: &Schedule) -> Vec<(usize, usize)> {
    s.transfer_assign.iter().enumerate().flat_map(|(o, ls)| (0..ls.len()).map(move |k| (o, k))).collect()
}

/// Applies a change aimed at `kind`, or `None` when this schedule has no
/// place for it (say, no bot with two legs).
pub fn mutate(inst: &Instance, s: &Schedule, kind: ViolationKind, rng: &mut ChaCha8Rng) -> Option<Schedule> {
    let mut m = s.clone();
    let n = s.op_assign.len();
    match kind {
        ViolationKind::Precedence => {
            let cands: Vec<usize> = (0..n).filter(|&o| !s.transfer_assign[o].is_empty()).collect();
            let &o = cands.choose(rng)?;
            let last_end = s.transfer_assign[o].iter().map(|l| l.end).max()?;
            let a = &mut m.op_assign[o];
            let d = a.end - a.start;
            a.start = last_end - 1;
            a.end = a.start + d;
        }
        ViolationKind::MachineOverlap => {
            let mut pairs = Vec::new();
            for a in 0..n {
                for b in 0..n {
                    if a != b && s.op_assign[a].machine == s.op_assign[b].machine && s.op_assign[a].start <= s.op_assign[b].start {
                        pairs.push((a, b));
                    }
                }
            }
            let &(a, b) = pairs.choose(rng)?;
            let d = m.op_assign[b].end - m.op_assign[b].start;
            m.op_assign[b].start = s.op_assign[a].start;
            m.op_assign[b].end = s.op_assign[a].start + d;
        }
        ViolationKind::BotOverlap => {
            let slots = leg_slots(s);
            let mut pairs = Vec::new();
            for &x in &slots {
                for &y in &slots {
                    let (lx, ly) = (s.transfer_assign[x.0][x.1], s.transfer_assign[y.0][y.1]);
                    if x != y && lx.transbot == ly.transbot && lx.start <= ly.start && lx.end > lx.start {
                        pairs.push((x, y));
                    }
                }
            }
            let &(x, y) = pairs.choose(rng)?;
            let at = s.transfer_assign[x.0][x.1].start;
            shift_leg(&mut m.transfer_assign[y.0][y.1], at);
        }
        ViolationKind::DeadheadShortfall => {
            let cat = LegCatalog::new(inst);
            let mut cands = Vec::new();
            for bot in inst.transbots() {
                let mut mine: Vec<(usize, usize)> =
                    leg_slots(s).into_iter().filter(|&(o, k)| s.transfer_assign[o][k].transbot == bot.id).collect();
                mine.sort_by_key(|&(o, k)| s.transfer_assign[o][k].start);
                // pulling a leg forward within its gap keeps the bot's order intact
                for w in mine.windows(2) {
                    let (lx, ly) = (s.transfer_assign[w[0].0][w[0].1], s.transfer_assign[w[1].0][w[1].1]);
                    let gap = inst.travel(cat.leg(lx.leg)?.dropoff, cat.leg(ly.leg)?.pickup);
                    if gap >= 1 {
                        cands.push((w[1], lx.end + gap - 1));
                    }
                }
                if let Some(&first) = mine.first() {
                    let l = s.transfer_assign[first.0][first.1];
                    let need = inst.travel(bot.initial_station, cat.leg(l.leg)?.pickup);
                    if s.initial_deadhead && need >= 1 {
                        cands.push((first, need - 1));
                    }
                }
            }
            let &(y, at) = cands.choose(rng)?;
            shift_leg(&mut m.transfer_assign[y.0][y.1], at);
        }
        ViolationKind::ZoneMismatch => {
            let &(o, k) = leg_slots(s).choose(rng)?;
            let cur = s.transfer_assign[o][k].transbot;
            let zone = inst.transbots()[cur.0].zone;
            let other: Vec<_> = inst.transbots().iter().filter(|b| b.zone != zone).map(|b| b.id).collect();
            m.transfer_assign[o][k].transbot = *other.choose(rng)?;
        }
        ViolationKind::StationLink => {
            let cands: Vec<usize> = (0..n).filter(|&o| inst.operations()[o].eligibility.len() >= 2).collect();
            let &o = cands.choose(rng)?;
            let op = &inst.operations()[o];
            let (&mach, &p) = op.eligibility.iter().find(|(&mm, _)| mm != s.op_assign[o].machine)?;
            m.op_assign[o].machine = mach;
            m.op_assign[o].end = m.op_assign[o].start + p;
        }
        ViolationKind::LegOrder => {
            let cands: Vec<usize> = (0..n).filter(|&o| s.transfer_assign[o].len() >= 2).collect();
            let &o = cands.choose(rng)?;
            let mut legs = s.transfer_assign[o].clone();
            legs.sort_by_key(|l| l.start);
            let at = legs[0].end - 1;
            let target = legs[1].leg;
            let l = m.transfer_assign[o].iter_mut().find(|l| l.leg == target)?;
            shift_leg(l, at);
        }
        ViolationKind::StockerStart => {
            let cat = LegCatalog::new(inst);
            let firsts: Vec<usize> = (0..n)
                .filter(|&o| inst.predecessor(inst.operations()[o].id).ok().flatten().is_none())
                .collect();
            let &o = firsts.choose(rng)?;
            let drop = inst.machine_station(s.op_assign[o].machine);
            let pickups: Vec<_> = inst.machines().map(|mm| inst.machine_station(mm)).filter(|&st| st != drop).collect();
            let &p = pickups.choose(rng)?;
            let arc = cat.arc(p, drop)?;
            let mut t = s.transfer_assign[o].iter().map(|l| l.start).min().unwrap_or(s.op_assign[o].start);
            let mut legs = Vec::new();
            for leg in &arc.legs {
                let bot = *inst.zone_transbots(leg.zone).first()?;
                legs.push(LegAssignment { leg: leg.id, transbot: bot, start: t, end: t + leg.travel });
                t += leg.travel;
            }
            m.transfer_assign[o] = legs;
        }
        ViolationKind::DurationMismatch => {
            let o = rng.gen_range(0..n.max(1));
            m.op_assign.get_mut(o)?.end += 1;
        }
        ViolationKind::EligibilityBreach => {
            let cands: Vec<(usize, MachineId)> = (0..n)
                .flat_map(|o| {
                    inst.machines()
                        .filter(move |mm| !inst.operations()[o].eligibility.contains_key(mm))
                        .map(move |mm| (o, mm))
                })
                .collect();
            let &(o, mm) = cands.choose(rng)?;
            m.op_assign[o].machine = mm;
        }
    }
    (m != *s).then_some(m)
}

pub struct MutationOutcome {
    pub kind: ViolationKind,
    pub seed: u64,
    /// The validator reported this kind for the mutated schedule.
    pub killed: bool,
    /// The unmutated solver schedule was accepted.
    pub base_clean: bool,
}

/// For every kind and seed, finds a solver schedule the mutation applies to
/// and validates the mutant.
pub fn mutation_campaign(seeds: u64) -> Vec<MutationOutcome> {
    let mut out = Vec::new();
    for (k, &kind) in ViolationKind::ALL.iter().enumerate() {
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed * 131 + k as u64);
            let mut found = None;
            for attempt in 0..200u64 {
                let inst = random_tiny_instance(20_000 + seed * 1000 + k as u64 * 100_000 + attempt, 5);
                let base = solver_schedule(&inst, Formulation::Embedded);
                if let Some(mutant) = mutate(&inst, &base, kind, &mut rng) {
                    found = Some((inst, base, mutant));
                    break;
                }
            }
            let (inst, base, mutant) = found.unwrap_or_else(|| panic!("no schedule admits a {kind} mutation"));
            out.push(MutationOutcome {
                kind,
                seed,
                killed: validate_schedule(&inst, &mutant).iter().any(|v| v.kind == kind),
                base_clean: validate_schedule(&inst, &base).is_empty(),
            });
        }
    }
    out
}
