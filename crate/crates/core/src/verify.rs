//! Independent schedule checking, an exhaustive oracle for tiny instances,
//! and shared fixtures.
//!
//! Nothing here touches the engine: times are recomputed directly from the
//! instance data.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{
    validate_instance, Instance, JobId, LegAssignment, MachineId, OpAssignment, Operation, OperationId,
    Schedule, Station, StationId, StationKind, Time, Transbot, TransbotId, Zone, ZoneId,
};
use crate::routing::{Leg, LegCatalog};

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    Precedence,
    MachineOverlap,
    BotOverlap,
    DeadheadShortfall,
    ZoneMismatch,
    StationLink,
    LegOrder,
    StockerStart,
    DurationMismatch,
    EligibilityBreach,
}

impl ViolationKind {
    pub const ALL: [ViolationKind; 10] = [
        ViolationKind::Precedence,
        ViolationKind::MachineOverlap,
        ViolationKind::BotOverlap,
        ViolationKind::DeadheadShortfall,
        ViolationKind::ZoneMismatch,
        ViolationKind::StationLink,
        ViolationKind::LegOrder,
        ViolationKind::StockerStart,
        ViolationKind::DurationMismatch,
        ViolationKind::EligibilityBreach,
    ];
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub subjects: Vec<String>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.kind, self.subjects.join(" "), self.detail)
    }
}

fn v(kind: ViolationKind, subjects: &[String], detail: String) -> Violation {
    Violation {
        kind,
        subjects: subjects.to_vec(),
        detail,
    }
}

/// Every feasibility rule the schedule breaks. Operations missing from the
/// schedule are reported as `StationLink` violations and skipped otherwise.
pub fn validate_schedule(instance: &Instance, schedule: &Schedule) -> Vec<Violation> {
    let catalog = LegCatalog::new(instance);
    let ops = instance.operations();
    let mut out = Vec::new();
    let scheduled = |o: OperationId| o.0 < schedule.op_assign.len();
    let legs_of = |o: OperationId| -> &[LegAssignment] {
        schedule
            .transfer_assign
            .get(o.0)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    };
    let leg_info = |a: &LegAssignment| catalog.leg(a.leg);

    // (a) job precedence
    for op in ops {
        if !scheduled(op.id) {
            continue;
        }
        let me = schedule.op_assign[op.id.0];
        for a in legs_of(op.id) {
            if a.end > me.start {
                out.push(v(
                    ViolationKind::Precedence,
                    &[a.leg.to_string(), op.id.to_string()],
                    format!("transfer leg {} ends at {} after {} starts at {}", a.leg, a.end, op.id, me.start),
                ));
            }
        }
        if let Ok(Some(p)) = instance.predecessor(op.id) {
            if !scheduled(p) {
                continue;
            }
            let pe = schedule.op_assign[p.0].end;
            let transfer_start = legs_of(op.id).iter().map(|a| a.start).min();
            let (what, at) = match transfer_start {
                Some(s) => ("the transfer to", s),
                None => ("", me.start),
            };
            if pe > at {
                out.push(v(
                    ViolationKind::Precedence,
                    &[p.to_string(), op.id.to_string()],
                    format!("{p} ends at {pe} after {what}{}{} starts at {at}", if what.is_empty() { "" } else { " " }, op.id),
                ));
            }
        }
    }

    // (b) machine exclusivity
    let mut by_machine: BTreeMap<MachineId, Vec<(OperationId, OpAssignment)>> = BTreeMap::new();
    for op in ops.iter().filter(|o| scheduled(o.id)) {
        let a = schedule.op_assign[op.id.0];
        by_machine.entry(a.machine).or_default().push((op.id, a));
    }
    for (m, list) in &by_machine {
        for i in 0..list.len() {
            for j in (i + 1)..list.len() {
                let (oi, ai) = list[i];
                let (oj, aj) = list[j];
                if ai.start < aj.end && aj.start < ai.end {
                    out.push(v(
                        ViolationKind::MachineOverlap,
                        &[m.to_string(), oi.to_string(), oj.to_string()],
                        format!("{oi} [{}, {}) and {oj} [{}, {}) overlap on {m}", ai.start, ai.end, aj.start, aj.end),
                    ));
                }
            }
        }
    }

    // (c) transbot exclusivity and deadheads over all ordered pairs
    let mut by_bot: BTreeMap<TransbotId, Vec<LegAssignment>> = BTreeMap::new();
    for o in 0..schedule.transfer_assign.len() {
        for a in &schedule.transfer_assign[o] {
            by_bot.entry(a.transbot).or_default().push(*a);
        }
    }
    for (bot, list) in by_bot.iter_mut() {
        list.sort_by_key(|a| (a.start, a.end, a.leg));
        if schedule.initial_deadhead {
            if let (Some(first), Some(tb)) = (list.first(), instance.transbots().get(bot.0)) {
                if let Some(l) = leg_info(first) {
                    let need = instance.travel(tb.initial_station, l.pickup);
                    if first.start < need {
                        out.push(v(
                            ViolationKind::DeadheadShortfall,
                            &[bot.to_string(), first.leg.to_string()],
                            format!(
                                "{bot} starts {} at {} but needs {need} to reach {} from {}",
                                first.leg, first.start, l.pickup, tb.initial_station
                            ),
                        ));
                    }
                }
            }
        }
        for i in 0..list.len() {
            for j in (i + 1)..list.len() {
                let (a, b) = (list[i], list[j]);
                if b.start < a.end {
                    out.push(v(
                        ViolationKind::BotOverlap,
                        &[bot.to_string(), a.leg.to_string(), b.leg.to_string()],
                        format!("{} [{}, {}) and {} [{}, {}) overlap on {bot}", a.leg, a.start, a.end, b.leg, b.start, b.end),
                    ));
                    continue;
                }
                if let (Some(la), Some(lb)) = (leg_info(&a), leg_info(&b)) {
                    let gap = instance.travel(la.dropoff, lb.pickup);
                    if b.start < a.end + gap {
                        out.push(v(
                            ViolationKind::DeadheadShortfall,
                            &[bot.to_string(), a.leg.to_string(), b.leg.to_string()],
                            format!(
                                "{bot} leaves {} at {} and starts {} at {}, short of the {gap} needed from {} to {}",
                                a.leg, a.end, b.leg, b.start, la.dropoff, lb.pickup
                            ),
                        ));
                    }
                }
            }
        }
    }

    // (d) zone compatibility
    for a in schedule.transfer_assign.iter().flatten() {
        let (Some(l), Some(tb)) = (leg_info(a), instance.transbots().get(a.transbot.0)) else {
            out.push(v(
                ViolationKind::ZoneMismatch,
                &[a.leg.to_string(), a.transbot.to_string()],
                format!("{} or {} is not part of the instance", a.leg, a.transbot),
            ));
            continue;
        };
        if tb.zone != l.zone {
            out.push(v(
                ViolationKind::ZoneMismatch,
                &[a.leg.to_string(), a.transbot.to_string()],
                format!("{} belongs to {} but {} runs in {}", a.leg, l.zone, a.transbot, tb.zone),
            ));
        }
    }

    // (e) station linking, (f) leg order
    for op in ops {
        if !scheduled(op.id) {
            out.push(v(
                ViolationKind::StationLink,
                &[op.id.to_string()],
                format!("{} is not scheduled", op.id),
            ));
            continue;
        }
        link_and_order(instance, &catalog, schedule, op, legs_of(op.id), &mut out);
    }

    // (g) durations
    for op in ops.iter().filter(|o| scheduled(o.id)) {
        let a = schedule.op_assign[op.id.0];
        if let Some(p) = op.processing_time(a.machine) {
            if a.end - a.start != p {
                out.push(v(
                    ViolationKind::DurationMismatch,
                    &[op.id.to_string(), a.machine.to_string()],
                    format!("{} lasts {} on {} but needs {p}", op.id, a.end - a.start, a.machine),
                ));
            }
        }
    }
    for a in schedule.transfer_assign.iter().flatten() {
        if let Some(l) = leg_info(a) {
            if a.end - a.start != l.travel {
                out.push(v(
                    ViolationKind::DurationMismatch,
                    &[a.leg.to_string()],
                    format!("{} lasts {} but the trip takes {}", a.leg, a.end - a.start, l.travel),
                ));
            }
        }
    }

    // (h) eligibility
    for op in ops.iter().filter(|o| scheduled(o.id)) {
        let m = schedule.op_assign[op.id.0].machine;
        if !op.eligibility.contains_key(&m) {
            out.push(v(
                ViolationKind::EligibilityBreach,
                &[op.id.to_string(), m.to_string()],
                format!("{} cannot be processed on {m}", op.id),
            ));
        }
    }
    out
}

fn link_and_order(
    instance: &Instance,
    catalog: &LegCatalog,
    schedule: &Schedule,
    op: &Operation,
    legs: &[LegAssignment],
    out: &mut Vec<Violation>,
) {
    let id = op.id.to_string();
    let machine = schedule.op_assign[op.id.0].machine;
    if machine.0 >= instance.machine_count() {
        return;
    }
    let dropoff = instance.machine_station(machine);
    let pred = instance.predecessor(op.id).ok().flatten();
    let pickup = match pred {
        None => instance.stocker(),
        Some(p) => match schedule.op_assign.get(p.0) {
            Some(a) if a.machine.0 < instance.machine_count() => instance.machine_station(a.machine),
            _ => return,
        },
    };
    let infos: Vec<Option<&Leg>> = legs.iter().map(|a| catalog.leg(a.leg)).collect();
    if infos.iter().any(Option::is_none) {
        out.push(v(ViolationKind::StationLink, std::slice::from_ref(&id), format!("the transfer to {id} uses unknown legs")));
        return;
    }
    let infos: Vec<&Leg> = infos.into_iter().flatten().collect();
    let Some(first) = infos.first() else {
        let expected = catalog.arc(pickup, dropoff).map_or(0, |a| a.legs.len());
        if expected > 0 {
            out.push(v(
                ViolationKind::StationLink,
                std::slice::from_ref(&id),
                format!("{id} has no transfer from {pickup} to {dropoff}"),
            ));
        }
        return;
    };
    let (arc_p, arc_d) = first.arc;
    if infos.iter().any(|l| l.arc != first.arc) {
        out.push(v(
            ViolationKind::StationLink,
            std::slice::from_ref(&id),
            format!("the transfer to {id} mixes legs of different arcs"),
        ));
        return;
    }
    if pred.is_none() && arc_p != instance.stocker() {
        out.push(v(
            ViolationKind::StockerStart,
            std::slice::from_ref(&id),
            format!("the first transfer of {} starts at {arc_p}, not the stocker", op.job),
        ));
    } else if arc_p != pickup {
        out.push(v(
            ViolationKind::StationLink,
            std::slice::from_ref(&id),
            format!("the transfer to {id} picks up at {arc_p} but the part is at {pickup}"),
        ));
    }
    if arc_d != dropoff {
        out.push(v(
            ViolationKind::StationLink,
            std::slice::from_ref(&id),
            format!("the transfer to {id} drops off at {arc_d} but {id} runs on {machine}"),
        ));
    }

    let expected = catalog.arc(arc_p, arc_d).map_or(0, |a| a.legs.len());
    let mut pos: Vec<(u8, &LegAssignment)> = infos.iter().zip(legs).map(|(l, a)| (l.position, a)).collect();
    pos.sort_by_key(|&(p, _)| p);
    let positions: Vec<u8> = pos.iter().map(|&(p, _)| p).collect();
    if positions != (1..=expected as u8).collect::<Vec<_>>() {
        out.push(v(
            ViolationKind::LegOrder,
            std::slice::from_ref(&id),
            format!("the transfer to {id} has leg positions {positions:?}, expected 1..={expected}"),
        ));
        return;
    }
    for w in pos.windows(2) {
        let (a, b) = (w[0].1, w[1].1);
        if b.start < a.end {
            out.push(v(
                ViolationKind::LegOrder,
                &[a.leg.to_string(), b.leg.to_string()],
                format!("{} starts at {} before {} ends at {}", b.leg, b.start, a.leg, a.end),
            ));
        }
    }
}

/// Size limits for the exhaustive oracle.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_operations: usize,
    pub max_machines: usize,
    pub max_transbots: usize,
    pub initial_deadhead: bool,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_operations: 5,
            max_machines: 3,
            max_transbots: 3,
            initial_deadhead: true,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("{what} = {value} exceeds the oracle limit {limit}")]
    LimitsExceeded {
        what: &'static str,
        value: usize,
        limit: usize,
    },
    #[error("invalid instance: {}", .0.join("; "))]
    InvalidInstance(Vec<String>),
    #[error("no feasible schedule exists")]
    Infeasible,
}

struct Oracle<'a> {
    inst: &'a Instance,
    catalog: LegCatalog,
    deadhead: bool,
    /// Per job: sum of minimum processing times from op index k on.
    tail: Vec<Vec<Time>>,
    best: Option<(Time, Schedule)>,
}

#[derive(Clone)]
struct OracleState {
    machine: Vec<Option<MachineId>>,
    op_time: Vec<Option<(Time, Time)>>,
    legs: Vec<Vec<LegAssignment>>,
    /// Per job: (index of current op in the job, legs of its transfer placed).
    pos: Vec<(usize, usize)>,
    ready: Vec<Time>,
    mach_end: Vec<Time>,
    bot_legs: Vec<Vec<(StationId, Time)>>,
    last_start: Time,
    makespan: Time,
}

impl Oracle<'_> {
    fn pickup(&self, st: &OracleState, o: OperationId) -> StationId {
        match self.inst.predecessor(o).ok().flatten() {
            None => self.inst.stocker(),
            Some(p) => self.inst.machine_station(st.machine[p.0].expect("predecessor placed first")),
        }
    }

    fn lower_bound(&self, st: &OracleState) -> Time {
        let mut lb = st.makespan;
        for (j, &(k, _)) in st.pos.iter().enumerate() {
            if k < self.inst.jobs()[j].len() {
                lb = lb.max(st.ready[j] + self.tail[j][k]);
            }
        }
        lb
    }

    fn search(&mut self, st: &OracleState) {
        if let Some((b, _)) = &self.best {
            if self.lower_bound(st) >= *b {
                return;
            }
        }
        let jobs = self.inst.jobs();
        let mut finished = true;
        for j in 0..jobs.len() {
            let (k, placed) = st.pos[j];
            if k >= jobs[j].len() {
                continue;
            }
            finished = false;
            let o = jobs[j][k];
            let machines: Vec<MachineId> = match st.machine[o.0] {
                Some(m) => vec![m],
                None => self.inst.operations()[o.0].eligibility.keys().copied().collect(),
            };
            for m in machines {
                let mut next = st.clone();
                next.machine[o.0] = Some(m);
                let arc = self
                    .catalog
                    .arc(self.pickup(&next, o), self.inst.machine_station(m))
                    .expect("catalog covers machine arcs");
                if placed < arc.legs.len() {
                    let leg = arc.legs[placed].clone();
                    for &bot in self.inst.zone_transbots(leg.zone) {
                        let mut start = st.ready[j];
                        if self.deadhead {
                            start = start.max(self.inst.travel(self.inst.transbots()[bot.0].initial_station, leg.pickup));
                        }
                        for &(drop, end) in &st.bot_legs[bot.0] {
                            start = start.max(end + self.inst.travel(drop, leg.pickup));
                        }
                        if start < st.last_start {
                            continue;
                        }
                        let end = start + leg.travel;
                        let mut n2 = next.clone();
                        n2.legs[o.0].push(LegAssignment { leg: leg.id, transbot: bot, start, end });
                        n2.bot_legs[bot.0].push((leg.dropoff, end));
                        n2.pos[j].1 += 1;
                        n2.ready[j] = end;
                        n2.last_start = start;
                        self.search(&n2);
                    }
                } else {
                    let start = st.ready[j].max(st.mach_end[m.0]);
                    if start < st.last_start {
                        continue;
                    }
                    let p = self.inst.operations()[o.0].eligibility[&m];
                    let end = start + p;
                    next.op_time[o.0] = Some((start, end));
                    next.mach_end[m.0] = end;
                    next.pos[j] = (k + 1, 0);
                    next.ready[j] = end;
                    next.last_start = start;
                    next.makespan = next.makespan.max(end);
                    self.search(&next);
                }
            }
        }
        if finished && self.best.as_ref().is_none_or(|(b, _)| st.makespan < *b) {
            let schedule = Schedule {
                op_assign: (0..self.inst.operations().len())
                    .map(|o| {
                        let (start, end) = st.op_time[o].expect("all operations placed");
                        OpAssignment { machine: st.machine[o].expect("machine chosen"), start, end }
                    })
                    .collect(),
                transfer_assign: st.legs.clone(),
                makespan: st.makespan,
                initial_deadhead: self.deadhead,
            };
            self.best = Some((st.makespan, schedule));
        }
    }
}

/// Exact minimum makespan by exhaustive search over machine choices, bot
/// choices and the order in which activities claim their resources. Each
/// activity starts as early as its job and all earlier users of its
/// resource allow, so every branch is the earliest-start schedule of its
/// orderings.
pub fn brute_force_optimal(instance: &Instance, limits: &OracleLimits) -> Result<(Schedule, Time), OracleError> {
    let checks = [
        ("operations", instance.operations().len(), limits.max_operations),
        ("machines", instance.machine_count(), limits.max_machines),
        ("transbots", instance.transbots().len(), limits.max_transbots),
    ];
    for (what, value, limit) in checks {
        if value > limit {
            return Err(OracleError::LimitsExceeded { what, value, limit });
        }
    }
    let problems = validate_instance(instance);
    if problems.iter().any(|p| !p.contains("has no transbot")) {
        return Err(OracleError::InvalidInstance(problems));
    }
    let n_ops = instance.operations().len();
    let tail = instance
        .jobs()
        .iter()
        .map(|ops| {
            let mut t = vec![0; ops.len() + 1];
            for k in (0..ops.len()).rev() {
                t[k] = t[k + 1] + instance.operations()[ops[k].0].min_processing_time();
            }
            t
        })
        .collect();
    let mut oracle = Oracle {
        inst: instance,
        catalog: LegCatalog::new(instance),
        deadhead: limits.initial_deadhead,
        tail,
        best: None,
    };
    let start = OracleState {
        machine: vec![None; n_ops],
        op_time: vec![None; n_ops],
        legs: vec![Vec::new(); n_ops],
        pos: vec![(0, 0); instance.jobs().len()],
        ready: vec![0; instance.jobs().len()],
        mach_end: vec![0; instance.machine_count()],
        bot_legs: vec![Vec::new(); instance.transbots().len()],
        last_start: 0,
        makespan: 0,
    };
    oracle.search(&start);
    oracle.best.map(|(m, s)| (s, m)).ok_or(OracleError::Infeasible)
}

/// Two machines in two zones, one bot per zone, one job crossing the
/// handoff point. Stations: S0 stocker, S1 M1, S2 M2, S3 handoff.
pub fn fixture_tiny1() -> Instance {
    let stations = vec![
        Station { id: StationId(0), kind: StationKind::Stocker, zone: None },
        Station { id: StationId(1), kind: StationKind::Machine, zone: Some(ZoneId(0)) },
        Station { id: StationId(2), kind: StationKind::Machine, zone: Some(ZoneId(1)) },
        Station { id: StationId(3), kind: StationKind::Handoff, zone: None },
    ];
    let zones = vec![
        Zone { id: ZoneId(0), machines: vec![MachineId(0)], transbots: vec![TransbotId(0)] },
        Zone { id: ZoneId(1), machines: vec![MachineId(1)], transbots: vec![TransbotId(1)] },
    ];
    let bots = vec![
        Transbot { id: TransbotId(0), zone: ZoneId(0), initial_station: StationId(0) },
        Transbot { id: TransbotId(1), zone: ZoneId(1), initial_station: StationId(0) },
    ];
    let ops = vec![
        Operation {
            id: OperationId(0),
            job: JobId(0),
            order_index: 1,
            eligibility: [(MachineId(0), 5)].into_iter().collect(),
        },
        Operation {
            id: OperationId(1),
            job: JobId(0),
            order_index: 2,
            eligibility: [(MachineId(1), 6)].into_iter().collect(),
        },
    ];
    let travel = vec![
        vec![0, 2, 5, 1],
        vec![2, 0, 7, 3],
        vec![5, 7, 0, 4],
        vec![1, 3, 4, 0],
    ];
    Instance::new("tiny1", stations, zones, bots, ops, travel)
}

/// `fixture_tiny1` with both machines in a single zone served by two bots.
pub fn fixture_tiny1_one_zone() -> Instance {
    let t = fixture_tiny1();
    let mut stations = t.stations().to_vec();
    stations[2].zone = Some(ZoneId(0));
    let zones = vec![Zone {
        id: ZoneId(0),
        machines: vec![MachineId(0), MachineId(1)],
        transbots: vec![TransbotId(0), TransbotId(1)],
    }];
    let mut bots = t.transbots().to_vec();
    bots[1].zone = ZoneId(0);
    Instance::new("tiny1-one-zone", stations, zones, bots, t.operations().to_vec(), t.travel_matrix().to_vec())
}

/// A copy of `instance` with one more transbot, a twin of `bot`.
pub fn with_duplicated_transbot(instance: &Instance, bot: TransbotId) -> Instance {
    let mut bots = instance.transbots().to_vec();
    let mut zones = instance.zones().to_vec();
    let twin = Transbot { id: TransbotId(bots.len()), ..bots[bot.0].clone() };
    zones[twin.zone.0].transbots.push(twin.id);
    bots.push(twin);
    Instance::new(
        instance.name(),
        instance.stations().to_vec(),
        zones,
        bots,
        instance.operations().to_vec(),
        instance.travel_matrix().to_vec(),
    )
}

/// Random instance within the oracle's reach: 2 or 3 machines split over 2
/// zones, 2 or 3 bots (every zone has one), 1 to `max_ops` operations in 1
/// or 2 jobs, each operation eligible on 1 or 2 machines.
pub fn random_tiny_instance(seed: u64, max_ops: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_m = rng.gen_range(2..=3usize);
    let n_bots = rng.gen_range(2..=3usize);
    let n_ops = rng.gen_range(1..=max_ops.max(1));
    let n_jobs = if n_ops >= 2 { rng.gen_range(1..=2usize) } else { 1 };

    let mut stations = vec![Station { id: StationId(0), kind: StationKind::Stocker, zone: None }];
    let mut zones: Vec<Zone> = (0..2)
        .map(|z| Zone { id: ZoneId(z), machines: Vec::new(), transbots: Vec::new() })
        .collect();
    for m in 0..n_m {
        let z = ZoneId(m % 2);
        stations.push(Station { id: StationId(m + 1), kind: StationKind::Machine, zone: Some(z) });
        zones[z.0].machines.push(MachineId(m));
    }
    stations.push(Station { id: StationId(n_m + 1), kind: StationKind::Handoff, zone: None });
    let bots: Vec<Transbot> = (0..n_bots)
        .map(|b| Transbot { id: TransbotId(b), zone: ZoneId(b % 2), initial_station: StationId(0) })
        .collect();
    for b in &bots {
        zones[b.zone.0].transbots.push(b.id);
    }

    let n_st = stations.len();
    let mut travel = vec![vec![0; n_st]; n_st];
    for i in 0..n_st {
        for j in (i + 1)..n_st {
            let t = rng.gen_range(1..=6);
            travel[i][j] = t;
            travel[j][i] = t;
        }
    }

    let mut ops = Vec::new();
    let mut per_job = vec![0u32; n_jobs];
    for o in 0..n_ops {
        let j = if o < n_jobs { o } else { rng.gen_range(0..n_jobs) };
        per_job[j] += 1;
        let k = rng.gen_range(1..=2usize);
        let mut eligibility = BTreeMap::new();
        while eligibility.len() < k {
            eligibility.insert(MachineId(rng.gen_range(0..n_m)), rng.gen_range(1..=6));
        }
        ops.push(Operation { id: OperationId(o), job: JobId(j), order_index: per_job[j], eligibility });
    }
    Instance::new(format!("tiny-{seed}"), stations, zones, bots, ops, travel)
}
