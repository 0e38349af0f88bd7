//! Problem and solution data model.
//!
//! Stations are indexed densely. Machines are the `Machine`-kind stations in
//! station order, so `MachineId(k)` is the k-th machine station. The stocker
//! (L/U) and the handoff point (H) belong to no zone.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Discrete time unit used for processing, travel and schedule times.
pub type Time = i64;

macro_rules! index_type {
    ($(#[$meta:meta])* $name:ident, $prefix:literal, $offset:literal) => {
        $(#[$meta])*
        #[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub usize);

        impl $name {
            pub fn index(self) -> usize {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0 + $offset)
            }
        }
    };
}

index_type!(StationId, "S", 0);
index_type!(
    /// Zero-based machine index, displayed one-based (`M1` is `MachineId(0)`).
    MachineId,
    "M",
    1
);
index_type!(ZoneId, "z", 1);
index_type!(TransbotId, "V", 1);
index_type!(OperationId, "o", 0);
index_type!(JobId, "J", 1);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum StationKind {
    Machine,
    Stocker,
    Handoff,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Station {
    pub id: StationId,
    pub kind: StationKind,
    /// Present exactly when `kind` is `Machine`.
    pub zone: Option<ZoneId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Zone {
    pub id: ZoneId,
    pub machines: Vec<MachineId>,
    pub transbots: Vec<TransbotId>,
}

/// A unit-capacity transfer robot confined to one zone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transbot {
    pub id: TransbotId,
    pub zone: ZoneId,
    pub initial_station: StationId,
}

impl Transbot {
    /// Transbots carry one part at a time.
    pub const CAPACITY: u32 = 1;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Operation {
    pub id: OperationId,
    pub job: JobId,
    /// One-based position within the job.
    pub order_index: u32,
    /// Eligible machines and their processing times.
    pub eligibility: BTreeMap<MachineId, Time>,
}

impl Operation {
    pub fn processing_time(&self, machine: MachineId) -> Option<Time> {
        self.eligibility.get(&machine).copied()
    }

    pub fn max_processing_time(&self) -> Time {
        self.eligibility.values().copied().max().unwrap_or(0)
    }

    pub fn min_processing_time(&self) -> Time {
        self.eligibility.values().copied().min().unwrap_or(0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown operation {0}")]
    UnknownOperation(OperationId),
    #[error("operation {0} is missing from the schedule")]
    MissingOperation(OperationId),
}

/// Immutable problem description.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    name: String,
    stations: Vec<Station>,
    zones: Vec<Zone>,
    transbots: Vec<Transbot>,
    operations: Vec<Operation>,
    jobs: Vec<Vec<OperationId>>,
    travel: Vec<Vec<Time>>,
    machine_stations: Vec<StationId>,
}

impl Instance {
    /// Assembles an instance. Jobs are derived from the operations' job ids
    /// and order indices. No validation happens here; see [`validate_instance`].
    pub fn new(
        name: impl Into<String>,
        stations: Vec<Station>,
        zones: Vec<Zone>,
        transbots: Vec<Transbot>,
        operations: Vec<Operation>,
        travel: Vec<Vec<Time>>,
    ) -> Self {
        let machine_stations = stations
            .iter()
            .filter(|s| s.kind == StationKind::Machine)
            .map(|s| s.id)
            .collect();
        let job_count = operations.iter().map(|o| o.job.0 + 1).max().unwrap_or(0);
        let mut jobs: Vec<Vec<OperationId>> = vec![Vec::new(); job_count];
        for op in &operations {
            jobs[op.job.0].push(op.id);
        }
        for job in &mut jobs {
            job.sort_by_key(|id| (operations[id.0].order_index, id.0));
        }
        Instance {
            name: name.into(),
            stations,
            zones,
            transbots,
            operations,
            jobs,
            travel,
            machine_stations,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn transbots(&self) -> &[Transbot] {
        &self.transbots
    }

    pub fn operations(&self) -> &[Operation] {
        &self.operations
    }

    pub fn operation(&self, id: OperationId) -> Option<&Operation> {
        self.operations.get(id.0)
    }

    pub fn jobs(&self) -> &[Vec<OperationId>] {
        &self.jobs
    }

    pub fn travel_matrix(&self) -> &[Vec<Time>] {
        &self.travel
    }

    /// Station-to-station travel time. Out-of-range lookups yield 0 so that
    /// structural validation can run on malformed instances.
    pub fn travel(&self, from: StationId, to: StationId) -> Time {
        self.travel
            .get(from.0)
            .and_then(|row| row.get(to.0))
            .copied()
            .unwrap_or(0)
    }

    pub fn machine_count(&self) -> usize {
        self.machine_stations.len()
    }

    pub fn machines(&self) -> impl Iterator<Item = MachineId> {
        (0..self.machine_stations.len()).map(MachineId)
    }

    pub fn machine_station(&self, machine: MachineId) -> StationId {
        self.machine_stations[machine.0]
    }

    pub fn station_machine(&self, station: StationId) -> Option<MachineId> {
        self.machine_stations
            .iter()
            .position(|&s| s == station)
            .map(MachineId)
    }

    pub fn stocker(&self) -> StationId {
        self.find_station(StationKind::Stocker)
            .expect("instance has no stocker station")
    }

    pub fn handoff(&self) -> StationId {
        self.find_station(StationKind::Handoff)
            .expect("instance has no handoff station")
    }

    fn find_station(&self, kind: StationKind) -> Option<StationId> {
        self.stations.iter().find(|s| s.kind == kind).map(|s| s.id)
    }

    pub fn station_zone(&self, station: StationId) -> Option<ZoneId> {
        self.stations.get(station.0).and_then(|s| s.zone)
    }

    pub fn machine_zone(&self, machine: MachineId) -> ZoneId {
        self.station_zone(self.machine_station(machine))
            .expect("machine station without zone")
    }

    pub fn zone_transbots(&self, zone: ZoneId) -> &[TransbotId] {
        &self.zones[zone.0].transbots
    }

    pub fn max_travel(&self) -> Time {
        self.travel
            .iter()
            .flat_map(|r| r.iter().copied())
            .max()
            .unwrap_or(0)
    }

    /// The same-job operation with order index one lower, if any.
    pub fn predecessor(&self, op: OperationId) -> Result<Option<OperationId>, ModelError> {
        let operation = self.operation(op).ok_or(ModelError::UnknownOperation(op))?;
        if operation.order_index <= 1 {
            return Ok(None);
        }
        Ok(self.jobs[operation.job.0]
            .iter()
            .copied()
            .find(|o| self.operations[o.0].order_index == operation.order_index - 1))
    }

    /// The same-job operation with order index one higher, if any.
    pub fn successor(&self, op: OperationId) -> Result<Option<OperationId>, ModelError> {
        let operation = self.operation(op).ok_or(ModelError::UnknownOperation(op))?;
        Ok(self.jobs[operation.job.0]
            .iter()
            .copied()
            .find(|o| self.operations[o.0].order_index == operation.order_index + 1))
    }
}

/// Returns the same-job operation with order index `g_o - 1`.
pub fn predecessor(instance: &Instance, op: OperationId) -> Result<Option<OperationId>, ModelError> {
    instance.predecessor(op)
}

/// Every structural rule the instance breaks, one sentence each.
pub fn validate_instance(instance: &Instance) -> Vec<String> {
    let mut out = Vec::new();
    let n = instance.stations.len();

    for (i, s) in instance.stations.iter().enumerate() {
        if s.id.0 != i {
            out.push(format!("station at position {i} has id {}", s.id.0));
        }
        match (s.kind, s.zone) {
            (StationKind::Machine, None) => {
                out.push(format!("machine station {} carries no zone", s.id.0))
            }
            (StationKind::Machine, Some(z)) if z.0 >= instance.zones.len() => out.push(format!(
                "machine station {} references unknown zone {}",
                s.id.0,
                z
            )),
            (StationKind::Stocker | StationKind::Handoff, Some(_)) => {
                out.push(format!("station {} is not a machine but carries a zone", s.id.0))
            }
            _ => {}
        }
    }
    let stockers = instance
        .stations
        .iter()
        .filter(|s| s.kind == StationKind::Stocker)
        .count();
    if stockers != 1 {
        out.push(format!("expected exactly one stocker station, found {stockers}"));
    }
    let handoffs = instance
        .stations
        .iter()
        .filter(|s| s.kind == StationKind::Handoff)
        .count();
    if handoffs != 1 {
        out.push(format!("expected exactly one handoff station, found {handoffs}"));
    }

    // Zones partition the machines and list their transbots.
    let mut machine_seen = vec![0usize; instance.machine_count()];
    for (zi, zone) in instance.zones.iter().enumerate() {
        if zone.id.0 != zi {
            out.push(format!("zone at position {zi} has id {}", zone.id.0));
        }
        for &m in &zone.machines {
            if m.0 >= instance.machine_count() {
                out.push(format!("zone {} lists unknown machine {}", zone.id, m));
                continue;
            }
            machine_seen[m.0] += 1;
            if instance.station_zone(instance.machine_station(m)) != Some(zone.id) {
                out.push(format!(
                    "zone {} lists machine {} whose station is in another zone",
                    zone.id,
                    m
                ));
            }
        }
        for &v in &zone.transbots {
            match instance.transbots.get(v.0) {
                None => out.push(format!("zone {} lists unknown transbot {}", zone.id, v)),
                Some(bot) if bot.zone != zone.id => out.push(format!(
                    "zone {} lists transbot {} which belongs to {}",
                    zone.id,
                    v,
                    bot.zone
                )),
                _ => {}
            }
        }
        if zone.transbots.is_empty() {
            out.push(format!("zone {} has no transbot", zone.id));
        }
    }
    for (m, &count) in machine_seen.iter().enumerate() {
        if count != 1 {
            out.push(format!(
                "machine {} appears in {count} zones (expected exactly one)",
                MachineId(m)
            ));
        }
    }

    for (vi, bot) in instance.transbots.iter().enumerate() {
        if bot.id.0 != vi {
            out.push(format!("transbot at position {vi} has id {}", bot.id.0));
        }
        match instance.zones.get(bot.zone.0) {
            None => out.push(format!("transbot {} references unknown zone", bot.id)),
            Some(zone) if !zone.transbots.contains(&bot.id) => out.push(format!(
                "transbot {} is missing from its zone {}",
                bot.id,
                zone.id
            )),
            _ => {}
        }
        if bot.initial_station.0 >= n {
            out.push(format!("transbot {} starts at unknown station", bot.id));
        }
    }

    for (oi, op) in instance.operations.iter().enumerate() {
        if op.id.0 != oi {
            out.push(format!("operation at position {oi} has id {}", op.id.0));
        }
        if op.eligibility.is_empty() {
            out.push(format!("operation {} has no eligible machine", op.id.0));
        }
        for (&m, &p) in &op.eligibility {
            if m.0 >= instance.machine_count() {
                out.push(format!("operation {} references unknown machine {}", op.id.0, m));
            }
            if p <= 0 {
                out.push(format!(
                    "operation {} has non-positive processing time {p} on {}",
                    op.id.0,
                    m
                ));
            }
        }
    }
    for (j, job) in instance.jobs.iter().enumerate() {
        let indices: Vec<u32> = job
            .iter()
            .map(|o| instance.operations[o.0].order_index)
            .collect();
        let expected: Vec<u32> = (1..=job.len() as u32).collect();
        if indices != expected {
            out.push(format!(
                "job {} has order indices {indices:?}, expected 1..={}",
                j + 1,
                job.len()
            ));
        }
    }

    if instance.travel.len() != n || instance.travel.iter().any(|r| r.len() != n) {
        out.push(format!("travel matrix is not {n}x{n}"));
    } else {
        for (s, row) in instance.travel.iter().enumerate() {
            if row[s] != 0 {
                out.push(format!("travel[{s}][{s}] = {} (diagonal must be 0)", row[s]));
            }
            for (t, &value) in row.iter().enumerate() {
                if value < 0 {
                    out.push(format!("travel[{s}][{t}] = {value} is negative"));
                }
            }
        }
    }
    out
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct OpAssignment {
    pub machine: MachineId,
    pub start: Time,
    pub end: Time,
}

/// One leg of a transfer executed by a transbot.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct LegAssignment {
    pub leg: crate::routing::LegId,
    pub transbot: TransbotId,
    pub start: Time,
    pub end: Time,
}

/// A complete solution. Both vectors are indexed by operation id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub op_assign: Vec<OpAssignment>,
    /// Legs of the transfer that brings the part to each operation's machine.
    pub transfer_assign: Vec<Vec<LegAssignment>>,
    pub makespan: Time,
    /// Whether transbots were charged the trip from the stocker to their first pickup.
    pub initial_deadhead: bool,
}

impl Schedule {
    pub fn empty(initial_deadhead: bool) -> Self {
        Schedule {
            op_assign: Vec::new(),
            transfer_assign: Vec::new(),
            makespan: 0,
            initial_deadhead,
        }
    }

    pub fn leg_count(&self) -> usize {
        self.transfer_assign.iter().map(Vec::len).sum()
    }
}

/// Maximum operation end time; transfers are ignored since a job completes on
/// the machine of its last operation.
pub fn compute_makespan(instance: &Instance, schedule: &Schedule) -> Result<Time, ModelError> {
    let mut makespan = 0;
    for op in instance.operations() {
        let assign = schedule
            .op_assign
            .get(op.id.0)
            .ok_or(ModelError::MissingOperation(op.id))?;
        makespan = makespan.max(assign.end);
    }
    Ok(makespan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::fixture_tiny1;

    fn three_op_job() -> Instance {
        let tiny = fixture_tiny1();
        let ops = (0..3)
            .map(|i| Operation {
                id: OperationId(i),
                job: JobId(0),
                order_index: i as u32 + 1,
                eligibility: [(MachineId(0), 4)].into_iter().collect(),
            })
            .collect();
        Instance::new(
            "chain",
            tiny.stations().to_vec(),
            tiny.zones().to_vec(),
            tiny.transbots().to_vec(),
            ops,
            tiny.travel_matrix().to_vec(),
        )
    }

    #[test]
    fn tiny1_is_valid() {
        assert_eq!(validate_instance(&fixture_tiny1()), Vec::<String>::new());
    }

    #[test]
    fn zone_without_transbot_is_reported() {
        let tiny = fixture_tiny1();
        let mut zones = tiny.zones().to_vec();
        let mut bots = tiny.transbots().to_vec();
        zones[1].transbots.clear();
        bots.truncate(1);
        let inst = Instance::new(
            "bad",
            tiny.stations().to_vec(),
            zones,
            bots,
            tiny.operations().to_vec(),
            tiny.travel_matrix().to_vec(),
        );
        let v = validate_instance(&inst);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].contains("z2"));
    }

    #[test]
    fn nonzero_diagonal_is_reported() {
        let tiny = fixture_tiny1();
        let mut travel = tiny.travel_matrix().to_vec();
        travel[1][1] = 3;
        let inst = Instance::new(
            "bad",
            tiny.stations().to_vec(),
            tiny.zones().to_vec(),
            tiny.transbots().to_vec(),
            tiny.operations().to_vec(),
            travel,
        );
        let v = validate_instance(&inst);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].contains("travel[1][1]"));
    }

    #[test]
    fn validation_is_deterministic() {
        let inst = three_op_job();
        assert_eq!(validate_instance(&inst), validate_instance(&inst));
    }

    #[test]
    fn predecessor_follows_order_index() {
        let inst = three_op_job();
        assert_eq!(predecessor(&inst, OperationId(1)), Ok(Some(OperationId(0))));
        assert_eq!(predecessor(&inst, OperationId(0)), Ok(None));
        assert_eq!(predecessor(&inst, OperationId(2)), Ok(Some(OperationId(1))));
        assert_eq!(
            predecessor(&inst, OperationId(9)),
            Err(ModelError::UnknownOperation(OperationId(9)))
        );
    }

    #[test]
    fn makespan_of_empty_instance_is_zero() {
        let tiny = fixture_tiny1();
        let inst = Instance::new(
            "empty",
            tiny.stations().to_vec(),
            tiny.zones().to_vec(),
            tiny.transbots().to_vec(),
            Vec::new(),
            tiny.travel_matrix().to_vec(),
        );
        assert_eq!(compute_makespan(&inst, &Schedule::empty(true)), Ok(0));
    }

    #[test]
    fn makespan_requires_every_operation() {
        let inst = fixture_tiny1();
        assert_eq!(
            compute_makespan(&inst, &Schedule::empty(true)),
            Err(ModelError::MissingOperation(OperationId(0)))
        );
    }
}
