//! The arc-based and operation-embedded models, the FJSP relaxation, and the
//! glue that turns engine assignments back into schedules.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

use crate::engine::{
    self, Assignment, EngineError, IntervalId, IntervalVar, Model, PresenceRelation, SequenceId, SolveReport,
    SolveStatus, SolverConfig, TransitionMatrix, WarmStart,
};
use crate::model::{
    validate_instance, Instance, LegAssignment, MachineId, OpAssignment, OperationId, Schedule, StationId, Time,
    TransbotId,
};
use crate::routing::{build_leg_matrix, ArcKey, ArcSpec, LegCatalog, LegId};
use crate::verify::validate_schedule;

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formulation {
    Arc,
    Embedded,
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Formulation::Arc => "arc",
            Formulation::Embedded => "embedded",
        })
    }
}

impl FromStr for Formulation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "arc" => Ok(Formulation::Arc),
            "embedded" => Ok(Formulation::Embedded),
            other => Err(format!("unknown model '{other}' (expected arc or embedded)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error("invalid instance: {}", .0.join("; "))]
    InvalidInstance(Vec<String>),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{0} has no present machine option in the assignment")]
    NoMachine(OperationId),
    #[error("extracted schedule fails validation: {0}")]
    InvalidSchedule(String),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct BuildOptions {
    /// Charge each transbot the trip from its initial station to its first pickup.
    pub initial_deadhead: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { initial_deadhead: true }
    }
}

/// Decision-variable counts per class, one per variable type.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct VariableCounts {
    pub transfer: usize,
    pub trans_arc: usize,
    pub trans_on_veh: usize,
    pub job: usize,
    pub job_on_mach: usize,
    pub seq_mach: usize,
    pub seq_veh: usize,
}

#[derive(Clone, Debug)]
pub struct XolvEntry {
    pub arc: ArcKey,
    pub leg: LegId,
    pub bot: TransbotId,
    pub id: IntervalId,
}

#[derive(Clone, Debug)]
pub struct ArcModelVars {
    pub xo: Vec<IntervalId>,
    /// Per operation: one optional interval per arc of A_o.
    pub xoa: Vec<Vec<(ArcKey, IntervalId)>>,
    pub xolv: Vec<Vec<XolvEntry>>,
    pub yo: Vec<IntervalId>,
    pub ym: Vec<Vec<(MachineId, IntervalId)>>,
    pub wm: Vec<SequenceId>,
    pub wv: Vec<SequenceId>,
    /// Zero-length interval at time 0 heading each bot sequence, when the
    /// initial deadhead is charged.
    pub bot_start: Vec<IntervalId>,
    pub initial_deadhead: bool,
    pub catalog: LegCatalog,
}

#[derive(Clone, Debug)]
pub struct EmbeddedModelVars {
    pub xo: Vec<IntervalId>,
    /// Per operation: one optional interval per viable arc.
    pub ya: Vec<Vec<(ArcKey, MachineId, IntervalId)>>,
    pub xlv: Vec<Vec<XolvEntry>>,
    /// Zero-length stand-ins covered by x_o when a viable arc has no legs.
    pub stay: Vec<Vec<(ArcKey, IntervalId)>>,
    pub yo: Vec<IntervalId>,
    pub wm: Vec<SequenceId>,
    pub wv: Vec<SequenceId>,
    pub bot_start: Vec<IntervalId>,
    pub initial_deadhead: bool,
    pub catalog: LegCatalog,
}

#[derive(Clone, Debug)]
pub struct RelaxationVars {
    pub yo: Vec<IntervalId>,
    pub ym: Vec<Vec<(MachineId, IntervalId)>>,
    pub wm: Vec<SequenceId>,
}

#[derive(Clone, Debug)]
pub enum ModelVars {
    Arc(ArcModelVars),
    Embedded(EmbeddedModelVars),
}

impl ArcModelVars {
    pub fn counts(&self) -> VariableCounts {
        VariableCounts {
            transfer: self.xo.len(),
            trans_arc: self.xoa.iter().map(Vec::len).sum(),
            trans_on_veh: self.xolv.iter().map(Vec::len).sum(),
            job: self.yo.len(),
            job_on_mach: self.ym.iter().map(Vec::len).sum(),
            seq_mach: self.wm.len(),
            seq_veh: self.wv.len(),
        }
    }
}

impl EmbeddedModelVars {
    pub fn counts(&self) -> VariableCounts {
        VariableCounts {
            transfer: self.xo.len(),
            trans_arc: 0,
            trans_on_veh: self.xlv.iter().map(Vec::len).sum(),
            job: self.yo.len(),
            job_on_mach: self.ya.iter().map(Vec::len).sum(),
            seq_mach: self.wm.len(),
            seq_veh: self.wv.len(),
        }
    }
}

/// Zone-less bot rules are tolerated: legs in a zone without bots simply
/// cannot be served.
fn check_instance(instance: &Instance) -> Result<(), FormulationError> {
    let problems: Vec<String> = validate_instance(instance)
        .into_iter()
        .filter(|p| !p.contains("has no transbot"))
        .collect();
    if problems.is_empty() {
        Ok(())
    } else {
        Err(FormulationError::InvalidInstance(problems))
    }
}

/// Latest completion of a fully serial schedule: every operation at its
/// slowest, after the longest possible transfer with a full deadhead before
/// each leg.
pub fn horizon(instance: &Instance, catalog: &LegCatalog) -> Time {
    let max_t = instance.max_travel();
    let worst_transfer = catalog
        .arcs()
        .map(|a| a.legs.iter().map(|l| l.travel + max_t).sum::<Time>())
        .max()
        .unwrap_or(0);
    instance
        .operations()
        .iter()
        .map(|o| o.max_processing_time() + worst_transfer)
        .sum::<Time>()
        .max(1)
}

/// Leg transitions plus one extra type per station for the bots' start
/// markers. Nothing can precede a start marker.
fn transition_matrix(instance: &Instance, catalog: &LegCatalog, horizon: Time) -> Arc<TransitionMatrix> {
    let legs = catalog.legs();
    let base = build_leg_matrix(instance, legs).expect("catalog legs are dense and unique");
    let n_st = instance.stations().len();
    let size = legs.len() + n_st;
    let mut rows = vec![vec![0; size]; size];
    for (i, row) in base.rows().iter().enumerate() {
        rows[i][..legs.len()].copy_from_slice(row);
        for s in 0..n_st {
            rows[i][legs.len() + s] = horizon + 1;
        }
    }
    for s in 0..n_st {
        for (j, l) in legs.iter().enumerate() {
            rows[legs.len() + s][j] = instance.travel(StationId(s), l.pickup);
        }
    }
    Arc::new(TransitionMatrix::from_rows(&rows))
}

struct BotSeqs {
    members: Vec<Vec<IntervalId>>,
    types: Vec<Vec<usize>>,
    starts: Vec<IntervalId>,
}

impl BotSeqs {
    fn new(model: &mut Model, instance: &Instance, catalog: &LegCatalog, deadhead: bool) -> Result<Self, EngineError> {
        let n = instance.transbots().len();
        let mut s = BotSeqs {
            members: vec![Vec::new(); n],
            types: vec![Vec::new(); n],
            starts: Vec::new(),
        };
        if deadhead {
            for bot in instance.transbots() {
                let id = model.add_interval(IntervalVar::new(format!("start {}", bot.id), 0));
                model.add_fixed_start(id, 0)?;
                s.members[bot.id.0].push(id);
                s.types[bot.id.0].push(catalog.legs().len() + bot.initial_station.0);
                s.starts.push(id);
            }
        }
        Ok(s)
    }

    fn push(&mut self, bot: TransbotId, id: IntervalId, leg: LegId) {
        self.members[bot.0].push(id);
        self.types[bot.0].push(leg.0);
    }

    fn finish(
        self,
        model: &mut Model,
        instance: &Instance,
        matrix: &Arc<TransitionMatrix>,
    ) -> Result<Vec<SequenceId>, EngineError> {
        let mut out = Vec::new();
        for (k, (members, types)) in self.members.into_iter().zip(self.types).enumerate() {
            let seq = model.add_sequence(format!("w {}", instance.transbots()[k].id), members, Some(types))?;
            model.add_no_overlap(seq, Some(matrix.clone()))?;
            out.push(seq);
        }
        Ok(out)
    }
}

fn machine_sequences(
    model: &mut Model,
    members: Vec<Vec<IntervalId>>,
) -> Result<Vec<SequenceId>, EngineError> {
    let mut out = Vec::new();
    for (m, list) in members.into_iter().enumerate() {
        let seq = model.add_sequence(format!("w {}", MachineId(m)), list, None)?;
        model.add_no_overlap(seq, None)?;
        out.push(seq);
    }
    Ok(out)
}

fn op_master(model: &mut Model, instance: &Instance, o: OperationId) -> IntervalId {
    let op = &instance.operations()[o.0];
    model.add_interval(IntervalVar {
        name: format!("y {o}"),
        optional: false,
        length_min: op.min_processing_time(),
        length_max: op.max_processing_time(),
    })
}

/// Arc set A_o of the arc model: stocker arcs for first operations,
/// every machine pair otherwise.
fn arc_model_arcs<'c>(instance: &Instance, catalog: &'c LegCatalog, o: OperationId) -> Vec<&'c ArcSpec> {
    let first = instance.predecessor(o).ok().flatten().is_none();
    catalog
        .arcs()
        .filter(|a| (a.pickup == instance.stocker()) == first)
        .collect()
}

pub fn build_arc_model(instance: &Instance, opts: &BuildOptions) -> Result<(Model, ArcModelVars), FormulationError> {
    check_instance(instance)?;
    let catalog = LegCatalog::new(instance);
    let h = horizon(instance, &catalog);
    let matrix = transition_matrix(instance, &catalog, h);
    let mut model = Model::new(h);
    let n_ops = instance.operations().len();
    let mut bots = BotSeqs::new(&mut model, instance, &catalog, opts.initial_deadhead)?;
    let mut mach_members = vec![Vec::new(); instance.machine_count()];

    let mut yo = Vec::with_capacity(n_ops);
    let mut ym = Vec::with_capacity(n_ops);
    for op in instance.operations() {
        let y = op_master(&mut model, instance, op.id);
        let mut opts_m = Vec::new();
        for (&m, &p) in &op.eligibility {
            let id = model.add_interval(IntervalVar::new(format!("y {} {m}", op.id), p).optional());
            mach_members[m.0].push(id);
            opts_m.push((m, id));
        }
        model.add_alternative(y, opts_m.iter().map(|&(_, i)| i).collect())?;
        yo.push(y);
        ym.push(opts_m);
    }

    let mut xo = Vec::with_capacity(n_ops);
    let mut xoa = Vec::with_capacity(n_ops);
    let mut xolv = Vec::with_capacity(n_ops);
    for op in instance.operations() {
        let o = op.id;
        let pred = instance.predecessor(o).expect("operation exists");
        let x = model.add_interval(IntervalVar::stretchable(format!("x {o}"), 0));
        let mut arcs_o = Vec::new();
        let mut legs_o = Vec::new();
        for arc in arc_model_arcs(instance, &catalog, o) {
            let t_a = arc.total_travel;
            let var = if arc.legs.len() >= 2 {
                IntervalVar::stretchable(format!("x {o} {}-{}", arc.pickup, arc.dropoff), t_a)
            } else {
                IntervalVar::new(format!("x {o} {}-{}", arc.pickup, arc.dropoff), t_a)
            };
            let xa = model.add_interval(var.optional());
            arcs_o.push((arc.key(), xa));

            // station linking: the dropoff must be o's machine, the pickup
            // the predecessor's machine
            let drop_m = instance.station_machine(arc.dropoff).expect("arc dropoff is a machine");
            let mut linked = true;
            match ym[o.0].iter().find(|&&(m, _)| m == drop_m) {
                Some(&(_, y_m)) => model.add_presence_implies(xa, y_m)?,
                None => linked = false,
            }
            if let Some(p) = pred {
                let pick_m = instance.station_machine(arc.pickup).expect("non-first arcs start at a machine");
                match ym[p.0].iter().find(|&&(m, _)| m == pick_m) {
                    Some(&(_, y_p)) => model.add_presence_implies(xa, y_p)?,
                    None => linked = false,
                }
            }
            if !linked {
                model.add_forbidden(xa)?;
            }

            // legs: one optional interval per zone-compatible bot
            let mut per_leg: Vec<Vec<IntervalId>> = Vec::new();
            for leg in &arc.legs {
                let mut ids = Vec::new();
                for &v in instance.zone_transbots(leg.zone) {
                    let id = model.add_interval(IntervalVar::new(format!("x {o} {} {v}", leg.id), leg.travel).optional());
                    bots.push(v, id, leg.id);
                    legs_o.push(XolvEntry { arc: arc.key(), leg: leg.id, bot: v, id });
                    ids.push(id);
                }
                model.add_presence_balance(vec![xa], ids.clone())?;
                model.add_presence_sum(xa, ids.clone(), PresenceRelation::AtMostOne)?;
                per_leg.push(ids);
            }
            for k in 1..per_leg.len() {
                for &later in &per_leg[k] {
                    for &earlier in &per_leg[k - 1] {
                        model.add_conditional_precedence(later, earlier, later)?;
                    }
                }
            }
            let covered: Vec<IntervalId> = per_leg.iter().flatten().copied().collect();
            if !covered.is_empty() {
                model.add_span(xa, covered)?;
            }
        }
        model.add_alternative(x, arcs_o.iter().map(|&(_, i)| i).collect())?;
        model.add_end_before_start(x, yo[o.0])?;
        if let Some(p) = pred {
            model.add_end_before_start(yo[p.0], x)?;
        }
        xo.push(x);
        xoa.push(arcs_o);
        xolv.push(legs_o);
    }

    let bot_start = bots.starts.clone();
    let wv = bots.finish(&mut model, instance, &matrix)?;
    let wm = machine_sequences(&mut model, mach_members)?;
    model.minimize_max_end(yo.clone())?;
    Ok((
        model,
        ArcModelVars {
            xo,
            xoa,
            xolv,
            yo,
            ym,
            wm,
            wv,
            bot_start,
            initial_deadhead: opts.initial_deadhead,
            catalog,
        },
    ))
}

pub fn build_embedded_model(
    instance: &Instance,
    opts: &BuildOptions,
) -> Result<(Model, EmbeddedModelVars), FormulationError> {
    check_instance(instance)?;
    let catalog = LegCatalog::new(instance);
    let h = horizon(instance, &catalog);
    let matrix = transition_matrix(instance, &catalog, h);
    let mut model = Model::new(h);
    let n_ops = instance.operations().len();
    let mut bots = BotSeqs::new(&mut model, instance, &catalog, opts.initial_deadhead)?;
    let mut mach_members = vec![Vec::new(); instance.machine_count()];

    let mut xo = Vec::with_capacity(n_ops);
    let mut yo = Vec::with_capacity(n_ops);
    let mut ya = Vec::with_capacity(n_ops);
    let mut xlv = Vec::with_capacity(n_ops);
    let mut stay = Vec::with_capacity(n_ops);
    for op in instance.operations() {
        let o = op.id;
        let y = op_master(&mut model, instance, o);
        let x = model.add_interval(IntervalVar::stretchable(format!("x {o}"), 0));
        let mut arcs_o = Vec::new();
        let mut legs_o = Vec::new();
        let mut stay_o = Vec::new();
        let mut covered = Vec::new();
        let viable = catalog
            .viable_arcs(instance, o)
            .map_err(|e| FormulationError::InvalidInstance(vec![e.to_string()]))?;
        for arc in viable {
            let m = instance.station_machine(arc.dropoff).expect("viable arcs end at a machine");
            let p = op.eligibility[&m];
            let id = model.add_interval(IntervalVar::new(format!("y {o} {}-{}", arc.pickup, arc.dropoff), p).optional());
            mach_members[m.0].push(id);
            arcs_o.push((arc.key(), m, id));

            if arc.legs.is_empty() {
                let s = model.add_interval(IntervalVar::new(format!("stay {o} {}", arc.dropoff), 0).optional());
                model.add_presence_balance(vec![id], vec![s])?;
                stay_o.push((arc.key(), s));
                covered.push(s);
                continue;
            }
            let mut per_leg: Vec<Vec<IntervalId>> = Vec::new();
            for leg in &arc.legs {
                let mut ids = Vec::new();
                for &v in instance.zone_transbots(leg.zone) {
                    let lv = model.add_interval(IntervalVar::new(format!("x {o} {} {v}", leg.id), leg.travel).optional());
                    bots.push(v, lv, leg.id);
                    legs_o.push(XolvEntry { arc: arc.key(), leg: leg.id, bot: v, id: lv });
                    ids.push(lv);
                }
                model.add_presence_balance(vec![id], ids.clone())?;
                model.add_presence_sum(id, ids.clone(), PresenceRelation::AtMostOne)?;
                covered.extend(ids.iter().copied());
                per_leg.push(ids);
            }
            for k in 1..per_leg.len() {
                for &later in &per_leg[k] {
                    for &earlier in &per_leg[k - 1] {
                        model.add_conditional_precedence(later, earlier, later)?;
                    }
                }
            }
        }
        model.add_alternative(y, arcs_o.iter().map(|&(_, _, i)| i).collect())?;
        model.add_span(x, covered)?;
        model.add_end_before_start(x, y)?;
        xo.push(x);
        yo.push(y);
        ya.push(arcs_o);
        xlv.push(legs_o);
        stay.push(stay_o);
    }

    for op in instance.operations() {
        if let Some(p) = instance.predecessor(op.id).expect("operation exists") {
            model.add_end_before_start(yo[p.0], xo[op.id.0])?;
            // the machine that ran the predecessor is the pickup of o
            let mut into: BTreeMap<StationId, Vec<IntervalId>> = BTreeMap::new();
            let mut out_of: BTreeMap<StationId, Vec<IntervalId>> = BTreeMap::new();
            for &((_, d), _, id) in &ya[p.0] {
                into.entry(d).or_default().push(id);
            }
            for &((pk, _), _, id) in &ya[op.id.0] {
                out_of.entry(pk).or_default().push(id);
            }
            for (st, lhs) in into {
                let rhs = out_of.remove(&st).unwrap_or_default();
                model.add_presence_balance(lhs, rhs)?;
            }
            for (_, rhs) in out_of {
                for id in rhs {
                    model.add_forbidden(id)?;
                }
            }
        }
    }

    let bot_start = bots.starts.clone();
    let wv = bots.finish(&mut model, instance, &matrix)?;
    let wm = machine_sequences(&mut model, mach_members)?;
    model.minimize_max_end(yo.clone())?;
    Ok((
        model,
        EmbeddedModelVars {
            xo,
            ya,
            xlv,
            stay,
            yo,
            wm,
            wv,
            bot_start,
            initial_deadhead: opts.initial_deadhead,
            catalog,
        },
    ))
}

/// Classical flexible job shop: machines and job order only.
pub fn build_fjsp_relaxation(instance: &Instance) -> Result<(Model, RelaxationVars), FormulationError> {
    check_instance(instance)?;
    let h = instance
        .operations()
        .iter()
        .map(|o| o.max_processing_time())
        .sum::<Time>()
        .max(1);
    let mut model = Model::new(h);
    let mut mach_members = vec![Vec::new(); instance.machine_count()];
    let mut yo = Vec::new();
    let mut ym = Vec::new();
    for op in instance.operations() {
        let y = op_master(&mut model, instance, op.id);
        let mut opts_m = Vec::new();
        for (&m, &p) in &op.eligibility {
            let id = model.add_interval(IntervalVar::new(format!("y {} {m}", op.id), p).optional());
            mach_members[m.0].push(id);
            opts_m.push((m, id));
        }
        model.add_alternative(y, opts_m.iter().map(|&(_, i)| i).collect())?;
        yo.push(y);
        ym.push(opts_m);
    }
    for op in instance.operations() {
        if let Some(s) = instance.successor(op.id).expect("operation exists") {
            model.add_end_before_start(yo[op.id.0], yo[s.0])?;
        }
    }
    let wm = machine_sequences(&mut model, mach_members)?;
    model.minimize_max_end(yo.clone())?;
    Ok((model, RelaxationVars { yo, ym, wm }))
}

fn legs_from(entries: &[XolvEntry], catalog: &LegCatalog, asg: &Assignment) -> Vec<LegAssignment> {
    let mut legs: Vec<(u8, LegAssignment)> = entries
        .iter()
        .filter_map(|e| {
            let (start, end) = asg.get(e.id)?;
            let pos = catalog.leg(e.leg).map_or(0, |l| l.position);
            Some((pos, LegAssignment { leg: e.leg, transbot: e.bot, start, end }))
        })
        .collect();
    legs.sort_by_key(|&(p, a)| (p, a.start, a.leg));
    legs.into_iter().map(|(_, a)| a).collect()
}

/// Reads a schedule out of a solver assignment.
pub fn extract_schedule(
    instance: &Instance,
    vars: &ModelVars,
    asg: &Assignment,
) -> Result<Schedule, FormulationError> {
    let mut op_assign = Vec::new();
    let mut transfer_assign = Vec::new();
    let (catalog, deadhead) = match vars {
        ModelVars::Arc(v) => (&v.catalog, v.initial_deadhead),
        ModelVars::Embedded(v) => (&v.catalog, v.initial_deadhead),
    };
    for op in instance.operations() {
        let o = op.id;
        let (machine, times, legs) = match vars {
            ModelVars::Arc(v) => {
                let found = v.ym[o.0].iter().find_map(|&(m, id)| asg.get(id).map(|t| (m, t)));
                let (m, t) = found.ok_or(FormulationError::NoMachine(o))?;
                (m, t, legs_from(&v.xolv[o.0], catalog, asg))
            }
            ModelVars::Embedded(v) => {
                let found = v.ya[o.0].iter().find_map(|&(_, m, id)| asg.get(id).map(|t| (m, t)));
                let (m, t) = found.ok_or(FormulationError::NoMachine(o))?;
                (m, t, legs_from(&v.xlv[o.0], catalog, asg))
            }
        };
        op_assign.push(OpAssignment { machine, start: times.0, end: times.1 });
        transfer_assign.push(legs);
    }
    let makespan = op_assign.iter().map(|a| a.end).max().unwrap_or(0);
    Ok(Schedule {
        op_assign,
        transfer_assign,
        makespan,
        initial_deadhead: deadhead,
    })
}

/// Machine choice and start per operation from a relaxation assignment.
pub fn extract_relaxation(
    instance: &Instance,
    vars: &RelaxationVars,
    asg: &Assignment,
) -> Result<Vec<OpAssignment>, FormulationError> {
    instance
        .operations()
        .iter()
        .map(|op| {
            vars.ym[op.id.0]
                .iter()
                .find_map(|&(m, id)| asg.get(id).map(|(s, e)| OpAssignment { machine: m, start: s, end: e }))
                .ok_or(FormulationError::NoMachine(op.id))
        })
        .collect()
}

/// Builds a full schedule from relaxation machine choices: operations are
/// taken in relaxation start order, each transfer leg goes to the bot of its
/// zone that can start it first, and operations shift right as needed.
/// `None` when some leg's zone has no bot.
pub fn greedy_schedule(instance: &Instance, machines: &[OpAssignment], initial_deadhead: bool) -> Option<Schedule> {
    let catalog = LegCatalog::new(instance);
    let mut order: Vec<OperationId> = instance.operations().iter().map(|o| o.id).collect();
    order.sort_by_key(|o| (machines[o.0].start, instance.operations()[o.0].order_index, o.0));

    let n = instance.operations().len();
    let mut op_assign: Vec<Option<OpAssignment>> = vec![None; n];
    let mut transfer_assign = vec![Vec::new(); n];
    let mut mach_free = vec![0; instance.machine_count()];
    let mut bot_legs: Vec<Vec<(StationId, Time)>> = vec![Vec::new(); instance.transbots().len()];
    for o in order {
        let m = machines[o.0].machine;
        let pred = instance.predecessor(o).ok()?;
        let (pickup, mut ready) = match pred {
            None => (instance.stocker(), 0),
            Some(p) => {
                let a = op_assign[p.0]?;
                (instance.machine_station(a.machine), a.end)
            }
        };
        let arc = catalog.arc(pickup, instance.machine_station(m))?;
        for leg in &arc.legs {
            let mut best: Option<(Time, TransbotId)> = None;
            for &v in instance.zone_transbots(leg.zone) {
                let mut start = ready;
                if initial_deadhead {
                    start = start.max(instance.travel(instance.transbots()[v.0].initial_station, leg.pickup));
                }
                for &(drop, end) in &bot_legs[v.0] {
                    start = start.max(end + instance.travel(drop, leg.pickup));
                }
                if best.is_none_or(|(b, _)| start < b) {
                    best = Some((start, v));
                }
            }
            let (start, v) = best?;
            let end = start + leg.travel;
            bot_legs[v.0].push((leg.dropoff, end));
            transfer_assign[o.0].push(LegAssignment { leg: leg.id, transbot: v, start, end });
            ready = end;
        }
        let p = instance.operations()[o.0].processing_time(m)?;
        let start = ready.max(mach_free[m.0]);
        mach_free[m.0] = start + p;
        op_assign[o.0] = Some(OpAssignment { machine: m, start, end: start + p });
    }
    let op_assign: Vec<OpAssignment> = op_assign.into_iter().collect::<Option<_>>()?;
    let makespan = op_assign.iter().map(|a| a.end).max().unwrap_or(0);
    Some(Schedule { op_assign, transfer_assign, makespan, initial_deadhead })
}

/// Presences and start times that reproduce `schedule` in the given model.
pub fn warm_start_from_schedule(instance: &Instance, vars: &ModelVars, schedule: &Schedule) -> WarmStart {
    let mut ws = WarmStart::default();
    let legs_to = |entries: &[XolvEntry], legs: &[LegAssignment], ws: &mut WarmStart| {
        for e in entries {
            match legs.iter().find(|a| a.leg == e.leg && a.transbot == e.bot) {
                Some(a) => {
                    ws.presence.push((e.id, true));
                    ws.starts.push((e.id, a.start));
                }
                None => ws.presence.push((e.id, false)),
            }
        }
    };
    for (o, a) in schedule.op_assign.iter().enumerate() {
        let pickup = match instance.predecessor(OperationId(o)).ok().flatten() {
            None => instance.stocker(),
            Some(p) => instance.machine_station(schedule.op_assign[p.0].machine),
        };
        let chosen: ArcKey = (pickup, instance.machine_station(a.machine));
        match vars {
            ModelVars::Arc(v) => {
                for &(m, id) in &v.ym[o] {
                    ws.presence.push((id, m == a.machine));
                    if m == a.machine {
                        ws.starts.push((id, a.start));
                    }
                }
                for &(key, id) in &v.xoa[o] {
                    ws.presence.push((id, key == chosen));
                }
                legs_to(&v.xolv[o], &schedule.transfer_assign[o], &mut ws);
            }
            ModelVars::Embedded(v) => {
                for &(key, _, id) in &v.ya[o] {
                    ws.presence.push((id, key == chosen));
                    if key == chosen {
                        ws.starts.push((id, a.start));
                    }
                }
                legs_to(&v.xlv[o], &schedule.transfer_assign[o], &mut ws);
            }
        }
    }
    ws
}

pub fn build_model(
    instance: &Instance,
    formulation: Formulation,
    opts: &BuildOptions,
) -> Result<(Model, ModelVars), FormulationError> {
    Ok(match formulation {
        Formulation::Arc => {
            let (m, v) = build_arc_model(instance, opts)?;
            (m, ModelVars::Arc(v))
        }
        Formulation::Embedded => {
            let (m, v) = build_embedded_model(instance, opts)?;
            (m, ModelVars::Embedded(v))
        }
    })
}

#[derive(Clone, Debug)]
pub struct AccelConfig {
    pub solver: SolverConfig,
    pub build: BuildOptions,
    /// Solve the relaxation first and use it for a bound and a warm start.
    pub use_relaxation: bool,
    /// Share of the time limit given to the relaxation.
    pub relaxation_share: f64,
}

impl Default for AccelConfig {
    fn default() -> Self {
        AccelConfig {
            solver: SolverConfig::default(),
            build: BuildOptions::default(),
            use_relaxation: true,
            relaxation_share: 0.1,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct AccelInfo {
    /// Best relaxation objective and whether it was proven optimal.
    pub relaxation: Option<(Time, bool)>,
    /// Lower bound handed to the main solve.
    pub lower_bound: Option<Time>,
    pub warm_start_built: bool,
}

#[derive(Clone, Debug)]
pub struct AccelOutcome {
    pub schedule: Option<Schedule>,
    pub report: SolveReport,
    pub info: AccelInfo,
}

/// Relaxation first (bound and warm start), then the chosen model.
/// Extracted schedules are validated before they are returned.
pub fn solve_with_acceleration(
    instance: &Instance,
    formulation: Formulation,
    cfg: &AccelConfig,
) -> Result<AccelOutcome, FormulationError> {
    let (model, vars) = build_model(instance, formulation, &cfg.build)?;
    let mut solver = cfg.solver.clone();
    let mut info = AccelInfo::default();

    if cfg.use_relaxation {
        let share = cfg.relaxation_share.clamp(0.0, 1.0);
        let slice = cfg.solver.time_limit.mul_f64(share);
        let (rmodel, rvars) = build_fjsp_relaxation(instance)?;
        let rreport = engine::solve(&rmodel, &SolverConfig { time_limit: slice, warm_start: None, lower_bound: None, ..cfg.solver.clone() })?;
        let optimal = rreport.status == SolveStatus::Optimal;
        if let Some(obj) = rreport.objective {
            info.relaxation = Some((obj, optimal));
        }
        // only a proven bound is safe to install
        let lb = rreport.bound;
        if lb > 0 && rreport.status != SolveStatus::Infeasible {
            info.lower_bound = Some(lb);
            solver.lower_bound = Some(solver.lower_bound.unwrap_or(0).max(lb));
        }
        if let Some(asg) = &rreport.assignment {
            let machines = extract_relaxation(instance, &rvars, asg)?;
            if let Some(s) = greedy_schedule(instance, &machines, cfg.build.initial_deadhead) {
                if validate_schedule(instance, &s).is_empty() {
                    solver.warm_start = Some(warm_start_from_schedule(instance, &vars, &s));
                    info.warm_start_built = true;
                }
            }
        }
        solver.time_limit = cfg.solver.time_limit.saturating_sub(rreport.runtime).max(Duration::from_millis(1));
    }

    let report = engine::solve(&model, &solver)?;
    let schedule = match &report.assignment {
        Some(asg) => {
            let s = extract_schedule(instance, &vars, asg)?;
            let violations = validate_schedule(instance, &s);
            if let Some(v) = violations.first() {
                return Err(FormulationError::InvalidSchedule(v.to_string()));
            }
            Some(s)
        }
        None => None,
    };
    Ok(AccelOutcome { schedule, report, info })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{brute_force_optimal, fixture_tiny1, random_tiny_instance, OracleLimits};

    fn cfg() -> SolverConfig {
        SolverConfig { time_limit: Duration::from_secs(20), ..SolverConfig::default() }
    }

    fn solve_model(inst: &Instance, f: Formulation) -> (SolveReport, Option<Schedule>) {
        let (model, vars) = build_model(inst, f, &BuildOptions::default()).unwrap();
        let r = engine::solve(&model, &cfg()).unwrap();
        let s = r.assignment.as_ref().map(|a| extract_schedule(inst, &vars, a).unwrap());
        (r, s)
    }

    #[test]
    fn tiny1_both_models_reach_20() {
        let inst = fixture_tiny1();
        for f in [Formulation::Arc, Formulation::Embedded] {
            let (r, s) = solve_model(&inst, f);
            assert_eq!((r.status, r.objective), (SolveStatus::Optimal, Some(20)), "{f}");
            let s = s.unwrap();
            assert_eq!(validate_schedule(&inst, &s), vec![]);
            assert_eq!(s.leg_count(), 3);
        }
    }

    #[test]
    fn tiny1_relaxation_is_11() {
        let (m, _) = build_fjsp_relaxation(&fixture_tiny1()).unwrap();
        let r = engine::solve(&m, &cfg()).unwrap();
        assert_eq!((r.status, r.objective), (SolveStatus::Optimal, Some(11)));
    }

    #[test]
    fn acceleration_installs_bound_and_keeps_optimum() {
        let inst = fixture_tiny1();
        for f in [Formulation::Arc, Formulation::Embedded] {
            let out = solve_with_acceleration(&inst, f, &AccelConfig { solver: cfg(), ..AccelConfig::default() }).unwrap();
            assert_eq!(out.info.lower_bound, Some(11));
            assert!(out.info.warm_start_built);
            assert_eq!(out.report.objective, Some(20));
            assert_eq!(out.report.status, SolveStatus::Optimal);
        }
    }

    #[test]
    fn models_match_oracle_on_a_few_random_instances() {
        for seed in 0..8 {
            let inst = random_tiny_instance(seed, 3);
            let (_, best) = brute_force_optimal(&inst, &OracleLimits::default()).unwrap();
            for f in [Formulation::Arc, Formulation::Embedded] {
                let (r, s) = solve_model(&inst, f);
                assert_eq!(r.status, SolveStatus::Optimal, "seed {seed} {f}");
                assert_eq!(r.objective, Some(best), "seed {seed} {f}");
                assert_eq!(validate_schedule(&inst, &s.unwrap()), vec![]);
            }
        }
    }
}
