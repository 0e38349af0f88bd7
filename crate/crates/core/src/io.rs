//! Benchmark parsing, instance generation, and the canonical text formats.
//!
//! Canonical instance text is line oriented, integer only, with `#`
//! comments. Numbers that name stations and operations are zero-based;
//! machines, zones, transbots and jobs are one-based, as they are displayed.
//!
//! ```text
//! NAME tiny1
//! STATIONS 4
//! 0 stocker
//! 1 machine 1          # station 1 is the next machine, in zone 1
//! 2 machine 2
//! 3 handoff
//! ZONES 2
//! 1 machines 1 transbots 1
//! 2 machines 2 transbots 2
//! TRANSBOTS 2
//! 1 zone 1 at 0
//! 2 zone 2 at 0
//! JOBS 2
//! 0 job 1 order 1 alts 1 5    # operation 0: machine 1 for 5
//! 1 job 1 order 2 alts 2 6
//! TRAVEL 4
//! 0 2 5 1
//! ...
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{
    Instance, JobId, LegAssignment, MachineId, OpAssignment, Operation, OperationId, Schedule, Station, StationId,
    StationKind, Time, Transbot, TransbotId, Zone, ZoneId,
};
use crate::routing::LegId;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: '{token}' is not an integer")]
    NonInteger { line: usize, token: String },
    #[error("line {line}: truncated, expected {expected}")]
    Truncated { line: usize, expected: String },
    #[error("line {line}: machine {machine} out of range 1..={machines}")]
    MachineOutOfRange { line: usize, machine: i64, machines: usize },
    #[error("line {line}: operation has zero alternatives")]
    ZeroAlternatives { line: usize },
    #[error("missing section {0}")]
    MissingSection(&'static str),
    #[error("{0}")]
    Inconsistent(String),
}

/// Jobs of a flexible job shop: per job, per operation, the eligible
/// machines with processing times.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FjspData {
    pub machines: usize,
    pub jobs: Vec<Vec<BTreeMap<MachineId, Time>>>,
}

impl FjspData {
    pub fn operation_count(&self) -> usize {
        self.jobs.iter().map(Vec::len).sum()
    }
}

/// Meaningful lines with their 1-based numbers, comments stripped.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn int(line: usize, tok: &str) -> Result<i64, ParseError> {
    tok.parse().map_err(|_| ParseError::NonInteger { line, token: tok.to_string() })
}

struct Tokens<'a> {
    line: usize,
    it: std::str::SplitWhitespace<'a>,
}

impl<'a> Tokens<'a> {
    fn new(line: usize, s: &'a str) -> Self {
        Tokens { line, it: s.split_whitespace() }
    }

    fn int(&mut self, expected: &str) -> Result<i64, ParseError> {
        let tok = self.it.next().ok_or_else(|| ParseError::Truncated { line: self.line, expected: expected.into() })?;
        int(self.line, tok)
    }

    fn word(&mut self, expected: &str) -> Result<&'a str, ParseError> {
        self.it.next().ok_or_else(|| ParseError::Truncated { line: self.line, expected: expected.into() })
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        let w = self.word(kw)?;
        if w == kw {
            Ok(())
        } else {
            Err(ParseError::Syntax { line: self.line, msg: format!("expected '{kw}', found '{w}'") })
        }
    }

    fn count(&mut self, expected: &str) -> Result<usize, ParseError> {
        let v = self.int(expected)?;
        usize::try_from(v).map_err(|_| ParseError::Syntax { line: self.line, msg: format!("{expected} must be non-negative") })
    }

    fn end(&mut self) -> Result<(), ParseError> {
        match self.it.next() {
            None => Ok(()),
            Some(t) => Err(ParseError::Syntax { line: self.line, msg: format!("unexpected trailing token '{t}'") }),
        }
    }
}

/// Reads the usual flexible job shop layout: a "jobs machines" header (extra
/// header numbers are ignored), then one line per job.
pub fn parse_flexible_jobshop(text: &str) -> Result<FjspData, ParseError> {
    let mut it = lines(text);
    let (hl, header) = it.next().ok_or(ParseError::Truncated { line: 1, expected: "header".into() })?;
    let mut h = Tokens::new(hl, header);
    let n_jobs = h.count("job count")?;
    let machines = h.count("machine count")?;
    let mut jobs = Vec::with_capacity(n_jobs);
    for j in 0..n_jobs {
        let (ln, l) = it.next().ok_or(ParseError::Truncated { line: hl + j + 1, expected: format!("job {}", j + 1) })?;
        let mut t = Tokens::new(ln, l);
        let n_ops = t.count("operation count")?;
        let mut ops = Vec::with_capacity(n_ops);
        for _ in 0..n_ops {
            let k = t.count("alternative count")?;
            if k == 0 {
                return Err(ParseError::ZeroAlternatives { line: ln });
            }
            let mut elig = BTreeMap::new();
            for _ in 0..k {
                let m = t.int("machine")?;
                let p = t.int("processing time")?;
                if m < 1 || m as usize > machines {
                    return Err(ParseError::MachineOutOfRange { line: ln, machine: m, machines });
                }
                elig.insert(MachineId(m as usize - 1), p);
            }
            ops.push(elig);
        }
        t.end()?;
        jobs.push(ops);
    }
    if let Some((ln, _)) = it.next() {
        return Err(ParseError::Syntax { line: ln, msg: format!("data after the {n_jobs} declared jobs") });
    }
    Ok(FjspData { machines, jobs })
}

/// A square travel matrix, one row per line: the stocker first, then the
/// machines in index order.
pub fn parse_layout(text: &str) -> Result<Vec<Vec<Time>>, ParseError> {
    let mut rows = Vec::new();
    for (ln, l) in lines(text) {
        rows.push(l.split_whitespace().map(|t| int(ln, t)).collect::<Result<Vec<_>, _>>()?);
    }
    let n = rows.len();
    if let Some(r) = rows.iter().find(|r| r.len() != n) {
        return Err(ParseError::Inconsistent(format!("layout has {n} rows but a row of length {}", r.len())));
    }
    Ok(rows)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Small,
    Medium,
}

impl std::str::FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "small" => Ok(Scale::Small),
            "medium" => Ok(Scale::Medium),
            other => Err(format!("unknown scale '{other}' (expected small or medium)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub name: String,
    pub base: FjspData,
    /// Stocker plus machines; required at small scale.
    pub layout: Option<Vec<Vec<Time>>>,
    pub zones: usize,
    pub transbots: usize,
    pub handoff_range: (Time, Time),
    pub layout_range: (Time, Time),
    pub seed: u64,
    pub scale: Scale,
}

impl GenConfig {
    pub fn new(name: impl Into<String>, base: FjspData, scale: Scale) -> Self {
        GenConfig {
            name: name.into(),
            base,
            layout: None,
            zones: 2,
            transbots: 2,
            handoff_range: (2, 8),
            layout_range: (20, 40),
            seed: 0,
            scale,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("{transbots} transbots cannot cover {zones} zones")]
    TooFewTransbots { zones: usize, transbots: usize },
    #[error("zone count must be positive")]
    NoZones,
    #[error("range [{0}, {1}] is empty or negative")]
    BadRange(Time, Time),
    #[error("small-scale generation needs a base layout")]
    MissingLayout,
    #[error("layout is {got}x{got} but the base instance needs {want}x{want} (stocker + machines)")]
    LayoutSize { got: usize, want: usize },
}

/// Zoned instance from a flexible job shop. Stations are the stocker,
/// the machines in index order, then the handoff point. Machine i and
/// transbot i go to zone (i mod zones). Random draws come from ChaCha8
/// seeded with `seed`, in a fixed order, so output is platform independent.
pub fn generate_instance(cfg: &GenConfig) -> Result<Instance, GenError> {
    if cfg.zones == 0 {
        return Err(GenError::NoZones);
    }
    if cfg.transbots < cfg.zones {
        return Err(GenError::TooFewTransbots { zones: cfg.zones, transbots: cfg.transbots });
    }
    for &(lo, hi) in [&cfg.handoff_range, &cfg.layout_range] {
        if lo < 0 || lo > hi {
            return Err(GenError::BadRange(lo, hi));
        }
    }
    let n_m = cfg.base.machines;
    let n_st = n_m + 2;
    let h = n_m + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut travel = vec![vec![0; n_st]; n_st];
    match cfg.scale {
        Scale::Small => {
            let layout = cfg.layout.as_ref().ok_or(GenError::MissingLayout)?;
            if layout.len() != n_m + 1 {
                return Err(GenError::LayoutSize { got: layout.len(), want: n_m + 1 });
            }
            for i in 0..=n_m {
                for j in (i + 1)..=n_m {
                    travel[i][j] = layout[i][j];
                    travel[j][i] = layout[i][j];
                }
            }
            for i in 0..=n_m {
                let t = rng.gen_range(cfg.handoff_range.0..=cfg.handoff_range.1);
                travel[i][h] = t;
                travel[h][i] = t;
            }
        }
        Scale::Medium => {
            for i in 0..n_st {
                for j in (i + 1)..n_st {
                    let t = rng.gen_range(cfg.layout_range.0..=cfg.layout_range.1);
                    travel[i][j] = t;
                    travel[j][i] = t;
                }
            }
        }
    }

    let mut stations = vec![Station { id: StationId(0), kind: StationKind::Stocker, zone: None }];
    let mut zones: Vec<Zone> = (0..cfg.zones)
        .map(|z| Zone { id: ZoneId(z), machines: Vec::new(), transbots: Vec::new() })
        .collect();
    for m in 0..n_m {
        let z = ZoneId(m % cfg.zones);
        stations.push(Station { id: StationId(m + 1), kind: StationKind::Machine, zone: Some(z) });
        zones[z.0].machines.push(MachineId(m));
    }
    stations.push(Station { id: StationId(h), kind: StationKind::Handoff, zone: None });
    let bots: Vec<Transbot> = (0..cfg.transbots)
        .map(|v| Transbot { id: TransbotId(v), zone: ZoneId(v % cfg.zones), initial_station: StationId(0) })
        .collect();
    for b in &bots {
        zones[b.zone.0].transbots.push(b.id);
    }
    let mut ops = Vec::new();
    for (j, job) in cfg.base.jobs.iter().enumerate() {
        for (k, elig) in job.iter().enumerate() {
            ops.push(Operation { id: OperationId(ops.len()), job: JobId(j), order_index: k as u32 + 1, eligibility: elig.clone() });
        }
    }
    Ok(Instance::new(cfg.name.clone(), stations, zones, bots, ops, travel))
}

pub fn serialize_instance(inst: &Instance) -> String {
    let mut s = String::new();
    s.push_str("# fjspth instance v1\n# generated instances draw from ChaCha8 (rand_chacha 0.3) seeded with the u64 seed\n");
    let _ = writeln!(s, "NAME {}", inst.name());
    let _ = writeln!(s, "STATIONS {}", inst.stations().len());
    for st in inst.stations() {
        let _ = match (st.kind, st.zone) {
            (StationKind::Stocker, _) => writeln!(s, "{} stocker", st.id.0),
            (StationKind::Handoff, _) => writeln!(s, "{} handoff", st.id.0),
            (StationKind::Machine, z) => writeln!(s, "{} machine {}", st.id.0, z.map_or(0, |z| z.0 + 1)),
        };
    }
    let _ = writeln!(s, "ZONES {}", inst.zones().len());
    for z in inst.zones() {
        let ms: Vec<String> = z.machines.iter().map(|m| (m.0 + 1).to_string()).collect();
        let vs: Vec<String> = z.transbots.iter().map(|v| (v.0 + 1).to_string()).collect();
        let _ = writeln!(s, "{} machines {} transbots {}", z.id.0 + 1, ms.join(" "), vs.join(" ")).map(|_| ());
    }
    let _ = writeln!(s, "TRANSBOTS {}", inst.transbots().len());
    for b in inst.transbots() {
        let _ = writeln!(s, "{} zone {} at {}", b.id.0 + 1, b.zone.0 + 1, b.initial_station.0);
    }
    let _ = writeln!(s, "JOBS {}", inst.operations().len());
    for o in inst.operations() {
        let _ = write!(s, "{} job {} order {} alts", o.id.0, o.job.0 + 1, o.order_index);
        for (m, p) in &o.eligibility {
            let _ = write!(s, " {} {p}", m.0 + 1);
        }
        s.push('\n');
    }
    let _ = writeln!(s, "TRAVEL {}", inst.travel_matrix().len());
    for row in inst.travel_matrix() {
        let r: Vec<String> = row.iter().map(Time::to_string).collect();
        let _ = writeln!(s, "{}", r.join(" "));
    }
    s
}

const SECTIONS: [&str; 5] = ["STATIONS", "ZONES", "TRANSBOTS", "JOBS", "TRAVEL"];

fn list_after<'a>(t: &mut Tokens<'a>, stop: Option<&str>) -> Result<Vec<i64>, ParseError> {
    let mut out = Vec::new();
    loop {
        let Some(tok) = t.it.next() else {
            return match stop {
                Some(kw) => Err(ParseError::Truncated { line: t.line, expected: format!("'{kw}'") }),
                None => Ok(out),
            };
        };
        if Some(tok) == stop {
            return Ok(out);
        }
        out.push(int(t.line, tok)?);
    }
}

fn one_based(line: usize, v: i64, what: &str) -> Result<usize, ParseError> {
    if v < 1 {
        return Err(ParseError::Syntax { line, msg: format!("{what} numbers start at 1, found {v}") });
    }
    Ok(v as usize - 1)
}

pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let all: Vec<(usize, &str)> = lines(text).collect();
    let mut name = String::new();
    let mut sections: BTreeMap<&str, (usize, usize, Vec<(usize, &str)>)> = BTreeMap::new();
    let mut i = 0;
    while i < all.len() {
        let (ln, l) = all[i];
        let mut t = Tokens::new(ln, l);
        let head = t.word("section")?;
        if head == "NAME" {
            name = l["NAME".len()..].trim().to_string();
            i += 1;
            continue;
        }
        let Some(&sec) = SECTIONS.iter().find(|&&s| s == head) else {
            return Err(ParseError::Syntax { line: ln, msg: format!("unknown section header '{head}'") });
        };
        let n = t.count("record count")?;
        t.end()?;
        if sections.contains_key(sec) {
            return Err(ParseError::Syntax { line: ln, msg: format!("section {sec} repeated") });
        }
        let body: Vec<(usize, &str)> = all[i + 1..].iter().take(n).copied().collect();
        if body.len() < n {
            return Err(ParseError::Truncated { line: ln, expected: format!("{n} records in {sec}") });
        }
        sections.insert(sec, (ln, n, body));
        i += 1 + n;
    }
    let get = |s: &'static str| sections.get(s).ok_or(ParseError::MissingSection(s));

    let mut stations = Vec::new();
    for &(ln, l) in &get("STATIONS")?.2 {
        let mut t = Tokens::new(ln, l);
        let id = t.count("station id")?;
        if id != stations.len() {
            return Err(ParseError::Syntax { line: ln, msg: format!("station {id} out of order") });
        }
        let st = match t.word("station kind")? {
            "stocker" => Station { id: StationId(id), kind: StationKind::Stocker, zone: None },
            "handoff" => Station { id: StationId(id), kind: StationKind::Handoff, zone: None },
            "machine" => {
                let z = t.int("zone")?;
                Station { id: StationId(id), kind: StationKind::Machine, zone: Some(ZoneId(one_based(ln, z, "zone")?)) }
            }
            k => return Err(ParseError::Syntax { line: ln, msg: format!("unknown station kind '{k}'") }),
        };
        t.end()?;
        stations.push(st);
    }

    let mut zones = Vec::new();
    for &(ln, l) in &get("ZONES")?.2 {
        let mut t = Tokens::new(ln, l);
        let z = one_based(ln, t.int("zone")?, "zone")?;
        t.keyword("machines")?;
        let ms = list_after(&mut t, Some("transbots"))?;
        let vs = list_after(&mut t, None)?;
        zones.push(Zone {
            id: ZoneId(z),
            machines: ms.into_iter().map(|m| one_based(ln, m, "machine").map(MachineId)).collect::<Result<_, _>>()?,
            transbots: vs.into_iter().map(|v| one_based(ln, v, "transbot").map(TransbotId)).collect::<Result<_, _>>()?,
        });
    }

    let mut bots = Vec::new();
    for &(ln, l) in &get("TRANSBOTS")?.2 {
        let mut t = Tokens::new(ln, l);
        let v = one_based(ln, t.int("transbot")?, "transbot")?;
        t.keyword("zone")?;
        let z = one_based(ln, t.int("zone")?, "zone")?;
        t.keyword("at")?;
        let at = t.count("initial station")?;
        t.end()?;
        bots.push(Transbot { id: TransbotId(v), zone: ZoneId(z), initial_station: StationId(at) });
    }

    let n_machines = stations.iter().filter(|s| s.kind == StationKind::Machine).count();
    let mut ops = Vec::new();
    for &(ln, l) in &get("JOBS")?.2 {
        let mut t = Tokens::new(ln, l);
        let id = t.count("operation id")?;
        t.keyword("job")?;
        let job = one_based(ln, t.int("job")?, "job")?;
        t.keyword("order")?;
        let order = t.count("order index")? as u32;
        t.keyword("alts")?;
        let rest = list_after(&mut t, None)?;
        if rest.is_empty() {
            return Err(ParseError::ZeroAlternatives { line: ln });
        }
        if rest.len() % 2 != 0 {
            return Err(ParseError::Truncated { line: ln, expected: "machine/time pairs".into() });
        }
        let mut elig = BTreeMap::new();
        for pair in rest.chunks(2) {
            if pair[0] < 1 || pair[0] as usize > n_machines {
                return Err(ParseError::MachineOutOfRange { line: ln, machine: pair[0], machines: n_machines });
            }
            elig.insert(MachineId(pair[0] as usize - 1), pair[1]);
        }
        ops.push(Operation { id: OperationId(id), job: JobId(job), order_index: order, eligibility: elig });
    }

    let mut travel = Vec::new();
    let (tl, n, body) = get("TRAVEL")?;
    for &(ln, l) in body {
        travel.push(l.split_whitespace().map(|t| int(ln, t)).collect::<Result<Vec<_>, _>>()?);
    }
    if *n != stations.len() || travel.iter().any(|r| r.len() != stations.len()) {
        return Err(ParseError::Inconsistent(format!(
            "line {tl}: TRAVEL must be {0}x{0} for {0} stations",
            stations.len()
        )));
    }
    Ok(Instance::new(name, stations, zones, bots, ops, travel))
}

pub fn serialize_schedule(inst: &Instance, s: &Schedule) -> String {
    let mut out = String::new();
    out.push_str("# fjspth schedule v1\n");
    let _ = writeln!(out, "MAKESPAN {}", s.makespan);
    let _ = writeln!(out, "INITIAL_DEADHEAD {}", u8::from(s.initial_deadhead));
    let mut ops: Vec<(usize, &OpAssignment)> = s.op_assign.iter().enumerate().collect();
    ops.sort_by_key(|&(o, a)| (a.start, o));
    for (o, a) in ops {
        let job = inst.operations().get(o).map_or(0, |op| op.job.0 + 1);
        let _ = writeln!(out, "OP {job} {o} {} {} {}", a.machine.0 + 1, a.start, a.end);
    }
    let mut legs: Vec<(usize, &LegAssignment)> =
        s.transfer_assign.iter().enumerate().flat_map(|(o, ls)| ls.iter().map(move |a| (o, a))).collect();
    legs.sort_by_key(|&(o, a)| (a.start, a.leg, o));
    for (o, a) in legs {
        let _ = writeln!(out, "LEG {o} {} {} {} {}", a.leg.0, a.transbot.0 + 1, a.start, a.end);
    }
    out
}

/// Reads a schedule for `inst`. Every operation must appear exactly once.
pub fn parse_schedule(inst: &Instance, text: &str) -> Result<Schedule, ParseError> {
    let n = inst.operations().len();
    let mut makespan = None;
    let mut deadhead = true;
    let mut ops: Vec<Option<OpAssignment>> = vec![None; n];
    let mut legs = vec![Vec::new(); n];
    let op_index = |ln: usize, v: i64| -> Result<usize, ParseError> {
        if v < 0 || v as usize >= n {
            return Err(ParseError::Syntax { line: ln, msg: format!("unknown operation {v}") });
        }
        Ok(v as usize)
    };
    for (ln, l) in lines(text) {
        let mut t = Tokens::new(ln, l);
        match t.word("record")? {
            "MAKESPAN" => makespan = Some(t.int("makespan")?),
            "INITIAL_DEADHEAD" => deadhead = t.int("flag")? != 0,
            "OP" => {
                let _job = t.int("job")?;
                let o = op_index(ln, t.int("operation")?)?;
                let m = one_based(ln, t.int("machine")?, "machine")?;
                let (start, end) = (t.int("start")?, t.int("end")?);
                if ops[o].replace(OpAssignment { machine: MachineId(m), start, end }).is_some() {
                    return Err(ParseError::Syntax { line: ln, msg: format!("operation {o} listed twice") });
                }
            }
            "LEG" => {
                let o = op_index(ln, t.int("operation")?)?;
                let leg = t.count("leg")?;
                let v = one_based(ln, t.int("transbot")?, "transbot")?;
                let (start, end) = (t.int("start")?, t.int("end")?);
                legs[o].push(LegAssignment { leg: LegId(leg), transbot: TransbotId(v), start, end });
            }
            w => return Err(ParseError::Syntax { line: ln, msg: format!("unknown record '{w}'") }),
        }
        t.end()?;
    }
    let op_assign = ops
        .into_iter()
        .enumerate()
        .map(|(o, a)| a.ok_or_else(|| ParseError::Inconsistent(format!("operation {o} is not scheduled"))))
        .collect::<Result<Vec<_>, _>>()?;
    for l in &mut legs {
        l.sort_by_key(|a| (a.start, a.leg));
    }
    let computed = op_assign.iter().map(|a| a.end).max().unwrap_or(0);
    Ok(Schedule {
        op_assign,
        transfer_assign: legs,
        makespan: makespan.unwrap_or(computed),
        initial_deadhead: deadhead,
    })
}
