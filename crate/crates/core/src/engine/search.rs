use std::sync::atomic::{AtomicBool, AtomicI64, AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{Assignment, EngineError, IntervalId, Model};
use super::propagators::{Propagators, Queue};
use super::store::{Dom, Presence, Store};
use crate::model::Time;

/// Partial solution used to seed the search: presences and start times.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WarmStart {
    pub presence: Vec<(IntervalId, bool)>,
    pub starts: Vec<(IntervalId, Time)>,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub time_limit: Duration,
    pub workers: usize,
    pub seed: u64,
    pub warm_start: Option<WarmStart>,
    /// Known lower bound on the objective; reaching it proves optimality.
    pub lower_bound: Option<Time>,
    /// Failures allowed before the first restart; grows by 1.5 per restart.
    pub initial_fail_limit: u64,
    /// Failure budget for completing the warm start.
    pub warm_start_fail_limit: u64,
    /// Per-worker node budget. With one worker and no time pressure the
    /// run is fully deterministic for a given seed.
    pub node_limit: Option<u64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            time_limit: Duration::from_secs(60),
            workers: 1,
            seed: 0,
            warm_start: None,
            lower_bound: None,
            initial_fail_limit: 200,
            warm_start_fail_limit: 10_000,
            node_limit: None,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    TimeoutNoSolution,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub assignment: Option<Assignment>,
    pub objective: Option<Time>,
    pub bound: Time,
    pub runtime: Duration,
    pub nodes: u64,
    /// Incumbent improvements as (elapsed, objective).
    pub trace: Vec<(Duration, Time)>,
    /// Whether the warm start was completed into a solution.
    pub warm_start_used: bool,
}

struct Shared {
    ub: AtomicI64,
    best: Mutex<Option<(Time, Assignment)>>,
    trace: Mutex<Vec<(Duration, Time)>>,
    done: AtomicBool,
    proven: AtomicBool,
    nodes: AtomicU64,
    bound: Time,
    start: Instant,
    deadline: Instant,
}

impl Shared {
    fn ub(&self) -> Option<Time> {
        match self.ub.load(Ordering::Acquire) {
            Time::MAX => None,
            v => Some(v),
        }
    }

    fn offer(&self, obj: Time, asg: Assignment) -> bool {
        let mut best = self.best.lock().expect("incumbent lock poisoned");
        if best.as_ref().is_some_and(|(b, _)| *b <= obj) {
            return false;
        }
        *best = Some((obj, asg));
        self.ub.store(obj, Ordering::Release);
        self.trace
            .lock()
            .expect("trace lock poisoned")
            .push((self.start.elapsed(), obj));
        if obj <= self.bound {
            self.proven.store(true, Ordering::Release);
            self.done.store(true, Ordering::Release);
        }
        true
    }

    fn stopped(&self) -> bool {
        self.done.load(Ordering::Acquire) || Instant::now() >= self.deadline
    }
}

#[derive(Copy, Clone, Debug)]
enum Decision {
    Present(usize),
    Absent(usize),
    Start(usize, Time),
    Postpone(usize, Time),
}

struct Frame {
    mark: usize,
    right: Option<Decision>,
}

enum Select {
    Branch(usize),
    Solution,
    Dead,
}

#[derive(Debug, PartialEq, Eq)]
enum RunEnd {
    Complete,
    Limit,
    Stopped,
}

struct Worker<'a> {
    props: &'a Propagators,
    shared: &'a Shared,
    store: Store,
    queue: Queue,
    tiebreak: Vec<u64>,
    nodes: u64,
    fails: u64,
    applied_ub: Option<Time>,
    tick: u32,
    node_limit: Option<u64>,
}

impl<'a> Worker<'a> {
    fn new(props: &'a Propagators, shared: &'a Shared, store: Store) -> Self {
        let n = store.len();
        Worker {
            props,
            shared,
            store,
            queue: Queue::new(props.len()),
            tiebreak: (0..n as u64).collect(),
            nodes: 0,
            fails: 0,
            applied_ub: None,
            tick: 0,
            node_limit: None,
        }
    }

    fn apply(&mut self, d: Decision) -> bool {
        self.nodes += 1;
        let ok = match d {
            Decision::Present(i) => self.store.set_present(i).is_ok(),
            Decision::Absent(i) => self.store.set_absent(i).is_ok(),
            Decision::Start(i, t) => {
                let emin = self.store.get(i).emin.max(t + self.store.get(i).lmin);
                self.store.set_smax(i, t).is_ok() && self.store.set_emax(i, emin).is_ok()
            }
            Decision::Postpone(i, t) => {
                self.store.set_postponed(i, Some(t));
                true
            }
        };
        ok && self.propagate()
    }

    fn propagate(&mut self) -> bool {
        let ub = self.shared.ub();
        self.applied_ub = ub;
        self.props.propagate(&mut self.store, &mut self.queue, ub).is_ok()
    }

    fn select(&self) -> Select {
        let mut any_postponed = false;
        for masters in [false, true] {
            let mut best: Option<(Time, u64, usize)> = None;
            for (i, d) in self.store.doms().iter().enumerate() {
                if self.props.is_master[i] != masters || d.pres == Presence::Absent {
                    continue;
                }
                if d.pres == Presence::Present && d.is_fixed() {
                    continue;
                }
                if d.pres == Presence::Present {
                    if let Some(p) = d.postponed {
                        if d.smin <= p {
                            any_postponed = true;
                            continue;
                        }
                    }
                }
                let key = (d.smin, self.tiebreak[i], i);
                if best.is_none_or(|b| key < b) {
                    best = Some(key);
                }
            }
            if let Some((_, _, i)) = best {
                return Select::Branch(i);
            }
            if any_postponed {
                return Select::Dead;
            }
        }
        Select::Solution
    }

    fn record_solution(&self) {
        let doms = self.store.doms();
        let obj = self
            .props
            .objective()
            .iter()
            .map(|&i| &doms[i])
            .filter(|d| d.pres == Presence::Present)
            .map(|d| d.emin)
            .max()
            .unwrap_or(0);
        let asg = Assignment {
            intervals: doms
                .iter()
                .map(|d| (d.pres == Presence::Present).then_some((d.smin, d.emin)))
                .collect(),
        };
        self.shared.offer(obj, asg);
    }

    fn branch_for(&self, i: usize) -> (Decision, Decision) {
        let d: &Dom = self.store.get(i);
        if d.pres == Presence::Unknown {
            (Decision::Present(i), Decision::Absent(i))
        } else {
            (Decision::Start(i, d.smin), Decision::Postpone(i, d.smin))
        }
    }

    /// Depth-first search below the current state. Returns `Complete` when
    /// the subtree was exhausted.
    fn dfs(&mut self, fail_limit: Option<u64>) -> RunEnd {
        let mut stack: Vec<Frame> = Vec::new();
        let fails_at_start = self.fails;
        let mut ok = true;
        loop {
            self.tick = self.tick.wrapping_add(1);
            if self.tick.is_multiple_of(64) && self.shared.stopped() {
                return RunEnd::Stopped;
            }
            if self.node_limit.is_some_and(|l| self.nodes >= l) {
                return RunEnd::Stopped;
            }
            if ok && self.shared.ub() != self.applied_ub {
                ok = self.propagate();
            }
            if ok {
                match self.select() {
                    Select::Branch(i) => {
                        let (left, right) = self.branch_for(i);
                        let mark = self.store.save();
                        stack.push(Frame { mark, right: Some(right) });
                        ok = self.apply(left);
                        if !ok {
                            self.fails += 1;
                        }
                        continue;
                    }
                    Select::Solution => {
                        self.record_solution();
                        if self.shared.done.load(Ordering::Acquire) {
                            return RunEnd::Stopped;
                        }
                    }
                    Select::Dead => self.fails += 1,
                }
            }
            if fail_limit.is_some_and(|l| self.fails - fails_at_start > l) {
                return RunEnd::Limit;
            }
            // backtrack to the nearest pending right branch
            loop {
                let Some(frame) = stack.pop() else {
                    return RunEnd::Complete;
                };
                self.store.restore(frame.mark);
                if let Some(right) = frame.right {
                    let mark = self.store.save();
                    stack.push(Frame { mark, right: None });
                    ok = self.apply(right);
                    if ok {
                        break;
                    }
                    self.fails += 1;
                }
            }
        }
    }

    fn run(&mut self, first_limit: u64, rng: &mut ChaCha8Rng, randomize_first: bool) {
        let root = self.store.save();
        let mut limit = first_limit.max(1) as f64;
        let mut restart = 0u32;
        loop {
            if randomize_first || restart > 0 {
                self.tiebreak.shuffle(rng);
            }
            self.store.restore(root);
            self.applied_ub = None;
            match self.dfs(Some(limit as u64)) {
                RunEnd::Complete => {
                    self.shared.proven.store(true, Ordering::Release);
                    self.shared.done.store(true, Ordering::Release);
                    return;
                }
                RunEnd::Stopped => return,
                RunEnd::Limit => {
                    limit *= 1.5;
                    restart += 1;
                }
            }
        }
    }
}

fn initial_domains(model: &Model) -> Vec<Dom> {
    let h = model.horizon.max(0);
    model
        .intervals
        .iter()
        .map(|v| Dom {
            pres: if v.optional { Presence::Unknown } else { Presence::Present },
            smin: 0,
            smax: h,
            emin: 0,
            emax: h,
            lmin: v.length_min,
            lmax: v.length_max.min(h),
            postponed: None,
        })
        .collect()
}

#[cfg(test)]
pub(crate) fn initial_domains_for_tests(model: &Model) -> Vec<Dom> {
    initial_domains(model)
}

/// Root bounds after propagation, or `None` when the model is infeasible
/// at the root. Each entry is (presence, smin, smax, emin, emax) with
/// presence `None` when undecided.
pub fn root_bounds(model: &Model) -> Result<Option<Vec<(Option<bool>, Time, Time, Time, Time)>>, EngineError> {
    model.validate()?;
    let props = Propagators::compile(model);
    let mut store = Store::new(initial_domains(model));
    let mut queue = Queue::new(props.len());
    if props.propagate_all(&mut store, &mut queue, None).is_err() {
        return Ok(None);
    }
    Ok(Some(
        store
            .doms()
            .iter()
            .map(|d| {
                let p = match d.pres {
                    Presence::Unknown => None,
                    Presence::Present => Some(true),
                    Presence::Absent => Some(false),
                };
                (p, d.smin, d.smax, d.emin, d.emax)
            })
            .collect(),
    ))
}

pub fn solve(model: &Model, config: &SolverConfig) -> Result<SolveReport, EngineError> {
    model.validate()?;
    let start = Instant::now();
    let props = Propagators::compile(model);
    let mut store = Store::new(initial_domains(model));
    let mut queue = Queue::new(props.len());
    let lb_given = config.lower_bound.unwrap_or(0);

    if props.propagate_all(&mut store, &mut queue, None).is_err() {
        return Ok(SolveReport {
            status: SolveStatus::Infeasible,
            assignment: None,
            objective: None,
            bound: lb_given,
            runtime: start.elapsed(),
            nodes: 0,
            trace: Vec::new(),
            warm_start_used: false,
        });
    }
    let bound = lb_given.max(props.objective_lb(&store));
    let shared = Shared {
        ub: AtomicI64::new(Time::MAX),
        best: Mutex::new(None),
        trace: Mutex::new(Vec::new()),
        done: AtomicBool::new(false),
        proven: AtomicBool::new(false),
        nodes: AtomicU64::new(0),
        bound,
        start,
        deadline: start + config.time_limit,
    };

    let mut warm_start_used = false;
    if let Some(ws) = &config.warm_start {
        let mut w = Worker::new(&props, &shared, store.clone());
        w.node_limit = config.node_limit;
        let mut ok = true;
        for &(i, p) in &ws.presence {
            let r = if p { w.store.set_present(i.0) } else { w.store.set_absent(i.0) };
            ok &= r.is_ok();
        }
        for &(i, t) in &ws.starts {
            ok = ok && w.store.set_smin(i.0, t).is_ok() && w.store.set_smax(i.0, t).is_ok();
        }
        if ok && w.propagate() {
            w.dfs(Some(config.warm_start_fail_limit));
            warm_start_used = shared.best.lock().expect("incumbent lock poisoned").is_some();
        }
        shared.nodes.fetch_add(w.nodes, Ordering::Relaxed);
    }

    let workers = config.workers.max(1);
    if !shared.stopped() {
        std::thread::scope(|scope| {
            for k in 0..workers {
                let props = &props;
                let shared = &shared;
                let store = store.clone();
                let seed = config.seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                let first = config.initial_fail_limit;
                let node_limit = config.node_limit;
                scope.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let mut w = Worker::new(props, shared, store);
                    w.node_limit = node_limit;
                    w.run(first, &mut rng, k > 0);
                    shared.nodes.fetch_add(w.nodes, Ordering::Relaxed);
                });
            }
        });
    }

    let best = shared.best.into_inner().expect("incumbent lock poisoned");
    let proven = shared.proven.load(Ordering::Acquire);
    let (status, bound) = match (&best, proven) {
        (Some((obj, _)), true) => (SolveStatus::Optimal, *obj),
        (Some(_), false) => (SolveStatus::Feasible, bound),
        (None, true) => (SolveStatus::Infeasible, bound),
        (None, false) => (SolveStatus::TimeoutNoSolution, bound),
    };
    let (objective, assignment) = match best {
        Some((o, a)) => (Some(o), Some(a)),
        None => (None, None),
    };
    Ok(SolveReport {
        status,
        assignment,
        objective,
        bound,
        runtime: start.elapsed(),
        nodes: shared.nodes.load(Ordering::Relaxed),
        trace: shared.trace.into_inner().expect("trace lock poisoned"),
        warm_start_used,
    })
}
