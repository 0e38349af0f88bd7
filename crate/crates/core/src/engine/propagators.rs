use std::collections::VecDeque;
use std::sync::Arc;

use super::model::{Constraint, Model, TransitionMatrix};
use super::store::{Dom, Fail, PResult, Presence, Store};
use crate::model::Time;

#[derive(Debug)]
enum Prop {
    Alternative { master: usize, options: Vec<usize> },
    Span { master: usize, covered: Vec<usize> },
    EndBeforeStart { a: usize, b: usize },
    AtMostOne { members: Vec<usize> },
    Balance { lhs: Vec<usize>, rhs: Vec<usize> },
    Implies { from: usize, to: usize },
    CondPrec { guard: usize, a: usize, b: usize },
    NoOverlap { members: Vec<usize>, types: Vec<usize>, matrix: Option<Arc<TransitionMatrix>> },
    Forbidden(usize),
    FixedStart(usize, Time),
}

impl Prop {
    fn scope(&self) -> Vec<usize> {
        match self {
            Prop::Alternative { master, options } => std::iter::once(*master).chain(options.iter().copied()).collect(),
            Prop::Span { master, covered } => std::iter::once(*master).chain(covered.iter().copied()).collect(),
            Prop::EndBeforeStart { a, b } => vec![*a, *b],
            Prop::AtMostOne { members } => members.clone(),
            Prop::Balance { lhs, rhs } => lhs.iter().chain(rhs).copied().collect(),
            Prop::Implies { from, to } => vec![*from, *to],
            Prop::CondPrec { guard, a, b } => vec![*guard, *a, *b],
            Prop::NoOverlap { members, .. } => members.clone(),
            Prop::Forbidden(i) | Prop::FixedStart(i, _) => vec![*i],
        }
    }
}

/// Static propagation structure shared by all search workers.
pub(crate) struct Propagators {
    props: Vec<Prop>,
    watchers: Vec<Vec<u32>>,
    objective: Vec<usize>,
    /// Intervals that are masters of an alternative or a span.
    pub is_master: Vec<bool>,
}

pub(crate) struct Queue {
    queue: VecDeque<u32>,
    queued: Vec<bool>,
}

impl Queue {
    pub fn new(n: usize) -> Self {
        Queue { queue: VecDeque::new(), queued: vec![false; n] }
    }

    fn push(&mut self, c: u32) {
        if !self.queued[c as usize] {
            self.queued[c as usize] = true;
            self.queue.push_back(c);
        }
    }

    fn clear(&mut self) {
        for c in self.queue.drain(..) {
            self.queued[c as usize] = false;
        }
    }
}

impl Propagators {
    pub fn compile(model: &Model) -> Self {
        let n = model.intervals.len();
        let mut props = Vec::with_capacity(model.constraints.len());
        let mut is_master = vec![false; n];
        for c in &model.constraints {
            let p = match c {
                Constraint::Alternative { master, options } => {
                    is_master[master.0] = true;
                    Prop::Alternative { master: master.0, options: options.iter().map(|i| i.0).collect() }
                }
                Constraint::Span { master, covered } => {
                    is_master[master.0] = true;
                    Prop::Span { master: master.0, covered: covered.iter().map(|i| i.0).collect() }
                }
                Constraint::EndBeforeStart { before, after } => Prop::EndBeforeStart { a: before.0, b: after.0 },
                Constraint::PresenceAtMostOne { members } => {
                    Prop::AtMostOne { members: members.iter().map(|i| i.0).collect() }
                }
                Constraint::PresenceBalance { lhs, rhs } => Prop::Balance {
                    lhs: lhs.iter().map(|i| i.0).collect(),
                    rhs: rhs.iter().map(|i| i.0).collect(),
                },
                Constraint::PresenceImplies { from, to } => Prop::Implies { from: from.0, to: to.0 },
                Constraint::ConditionalPrecedence { guard, before, after } => {
                    Prop::CondPrec { guard: guard.0, a: before.0, b: after.0 }
                }
                Constraint::NoOverlap { sequence, transitions } => {
                    let seq = &model.sequences[sequence.0];
                    Prop::NoOverlap {
                        members: seq.members.iter().map(|i| i.0).collect(),
                        types: seq.types.clone().unwrap_or_else(|| vec![0; seq.members.len()]),
                        matrix: transitions.clone(),
                    }
                }
                Constraint::Forbidden(i) => Prop::Forbidden(i.0),
                Constraint::FixedStart(i, t) => Prop::FixedStart(i.0, *t),
            };
            props.push(p);
        }
        let mut watchers = vec![Vec::new(); n];
        for (ci, p) in props.iter().enumerate() {
            let mut scope = p.scope();
            scope.sort_unstable();
            scope.dedup();
            for i in scope {
                watchers[i].push(ci as u32);
            }
        }
        Propagators {
            props,
            watchers,
            objective: model.objective.iter().map(|i| i.0).collect(),
            is_master,
        }
    }

    pub fn len(&self) -> usize {
        self.props.len()
    }

    pub fn objective(&self) -> &[usize] {
        &self.objective
    }

    /// Lower bound on the objective from current domains.
    pub fn objective_lb(&self, store: &Store) -> Time {
        self.objective
            .iter()
            .map(|&i| store.get(i))
            .filter(|d| d.pres == Presence::Present)
            .map(|d| d.emin)
            .max()
            .unwrap_or(0)
    }

    /// Runs every constraint to a common fixpoint.
    pub fn propagate_all(&self, store: &mut Store, queue: &mut Queue, ub: Option<Time>) -> PResult {
        for c in 0..self.props.len() {
            queue.push(c as u32);
        }
        self.propagate(store, queue, ub)
    }

    /// Runs constraints watching changed intervals until nothing changes.
    /// `ub` is an exclusive upper bound on the objective.
    pub fn propagate(&self, store: &mut Store, queue: &mut Queue, ub: Option<Time>) -> PResult {
        let r = self.run(store, queue, ub);
        if r.is_err() {
            queue.clear();
            store.take_changed();
        }
        r
    }

    fn run(&self, store: &mut Store, queue: &mut Queue, ub: Option<Time>) -> PResult {
        if let Some(ub) = ub {
            for &i in &self.objective {
                store.set_emax(i, ub - 1)?;
            }
        }
        loop {
            for i in store.take_changed() {
                for &c in &self.watchers[i as usize] {
                    queue.push(c);
                }
            }
            let Some(c) = queue.queue.pop_front() else { break };
            queue.queued[c as usize] = false;
            self.run_one(&self.props[c as usize], store)?;
        }
        Ok(())
    }

    fn run_one(&self, p: &Prop, s: &mut Store) -> PResult {
        match p {
            Prop::Alternative { master, options } => alternative(s, *master, options),
            Prop::Span { master, covered } => span(s, *master, covered),
            Prop::EndBeforeStart { a, b } => end_before_start(s, *a, *b),
            Prop::AtMostOne { members } => at_most_one(s, members),
            Prop::Balance { lhs, rhs } => balance(s, lhs, rhs),
            Prop::Implies { from, to } => {
                if s.get(*from).pres == Presence::Present {
                    s.set_present(*to)?;
                }
                if s.get(*to).pres == Presence::Absent {
                    s.set_absent(*from)?;
                }
                Ok(())
            }
            Prop::CondPrec { guard, a, b } => cond_prec(s, *guard, *a, *b),
            Prop::NoOverlap { members, types, matrix } => no_overlap(s, members, types, matrix.as_deref()),
            Prop::Forbidden(i) => s.set_absent(*i),
            Prop::FixedStart(i, t) => {
                s.set_smin(*i, *t)?;
                s.set_smax(*i, *t)
            }
        }
    }
}

fn present(s: &Store, i: usize) -> bool {
    s.get(i).pres == Presence::Present
}

fn absent(s: &Store, i: usize) -> bool {
    s.get(i).pres == Presence::Absent
}

fn alternative(s: &mut Store, master: usize, options: &[usize]) -> PResult {
    if absent(s, master) {
        for &o in options {
            s.set_absent(o)?;
        }
        return Ok(());
    }
    let mut chosen = None;
    let mut open = 0usize;
    let mut last_open = 0usize;
    for &o in options {
        match s.get(o).pres {
            Presence::Present => {
                if chosen.is_some() {
                    return Err(Fail);
                }
                chosen = Some(o);
            }
            Presence::Unknown => {
                open += 1;
                last_open = o;
            }
            Presence::Absent => {}
        }
    }
    if let Some(c) = chosen {
        s.set_present(master)?;
        for &o in options {
            if o != c {
                s.set_absent(o)?;
            }
        }
    } else if open == 0 {
        return s.set_absent(master);
    } else if open == 1 && present(s, master) {
        s.set_present(last_open)?;
    }

    let mut hull: Option<Dom> = None;
    for &o in options {
        let d = *s.get(o);
        if d.pres == Presence::Absent {
            continue;
        }
        hull = Some(match hull {
            None => d,
            Some(h) => Dom {
                smin: h.smin.min(d.smin),
                smax: h.smax.max(d.smax),
                emin: h.emin.min(d.emin),
                emax: h.emax.max(d.emax),
                lmin: h.lmin.min(d.lmin),
                lmax: h.lmax.max(d.lmax),
                ..h
            },
        });
    }
    let Some(h) = hull else {
        return s.set_absent(master);
    };
    s.set_smin(master, h.smin)?;
    s.set_smax(master, h.smax)?;
    s.set_emin(master, h.emin)?;
    s.set_emax(master, h.emax)?;
    s.set_lmin(master, h.lmin)?;
    s.set_lmax(master, h.lmax)?;
    if absent(s, master) {
        return Ok(());
    }
    let m = *s.get(master);
    for &o in options {
        if absent(s, o) {
            continue;
        }
        s.set_smin(o, m.smin)?;
        s.set_smax(o, m.smax)?;
        s.set_emin(o, m.emin)?;
        s.set_emax(o, m.emax)?;
    }
    Ok(())
}

fn span(s: &mut Store, master: usize, covered: &[usize]) -> PResult {
    if absent(s, master) {
        for &c in covered {
            s.set_absent(c)?;
        }
        return Ok(());
    }
    let mut any_present = false;
    let mut open = 0usize;
    let mut last_open = 0usize;
    for &c in covered {
        match s.get(c).pres {
            Presence::Present => any_present = true,
            Presence::Unknown => {
                open += 1;
                last_open = c;
            }
            Presence::Absent => {}
        }
    }
    if any_present {
        s.set_present(master)?;
    } else if open == 0 {
        return s.set_absent(master);
    } else if open == 1 && present(s, master) {
        s.set_present(last_open)?;
        any_present = true;
    }

    let mut smin = Time::MAX;
    let mut emax = Time::MIN;
    let mut smax_present = Time::MAX;
    let mut emin_present = Time::MIN;
    for &c in covered {
        let d = *s.get(c);
        if d.pres == Presence::Absent {
            continue;
        }
        smin = smin.min(d.smin);
        emax = emax.max(d.emax);
        if d.pres == Presence::Present {
            smax_present = smax_present.min(d.smax);
            emin_present = emin_present.max(d.emin);
        }
    }
    s.set_smin(master, smin)?;
    s.set_emax(master, emax)?;
    if any_present {
        s.set_smax(master, smax_present)?;
        s.set_emin(master, emin_present)?;
    }
    if absent(s, master) {
        return Ok(());
    }
    let m = *s.get(master);
    for &c in covered {
        if absent(s, c) {
            continue;
        }
        s.set_smin(c, m.smin)?;
        s.set_emax(c, m.emax)?;
    }
    // With a present master, the only covered interval able to start by the
    // master's latest start (or end by its earliest end) must be it.
    if m.pres == Presence::Present {
        let early: Vec<usize> = covered
            .iter()
            .copied()
            .filter(|&c| !absent(s, c) && s.get(c).smin <= m.smax)
            .collect();
        match early.as_slice() {
            [] => return Err(Fail),
            [only] => {
                s.set_present(*only)?;
                s.set_smax(*only, m.smax)?;
            }
            _ => {}
        }
        let late: Vec<usize> = covered
            .iter()
            .copied()
            .filter(|&c| !absent(s, c) && s.get(c).emax >= m.emin)
            .collect();
        match late.as_slice() {
            [] => return Err(Fail),
            [only] => {
                s.set_present(*only)?;
                s.set_emin(*only, m.emin)?;
            }
            _ => {}
        }
    }
    Ok(())
}

fn end_before_start(s: &mut Store, a: usize, b: usize) -> PResult {
    if absent(s, a) || absent(s, b) {
        return Ok(());
    }
    if present(s, a) {
        let e = s.get(a).emin;
        s.set_smin(b, e)?;
    }
    if present(s, b) && !absent(s, a) {
        let st = s.get(b).smax;
        s.set_emax(a, st)?;
    }
    Ok(())
}

fn at_most_one(s: &mut Store, members: &[usize]) -> PResult {
    let mut chosen = None;
    for &m in members {
        if present(s, m) {
            if chosen.is_some() {
                return Err(Fail);
            }
            chosen = Some(m);
        }
    }
    if let Some(c) = chosen {
        for &m in members {
            if m != c {
                s.set_absent(m)?;
            }
        }
    }
    Ok(())
}

fn counts(s: &Store, xs: &[usize]) -> (usize, usize) {
    let mut lo = 0;
    let mut hi = 0;
    for &x in xs {
        match s.get(x).pres {
            Presence::Present => {
                lo += 1;
                hi += 1;
            }
            Presence::Unknown => hi += 1,
            Presence::Absent => {}
        }
    }
    (lo, hi)
}

fn balance(s: &mut Store, lhs: &[usize], rhs: &[usize]) -> PResult {
    let (llo, lhi) = counts(s, lhs);
    let (rlo, rhi) = counts(s, rhs);
    let lo = llo.max(rlo);
    let hi = lhi.min(rhi);
    if lo > hi {
        return Err(Fail);
    }
    for (xs, xlo, xhi) in [(lhs, llo, lhi), (rhs, rlo, rhi)] {
        if xhi == lo && xlo < xhi {
            for &x in xs {
                if s.get(x).pres == Presence::Unknown {
                    s.set_present(x)?;
                }
            }
        } else if xlo == hi && xlo < xhi {
            for &x in xs {
                if s.get(x).pres == Presence::Unknown {
                    s.set_absent(x)?;
                }
            }
        }
    }
    Ok(())
}

fn cond_prec(s: &mut Store, guard: usize, a: usize, b: usize) -> PResult {
    if absent(s, guard) || absent(s, a) || absent(s, b) {
        return Ok(());
    }
    let g = present(s, guard);
    if g && present(s, a) {
        let e = s.get(a).emin;
        s.set_smin(b, e)?;
    }
    if g && present(s, b) && !absent(s, a) {
        let st = s.get(b).smax;
        s.set_emax(a, st)?;
    }
    if !g && present(s, a) && present(s, b) && s.get(a).emin > s.get(b).smax {
        s.set_absent(guard)?;
    }
    Ok(())
}

fn no_overlap(s: &mut Store, members: &[usize], types: &[usize], matrix: Option<&TransitionMatrix>) -> PResult {
    let live: Vec<(usize, usize)> = members
        .iter()
        .zip(types)
        .filter(|(&m, _)| !absent(s, m))
        .map(|(&m, &t)| (m, t))
        .collect();
    let tt = |x: usize, y: usize| matrix.map_or(0, |m| m.get(x, y));
    for i in 0..live.len() {
        for j in (i + 1)..live.len() {
            let (a, ta) = live[i];
            let (b, tb) = live[j];
            if absent(s, a) || absent(s, b) {
                continue;
            }
            let da = *s.get(a);
            let db = *s.get(b);
            let t_ab = tt(ta, tb);
            let t_ba = tt(tb, ta);
            let can_ab = da.emin + t_ab <= db.smax;
            let can_ba = db.emin + t_ba <= da.smax;
            let pa = da.pres == Presence::Present;
            let pb = db.pres == Presence::Present;
            match (can_ab, can_ba) {
                (true, true) => {}
                (false, false) => {
                    if pa && pb {
                        return Err(Fail);
                    } else if pa {
                        s.set_absent(b)?;
                    } else if pb {
                        s.set_absent(a)?;
                    }
                }
                (true, false) => {
                    // a must precede b
                    if pa {
                        s.set_smin(b, da.emin + t_ab)?;
                    }
                    if pb {
                        s.set_emax(a, db.smax - t_ab)?;
                    }
                }
                (false, true) => {
                    if pb {
                        s.set_smin(a, db.emin + t_ba)?;
                    }
                    if pa {
                        s.set_emax(b, da.smax - t_ba)?;
                    }
                }
            }
        }
    }
    Ok(())
}
