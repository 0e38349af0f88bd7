use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::model::Time;

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IntervalId(pub usize);

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SequenceId(pub usize);

impl fmt::Display for IntervalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Decision variable for an activity that may or may not be executed.
///
/// Leaf activities have a fixed length (`length_min == length_max`).
/// Intervals that only aggregate others, such as the master of a span, may
/// have a length range that is decided by the covered intervals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalVar {
    pub name: String,
    pub optional: bool,
    pub length_min: Time,
    pub length_max: Time,
}

impl IntervalVar {
    pub fn new(name: impl Into<String>, length: Time) -> Self {
        IntervalVar {
            name: name.into(),
            optional: false,
            length_min: length,
            length_max: length,
        }
    }

    /// Length at least `min`, otherwise bounded only by the horizon.
    pub fn stretchable(name: impl Into<String>, min: Time) -> Self {
        IntervalVar {
            name: name.into(),
            optional: false,
            length_min: min,
            length_max: Time::MAX,
        }
    }

    pub fn optional(mut self) -> Self {
        self.optional = true;
        self
    }

    pub fn has_fixed_length(&self) -> bool {
        self.length_min == self.length_max
    }
}

/// Square matrix of transition times addressed by member type index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionMatrix {
    size: usize,
    data: Vec<Time>,
}

impl TransitionMatrix {
    pub fn from_rows(rows: &[Vec<Time>]) -> Self {
        let size = rows.len();
        let mut data = Vec::with_capacity(size * size);
        for row in rows {
            assert_eq!(row.len(), size, "transition matrix must be square");
            data.extend_from_slice(row);
        }
        TransitionMatrix { size, data }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> Time {
        self.data[from * self.size + to]
    }
}

/// Ordering over a set of intervals. Member types address the rows and
/// columns of a transition matrix attached through a no-overlap constraint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceVar {
    pub name: String,
    pub members: Vec<IntervalId>,
    pub types: Option<Vec<usize>>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum PresenceRelation {
    /// presence(lhs) = Σ presence(rhs)
    Equal,
    /// Σ presence(rhs) ≤ 1; lhs is not constrained.
    AtMostOne,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    Alternative {
        master: IntervalId,
        options: Vec<IntervalId>,
    },
    Span {
        master: IntervalId,
        covered: Vec<IntervalId>,
    },
    EndBeforeStart {
        before: IntervalId,
        after: IntervalId,
    },
    PresenceAtMostOne {
        members: Vec<IntervalId>,
    },
    /// Σ presence(lhs) = Σ presence(rhs).
    PresenceBalance {
        lhs: Vec<IntervalId>,
        rhs: Vec<IntervalId>,
    },
    PresenceImplies {
        from: IntervalId,
        to: IntervalId,
    },
    ConditionalPrecedence {
        guard: IntervalId,
        before: IntervalId,
        after: IntervalId,
    },
    NoOverlap {
        sequence: SequenceId,
        transitions: Option<Arc<TransitionMatrix>>,
    },
    Forbidden(IntervalId),
    FixedStart(IntervalId, Time),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("{0} references unknown interval {1}")]
    UnknownInterval(&'static str, IntervalId),
    #[error("unknown sequence {0:?}")]
    UnknownSequence(SequenceId),
    #[error("{0} needs at least one interval")]
    EmptyList(&'static str),
    #[error("sequence {0:?} needs member types to use a transition matrix")]
    MissingTypes(SequenceId),
    #[error("member type {ty} of sequence {sequence:?} exceeds the transition matrix size {size}")]
    TypeOutOfRange {
        sequence: SequenceId,
        ty: usize,
        size: usize,
    },
    #[error("presence sum over an empty list cannot equal a present interval {0}")]
    EmptyEqualSum(IntervalId),
    #[error("interval {0} has a negative or inverted length range")]
    BadLength(IntervalId),
}

/// A scheduling model: intervals, sequences, constraints and a makespan objective.
#[derive(Clone, Debug, Default)]
pub struct Model {
    pub(crate) intervals: Vec<IntervalVar>,
    pub(crate) sequences: Vec<SequenceVar>,
    pub(crate) constraints: Vec<Constraint>,
    pub(crate) objective: Vec<IntervalId>,
    pub(crate) horizon: Time,
}

impl Model {
    pub fn new(horizon: Time) -> Self {
        Model {
            horizon,
            ..Model::default()
        }
    }

    pub fn horizon(&self) -> Time {
        self.horizon
    }

    pub fn set_horizon(&mut self, horizon: Time) {
        self.horizon = horizon;
    }

    pub fn add_interval(&mut self, var: IntervalVar) -> IntervalId {
        self.intervals.push(var);
        IntervalId(self.intervals.len() - 1)
    }

    pub fn interval(&self, id: IntervalId) -> &IntervalVar {
        &self.intervals[id.0]
    }

    pub fn intervals(&self) -> &[IntervalVar] {
        &self.intervals
    }

    pub fn sequences(&self) -> &[SequenceVar] {
        &self.sequences
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[IntervalId] {
        &self.objective
    }

    pub fn add_sequence(
        &mut self,
        name: impl Into<String>,
        members: Vec<IntervalId>,
        types: Option<Vec<usize>>,
    ) -> Result<SequenceId, EngineError> {
        self.check_all("sequence", &members)?;
        if let Some(t) = &types {
            if t.len() != members.len() {
                return Err(EngineError::MissingTypes(SequenceId(self.sequences.len())));
            }
        }
        self.sequences.push(SequenceVar {
            name: name.into(),
            members,
            types,
        });
        Ok(SequenceId(self.sequences.len() - 1))
    }

    fn check(&self, what: &'static str, id: IntervalId) -> Result<(), EngineError> {
        if id.0 < self.intervals.len() {
            Ok(())
        } else {
            Err(EngineError::UnknownInterval(what, id))
        }
    }

    fn check_all(&self, what: &'static str, ids: &[IntervalId]) -> Result<(), EngineError> {
        ids.iter().try_for_each(|&i| self.check(what, i))
    }

    /// Master present ⇔ exactly one option present; the chosen option shares
    /// the master's start and end.
    pub fn add_alternative(
        &mut self,
        master: IntervalId,
        options: Vec<IntervalId>,
    ) -> Result<(), EngineError> {
        if options.is_empty() {
            return Err(EngineError::EmptyList("alternative"));
        }
        self.check("alternative", master)?;
        self.check_all("alternative", &options)?;
        self.constraints.push(Constraint::Alternative { master, options });
        Ok(())
    }

    /// Master present ⇔ some covered interval present; the master starts at
    /// the earliest present start and ends at the latest present end.
    pub fn add_span(&mut self, master: IntervalId, covered: Vec<IntervalId>) -> Result<(), EngineError> {
        if covered.is_empty() {
            return Err(EngineError::EmptyList("span"));
        }
        self.check("span", master)?;
        self.check_all("span", &covered)?;
        self.constraints.push(Constraint::Span { master, covered });
        Ok(())
    }

    /// When both are present, `b` starts no earlier than `a` ends.
    pub fn add_end_before_start(&mut self, a: IntervalId, b: IntervalId) -> Result<(), EngineError> {
        self.check("endBeforeStart", a)?;
        self.check("endBeforeStart", b)?;
        self.constraints.push(Constraint::EndBeforeStart { before: a, after: b });
        Ok(())
    }

    pub fn add_presence_sum(
        &mut self,
        lhs: IntervalId,
        rhs: Vec<IntervalId>,
        relation: PresenceRelation,
    ) -> Result<(), EngineError> {
        self.check("presence sum", lhs)?;
        self.check_all("presence sum", &rhs)?;
        match relation {
            PresenceRelation::Equal => {
                if rhs.is_empty() && !self.intervals[lhs.0].optional {
                    return Err(EngineError::EmptyEqualSum(lhs));
                }
                self.constraints.push(Constraint::PresenceBalance {
                    lhs: vec![lhs],
                    rhs,
                });
            }
            PresenceRelation::AtMostOne => {
                if rhs.len() > 1 {
                    self.constraints
                        .push(Constraint::PresenceAtMostOne { members: rhs });
                }
            }
        }
        Ok(())
    }

    /// Σ presence(lhs) = Σ presence(rhs).
    pub fn add_presence_balance(
        &mut self,
        lhs: Vec<IntervalId>,
        rhs: Vec<IntervalId>,
    ) -> Result<(), EngineError> {
        self.check_all("presence balance", &lhs)?;
        self.check_all("presence balance", &rhs)?;
        self.constraints.push(Constraint::PresenceBalance { lhs, rhs });
        Ok(())
    }

    pub fn add_presence_implies(&mut self, from: IntervalId, to: IntervalId) -> Result<(), EngineError> {
        self.check("presence implication", from)?;
        self.check("presence implication", to)?;
        self.constraints.push(Constraint::PresenceImplies { from, to });
        Ok(())
    }

    /// presence(guard) ⇒ start(b) ≥ end(a), for present `a` and `b`.
    pub fn add_conditional_precedence(
        &mut self,
        guard: IntervalId,
        a: IntervalId,
        b: IntervalId,
    ) -> Result<(), EngineError> {
        self.check("conditional precedence", guard)?;
        self.check("conditional precedence", a)?;
        self.check("conditional precedence", b)?;
        self.constraints.push(Constraint::ConditionalPrecedence {
            guard,
            before: a,
            after: b,
        });
        Ok(())
    }

    /// Present members of `seq` are totally ordered. With a matrix, every
    /// ordered pair (not only neighbours) is separated by the transition
    /// time between their types.
    pub fn add_no_overlap(
        &mut self,
        seq: SequenceId,
        matrix: Option<Arc<TransitionMatrix>>,
    ) -> Result<(), EngineError> {
        let sequence = self
            .sequences
            .get(seq.0)
            .ok_or(EngineError::UnknownSequence(seq))?;
        if let Some(m) = &matrix {
            let types = sequence.types.as_ref().ok_or(EngineError::MissingTypes(seq))?;
            if let Some(&ty) = types.iter().find(|&&t| t >= m.size()) {
                return Err(EngineError::TypeOutOfRange {
                    sequence: seq,
                    ty,
                    size: m.size(),
                });
            }
        }
        self.constraints.push(Constraint::NoOverlap {
            sequence: seq,
            transitions: matrix,
        });
        Ok(())
    }

    /// The interval can never be present.
    pub fn add_forbidden(&mut self, id: IntervalId) -> Result<(), EngineError> {
        self.check("forbidden", id)?;
        self.constraints.push(Constraint::Forbidden(id));
        Ok(())
    }

    /// Pins the start of `id` (when present) to `at`.
    pub fn add_fixed_start(&mut self, id: IntervalId, at: Time) -> Result<(), EngineError> {
        self.check("fixed start", id)?;
        self.constraints.push(Constraint::FixedStart(id, at));
        Ok(())
    }

    /// Minimise the latest end over the given intervals.
    pub fn minimize_max_end(&mut self, intervals: Vec<IntervalId>) -> Result<(), EngineError> {
        self.check_all("objective", &intervals)?;
        self.objective = intervals;
        Ok(())
    }

    /// Re-checks every reference; a model built through the `add_*` methods
    /// always passes.
    pub fn validate(&self) -> Result<(), EngineError> {
        for (i, v) in self.intervals.iter().enumerate() {
            if v.length_min < 0 || v.length_min > v.length_max {
                return Err(EngineError::BadLength(IntervalId(i)));
            }
        }
        for s in &self.sequences {
            self.check_all("sequence", &s.members)?;
        }
        for c in &self.constraints {
            match c {
                Constraint::Alternative { master, options } => {
                    self.check("alternative", *master)?;
                    self.check_all("alternative", options)?;
                }
                Constraint::Span { master, covered } => {
                    self.check("span", *master)?;
                    self.check_all("span", covered)?;
                }
                Constraint::EndBeforeStart { before, after } => {
                    self.check("endBeforeStart", *before)?;
                    self.check("endBeforeStart", *after)?;
                }
                Constraint::PresenceAtMostOne { members } => self.check_all("presence sum", members)?,
                Constraint::PresenceBalance { lhs, rhs } => {
                    self.check_all("presence balance", lhs)?;
                    self.check_all("presence balance", rhs)?;
                }
                Constraint::PresenceImplies { from, to } => {
                    self.check("presence implication", *from)?;
                    self.check("presence implication", *to)?;
                }
                Constraint::ConditionalPrecedence { guard, before, after } => {
                    self.check("conditional precedence", *guard)?;
                    self.check("conditional precedence", *before)?;
                    self.check("conditional precedence", *after)?;
                }
                Constraint::NoOverlap { sequence, .. } => {
                    if sequence.0 >= self.sequences.len() {
                        return Err(EngineError::UnknownSequence(*sequence));
                    }
                }
                Constraint::Forbidden(i) => self.check("forbidden", *i)?,
                Constraint::FixedStart(i, _) => self.check("fixed start", *i)?,
            }
        }
        self.check_all("objective", &self.objective)
    }

    /// Pushes a constraint without the `add_*` checks. Only for tests that
    /// need malformed models.
    #[doc(hidden)]
    pub fn push_unchecked(&mut self, c: Constraint) {
        self.constraints.push(c);
    }
}

/// A full value for every interval: `None` when absent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub intervals: Vec<Option<(Time, Time)>>,
}

impl Assignment {
    pub fn is_present(&self, id: IntervalId) -> bool {
        self.intervals[id.0].is_some()
    }

    pub fn get(&self, id: IntervalId) -> Option<(Time, Time)> {
        self.intervals[id.0]
    }

    pub fn start(&self, id: IntervalId) -> Option<Time> {
        self.intervals[id.0].map(|(s, _)| s)
    }

    pub fn end(&self, id: IntervalId) -> Option<Time> {
        self.intervals[id.0].map(|(_, e)| e)
    }
}
